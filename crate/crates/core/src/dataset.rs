use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identity of a point in a [`Dataset`]; ids are dense in `[0, len)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub u32);

impl PointId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite set of points in `R^dim`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
}

/// Result of a duplicate-removal pass: which original rows were kept and
/// which were dropped in favor of an earlier identical row.
#[derive(Clone, Debug, Default)]
pub struct DedupMap {
    /// `kept[new_id] == original_row`
    pub kept: Vec<u32>,
    /// `(dropped_row, surviving_row)` pairs
    pub dropped: Vec<(u32, u32)>,
}

impl Dataset {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Degenerate("empty dataset".into()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::Degenerate("points must have at least one coordinate".into()));
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Parse {
                    row: i,
                    msg: format!("expected {} coordinates, got {}", dim, row.len()),
                });
            }
            for &x in row {
                if !x.is_finite() {
                    return Err(Error::Parse {
                        row: i,
                        msg: "non-finite coordinate".into(),
                    });
                }
            }
            coords.extend_from_slice(row);
        }
        Ok(Dataset { dim, coords })
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::Parameter(format!(
                "flat coordinate buffer of length {} is not a positive multiple of dim {}",
                coords.len(),
                dim
            )));
        }
        if let Some(pos) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::Parse {
                row: pos / dim,
                msg: "non-finite coordinate".into(),
            });
        }
        Ok(Dataset { dim, coords })
    }

    /// 1-D dataset from a list of reals; convenient for the worked examples.
    pub fn line(values: &[f64]) -> Self {
        Dataset::from_flat(1, values.to_vec()).expect("non-empty finite 1-D data")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, id: PointId) -> &[f64] {
        let i = id.index() * self.dim;
        &self.coords[i..i + self.dim]
    }

    pub fn ids(&self) -> impl Iterator<Item = PointId> {
        (0..self.len() as u32).map(PointId)
    }

    pub fn check_id(&self, id: PointId) -> Result<()> {
        if id.index() < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidPointId(id.index()))
        }
    }

    /// Remove exact coordinate duplicates, keeping the first occurrence of
    /// each point and recording the row mapping.
    pub fn dedup(&self) -> (Dataset, DedupMap) {
        let mut map = DedupMap::default();
        let mut seen: Vec<u32> = Vec::new();
        let mut coords = Vec::new();
        'rows: for id in self.ids() {
            let p = self.point(id);
            for &prev in &seen {
                if self.point(PointId(prev)) == p {
                    map.dropped.push((id.0, prev));
                    continue 'rows;
                }
            }
            seen.push(id.0);
            map.kept.push(id.0);
            coords.extend_from_slice(p);
        }
        (
            Dataset {
                dim: self.dim,
                coords,
            },
            map,
        )
    }

    /// First pair of identical rows, if any.
    pub fn find_duplicate(&self) -> Option<(usize, usize)> {
        let (_, map) = self.dedup();
        map.dropped.first().map(|&(a, b)| (b as usize, a as usize))
    }

    /// Parse CSV with one point per row. A header row is auto-detected: if
    /// the first field of the first row does not parse as a float, the row
    /// is skipped. Blank lines are ignored.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> =
                fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(vals) => rows.push(vals),
                Err(e) => {
                    // a non-numeric first data row is treated as a header
                    if rows.is_empty() && lineno == 0 {
                        continue;
                    }
                    return Err(Error::Parse {
                        row: lineno,
                        msg: e.to_string(),
                    });
                }
            }
        }
        Dataset::from_rows(&rows)
    }

    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        Dataset::read_csv(BufReader::new(File::open(path)?))
    }
}
