use std::sync::OnceLock;

/// Opt-in expensive runtime audits (lemma-level assertions during build
/// and search). Enabled by setting `COVERTREE_DEBUG_ASSERTS=1`; read once.
pub fn debug_asserts_enabled() -> bool {
    static FLAG: OnceLock<bool> = OnceLock::new();
    *FLAG.get_or_init(|| {
        std::env::var("COVERTREE_DEBUG_ASSERTS")
            .map(|v| v == "1" || v.eq_ignore_ascii_case("true"))
            .unwrap_or(false)
    })
}
