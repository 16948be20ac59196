use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

pub(crate) const NODES: usize = 64;

/// 64-point Gauss-Legendre nodes and weights on [-1, 1].
pub(crate) fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NonZeroUsize::new(NODES).expect("nonzero");
        GaussLegendre::new(n).as_node_weight_pairs().to_vec()
    })
}

/// Maps the rule onto `[a, b]`, yielding `(x, w)` pairs.
pub(crate) fn panel(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule().iter().map(move |&(x, w)| (mid + half * x, half * w))
}
