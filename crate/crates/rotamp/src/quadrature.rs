//! Quadrature rules: Gauss–Hermite for Gaussian expectations and adaptive
//! Gauss–Legendre for finite intervals.

use gauss_quad::{GaussHermite, GaussLegendre};
use std::num::NonZeroUsize;
use std::sync::OnceLock;

/// Order of the Gauss–Hermite rule used for scalar and bivariate Gaussian integrals.
pub const HERMITE_ORDER: usize = 61;

const LEGENDRE_ORDER: usize = 15;
const MAX_DEPTH: usize = 48;

/// Nodes and weights for `E[f(Z)]`, `Z ~ N(0,1)`.
#[derive(Debug, Clone)]
pub struct NormalRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NormalRule {
    pub fn new(order: usize) -> Self {
        let gh = GaussHermite::new(NonZeroUsize::new(order.max(1)).unwrap());
        let s = std::f64::consts::PI.sqrt();
        let (nodes, weights) = gh
            .iter()
            .map(|(x, w)| (x * std::f64::consts::SQRT_2, w / s))
            .unzip();
        NormalRule { nodes, weights }
    }

    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `E[f(Z1, Z2)]` for independent standard normals on the tensor grid.
    pub fn expect2<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> f64 {
        let mut acc = 0.0;
        for (&x, &wx) in self.nodes.iter().zip(&self.weights) {
            let mut inner = 0.0;
            for (&y, &wy) in self.nodes.iter().zip(&self.weights) {
                inner += wy * f(x, y);
            }
            acc += wx * inner;
        }
        acc
    }
}

/// Shared order-61 rule.
pub fn normal_rule() -> &'static NormalRule {
    static RULE: OnceLock<NormalRule> = OnceLock::new();
    RULE.get_or_init(|| NormalRule::new(HERMITE_ORDER))
}

/// Half-width, panel width and points per panel of the composite rule.
const COMPOSITE_HALF_WIDTH: f64 = 9.0;
const COMPOSITE_PANEL: f64 = 0.5;
const COMPOSITE_POINTS: usize = 8;

impl NormalRule {
    /// Composite Gauss–Legendre rule against the standard normal density on `[-L, L]`.
    pub fn composite(half_width: f64, panel: f64, points: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(points.max(1)).unwrap());
        let panels = (2.0 * half_width / panel).round() as usize;
        let h = 2.0 * half_width / panels as f64;
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let mut nodes = Vec::with_capacity(panels * points);
        let mut weights = Vec::with_capacity(panels * points);
        for p in 0..panels {
            let a = -half_width + h * p as f64;
            for (x, w) in gl.iter() {
                let z = a + 0.5 * h * (x + 1.0);
                nodes.push(z);
                weights.push(0.5 * h * w * (-0.5 * z * z).exp() / norm);
            }
        }
        NormalRule { nodes, weights }
    }
}

/// Shared composite rule (288 nodes) for Gaussian integrals of posterior-mean denoisers, whose
/// poles near the real axis slow Gauss–Hermite convergence.
pub fn fine_normal_rule() -> &'static NormalRule {
    static RULE: OnceLock<NormalRule> = OnceLock::new();
    RULE.get_or_init(|| {
        NormalRule::composite(COMPOSITE_HALF_WIDTH, COMPOSITE_PANEL, COMPOSITE_POINTS)
    })
}

fn legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(NonZeroUsize::new(LEGENDRE_ORDER).unwrap())
            .into_iter()
            .collect()
    })
}

fn gl(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    legendre().iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

fn recurse(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = gl(f, a, m);
    let right = gl(f, m, b);
    let both = left + right;
    if depth >= MAX_DEPTH || (both - whole).abs() <= tol {
        return both;
    }
    recurse(f, a, m, left, 0.5 * tol, depth + 1) + recurse(f, m, b, right, 0.5 * tol, depth + 1)
}

/// Adaptive Gauss–Legendre integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gl(&mut f, a, b);
    recurse(&mut f, a, b, whole, tol, 0)
}
