//! Gauss–Legendre rules and nested quadrature over the ordered region
//! lo <= y_1 <= y_2 <= ... <= y_N <= hi.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order > 0, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// ∫_a^b f split into `panels` equal sub-intervals.
    pub fn integrate(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * width;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(mid + half * x);
            }
            total += s * half;
        }
        total
    }
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive chamber integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureValue {
    pub value: f64,
    /// Relative change between the last two refinement levels.
    pub rel_change: f64,
    pub panels: usize,
}

/// Tensor-product Gauss–Legendre over the truncated chamber, refined by
/// doubling the panel count until successive estimates agree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChamberQuadrature {
    pub order: usize,
    /// Panels spanning the full range [lo, hi] at the coarsest level; inner
    /// (shorter) ranges receive a proportional share.
    pub panels: usize,
    pub rel_tol: f64,
    /// Values below this are compared absolutely.
    pub abs_floor: f64,
    pub max_refinements: usize,
}

impl Default for ChamberQuadrature {
    fn default() -> Self {
        Self { order: 10, panels: 6, rel_tol: 1e-6, abs_floor: 1e-14, max_refinements: 4 }
    }
}

/// Which coordinates are integrated.
#[derive(Debug, Clone, Copy)]
enum Fixed {
    None,
    At { index: usize, value: f64 },
}

impl ChamberQuadrature {
    /// ∫ f(y) dy over lo <= y_1 <= ... <= y_n <= hi.
    pub fn integrate(&self, n: usize, lo: f64, hi: f64, f: impl Fn(&[f64]) -> f64) -> Result<QuadratureValue> {
        self.refine(|panels| nested(n, lo, hi, Fixed::None, self.order, panels, &f))
    }

    /// Marginal density of coordinate `index` at `value`: integrates the
    /// remaining n-1 coordinates over the ordered region.
    pub fn integrate_marginal(
        &self,
        n: usize,
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<QuadratureValue> {
        assert!(index < n);
        self.refine(|panels| nested(n, lo, hi, Fixed::At { index, value }, self.order, panels, &f))
    }

    /// Single pass at the coarsest level, no refinement.
    pub fn marginal_fixed(&self, n: usize, index: usize, value: f64, lo: f64, hi: f64, f: impl Fn(&[f64]) -> f64) -> f64 {
        nested(n, lo, hi, Fixed::At { index, value }, self.order, self.panels, &f)
    }

    fn refine(&self, mut eval: impl FnMut(usize) -> f64) -> Result<QuadratureValue> {
        let mut panels = self.panels;
        let mut prev = eval(panels);
        let mut rel_change = f64::INFINITY;
        for _ in 0..self.max_refinements {
            panels *= 2;
            let cur = eval(panels);
            rel_change = (cur - prev).abs() / cur.abs().max(self.abs_floor);
            if rel_change <= self.rel_tol || (cur - prev).abs() <= self.abs_floor {
                return Ok(QuadratureValue { value: cur, rel_change, panels });
            }
            prev = cur;
        }
        Err(Error::Nonconvergent { rel_change })
    }
}

fn nested(n: usize, lo: f64, hi: f64, fixed: Fixed, order: usize, panels: usize, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let rule = GaussLegendre::new(order);
    let mut y = vec![0.0; n];
    if n == 0 {
        return f(&y);
    }
    let span = hi - lo;
    recurse(0, &mut y, lo, hi, span, fixed, &rule, panels, f)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    k: usize,
    y: &mut Vec<f64>,
    lo: f64,
    hi: f64,
    span: f64,
    fixed: Fixed,
    rule: &GaussLegendre,
    panels: usize,
    f: &dyn Fn(&[f64]) -> f64,
) -> f64 {
    if k == y.len() {
        return f(y);
    }
    let lower = if k == 0 { lo } else { y[k - 1] };
    match fixed {
        Fixed::At { index, value } if index == k => {
            if value < lower {
                return 0.0;
            }
            y[k] = value;
            return recurse(k + 1, y, lo, hi, span, fixed, rule, panels, f);
        }
        _ => {}
    }
    let upper = match fixed {
        Fixed::At { index, value } if index > k => value,
        _ => hi,
    };
    if upper <= lower {
        return 0.0;
    }
    let p = ((panels as f64 * (upper - lower) / span).ceil() as usize).max(1);
    let width = (upper - lower) / p as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for q in 0..p {
        let mid = lower + (q as f64 + 0.5) * width;
        let mut s = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            y[k] = mid + half * x;
            s += w * recurse(k + 1, y, lo, hi, span, fixed, rule, panels, f);
        }
        total += s * half;
    }
    total
}
