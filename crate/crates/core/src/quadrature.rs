//! Gauss–Legendre rules and a safeguarded scalar root finder.

use alloc::format;
use alloc::vec::Vec;

use once_cell::race::OnceBox;

use crate::error::{Error, Result};
use crate::math::cos;

// Rules with 2^k nodes, k < 32, built on first use.
static RULES: [OnceBox<GaussLegendre>; 32] = [const { OnceBox::new() }; 32];

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by Newton iteration on `P_n`, seeded with the
    /// Tricomi approximation of the roots.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = cos(core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                // quadratic convergence: the next correction would be below rounding
                if dz.abs() <= 1e-14 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared rule for `n` nodes when `n` is a power of two, built once per
    /// process.
    pub fn cached(n: usize) -> Option<&'static GaussLegendre> {
        if !n.is_power_of_two() {
            return None;
        }
        let slot = RULES.get(n.trailing_zeros() as usize)?;
        Some(slot.get_or_init(|| alloc::boxed::Box::new(GaussLegendre::new(n))))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to `f` on `[lo, hi]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Like [`integrate`](Self::integrate) for a fallible integrand.
    pub fn try_integrate<F: FnMut(f64) -> Result<f64>>(&self, lo: f64, hi: f64, mut f: F) -> Result<f64> {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x)?;
        }
        Ok(acc * half)
    }
}

// P_n(z) and P_n'(z) by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Result of adaptive integration by node doubling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub nodes: usize,
    /// Relative change between the last two refinements.
    pub rel_change: f64,
}

/// Doubles the node count from `start_nodes` until two consecutive estimates
/// agree to `rel_tol` (absolute `abs_floor` near zero), up to `max_nodes`.
pub fn integrate_adaptive<F>(
    lo: f64,
    hi: f64,
    start_nodes: usize,
    max_nodes: usize,
    rel_tol: f64,
    abs_floor: f64,
    mut f: F,
) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut n = start_nodes;
    let rule = |n: usize| -> alloc::borrow::Cow<'static, GaussLegendre> {
        match GaussLegendre::cached(n) {
            Some(r) => alloc::borrow::Cow::Borrowed(r),
            None => alloc::borrow::Cow::Owned(GaussLegendre::new(n)),
        }
    };
    let mut prev = rule(n).try_integrate(lo, hi, &mut f)?;
    loop {
        let next_n = n * 2;
        if next_n > max_nodes {
            return Err(Error::Numeric(format!(
                "quadrature did not stabilise to {rel_tol:e} with {n} nodes"
            )));
        }
        let next = rule(next_n).try_integrate(lo, hi, &mut f)?;
        let diff = (next - prev).abs();
        let scale = next.abs().max(abs_floor);
        if diff <= rel_tol * scale {
            return Ok(Integral {
                value: next,
                nodes: next_n,
                rel_change: if next != 0.0 { diff / next.abs() } else { diff },
            });
        }
        prev = next;
        n = next_n;
    }
}

/// Finds a root of `f` in `[lo, hi]` where `f(lo)` and `f(hi)` differ in
/// sign. Newton steps are taken when they stay inside the bracket, bisection
/// otherwise.
pub fn solve_bracketed<F>(mut lo: f64, mut hi: f64, tol: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (mut flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numeric(format!(
            "root not bracketed on [{lo}, {hi}]"
        )));
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= tol * (1.0 + x.abs()) || (hi - lo) <= tol * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Numeric(format!("root solve did not converge on [{lo}, {hi}]")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::exp;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(8);
        // exact up to degree 15
        let got = rule.integrate(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let want = (2f64.powi(16) - 1.0) / 16.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((got - want).abs() < 1e-9 * want.abs());
        let w: f64 = GaussLegendre::new(257).integrate(0.0, 1.0, |_| 1.0);
        assert!((w - 1.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_gaussian_mass() {
        let r = integrate_adaptive(-8.0, 8.0, 64, 4096, 1e-12, 1e-300, |x| {
            Ok(exp(-0.5 * x * x) * crate::math::FRAC_1_SQRT_2PI)
        })
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bracketed_root() {
        let r = solve_bracketed(0.0, 3.0, 1e-14, |x| (x * x - 2.0, 2.0 * x)).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(solve_bracketed(2.0, 3.0, 1e-14, |x| (x * x - 2.0, 2.0 * x)).is_err());
    }
}
