//! Tilted discrete measures and the monotone 1-D moment equation.
//!
//! Both the quadrature-based families and the graph models reduce a coordinate
//! update to the same problem: given weights `exp(b_g + e_g)` and a feature `f`,
//! find `δ` such that the mean of `f` under `exp(b_g + e_g + δ f_g)` equals a
//! target. The mean is strictly increasing in `δ` (its derivative is the
//! variance of `f`), so a safeguarded Newton iteration with a sign bracket
//! always converges when the target is attainable.

use alloc::vec::Vec;

use crate::math::{exp, ln};

/// Normalized measure `p_g ∝ exp(log_base_g + energy_g)`.
#[derive(Debug, Clone)]
pub(crate) struct Tilted {
    pub log_base: Vec<f64>,
    pub energy: Vec<f64>,
    pub log_z: f64,
    pub prob: Vec<f64>,
}

impl Tilted {
    pub fn new(log_base: Vec<f64>, energy: Vec<f64>) -> Self {
        debug_assert_eq!(log_base.len(), energy.len());
        let n = log_base.len();
        let mut t = Tilted { log_base, energy, log_z: 0.0, prob: alloc::vec![0.0; n] };
        t.refresh();
        t
    }

    pub fn refresh(&mut self) {
        let mut max = f64::NEG_INFINITY;
        for (b, e) in self.log_base.iter().zip(&self.energy) {
            max = max.max(b + e);
        }
        let mut s = 0.0;
        for ((p, b), e) in self.prob.iter_mut().zip(&self.log_base).zip(&self.energy) {
            *p = exp(b + e - max);
            s += *p;
        }
        let inv = 1.0 / s;
        for p in &mut self.prob {
            *p *= inv;
        }
        self.log_z = max + ln(s);
    }

    /// `Σ p_g f_g`.
    #[inline]
    pub fn expect(&self, f: &[f64]) -> f64 {
        self.prob.iter().zip(f).map(|(p, v)| p * v).sum()
    }

    /// `energy += delta * f`, then renormalize.
    pub fn shift(&mut self, delta: f64, f: &[f64]) {
        if delta == 0.0 {
            return;
        }
        for (e, v) in self.energy.iter_mut().zip(f) {
            *e += delta * v;
        }
        self.refresh();
    }

    /// Mean and variance of `f` under the measure tilted by `delta * f`
    /// (without modifying `self`). Variance is computed around `center`.
    pub fn tilted_moments(&self, delta: f64, f: &[f64], center: f64) -> (f64, f64) {
        let mut max = f64::NEG_INFINITY;
        for ((b, e), v) in self.log_base.iter().zip(&self.energy).zip(f) {
            max = max.max(b + e + delta * v);
        }
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for ((b, e), v) in self.log_base.iter().zip(&self.energy).zip(f) {
            let w = exp(b + e + delta * v - max);
            let c = v - center;
            s0 += w;
            s1 += w * c;
            s2 += w * c * c;
        }
        let m = s1 / s0;
        let var = (s2 / s0 - m * m).max(0.0);
        (center + m, var)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SolveError {
    /// Target outside the open range of `f` over the support.
    Unattainable,
    /// Root lies outside the permitted `delta` interval.
    NotBracketed,
    NonFinite,
}

/// Finds `delta` in `[lo_limit, hi_limit]` with `E_delta[f] = target`, to
/// `|E_delta[f] - target| <= ftol` or until the bracket collapses to machine
/// precision.
pub(crate) fn solve_moment(
    t: &Tilted,
    f: &[f64],
    target: f64,
    ftol: f64,
    lo_limit: f64,
    hi_limit: f64,
) -> Result<f64, SolveError> {
    if !target.is_finite() {
        return Err(SolveError::NonFinite);
    }
    let (fmin, fmax) = range_with_mass(t, f);
    if target <= fmin || target >= fmax {
        // Exactly at an extreme is only reachable in the limit.
        if (target - fmin).abs() <= ftol && fmin == fmax {
            return Ok(0.0);
        }
        return Err(SolveError::Unattainable);
    }

    let mut lo = lo_limit;
    let mut hi = hi_limit;
    let mut lo_known = false;
    let mut hi_known = false;
    let mut x = 0.0f64.clamp(lo_limit, hi_limit);
    for _ in 0..400 {
        let (mean, var) = t.tilted_moments(x, f, target);
        let fx = mean - target;
        if !fx.is_finite() {
            return Err(SolveError::NonFinite);
        }
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
            lo_known = true;
        } else {
            hi = x;
            hi_known = true;
        }
        if lo_known && hi_known && hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            return Ok(x);
        }
        let cap = 4.0f64.max(2.0 * x.abs());
        let mut next = if var > 0.0 { x - fx / var } else { f64::NAN };
        if next.is_finite() && (next - x).abs() > cap {
            next = x + cap.copysign(next - x);
        }
        let inside = next.is_finite() && next > lo && next < hi;
        x = if inside {
            next
        } else if lo_known && hi_known {
            0.5 * (lo + hi)
        } else if !hi_known {
            // Root lies above x.
            if x >= hi_limit {
                return Err(SolveError::NotBracketed);
            }
            (x + cap).min(hi_limit)
        } else {
            if x <= lo_limit {
                return Err(SolveError::NotBracketed);
            }
            (x - cap).max(lo_limit)
        };
    }
    Ok(x)
}

/// Range of `f` over nodes that carry probability mass.
fn range_with_mass(t: &Tilted, f: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (b, v) in t.log_base.iter().zip(f) {
        if *b > f64::NEG_INFINITY {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> Tilted {
        Tilted::new(alloc::vec![0.0; n], alloc::vec![0.0; n])
    }

    #[test]
    fn solves_two_point_mean() {
        // f in {0, 1}: mean = sigmoid(delta).
        let t = uniform(2);
        let f = [0.0, 1.0];
        let d = solve_moment(&t, &f, 0.8, 1e-13, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((d - ln(4.0)).abs() < 1e-10);
    }

    #[test]
    fn far_roots_and_limits() {
        let t = uniform(2);
        let f = [0.0, 1.0];
        let target = 1.0 / (1.0 + exp(-15.0));
        let d = solve_moment(&t, &f, target, 1e-15, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((d - 15.0).abs() < 1e-6, "{d}");
        assert_eq!(solve_moment(&t, &f, target, 1e-15, -10.0, 10.0), Err(SolveError::NotBracketed));
        assert_eq!(solve_moment(&t, &f, 1.0, 1e-12, -10.0, 10.0), Err(SolveError::Unattainable));
    }

    #[test]
    fn shift_matches_tilted_moments() {
        let mut t = Tilted::new(alloc::vec![0.1, -0.3, 0.0], alloc::vec![0.5, 0.0, -1.0]);
        let f = [1.0, -2.0, 0.5];
        let (m, _) = t.tilted_moments(0.7, &f, 0.0);
        t.shift(0.7, &f);
        assert!((t.expect(&f) - m).abs() < 1e-14);
        let total: f64 = t.prob.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}
