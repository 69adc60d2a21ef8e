//! Scalar maximization on a logarithmic axis.
//!
//! The key rate as a function of the modulation variance is smooth and
//! unimodal over the ranges this crate sweeps, with curvature that is far
//! better behaved in `ln v` than in `v`. The maximizer therefore works on
//! the log axis: a coarse grid brackets the peak, golden-section search
//! tightens the bracket, and the best evaluation ever seen wins. No
//! derivatives are required and the evaluation sequence is deterministic.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Inverse golden ratio, the bracket shrink factor per iteration.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f` over `[lo, hi]` assuming unimodality in `ln x`.
///
/// Returns `(argmax, max)`. `f` may return minus infinity to flag dead
/// regions; the result is the best evaluated point, so a fully dead
/// objective returns minus infinity as the maximum. `rel_tol` bounds the
/// final bracket width on the log axis, which for small values coincides
/// with the relative uncertainty of `argmax`.
pub fn maximize_log_unimodal<T, F>(
    f: F,
    lo: T,
    hi: T,
    rel_tol: T,
    grid_points: usize,
) -> Result<(T, T)>
where
    T: Real,
    F: Fn(T) -> T,
{
    if !(lo > T::zero() && hi > lo) || !hi.is_finite() {
        return Err(Error::invalid(
            "lo, hi",
            format!("({lo}, {hi})"),
            "need 0 < lo < hi < inf",
        ));
    }
    if !(rel_tol > T::zero()) || !rel_tol.is_finite() {
        return Err(Error::invalid("rel_tol", rel_tol, "must be finite and > 0"));
    }
    if grid_points < 3 {
        return Err(Error::invalid("grid_points", grid_points, "need at least 3"));
    }

    let ln_lo = lo.ln();
    let ln_hi = hi.ln();
    let span = ln_hi - ln_lo;

    let mut best_x = ln_lo;
    let mut best_f = T::neg_infinity();
    let mut eval = |u: T| {
        let y = f(u.exp());
        if y > best_f {
            best_f = y;
            best_x = u;
        }
        y
    };

    // Coarse bracket: the grid winner and its immediate neighbors.
    let n = grid_points - 1;
    let mut grid_best_idx = 0usize;
    let mut grid_best = T::neg_infinity();
    for i in 0..=n {
        let u = ln_lo + span * real::<T>(i as f64) / real::<T>(n as f64);
        let y = eval(u);
        if y > grid_best {
            grid_best = y;
            grid_best_idx = i;
        }
    }
    let step = span / real::<T>(n as f64);
    let mut a = ln_lo + step * real::<T>(grid_best_idx.saturating_sub(1) as f64);
    let mut b = ln_lo + step * real::<T>((grid_best_idx + 1).min(n) as f64);

    // Golden-section refinement inside [a, b].
    let invphi = real::<T>(INV_PHI);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    let mut guard = 0u32;
    while b - a > rel_tol && guard < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = eval(d);
        }
        guard += 1;
    }
    eval((a + b) * real::<T>(0.5));

    Ok((best_x.exp(), best_f))
}
