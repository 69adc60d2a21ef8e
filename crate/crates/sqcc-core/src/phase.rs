//! Carrier phase recovery from reference pulses.
//!
//! The receiver measures both quadratures of a strong reference pulse and
//! takes the negative of its polar angle as the correction to apply to the
//! accompanying signal pulse. With `n` reference photons detected at
//! efficiency `eta`, each quadrature carries one unit of shot noise plus one
//! unit of measurement penalty, so the estimate has variance
//! `2 n0 / (eta n)` in the bright limit. [`estimate_phase_error_variance`]
//! measures that variance by Monte Carlo against a second, brighter
//! calibration pulse.

use rand::Rng;

use crate::error::{Error, Result};
use crate::params::QuadraturePair;
use crate::rng::{gaussian_sample, StreamSeed};
use crate::scalar::{real, Real};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(phi: T) -> T {
    let pi = real::<T>(std::f64::consts::PI);
    let two_pi = pi + pi;
    let mut r = (phi + pi) % two_pi;
    if r < T::zero() {
        r = r + two_pi;
    }
    let out = r - pi;
    if out == -pi {
        pi
    } else {
        out
    }
}

/// Phase correction extracted from a measured reference pulse: the angle
/// that rotates the measured vector back onto the positive x axis.
pub fn estimate_phase<T: Real>(reference: QuadraturePair<T>) -> Result<T> {
    if reference.x == T::zero() && reference.p == T::zero() {
        return Err(Error::Domain {
            op: "estimate_phase",
            detail: "zero-length reference carries no phase".into(),
        });
    }
    Ok(wrap_angle(-reference.p.atan2(reference.x)))
}

/// Rotates a quadrature pair by `angle`.
pub fn rotate<T: Real>(q: QuadraturePair<T>, angle: T) -> QuadraturePair<T> {
    let (sin, cos) = angle.sin_cos();
    QuadraturePair {
        x: q.x * cos - q.p * sin,
        p: q.x * sin + q.p * cos,
    }
}

/// True carrier phase of each simulated shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruePhase<T> {
    /// Drawn uniformly from `(-pi, pi]` per shot.
    Uniform,
    /// Held at the given angle.
    Fixed(T),
}

/// One simulated shot of the tracker: the working reference pulse, a
/// brighter calibration pulse seeing the same carrier, and the phase
/// estimates from both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseFrame<T> {
    pub reference: QuadraturePair<T>,
    pub calibration: QuadraturePair<T>,
    /// Estimate from the working reference.
    pub phi_est: T,
    /// Estimate from the calibration pulse, the per-shot ground truth.
    pub phi_true: T,
}

/// Simulates the measurement of one reference pulse (photon number `n_ref`)
/// and one calibration pulse (`n_cal`) riding on a carrier at `phi_actual`.
/// Quadratures carry shot noise plus the conjugate measurement penalty,
/// `2 n0` per quadrature.
pub fn sample_frame<T: Real, R: Rng + ?Sized>(
    n_ref: T,
    n_cal: T,
    eta: T,
    n0: T,
    phi_actual: T,
    rng: &mut R,
) -> Result<PhaseFrame<T>> {
    for (name, n) in [("n_ref", n_ref), ("n_cal", n_cal)] {
        if !n.is_finite() || n <= T::zero() {
            return Err(Error::Domain {
                op: "sample_frame",
                detail: format!("{name} = {n} must be finite and > 0"),
            });
        }
    }
    if !eta.is_finite() || eta <= T::zero() || eta > T::one() {
        return Err(Error::Domain {
            op: "sample_frame",
            detail: format!("eta {eta} outside (0, 1]"),
        });
    }
    if !phi_actual.is_finite() {
        return Err(Error::Domain {
            op: "sample_frame",
            detail: format!("phi_actual {phi_actual} must be finite"),
        });
    }
    let noise_var = real::<T>(2.0) * n0;
    let (sin, cos) = phi_actual.sin_cos();

    let pulse = |photons: T, rng: &mut R| -> Result<QuadraturePair<T>> {
        let amp = (eta * photons).sqrt();
        Ok(QuadraturePair {
            x: gaussian_sample(amp * cos, noise_var, rng)?,
            p: gaussian_sample(amp * sin, noise_var, rng)?,
        })
    };
    let reference = pulse(n_ref, rng)?;
    let calibration = pulse(n_cal, rng)?;

    Ok(PhaseFrame {
        reference,
        calibration,
        phi_est: estimate_phase(reference)?,
        phi_true: estimate_phase(calibration)?,
    })
}

/// Monte Carlo estimate of the tracker error variance with its own
/// statistical uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseErrorStats<T> {
    /// Sample variance of the wrapped estimation error, rad^2.
    pub variance: T,
    /// Jackknife standard error of `variance`.
    pub std_error: T,
    pub trials: u64,
}

/// Measures the variance of `phi_est - phi_true` over `trials` simulated
/// shots. The calibration pulse should be much brighter than the working
/// reference so its own error is negligible against the quantity under
/// test. Fewer than 1000 trials cannot support the jackknife and are
/// rejected.
pub fn estimate_phase_error_variance<T: Real>(
    n_ref: T,
    n_cal: T,
    eta: T,
    n0: T,
    true_phase: TruePhase<T>,
    trials: u64,
    seed: u64,
) -> Result<PhaseErrorStats<T>> {
    if trials < 1000 {
        return Err(Error::InsufficientStatistics(format!(
            "{trials} trials cannot resolve a variance; need at least 1000"
        )));
    }
    if let TruePhase::Fixed(phi) = true_phase {
        if !phi.is_finite() {
            return Err(Error::Domain {
                op: "estimate_phase_error_variance",
                detail: format!("fixed phase {phi} must be finite"),
            });
        }
    }

    let pi = real::<T>(std::f64::consts::PI);
    let two_pi = pi + pi;
    let seeds = StreamSeed::new(seed);
    let mut errors: Vec<T> = Vec::with_capacity(trials as usize);
    const BATCH: u64 = 4096;
    let batches = trials.div_ceil(BATCH);
    for batch in 0..batches {
        let mut rng = seeds.stream(batch);
        let count = BATCH.min(trials - batch * BATCH);
        for _ in 0..count {
            let phi = match true_phase {
                TruePhase::Uniform => pi - two_pi * T::unit_uniform(&mut rng),
                TruePhase::Fixed(phi) => phi,
            };
            let frame = sample_frame(n_ref, n_cal, eta, n0, phi, &mut rng)?;
            errors.push(wrap_angle(frame.phi_est - frame.phi_true));
        }
    }

    let n = real::<T>(trials as f64);
    let mut s1 = T::zero();
    let mut s2 = T::zero();
    for e in &errors {
        s1 = s1 + *e;
        s2 = s2 + *e * *e;
    }
    let variance = (s2 - s1 * s1 / n) / (n - T::one());

    // Leave-one-out variances from the same two sums, then the jackknife
    // variance of the estimator.
    let nm1 = n - T::one();
    let nm2 = n - real::<T>(2.0);
    let mut mean_loo = T::zero();
    for e in &errors {
        let v = (s2 - *e * *e - (s1 - *e) * (s1 - *e) / nm1) / nm2;
        mean_loo = mean_loo + v;
    }
    mean_loo = mean_loo / n;
    let mut ss = T::zero();
    for e in &errors {
        let v = (s2 - *e * *e - (s1 - *e) * (s1 - *e) / nm1) / nm2;
        let d = v - mean_loo;
        ss = ss + d * d;
    }
    let std_error = (nm1 / n * ss).sqrt();

    Ok(PhaseErrorStats { variance, std_error, trials })
}
