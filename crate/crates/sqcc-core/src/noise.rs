//! Noise budget of the link.
//!
//! Quantities fall in two classes. Untrusted noise is attributed to the
//! channel and therefore to the eavesdropper: reference pulse leakage,
//! unmodeled channel excess noise, residual phase noise and the crosstalk
//! from the publicly decodable classical bits. It enters `chi_line`. Trusted
//! noise originates inside the receiver (electronic noise, the shot-limited
//! phase tracking floor) and enters `chi_het` only. The classical decision
//! variance `n_tot` sees both.

use crate::error::{Error, Result};
use crate::params::{PhaseNoiseBudget, SystemParams};
use crate::scalar::{real, Real};

/// Every noise figure of one operating point, in shot-noise units unless
/// stated otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDecomposition<T> {
    /// Mean photon number leaking from the reference pulse into the signal
    /// mode, referred to the channel input.
    pub n_le: T,
    /// Phase diffusion variance accumulated over the signal-reference delay,
    /// in rad^2.
    pub sigma_le: T,
    /// Untrusted excess noise caused by the leaked reference photons.
    pub eps_le: T,
    /// Untrusted excess noise from residual phase noise on the data
    /// quadratures.
    pub eps_i: T,
    /// Trusted excess noise from the shot-limited phase tracker.
    pub eps_b: T,
    /// Untrusted equivalent noise of the classical crosstalk, proportional
    /// to the bit error rate.
    pub eps_ber: T,
    /// Total variance governing the classical QPSK decision.
    pub n_tot: T,
    /// Trusted receiver noise referred to the receiver input.
    pub chi_het: T,
    /// Untrusted channel noise referred to the channel input.
    pub chi_line: T,
    /// All noise referred to the channel input.
    pub chi_tot: T,
}

fn check_transmittance<T: Real>(op: &'static str, t: T) -> Result<()> {
    if !t.is_finite() || t <= T::zero() || t > T::one() {
        return Err(Error::Domain {
            op,
            detail: format!("transmittance {t} outside (0, 1]"),
        });
    }
    Ok(())
}

/// Photons per pulse leaking from the reference path into the signal mode,
/// referred to the channel input so that the receiver sees `t` times this.
///
/// `n_ref` is the reference photon number at the receiver, which is why the
/// channel transmittance divides. Infinite extinction gives zero.
pub fn leakage_photons<T: Real>(n_ref: T, xi_a_db: T, xi_p_db: T, t: T) -> Result<T> {
    check_transmittance("leakage_photons", t)?;
    if !n_ref.is_finite() || n_ref <= T::zero() {
        return Err(Error::Domain {
            op: "leakage_photons",
            detail: format!("n_ref {n_ref} must be finite and > 0"),
        });
    }
    check_extinction("leakage_photons", xi_a_db)?;
    check_extinction("leakage_photons", xi_p_db)?;
    let ten = real::<T>(10.0);
    Ok(n_ref / t * ten.powf(-xi_a_db / ten) * ten.powf(-xi_p_db / ten))
}

fn check_extinction<T: Real>(op: &'static str, xi_db: T) -> Result<()> {
    if xi_db.is_nan() || xi_db < T::zero() {
        return Err(Error::Domain {
            op,
            detail: format!("extinction {xi_db} dB must be >= 0"),
        });
    }
    Ok(())
}

/// Phase variance the transmitter laser diffuses through between emitting a
/// signal pulse and the reference pulse it will be corrected with, in rad^2.
///
/// Zero delay or an infinitely coherent laser give zero.
pub fn delay_phase_variance<T: Real>(dt_s: T, tau_c_s: T) -> Result<T> {
    if !dt_s.is_finite() || dt_s < T::zero() {
        return Err(Error::Domain {
            op: "delay_phase_variance",
            detail: format!("dt_s {dt_s} must be finite and >= 0"),
        });
    }
    if tau_c_s.is_nan() || tau_c_s <= T::zero() {
        return Err(Error::Domain {
            op: "delay_phase_variance",
            detail: format!("tau_c_s {tau_c_s} must be > 0"),
        });
    }
    if tau_c_s == T::infinity() {
        return Ok(T::zero());
    }
    Ok(real::<T>(2.0) * dt_s / tau_c_s)
}

/// Untrusted excess noise caused by reference photons leaking into the
/// signal mode and beating against the local oscillator.
///
/// This is the closed form; it equals
/// `leakage_photons * delay_phase_variance / (2 n0)`, an identity the tests
/// pin down by computing both routes.
pub fn leakage_excess_noise<T: Real>(
    n_ref: T,
    dt_s: T,
    tau_c_s: T,
    xi_a_db: T,
    xi_p_db: T,
    t: T,
    n0: T,
) -> Result<T> {
    check_transmittance("leakage_excess_noise", t)?;
    if !n_ref.is_finite() || n_ref <= T::zero() {
        return Err(Error::Domain {
            op: "leakage_excess_noise",
            detail: format!("n_ref {n_ref} must be finite and > 0"),
        });
    }
    if !dt_s.is_finite() || dt_s < T::zero() {
        return Err(Error::Domain {
            op: "leakage_excess_noise",
            detail: format!("dt_s {dt_s} must be finite and >= 0"),
        });
    }
    if tau_c_s.is_nan() || tau_c_s <= T::zero() {
        return Err(Error::Domain {
            op: "leakage_excess_noise",
            detail: format!("tau_c_s {tau_c_s} must be > 0"),
        });
    }
    check_extinction("leakage_excess_noise", xi_a_db)?;
    check_extinction("leakage_excess_noise", xi_p_db)?;
    check_n0("leakage_excess_noise", n0)?;
    if tau_c_s == T::infinity() {
        return Ok(T::zero());
    }
    let ten = real::<T>(10.0);
    Ok(n_ref * dt_s / (t * n0 * tau_c_s) * ten.powf(-xi_a_db / ten) * ten.powf(-xi_p_db / ten))
}

fn check_n0<T: Real>(op: &'static str, n0: T) -> Result<()> {
    if !n0.is_finite() || n0 <= T::zero() {
        return Err(Error::Domain {
            op,
            detail: format!("n0 {n0} must be finite and > 0"),
        });
    }
    Ok(())
}

/// Variance floor of any phase estimate built from a reference pulse of
/// `n_ref` photons measured with efficiency `eta`, in rad^2.
///
/// An infinitely bright reference gives zero.
pub fn shot_limited_phase_variance<T: Real>(n_ref: T, eta: T, n0: T) -> Result<T> {
    if n_ref.is_nan() || n_ref <= T::zero() {
        return Err(Error::Domain {
            op: "shot_limited_phase_variance",
            detail: format!("n_ref {n_ref} must be > 0"),
        });
    }
    if !eta.is_finite() || eta <= T::zero() || eta > T::one() {
        return Err(Error::Domain {
            op: "shot_limited_phase_variance",
            detail: format!("eta {eta} outside (0, 1]"),
        });
    }
    check_n0("shot_limited_phase_variance", n0)?;
    Ok(real::<T>(2.0) * n0 / (eta * n_ref))
}

/// Total phase noise between a signal pulse and a reference pulse carved at
/// delay `dt_s` when transmitter and receiver lasers free-run with coherence
/// times `tau1_s` and `tau2_s`, including the shot-limited estimation floor.
/// Coherence times may be infinite.
pub fn phase_noise_variance<T: Real>(
    dt_s: T,
    tau1_s: T,
    tau2_s: T,
    n_ref: T,
    eta: T,
    n0: T,
) -> Result<T> {
    if !dt_s.is_finite() || dt_s < T::zero() {
        return Err(Error::Domain {
            op: "phase_noise_variance",
            detail: format!("dt_s {dt_s} must be finite and >= 0"),
        });
    }
    let mut drift = T::zero();
    for tau in [tau1_s, tau2_s] {
        if tau.is_nan() || tau <= T::zero() {
            return Err(Error::Domain {
                op: "phase_noise_variance",
                detail: format!("coherence time {tau} must be > 0"),
            });
        }
        if tau != T::infinity() {
            drift = drift + dt_s / tau;
        }
    }
    Ok(drift + shot_limited_phase_variance(n_ref, eta, n0)?)
}

/// Excess noise the residual and shot-limited phase variances induce on the
/// modulated quadratures, `(eps_i, eps_b)`. Both scale with the total power
/// of what sits on the pulse: classical displacement plus key modulation.
pub fn phase_excess_noises<T: Real>(
    v_a: T,
    alpha: T,
    sigma_i: T,
    sigma_b: T,
    n0: T,
) -> Result<(T, T)> {
    if !alpha.is_finite() || alpha < T::zero() {
        return Err(Error::Domain {
            op: "phase_excess_noises",
            detail: format!("alpha {alpha} must be finite and >= 0"),
        });
    }
    if !v_a.is_finite() || v_a < T::zero() {
        return Err(Error::Domain {
            op: "phase_excess_noises",
            detail: format!("v_a {v_a} must be finite and >= 0"),
        });
    }
    check_n0("phase_excess_noises", n0)?;
    let power = alpha * alpha / n0 + v_a;
    Ok((power * sigma_i, power * sigma_b))
}

/// Computes the complete noise decomposition at one operating point.
///
/// `alpha` is the QPSK displacement amplitude and `t` the channel
/// transmittance. The crosstalk term uses the configured `ber_target`, which
/// the displacement solver makes equal to the realized error rate.
pub fn assemble<T: Real>(
    params: &SystemParams<T>,
    phase: &PhaseNoiseBudget<T>,
    alpha: T,
    t: T,
) -> Result<NoiseDecomposition<T>> {
    check_transmittance("assemble", t)?;
    if !alpha.is_finite() || alpha < T::zero() {
        return Err(Error::Domain {
            op: "assemble",
            detail: format!("alpha {alpha} must be finite and >= 0"),
        });
    }

    let n_le = leakage_photons(params.n_ref, params.xi_a_db, params.xi_p_db, t)?;
    let sigma_le = delay_phase_variance(params.dt_s, params.tau_c_s)?;
    let eps_le = leakage_excess_noise(
        params.n_ref,
        params.dt_s,
        params.tau_c_s,
        params.xi_a_db,
        params.xi_p_db,
        t,
        params.n0,
    )?;
    let (eps_i, eps_b) =
        phase_excess_noises(params.v_a, alpha, phase.sigma_i, phase.sigma_b, params.n0)?;

    let one = T::one();
    let two = real::<T>(2.0);
    let four = real::<T>(4.0);
    let half = real::<T>(0.5);
    let mu_over_2n0 = alpha * alpha / params.n0;

    let eps_ber = four * mu_over_2n0 * params.ber_target;
    let n_tot = half
        * t
        * params.eta
        * (params.v_a + eps_le + params.eps0 + mu_over_2n0 * (phase.sigma_i + phase.sigma_b))
        + one
        + params.v_el;
    let chi_het = (two + two * params.v_el) / params.eta - one + t * eps_b;
    let chi_line = one / t - one + eps_le + params.eps0 + eps_i + eps_ber;
    let chi_tot = chi_line + chi_het / t;

    Ok(NoiseDecomposition {
        n_le,
        sigma_le,
        eps_le,
        eps_i,
        eps_b,
        eps_ber,
        n_tot,
        chi_het,
        chi_line,
        chi_tot,
    })
}
