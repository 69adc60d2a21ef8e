use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Vacuum quadrature variance. Every variance in this crate is expressed in
/// units of this constant, and the closed forms assume exactly this value;
/// [`SystemParams::validated`] rejects anything else.
pub const SHOT_NOISE_UNIT: f64 = 0.25;

/// Static description of one link configuration.
///
/// Immutable once validated. Distance-dependent quantities are derived from
/// `gamma` and `length_km` through [`channel_transmittance`]; nothing in here
/// depends on the phase noise budget, which travels separately as
/// [`PhaseNoiseBudget`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T> {
    /// Fiber attenuation in dB/km.
    pub gamma: T,
    /// Fiber length in km.
    pub length_km: T,
    /// Receiver detection efficiency, in (0, 1].
    pub eta: T,
    /// Electronic noise variance of the receiver, in shot-noise units.
    pub v_el: T,
    /// Reconciliation efficiency, in (0, 1].
    pub f_rec: T,
    /// Gaussian modulation variance of the key quadratures, in shot-noise
    /// units.
    pub v_a: T,
    /// Untrusted excess noise at the channel input from sources not modeled
    /// by this crate, in shot-noise units.
    pub eps0: T,
    /// Mean photon number of the phase reference pulse at the receiver.
    pub n_ref: T,
    /// Delay between a signal pulse and its reference pulse, in seconds.
    pub dt_s: T,
    /// Coherence time of the transmitter laser, in seconds. May be infinite.
    pub tau_c_s: T,
    /// Amplitude extinction applied to the reference path, in dB. May be
    /// infinite.
    pub xi_a_db: T,
    /// Phase modulator extinction applied to the reference path, in dB. May
    /// be infinite.
    pub xi_p_db: T,
    /// Target bit error rate of the classical QPSK link, in (0, 1/2).
    pub ber_target: T,
    /// Shot-noise normalization. Must equal [`SHOT_NOISE_UNIT`].
    pub n0: T,
}

impl<T: Real> SystemParams<T> {
    /// The reference configuration used by the built-in sweeps: 0.2 dB/km
    /// fiber, a half-efficient receiver with 0.1 shot-noise units of
    /// electronic noise, 30 dB extinction on both reference modulators, a
    /// 1000 photon reference pulse delayed 50 ns behind the signal, a 1 us
    /// laser coherence time and a 1e-9 classical error rate target.
    pub fn baseline() -> Self {
        SystemParams {
            gamma: real(0.2),
            length_km: T::zero(),
            eta: real(0.5),
            v_el: real(0.1),
            f_rec: real(0.95),
            v_a: real(4.0),
            eps0: real(0.01),
            n_ref: real(1000.0),
            dt_s: real(50e-9),
            tau_c_s: real(1e-6),
            xi_a_db: real(30.0),
            xi_p_db: real(30.0),
            ber_target: real(1e-9),
            n0: real(SHOT_NOISE_UNIT),
        }
    }

    /// Checks every field against its documented range and returns the
    /// parameters unchanged on success.
    pub fn validated(self) -> Result<Self> {
        fn finite_min<T: Real>(name: &'static str, v: T, min: T, req: &'static str) -> Result<()> {
            if !v.is_finite() || v < min {
                return Err(Error::invalid(name, v, req));
            }
            Ok(())
        }

        finite_min("gamma", self.gamma, T::zero(), "finite and >= 0")?;
        finite_min("length_km", self.length_km, T::zero(), "finite and >= 0")?;
        finite_min("v_el", self.v_el, T::zero(), "finite and >= 0")?;
        finite_min("eps0", self.eps0, T::zero(), "finite and >= 0")?;
        if !self.eta.is_finite() || self.eta <= T::zero() || self.eta > T::one() {
            return Err(Error::invalid("eta", self.eta, "in (0, 1]"));
        }
        if !self.f_rec.is_finite() || self.f_rec < T::zero() || self.f_rec > T::one() {
            return Err(Error::invalid("f_rec", self.f_rec, "in [0, 1]"));
        }
        if !self.v_a.is_finite() || self.v_a <= T::zero() {
            return Err(Error::invalid("v_a", self.v_a, "finite and > 0"));
        }
        if !self.n_ref.is_finite() || self.n_ref <= T::zero() {
            return Err(Error::invalid("n_ref", self.n_ref, "finite and > 0"));
        }
        if !self.dt_s.is_finite() || self.dt_s <= T::zero() {
            return Err(Error::invalid("dt_s", self.dt_s, "finite and > 0"));
        }
        // Infinity encodes a perfectly coherent laser or a fully suppressed
        // reference path, so these three only exclude NaN and negatives.
        if self.tau_c_s.is_nan() || self.tau_c_s <= T::zero() {
            return Err(Error::invalid("tau_c_s", self.tau_c_s, "> 0, possibly infinite"));
        }
        if self.xi_a_db.is_nan() || self.xi_a_db < T::zero() {
            return Err(Error::invalid("xi_a_db", self.xi_a_db, ">= 0, possibly infinite"));
        }
        if self.xi_p_db.is_nan() || self.xi_p_db < T::zero() {
            return Err(Error::invalid("xi_p_db", self.xi_p_db, ">= 0, possibly infinite"));
        }
        if !self.ber_target.is_finite()
            || self.ber_target <= T::zero()
            || self.ber_target >= real(0.5)
        {
            return Err(Error::invalid("ber_target", self.ber_target, "in (0, 1/2)"));
        }
        if self.n0 != real(SHOT_NOISE_UNIT) {
            return Err(Error::invalid("n0", self.n0, "exactly 1/4"));
        }
        Ok(self)
    }

    /// Same configuration with a different modulation variance. The caller
    /// keeps `v_a` positive; the variance optimizer relies on this being
    /// cheap.
    pub fn with_v_a(mut self, v_a: T) -> Self {
        debug_assert!(v_a > T::zero());
        self.v_a = v_a;
        self
    }

    /// Same configuration at a different fiber length.
    pub fn with_length_km(mut self, length_km: T) -> Self {
        debug_assert!(length_km >= T::zero());
        self.length_km = length_km;
        self
    }

    /// Transmittance of the configured fiber span.
    pub fn transmittance(&self) -> Result<T> {
        channel_transmittance(self.gamma, self.length_km)
    }
}

/// Phase noise variances of the recovered carrier, split by who is assumed
/// to control them.
///
/// `sigma_i` is residual phase noise attributed to the channel (untrusted);
/// `sigma_b` is the shot-noise-limited estimation floor of the receiver's
/// phase tracker (trusted). Both are variances in rad^2. The optional laser
/// coherence times feed [`crate::noise::phase_noise_variance`] and do not
/// enter the key rate directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseNoiseBudget<T> {
    pub sigma_i: T,
    pub sigma_b: T,
    pub tau1_s: Option<T>,
    pub tau2_s: Option<T>,
}

impl<T: Real> PhaseNoiseBudget<T> {
    pub fn new(sigma_i: T, sigma_b: T) -> Result<Self> {
        if !sigma_i.is_finite() || sigma_i < T::zero() {
            return Err(Error::invalid("sigma_i", sigma_i, "finite and >= 0"));
        }
        if !sigma_b.is_finite() || sigma_b < T::zero() {
            return Err(Error::invalid("sigma_b", sigma_b, "finite and >= 0"));
        }
        let pi2 = real::<T>(std::f64::consts::PI) * real(std::f64::consts::PI);
        if sigma_i + sigma_b >= pi2 {
            return Err(Error::invalid(
                "sigma_i + sigma_b",
                sigma_i + sigma_b,
                "< pi^2, beyond which a phase variance is meaningless",
            ));
        }
        Ok(PhaseNoiseBudget {
            sigma_i,
            sigma_b,
            tau1_s: None,
            tau2_s: None,
        })
    }

    /// Attaches the coherence times of the two free-running lasers. Either
    /// may be infinite but not NaN or nonpositive.
    pub fn with_coherence_times(mut self, tau1_s: T, tau2_s: T) -> Result<Self> {
        for (name, tau) in [("tau1_s", tau1_s), ("tau2_s", tau2_s)] {
            if tau.is_nan() || tau <= T::zero() {
                return Err(Error::invalid(name, tau, "> 0, possibly infinite"));
            }
        }
        self.tau1_s = Some(tau1_s);
        self.tau2_s = Some(tau2_s);
        Ok(self)
    }

    /// Total phase noise variance of the recovered carrier.
    pub fn total(&self) -> T {
        self.sigma_i + self.sigma_b
    }
}

/// One conjugate quadrature pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePair<T> {
    pub x: T,
    pub p: T,
}

impl<T: Real> QuadraturePair<T> {
    pub fn new(x: T, p: T) -> Result<Self> {
        if !x.is_finite() || !p.is_finite() {
            return Err(Error::invalid(
                "quadrature pair",
                format_args!("({x}, {p})"),
                "both components finite",
            ));
        }
        Ok(QuadraturePair { x, p })
    }
}

/// Power transmittance of `length_km` of fiber with attenuation `gamma`
/// dB/km.
pub fn channel_transmittance<T: Real>(gamma: T, length_km: T) -> Result<T> {
    if !gamma.is_finite() || gamma < T::zero() {
        return Err(Error::invalid("gamma", gamma, "finite and >= 0"));
    }
    if !length_km.is_finite() || length_km < T::zero() {
        return Err(Error::invalid("length_km", length_km, "finite and >= 0"));
    }
    Ok(real::<T>(10.0).powf(-gamma * length_km / real(10.0)))
}
