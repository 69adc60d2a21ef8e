//! Symbol-by-symbol simulation of the shared-pulse link.
//!
//! Each round draws two classical bits and two Gaussian key symbols, builds
//! the transmitted quadratures, pushes them through loss, carrier phase
//! noise and receiver noise, and decodes both layers. The simulation shares
//! no algebra with the closed forms in [`crate::noise`] beyond the physical
//! constants, which is what makes the cross-checks in the test suite
//! meaningful.
//!
//! Campaigns are deterministic functions of `(parameters, rounds, seed)`:
//! rounds are partitioned into fixed-size batches, each batch consumes its
//! own counter-derived random stream, and batch results are folded in batch
//! order. Worker count therefore never changes any output bit.

use std::io::Write;

use rayon::prelude::*;

use crate::classical::solve_displacement;
use crate::error::{Error, Result};
use crate::noise::leakage_excess_noise;
use crate::params::{PhaseNoiseBudget, QuadraturePair, SystemParams};
use crate::phase::rotate;
use crate::rng::StreamSeed;
use crate::scalar::{real, Real};

/// How carrier phase noise is applied to each pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseModel {
    /// Draw a phase error per round and rotate the quadratures by it. This
    /// is the physical model; its decision variance agrees with the closed
    /// form only where the small-angle expansion holds.
    ExactRotation,
    /// Replace the rotation by an additive Gaussian term with the variance
    /// the closed form assigns to it. Matches the analytic decision
    /// variance at any phase noise level, by construction.
    Linearized,
}

/// Rounds per random stream. One stream never crosses a batch boundary, so
/// identical campaigns split identically no matter how many workers run.
const BATCH_ROUNDS: u64 = 1 << 16;

/// Two-sided 95% normal quantile used for binomial confidence intervals.
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// What the transmitter puts on one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparedSymbol<T> {
    /// Classical bit carried by the x displacement.
    pub m_a: u8,
    /// Classical bit carried by the p displacement.
    pub n_a: u8,
    /// Gaussian key symbol on x, natural units.
    pub x_a: T,
    /// Gaussian key symbol on p, natural units.
    pub p_a: T,
    /// Total modulated quadratures at the channel input.
    pub ideal: QuadraturePair<T>,
}

/// What the receiver's conjugate detector reports for one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement<T> {
    pub x_r: T,
    pub p_r: T,
    /// Carrier phase error applied this round (0 under the linearized
    /// model).
    pub theta: T,
}

/// Both decoded layers of one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedSymbol<T> {
    pub m_b: u8,
    pub n_b: u8,
    /// Key symbol estimate on x: measurement rescaled to the channel input
    /// with the decided displacement removed.
    pub x_b: T,
    pub p_b: T,
}

/// Everything about one simulated round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolRecord<T> {
    pub m_a: u8,
    pub n_a: u8,
    pub x_a: T,
    pub p_a: T,
    pub x_r: T,
    pub p_r: T,
    pub m_b: u8,
    pub n_b: u8,
    pub x_b: T,
    pub p_b: T,
    pub theta: T,
}

fn bit_sign<T: Real>(bit: u8) -> T {
    if bit == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Scale that refers a measured quadrature back to the channel input.
fn decode_scale<T: Real>(t: T, eta: T) -> T {
    (real::<T>(2.0) / (t * eta)).sqrt()
}

/// Draws one transmitted symbol: two uniform bits, two Gaussian key symbols
/// of variance `v_a * n0`, and the displaced quadratures.
pub fn prepare<T: Real, R: rand::Rng + ?Sized>(
    v_a: T,
    alpha: T,
    n0: T,
    rng: &mut R,
) -> Result<PreparedSymbol<T>> {
    for (name, v) in [("v_a", v_a), ("alpha", alpha)] {
        if !v.is_finite() || v < T::zero() {
            return Err(Error::Domain {
                op: "prepare",
                detail: format!("{name} = {v} must be finite and >= 0"),
            });
        }
    }
    if !n0.is_finite() || n0 <= T::zero() {
        return Err(Error::Domain {
            op: "prepare",
            detail: format!("n0 = {n0} must be finite and > 0"),
        });
    }
    let mod_sd = (v_a * n0).sqrt();
    Ok(prepare_with(mod_sd, alpha, rng))
}

fn prepare_with<T: Real, R: rand::Rng + ?Sized>(
    mod_sd: T,
    alpha: T,
    rng: &mut R,
) -> PreparedSymbol<T> {
    let bits: u32 = rng.random();
    let m_a = (bits & 1) as u8;
    let n_a = ((bits >> 1) & 1) as u8;
    let x_a = mod_sd * T::standard_normal(rng);
    let p_a = mod_sd * T::standard_normal(rng);
    PreparedSymbol {
        m_a,
        n_a,
        x_a,
        p_a,
        ideal: QuadraturePair {
            x: x_a + bit_sign::<T>(m_a) * alpha,
            p: p_a + bit_sign::<T>(n_a) * alpha,
        },
    }
}

fn transmit_with<T: Real, R: rand::Rng + ?Sized>(
    ideal: QuadraturePair<T>,
    gain: T,
    theta_sd: T,
    noise_sd: T,
    model: PhaseModel,
    rng: &mut R,
) -> Measurement<T> {
    let theta = match model {
        PhaseModel::ExactRotation => theta_sd * T::standard_normal(rng),
        PhaseModel::Linearized => T::zero(),
    };
    let sent = match model {
        PhaseModel::ExactRotation => rotate(ideal, theta),
        PhaseModel::Linearized => ideal,
    };
    Measurement {
        x_r: gain * sent.x + noise_sd * T::standard_normal(rng),
        p_r: gain * sent.p + noise_sd * T::standard_normal(rng),
        theta,
    }
}

/// Pushes a prepared symbol through the channel and the conjugate receiver.
pub fn transmit_and_measure<T: Real, R: rand::Rng + ?Sized>(
    symbol: &PreparedSymbol<T>,
    params: &SystemParams<T>,
    phase: &PhaseNoiseBudget<T>,
    t: T,
    alpha: T,
    model: PhaseModel,
    rng: &mut R,
) -> Result<Measurement<T>> {
    let kernel = RoundKernel::new(params, phase, alpha, t, model)?;
    Ok(transmit_with(
        symbol.ideal,
        kernel.gain,
        kernel.theta_sd,
        kernel.noise_sd,
        model,
        rng,
    ))
}

/// Decides both classical bits from the quadrature signs and removes the
/// decided displacements from the rescaled measurement. Exactly zero reads
/// as bit 1.
pub fn decode<T: Real>(x_r: T, p_r: T, alpha: T, t: T, eta: T) -> Result<DecodedSymbol<T>> {
    for (name, v) in [("x_r", x_r), ("p_r", p_r)] {
        if !v.is_finite() {
            return Err(Error::Domain {
                op: "decode",
                detail: format!("{name} = {v} must be finite"),
            });
        }
    }
    if !alpha.is_finite() || alpha < T::zero() {
        return Err(Error::Domain {
            op: "decode",
            detail: format!("alpha = {alpha} must be finite and >= 0"),
        });
    }
    for (name, v) in [("t", t), ("eta", eta)] {
        if !v.is_finite() || v <= T::zero() || v > T::one() {
            return Err(Error::Domain {
                op: "decode",
                detail: format!("{name} = {v} outside (0, 1]"),
            });
        }
    }
    Ok(decode_with(x_r, p_r, alpha, decode_scale(t, eta)))
}

fn decode_with<T: Real>(x_r: T, p_r: T, alpha: T, scale: T) -> DecodedSymbol<T> {
    let m_b = u8::from(!(x_r > T::zero()));
    let n_b = u8::from(!(p_r > T::zero()));
    DecodedSymbol {
        m_b,
        n_b,
        x_b: scale * x_r - bit_sign::<T>(m_b) * alpha,
        p_b: scale * p_r - bit_sign::<T>(n_b) * alpha,
    }
}

/// Precomputed per-round constants of one campaign configuration.
struct RoundKernel<T> {
    alpha: T,
    mod_sd: T,
    gain: T,
    scale: T,
    theta_sd: T,
    noise_sd: T,
    model: PhaseModel,
}

impl<T: Real> RoundKernel<T> {
    fn new(
        params: &SystemParams<T>,
        phase: &PhaseNoiseBudget<T>,
        alpha: T,
        t: T,
        model: PhaseModel,
    ) -> Result<Self> {
        if !alpha.is_finite() || alpha < T::zero() {
            return Err(Error::Domain {
                op: "simulate",
                detail: format!("alpha = {alpha} must be finite and >= 0"),
            });
        }
        if !t.is_finite() || t <= T::zero() || t > T::one() {
            return Err(Error::Domain {
                op: "simulate",
                detail: format!("transmittance {t} outside (0, 1]"),
            });
        }
        let eps_le = leakage_excess_noise(
            params.n_ref,
            params.dt_s,
            params.tau_c_s,
            params.xi_a_db,
            params.xi_p_db,
            t,
            params.n0,
        )?;
        let half = real::<T>(0.5);
        let sigma = phase.total();
        // Additive receiver-referred noise per quadrature: channel excess
        // noise scaled into the measurement, one shot unit, electronic
        // noise, and under the linearized model the displacement-driven
        // phase term as well.
        let mut excess = eps_le + params.eps0;
        if model == PhaseModel::Linearized {
            excess = excess + alpha * alpha / params.n0 * sigma;
        }
        let noise_var = params.n0 * (half * t * params.eta * excess + T::one() + params.v_el);
        Ok(RoundKernel {
            alpha,
            mod_sd: (params.v_a * params.n0).sqrt(),
            gain: (half * t * params.eta).sqrt(),
            scale: decode_scale(t, params.eta),
            theta_sd: match model {
                PhaseModel::ExactRotation => sigma.sqrt(),
                PhaseModel::Linearized => T::zero(),
            },
            noise_sd: noise_var.sqrt(),
            model,
        })
    }

    fn round<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> SymbolRecord<T> {
        let sym = prepare_with(self.mod_sd, self.alpha, rng);
        let meas = transmit_with(sym.ideal, self.gain, self.theta_sd, self.noise_sd, self.model, rng);
        let dec = decode_with(meas.x_r, meas.p_r, self.alpha, self.scale);
        SymbolRecord {
            m_a: sym.m_a,
            n_a: sym.n_a,
            x_a: sym.x_a,
            p_a: sym.p_a,
            x_r: meas.x_r,
            p_r: meas.p_r,
            m_b: dec.m_b,
            n_b: dec.n_b,
            x_b: dec.x_b,
            p_b: dec.p_b,
            theta: meas.theta,
        }
    }
}

/// Simulates a single round end to end. Desk-scale convenience; campaigns
/// use the same arithmetic with the per-round constants hoisted out.
pub fn simulate_round<T: Real, R: rand::Rng + ?Sized>(
    params: &SystemParams<T>,
    phase: &PhaseNoiseBudget<T>,
    alpha: T,
    t: T,
    model: PhaseModel,
    rng: &mut R,
) -> Result<SymbolRecord<T>> {
    Ok(RoundKernel::new(params, phase, alpha, t, model)?.round(rng))
}

/// Binomial point estimate with a 95% Wilson confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate<T> {
    pub errors: u64,
    pub trials: u64,
    pub rate: T,
    pub ci_low: T,
    pub ci_high: T,
}

impl<T: Real> BerEstimate<T> {
    /// Wilson score interval at 95% coverage for `errors` out of `trials`.
    pub fn wilson(errors: u64, trials: u64) -> Self {
        let n = real::<T>(trials as f64);
        let p = real::<T>(errors as f64) / n;
        let z = real::<T>(WILSON_Z);
        let z2n = z * z / n;
        let denom = T::one() + z2n;
        let center = (p + z2n * real(0.5)) / denom;
        let half =
            z * (p * (T::one() - p) / n + z2n * z2n / real::<T>(4.0) / (z * z)).sqrt() / denom;
        BerEstimate {
            errors,
            trials,
            rate: p,
            ci_low: (center - half).max(T::zero()),
            ci_high: (center + half).min(T::one()),
        }
    }
}

/// Least squares slope with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit<T> {
    pub slope: T,
    pub std_error: T,
}

/// Campaign summary. All variances are per quadrature; `noise_x`/`noise_p`
/// are in shot-noise units so they compare directly with the analytic
/// decision variance, `residual_variance` is in natural units at the
/// channel input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalReport<T> {
    pub rounds: u64,
    /// Displacement amplitude the campaign transmitted.
    pub alpha: T,
    pub ber_x: BerEstimate<T>,
    pub ber_p: BerEstimate<T>,
    /// Pooled conditional variance of the measured x quadrature given the
    /// sent bit, in shot-noise units.
    pub noise_x: T,
    pub noise_p: T,
    /// Slope of the measured quadrature on the prepared one, pooled over x
    /// and p. Ideally `sqrt(t eta / 2) E[cos theta]`.
    pub gain_fit: SlopeFit<T>,
    /// Variance of the decoded key deviation `x_b - x_a`, pooled over both
    /// quadratures.
    pub residual_variance: T,
}

/// Per-batch accumulator. Merging these in batch order reproduces a strictly
/// sequential pass.
struct Partial<T> {
    rounds: u64,
    err_x: u64,
    err_p: u64,
    /// Indexed `[quadrature][sent bit]`: count and first two moments of the
    /// measured quadrature.
    groups: [[(u64, T, T); 2]; 2],
    // Prepared value u = ideal quadrature against measured y.
    g_n: u64,
    g_su: T,
    g_sy: T,
    g_suu: T,
    g_suy: T,
    g_syy: T,
    // Key symbol a against decoded b.
    r_sa: T,
    r_sb: T,
    r_saa: T,
    r_sab: T,
    r_sbb: T,
}

impl<T: Real> Partial<T> {
    fn zero() -> Self {
        let z = T::zero();
        Partial {
            rounds: 0,
            err_x: 0,
            err_p: 0,
            groups: [[(0, z, z); 2]; 2],
            g_n: 0,
            g_su: z,
            g_sy: z,
            g_suu: z,
            g_suy: z,
            g_syy: z,
            r_sa: z,
            r_sb: z,
            r_saa: z,
            r_sab: z,
            r_sbb: z,
        }
    }

    fn add(&mut self, rec: &SymbolRecord<T>, ideal_x: T, ideal_p: T) {
        self.rounds += 1;
        self.err_x += u64::from(rec.m_b != rec.m_a);
        self.err_p += u64::from(rec.n_b != rec.n_a);
        for (q, bit, meas) in [(0, rec.m_a, rec.x_r), (1, rec.n_a, rec.p_r)] {
            let g = &mut self.groups[q][bit as usize];
            g.0 += 1;
            g.1 = g.1 + meas;
            g.2 = g.2 + meas * meas;
        }
        for (u, y) in [(ideal_x, rec.x_r), (ideal_p, rec.p_r)] {
            self.g_n += 1;
            self.g_su = self.g_su + u;
            self.g_sy = self.g_sy + y;
            self.g_suu = self.g_suu + u * u;
            self.g_suy = self.g_suy + u * y;
            self.g_syy = self.g_syy + y * y;
        }
        for (a, b) in [(rec.x_a, rec.x_b), (rec.p_a, rec.p_b)] {
            self.r_sa = self.r_sa + a;
            self.r_sb = self.r_sb + b;
            self.r_saa = self.r_saa + a * a;
            self.r_sab = self.r_sab + a * b;
            self.r_sbb = self.r_sbb + b * b;
        }
    }

    fn merge(&mut self, other: &Partial<T>) {
        self.rounds += other.rounds;
        self.err_x += other.err_x;
        self.err_p += other.err_p;
        for q in 0..2 {
            for b in 0..2 {
                self.groups[q][b].0 += other.groups[q][b].0;
                self.groups[q][b].1 = self.groups[q][b].1 + other.groups[q][b].1;
                self.groups[q][b].2 = self.groups[q][b].2 + other.groups[q][b].2;
            }
        }
        self.g_n += other.g_n;
        self.g_su = self.g_su + other.g_su;
        self.g_sy = self.g_sy + other.g_sy;
        self.g_suu = self.g_suu + other.g_suu;
        self.g_suy = self.g_suy + other.g_suy;
        self.g_syy = self.g_syy + other.g_syy;
        self.r_sa = self.r_sa + other.r_sa;
        self.r_sb = self.r_sb + other.r_sb;
        self.r_saa = self.r_saa + other.r_saa;
        self.r_sab = self.r_sab + other.r_sab;
        self.r_sbb = self.r_sbb + other.r_sbb;
    }

    /// Pooled conditional variance of one quadrature given its sent bit, in
    /// units of `n0`.
    fn conditional_variance(&self, q: usize, n0: T) -> T {
        let mut ss = T::zero();
        let mut dof = self.rounds;
        for (count, s1, s2) in self.groups[q] {
            if count == 0 {
                continue;
            }
            dof -= 1;
            let c = real::<T>(count as f64);
            ss = ss + (s2 - s1 * s1 / c);
        }
        ss / real::<T>(dof as f64) / n0
    }

    fn finalize(&self, alpha: T, n0: T) -> EmpiricalReport<T> {
        let n = real::<T>(self.g_n as f64);
        let sxx = self.g_suu - self.g_su * self.g_su / n;
        let sxy = self.g_suy - self.g_su * self.g_sy / n;
        let syy = self.g_syy - self.g_sy * self.g_sy / n;
        let slope = sxy / sxx;
        let sse = (syy - slope * sxy).max(T::zero());
        let std_error = (sse / (n - real::<T>(2.0)) / sxx).sqrt();

        let sd = self.r_sb - self.r_sa;
        let sdd = self.r_sbb - real::<T>(2.0) * self.r_sab + self.r_saa;
        let residual_variance = (sdd - sd * sd / n) / (n - T::one());

        EmpiricalReport {
            rounds: self.rounds,
            alpha,
            ber_x: BerEstimate::wilson(self.err_x, self.rounds),
            ber_p: BerEstimate::wilson(self.err_p, self.rounds),
            noise_x: self.conditional_variance(0, n0),
            noise_p: self.conditional_variance(1, n0),
            gain_fit: SlopeFit { slope, std_error },
            residual_variance,
        }
    }
}

fn campaign_guard<T: Real>(params: &SystemParams<T>, rounds: u64) -> Result<(SystemParams<T>, T)> {
    let params = params.validated()?;
    if rounds < 10_000 {
        return Err(Error::InsufficientStatistics(format!(
            "{rounds} rounds cannot resolve the campaign estimators; need at least 10000"
        )));
    }
    let t = params.transmittance()?;
    Ok((params, t))
}

fn run_batch<T: Real>(
    kernel: &RoundKernel<T>,
    seeds: &StreamSeed,
    batch: u64,
    rounds: u64,
) -> Partial<T> {
    let mut rng = seeds.stream(batch);
    let start = batch * BATCH_ROUNDS;
    let count = BATCH_ROUNDS.min(rounds - start);
    let mut partial = Partial::zero();
    for _ in 0..count {
        let rec = kernel.round(&mut rng);
        let ideal_x = rec.x_a + bit_sign::<T>(rec.m_a) * kernel.alpha;
        let ideal_p = rec.p_a + bit_sign::<T>(rec.n_a) * kernel.alpha;
        partial.add(&rec, ideal_x, ideal_p);
    }
    partial
}

/// Runs `rounds` simulated rounds at an explicitly given displacement
/// amplitude and summarizes them. Deterministic in `(inputs, seed)`; the
/// number of worker threads never changes the result.
pub fn run_campaign_at<T: Real>(
    params: &SystemParams<T>,
    phase: &PhaseNoiseBudget<T>,
    alpha: T,
    rounds: u64,
    seed: u64,
    model: PhaseModel,
) -> Result<EmpiricalReport<T>> {
    let (params, t) = campaign_guard(params, rounds)?;
    let kernel = RoundKernel::new(&params, phase, alpha, t, model)?;
    let seeds = StreamSeed::new(seed);
    let batches = rounds.div_ceil(BATCH_ROUNDS);

    let partials: Vec<Partial<T>> = (0..batches)
        .into_par_iter()
        .map(|batch| run_batch(&kernel, &seeds, batch, rounds))
        .collect();
    let mut total = Partial::zero();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.finalize(alpha, params.n0))
}

/// Like [`run_campaign_at`] with the displacement solved from the
/// configured error rate target. An infeasible phase noise budget is a
/// domain error here, since the campaign cannot transmit without an
/// amplitude.
pub fn run_campaign<T: Real>(
    params: &SystemParams<T>,
    phase: &PhaseNoiseBudget<T>,
    rounds: u64,
    seed: u64,
    model: PhaseModel,
) -> Result<EmpiricalReport<T>> {
    let (params, t) = campaign_guard(params, rounds)?;
    let solution = solve_displacement(&params, phase, t)?;
    let Some(alpha) = solution.alpha else {
        return Err(Error::Domain {
            op: "run_campaign",
            detail: "no displacement amplitude meets the error rate target under this phase noise budget"
                .into(),
        });
    };
    run_campaign_at(&params, phase, alpha, rounds, seed, model)
}

/// Sequential variant of [`run_campaign`] that also streams every round to
/// `sink` as CSV with 17 significant digits per float. The summary is
/// bit-identical to the parallel campaign with the same seed because both
/// fold the same batches in the same order.
pub fn run_campaign_dump<T: Real, W: Write>(
    params: &SystemParams<T>,
    phase: &PhaseNoiseBudget<T>,
    rounds: u64,
    seed: u64,
    model: PhaseModel,
    sink: &mut W,
) -> Result<EmpiricalReport<T>> {
    let (params, t) = campaign_guard(params, rounds)?;
    let solution = solve_displacement(&params, phase, t)?;
    let Some(alpha) = solution.alpha else {
        return Err(Error::Domain {
            op: "run_campaign_dump",
            detail: "no displacement amplitude meets the error rate target under this phase noise budget"
                .into(),
        });
    };
    let kernel = RoundKernel::new(&params, phase, alpha, t, model)?;
    let seeds = StreamSeed::new(seed);
    let batches = rounds.div_ceil(BATCH_ROUNDS);

    writeln!(sink, "round,m_a,n_a,x_a,p_a,x_r,p_r,m_b,n_b,x_b,p_b,theta")?;
    let mut total = Partial::zero();
    let mut round_idx: u64 = 0;
    for batch in 0..batches {
        let mut rng = seeds.stream(batch);
        let count = BATCH_ROUNDS.min(rounds - batch * BATCH_ROUNDS);
        let mut partial = Partial::zero();
        for _ in 0..count {
            let rec = kernel.round(&mut rng);
            let ideal_x = rec.x_a + bit_sign::<T>(rec.m_a) * kernel.alpha;
            let ideal_p = rec.p_a + bit_sign::<T>(rec.n_a) * kernel.alpha;
            partial.add(&rec, ideal_x, ideal_p);
            writeln!(
                sink,
                "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.16e},{:.16e}",
                round_idx,
                rec.m_a,
                rec.n_a,
                rec.x_a,
                rec.p_a,
                rec.x_r,
                rec.p_r,
                rec.m_b,
                rec.n_b,
                rec.x_b,
                rec.p_b,
                rec.theta
            )?;
            round_idx += 1;
        }
        total.merge(&partial);
    }
    Ok(total.finalize(alpha, params.n0))
}
