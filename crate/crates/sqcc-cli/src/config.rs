//! JSON description of a sweep run.
//!
//! A sweep evaluates every fiber length in `distances_km` against every
//! phase noise combination, in that nesting order, so row `i` of the output
//! corresponds to `(distances_km[i / combos], noise_combinations[i % combos])`.
//! Unknown fields are rejected so that a typo in a parameter name cannot
//! silently fall back to a default.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sqcc_core::keyrate::SearchSpec;
use sqcc_core::params::SHOT_NOISE_UNIT;
use sqcc_core::{Error, PhaseNoiseBudget64, Result, SystemParams64};

/// Fields that are physically infinite (a perfectly coherent laser, a fully
/// suppressed reference path) are written as the string `"inf"`, since JSON
/// has no infinity literal.
mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(v),
            Raw::Text(t) if t.trim().eq_ignore_ascii_case("inf") => Ok(f64::INFINITY),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got \"{t}\""
            ))),
        }
    }
}

/// One phase noise operating point: residual variance on the data
/// quadratures (untrusted) and shot-limited tracker variance (trusted).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseCombination {
    pub sigma_i: f64,
    pub sigma_b: f64,
}

impl NoiseCombination {
    pub fn budget(&self) -> Result<PhaseNoiseBudget64> {
        PhaseNoiseBudget64::new(self.sigma_i, self.sigma_b)
    }
}

/// What each output row contains beyond the closed-form columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Closed forms only, modulation variance optimized per row.
    #[default]
    Analytic,
    /// Closed forms at the configured modulation variance, plus simulated
    /// error rates and decision noise at that same operating point.
    Montecarlo,
    /// Optimized closed forms plus a simulation at the optimum.
    Both,
}

/// Link parameters shared by every row of a sweep. Field names and units
/// match [`sqcc_core::params::SystemParams`]; the fiber length comes from
/// `distances_km` instead, and the shot-noise normalization is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    /// Fiber attenuation, dB/km.
    pub gamma: f64,
    /// Receiver detection efficiency, in (0, 1].
    pub eta: f64,
    /// Receiver electronic noise variance, shot-noise units.
    pub v_el: f64,
    /// Reconciliation efficiency, in [0, 1].
    pub f_rec: f64,
    /// Gaussian modulation variance, shot-noise units. Starting point in
    /// the optimizing modes, the operating point in `montecarlo` mode.
    pub v_a: f64,
    /// Untrusted excess noise at the channel input, shot-noise units.
    pub eps0: f64,
    /// Reference pulse mean photon number at the receiver.
    pub n_ref: f64,
    /// Signal-to-reference delay, seconds.
    pub dt_s: f64,
    /// Transmitter laser coherence time, seconds. `"inf"` allowed.
    #[serde(with = "maybe_inf")]
    pub tau_c_s: f64,
    /// Amplitude extinction of the reference path, dB. `"inf"` allowed.
    #[serde(with = "maybe_inf")]
    pub xi_a_db: f64,
    /// Phase modulator extinction of the reference path, dB. `"inf"` allowed.
    #[serde(with = "maybe_inf")]
    pub xi_p_db: f64,
    /// Classical QPSK bit error rate target, in (0, 1/2).
    pub ber_target: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let b = SystemParams64::baseline();
        ParamsConfig {
            gamma: b.gamma,
            eta: b.eta,
            v_el: b.v_el,
            f_rec: b.f_rec,
            v_a: b.v_a,
            eps0: b.eps0,
            n_ref: b.n_ref,
            dt_s: b.dt_s,
            tau_c_s: b.tau_c_s,
            xi_a_db: b.xi_a_db,
            xi_p_db: b.xi_p_db,
            ber_target: b.ber_target,
        }
    }
}

impl ParamsConfig {
    /// Validated core parameters at zero fiber length.
    pub fn to_params(&self) -> Result<SystemParams64> {
        SystemParams64 {
            gamma: self.gamma,
            length_km: 0.0,
            eta: self.eta,
            v_el: self.v_el,
            f_rec: self.f_rec,
            v_a: self.v_a,
            eps0: self.eps0,
            n_ref: self.n_ref,
            dt_s: self.dt_s,
            tau_c_s: self.tau_c_s,
            xi_a_db: self.xi_a_db,
            xi_p_db: self.xi_p_db,
            ber_target: self.ber_target,
            n0: SHOT_NOISE_UNIT,
        }
        .validated()
    }
}

/// Modulation variance search interval, mirroring
/// [`sqcc_core::keyrate::SearchSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub lo: f64,
    pub hi: f64,
    pub rel_tol: f64,
    pub grid_points: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let s = SearchSpec::<f64>::default();
        SearchConfig {
            lo: s.lo,
            hi: s.hi,
            rel_tol: s.rel_tol,
            grid_points: s.grid_points,
        }
    }
}

impl From<SearchConfig> for SearchSpec<f64> {
    fn from(c: SearchConfig) -> Self {
        SearchSpec {
            lo: c.lo,
            hi: c.hi,
            rel_tol: c.rel_tol,
            grid_points: c.grid_points,
        }
    }
}

fn default_trials() -> u64 {
    1_000_000
}

/// Top-level sweep description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Fiber lengths to evaluate, km, in output order.
    pub distances_km: Vec<f64>,
    /// Phase noise operating points, crossed with every distance.
    pub noise_combinations: Vec<NoiseCombination>,
    #[serde(default)]
    pub mode: Mode,
    /// Simulated rounds per row in the simulating modes.
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Master seed; row `i` simulates with a seed derived from `(seed, i)`.
    #[serde(default)]
    pub seed: u64,
    /// CSV destination. Overridden by `--output`; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
}

impl SweepSpec {
    /// Template printed by `print-defaults`: the reference link over a few
    /// spans, crossed with the four phase noise combinations the model is
    /// normally quoted at.
    pub fn example() -> Self {
        SweepSpec {
            distances_km: vec![0.0, 5.0, 25.0, 50.0, 75.0, 100.0],
            noise_combinations: vec![
                NoiseCombination { sigma_i: 1e-5, sigma_b: 1e-3 },
                NoiseCombination { sigma_i: 1e-4, sigma_b: 1e-3 },
                NoiseCombination { sigma_i: 1e-5, sigma_b: 1e-2 },
                NoiseCombination { sigma_i: 1e-4, sigma_b: 1e-2 },
            ],
            mode: Mode::Analytic,
            trials: default_trials(),
            seed: 1,
            output: None,
            params: ParamsConfig::default(),
            search: None,
        }
    }

    /// Copy with defaults filled in and the output path cleared, so that the
    /// digest identifies the science content of the run and not where the
    /// file happened to land.
    pub fn resolved(&self) -> SweepSpec {
        let mut r = self.clone();
        r.output = None;
        r.search = Some(r.search.unwrap_or_default());
        r
    }

    /// Hex SHA-256 of the canonical JSON form of [`SweepSpec::resolved`].
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(&self.resolved())
            .expect("a sweep specification always serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in hasher.finalize() {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    /// Rejects anything that would fail partway through the sweep, so the
    /// caller can report a usage error before a single row is written.
    pub fn preflight(&self) -> Result<()> {
        if self.distances_km.is_empty() {
            return Err(Error::InvalidArgument {
                name: "distances_km",
                value: "[]".into(),
                requirement: "at least one distance",
            });
        }
        if self.noise_combinations.is_empty() {
            return Err(Error::InvalidArgument {
                name: "noise_combinations",
                value: "[]".into(),
                requirement: "at least one combination",
            });
        }
        for &d in &self.distances_km {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::InvalidArgument {
                    name: "distances_km",
                    value: format!("{d}"),
                    requirement: "finite and >= 0",
                });
            }
        }
        for combo in &self.noise_combinations {
            combo.budget()?;
        }
        self.params.to_params()?;
        if self.mode != Mode::Analytic && self.trials < 10_000 {
            return Err(Error::InvalidArgument {
                name: "trials",
                value: format!("{}", self.trials),
                requirement: "at least 10000 in the simulating modes",
            });
        }
        let search = self.search.unwrap_or_default();
        if !(search.lo > 0.0 && search.hi > search.lo && search.hi.is_finite()) {
            return Err(Error::InvalidArgument {
                name: "search.lo, search.hi",
                value: format!("({}, {})", search.lo, search.hi),
                requirement: "0 < lo < hi < inf",
            });
        }
        if !(search.rel_tol > 0.0 && search.rel_tol.is_finite()) {
            return Err(Error::InvalidArgument {
                name: "search.rel_tol",
                value: format!("{}", search.rel_tol),
                requirement: "finite and > 0",
            });
        }
        if search.grid_points < 3 {
            return Err(Error::InvalidArgument {
                name: "search.grid_points",
                value: format!("{}", search.grid_points),
                requirement: "at least 3",
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_round_trips_through_json() {
        let spec = SweepSpec::example();
        let text = serde_json::to_string_pretty(&spec).unwrap();
        let back: SweepSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        assert!(spec.preflight().is_ok());
    }

    #[test]
    fn infinity_spells_as_a_string() {
        let mut spec = SweepSpec::example();
        spec.params.tau_c_s = f64::INFINITY;
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"tau_c_s\":\"inf\""));
        let back: SweepSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.params.tau_c_s, f64::INFINITY);

        let upper = text.replace("\"inf\"", "\"INF\"");
        let back: SweepSpec = serde_json::from_str(&upper).unwrap();
        assert_eq!(back.params.tau_c_s, f64::INFINITY);

        let junk = text.replace("\"inf\"", "\"unbounded\"");
        assert!(serde_json::from_str::<SweepSpec>(&junk).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"distances_km":[1.0],"noise_combinations":[{"sigma_i":1e-5,"sigma_b":1e-3}],"bandwidth":7}"#;
        assert!(serde_json::from_str::<SweepSpec>(text).is_err());
        let text = r#"{"distances_km":[1.0],"noise_combinations":[{"sigma_i":1e-5,"sigma_b":1e-3}],"params":{"gama":0.2}}"#;
        assert!(serde_json::from_str::<SweepSpec>(text).is_err());
    }

    #[test]
    fn digest_ignores_the_output_path_only() {
        let mut a = SweepSpec::example();
        let mut b = a.clone();
        b.output = Some(PathBuf::from("/tmp/somewhere.csv"));
        assert_eq!(a.digest(), b.digest());

        // Filling in the default search leaves the digest alone; changing a
        // science field does not.
        b.search = Some(SearchConfig::default());
        assert_eq!(a.digest(), b.digest());
        a.seed = 99;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn preflight_catches_bad_grids() {
        let mut spec = SweepSpec::example();
        spec.distances_km = vec![];
        assert!(spec.preflight().is_err());

        let mut spec = SweepSpec::example();
        spec.distances_km = vec![10.0, f64::NAN];
        assert!(spec.preflight().is_err());

        let mut spec = SweepSpec::example();
        spec.noise_combinations[0].sigma_i = -1.0;
        assert!(spec.preflight().is_err());

        let mut spec = SweepSpec::example();
        spec.mode = Mode::Both;
        spec.trials = 100;
        assert!(spec.preflight().is_err());

        let mut spec = SweepSpec::example();
        spec.search = Some(SearchConfig { lo: 0.0, ..SearchConfig::default() });
        assert!(spec.preflight().is_err());
    }

    #[test]
    fn default_params_match_the_reference_configuration() {
        let p = ParamsConfig::default().to_params().unwrap();
        assert_eq!(p, SystemParams64::baseline().validated().unwrap());
    }
}
