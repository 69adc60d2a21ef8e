//! Property tests for the algebraic invariants of the model.
//!
//! These complement the pinned-value unit tests: instead of checking known
//! numbers they check relations that must hold across the whole parameter
//! space, with inputs drawn by proptest.

use proptest::prelude::*;

use sqcc_core::classical::{max_tolerable_phase_noise, qpsk_ber, solve_displacement, w_factor};
use sqcc_core::erf::erfc;
use sqcc_core::keyrate::key_rate;
use sqcc_core::noise::assemble;
use sqcc_core::phase::{rotate, wrap_angle};
use sqcc_core::rng::StreamSeed;
use sqcc_core::sim::{decode, prepare, transmit_and_measure, PhaseModel};
use sqcc_core::{channel_transmittance, PhaseNoiseBudget64, QuadraturePair64, SystemParams64};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// A feasible operating point: the drawn phase noise total stays below the
/// tolerable maximum of the hardest error rate target in the range, so the
/// displacement always solves.
fn feasible_point() -> impl Strategy<Value = (SystemParams64, PhaseNoiseBudget64)> {
    (
        (0.1f64.ln())..(30f64.ln()),
        0.0f64..150.0,
        0.25f64..1.0,
        0.0f64..0.5,
        0.0f64..0.05,
        (1e-11f64.ln())..(1e-2f64.ln()),
        0.0f64..5e-3,
        0.0f64..5e-3,
    )
        .prop_map(|(ln_va, l, eta, v_el, eps0, ln_ber, si, sb)| {
            let mut p = SystemParams64::baseline();
            p.v_a = ln_va.exp();
            p.length_km = l;
            p.eta = eta;
            p.v_el = v_el;
            p.eps0 = eps0;
            p.ber_target = ln_ber.exp();
            let p = p.validated().expect("drawn parameters are in range");
            let phase = PhaseNoiseBudget64::new(si, sb).expect("drawn budget is in range");
            (p, phase)
        })
}

proptest! {
    #[test]
    fn transmittance_composes_over_spans(
        gamma in 0.01f64..1.0,
        l1 in 0.0f64..100.0,
        l2 in 0.0f64..100.0,
    ) {
        let whole = channel_transmittance(gamma, l1 + l2).unwrap();
        let split = channel_transmittance(gamma, l1).unwrap()
            * channel_transmittance(gamma, l2).unwrap();
        prop_assert!(rel(whole, split) < 1e-12);
    }

    #[test]
    fn wrapped_angles_live_in_the_half_open_interval(
        phi in -50.0f64..50.0,
        k in -5i32..5,
    ) {
        let w = wrap_angle(phi);
        prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
        // Distance on the circle: inputs that straddle the seam wrap to
        // opposite endpoints while being the same angle.
        let shifted = wrap_angle(phi + 2.0 * std::f64::consts::PI * f64::from(k));
        let d = (shifted - w).abs();
        let d = d.min(2.0 * std::f64::consts::PI - d);
        prop_assert!(d < 1e-9, "w = {w}, shifted = {shifted}");
    }

    #[test]
    fn rotation_preserves_norm_and_inverts(
        x in -10.0f64..10.0,
        p in -10.0f64..10.0,
        phi in -10.0f64..10.0,
    ) {
        let q = QuadraturePair64::new(x, p).unwrap();
        let r = rotate(q, phi);
        prop_assert!(rel(r.x * r.x + r.p * r.p, x * x + p * p) < 1e-12);
        let back = rotate(r, -phi);
        prop_assert!((back.x - x).abs() < 1e-12 * (1.0 + x.abs()));
        prop_assert!((back.p - p).abs() < 1e-12 * (1.0 + p.abs()));
    }

    #[test]
    fn margin_factor_inverts_the_error_rate(ln_c in (1e-11f64.ln())..(0.49f64.ln())) {
        let c = ln_c.exp();
        let w = w_factor(c).unwrap();
        let round_trip = erfc(w) / 2.0;
        prop_assert!(
            ((round_trip - c) / c).abs() < 1e-10,
            "c = {c}, round trip = {round_trip}"
        );
    }

    #[test]
    fn solved_amplitude_reproduces_its_target((params, phase) in feasible_point()) {
        let t = params.transmittance().unwrap();
        let solution = solve_displacement(&params, &phase, t).unwrap();
        let alpha = solution.alpha.expect("the strategy only yields feasible points");
        let noise = assemble(&params, &phase, alpha, t).unwrap();
        let ber = qpsk_ber(alpha, t, params.eta, noise.n_tot, params.n0).unwrap();
        prop_assert!(
            ((ber - params.ber_target) / params.ber_target).abs() < 1e-9,
            "target {}, realized {ber}", params.ber_target
        );
    }

    #[test]
    fn infeasibility_matches_the_threshold((params, _) in feasible_point(), excess in 1.001f64..3.0) {
        // A budget strictly above the tolerable total must be infeasible,
        // one strictly below must solve.
        let t = params.transmittance().unwrap();
        let threshold = max_tolerable_phase_noise(params.ber_target).unwrap();
        let over = PhaseNoiseBudget64::new(threshold * excess, 0.0);
        prop_assume!(over.is_ok());
        let sol = solve_displacement(&params, &over.unwrap(), t).unwrap();
        prop_assert!(!sol.feasible());

        let under = PhaseNoiseBudget64::new(threshold / excess / 1.001, 0.0).unwrap();
        let sol = solve_displacement(&params, &under, t).unwrap();
        prop_assert!(sol.feasible());
    }

    #[test]
    fn untrusted_line_noise_ignores_the_trusted_budget(
        (params, phase) in feasible_point(),
        sb_other in 0.0f64..5e-3,
    ) {
        // With the amplitude held fixed, the channel-side noise must not
        // move when only the trusted (receiver-side) variance changes, and
        // the receiver-side noise must not move when only the untrusted
        // variance changes.
        let t = params.transmittance().unwrap();
        let alpha = solve_displacement(&params, &phase, t).unwrap().alpha.unwrap();
        let swapped_b = PhaseNoiseBudget64::new(phase.sigma_i, sb_other).unwrap();
        let a = assemble(&params, &phase, alpha, t).unwrap();
        let b = assemble(&params, &swapped_b, alpha, t).unwrap();
        prop_assert_eq!(a.chi_line, b.chi_line);

        let swapped_i = PhaseNoiseBudget64::new(sb_other, phase.sigma_b).unwrap();
        let c = assemble(&params, &swapped_i, alpha, t).unwrap();
        prop_assert_eq!(a.chi_het, c.chi_het);
    }

    #[test]
    fn decision_noise_grows_with_every_source(
        (params, phase) in feasible_point(),
        bump in 1e-4f64..0.1,
    ) {
        let t = params.transmittance().unwrap();
        let alpha = solve_displacement(&params, &phase, t).unwrap().alpha.unwrap();
        let base = assemble(&params, &phase, alpha, t).unwrap().n_tot;

        let mut p = params;
        p.v_el += bump;
        prop_assert!(assemble(&p, &phase, alpha, t).unwrap().n_tot > base);

        let mut p = params;
        p.eps0 += bump;
        prop_assert!(assemble(&p, &phase, alpha, t).unwrap().n_tot > base);

        let noisier = PhaseNoiseBudget64::new(phase.sigma_i + bump * 1e-2, phase.sigma_b).unwrap();
        prop_assert!(assemble(&params, &noisier, alpha, t).unwrap().n_tot > base);

        let noisier = PhaseNoiseBudget64::new(phase.sigma_i, phase.sigma_b + bump * 1e-2).unwrap();
        prop_assert!(assemble(&params, &noisier, alpha, t).unwrap().n_tot > base);
    }

    #[test]
    fn spectra_satisfy_their_characteristic_equations((params, phase) in feasible_point()) {
        let report = key_rate(&params, &phase).unwrap();
        let detail = report.detail.expect("feasible point");
        let h = detail.holevo;
        let [l1, l2, l3, l4, l5] = h.lambdas;
        prop_assert_eq!(l5, 1.0);
        for l in [l1, l2, l3, l4] {
            prop_assert!(l >= 1.0 - 1e-9, "eigenvalue {l}");
        }
        prop_assert!(rel(l1 * l1 + l2 * l2, h.coeffs.a) < 1e-9);
        prop_assert!(rel(l1 * l1 * l2 * l2, h.coeffs.b) < 1e-9);
        prop_assert!(rel(l3 * l3 + l4 * l4, h.coeffs.c) < 1e-9);
        prop_assert!(rel(l3 * l3 * l4 * l4, h.coeffs.d) < 1e-9);
        prop_assert!(h.chi_be >= 0.0);
    }

    #[test]
    fn granular_round_decodes_its_own_scale(
        (params, phase) in feasible_point(),
        seed in any::<u64>(),
    ) {
        // Scaling and displacement removal must invert exactly whatever the
        // drawn link is, so the decoded symbol equals the over-the-wire
        // deviation rescaled, bit decisions aside.
        let t = params.transmittance().unwrap();
        let alpha = solve_displacement(&params, &phase, t).unwrap().alpha.unwrap();
        let mut rng = StreamSeed::new(seed).stream(0);
        let sym = prepare(params.v_a, alpha, params.n0, &mut rng).unwrap();
        let meas = transmit_and_measure(
            &sym, &params, &phase, t, alpha, PhaseModel::ExactRotation, &mut rng,
        ).unwrap();
        let dec = decode(meas.x_r, meas.p_r, alpha, t, params.eta).unwrap();
        let scale = (2.0 / (t * params.eta)).sqrt();
        let sign = if dec.m_b == 0 { 1.0 } else { -1.0 };
        prop_assert_eq!(dec.x_b, scale * meas.x_r - sign * alpha);
    }
}
