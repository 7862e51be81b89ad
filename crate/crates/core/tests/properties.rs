use multibump::coupling::{classify_beta, CouplingParams, WindowClass};
use multibump::expansion::{sign_changing_expansion, sync_expansion, sync_terms, ExpansionConstants, InteractionBasis, PotentialParams};
use multibump::geometry::{cross_distance, BumpConfiguration};
use multibump::harness::parse_config;
use multibump::reduced::{plant_root, solve_contraction, solve_newton, ContractionOptions, GradientForm, NewtonOptions, ReducedProblem, Window};
use proptest::prelude::*;

fn constants() -> ExpansionConstants {
    let mut c = ExpansionConstants::zero(InteractionBasis::ExactDistance);
    (c.a0, c.a1, c.a2, c.c_beta, c.d_beta) = (75.6, 18.9, 18.9, 185.0, 185.0);
    c
}

proptest! {
    #[test]
    fn amplitudes_solve_the_linear_system(mu1 in 0.2f64..5.0, mu2 in 0.2f64..5.0, u in 0.05f64..0.95) {
        let beta = -(mu1 * mu2).sqrt() * u;
        let c = CouplingParams::new(mu1, mu2, beta).unwrap();
        prop_assert_eq!(c.window_class, WindowClass::Repulsive);
        prop_assert!(c.amplitude_residual().unwrap() < 1e-12);
        prop_assert_eq!(classify_beta(mu2, mu1, beta), WindowClass::Repulsive);
    }

    #[test]
    fn exact_cross_distance_dominates(k in 2usize..100, r in 1.0f64..200.0, rho in 1.0f64..200.0, h in 0.0f64..0.99) {
        let d = cross_distance(k, r, rho, h);
        prop_assert!(d.exact >= d.approx_sine);
        if (r - rho).abs() < 1e-12 {
            prop_assert!((d.exact - d.approx_sine).abs() < 1e-12 * d.exact);
        }
    }

    #[test]
    fn sign_flip_only_touches_the_neighbor_term(l in 2usize..30, r in 10.0f64..100.0, h in 0.05f64..0.6) {
        let c = constants();
        let pot = PotentialParams { a: 1.0, m: 2.0, b: 1.0, n: 2.0 };
        let k = 2 * l;
        let gap = sign_changing_expansion(&c, &pot, l, r, h) - sync_expansion(&c, &pot, k, r, h);
        let expected = -2.0 * k as f64 * sync_terms(&c, &pot, k, r, h).neighbor;
        prop_assert!((gap - expected).abs() <= 1e-13 * sync_expansion(&c, &pot, k, r, h).abs());
        prop_assert!(gap >= 0.0);
    }

    #[test]
    fn configurations_round_trip_through_json(k in 2usize..40, r in 5.0f64..50.0, h in 0.05f64..0.9) {
        let cfg = BumpConfiguration::synchronized(k, r, h).unwrap();
        let back = BumpConfiguration::from_json(&cfg.to_json().unwrap()).unwrap();
        prop_assert_eq!(cfg, back);
    }
}

#[test]
fn planted_roots_through_the_public_api() {
    for k in [12, 25, 50, 90] {
        let (rc, hc) = Window::center(2.0, k);
        let (c, pot) = plant_root(k, 2.0, 1.05 * rc, 0.95 * hc, 40.0).unwrap();
        let p = ReducedProblem::new(c, pot, k, GradientForm::F1Exact).unwrap();
        let n = solve_newton(&p, (rc, hc), &NewtonOptions::default()).unwrap();
        let t = solve_contraction(&p, &ContractionOptions::default()).unwrap();
        assert!((n.r_star / (1.05 * rc) - 1.0).abs() < 1e-8);
        assert!((n.r_star / t.r_star - 1.0).abs() < 1e-6 && (n.h_star / t.h_star - 1.0).abs() < 1e-6);
        assert!(n.grad_norm < 1e-10);
    }
}

#[test]
fn default_config_hash_is_stable_under_formatting() {
    let a = parse_config("k = 8\nbeta = 0\n").unwrap();
    let b = parse_config("# comment\n  beta=0.0   # trailing\n\nk =8").unwrap();
    assert_eq!(a.hash(), b.hash());
    let c = parse_config("k = 8\nbeta = 0.1\n").unwrap();
    assert_ne!(a.hash(), c.hash());
}
