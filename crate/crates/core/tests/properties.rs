//! Cross-module invariants on randomly generated instances.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secbeam::beamformer::PowerMinOptions;
use secbeam::channel::{substream, RandomScenario, ScenarioKind, SystemConfig};
use secbeam::conic::{random_sdp_pair, solve, ConicStatus, SolverOptions};
use secbeam::rate::solve_powermin;
use secbeam::scenario1::{build_deterministic, feasibility_check, solve_sdr, Feasibility};
use secbeam::scenario3::s3_forms;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn primal_and_dual_sdps_agree(seed in any::<u64>(), n in 2usize..5, k in 1usize..4) {
        let (p, d) = random_sdp_pair(&mut ChaCha8Rng::seed_from_u64(seed), n, k);
        let (ps, ds) = (solve(&p, &SolverOptions::default()), solve(&d, &SolverOptions::default()));
        prop_assert_eq!(ps.status, ConicStatus::Optimal);
        prop_assert_eq!(ds.status, ConicStatus::Optimal);
        prop_assert!((ps.primal_objective + ds.primal_objective).abs() <= 1e-6 * (1.0 + ps.primal_objective.abs()));
        prop_assert!(ps.primal_objective >= ps.dual_objective - 1e-7 * (1.0 + ps.primal_objective.abs()));
    }

    #[test]
    fn cost_scaling_scales_objective_only(seed in any::<u64>(), n in 2usize..5) {
        let (mut p, _) = random_sdp_pair(&mut ChaCha8Rng::seed_from_u64(seed), n, 2);
        let base = solve(&p, &SolverOptions::default());
        p.c.iter_mut().for_each(|c| *c *= 10.0);
        let scaled = solve(&p, &SolverOptions::default());
        prop_assert_eq!(base.status, ConicStatus::Optimal);
        prop_assert_eq!(scaled.status, ConicStatus::Optimal);
        let tol = 1e-6 * (1.0 + base.primal_objective.abs());
        prop_assert!((scaled.primal_objective - 10.0 * base.primal_objective).abs() <= 10.0 * tol);
    }

    #[test]
    fn necessity_and_sufficiency_of_feasibility_test(seed in any::<u64>(), n in 2usize..7, k in 1usize..4, rate in 0.2f64..3.0) {
        let cfg = SystemConfig::uniform(n, k, 1.0, 100.0, 0.1);
        let spec = RandomScenario { kind: ScenarioKind::StatisticalEcsi, eps_b: 0.0, eps_e: 0.3 }
            .draw(n, k, &mut substream(seed, &[], 0));
        let det = build_deterministic(&cfg, &spec, rate).unwrap();
        let verdict = feasibility_check(&det);
        let solved = solve_sdr(&det, &PowerMinOptions::default());
        if solved.is_ok() {
            prop_assert_ne!(verdict, Feasibility::NecessaryFails);
        }
        if verdict == Feasibility::SufficientHolds {
            prop_assert!(solved.is_ok(), "sufficient test passed but solve failed: {:?}", solved.err());
        }
    }

    #[test]
    fn joint_uncertainty_design_respects_restriction(seed in any::<u64>(), n in 2usize..5, k in 1usize..3) {
        let cfg = SystemConfig::uniform(n, k, 1.0, 100.0, 0.1);
        let spec = RandomScenario { kind: ScenarioKind::ImperfectBoth, eps_b: 0.01, eps_e: 0.05 }
            .draw(n, k, &mut substream(seed, &[], 0));
        if let Ok(sol) = solve_powermin(&cfg, &spec, 0.5, &PowerMinOptions::default()) {
            let sdp = sol.sdp_power.expect("relaxation value is reported");
            prop_assert!(sol.power >= sdp - 1e-7 * (1.0 + sdp));
            let w = sol.outer();
            for f in s3_forms(&cfg, &spec, 0.5).unwrap().fragments {
                prop_assert!(f.margin_at(&w) >= -1e-8 * (1.0 + sol.power));
            }
        }
    }

    #[test]
    fn lower_rates_stay_feasible(seed in any::<u64>(), n in 2usize..5) {
        let cfg = SystemConfig::uniform(n, 1, 1.0, 100.0, 0.1);
        let spec = RandomScenario { kind: ScenarioKind::ImperfectEcsi, eps_b: 0.0, eps_e: 0.1 }
            .draw(n, 1, &mut substream(seed, &[], 0));
        let opts = PowerMinOptions::default();
        let mut last = None;
        for rate in [2.0, 1.5, 1.0, 0.5] {
            match solve_powermin(&cfg, &spec, rate, &opts) {
                Ok(sol) => {
                    if let Some(p) = last {
                        prop_assert!(sol.power <= p * (1.0 + 1e-6));
                    }
                    last = Some(sol.power);
                }
                Err(e) => prop_assert!(last.is_none(), "rate {rate} failed after a higher rate succeeded: {e}"),
            }
        }
    }
}
