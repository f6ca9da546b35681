use proptest::prelude::*;

use coverlab_core::greedy::{build_dual_certificate, greedy_run, verify_certificate, TieBreak};
use coverlab_core::instances::{gen_random, Instance, ProblemMode, RequirementMode};
use coverlab_core::lp::kc::{brute_force_violation, most_violated};
use coverlab_core::lp::solve_relaxation;
use coverlab_core::oracles::brute_force_opt;
use coverlab_core::rounding::{finalize_schedule, round_with_alphas, trial_rng, EdgeAnalyzer};
use coverlab_core::kernels::{transform, Kernel};
use coverlab_core::tail_bounds::{exact_left_tail, p_bound, TailVariant};

fn small_instance() -> impl Strategy<Value = (Instance, ProblemMode)> {
    (2usize..=6, 1usize..=5, any::<u64>(), 0usize..3).prop_map(|(n, m, seed, kind)| {
        let (req, mode) = match kind {
            0 => (RequirementMode::AllOne, ProblemMode::Mssc),
            1 => (RequirementMode::Uniform, ProblemMode::Gmssc),
            _ => (RequirementMode::AllSize, ProblemMode::MinLatency),
        };
        (gen_random(n, m, n.min(3), req, seed).unwrap(), mode)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn relaxation_never_exceeds_opt((inst, mode) in small_instance()) {
        let lp = solve_relaxation(&inst, 1.0, mode).unwrap();
        let opt = brute_force_opt(&inst, 1.0).unwrap();
        prop_assert!(lp.objective <= opt.cost + 1e-6, "lp {} opt {}", lp.objective, opt.cost);
    }

    #[test]
    fn exchange_rule_matches_enumeration(
        ys in prop::collection::vec(0.0f64..1.0, 1..=10),
        u in 0.0f64..1.0,
        kf in 0.0f64..1.0,
    ) {
        let k = 1 + ((ys.len() as f64 - 1.0) * kf).round() as usize;
        let pairs: Vec<(usize, f64)> = ys.iter().copied().enumerate().collect();
        let (subset, v) = most_violated(k, &pairs, u);
        prop_assert!(subset.len() < k);
        prop_assert!((v - brute_force_violation(k, &ys, u)).abs() <= 1e-9);
    }

    #[test]
    fn strong_bound_dominates_exact_tail(probs in prop::collection::vec(0.0f64..=1.0, 1..=25), k in 1usize..=25) {
        let mean: f64 = probs.iter().sum();
        let gamma = mean / k as f64;
        prop_assume!(gamma >= 1.0);
        prop_assert!(exact_left_tail(&probs, k) <= p_bound(TailVariant::Strong, gamma) + 1e-12);
    }

    #[test]
    fn greedy_certificate_is_feasible(n in 2usize..=7, m in 1usize..=8, seed: u64, p in 1.0f64..3.0) {
        let inst = gen_random(n, m, n.min(3), RequirementMode::AllOne, seed).unwrap();
        let trace = greedy_run(&inst, p, TieBreak::LowestId).unwrap();
        let cert = build_dual_certificate(&inst, &trace);
        prop_assert!(verify_certificate(&cert, &inst, &trace).is_ok());
    }

    #[test]
    fn instance_text_roundtrips(n in 1usize..=8, m in 1usize..=6, seed: u64) {
        let inst = gen_random(n, m, n.min(4), RequirementMode::Uniform, seed).unwrap();
        let back = Instance::from_json(&inst.to_json_pretty()).unwrap();
        prop_assert_eq!(back.digest(), inst.digest());
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn finalized_schedule_is_a_permutation((inst, mode) in small_instance(), seed: u64) {
        let sol = solve_relaxation(&inst, 1.0, mode).unwrap();
        let kernel = Kernel::harmonic(2.0).unwrap();
        let masses: Vec<_> = sol.x.iter().map(|row| transform(kernel, row).unwrap()).collect();
        let mut rng = trial_rng(seed, 0);
        let alphas: Vec<f64> = (0..inst.n).map(|v| (v as f64 + 0.5) / inst.n as f64).collect();
        let tentative = round_with_alphas(&masses, &alphas);
        let mut order = finalize_schedule(&tentative, &mut rng).order;
        order.sort_unstable();
        prop_assert_eq!(order, (0..inst.n).collect::<Vec<_>>());
    }

    #[test]
    fn mssc_per_edge_factor_two(n in 2usize..=6, m in 1usize..=5, seed: u64) {
        let inst = gen_random(n, m, n.min(3), RequirementMode::AllOne, seed).unwrap();
        let sol = solve_relaxation(&inst, 1.0, ProblemMode::Mssc).unwrap();
        let an = EdgeAnalyzer::new(&inst, &sol, Kernel::harmonic(2.0).unwrap()).unwrap();
        for e in 0..inst.m() {
            let a = an.analyze(e, coverlab_core::rounding::CzForm::Mssc).unwrap();
            prop_assert!(a.c_z <= 2.0 * a.c_x + 1e-6, "edge {}: {} vs {}", e, a.c_z, a.c_x);
        }
    }
}
