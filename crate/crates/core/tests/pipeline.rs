use coverlab_core::instances::{gen_complete_uniform, gen_msvc_gap, gen_scaled_copies, Instance, ProblemMode};
use coverlab_core::lp::solve_relaxation;
use coverlab_core::oracles::{
    block_closed_form, brute_force_opt, gap_fractional_solution, gap_integral_cost, gap_lp_cost, preemptive_cost,
    uniform_block_schedule,
};
use coverlab_core::rounding::{run_on_solution, ExperimentConfig};
use coverlab_core::greedy::{greedy_run, TieBreak};

#[test]
fn relaxation_rounding_and_opt_agree_on_a_star() {
    let star = Instance::set_cover(5, &[&[0, 1], &[0, 2], &[0, 3], &[0, 4]]);
    let sol = solve_relaxation(&star, 1.0, ProblemMode::Msvc).unwrap();
    let opt = brute_force_opt(&star, 1.0).unwrap();
    assert_eq!(opt.cost, 4.0);
    assert!(sol.objective <= opt.cost + 1e-9);
    let report = run_on_solution(&star, &sol, &ExperimentConfig::new(ProblemMode::Msvc, 1.0, 20_000, 4)).unwrap();
    assert!(report.mean_cost >= opt.cost - 1e-9);
    assert!(report.ratio <= 16.0 / 9.0 + 3.0 * report.ratio_ci99);
}

#[test]
fn small_gap_family_matches_exact_solvers() {
    let fam = gen_msvc_gap(7, 0.05, 1).unwrap();
    assert_eq!(fam.sizes, vec![7]);
    let (_, _, frac) = gap_fractional_solution(&fam).unwrap();
    assert!((frac.objective - gap_lp_cost(&fam.sizes)).abs() < 1e-9);
    let opt = brute_force_opt(&fam.instance, 1.0).unwrap();
    assert_eq!(gap_integral_cost(&fam.sizes) as f64, opt.cost);
    let lp = solve_relaxation(&fam.instance, 1.0, ProblemMode::Msvc).unwrap();
    assert!(lp.objective <= frac.objective + 1e-6);
}

#[test]
fn block_schedule_and_greedy_on_scaled_copies() {
    let base = gen_complete_uniform(6, 3).unwrap();
    let copies = gen_scaled_copies(&base, 3, 2.0).unwrap();
    let block = uniform_block_schedule(&copies, 2).unwrap();
    let cost = preemptive_cost(&block.schedule, &copies.instance).unwrap();
    assert!((cost.total - block_closed_form(&copies, 2)).abs() <= 1e-9);
    let greedy = greedy_run(&copies.instance, 1.0, TieBreak::LowestId).unwrap();
    assert!(greedy.g_pow.is_finite() && greedy.g_pow > 0.0);
}
