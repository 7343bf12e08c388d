use std::collections::HashMap;

use proptest::prelude::*;
use qubo_forge::analysis::{analyze, cumulative_distribution, p_range, sample_is_valid, tts, AnalysisOptions};
use qubo_forge::compiler::{compile, CompileConfig, QuboModel};
use qubo_forge::expression::{Monomial, Polynomial};
use qubo_forge::problem::{Direction, Problem};
use qubo_forge::solvers::{next_lambda, solve, QaoaParams, SaParams, SolverKind, SolverParams, UpdateKind};

/// Unconstrained model over `n` binaries with integer coefficients.
fn qubo(n: usize, terms: &[(usize, usize, i32)]) -> QuboModel {
    let mut problem = Problem::new();
    let names = problem.add_binary_array("b", &[n]).unwrap();
    let p = Polynomial::from_terms(
        terms.iter().map(|&(i, j, c)| (Monomial::from_vars([names[i % n].as_str(), names[j % n].as_str()]), f64::from(c))),
    );
    problem.add_objective_poly(p, Direction::Minimize, 1.0).unwrap();
    compile(&problem, &CompileConfig::default()).unwrap()
}

fn random_qubo(max_n: usize) -> impl Strategy<Value = QuboModel> {
    (2..=max_n, prop::collection::vec((0usize..16, 0usize..16, -6i32..7), 1..20))
        .prop_map(|(n, terms)| qubo(n, &terms))
}

fn quick() -> SolverParams {
    SolverParams { runs: 8, sa: SaParams { sweeps: 100, ..SaParams::default() }, ..SolverParams::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn heuristics_never_beat_the_oracle(model in random_qubo(10), seed in any::<u64>()) {
        let exact = solve(&model, SolverKind::Exhaustive, &SolverParams::default()).unwrap();
        let params = SolverParams { seed, ..quick() };
        let sa = solve(&model, SolverKind::Sa, &params).unwrap();
        prop_assert!(sa.best_energy >= exact.best_energy - 1e-9);
        if model.num_binaries() <= 6 {
            let qaoa = solve(&model, SolverKind::Qaoa, &SolverParams { qaoa: QaoaParams { layers: 1, shots: 20, ..QaoaParams::default() }, ..params }).unwrap();
            prop_assert!(qaoa.best_energy >= exact.best_energy - 1e-9);
        }
        for set in [&exact, &sa] {
            for s in &set.samples {
                let bits: HashMap<String, u8> = s.bit_map(&set.variables);
                prop_assert!((model.energy(&bits).unwrap() - s.energy).abs() < 1e-9);
            }
            let min = set.energies().into_iter().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(set.best_energy, min);
            prop_assert_eq!(set.best_sample().energy, min);
        }
    }

    #[test]
    fn seeds_reproduce_solutions(model in random_qubo(8), seed in any::<u64>()) {
        let params = SolverParams { seed, qaoa: QaoaParams { layers: 1, shots: 30, ..QaoaParams::default() }, ..quick() };
        for kind in [SolverKind::Sa, SolverKind::Qaoa] {
            prop_assert_eq!(solve(&model, kind, &params).unwrap(), solve(&model, kind, &params).unwrap());
        }
    }
}

proptest! {
    #[test]
    fn lambda_updates_increase_until_the_cap(lambda in 1e-3f64..1e3, max_exp in 1i32..6, trials in 2usize..10) {
        let lambda_max = 10f64.powi(max_exp);
        for kind in [UpdateKind::Sequential, UpdateKind::Scaled, UpdateKind::BinarySearch] {
            let next = next_lambda(kind, lambda, lambda_max, trials);
            prop_assert!(next <= lambda_max.max(lambda));
            if lambda < lambda_max {
                prop_assert!(next > lambda, "{kind}: {lambda} -> {next}");
            } else {
                prop_assert_eq!(next, lambda);
            }
        }
    }

    #[test]
    fn tts_falls_as_success_rises(t_f in 1e-3f64..10.0, conf in 0.5f64..0.999, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(tts(t_f, conf, hi) <= tts(t_f, conf, lo));
    }

    #[test]
    fn cumulative_steps_rise_to_one(energies in prop::collection::vec(-20i32..20, 1..60)) {
        let e: Vec<f64> = energies.iter().map(|&x| f64::from(x) / 2.0).collect();
        let steps = cumulative_distribution(&e);
        prop_assert!(steps.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        prop_assert_eq!(steps.last().unwrap().1, 1.0);
        for &(energy, frac) in &steps {
            let at_or_below = e.iter().filter(|&&x| x <= energy).count() as f64 / e.len() as f64;
            prop_assert!((frac - at_or_below).abs() < 1e-12);
        }
        let r = p_range(&e, 0.0);
        prop_assert!((0.0..=100.0).contains(&r));
    }
}

#[test]
fn report_metrics_recount_from_samples() {
    let mut problem = Problem::new();
    let x = problem.add_binary_array("x", &[4]).unwrap();
    problem.add_objective(&format!("-3*{} - 2*{} - 4*{} - {}", x[0], x[1], x[2], x[3]), Direction::Minimize, 1.0).unwrap();
    problem.add_constraint(&format!("2*{} + {} + 3*{} + 2*{} <= 4", x[0], x[1], x[2], x[3])).unwrap();
    let model = compile(&problem, &CompileConfig::default()).unwrap();
    let params = SolverParams { runs: 60, sa: SaParams { sweeps: 20, ..SaParams::default() }, seed: 3, ..SolverParams::default() };
    let solution = solve(&model, SolverKind::Sa, &params).unwrap();
    let options = AnalysisOptions { val_ref: Some(-5.0), ..AnalysisOptions::default() };
    let report = analyze(&problem, &model, &solution, &options).unwrap();
    let valid = solution.samples.iter().filter(|s| sample_is_valid(s, &problem, &model, false).unwrap()).count();
    assert_eq!(report.valid_rate, 100.0 * valid as f64 / 60.0);
    assert_eq!(report.p_range, Some(p_range(&solution.energies(), -5.0)));
    assert_eq!(report.cumulative, cumulative_distribution(&solution.energies()));
}

/// Median best energy over 30 paired seeds does not get worse with twice
/// the sweeps.
#[test]
fn more_sweeps_do_not_hurt() {
    let terms: Vec<(usize, usize, i32)> =
        (0..14).flat_map(|i| [(i, (i + 1) % 14, 5 - (i as i32 % 7) * 2), (i, (i + 5) % 14, 3 - (i as i32 % 4) * 2), (i, i, -2)]).collect();
    let model = qubo(14, &terms);
    let median = |sweeps: usize| {
        let mut best: Vec<f64> = (0..30)
            .map(|seed| {
                let params = SolverParams { runs: 1, seed, sa: SaParams { sweeps, ..SaParams::default() }, ..SolverParams::default() };
                solve(&model, SolverKind::Sa, &params).unwrap().best_energy
            })
            .collect();
        best.sort_by(f64::total_cmp);
        (best[14] + best[15]) / 2.0
    };
    for sweeps in [2, 5, 20] {
        let (short, long) = (median(sweeps), median(2 * sweeps));
        assert!(long <= short, "{sweeps} sweeps: {short}, {} sweeps: {long}", 2 * sweeps);
    }
}
