use qubo_forge::analysis::{analyze, check_constraints, objective_values, AnalysisOptions};
use qubo_forge::compiler::{compile, CompileConfig, LambdaMethod};
use qubo_forge::problem::{Direction, Problem};
use qubo_forge::solvers::{solve, solve_with_lambda_update, SolverKind, SolverParams, UpdateKind, UpdateStrategy};

fn worked_example() -> Problem {
    let mut p = Problem::new();
    p.add_binary("a").unwrap();
    p.add_discrete("b", &[-1.0, 1.0, 3.0]).unwrap();
    p.add_continuous("c", -2.0, 2.0, 0.25).unwrap();
    p.add_objective("a + b*c + c**2", Direction::Minimize, 1.0).unwrap();
    p.add_constraint("b + c >= 2").unwrap();
    p
}

fn knapsack(values: &[f64], weights: &[f64], capacity: f64) -> Problem {
    let mut p = Problem::new();
    let names = p.add_binary_array("obj", &[values.len()]).unwrap();
    let obj: Vec<String> = names.iter().zip(values).map(|(n, v)| format!("{v}*{n}")).collect();
    p.add_objective(&obj.join(" + "), Direction::Maximize, 1.0).unwrap();
    let w: Vec<String> = names.iter().zip(weights).map(|(n, v)| format!("{v}*{n}")).collect();
    p.add_constraint(&format!("{} <= {capacity}", w.join(" + "))).unwrap();
    p
}

fn f3() -> Problem {
    knapsack(&[9.0, 11.0, 13.0, 15.0], &[6.0, 5.0, 9.0, 7.0], 20.0)
}

#[test]
fn worked_example_exhaustive() {
    let p = worked_example();
    let m = compile(&p, &CompileConfig::default()).unwrap();
    let s = solve(&m, SolverKind::Exhaustive, &SolverParams::default()).unwrap();
    assert_eq!(s.best_energy, -2.0);
    let d = s.best_decoded();
    assert_eq!((d["a"], d["b"], d["c"]), (0.0, 3.0, -1.0));
    let checks = check_constraints(d, &p, &m).unwrap();
    assert!(checks.iter().all(|c| c.satisfied && c.residual == 0.0));
    assert_eq!(objective_values(d, &p).unwrap(), vec![-2.0]);
    let report = analyze(&p, &m, &s, &AnalysisOptions::default()).unwrap();
    assert!(report.best_feasible);
}

fn exhaustive_best_is_feasible(problem: &Problem, method: LambdaMethod) -> bool {
    let m = compile(problem, &CompileConfig::with_lambda(method)).unwrap();
    let s = solve(&m, SolverKind::Exhaustive, &SolverParams::default()).unwrap();
    analyze(problem, &m, &s, &AnalysisOptions::default()).unwrap().best_feasible
}

#[test]
fn sufficient_lambda_methods_keep_the_optimum_feasible() {
    let shared = [LambdaMethod::Mqc, LambdaMethod::Vlm, LambdaMethod::UbNaive, LambdaMethod::UbPosiform];
    for method in shared {
        assert!(exhaustive_best_is_feasible(&worked_example(), method.clone()), "{method} worked example");
        assert!(exhaustive_best_is_feasible(&f3(), method.clone()), "{method} knapsack");
    }
    assert!(exhaustive_best_is_feasible(&worked_example(), LambdaMethod::Momc));
}

#[test]
fn momc_is_too_small_for_the_knapsack() {
    let m = compile(&f3(), &CompileConfig::with_lambda(LambdaMethod::Momc)).unwrap();
    assert!((m.lambdas()[0] - 15.0 / 39.0).abs() < 1e-12);
    assert!(!exhaustive_best_is_feasible(&f3(), LambdaMethod::Momc));
}

#[test]
fn moc_is_too_small_for_the_worked_example() {
    let p = worked_example();
    let m = compile(&p, &CompileConfig::with_lambda(LambdaMethod::Moc)).unwrap();
    let s = solve(&m, SolverKind::Exhaustive, &SolverParams::default()).unwrap();
    assert!(s.best_energy < -2.0);
    let report = analyze(&p, &m, &s, &AnalysisOptions::default()).unwrap();
    assert!(!report.best_feasible);
}

#[test]
fn knapsack_exhaustive_and_sa() {
    let p = f3();
    let m = compile(&p, &CompileConfig::default()).unwrap();
    assert_eq!(m.num_binaries(), 9);
    let s = solve(&m, SolverKind::Exhaustive, &SolverParams::default()).unwrap();
    assert_eq!(s.best_energy, -35.0);
    assert_eq!(objective_values(s.best_decoded(), &p).unwrap(), vec![35.0]);
    let exact = analyze(&p, &m, &s, &AnalysisOptions { val_ref: Some(-30.0), ..Default::default() }).unwrap();
    assert_eq!((exact.p_range, exact.valid_rate), (Some(100.0), 100.0));
    let sa = solve(&m, SolverKind::Sa, &SolverParams { seed: 7, ..SolverParams::default() }).unwrap();
    let hits = sa.energies().iter().filter(|&&e| e == -35.0).count();
    let report = analyze(&p, &m, &sa, &AnalysisOptions { val_ref: Some(-30.0), ..Default::default() }).unwrap();
    assert!(hits >= 50, "{hits}");
    assert!(report.valid_rate >= 90.0, "{}", report.valid_rate);
}

#[test]
fn small_knapsacks() {
    let p = knapsack(&[5.0, 10.0], &[2.0, 3.0], 4.0);
    let m = compile(&p, &CompileConfig::default()).unwrap();
    let s = solve(&m, SolverKind::Exhaustive, &SolverParams::default()).unwrap();
    assert_eq!(objective_values(s.best_decoded(), &p).unwrap(), vec![10.0]);
    let p = knapsack(&[5.0], &[30.0], 20.0);
    let m = compile(&p, &CompileConfig::default()).unwrap();
    let s = solve(&m, SolverKind::Exhaustive, &SolverParams::default()).unwrap();
    assert_eq!(objective_values(s.best_decoded(), &p).unwrap(), vec![0.0]);
}

#[test]
fn underweighted_knapsack_recovers() {
    let p = f3();
    let config = CompileConfig::with_lambda(LambdaMethod::Manual(vec![0.01]));
    let strategy = UpdateStrategy::new(UpdateKind::Sequential, 1e4, 5);
    let params = SolverParams { seed: 1, ..SolverParams::default() };
    let run = solve_with_lambda_update(&p, &config, SolverKind::Sa, &params, Some(&strategy)).unwrap();
    assert!(run.feasible, "{:?}", run.history);
    assert!(run.trials <= 5);
    assert!(run.trials > 1);
}

#[test]
fn qaoa_on_worked_example() {
    let p = worked_example();
    let m = compile(&p, &CompileConfig::default()).unwrap();
    let s = solve(&m, SolverKind::Qaoa, &SolverParams::default()).unwrap();
    assert!(s.best_energy >= -2.0);
    let q = s.qaoa.as_ref().unwrap();
    assert!(q.expected_energy < q.uniform_energy);
}

#[test]
fn artifacts_survive_the_file_system() {
    use qubo_forge::analysis::{load_report, save_report, SolutionReport};
    use qubo_forge::compiler::QuboModel;
    use qubo_forge::problem_file::{load_problem, save_problem};

    let dir = tempfile::tempdir().unwrap();
    let problem = worked_example();
    save_problem(&dir.path().join("p.json"), &problem, None).unwrap();
    let (loaded, section) = load_problem(&dir.path().join("p.json")).unwrap();
    assert_eq!(loaded, problem);
    assert!(section.is_none());

    let model = compile(&problem, &CompileConfig::default()).unwrap();
    model.save(&dir.path().join("m.json")).unwrap();
    assert_eq!(QuboModel::load(&dir.path().join("m.json")).unwrap(), model);

    let solution = solve(&model, SolverKind::Exhaustive, &SolverParams::default()).unwrap();
    let report = analyze(&problem, &model, &solution, &AnalysisOptions::default()).unwrap();
    let saved = SolutionReport::new(solution, report, model.lambdas());
    save_report(&dir.path().join("s.json"), &saved).unwrap();
    let back = load_report(&dir.path().join("s.json")).unwrap();
    assert_eq!(back.solution.best_energy, -2.0);
    assert_eq!(back.lambdas, saved.lambdas);
    assert_eq!(back.report.valid_rate, saved.report.valid_rate);
}
