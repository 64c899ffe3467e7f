use hetune::annealer::AnnealParams;
use hetune::evaluators::{Evaluator, Oracle, OracleEvaluator, ReplayEvaluator};
use hetune::harness::{
    compare, compare_pair, gen_dataset, run_aml, run_em, train_model, CampaignReport, CompareRow, HarnessError, Method,
    Sampling, ValidationScheme,
};
use hetune::metrics::energy_efficiency;
use hetune::metrics::log::{read_log, LogError};
use hetune::space::ParameterSpace;
use hetune::surrogate::BoostParams;

fn ida() -> (ParameterSpace, OracleEvaluator) {
    let space = ParameterSpace::ida();
    let ev = OracleEvaluator::new("ida-pcc".parse().unwrap(), space.clone()).unwrap();
    (space, ev)
}

#[test]
fn em_covers_the_space() {
    let (space, ev) = ida();
    let report = run_em(&space, &ev).unwrap();
    assert_eq!(report.evaluations_used, 101);
    assert_eq!(report.records.len(), 101);
    assert_eq!(ev.evaluation_count(), 101);
    let max = report.records.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(report.best_value(), Some(max));
    assert_eq!(report.method, Method::Em);
    assert_eq!(report.budget_fraction, 1.0);
}

#[test]
fn emil_em_matches_an_independent_enumeration() {
    let space = ParameterSpace::emil();
    let ev = OracleEvaluator::new("emil-pm".parse().unwrap(), space.clone()).unwrap();
    let report = run_em(&space, &ev).unwrap();
    assert_eq!(report.evaluations_used, space.cardinality());

    let oracle = Oracle::new("emil-pm".parse().unwrap(), space.clone()).unwrap();
    let mut best: Option<(u64, f64)> = None;
    for i in 0..space.cardinality() {
        let v = energy_efficiency(&oracle.measure(&space.config_at(i).unwrap()).unwrap()).unwrap();
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (i, v) = best.unwrap();
    let top = report.best.unwrap();
    assert_eq!(top.value, v);
    assert_eq!(top.config, space.assignment(&space.config_at(i).unwrap()));
}

#[test]
fn aml_stays_within_budget_and_below_em() {
    let space = ParameterSpace::emil();
    let ev = OracleEvaluator::new("emil-pm".parse().unwrap(), space.clone()).unwrap();
    let em = run_em(&space, &ev).unwrap().best_value().unwrap();
    let budget = (0.07 * space.cardinality() as f64).round() as u64;
    for seed in 0..5 {
        let report = run_aml(&space, &ev, &AnnealParams::with_budget(budget, seed)).unwrap();
        assert!(report.evaluations_used <= budget + 3);
        assert_eq!(report.records.len() as u64, report.evaluations_used);
        assert_eq!(report.budget_fraction, report.evaluations_used as f64 / space.cardinality() as f64);
        let best = report.best_value().unwrap();
        assert!(best <= em);
        let trace = report.trace.as_ref().unwrap();
        for seed_step in &trace.steps[..2] {
            assert!(best >= seed_step.value);
        }
        let again = run_aml(&space, &ev, &AnnealParams::with_budget(budget, seed)).unwrap();
        assert_eq!(report.canonical_json(), again.canonical_json());
    }
}

#[test]
fn compare_examples() {
    let row = CompareRow::new("1024 x 4096", 2.072, 2.067);
    assert!((row.abs_difference - 0.005).abs() < 1e-12);
    // the published 0.00474 comes from unrounded values; both round to the table entries
    let row = CompareRow::new("1024 x 4096", 2.07174, 2.067);
    assert_eq!(format!("{:.5}", row.abs_difference), "0.00474");

    let row = CompareRow::new("emil", 44.97, 43.87);
    assert_eq!(format!("{:.2}", row.aml_fraction_of_em.unwrap()), "97.55");

    let same = CompareRow::new("x", 3.0, 3.0);
    assert_eq!((same.abs_difference, same.aml_fraction_of_em), (0.0, Some(100.0)));

    let swapped = CompareRow::new("x", 2.067, 2.072);
    let forward = CompareRow::new("x", 2.072, 2.067);
    assert_eq!(swapped.abs_difference, forward.abs_difference);
    assert_eq!(swapped.signed_difference, -forward.signed_difference);

    assert_eq!(CompareRow::new("z", 0.0, 1.0).aml_fraction_of_em, None);
}

#[test]
fn compare_rejects_mismatched_reports() {
    let (space, ev) = ida();
    let em = run_em(&space, &ev).unwrap();
    let aml = run_aml(&space, &ev, &AnnealParams::with_budget(20, 1)).unwrap();
    let row = compare_pair(&em, &aml).unwrap();
    assert!(row.aml_value <= row.em_value);

    let emil = ParameterSpace::emil();
    let other = CampaignReport::new(emil.name(), Method::Aml, "none".into(), emil.cardinality());
    assert!(matches!(compare_pair(&em, &other), Err(HarnessError::Mismatch(_))));
    let relabeled = aml.clone().with_label("elsewhere");
    assert!(compare_pair(&em, &relabeled).is_err());
    assert!(compare(std::slice::from_ref(&em), &[]).is_err());
    let cmp = compare(&[em], &[aml]).unwrap();
    assert_eq!(cmp.summary.rows, 1);
}

#[test]
fn generated_data_is_reproducible_and_replays_exactly() {
    let (space, ev) = ida();
    let full = gen_dataset(ev.oracle(), Sampling::Full, 0).unwrap();
    assert_eq!(full.len(), 101);
    let a = gen_dataset(ev.oracle(), Sampling::Random(30), 8).unwrap();
    let b = gen_dataset(ev.oracle(), Sampling::Random(30), 8).unwrap();
    let c = gen_dataset(ev.oracle(), Sampling::Random(30), 9).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let replay = ReplayEvaluator::new(space, a.clone());
    for m in &a {
        let direct = ev.evaluate(&m.config).unwrap();
        let replayed = replay.evaluate(&m.config).unwrap();
        assert!((direct - replayed).abs() <= 1e-9 * direct.abs());
    }
}

#[test]
fn training_schemes() {
    let space = ParameterSpace::emil();
    let oracle = Oracle::new("emil-pm".parse().unwrap(), space.clone()).unwrap();
    let rows = gen_dataset(&oracle, Sampling::Random(400), 1).unwrap();
    let params = BoostParams {
        n_estimators: 10,
        ..BoostParams::default()
    };

    let (_, split) = train_model(&space, &rows, &params, ValidationScheme::Split(0.8), 3).unwrap();
    assert_eq!((split.train_rows, split.test_rows), (Some(320), Some(80)));
    assert!(split.r2.is_some());

    let (m1, s1) = train_model(&space, &rows, &params, ValidationScheme::KFold(5), 3).unwrap();
    let (m2, s2) = train_model(&space, &rows, &params, ValidationScheme::KFold(5), 3).unwrap();
    assert_eq!(s1.folds.len(), 5);
    assert_eq!(s1, s2);
    assert_eq!(m1.to_json(), m2.to_json());
    assert_eq!(m1.training_rows(), 400);

    assert!(train_model(&space, &rows[..9], &params, ValidationScheme::KFold(5), 3).is_err());
}

#[test]
fn malformed_log_reports_the_line() {
    let space = ParameterSpace::ida();
    let text = "CPU-W,GPU-W,workload_mb,cpu_time_s,acc_time_s,cpu_energy_j,acc_energy_j,cpu_workload_mb,acc_workload_mb\n\
                100,0,1,1,0,1,0,1,0\n\
                50,50,1,1,1,x,1,0.5,0.5\n";
    match read_log(&space, text.as_bytes()) {
        Err(LogError::Format { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn reports_round_trip() {
    let (space, ev) = ida();
    let report = run_aml(&space, &ev, &AnnealParams::with_budget(30, 4)).unwrap().with_label("ida");
    let back = CampaignReport::from_json(&report.to_json()).unwrap();
    assert_eq!(back, report);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    report.save(&path).unwrap();
    assert_eq!(CampaignReport::load(&path).unwrap(), report);
}
