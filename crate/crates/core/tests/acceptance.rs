//! Acceptance suite. Each test prints exactly one `criterion N: PASS|FAIL`
//! line before asserting, so `cargo test --test acceptance -- --nocapture`
//! doubles as a report.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use hetune::annealer::{acceptance_probability, anneal, AnnealParams, StepKind};
use hetune::evaluators::{
    CommandEvaluator, CommandOptions, EvalError, Evaluator, ModelEvaluator, Oracle, OracleEvaluator,
};
use hetune::harness::{
    compare, dataset_from_log, gen_dataset, run_aml, run_em, table3, train_model, Sampling,
    ValidationScheme,
};
use hetune::metrics::log::write_log;
use hetune::metrics::{
    derive_all, energy, energy_efficiency, exec_time, power, throughput, unit_throughputs, RawMeasurement,
};
use hetune::space::{Configuration, ParameterSpace};
use hetune::surrogate::{fit_boosted, kfold_cv, BoostParams, BoostedModel, Dataset, ModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Timing criteria share one CPU with the rest of the suite; run them one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: &str, pass: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn emil_oracle() -> OracleEvaluator {
    OracleEvaluator::new("emil-pm".parse().unwrap(), ParameterSpace::emil()).unwrap()
}

/// 5000 distinct emil-pm configurations, seed 11.
fn emil_dataset() -> Dataset {
    let space = ParameterSpace::emil();
    let oracle = Oracle::new("emil-pm".parse().unwrap(), space.clone()).unwrap();
    let rows = gen_dataset(&oracle, Sampling::Random(5000), 11).unwrap();
    dataset_from_log(&space, &rows).unwrap()
}

#[test]
fn criterion_1_surrogate_accuracy() {
    let _g = serial();
    let start = Instant::now();
    let data = emil_dataset();
    let v = kfold_cv(&data, &ModelSpec::Boosted(BoostParams::default()), 10, 5).unwrap();
    let elapsed = start.elapsed();
    let pass = data.len() >= 5000 && v.r2 >= 0.95 && !v.pooled && elapsed < Duration::from_secs(60);
    report(
        "1",
        pass,
        format!("rows={} mean 10-fold R2={:.4} (>= 0.95) time={:.1}s (< 60s)", data.len(), v.r2, elapsed.as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn criterion_2_budget_claim() {
    let _g = serial();
    let start = Instant::now();
    let space = ParameterSpace::emil();
    let oracle = emil_oracle();
    let em = run_em(&space, &oracle).unwrap();
    let optimum = em.best_value().unwrap();
    assert_eq!(em.evaluations_used, 14544);
    let budget = (0.07 * space.cardinality() as f64).round() as u64;
    let mut fractions = Vec::new();
    for seed in 0..30 {
        let aml = run_aml(&space, &oracle, &AnnealParams::with_budget(budget, seed)).unwrap();
        assert!(aml.evaluations_used <= budget + 3);
        fractions.push(aml.best_value().unwrap() / optimum);
    }
    let hits = fractions.iter().filter(|&&f| f >= 0.95).count();
    fractions.sort_by(f64::total_cmp);
    let median = (fractions[14] + fractions[15]) / 2.0;
    let elapsed = start.elapsed();
    let pass = hits >= 27 && median >= 0.97 && elapsed < Duration::from_secs(300);
    report(
        "2",
        pass,
        format!(
            "budget={budget} ({:.1}%) seeds>=95%: {hits}/30 (>= 27) median={:.2}% (>= 97%) worst={:.2}% time={:.1}s",
            100.0 * budget as f64 / space.cardinality() as f64,
            100.0 * median,
            100.0 * fractions[0],
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_speed() {
    let _g = serial();
    let space = ParameterSpace::emil();
    let data = emil_dataset();
    let model = fit_boosted(&data, &BoostParams::default(), 0).unwrap();
    let configs: Vec<Configuration> = space.enumerate().take(2912).collect();

    let evaluator = ModelEvaluator::new(model, space.clone()).unwrap();
    let start = Instant::now();
    let predictions: Vec<f64> = configs.iter().map(|c| evaluator.evaluate(c).unwrap()).collect();
    let model_time = start.elapsed();
    assert_eq!(predictions.len(), 2912);

    // stub program: 100 ms of simulated run time, then a valid row
    let row = "{CPU-T},{ACC-T},{CPU-A},{ACC-A},{CPU-W},{ACC-W},3170,1,1,10,10,1585,1585";
    let parallelism = 32;
    let stub = CommandEvaluator::new(
        space.clone(),
        &format!("sleep 0.1; echo {row}"),
        CommandOptions {
            parallelism,
            ..CommandOptions::default()
        },
    )
    .unwrap();
    let start = Instant::now();
    let replayed = hetune::harness::evaluate_configs(&space, &stub, &configs, hetune::harness::Method::Em).unwrap();
    let command_time = start.elapsed();
    assert_eq!(replayed.records.len(), 2912);

    let ratio = command_time.as_secs_f64() / model_time.as_secs_f64().max(1e-9);
    let pass = model_time < Duration::from_secs(10) && ratio >= 100.0;
    report(
        "3",
        pass,
        format!(
            "2912 model predictions in {:.3}s (< 10s); stub commands ({parallelism} concurrent) {:.1}s; ratio {:.0}x (>= 100x)",
            model_time.as_secs_f64(),
            command_time.as_secs_f64(),
            ratio
        ),
    );
    assert!(pass);
}

/// (workload, EM, AML, |Difference|) as published.
const TABLE3: [(&str, f64, f64, f64); 24] = [
    ("512x32768", 3.169, 3.169, 0.00000),
    ("1024x4096", 2.072, 2.067, 0.00474),
    ("1024x8192", 2.021, 2.021, 0.00000),
    ("1024x16384", 1.750, 1.744, 0.00552),
    ("2048x2048", 1.186, 1.076, 0.10936),
    ("2048x4096", 1.079, 1.059, 0.01982),
    ("2048x8192", 0.994, 0.990, 0.00362),
    ("4096x128", 0.439, 0.433, 0.00587),
    ("4096x256", 0.633, 0.561, 0.07285),
    ("4096x512", 0.602, 0.589, 0.01367),
    ("4096x1024", 0.597, 0.580, 0.01656),
    ("4096x2048", 0.569, 0.547, 0.02169),
    ("4096x4096", 0.529, 0.523, 0.00684),
    ("4096x8192", 0.522, 0.505, 0.01669),
    ("4096x16384", 0.487, 0.487, 0.00034),
    ("8192x128", 0.233, 0.211, 0.02153),
    ("8192x256", 0.252, 0.243, 0.00980),
    ("8192x512", 0.280, 0.268, 0.01191),
    ("8192x1024", 0.298, 0.276, 0.02204),
    ("8192x2048", 0.279, 0.270, 0.00907),
    ("8192x4096", 0.268, 0.260, 0.00828),
    ("8192x8192", 0.267, 0.256, 0.01145),
    ("8192x16384", 0.255, 0.252, 0.00338),
    ("8192x65536", 0.529, 0.529, 0.00000),
];

#[test]
fn criterion_4_table3_fidelity() {
    let replay = table3::replay().unwrap();
    let (em, aml) = table3::campaigns(&replay).unwrap();
    let cmp = compare(&em, &aml).unwrap();
    assert_eq!(cmp.rows.len(), 24);
    let mut worst: f64 = 0.0;
    let mut rounding_ok = true;
    for ((label, em_v, aml_v, diff), row) in TABLE3.iter().zip(&cmp.rows) {
        assert_eq!(*label, row.label);
        worst = worst.max((row.abs_difference - diff).abs());
        rounding_ok &= (row.em_value - em_v).abs() <= 5e-4 + 1e-12 && (row.aml_value - aml_v).abs() <= 5e-4 + 1e-12;
    }

    let space = table3::space();
    let top = space.parse_assignment("ROWS=512,COLS=32768,CPU-W=31").unwrap();
    let replayed = replay.evaluate(&top).unwrap();
    let em_cpu_w_ok = em
        .iter()
        .zip(table3::choices().unwrap())
        .all(|(r, c)| r.best.as_ref().unwrap().config["CPU-W"].to_string() == c.em_cpu_w.to_string());

    let pass = worst <= 1e-3 && rounding_ok && (replayed - 3.169).abs() <= 5e-4 && em_cpu_w_ok;
    report(
        "4",
        pass,
        format!(
            "24/24 rows, max deviation of |Difference| {worst:.2e} (<= 1e-3); 512x32768 replay {replayed:.5} MB/J"
        ),
    );
    assert!(pass);
}

fn random_measurement(rng: &mut ChaCha8Rng) -> RawMeasurement {
    let workload: f64 = rng.gen_range(0.001..1e5);
    let mode = rng.gen_range(0..10);
    let frac = match mode {
        0 => 1.0,
        1 => 0.0,
        _ => rng.gen_range(0.0..1.0),
    };
    let cpu_mb = workload * frac;
    let acc_mb = if mode == 0 { 0.0 } else { workload - cpu_mb };
    let busy = |mb: f64, rng: &mut ChaCha8Rng| -> (f64, f64) {
        if mb == 0.0 {
            (0.0, 0.0)
        } else {
            let t = rng.gen_range(1e-4..1e4);
            (t, t * rng.gen_range(0.1..500.0))
        }
    };
    let (ct, ce) = busy(cpu_mb, rng);
    let (at, ae) = busy(acc_mb, rng);
    RawMeasurement {
        config: Configuration::from_values(vec![]),
        workload_mb: workload,
        cpu_time_s: ct,
        acc_time_s: at,
        cpu_energy_j: ce,
        acc_energy_j: ae,
        cpu_workload_mb: cpu_mb,
        acc_workload_mb: acc_mb,
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

#[test]
fn criterion_5_metrics_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = 0;
    let (mut idle_cpu, mut idle_acc) = (0, 0);
    for _ in 0..10_000 {
        let m = random_measurement(&mut rng);
        let d = derive_all(&m).unwrap();
        let t = if m.cpu_time_s > m.acc_time_s { m.cpu_time_s } else { m.acc_time_s };
        let pc = if m.cpu_time_s > 0.0 { m.cpu_energy_j / m.cpu_time_s } else { 0.0 };
        let pa = if m.acc_time_s > 0.0 { m.acc_energy_j / m.acc_time_s } else { 0.0 };
        let mut ok = exec_time(&m) == t
            && d.time_s >= m.cpu_time_s
            && d.time_s >= m.acc_time_s
            && close(throughput(&m).unwrap(), m.workload_mb / t)
            && close(energy(&m), m.cpu_energy_j + m.acc_energy_j)
            && close(power(&m).unwrap().total, pc + pa)
            && close(energy_efficiency(&m).unwrap(), (m.workload_mb / t) / (pc + pa))
            && close(d.energy_efficiency_mb_j, d.throughput_mb_s / d.power_w);
        let (thr_c, thr_a) = unit_throughputs(&m).unwrap();
        if m.acc_workload_mb == 0.0 {
            idle_acc += 1;
            ok &= thr_a == 0.0 && close(d.throughput_mb_s, thr_c) && d.power_w == d.cpu_power_w;
        }
        if m.cpu_workload_mb == 0.0 {
            idle_cpu += 1;
            ok &= thr_c == 0.0 && close(d.throughput_mb_s, thr_a) && d.power_w == d.acc_power_w;
        }
        if !ok {
            failures += 1;
        }
    }
    let pass = failures == 0 && idle_cpu > 0 && idle_acc > 0;
    report(
        "5",
        pass,
        format!("10000 random measurements ({idle_cpu} cpu-idle, {idle_acc} acc-idle), {failures} law violations at rel tol 1e-12"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_annealing() {
    // (a) analytic points, Δ in raw relative units (scale 1)
    let t = 3.0;
    let p_equal = acceptance_probability(5.0, 5.0, 5.0, t, 1.0).unwrap();
    let p_minus_t = acceptance_probability(1.0, 1.0 - t, 1.0, t, 1.0).unwrap();
    let p_better = acceptance_probability(1.0, 1.5, 1.5, t, 1.0).unwrap();
    let a_ok = p_equal == 1.0 && (p_minus_t - (-1.0f64).exp()).abs() <= 1e-12 && p_better == 1.0;

    // (b) unimodal ida-pcc, budget 135
    let ida = ParameterSpace::ida();
    let oracle = OracleEvaluator::new("ida-pcc".parse().unwrap(), ida.clone()).unwrap();
    let brute = run_em(&ida, &oracle).unwrap();
    let optimum = brute.best.clone().unwrap();
    let mut exact = 0;
    for seed in 0..30 {
        let trace = anneal(&ida, &oracle, &AnnealParams::with_budget(135, seed)).unwrap();
        let (w, v) = trace.winner.unwrap();
        if v == optimum.value && ida.assignment(&w) == optimum.config {
            exact += 1;
        }
    }
    let b_ok = exact >= 28;

    // (c) two optima: a broad local peak and a higher one across a valley
    let line = ParameterSpace::from_toml_str(
        "name = \"line\"\n[[parameters]]\nname = \"X\"\nkind = \"numeric-range\"\nvalues = [0, 100]\n",
    )
    .unwrap();
    let f = |x: i64| -> f64 {
        let x = x as f64;
        let local = 0.6 * (-((x - 25.0) / 15.0).powi(2)).exp();
        let global = 1.0 * (-((x - 80.0) / 8.0).powi(2)).exp();
        0.05 + local.max(global)
    };
    let global_x = (0..=100).max_by(|&a, &b| f(a).total_cmp(&f(b))).unwrap();
    let landscape = Landscape(f);
    let (mut sa_hits, mut greedy_hits) = (0, 0);
    for seed in 0..100 {
        let trace = anneal(&line, &landscape, &AnnealParams::with_budget(135, seed)).unwrap();
        let start = trace.steps.iter().find(|s| s.kind == StepKind::Initial).unwrap().candidate.values()[0];
        if trace.winner.unwrap().0.values()[0] == global_x {
            sa_hits += 1;
        }
        if hill_climb(start, &f) == global_x {
            greedy_hits += 1;
        }
    }
    let c_ok = sa_hits > greedy_hits;

    let pass = a_ok && b_ok && c_ok;
    report(
        "6",
        pass,
        format!(
            "(a) p(0)={p_equal} p(-T)={p_minus_t:.15} p(+)={p_better}; (b) exact optimum {exact}/30 (>= 28); (c) SA {sa_hits}/100 vs hill-climbing {greedy_hits}/100"
        ),
    );
    assert!(pass);
}

struct Landscape<F>(F);

impl<F: Fn(i64) -> f64 + Send + Sync> Evaluator for Landscape<F> {
    fn evaluate(&self, c: &Configuration) -> Result<f64, EvalError> {
        Ok((self.0)(c.values()[0]))
    }
    fn evaluation_count(&self) -> u64 {
        0
    }
    fn describe(&self) -> String {
        "landscape".into()
    }
}

/// Steepest ascent over ±1 moves until no neighbor improves.
fn hill_climb(mut x: i64, f: &impl Fn(i64) -> f64) -> i64 {
    loop {
        let best = [x - 1, x + 1]
            .into_iter()
            .filter(|n| (0..=100).contains(n))
            .max_by(|&a, &b| f(a).total_cmp(&f(b)))
            .unwrap();
        if f(best) > f(x) {
            x = best;
        } else {
            return x;
        }
    }
}

#[test]
fn criterion_7_boosting_benefit() {
    let _g = serial();
    let data = emil_dataset();
    let params = BoostParams::default();
    let boosted = kfold_cv(&data, &ModelSpec::Boosted(params), 10, 5).unwrap();
    let single = kfold_cv(&data, &ModelSpec::Tree(params.tree_params()), 10, 5).unwrap();
    let pass = boosted.r2 >= single.r2;
    report(
        "7",
        pass,
        format!("10-fold R2 boosted {:.4} >= single tree {:.4}", boosted.r2, single.r2),
    );
    assert!(pass);
}

fn pipeline(dir: &std::path::Path) -> Vec<Vec<u8>> {
    let space = ParameterSpace::emil();
    let oracle = Oracle::new("emil-pm".parse().unwrap(), space.clone()).unwrap();
    let rows = gen_dataset(&oracle, Sampling::Random(1500), 21).unwrap();
    let log_path = dir.join("log.csv");
    write_log(&space, &rows, std::fs::File::create(&log_path).unwrap()).unwrap();

    let reread = hetune::metrics::log::load_log(&space, &log_path).unwrap();
    let (model, summary) = train_model(&space, &reread, &BoostParams::default(), ValidationScheme::KFold(5), 4).unwrap();
    let model_path = dir.join("model.json");
    model.save(&model_path).unwrap();

    let evaluator = ModelEvaluator::new(BoostedModel::load(&model_path).unwrap(), space.clone()).unwrap();
    let report = run_aml(&space, &evaluator, &AnnealParams::with_budget(1018, 9)).unwrap();
    let report_path = dir.join("report.json");
    std::fs::write(&report_path, report.canonical_json()).unwrap();

    vec![
        std::fs::read(&log_path).unwrap(),
        serde_json::to_vec(&summary).unwrap(),
        std::fs::read(&model_path).unwrap(),
        std::fs::read(&report_path).unwrap(),
    ]
}

#[test]
fn criterion_8_determinism() {
    let _g = serial();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path());
    let second = pipeline(b.path());
    let names = ["log", "validation", "model", "report"];
    let same: Vec<bool> = first.iter().zip(&second).map(|(x, y)| x == y).collect();
    let pass = same.iter().all(|&s| s);
    let detail: Vec<String> = names
        .iter()
        .zip(&same)
        .zip(&first)
        .map(|((n, s), bytes)| format!("{n} {} ({} bytes)", if *s { "identical" } else { "differs" }, bytes.len()))
        .collect();
    report("8", pass, format!("gen -> train -> aml -> report twice: {}", detail.join(", ")));
    assert!(pass);
}
