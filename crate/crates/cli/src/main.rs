mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use hetune::annealer::AnnealParams;
use hetune::evaluators::{
    CommandEvaluator, CommandOptions, Evaluator, ModelEvaluator, Oracle, OracleEvaluator, OracleSpec,
    ReplayEvaluator,
};
use hetune::harness::{
    compare, gen_dataset, run_aml, run_em, train_model, CampaignReport, ModelProvenance, Sampling,
    ValidationScheme,
};
use hetune::metrics::log::{load_log, write_log};
use hetune::space::{ParameterKind, ParameterSpace};
use hetune::surrogate::{BoostParams, BoostedModel};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "hetune", version, about = "Energy-efficiency autotuning for CPU + accelerator systems")]
struct Cli {
    /// Bundled space name (ida, emil, ida-table3) or path to a space file.
    #[arg(long, global = true, default_value = "ida")]
    space: String,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Describe the parameters and size of a space.
    SpaceInfo,
    /// Evaluate every configuration and report the best.
    Em {
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        label: Option<String>,
    },
    /// Search with simulated annealing.
    Aml {
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        label: Option<String>,
        /// Distinct configurations the search may evaluate.
        #[arg(long, conflicts_with = "budget_fraction")]
        budget: Option<u64>,
        /// Budget as a fraction of the space size, e.g. 0.07.
        #[arg(long)]
        budget_fraction: Option<f64>,
        #[arg(long, default_value_t = 1000.0)]
        initial_temperature: f64,
        /// Ignored when a budget is given.
        #[arg(long, default_value_t = 0.95)]
        cooling_factor: f64,
        #[arg(long, default_value_t = 100.0)]
        delta_scale: f64,
        /// Write the step trace here, one JSON object per line.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Generate a measurement log from a synthetic oracle.
    Gen {
        /// ida-pcc[:RxC] or emil-pm[:MB].
        #[arg(long)]
        oracle: String,
        /// Number of distinct random configurations; all when absent.
        #[arg(long)]
        samples: Option<u64>,
        /// Seed of the oracle's rugged term.
        #[arg(long)]
        oracle_seed: Option<u64>,
    },
    /// Train a boosted surrogate from a measurement log.
    Train {
        #[arg(long)]
        log: PathBuf,
        /// Folds for cross-validation.
        #[arg(long, default_value_t = 10, conflicts_with = "split")]
        folds: usize,
        /// Train on this fraction and score on the rest instead of k-fold.
        #[arg(long)]
        split: Option<f64>,
        #[arg(long, default_value_t = 50)]
        n_estimators: usize,
        /// 0 grows trees without a depth limit.
        #[arg(long, default_value_t = 8)]
        max_depth: usize,
        #[arg(long, default_value_t = 2)]
        min_samples_leaf: usize,
        #[arg(long, default_value_t = 1.0)]
        learning_rate: f64,
        /// Also write the validation summary here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Predict efficiency with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Assignment such as "CPU-T=24,CPU-A=scatter,...". Repeatable.
        #[arg(long = "config", required_unless_present = "all")]
        configs: Vec<String>,
        /// Predict every configuration of the space.
        #[arg(long)]
        all: bool,
    },
    /// Compare EM and AML reports, matched by label.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        em: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        aml: Vec<PathBuf>,
        /// Emit JSON instead of a text table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// model:PATH, replay:PATH, oracle:NAME[:ARG] or cmd:TEMPLATE.
    #[arg(long = "eval")]
    eval: String,
    /// Concurrent command invocations (cmd only).
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Per-invocation timeout in seconds (cmd only).
    #[arg(long)]
    timeout: Option<f64>,
    /// Append command measurements to this log (cmd only).
    #[arg(long)]
    record: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(error::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hetune: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let space = load_space(&cli.space)?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::SpaceInfo => emit(out, &space_info(&space)),
        Command::Em { eval, label } => {
            let evaluator = build_evaluator(&space, &eval)?;
            let mut report = run_em(&space, &evaluator.evaluator)?;
            report.label = label;
            report.model = evaluator.provenance;
            emit(out, &(report.to_json() + "\n"))
        }
        Command::Aml {
            eval,
            label,
            budget,
            budget_fraction,
            initial_temperature,
            cooling_factor,
            delta_scale,
            trace,
        } => {
            let budget = match (budget, budget_fraction) {
                (Some(b), _) => Some(b),
                (None, Some(f)) if f > 0.0 && f <= 1.0 => {
                    Some(((f * space.cardinality() as f64).round() as u64).max(1))
                }
                (None, Some(f)) => return Err(CliError::usage(format!("budget fraction {f} must lie in (0, 1]"))),
                (None, None) => None,
            };
            let params = AnnealParams {
                initial_temperature,
                cooling_factor,
                evaluation_budget: budget,
                seed: cli.seed,
                delta_scale,
            };
            let evaluator = build_evaluator(&space, &eval)?;
            let mut report = run_aml(&space, &evaluator.evaluator, &params)?;
            report.label = label;
            report.model = evaluator.provenance;
            if let Some(path) = trace {
                write_trace(&report, &path)?;
            }
            emit(out, &(report.to_json() + "\n"))
        }
        Command::Gen {
            oracle,
            samples,
            oracle_seed,
        } => {
            let mut spec: OracleSpec = oracle.parse()?;
            if let Some(s) = oracle_seed {
                match &mut spec {
                    OracleSpec::IdaPcc(p) => p.seed = s,
                    OracleSpec::EmilPm(p) => p.seed = s,
                }
            }
            let oracle = Oracle::new(spec, space.clone())?;
            let sampling = samples.map_or(Sampling::Full, Sampling::Random);
            let rows = gen_dataset(&oracle, sampling, cli.seed)?;
            let mut buf = Vec::new();
            write_log(&space, &rows, &mut buf)?;
            emit(out, &String::from_utf8(buf).expect("log is utf-8"))
        }
        Command::Train {
            log,
            folds,
            split,
            n_estimators,
            max_depth,
            min_samples_leaf,
            learning_rate,
            summary,
        } => {
            let rows = load_log(&space, &log)?;
            let params = BoostParams {
                n_estimators,
                max_depth: (max_depth > 0).then_some(max_depth),
                min_samples_leaf,
                learning_rate,
            };
            let scheme = match split {
                Some(f) => ValidationScheme::Split(f),
                None => ValidationScheme::KFold(folds),
            };
            let (model, info) = train_model(&space, &rows, &params, scheme, cli.seed)?;
            let info_json = serde_json::to_string_pretty(&info).expect("summary serializes") + "\n";
            match out {
                Some(path) => {
                    model.save(path)?;
                    eprint!("{info_json}");
                }
                None => print!("{}", model.to_json() + "\n"),
            }
            if let Some(path) = summary {
                std::fs::write(path, &info_json)?;
            }
            Ok(())
        }
        Command::Predict { model, configs, all } => {
            let model = BoostedModel::load(&model)?;
            let evaluator = ModelEvaluator::new(model, space.clone())?;
            let chosen = if all {
                space.enumerate().collect()
            } else {
                configs
                    .iter()
                    .map(|c| space.parse_assignment(c))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let mut text = String::new();
            for c in &chosen {
                let v = evaluator.evaluate(c)?;
                text.push_str(&format!("{}\t{v}\n", space.describe(c)));
            }
            emit(out, &text)
        }
        Command::Compare { em, aml, json } => {
            let load = |paths: &[PathBuf]| -> Result<Vec<CampaignReport>, CliError> {
                paths.iter().map(|p| CampaignReport::load(p).map_err(CliError::from)).collect()
            };
            let cmp = compare(&load(&em)?, &load(&aml)?)?;
            if json {
                emit(out, &(serde_json::to_string_pretty(&cmp).expect("comparison serializes") + "\n"))
            } else {
                emit(out, &cmp.to_table())
            }
        }
    }
}

fn load_space(arg: &str) -> Result<ParameterSpace, CliError> {
    if let Some(s) = ParameterSpace::builtin(arg) {
        return Ok(s);
    }
    if !Path::new(arg).exists() {
        return Err(CliError::usage(format!(
            "`{arg}` is neither a bundled space (ida, emil, ida-table3) nor a file"
        )));
    }
    Ok(ParameterSpace::load(arg)?)
}

struct Built {
    evaluator: Box<dyn Evaluator>,
    provenance: Option<ModelProvenance>,
}

fn build_evaluator(space: &ParameterSpace, args: &EvalArgs) -> Result<Built, CliError> {
    let (kind, rest) = args
        .eval
        .split_once(':')
        .ok_or_else(|| CliError::usage(format!("--eval `{}` needs a KIND:ARG form", args.eval)))?;
    let space = space.clone();
    let built = match kind {
        "model" => {
            let model = BoostedModel::load(rest)?;
            let provenance = ModelProvenance::of(&model, Some(rest.to_string()));
            Built {
                evaluator: Box::new(ModelEvaluator::new(model, space)?),
                provenance: Some(provenance),
            }
        }
        "replay" => {
            let rows = load_log(&space, rest)?;
            Built {
                evaluator: Box::new(ReplayEvaluator::new(space, rows)),
                provenance: None,
            }
        }
        "oracle" => Built {
            evaluator: Box::new(OracleEvaluator::new(rest.parse()?, space)?),
            provenance: None,
        },
        "cmd" => {
            let timeout = match args.timeout {
                Some(t) if t.is_finite() && t > 0.0 => Some(Duration::from_secs_f64(t)),
                Some(t) => return Err(CliError::usage(format!("timeout {t} must be positive"))),
                None => None,
            };
            let options = CommandOptions {
                timeout,
                log_path: args.record.clone(),
                parallelism: args.parallel,
            };
            Built {
                evaluator: Box::new(CommandEvaluator::new(space, rest, options)?),
                provenance: None,
            }
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown evaluator kind `{other}` (expected model, replay, oracle or cmd)"
            )))
        }
    };
    Ok(built)
}

fn space_info(space: &ParameterSpace) -> String {
    let mut s = format!("space {}\n", space.name());
    for p in space.parameters() {
        let domain = match p.kind() {
            ParameterKind::Categorical => p.labels().join(", "),
            _ => match p.domain() {
                [] => String::new(),
                [only] => only.to_string(),
                d if d.len() > 8 && d.windows(2).all(|w| w[1] == w[0] + 1) => {
                    format!("{}..={}", d[0], d[d.len() - 1])
                }
                d => d.iter().map(i64::to_string).collect::<Vec<_>>().join(", "),
            },
        };
        let note = match p.derived_from() {
            Some(src) => format!("  (= 100 - {})", space.parameters()[src].name()),
            None => String::new(),
        };
        s.push_str(&format!("  {:<8} {{{domain}}}{note}\n", p.name()));
    }
    s.push_str(&format!("configurations {}\n", space.cardinality()));
    s
}

fn write_trace(report: &CampaignReport, path: &Path) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    if let Some(t) = &report.trace {
        for step in &t.steps {
            serde_json::to_writer(&mut f, step).map_err(std::io::Error::other)?;
            f.write_all(b"\n")?;
        }
    }
    f.flush()?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
