//! `sigdtw`: command-line front end for the signature recognition pipeline.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sigdtw::corpus::{demo_signal, generate_corpus, load_corpus, parse_signature, write_corpus};
use sigdtw::evaluation::{
    det_points, eer, identification_rate, min_dcf, sweep_detailed, DcfParams,
};
use sigdtw::features::{delta, extract_features, simple_diff, zscore, DeltaConfig, MAX_POINTS};
use sigdtw::matcher::dtw;
use sigdtw::output::{
    det_csv, features_csv, fmt_real, reports_csv, scores_csv, trials_csv, write_atomic,
};
use sigdtw::protocol::{Experiment, Split};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (signature format v1)");
const DEFAULT_WINDOWS: &str = "1,3,5,7,9,11,13,15";

#[derive(Parser)]
#[command(name = "sigdtw", version = VERSION, about = "Online signature recognition with windowed delta features and DTW")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads; 0 uses all available cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus on disk.
    Synth {
        #[arg(long, default_value_t = 50)]
        users: usize,
        #[arg(long, default_value_t = 10)]
        genuine: usize,
        #[arg(long, default_value_t = 10)]
        skilled: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ramp-plus-flat demo signal with its one-sample and windowed derivatives.
    DemoSignal {
        #[arg(long, default_value_t = 15, value_parser = parse_window)]
        window: u32,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the normalized feature matrix of one signature.
    Extract {
        signature: PathBuf,
        #[command(flatten)]
        window: WindowArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// DTW distance between two signatures.
    Match {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        window: WindowArg,
    },
    /// Closed-set identification over a corpus.
    Identify {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        window: WindowArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verification scores against random or skilled forgeries.
    Verify {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        window: WindowArg,
        #[arg(long, value_enum)]
        condition: ConditionArg,
        #[command(flatten)]
        dcf: DcfArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full evaluation for each window length.
    Sweep {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Comma-separated odd window lengths.
        #[arg(long, default_value = DEFAULT_WINDOWS, value_delimiter = ',', value_parser = parse_window)]
        windows: Vec<u32>,
        #[command(flatten)]
        dcf: DcfArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct WindowArg {
    /// Odd number of points in the derivative window.
    #[arg(long, default_value_t = 11, value_parser = parse_window)]
    window: u32,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus directory or index.csv.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 5)]
    train_count: usize,
    #[arg(long, default_value_t = 5)]
    test_count: usize,
}

impl CorpusArgs {
    fn split(&self) -> Split {
        Split {
            train_count: self.train_count,
            test_count: self.test_count,
        }
    }
}

#[derive(Args)]
struct DcfArg {
    /// Detection cost parameters `c_miss,c_fa,p_target`.
    #[arg(long, default_value = "10,1,0.01", value_parser = parse_dcf)]
    dcf: DcfParams,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConditionArg {
    Random,
    Skilled,
}

fn parse_window(s: &str) -> Result<u32, String> {
    let points: u32 = s
        .trim()
        .parse()
        .map_err(|_| format!("window must be an odd integer, got '{s}'"))?;
    DeltaConfig::new(points)
        .map(|_| points)
        .map_err(|_| format!("window must be an odd number of points (P = 2M+1) between 1 and {MAX_POINTS}, got {points}"))
}

fn parse_dcf(s: &str) -> Result<DcfParams, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("expected c_miss,c_fa,p_target, got '{s}'"))?;
    match parts[..] {
        [c_miss, c_fa, p_target] => {
            DcfParams::new(c_miss, c_fa, p_target).map_err(|e| e.to_string())
        }
        _ => Err(format!("expected three comma-separated values, got '{s}'")),
    }
}

type DataResult = Result<(), Box<dyn Error>>;

fn window(points: u32) -> DeltaConfig {
    DeltaConfig::new(points).expect("validated by the argument parser")
}

fn read_signature(path: &Path) -> Result<sigdtw::Signature, Box<dyn Error>> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Ok(parse_signature(&bytes).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn write(path: &Path, text: &str) -> DataResult {
    write_atomic(path, text.as_bytes())
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> DataResult {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn demo_csv(seed: u64, cfg: DeltaConfig) -> Result<String, Box<dyn Error>> {
    let x = demo_signal(seed);
    let diff = simple_diff(&x);
    let slope = delta(&x, cfg);
    let (x_norm, _) = zscore(&x)?;
    let (diff_norm, _) = zscore(&diff)?;
    let (slope_norm, _) = zscore(&slope)?;
    let mut out = String::from("index,x,x_norm,diff,diff_norm,delta,delta_norm\n");
    for i in 0..x.len() {
        let fields = [
            x[i],
            x_norm[i],
            diff[i],
            diff_norm[i],
            slope[i],
            slope_norm[i],
        ]
        .map(fmt_real);
        out.push_str(&format!("{i},{}\n", fields.join(",")));
    }
    Ok(out)
}

fn run(cli: Cli) -> DataResult {
    match cli.command {
        Command::Synth {
            users,
            genuine,
            skilled,
            out,
        } => {
            let corpus = generate_corpus(users, genuine, skilled, cli.seed)?;
            write_corpus(&corpus, &out)?;
            println!("wrote {users} users to {}", out.display());
        }
        Command::DemoSignal {
            window: points,
            out,
        } => {
            emit(out.as_deref(), &demo_csv(cli.seed, window(points))?)?;
        }
        Command::Extract {
            signature,
            window: w,
            out,
        } => {
            let features = extract_features(&read_signature(&signature)?, window(w.window))?;
            emit(out.as_deref(), &features_csv(&features))?;
        }
        Command::Match {
            first,
            second,
            window: w,
        } => {
            let cfg = window(w.window);
            let a = extract_features(&read_signature(&first)?, cfg)?;
            let b = extract_features(&read_signature(&second)?, cfg)?;
            let r = dtw(&a.rows, &b.rows)?;
            println!("accumulated {}", fmt_real(r.accumulated));
            println!("normalized {}", fmt_real(r.normalized));
        }
        Command::Identify {
            corpus,
            window: w,
            out,
        } => {
            let manifest = load_corpus(&corpus.corpus)?;
            let experiment = Experiment::prepare(&manifest, window(w.window), corpus.split())?;
            let trials = experiment.trials()?;
            if let Some(dir) = out {
                write(
                    &dir.join(format!("trials_P{}.csv", w.window)),
                    &trials_csv(&trials),
                )?;
            }
            println!("trials {}", trials.len());
            println!(
                "identification_rate {}",
                fmt_real(identification_rate(&trials)?)
            );
        }
        Command::Verify {
            corpus,
            window: w,
            condition,
            dcf,
            out,
        } => {
            let manifest = load_corpus(&corpus.corpus)?;
            let experiment = Experiment::prepare(&manifest, window(w.window), corpus.split())?;
            let scores = match condition {
                ConditionArg::Random => experiment.random_scores()?,
                ConditionArg::Skilled => experiment.skilled_scores()?,
            };
            for user in &scores.skipped_users {
                eprintln!("sigdtw: warning: user {user} has no skilled forgeries, skipped");
            }
            let name = scores.condition.as_str();
            if let Some(dir) = out {
                write(
                    &dir.join(format!("scores_{name}_P{}.csv", w.window)),
                    &scores_csv(&scores),
                )?;
                write(
                    &dir.join(format!("det_{name}_P{}.csv", w.window)),
                    &det_csv(&det_points(&scores)?),
                )?;
            }
            let (best, threshold) = min_dcf(&scores, &dcf.dcf)?;
            println!("genuine {}", scores.genuine.len());
            println!("impostor {}", scores.impostor.len());
            println!("min_dcf {}", fmt_real(best));
            println!("threshold {}", fmt_real(threshold));
            println!("eer {}", fmt_real(eer(&scores)?));
        }
        Command::Sweep {
            corpus,
            windows,
            dcf,
            out,
        } => {
            let manifest = load_corpus(&corpus.corpus)?;
            let evaluations = sweep_detailed(&manifest, &windows, &dcf.dcf, corpus.split())?;
            let mut reports = Vec::with_capacity(evaluations.len());
            for eval in evaluations {
                let p = eval.report.delta_points;
                for user in &eval.report.skipped_users {
                    eprintln!(
                        "sigdtw: warning: P={p}: user {user} has no skilled forgeries, skipped"
                    );
                }
                write(
                    &out.join(format!("report_P{p}.csv")),
                    &reports_csv(std::slice::from_ref(&eval.report)),
                )?;
                write(
                    &out.join(format!("det_random_P{p}.csv")),
                    &det_csv(&eval.det_random),
                )?;
                write(
                    &out.join(format!("det_skilled_P{p}.csv")),
                    &det_csv(&eval.det_skilled),
                )?;
                println!(
                    "P={p} identification_rate={} min_dcf_random={} min_dcf_skilled={}",
                    fmt_real(eval.report.identification_rate),
                    fmt_real(eval.report.min_dcf_random),
                    fmt_real(eval.report.min_dcf_skilled)
                );
                reports.push(eval.report);
            }
            write(&out.join("sweep_summary.csv"), &reports_csv(&reports))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            let rendered = err.to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("sigdtw: {}", line.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
        {
            eprintln!("sigdtw: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sigdtw: {e}");
            ExitCode::from(2)
        }
    }
}
