//! `mchit`: command-line front end. Exit codes: 0 success, 1 a must-pass
//! verification record failed, 2 usage or validation error.

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use mchit::chain::{validate_chain, ChainSpec, Distribution, MarkovChain, Mode};
use mchit::error::Error;
use mchit::families::{make_family, FamilySpec};
use mchit::hitting::{expected_hitting, hit_survival_all, t_hit_alpha, t_hit_product};
use mchit::mixing::{cesaro_mixing_time, mixing_time};
use mchit::montecarlo::simulate_rule;
use mchit::report::records_to_csv;
use mchit::stopping::{build_rule, StoppingRule};
use mchit::tolerances::Tolerances;
use mchit::verify::run_default_suite;

#[derive(Parser)]
#[command(name = "mchit", version, about = "hitting-vs-mixing toolkit for finite Markov chains")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores). Results
    /// do not depend on this value.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a named chain family and write its chain-spec JSON.
    Family {
        #[arg(long)]
        name: String,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "continuous")]
        mode: ModeArg,
        #[arg(long)]
        seed: Option<u64>,
        /// Forward rate for biased-cycle.
        #[arg(long)]
        bias: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a chain-spec file and print a summary.
    Validate {
        #[arg(long)]
        chain: PathBuf,
    },
    /// Stationary distribution of a chain.
    Stationary {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expected hitting times (and optionally survival probabilities) of a set.
    Hitting {
        #[arg(long)]
        chain: PathBuf,
        /// Comma-separated target states, e.g. 1,3.
        #[arg(long)]
        set: String,
        /// Also report P_x[H > t] at this horizon.
        #[arg(long)]
        t: Option<f64>,
        /// Restrict the report to one start state.
        #[arg(long)]
        start: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// T_hit(alpha) (or the mass-weighted product sup without --alpha).
    Thit {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        /// Allow greedy search above the exact-enumeration cap.
        #[arg(long)]
        heuristic: bool,
        /// Exact-enumeration cap override.
        #[arg(long, default_value_t = 16)]
        max_exact: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the randomized stationary stopping rule from a start state.
    Rule {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, default_value_t = 0)]
        start: usize,
        /// Optional non-stationary target law (JSON Distribution).
        #[arg(long)]
        target_dist: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mixing time (plain or Cesàro) at level delta, with the search curve.
    Mix {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        cesaro: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the stopping rule and report empirical law and mean.
    Simulate {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        rule: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the certification suite; exit 1 if any must-pass record fails.
    Verify {
        #[arg(long, default_value = "default")]
        suite: String,
        /// Alpha grid; repeatable. Default {0.1, 0.25, 0.4}.
        #[arg(long)]
        alpha: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Continuous,
    Discrete,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Continuous => Mode::Continuous,
            ModeArg::Discrete => Mode::Discrete,
        }
    }
}

fn load_chain(path: &PathBuf, tol: &Tolerances) -> Result<MarkovChain, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let spec: ChainSpec =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    validate_chain(&spec, tol).map_err(|e| e.to_string())
}

fn parse_set(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad set entry {p:?}: {e}")))
        .collect()
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            println!("{}", text.trim_end());
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    text.push('\n');
    emit(out, &text)
}

#[derive(Serialize)]
struct ValidateSummary {
    n: usize,
    mode: Mode,
    reversible: bool,
    uniformization_rate: Option<f64>,
}

#[derive(Serialize)]
struct StationaryOut {
    labels: Vec<String>,
    pi: Vec<f64>,
}

#[derive(Serialize)]
struct HittingOut {
    set: Vec<usize>,
    expected: BTreeMap<usize, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    survival_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    survival: Option<BTreeMap<usize, f64>>,
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let tol = Tolerances::default();
    match cli.command {
        Command::Family {
            name,
            n,
            mode,
            seed,
            bias,
            out,
        } => {
            let mut params = BTreeMap::new();
            if let Some(b) = bias {
                params.insert("bias".to_string(), b);
            }
            let spec = FamilySpec {
                name,
                n,
                params,
                mode: mode.into(),
                seed,
            };
            let chain = make_family(&spec).map_err(|e| e.to_string())?;
            emit_json(&out, &chain.to_spec())?;
        }
        Command::Validate { chain } => {
            let c = load_chain(&chain, &tol)?;
            let summary = ValidateSummary {
                n: c.n(),
                mode: c.mode(),
                reversible: c.is_reversible().map_err(|e| e.to_string())?,
                uniformization_rate: c.uniformization_rate(),
            };
            emit_json(&None, &summary)?;
        }
        Command::Stationary { chain, out } => {
            let c = load_chain(&chain, &tol)?;
            let pi = c.stationary().map_err(|e| e.to_string())?;
            emit_json(
                &out,
                &StationaryOut {
                    labels: c.labels().to_vec(),
                    pi: pi.as_slice().to_vec(),
                },
            )?;
        }
        Command::Hitting {
            chain,
            set,
            t,
            start,
            out,
        } => {
            let c = load_chain(&chain, &tol)?;
            let set = parse_set(&set)?;
            let h = expected_hitting(&c, &set).map_err(|e| e.to_string())?;
            let starts: Vec<usize> = match start {
                Some(x) if x >= c.n() => {
                    return Err(Error::BadState { index: x, n: c.n() }.to_string())
                }
                Some(x) => vec![x],
                None => (0..c.n()).collect(),
            };
            let survival = match t {
                Some(t) => {
                    let s = hit_survival_all(&c, &set, t).map_err(|e| e.to_string())?;
                    Some(starts.iter().map(|&x| (x, s[x])).collect())
                }
                None => None,
            };
            emit_json(
                &out,
                &HittingOut {
                    set,
                    expected: starts.iter().map(|&x| (x, h[x])).collect(),
                    survival_t: t,
                    survival,
                },
            )?;
        }
        Command::Thit {
            chain,
            alpha,
            heuristic,
            max_exact,
            out,
        } => {
            if max_exact < 2 {
                return Err("--max-exact must be at least 2".into());
            }
            let tol = Tolerances {
                exact_cap: max_exact,
                ..tol
            };
            let c = load_chain(&chain, &tol)?;
            let report = match alpha {
                Some(a) => t_hit_alpha(&c, a, heuristic),
                None => t_hit_product(&c),
            }
            .map_err(|e| e.to_string())?;
            emit_json(&out, &report)?;
        }
        Command::Rule {
            chain,
            start,
            target_dist,
            out,
        } => {
            let c = load_chain(&chain, &tol)?;
            if start >= c.n() {
                return Err(Error::BadState { index: start, n: c.n() }.to_string());
            }
            let mu0 = Distribution::point(c.n(), start);
            let target = match target_dist {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| format!("{}: {e}", path.display()))?;
                    let d: Distribution =
                        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
                    // Re-validate after deserialization.
                    Some(Distribution::new(d.as_slice().to_vec(), &tol).map_err(|e| e.to_string())?)
                }
                None => None,
            };
            let rule = build_rule(&c, &mu0, target.as_ref()).map_err(|e| e.to_string())?;
            emit_json(&out, &rule)?;
        }
        Command::Mix {
            chain,
            delta,
            cesaro,
            out,
        } => {
            let c = load_chain(&chain, &tol)?;
            let profile = if cesaro {
                cesaro_mixing_time(&c, delta)
            } else {
                mixing_time(&c, delta)
            }
            .map_err(|e| e.to_string())?;
            emit_json(&out, &profile)?;
        }
        Command::Simulate {
            chain,
            rule,
            samples,
            seed,
            out,
        } => {
            let c = load_chain(&chain, &tol)?;
            let text = std::fs::read_to_string(&rule)
                .map_err(|e| format!("{}: {e}", rule.display()))?;
            let r: StoppingRule =
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", rule.display()))?;
            let report = simulate_rule(&c, &r, samples, seed).map_err(|e| e.to_string())?;
            emit_json(&out, &report)?;
        }
        Command::Verify {
            suite,
            alpha,
            out,
            format,
        } => {
            if suite != "default" {
                return Err(format!("unknown suite {suite:?} (only \"default\" exists)"));
            }
            let grid = if alpha.is_empty() {
                vec![0.1, 0.25, 0.4]
            } else {
                alpha
            };
            let records = run_default_suite(&grid).map_err(|e| e.to_string())?;
            match format {
                Format::Json => emit_json(&out, &records)?,
                Format::Csv => emit(&out, &records_to_csv(&records))?,
            }
            let failures = records.iter().filter(|r| !r.pass).count();
            if failures > 0 {
                eprintln!("{failures} must-pass record(s) failed");
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .is_err()
        {
            eprintln!("warning: global thread pool already initialized");
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
