//! `conexa`: connective structures and orders from the command line.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 when a configured cap
//! would be exceeded.

mod input;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conexa_core::builtins;
use conexa_core::density::{density_structures, total_order};
use conexa_core::devices::{derive_device, Recode, DEFAULT_CAP, TENSORIAL_NAMES};
use conexa_core::disentangle::{PoolConfig, STRUCTURE_NAMES};
use conexa_core::io::StateJson;
use conexa_core::quantum::DEFAULT_TOL;
use conexa_core::randvars::{rv_structure, FLOAT_TOL};
use conexa_core::{Error, Result};
use serde_json::json;

use input::{Kind, Source};
use report::{Header, Report, DOMANIAL_NAMES};

#[derive(Parser)]
#[command(name = "conexa", version, about = "Connective structures of quantum states, devices and random variables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RecodeArg {
    Raw,
    /// Positional codes for questions and results
    #[value(name = "paper", alias = "indexed")]
    Indexed,
}

#[derive(Args)]
struct InputArgs {
    /// JSON input file
    #[arg(long, conflicts_with = "builtin")]
    file: Option<String>,
    /// Name of a builtin object
    #[arg(long)]
    builtin: Option<String>,
}

impl InputArgs {
    fn source(&self) -> Result<Source> {
        Source::from_args(self.file.as_deref(), self.builtin.as_deref())
    }
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Disentanglement and density structures of a pure state
    AnalyzeState {
        #[command(flatten)]
        input: InputArgs,
        /// Seed for the random measurement bases
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random product bases added to the structured pool
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Comma-separated subset of GI,BIP,MT,IP,ML,NCS,corr,S
        #[arg(long)]
        structures: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Correlation and Sugita structures of a density operator
    AnalyzeDensity {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Comma-separated subset of corr,S
        #[arg(long)]
        structures: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Locality profile, tensorial and domanial structures of a device
    AnalyzeDevice {
        #[command(flatten)]
        input: InputArgs,
        /// Bound on enumerated realizations and function tuples
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
        /// Comma-separated subset of NPS,NOS,NPL,NQS,NQL,NS,NL,do,dp
        #[arg(long)]
        structures: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Connective structure of a family of random variables
    AnalyzeRvs {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = FLOAT_TOL)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Device of joint measurement outcomes on a pure state
    DeriveDevice {
        /// State JSON file
        #[arg(long, conflicts_with = "builtin_state")]
        state: Option<String>,
        /// Name of a builtin state
        #[arg(long)]
        builtin_state: Option<String>,
        /// Menu JSON file, or Pauli shorthand such as ZX used at every site
        #[arg(long)]
        menus: String,
        #[arg(long, value_enum, default_value = "raw")]
        recode: RecodeArg,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Connective order of any supported input
    Order {
        #[command(flatten)]
        input: InputArgs,
        /// Input kind; detected from the file keys when omitted, state for builtins
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
        #[command(flatten)]
        out: Output,
    },
    /// Print a builtin object, or list them all
    Builtin {
        /// Builtin name; lists every builtin when omitted
        name: Option<String>,
        #[arg(long, value_enum, default_value = "state")]
        kind: Kind,
        #[command(flatten)]
        out: Output,
    },
}

fn pool(seed: u64, samples: usize, tol: f64) -> PoolConfig {
    PoolConfig {
        n_random: samples,
        seed,
        tol,
        extra_bases: Vec::new(),
    }
}

fn check_tol(tol: f64) -> Result<f64> {
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(Error::domain("--tol must be a positive number"))
    }
}

fn run(command: Command) -> Result<(Report, Format)> {
    match command {
        Command::AnalyzeState {
            input,
            seed,
            samples,
            tol,
            structures,
            out,
        } => {
            let tol = check_tol(tol)?;
            let source = input.source()?;
            let psi = input::load_state(&source)?;
            let known: Vec<&str> = STRUCTURE_NAMES.iter().copied().chain(["corr", "S"]).collect();
            let selected = report::selection(structures.as_deref(), &known)?;
            let config = pool(seed, samples, tol);
            let orders = total_order(&psi, &config)?;
            let header = Header {
                command: "analyze-state",
                source: Some(&source),
                seed: Some(seed),
                tol,
            };
            Ok((report::state(header, psi.dims(), &config, &orders, &selected), out.format))
        }
        Command::AnalyzeDensity {
            input,
            tol,
            structures,
            out,
        } => {
            let tol = check_tol(tol)?;
            let source = input.source()?;
            let rho = input::load_density(&source, tol)?;
            let selected = report::selection(structures.as_deref(), &["corr", "S"])?;
            let r = density_structures(&rho, tol)?;
            let header = Header {
                command: "analyze-density",
                source: Some(&source),
                seed: None,
                tol,
            };
            Ok((report::density(header, rho.dims(), &r, &selected), out.format))
        }
        Command::AnalyzeDevice {
            input,
            cap,
            structures,
            out,
        } => {
            let source = input.source()?;
            let device = input::load_device(&source)?;
            let known: Vec<&str> = TENSORIAL_NAMES.iter().copied().chain(DOMANIAL_NAMES).collect();
            let selected = report::selection(structures.as_deref(), &known)?;
            let profile = device.locality_profile(cap)?;
            let tensorial = device.tensorial_structures(cap)?;
            let domanial = if selected.iter().any(|s| DOMANIAL_NAMES.contains(&s.as_str())) {
                Some(device.domanial_structures(cap)?)
            } else {
                None
            };
            let header = Header {
                command: "analyze-device",
                source: Some(&source),
                seed: None,
                tol: DEFAULT_TOL,
            };
            Ok((
                report::device(header, &device, &profile, &tensorial, domanial.as_ref(), &selected, cap),
                out.format,
            ))
        }
        Command::AnalyzeRvs { input, tol, out } => {
            let tol = check_tol(tol)?;
            let source = input.source()?;
            let dist = input::load_distribution(&source)?;
            let r = rv_structure(&dist, tol)?;
            let header = Header {
                command: "analyze-rvs",
                source: Some(&source),
                seed: None,
                tol,
            };
            Ok((report::rvs(header, &dist, &r), out.format))
        }
        Command::DeriveDevice {
            state,
            builtin_state,
            menus,
            recode,
            tol,
            out,
        } => {
            let tol = check_tol(tol)?;
            let source = match (state, builtin_state) {
                (Some(f), None) => Source::File(f),
                (None, Some(b)) => Source::Builtin(b),
                _ => return Err(Error::domain("give exactly one of --state or --builtin-state")),
            };
            let psi = input::load_state(&source)?;
            let menu_entries = input::load_menus(&menus, psi.num_sites())?;
            let (recode, recode_name) = match recode {
                RecodeArg::Raw => (Recode::Raw, "raw"),
                RecodeArg::Indexed => (Recode::Indexed, "paper"),
            };
            let device = derive_device(&psi, &menu_entries, tol, recode)?;
            let labels = menu_entries
                .iter()
                .map(|m| m.iter().map(|e| e.label.clone()).collect())
                .collect();
            let header = Header {
                command: "derive-device",
                source: Some(&source),
                seed: None,
                tol,
            };
            Ok((report::derived(header, labels, recode_name, &device), out.format))
        }
        Command::Order {
            input,
            kind,
            seed,
            samples,
            tol,
            cap,
            out,
        } => {
            let tol = check_tol(tol)?;
            let source = input.source()?;
            let kind = match (&source, kind) {
                (_, Some(k)) => k,
                (Source::Builtin(_), None) => Kind::State,
                (Source::File(path), None) => Kind::detect(path, &input::read_text(path)?)?,
            };
            let orders = match kind {
                Kind::State => {
                    let o = total_order(&input::load_state(&source)?, &pool(seed, samples, tol))?;
                    json!({ "omega_c": o.omega_c, "omega_f": o.omega_f, "omega": o.omega })
                }
                Kind::Density => {
                    let r = density_structures(&input::load_density(&source, tol)?, tol)?;
                    json!({ "omega_f": r.order() })
                }
                Kind::Device => {
                    let o = input::load_device(&source)?.device_order(cap)?;
                    json!({ "tensorial": o.tensorial, "domanial": o.domanial, "overall": o.overall })
                }
                Kind::Rvs => {
                    let r = rv_structure(&input::load_distribution(&source)?, tol.min(FLOAT_TOL))?;
                    json!({ "order": r.structure.connective_order() })
                }
                Kind::Structure => match &source {
                    Source::File(path) => json!({ "order": input::load_structure(path)?.connective_order() }),
                    Source::Builtin(_) => return Err(Error::domain("structures have no builtins; use --file")),
                },
            };
            let header = Header {
                command: "order",
                source: Some(&source),
                seed: (kind == Kind::State).then_some(seed),
                tol,
            };
            Ok((report::order(header, kind.name(), orders), out.format))
        }
        Command::Builtin { name, kind, out } => {
            let header = Header {
                command: "builtin",
                source: None,
                seed: None,
                tol: DEFAULT_TOL,
            };
            let report = match name {
                None => report::builtin_list(
                    header,
                    &builtins::STATE_NAMES,
                    &builtins::DEVICE_NAMES,
                    &input::DISTRIBUTION_NAMES,
                ),
                Some(name) => {
                    let object = match kind {
                        Kind::State => serde_json::to_value(StateJson::from(&builtins::state(&name)?)),
                        Kind::Device => serde_json::to_value(builtins::device(&name)?),
                        Kind::Rvs => serde_json::to_value(input::builtin_distribution(&name)?),
                        Kind::Density | Kind::Structure => {
                            return Err(Error::domain("builtins exist for states, devices and rvs"))
                        }
                    }
                    .map_err(|e| Error::parse(e.to_string()))?;
                    report::builtin(header, kind.name(), &name, object)
                }
            };
            Ok((report, out.format))
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("CONEXA_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::domain(format!("CONEXA_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::domain(e.to_string()))?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Resource { .. } => 3,
        Error::Domain(_) | Error::Parse(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok((report, Format::Json)) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report.json).expect("reports serialize")
            );
            ExitCode::SUCCESS
        }
        Ok((report, Format::Text)) => {
            print!("{}", report.text);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("conexa: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
