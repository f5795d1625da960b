use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperlab::design::parse_povm;
use hyperlab::harness::{self, CheckRecord, Counts, SuiteConfig, EXIT_CHECK_FAILED, EXIT_OK};
use hyperlab::moments::parse_delta;
use hyperlab::pauli::parse_operator;
use hyperlab::xor::{self, parse_game};
use hyperlab::{Error, Result};

#[derive(Parser)]
#[command(name = "hyperlab", version, about = "Numerical checks for hypercontractive and moment inequalities")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed for every random ensemble.
    #[arg(long, global = true, env = "HYPERLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Directory for report files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Tolerance applied to every check instead of its own.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Record wall times in the `ms` column.
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a check suite: boolean, pauli, moments, design, xor or all.
    Suite {
        name: String,
        /// Small ensembles for a quick run.
        #[arg(long)]
        smoke: bool,
        /// POVM file used when the bundled 4-design does not verify.
        #[arg(long, value_name = "FILE")]
        povm: Option<PathBuf>,
        /// Tensor-visit budget for exact XOR biases.
        #[arg(long)]
        xor_budget: Option<u128>,
    },
    /// Summarize an input file.
    Describe { file: PathBuf },
    /// Bias of an XOR game file.
    Bias {
        game: PathBuf,
        /// Exact bias only; fail if over budget.
        #[arg(long, conflicts_with = "search")]
        exact: bool,
        /// Local search only (a lower bound).
        #[arg(long)]
        search: bool,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = xor::DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Check a POVM file for the design property up to order T.
    DesignCheck {
        povm: PathBuf,
        #[arg(long = "t", value_name = "T")]
        t: usize,
    },
    /// Spectral tail check of an operator file on a grid of thresholds.
    Tail {
        operator: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        t_grid: Vec<f64>,
    },
    /// Haar moments of a state-difference file.
    Moments {
        delta: PathBuf,
        #[arg(long = "t", value_name = "T", value_parser = ["2", "4"])]
        t: String,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Prints `text` and copies it to `out/name` when an output directory is set.
fn emit(out: &Option<PathBuf>, name: &str, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn records_csv(records: &[CheckRecord]) -> Result<String> {
    let mut buf = Vec::new();
    harness::write_records_csv(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn status(records: &[CheckRecord]) -> i32 {
    if records.iter().all(|r| r.holds) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn to_json(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn run(cli: Cli) -> Result<i32> {
    let g = cli.global;
    match cli.command {
        Command::Suite {
            name,
            smoke,
            povm,
            xor_budget,
        } => {
            let povm = povm.map(|p| read(&p).and_then(|s| parse_povm(&s))).transpose()?;
            let cfg = SuiteConfig {
                seed: g.seed,
                counts: if smoke { Counts::smoke() } else { Counts::default() },
                tolerance: g.tolerance,
                xor_budget: xor_budget.unwrap_or(xor::DEFAULT_BUDGET),
                out_dir: g.out.clone(),
                jobs: g.jobs,
                timings: g.timings,
                povm,
                ..SuiteConfig::default()
            };
            let report = harness::run_suite(&name, &cfg)?;
            if g.out.is_none() {
                print!("{}", records_csv(&report.records)?);
            }
            for s in &report.suites {
                eprintln!(
                    "{}: {} checks, {} failed, {}",
                    s.suite.name(),
                    s.checks,
                    s.failures,
                    serde_json::to_value(s.status).expect("serializable").as_str().unwrap_or("?")
                );
                for note in &s.notes {
                    eprintln!("  {note}");
                }
            }
            for r in report.failures().take(20) {
                eprintln!("FAILED {}/{}: lhs {} rhs {}", r.suite, r.id, r.lhs, r.rhs);
            }
            Ok(report.exit_code())
        }
        Command::Describe { file } => {
            println!("{}", harness::describe(&file)?);
            Ok(EXIT_OK)
        }
        Command::Bias {
            game,
            exact,
            search,
            restarts,
            budget,
        } => {
            let game = parse_game(&read(&game)?)?;
            let form = game.form();
            let result = if search {
                xor::bias_local_search_form(&form, restarts, g.seed)?
            } else {
                match xor::bias_exact_form(&form, budget) {
                    Ok(r) => r,
                    Err(Error::BudgetExceeded { required, .. }) if !exact => {
                        eprintln!("exact bias needs {required} visits; falling back to local search");
                        xor::bias_local_search_form(&form, restarts, g.seed)?
                    }
                    Err(e) => return Err(e),
                }
            };
            let label = if result.exact { "exact" } else { "lower bound only" };
            let row = xor::GameResultRow::evaluate("input", &game, result.value)?;
            let json = serde_json::json!({
                "k": game.k(),
                "n": game.n(),
                "beta": result.value,
                "label": label,
                "witness": result.witness.signs(),
                "bh_norm": row.bh_norm,
                "c_k": row.c_k,
                "lower_bound": row.lower_bound,
                "holds": row.holds,
            });
            emit(&g.out, "bias.json", &to_json(&json))?;
            Ok(if row.holds { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::DesignCheck { povm, t } => {
            let m = parse_povm(&read(&povm)?)?;
            let (records, order) = harness::design_records(&m, t, g.tolerance)?;
            emit(&g.out, "design-check.csv", &records_csv(&records)?)?;
            eprintln!("verified t-design order: {order} (checked up to {t})");
            Ok(status(&records))
        }
        Command::Tail { operator, t_grid } => {
            let src = parse_operator(&read(&operator)?)?;
            let (records, notes) = harness::tail_records(&src, &t_grid, g.tolerance)?;
            for n in notes {
                eprintln!("{n}");
            }
            emit(&g.out, "tail.csv", &records_csv(&records)?)?;
            Ok(status(&records))
        }
        Command::Moments { delta, t } => {
            let d = parse_delta(&read(&delta)?)?;
            let summary = harness::moment_summary(&d, t.parse().expect("validated by clap"), g.tolerance)?;
            emit(&g.out, "moments.json", &to_json(&summary))?;
            Ok(status(&summary.records))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            harness::error_exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
