use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dstar::experiment::{self, Case, Format, RunOptions, DEFAULT_CELL_LIMIT};
use dstar::mesh::{self, RefinementRule};
use dstar::{Error, SolveOptions};

#[derive(Parser)]
#[command(name = "dstar", version, about = "Consistency experiments for the Whitney codifferential")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment case and write its table.
    Run {
        /// table1..table5, oracle or uniformity
        #[arg(long)]
        case: String,
        #[arg(long)]
        max_level: Option<usize>,
        /// CG relative residual tolerance
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// csv, txt or md; may be repeated
        #[arg(long, default_values_t = vec!["csv".to_string(), "txt".to_string()])]
        format: Vec<String>,
        /// dump every mesh into this directory
        #[arg(long)]
        mesh_out: Option<PathBuf>,
        /// worker threads for assembly (0 = all cores)
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, default_value_t = DEFAULT_CELL_LIMIT)]
        cell_limit: usize,
    },
    /// Generate a mesh and write it in the text format.
    Mesh {
        /// crisscross, pwuniform2d or cube6
        #[arg(long)]
        generator: String,
        #[arg(long, default_value_t = 1)]
        level: usize,
        /// refinement rule for cube6
        #[arg(long)]
        rule: Option<String>,
        /// output file (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged(_) => 2,
        Error::ResourceGuard { .. } => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            case,
            max_level,
            tol,
            out_dir,
            format,
            mesh_out,
            threads,
            cell_limit,
        } => {
            let case: Case = case.parse()?;
            let formats: Vec<Format> = format.iter().map(|f| f.parse()).collect::<Result<_, _>>()?;
            if threads > 0 {
                dstar::set_threads(threads);
            }
            let opts = RunOptions {
                max_level,
                solve: SolveOptions::with_tol(tol),
                cell_limit,
                mesh_out,
            };
            let table = experiment::run_case(case, &opts)?;
            print!("{}", experiment::to_text(&table));
            for f in formats {
                let path = experiment::emit(&table, f, &out_dir)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Mesh {
            generator,
            level,
            rule,
            out,
        } => {
            let rule: Option<RefinementRule> = rule.map(|r| r.parse()).transpose()?;
            let c = mesh::generate(&generator, level, rule)?;
            match out {
                Some(p) => c.write_text(std::io::BufWriter::new(std::fs::File::create(p)?))?,
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    c.write_text(&mut lock)?;
                    lock.flush()?;
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
