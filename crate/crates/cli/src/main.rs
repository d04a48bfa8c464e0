//! `utcodim`: codimensions of upper-triangular matrix algebras with gradings
//! and involutions, and checks of the independence results behind them.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 budget exceeded,
//! 3 I/O or parse error, 4 invalid flag combination.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use utcodim::codim::{
    asymptotic_report, codim, full_matrix, lower_bound_check, recurrence_check, sandwich_check,
    verify_drensky_independence, verify_star_family, witness_matrix, Budget, CodimError,
    CodimRequest,
};
use utcodim::groups::{Group, GroupElement};
use utcodim::linalg::{LinalgError, RankPolicy};
use utcodim::ut::{ElementaryGrading, GradingFile, InvolutionKind, UtError};

use utcodim_cli::output::{Evidence, GradingInspection, Rendered, VerifyOutput};

#[derive(Parser, Debug)]
#[command(name = "utcodim", version, about = "Graded star-codimensions of UT_n")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// exact: rational elimination; modp: random primes; auto: exact below 5000 rows
    #[arg(long, value_enum, default_value_t = RankModeArg::Auto, global = true)]
    rank_mode: RankModeArg,
    /// Primes drawn up front in modular mode
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=64), global = true)]
    primes: u32,
    /// Rows allowed in one evaluation matrix
    #[arg(long, default_value_t = Budget::default().max_rows, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    max_rows: u64,
    /// Distinct columns allowed in one evaluation matrix
    #[arg(long, default_value_t = Budget::default().max_columns as u64, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    max_columns: u64,
    /// Worker threads (defaults to UTCODIM_THREADS, then the core count)
    #[arg(long, env = "UTCODIM_THREADS", value_parser = clap::value_parser!(u32).range(1..), global = true)]
    threads: Option<u32>,
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Write the result here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Include elapsed time in reports (makes output run-dependent)
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RankModeArg {
    Exact,
    Modp,
    Auto,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute c_m, optionally graded and with an involution
    Codim {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Elementary grading JSON file
        #[arg(long)]
        grading: Option<PathBuf>,
        #[arg(long)]
        involution: Option<InvolutionKind>,
        /// Write the evaluation matrix in coordinate form
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
    },
    /// Run independence and inequality checks
    Verify {
        #[arg(value_enum)]
        target: Target,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = InvolutionKind::Orthogonal)]
        involution: InvolutionKind,
        /// Grading for the sandwich check (default: Z2 with every
        /// superdiagonal unit odd)
        #[arg(long)]
        grading: Option<PathBuf>,
    },
    /// Tabulate c_m against the growth targets for m = 1..m-max
    Asymptotics {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m_max: usize,
        #[arg(long)]
        grading: Option<PathBuf>,
        #[arg(long)]
        involution: Option<InvolutionKind>,
        /// Digits after the decimal point in the ratio column
        #[arg(long, default_value_t = 6)]
        precision: usize,
    },
    /// Inspect a grading file: support, components, involution compatibility
    Grading {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        involution: Option<InvolutionKind>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Target {
    Drensky,
    StarFamily,
    Witness,
    LowerBound,
    Recurrence,
    Sandwich,
    All,
}

#[derive(Debug)]
enum Failure {
    Budget(String),
    Io(String),
    Invalid(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Budget(_) => 2,
            Failure::Io(_) => 3,
            Failure::Invalid(_) => 4,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Budget(s) | Failure::Io(s) | Failure::Invalid(s) | Failure::Other(s) => s,
        }
    }
}

impl From<CodimError> for Failure {
    fn from(e: CodimError) -> Self {
        match e {
            CodimError::Budget(_) => Failure::Budget(e.to_string()),
            CodimError::Invalid(_) => Failure::Invalid(e.to_string()),
            CodimError::Ut(UtError::SymplecticOddSize(_)) => Failure::Invalid(e.to_string()),
            CodimError::Linalg(LinalgError::PrimesExhausted(_)) => Failure::Other(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<UtError> for Failure {
    fn from(e: UtError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(t) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t as usize)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn policy(common: &Common) -> RankPolicy {
    let base = match common.rank_mode {
        RankModeArg::Exact => RankPolicy::exact(),
        RankModeArg::Modp => RankPolicy::modular(),
        RankModeArg::Auto => RankPolicy::default(),
    };
    RankPolicy {
        prime_count: common.primes as usize,
        max_primes: base.max_primes.max(common.primes as usize + 4),
        ..base
    }
}

fn budget(common: &Common) -> Budget {
    Budget {
        max_rows: common.max_rows,
        max_columns: usize::try_from(common.max_columns).unwrap_or(usize::MAX),
    }
}

fn read_grading(path: &Path) -> Result<ElementaryGrading, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    let file: GradingFile =
        serde_json::from_str(&text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    ElementaryGrading::from_file(&file).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn check_size(grading: &ElementaryGrading, n: usize) -> Result<(), Failure> {
    if grading.size() != n {
        return Err(Failure::Invalid(format!(
            "grading is on UT_{} but --n is {n}",
            grading.size()
        )));
    }
    Ok(())
}

fn odd_z2(n: usize) -> Result<ElementaryGrading, Failure> {
    let z2 = Group::cyclic(2).map_err(|e| Failure::Other(e.to_string()))?;
    Ok(ElementaryGrading::new(
        z2,
        n,
        vec![GroupElement::Cyclic(1); n.saturating_sub(1)],
    )?)
}

fn emit(common: &Common, rendered: &dyn Rendered) -> Result<(), Failure> {
    let text = match common.format {
        Format::Text => rendered.text(),
        Format::Json => rendered.json(),
        Format::Csv => rendered.csv().map_err(|e| Failure::Io(e.to_string()))?,
    };
    match &common.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let common = &cli.common;
    let policy = policy(common);
    let budget = budget(common);
    match &cli.command {
        Command::Codim {
            n,
            m,
            grading,
            involution,
            dump_matrix,
        } => {
            let grading = grading.as_deref().map(read_grading).transpose()?;
            if let Some(g) = &grading {
                check_size(g, *n)?;
            }
            let req = CodimRequest::new(*n, *m)
                .with_grading(grading)
                .with_involution(*involution)
                .with_policy(policy)
                .with_budget(budget);
            let mut report = codim(&req)?;
            if !common.timing {
                report.elapsed_ms = None;
            }
            if let Some(path) = dump_matrix {
                let matrix = full_matrix(&req)?;
                let file = fs::File::create(path)
                    .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
                matrix
                    .write_coordinate(io::BufWriter::new(file))
                    .map_err(|e| Failure::Io(e.to_string()))?;
            }
            emit(common, &report)?;
            Ok(0)
        }
        Command::Verify {
            target,
            n,
            m,
            involution,
            grading,
        } => {
            let grading = match grading {
                Some(path) => {
                    let g = read_grading(path)?;
                    check_size(&g, *n)?;
                    Some(g)
                }
                None => None,
            };
            let targets: Vec<Target> = match target {
                Target::All => vec![
                    Target::Drensky,
                    Target::StarFamily,
                    Target::Witness,
                    Target::LowerBound,
                    Target::Recurrence,
                    Target::Sandwich,
                ],
                t => vec![*t],
            };
            let mut results = Vec::new();
            for t in targets {
                let kind = *involution;
                let evidence = match t {
                    Target::Drensky => {
                        Evidence::Drensky(verify_drensky_independence(*n, *m, &policy, &budget)?)
                    }
                    Target::StarFamily => {
                        Evidence::StarFamily(verify_star_family(*n, *m, kind, &policy, &budget)?)
                    }
                    Target::Witness => Evidence::Witness(witness_matrix(*n, *m, kind)?.1),
                    Target::LowerBound => {
                        Evidence::LowerBound(lower_bound_check(*n, *m, kind, &policy, &budget)?)
                    }
                    Target::Recurrence => {
                        Evidence::Recurrence(recurrence_check(*n, *m, &policy, &budget)?)
                    }
                    Target::Sandwich => {
                        let g = match &grading {
                            Some(g) => g.clone(),
                            None => odd_z2(*n)?,
                        };
                        Evidence::Sandwich(sandwich_check(*n, *m, &g, kind, &policy, &budget)?)
                    }
                    Target::All => unreachable!("expanded above"),
                };
                results.push(evidence);
            }
            let out = VerifyOutput::new(results);
            emit(common, &out)?;
            Ok(if out.passed { 0 } else { 1 })
        }
        Command::Asymptotics {
            n,
            m_max,
            grading,
            involution,
            precision,
        } => {
            let grading = grading.as_deref().map(read_grading).transpose()?;
            if let Some(g) = &grading {
                check_size(g, *n)?;
            }
            let table = asymptotic_report(
                *n,
                *m_max,
                grading.as_ref(),
                *involution,
                *precision,
                &policy,
                &budget,
            )?;
            emit(common, &table)?;
            Ok(0)
        }
        Command::Grading { file, involution } => {
            let grading = read_grading(file)?;
            let inspection = GradingInspection::new(&grading, *involution)?;
            emit(common, &inspection)?;
            Ok(0)
        }
    }
}
