//! `slocc`: load state files, run equivalence checks, print JSON reports.
//!
//! Exit codes: 0 equivalent (or check passed), 1 inequivalent (or check
//! failed), 2 inconclusive, 64 usage, 65 schema, 66 unreadable file,
//! 67 dimension mismatch, 68 invalid state or operator.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use slocc_core::error::Error;
use slocc_core::fixtures::{fixtures, FixtureParams};
use slocc_core::io::{self, FormatError, Loaded, Num, StateFile, VerdictReport, WitnessCheckReport, WitnessFile};
use slocc_core::linalg::{self, ComplexMatrix};
use slocc_core::mixed::check_mixed_equivalence;
use slocc_core::oracle::{self, make_equivalent_pair, random_mixed, random_pure};
use slocc_core::pure::{check_pure_equivalence, rank_signature};
use slocc_core::shape::SystemShape;
use slocc_core::state::StateRecord;
use slocc_core::tensor_factor::{decomposability, extract_factors};
use slocc_core::verdict::CheckOptions;

const USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "slocc", version, about = "SLOCC equivalence checks for multipartite quantum states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Seed {
    /// Seed for every randomized search step.
    #[arg(long, env = "SLOCC_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Rank report of the realignment of the party-i bipartition.
    Realign {
        file: PathBuf,
        /// Party number, starting at 1.
        #[arg(long)]
        party: usize,
    },
    /// Decide whether an operator is a Kronecker product and extract its factors.
    Factor {
        file: PathBuf,
        /// Local dimensions, overriding the file's.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
    },
    /// Coefficient-matrix ranks over bipartitions of a pure state.
    Classify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Equivalence of two pure states (first = A · second).
    CheckPure {
        a: PathBuf,
        b: PathBuf,
        /// Search every bipartition instead of the single-party cuts.
        #[arg(long)]
        all_cuts: bool,
        #[command(flatten)]
        seed: Seed,
    },
    /// Equivalence of two density matrices (first ∝ A · second · A†).
    CheckMixed {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        seed: Seed,
    },
    /// Write example or random state files.
    Gen(GenArgs),
    /// Check a witness: does it map the second state onto the first?
    Verify { a: PathBuf, b: PathBuf, witness: PathBuf },
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["example", "random"]))]
struct GenArgs {
    /// Worked example number; writes ex<N>a.json and ex<N>b.json.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    example: Option<u8>,
    /// Example parameters as key=value pairs.
    #[arg(long, value_delimiter = ',', requires = "example")]
    params: Vec<String>,
    #[arg(long, value_enum)]
    random: Option<Kind>,
    #[arg(long, value_delimiter = ',', requires = "random")]
    dims: Option<Vec<usize>>,
    /// Also write an ILO image of the state and the witness relating them.
    #[arg(long, requires = "random")]
    equivalent_pair: bool,
    /// Output directory; random single states go to standard output without it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    seed: Seed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Pure,
    Mixed,
}

enum Failure {
    Usage(String),
    Format(FormatError),
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Format(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Format(FormatError::InvalidState(e))
    }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
        Err(Failure::Format(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Realign { file, party } => realign(&file, party),
        Command::Factor { file, dims } => factor(&file, dims),
        Command::Classify { file, json } => classify(&file, json),
        Command::CheckPure { a, b, all_cuts, seed } => {
            let (phi, psi) = (pure(&a)?, pure(&b)?);
            let opts = CheckOptions {
                all_cuts,
                ..CheckOptions::with_seed(seed.seed)
            };
            let verdict = check_pure_equivalence(&phi, &psi, &opts)?;
            report(&verdict, seed.seed)
        }
        Command::CheckMixed { a, b, seed } => {
            let rho1 = io::read_state(&a)?.to_mixed();
            let rho2 = io::read_state(&b)?.to_mixed();
            let verdict = check_mixed_equivalence(&rho1, &rho2, &CheckOptions::with_seed(seed.seed))?;
            report(&verdict, seed.seed)
        }
        Command::Gen(args) => gen(args),
        Command::Verify { a, b, witness } => {
            let (first, second) = (io::read_state(&a)?, io::read_state(&b)?);
            let w = io::read_witness(&witness)?;
            let check = match (&first, &second) {
                (StateRecord::Pure(phi), StateRecord::Pure(psi)) => oracle::verify_witness_pure(phi, psi, &w)?,
                _ => oracle::verify_witness_mixed(&first.to_mixed(), &second.to_mixed(), &w)?,
            };
            print!("{}", WitnessCheckReport::new(&check).to_json());
            Ok(if check.passed { 0 } else { 1 })
        }
    }
}

fn report(verdict: &slocc_core::verdict::Verdict, seed: u64) -> CliResult {
    print!("{}", VerdictReport::new(verdict, seed).to_json());
    Ok(verdict.outcome.exit_code() as u8)
}

fn pure(path: &Path) -> Result<slocc_core::state::PureState, Failure> {
    match io::read_state(path)? {
        StateRecord::Pure(p) => Ok(p),
        StateRecord::Mixed(_) => Err(FormatError::Schema(format!("{} holds a mixed state; check-pure needs pure states", path.display())).into()),
    }
}

fn operator(path: &Path) -> Result<(SystemShape, ComplexMatrix), Failure> {
    Ok(match io::read_file(path)? {
        Loaded::Matrix { shape, matrix } => (shape, matrix),
        Loaded::State(s) => (s.shape().clone(), s.to_mixed().rho().clone()),
    })
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

#[derive(Serialize)]
struct RealignReport {
    party: usize,
    rows: usize,
    cols: usize,
    numerical_rank: usize,
    rank1_residual: Num,
    singular_values: Vec<Num>,
}

fn realign(path: &Path, party: usize) -> CliResult {
    let (shape, a) = operator(path)?;
    if party == 0 || party > shape.parties() {
        return Err(Failure::Usage(format!("--party must lie in 1..={}", shape.parties())));
    }
    let r = linalg::party_realignment(&a, &shape, party - 1)?;
    let rep = linalg::rank_report(&r);
    print_json(&RealignReport {
        party,
        rows: r.nrows(),
        cols: r.ncols(),
        numerical_rank: rep.numerical_rank,
        rank1_residual: Num(rep.rank1_residual),
        singular_values: rep.singular_values.iter().map(|&s| Num(s)).collect(),
    });
    Ok(0)
}

#[derive(Serialize)]
struct PartyEntry {
    party: usize,
    numerical_rank: usize,
    rank1_residual: Num,
}

#[derive(Serialize)]
struct FactorReport {
    decomposable: bool,
    invertible: bool,
    per_party: Vec<PartyEntry>,
    factors: Option<WitnessFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

fn factor(path: &Path, dims: Option<Vec<usize>>) -> CliResult {
    let (mut shape, a) = operator(path)?;
    if let Some(dims) = dims {
        let requested = SystemShape::new(dims).map_err(|e| Failure::Usage(e.to_string()))?;
        if requested.total() != shape.total() {
            return Err(FormatError::Dimension(format!(
                "--dims multiply to {} but the operator is {}x{}",
                requested.total(),
                a.nrows(),
                a.ncols()
            ))
            .into());
        }
        shape = requested;
    }
    let rep = decomposability(&a, &shape)?;
    let extracted = if rep.decomposable { Some(extract_factors(&a, &shape)) } else { None };
    let (factors, reason) = match extracted {
        Some(Ok(w)) => (Some(WitnessFile::from_factors(&w)), None),
        Some(Err(e)) => (None, Some(e.to_string())),
        None if !rep.invertible => (None, Some("operator is singular".to_string())),
        None => (None, Some("realignment rank exceeds 1".to_string())),
    };
    let ok = factors.is_some();
    print_json(&FactorReport {
        decomposable: rep.decomposable && ok,
        invertible: rep.invertible,
        per_party: rep
            .per_party
            .iter()
            .map(|p| PartyEntry {
                party: p.party + 1,
                numerical_rank: p.numerical_rank,
                rank1_residual: Num(p.rank1_residual),
            })
            .collect(),
        factors,
        reason,
    });
    Ok(if ok { 0 } else { 1 })
}

fn cut_label(rows: &[usize], parties: usize) -> String {
    let fmt = |set: Vec<usize>| set.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(",");
    let cols: Vec<usize> = (0..parties).filter(|p| !rows.contains(p)).collect();
    format!("{{{}}}|{{{}}}", fmt(rows.to_vec()), fmt(cols))
}

fn classify(path: &Path, json: bool) -> CliResult {
    let psi = pure(path)?;
    let parties = psi.shape().parties();
    let sig = rank_signature(&psi);
    if json {
        let table: BTreeMap<String, usize> = sig.entries.iter().map(|(s, &r)| (cut_label(s, parties), r)).collect();
        print_json(&table);
    } else {
        let labels: Vec<(String, usize)> = sig.entries.iter().map(|(s, &r)| (cut_label(s, parties), r)).collect();
        let width = labels.iter().map(|(l, _)| l.len()).max().unwrap_or(3).max(3);
        println!("{:<width$}  rank", "cut");
        for (label, rank) in labels {
            println!("{label:<width$}  {rank}");
        }
    }
    Ok(0)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| {
        Failure::Format(FormatError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn parse_params(raw: &[String]) -> Result<Vec<(String, f64)>, Failure> {
    raw.iter()
        .filter(|s| !s.is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("parameter '{kv}' is not key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("parameter '{k}' has non-numeric value '{v}'")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn gen(args: GenArgs) -> CliResult {
    if let Some(n) = args.example {
        let params = FixtureParams::from_pairs(n, &parse_params(&args.params)?)
            .map_err(|e| Failure::Usage(e.to_string()))?;
        let (a, b) = fixtures(&params)?;
        let dir = args.out.unwrap_or_else(|| PathBuf::from("."));
        write(&dir, &format!("ex{n}a.json"), &io::state_to_json(&a, Some(format!("example {n}, first state"))))?;
        write(&dir, &format!("ex{n}b.json"), &io::state_to_json(&b, Some(format!("example {n}, second state"))))?;
        return Ok(0);
    }
    let kind = args.random.expect("clap enforces the source group");
    let dims = args.dims.ok_or_else(|| Failure::Usage("--random needs --dims".into()))?;
    let shape = SystemShape::new(dims).map_err(|e| Failure::Usage(e.to_string()))?;
    let seed = args.seed.seed;
    let state = match kind {
        Kind::Pure => StateRecord::Pure(random_pure(&shape, seed)),
        Kind::Mixed => StateRecord::Mixed(random_mixed(&shape, seed, None)),
    };
    let label = Some(format!("random {}, seed {seed}", state.kind()));
    if args.equivalent_pair {
        let dir = args.out.unwrap_or_else(|| PathBuf::from("."));
        let (image, w) = make_equivalent_pair(&state, seed.wrapping_add(1))?;
        write(&dir, "pair_a.json", &io::state_to_json(&image, Some(format!("ILO image of seed {seed}"))))?;
        write(&dir, "pair_b.json", &io::state_to_json(&state, label))?;
        let witness = serde_json::to_string_pretty(&WitnessFile::from_factors(&w)).expect("witness serializes") + "\n";
        write(&dir, "pair_witness.json", &witness)?;
        return Ok(0);
    }
    let text = StateFile::from_state(&state, label).to_json();
    match args.out {
        Some(dir) => write(&dir, "random.json", &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}
