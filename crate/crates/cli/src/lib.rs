//! Command-line front end for the layerseal analyses.
//!
//! Output is line-oriented `key: value` text unless `--dot` asks for a
//! Graphviz graph. Exit codes: 0 success, 1 negative analysis result, 2 bad
//! input, 3 oracle budget exceeded or internal failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use layerseal::{
    build_program_graph, closed_channels, compute_signature, construct_seal, deadlock_free, expand_plan,
    is_balanced, is_seal, is_sealable, oracle_channel_open, oracle_seals, oracle_tcc, parse, AnalysisError,
    Channel, OracleBudget, OracleError, Program, SealError, SealPlan, Signature,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CliResult {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliResult {
    fn ok(stdout: String) -> Self {
        CliResult {
            exit_code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn with_code(exit_code: i32, stdout: String) -> Self {
        CliResult {
            exit_code,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(exit_code: i32, message: impl std::fmt::Display) -> Self {
        CliResult {
            exit_code,
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
        }
    }
}

const AFTER_HELP: &str = "\
Output format:
  Results are printed as `key: value` lines, for example `seals: true`,
  `sealable: false`, `open: 1->2` or `open_channels: 13`. `--dot` prints a
  Graphviz digraph instead. Seal plans are written one transmission per line
  as `src -> dst [phase]` with phase one of direct-close, converge-cast,
  broadcast.

Exit codes:
  0  success / positive answer
  1  negative answer (not sealable, not a seal, disagreement, ...)
  2  input error (unreadable file, parse error, unbalanced or deadlocking program)
  3  oracle budget exceeded or internal error";

#[derive(Debug, Parser)]
#[command(name = "layerseal", version, about = "Sealing analysis for straight-line message-passing layers")]
#[command(after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report balance and deadlock freedom.
    Check { file: PathBuf },
    /// Print the program graph.
    Graph {
        file: PathBuf,
        #[arg(long)]
        dot: bool,
    },
    /// Print the sealing signature.
    Sig {
        file: PathBuf,
        #[arg(long)]
        dot: bool,
    },
    /// List closed and open channels.
    Channels { file: PathBuf },
    /// Decide whether the program can be sealed.
    Sealable { file: PathBuf },
    /// Decide whether Q seals P.
    IsSeal { p: PathBuf, q: PathBuf },
    /// Synthesize a seal.
    Seal {
        file: PathBuf,
        /// Write the plan to this file instead of stdout.
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Expand a seal plan into a program.
    Expand {
        plan: PathBuf,
        #[arg(short = 'n')]
        processes: usize,
    },
    /// Cross-check static answers against brute-force run enumeration.
    Verify {
        query: Query,
        /// Program files; `is-seal` takes them in (P, Q) pairs.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Maximum number of candidate matchings per query.
        #[arg(long, default_value_t = OracleBudget::default().max_matchings)]
        budget: u64,
        /// Maximum number of events per enumerated world.
        #[arg(long, default_value_t = OracleBudget::default().max_events)]
        max_events: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Query {
    Channels,
    IsSeal,
    Tcc,
}

/// Runs one command. `argv[0]` is the program name.
pub fn run<I, T>(argv: I) -> CliResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let text = err.render().to_string();
            return if err.use_stderr() {
                CliResult {
                    exit_code: EXIT_INPUT,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                CliResult::ok(text)
            };
        }
    };
    match execute(cli.command) {
        Ok(result) => result,
        Err(result) => result,
    }
}

type Outcome = Result<CliResult, CliResult>;

fn load(path: &Path) -> Result<Program, CliResult> {
    let text = fs::read_to_string(path)
        .map_err(|err| CliResult::fail(EXIT_INPUT, format!("{}: {err}", path.display())))?;
    parse(&text).map_err(|err| {
        CliResult::fail(
            EXIT_INPUT,
            format!("{}:{}: {} ({:?})", path.display(), err.span, err.message, err.kind),
        )
    })
}

fn analysis(err: AnalysisError) -> CliResult {
    CliResult::fail(EXIT_INPUT, err)
}

fn oracle(err: OracleError) -> CliResult {
    match err {
        OracleError::BudgetExceeded(_) => CliResult::fail(EXIT_BUDGET, err),
        _ => CliResult::fail(EXIT_INPUT, err),
    }
}

fn execute(command: Command) -> Outcome {
    match command {
        Command::Check { file } => check(&load(&file)?),
        Command::Graph { file, dot } => graph(&load(&file)?, dot),
        Command::Sig { file, dot } => {
            let sig = compute_signature(&load(&file)?).map_err(analysis)?;
            Ok(CliResult::ok(if dot { signature_dot(&sig) } else { sig.to_string() }))
        }
        Command::Channels { file } => channels(&load(&file)?),
        Command::Sealable { file } => {
            let ok = is_sealable(&load(&file)?).map_err(analysis)?;
            Ok(verdict("sealable", ok))
        }
        Command::IsSeal { p, q } => {
            let ok = is_seal(&load(&p)?, &load(&q)?).map_err(analysis)?;
            Ok(verdict("seals", ok))
        }
        Command::Seal { file, output } => seal(&load(&file)?, output.as_deref()),
        Command::Expand { plan, processes } => {
            let text = fs::read_to_string(&plan)
                .map_err(|err| CliResult::fail(EXIT_INPUT, format!("{}: {err}", plan.display())))?;
            let parsed: SealPlan = text
                .parse()
                .map_err(|err| CliResult::fail(EXIT_INPUT, format!("{}: {err}", plan.display())))?;
            let program = expand_plan(&parsed, processes).map_err(|err| CliResult::fail(EXIT_INPUT, err))?;
            Ok(CliResult::ok(format!("{}\n", layerseal::print(&program))))
        }
        Command::Verify {
            query,
            files,
            budget,
            max_events,
        } => {
            let budget = OracleBudget {
                max_matchings: budget,
                max_events,
            };
            verify(query, &files, budget)
        }
    }
}

fn verdict(key: &str, ok: bool) -> CliResult {
    CliResult::with_code(
        if ok { EXIT_OK } else { EXIT_NEGATIVE },
        format!("{key}: {ok}\n"),
    )
}

fn check(p: &Program) -> Outcome {
    let balanced = is_balanced(p);
    let mut out = format!("balanced: {balanced}\n");
    if !balanced {
        out.push_str("deadlock_free: unknown\n");
        return Ok(CliResult::with_code(EXIT_NEGATIVE, out));
    }
    let free = deadlock_free(p).map_err(analysis)?;
    writeln!(out, "deadlock_free: {free}").unwrap();
    Ok(CliResult::with_code(if free { EXIT_OK } else { EXIT_NEGATIVE }, out))
}

fn graph(p: &Program, dot: bool) -> Outcome {
    let g = build_program_graph(p).map_err(analysis)?;
    let mut out = String::new();
    if dot {
        out.push_str("digraph program {\n");
        for node in g.nodes() {
            let shape = if node.is_dummy() { "box" } else { "circle" };
            writeln!(out, "  \"{node}\" [shape={shape}];").unwrap();
        }
        for &(a, b) in g.edges() {
            writeln!(out, "  \"{}\" -> \"{}\";", g.nodes()[a], g.nodes()[b]).unwrap();
        }
        out.push_str("}\n");
    } else {
        writeln!(out, "nodes: {}", g.nodes().len()).unwrap();
        writeln!(out, "edges: {}", g.edges().len()).unwrap();
        for &(a, b) in g.edges() {
            writeln!(out, "edge: {} -> {}", g.nodes()[a], g.nodes()[b]).unwrap();
        }
    }
    Ok(CliResult::ok(out))
}

/// Edges implied by two others are drawn thin.
fn signature_dot(sig: &Signature) -> String {
    let mut out = String::from("digraph signature {\n");
    for node in sig.nodes() {
        let shape = if node.is_dummy() { "box" } else { "circle" };
        writeln!(out, "  \"{node}\" [shape={shape}];").unwrap();
    }
    for &(a, b) in sig.edges() {
        let transitive = sig
            .nodes()
            .iter()
            .any(|&mid| sig.has_edge(a, mid) && sig.has_edge(mid, b));
        let style = if transitive { " [penwidth=0.4]" } else { "" };
        writeln!(out, "  \"{a}\" -> \"{b}\"{style};").unwrap();
    }
    out.push_str("}\n");
    out
}

fn channels(p: &Program) -> Outcome {
    let closed = closed_channels(p).map_err(analysis)?;
    let mut out = String::new();
    for ch in closed.edges() {
        writeln!(out, "closed: {ch}").unwrap();
    }
    let open = closed.open_channels();
    for ch in &open {
        writeln!(out, "open: {ch}").unwrap();
    }
    writeln!(out, "open_channels: {}", open.len()).unwrap();
    Ok(CliResult::ok(out))
}

fn seal(p: &Program, output: Option<&Path>) -> Outcome {
    let plan = match construct_seal(p) {
        Ok(plan) => plan,
        Err(SealError::Unsealable) => return Ok(verdict("sealable", false)),
        Err(SealError::Analysis(err)) => return Err(analysis(err)),
    };
    let open = closed_channels(p).map_err(analysis)?.open_channels().len();
    let mut out = String::from("sealable: true\n");
    writeln!(out, "open_channels: {open}").unwrap();
    writeln!(out, "transmissions: {}", plan.len()).unwrap();
    match output {
        Some(path) => {
            fs::write(path, plan.to_string())
                .map_err(|err| CliResult::fail(EXIT_INPUT, format!("{}: {err}", path.display())))?;
            writeln!(out, "plan: {}", path.display()).unwrap();
        }
        None => {
            for line in plan.to_string().lines() {
                writeln!(out, "transmission: {line}").unwrap();
            }
        }
    }
    Ok(CliResult::ok(out))
}

fn verify(query: Query, files: &[PathBuf], budget: OracleBudget) -> Outcome {
    let programs = files.iter().map(|f| load(f)).collect::<Result<Vec<_>, _>>()?;
    let mut out = String::new();
    let mut all_agree = true;
    let mut report = |label: String, stat: bool, orac: bool| {
        let agree = stat == orac;
        all_agree &= agree;
        let tag = if agree { "AGREE" } else { "DISAGREE" };
        writeln!(out, "{label}: {tag} static={stat} oracle={orac}").unwrap();
    };
    match query {
        Query::Channels => {
            for (file, p) in files.iter().zip(&programs) {
                let sig = compute_signature(p).map_err(analysis)?;
                for ch in Channel::all(p.n()) {
                    let orac = oracle_channel_open(p, ch, budget).map_err(oracle)?;
                    report(format!("open {} {ch}", file.display()), sig.leaves_open(ch), orac);
                }
            }
        }
        Query::IsSeal => {
            if programs.len() % 2 != 0 {
                return Err(CliResult::fail(EXIT_INPUT, "is-seal expects files in (P, Q) pairs"));
            }
            for (pair, names) in programs.chunks(2).zip(files.chunks(2)) {
                let stat = is_seal(&pair[0], &pair[1]).map_err(analysis)?;
                let orac = oracle_seals(&pair[0], &pair[1], budget).map_err(oracle)?;
                report(
                    format!("seals {} {}", names[0].display(), names[1].display()),
                    stat,
                    orac,
                );
            }
        }
        Query::Tcc => {
            for (file, p) in files.iter().zip(&programs) {
                let empty = Program::empty("empty", p.n());
                let stat = is_seal(p, &empty).map_err(analysis)?;
                let orac = oracle_tcc(p, budget).map_err(oracle)?;
                report(format!("tcc {}", file.display()), stat, orac);
            }
        }
    }
    Ok(CliResult::with_code(if all_agree { EXIT_OK } else { EXIT_NEGATIVE }, out))
}
