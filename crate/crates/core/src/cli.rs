//! The `chaf` command line.
//!
//! Exit status: 0 for success or an accepted input, 1 for a rejected
//! input, 2 for usage and grammar errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{error::ErrorKind, Args, Parser, Subcommand, ValueEnum};

use crate::ahfa::build_ahfa;
use crate::evaluator::{build_tree, evaluate, pre_rewrite_tree};
use crate::grammar::{classify, parse_grammar, Grammar, Token};
use crate::recognizer::{Chart, Recognizer};
use crate::rewrite::{chaf_rewrite, eliminate_nulling, nnf_rewrite, Role, RewrittenGrammar};
use crate::semantics::collecting;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chaf", version, about = "Earley parsing with CHAF and NNF grammar rewrites")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Nullable / nulling classification of every symbol
    Classify(GrammarArg),
    /// Dump a rewritten grammar with roles and nulling markup
    Rewrite {
        #[command(flatten)]
        grammar: GrammarArg,
        #[arg(long, value_enum, default_value_t = Mode::NullFree)]
        mode: Mode,
    },
    /// Recognize an input and show its parse
    Parse {
        #[command(flatten)]
        grammar: GrammarArg,
        /// Whitespace-separated terminals, `name` or `name=value`
        #[arg(long, allow_hyphen_values = true)]
        input: String,
        /// Show every Earley item with the phase that added it
        #[arg(long)]
        trace: bool,
        /// Show rules of the rewritten grammar instead of the original
        #[arg(long)]
        internal: bool,
    },
    /// Terminals acceptable after a prefix
    Tokens {
        #[command(flatten)]
        grammar: GrammarArg,
        #[arg(long, allow_hyphen_values = true)]
        prefix: String,
    },
    /// Aycock-Horspool automaton of the NNF grammar
    Ahfa {
        #[command(flatten)]
        grammar: GrammarArg,
        /// Graphviz output
        #[arg(long, conflicts_with = "stats")]
        dot: bool,
        /// State size and duplication statistics, as text and CSV
        #[arg(long)]
        stats: bool,
    },
    /// Earley set sizes for an input
    Stats {
        #[command(flatten)]
        grammar: GrammarArg,
        #[arg(long, allow_hyphen_values = true)]
        input: String,
    },
}

#[derive(Debug, Args)]
pub struct GrammarArg {
    /// Grammar file
    pub grammar: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Nnf,
    Chaf,
    NullFree,
}

struct Failure(i32, String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(EXIT_USAGE, format!("error: {e}\n"))
    }
}

type Outcome = Result<(i32, String), Failure>;

/// Runs one command line; `args` starts with the program name.
pub fn run<I, T>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            return (code, e.render().to_string());
        }
    };
    match execute(cli.command) {
        Ok(done) => done,
        Err(Failure(code, msg)) => (code, msg),
    }
}

fn execute(cmd: Command) -> Outcome {
    match cmd {
        Command::Classify(g) => classify_cmd(&load(&g)?),
        Command::Rewrite { grammar, mode } => rewrite_cmd(&load(&grammar)?, mode),
        Command::Parse {
            grammar,
            input,
            trace,
            internal,
        } => parse_cmd(&load(&grammar)?, &input, trace, internal),
        Command::Tokens { grammar, prefix } => tokens_cmd(&load(&grammar)?, &prefix),
        Command::Ahfa { grammar, dot, stats } => ahfa_cmd(&load(&grammar)?, dot, stats),
        Command::Stats { grammar, input } => stats_cmd(&load(&grammar)?, &input),
    }
}

fn load(arg: &GrammarArg) -> Result<Grammar, Failure> {
    let text = fs::read_to_string(&arg.grammar)
        .map_err(|e| Failure(EXIT_USAGE, format!("error: {}: {e}\n", arg.grammar.display())))?;
    let g = parse_grammar(&text).map_err(|e| Failure(EXIT_USAGE, format!("error: {}: {e}\n", arg.grammar.display())))?;
    Ok(g)
}

/// `name` or `name=value` per whitespace-separated word.
pub fn parse_tokens(g: &Grammar, text: &str) -> Result<Vec<Token>, String> {
    text.split_whitespace()
        .map(|word| {
            let (name, value) = word.split_once('=').unwrap_or((word, word));
            match g.lookup(name) {
                Some(sym) if g.is_terminal(sym) => Ok(Token::new(sym, value)),
                _ => Err(format!("`{name}` is not a terminal of the grammar")),
            }
        })
        .collect()
}

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c + 1 == row.len() {
                line.push_str(cell);
            } else {
                let pad = widths[c] - cell.chars().count();
                line.push_str(cell);
                line.push_str(&" ".repeat(pad + 2));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn classify_cmd(g: &Grammar) -> Outcome {
    let cls = classify(g);
    let mut rows = vec![vec!["symbol".to_string(), "kind".to_string(), "class".to_string()]];
    for s in g.symbols() {
        let kind = if g.is_terminal(s) { "terminal" } else { "nonterminal" };
        rows.push(vec![g.name(s).to_string(), kind.to_string(), cls.symbol(s).to_string()]);
    }
    Ok((EXIT_OK, table(&rows)))
}

fn rewritten(g: &Grammar, mode: Mode) -> Result<RewrittenGrammar, Failure> {
    let g = g.augment()?;
    let cls = classify(&g);
    Ok(match mode {
        Mode::Nnf => nnf_rewrite(&g, &cls)?,
        Mode::Chaf => chaf_rewrite(&g, &cls)?,
        Mode::NullFree => eliminate_nulling(&chaf_rewrite(&g, &cls)?)?,
    })
}

fn rewrite_cmd(g: &Grammar, mode: Mode) -> Outcome {
    let rg = rewritten(g, mode)?;
    let mut out = rg.dump();
    let counts = rg.role_counts();
    let roles = [
        Role::PassThrough,
        Role::Verbatim,
        Role::ChafHead,
        Role::ChafInner,
        Role::ChafTail,
        Role::NullingAlias,
    ];
    let summary: Vec<String> = roles
        .iter()
        .filter_map(|r| counts.get(r).map(|n| format!("{r} {n}")))
        .collect();
    let _ = writeln!(
        out,
        "# {} rules from {} ({})",
        rg.grammar().rules().len(),
        rg.original().rules().len(),
        summary.join(", ")
    );
    if rg.nullable_start() {
        out.push_str("# the empty input is a sentence\n");
    }
    Ok((EXIT_OK, out))
}

fn recognizer(g: &Grammar) -> Result<Recognizer, Failure> {
    Ok(Recognizer::new(rewritten(g, Mode::NullFree)?)?)
}

fn run_chart<'r>(rec: &'r Recognizer, tokens: Vec<Token>) -> Result<Chart<'r>, Failure> {
    let n = tokens.len();
    let mut chart = Chart::with_input(rec, tokens);
    while chart.frontier() < n {
        chart.step()?;
    }
    Ok(chart)
}

fn verdict(chart: &Chart<'_>, g: &Grammar) -> String {
    if chart.accepted() {
        return "accepted\n".to_string();
    }
    match chart.sets().iter().position(|s| s.is_empty()) {
        Some(k) => {
            let t = &chart.input()[k - 1];
            format!("rejected at token {} ({})\n", k - 1, g.name(t.symbol))
        }
        None => "rejected: input ends early\n".to_string(),
    }
}

fn parse_cmd(g: &Grammar, input: &str, trace: bool, internal: bool) -> Outcome {
    let rec = recognizer(g)?;
    let tokens = parse_tokens(g, input).map_err(|e| Failure(EXIT_USAGE, format!("error: {e}\n")))?;
    let chart = run_chart(&rec, tokens)?;
    let mut out = String::new();
    if trace {
        if internal {
            out.push_str(&chart.trace());
        } else {
            for i in 0..=chart.frontier() {
                out.push_str(&chart.render_progress(i));
            }
        }
    }
    out.push_str(&verdict(&chart, g));
    let Some(tree) = build_tree(&chart) else {
        return Ok((EXIT_REJECTED, out));
    };
    let rg = rec.rewritten();
    if internal {
        out.push_str(&tree.render(rg.grammar()));
    } else {
        out.push_str(&pre_rewrite_tree(rg, &tree, chart.input())?.render(rg.original()));
    }
    let value = evaluate(rg, &tree, chart.input(), &collecting(rg.original()))?;
    let _ = writeln!(out, "value {value}");
    Ok((EXIT_OK, out))
}

fn tokens_cmd(g: &Grammar, prefix: &str) -> Outcome {
    let rec = recognizer(g)?;
    let tokens = parse_tokens(g, prefix).map_err(|e| Failure(EXIT_USAGE, format!("error: {e}\n")))?;
    let chart = run_chart(&rec, tokens)?;
    let mut names: Vec<&str> = chart.acceptable_tokens().into_iter().map(|s| g.name(s)).collect();
    names.sort_unstable();
    Ok((EXIT_OK, format!("{}\n", names.join(" "))))
}

fn ahfa_cmd(g: &Grammar, dot: bool, stats: bool) -> Outcome {
    let a = build_ahfa(&rewritten(g, Mode::Nnf)?)?;
    let out = if dot {
        a.render_dot()
    } else if stats {
        let s = a.statistics();
        format!("{s}\n{}", s.to_csv())
    } else {
        a.render_text()
    };
    Ok((EXIT_OK, out))
}

fn stats_cmd(g: &Grammar, input: &str) -> Outcome {
    let rec = recognizer(g)?;
    let tokens = parse_tokens(g, input).map_err(|e| Failure(EXIT_USAGE, format!("error: {e}\n")))?;
    let chart = run_chart(&rec, tokens)?;
    let stats = chart.stats();
    let mut rows = vec![vec!["set".to_string(), "items".to_string(), "attempts".to_string()]];
    for (i, (items, attempts)) in stats.items_per_set.iter().zip(&stats.attempts_per_set).enumerate() {
        rows.push(vec![i.to_string(), items.to_string(), attempts.to_string()]);
    }
    rows.push(vec!["total".to_string(), stats.total_items.to_string(), stats.total_attempts.to_string()]);
    let mut out = table(&rows);
    let _ = writeln!(out, "duplicate attempts {}", stats.duplicate_attempts);
    out.push_str(&verdict(&chart, g));
    let code = if chart.accepted() { EXIT_OK } else { EXIT_REJECTED };
    Ok((code, out))
}
