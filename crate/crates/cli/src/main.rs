//! `mcdmg`: command-line front end for recoverability analysis on
//! cluster-level missingness graphs.
//!
//! Exit status: 0 on success, 1 when the computed answer is negative (not
//! recoverable, not derived, incompatible, invalid), 2 when the input could
//! not be processed.

mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "mcdmg",
    version,
    about = "Recoverability analysis for cluster-level missingness graphs"
)]
#[command(after_help = concat!(
    "Examples:\n",
    "  mcdmg check-joint crates/core/fixtures/fig2b.mcg\n",
    "  mcdmg recover-effect crates/core/fixtures/fig3.mcg --treatment CX --outcome CY\n",
    "  mcdmg oracle crates/core/fixtures/fig2b.mcg --query joint --seeds 100",
))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Latex,
    Text,
    Dot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    CDmg,
    MCDmg,
    CmCDmg,
}

#[derive(Args, Debug)]
pub struct GraphInput {
    /// Graph file in the `.mcg` text format.
    pub file: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a graph and print it back in normal form.
    #[command(after_help = "Example:\n  mcdmg parse crates/core/fixtures/fig1c.mcg --format dot")]
    Parse {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Check a graph against the invariants of its declared class.
    #[command(after_help = "Example:\n  mcdmg validate crates/core/fixtures/fig2a.mcg")]
    Validate {
        #[command(flatten)]
        input: GraphInput,
    },
    /// Decide d-separation, optionally in a mutilated graph.
    #[command(after_help = "Example:\n  mcdmg dsep crates/core/fixtures/fig2b.mcg --x CY --y R_CY --given CZ")]
    Dsep {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
        /// Remove edges into these vertices first.
        #[arg(long, value_delimiter = ',')]
        overline: Vec<String>,
        /// Remove edges out of these vertices first.
        #[arg(long, value_delimiter = ',')]
        underline: Vec<String>,
    },
    /// Merge the indicators of an m-C-DMG per cluster, or project a
    /// variable-level graph onto a clustering.
    #[command(after_help = concat!(
        "Examples:\n",
        "  mcdmg abstract crates/core/fixtures/fig2a.mcg\n",
        "  mcdmg abstract crates/core/fixtures/fig1a.mcg --clustering crates/core/fixtures/fig1.clusters --level c-dmg",
    ))]
    Abstract {
        #[command(flatten)]
        input: GraphInput,
        /// Clustering file (`cluster C { vars .. }` lines) for variable-level input.
        #[arg(long)]
        clustering: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "cm-c-dmg")]
        level: LevelArg,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Check that a variable-level graph projects onto an abstract graph.
    #[command(
        after_help = "Example:\n  mcdmg compatible crates/core/fixtures/fig1c.mcg crates/core/fixtures/fig1a.mcg --clustering crates/core/fixtures/fig1.clusters"
    )]
    Compatible {
        abstract_file: PathBuf,
        madmg_file: PathBuf,
        #[arg(long)]
        clustering: PathBuf,
    },
    /// List variable-level graphs compatible with an abstract graph.
    #[command(
        after_help = "Example:\n  mcdmg enumerate crates/core/fixtures/fig1c.mcg --max-vars 2 --max-edges 12 --limit 100"
    )]
    Enumerate {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, default_value_t = 2)]
        max_vars: usize,
        #[arg(long)]
        max_edges: Option<usize>,
        #[arg(long)]
        limit: Option<usize>,
        /// Keep graphs that differ only by renaming variables within a cluster.
        #[arg(long)]
        labeled: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Decide whether the joint distribution is recoverable and print the
    /// recovery formula.
    #[command(after_help = concat!(
        "Examples:\n",
        "  mcdmg check-joint crates/core/fixtures/fig2b.mcg\n",
        "  mcdmg check-joint crates/core/fixtures/fig3.mcg --format text",
    ))]
    CheckJoint {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Search for a do-calculus derivation of a macro causal effect.
    #[command(after_help = concat!(
        "Examples:\n",
        "  mcdmg recover-effect crates/core/fixtures/fig2b.mcg --treatment CX --outcome CY\n",
        "  mcdmg recover-effect crates/core/fixtures/fig3.mcg --treatment CX --outcome CY --format json",
    ))]
    RecoverEffect {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, value_delimiter = ',', required = true)]
        treatment: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        outcome: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, value_enum, default_value = "latex")]
        format: Format,
    },
    /// Re-check a derivation or plan step by step on a graph.
    #[command(after_help = concat!(
        "Examples:\n",
        "  mcdmg replay crates/core/fixtures/fig2b.mcg\n",
        "  mcdmg replay crates/core/fixtures/fig3.mcg    # worked plan, fails at step 3 (exit 1)\n",
        "  mcdmg recover-effect crates/core/fixtures/fig2b.mcg --treatment CX --outcome CY --format json > d.json\n",
        "  mcdmg replay crates/core/fixtures/fig2b.mcg --plan d.json",
    ))]
    Replay {
        #[command(flatten)]
        input: GraphInput,
        /// Plan or `recover-effect --format json` output. Defaults to the
        /// worked five-step plan for the effect of CX on CY.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Check a formula or derivation numerically on random compatible
    /// models, or search for a counterexample pair when none exists.
    #[command(after_help = concat!(
        "Examples:\n",
        "  mcdmg oracle crates/core/fixtures/fig2b.mcg --max-vars 2 --seeds 100 --query joint\n",
        "  mcdmg oracle crates/core/fixtures/fig3.mcg --query effect:CX:CY",
    ))]
    Oracle {
        #[command(flatten)]
        input: GraphInput,
        /// `joint` or `effect:<treatment>:<outcome>`.
        #[arg(long, default_value = "joint")]
        query: String,
        #[arg(long, default_value_t = 2)]
        max_vars: usize,
        /// Compatible graphs to draw.
        #[arg(long, default_value_t = 20)]
        graphs: usize,
        /// Random models per graph.
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        #[arg(long, env = "MCDMG_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long, default_value_t = 12)]
        depth: usize,
    },
    /// Sample a data set with missing cells from a random model. A
    /// cluster-level graph is first realized as one compatible m-ADMG.
    #[command(after_help = concat!(
        "Examples:\n",
        "  mcdmg simulate crates/core/fixtures/fig2b.mcg --rows 1000 --seed 3 --out csv\n",
        "  mcdmg simulate crates/core/fixtures/survey.mcg --rows 20",
    ))]
    Simulate {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, default_value_t = 100)]
        rows: usize,
        #[arg(long, env = "MCDMG_SEED", default_value_t = 0)]
        seed: u64,
        /// Values per variable.
        #[arg(long, default_value_t = 2)]
        card: usize,
        #[arg(long, value_enum, default_value = "csv")]
        out: DataFormat,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    Csv,
}

/// What a command computed, used for the exit status.
pub enum Verdict {
    Positive,
    Negative,
}

fn run(cli: Cli) -> commands::Result {
    use commands as c;
    match cli.command {
        Command::Parse { input, format } => c::parse(&input, format),
        Command::Validate { input } => c::validate(&input),
        Command::Dsep {
            input,
            x,
            y,
            given,
            overline,
            underline,
        } => c::dsep(&input, &x, &y, &given, &overline, &underline),
        Command::Abstract {
            input,
            clustering,
            level,
            format,
        } => c::abstract_graph(&input, clustering.as_deref(), level, format),
        Command::Compatible {
            abstract_file,
            madmg_file,
            clustering,
        } => c::compatible(&abstract_file, &madmg_file, &clustering),
        Command::Enumerate {
            input,
            max_vars,
            max_edges,
            limit,
            labeled,
            format,
        } => c::enumerate(&input, max_vars, max_edges, limit, labeled, format),
        Command::CheckJoint { input, format } => c::check_joint(&input, format),
        Command::RecoverEffect {
            input,
            treatment,
            outcome,
            given,
            depth,
            format,
        } => c::recover_effect(&input, &treatment, &outcome, &given, depth, format),
        Command::Replay { input, plan } => c::replay(&input, plan.as_deref()),
        Command::Oracle {
            input,
            query,
            max_vars,
            graphs,
            seeds,
            seed,
            tolerance,
            depth,
        } => c::oracle(
            &input,
            &query,
            c::OracleArgs {
                max_vars,
                graphs,
                seeds,
                seed,
                tolerance,
                depth,
            },
        ),
        Command::Simulate {
            input,
            rows,
            seed,
            card,
            out,
        } => c::simulate(&input, rows, seed, card, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, verdict)) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            match verdict {
                Verdict::Positive => ExitCode::SUCCESS,
                Verdict::Negative => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
