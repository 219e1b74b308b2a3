mod output;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use patflow::corpus::YearMonth;

#[derive(Parser)]
#[command(name = "patflow", version, about = "Patent-landscape indices, citation survival and gravity estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct CorpusArgs {
    #[arg(long)]
    pub patents: PathBuf,
    #[arg(long)]
    pub applicants: PathBuf,
    #[arg(long)]
    pub citations: PathBuf,
    /// File listing EU member codes (comma- or whitespace-separated);
    /// defaults to the EU27.
    #[arg(long)]
    pub eu_members: Option<PathBuf>,
    /// How multi-applicant patents are split across countries.
    #[arg(long, value_enum, default_value_t = Attribution::Fractional)]
    pub attribution: Attribution,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Attribution {
    Fractional,
    FirstApplicant,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Cluster {
    Ordered,
    Unordered,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LagOrigin {
    Publication,
    Grant,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Grouping {
    Applicant,
    Parent,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AiStock {
    Cumulative,
    Annual,
    Macro,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProximityMode {
    Static,
    Yearly,
}

#[derive(Args, Clone, Debug)]
pub struct SurvivalArgs {
    /// Last month of the citation window (YYYY-MM).
    #[arg(long, default_value = "2023-12", value_parser = parse_month)]
    pub window_end: YearMonth,
    /// Family date that starts the lag clock.
    #[arg(long, value_enum, default_value_t = LagOrigin::Publication)]
    pub lag_origin: LagOrigin,
    /// Also write one SVG step plot per group.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Clone, Debug)]
pub struct GravityArgs {
    /// Added to covariates before taking logs.
    #[arg(long, default_value_t = 0.0001, value_parser = parse_offset)]
    pub offset: f64,
    #[arg(long, value_enum, default_value_t = Cluster::Ordered)]
    pub cluster: Cluster,
    #[arg(long, value_enum, default_value_t = AiStock::Cumulative)]
    pub ai_stock: AiStock,
    #[arg(long, value_enum, default_value_t = ProximityMode::Static)]
    pub proximity_mode: ProximityMode,
    /// Also fit the selection-corrected model.
    #[arg(long)]
    pub heckman: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load and link the corpus; write missing-data and country summaries.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Portfolio and citation indices.
    Indices {
        #[command(subcommand)]
        which: IndexCommand,
    },
    /// Kaplan-Meier curves of the lag to first citation.
    Survival {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        survival: SurvivalArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// PPML gravity model of citation flows.
    Gravity {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        bilateral: PathBuf,
        #[arg(long = "macro")]
        macro_: PathBuf,
        /// Regressor layout, 1-4.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=4))]
        spec: u8,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        class_level: u64,
        #[command(flatten)]
        gravity: GravityArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded synthetic data with recorded ground truth.
    Synth {
        #[command(subcommand)]
        which: SynthCommand,
    },
    /// Every table the inputs allow, in one run.
    Report {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        totals: Option<PathBuf>,
        #[arg(long, requires = "macro_")]
        bilateral: Option<PathBuf>,
        #[arg(long = "macro", requires = "bilateral")]
        macro_: Option<PathBuf>,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        class_level: u64,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        q: u64,
        #[command(flatten)]
        survival: SurvivalArgs,
        #[command(flatten)]
        gravity: GravityArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Revealed comparative advantage per country.
    Rca {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// `country,total_count` file of all patents per country, with an
        /// optional WORLD row.
        #[arg(long)]
        totals: PathBuf,
        /// Merge countries below this share of world AI patents into ROW.
        #[arg(long, value_parser = parse_share)]
        rest_of_world: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Min-complement proximity between holder portfolios.
    Proximity {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        class_level: u64,
        /// Comma-separated holders; defaults to every country with patents.
        #[arg(long, value_delimiter = ',')]
        holders: Option<Vec<String>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Top-q concentration ratio per sector.
    Cr {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        q: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Country-by-country citation matrix and foreign-citation shares.
    Citations {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum, default_value_t = Grouping::Applicant)]
        grouping: Grouping,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Patent corpus with planted index and survival facts.
    Corpus {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        firms: usize,
        #[arg(long = "n-patents", default_value_t = 2000)]
        n_patents: usize,
        #[arg(long, default_value_t = 40)]
        classes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dyad-year panel drawn from a known gravity model.
    Panel {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        countries: usize,
        #[arg(long, default_value_t = 5)]
        years: usize,
        /// Gate links through the default selection equation.
        #[arg(long)]
        selection: bool,
        /// Coefficient on the inverse Mills ratio in linked flows.
        #[arg(long, default_value_t = 0.0, requires = "selection", allow_negative_numbers = true)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_month(s: &str) -> Result<YearMonth, String> {
    s.parse().map_err(|e: patflow::Error| e.to_string())
}

fn parse_offset(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("offset must be a positive number, got `{s}`")),
    }
}

fn parse_share(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..1.0).contains(&v) => Ok(v),
        _ => Err(format!("expected a share in [0, 1), got `{s}`")),
    }
}

/// Input files must exist before any computation starts.
fn check_inputs(paths: &[&PathBuf]) {
    for p in paths {
        if !p.is_file() {
            clap::Error::raw(
                clap::error::ErrorKind::ValueValidation,
                format!("input file not found: {}\n", p.display()),
            )
            .exit();
        }
    }
}

fn corpus_inputs(c: &CorpusArgs) -> Vec<&PathBuf> {
    let mut v = vec![&c.patents, &c.applicants, &c.citations];
    v.extend(c.eu_members.as_ref());
    v
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest { corpus, out } => {
            check_inputs(&corpus_inputs(&corpus));
            run::ingest(&corpus, &out)
        }
        Command::Indices { which } => match which {
            IndexCommand::Rca {
                corpus,
                totals,
                rest_of_world,
                out,
            } => {
                let mut inputs = corpus_inputs(&corpus);
                inputs.push(&totals);
                check_inputs(&inputs);
                run::rca(&corpus, &totals, rest_of_world, &out)
            }
            IndexCommand::Proximity {
                corpus,
                class_level,
                holders,
                out,
            } => {
                check_inputs(&corpus_inputs(&corpus));
                run::proximity(&corpus, class_level as usize, holders, &out)
            }
            IndexCommand::Cr { corpus, q, out } => {
                check_inputs(&corpus_inputs(&corpus));
                run::concentration(&corpus, q as usize, &out)
            }
            IndexCommand::Citations { corpus, grouping, out } => {
                check_inputs(&corpus_inputs(&corpus));
                run::citations(&corpus, grouping, &out)
            }
        },
        Command::Survival { corpus, survival, out } => {
            check_inputs(&corpus_inputs(&corpus));
            run::survival(&corpus, &survival, &out)
        }
        Command::Gravity {
            corpus,
            bilateral,
            macro_,
            spec,
            class_level,
            gravity,
            out,
        } => {
            let mut inputs = corpus_inputs(&corpus);
            inputs.extend([&bilateral, &macro_]);
            check_inputs(&inputs);
            run::gravity(&corpus, &bilateral, &macro_, spec, class_level as usize, &gravity, &out)
        }
        Command::Synth { which } => match which {
            SynthCommand::Corpus {
                seed,
                firms,
                n_patents,
                classes,
                out,
            } => run::synth_corpus(seed, firms, n_patents, classes, &out),
            SynthCommand::Panel {
                seed,
                countries,
                years,
                selection,
                delta,
                out,
            } => run::synth_panel(seed, countries, years, selection.then_some(delta), &out),
        },
        Command::Report {
            corpus,
            totals,
            bilateral,
            macro_,
            class_level,
            q,
            survival,
            gravity,
            out,
        } => {
            if gravity.heckman && bilateral.is_none() {
                clap::Error::raw(
                    clap::error::ErrorKind::MissingRequiredArgument,
                    "--heckman needs --bilateral and --macro\n",
                )
                .exit();
            }
            let mut inputs = corpus_inputs(&corpus);
            inputs.extend(totals.as_ref());
            inputs.extend(bilateral.as_ref());
            inputs.extend(macro_.as_ref());
            check_inputs(&inputs);
            let plan = run::ReportPlan {
                totals,
                covariates: bilateral.zip(macro_),
                class_level: class_level as usize,
                q: q as usize,
                survival,
                gravity,
            };
            run::report(&corpus, &plan, &out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(errors) => {
            for e in errors {
                eprintln!("error: {e}");
            }
            ExitCode::from(1)
        }
    }
}
