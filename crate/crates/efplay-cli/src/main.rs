//! `efplay` — solve and self-play two-player imperfect-information games.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation/parse error,
//! 3 internal verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use efplay::formats::report::{emit_report, render_report, ReportFormat, ReportPayload};
use efplay::formats::{self, FormatError, LoadedGame};
use efplay::rational::{format_rational, rational_to_f64};
use efplay::{
    behavior_to_mixed, enumerate_tree_equilibria, is_equilibrium, play_strategy,
    reduce_to_normal_form, select_best_equilibrium, surface_grid, Algorithm, Baseline,
    EpisodeGame, EquilibriumError, TrainConfig,
};

#[derive(Parser)]
#[command(
    name = "efplay",
    version,
    about = "Exact equilibrium enumeration and tabular RL self-play for two-player games with imperfect information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format: json or csv.
    #[arg(long, default_value = "json")]
    format: String,
    /// Write the report here (atomically) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate all equilibria of a game and mark the best one.
    Solve {
        game: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check an equilibrium certificate for a behavior-profile file.
    Verify {
        game: PathBuf,
        /// Behavior profile to check.
        #[arg(long)]
        profile: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Train both bots by self-play over independent restarts.
    Selfplay {
        game: PathBuf,
        /// Training algorithm: pg or ppo.
        #[arg(long, default_value = "pg")]
        algo: String,
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        #[arg(long, default_value_t = 90)]
        iterations: usize,
        #[arg(long = "episodes-per-iter", default_value_t = 300)]
        episodes_per_iter: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        parallel: usize,
        #[arg(long = "learning-rate", default_value_t = 0.005)]
        learning_rate: f64,
        /// Advantage baseline: batch-mean or none.
        #[arg(long, default_value = "batch-mean")]
        baseline: String,
        #[arg(long = "ppo-clip", default_value_t = 0.2)]
        ppo_clip: f64,
        #[arg(long = "ppo-epochs", default_value_t = 4)]
        ppo_epochs: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Play a strategy on sampled episodes (the best equilibrium by default).
    Play {
        game: PathBuf,
        /// Behavior profile to play; defaults to the best equilibrium.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Tabulate the reduced (x, y) expected-reward surface.
    Surface {
        game: PathBuf,
        #[arg(long, default_value_t = 41)]
        resolution: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EquilibriumError> for CliError {
    fn from(e: EquilibriumError) -> Self {
        match e {
            EquilibriumError::InternalVerificationFailure(_) => CliError::Internal(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<efplay::NormalFormError> for CliError {
    fn from(e: efplay::NormalFormError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn parse_format(s: &str) -> Result<ReportFormat, CliError> {
    ReportFormat::from_str(s).map_err(CliError::Usage)
}

fn emit(payload: &ReportPayload, output: &OutputArgs) -> Result<(), CliError> {
    let format = parse_format(&output.format)?;
    match &output.out {
        Some(path) => {
            emit_report(payload, format, path)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{}", render_report(payload, format));
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<LoadedGame, CliError> {
    Ok(formats::load_game(path)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { game, output } => {
            let loaded = load(&game)?;
            let records = enumerate_tree_equilibria(&loaded.tree)?;
            let best = select_best_equilibrium(&records)?;
            eprintln!(
                "{} equilibria; best is #{} with expected reward {} ({})",
                records.len(),
                best + 1,
                format_rational(&records[best].payoffs[0]),
                rational_to_f64(&records[best].payoffs[0]),
            );
            emit(
                &ReportPayload::Equilibria {
                    tree: &loaded.tree,
                    records: &records,
                    best,
                },
                &output,
            )
        }
        Command::Verify {
            game,
            profile,
            output,
        } => {
            let loaded = load(&game)?;
            let spec = formats::load_profile_file(&profile)?;
            let behavior = formats::resolve_profile(&loaded.tree, &spec)?;
            let normal = reduce_to_normal_form(&loaded.tree);
            let user = behavior_to_mixed(&loaded.tree, &behavior.user)?;
            let agent = behavior_to_mixed(&loaded.tree, &behavior.agent)?;
            let cert = is_equilibrium(&normal, &user, &agent)?;
            eprintln!(
                "{}: max deviation gain {}",
                if cert.is_equilibrium() {
                    "equilibrium"
                } else {
                    "not an equilibrium"
                },
                format_rational(cert.max_gain()),
            );
            emit(&ReportPayload::Certificate(&cert), &output)
        }
        Command::Selfplay {
            game,
            algo,
            restarts,
            iterations,
            episodes_per_iter,
            seed,
            parallel,
            learning_rate,
            baseline,
            ppo_clip,
            ppo_epochs,
            output,
        } => {
            let loaded = load(&game)?;
            let episode_game =
                EpisodeGame::from_tree(&loaded.tree).map_err(|e| CliError::Data(e.to_string()))?;
            let algorithm = Algorithm::from_str(&algo).map_err(CliError::Usage)?;
            let baseline = match baseline.as_str() {
                "batch-mean" => Baseline::BatchMean,
                "none" => Baseline::None,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown baseline `{other}` (expected batch-mean or none)"
                    )))
                }
            };
            if restarts < 1 {
                return Err(CliError::Usage("--restarts must be at least 1".into()));
            }
            let config = TrainConfig {
                algorithm,
                iterations,
                episodes_per_iteration: episodes_per_iter,
                learning_rate,
                baseline,
                ppo_clip,
                ppo_epochs,
                seed,
            };
            config
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let report = efplay::run_experiment(&episode_game, &config, restarts, parallel)
                .map_err(|e| CliError::Data(e.to_string()))?;
            eprintln!(
                "{}: {}/{} FULL, {}/{} OPPOSITE, {} NONE; mean convergence {:.0} episodes / {:.2} s",
                algorithm,
                report.full,
                restarts,
                report.opposite,
                restarts,
                report.none,
                report.mean_convergence_episodes,
                report.mean_convergence_secs,
            );
            emit(&ReportPayload::Experiment(&report), &output)
        }
        Command::Play {
            game,
            profile,
            episodes,
            seed,
            output,
        } => {
            let loaded = load(&game)?;
            if episodes < 1 {
                return Err(CliError::Usage("--episodes must be at least 1".into()));
            }
            let behavior = match profile {
                Some(path) => {
                    let spec = formats::load_profile_file(&path)?;
                    formats::resolve_profile(&loaded.tree, &spec)?
                }
                None => {
                    let records = enumerate_tree_equilibria(&loaded.tree)?;
                    let best = select_best_equilibrium(&records)?;
                    eprintln!(
                        "playing equilibrium #{} (expected reward {})",
                        best + 1,
                        format_rational(&records[best].payoffs[0]),
                    );
                    records[best].behavior.clone()
                }
            };
            let stats = play_strategy(&loaded.tree, &behavior, episodes, seed)?;
            eprintln!(
                "mean reward over {} episodes: {} ({})",
                stats.episodes,
                format_rational(&stats.means[0]),
                rational_to_f64(&stats.means[0]),
            );
            emit(&ReportPayload::Playback(&stats), &output)
        }
        Command::Surface {
            game,
            resolution,
            output,
        } => {
            let loaded = load(&game)?;
            let reduction = loaded.reduction.as_ref().ok_or_else(|| {
                CliError::Data(format!(
                    "{} carries no reduction annotation; `surface` needs one",
                    game.display()
                ))
            })?;
            if resolution < 2 {
                return Err(CliError::Usage("--resolution must be at least 2".into()));
            }
            let grid = surface_grid(&loaded.tree, reduction, resolution)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            emit(&ReportPayload::Surface(&grid), &output)
        }
    }
}
