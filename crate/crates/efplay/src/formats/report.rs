//! Report rendering: JSON (nested) and CSV (flat), deterministic bytes for
//! identical input. Every rational is emitted both as its exact `"p/q"`
//! string and as a decimal column.

use std::path::Path;

use serde::Serialize;

use super::{write_atomic, FormatError};
use crate::equilibrium::{DeviationCertificate, EquilibriumRecord, PlaybackStats};
use crate::game::{GameTree, Player};
use crate::normal_form::enumerate_pure_strategies;
use crate::rational::{format_rational, rational_to_f64, Rational};
use crate::selfplay::ExperimentReport;
use crate::surface::SurfaceGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

pub enum ReportPayload<'a> {
    Equilibria {
        tree: &'a GameTree,
        records: &'a [EquilibriumRecord],
        best: usize,
    },
    Experiment(&'a ExperimentReport),
    Surface(&'a SurfaceGrid),
    Playback(&'a PlaybackStats),
    Certificate(&'a DeviationCertificate),
}

/// Renders a payload to its final byte content (a trailing newline included).
pub fn render_report(payload: &ReportPayload, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let value = match payload {
                ReportPayload::Equilibria {
                    tree,
                    records,
                    best,
                } => serde_json::to_value(equilibria_json(tree, records, *best)),
                ReportPayload::Experiment(report) => serde_json::to_value(experiment_json(report)),
                ReportPayload::Surface(grid) => serde_json::to_value(surface_json(grid)),
                ReportPayload::Playback(stats) => serde_json::to_value(playback_json(stats)),
                ReportPayload::Certificate(cert) => serde_json::to_value(certificate_json(cert)),
            }
            .expect("report serialization is infallible");
            let mut text = serde_json::to_string_pretty(&value).expect("valid json");
            text.push('\n');
            text
        }
        ReportFormat::Csv => match payload {
            ReportPayload::Equilibria {
                tree,
                records,
                best,
            } => equilibria_csv(tree, records, *best),
            ReportPayload::Experiment(report) => experiment_csv(report),
            ReportPayload::Surface(grid) => surface_csv(grid),
            ReportPayload::Playback(stats) => playback_csv(stats),
            ReportPayload::Certificate(cert) => certificate_csv(cert),
        },
    }
}

/// Renders and writes atomically.
pub fn emit_report(
    payload: &ReportPayload,
    format: ReportFormat,
    path: &Path,
) -> Result<(), FormatError> {
    let text = render_report(payload, format);
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct ValueJson {
    frac: String,
    decimal: f64,
}

fn value_json(r: &Rational) -> ValueJson {
    ValueJson {
        frac: format_rational(r),
        decimal: rational_to_f64(r),
    }
}

#[derive(Serialize)]
struct ActionProbJson {
    action: String,
    prob: String,
    decimal: f64,
}

#[derive(Serialize)]
struct InfoSetDistJson {
    info_set: String,
    actions: Vec<ActionProbJson>,
    uniform_filled: bool,
}

#[derive(Serialize)]
struct EquilibriumJson {
    index: usize,
    best: bool,
    expected_reward: ValueJson,
    user: Vec<InfoSetDistJson>,
    agent: Vec<InfoSetDistJson>,
    user_mixed: Vec<ValueJson>,
    agent_mixed: Vec<ValueJson>,
    user_support: Vec<String>,
    agent_support: Vec<String>,
}

#[derive(Serialize)]
struct EquilibriaJson {
    count: usize,
    best: usize,
    equilibria: Vec<EquilibriumJson>,
}

fn behavior_json(
    tree: &GameTree,
    player: Player,
    strategy: &crate::game::BehaviorStrategy,
) -> Vec<InfoSetDistJson> {
    tree.player_info_sets(player)
        .iter()
        .zip(&strategy.rows)
        .map(|(set_id, row)| {
            let set = tree.info_set(*set_id);
            InfoSetDistJson {
                info_set: set.name.clone(),
                actions: set
                    .actions
                    .iter()
                    .zip(&row.probs)
                    .map(|(label, p)| ActionProbJson {
                        action: label.clone(),
                        prob: format_rational(p),
                        decimal: rational_to_f64(p),
                    })
                    .collect(),
                uniform_filled: row.uniform_filled,
            }
        })
        .collect()
}

fn equilibria_json(tree: &GameTree, records: &[EquilibriumRecord], best: usize) -> EquilibriaJson {
    let user_labels: Vec<String> = enumerate_pure_strategies(tree, Player::User)
        .iter()
        .map(|s| s.label(tree))
        .collect();
    let agent_labels: Vec<String> = enumerate_pure_strategies(tree, Player::Agent)
        .iter()
        .map(|s| s.label(tree))
        .collect();
    EquilibriaJson {
        count: records.len(),
        best,
        equilibria: records
            .iter()
            .enumerate()
            .map(|(index, r)| EquilibriumJson {
                index,
                best: index == best,
                expected_reward: value_json(&r.payoffs[0]),
                user: behavior_json(tree, Player::User, &r.behavior.user),
                agent: behavior_json(tree, Player::Agent, &r.behavior.agent),
                user_mixed: r.mixed.user.weights().iter().map(value_json).collect(),
                agent_mixed: r.mixed.agent.weights().iter().map(value_json).collect(),
                user_support: r
                    .user_support
                    .iter()
                    .map(|&i| user_labels[i].clone())
                    .collect(),
                agent_support: r
                    .agent_support
                    .iter()
                    .map(|&i| agent_labels[i].clone())
                    .collect(),
            })
            .collect(),
    }
}

fn equilibria_csv(tree: &GameTree, records: &[EquilibriumRecord], best: usize) -> String {
    let mut header = vec!["equilibrium".to_owned()];
    for player in Player::BOTH {
        for set_id in tree.player_info_sets(player) {
            let set = tree.info_set(*set_id);
            for action in &set.actions {
                let base = format!("{}:{}:{}", player.name().to_lowercase(), set.name, action);
                header.push(base.clone());
                header.push(format!("{base}_decimal"));
            }
        }
    }
    header.push("expected_reward".into());
    header.push("expected_reward_decimal".into());
    header.push("best".into());

    let mut out = csv_row(&header);
    for (index, r) in records.iter().enumerate() {
        let mut row = vec![(index + 1).to_string()];
        for player in Player::BOTH {
            for brow in &r.behavior.strategy(player).rows {
                for p in &brow.probs {
                    row.push(format_rational(p));
                    row.push(rational_to_f64(p).to_string());
                }
            }
        }
        row.push(format_rational(&r.payoffs[0]));
        row.push(rational_to_f64(&r.payoffs[0]).to_string());
        row.push((index == best).to_string());
        out.push_str(&csv_row(&row));
    }
    out
}

#[derive(Serialize)]
struct HistogramJson {
    reward: String,
    reward_decimal: f64,
    count: u64,
}

#[derive(Serialize)]
struct RestartJson {
    restart: usize,
    seed: u64,
    outcome: String,
    episodes: usize,
    convergence_episode: Option<usize>,
    convergence_secs: Option<f64>,
    wall_secs: f64,
    reward_histogram: Vec<HistogramJson>,
}

#[derive(Serialize)]
struct CountsJson {
    full: usize,
    opposite: usize,
    none: usize,
    undefined: usize,
}

#[derive(Serialize)]
struct ExperimentJson {
    algorithm: String,
    base_seed: u64,
    restarts: usize,
    counts: CountsJson,
    mean_convergence_episodes: f64,
    mean_convergence_secs: f64,
    restart_results: Vec<RestartJson>,
}

fn experiment_json(report: &ExperimentReport) -> ExperimentJson {
    ExperimentJson {
        algorithm: report.algorithm.name().to_owned(),
        base_seed: report.base_seed,
        restarts: report.restarts,
        counts: CountsJson {
            full: report.full,
            opposite: report.opposite,
            none: report.none,
            undefined: report.undefined,
        },
        mean_convergence_episodes: report.mean_convergence_episodes,
        mean_convergence_secs: report.mean_convergence_secs,
        restart_results: report
            .results
            .iter()
            .enumerate()
            .map(|(i, r)| RestartJson {
                restart: i,
                seed: r.seed,
                outcome: r.outcome.name().to_owned(),
                episodes: r.episodes(),
                convergence_episode: r.convergence_episode,
                convergence_secs: r.convergence_secs,
                wall_secs: r.wall_secs,
                reward_histogram: r
                    .reward_histogram()
                    .iter()
                    .map(|(reward, count)| HistogramJson {
                        reward: format_rational(reward),
                        reward_decimal: rational_to_f64(reward),
                        count: *count,
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn experiment_csv(report: &ExperimentReport) -> String {
    // One row per restart; histogram columns cover the union of rewards seen.
    let mut alphabet: Vec<Rational> = Vec::new();
    for r in &report.results {
        for (reward, _) in r.reward_histogram() {
            if !alphabet.contains(&reward) {
                alphabet.push(reward);
            }
        }
    }
    alphabet.sort();

    let mut header = vec![
        "restart".to_owned(),
        "seed".to_owned(),
        "outcome".to_owned(),
        "episodes".to_owned(),
        "convergence_episode".to_owned(),
        "convergence_secs".to_owned(),
        "wall_secs".to_owned(),
    ];
    for v in &alphabet {
        header.push(format!("count@{}", format_rational(v)));
    }
    let mut out = csv_row(&header);
    for (i, r) in report.results.iter().enumerate() {
        let hist = r.reward_histogram();
        let mut row = vec![
            i.to_string(),
            r.seed.to_string(),
            r.outcome.name().to_owned(),
            r.episodes().to_string(),
            r.convergence_episode
                .map(|e| e.to_string())
                .unwrap_or_default(),
            r.convergence_secs
                .map(|s| s.to_string())
                .unwrap_or_default(),
            r.wall_secs.to_string(),
        ];
        for v in &alphabet {
            let count = hist
                .iter()
                .find(|(reward, _)| reward == v)
                .map(|(_, c)| *c)
                .unwrap_or(0);
            row.push(count.to_string());
        }
        out.push_str(&csv_row(&row));
    }
    out
}

#[derive(Serialize)]
struct SurfacePointJson {
    x: String,
    x_decimal: f64,
    y: String,
    y_decimal: f64,
    reward: String,
    reward_decimal: f64,
}

#[derive(Serialize)]
struct SurfaceJson {
    resolution: usize,
    points: Vec<SurfacePointJson>,
}

fn surface_json(grid: &SurfaceGrid) -> SurfaceJson {
    SurfaceJson {
        resolution: grid.resolution,
        points: grid
            .points
            .iter()
            .map(|p| SurfacePointJson {
                x: format_rational(&p.x),
                x_decimal: rational_to_f64(&p.x),
                y: format_rational(&p.y),
                y_decimal: rational_to_f64(&p.y),
                reward: format_rational(&p.reward),
                reward_decimal: rational_to_f64(&p.reward),
            })
            .collect(),
    }
}

fn surface_csv(grid: &SurfaceGrid) -> String {
    let mut out = csv_row(&[
        "x".into(),
        "x_decimal".into(),
        "y".into(),
        "y_decimal".into(),
        "reward".into(),
        "reward_decimal".into(),
    ]);
    for p in &grid.points {
        out.push_str(&csv_row(&[
            format_rational(&p.x),
            rational_to_f64(&p.x).to_string(),
            format_rational(&p.y),
            rational_to_f64(&p.y).to_string(),
            format_rational(&p.reward),
            rational_to_f64(&p.reward).to_string(),
        ]));
    }
    out
}

#[derive(Serialize)]
struct PlaybackEpisodeJson {
    path: Vec<String>,
    user_reward: String,
    agent_reward: String,
}

#[derive(Serialize)]
struct PlaybackHistogramJson {
    user_reward: String,
    agent_reward: String,
    user_reward_decimal: f64,
    agent_reward_decimal: f64,
    count: u64,
}

#[derive(Serialize)]
struct PlaybackJson {
    episodes: u64,
    mean_user_reward: ValueJson,
    mean_agent_reward: ValueJson,
    histogram: Vec<PlaybackHistogramJson>,
    episode_log: Vec<PlaybackEpisodeJson>,
}

fn playback_json(stats: &PlaybackStats) -> PlaybackJson {
    PlaybackJson {
        episodes: stats.episodes,
        mean_user_reward: value_json(&stats.means[0]),
        mean_agent_reward: value_json(&stats.means[1]),
        histogram: stats
            .histogram
            .iter()
            .map(|(pair, count)| PlaybackHistogramJson {
                user_reward: format_rational(&pair[0]),
                agent_reward: format_rational(&pair[1]),
                user_reward_decimal: rational_to_f64(&pair[0]),
                agent_reward_decimal: rational_to_f64(&pair[1]),
                count: *count,
            })
            .collect(),
        episode_log: stats
            .log
            .iter()
            .map(|e| PlaybackEpisodeJson {
                path: e.path.clone(),
                user_reward: format_rational(&e.payoffs[0]),
                agent_reward: format_rational(&e.payoffs[1]),
            })
            .collect(),
    }
}

fn playback_csv(stats: &PlaybackStats) -> String {
    let mut out = csv_row(&[
        "episode".into(),
        "path".into(),
        "user_reward".into(),
        "user_reward_decimal".into(),
        "agent_reward".into(),
        "agent_reward_decimal".into(),
    ]);
    for (i, e) in stats.log.iter().enumerate() {
        out.push_str(&csv_row(&[
            i.to_string(),
            e.path.join(" / "),
            format_rational(&e.payoffs[0]),
            rational_to_f64(&e.payoffs[0]).to_string(),
            format_rational(&e.payoffs[1]),
            rational_to_f64(&e.payoffs[1]).to_string(),
        ]));
    }
    out
}

#[derive(Serialize)]
struct DeviationJson {
    best: ValueJson,
    current: ValueJson,
    gain: ValueJson,
}

#[derive(Serialize)]
struct CertificateJson {
    is_equilibrium: bool,
    user: DeviationJson,
    agent: DeviationJson,
}

fn certificate_json(cert: &DeviationCertificate) -> CertificateJson {
    let side = |d: &crate::equilibrium::PlayerDeviation| DeviationJson {
        best: value_json(&d.best),
        current: value_json(&d.current),
        gain: value_json(&d.gain),
    };
    CertificateJson {
        is_equilibrium: cert.is_equilibrium(),
        user: side(&cert.user),
        agent: side(&cert.agent),
    }
}

fn certificate_csv(cert: &DeviationCertificate) -> String {
    let mut out = csv_row(&[
        "player".into(),
        "best".into(),
        "best_decimal".into(),
        "current".into(),
        "current_decimal".into(),
        "gain".into(),
        "gain_decimal".into(),
        "is_equilibrium".into(),
    ]);
    for (player, d) in [
        (Player::User, &cert.user),
        (Player::Agent, &cert.agent),
    ] {
        out.push_str(&csv_row(&[
            player.name().to_owned(),
            format_rational(&d.best),
            rational_to_f64(&d.best).to_string(),
            format_rational(&d.current),
            rational_to_f64(&d.current).to_string(),
            format_rational(&d.gain),
            rational_to_f64(&d.gain).to_string(),
            cert.is_equilibrium().to_string(),
        ]));
    }
    out
}

fn csv_row(fields: &[String]) -> String {
    let mut row = fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",");
    row.push('\n');
    row
}

fn csv_field(f: &str) -> String {
    if f.contains(',') || f.contains('"') || f.contains('\n') {
        format!("\"{}\"", f.replace('"', "\"\""))
    } else {
        f.to_owned()
    }
}
