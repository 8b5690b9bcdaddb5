//! Browser bindings for the interactive demo page under `www/`.
//!
//! Three operations are exposed, all returning JSON strings so the page can
//! stay framework-free: equilibrium enumeration, the reduced reward surface,
//! and a single self-play training run with its learning curve. Failures come
//! back as `{"error": "..."}` rather than exceptions.
//!
//! The JSON schemas for `solve` and `surface` are exactly the CLI's JSON
//! report formats.

use wasm_bindgen::prelude::*;

use efplay::formats::report::{render_report, ReportFormat, ReportPayload};
use efplay::formats::resolve_reduction;
use efplay::rational::{format_rational, rational_to_f64};
use efplay::{
    convergence_time, enumerate_tree_equilibria, select_best_equilibrium, surface_grid,
    Algorithm, EpisodeGame, TrainConfig,
};

fn error_json(message: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": message.to_string() }).to_string()
}

/// Source text of the bundled trip-booking game file.
#[wasm_bindgen]
pub fn game_source() -> String {
    serde_json::to_string_pretty(&efplay::trip_booking_spec()).expect("bundled spec serializes")
}

/// All equilibria of the bundled game, as the CLI's JSON equilibria report.
#[wasm_bindgen]
pub fn solve() -> String {
    let tree = efplay::trip_booking_game();
    let records = match enumerate_tree_equilibria(&tree) {
        Ok(r) => r,
        Err(e) => return error_json(e),
    };
    let best = match select_best_equilibrium(&records) {
        Ok(b) => b,
        Err(e) => return error_json(e),
    };
    render_report(
        &ReportPayload::Equilibria {
            tree: &tree,
            records: &records,
            best,
        },
        ReportFormat::Json,
    )
}

/// The reduced (x, y) expected-reward surface at the given resolution, as the
/// CLI's JSON surface report.
#[wasm_bindgen]
pub fn surface(resolution: usize) -> String {
    let tree = efplay::trip_booking_game();
    let spec = efplay::trip_booking_spec();
    let reduction = match resolve_reduction(&tree, spec.reduction.as_ref().expect("bundled game is annotated")) {
        Ok(r) => r,
        Err(e) => return error_json(e),
    };
    match surface_grid(&tree, &reduction, resolution) {
        Ok(grid) => render_report(&ReportPayload::Surface(&grid), ReportFormat::Json),
        Err(e) => error_json(e),
    }
}

/// One self-play restart with the given settings. Returns the outcome, the
/// convergence episode, a downsampled trailing-window learning curve, and the
/// final policy tables.
#[wasm_bindgen]
pub fn selfplay_run(
    algo: &str,
    seed: u64,
    iterations: usize,
    episodes_per_iteration: usize,
    learning_rate: f64,
) -> String {
    let algorithm = match algo.parse::<Algorithm>() {
        Ok(a) => a,
        Err(e) => return error_json(e),
    };
    let tree = efplay::trip_booking_game();
    let game = match EpisodeGame::from_tree(&tree) {
        Ok(g) => g,
        Err(e) => return error_json(e),
    };
    let config = TrainConfig {
        algorithm,
        iterations,
        episodes_per_iteration,
        learning_rate,
        seed,
        ..TrainConfig::default()
    };
    let result = match efplay::run_restart(&game, &config) {
        Ok(r) => r,
        Err(e) => return error_json(e),
    };

    let rewards = result.rewards();
    let window = efplay::selfplay::CONVERGENCE_WINDOW.min(rewards.len().max(1));
    let stride = (rewards.len() / 400).max(1);
    let mut curve = Vec::new();
    let mut sum = 0.0;
    let mut buf: Vec<f64> = Vec::with_capacity(window);
    for (i, r) in rewards.iter().enumerate() {
        let v = rational_to_f64(r);
        sum += v;
        buf.push(v);
        if buf.len() > window {
            sum -= buf[buf.len() - window - 1];
        }
        let filled = buf.len().min(window);
        if (i + 1) % stride == 0 || i + 1 == rewards.len() {
            curve.push(serde_json::json!([i + 1, sum / filled as f64]));
        }
    }
    debug_assert_eq!(convergence_time(&rewards), result.convergence_episode);

    serde_json::json!({
        "algorithm": algorithm.name(),
        "seed": seed,
        "episodes": rewards.len(),
        "outcome": result.outcome.name(),
        "convergence_episode": result.convergence_episode,
        "reward_histogram": result
            .reward_histogram()
            .iter()
            .map(|(r, c)| serde_json::json!({
                "reward": format_rational(r),
                "reward_decimal": rational_to_f64(r),
                "count": c,
            }))
            .collect::<Vec<_>>(),
        "curve": curve,
        "policies": {
            "user": result.final_policies.user,
            "agent": result.final_policies.agent,
        },
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_payload_has_seven_equilibria() {
        let json: serde_json::Value = serde_json::from_str(&solve()).unwrap();
        assert_eq!(json["count"], 7);
        assert_eq!(json["best"], 0);
        assert_eq!(json["equilibria"][0]["expected_reward"]["frac"], "11/10");
    }

    #[test]
    fn surface_payload_covers_the_grid() {
        let json: serde_json::Value = serde_json::from_str(&surface(9)).unwrap();
        assert_eq!(json["resolution"], 9);
        assert_eq!(json["points"].as_array().unwrap().len(), 81);
        let bad: serde_json::Value = serde_json::from_str(&surface(1)).unwrap();
        assert!(bad["error"].is_string());
    }

    #[test]
    fn selfplay_payload_carries_a_curve_and_outcome() {
        let json: serde_json::Value =
            serde_json::from_str(&selfplay_run("pg", 3, 20, 100, 0.05)).unwrap();
        assert_eq!(json["episodes"], 2000);
        assert!(json["curve"].as_array().unwrap().len() >= 400);
        assert!(["FULL", "OPPOSITE", "NONE", "UNDEFINED"]
            .contains(&json["outcome"].as_str().unwrap()));
        let bad: serde_json::Value =
            serde_json::from_str(&selfplay_run("dqn", 0, 1, 1, 0.1)).unwrap();
        assert!(bad["error"].is_string());
    }

    #[test]
    fn game_source_parses() {
        let json: serde_json::Value = serde_json::from_str(&game_source()).unwrap();
        assert_eq!(json["format_version"], 1);
    }
}
