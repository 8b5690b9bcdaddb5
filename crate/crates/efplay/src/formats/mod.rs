//! File formats: the JSON-shaped `.game` description, behavior-profile files,
//! and report serialization (see [`report`]).
//!
//! All rationals in input files are `"p/q"` strings; report output carries
//! both the exact string and a decimal rendering. Writes are whole-file
//! atomic (write to a temp file, then rename).

pub mod report;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{
    build_game, BehaviorProfile, BehaviorStrategy, BuildError, GameTree, Node, Player,
    StrategyError,
};
use crate::rational::Frac;
use crate::surface::Reduction;

pub const GAME_FORMAT_VERSION: u32 = 1;
pub const PROFILE_FORMAT_VERSION: u32 = 1;

/// Declarative game description, as stored in `.game` files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub format_version: u32,
    pub players: Vec<String>,
    pub root: String,
    pub nodes: Vec<NodeSpec>,
    /// Optional two-parameter reduction annotation: per player, the
    /// "faithful" action at each information set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: NodeKindSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKindSpec {
    Chance {
        outcomes: Vec<OutcomeSpec>,
    },
    Decision {
        player: String,
        info_set: String,
        actions: Vec<ActionSpec>,
    },
    Terminal {
        payoffs: BTreeMap<String, Frac>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub label: String,
    pub prob: Frac,
    pub child: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub label: String,
    pub child: String,
}

/// player name -> info set name -> faithful action label
pub type ReductionSpec = BTreeMap<String, BTreeMap<String, String>>;

/// Behavior profile file: player name -> info set name -> action -> probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub format_version: u32,
    pub strategies: BTreeMap<String, BTreeMap<String, BTreeMap<String, Frac>>>,
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported format_version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("reduction annotation missing for {player} information set `{info_set}`")]
    MissingAnnotation { player: Player, info_set: String },
    #[error("`{0}` does not name an information set of {1}")]
    UnknownInfoSet(String, Player),
    #[error("`{action}` is not an action of information set `{info_set}`")]
    UnknownAction { info_set: String, action: String },
    #[error("profile gives no distribution for {player} information set `{info_set}`")]
    MissingDistribution { player: Player, info_set: String },
    #[error("invalid distribution for `{info_set}`: {source}")]
    Distribution {
        info_set: String,
        source: StrategyError,
    },
}

/// A parsed-and-validated game file.
#[derive(Debug, Clone)]
pub struct LoadedGame {
    pub spec: GameSpec,
    pub tree: GameTree,
    pub reduction: Option<Reduction>,
}

pub fn parse_game_spec(text: &str) -> Result<GameSpec, FormatError> {
    let spec: GameSpec = serde_json::from_str(text)?;
    if spec.format_version != GAME_FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(spec.format_version));
    }
    Ok(spec)
}

/// Loads and parses a `.game` file without building the tree.
pub fn load_game_file(path: &Path) -> Result<GameSpec, FormatError> {
    parse_game_spec(&std::fs::read_to_string(path)?)
}

/// Loads, validates, and resolves the optional reduction annotation.
pub fn load_game(path: &Path) -> Result<LoadedGame, FormatError> {
    let spec = load_game_file(path)?;
    let tree = build_game(&spec)?;
    let reduction = match &spec.reduction {
        Some(r) => Some(resolve_reduction(&tree, r)?),
        None => None,
    };
    Ok(LoadedGame {
        spec,
        tree,
        reduction,
    })
}

/// Resolves a textual reduction annotation against the tree. Every
/// information set of both players must be annotated.
pub fn resolve_reduction(
    tree: &GameTree,
    spec: &ReductionSpec,
) -> Result<Reduction, FormatError> {
    let mut faithful = [Vec::new(), Vec::new()];
    for player in Player::BOTH {
        let by_set = spec.get(player.name());
        for set_id in tree.player_info_sets(player) {
            let set = tree.info_set(*set_id);
            let label = by_set
                .and_then(|m| m.get(&set.name))
                .ok_or_else(|| FormatError::MissingAnnotation {
                    player,
                    info_set: set.name.clone(),
                })?;
            let action = set.actions.iter().position(|a| a == label).ok_or_else(|| {
                FormatError::UnknownAction {
                    info_set: set.name.clone(),
                    action: label.clone(),
                }
            })?;
            faithful[player.index()].push(action);
        }
    }
    Ok(Reduction::new(faithful))
}

/// Serializes a tree back into a spec. `build_game` of the result returns an
/// identical tree.
pub fn game_spec_from_tree(tree: &GameTree, reduction: Option<&ReductionSpec>) -> GameSpec {
    let nodes = tree
        .node_ids()
        .map(|id| {
            let kind = match tree.node(id) {
                Node::Chance { outcomes } => NodeKindSpec::Chance {
                    outcomes: outcomes
                        .iter()
                        .map(|o| OutcomeSpec {
                            label: o.label.clone(),
                            prob: Frac(o.prob.clone()),
                            child: tree.node_name(o.child).to_owned(),
                        })
                        .collect(),
                },
                Node::Decision {
                    player,
                    info_set,
                    edges,
                } => {
                    let set = tree.info_set(*info_set);
                    NodeKindSpec::Decision {
                        player: player.name().to_owned(),
                        info_set: set.name.clone(),
                        actions: set
                            .actions
                            .iter()
                            .zip(edges)
                            .map(|(label, child)| ActionSpec {
                                label: label.clone(),
                                child: tree.node_name(*child).to_owned(),
                            })
                            .collect(),
                    }
                }
                Node::Terminal { payoffs } => {
                    let mut map = BTreeMap::new();
                    map.insert(Player::User.name().to_owned(), Frac(payoffs[0].clone()));
                    map.insert(Player::Agent.name().to_owned(), Frac(payoffs[1].clone()));
                    NodeKindSpec::Terminal { payoffs: map }
                }
            };
            NodeSpec {
                id: tree.node_name(id).to_owned(),
                kind,
            }
        })
        .collect();
    GameSpec {
        format_version: GAME_FORMAT_VERSION,
        players: vec![Player::User.name().to_owned(), Player::Agent.name().to_owned()],
        root: tree.node_name(tree.root()).to_owned(),
        nodes,
        reduction: reduction.cloned(),
    }
}

pub fn parse_profile_spec(text: &str) -> Result<ProfileSpec, FormatError> {
    let spec: ProfileSpec = serde_json::from_str(text)?;
    if spec.format_version != PROFILE_FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(spec.format_version));
    }
    Ok(spec)
}

pub fn load_profile_file(path: &Path) -> Result<ProfileSpec, FormatError> {
    parse_profile_spec(&std::fs::read_to_string(path)?)
}

/// Resolves a profile file against a tree into a total behavior profile.
pub fn resolve_profile(tree: &GameTree, spec: &ProfileSpec) -> Result<BehaviorProfile, FormatError> {
    let mut strategies = Vec::new();
    for player in Player::BOTH {
        let by_set = spec.strategies.get(player.name());
        let mut rows = Vec::new();
        for set_id in tree.player_info_sets(player) {
            let set = tree.info_set(*set_id);
            let dist = by_set.and_then(|m| m.get(&set.name)).ok_or_else(|| {
                FormatError::MissingDistribution {
                    player,
                    info_set: set.name.clone(),
                }
            })?;
            for action in dist.keys() {
                if !set.actions.contains(action) {
                    return Err(FormatError::UnknownAction {
                        info_set: set.name.clone(),
                        action: action.clone(),
                    });
                }
            }
            let row: Vec<_> = set
                .actions
                .iter()
                .map(|a| {
                    dist.get(a)
                        .map(|f| f.0.clone())
                        .ok_or_else(|| FormatError::MissingDistribution {
                            player,
                            info_set: set.name.clone(),
                        })
                })
                .collect::<Result<_, _>>()?;
            rows.push(row);
        }
        strategies.push(BehaviorStrategy::new(tree, player, rows).map_err(|source| {
            FormatError::Distribution {
                info_set: player.name().to_owned(),
                source,
            }
        })?);
    }
    let agent = strategies.pop().expect("two players");
    let user = strategies.pop().expect("two players");
    Ok(BehaviorProfile { user, agent })
}

pub fn profile_spec_from_behavior(tree: &GameTree, profile: &BehaviorProfile) -> ProfileSpec {
    let mut strategies = BTreeMap::new();
    for player in Player::BOTH {
        let strat = profile.strategy(player);
        let mut by_set = BTreeMap::new();
        for (row, set_id) in strat.rows.iter().zip(tree.player_info_sets(player)) {
            let set = tree.info_set(*set_id);
            let dist: BTreeMap<String, Frac> = set
                .actions
                .iter()
                .zip(&row.probs)
                .map(|(a, p)| (a.clone(), Frac(p.clone())))
                .collect();
            by_set.insert(set.name.clone(), dist);
        }
        strategies.insert(player.name().to_owned(), by_set);
    }
    ProfileSpec {
        format_version: PROFILE_FORMAT_VERSION,
        strategies,
    }
}

/// Whole-file atomic write: the target either keeps its old contents or has
/// the new bytes in full.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{enumerate_tree_equilibria, is_equilibrium, select_best_equilibrium};
    use crate::game::{trip_booking_game, trip_booking_spec};
    use crate::normal_form::{behavior_to_mixed, reduce_to_normal_form};
    use crate::rational::rat;
    use report::{render_report, ReportFormat, ReportPayload};

    fn bundled_path() -> std::path::PathBuf {
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../games/trip_booking.game")
    }

    #[test]
    fn bundled_file_matches_the_embedded_game() {
        let loaded = load_game(&bundled_path()).unwrap();
        assert_eq!(loaded.spec, trip_booking_spec());
        assert_eq!(loaded.tree, trip_booking_game());
        assert!(loaded.reduction.is_some());
    }

    #[test]
    fn game_spec_round_trips_through_json_and_tree() {
        let spec = trip_booking_spec();
        let text = serde_json::to_string_pretty(&spec).unwrap();
        let reparsed = parse_game_spec(&text).unwrap();
        assert_eq!(reparsed, spec);

        let tree = build_game(&spec).unwrap();
        let emitted = game_spec_from_tree(&tree, spec.reduction.as_ref());
        assert_eq!(build_game(&emitted).unwrap(), tree);
        assert_eq!(emitted.reduction, spec.reduction);
    }

    #[test]
    fn decimal_payoffs_are_a_parse_error() {
        let mut text = serde_json::to_string(&trip_booking_spec()).unwrap();
        text = text.replace("\"11/10\"", "\"1.1\"");
        assert!(matches!(
            parse_game_spec(&text),
            Err(FormatError::Parse(_))
        ));
    }

    #[test]
    fn unknown_child_is_a_validation_error() {
        let mut spec = trip_booking_spec();
        if let NodeKindSpec::Chance { outcomes } = &mut spec.nodes[0].kind {
            outcomes[0].child = "missing".to_owned();
        }
        let err = build_game(&spec).unwrap_err();
        assert!(matches!(
            err,
            crate::game::BuildError::DanglingReference { .. }
        ));
    }

    #[test]
    fn version_gate() {
        let mut spec = trip_booking_spec();
        spec.format_version = 2;
        let text = serde_json::to_string(&spec).unwrap();
        assert!(matches!(
            parse_game_spec(&text),
            Err(FormatError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn missing_reduction_annotation_is_reported() {
        let tree = trip_booking_game();
        let mut reduction = trip_booking_spec().reduction.unwrap();
        reduction.get_mut("AGENT").unwrap().remove("agent_heard_peets");
        assert!(matches!(
            resolve_reduction(&tree, &reduction),
            Err(FormatError::MissingAnnotation { .. })
        ));
    }

    #[test]
    fn profiles_round_trip_and_validate() {
        let tree = trip_booking_game();
        let records = enumerate_tree_equilibria(&tree).unwrap();
        let best = select_best_equilibrium(&records).unwrap();
        let profile = &records[best].behavior;

        let spec = profile_spec_from_behavior(&tree, profile);
        let text = serde_json::to_string_pretty(&spec).unwrap();
        let reparsed = parse_profile_spec(&text).unwrap();
        let resolved = resolve_profile(&tree, &reparsed).unwrap();
        assert_eq!(&resolved, profile);

        // The stored profile certifies as an equilibrium.
        let game = reduce_to_normal_form(&tree);
        let user = behavior_to_mixed(&tree, &resolved.user).unwrap();
        let agent = behavior_to_mixed(&tree, &resolved.agent).unwrap();
        let cert = is_equilibrium(&game, &user, &agent).unwrap();
        assert!(cert.is_equilibrium());

        let mut broken = spec.clone();
        broken.strategies.get_mut("USER").unwrap().remove("user_sees_peets");
        assert!(matches!(
            resolve_profile(&tree, &broken),
            Err(FormatError::MissingDistribution { .. })
        ));

        let mut broken = spec;
        broken
            .strategies
            .get_mut("USER")
            .unwrap()
            .get_mut("user_sees_starbucks")
            .unwrap()
            .insert("Say-Nothing".into(), crate::rational::Frac(rat(0, 1)));
        assert!(matches!(
            resolve_profile(&tree, &broken),
            Err(FormatError::UnknownAction { .. })
        ));
    }

    #[test]
    fn reports_are_deterministic_and_handle_empty_input() {
        let tree = trip_booking_game();
        let records = enumerate_tree_equilibria(&tree).unwrap();
        let payload = ReportPayload::Equilibria {
            tree: &tree,
            records: &records,
            best: 0,
        };
        let a = render_report(&payload, ReportFormat::Csv);
        let b = render_report(&payload, ReportFormat::Csv);
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 8, "header plus seven rows");
        assert!(a.starts_with("equilibrium,user:user_sees_starbucks:Say-Starbucks,"));
        let a = render_report(&payload, ReportFormat::Json);
        let b = render_report(&payload, ReportFormat::Json);
        assert_eq!(a, b);
        let parsed: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed["count"], 7);
        assert_eq!(parsed["equilibria"][6]["expected_reward"]["frac"], "1/41");

        // An empty experiment report is still a valid file with no data rows.
        let game = crate::selfplay::EpisodeGame::from_tree(&tree).unwrap();
        let cfg = crate::selfplay::TrainConfig {
            iterations: 1,
            episodes_per_iteration: 1,
            ..Default::default()
        };
        let mut report = crate::selfplay::run_experiment(&game, &cfg, 1, 1).unwrap();
        report.results.clear();
        report.restarts = 0;
        let csv = render_report(&ReportPayload::Experiment(&report), ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 1, "header only");
        let json = render_report(&ReportPayload::Experiment(&report), ReportFormat::Json);
        assert!(serde_json::from_str::<serde_json::Value>(&json).is_ok());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
    }
}
