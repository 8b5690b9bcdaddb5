//! Extensive-form game trees for two personal players plus chance.
//!
//! A [`GameTree`] is built from a declarative [`GameSpec`](crate::formats::GameSpec)
//! by [`build_game`], which validates the structural invariants once; after
//! that the tree is immutable and every operation on it is a pure function,
//! so trees can be shared freely across threads.
//!
//! Decision nodes are grouped into information sets. All probabilities and
//! payoffs are exact rationals.

use std::fmt;

use crate::formats::{GameSpec, NodeKindSpec};
use crate::rational::Rational;
use num_traits::{One, Zero};
use thiserror::Error;

/// The two personal players. Chance is represented by chance nodes, not a player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Player {
    User,
    Agent,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::User, Player::Agent];

    pub fn index(self) -> usize {
        match self {
            Player::User => 0,
            Player::Agent => 1,
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::User => Player::Agent,
            Player::Agent => Player::User,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Player::User => "USER",
            Player::Agent => "AGENT",
        }
    }

    pub fn from_name(name: &str) -> Option<Player> {
        match name {
            "USER" => Some(Player::User),
            "AGENT" => Some(Player::Agent),
            _ => None,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InfoSetId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct ChanceOutcome {
    pub label: String,
    pub prob: Rational,
    pub child: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Chance {
        outcomes: Vec<ChanceOutcome>,
    },
    /// Action labels live on the information set; `edges[i]` is the child
    /// reached by that set's `i`-th action.
    Decision {
        player: Player,
        info_set: InfoSetId,
        edges: Vec<NodeId>,
    },
    Terminal {
        payoffs: [Rational; 2],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InformationSet {
    pub id: InfoSetId,
    pub name: String,
    pub player: Player,
    pub actions: Vec<String>,
    /// Member decision nodes, in order of appearance.
    pub members: Vec<NodeId>,
}

/// A validated extensive-form game tree.
///
/// Node and information-set order is the order of appearance in the source
/// spec; everything downstream (pure-strategy enumeration, tie-breaking,
/// report columns) uses that canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct GameTree {
    nodes: Vec<Node>,
    node_names: Vec<String>,
    root: NodeId,
    info_sets: Vec<InformationSet>,
    /// Per player: its information sets in canonical order.
    player_info_sets: [Vec<InfoSetId>; 2],
    /// For each info set, its position within the owner's canonical list.
    info_set_positions: Vec<usize>,
    /// Parent link and the edge index taken from the parent.
    parents: Vec<Option<(NodeId, usize)>>,
}

impl GameTree {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.node_names[id.0]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn info_sets(&self) -> &[InformationSet] {
        &self.info_sets
    }

    pub fn info_set(&self, id: InfoSetId) -> &InformationSet {
        &self.info_sets[id.0]
    }

    /// The player's information sets in canonical order.
    pub fn player_info_sets(&self, player: Player) -> &[InfoSetId] {
        &self.player_info_sets[player.index()]
    }

    /// Position of `id` within its owner's canonical info-set list.
    pub fn info_set_position(&self, id: InfoSetId) -> usize {
        self.info_set_positions[id.0]
    }

    pub fn parent(&self, id: NodeId) -> Option<(NodeId, usize)> {
        self.parents[id.0]
    }

    /// Both players receive the same payoff at every terminal.
    pub fn is_common_payoff(&self) -> bool {
        self.nodes.iter().all(|n| match n {
            Node::Terminal { payoffs } => payoffs[0] == payoffs[1],
            _ => true,
        })
    }

    /// The player's own decision points (info-set position, action index)
    /// on the path from the root to `id`, excluding `id` itself.
    pub fn own_history(&self, player: Player, id: NodeId) -> Vec<(usize, usize)> {
        let mut steps = Vec::new();
        let mut cur = id;
        while let Some((parent, edge)) = self.parents[cur.0] {
            if let Node::Decision {
                player: p,
                info_set,
                ..
            } = &self.nodes[parent.0]
            {
                if *p == player {
                    steps.push((self.info_set_positions[info_set.0], edge));
                }
            }
            cur = parent;
        }
        steps.reverse();
        steps
    }
}

/// One player's behavior strategy: a probability distribution over actions at
/// each of the player's information sets, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorStrategy {
    pub player: Player,
    pub rows: Vec<BehaviorRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorRow {
    pub probs: Vec<Rational>,
    /// True when the row was synthesized as uniform because the information
    /// set is unreachable under the source mixed strategy.
    pub uniform_filled: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("probability {0} is outside [0,1]")]
    OutOfRange(String),
    #[error("distribution sums to {0}, expected 1")]
    SumNotOne(String),
    #[error("expected {expected} rows/entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

impl BehaviorRow {
    pub fn new(probs: Vec<Rational>) -> Result<Self, StrategyError> {
        check_distribution(&probs)?;
        Ok(BehaviorRow {
            probs,
            uniform_filled: false,
        })
    }

    pub fn uniform(len: usize) -> Self {
        let p = Rational::new(1.into(), (len as i64).into());
        BehaviorRow {
            probs: vec![p; len],
            uniform_filled: false,
        }
    }
}

pub(crate) fn check_distribution(probs: &[Rational]) -> Result<(), StrategyError> {
    let mut sum = Rational::zero();
    for p in probs {
        if p < &Rational::zero() || p > &Rational::one() {
            return Err(StrategyError::OutOfRange(crate::rational::format_rational(
                p,
            )));
        }
        sum += p;
    }
    if !sum.is_one() {
        return Err(StrategyError::SumNotOne(crate::rational::format_rational(
            &sum,
        )));
    }
    Ok(())
}

impl BehaviorStrategy {
    /// Builds a strategy from per-info-set distributions in canonical order,
    /// validating lengths against the tree.
    pub fn new(
        tree: &GameTree,
        player: Player,
        rows: Vec<Vec<Rational>>,
    ) -> Result<Self, StrategyError> {
        let sets = tree.player_info_sets(player);
        if rows.len() != sets.len() {
            return Err(StrategyError::LengthMismatch {
                expected: sets.len(),
                got: rows.len(),
            });
        }
        let mut out = Vec::with_capacity(rows.len());
        for (row, set) in rows.into_iter().zip(sets) {
            if row.len() != tree.info_set(*set).actions.len() {
                return Err(StrategyError::LengthMismatch {
                    expected: tree.info_set(*set).actions.len(),
                    got: row.len(),
                });
            }
            out.push(BehaviorRow::new(row)?);
        }
        Ok(BehaviorStrategy { player, rows: out })
    }

    pub fn uniform(tree: &GameTree, player: Player) -> Self {
        let rows = tree
            .player_info_sets(player)
            .iter()
            .map(|s| BehaviorRow::uniform(tree.info_set(*s).actions.len()))
            .collect();
        BehaviorStrategy { player, rows }
    }

    /// Flat probability vector in canonical (info set, action) order.
    pub fn flat(&self) -> Vec<Rational> {
        self.rows
            .iter()
            .flat_map(|r| r.probs.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorProfile {
    pub user: BehaviorStrategy,
    pub agent: BehaviorStrategy,
}

impl BehaviorProfile {
    pub fn strategy(&self, player: Player) -> &BehaviorStrategy {
        match player {
            Player::User => &self.user,
            Player::Agent => &self.agent,
        }
    }

    pub fn uniform(tree: &GameTree) -> Self {
        BehaviorProfile {
            user: BehaviorStrategy::uniform(tree, Player::User),
            agent: BehaviorStrategy::uniform(tree, Player::Agent),
        }
    }

    /// User rows followed by agent rows, flattened.
    pub fn flat(&self) -> Vec<Rational> {
        let mut v = self.user.flat();
        v.extend(self.agent.flat());
        v
    }
}

/// A point in the two-parameter strategy reduction: `x` is the user's
/// per-info-set probability of the annotated faithful action, `y` the agent's.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProfile {
    x: Rational,
    y: Rational,
}

impl ReducedProfile {
    pub fn new(x: Rational, y: Rational) -> Result<Self, StrategyError> {
        for v in [&x, &y] {
            if v < &Rational::zero() || v > &Rational::one() {
                return Err(StrategyError::OutOfRange(crate::rational::format_rational(
                    v,
                )));
            }
        }
        Ok(ReducedProfile { x, y })
    }

    pub fn x(&self) -> &Rational {
        &self.x
    }

    pub fn y(&self) -> &Rational {
        &self.y
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("player list must be exactly [\"USER\", \"AGENT\"]")]
    Players,
    #[error("duplicate node id `{0}`")]
    DuplicateNodeId(String),
    #[error("`{node}` references unknown node `{child}`")]
    DanglingReference { node: String, child: String },
    #[error("chance node `{node}` outcome probabilities sum to {sum}, expected 1")]
    ProbabilitySumViolation { node: String, sum: String },
    #[error("probability out of [0,1] at node `{node}`")]
    ProbabilityRange { node: String },
    #[error("information set `{info_set}` is inconsistent: {reason}")]
    InfoSetMismatch { info_set: String, reason: String },
    #[error("node `{node}` violates the tree structure: {reason}")]
    NotATree { node: String, reason: String },
    #[error("node `{node}` has an empty action/outcome list")]
    EmptyActions { node: String },
    #[error("node `{node}` repeats label `{label}`")]
    DuplicateLabel { node: String, label: String },
    #[error("terminal `{node}` must carry exactly one payoff per player")]
    PayoffKeys { node: String },
    #[error("node `{node}` names unknown player `{player}`")]
    UnknownPlayer { node: String, player: String },
}

/// Validates a [`GameSpec`] and produces an immutable [`GameTree`].
pub fn build_game(spec: &GameSpec) -> Result<GameTree, BuildError> {
    if spec.players != [Player::User.name(), Player::Agent.name()] {
        return Err(BuildError::Players);
    }

    let mut id_of = std::collections::HashMap::new();
    for (idx, node) in spec.nodes.iter().enumerate() {
        if id_of.insert(node.id.clone(), idx).is_some() {
            return Err(BuildError::DuplicateNodeId(node.id.clone()));
        }
    }
    let resolve = |node: &str, child: &str| -> Result<NodeId, BuildError> {
        id_of
            .get(child)
            .map(|i| NodeId(*i))
            .ok_or_else(|| BuildError::DanglingReference {
                node: node.to_owned(),
                child: child.to_owned(),
            })
    };
    let root = resolve("<root>", &spec.root)?;

    let mut info_sets: Vec<InformationSet> = Vec::new();
    let mut set_of_name = std::collections::HashMap::new();
    let mut nodes = Vec::with_capacity(spec.nodes.len());
    let mut node_names = Vec::with_capacity(spec.nodes.len());

    for (idx, node_spec) in spec.nodes.iter().enumerate() {
        let name = node_spec.id.clone();
        let built = match &node_spec.kind {
            NodeKindSpec::Chance { outcomes } => {
                if outcomes.is_empty() {
                    return Err(BuildError::EmptyActions { node: name });
                }
                let mut seen = std::collections::HashSet::new();
                let mut sum = Rational::zero();
                let mut built = Vec::with_capacity(outcomes.len());
                for o in outcomes {
                    if !seen.insert(o.label.as_str()) {
                        return Err(BuildError::DuplicateLabel {
                            node: name,
                            label: o.label.clone(),
                        });
                    }
                    if o.prob.0 < Rational::zero() || o.prob.0 > Rational::one() {
                        return Err(BuildError::ProbabilityRange { node: name });
                    }
                    sum += &o.prob.0;
                    built.push(ChanceOutcome {
                        label: o.label.clone(),
                        prob: o.prob.0.clone(),
                        child: resolve(&name, &o.child)?,
                    });
                }
                if !sum.is_one() {
                    return Err(BuildError::ProbabilitySumViolation {
                        node: name,
                        sum: crate::rational::format_rational(&sum),
                    });
                }
                Node::Chance { outcomes: built }
            }
            NodeKindSpec::Decision {
                player,
                info_set,
                actions,
            } => {
                let player = Player::from_name(player).ok_or_else(|| BuildError::UnknownPlayer {
                    node: name.clone(),
                    player: player.clone(),
                })?;
                if actions.is_empty() {
                    return Err(BuildError::EmptyActions { node: name });
                }
                let mut seen = std::collections::HashSet::new();
                for a in actions {
                    if !seen.insert(a.label.as_str()) {
                        return Err(BuildError::DuplicateLabel {
                            node: name,
                            label: a.label.clone(),
                        });
                    }
                }
                let labels: Vec<String> = actions.iter().map(|a| a.label.clone()).collect();
                let set_id = match set_of_name.get(info_set.as_str()) {
                    Some(&id) => {
                        let set: &InformationSet = &info_sets[id];
                        if set.player != player {
                            return Err(BuildError::InfoSetMismatch {
                                info_set: info_set.clone(),
                                reason: format!(
                                    "groups nodes of {} and {}",
                                    set.player, player
                                ),
                            });
                        }
                        if set.actions != labels {
                            return Err(BuildError::InfoSetMismatch {
                                info_set: info_set.clone(),
                                reason: format!(
                                    "action lists differ between members (`{}` vs `{}`)",
                                    set.actions.join(","),
                                    labels.join(",")
                                ),
                            });
                        }
                        InfoSetId(id)
                    }
                    None => {
                        let id = info_sets.len();
                        set_of_name.insert(info_set.clone(), id);
                        info_sets.push(InformationSet {
                            id: InfoSetId(id),
                            name: info_set.clone(),
                            player,
                            actions: labels,
                            members: Vec::new(),
                        });
                        InfoSetId(id)
                    }
                };
                info_sets[set_id.0].members.push(NodeId(idx));
                let mut edges = Vec::with_capacity(actions.len());
                for a in actions {
                    edges.push(resolve(&name, &a.child)?);
                }
                Node::Decision {
                    player,
                    info_set: set_id,
                    edges,
                }
            }
            NodeKindSpec::Terminal { payoffs } => {
                if payoffs.len() != 2
                    || !payoffs.contains_key(Player::User.name())
                    || !payoffs.contains_key(Player::Agent.name())
                {
                    return Err(BuildError::PayoffKeys { node: name });
                }
                Node::Terminal {
                    payoffs: [
                        payoffs[Player::User.name()].0.clone(),
                        payoffs[Player::Agent.name()].0.clone(),
                    ],
                }
            }
        };
        nodes.push(built);
        node_names.push(node_spec.id.clone());
    }

    // Rooted-tree check: walk from the root; every node must be reached
    // exactly once and nothing may be left over.
    let mut parents: Vec<Option<(NodeId, usize)>> = vec![None; nodes.len()];
    let mut visited = vec![false; nodes.len()];
    visited[root.0] = true;
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        let children: Vec<NodeId> = match &nodes[id.0] {
            Node::Chance { outcomes } => outcomes.iter().map(|o| o.child).collect(),
            Node::Decision { edges, .. } => edges.clone(),
            Node::Terminal { .. } => Vec::new(),
        };
        for (edge, child) in children.into_iter().enumerate() {
            if visited[child.0] {
                return Err(BuildError::NotATree {
                    node: node_names[child.0].clone(),
                    reason: "reached by more than one path".to_owned(),
                });
            }
            visited[child.0] = true;
            parents[child.0] = Some((id, edge));
            stack.push(child);
        }
    }
    if let Some(unreached) = visited.iter().position(|v| !v) {
        return Err(BuildError::NotATree {
            node: node_names[unreached].clone(),
            reason: "not reachable from the root".to_owned(),
        });
    }

    // No info set may contain a node together with one of its ancestors.
    for set in &info_sets {
        for &member in &set.members {
            let mut cur = member;
            while let Some((parent, _)) = parents[cur.0] {
                if let Node::Decision { info_set, .. } = &nodes[parent.0] {
                    if *info_set == set.id {
                        return Err(BuildError::InfoSetMismatch {
                            info_set: set.name.clone(),
                            reason: format!(
                                "contains `{}` and its ancestor `{}`",
                                node_names[member.0], node_names[parent.0]
                            ),
                        });
                    }
                }
                cur = parent;
            }
        }
    }

    let mut player_info_sets: [Vec<InfoSetId>; 2] = [Vec::new(), Vec::new()];
    let mut info_set_positions = vec![0usize; info_sets.len()];
    for set in &info_sets {
        let list = &mut player_info_sets[set.player.index()];
        info_set_positions[set.id.0] = list.len();
        list.push(set.id);
    }

    Ok(GameTree {
        nodes,
        node_names,
        root,
        info_sets,
        player_info_sets,
        info_set_positions,
        parents,
    })
}

pub(crate) const TRIP_BOOKING_JSON: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../games/trip_booking.game"));

/// The bundled simplified trip-booking game: a fair coin picks the desired
/// destination (Starbucks or Peet's), the user announces a destination, the
/// agent — seeing only the announcement — drives somewhere. Driving to the
/// wrong place pays -1 to both, the right place pays 11/10 when the user told
/// the truth and 1 when the user lied.
pub fn trip_booking_game() -> GameTree {
    build_game(&trip_booking_spec()).expect("bundled game is valid")
}

/// The spec the bundled game file contains, including its reduction annotation.
pub fn trip_booking_spec() -> GameSpec {
    serde_json::from_str(TRIP_BOOKING_JSON).expect("bundled game parses")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("profile is missing a distribution for {player} information set index {index}")]
    MissingInfoSetDistribution { player: Player, index: usize },
}

/// Expected payoff per player under a behavior profile, by recursive
/// expectation over chance and action probabilities. Exact.
pub fn expected_reward(
    tree: &GameTree,
    profile: &BehaviorProfile,
) -> Result<[Rational; 2], EvalError> {
    for player in Player::BOTH {
        let strat = profile.strategy(player);
        let sets = tree.player_info_sets(player);
        if strat.rows.len() != sets.len() {
            return Err(EvalError::MissingInfoSetDistribution {
                player,
                index: strat.rows.len().min(sets.len()),
            });
        }
        for (pos, (row, set)) in strat.rows.iter().zip(sets).enumerate() {
            if row.probs.len() != tree.info_set(*set).actions.len() {
                return Err(EvalError::MissingInfoSetDistribution { player, index: pos });
            }
        }
    }
    Ok(eval_node(tree, profile, tree.root()))
}

fn eval_node(tree: &GameTree, profile: &BehaviorProfile, id: NodeId) -> [Rational; 2] {
    match tree.node(id) {
        Node::Terminal { payoffs } => payoffs.clone(),
        Node::Chance { outcomes } => {
            let mut total = [Rational::zero(), Rational::zero()];
            for o in outcomes {
                let sub = eval_node(tree, profile, o.child);
                total[0] += &o.prob * &sub[0];
                total[1] += &o.prob * &sub[1];
            }
            total
        }
        Node::Decision {
            player,
            info_set,
            edges,
        } => {
            let row = &profile.strategy(*player).rows[tree.info_set_position(*info_set)];
            let mut total = [Rational::zero(), Rational::zero()];
            for (a, child) in edges.iter().enumerate() {
                let p = &row.probs[a];
                if p.is_zero() {
                    continue;
                }
                let sub = eval_node(tree, profile, *child);
                total[0] += p * &sub[0];
                total[1] += p * &sub[1];
            }
            total
        }
    }
}
