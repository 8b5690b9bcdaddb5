//! Reduction of an extensive-form tree to its normal form.
//!
//! Pure strategies are enumerated as the Cartesian product over a player's
//! information sets in canonical order (first set most significant), and the
//! bimatrix payoffs are chance-averaged exact rationals. The full normal form
//! is kept — strategically equivalent duplicate rows are not collapsed; the
//! equilibrium module deduplicates at the behavior level instead.
//!
//! This is exponential in the number of information sets by design; the
//! intended scale is desk-sized games.

use crate::game::{BehaviorRow, BehaviorStrategy, GameTree, Node, NodeId, Player, StrategyError};
use crate::rational::Rational;
use num_traits::{One, Zero};
use thiserror::Error;

/// One action choice per information set of a player, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PureStrategy {
    pub player: Player,
    pub choices: Vec<usize>,
}

impl PureStrategy {
    /// Human-readable label, e.g. `(Say-Starbucks, Say-Peet's)`.
    pub fn label(&self, tree: &GameTree) -> String {
        let parts: Vec<&str> = tree
            .player_info_sets(self.player)
            .iter()
            .zip(&self.choices)
            .map(|(set, &a)| tree.info_set(*set).actions[a].as_str())
            .collect();
        format!("({})", parts.join(", "))
    }
}

/// All pure strategies of `player`, lexicographic in (info-set order, action
/// order). A player with no information sets has exactly one (empty) strategy.
pub fn enumerate_pure_strategies(tree: &GameTree, player: Player) -> Vec<PureStrategy> {
    let arities: Vec<usize> = tree
        .player_info_sets(player)
        .iter()
        .map(|s| tree.info_set(*s).actions.len())
        .collect();
    let count: usize = arities.iter().product();
    let mut out = Vec::with_capacity(count);
    let mut choices = vec![0usize; arities.len()];
    loop {
        out.push(PureStrategy {
            player,
            choices: choices.clone(),
        });
        // Odometer increment, last info set fastest.
        let mut k = arities.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            choices[k] += 1;
            if choices[k] < arities[k] {
                break;
            }
            choices[k] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormalFormError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("payoff matrices are empty or ragged")]
    BadMatrix,
}

/// Probability distribution over a player's canonical pure-strategy list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MixedStrategy {
    pub player: Player,
    weights: Vec<Rational>,
}

impl MixedStrategy {
    pub fn new(player: Player, weights: Vec<Rational>) -> Result<Self, StrategyError> {
        crate::game::check_distribution(&weights)?;
        Ok(MixedStrategy { player, weights })
    }

    pub fn point_mass(player: Player, len: usize, index: usize) -> Self {
        assert!(index < len);
        let mut weights = vec![Rational::zero(); len];
        weights[index] = Rational::one();
        MixedStrategy { player, weights }
    }

    pub fn uniform(player: Player, len: usize) -> Self {
        assert!(len > 0);
        let p = Rational::new(1.into(), (len as i64).into());
        MixedStrategy {
            player,
            weights: vec![p; len],
        }
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Normal form of a two-player game: exact payoff matrices for both players
/// over the canonical pure-strategy lists.
#[derive(Debug, Clone, PartialEq)]
pub struct BimatrixGame {
    pub user_strategies: Vec<PureStrategy>,
    pub agent_strategies: Vec<PureStrategy>,
    /// Row-major `rows × cols`.
    user_payoffs: Vec<Rational>,
    agent_payoffs: Vec<Rational>,
}

impl BimatrixGame {
    /// Builds a game from raw matrices (user = rows, agent = columns), as for
    /// a one-shot game where each player has a single information set.
    pub fn from_matrices(
        user: Vec<Vec<Rational>>,
        agent: Vec<Vec<Rational>>,
    ) -> Result<Self, NormalFormError> {
        let rows = user.len();
        if rows == 0 || agent.len() != rows {
            return Err(NormalFormError::BadMatrix);
        }
        let cols = user[0].len();
        if cols == 0
            || user.iter().any(|r| r.len() != cols)
            || agent.iter().any(|r| r.len() != cols)
        {
            return Err(NormalFormError::BadMatrix);
        }
        let user_strategies = (0..rows)
            .map(|i| PureStrategy {
                player: Player::User,
                choices: vec![i],
            })
            .collect();
        let agent_strategies = (0..cols)
            .map(|j| PureStrategy {
                player: Player::Agent,
                choices: vec![j],
            })
            .collect();
        Ok(BimatrixGame {
            user_strategies,
            agent_strategies,
            user_payoffs: user.into_iter().flatten().collect(),
            agent_payoffs: agent.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.user_strategies.len()
    }

    pub fn cols(&self) -> usize {
        self.agent_strategies.len()
    }

    pub fn payoff(&self, player: Player, row: usize, col: usize) -> &Rational {
        let flat = row * self.cols() + col;
        match player {
            Player::User => &self.user_payoffs[flat],
            Player::Agent => &self.agent_payoffs[flat],
        }
    }

    pub fn is_common_payoff(&self) -> bool {
        self.user_payoffs == self.agent_payoffs
    }

    pub fn strategies(&self, player: Player) -> &[PureStrategy] {
        match player {
            Player::User => &self.user_strategies,
            Player::Agent => &self.agent_strategies,
        }
    }

    fn check_mix(&self, mix: &MixedStrategy) -> Result<(), NormalFormError> {
        let expected = self.strategies(mix.player).len();
        if mix.weights.len() != expected {
            return Err(NormalFormError::DimensionMismatch {
                expected,
                got: mix.weights.len(),
            });
        }
        Ok(())
    }
}

/// Chance-averaged payoffs for every pure-strategy pair. Entry `(i, j)` is the
/// expected payoff pair when the user commits to strategy `i` and the agent to
/// strategy `j`.
pub fn reduce_to_normal_form(tree: &GameTree) -> BimatrixGame {
    let user_strategies = enumerate_pure_strategies(tree, Player::User);
    let agent_strategies = enumerate_pure_strategies(tree, Player::Agent);
    let mut user_payoffs = Vec::with_capacity(user_strategies.len() * agent_strategies.len());
    let mut agent_payoffs = Vec::with_capacity(user_payoffs.capacity());
    for su in &user_strategies {
        for sa in &agent_strategies {
            let pair = pure_pair_payoffs(tree, su, sa, tree.root());
            user_payoffs.push(pair[0].clone());
            agent_payoffs.push(pair[1].clone());
        }
    }
    BimatrixGame {
        user_strategies,
        agent_strategies,
        user_payoffs,
        agent_payoffs,
    }
}

fn pure_pair_payoffs(
    tree: &GameTree,
    user: &PureStrategy,
    agent: &PureStrategy,
    id: NodeId,
) -> [Rational; 2] {
    match tree.node(id) {
        Node::Terminal { payoffs } => payoffs.clone(),
        Node::Chance { outcomes } => {
            let mut total = [Rational::zero(), Rational::zero()];
            for o in outcomes {
                let sub = pure_pair_payoffs(tree, user, agent, o.child);
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
            let strat = match player {
                Player::User => user,
                Player::Agent => agent,
            };
            let choice = strat.choices[tree.info_set_position(*info_set)];
            pure_pair_payoffs(tree, user, agent, edges[choice])
        }
    }
}

/// Exact bilinear payoffs `(xᵀAy, xᵀBy)` of a mixed-strategy pair.
pub fn mixed_expected_payoff(
    game: &BimatrixGame,
    user: &MixedStrategy,
    agent: &MixedStrategy,
) -> Result<[Rational; 2], NormalFormError> {
    game.check_mix(user)?;
    game.check_mix(agent)?;
    let mut totals = [Rational::zero(), Rational::zero()];
    for (i, wu) in user.weights.iter().enumerate() {
        if wu.is_zero() {
            continue;
        }
        for (j, wa) in agent.weights.iter().enumerate() {
            if wa.is_zero() {
                continue;
            }
            let w = wu * wa;
            totals[0] += &w * game.payoff(Player::User, i, j);
            totals[1] += &w * game.payoff(Player::Agent, i, j);
        }
    }
    Ok(totals)
}

/// The product-distribution mixed strategy of a behavior strategy:
/// `μ(s) = Π_I β(s(I) | I)`. Realization-equivalent to the behavior strategy
/// under perfect recall, and exact.
pub fn behavior_to_mixed(
    tree: &GameTree,
    strategy: &BehaviorStrategy,
) -> Result<MixedStrategy, NormalFormError> {
    let sets = tree.player_info_sets(strategy.player);
    if strategy.rows.len() != sets.len() {
        return Err(NormalFormError::DimensionMismatch {
            expected: sets.len(),
            got: strategy.rows.len(),
        });
    }
    for (row, set) in strategy.rows.iter().zip(sets) {
        if row.probs.len() != tree.info_set(*set).actions.len() {
            return Err(NormalFormError::DimensionMismatch {
                expected: tree.info_set(*set).actions.len(),
                got: row.probs.len(),
            });
        }
    }
    let pures = enumerate_pure_strategies(tree, strategy.player);
    let weights = pures
        .iter()
        .map(|s| {
            s.choices
                .iter()
                .enumerate()
                .fold(Rational::one(), |acc, (pos, &a)| {
                    acc * &strategy.rows[pos].probs[a]
                })
        })
        .collect();
    Ok(MixedStrategy::new(strategy.player, weights)?)
}

/// Kuhn conversion: the realization-equivalent behavior strategy of a mixed
/// strategy. At each information set the action probability is the
/// realization-weighted average over the pure strategies that reach the set.
/// Information sets unreachable under every supported pure strategy get a
/// uniform distribution and are flagged `uniform_filled`; under perfect
/// recall the result is payoff-equivalent to the mixed strategy against any
/// opponent strategy.
pub fn behavior_from_mixed(
    tree: &GameTree,
    mixed: &MixedStrategy,
) -> Result<BehaviorStrategy, NormalFormError> {
    let player = mixed.player;
    let pures = enumerate_pure_strategies(tree, player);
    if mixed.weights.len() != pures.len() {
        return Err(NormalFormError::DimensionMismatch {
            expected: pures.len(),
            got: mixed.weights.len(),
        });
    }

    let mut rows = Vec::new();
    for set_id in tree.player_info_sets(player) {
        let set = tree.info_set(*set_id);
        let pos = tree.info_set_position(*set_id);
        // For each member node, the player's own (info-set position, action)
        // constraints on the path from the root.
        let member_histories: Vec<Vec<(usize, usize)>> = set
            .members
            .iter()
            .map(|m| tree.own_history(player, *m))
            .collect();
        let reaches = |s: &PureStrategy| {
            member_histories
                .iter()
                .any(|h| h.iter().all(|&(p, a)| s.choices[p] == a))
        };

        let mut numer = vec![Rational::zero(); set.actions.len()];
        let mut denom = Rational::zero();
        for (s, w) in pures.iter().zip(mixed.weights.iter()) {
            if w.is_zero() || !reaches(s) {
                continue;
            }
            numer[s.choices[pos]] += w;
            denom += w;
        }
        if denom.is_zero() {
            let mut row = BehaviorRow::uniform(set.actions.len());
            row.uniform_filled = true;
            rows.push(row);
        } else {
            let probs = numer.into_iter().map(|n| n / &denom).collect();
            rows.push(BehaviorRow {
                probs,
                uniform_filled: false,
            });
        }
    }
    Ok(BehaviorStrategy { player, rows })
}
