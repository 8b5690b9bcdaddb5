//! Tabular reinforcement-learning self-play with restart statistics.
//!
//! Two softmax policy tables train against each other on a single-turn game:
//! a chance node picks a destination, the user-bot observes it and sends a
//! message, the agent-bot observes only the message and acts, and both bots
//! receive the same terminal reward. Updates are either summed REINFORCE
//! (`PG`, optional batch-mean baseline) or a clipped-surrogate scheme (`PPO`)
//! run for several full-batch gradient-ascent passes per iteration.
//!
//! Episode rewards keep their exact rational identity so that restart
//! classification can compare them exactly; only the gradient math is
//! floating point.
//!
//! Determinism: episode `e` of a restart draws from an independent ChaCha8
//! stream (`seed` keys the cipher, `e` selects the stream), restart `i` of an
//! experiment uses `seed + i`, and all reductions are per-restart sequential,
//! so experiment reports do not depend on thread scheduling.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::game::{GameTree, Node, Player};
use crate::rational::{rat, rational_to_f64, Rational};
use crate::surface::Reduction;
use num_traits::Zero;

/// Reward that counts as full task success (truthful coordination).
pub fn full_reward() -> Rational {
    rat(11, 10)
}

/// Reward of the secret-language ("opposite day") convention.
pub fn opposite_reward() -> Rational {
    rat(1, 1)
}

/// Restart classification window: at least `CLASSIFY_HITS` of the last
/// `CLASSIFY_WINDOW` episode rewards must equal the target reward.
pub const CLASSIFY_WINDOW: usize = 3000;
pub const CLASSIFY_HITS: usize = 2700;

/// Convergence rule: first episode index where the mean over the trailing
/// `CONVERGENCE_WINDOW` episodes exceeds 1095/1000.
pub const CONVERGENCE_WINDOW: usize = 300;
pub fn convergence_threshold() -> Rational {
    rat(1095, 1000)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Pg,
    Ppo,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pg => "pg",
            Algorithm::Ppo => "ppo",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pg" => Ok(Algorithm::Pg),
            "ppo" => Ok(Algorithm::Ppo),
            other => Err(format!("unknown algorithm `{other}` (expected pg or ppo)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    None,
    BatchMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub episodes_per_iteration: usize,
    pub learning_rate: f64,
    pub baseline: Baseline,
    pub ppo_clip: f64,
    pub ppo_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// 90 iterations of 300 episodes (27,000 episodes per restart). The
    /// learning rate is tuned so that restarts reliably saturate within one
    /// run while batch noise stays small against the drift toward the
    /// truthful convention; see the experiment suites.
    fn default() -> Self {
        TrainConfig {
            algorithm: Algorithm::Pg,
            iterations: 90,
            episodes_per_iteration: 300,
            learning_rate: 0.005,
            baseline: Baseline::BatchMean,
            ppo_clip: 0.2,
            ppo_epochs: 4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.episodes_per_iteration < 1 {
            return Err(TrainError::InvalidConfig(
                "episodes_per_iteration must be at least 1".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::InvalidConfig(
                "learning_rate must be positive and finite".into(),
            ));
        }
        if !(self.ppo_clip > 0.0 && self.ppo_clip < 1.0) {
            return Err(TrainError::InvalidConfig(
                "ppo_clip must lie in (0,1)".into(),
            ));
        }
        if self.algorithm == Algorithm::Ppo && self.ppo_epochs < 1 {
            return Err(TrainError::InvalidConfig(
                "ppo_epochs must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("game does not fit the single-user-turn, single-agent-turn episode protocol: {0}")]
pub struct ShapeError(pub String);

/// A tree compiled into the two-step episode protocol: user observations are
/// chance outcomes (destinations), agent observations are user messages, and
/// rewards are the common terminal payoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeGame {
    dest_labels: Vec<String>,
    dest_probs: Vec<f64>,
    message_labels: Vec<String>,
    drive_labels: Vec<String>,
    /// `[destination][message][drive]`, flattened.
    rewards: Vec<Rational>,
    rewards_f64: Vec<f64>,
}

impl EpisodeGame {
    /// Validates the tree shape: a chance root; one user decision node per
    /// outcome in its own information set (the user sees the destination);
    /// agent nodes grouped into one information set per user message (the
    /// agent sees only the message); common payoffs at every leaf.
    pub fn from_tree(tree: &GameTree) -> Result<EpisodeGame, ShapeError> {
        let err = |msg: String| Err(ShapeError(msg));
        let outcomes = match tree.node(tree.root()) {
            Node::Chance { outcomes } => outcomes,
            _ => return err("root is not a chance node".into()),
        };
        let n_dest = outcomes.len();
        let user_sets = tree.player_info_sets(Player::User).len();
        if user_sets != n_dest {
            return err(format!(
                "expected one user information set per destination ({n_dest}), found {user_sets}"
            ));
        }

        let mut message_labels: Option<Vec<String>> = None;
        let mut drive_labels: Option<Vec<String>> = None;
        let mut agent_nodes: Vec<Vec<crate::game::NodeId>> = Vec::new(); // [dest][message]

        for (d, outcome) in outcomes.iter().enumerate() {
            let (info_set, edges) = match tree.node(outcome.child) {
                Node::Decision {
                    player: Player::User,
                    info_set,
                    edges,
                } => (info_set, edges),
                _ => {
                    return err(format!(
                        "chance outcome `{}` does not lead to a user decision node",
                        outcome.label
                    ))
                }
            };
            let set = tree.info_set(*info_set);
            if set.members.len() != 1 {
                return err(format!(
                    "user information set `{}` groups several nodes; the user must observe the destination",
                    set.name
                ));
            }
            if tree.info_set_position(*info_set) != d {
                return err(format!(
                    "user information set `{}` is out of order with the chance outcomes",
                    set.name
                ));
            }
            match &message_labels {
                None => message_labels = Some(set.actions.clone()),
                Some(labels) if *labels == set.actions => {}
                Some(_) => {
                    return err("user nodes disagree on the message alphabet".into());
                }
            }
            agent_nodes.push(edges.clone());
        }

        let n_msg = message_labels.as_ref().map(|l| l.len()).unwrap_or(0);
        let agent_sets = tree.player_info_sets(Player::Agent).len();
        if agent_sets != n_msg {
            return err(format!(
                "expected one agent information set per message ({n_msg}), found {agent_sets}"
            ));
        }

        // Reward table layout must match `flat`: destination-major, then
        // message, then drive.
        let mut rewards = Vec::with_capacity(n_dest * n_msg);
        for edges in agent_nodes.iter() {
            for (m, node) in edges.iter().enumerate() {
                let (info_set, agent_edges) = match tree.node(*node) {
                    Node::Decision {
                        player: Player::Agent,
                        info_set,
                        edges,
                    } => (info_set, edges),
                    _ => {
                        return err(format!(
                            "user action `{}` does not lead to an agent decision node",
                            message_labels.as_ref().unwrap()[m]
                        ))
                    }
                };
                let set = tree.info_set(*info_set);
                if tree.info_set_position(*info_set) != m {
                    return err(format!(
                        "agent information set `{}` does not correspond to the observed message",
                        set.name
                    ));
                }
                match &drive_labels {
                    None => drive_labels = Some(set.actions.clone()),
                    Some(labels) if *labels == set.actions => {}
                    Some(_) => return err("agent nodes disagree on the action alphabet".into()),
                }
                for child in agent_edges {
                    match tree.node(*child) {
                        Node::Terminal { payoffs } => {
                            if payoffs[0] != payoffs[1] {
                                return err(format!(
                                    "terminal `{}` pays the players differently; episode rewards are delivered identically to both bots",
                                    tree.node_name(*child)
                                ));
                            }
                            rewards.push(payoffs[0].clone());
                        }
                        _ => {
                            return err(format!(
                                "agent action at `{}` does not end the episode",
                                tree.node_name(*node)
                            ))
                        }
                    }
                }
            }
        }

        let rewards_f64 = rewards.iter().map(rational_to_f64).collect();
        Ok(EpisodeGame {
            dest_labels: outcomes.iter().map(|o| o.label.clone()).collect(),
            dest_probs: outcomes.iter().map(|o| rational_to_f64(&o.prob)).collect(),
            message_labels: message_labels.unwrap_or_default(),
            drive_labels: drive_labels.unwrap_or_default(),
            rewards,
            rewards_f64,
        })
    }

    pub fn destinations(&self) -> usize {
        self.dest_labels.len()
    }

    pub fn messages(&self) -> usize {
        self.message_labels.len()
    }

    pub fn drives(&self) -> usize {
        self.drive_labels.len()
    }

    pub fn dest_label(&self, d: usize) -> &str {
        &self.dest_labels[d]
    }

    pub fn message_label(&self, m: usize) -> &str {
        &self.message_labels[m]
    }

    pub fn drive_label(&self, a: usize) -> &str {
        &self.drive_labels[a]
    }

    fn flat(&self, d: usize, m: usize, a: usize) -> usize {
        (d * self.messages() + m) * self.drives() + a
    }

    pub fn reward(&self, d: usize, m: usize, a: usize) -> &Rational {
        &self.rewards[self.flat(d, m, a)]
    }

    pub fn reward_f64(&self, d: usize, m: usize, a: usize) -> f64 {
        self.rewards_f64[self.flat(d, m, a)]
    }

    /// Distinct episode rewards, ascending.
    pub fn reward_alphabet(&self) -> Vec<Rational> {
        let set: std::collections::BTreeSet<&Rational> = self.rewards.iter().collect();
        set.into_iter().cloned().collect()
    }
}

/// Logit tables for both bots: `user[destination][message]`,
/// `agent[message][drive]`. Action distributions are softmax per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    pub user: Vec<Vec<f64>>,
    pub agent: Vec<Vec<f64>>,
}

impl PolicyTable {
    pub fn zeros(game: &EpisodeGame) -> Self {
        PolicyTable {
            user: vec![vec![0.0; game.messages()]; game.destinations()],
            agent: vec![vec![0.0; game.drives()]; game.messages()],
        }
    }

    pub fn user_probs(&self, destination: usize) -> Vec<f64> {
        softmax(&self.user[destination])
    }

    pub fn agent_probs(&self, message: usize) -> Vec<f64> {
        softmax(&self.agent[message])
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub destination: usize,
    pub user_action: usize,
    pub agent_action: usize,
    pub reward: Rational,
}

/// Independent RNG stream for one episode: `seed` keys the generator,
/// `episode` selects the counter stream.
pub fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

/// Plays one episode: destination from chance, message from the user's
/// softmax row for that destination, drive from the agent's softmax row for
/// the observed message. The common terminal reward goes to both bots.
pub fn run_episode(game: &EpisodeGame, policies: &PolicyTable, rng: &mut ChaCha8Rng) -> EpisodeRecord {
    let destination = sample_f64(rng, &game.dest_probs);
    let user_action = sample_f64(rng, &policies.user_probs(destination));
    let agent_action = sample_f64(rng, &policies.agent_probs(user_action));
    EpisodeRecord {
        destination,
        user_action,
        agent_action,
        reward: game.reward(destination, user_action, agent_action).clone(),
    }
}

fn sample_f64(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

fn batch_mean(batch: &[EpisodeRecord]) -> f64 {
    batch
        .iter()
        .map(|e| rational_to_f64(&e.reward))
        .sum::<f64>()
        / batch.len() as f64
}

/// Summed REINFORCE step: for each episode, the visited observation row of
/// each bot moves by `lr * (R - b) * (1[a'=a] - π(a'|s))`; contributions are
/// accumulated over the batch and applied once.
pub fn pg_update(
    policies: &mut PolicyTable,
    batch: &[EpisodeRecord],
    config: &TrainConfig,
) -> Result<(), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let baseline = match config.baseline {
        Baseline::BatchMean => batch_mean(batch),
        Baseline::None => 0.0,
    };
    let user_probs: Vec<Vec<f64>> = (0..policies.user.len())
        .map(|d| policies.user_probs(d))
        .collect();
    let agent_probs: Vec<Vec<f64>> = (0..policies.agent.len())
        .map(|m| policies.agent_probs(m))
        .collect();
    let mut user_grad = vec![vec![0.0; policies.user[0].len()]; policies.user.len()];
    let mut agent_grad = vec![vec![0.0; policies.agent[0].len()]; policies.agent.len()];
    for ep in batch {
        let adv = rational_to_f64(&ep.reward) - baseline;
        accumulate_logpi_grad(
            &mut user_grad[ep.destination],
            &user_probs[ep.destination],
            ep.user_action,
            adv,
        );
        accumulate_logpi_grad(
            &mut agent_grad[ep.user_action],
            &agent_probs[ep.user_action],
            ep.agent_action,
            adv,
        );
    }
    apply_grad(&mut policies.user, &user_grad, config.learning_rate);
    apply_grad(&mut policies.agent, &agent_grad, config.learning_rate);
    Ok(())
}

/// `grad += weight * (1[a'=taken] - probs[a'])` — the ∇log-softmax pattern.
fn accumulate_logpi_grad(grad: &mut [f64], probs: &[f64], taken: usize, weight: f64) {
    for (a, g) in grad.iter_mut().enumerate() {
        let indicator = if a == taken { 1.0 } else { 0.0 };
        *g += weight * (indicator - probs[a]);
    }
}

fn apply_grad(logits: &mut [Vec<f64>], grad: &[Vec<f64>], lr: f64) {
    for (row, grow) in logits.iter_mut().zip(grad) {
        for (l, g) in row.iter_mut().zip(grow) {
            *l += lr * g;
        }
    }
}

/// Clipped-surrogate step: `ppo_epochs` full-batch gradient-ascent passes on
/// `Σ min(r·Â, clip(r, 1-ε, 1+ε)·Â)` with `r = π_new(a|s)/π_old(a|s)`,
/// `Â = R - batch_mean`, and `π_old` frozen at entry. A sample saturated at
/// the clip boundary contributes no gradient.
pub fn ppo_update(
    policies: &mut PolicyTable,
    batch: &[EpisodeRecord],
    config: &TrainConfig,
) -> Result<(), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let baseline = batch_mean(batch);
    let old_user: Vec<f64> = batch
        .iter()
        .map(|ep| policies.user_probs(ep.destination)[ep.user_action])
        .collect();
    let old_agent: Vec<f64> = batch
        .iter()
        .map(|ep| policies.agent_probs(ep.user_action)[ep.agent_action])
        .collect();

    for _ in 0..config.ppo_epochs {
        let user_probs: Vec<Vec<f64>> = (0..policies.user.len())
            .map(|d| policies.user_probs(d))
            .collect();
        let agent_probs: Vec<Vec<f64>> = (0..policies.agent.len())
            .map(|m| policies.agent_probs(m))
            .collect();
        let mut user_grad = vec![vec![0.0; policies.user[0].len()]; policies.user.len()];
        let mut agent_grad = vec![vec![0.0; policies.agent[0].len()]; policies.agent.len()];
        for (i, ep) in batch.iter().enumerate() {
            let adv = rational_to_f64(&ep.reward) - baseline;
            let ratio = user_probs[ep.destination][ep.user_action] / old_user[i];
            if !clip_saturated(ratio, adv, config.ppo_clip) {
                accumulate_logpi_grad(
                    &mut user_grad[ep.destination],
                    &user_probs[ep.destination],
                    ep.user_action,
                    adv * ratio,
                );
            }
            let ratio = agent_probs[ep.user_action][ep.agent_action] / old_agent[i];
            if !clip_saturated(ratio, adv, config.ppo_clip) {
                accumulate_logpi_grad(
                    &mut agent_grad[ep.user_action],
                    &agent_probs[ep.user_action],
                    ep.agent_action,
                    adv * ratio,
                );
            }
        }
        apply_grad(&mut policies.user, &user_grad, config.learning_rate);
        apply_grad(&mut policies.agent, &agent_grad, config.learning_rate);
    }
    Ok(())
}

/// The clipped branch of the surrogate is active (zero gradient) when the
/// ratio has moved past the boundary in the direction the advantage pushes.
fn clip_saturated(ratio: f64, adv: f64, clip: f64) -> bool {
    (adv > 0.0 && ratio >= 1.0 + clip) || (adv < 0.0 && ratio <= 1.0 - clip)
}

/// How a restart ended, per the trailing-window classification rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// ≥ 2700 of the last 3000 episode rewards equal 11/10 exactly.
    Full,
    /// ≥ 2700 of the last 3000 episode rewards equal 1 exactly.
    Opposite,
    /// Neither reward dominates the window.
    None,
    /// Fewer than 3000 episodes were played.
    Undefined,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Full => "FULL",
            Outcome::Opposite => "OPPOSITE",
            Outcome::None => "NONE",
            Outcome::Undefined => "UNDEFINED",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Classifies a reward sequence by exact comparison against 11/10 and 1.
pub fn classify_restart(rewards: &[Rational]) -> Outcome {
    if rewards.len() < CLASSIFY_WINDOW {
        return Outcome::Undefined;
    }
    let window = &rewards[rewards.len() - CLASSIFY_WINDOW..];
    let full = full_reward();
    let opposite = opposite_reward();
    let full_hits = window.iter().filter(|r| **r == full).count();
    if full_hits >= CLASSIFY_HITS {
        return Outcome::Full;
    }
    let opp_hits = window.iter().filter(|r| **r == opposite).count();
    if opp_hits >= CLASSIFY_HITS {
        return Outcome::Opposite;
    }
    Outcome::None
}

/// Smallest `i ≥ 300` such that the mean of `rewards[i-300..i]` exceeds
/// 1095/1000, computed exactly; `None` if no window qualifies.
pub fn convergence_time(rewards: &[Rational]) -> Option<usize> {
    let threshold = convergence_threshold() * rat(CONVERGENCE_WINDOW as i64, 1);
    let mut sum = Rational::zero();
    for (j, r) in rewards.iter().enumerate() {
        sum += r;
        if j >= CONVERGENCE_WINDOW {
            sum -= &rewards[j - CONVERGENCE_WINDOW];
        }
        if j + 1 >= CONVERGENCE_WINDOW && sum > threshold {
            return Some(j + 1);
        }
    }
    None
}

/// One training run from zero-initialized logits.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartResult {
    pub seed: u64,
    alphabet: Vec<Rational>,
    reward_idx: Vec<u8>,
    pub outcome: Outcome,
    pub convergence_episode: Option<usize>,
    pub convergence_secs: Option<f64>,
    pub wall_secs: f64,
    pub final_policies: PolicyTable,
}

impl RestartResult {
    pub fn episodes(&self) -> usize {
        self.reward_idx.len()
    }

    /// The ordered episode rewards, materialized.
    pub fn rewards(&self) -> Vec<Rational> {
        self.reward_idx
            .iter()
            .map(|&i| self.alphabet[i as usize].clone())
            .collect()
    }

    /// Reward value -> count over the whole run, ascending by reward.
    pub fn reward_histogram(&self) -> Vec<(Rational, u64)> {
        let mut counts = vec![0u64; self.alphabet.len()];
        for &i in &self.reward_idx {
            counts[i as usize] += 1;
        }
        self.alphabet
            .iter()
            .cloned()
            .zip(counts)
            .filter(|(_, c)| *c > 0)
            .collect()
    }
}

/// Trains one restart: logits start at zero, and each of
/// `config.iterations` iterations collects `config.episodes_per_iteration`
/// episodes and applies one update. Deterministic given the seed (wall-clock
/// fields aside).
pub fn run_restart(game: &EpisodeGame, config: &TrainConfig) -> Result<RestartResult, TrainError> {
    config.validate()?;
    let start = Instant::now();
    let alphabet = game.reward_alphabet();
    assert!(alphabet.len() <= u8::MAX as usize, "reward alphabet too large");
    let index_of = |r: &Rational| -> u8 {
        alphabet.binary_search(r).expect("reward is in alphabet") as u8
    };

    let mut policies = PolicyTable::zeros(game);
    let total = config.iterations * config.episodes_per_iteration;
    let mut reward_idx: Vec<u8> = Vec::with_capacity(total);

    // Trailing-window state for online convergence detection.
    let threshold = convergence_threshold() * rat(CONVERGENCE_WINDOW as i64, 1);
    let mut window_sum = Rational::zero();
    let mut convergence_episode = None;
    let mut convergence_secs = None;

    let mut batch = Vec::with_capacity(config.episodes_per_iteration);
    for iteration in 0..config.iterations {
        batch.clear();
        for e in 0..config.episodes_per_iteration {
            let episode = (iteration * config.episodes_per_iteration + e) as u64;
            let mut rng = episode_rng(config.seed, episode);
            let record = run_episode(game, &policies, &mut rng);

            window_sum += &record.reward;
            let played = episode as usize + 1;
            if played > CONVERGENCE_WINDOW {
                let leaving = played - CONVERGENCE_WINDOW - 1;
                window_sum -= &alphabet[reward_idx[leaving] as usize];
            }
            reward_idx.push(index_of(&record.reward));
            if convergence_episode.is_none()
                && played >= CONVERGENCE_WINDOW
                && window_sum > threshold
            {
                convergence_episode = Some(played);
                convergence_secs = Some(start.elapsed().as_secs_f64());
            }

            batch.push(record);
        }
        match config.algorithm {
            Algorithm::Pg => pg_update(&mut policies, &batch, config)?,
            Algorithm::Ppo => ppo_update(&mut policies, &batch, config)?,
        }
    }

    let rewards: Vec<Rational> = reward_idx
        .iter()
        .map(|&i| alphabet[i as usize].clone())
        .collect();
    Ok(RestartResult {
        seed: config.seed,
        outcome: classify_restart(&rewards),
        convergence_episode,
        convergence_secs,
        wall_secs: start.elapsed().as_secs_f64(),
        final_policies: policies,
        alphabet,
        reward_idx,
    })
}

/// Aggregate of a restart experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub algorithm: Algorithm,
    pub base_seed: u64,
    pub restarts: usize,
    pub full: usize,
    pub opposite: usize,
    pub none: usize,
    pub undefined: usize,
    /// Mean episodes to convergence; restarts that never converge count at
    /// their full episode budget.
    pub mean_convergence_episodes: f64,
    /// Same rule in wall-clock seconds.
    pub mean_convergence_secs: f64,
    pub results: Vec<RestartResult>,
}

impl ExperimentReport {
    /// Copy with every wall-clock field zeroed, for comparing runs that must
    /// agree on everything but timing.
    pub fn with_zeroed_timing(&self) -> ExperimentReport {
        let mut report = self.clone();
        report.mean_convergence_secs = 0.0;
        for r in &mut report.results {
            r.wall_secs = 0.0;
            r.convergence_secs = r.convergence_secs.map(|_| 0.0);
        }
        report
    }
}

/// Runs `restarts` independent restarts; restart `i` uses `config.seed + i`.
/// `parallelism` is the worker-thread count (0 = rayon default); results are
/// ordered by restart index, so the report is independent of scheduling.
pub fn run_experiment(
    game: &EpisodeGame,
    config: &TrainConfig,
    restarts: usize,
    parallelism: usize,
) -> Result<ExperimentReport, TrainError> {
    config.validate()?;
    let run_all = || -> Result<Vec<RestartResult>, TrainError> {
        (0..restarts)
            .into_par_iter()
            .map(|i| {
                let mut cfg = config.clone();
                cfg.seed = config.seed.wrapping_add(i as u64);
                run_restart(game, &cfg)
            })
            .collect()
    };
    let results = if parallelism == 0 {
        run_all()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| TrainError::Pool(e.to_string()))?
            .install(run_all)?
    };

    let mut counts = [0usize; 4];
    let mut episode_sum = 0.0;
    let mut secs_sum = 0.0;
    for r in &results {
        counts[match r.outcome {
            Outcome::Full => 0,
            Outcome::Opposite => 1,
            Outcome::None => 2,
            Outcome::Undefined => 3,
        }] += 1;
        episode_sum += r.convergence_episode.unwrap_or(r.episodes()) as f64;
        secs_sum += r.convergence_secs.unwrap_or(r.wall_secs);
    }
    let denom = restarts.max(1) as f64;
    Ok(ExperimentReport {
        algorithm: config.algorithm,
        base_seed: config.seed,
        restarts,
        full: counts[0],
        opposite: counts[1],
        none: counts[2],
        undefined: counts[3],
        mean_convergence_episodes: episode_sum / denom,
        mean_convergence_secs: secs_sum / denom,
        results,
    })
}

/// Structural check for the secret-language convention: at every destination
/// the user's modal message is unfaithful, and at every message the agent's
/// modal action disobeys it.
pub fn policies_are_opposite(policies: &PolicyTable, reduction: &Reduction) -> bool {
    policies
        .user
        .iter()
        .enumerate()
        .all(|(d, row)| argmax(row) != reduction.faithful_action(Player::User, d))
        && policies
            .agent
            .iter()
            .enumerate()
            .all(|(m, row)| argmax(row) != reduction.faithful_action(Player::Agent, m))
}

/// Structural check for truthful coordination: every modal action is faithful.
pub fn policies_are_truthful(policies: &PolicyTable, reduction: &Reduction) -> bool {
    policies
        .user
        .iter()
        .enumerate()
        .all(|(d, row)| argmax(row) == reduction.faithful_action(Player::User, d))
        && policies
            .agent
            .iter()
            .enumerate()
            .all(|(m, row)| argmax(row) == reduction.faithful_action(Player::Agent, m))
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::trip_booking_game;

    fn game() -> EpisodeGame {
        EpisodeGame::from_tree(&trip_booking_game()).unwrap()
    }

    fn saturated(game: &EpisodeGame, user_says: [usize; 2], agent_drives: [usize; 2]) -> PolicyTable {
        let mut p = PolicyTable::zeros(game);
        for (d, &m) in user_says.iter().enumerate() {
            p.user[d][m] = 20.0;
        }
        for (m, &a) in agent_drives.iter().enumerate() {
            p.agent[m][a] = 20.0;
        }
        p
    }

    #[test]
    fn episode_game_compiles_the_bundled_tree() {
        let g = game();
        assert_eq!((g.destinations(), g.messages(), g.drives()), (2, 2, 2));
        assert_eq!(g.reward(0, 0, 0), &rat(11, 10));
        assert_eq!(g.reward(0, 1, 0), &rat(1, 1));
        assert_eq!(g.reward(0, 0, 1), &rat(-1, 1));
        assert_eq!(g.reward(1, 1, 1), &rat(11, 10));
        assert_eq!(
            g.reward_alphabet(),
            vec![rat(-1, 1), rat(1, 1), rat(11, 10)]
        );
        assert_eq!(g.dest_label(0), "Starbucks");
        assert_eq!(g.message_label(1), "Say-Peet's");
        assert_eq!(g.drive_label(0), "Drive-Starbucks");
    }

    #[test]
    fn episode_game_rejects_other_shapes() {
        let json = r#"{
            "format_version": 1,
            "players": ["USER", "AGENT"],
            "root": "u",
            "nodes": [
                {"id": "u", "kind": "decision", "player": "USER", "info_set": "only",
                 "actions": [{"label": "a", "child": "t1"}, {"label": "b", "child": "t2"}]},
                {"id": "t1", "kind": "terminal", "payoffs": {"USER": "1", "AGENT": "1"}},
                {"id": "t2", "kind": "terminal", "payoffs": {"USER": "0", "AGENT": "0"}}
            ]
        }"#;
        let t = crate::game::build_game(&serde_json::from_str(json).unwrap()).unwrap();
        assert!(EpisodeGame::from_tree(&t).is_err());

        let mut spec = crate::game::trip_booking_spec();
        if let crate::formats::NodeKindSpec::Terminal { payoffs } = &mut spec.nodes[8].kind {
            payoffs.insert("USER".into(), crate::rational::Frac(rat(2, 1)));
        }
        let t = crate::game::build_game(&spec).unwrap();
        assert!(EpisodeGame::from_tree(&t).is_err(), "uncommon payoffs");
    }

    #[test]
    fn saturated_policies_play_their_conventions() {
        let g = game();
        let truthful = saturated(&g, [0, 1], [0, 1]);
        let opposite = saturated(&g, [1, 0], [1, 0]);
        let disobeyed = saturated(&g, [0, 1], [1, 0]);
        for e in 0..100 {
            let mut rng = episode_rng(9, e);
            assert_eq!(run_episode(&g, &truthful, &mut rng).reward, rat(11, 10));
            let mut rng = episode_rng(9, e);
            assert_eq!(run_episode(&g, &opposite, &mut rng).reward, rat(1, 1));
            let mut rng = episode_rng(9, e);
            assert_eq!(run_episode(&g, &disobeyed, &mut rng).reward, rat(-1, 1));
        }
    }

    #[test]
    fn pg_update_matches_the_log_softmax_gradient() {
        let g = game();
        let mut policies = PolicyTable::zeros(&g);
        let batch = vec![EpisodeRecord {
            destination: 0,
            user_action: 0,
            agent_action: 0,
            reward: rat(1, 1),
        }];
        let cfg = TrainConfig {
            learning_rate: 1.0,
            baseline: Baseline::None,
            ..TrainConfig::default()
        };
        pg_update(&mut policies, &batch, &cfg).unwrap();
        assert_eq!(policies.user[0], vec![0.5, -0.5]);
        assert_eq!(policies.agent[0], vec![0.5, -0.5]);
        assert_eq!(policies.user[1], vec![0.0, 0.0], "unvisited row untouched");
    }

    #[test]
    fn pg_update_is_a_no_op_at_zero_advantage() {
        let g = game();
        let mut policies = PolicyTable::zeros(&g);
        let episode = |m: usize| EpisodeRecord {
            destination: 0,
            user_action: m,
            agent_action: 0,
            reward: rat(1, 1),
        };
        let batch = vec![episode(0), episode(1)];
        let cfg = TrainConfig::default(); // batch-mean baseline
        pg_update(&mut policies, &batch, &cfg).unwrap();
        assert_eq!(policies, PolicyTable::zeros(&g));
    }

    #[test]
    fn pg_update_preserves_symmetry() {
        let g = game();
        let mut policies = PolicyTable::zeros(&g);
        let episode = |m: usize| EpisodeRecord {
            destination: 0,
            user_action: m,
            agent_action: m,
            reward: rat(1, 1),
        };
        let cfg = TrainConfig {
            baseline: Baseline::None,
            ..TrainConfig::default()
        };
        pg_update(&mut policies, &[episode(0), episode(1)], &cfg).unwrap();
        assert_eq!(policies.user[0][0], policies.user[0][1]);
    }

    #[test]
    fn updates_reject_empty_batches() {
        let g = game();
        let mut policies = PolicyTable::zeros(&g);
        assert!(matches!(
            pg_update(&mut policies, &[], &TrainConfig::default()),
            Err(TrainError::EmptyBatch)
        ));
        assert!(matches!(
            ppo_update(&mut policies, &[], &TrainConfig::default()),
            Err(TrainError::EmptyBatch)
        ));
    }

    #[test]
    fn single_epoch_ppo_equals_pg_with_batch_mean_baseline() {
        let g = game();
        let mut rng = episode_rng(3, 0);
        let mut pg_policies = PolicyTable::zeros(&g);
        pg_policies.user[0][0] = 0.3;
        pg_policies.agent[1][1] = -0.7;
        let mut ppo_policies = pg_policies.clone();
        let explore = PolicyTable::zeros(&g);
        let batch: Vec<EpisodeRecord> = (0..40)
            .map(|_| run_episode(&g, &explore, &mut rng))
            .collect();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            baseline: Baseline::BatchMean,
            ppo_epochs: 1,
            ..TrainConfig::default()
        };
        pg_update(&mut pg_policies, &batch, &cfg).unwrap();
        ppo_update(&mut ppo_policies, &batch, &cfg).unwrap();
        assert_eq!(pg_policies, ppo_policies);
    }

    #[test]
    fn ppo_is_a_no_op_at_zero_advantage() {
        let g = game();
        let mut policies = PolicyTable::zeros(&g);
        let batch = vec![
            EpisodeRecord {
                destination: 0,
                user_action: 0,
                agent_action: 0,
                reward: rat(1, 1),
            },
            EpisodeRecord {
                destination: 1,
                user_action: 1,
                agent_action: 0,
                reward: rat(1, 1),
            },
        ];
        ppo_update(&mut policies, &batch, &TrainConfig::default()).unwrap();
        assert_eq!(policies, PolicyTable::zeros(&g));
    }

    #[test]
    fn saturated_ratios_contribute_no_gradient() {
        let g = game();
        let batch = vec![
            EpisodeRecord {
                destination: 0,
                user_action: 0,
                agent_action: 0,
                reward: rat(1, 1),
            },
            EpisodeRecord {
                destination: 0,
                user_action: 1,
                agent_action: 1,
                reward: rat(-1, 1),
            },
        ];
        // A huge step saturates every ratio after the first epoch, so the
        // second epoch must change nothing.
        let one = TrainConfig {
            learning_rate: 50.0,
            ppo_epochs: 1,
            ..TrainConfig::default()
        };
        let two = TrainConfig {
            ppo_epochs: 2,
            ..one.clone()
        };
        let mut once = PolicyTable::zeros(&g);
        ppo_update(&mut once, &batch, &one).unwrap();
        let mut twice = PolicyTable::zeros(&g);
        ppo_update(&mut twice, &batch, &two).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn classification_follows_the_window_rule() {
        let full = full_reward();
        let opp = opposite_reward();
        let bad = rat(-1, 1);

        let rewards = vec![full.clone(); 27_000];
        assert_eq!(classify_restart(&rewards), Outcome::Full);

        let mut rewards = vec![bad.clone(); 24_000];
        rewards.extend(vec![opp.clone(); 2700]);
        rewards.extend(vec![bad.clone(); 300]);
        assert_eq!(classify_restart(&rewards), Outcome::Opposite);

        let rewards = vec![full.clone(); 2999];
        assert_eq!(classify_restart(&rewards), Outcome::Undefined);

        let mut rewards = vec![full.clone(); 2000];
        rewards.extend(vec![opp.clone(); 1000]);
        assert_eq!(classify_restart(&rewards), Outcome::None);
    }

    #[test]
    fn convergence_scan_matches_a_brute_force_oracle() {
        let full = full_reward();
        let opp = opposite_reward();

        let rewards = vec![full.clone(); 1000];
        assert_eq!(convergence_time(&rewards), Some(300));

        let rewards = vec![opp.clone(); 1000];
        assert_eq!(convergence_time(&rewards), None);

        let mut rewards = vec![opp.clone(); 300];
        rewards.extend(vec![full.clone(); 600]);
        // Brute force: first i >= 300 whose trailing window mean exceeds
        // 1095/1000, computed directly from scratch at every index.
        let threshold = convergence_threshold();
        let mut oracle = None;
        for i in CONVERGENCE_WINDOW..=rewards.len() {
            let sum: Rational = rewards[i - CONVERGENCE_WINDOW..i].iter().sum();
            if sum / rat(CONVERGENCE_WINDOW as i64, 1) > threshold {
                oracle = Some(i);
                break;
            }
        }
        assert_eq!(oracle, Some(586));
        assert_eq!(convergence_time(&rewards), oracle);
    }

    #[test]
    fn zero_iteration_restart_is_undefined() {
        let g = game();
        let cfg = TrainConfig {
            iterations: 0,
            ..TrainConfig::default()
        };
        let r = run_restart(&g, &cfg).unwrap();
        assert_eq!(r.episodes(), 0);
        assert_eq!(r.outcome, Outcome::Undefined);
        assert_eq!(r.convergence_episode, None);
    }

    #[test]
    fn restarts_are_deterministic_given_the_seed() {
        let g = game();
        let cfg = TrainConfig {
            iterations: 6,
            episodes_per_iteration: 50,
            seed: 11,
            ..TrainConfig::default()
        };
        let a = run_restart(&g, &cfg).unwrap();
        let b = run_restart(&g, &cfg).unwrap();
        assert_eq!(a.rewards(), b.rewards());
        assert_eq!(a.final_policies, b.final_policies);
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.convergence_episode, b.convergence_episode);
    }

    #[test]
    fn online_convergence_detection_matches_the_scan() {
        let g = game();
        for seed in [0, 1, 2] {
            let cfg = TrainConfig {
                iterations: 30,
                episodes_per_iteration: 100,
                learning_rate: 0.05,
                seed,
                ..TrainConfig::default()
            };
            let r = run_restart(&g, &cfg).unwrap();
            assert_eq!(r.convergence_episode, convergence_time(&r.rewards()));
        }
    }

    #[test]
    fn default_pg_seed_zero_outcome_is_pinned() {
        // Deterministic, so the outcome for a fixed seed is a constant of the
        // implementation; this run happens to land on the secret language.
        let g = game();
        let cfg = TrainConfig::default();
        let r = run_restart(&g, &cfg).unwrap();
        assert_eq!(r.outcome, Outcome::Opposite);
        let reduction = crate::formats::resolve_reduction(
            &trip_booking_game(),
            crate::game::trip_booking_spec().reduction.as_ref().unwrap(),
        )
        .unwrap();
        assert!(policies_are_opposite(&r.final_policies, &reduction));
        assert!(!policies_are_truthful(&r.final_policies, &reduction));
    }

    #[test]
    fn experiment_counts_partition_restarts() {
        let g = game();
        let cfg = TrainConfig {
            iterations: 3,
            episodes_per_iteration: 40,
            ..TrainConfig::default()
        };
        let report = run_experiment(&g, &cfg, 5, 1).unwrap();
        assert_eq!(report.restarts, 5);
        assert_eq!(
            report.full + report.opposite + report.none + report.undefined,
            5
        );
        assert_eq!(report.results.len(), 5);
        assert_eq!(report.results[3].seed, cfg.seed + 3);
    }

    #[test]
    fn experiments_are_schedule_independent() {
        let g = game();
        let cfg = TrainConfig {
            iterations: 5,
            episodes_per_iteration: 60,
            seed: 21,
            ..TrainConfig::default()
        };
        let serial = run_experiment(&g, &cfg, 6, 1).unwrap();
        let parallel = run_experiment(&g, &cfg, 6, 2).unwrap();
        for (a, b) in serial.results.iter().zip(&parallel.results) {
            assert_eq!(a.seed, b.seed);
            assert_eq!(a.rewards(), b.rewards());
            assert_eq!(a.final_policies, b.final_policies);
            assert_eq!(a.outcome, b.outcome);
        }
    }
}
