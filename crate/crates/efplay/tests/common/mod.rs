//! Shared test utilities: a seeded generator of random perfect-recall games
//! and random exact-rational strategies.
//!
//! Information sets are keyed by (player, own-history, depth), so every node
//! in a set has the same sequence of own past moves — the strong perfect
//! recall that makes mixed and behavior strategies payoff-equivalent.

use std::collections::BTreeMap;

use efplay::formats::{ActionSpec, GameSpec, NodeKindSpec, NodeSpec, OutcomeSpec};
use efplay::rational::{rat, Frac, Rational};
use efplay::{build_game, GameTree, MixedStrategy, Player};
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAX_DEPTH: usize = 4;
const MAX_NODES: usize = 40;
const MAX_INFO_SETS_PER_PLAYER: usize = 3;

/// (player index, own history, depth)
type InfoKey = (usize, Vec<(String, usize)>, usize);

struct GenState {
    rng: ChaCha8Rng,
    nodes: Vec<NodeSpec>,
    /// Info-set key -> (info set name, action count)
    info_sets: BTreeMap<InfoKey, (String, usize)>,
    sets_per_player: [usize; 2],
    budget: usize,
}

impl GenState {
    fn fresh_id(&mut self, prefix: &str) -> String {
        let id = format!("{prefix}{}", self.nodes.len());
        self.nodes.push(NodeSpec {
            id: id.clone(),
            kind: NodeKindSpec::Terminal {
                payoffs: BTreeMap::new(), // placeholder, overwritten below
            },
        });
        id
    }

    fn set_kind(&mut self, id: &str, kind: NodeKindSpec) {
        let node = self.nodes.iter_mut().find(|n| n.id == id).unwrap();
        node.kind = kind;
    }

    fn random_payoffs(&mut self) -> BTreeMap<String, Frac> {
        let mut payoffs = BTreeMap::new();
        for player in Player::BOTH {
            let numer = self.rng.random_range(-8..=8);
            let denom = self.rng.random_range(1..=4);
            payoffs.insert(player.name().to_owned(), Frac(rat(numer, denom)));
        }
        payoffs
    }

    fn grow(
        &mut self,
        id: String,
        depth: usize,
        histories: [Vec<(String, usize)>; 2],
    ) {
        let terminal = depth >= MAX_DEPTH || self.budget == 0 || self.rng.random_range(0..10) < 2;
        if terminal {
            let payoffs = self.random_payoffs();
            self.set_kind(&id, NodeKindSpec::Terminal { payoffs });
            return;
        }
        self.budget -= 1;

        // Pick the node kind: chance, or a decision by a player that still
        // has info-set budget.
        let mut choices = vec!["chance"];
        for player in Player::BOTH {
            let key = (
                player.index(),
                histories[player.index()].clone(),
                depth,
            );
            if self.info_sets.contains_key(&key)
                || self.sets_per_player[player.index()] < MAX_INFO_SETS_PER_PLAYER
            {
                choices.push(player.name());
            }
        }
        let choice = choices[self.rng.random_range(0..choices.len())];

        if choice == "chance" {
            let arity = self.rng.random_range(2..=3);
            let weights: Vec<i64> = (0..arity).map(|_| self.rng.random_range(1..=5)).collect();
            let total: i64 = weights.iter().sum();
            let mut outcomes = Vec::new();
            for (k, w) in weights.iter().enumerate() {
                let child = self.fresh_id("n");
                outcomes.push(OutcomeSpec {
                    label: format!("o{k}"),
                    prob: Frac(rat(*w, total)),
                    child: child.clone(),
                });
                self.grow(child, depth + 1, histories.clone());
            }
            self.set_kind(&id, NodeKindSpec::Chance { outcomes });
            return;
        }

        let player = Player::from_name(choice).unwrap();
        let key = (
            player.index(),
            histories[player.index()].clone(),
            depth,
        );
        let (set_name, arity) = match self.info_sets.get(&key) {
            Some(entry) => entry.clone(),
            None => {
                let name = format!(
                    "{}_{}",
                    player.name().to_lowercase(),
                    self.info_sets.len()
                );
                let arity = self.rng.random_range(2..=3);
                self.info_sets.insert(key, (name.clone(), arity));
                self.sets_per_player[player.index()] += 1;
                (name, arity)
            }
        };
        let mut actions = Vec::new();
        for a in 0..arity {
            let child = self.fresh_id("n");
            actions.push(ActionSpec {
                label: format!("a{a}"),
                child: child.clone(),
            });
            let mut next = histories.clone();
            next[player.index()].push((set_name.clone(), a));
            self.grow(child, depth + 1, next);
        }
        self.set_kind(
            &id,
            NodeKindSpec::Decision {
                player: player.name().to_owned(),
                info_set: set_name,
                actions,
            },
        );
    }
}

/// A random perfect-recall game with chance nodes, at most three information
/// sets per player, and two or three actions per set.
pub fn random_tree(seed: u64) -> GameTree {
    let mut state = GenState {
        rng: ChaCha8Rng::seed_from_u64(seed),
        nodes: Vec::new(),
        info_sets: BTreeMap::new(),
        sets_per_player: [0, 0],
        budget: MAX_NODES,
    };
    let root = state.fresh_id("n");
    state.grow(root.clone(), 0, [Vec::new(), Vec::new()]);
    let spec = GameSpec {
        format_version: 1,
        players: vec!["USER".into(), "AGENT".into()],
        root,
        nodes: state.nodes,
        reduction: None,
    };
    build_game(&spec).expect("generated spec is valid")
}

/// A random exact mixed strategy over `len` pure strategies. Sparse supports
/// (including point masses) come up regularly, exercising unreachable
/// information sets downstream.
pub fn random_mixed(rng: &mut ChaCha8Rng, player: Player, len: usize) -> MixedStrategy {
    let sparse = rng.random_range(0..5) == 0;
    let mut weights: Vec<i64> = (0..len)
        .map(|_| {
            if sparse && rng.random_range(0..2) == 0 {
                0
            } else {
                rng.random_range(0..6)
            }
        })
        .collect();
    if weights.iter().all(|w| *w == 0) {
        weights[rng.random_range(0..len)] = 1;
    }
    let total: i64 = weights.iter().sum();
    let mut probs: Vec<Rational> = weights.iter().map(|w| rat(*w, total)).collect();
    let sum: Rational = probs.iter().sum();
    if !sum.is_one() {
        let short = Rational::one() - sum;
        probs[0] += short;
    }
    debug_assert!(probs.iter().sum::<Rational>().is_one());
    debug_assert!(!probs.iter().any(|p| p < &Rational::zero()));
    MixedStrategy::new(player, probs).expect("valid distribution")
}

/// Random exact rational in [lo_num/den, hi_num/den] with denominator `den`.
pub fn random_rational(rng: &mut ChaCha8Rng, lo_num: i64, hi_num: i64, den: i64) -> Rational {
    rat(rng.random_range(lo_num..=hi_num), den)
}
