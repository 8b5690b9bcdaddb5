//! The reduced two-parameter strategy surface.
//!
//! Games may carry a reduction annotation naming one "faithful" action per
//! information set and player. A [`ReducedProfile`](crate::game::ReducedProfile)
//! `(x, y)` then induces a full behavior profile — the user plays its faithful
//! action with probability `x` everywhere, the agent with probability `y` —
//! and [`surface_grid`] tabulates the expected reward over a uniform grid,
//! exactly.

use crate::game::{expected_reward, BehaviorProfile, GameTree, Player, ReducedProfile};
use crate::rational::{rat, Rational};
use thiserror::Error;

/// Resolved reduction annotation: per player, per canonical info-set
/// position, the index of the faithful action.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    faithful: [Vec<usize>; 2],
}

impl Reduction {
    pub fn new(faithful: [Vec<usize>; 2]) -> Self {
        Reduction { faithful }
    }

    pub fn faithful_action(&self, player: Player, info_set_position: usize) -> usize {
        self.faithful[player.index()][info_set_position]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurfaceError {
    #[error("surface resolution must be at least 2, got {0}")]
    ResolutionTooSmall(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub x: Rational,
    pub y: Rational,
    pub reward: Rational,
}

/// Expected reward on the `resolution × resolution` uniform grid over
/// `[0,1]²`, rows ordered x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub resolution: usize,
    pub points: Vec<SurfacePoint>,
}

/// Evaluates the reduced profile `(x, y)` on the tree. The reported reward is
/// the user's expected payoff (equal to the agent's for common-payoff games).
pub fn reduced_expected_reward(
    tree: &GameTree,
    reduction: &Reduction,
    point: &ReducedProfile,
) -> Rational {
    let profile = reduced_profile_to_behavior(tree, reduction, point);
    let payoffs = expected_reward(tree, &profile).expect("reduced profile is total");
    let [user, _] = payoffs;
    user
}

/// Behavior profile that plays the annotated faithful action with probability
/// `x` (user) / `y` (agent) at every information set; remaining actions split
/// the leftover mass evenly.
pub fn reduced_profile_to_behavior(
    tree: &GameTree,
    reduction: &Reduction,
    point: &ReducedProfile,
) -> BehaviorProfile {
    use crate::game::{BehaviorRow, BehaviorStrategy};
    use num_traits::{One, Zero};

    let build = |player: Player, p: &Rational| {
        let rows = tree
            .player_info_sets(player)
            .iter()
            .enumerate()
            .map(|(pos, set)| {
                let n = tree.info_set(*set).actions.len();
                let faithful = reduction.faithful_action(player, pos);
                let rest = if n > 1 {
                    (Rational::one() - p) / rat(n as i64 - 1, 1)
                } else {
                    Rational::zero()
                };
                let probs = (0..n)
                    .map(|a| if a == faithful { p.clone() } else { rest.clone() })
                    .collect();
                BehaviorRow {
                    probs,
                    uniform_filled: false,
                }
            })
            .collect();
        BehaviorStrategy { player, rows }
    };
    BehaviorProfile {
        user: build(Player::User, point.x()),
        agent: build(Player::Agent, point.y()),
    }
}

/// Tabulates [`reduced_expected_reward`] at `x = i/(resolution-1)`,
/// `y = j/(resolution-1)` for all grid indices, x-major.
pub fn surface_grid(
    tree: &GameTree,
    reduction: &Reduction,
    resolution: usize,
) -> Result<SurfaceGrid, SurfaceError> {
    if resolution < 2 {
        return Err(SurfaceError::ResolutionTooSmall(resolution));
    }
    let steps = (resolution - 1) as i64;
    let mut points = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        let x = rat(i as i64, steps);
        for j in 0..resolution {
            let y = rat(j as i64, steps);
            let point = ReducedProfile::new(x.clone(), y.clone()).expect("grid point in range");
            let reward = reduced_expected_reward(tree, reduction, &point);
            points.push(SurfacePoint {
                x: x.clone(),
                y,
                reward,
            });
        }
    }
    Ok(SurfaceGrid { resolution, points })
}
