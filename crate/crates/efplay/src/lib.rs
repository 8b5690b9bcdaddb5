//! Two-player imperfect-information extensive-form games, solved two ways:
//! exact Nash-equilibrium enumeration with best-equilibrium playback, and
//! tabular reinforcement-learning self-play with restart statistics.
//!
//! The crate bundles a simplified trip-booking game (a chance node picks a
//! destination, a user announces one, an agent — seeing only the announcement
//! — drives somewhere) and ships a CLI, but the tree representation, the
//! normal-form reduction, and the equilibrium enumeration work for any
//! desk-scale two-player game with chance nodes and information sets.
//!
//! Everything on the game-theory side is exact rational arithmetic; floating
//! point appears only inside the RL trainer and in decimal report columns.
//!
//! ```
//! use efplay::{enumerate_tree_equilibria, select_best_equilibrium, trip_booking_game};
//!
//! let tree = trip_booking_game();
//! let records = enumerate_tree_equilibria(&tree).unwrap();
//! assert_eq!(records.len(), 7);
//! let best = select_best_equilibrium(&records).unwrap();
//! assert_eq!(efplay::rational::format_rational(&records[best].payoffs[0]), "11/10");
//! ```

pub mod equilibrium;
pub mod formats;
pub mod game;
pub mod normal_form;
pub mod rational;
pub mod selfplay;
pub mod surface;

pub use equilibrium::{
    best_response_values, enumerate_equilibria, enumerate_tree_equilibria, is_equilibrium,
    play_strategy, select_best_equilibrium, DeviationCertificate, EquilibriumError,
    EquilibriumRecord, MixedEquilibrium, PlaybackEpisode, PlaybackStats, PlayerDeviation,
};
pub use game::{
    build_game, expected_reward, trip_booking_game, trip_booking_spec, BehaviorProfile,
    BehaviorRow, BehaviorStrategy, BuildError, EvalError, GameTree, InfoSetId, InformationSet,
    Node, NodeId, Player, ReducedProfile, StrategyError,
};
pub use normal_form::{
    behavior_from_mixed, behavior_to_mixed, enumerate_pure_strategies, mixed_expected_payoff,
    reduce_to_normal_form,
    BimatrixGame, MixedStrategy, NormalFormError, PureStrategy,
};
pub use rational::Rational;
pub use selfplay::{
    classify_restart, convergence_time, pg_update, policies_are_opposite, policies_are_truthful,
    ppo_update, run_episode, run_experiment, run_restart, Algorithm, Baseline, EpisodeGame,
    EpisodeRecord, ExperimentReport, Outcome, PolicyTable, RestartResult, ShapeError, TrainConfig,
    TrainError,
};
pub use surface::{
    reduced_expected_reward, reduced_profile_to_behavior, surface_grid, Reduction, SurfaceError,
    SurfaceGrid, SurfacePoint,
};
