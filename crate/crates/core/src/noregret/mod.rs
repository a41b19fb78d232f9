//! No-regret learners, regret measurement and the Laplace-perturbed
//! no-regret mediator.
//!
//! Rounds are indexed from 1. Every learner plays the uniform distribution
//! in round 1 and updates after seeing the round's loss vector; the
//! distribution produced after the final round is never played and is not
//! stored.

mod learners;
mod losses;
mod nrlaplace;
mod regret;

pub use learners::{hedge_rate, hedge_update, stationary_distribution, Family, Hedge, Learner, SwapLearner};
pub use losses::{
    expected_losses, player_expected_utilities, player_losses, scale_loss, scale_losses, Evaluator,
};
pub use nrlaplace::{
    balanced_budget, feasibility, laplace_scale, max_feasible_rounds, nr_params, regret_bounds,
    replay_nr_laplace, run_nr_laplace, Feasibility, NrConfig, NrOutcome, NrParams, RegretBounds, Replay,
};
pub use regret::{
    correlated_distribution, expected_loss, regret, regret_for_map, swap_regret_brute_force,
    CorrelatedDistribution, LossMatrix, StrategySequence,
};
