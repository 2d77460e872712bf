//! Solver, simulator, and measurement toolkit for transaction-spam races
//! under first-come-first-served sequencing, with and without an auctioned
//! express-lane time advantage.
//!
//! - [`game`]: contest parameters and the closed-form baseline equilibrium.
//! - [`solver`]: the express-lane submission subgame, the second-price
//!   auction bid, and the baseline comparison.
//! - [`oracle`]: independent brute-force best responses and cross-checks.
//! - [`sim`]: deterministic Monte Carlo races and the full auction game.
//! - [`metrics`]: repeated-transaction detection and daily panel aggregation
//!   over transaction logs.

pub mod game;
pub mod metrics;
pub mod oracle;
pub mod sim;
pub mod solver;

pub use game::{
    baseline_equilibrium, baseline_payoff, baseline_win_prob, derive_effective_params,
    BaselineEquilibrium, GameParams, ParamError,
};
pub use oracle::{
    auction_utility_symmetric, best_response_loser, best_response_winner, iterated_best_response,
    verify_baseline, verify_subgame, BestResponseResult, BrDynamicsTrace, OracleError,
};
pub use sim::{
    simulate_baseline_race, simulate_full_game, simulate_timeboost_race, CopyModel,
    FullGameOutcome, RaceConfig, RaceOutcome, SimError,
};
pub use solver::{
    a_function, compare, h_function, loser_payoff, ratio_r, solve_subgame, solve_subgame_with,
    winner_payoff, ComparisonReport, SolveError, SolverConfig, TimeboostEquilibrium,
};
