//! Brute-force verification layer: grid best responses, iterated
//! best-response dynamics, and the auction-stage utility.
//!
//! Nothing here trusts the closed forms in [`crate::solver`]; every result is
//! located by direct payoff maximization so the analytic outputs can be
//! cross-checked against an independent route.

use serde::Serialize;
use thiserror::Error;

use crate::game::{baseline_equilibrium, GameParams};
use crate::solver::{loser_payoff, winner_payoff, TimeboostEquilibrium};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("bracket must satisfy 0 <= lo < hi, got [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("copy count must be nonnegative and finite, got {0}")]
    InvalidCopies(f64),
    #[error("cross-check failed: {0}")]
    CrossCheckFailed(String),
}

/// Grid maximization result. Strict concavity of both role payoffs puts the
/// true maximizer within one `grid_spacing` of `argmax_copies`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestResponseResult {
    pub argmax_copies: f64,
    pub payoff_at_argmax: f64,
    /// Spacing of the final (refined) grid.
    pub grid_spacing: f64,
    /// The searched bracket.
    pub bracket: (f64, f64),
    /// Set when the argmax sits on a bracket edge; the true maximizer may
    /// then lie outside the bracket.
    pub at_boundary: bool,
}

/// Iterated best-response trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrDynamicsTrace {
    /// Visited `(winner_copies, loser_copies)` profiles, starting at init.
    pub iterates: Vec<(f64, f64)>,
    pub converged: bool,
    /// Largest per-component move of the final step.
    pub final_gap: f64,
    /// Set when oscillation triggered the 0.5 damping factor.
    pub damping_applied: bool,
}

/// Default search bracket: payoffs at `5 V/C` copies are deeply negative for
/// either role, so the maximizer is interior.
pub fn default_bracket(params: &GameParams) -> (f64, f64) {
    (0.0, 5.0 * params.net_prize() / params.copy_cost())
}

/// Default coarse spacing: 10^5 points across the default bracket.
pub fn default_spacing(params: &GameParams) -> f64 {
    let (lo, hi) = default_bracket(params);
    (hi - lo) / 1e5
}

fn check_grid(bracket: (f64, f64), spacing: f64) -> Result<(), OracleError> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
        return Err(OracleError::InvalidBracket { lo, hi });
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(OracleError::InvalidSpacing(spacing));
    }
    Ok(())
}

/// One grid pass plus a single 100x refinement around the coarse argmax.
fn grid_argmax<F: Fn(f64) -> f64>(
    payoff: F,
    bracket: (f64, f64),
    spacing: f64,
) -> BestResponseResult {
    let coarse = sweep(&payoff, bracket.0, bracket.1, spacing);
    let refine_lo = (coarse - spacing).max(bracket.0);
    let refine_hi = (coarse + spacing).min(bracket.1);
    let fine_spacing = spacing / 100.0;
    let argmax = sweep(&payoff, refine_lo, refine_hi, fine_spacing);
    let at_boundary =
        argmax <= bracket.0 + 0.5 * fine_spacing || argmax >= bracket.1 - 0.5 * fine_spacing;
    BestResponseResult {
        argmax_copies: argmax,
        payoff_at_argmax: payoff(argmax),
        grid_spacing: fine_spacing,
        bracket,
        at_boundary,
    }
}

fn sweep<F: Fn(f64) -> f64>(payoff: &F, lo: f64, hi: f64, spacing: f64) -> f64 {
    let steps = ((hi - lo) / spacing).ceil() as usize;
    let mut best_k = lo;
    let mut best_u = payoff(lo);
    for i in 1..=steps {
        let k = (lo + spacing * i as f64).min(hi);
        let u = payoff(k);
        if u > best_u {
            best_u = u;
            best_k = k;
        }
    }
    best_k
}

/// Grid best response of the auction winner against losers all playing
/// `loser_copies_each`.
///
/// With no rival copies at all the race is degenerate: the winner faces no
/// competition and every positive submission is pure cost, so the best
/// response is abstention and the grid is skipped.
pub fn best_response_winner(
    loser_copies_each: f64,
    params: &GameParams,
    bracket: (f64, f64),
    spacing: f64,
) -> Result<BestResponseResult, OracleError> {
    if !(loser_copies_each.is_finite() && loser_copies_each >= 0.0) {
        return Err(OracleError::InvalidCopies(loser_copies_each));
    }
    check_grid(bracket, spacing)?;
    if loser_copies_each == 0.0 {
        return Ok(BestResponseResult {
            argmax_copies: 0.0,
            payoff_at_argmax: winner_payoff(0.0, 0.0, params),
            grid_spacing: spacing / 100.0,
            bracket,
            at_boundary: true,
        });
    }
    Ok(grid_argmax(
        |k| winner_payoff(k, loser_copies_each, params),
        bracket,
        spacing,
    ))
}

/// Grid best response of one auction loser against the winner at
/// `winner_copies` and the other losers at `other_losers_each`.
pub fn best_response_loser(
    winner_copies: f64,
    other_losers_each: f64,
    params: &GameParams,
    bracket: (f64, f64),
    spacing: f64,
) -> Result<BestResponseResult, OracleError> {
    for k in [winner_copies, other_losers_each] {
        if !(k.is_finite() && k >= 0.0) {
            return Err(OracleError::InvalidCopies(k));
        }
    }
    check_grid(bracket, spacing)?;
    Ok(grid_argmax(
        |k| loser_payoff(k, winner_copies, other_losers_each, params),
        bracket,
        spacing,
    ))
}

/// Deviation gains below this fraction of the prize count as stationary.
/// Near the zero-participation corner the grid argmax sits one spacing from
/// zero while the gain from entering is on the order of the full prize, so a
/// copy-space gap alone would mistake that corner for a fixed point.
const BR_GAIN_TOL_REL: f64 = 1e-9;

/// Runs simultaneous (Jacobi) best-response updates from `init` until the
/// profile is an approximate fixed point of the best-response map: every
/// per-component move below `tol` and every deviation gain negligible.
///
/// Uniqueness of the equilibrium does not guarantee these dynamics converge;
/// a non-converged trace is data, not an error. A 0.5 damping factor kicks in
/// when the updates start oscillating, and is recorded on the trace.
pub fn iterated_best_response(
    init: (f64, f64),
    params: &GameParams,
    tol: f64,
    max_iter: usize,
) -> Result<BrDynamicsTrace, OracleError> {
    let bracket = default_bracket(params);
    let spacing = default_spacing(params);
    let gain_tol = BR_GAIN_TOL_REL * params.net_prize();
    let mut current = init;
    let mut iterates = vec![init];
    // last nonzero move per component; Jacobi steps often leave one
    // component exactly stationary, which would hide a sign flip
    let mut last_moves = (0.0_f64, 0.0_f64);
    let mut damping_applied = false;
    let mut final_gap = f64::INFINITY;

    for _ in 0..=max_iter {
        let (winner_now, loser_now) = current;
        let winner_br = best_response_winner(loser_now, params, bracket, spacing)?;
        let loser_br = best_response_loser(winner_now, loser_now, params, bracket, spacing)?;

        final_gap = (winner_br.argmax_copies - winner_now)
            .abs()
            .max((loser_br.argmax_copies - loser_now).abs());
        let winner_gain = winner_br.payoff_at_argmax - winner_payoff(winner_now, loser_now, params);
        let loser_gain =
            loser_br.payoff_at_argmax - loser_payoff(loser_now, winner_now, loser_now, params);
        if final_gap < tol && winner_gain.max(loser_gain) < gain_tol {
            return Ok(BrDynamicsTrace {
                iterates,
                converged: true,
                final_gap,
                damping_applied,
            });
        }

        let mut delta = (
            winner_br.argmax_copies - winner_now,
            loser_br.argmax_copies - loser_now,
        );
        let oscillating = delta.0 * last_moves.0 < 0.0 || delta.1 * last_moves.1 < 0.0;
        if oscillating && !damping_applied {
            damping_applied = true;
            log::debug!("best-response dynamics oscillating; damping updates by 0.5");
        }
        if damping_applied {
            delta = (0.5 * delta.0, 0.5 * delta.1);
        }
        current = (winner_now + delta.0, loser_now + delta.1);
        iterates.push(current);
        if delta.0 != 0.0 {
            last_moves.0 = delta.0;
        }
        if delta.1 != 0.0 {
            last_moves.1 = delta.1;
        }
    }
    Ok(BrDynamicsTrace {
        iterates,
        converged: false,
        final_gap,
        damping_applied,
    })
}

/// A bidder's expected utility at a symmetric bid `b` in the sealed-bid
/// second-price auction, given the continuation values: with uniform
/// tie-breaking each bidder wins with probability `1/n`, so
/// `U(b) = u_l + (value_of_winning - b) / n`.
pub fn auction_utility_symmetric(
    bid: f64,
    value_of_winning: f64,
    loser_payoff: f64,
    players: u32,
) -> f64 {
    debug_assert!(players >= 2);
    loser_payoff + (value_of_winning - bid) / f64::from(players)
}

/// Cross-checks a solved baseline equilibrium: the grid best response against
/// `(n-1) k*` rivals must land within one grid spacing of `k*`.
pub fn verify_baseline(params: &GameParams) -> Result<(), OracleError> {
    let eq = baseline_equilibrium(params);
    let rivals = (f64::from(params.players()) - 1.0) * eq.copies_per_player;
    let bracket = (0.0, params.net_prize() / params.copy_cost());
    let spacing = (bracket.1 - bracket.0) / 1e5;
    let br = grid_argmax(
        |k| crate::game::baseline_payoff(k, rivals, params.net_prize(), params.copy_cost()),
        bracket,
        spacing,
    );
    let err = (br.argmax_copies - eq.copies_per_player).abs();
    if err > br.grid_spacing {
        return Err(OracleError::CrossCheckFailed(format!(
            "baseline best response {} differs from k* {} by {err:e} (> spacing {:e})",
            br.argmax_copies, eq.copies_per_player, br.grid_spacing
        )));
    }
    Ok(())
}

/// Cross-checks a solved submission subgame: both grid best responses must
/// land within one grid spacing of the analytic `(k_w*, k_l*)`.
pub fn verify_subgame(params: &GameParams, eq: &TimeboostEquilibrium) -> Result<(), OracleError> {
    let bracket = default_bracket(params);
    let spacing = default_spacing(params);
    let winner_br = best_response_winner(eq.loser_copies, params, bracket, spacing)?;
    let winner_err = (winner_br.argmax_copies - eq.winner_copies).abs();
    if winner_err > winner_br.grid_spacing {
        return Err(OracleError::CrossCheckFailed(format!(
            "winner best response {} differs from k_w* {} by {winner_err:e} (> spacing {:e})",
            winner_br.argmax_copies, eq.winner_copies, winner_br.grid_spacing
        )));
    }
    let loser_br =
        best_response_loser(eq.winner_copies, eq.loser_copies, params, bracket, spacing)?;
    let loser_err = (loser_br.argmax_copies - eq.loser_copies).abs();
    if loser_err > loser_br.grid_spacing {
        return Err(OracleError::CrossCheckFailed(format!(
            "loser best response {} differs from k_l* {} by {loser_err:e} (> spacing {:e})",
            loser_br.argmax_copies, eq.loser_copies, loser_br.grid_spacing
        )));
    }
    Ok(())
}
