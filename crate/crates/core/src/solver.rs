//! Express-lane submission subgame and the auction-stage equilibrium.
//!
//! With a time advantage `T` sold to one player, the submission subgame has a
//! unique symmetric equilibrium `(k_w*, k_l*)`. Dividing the two first-order
//! conditions eliminates the prize/cost factor and reduces the system to one
//! scalar equation in `x = (n-1) k_l lambda T`:
//!
//! ```text
//!     (n-1) * lambda * T * H(x) = C / V,        x in (0, 1)
//! ```
//!
//! `H` is strictly decreasing with `H -> +inf` at 0 and `H -> 0` at 1, so a
//! bracketed bisection always finds the unique root. The copy intensities are
//! then recovered in closed form, and the auction bid is the winner/loser
//! payoff gap `b* = u_w* - u_l*`.
//!
//! Note on symbols: the scalar equation's right-hand side is the per-copy
//! revert cost, written `C` throughout this crate; `revenue` is reserved for
//! the sequencer/DAO proceeds.

use serde::Serialize;
use thiserror::Error;

use crate::game::{baseline_equilibrium, BaselineEquilibrium, GameParams};

/// Bracket endpoints for the root search; `H` is evaluated on
/// `[EPS, 1 - EPS]` rather than the open interval.
const BRACKET_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("x must lie strictly in (0, 1), got {0}")]
    XOutOfRange(f64),
    #[error("player count must be at least 2, got {0}")]
    PlayerCount(u32),
    #[error("the submission subgame needs a positive time advantage (T = {0}); use the baseline equilibrium instead")]
    AdvantageRequired(f64),
    #[error("the scalar equation has no sign change on [{lo}, {hi}]; the root lies outside the searchable bracket")]
    NoBracket { lo: f64, hi: f64 },
    #[error("bisection did not reach width {tolerance:e} on [{lo}, {hi}] within {iterations} iterations")]
    Convergence {
        lo: f64,
        hi: f64,
        iterations: usize,
        tolerance: f64,
    },
    #[error("{side} first-order condition residual {residual:e} exceeds {tolerance:e}")]
    ResidualTooLarge {
        side: &'static str,
        residual: f64,
        tolerance: f64,
    },
    #[error(
        "winner payoff cross-check failed: direct {direct} vs via first-order condition {via_foc}"
    )]
    WinnerPayoffMismatch { direct: f64, via_foc: f64 },
    #[error("equilibrium comparison violated an identity or ordering: {0}")]
    ComparisonViolation(String),
}

/// Solver tolerances. `x_tol` is the widest acceptable final bracket; the
/// bisection keeps halving until the bracket cannot shrink in f64, which is
/// what the residual gates at small roots require.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Maximum accepted width of the final root bracket.
    pub x_tol: f64,
    /// Iteration cap for the bisection.
    pub max_iterations: usize,
    /// Gate on the first-order-condition residuals, relative to `C`.
    pub residual_tol_rel: f64,
    /// Gate on dimensionless identities (spam ratio, loser-payoff identity).
    pub identity_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            x_tol: 1e-14,
            max_iterations: 300,
            residual_tol_rel: 1e-10,
            identity_tol: 1e-10,
        }
    }
}

/// Subgame solution plus the auction bid and the surplus split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeboostEquilibrium {
    /// Root of the scalar equation, `x* = (n-1) k_l* lambda T`.
    pub root_x: f64,
    /// Copies submitted by each auction loser.
    pub loser_copies: f64,
    /// Copies submitted by the auction winner.
    pub winner_copies: f64,
    /// Total copies `k_w* + (n-1) k_l*` (the express-lane spam level).
    pub total_copies: f64,
    /// A loser's continuation payoff.
    pub loser_payoff: f64,
    /// The winner's continuation payoff, excluding the auction payment.
    pub winner_payoff: f64,
    /// Equilibrium second-price bid, `b* = u_w* - u_l*`.
    pub bid: f64,
    /// Total user surplus `n u_l*` (the winner pays the bid back out).
    pub user_surplus: f64,
    /// Sequencer/DAO revenue `V - n u_l*`.
    pub revenue: f64,
    /// Absolute residual of the winner first-order condition at the solution.
    pub winner_foc_residual: f64,
    /// Absolute residual of the loser first-order condition at the solution.
    pub loser_foc_residual: f64,
}

/// Baseline-vs-express-lane comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub baseline: BaselineEquilibrium,
    pub timeboost: TimeboostEquilibrium,
    /// `K_tb / K*`; provably below 1 for any positive advantage.
    pub spam_ratio: f64,
    /// `R_tb - R*`; provably positive for any positive advantage.
    pub revenue_delta: f64,
    /// `|spam_ratio - (1 + x*/(n-1)) e^{-a(x*)}|`, an independent algebraic
    /// route to the same ratio.
    pub ratio_identity_residual: f64,
}

fn check_x(x: f64) -> Result<(), SolveError> {
    if !(x.is_finite() && x > 0.0 && x < 1.0) {
        return Err(SolveError::XOutOfRange(x));
    }
    Ok(())
}

fn check_n(n: u32) -> Result<(), SolveError> {
    if n < 2 {
        return Err(SolveError::PlayerCount(n));
    }
    Ok(())
}

/// Winner-to-loser copy ratio `r(x) = (1 + (n-1)x) / (1 - x)`, always above 1.
pub fn ratio_r(x: f64, n: u32) -> Result<f64, SolveError> {
    check_x(x)?;
    check_n(n)?;
    Ok(ratio_r_unchecked(x, f64::from(n)))
}

fn ratio_r_unchecked(x: f64, n: f64) -> f64 {
    (1.0 + (n - 1.0) * x) / (1.0 - x)
}

/// The winner's discount exponent `a(x) = k_w lambda T` expressed through the
/// scalar variable: `a(x) = x (1 + (n-1)x) / ((n-1)(1-x))`; positive and
/// strictly increasing on (0, 1).
pub fn a_function(x: f64, n: u32) -> Result<f64, SolveError> {
    check_x(x)?;
    check_n(n)?;
    Ok(a_unchecked(x, f64::from(n)))
}

fn a_unchecked(x: f64, n: f64) -> f64 {
    x * (1.0 + (n - 1.0) * x) / ((n - 1.0) * (1.0 - x))
}

/// Left-hand-side profile of the scalar equation:
/// `H(x) = (n-1+x)(1-x) / (x n^2) * e^{-a(x)}`, strictly decreasing on (0, 1).
pub fn h_function(x: f64, n: u32) -> Result<f64, SolveError> {
    check_x(x)?;
    check_n(n)?;
    Ok(h_unchecked(x, f64::from(n)))
}

fn h_unchecked(x: f64, n: f64) -> f64 {
    (n - 1.0 + x) * (1.0 - x) / (x * n * n) * (-a_unchecked(x, n)).exp()
}

/// The winner's expected continuation payoff (auction payment excluded) when
/// the winner submits `winner_copies` and each of the `n-1` losers submits
/// `loser_copies_each`:
/// `V (1 - (n-1)k_l / D * e^{-k_w lambda T}) - C k_w` with `D` the total.
pub fn winner_payoff(winner_copies: f64, loser_copies_each: f64, params: &GameParams) -> f64 {
    debug_assert!(winner_copies >= 0.0 && loser_copies_each >= 0.0);
    let n = f64::from(params.players());
    let rival_total = (n - 1.0) * loser_copies_each;
    let total = winner_copies + rival_total;
    if total == 0.0 {
        return 0.0;
    }
    let lose_prob = rival_total / total * (-winner_copies * params.rate_advantage()).exp();
    params.net_prize() * (1.0 - lose_prob) - params.copy_cost() * winner_copies
}

/// A loser's expected payoff when submitting `own_copies` against the winner
/// at `winner_copies` and the other `n-2` losers at `other_losers_each`:
/// `V * k_j / (k_w + k_j + (n-2) k_l) * e^{-k_w lambda T} - C k_j`.
pub fn loser_payoff(
    own_copies: f64,
    winner_copies: f64,
    other_losers_each: f64,
    params: &GameParams,
) -> f64 {
    debug_assert!(own_copies >= 0.0 && winner_copies >= 0.0 && other_losers_each >= 0.0);
    if own_copies == 0.0 {
        return 0.0;
    }
    let n = f64::from(params.players());
    let total = winner_copies + own_copies + (n - 2.0) * other_losers_each;
    let win_prob = own_copies / total * (-winner_copies * params.rate_advantage()).exp();
    params.net_prize() * win_prob - params.copy_cost() * own_copies
}

/// Value of `d u_w / d k_w` at a symmetric profile; zero at the equilibrium.
pub fn winner_foc_value(winner_copies: f64, loser_copies_each: f64, params: &GameParams) -> f64 {
    let n = f64::from(params.players());
    let rate_adv = params.rate_advantage();
    let rival_total = (n - 1.0) * loser_copies_each;
    let total = winner_copies + rival_total;
    let discount = (-winner_copies * rate_adv).exp();
    (rival_total / (total * total) + rival_total / total * rate_adv) * discount * params.net_prize()
        - params.copy_cost()
}

/// Value of `d u_l / d k_l` for one loser at a symmetric profile.
pub fn loser_foc_value(winner_copies: f64, loser_copies_each: f64, params: &GameParams) -> f64 {
    let n = f64::from(params.players());
    let rate_adv = params.rate_advantage();
    let total = winner_copies + (n - 1.0) * loser_copies_each;
    let discount = (-winner_copies * rate_adv).exp();
    (winner_copies + (n - 2.0) * loser_copies_each) / (total * total)
        * discount
        * params.net_prize()
        - params.copy_cost()
}

/// Solves the submission subgame with default tolerances.
pub fn solve_subgame(params: &GameParams) -> Result<TimeboostEquilibrium, SolveError> {
    solve_subgame_with(params, &SolverConfig::default())
}

/// Solves the submission subgame by bisecting the scalar equation.
///
/// The returned equilibrium has passed three independent gates: both
/// first-order-condition residuals below `residual_tol_rel * C`, the
/// loser-payoff identity `u_l* = e^{-k_w* lambda T} V (k_l*/D*)^2`, and a
/// cross-check of `u_w*` computed directly and with `C` eliminated through
/// the winner first-order condition.
pub fn solve_subgame_with(
    params: &GameParams,
    config: &SolverConfig,
) -> Result<TimeboostEquilibrium, SolveError> {
    let rate_adv = params.rate_advantage();
    if rate_adv <= 0.0 {
        return Err(SolveError::AdvantageRequired(params.advantage()));
    }
    let n = f64::from(params.players());
    let cost_prize_ratio = params.copy_cost() / params.net_prize();

    // phi(x) = (n-1) lambda T H(x) - C/V, strictly decreasing, +inf at 0,
    // -C/V at 1.
    let phi = |x: f64| (n - 1.0) * rate_adv * h_unchecked(x, n) - cost_prize_ratio;

    let mut lo = BRACKET_EPS;
    let mut hi = 1.0 - BRACKET_EPS;
    if !(phi(lo) > 0.0 && phi(hi) < 0.0) {
        return Err(SolveError::NoBracket { lo, hi });
    }
    let mut iterations = 0;
    while iterations < config.max_iterations {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket no longer representable in f64
        }
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    if hi - lo > config.x_tol && iterations >= config.max_iterations {
        return Err(SolveError::Convergence {
            lo,
            hi,
            iterations,
            tolerance: config.x_tol,
        });
    }
    let root_x = if phi(lo).abs() <= phi(hi).abs() {
        lo
    } else {
        hi
    };

    let loser_copies = root_x / ((n - 1.0) * rate_adv);
    let winner_copies = ratio_r_unchecked(root_x, n) * loser_copies;
    let total_copies = winner_copies + (n - 1.0) * loser_copies;

    let residual_gate = config.residual_tol_rel * params.copy_cost();
    let winner_foc_residual = winner_foc_value(winner_copies, loser_copies, params).abs();
    if winner_foc_residual > residual_gate {
        return Err(SolveError::ResidualTooLarge {
            side: "winner",
            residual: winner_foc_residual,
            tolerance: residual_gate,
        });
    }
    let loser_foc_residual = loser_foc_value(winner_copies, loser_copies, params).abs();
    if loser_foc_residual > residual_gate {
        return Err(SolveError::ResidualTooLarge {
            side: "loser",
            residual: loser_foc_residual,
            tolerance: residual_gate,
        });
    }

    let loser_payoff_value = loser_payoff(loser_copies, winner_copies, loser_copies, params);
    let winner_payoff_direct = winner_payoff(winner_copies, loser_copies, params);

    // Double-entry check: eliminate C from u_w through the winner FOC. The
    // two routes differ by k_w times the FOC residual and must agree.
    let discount = (-winner_copies * rate_adv).exp();
    let rival_total = (n - 1.0) * loser_copies;
    let winner_payoff_via_foc = params.net_prize()
        * (1.0
            - discount
                * rival_total
                * (1.0 / total_copies
                    + winner_copies / (total_copies * total_copies)
                    + winner_copies * rate_adv / total_copies));
    if (winner_payoff_direct - winner_payoff_via_foc).abs()
        > config.residual_tol_rel * params.net_prize()
    {
        return Err(SolveError::WinnerPayoffMismatch {
            direct: winner_payoff_direct,
            via_foc: winner_payoff_via_foc,
        });
    }

    let user_surplus = n * loser_payoff_value;
    Ok(TimeboostEquilibrium {
        root_x,
        loser_copies,
        winner_copies,
        total_copies,
        loser_payoff: loser_payoff_value,
        winner_payoff: winner_payoff_direct,
        bid: winner_payoff_direct - loser_payoff_value,
        user_surplus,
        revenue: params.net_prize() - user_surplus,
        winner_foc_residual,
        loser_foc_residual,
    })
}

/// Solves both regimes and reports the spam and revenue comparison with
/// default tolerances.
pub fn compare(params: &GameParams) -> Result<ComparisonReport, SolveError> {
    compare_with(params, &SolverConfig::default())
}

/// Solves both regimes and validates the provable orderings: strictly less
/// spam and strictly more revenue under the express lane, plus the algebraic
/// ratio identity.
pub fn compare_with(
    params: &GameParams,
    config: &SolverConfig,
) -> Result<ComparisonReport, SolveError> {
    let baseline = baseline_equilibrium(params);
    let timeboost = solve_subgame_with(params, config)?;
    let spam_ratio = timeboost.total_copies / baseline.total_copies;
    let revenue_delta = timeboost.revenue - baseline.revenue;
    let n = f64::from(params.players());
    let identity = (1.0 + timeboost.root_x / (n - 1.0)) * (-a_unchecked(timeboost.root_x, n)).exp();
    let ratio_identity_residual = (spam_ratio - identity).abs();

    if spam_ratio >= 1.0 {
        return Err(SolveError::ComparisonViolation(format!(
            "spam ratio {spam_ratio} is not below 1"
        )));
    }
    if revenue_delta <= 0.0 {
        return Err(SolveError::ComparisonViolation(format!(
            "revenue delta {revenue_delta} is not positive"
        )));
    }
    if ratio_identity_residual >= config.identity_tol {
        return Err(SolveError::ComparisonViolation(format!(
            "spam-ratio identity residual {ratio_identity_residual:e} exceeds {:e}",
            config.identity_tol
        )));
    }
    Ok(ComparisonReport {
        baseline,
        timeboost,
        spam_ratio,
        revenue_delta,
        ratio_identity_residual,
    })
}
