//! Model parameters and the baseline FCFS spam race.
//!
//! Every arbitrageur submits copies of the same transaction; the earliest
//! arrival wins a common-value opportunity. With exponential latency the win
//! probability is proportional to copy intensity, which makes the baseline
//! game a lottery contest with a closed-form symmetric equilibrium.

use serde::Serialize;
use thiserror::Error;

/// Parameter validation failures. Each variant names the offending input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("player count must be at least 2, got {0}")]
    PlayerCount(u32),
    #[error("opportunity value must be positive and finite, got {0}")]
    OpportunityValue(f64),
    #[error("gas cost must satisfy 0 < g < v, got g={gas_cost}, v={value}")]
    GasCost { gas_cost: f64, value: f64 },
    #[error("revert fraction must lie strictly in (0, 1), got {0}")]
    RevertFraction(f64),
    #[error("latency rate must be positive and finite, got {0}")]
    LatencyRate(f64),
    #[error("time advantage must be nonnegative and finite, got {0}")]
    TimeAdvantage(f64),
    #[error("net prize must be positive and finite, got {0}")]
    NetPrize(f64),
    #[error("per-copy cost must be positive and finite, got {0}")]
    CopyCost(f64),
    #[error("copy count must be nonnegative and finite, got {0}")]
    CopyCount(f64),
    #[error("win probability is undefined when no player submits any copy")]
    NoCopies,
}

/// Raw cost primitives: opportunity value `v`, gas cost `g` of the one
/// successful transaction, and the revert-fee fraction `r` paid by failures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GasPrimitives {
    pub value: f64,
    pub gas_cost: f64,
    pub revert_fraction: f64,
}

/// Validated parameters of the contest: `n` players, latency rate `lambda`,
/// express-lane advantage `T`, net prize `V` and per-copy cost `C`.
///
/// Constructed either from the raw primitives (v, g, r) or from (V, C)
/// directly. Note that any valid (v, g, r) yields `V - C = v - g > 0`, so
/// ratios `V/C <= 1` are reachable only through [`GameParams::from_effective`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameParams {
    players: u32,
    latency_rate: f64,
    advantage: f64,
    net_prize: f64,
    copy_cost: f64,
    primitives: Option<GasPrimitives>,
}

/// Derives the effective contest parameters from raw gas primitives:
/// `V = v - (1 - r) g` (prize net of the winner's incremental gas) and
/// `C = r g` (expected cost of one reverted copy).
pub fn derive_effective_params(
    value: f64,
    gas_cost: f64,
    revert_fraction: f64,
) -> Result<(f64, f64), ParamError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(ParamError::OpportunityValue(value));
    }
    if !(gas_cost.is_finite() && gas_cost > 0.0 && gas_cost < value) {
        return Err(ParamError::GasCost { gas_cost, value });
    }
    if !(revert_fraction.is_finite() && revert_fraction > 0.0 && revert_fraction < 1.0) {
        return Err(ParamError::RevertFraction(revert_fraction));
    }
    let net_prize = value - (1.0 - revert_fraction) * gas_cost;
    let copy_cost = revert_fraction * gas_cost;
    Ok((net_prize, copy_cost))
}

impl GameParams {
    /// Builds parameters from raw primitives, deriving `V` and `C`.
    pub fn from_primitives(
        players: u32,
        value: f64,
        gas_cost: f64,
        revert_fraction: f64,
        latency_rate: f64,
        advantage: f64,
    ) -> Result<Self, ParamError> {
        let (net_prize, copy_cost) = derive_effective_params(value, gas_cost, revert_fraction)?;
        let mut params =
            Self::from_effective(players, net_prize, copy_cost, latency_rate, advantage)?;
        params.primitives = Some(GasPrimitives {
            value,
            gas_cost,
            revert_fraction,
        });
        Ok(params)
    }

    /// Builds parameters from the effective prize `V` and copy cost `C`.
    pub fn from_effective(
        players: u32,
        net_prize: f64,
        copy_cost: f64,
        latency_rate: f64,
        advantage: f64,
    ) -> Result<Self, ParamError> {
        if players < 2 {
            return Err(ParamError::PlayerCount(players));
        }
        if !(net_prize.is_finite() && net_prize > 0.0) {
            return Err(ParamError::NetPrize(net_prize));
        }
        if !(copy_cost.is_finite() && copy_cost > 0.0) {
            return Err(ParamError::CopyCost(copy_cost));
        }
        if !(latency_rate.is_finite() && latency_rate > 0.0) {
            return Err(ParamError::LatencyRate(latency_rate));
        }
        if !(advantage.is_finite() && advantage >= 0.0) {
            return Err(ParamError::TimeAdvantage(advantage));
        }
        Ok(Self {
            players,
            latency_rate,
            advantage,
            net_prize,
            copy_cost,
            primitives: None,
        })
    }

    pub fn players(&self) -> u32 {
        self.players
    }

    pub fn latency_rate(&self) -> f64 {
        self.latency_rate
    }

    pub fn advantage(&self) -> f64 {
        self.advantage
    }

    pub fn net_prize(&self) -> f64 {
        self.net_prize
    }

    pub fn copy_cost(&self) -> f64 {
        self.copy_cost
    }

    pub fn primitives(&self) -> Option<GasPrimitives> {
        self.primitives
    }

    /// The product `lambda * T`; equilibrium quantities depend on the
    /// latency rate and the advantage only through it.
    pub fn rate_advantage(&self) -> f64 {
        self.latency_rate * self.advantage
    }
}

/// Closed-form symmetric equilibrium of the baseline race.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineEquilibrium {
    /// Copies submitted by each player, `k* = (n-1)/n^2 * V/C`.
    pub copies_per_player: f64,
    /// Total copies in the mempool, `K* = n k*`.
    pub total_copies: f64,
    /// Each player's equilibrium payoff, `u* = V/n^2`.
    pub payoff_per_player: f64,
    /// Total user surplus, `W* = n u*`.
    pub user_surplus: f64,
    /// Sequencer/DAO revenue from revert fees, `R* = V - W*`.
    pub revenue: f64,
}

/// Probability that a player submitting `own_copies` beats rivals holding
/// `rival_copies` in total: `k_i / (k_i + K_-i)` under exponential latency.
pub fn baseline_win_prob(own_copies: f64, rival_copies: f64) -> Result<f64, ParamError> {
    for k in [own_copies, rival_copies] {
        if !(k.is_finite() && k >= 0.0) {
            return Err(ParamError::CopyCount(k));
        }
    }
    let total = own_copies + rival_copies;
    if total == 0.0 {
        return Err(ParamError::NoCopies);
    }
    Ok(own_copies / total)
}

/// Expected payoff of a player submitting `own_copies` against a rival total:
/// `V * k_i / (k_i + K_-i) - C * k_i`. Submitting nothing yields 0, including
/// the corner where nobody participates.
pub fn baseline_payoff(own_copies: f64, rival_copies: f64, net_prize: f64, copy_cost: f64) -> f64 {
    debug_assert!(own_copies >= 0.0 && rival_copies >= 0.0);
    debug_assert!(net_prize > 0.0 && copy_cost > 0.0);
    if own_copies == 0.0 {
        return 0.0;
    }
    let total = own_copies + rival_copies;
    net_prize * (own_copies / total) - copy_cost * own_copies
}

/// Computes the unique symmetric equilibrium of the baseline race.
///
/// The budget identities `K* = n k*`, `W* = n u*`, and `W* + R* = V` hold
/// exactly because the aggregates are computed from the per-player values.
pub fn baseline_equilibrium(params: &GameParams) -> BaselineEquilibrium {
    let n = f64::from(params.players());
    let prize_cost_ratio = params.net_prize() / params.copy_cost();
    let copies_per_player = (n - 1.0) / (n * n) * prize_cost_ratio;
    let payoff_per_player = params.net_prize() / (n * n);
    let user_surplus = n * payoff_per_player;
    BaselineEquilibrium {
        copies_per_player,
        total_copies: n * copies_per_player,
        payoff_per_player,
        user_surplus,
        revenue: params.net_prize() - user_surplus,
    }
}
