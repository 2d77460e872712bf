//! Monte Carlo verification of the latency races and the full
//! auction-plus-submission game.
//!
//! Replications are split into fixed-size batches; batch `b` draws from an
//! independent ChaCha stream selected by `set_stream(b)`, and batch results
//! are folded in batch order. Outcomes are therefore bit-identical for a
//! given seed regardless of how many worker threads execute the batches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::game::GameParams;

/// Replications per RNG stream. Fixed so that the batch structure (and hence
/// the output) does not depend on the executing thread pool.
const BATCH_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("replications must be at least 1")]
    NoReplications,
    #[error("latency rate must be positive and finite, got {0}")]
    BadRate(f64),
    #[error("time advantage must be nonnegative and finite, got {0}")]
    BadAdvantage(f64),
    #[error("copy intensity must be nonnegative and finite, got {0}")]
    BadIntensity(f64),
    #[error("at least one copy intensity must be positive")]
    AllZero,
    #[error("baseline races require a zero advantage, got T = {0}")]
    AdvantagePresent(f64),
    #[error("express-lane races require a positive advantage and a winner index")]
    AdvantageMissing,
    #[error("winner index must be set exactly when the advantage is positive")]
    WinnerIndexMismatch,
    #[error("winner index {index} out of range for {players} players")]
    WinnerIndexRange { index: usize, players: usize },
    #[error("expected {expected} bids, got {got}")]
    BidCount { expected: usize, got: usize },
    #[error("bid must be nonnegative and finite, got {0}")]
    BadBid(f64),
    #[error(
        "settlement prize must be finite and cost nonnegative, got prize={prize}, cost={cost}"
    )]
    BadSettlement { prize: f64, cost: f64 },
}

/// How copy intensities translate into minimum-latency sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum CopyModel {
    /// Sample one exponential with rate `k * lambda` (the relaxed model).
    #[default]
    Fractional,
    /// Sample the minimum of `ceil(k)` i.i.d. exponentials with rate
    /// `lambda`, for sensitivity checks against the integer game.
    Integer,
}

/// Configuration of one simulated race.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RaceConfig {
    /// Per-player copy intensities.
    pub copy_profile: Vec<f64>,
    /// Latency rate `lambda`.
    pub latency_rate: f64,
    /// Express-lane advantage `T`; zero for the baseline race.
    pub advantage: f64,
    /// Index of the player holding the advantage; set exactly when `T > 0`.
    pub winner_index: Option<usize>,
    pub replications: u64,
    pub seed: u64,
    /// Prize credited to the race winner when settling payoffs.
    pub prize_value: f64,
    /// Cost charged per copy when settling payoffs.
    pub copy_cost: f64,
    pub copy_model: CopyModel,
}

impl RaceConfig {
    /// A baseline race (no advantage), settled in pure win-indicator units
    /// (prize 1, zero copy cost) unless overridden.
    pub fn baseline(
        copy_profile: Vec<f64>,
        latency_rate: f64,
        replications: u64,
        seed: u64,
    ) -> Self {
        Self {
            copy_profile,
            latency_rate,
            advantage: 0.0,
            winner_index: None,
            replications,
            seed,
            prize_value: 1.0,
            copy_cost: 0.0,
            copy_model: CopyModel::Fractional,
        }
    }

    /// An express-lane race in which `winner_index` holds the advantage.
    pub fn timeboost(
        copy_profile: Vec<f64>,
        latency_rate: f64,
        advantage: f64,
        winner_index: usize,
        replications: u64,
        seed: u64,
    ) -> Self {
        Self {
            copy_profile,
            latency_rate,
            advantage,
            winner_index: Some(winner_index),
            replications,
            seed,
            prize_value: 1.0,
            copy_cost: 0.0,
            copy_model: CopyModel::Fractional,
        }
    }

    /// Sets the economic settlement used for `mean_payoffs`.
    pub fn with_settlement(mut self, prize_value: f64, copy_cost: f64) -> Self {
        self.prize_value = prize_value;
        self.copy_cost = copy_cost;
        self
    }

    pub fn with_copy_model(mut self, copy_model: CopyModel) -> Self {
        self.copy_model = copy_model;
        self
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.replications == 0 {
            return Err(SimError::NoReplications);
        }
        if !(self.latency_rate.is_finite() && self.latency_rate > 0.0) {
            return Err(SimError::BadRate(self.latency_rate));
        }
        if !(self.advantage.is_finite() && self.advantage >= 0.0) {
            return Err(SimError::BadAdvantage(self.advantage));
        }
        for &k in &self.copy_profile {
            if !(k.is_finite() && k >= 0.0) {
                return Err(SimError::BadIntensity(k));
            }
        }
        if !self.copy_profile.iter().any(|&k| k > 0.0) {
            return Err(SimError::AllZero);
        }
        if (self.advantage > 0.0) != self.winner_index.is_some() {
            return Err(SimError::WinnerIndexMismatch);
        }
        if let Some(index) = self.winner_index {
            if index >= self.copy_profile.len() {
                return Err(SimError::WinnerIndexRange {
                    index,
                    players: self.copy_profile.len(),
                });
            }
        }
        if !self.prize_value.is_finite() || !(self.copy_cost.is_finite() && self.copy_cost >= 0.0) {
            return Err(SimError::BadSettlement {
                prize: self.prize_value,
                cost: self.copy_cost,
            });
        }
        Ok(())
    }

    /// Intensities actually raced: the profile itself, or its ceilings in
    /// integer mode.
    fn effective_profile(&self) -> Vec<f64> {
        match self.copy_model {
            CopyModel::Fractional => self.copy_profile.clone(),
            CopyModel::Integer => self.copy_profile.iter().map(|k| k.ceil()).collect(),
        }
    }
}

/// Simulation estimates next to their closed-form counterparts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RaceOutcome {
    pub win_counts: Vec<u64>,
    pub win_freqs: Vec<f64>,
    pub analytic_probs: Vec<f64>,
    /// `(freq - p) / sqrt(p (1-p) / N)` per player; zero when the analytic
    /// probability is degenerate and matched exactly.
    pub z_scores: Vec<f64>,
    /// Mean settled payoff per player (prize minus copy costs).
    pub mean_payoffs: Vec<f64>,
    /// Standard error of each mean payoff.
    pub payoff_std_errors: Vec<f64>,
}

/// Full-game estimates: auction, submission, and settlement combined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullGameOutcome {
    pub mean_payoffs: Vec<f64>,
    pub payoff_std_errors: Vec<f64>,
    /// How often each player won the auction stage.
    pub auction_win_freqs: Vec<f64>,
}

/// Per-batch accumulator; merged across batches in batch order.
struct Tally {
    wins: Vec<u64>,
    payoff_sum: Vec<f64>,
    payoff_sq_sum: Vec<f64>,
    auction_wins: Vec<u64>,
}

impl Tally {
    fn new(players: usize) -> Self {
        Self {
            wins: vec![0; players],
            payoff_sum: vec![0.0; players],
            payoff_sq_sum: vec![0.0; players],
            auction_wins: vec![0; players],
        }
    }

    fn absorb(&mut self, other: &Tally) {
        for i in 0..self.wins.len() {
            self.wins[i] += other.wins[i];
            self.payoff_sum[i] += other.payoff_sum[i];
            self.payoff_sq_sum[i] += other.payoff_sq_sum[i];
            self.auction_wins[i] += other.auction_wins[i];
        }
    }

    fn add_payoff(&mut self, player: usize, payoff: f64) {
        self.payoff_sum[player] += payoff;
        self.payoff_sq_sum[player] += payoff * payoff;
    }
}

/// Runs `replications` of `per_replication` across deterministic substreams.
fn run_batches<F>(players: usize, replications: u64, seed: u64, per_replication: F) -> Tally
where
    F: Fn(&mut ChaCha8Rng, &mut Tally) + Sync,
{
    let batches = replications.div_ceil(BATCH_SIZE);
    let partials: Vec<Tally> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch);
            let count = BATCH_SIZE.min(replications - batch * BATCH_SIZE);
            let mut tally = Tally::new(players);
            for _ in 0..count {
                per_replication(&mut rng, &mut tally);
            }
            tally
        })
        .collect();
    // sequential fold in batch order keeps float sums thread-count invariant
    let mut total = Tally::new(players);
    for partial in &partials {
        total.absorb(partial);
    }
    total
}

/// Inverse-transform exponential draw; `rate > 0`.
fn sample_exp(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.random(); // [0, 1)
    -(1.0 - u).ln() / rate
}

/// Earliest arrival for intensity `k`: one draw at rate `k * lambda`, or
/// infinity for an absent player.
fn sample_arrival(rng: &mut ChaCha8Rng, intensity: f64, latency_rate: f64) -> f64 {
    if intensity > 0.0 {
        sample_exp(rng, intensity * latency_rate)
    } else {
        f64::INFINITY
    }
}

fn outcome_from_tally(tally: &Tally, analytic_probs: Vec<f64>, replications: u64) -> RaceOutcome {
    let n = replications as f64;
    let win_freqs: Vec<f64> = tally.wins.iter().map(|&w| w as f64 / n).collect();
    let z_scores = win_freqs
        .iter()
        .zip(&analytic_probs)
        .map(|(&freq, &p)| {
            let se = (p * (1.0 - p) / n).sqrt();
            if se == 0.0 {
                if freq == p {
                    0.0
                } else {
                    f64::INFINITY.copysign(freq - p)
                }
            } else {
                (freq - p) / se
            }
        })
        .collect();
    let mean_payoffs: Vec<f64> = tally.payoff_sum.iter().map(|s| s / n).collect();
    let payoff_std_errors = tally
        .payoff_sq_sum
        .iter()
        .zip(&mean_payoffs)
        .map(|(&sq, &mean)| {
            if replications < 2 {
                return f64::NAN;
            }
            let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        })
        .collect();
    RaceOutcome {
        win_counts: tally.wins.clone(),
        win_freqs,
        analytic_probs,
        z_scores,
        mean_payoffs,
        payoff_std_errors,
    }
}

/// Simulates the first-come-first-served race without any advantage. The
/// analytic win probabilities are `k_i / sum(k)`.
pub fn simulate_baseline_race(config: &RaceConfig) -> Result<RaceOutcome, SimError> {
    config.validate()?;
    if config.advantage != 0.0 {
        return Err(SimError::AdvantagePresent(config.advantage));
    }
    let profile = config.effective_profile();
    let total: f64 = profile.iter().sum();
    let analytic: Vec<f64> = profile.iter().map(|k| k / total).collect();

    let prize = config.prize_value;
    let cost = config.copy_cost;
    let rate = config.latency_rate;
    let players = profile.len();
    let tally = run_batches(players, config.replications, config.seed, |rng, tally| {
        let mut winner = 0usize;
        let mut best = f64::INFINITY;
        for (i, &k) in profile.iter().enumerate() {
            let t = sample_arrival(rng, k, rate);
            if t < best {
                best = t;
                winner = i;
            }
        }
        tally.wins[winner] += 1;
        for (i, &k) in profile.iter().enumerate() {
            let won = f64::from(u8::from(i == winner));
            tally.add_payoff(i, prize * won - cost * k);
        }
    });
    Ok(outcome_from_tally(&tally, analytic, config.replications))
}

/// Simulates the express-lane race: the advantaged player's arrival is
/// shifted earlier by `T`, and timestamp ties go to them. Analytic
/// probabilities follow the success conditions of the two roles.
pub fn simulate_timeboost_race(config: &RaceConfig) -> Result<RaceOutcome, SimError> {
    config.validate()?;
    let advantaged = match (config.advantage > 0.0, config.winner_index) {
        (true, Some(w)) => w,
        _ => return Err(SimError::AdvantageMissing),
    };
    let profile = config.effective_profile();
    let analytic =
        timeboost_analytic_probs(&profile, advantaged, config.latency_rate * config.advantage);

    let prize = config.prize_value;
    let cost = config.copy_cost;
    let rate = config.latency_rate;
    let advantage = config.advantage;
    let players = profile.len();
    let tally = run_batches(players, config.replications, config.seed, |rng, tally| {
        let mut best_rival = f64::INFINITY;
        let mut rival = usize::MAX;
        let mut advantaged_time = f64::INFINITY;
        for (i, &k) in profile.iter().enumerate() {
            let t = sample_arrival(rng, k, rate);
            if i == advantaged {
                advantaged_time = t - advantage;
            } else if t < best_rival {
                best_rival = t;
                rival = i;
            }
        }
        // tie toward the advantaged player (a probability-zero event)
        let winner = if advantaged_time <= best_rival {
            Some(advantaged)
        } else if rival != usize::MAX {
            Some(rival)
        } else {
            None
        };
        if let Some(w) = winner {
            tally.wins[w] += 1;
        }
        for (i, &k) in profile.iter().enumerate() {
            let won = f64::from(u8::from(winner == Some(i)));
            tally.add_payoff(i, prize * won - cost * k);
        }
    });
    Ok(outcome_from_tally(&tally, analytic, config.replications))
}

/// Closed-form win probabilities of the express-lane race.
fn timeboost_analytic_probs(profile: &[f64], advantaged: usize, rate_adv: f64) -> Vec<f64> {
    let own = profile[advantaged];
    let rival_total: f64 = profile
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != advantaged)
        .map(|(_, k)| k)
        .sum();
    let total = own + rival_total;
    let discount = (-own * rate_adv).exp();
    profile
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            if i == advantaged {
                if own == 0.0 {
                    0.0
                } else {
                    1.0 - rival_total / total * discount
                }
            } else if rival_total == 0.0 {
                0.0
            } else if own == 0.0 {
                k / rival_total
            } else {
                k / total * discount
            }
        })
        .collect()
}

/// Simulates the sealed-bid second-price auction followed by the submission
/// race, settling the prize, copy costs, and the auction payment each
/// replication. The auction winner plays `winner_policy` copies, every loser
/// plays `loser_policy`.
pub fn simulate_full_game(
    params: &GameParams,
    bids: &[f64],
    winner_policy: f64,
    loser_policy: f64,
    replications: u64,
    seed: u64,
) -> Result<FullGameOutcome, SimError> {
    let players = params.players() as usize;
    if bids.len() != players {
        return Err(SimError::BidCount {
            expected: players,
            got: bids.len(),
        });
    }
    for &b in bids {
        if !(b.is_finite() && b >= 0.0) {
            return Err(SimError::BadBid(b));
        }
    }
    for k in [winner_policy, loser_policy] {
        if !(k.is_finite() && k >= 0.0) {
            return Err(SimError::BadIntensity(k));
        }
    }
    if replications == 0 {
        return Err(SimError::NoReplications);
    }
    if params.advantage() <= 0.0 {
        return Err(SimError::AdvantageMissing);
    }

    let prize = params.net_prize();
    let cost = params.copy_cost();
    let rate = params.latency_rate();
    let advantage = params.advantage();

    // ties on the highest bid are broken uniformly at random
    let top_bid = bids.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..players).filter(|&i| bids[i] == top_bid).collect();

    let tally = run_batches(players, replications, seed, |rng, tally| {
        let auction_winner = if tied.len() == 1 {
            tied[0]
        } else {
            tied[rng.random_range(0..tied.len())]
        };
        let price = (0..players)
            .filter(|&j| j != auction_winner)
            .map(|j| bids[j])
            .fold(f64::NEG_INFINITY, f64::max);
        tally.auction_wins[auction_winner] += 1;

        let mut best_rival = f64::INFINITY;
        let mut rival = usize::MAX;
        let mut advantaged_time = f64::INFINITY;
        for i in 0..players {
            let k = if i == auction_winner {
                winner_policy
            } else {
                loser_policy
            };
            let t = sample_arrival(rng, k, rate);
            if i == auction_winner {
                advantaged_time = t - advantage;
            } else if t < best_rival {
                best_rival = t;
                rival = i;
            }
        }
        let race_winner = if advantaged_time <= best_rival {
            Some(auction_winner)
        } else if rival != usize::MAX {
            Some(rival)
        } else {
            None
        };
        if let Some(w) = race_winner {
            tally.wins[w] += 1;
        }
        for i in 0..players {
            let copies = if i == auction_winner {
                winner_policy
            } else {
                loser_policy
            };
            let mut payoff = -cost * copies;
            if race_winner == Some(i) {
                payoff += prize;
            }
            if i == auction_winner {
                payoff -= price;
            }
            tally.add_payoff(i, payoff);
        }
    });

    let n = replications as f64;
    let mean_payoffs: Vec<f64> = tally.payoff_sum.iter().map(|s| s / n).collect();
    let payoff_std_errors = tally
        .payoff_sq_sum
        .iter()
        .zip(&mean_payoffs)
        .map(|(&sq, &mean)| {
            let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        })
        .collect();
    let auction_win_freqs = tally.auction_wins.iter().map(|&w| w as f64 / n).collect();
    Ok(FullGameOutcome {
        mean_payoffs,
        payoff_std_errors,
        auction_win_freqs,
    })
}
