//! Flat output records with a stable column order.

use serde::Serialize;
use spamrace::{BaselineEquilibrium, ComparisonReport, GameParams, TimeboostEquilibrium};

/// Version tag carried by every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

/// One solve/compare result as a flat record. Missing columns (raw gas
/// primitives when parameters were given effectively, equilibrium fields not
/// produced by the subcommand) serialize as null in JSON and empty in CSV.
#[derive(Debug, Clone, Serialize)]
pub struct SolveRecord {
    pub n: u32,
    pub v: Option<f64>,
    pub g: Option<f64>,
    pub r: Option<f64>,
    pub lambda: f64,
    #[serde(rename = "T")]
    pub advantage: f64,
    #[serde(rename = "V")]
    pub net_prize: f64,
    #[serde(rename = "C")]
    pub copy_cost: f64,
    pub x_star: Option<f64>,
    pub k_l_star: Option<f64>,
    pub k_w_star: Option<f64>,
    pub u_l_star: Option<f64>,
    pub u_w_star: Option<f64>,
    pub b_star: Option<f64>,
    #[serde(rename = "K_base")]
    pub k_base: Option<f64>,
    #[serde(rename = "K_tb")]
    pub k_tb: Option<f64>,
    #[serde(rename = "R_base")]
    pub r_base: Option<f64>,
    #[serde(rename = "R_tb")]
    pub r_tb: Option<f64>,
    pub spam_ratio: Option<f64>,
    pub revenue_delta: Option<f64>,
}

impl SolveRecord {
    fn params_only(params: &GameParams) -> Self {
        let primitives = params.primitives();
        Self {
            n: params.players(),
            v: primitives.map(|p| p.value),
            g: primitives.map(|p| p.gas_cost),
            r: primitives.map(|p| p.revert_fraction),
            lambda: params.latency_rate(),
            advantage: params.advantage(),
            net_prize: params.net_prize(),
            copy_cost: params.copy_cost(),
            x_star: None,
            k_l_star: None,
            k_w_star: None,
            u_l_star: None,
            u_w_star: None,
            b_star: None,
            k_base: None,
            k_tb: None,
            r_base: None,
            r_tb: None,
            spam_ratio: None,
            revenue_delta: None,
        }
    }

    pub fn from_baseline(params: &GameParams, eq: &BaselineEquilibrium) -> Self {
        Self {
            k_base: Some(eq.total_copies),
            r_base: Some(eq.revenue),
            ..Self::params_only(params)
        }
    }

    pub fn from_timeboost(params: &GameParams, eq: &TimeboostEquilibrium) -> Self {
        Self {
            x_star: Some(eq.root_x),
            k_l_star: Some(eq.loser_copies),
            k_w_star: Some(eq.winner_copies),
            u_l_star: Some(eq.loser_payoff),
            u_w_star: Some(eq.winner_payoff),
            b_star: Some(eq.bid),
            k_tb: Some(eq.total_copies),
            r_tb: Some(eq.revenue),
            ..Self::params_only(params)
        }
    }

    pub fn from_comparison(params: &GameParams, report: &ComparisonReport) -> Self {
        Self {
            k_base: Some(report.baseline.total_copies),
            r_base: Some(report.baseline.revenue),
            spam_ratio: Some(report.spam_ratio),
            revenue_delta: Some(report.revenue_delta),
            ..Self::from_timeboost(params, &report.timeboost)
        }
    }
}

/// JSON envelope for a single record.
#[derive(Serialize)]
pub struct RecordDoc {
    pub schema: u32,
    #[serde(flatten)]
    pub record: SolveRecord,
}

/// JSON envelope for a sweep.
#[derive(Serialize)]
pub struct SweepDoc {
    pub schema: u32,
    pub results: Vec<SolveRecord>,
}

/// JSON envelope for simulation outcomes.
#[derive(Serialize)]
pub struct SimDoc<T: Serialize> {
    pub schema: u32,
    #[serde(flatten)]
    pub outcome: T,
}
