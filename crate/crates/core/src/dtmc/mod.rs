//! Discrete-time Markov chain of one ONU observed at (merged) decision
//! instants, and the steady-state energy efficiency it implies.

mod matrix;
mod rows;
mod state;
mod stationary;
mod windows;

pub use matrix::{build_matrix, Segment, TransitionMatrix};
pub use rows::{ModeFactors, Row, STARVED};
pub use state::{DtmcState, StateSpace};
pub use stationary::{
    recurrent_class, residual, solve, stationary_distribution, stationary_distribution_with,
    SolverOptions, Stationary,
};
pub use windows::PredictionWindows;

use crate::params::NetworkConfig;
use crate::policy::{Mode, PolicyError, Thresholds};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DtmcError {
    #[error("state {0} is not a valid chain state")]
    InvalidState(DtmcState),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(
        "stationary solve did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("{0} closed classes reachable from the start state")]
    MultipleRecurrentClasses(usize),
}

pub const fn start_state() -> DtmcState {
    DtmcState::new(Mode::Active, Mode::Active, 0)
}

/// A configuration together with its thresholds and the next-decision
/// probabilities shared by every active-target row.
#[derive(Debug, Clone)]
pub struct Model {
    pub cfg: NetworkConfig,
    pub th: Thresholds,
    factors: ModeFactors,
}

impl Model {
    pub fn new(cfg: &NetworkConfig) -> Result<Self, DtmcError> {
        let th = Thresholds::new(cfg)?;
        let factors = ModeFactors::new(
            cfg.onu.lambda,
            th.fs_entry,
            th.t_lb_ds,
            cfg.onu.n_th,
            cfg.onu.n_sz,
        );
        Ok(Model {
            cfg: *cfg,
            th,
            factors,
        })
    }

    /// `[P(ds), P(fs), P(on)]` for a decision taken at queue `j`.
    pub fn mode_factors(&self, j: u32) -> [f64; 3] {
        self.factors.get(j)
    }
}

/// Long-run power: expected energy per step over expected step length.
pub fn average_power(pi: &[f64], m: &TransitionMatrix) -> f64 {
    let e: f64 = pi.iter().zip(&m.energy).map(|(p, e)| p * e).sum();
    let t: f64 = pi.iter().zip(&m.dwell).map(|(p, t)| p * t).sum();
    e / t
}

pub fn energy_efficiency(p_avg: f64, cfg: &NetworkConfig) -> f64 {
    1.0 - p_avg / cfg.power.p_on
}

/// Outcome of the analytical pipeline for one configuration.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub eta: f64,
    pub p_avg: f64,
    pub n_states: usize,
    pub residual: f64,
    /// Stationary mass on placeholder rows; zero for a sound result.
    pub flagged_mass: f64,
    /// Time share spent in each current mode, `[ds, fs, on]`.
    pub mode_shares: [f64; 3],
}

pub fn analyze(cfg: &NetworkConfig) -> Result<Analysis, DtmcError> {
    let model = Model::new(cfg)?;
    let m = build_matrix(&model)?;
    let st = stationary_distribution(&m)?;
    let p_avg = average_power(&st.pi, &m);
    let flagged_mass = st
        .pi
        .iter()
        .zip(&m.flagged)
        .filter(|(_, &f)| f)
        .map(|(p, _)| p)
        .sum();
    let total: f64 = st.pi.iter().zip(&m.dwell).map(|(p, t)| p * t).sum();
    let mut mode_shares = [0.0; 3];
    for ((p, t), s) in st.pi.iter().zip(&m.dwell).zip(m.states()) {
        let slot = match s.s_c {
            Mode::DeepSleep => 0,
            Mode::FastSleep => 1,
            Mode::Active => 2,
        };
        mode_shares[slot] += p * t / total;
    }
    Ok(Analysis {
        eta: energy_efficiency(p_avg, cfg),
        p_avg,
        n_states: m.n(),
        residual: st.residual,
        flagged_mass,
        mode_shares,
    })
}
