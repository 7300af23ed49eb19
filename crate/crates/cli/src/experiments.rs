//! The analyze, simulate and validate drivers.

use crate::{create_writer, mean_std, CliError, Grid};
use osmp_core::dtmc::analyze as analyze_config;
use osmp_core::sim::{run, PredictorKind, Scenario, TrafficKind};
use osmp_core::NetworkConfig;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeRow {
    pub load: f64,
    pub eta_analytical: f64,
    pub p_avg_w: f64,
    pub n_states: usize,
    pub residual: f64,
}

pub fn analyze(cfg: &NetworkConfig, loads: &[f64]) -> Result<Vec<AnalyzeRow>, CliError> {
    loads
        .par_iter()
        .map(|&load| {
            let a = analyze_config(&cfg.with_load(load))
                .map_err(|source| CliError::Analysis { load, source })?;
            Ok(AnalyzeRow {
                load,
                eta_analytical: a.eta,
                p_avg_w: a.p_avg,
                n_states: a.n_states,
                residual: a.residual,
            })
        })
        .collect()
}

/// Scenario knobs that stay fixed across a batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub predictor: PredictorKind,
    pub traffic: TrafficKind,
    pub mda: bool,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            predictor: PredictorKind::Oracle,
            traffic: TrafficKind::Poisson,
            mda: true,
        }
    }
}

impl SimSettings {
    pub fn scenario(&self, duration: f64, seed: u64) -> Scenario {
        Scenario {
            mda: self.mda,
            predictor: self.predictor,
            traffic: self.traffic,
            ..Scenario::osmp(duration, seed)
        }
    }

    pub fn traffic_name(&self) -> String {
        match self.traffic {
            TrafficKind::Poisson => "poisson".into(),
            TrafficKind::SelfSimilar(p) => format!("selfsimilar:{}", p.hurst),
        }
    }
}

/// One simulation, or (with `seed = "mean"`) the multi-seed mean at one
/// load, where `eta_std` carries the sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub seed: String,
    pub load: f64,
    pub n_onus: u32,
    pub n_th_pkts: u32,
    pub n_m_pkts: u32,
    pub predictor: String,
    pub traffic: String,
    pub mda: bool,
    pub eta: f64,
    pub eta_std: Option<f64>,
    pub mean_delay_s: f64,
    pub drop_prob: f64,
    pub share_ds: f64,
    pub share_fs: f64,
    pub share_doze: f64,
    pub share_on: f64,
}

/// Runs every (load, seed) pair; rows come back load-major in grid order.
pub fn simulate(
    cfg: &NetworkConfig,
    grid: &Grid,
    s: &SimSettings,
) -> Result<Vec<SimRow>, CliError> {
    grid.check()?;
    let jobs: Vec<(f64, u64)> = grid
        .loads
        .iter()
        .flat_map(|&l| grid.seeds.iter().map(move |&seed| (l, seed)))
        .collect();
    jobs.par_iter()
        .map(|&(load, seed)| {
            let cfg = cfg.with_load(load);
            let r = run(&cfg, &s.scenario(grid.duration, seed))
                .map_err(|source| CliError::Simulation { load, seed, source })?;
            let sh = r.mode_time_shares;
            Ok(SimRow {
                seed: seed.to_string(),
                load,
                n_onus: cfg.n_onus,
                n_th_pkts: cfg.onu.n_th,
                n_m_pkts: cfg.onu.n_m,
                predictor: s.predictor.name().into(),
                traffic: s.traffic_name(),
                mda: s.mda,
                eta: r.eta,
                eta_std: None,
                mean_delay_s: r.mean_delay_s,
                drop_prob: r.drop_prob,
                share_ds: sh.ds,
                share_fs: sh.fs,
                share_doze: sh.doze,
                share_on: sh.on,
            })
        })
        .collect()
}

/// Per-load means of `rows`, in order of first appearance.
pub fn summarize(rows: &[SimRow]) -> Vec<SimRow> {
    let mut loads: Vec<f64> = Vec::new();
    for r in rows {
        if !loads.contains(&r.load) {
            loads.push(r.load);
        }
    }
    loads
        .iter()
        .map(|&load| {
            let group: Vec<&SimRow> = rows.iter().filter(|r| r.load == load).collect();
            let avg = |f: fn(&SimRow) -> f64| {
                group.iter().map(|r| f(r)).sum::<f64>() / group.len() as f64
            };
            let etas: Vec<f64> = group.iter().map(|r| r.eta).collect();
            let (eta, sd) = mean_std(&etas);
            SimRow {
                seed: "mean".into(),
                eta,
                eta_std: Some(sd),
                mean_delay_s: avg(|r| r.mean_delay_s),
                drop_prob: avg(|r| r.drop_prob),
                share_ds: avg(|r| r.share_ds),
                share_fs: avg(|r| r.share_fs),
                share_doze: avg(|r| r.share_doze),
                share_on: avg(|r| r.share_on),
                ..group[0].clone()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateRow {
    pub load: f64,
    pub eta_dtmc: f64,
    pub eta_sim_mean: f64,
    pub eta_sim_std: f64,
    pub gap: f64,
    pub pass: bool,
}

/// Analytical against simulated efficiency at every grid load.
pub fn validate(
    cfg: &NetworkConfig,
    grid: &Grid,
    s: &SimSettings,
    tolerance: f64,
) -> Result<Vec<ValidateRow>, CliError> {
    let analytic = analyze(cfg, &grid.loads)?;
    let sims = summarize(&simulate(cfg, grid, s)?);
    Ok(analytic
        .iter()
        .zip(&sims)
        .map(|(a, m)| {
            let gap = (m.eta - a.eta_analytical).abs();
            ValidateRow {
                load: a.load,
                eta_dtmc: a.eta_analytical,
                eta_sim_mean: m.eta,
                eta_sim_std: m.eta_std.unwrap_or(0.0),
                gap,
                pass: gap <= tolerance,
            }
        })
        .collect())
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = create_writer(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_analyze(path: &Path, rows: &[AnalyzeRow]) -> Result<(), CliError> {
    write_rows(path, rows)
}

/// Per-run rows followed by the per-load summary rows.
pub fn write_simulate(path: &Path, rows: &[SimRow]) -> Result<(), CliError> {
    let mut all = rows.to_vec();
    all.extend(summarize(rows));
    write_rows(path, &all)
}

pub fn write_validate(path: &Path, rows: &[ValidateRow]) -> Result<(), CliError> {
    write_rows(path, rows)
}
