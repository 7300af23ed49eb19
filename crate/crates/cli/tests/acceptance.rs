//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any of them fails.

use osmp_cli::sweep::{design_study, Study};
use osmp_cli::{analyze, simulate, validate, Grid, SimSettings};
use osmp_core::dtmc::{build_matrix, stationary_distribution, Model, TransitionMatrix};
use osmp_core::oracle::{random_walk, sample_transition};
use osmp_core::sim::traffic::OnOff;
use osmp_core::sim::{self, PredictorKind, Scenario, TrafficKind};
use osmp_core::{packets_from_bits, NetworkConfig};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SMALL_X: [f64; 3] = [0.1, 0.5, 2.0];

fn grid(lo: usize, hi: usize) -> Vec<f64> {
    (lo..=hi).map(|i| i as f64 / 10.0).collect()
}

fn small(lambda_tm: f64) -> NetworkConfig {
    let mut cfg = NetworkConfig::reference();
    cfg.n_onus = 4;
    cfg.onu.n_th = 8;
    cfg.onu.n_sz = 12;
    cfg.onu.n_m = 2;
    cfg.timing.t_m = 0.2e-3;
    cfg.onu.lambda = lambda_tm / cfg.timing.t_m;
    cfg
}

fn built(cfg: &NetworkConfig) -> Result<(Model, TransitionMatrix), String> {
    let model = Model::new(cfg).map_err(|e| e.to_string())?;
    let m = build_matrix(&model).map_err(|e| e.to_string())?;
    Ok((model, m))
}

fn fail_if(bad: Vec<String>, ok: String) -> Outcome {
    if bad.is_empty() {
        Ok(ok)
    } else {
        Err(bad.join("; "))
    }
}

fn transition_rows() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    let mut skipped = 0;
    let mut bad = Vec::new();
    for x in SMALL_X {
        let (model, m) = built(&small(x))?;
        for (i, s) in m.states().iter().enumerate() {
            if m.flagged[i] {
                skipped += 1;
                continue;
            }
            let emp = sample_transition(&model, s, 7_000 + i as u64, 1_000_000)
                .map_err(|e| e.to_string())?;
            let inside: u64 = m
                .states()
                .iter()
                .map(|t| emp.counts.get(t).copied().unwrap_or(0))
                .sum();
            let outside = (emp.trials - inside) as f64 / emp.trials as f64;
            let l1 = outside
                + m.states()
                    .iter()
                    .enumerate()
                    .map(|(j, t)| (m.get(i, j) - emp.freq(t)).abs())
                    .sum::<f64>();
            worst = worst.max(l1);
            rows += 1;
            if l1 >= 5e-3 {
                bad.push(format!("x={x} {s}: L1 {l1:.2e}"));
            }
        }
    }
    let took = start.elapsed();
    if took > Duration::from_secs(120) {
        bad.push(format!("took {took:.1?}"));
    }
    fail_if(
        bad,
        format!("{rows} rows, max L1 {worst:.2e}, {skipped} unreachable placeholder rows skipped, {took:.1?}"),
    )
}

fn stationarity() -> Outcome {
    let mut cfgs: Vec<(String, NetworkConfig)> = grid(1, 9)
        .into_iter()
        .map(|l| (format!("load {l}"), NetworkConfig::reference().with_load(l)))
        .collect();
    cfgs.extend(SMALL_X.iter().map(|&x| (format!("small x={x}"), small(x))));
    let mut bad = Vec::new();
    let (mut row_err, mut resid, mut walk): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (k, (name, cfg)) in cfgs.iter().enumerate() {
        let (model, m) = built(cfg)?;
        for i in 0..m.n() {
            row_err = row_err.max((m.row(i).iter().sum::<f64>() - 1.0).abs());
        }
        let st = stationary_distribution(&m).map_err(|e| e.to_string())?;
        resid = resid.max(st.residual);
        let freq = random_walk(&model, 100 + k as u64, 10_000_000).map_err(|e| e.to_string())?;
        let total: f64 = st.pi.iter().zip(&m.dwell).map(|(p, t)| p * t).sum();
        let l1: f64 = (0..m.n())
            .map(|i| (st.pi[i] * m.dwell[i] / total - freq[i]).abs())
            .sum();
        walk = walk.max(l1);
        if l1 >= 1e-2 {
            bad.push(format!("{name}: walk L1 {l1:.2e}"));
        }
        if st.residual >= 1e-10 {
            bad.push(format!("{name}: residual {:.2e}", st.residual));
        }
    }
    if row_err >= 1e-9 {
        bad.push(format!("row sum error {row_err:.2e}"));
    }
    fail_if(
        bad,
        format!(
            "{} matrices, max row error {row_err:.1e}, max residual {resid:.1e}, max walk L1 {walk:.2e}",
            cfgs.len()
        ),
    )
}

fn validation() -> Outcome {
    let start = Instant::now();
    let cfg = NetworkConfig::reference();
    let g = Grid {
        loads: grid(1, 7),
        ..Grid::default()
    };
    let rows = validate(&cfg, &g, &SimSettings::default(), 0.03).map_err(|e| e.to_string())?;
    let worst = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    let mut bad: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("load {}: gap {:.4}", r.load, r.gap))
        .collect();
    let mean = SimSettings {
        predictor: PredictorKind::Mean,
        ..SimSettings::default()
    };
    let g = Grid {
        loads: vec![0.3, 0.9],
        ..Grid::default()
    };
    let m = validate(&cfg, &g, &mean, 1.0).map_err(|e| e.to_string())?;
    if m[1].gap <= m[0].gap {
        bad.push(format!(
            "mean predictor gap {:.4} at 0.9 vs {:.4} at 0.3",
            m[1].gap, m[0].gap
        ));
    }
    let took = start.elapsed();
    if took > Duration::from_secs(600) {
        bad.push(format!("took {took:.1?}"));
    }
    fail_if(
        bad,
        format!(
            "max oracle gap {worst:.4}; mean predictor gap {:.4} at 0.3, {:.4} at 0.9; {took:.1?}",
            m[0].gap, m[1].gap
        ),
    )
}

fn mda_gain() -> Outcome {
    let mut cfg = NetworkConfig::reference();
    let n = packets_from_bits(1e6, cfg.onu.packet_bits);
    cfg.onu.n_th = n;
    cfg.onu.n_sz = n;
    let g = Grid {
        loads: vec![0.9],
        ..Grid::default()
    };
    let mean_eta = |mda: bool| -> Result<f64, String> {
        let s = SimSettings {
            mda,
            ..SimSettings::default()
        };
        let rows = simulate(&cfg, &g, &s).map_err(|e| e.to_string())?;
        Ok(rows.iter().map(|r| r.eta).sum::<f64>() / rows.len() as f64)
    };
    let (osmp, base) = (mean_eta(true)?, mean_eta(false)?);
    let gain = osmp - base;
    let msg = format!("N_th = N_sz = {n} pkts: eta {osmp:.4} vs {base:.4}, gain {gain:.4}");
    if gain >= 0.20 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn etas(cfg: &NetworkConfig, loads: &[f64]) -> Result<Vec<f64>, String> {
    Ok(analyze(cfg, loads)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|r| r.eta_analytical)
        .collect())
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn shapes() -> Outcome {
    let loads = grid(1, 9);
    let cfg = NetworkConfig::reference();
    let base = etas(&cfg, &loads)?;
    let mut bad = Vec::new();
    let mut notes = Vec::new();

    if !base.windows(2).all(|w| w[1] < w[0]) {
        bad.push(format!("eta not strictly decreasing: {}", fmt(&base)));
    }

    let mut big = cfg;
    big.n_onus = 32;
    let big = etas(&big, &loads)?;
    let drop: Vec<f64> = base.iter().zip(&big).map(|(a, b)| a - b).collect();
    notes.push(format!("N 16->32 drop {}", fmt(&drop)));
    if drop.iter().any(|&d| d < 0.05) {
        bad.push(format!(
            "N 16->32 drop below 0.05 somewhere: {}",
            fmt(&drop)
        ));
    }

    let mut half = cfg;
    half.onu.n_th /= 2;
    let half = etas(&half, &loads)?;
    let diff: Vec<f64> = base.iter().zip(&half).map(|(a, b)| a - b).collect();
    notes.push(format!("halved N_th drop {}", fmt(&diff)));
    if diff.iter().any(|&d| d <= 0.0) {
        bad.push(format!(
            "halving N_th does not reduce eta everywhere: {}",
            fmt(&diff)
        ));
    }

    let powers = design_study(&cfg, &loads, Study::SleepPowers).map_err(|e| e.to_string())?;
    let dz: Vec<f64> = powers
        .iter()
        .filter(|r| r.parameter == "power.dz")
        .map(|r| r.delta)
        .collect();
    notes.push(format!("P_dz -25% gain {}", fmt(&dz)));
    if dz.len() != loads.len() || dz.iter().any(|&d| d <= 0.0) {
        bad.push(format!(
            "P_dz cut does not improve eta everywhere: {}",
            fmt(&dz)
        ));
    }

    let wake = design_study(&cfg, &loads, Study::WakeTimes).map_err(|e| e.to_string())?;
    let worst = wake.iter().map(|r| r.delta.abs()).fold(0.0, f64::max);
    notes.push(format!("max wake-time effect {worst:.4}"));
    if worst >= 0.01 {
        bad.push(format!("wake-time cut moves eta by {worst:.4}"));
    }

    if bad.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(bad.join("; "))
    }
}

fn conservation() -> Outcome {
    let mut bad = Vec::new();
    let mut runs = 0;

    for x in SMALL_X {
        let (model, m) = built(&small(x))?;
        check_tiling(&model, &m, &format!("small x={x}"), &mut bad)?;
    }
    let max_eta = {
        let p = NetworkConfig::reference().power;
        1.0 - p.p_ds / p.p_on
    };
    for l in grid(0, 12) {
        let cfg = NetworkConfig::reference().with_load(l);
        let (model, m) = built(&cfg)?;
        check_tiling(&model, &m, &format!("load {l}"), &mut bad)?;
        let eta = etas(&NetworkConfig::reference(), &[l])?[0];
        if !(0.0..=max_eta).contains(&eta) {
            bad.push(format!("analytical eta {eta} at load {l}"));
        }
    }

    let ss = TrafficKind::SelfSimilar(OnOff::new(0.8));
    let scenarios = [
        ("osmp", Scenario::osmp(10.0, 0)),
        (
            "osmp-mean",
            Scenario {
                predictor: PredictorKind::Mean,
                ..Scenario::osmp(10.0, 0)
            },
        ),
        ("baseline", Scenario::baseline_no_mda(10.0, 0)),
        (
            "selfsimilar",
            Scenario {
                traffic: ss,
                ..Scenario::osmp(10.0, 0)
            },
        ),
        (
            "always-on",
            Scenario {
                sleep: false,
                ..Scenario::osmp(10.0, 0)
            },
        ),
    ];
    let mut drops_checked = 0;
    for l in grid(1, 9) {
        let cfg = NetworkConfig::reference().with_load(l);
        for (name, sc) in &scenarios {
            for seed in 1..=3 {
                let r = sim::run(&cfg, &Scenario { seed, ..*sc }).map_err(|e| e.to_string())?;
                runs += 1;
                let tag = format!("{name} load {l} seed {seed}");
                if !r.counters.conserved() {
                    bad.push(format!("{tag}: {:?}", r.counters));
                }
                if !(0.0..=max_eta).contains(&r.eta) {
                    bad.push(format!("{tag}: eta {}", r.eta));
                }
                if r.tiling_error > 1e-9 {
                    bad.push(format!("{tag}: power tiling off by {:.1e}", r.tiling_error));
                }
                if *name == "osmp" && l <= 0.5 + 1e-9 {
                    drops_checked += 1;
                    if r.drop_prob != 0.0 {
                        bad.push(format!("{tag}: drop_prob {}", r.drop_prob));
                    }
                }
            }
        }
    }
    fail_if(
        bad,
        format!("{runs} simulations conserved, {drops_checked} drop-free oracle runs at loads <= 0.5, DTMC tiling exact"),
    )
}

fn check_tiling(
    model: &Model,
    m: &TransitionMatrix,
    name: &str,
    bad: &mut Vec<String>,
) -> Result<(), String> {
    for (i, s) in m.states().iter().enumerate() {
        let segs = model.segments(s).map_err(|e| e.to_string())?;
        let total: f64 = segs.iter().map(|g| g.duration).sum();
        let energy: f64 = segs.iter().map(|g| g.duration * g.power).sum();
        if (total - m.dwell[i]).abs() > 1e-15 * m.dwell[i].max(1.0)
            || (energy - m.energy[i]).abs() > 1e-12 * m.energy[i].max(1.0)
        {
            bad.push(format!(
                "{name} {s}: segments {total} vs dwell {}",
                m.dwell[i]
            ));
        }
    }
    Ok(())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [&[&str]; 4] = [
        &["analyze"],
        &[
            "simulate",
            "--loads",
            "0.2,0.7",
            "--seeds",
            "1,2",
            "--duration",
            "5",
        ],
        &[
            "simulate",
            "--loads",
            "0.4",
            "--seeds",
            "3",
            "--duration",
            "5",
            "--traffic",
            "selfsimilar",
            "--predictor",
            "mean",
        ],
        &[
            "validate",
            "--loads",
            "0.3",
            "--seeds",
            "1,2",
            "--duration",
            "5",
        ],
    ];
    let mut bad = Vec::new();
    for (k, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{k}-{rep}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_osmp"))
                .args(*args)
                .arg("--out")
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("{args:?} exited with {status}"));
            }
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        if outputs[0] != outputs[1] {
            bad.push(format!("{args:?} differs between runs"));
        }
    }
    fail_if(
        bad,
        format!("{} commands reproduced byte for byte", runs.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        (
            "transition rows match the Monte-Carlo oracle",
            transition_rows,
        ),
        (
            "stochastic rows, stationary residual, walk agreement",
            stationarity,
        ),
        ("analysis tracks simulation", validation),
        ("doze gain over the no-doze baseline", mda_gain),
        ("qualitative trends", shapes),
        ("conservation and bounds", conservation),
        ("deterministic output", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} [{}] {name} ({:.1?}): {detail}",
            k + 1,
            start.elapsed()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
