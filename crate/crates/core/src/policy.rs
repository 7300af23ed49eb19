//! Closed-form protocol quantities and the OSMP-EO mode-decision rules.
//!
//! The decision functions here are the single source of truth for both the
//! Markov model and the simulator.

use crate::params::{cycle_time, NetworkConfig};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    DeepSleep,
    FastSleep,
    Active,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::DeepSleep, Mode::FastSleep, Mode::Active];

    pub fn is_sleep(self) -> bool {
        self != Mode::Active
    }

    pub fn short(self) -> &'static str {
        match self {
            Mode::DeepSleep => "ds",
            Mode::FastSleep => "fs",
            Mode::Active => "on",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("active-period share {0} exceeds 1 (upstream slot longer than the cycle)")]
    OverflowShare(f64),
    #[error("deep- and fast-sleep powers are equal; the deep-sleep threshold is undefined")]
    DegeneratePowers,
    #[error("average active power {p_on_avg} W does not exceed fast-sleep power {p_fs} W")]
    FsNeverWorthwhile { p_on_avg: f64, p_fs: f64 },
    #[error("{0} is not a sleep mode")]
    NotASleepMode(Mode),
    #[error("fill time {t_bf} s is shorter than the minimum wake lead {t_mw} s")]
    BufferFillsTooSoon { t_bf: f64, t_mw: f64 },
    #[error("thresholds unusable: {0}")]
    InvalidThresholds(String),
}

fn sleep_params(mode: Mode, cfg: &NetworkConfig) -> Result<(f64, f64), PolicyError> {
    match mode {
        Mode::DeepSleep => Ok((cfg.timing.t_sw_ds, cfg.power.p_ds)),
        Mode::FastSleep => Ok((cfg.timing.t_sw_fs, cfg.power.p_fs)),
        Mode::Active => Err(PolicyError::NotASleepMode(mode)),
    }
}

/// Fraction of each cycle the transmitter is powered under the doze
/// mechanism: the data share of the feeder plus REPORT, guard and doze
/// wake-up.
pub fn active_share(cfg: &NetworkConfig) -> f64 {
    let t = &cfg.timing;
    cfg.onu.lambda * cfg.onu.packet_bits / cfg.link_rate
        + (t.t_report + t.t_guard + t.t_sw_dz) / cycle_time(cfg)
}

/// Mean power of an active ONU that dozes between its own slots.
pub fn avg_active_power(cfg: &NetworkConfig) -> Result<f64, PolicyError> {
    let share = active_share(cfg);
    if share > 1.0 {
        return Err(PolicyError::OverflowShare(share));
    }
    let p = &cfg.power;
    Ok(p.p_dz + share * (p.p_on - p.p_dz))
}

/// Minimum wake lead before buffer fill-up: wake-up, two worst-case polling
/// cycles and one decision period.
pub fn t_mw(mode: Mode, cfg: &NetworkConfig) -> Result<f64, PolicyError> {
    let (t_sw, _) = sleep_params(mode, cfg)?;
    Ok(t_sw + 2.0 * cycle_time(cfg) + cfg.timing.t_m)
}

/// Fill time above which deep sleep costs less energy than fast sleep.
pub fn t_lb_ds(cfg: &NetworkConfig) -> Result<f64, PolicyError> {
    let p = &cfg.power;
    let t = &cfg.timing;
    if p.p_fs == p.p_ds {
        return Err(PolicyError::DegeneratePowers);
    }
    let num = t.t_sw_fs * p.p_fs - t.t_sw_ds * p.p_ds + (t.t_sw_ds - t.t_sw_fs) * p.p_on;
    Ok(num / (p.p_fs - p.p_ds) + 2.0 * cycle_time(cfg) + t.t_m)
}

/// Fill time above which fast sleep costs less energy than staying active.
pub fn t_lb_fs(cfg: &NetworkConfig) -> Result<f64, PolicyError> {
    let p = &cfg.power;
    let t = &cfg.timing;
    let p_on_avg = avg_active_power(cfg)?;
    if p_on_avg <= p.p_fs {
        return Err(PolicyError::FsNeverWorthwhile {
            p_on_avg,
            p_fs: p.p_fs,
        });
    }
    let num = t.t_sw_fs * (p.p_on - p.p_fs)
        + (2.0 * cycle_time(cfg) + t.t_m) * (p.p_dz - p.p_fs)
        + (t.t_report + t.t_guard + t.t_sw_dz) * (p.p_on - p.p_dz);
    Ok(num / (p_on_avg - p.p_fs))
}

/// Energy spent over a predicted fill time `t_bf` if the ONU sleeps in
/// `mode`, wakes `t_mw` early and sends one REPORT before data resumes.
pub fn sleep_energy(mode: Mode, t_bf: f64, cfg: &NetworkConfig) -> Result<f64, PolicyError> {
    let (t_sw, p_sm) = sleep_params(mode, cfg)?;
    let t_mw = t_mw(mode, cfg)?;
    if t_bf < t_mw {
        return Err(PolicyError::BufferFillsTooSoon { t_bf, t_mw });
    }
    let p = &cfg.power;
    let t = &cfg.timing;
    Ok(t_bf * p_sm
        + t_sw * (p.p_on - p_sm)
        + (2.0 * cycle_time(cfg) + t.t_m) * (p.p_dz - p_sm)
        + (t.t_report + t.t_guard + t.t_sw_dz) * (p.p_on - p.p_dz))
}

/// All decision thresholds for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub t_mw_ds: f64,
    pub t_mw_fs: f64,
    pub t_lb_ds: f64,
    /// Energy break-even between fast sleep and active mode.
    pub t_lb_fs: f64,
    /// Smallest fill time at which an active ONU enters fast sleep:
    /// `max(t_lb_fs, t_mw_fs + t_m)`. Below `t_mw_fs + t_m` the sleep could
    /// not last a single decision period before the wake-up must start.
    pub fs_entry: f64,
    pub p_on_avg: f64,
    pub t_cm: f64,
    pub t_m: f64,
}

impl Thresholds {
    pub fn new(cfg: &NetworkConfig) -> Result<Self, PolicyError> {
        let t_m = cfg.timing.t_m;
        let th = Thresholds {
            t_mw_ds: t_mw(Mode::DeepSleep, cfg)?,
            t_mw_fs: t_mw(Mode::FastSleep, cfg)?,
            t_lb_ds: t_lb_ds(cfg)?,
            t_lb_fs: t_lb_fs(cfg)?,
            fs_entry: 0.0,
            p_on_avg: avg_active_power(cfg)?,
            t_cm: cycle_time(cfg),
            t_m,
        };
        let th = Thresholds {
            fs_entry: th.t_lb_fs.max(th.t_mw_fs + t_m),
            ..th
        };
        if th.t_lb_ds <= th.t_mw_ds + t_m {
            return Err(PolicyError::InvalidThresholds(format!(
                "t_lb_ds = {} s must exceed t_mw_ds + t_m = {} s",
                th.t_lb_ds,
                th.t_mw_ds + t_m
            )));
        }
        if th.t_lb_ds <= th.fs_entry {
            return Err(PolicyError::InvalidThresholds(format!(
                "t_lb_ds = {} s must exceed the fast-sleep entry bound {} s",
                th.t_lb_ds, th.fs_entry
            )));
        }
        for mode in [Mode::DeepSleep, Mode::FastSleep] {
            let t_mo = th.t_mo(mode, cfg);
            let t_mw = th.t_mw(mode);
            if t_mo < t_mw {
                return Err(PolicyError::InvalidThresholds(format!(
                    "post-wake observation period {t_mo} s for {mode} is shorter than its wake lead {t_mw} s"
                )));
            }
        }
        Ok(th)
    }

    pub fn t_mw(&self, mode: Mode) -> f64 {
        match mode {
            Mode::DeepSleep => self.t_mw_ds,
            Mode::FastSleep => self.t_mw_fs,
            Mode::Active => 0.0,
        }
    }

    /// Lower fill-time bound for entering `mode` from active.
    pub fn t_entry(&self, mode: Mode) -> f64 {
        match mode {
            Mode::DeepSleep => self.t_lb_ds,
            Mode::FastSleep => self.fs_entry,
            Mode::Active => 0.0,
        }
    }

    /// Time from a wake decision until the `n_th` packets are sent: wake-up,
    /// half a cycle on average to the next GATE, then the data cycles.
    pub fn t_mo(&self, mode: Mode, cfg: &NetworkConfig) -> f64 {
        let t_sw = match mode {
            Mode::DeepSleep => cfg.timing.t_sw_ds,
            Mode::FastSleep => cfg.timing.t_sw_fs,
            Mode::Active => 0.0,
        };
        let cycles = cfg.onu.n_th.div_ceil(cfg.onu.n_m);
        t_sw + (f64::from(cycles) + 0.5) * self.t_cm
    }
}

/// Stay asleep only while the predicted fill time strictly exceeds the
/// wake lead; a tie wakes the ONU.
pub fn decide_from_sleep(
    current: Mode,
    t_bf_next: f64,
    th: &Thresholds,
) -> Result<Mode, PolicyError> {
    if !current.is_sleep() {
        return Err(PolicyError::NotASleepMode(current));
    }
    Ok(if t_bf_next > th.t_mw(current) {
        current
    } else {
        Mode::Active
    })
}

/// Deep sleep above `t_lb_ds`, fast sleep on `[fs_entry, t_lb_ds]`, active
/// below. A tie at `t_lb_ds` resolves to fast sleep.
pub fn decide_from_active(t_bf_next: f64, th: &Thresholds) -> Mode {
    if t_bf_next > th.t_lb_ds {
        Mode::DeepSleep
    } else if t_bf_next >= th.fs_entry {
        Mode::FastSleep
    } else {
        Mode::Active
    }
}
