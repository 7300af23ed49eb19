//! Discrete-event simulation of one OLT polling N ONUs with fixed grants,
//! every ONU running the sleep protocol independently.
//!
//! Reporting is gated: each slot carries at most the packets named in the
//! previous REPORT (capped by the grant), and the REPORT re-states the
//! remaining queue. An ONU coming out of sleep has nothing reported yet, so
//! its first slot after the next GATE is REPORT-only.

pub mod event;
pub mod metrics;
pub mod olt;
pub mod onu;
pub mod predictor;
pub mod traffic;

pub use event::{EventKind, EventQueue, SimEvent};
pub use metrics::{delay_and_drop_accounting, Counters, MetricsReport, ModeShares};
pub use olt::{olt_schedule_cycle, ranging_exchange, Grant, RangingTable};
pub use onu::{mda_doze_control, OnuMachine, PowerMeter, PowerState};
pub use predictor::{Outlook, PredictorKind};
pub use traffic::{poisson_traffic, selfsimilar_traffic, OnOff, TrafficKind};

use crate::params::{cycle_time, ConfigError, NetworkConfig};
use crate::policy::{decide_from_active, decide_from_sleep, Mode, PolicyError, Thresholds};
use thiserror::Error;

/// One-way fibre delay is irrelevant under fixed grants; ranging still
/// needs a round trip to inflate.
const DEFAULT_RTT: f64 = 100e-6;
/// Arrivals generated past the end so the oracle can look ahead.
const LOOKAHEAD: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("oracle prediction needs a pre-generated arrival trace")]
    OracleUnavailable,
    #[error("event queue ran dry at t = {0} s")]
    EventStarvation(f64),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    /// Doze between own slots via the inflated ranging offset.
    pub mda: bool,
    /// Run the sleep protocol; otherwise ONUs stay active throughout.
    pub sleep: bool,
    pub predictor: PredictorKind,
    pub traffic: TrafficKind,
    pub duration: f64,
    pub warmup: f64,
    pub seed: u64,
}

impl Scenario {
    /// The full protocol with exact prediction and Poisson arrivals.
    pub fn osmp(duration: f64, seed: u64) -> Self {
        Scenario {
            mda: true,
            sleep: true,
            predictor: PredictorKind::Oracle,
            traffic: TrafficKind::Poisson,
            duration,
            warmup: 1.0_f64.min(duration / 5.0),
            seed,
        }
    }

    /// Same sleep logic, but fully powered throughout active periods.
    pub fn baseline_no_mda(duration: f64, seed: u64) -> Self {
        Scenario {
            mda: false,
            ..Self::osmp(duration, seed)
        }
    }
}

/// Thresholds the ONUs decide with. Without doze the active power is
/// `P_on`, which is the doze-power-equals-on-power case of the formulas.
pub fn scenario_thresholds(cfg: &NetworkConfig, sc: &Scenario) -> Result<Thresholds, PolicyError> {
    if sc.mda {
        Thresholds::new(cfg)
    } else {
        let mut flat = *cfg;
        flat.power.p_dz = flat.power.p_on;
        Thresholds::new(&flat)
    }
}

struct World<'a> {
    cfg: &'a NetworkConfig,
    sc: &'a Scenario,
    th: Thresholds,
    grants: Vec<Grant>,
    t_cm: f64,
    tx: f64,
    traces: Vec<Vec<f64>>,
    onus: Vec<OnuMachine>,
    queue: EventQueue,
}

impl World<'_> {
    fn awake_idle(&self) -> PowerState {
        if self.sc.mda {
            PowerState::Doze
        } else {
            PowerState::On
        }
    }

    fn push(&mut self, time: f64, kind: EventKind, onu_id: usize, cycle: u64) {
        self.queue.push(SimEvent {
            time,
            kind,
            onu_id,
            cycle,
        });
    }

    fn gate_time(&self, i: usize, cycle: u64) -> f64 {
        cycle as f64 * self.t_cm + self.grants[i].gate_arrival
    }

    fn slot_start(&self, i: usize, cycle: u64) -> f64 {
        cycle as f64 * self.t_cm + self.grants[i].slot_start
    }

    fn fill_time(&self, i: usize, now: f64) -> Result<f64, SimError> {
        let o = &self.onus[i];
        let need = self.cfg.onu.n_th.saturating_sub(o.queue.len() as u32);
        let trace = &self.traces[i];
        let outlook = Outlook {
            lambda: self.cfg.onu.lambda,
            upcoming: Some(&trace[o.next_arrival..]),
        };
        self.sc.predictor.fill_time(&outlook, now, need)
    }

    fn handle(&mut self, ev: SimEvent) -> Result<(), SimError> {
        let i = ev.onu_id;
        let now = ev.time;
        let p = self.cfg.power;
        match ev.kind {
            EventKind::PacketArrival => {
                self.onus[i].arrive(now, self.cfg.onu.n_sz, self.sc.warmup);
                self.onus[i].next_arrival += 1;
                if let Some(&t) = self.traces[i].get(self.onus[i].next_arrival) {
                    if t <= self.sc.duration {
                        self.push(t, EventKind::PacketArrival, i, 0);
                    }
                }
            }
            EventKind::GateArrival => {
                if self.onus[i].can_receive_gate() {
                    self.onus[i].gated = true;
                    self.onus[i].set_power(now, PowerState::On, &p);
                    // Without the offset the GATE lands on the slot edge;
                    // never schedule behind the clock on round-off.
                    let start = self.slot_start(i, ev.cycle).max(now);
                    self.push(start, EventKind::SlotStart, i, ev.cycle);
                }
                let next = self.gate_time(i, ev.cycle + 1);
                self.push(next, EventKind::GateArrival, i, ev.cycle + 1);
            }
            EventKind::SlotStart => {
                let o = &mut self.onus[i];
                o.sending = self
                    .cfg
                    .onu
                    .n_m
                    .min(o.pending_report)
                    .min(o.queue.len() as u32);
                let end = now
                    + f64::from(o.sending) * self.tx
                    + self.cfg.timing.t_report
                    + self.cfg.timing.t_guard;
                self.push(end, EventKind::SlotEnd, i, ev.cycle);
            }
            EventKind::SlotEnd => {
                let start = self.slot_start(i, ev.cycle);
                let idle = self.awake_idle();
                let o = &mut self.onus[i];
                o.depart(start, self.tx, self.sc.warmup);
                o.sending = 0;
                o.gated = false;
                o.pending_report = o.queue.len() as u32;
                o.set_power(now, idle, &p);
                if self.sc.sleep && o.target.is_some_and(|t| o.departures >= t) {
                    o.target = None;
                    self.push(now, EventKind::DecisionPoint, i, ev.cycle);
                }
            }
            EventKind::DecisionPoint => {
                let t_bf = self.fill_time(i, now)?;
                let next = decide_from_active(t_bf, &self.th);
                let o = &mut self.onus[i];
                o.s_prev = Mode::Active;
                o.mode = next;
                o.departures = 0;
                if next == Mode::Active {
                    o.target = Some(o.queue.len() as u32);
                } else {
                    o.set_power(now, PowerState::sleeping(next), &p);
                    self.push(now + self.cfg.timing.t_m, EventKind::SleepTimerExpiry, i, 0);
                }
            }
            EventKind::SleepTimerExpiry => {
                let t_bf = self.fill_time(i, now)?;
                let current = self.onus[i].mode;
                let next = decide_from_sleep(current, t_bf, &self.th)?;
                let o = &mut self.onus[i];
                o.s_prev = current;
                if next == current {
                    self.push(now + self.cfg.timing.t_m, EventKind::SleepTimerExpiry, i, 0);
                } else {
                    o.mode = Mode::Active;
                    o.waking = true;
                    o.departures = 0;
                    o.target = Some(self.cfg.onu.n_th);
                    o.pending_report = 0;
                    o.set_power(now, PowerState::On, &p);
                    let t_sw = match current {
                        Mode::DeepSleep => self.cfg.timing.t_sw_ds,
                        _ => self.cfg.timing.t_sw_fs,
                    };
                    self.push(now + t_sw, EventKind::WakeComplete, i, 0);
                }
            }
            EventKind::WakeComplete => {
                let idle = self.awake_idle();
                let o = &mut self.onus[i];
                o.waking = false;
                o.set_power(now, idle, &p);
            }
        }
        Ok(())
    }
}

/// Simulates `cfg` under `sc`. Metrics cover `[warmup, duration]`.
pub fn run(cfg: &NetworkConfig, sc: &Scenario) -> Result<MetricsReport, SimError> {
    cfg.validate()?;
    if !(sc.duration > 0.0) || !(sc.warmup >= 0.0) || sc.warmup >= sc.duration {
        return Err(SimError::InvalidScenario(format!(
            "need 0 <= warmup < duration, got warmup {} s and duration {} s",
            sc.warmup, sc.duration
        )));
    }
    let th = scenario_thresholds(cfg, sc)?;
    let n = cfg.n_onus as usize;
    let ranging = RangingTable::uniform(n, DEFAULT_RTT, sc.mda, cfg.timing.t_sw_dz);
    let grants = olt_schedule_cycle(0.0, cfg, &ranging);
    let traces: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut rng = traffic::rng_for(sc.seed, i as u64);
            traffic::trace(
                &sc.traffic,
                cfg.onu.lambda,
                sc.duration + LOOKAHEAD,
                &mut rng,
            )
        })
        .collect();
    let idle = if sc.mda {
        PowerState::Doze
    } else {
        PowerState::On
    };
    let mut w = World {
        cfg,
        sc,
        th,
        grants,
        t_cm: cycle_time(cfg),
        tx: cfg.packet_tx_time(),
        onus: (0..n).map(|_| OnuMachine::new(idle, sc.warmup)).collect(),
        traces,
        queue: EventQueue::new(),
    };
    for i in 0..n {
        if let Some(&t) = w.traces[i].first() {
            if t <= sc.duration {
                w.push(t, EventKind::PacketArrival, i, 0);
            }
        }
        // Cycle 0 would put early GATEs before time zero.
        let t = w.gate_time(i, 1);
        w.push(t, EventKind::GateArrival, i, 1);
    }

    let mut events = 0u64;
    let mut clock = 0.0;
    loop {
        let Some(ev) = w.queue.pop() else {
            return Err(SimError::EventStarvation(clock));
        };
        clock = ev.time;
        if ev.time > sc.duration {
            break;
        }
        events += 1;
        w.handle(ev)?;
    }

    let p = cfg.power;
    for o in &mut w.onus {
        o.meter.close(sc.duration, &p);
    }
    let onus = &w.onus;
    let counters = Counters {
        arrivals: onus.iter().map(|o| o.arrivals).sum(),
        delivered: onus.iter().map(|o| o.delivered).sum(),
        dropped: onus.iter().map(|o| o.drops).sum(),
        residual: onus.iter().map(|o| o.queue.len() as u64).sum(),
        events,
    };
    let wall = sc.duration - sc.warmup;
    let energy = onus.iter().map(|o| o.meter.energy).sum::<f64>() / n as f64;
    let (mean_delay_s, drop_prob) = delay_and_drop_accounting(onus);
    let tiling_error = onus
        .iter()
        .map(|o| (o.meter.covered - sc.duration).abs())
        .fold(0.0, f64::max);
    Ok(MetricsReport {
        energy_j: energy,
        wall_time_s: wall,
        eta: 1.0 - energy / wall / p.p_on,
        mean_delay_s,
        drop_prob,
        mode_time_shares: metrics::mode_shares(onus),
        seed: sc.seed,
        counters,
        tiling_error,
    })
}
