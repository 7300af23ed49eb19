//! Per-ONU protocol state, the doze schedule inside a cycle, and the power
//! integrator.

use crate::params::PowerProfile;
use crate::policy::Mode;
use std::collections::VecDeque;

/// Physical power state; doze is a sub-state of active mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PowerState {
    DeepSleep,
    FastSleep,
    Doze,
    On,
}

impl PowerState {
    pub const ALL: [PowerState; 4] = [
        PowerState::DeepSleep,
        PowerState::FastSleep,
        PowerState::Doze,
        PowerState::On,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn watts(self, p: &PowerProfile) -> f64 {
        match self {
            PowerState::DeepSleep => p.p_ds,
            PowerState::FastSleep => p.p_fs,
            PowerState::Doze => p.p_dz,
            PowerState::On => p.p_on,
        }
    }

    pub fn sleeping(mode: Mode) -> Self {
        match mode {
            Mode::DeepSleep => PowerState::DeepSleep,
            Mode::FastSleep => PowerState::FastSleep,
            Mode::Active => PowerState::On,
        }
    }
}

/// Integrates piecewise-constant power. Every switch closes one segment,
/// so the segments tile the timeline by construction; `covered` keeps the
/// running total so the tiling can be checked.
#[derive(Debug, Clone)]
pub struct PowerMeter {
    state: PowerState,
    since: f64,
    warmup: f64,
    /// Energy and per-state time after the warmup.
    pub energy: f64,
    pub time: [f64; 4],
    pub covered: f64,
    pub segments: u64,
}

impl PowerMeter {
    pub fn new(state: PowerState, warmup: f64) -> Self {
        PowerMeter {
            state,
            since: 0.0,
            warmup,
            energy: 0.0,
            time: [0.0; 4],
            covered: 0.0,
            segments: 0,
        }
    }

    pub fn state(&self) -> PowerState {
        self.state
    }

    pub fn switch(&mut self, now: f64, next: PowerState, p: &PowerProfile) {
        debug_assert!(now >= self.since, "power switch back in time");
        let counted = (now - self.since.max(self.warmup)).max(0.0);
        self.energy += counted * self.state.watts(p);
        self.time[self.state.index()] += counted;
        self.covered += now - self.since;
        self.segments += 1;
        self.since = now;
        self.state = next;
    }

    pub fn close(&mut self, end: f64, p: &PowerProfile) {
        let s = self.state;
        self.switch(end, s, p);
    }
}

/// Doze intervals of one active cycle under the doze mechanism: awake from
/// `t_sw_dz` before the slot until the ONU's last bit, dozing otherwise.
pub fn mda_doze_control(
    cycle_start: f64,
    cycle_len: f64,
    slot_start: f64,
    busy_end: f64,
    t_sw_dz: f64,
) -> Vec<(f64, f64)> {
    let wake = (slot_start - t_sw_dz).max(cycle_start);
    let end = busy_end.min(cycle_start + cycle_len);
    [(cycle_start, wake), (end, cycle_start + cycle_len)]
        .into_iter()
        .filter(|(a, b)| b > a)
        .collect()
}

#[derive(Debug, Clone)]
pub struct OnuMachine {
    pub mode: Mode,
    /// Active but between its own slots with the transmitter off.
    pub dozing: bool,
    /// Leaving a sleep mode; not yet able to receive GATEs.
    pub waking: bool,
    /// Arrival time of each queued packet, oldest first.
    pub queue: VecDeque<f64>,
    /// Mode at the previous decision instant.
    pub s_prev: Mode,
    /// Packets the OLT granted for the next slot (last REPORT).
    pub pending_report: u32,
    pub drops: u64,
    /// GATE for the current cycle received while awake.
    pub gated: bool,
    /// Packets being sent in the current slot.
    pub sending: u32,
    pub departures: u32,
    /// Departures that trigger the next active decision.
    pub target: Option<u32>,
    pub meter: PowerMeter,
    pub arrivals: u64,
    pub delivered: u64,
    /// Counters restricted to the measurement window.
    pub window_delivered: u64,
    pub window_drops: u64,
    pub delay_sum: f64,
    pub next_arrival: usize,
}

impl OnuMachine {
    pub fn new(initial_power: PowerState, warmup: f64) -> Self {
        OnuMachine {
            mode: Mode::Active,
            dozing: initial_power == PowerState::Doze,
            waking: false,
            queue: VecDeque::new(),
            s_prev: Mode::Active,
            pending_report: 0,
            drops: 0,
            gated: false,
            sending: 0,
            departures: 0,
            target: Some(0),
            meter: PowerMeter::new(initial_power, warmup),
            arrivals: 0,
            delivered: 0,
            window_delivered: 0,
            window_drops: 0,
            delay_sum: 0.0,
            next_arrival: 0,
        }
    }

    pub fn can_receive_gate(&self) -> bool {
        self.mode == Mode::Active && !self.waking
    }

    /// Enqueue or drop an arrival at `now`.
    pub fn arrive(&mut self, now: f64, n_sz: u32, warmup: f64) {
        self.arrivals += 1;
        if self.queue.len() >= n_sz as usize {
            self.drops += 1;
            if now >= warmup {
                self.window_drops += 1;
            }
        } else {
            self.queue.push_back(now);
        }
    }

    /// Remove the `sending` head packets; the k-th finishes at
    /// `slot_start + (k + 1) * tx`.
    pub fn depart(&mut self, slot_start: f64, tx: f64, warmup: f64) {
        for k in 0..self.sending {
            let arrived = self
                .queue
                .pop_front()
                .expect("sending never exceeds the queue");
            let done = slot_start + f64::from(k + 1) * tx;
            self.delivered += 1;
            if done >= warmup {
                self.window_delivered += 1;
                self.delay_sum += done - arrived;
            }
        }
        self.departures += self.sending;
    }

    pub fn set_power(&mut self, now: f64, state: PowerState, p: &PowerProfile) {
        self.dozing = state == PowerState::Doze;
        if self.meter.state() != state {
            self.meter.switch(now, state, p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::NetworkConfig;

    #[test]
    fn full_cycle_slot_never_dozes() {
        assert!(mda_doze_control(0.0, 1.0, 0.0, 1.0, 1e-3).is_empty());
    }

    #[test]
    fn report_only_slot_awake_share() {
        let cfg = NetworkConfig::reference();
        let t = &cfg.timing;
        let t_cm = crate::cycle_time(&cfg);
        let slot = 0.3 * t_cm;
        let doze = mda_doze_control(0.0, t_cm, slot, slot + t.t_report + t.t_guard, t.t_sw_dz);
        let dozed: f64 = doze.iter().map(|(a, b)| b - a).sum();
        let awake = (t_cm - dozed) / t_cm;
        assert!((awake - (t.t_report + t.t_guard + t.t_sw_dz) / t_cm).abs() < 1e-12);
    }

    #[test]
    fn meter_clips_warmup_and_tiles() {
        let p = NetworkConfig::reference().power;
        let mut m = PowerMeter::new(PowerState::On, 1.0);
        m.switch(0.5, PowerState::Doze, &p);
        m.switch(1.5, PowerState::DeepSleep, &p);
        m.close(3.0, &p);
        assert!((m.covered - 3.0).abs() < 1e-15);
        assert!((m.time[PowerState::Doze.index()] - 0.5).abs() < 1e-15);
        assert!((m.time[PowerState::DeepSleep.index()] - 1.5).abs() < 1e-15);
        assert_eq!(m.time[PowerState::On.index()], 0.0);
        assert!((m.energy - (0.5 * p.p_dz + 1.5 * p.p_ds)).abs() < 1e-12);
    }

    #[test]
    fn full_buffer_drops() {
        let mut o = OnuMachine::new(PowerState::On, 0.0);
        for i in 0..4 {
            o.arrive(f64::from(i), 3, 0.0);
        }
        assert_eq!((o.queue.len(), o.drops, o.arrivals), (3, 1, 4));
    }
}
