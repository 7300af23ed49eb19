//! Run summaries.

use super::onu::{OnuMachine, PowerState};

/// Share of measured time in each power state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeShares {
    pub ds: f64,
    pub fs: f64,
    pub doze: f64,
    pub on: f64,
}

impl ModeShares {
    pub fn total(&self) -> f64 {
        self.ds + self.fs + self.doze + self.on
    }
}

/// Whole-run packet bookkeeping, summed over ONUs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counters {
    pub arrivals: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub residual: u64,
    pub events: u64,
}

impl Counters {
    pub fn conserved(&self) -> bool {
        self.arrivals == self.delivered + self.dropped + self.residual
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Mean energy per ONU over the measurement window.
    pub energy_j: f64,
    pub wall_time_s: f64,
    pub eta: f64,
    pub mean_delay_s: f64,
    pub drop_prob: f64,
    pub mode_time_shares: ModeShares,
    pub seed: u64,
    pub counters: Counters,
    /// Largest gap between an ONU's power segments and the run length.
    pub tiling_error: f64,
}

/// Mean arrival-to-completion delay over delivered packets and the drop
/// fraction, both restricted to the measurement window.
pub fn delay_and_drop_accounting(onus: &[OnuMachine]) -> (f64, f64) {
    let delivered: u64 = onus.iter().map(|o| o.window_delivered).sum();
    let drops: u64 = onus.iter().map(|o| o.window_drops).sum();
    let delay: f64 = onus.iter().map(|o| o.delay_sum).sum();
    let mean_delay = if delivered > 0 {
        delay / delivered as f64
    } else {
        0.0
    };
    let offered = delivered + drops;
    let drop_prob = if offered > 0 {
        drops as f64 / offered as f64
    } else {
        0.0
    };
    (mean_delay, drop_prob)
}

pub fn mode_shares(onus: &[OnuMachine]) -> ModeShares {
    let mut t = [0.0; 4];
    for o in onus {
        for s in PowerState::ALL {
            t[s.index()] += o.meter.time[s.index()];
        }
    }
    let total: f64 = t.iter().sum();
    if total == 0.0 {
        return ModeShares::default();
    }
    ModeShares {
        ds: t[PowerState::DeepSleep.index()] / total,
        fs: t[PowerState::FastSleep.index()] / total,
        doze: t[PowerState::Doze.index()] / total,
        on: t[PowerState::On.index()] / total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_traffic_no_delay_no_drops() {
        let onus = vec![OnuMachine::new(PowerState::On, 0.0)];
        assert_eq!(delay_and_drop_accounting(&onus), (0.0, 0.0));
    }

    #[test]
    fn drop_fraction_counts_window_only() {
        let mut o = OnuMachine::new(PowerState::On, 1.0);
        o.arrive(0.5, 0, 1.0);
        o.arrive(1.5, 0, 1.0);
        o.window_delivered = 3;
        o.delay_sum = 0.3;
        let (d, p) = delay_and_drop_accounting(&[o]);
        assert!((d - 0.1).abs() < 1e-15);
        assert!((p - 0.25).abs() < 1e-15);
    }
}
