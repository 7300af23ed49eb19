use super::{DtmcError, DtmcState, Model};
use crate::policy::Mode;

/// Timing of one observation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionWindows {
    /// Prediction horizon that conditioned the current decision; zero when
    /// the current mode was entered without a prediction.
    pub t_pc: f64,
    /// Longest prediction horizon used at the next observation instant.
    pub t_pn: f64,
    /// Time to the next observation instant.
    pub t_no: f64,
}

impl Model {
    /// Decision periods a freshly entered sleep is certain to survive.
    pub fn n_po(&self, mode: Mode) -> u32 {
        let th = &self.th;
        ((th.t_entry(mode) - th.t_mw(mode)) / th.t_m + 1e-9)
            .floor()
            .max(0.0) as u32
    }

    /// Cycles an active ONU needs to drain `b` packets; an empty queue
    /// still costs one cycle (a REPORT-only slot).
    pub fn drain_time(&self, b: u32) -> f64 {
        f64::from(b.div_ceil(self.cfg.onu.n_m).max(1)) * self.th.t_cm
    }

    pub fn windows_for(&self, s: &DtmcState) -> Result<PredictionWindows, DtmcError> {
        if !s.is_valid(self.cfg.onu.n_th, self.cfg.onu.n_sz) {
            return Err(DtmcError::InvalidState(*s));
        }
        let th = &self.th;
        Ok(match (s.s_p, s.s_c) {
            (p, c) if p.is_sleep() && c.is_sleep() => PredictionWindows {
                t_pc: th.t_mw(c),
                t_pn: th.t_mw(c),
                t_no: th.t_m,
            },
            (Mode::Active, c) if c.is_sleep() => PredictionWindows {
                t_pc: th.t_entry(c),
                t_pn: th.t_mw(c),
                t_no: f64::from(self.n_po(c) + 1) * th.t_m,
            },
            (p, _) if p.is_sleep() => PredictionWindows {
                t_pc: th.t_mw(p),
                t_pn: th.t_lb_ds,
                t_no: th.t_mo(p, &self.cfg),
            },
            _ => PredictionWindows {
                t_pc: if s.b < self.cfg.onu.n_th {
                    th.fs_entry
                } else {
                    0.0
                },
                t_pn: th.t_lb_ds,
                t_no: self.drain_time(s.b),
            },
        })
    }
}
