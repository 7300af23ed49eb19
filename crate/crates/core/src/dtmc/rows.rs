//! One row of the transition matrix per source state.
//!
//! Unbounded sums are always closed with a tail probability from the
//! Poisson tables, so every row carries its full mass without truncation.

use super::{DtmcError, DtmcState, Model};
use crate::poisson::Poisson;
use crate::policy::Mode;

/// Conditioning probabilities below this are treated as impossible.
pub const STARVED: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub targets: Vec<(DtmcState, f64)>,
    /// The source's conditioning event has (numerically) zero probability;
    /// the row is a deterministic placeholder.
    pub flagged: bool,
}

impl Row {
    pub fn sum(&self) -> f64 {
        self.targets.iter().map(|&(_, p)| p).sum()
    }

    pub fn prob(&self, s: &DtmcState) -> f64 {
        self.targets
            .iter()
            .filter(|(t, _)| t == s)
            .map(|&(_, p)| p)
            .sum()
    }

    fn placeholder(to: DtmcState) -> Self {
        Row {
            targets: vec![(to, 1.0)],
            flagged: true,
        }
    }
}

/// Probabilities that the decision at an active observation instant with
/// queue `j` picks deep sleep, fast sleep or active.
#[derive(Debug, Clone)]
pub struct ModeFactors {
    table: Vec<[f64; 3]>,
}

impl ModeFactors {
    pub(super) fn new(model_lambda: f64, t_fs: f64, t_ds: f64, n_th: u32, n_sz: u32) -> Self {
        let p_ds = Poisson::new(model_lambda * t_ds);
        let p_fs = Poisson::new(model_lambda * t_fs);
        let p_3 = Poisson::new(model_lambda * (t_ds - t_fs));
        let table = (0..=n_sz)
            .map(|j| {
                let c = i64::from(n_th) - i64::from(j) - 1;
                if c < 0 {
                    return [0.0, 0.0, 1.0];
                }
                let f_ds = p_ds.cdf(c);
                let f_fs: f64 = (0..=c).map(|l| p_fs.pmf(l) * p_3.sf(c - l + 1)).sum();
                let f_on = p_fs.sf(c + 1);
                [f_ds, f_fs, f_on]
            })
            .collect();
        ModeFactors { table }
    }

    pub fn get(&self, j: u32) -> [f64; 3] {
        self.table[j as usize]
    }
}

impl Model {
    fn poisson(&self, t: f64) -> Poisson {
        Poisson::new(self.cfg.onu.lambda * t.max(0.0))
    }

    /// Spreads `base` over the three decisions taken at queue `j`.
    fn push_decided(&self, out: &mut Vec<(DtmcState, f64)>, j: u32, base: f64) {
        let [f_ds, f_fs, f_on] = self.factors.get(j);
        if j < self.cfg.onu.n_th {
            out.push((
                DtmcState::new(Mode::Active, Mode::DeepSleep, j),
                base * f_ds,
            ));
            out.push((
                DtmcState::new(Mode::Active, Mode::FastSleep, j),
                base * f_fs,
            ));
        }
        out.push((DtmcState::new(Mode::Active, Mode::Active, j), base * f_on));
    }

    /// Rows whose current decision was conditioned on reaching the
    /// threshold within `t_pc` and whose next queue is
    /// `k + A(t_no) - departed`, with the prediction window wholly inside
    /// the step so the next decision is independent of the past.
    fn independent_row(&self, k: u32, departed: u32, t_pc: f64, t_no: f64) -> Option<Row> {
        let n_th = i64::from(self.cfg.onu.n_th);
        let n_sz = self.cfg.onu.n_sz;
        let need = n_th - i64::from(k);
        let p_pc = self.poisson(t_pc);
        let p_rest = self.poisson(t_no - t_pc);
        let cond = p_pc.sf(need);
        if cond < STARVED {
            return None;
        }
        // Arrivals over the step that leave queue j.
        let offset = i64::from(departed) - i64::from(k);
        let joint = |n: i64| -> f64 { (need..=n).map(|l| p_pc.pmf(l) * p_rest.pmf(n - l)).sum() };
        let mut targets = Vec::with_capacity(3 * n_sz as usize + 1);
        for j in 0..n_sz {
            let n = i64::from(j) + offset;
            self.push_decided(&mut targets, j, joint(n) / cond);
        }
        let n = i64::from(n_sz) + offset;
        let tail: f64 = (need..=n)
            .map(|l| p_pc.pmf(l) * p_rest.sf(n - l))
            .sum::<f64>()
            + p_pc.sf(n.max(need - 1) + 1);
        targets.push((
            DtmcState::new(Mode::Active, Mode::Active, n_sz),
            tail / cond,
        ));
        Some(Row {
            targets,
            flagged: false,
        })
    }

    /// Source `{s_p, s_m, k}` with `s_m` a sleep mode.
    pub fn trans_from_sleep(&self, s_p: Mode, s_m: Mode, k: u32) -> Result<Row, DtmcError> {
        let src = DtmcState::new(s_p, s_m, k);
        if !s_m.is_sleep() {
            return Err(DtmcError::InvalidState(src));
        }
        let w = self.windows_for(&src)?;
        let n_th = self.cfg.onu.n_th;
        let c = i64::from(n_th) - i64::from(k) - 1;
        let p_e2 = self.poisson(w.t_pc).cdf(c);
        if p_e2 < STARVED {
            return Ok(Row::placeholder(DtmcState::new(s_m, Mode::Active, k)));
        }
        let p_no = self.poisson(w.t_no);
        let p_1 = self.poisson(w.t_pc - w.t_no);
        let p_2 = self.poisson(w.t_no + w.t_pn - w.t_pc);
        let mut targets = Vec::with_capacity(2 * (n_th - k) as usize);
        for j in k..n_th {
            let a = p_no.pmf(i64::from(j - k)) / p_e2;
            let cj = i64::from(n_th) - i64::from(j) - 1;
            let (mut stay, mut wake) = (0.0, 0.0);
            for l in 0..=cj {
                let pl = p_1.pmf(l);
                stay += pl * p_2.cdf(cj - l);
                wake += pl * p_2.sf(cj - l + 1);
            }
            targets.push((DtmcState::new(s_m, s_m, j), a * stay));
            targets.push((DtmcState::new(s_m, Mode::Active, j), a * wake));
        }
        Ok(Row {
            targets,
            flagged: false,
        })
    }

    /// Source `{s_m, on, k}`: the ONU has just decided to wake.
    pub fn trans_wake(&self, s_m: Mode, k: u32) -> Result<Row, DtmcError> {
        let src = DtmcState::new(s_m, Mode::Active, k);
        if !s_m.is_sleep() {
            return Err(DtmcError::InvalidState(src));
        }
        let w = self.windows_for(&src)?;
        Ok(self
            .independent_row(k, self.cfg.onu.n_th, w.t_pc, w.t_no)
            .unwrap_or_else(|| Row::placeholder(DtmcState::new(Mode::Active, Mode::DeepSleep, 0))))
    }

    /// Source `{on, on, k}`.
    pub fn trans_active(&self, k: u32) -> Result<Row, DtmcError> {
        let src = DtmcState::new(Mode::Active, Mode::Active, k);
        let w = self.windows_for(&src)?;
        let n_th = self.cfg.onu.n_th;
        let n_sz = self.cfg.onu.n_sz;
        let p_no = self.poisson(w.t_no);

        if k >= n_th {
            let mut targets = Vec::with_capacity(3 * n_sz as usize + 1);
            for j in 0..n_sz {
                self.push_decided(&mut targets, j, p_no.pmf(i64::from(j)));
            }
            targets.push((
                DtmcState::new(Mode::Active, Mode::Active, n_sz),
                p_no.sf(i64::from(n_sz)),
            ));
            return Ok(Row {
                targets,
                flagged: false,
            });
        }

        let placeholder = || Row::placeholder(DtmcState::new(Mode::Active, Mode::DeepSleep, 0));
        if w.t_no >= w.t_pc {
            return Ok(self
                .independent_row(k, k, w.t_pc, w.t_no)
                .unwrap_or_else(placeholder));
        }

        // The current fast-sleep window reaches past the next instant.
        let t_fs = self.th.fs_entry;
        let t_ds = self.th.t_lb_ds;
        let cond = self.poisson(t_fs).sf(i64::from(n_th - k));
        if cond < STARVED {
            return Ok(placeholder());
        }
        let p_1 = self.poisson(t_fs - w.t_no);
        let p_2 = self.poisson(w.t_no);
        let p_3 = self.poisson(t_ds - t_fs);
        let p_23 = self.poisson(w.t_no + t_ds - t_fs);
        let mut targets = Vec::with_capacity(3 * n_sz as usize + 1);
        for j in 0..n_sz {
            let a = p_no.pmf(i64::from(j)) / cond;
            let c = i64::from(n_th) - i64::from(j) - 1;
            let lo = (i64::from(n_th) - i64::from(k) - i64::from(j)).max(0);
            let (mut ds, mut fs, mut on) = (0.0, 0.0, 0.0);
            for l in lo..=c {
                let pl = p_1.pmf(l);
                ds += pl * p_23.cdf(c - l);
                let inner: f64 = (0..=c - l)
                    .map(|m1| p_2.pmf(m1) * p_3.sf(c - l - m1 + 1))
                    .sum();
                fs += pl * inner;
                on += pl * p_2.sf(c - l + 1);
            }
            on += p_1.sf(lo.max(c + 1));
            if j < n_th {
                targets.push((DtmcState::new(Mode::Active, Mode::DeepSleep, j), a * ds));
                targets.push((DtmcState::new(Mode::Active, Mode::FastSleep, j), a * fs));
            }
            targets.push((DtmcState::new(Mode::Active, Mode::Active, j), a * on));
        }
        // At or beyond n_sz >= n_th the conditioning event is implied.
        targets.push((
            DtmcState::new(Mode::Active, Mode::Active, n_sz),
            p_no.sf(i64::from(n_sz)) / cond,
        ));
        Ok(Row {
            targets,
            flagged: false,
        })
    }

    /// Row for any valid source.
    pub fn row(&self, s: &DtmcState) -> Result<Row, DtmcError> {
        match (s.s_p, s.s_c) {
            (_, c) if c.is_sleep() => self.trans_from_sleep(s.s_p, c, s.b),
            (p, _) if p.is_sleep() => self.trans_wake(p, s.b),
            _ => self.trans_active(s.b),
        }
    }
}
