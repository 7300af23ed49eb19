use super::{DtmcError, DtmcState, Model, StateSpace};
use crate::policy::Mode;
use rayon::prelude::*;
use std::io::{self, Write};

/// A stretch of constant power inside one observation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub power: f64,
}

/// Dense row-stochastic matrix over the valid states with per-state dwell
/// time and energy.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub space: StateSpace,
    /// Row-major, `n * n`.
    pub probs: Vec<f64>,
    pub dwell: Vec<f64>,
    pub energy: Vec<f64>,
    pub flagged: Vec<bool>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.space.len()
    }

    pub fn states(&self) -> &[DtmcState] {
        self.space.states()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.probs[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.n() + j]
    }

    /// Builds a matrix from explicit rows; used for tests of the solver.
    pub fn from_dense(
        space: StateSpace,
        probs: Vec<f64>,
        dwell: Vec<f64>,
        energy: Vec<f64>,
    ) -> Self {
        let n = space.len();
        assert_eq!(probs.len(), n * n);
        TransitionMatrix {
            space,
            probs,
            dwell,
            energy,
            flagged: vec![false; n],
        }
    }

    /// Writes `(sp, sc, b, sp', sc', b', p)` for every non-zero entry.
    pub fn write_transitions<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "sp,sc,b,sp_next,sc_next,b_next,p")?;
        for (i, s) in self.states().iter().enumerate() {
            for (j, t) in self.states().iter().enumerate() {
                let p = self.get(i, j);
                if p > 0.0 {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{:e}",
                        s.s_p, s.s_c, s.b, t.s_p, t.s_c, t.b, p
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Writes `(sp, sc, b, dwell_s, energy_j)` per state.
    pub fn write_state_costs<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "sp,sc,b,dwell_s,energy_j")?;
        for (i, s) in self.states().iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{:e},{:e}",
                s.s_p, s.s_c, s.b, self.dwell[i], self.energy[i]
            )?;
        }
        Ok(())
    }
}

impl Model {
    /// Power profile over the step that starts in state `s`. Durations sum
    /// to the state's dwell time.
    pub fn segments(&self, s: &DtmcState) -> Result<Vec<Segment>, DtmcError> {
        let w = self.windows_for(s)?;
        let p = &self.cfg.power;
        let t = &self.cfg.timing;
        let th = &self.th;
        Ok(match (s.s_p, s.s_c) {
            (_, Mode::DeepSleep) => vec![Segment {
                duration: w.t_no,
                power: p.p_ds,
            }],
            (_, Mode::FastSleep) => vec![Segment {
                duration: w.t_no,
                power: p.p_fs,
            }],
            (sm, Mode::Active) if sm.is_sleep() => {
                let t_sw = if sm == Mode::DeepSleep {
                    t.t_sw_ds
                } else {
                    t.t_sw_fs
                };
                let burst = t.t_sw_dz + t.t_report + t.t_guard;
                let cycles = self.cfg.onu.n_th.div_ceil(self.cfg.onu.n_m);
                vec![
                    Segment {
                        duration: t_sw,
                        power: p.p_on,
                    },
                    Segment {
                        duration: 1.5 * th.t_cm - burst,
                        power: p.p_dz,
                    },
                    Segment {
                        duration: burst,
                        power: p.p_on,
                    },
                    Segment {
                        duration: f64::from(cycles - 1) * th.t_cm,
                        power: th.p_on_avg,
                    },
                ]
            }
            _ => vec![Segment {
                duration: w.t_no,
                power: th.p_on_avg,
            }],
        })
    }
}

/// Enumerates the valid states and fills every row, dwell and energy.
pub fn build_matrix(model: &Model) -> Result<TransitionMatrix, DtmcError> {
    let space = StateSpace::new(model.cfg.onu.n_th, model.cfg.onu.n_sz);
    let n = space.len();
    let rows: Vec<_> = space
        .states()
        .par_iter()
        .map(|s| -> Result<_, DtmcError> {
            let row = model.row(s)?;
            let segs = model.segments(s)?;
            let dwell = model.windows_for(s)?.t_no;
            let energy: f64 = segs.iter().map(|g| g.duration * g.power).sum();
            Ok((row, dwell, energy))
        })
        .collect::<Result<_, _>>()?;

    let mut probs = vec![0.0; n * n];
    let mut dwell = Vec::with_capacity(n);
    let mut energy = Vec::with_capacity(n);
    let mut flagged = Vec::with_capacity(n);
    for (i, (row, d, e)) in rows.into_iter().enumerate() {
        for (t, p) in row.targets {
            let j = space.index_of(&t).ok_or(DtmcError::InvalidState(t))?;
            probs[i * n + j] += p;
        }
        dwell.push(d);
        energy.push(e);
        flagged.push(row.flagged);
    }
    Ok(TransitionMatrix {
        space,
        probs,
        dwell,
        energy,
        flagged,
    })
}
