//! Brute-force Monte-Carlo estimates of single transitions and long-run
//! state occupancy, written from the protocol rules alone.
//!
//! Arrivals are drawn as Poisson counts on the pieces of the time line cut
//! by every window boundary that matters for one step. The source state's
//! conditioning event is enforced by rejection; when it is too rare for
//! rejection to be practical the conditioned count is drawn from its exact
//! truncated law and split over the pieces binomially, which yields the
//! same joint distribution.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), seeded from
//! the caller's seed with one independent stream per shard.

use crate::dtmc::{DtmcState, Model, StateSpace};
use crate::policy::Mode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

/// Conditioning events rarer than this are reported instead of sampled.
pub const STARVED: f64 = 1e-300;
/// Below this conditioning probability exact truncated sampling replaces
/// plain rejection.
const REJECTION_FLOOR: f64 = 0.05;
const SHARDS: u64 = 64;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("state {0} is not a valid chain state")]
    InvalidState(DtmcState),
    #[error("conditioning event of {state} has probability {mass:e}")]
    ConditioningStarved { state: DtmcState, mass: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalRow {
    pub source: DtmcState,
    pub counts: BTreeMap<DtmcState, u64>,
    pub trials: u64,
    /// Fraction of unconditioned draws that satisfied the source's
    /// conditioning event (exact probability when truncated sampling was
    /// used).
    pub acceptance: f64,
}

impl EmpiricalRow {
    pub fn freq(&self, s: &DtmcState) -> f64 {
        self.counts.get(s).copied().unwrap_or(0) as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, Copy)]
enum Condition {
    /// At most `n` arrivals over `[0, t)`.
    AtMost { t: f64, n: u64 },
    /// At least `n` arrivals over `[0, t)`.
    AtLeast { t: f64, n: u64 },
}

impl Condition {
    fn horizon(&self) -> f64 {
        match *self {
            Condition::AtMost { t, .. } | Condition::AtLeast { t, .. } => t,
        }
    }

    fn holds(&self, count: u64) -> bool {
        match *self {
            Condition::AtMost { n, .. } => count <= n,
            Condition::AtLeast { n, .. } => count >= n,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Next {
    /// Still asleep in `mode`: stay while fewer than `n_th` packets are
    /// queued by the end of the wake lead.
    Sleep { mode: Mode, lead: f64 },
    /// Active: pick a mode from the arrivals over the two entry horizons.
    Active { t_fs: f64, t_ds: f64 },
}

/// Queue after the step given arrivals `a` during it.
#[derive(Debug, Clone, Copy)]
enum Queue {
    Asleep { k: u64 },
    Drained { k: u64, departed: u64 },
}

/// One step's sampling plan for a given source state.
#[derive(Debug, Clone)]
struct Plan {
    source: DtmcState,
    t_no: f64,
    cond: Option<Condition>,
    next: Next,
    queue: Queue,
    /// Piece boundaries, ascending, starting at 0.
    cuts: Vec<f64>,
    pieces: Vec<Option<Poisson<f64>>>,
    means: Vec<f64>,
    /// Pieces covering the conditioning horizon.
    cond_pieces: usize,
    truncated: Option<Truncated>,
    cond_mass: f64,
}

/// Exact law of a Poisson count restricted to the conditioning event.
#[derive(Debug, Clone)]
struct Truncated {
    values: Vec<u64>,
    cdf: Vec<f64>,
}

/// Poisson pmf over `0..len`, by log-space recurrence.
fn pmf_table(mu: f64, len: usize) -> Vec<f64> {
    if mu == 0.0 {
        let mut v = vec![0.0; len];
        v[0] = 1.0;
        return v;
    }
    let mut out = Vec::with_capacity(len);
    let mut log_p = -mu;
    for l in 0..len {
        if l > 0 {
            log_p += mu.ln() - (l as f64).ln();
        }
        out.push(log_p.exp());
    }
    out
}

fn conditioning_law(mu: f64, cond: Condition) -> (f64, Truncated) {
    let len = (mu + 40.0 * mu.sqrt() + 60.0).ceil() as usize;
    let len = match cond {
        Condition::AtLeast { n, .. } => len.max(n as usize + 60),
        Condition::AtMost { .. } => len,
    };
    let pmf = pmf_table(mu, len);
    let values: Vec<u64> = (0..len as u64).filter(|&v| cond.holds(v)).collect();
    let weights: Vec<f64> = values.iter().map(|&v| pmf[v as usize]).collect();
    // Sum from the small end for accuracy in the tail.
    let mass: f64 = match cond {
        Condition::AtLeast { .. } => weights.iter().rev().sum(),
        Condition::AtMost { .. } => weights.iter().sum(),
    };
    let mut acc = 0.0;
    let cdf = weights
        .iter()
        .map(|w| {
            acc += w / mass;
            acc
        })
        .collect();
    (mass, Truncated { values, cdf })
}

impl Plan {
    fn new(model: &Model, s: &DtmcState) -> Result<Self, OracleError> {
        Self::build(model, s, true)
    }

    /// `conditioned = false` drops the source's conditioning event, as for
    /// an ONU that has made no earlier prediction.
    fn build(model: &Model, s: &DtmcState, conditioned: bool) -> Result<Self, OracleError> {
        let cfg = &model.cfg;
        let th = &model.th;
        let (n_th, n_sz, n_m) = (cfg.onu.n_th, cfg.onu.n_sz, cfg.onu.n_m);
        if !s.is_valid(n_th, n_sz) {
            return Err(OracleError::InvalidState(*s));
        }
        let t_m = cfg.timing.t_m;
        let k = u64::from(s.b);
        let wake_lead = |m: Mode| {
            let t_sw = if m == Mode::DeepSleep {
                cfg.timing.t_sw_ds
            } else {
                cfg.timing.t_sw_fs
            };
            t_sw + 2.0 * th.t_cm + t_m
        };
        let active_next = Next::Active {
            t_fs: th.fs_entry,
            t_ds: th.t_lb_ds,
        };
        let need = u64::from(n_th) - k.min(u64::from(n_th));

        let (t_no, cond, next, queue) = match (s.s_p, s.s_c) {
            (p, c) if c.is_sleep() => {
                let lead = wake_lead(c);
                let (t_no, t_pc) = if p.is_sleep() {
                    (t_m, lead)
                } else {
                    let entry = if c == Mode::DeepSleep {
                        th.t_lb_ds
                    } else {
                        th.fs_entry
                    };
                    // Decision instants that the entry prediction already
                    // guarantees to stay asleep are skipped. The fill time
                    // exceeds `entry` almost surely, so equality still stays.
                    let mut periods = 1u32;
                    while entry - f64::from(periods) * t_m >= lead - 1e-12 {
                        periods += 1;
                    }
                    (f64::from(periods) * t_m, entry)
                };
                (
                    t_no,
                    Some(Condition::AtMost {
                        t: t_pc,
                        n: need - 1,
                    }),
                    Next::Sleep { mode: c, lead },
                    Queue::Asleep { k },
                )
            }
            (p, _) if p.is_sleep() => {
                let t_sw = if p == Mode::DeepSleep {
                    cfg.timing.t_sw_ds
                } else {
                    cfg.timing.t_sw_fs
                };
                let cycles = f64::from(n_th.div_ceil(n_m));
                (
                    t_sw + (cycles + 0.5) * th.t_cm,
                    Some(Condition::AtLeast {
                        t: wake_lead(p),
                        n: need,
                    }),
                    active_next,
                    Queue::Drained {
                        k,
                        departed: u64::from(n_th),
                    },
                )
            }
            _ => {
                let cycles = f64::from(s.b.div_ceil(n_m).max(1));
                let cond = (s.b < n_th).then_some(Condition::AtLeast {
                    t: th.fs_entry,
                    n: need,
                });
                (
                    cycles * th.t_cm,
                    cond,
                    active_next,
                    Queue::Drained { k, departed: k },
                )
            }
        };

        let cond = cond.filter(|_| conditioned);
        let mut cuts = vec![0.0, t_no];
        if let Some(c) = cond {
            cuts.push(c.horizon());
        }
        match next {
            Next::Sleep { lead, .. } => cuts.push(t_no + lead),
            Next::Active { t_fs, t_ds } => {
                cuts.push(t_no + t_fs);
                cuts.push(t_no + t_ds);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

        let lambda = cfg.onu.lambda;
        let means: Vec<f64> = cuts.windows(2).map(|w| lambda * (w[1] - w[0])).collect();
        let pieces = means
            .iter()
            .map(|&m| (m > 0.0).then(|| Poisson::new(m).expect("finite mean")))
            .collect();
        let cond_pieces = cond.map_or(0, |c| {
            cuts.iter().filter(|&&x| x < c.horizon() - 1e-15).count()
        });

        let (cond_mass, truncated) = match cond {
            None => (1.0, None),
            Some(c) => {
                let (mass, law) = conditioning_law(lambda * c.horizon(), c);
                if mass < STARVED {
                    return Err(OracleError::ConditioningStarved { state: *s, mass });
                }
                (mass, (mass < REJECTION_FLOOR).then_some(law))
            }
        };

        Ok(Plan {
            source: *s,
            t_no,
            cond,
            next,
            queue,
            cuts,
            pieces,
            means,
            cond_pieces,
            truncated,
            cond_mass,
        })
    }

    /// Arrivals over `[from, to)`, both of which are cut points.
    fn window(&self, counts: &[u64], from: f64, to: f64) -> u64 {
        self.cuts
            .windows(2)
            .zip(counts)
            .filter(|(w, _)| w[0] >= from - 1e-15 && w[1] <= to + 1e-15)
            .map(|(_, &c)| c)
            .sum()
    }

    fn draw(&self, i: usize, rng: &mut ChaCha8Rng) -> u64 {
        self.pieces[i].as_ref().map_or(0, |d| d.sample(rng) as u64)
    }

    /// Fills `counts` with one conditioned draw; returns the number of
    /// unconditioned attempts it took.
    fn sample_counts(&self, counts: &mut [u64], rng: &mut ChaCha8Rng) -> u64 {
        let mut attempts = 1;
        if let Some(law) = &self.truncated {
            let u: f64 = rng.random();
            let idx = law
                .cdf
                .partition_point(|&c| c < u)
                .min(law.values.len() - 1);
            let mut left = law.values[idx];
            let mut left_mean: f64 = self.means[..self.cond_pieces].iter().sum();
            for (i, &mean) in self.means[..self.cond_pieces].iter().enumerate() {
                let share = if left_mean > 0.0 {
                    (mean / left_mean).min(1.0)
                } else {
                    0.0
                };
                let c = if i + 1 == self.cond_pieces || share >= 1.0 {
                    left
                } else {
                    Binomial::new(left, share)
                        .expect("valid binomial")
                        .sample(rng)
                };
                counts[i] = c;
                left -= c;
                left_mean -= mean;
            }
        } else if let Some(cond) = self.cond {
            loop {
                let mut total = 0;
                for (i, c) in counts.iter_mut().enumerate().take(self.cond_pieces) {
                    *c = self.draw(i, rng);
                    total += *c;
                }
                if cond.holds(total) {
                    break;
                }
                attempts += 1;
            }
        }
        for (i, c) in counts.iter_mut().enumerate().skip(self.cond_pieces) {
            *c = self.draw(i, rng);
        }
        attempts
    }

    fn successor(&self, counts: &[u64], n_th: u64, n_sz: u64) -> DtmcState {
        let a = self.window(counts, 0.0, self.t_no);
        let b = match self.queue {
            Queue::Asleep { k } => k + a,
            Queue::Drained { k, departed } => (k + a).saturating_sub(departed).min(n_sz),
        };
        let from = self.source.s_c;
        let mode = match self.next {
            Next::Sleep { mode, lead } => {
                let fill = b + self.window(counts, self.t_no, self.t_no + lead);
                if fill < n_th {
                    mode
                } else {
                    Mode::Active
                }
            }
            Next::Active { t_fs, t_ds } => {
                if b >= n_th {
                    Mode::Active
                } else if b + self.window(counts, self.t_no, self.t_no + t_ds) < n_th {
                    Mode::DeepSleep
                } else if b + self.window(counts, self.t_no, self.t_no + t_fs) < n_th {
                    Mode::FastSleep
                } else {
                    Mode::Active
                }
            }
        };
        DtmcState::new(from, mode, b as u32)
    }
}

/// Empirical distribution of the state one observation step after `source`.
pub fn sample_transition(
    model: &Model,
    source: &DtmcState,
    seed: u64,
    trials: u64,
) -> Result<EmpiricalRow, OracleError> {
    assert!(trials >= 1, "at least one trial");
    let plan = Plan::new(model, source)?;
    let n_th = u64::from(model.cfg.onu.n_th);
    let n_sz = u64::from(model.cfg.onu.n_sz);
    let per = trials / SHARDS;
    let extra = trials % SHARDS;
    let shards: Vec<(BTreeMap<DtmcState, u64>, u64)> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let n = per + u64::from(shard < extra);
            let mut counts = vec![0; plan.means.len()];
            let mut hist = BTreeMap::new();
            let mut attempts = 0;
            for _ in 0..n {
                attempts += plan.sample_counts(&mut counts, &mut rng);
                *hist.entry(plan.successor(&counts, n_th, n_sz)).or_insert(0) += 1;
            }
            (hist, attempts)
        })
        .collect();
    let mut counts = BTreeMap::new();
    let mut attempts = 0;
    for (hist, a) in shards {
        attempts += a;
        for (s, c) in hist {
            *counts.entry(s).or_insert(0) += c;
        }
    }
    let acceptance = if plan.truncated.is_some() {
        plan.cond_mass
    } else {
        trials as f64 / attempts as f64
    };
    Ok(EmpiricalRow {
        source: *source,
        counts,
        trials,
        acceptance,
    })
}

/// Runs the chain for `steps` sampled transitions from `{on, on, 0}` and
/// returns, per state of the model's state space, the share of time spent
/// there (each visited state weighted by its step length).
///
/// The walk starts from a freshly powered ONU, so the first step carries no
/// earlier prediction to condition on.
pub fn random_walk(model: &Model, seed: u64, steps: u64) -> Result<Vec<f64>, OracleError> {
    let space = StateSpace::new(model.cfg.onu.n_th, model.cfg.onu.n_sz);
    let n_th = u64::from(model.cfg.onu.n_th);
    let n_sz = u64::from(model.cfg.onu.n_sz);
    let mut plans: Vec<Option<Plan>> = vec![None; space.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut time = vec![0.0; space.len()];
    let mut cur = crate::dtmc::start_state();
    let mut buf = Vec::new();
    let first = Plan::build(model, &cur, false)?;
    for step in 0..steps {
        let plan = if step == 0 {
            &first
        } else {
            let i = space.index_of(&cur).ok_or(OracleError::InvalidState(cur))?;
            if plans[i].is_none() {
                plans[i] = Some(Plan::new(model, &cur)?);
            }
            plans[i].as_ref().expect("plan just built")
        };
        buf.resize(plan.means.len(), 0);
        plan.sample_counts(&mut buf, &mut rng);
        cur = plan.successor(&buf, n_th, n_sz);
        let j = space.index_of(&cur).ok_or(OracleError::InvalidState(cur))?;
        if plans[j].is_none() {
            plans[j] = Some(Plan::new(model, &cur)?);
        }
        time[j] += plans[j].as_ref().expect("plan just built").t_no;
    }
    let total: f64 = time.iter().sum();
    Ok(time.into_iter().map(|t| t / total).collect())
}
