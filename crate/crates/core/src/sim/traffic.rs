//! Arrival traces. Each ONU gets its own ChaCha8 stream of the run seed, so
//! traces are reproducible and independent across ONUs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Pareto};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficKind {
    Poisson,
    SelfSimilar(OnOff),
}

/// Aggregate of Pareto ON-OFF sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnOff {
    pub hurst: f64,
    pub n_sources: u32,
    pub mean_on: f64,
    /// Zero keeps every source permanently ON.
    pub mean_off: f64,
}

impl OnOff {
    pub fn new(hurst: f64) -> Self {
        OnOff {
            hurst,
            n_sources: 16,
            mean_on: 10e-3,
            mean_off: 10e-3,
        }
    }

    pub fn shape(&self) -> f64 {
        3.0 - 2.0 * self.hurst
    }

    /// Aggregate rate with every source ON that yields mean rate `lambda`.
    pub fn peak_for(&self, lambda: f64) -> f64 {
        lambda * (self.mean_on + self.mean_off) / self.mean_on
    }
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Poisson arrivals on `[0, horizon)`.
pub fn poisson_traffic(lambda: f64, horizon: f64, rng: &mut impl Rng) -> Vec<f64> {
    if lambda <= 0.0 {
        return Vec::new();
    }
    let exp = Exp::new(lambda).expect("positive rate");
    let mut out = Vec::with_capacity((lambda * horizon * 1.01) as usize + 16);
    let mut t = exp.sample(rng);
    while t < horizon {
        out.push(t);
        t += exp.sample(rng);
    }
    out
}

fn pareto(mean: f64, shape: f64) -> Pareto<f64> {
    Pareto::new(mean * (shape - 1.0) / shape, shape).expect("valid Pareto")
}

/// Superposed ON-OFF sources on `[0, horizon)`. While ON a source emits at
/// `peak_rate / n_sources`; its emission clock only advances during ON
/// time, so the long-run rate is the peak times the ON fraction exactly.
pub fn selfsimilar_traffic(
    p: &OnOff,
    peak_rate: f64,
    horizon: f64,
    rng: &mut impl Rng,
) -> Vec<f64> {
    assert!(
        p.hurst > 0.5 && p.hurst < 1.0,
        "Hurst parameter must lie in (0.5, 1)"
    );
    assert!(p.n_sources >= 1);
    if peak_rate <= 0.0 {
        return Vec::new();
    }
    let shape = p.shape();
    let on = pareto(p.mean_on, shape);
    let off = (p.mean_off > 0.0).then(|| pareto(p.mean_off, shape));
    let gap = f64::from(p.n_sources) / peak_rate;
    let mut out = Vec::new();
    for _ in 0..p.n_sources {
        let mut t = 0.0;
        // Emission phase: ON time still needed before the next packet.
        let mut due = rng.random::<f64>() * gap;
        let mut is_on = off.is_none() || rng.random::<bool>();
        while t < horizon {
            let len = match (&off, is_on) {
                (None, _) => horizon - t,
                (Some(_), true) => on.sample(rng),
                (Some(d), false) => d.sample(rng),
            };
            if is_on {
                let mut used = due;
                while used < len && t + used < horizon {
                    out.push(t + used);
                    used += gap;
                }
                due = used - len;
            }
            t += len;
            if off.is_some() {
                is_on = !is_on;
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

pub fn trace(kind: &TrafficKind, lambda: f64, horizon: f64, rng: &mut impl Rng) -> Vec<f64> {
    match kind {
        TrafficKind::Poisson => poisson_traffic(lambda, horizon, rng),
        TrafficKind::SelfSimilar(p) => selfsimilar_traffic(p, p.peak_for(lambda), horizon, rng),
    }
}
