//! Poisson probabilities with separately accumulated lower and upper tails,
//! so that both `P(X <= c)` and `P(X >= c)` keep full relative precision on
//! their small side.

use statrs::function::factorial::ln_factorial;

/// `e^{-mu} mu^l / l!`, evaluated in log space.
pub fn poisson_pmf(l: u64, mu: f64) -> f64 {
    if mu == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    (l as f64 * mu.ln() - mu - ln_factorial(l)).exp()
}

/// Tabulated pmf, cdf and survival function for one mean. Beyond the table
/// the remaining mass is below double-precision resolution.
#[derive(Debug, Clone)]
pub struct Poisson {
    mu: f64,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    sf: Vec<f64>,
}

impl Poisson {
    pub fn new(mu: f64) -> Self {
        debug_assert!(mu >= 0.0 && mu.is_finite(), "bad Poisson mean {mu}");
        let len = (mu + 40.0 * mu.sqrt() + 60.0).ceil() as usize;
        let pmf: Vec<f64> = (0..len).map(|l| poisson_pmf(l as u64, mu)).collect();
        let mut cdf = Vec::with_capacity(len);
        let mut acc = 0.0;
        for &p in &pmf {
            acc += p;
            cdf.push(acc.min(1.0));
        }
        let mut sf = vec![0.0; len];
        let mut acc = 0.0;
        for i in (0..len).rev() {
            acc += pmf[i];
            sf[i] = acc.min(1.0);
        }
        Poisson { mu, pmf, cdf, sf }
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn pmf(&self, l: i64) -> f64 {
        if l < 0 {
            0.0
        } else {
            self.pmf.get(l as usize).copied().unwrap_or(0.0)
        }
    }

    /// `P(X <= c)`.
    pub fn cdf(&self, c: i64) -> f64 {
        if c < 0 {
            0.0
        } else {
            self.cdf.get(c as usize).copied().unwrap_or(1.0)
        }
    }

    /// `P(X >= c)`.
    pub fn sf(&self, c: i64) -> f64 {
        if c <= 0 {
            1.0
        } else {
            self.sf.get(c as usize).copied().unwrap_or(0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_mean_is_a_point_mass() {
        assert_eq!(poisson_pmf(0, 0.0), 1.0);
        assert_eq!(poisson_pmf(3, 0.0), 0.0);
        let p = Poisson::new(0.0);
        assert_eq!(p.cdf(0), 1.0);
        assert_eq!(p.sf(1), 0.0);
    }

    #[test]
    fn closed_form_value() {
        let expect = (-1.0f64).exp() / 2.0;
        assert!((poisson_pmf(2, 1.0) - expect).abs() < 1e-15);
        assert!((poisson_pmf(2, 1.0) - 0.183_940).abs() < 1e-6);
    }

    #[test]
    fn normalised_at_fifty() {
        let s: f64 = (0..=200).map(|l| poisson_pmf(l, 50.0)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn far_tail_keeps_relative_precision() {
        // P(X >= 60) at mu = 5 is ~1e-40; 1 - cdf would round to zero.
        let p = Poisson::new(5.0);
        let direct: f64 = (60..200).map(|l| poisson_pmf(l, 5.0)).sum();
        assert!(direct > 0.0 && direct < 1e-30);
        assert!(((p.sf(60) - direct) / direct).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_recurrence(mu in 0.0f64..120.0, l in 0u64..300) {
            let mut term = (-mu).exp();
            for i in 1..=l {
                term *= mu / i as f64;
            }
            let got = poisson_pmf(l, mu);
            prop_assert!((got - term).abs() <= 1e-10 * term + 1e-300);
        }

        #[test]
        fn tails_partition(mu in 0.0f64..500.0, c in -5i64..900) {
            let p = Poisson::new(mu);
            prop_assert!((p.cdf(c) + p.sf(c + 1) - 1.0).abs() < 1e-12);
            prop_assert!(p.cdf(c) >= p.cdf(c - 1));
            prop_assert!(p.sf(c) >= p.sf(c + 1));
        }
    }
}
