//! Stationary distribution of a possibly reducible chain, restricted to the
//! closed class reached from a given start state.
//!
//! The class is solved exactly by Grassmann-Taksar-Heyman elimination
//! (subtraction-free, so no cancellation on near-decomposable chains);
//! power iteration is only used to polish a result that misses tolerance.

use super::{DtmcError, TransitionMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-10,
            max_iterations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Stationary {
    /// Indexed like the matrix; zero outside the recurrent class.
    pub pi: Vec<f64>,
    /// `max_i |(pi P)_i - pi_i|`.
    pub residual: f64,
    /// Indices of the recurrent class, ascending.
    pub class: Vec<usize>,
}

fn successors(probs: &[f64], n: usize, i: usize) -> impl Iterator<Item = usize> + '_ {
    probs[i * n..(i + 1) * n]
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(j, _)| j)
}

/// Strongly connected components (Tarjan) of the sub-graph reachable from
/// `start`; returns a component id per node (`usize::MAX` if unreachable).
fn components(probs: &[f64], n: usize, start: usize) -> (Vec<usize>, usize) {
    struct Tarjan<'a> {
        probs: &'a [f64],
        n: usize,
        index: Vec<usize>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next_index: usize,
        n_comp: usize,
    }
    impl Tarjan<'_> {
        fn visit(&mut self, v: usize) {
            self.index[v] = self.next_index;
            self.low[v] = self.next_index;
            self.next_index += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
            let succ: Vec<usize> = successors(self.probs, self.n, v).collect();
            for w in succ {
                if self.index[w] == usize::MAX {
                    self.visit(w);
                    self.low[v] = self.low[v].min(self.low[w]);
                } else if self.on_stack[w] {
                    self.low[v] = self.low[v].min(self.index[w]);
                }
            }
            if self.low[v] == self.index[v] {
                loop {
                    let w = self.stack.pop().expect("tarjan stack");
                    self.on_stack[w] = false;
                    self.comp[w] = self.n_comp;
                    if w == v {
                        break;
                    }
                }
                self.n_comp += 1;
            }
        }
    }
    let mut t = Tarjan {
        probs,
        n,
        index: vec![usize::MAX; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        comp: vec![usize::MAX; n],
        next_index: 0,
        n_comp: 0,
    };
    t.visit(start);
    (t.comp, t.n_comp)
}

/// The unique closed class reachable from `start`.
pub fn recurrent_class(probs: &[f64], n: usize, start: usize) -> Result<Vec<usize>, DtmcError> {
    let (comp, n_comp) = components(probs, n, start);
    let mut closed = vec![true; n_comp];
    for v in (0..n).filter(|&v| comp[v] != usize::MAX) {
        if successors(probs, n, v).any(|w| comp[w] != comp[v]) {
            closed[comp[v]] = false;
        }
    }
    let bottoms: Vec<usize> = (0..n_comp).filter(|&c| closed[c]).collect();
    match bottoms.as_slice() {
        [c] => Ok((0..n).filter(|&v| comp[v] == *c).collect()),
        _ => Err(DtmcError::MultipleRecurrentClasses(bottoms.len())),
    }
}

/// GTH elimination on an irreducible stochastic matrix (row-major `m * m`).
fn gth(mut a: Vec<f64>, m: usize) -> Vec<f64> {
    for k in (1..m).rev() {
        let s: f64 = a[k * m..k * m + k].iter().sum();
        for i in 0..k {
            a[i * m + k] /= s;
        }
        for i in 0..k {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..k {
                a[i * m + j] += aik * a[k * m + j];
            }
        }
    }
    let mut pi = vec![0.0; m];
    pi[0] = 1.0;
    for j in 1..m {
        pi[j] = (0..j).map(|i| pi[i] * a[i * m + j]).sum();
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    pi
}

fn step(probs: &[f64], n: usize, pi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, &p) in pi.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (o, &q) in out.iter_mut().zip(&probs[i * n..(i + 1) * n]) {
            *o += p * q;
        }
    }
    out
}

pub fn residual(probs: &[f64], n: usize, pi: &[f64]) -> f64 {
    step(probs, n, pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Solves `pi = pi P` on the recurrent class reached from `start`.
pub fn solve(
    probs: &[f64],
    n: usize,
    start: usize,
    opts: SolverOptions,
) -> Result<Stationary, DtmcError> {
    let class = recurrent_class(probs, n, start)?;
    let m = class.len();
    let mut sub = vec![0.0; m * m];
    for (a, &i) in class.iter().enumerate() {
        for (b, &j) in class.iter().enumerate() {
            sub[a * m + b] = probs[i * n + j];
        }
    }
    let local = gth(sub, m);
    let mut pi = vec![0.0; n];
    for (a, &i) in class.iter().enumerate() {
        pi[i] = local[a];
    }

    let mut res = residual(probs, n, &pi);
    let mut iterations = 0;
    while res >= opts.tolerance {
        if iterations >= opts.max_iterations {
            return Err(DtmcError::NoConvergence {
                iterations,
                residual: res,
            });
        }
        // Lazy step: converges on periodic classes too.
        let next = step(probs, n, &pi);
        pi.iter_mut()
            .zip(&next)
            .for_each(|(p, q)| *p = 0.5 * (*p + q));
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        res = residual(probs, n, &pi);
        iterations += 1;
    }
    Ok(Stationary {
        pi,
        residual: res,
        class,
    })
}

/// Stationary distribution of the class reached from `{on, on, 0}`.
pub fn stationary_distribution(m: &TransitionMatrix) -> Result<Stationary, DtmcError> {
    stationary_distribution_with(m, SolverOptions::default())
}

pub fn stationary_distribution_with(
    m: &TransitionMatrix,
    opts: SolverOptions,
) -> Result<Stationary, DtmcError> {
    let start = m
        .space
        .index_of(&super::start_state())
        .expect("{on, on, 0} is always valid");
    solve(&m.probs, m.n(), start, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_state_symmetric() {
        let p = vec![0.3, 0.7, 0.7, 0.3];
        let s = solve(&p, 2, 0, SolverOptions::default()).unwrap();
        assert!((s.pi[0] - 0.5).abs() < 1e-15 && (s.pi[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_reports_start_class() {
        let n = 4;
        let mut p = vec![0.0; n * n];
        (0..n).for_each(|i| p[i * n + i] = 1.0);
        let s = solve(&p, n, 2, SolverOptions::default()).unwrap();
        assert_eq!(s.class, vec![2]);
        assert_eq!(s.pi, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn transient_start_absorbed() {
        // 0 -> {1, 2}; {1, 2} closed and periodic.
        let p = vec![0.0, 0.5, 0.5, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let s = solve(&p, 3, 0, SolverOptions::default()).unwrap();
        assert_eq!(s.class, vec![1, 2]);
        assert!((s.pi[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_closed_classes_are_reported() {
        let p = vec![0.0, 0.5, 0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(
            solve(&p, 3, 0, SolverOptions::default()).unwrap_err(),
            DtmcError::MultipleRecurrentClasses(2)
        );
    }

    #[test]
    fn polishing_budget_exhaustion_is_an_error() {
        let p = vec![0.3, 0.7, 0.7, 0.3];
        let opts = SolverOptions {
            tolerance: 0.0,
            max_iterations: 3,
        };
        assert!(matches!(
            solve(&p, 2, 0, opts),
            Err(DtmcError::NoConvergence { iterations: 3, .. })
        ));
    }

    proptest! {
        #[test]
        fn random_dense_chains(raw in prop::collection::vec(1e-3f64..1.0, 36)) {
            let n = 6;
            let mut p = raw.clone();
            for i in 0..n {
                let s: f64 = p[i * n..(i + 1) * n].iter().sum();
                p[i * n..(i + 1) * n].iter_mut().for_each(|x| *x /= s);
            }
            let s = solve(&p, n, 0, SolverOptions::default()).unwrap();
            prop_assert!(s.residual < 1e-14);
            prop_assert!((s.pi.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            prop_assert!(s.pi.iter().all(|&x| x > 0.0));
        }
    }
}
