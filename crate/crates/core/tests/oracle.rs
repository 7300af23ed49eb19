use osmp_core::dtmc::{build_matrix, DtmcState, Model};
use osmp_core::oracle::{random_walk, sample_transition, OracleError};
use osmp_core::{Mode, NetworkConfig};

fn small(lambda_tm: f64) -> NetworkConfig {
    let mut cfg = NetworkConfig::reference();
    cfg.n_onus = 4;
    cfg.onu.n_th = 8;
    cfg.onu.n_sz = 12;
    cfg.onu.n_m = 2;
    cfg.timing.t_m = 0.2e-3;
    cfg.onu.lambda = lambda_tm / cfg.timing.t_m;
    cfg
}

fn l1(a: &osmp_core::oracle::EmpiricalRow, b: &osmp_core::oracle::EmpiricalRow) -> f64 {
    let mut keys: Vec<_> = a.counts.keys().chain(b.counts.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    keys.iter().map(|s| (a.freq(s) - b.freq(s)).abs()).sum()
}

/// P(Poisson(mu) <= n) by direct summation.
fn poisson_cdf(mu: f64, n: u64) -> f64 {
    let mut term = (-mu).exp();
    let mut sum = term;
    for l in 1..=n {
        term *= mu / l as f64;
        sum += term;
    }
    sum
}

#[test]
fn same_seed_same_counts() {
    let model = Model::new(&small(0.5)).unwrap();
    let s = DtmcState::new(Mode::Active, Mode::Active, 5);
    let a = sample_transition(&model, &s, 42, 20_000).unwrap();
    let b = sample_transition(&model, &s, 42, 20_000).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.counts.values().sum::<u64>(), 20_000);
}

#[test]
fn no_arrivals_means_no_movement() {
    let model = Model::new(&small(0.0)).unwrap();
    for k in 0..8 {
        let s = DtmcState::new(Mode::FastSleep, Mode::FastSleep, k);
        let row = sample_transition(&model, &s, 1, 1000).unwrap();
        assert_eq!(row.counts.len(), 1);
        assert_eq!(row.freq(&s), 1.0);
    }
}

#[test]
fn independent_seeds_agree() {
    let model = Model::new(&small(0.5)).unwrap();
    let s = DtmcState::new(Mode::FastSleep, Mode::FastSleep, 3);
    let a = sample_transition(&model, &s, 1, 1_000_000).unwrap();
    let b = sample_transition(&model, &s, 2, 1_000_000).unwrap();
    assert!(l1(&a, &b) < 5e-3, "{}", l1(&a, &b));
}

#[test]
fn acceptance_rate_matches_conditioning_probability() {
    let cfg = small(2.0);
    let model = Model::new(&cfg).unwrap();
    let k = 2;
    let s = DtmcState::new(Mode::FastSleep, Mode::FastSleep, k);
    let trials = 400_000;
    let row = sample_transition(&model, &s, 9, trials).unwrap();
    let mu = cfg.onu.lambda * model.th.t_mw_fs;
    let p = poisson_cdf(mu, u64::from(cfg.onu.n_th - 1 - k));
    assert!(p > 0.05, "rejection path expected, p = {p}");
    let attempts = trials as f64 / row.acceptance;
    let se = (p * (1.0 - p) / attempts).sqrt();
    assert!(
        (row.acceptance - p).abs() < 3.0 * se,
        "{} vs {p} (se {se})",
        row.acceptance
    );
}

#[test]
fn vanishing_conditioning_is_reported() {
    let mut cfg = small(0.5);
    cfg.onu.lambda = 1e-40;
    let model = Model::new(&cfg).unwrap();
    let s = DtmcState::new(Mode::FastSleep, Mode::Active, 0);
    assert!(matches!(
        sample_transition(&model, &s, 1, 10),
        Err(OracleError::ConditioningStarved { .. })
    ));
}

#[test]
fn invalid_source_is_rejected() {
    let model = Model::new(&small(0.5)).unwrap();
    let s = DtmcState::new(Mode::DeepSleep, Mode::FastSleep, 0);
    assert_eq!(
        sample_transition(&model, &s, 1, 10),
        Err(OracleError::InvalidState(s))
    );
}

#[test]
fn single_step_walk_is_a_point_mass() {
    let model = Model::new(&small(0.5)).unwrap();
    let v = random_walk(&model, 3, 1).unwrap();
    assert_eq!(v.iter().filter(|&&x| x > 0.0).count(), 1);
    assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
}

#[test]
fn walk_avoids_flagged_states() {
    let mut cfg = small(0.5);
    cfg.onu.lambda = 1e-40;
    let model = Model::new(&cfg).unwrap();
    let m = build_matrix(&model).unwrap();
    assert!(m.flagged.iter().any(|&f| f));
    let v = random_walk(&model, 5, 10_000).unwrap();
    for (i, &f) in m.flagged.iter().enumerate() {
        if f {
            assert_eq!(v[i], 0.0, "{}", m.states()[i]);
        }
    }
}
