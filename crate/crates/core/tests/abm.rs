use rumorlab::abm::{run_abm, run_replicas, summarize, window_mean, AbmConfig};
use rumorlab::dynamics::PrevalenceState;
use rumorlab::steady::partisan_steady_prevalence;
use rumorlab::{Error, ModelParams, Rates};

fn lk2(beta: f64, gamma: f64) -> ModelParams {
    ModelParams {
        k: 4,
        nu: 0.05,
        delta: 0.1,
        beta,
        gamma,
        ..Default::default()
    }
}

fn short(population: usize, horizon: f64) -> AbmConfig {
    AbmConfig {
        population,
        horizon,
        record_every: 20,
        ..AbmConfig::default()
    }
}

#[test]
fn no_transmission_means_no_new_information() {
    let p = ModelParams { nu: 0.0, ..lk2(0.6, 0.0) };
    let cfg = AbmConfig {
        initial: PrevalenceState::new(0.4, 0.2, 0.2).unwrap(),
        ..short(4000, 50.0)
    };
    let run = run_abm(&p, Rates::new(0.2, 0.5), &cfg, 3).unwrap();
    assert_eq!(run.infections, 0);
    for pair in run.points.windows(2) {
        assert!(pair[1].rho0 <= pair[0].rho0 && pair[1].rho1 <= pair[0].rho1);
    }
}

#[test]
fn group_zero_never_holds_the_rumor() {
    for gamma in [0.0, 0.4] {
        let run = run_abm(&lk2(0.8, gamma), Rates::new(0.3, 0.7), &short(4000, 300.0), 11).unwrap();
        assert_eq!(run.group0_rumor_max, 0.0);
        assert!(run.infections > 0);
    }
}

#[test]
fn runs_are_reproducible_per_seed() {
    let p = lk2(0.6, 0.2);
    let cfg = short(2000, 100.0);
    let a = run_abm(&p, Rates::new(0.2, 0.5), &cfg, 42).unwrap();
    let b = run_abm(&p, Rates::new(0.2, 0.5), &cfg, 42).unwrap();
    let c = run_abm(&p, Rates::new(0.2, 0.5), &cfg, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.points, c.points);

    let runs = run_replicas(&p, Rates::new(0.2, 0.5), &cfg, &[43, 42]).unwrap();
    assert_eq!(runs[0], c);
    assert_eq!(runs[1], a);
}

#[test]
fn invalid_configurations() {
    let p = lk2(0.6, 0.0);
    let too_coarse = AbmConfig { dt: 0.5, ..short(2000, 10.0) };
    assert!(matches!(
        run_abm(&p, Rates::ZERO, &too_coarse, 1),
        Err(Error::InvalidParameter { name: "dt", .. })
    ));
    assert!(matches!(
        run_abm(&p, Rates::ZERO, &short(2001, 10.0), 1),
        Err(Error::InvalidParameter { name: "population", .. })
    ));
    let small = run_abm(&p, Rates::ZERO, &short(200, 10.0), 1).unwrap();
    assert!(small.warnings.iter().any(|w| w.contains("population")));
}

#[test]
fn larger_populations_track_the_mean_field_better() {
    let p = lk2(0.6, 0.0);
    let seeds: Vec<u64> = (100..106).collect();
    let error = |n: usize| {
        let runs = run_replicas(&p, Rates::ZERO, &short(n, 1000.0), &seeds).unwrap();
        (window_mean(&runs, 300.0, |q| q.iota) - 0.5).abs()
    };
    let (coarse, fine) = (error(2000), error(20_000));
    assert!(fine <= coarse, "N=20000 error {fine} > N=2000 error {coarse}");
    assert!(fine < 0.02);
}

#[test]
fn partisan_population_matches_closed_form() {
    let p = lk2(0.6, 0.3);
    let rates = Rates::new(0.2, 0.5);
    let seeds: Vec<u64> = (1..=8).collect();
    let runs = run_replicas(&p, rates, &short(20_000, 600.0), &seeds).unwrap();
    let summary = summarize(&runs).unwrap();
    let last = summary.last().unwrap();
    let exact = partisan_steady_prevalence(rates, &p).unwrap();
    // Bands: three across-seed standard deviations around the seed mean.
    assert!((last.mean_rho0 - exact.rho0).abs() <= 3.0 * last.sd_rho0, "{last:?} vs {exact:?}");
    assert!((last.mean_rho1 - exact.rho1).abs() <= 3.0 * last.sd_rho1, "{last:?} vs {exact:?}");
}
