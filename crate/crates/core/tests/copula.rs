//! Latent sampling, censoring, observation transform and joint forecasts.

use proptest::prelude::*;
use rainfall_copula::copula::{
    censor, joint_forecast, joint_forecast_day, obs_to_gaussian, sample_latent, sample_latent_day,
    CensorThresholds,
};
use rainfall_copula::marginals::{GammaMixture, MarginalField};
use rainfall_copula::numerics::DenseMatrix;
use rainfall_copula::rng::{seeded, substream, Purpose};
use rainfall_copula::spatial::{build_covariance, matern_kernel, CovarianceMatrix, DistanceMatrix, MaternParams};
use rainfall_copula::RainPanel;
use rand::Rng;

/// Covariance of points on a line with the given spacing (θ = 1).
fn line_covariance(n: usize, spacing: f64) -> CovarianceMatrix {
    let d = DenseMatrix::from_fn(n, n, |i, j| spacing * (i as f64 - j as f64).abs());
    let d = DistanceMatrix::from_matrix(d, 1.0).unwrap();
    build_covariance(&d, &MaternParams::with_theta(1.0).unwrap()).unwrap()
}

/// Two points whose correlation is `rho`, found by bisection on the kernel.
fn pair_with_correlation(rho: f64) -> CovarianceMatrix {
    let params = MaternParams::with_theta(1.0).unwrap();
    let (mut lo, mut hi) = (0.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if matern_kernel(mid, &params) > rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    line_covariance(2, 0.5 * (lo + hi))
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Two-sample Kolmogorov–Smirnov distance; ties (the atom at zero) are
/// handled by stepping past every equal value before comparing.
fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut worst) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        worst = worst.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    worst
}

#[test]
fn independent_latent_moments() {
    let cov = line_covariance(3, 1e6);
    assert_eq!(cov.matrix(), &DenseMatrix::identity(3));
    let n = 100_000;
    let draws = sample_latent(&cov, n, &mut seeded(4)).unwrap();
    let col = |k: usize| draws.iter().map(|d| d.values[k]).collect::<Vec<_>>();
    for k in 0..3 {
        let c = col(k);
        let var = c.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "variance {var}");
    }
    let r = correlation(&col(0), &col(1));
    assert!(r.abs() < 3.0 / (n as f64).sqrt());
}

#[test]
fn correlated_latent_moments() {
    let cov = pair_with_correlation(0.8);
    assert!((cov.matrix()[(0, 1)] - 0.8).abs() < 1e-12);
    let n = 100_000;
    let draws = sample_latent(&cov, n, &mut seeded(5)).unwrap();
    let a: Vec<f64> = draws.iter().map(|d| d.values[0]).collect();
    let b: Vec<f64> = draws.iter().map(|d| d.values[1]).collect();
    // sd of the sample correlation ≈ (1 − ρ²)/√n
    assert!((correlation(&a, &b) - 0.8).abs() < 3.0 * 0.36 / (n as f64).sqrt());
}

#[test]
fn latent_sampling_is_deterministic() {
    let cov = line_covariance(4, 0.7);
    assert_eq!(
        sample_latent(&cov, 10, &mut seeded(1)).unwrap(),
        sample_latent(&cov, 10, &mut seeded(1)).unwrap()
    );
    let a = sample_latent_day(&cov, 10, 9, 3).unwrap();
    assert_eq!(a, sample_latent_day(&cov, 10, 9, 3).unwrap());
    // replicate j does not depend on how many replicates are drawn
    assert_eq!(a[..4], sample_latent_day(&cov, 4, 9, 3).unwrap()[..]);
    assert!(sample_latent(&cov, 0, &mut seeded(1)).is_err());
}

#[test]
fn common_random_numbers_across_lengthscales() {
    // with one location Σ = [1] for every θ, so draws must coincide
    let d = DistanceMatrix::from_matrix(DenseMatrix::zeros(1, 1), 0.9).unwrap();
    let a = build_covariance(&d, &MaternParams::with_theta(200.0).unwrap()).unwrap();
    let b = build_covariance(&d, &MaternParams::with_theta(800.0).unwrap()).unwrap();
    assert_eq!(sample_latent_day(&a, 5, 1, 2).unwrap(), sample_latent_day(&b, 5, 1, 2).unwrap());
}

#[test]
fn forecast_mean_under_independence() {
    let cov = line_covariance(3, 1e6);
    let law = GammaMixture::new(1.0, 2.0, 1.0).unwrap();
    let field = MarginalField::homogeneous(3, 1, law);
    let n = 100_000;
    let block = joint_forecast(&cov, &field, 0, n, &mut seeded(6)).unwrap();
    for i in 0..3 {
        let mean = block.location(i).iter().sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 3.0 * 2.0 / (n as f64).sqrt(), "location {i}: {mean}");
    }
}

#[test]
fn strong_dependence_synchronizes_wet_dry() {
    let law = GammaMixture::new(0.5, 3.0, 1.2).unwrap();
    let field = MarginalField::homogeneous(2, 1, law);
    let n = 20_000;
    let disagree = |cov: &CovarianceMatrix| {
        let block = joint_forecast(cov, &field, 0, n, &mut seeded(8)).unwrap();
        (0..n)
            .filter(|&r| (block.replicate(r)[0] > 0.0) != (block.replicate(r)[1] > 0.0))
            .count() as f64
            / n as f64
    };
    let dependent = disagree(&pair_with_correlation(0.999));
    let independent = disagree(&line_covariance(2, 1e6));
    assert!((independent - 0.5).abs() < 0.02);
    assert!(dependent < 0.05, "{dependent}");
}

#[test]
fn always_dry_location_is_exactly_zero() {
    let cov = line_covariance(3, 0.5);
    let laws = [
        GammaMixture::new(0.7, 2.0, 1.0).unwrap(),
        GammaMixture::new(0.0, 2.0, 1.0).unwrap(),
        GammaMixture::new(1.0, 2.0, 1.0).unwrap(),
    ];
    let field = MarginalField::per_location(&laws, 2);
    let block = joint_forecast_day(&cov, &field, 1, 5000, 3).unwrap();
    assert!(block.location(1).iter().all(|&y| y.to_bits() == 0.0f64.to_bits()));
    assert!(block.location(2).iter().all(|&y| y > 0.0));
}

#[test]
fn forecast_preserves_marginal_laws() {
    let laws = [
        GammaMixture::new(0.6, 3.0, 1.2).unwrap(),
        GammaMixture::new(0.3, 8.0, 0.5).unwrap(),
        GammaMixture::new(0.95, 1.0, 2.5).unwrap(),
        GammaMixture::new(1.0, 4.0, 0.8).unwrap(),
    ];
    let cov = line_covariance(4, 0.4);
    let field = MarginalField::per_location(&laws, 1);
    let n = 100_000;
    let block = joint_forecast(&cov, &field, 0, n, &mut seeded(12)).unwrap();
    for (i, law) in laws.iter().enumerate() {
        let joint = block.location(i);
        let mut rng = substream(99, Purpose::Marginal, i as u64, 0);
        let direct: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        let ks = ks_distance(&joint, &direct);
        assert!(ks < 0.01, "location {i}: KS {ks}");
        let zeros = joint.iter().filter(|y| **y == 0.0).count() as f64 / n as f64;
        assert!((zeros - law.dry_mass()).abs() < 4.0 * (law.p() * law.dry_mass() / n as f64).sqrt() + 1e-12);
    }
}

#[test]
fn dry_observations_map_onto_thresholds() {
    let laws: Vec<GammaMixture> = [0.2, 0.5, 0.8, 1.0, 0.0]
        .iter()
        .map(|&p| GammaMixture::new(p, 2.0, 1.0).unwrap())
        .collect();
    let t = 40;
    let field = MarginalField::per_location(&laws, t);
    let mut rng = seeded(2);
    let values: Vec<f64> = (0..5 * t)
        .map(|k| laws[k / t].sample(&mut rng))
        .collect();
    let panel = RainPanel::from_values(5, t, values).unwrap();
    let x = obs_to_gaussian(&panel, &field).unwrap();
    let d = CensorThresholds::from_field(&field);
    for i in 0..5 {
        for s in 0..t {
            if panel.get(i, s) == 0.0 {
                assert_eq!(x[(i, s)], d.get(i, s));
            } else {
                assert!(x[(i, s)] > d.get(i, s));
            }
        }
    }
}

proptest! {
    #[test]
    fn censoring_is_idempotent(x in prop::collection::vec(-5.0f64..5.0, 1..20), seed in 0u64..1000) {
        let mut rng = seeded(seed);
        let d: Vec<f64> = x.iter().map(|_| rng.random_range(-3.0..3.0)).collect();
        let once = censor(&x, &d).unwrap();
        let twice = censor(&once.values, &d).unwrap();
        prop_assert_eq!(&once, &twice);
        for ((c, xi), di) in once.values.iter().zip(&x).zip(&d) {
            prop_assert!(c >= di);
            if xi > di {
                prop_assert_eq!(c, xi);
            }
        }
    }

    #[test]
    fn larger_thresholds_never_decrease(x in prop::collection::vec(-5.0f64..5.0, 1..20),
                                         seed in 0u64..1000, bump in 1e-9f64..2.0) {
        let mut rng = seeded(seed);
        let d: Vec<f64> = x.iter().map(|_| rng.random_range(-3.0..3.0)).collect();
        let higher: Vec<f64> = d.iter().map(|v| v + bump).collect();
        let a = censor(&x, &d).unwrap();
        let b = censor(&x, &higher).unwrap();
        for (lo, hi) in a.values.iter().zip(&b.values) {
            prop_assert!(hi >= lo);
        }
    }
}
