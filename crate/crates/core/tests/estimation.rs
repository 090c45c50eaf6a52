//! Energy score, scoring-rule objective and lengthscale search.

use proptest::prelude::*;
use rainfall_copula::estimation::{
    day_scores, energy_score_unbiased, estimate_theta, sr_objective, ScoreConfig, ScoringData, Subsample,
    ThetaSearchSpec,
};
use rainfall_copula::marginals::GammaMixture;
use rainfall_copula::numerics::DenseMatrix;
use rainfall_copula::rng::seeded;
use rainfall_copula::spatial::MaternParams;
use rainfall_copula::synth::{simulate_dataset, MarginalGenerator, SynthSpec, SyntheticDataset};
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_samples(m: usize, n: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
}

fn dataset(n: usize, t: usize, seed: u64) -> SyntheticDataset {
    simulate_dataset(&SynthSpec {
        n_locations: n,
        n_days: t,
        seed,
        ..SynthSpec::default()
    })
    .unwrap()
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (mean, v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn energy_score_hand_examples() {
    let s = DenseMatrix::from_row_major(2, 1, vec![0.0, 2.0]).unwrap();
    assert_eq!(energy_score_unbiased(&s, &[1.0], 1.0).unwrap(), 0.0);
    let s = DenseMatrix::from_row_major(4, 3, [0.5, -1.0, 2.0].repeat(4)).unwrap();
    assert_eq!(energy_score_unbiased(&s, &[0.5, -1.0, 2.0], 0.5).unwrap(), 0.0);
    // samples {(0,0), (3,4)}, obs (0,0), β = 1: (2/2)(0 + 5) − (1/2)(5 + 5) = 0
    let s = DenseMatrix::from_row_major(2, 2, vec![0.0, 0.0, 3.0, 4.0]).unwrap();
    assert_eq!(energy_score_unbiased(&s, &[0.0, 0.0], 1.0).unwrap(), 0.0);
    // same samples, obs (3,0): (2/2)(3 + 4) − 5 = 2
    assert_eq!(energy_score_unbiased(&s, &[3.0, 0.0], 1.0).unwrap(), 2.0);
}

proptest! {
    #[test]
    fn energy_score_is_nonnegative_for_beta_up_to_one(
        m in 2usize..8,
        n in 1usize..5,
        beta in 0.05f64..=1.0,
        seed in any::<u64>(),
    ) {
        let mut rng = seeded(seed);
        let s = DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-5.0..5.0));
        let obs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        prop_assert!(energy_score_unbiased(&s, &obs, beta).unwrap() >= -1e-12);
    }
}

#[test]
fn energy_score_estimator_is_unbiased() {
    let obs = [0.3, -0.8, 1.1];
    let mut rng = seeded(77);
    let draws: Vec<f64> = (0..10_000)
        .map(|_| energy_score_unbiased(&gaussian_samples(5, 3, &mut rng), &obs, 0.5).unwrap())
        .collect();
    assert!(draws.iter().all(|&v| v >= 0.0));
    let (mean, var) = mean_var(&draws);

    // reference from 10⁶ independent samples: the first term from every
    // sample, the pairwise term from disjoint consecutive pairs
    let big = 1_000_000;
    let x = gaussian_samples(big, 3, &mut rng);
    let norm = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().powf(0.25);
    let to_obs: Vec<f64> = (0..big).map(|j| norm(x.row(j), &obs)).collect();
    let pairs: Vec<f64> = (0..big / 2).map(|j| norm(x.row(2 * j), x.row(2 * j + 1))).collect();
    let (m1, v1) = mean_var(&to_obs);
    let (m2, v2) = mean_var(&pairs);
    let reference = 2.0 * m1 - m2;
    let se = (var / draws.len() as f64 + 4.0 * v1 / big as f64 + v2 / (big / 2) as f64).sqrt();
    assert!((mean - reference).abs() < 3.0 * se, "{mean} vs {reference} (se {se})");
}

#[test]
fn estimator_variance_shrinks_with_m() {
    let obs = [0.0, 0.5];
    let mut rng = seeded(3);
    let variance = |m: usize, rng: &mut _| {
        let v: Vec<f64> = (0..4000)
            .map(|_| energy_score_unbiased(&gaussian_samples(m, 2, rng), &obs, 0.5).unwrap())
            .collect();
        mean_var(&v)
    };
    let (a, b, c) = (variance(2, &mut rng), variance(8, &mut rng), variance(32, &mut rng));
    assert!(a.1 > b.1 && b.1 > c.1, "{a:?} {b:?} {c:?}");
    // same expectation at every m
    for (mean, var) in [a, b] {
        assert!((mean - c.0).abs() < 4.0 * (var / 4000.0 + c.1 / 4000.0).sqrt());
    }
}

#[test]
fn objective_is_additive_over_days() {
    let d = dataset(6, 12, 1);
    let all = ScoreConfig {
        m: 6,
        day_subsample: Subsample::All,
        seed: 5,
        ..ScoreConfig::default()
    };
    let total = sr_objective(450.0, &d.panel, &d.field, &d.distances, &all, 3.5).unwrap();
    let summed: f64 = (0..12)
        .map(|day| {
            let one = ScoreConfig {
                day_subsample: Subsample::Indices(vec![day]),
                ..all.clone()
            };
            sr_objective(450.0, &d.panel, &d.field, &d.distances, &one, 3.5).unwrap()
        })
        .sum();
    assert_eq!(total, summed);
}

#[test]
fn location_order_within_the_selected_set_is_irrelevant() {
    let d = dataset(7, 10, 2);
    let base = ScoreConfig {
        m: 5,
        day_subsample: Subsample::All,
        ..ScoreConfig::default()
    };
    let permuted = ScoreConfig {
        location_subsample: Subsample::Indices(vec![4, 0, 6, 2, 1, 5, 3]),
        ..base.clone()
    };
    let a = sr_objective(300.0, &d.panel, &d.field, &d.distances, &base, 3.5).unwrap();
    let b = sr_objective(300.0, &d.panel, &d.field, &d.distances, &permuted, 3.5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn objective_is_bitwise_repeatable_across_thread_counts() {
    let d = dataset(10, 40, 3);
    let cfg = ScoreConfig {
        m: 8,
        day_subsample: Subsample::Count(16),
        location_subsample: Subsample::Count(6),
        seed: 9,
        ..ScoreConfig::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sr_objective(450.0, &d.panel, &d.field, &d.distances, &cfg, 3.5).unwrap())
    };
    let one = run(1);
    assert_eq!(one.to_bits(), run(1).to_bits());
    assert_eq!(one.to_bits(), run(4).to_bits());
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

#[test]
fn random_location_subsets_average_to_exhaustive_mean() {
    let d = dataset(6, 1, 4);
    let prep = ScoringData::new(&d.panel, &d.field, &d.distances).unwrap();
    let params = MaternParams::with_theta(450.0).unwrap();
    let all = subsets(6, 3);
    assert_eq!(all.len(), 20);
    let reps = 600;
    let mut diffs = Vec::with_capacity(reps);
    let mut chosen = vec![0usize; all.len()];
    for seed in 0..reps as u64 {
        let cfg = ScoreConfig {
            m: 4,
            day_subsample: Subsample::All,
            location_subsample: Subsample::Count(3),
            seed,
            ..ScoreConfig::default()
        };
        let random = day_scores(&prep, &params, &[0], &cfg).unwrap().total();
        let picked = cfg.select_locations(6, 0).unwrap();
        chosen[all.iter().position(|s| *s == picked).unwrap()] += 1;
        let exhaustive = all
            .iter()
            .map(|s| {
                let fixed = ScoreConfig {
                    location_subsample: Subsample::Indices(s.clone()),
                    ..cfg.clone()
                };
                day_scores(&prep, &params, &[0], &fixed).unwrap().total()
            })
            .sum::<f64>()
            / all.len() as f64;
        diffs.push(random - exhaustive);
    }
    let (mean, var) = mean_var(&diffs);
    assert!(mean.abs() < 3.0 * (var / reps as f64).sqrt(), "bias {mean}");
    let expected = reps as f64 / 20.0;
    let chi2: f64 = chosen.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 0.1% critical value of χ² with 19 degrees of freedom
    assert!(chi2 < 43.82, "subset frequencies {chosen:?}");
}

#[test]
fn objective_is_lowest_near_the_true_lengthscale() {
    let d = dataset(30, 200, 6);
    let cfg = ScoreConfig {
        day_subsample: Subsample::All,
        ..ScoreConfig::default()
    };
    let f = |theta| sr_objective(theta, &d.panel, &d.field, &d.distances, &cfg, 3.5).unwrap();
    let at_truth = f(450.0);
    assert!(at_truth < f(450.0 / 4.0));
    assert!(at_truth < f(4.0 * 450.0));
}

#[test]
fn lengthscale_is_recovered_with_unimodal_profile() {
    let d = dataset(50, 500, 0);
    let est = estimate_theta(&d.panel, &d.field, &d.distances, &ScoreConfig::default(), &ThetaSearchSpec::default())
        .unwrap();
    assert!((est.theta_hat - 450.0).abs() <= 0.15 * 450.0, "theta_hat = {}", est.theta_hat);
    assert!(!est.on_boundary);
    assert_eq!(est.profile.len(), 13);
    assert!(est.profile.iter().all(|p| p.score.is_finite() && p.mc_stderr > 0.0));

    let smooth: Vec<f64> = est.profile.windows(3).map(|w| (w[0].score + w[1].score + w[2].score) / 3.0).collect();
    let signs: Vec<bool> = smooth.windows(2).map(|w| w[1] > w[0]).collect();
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(changes, 1, "smoothed profile {smooth:?}");
}

#[test]
fn uncensored_lengthscale_is_recovered() {
    let d = simulate_dataset(&SynthSpec {
        marginals: MarginalGenerator::Homogeneous(GammaMixture::new(1.0, 3.0, 1.2).unwrap()),
        seed: 1,
        ..SynthSpec::default()
    })
    .unwrap();
    let est = estimate_theta(&d.panel, &d.field, &d.distances, &ScoreConfig::default(), &ThetaSearchSpec::default())
        .unwrap();
    assert!((est.theta_hat - 450.0).abs() <= 0.15 * 450.0, "theta_hat = {}", est.theta_hat);
}

#[test]
fn boundary_minimizer_is_flagged() {
    let d = dataset(20, 100, 8);
    let search = ThetaSearchSpec {
        lower: 1500.0,
        upper: 3000.0,
        grid_size: 4,
        tol: 50.0,
        ..ThetaSearchSpec::default()
    };
    let cfg = ScoreConfig {
        m: 10,
        ..ScoreConfig::default()
    };
    let est = estimate_theta(&d.panel, &d.field, &d.distances, &cfg, &search).unwrap();
    assert!(est.on_boundary);
    assert!(est.theta_hat < 2000.0);
}

#[test]
fn invalid_configurations_are_rejected() {
    let d = dataset(4, 5, 0);
    let bad_beta = ScoreConfig {
        beta: 2.0,
        ..ScoreConfig::default()
    };
    assert!(sr_objective(450.0, &d.panel, &d.field, &d.distances, &bad_beta, 3.5).is_err());
    let bad_m = ScoreConfig {
        m: 1,
        ..ScoreConfig::default()
    };
    assert!(sr_objective(450.0, &d.panel, &d.field, &d.distances, &bad_m, 3.5).is_err());
    let bad_search = ThetaSearchSpec {
        lower: 800.0,
        upper: 200.0,
        ..ThetaSearchSpec::default()
    };
    assert!(estimate_theta(&d.panel, &d.field, &d.distances, &ScoreConfig::default(), &bad_search).is_err());
    assert!("many".parse::<Subsample>().is_err());
    assert_eq!("All".parse::<Subsample>().unwrap(), Subsample::All);
    assert_eq!("12".parse::<Subsample>().unwrap(), Subsample::Count(12));
}
