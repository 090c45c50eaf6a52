//! Subcommand implementations.

use std::time::Instant;

use rainfall_copula::copula::{joint_forecast_all, EnsembleBlock};
use rainfall_copula::diagnostics::{
    cross_correlation, ecdf_curve, energy_scores, mean_crps, rank_histogram, rmsb_mab, roc_auc, tau_grid,
    variogram_summary, VerificationBlock,
};
use rainfall_copula::estimation::estimate_theta as estimate;
use rainfall_copula::io::{self, fmt_f64};
use rainfall_copula::marginals::{jglm_fit, MarginalModel, Transform};
use rainfall_copula::spatial::{build_covariance, build_distance_matrix, LocationTable};
use rainfall_copula::synth::{simulate_dataset, Truth};
use rainfall_copula::RainPanel;
use serde_json::json;

use crate::config::{ConfigError, RunConfig, TransformKind};

/// A warning escalated to an error by `--strict`.
#[derive(Debug, thiserror::Error)]
#[error("strict mode: {0}")]
pub struct StrictViolation(pub String);

fn create_out(cfg: &RunConfig) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cfg.out).map_err(|source| rainfall_copula::Error::Io {
        path: cfg.out.clone(),
        source,
    })?;
    Ok(())
}

fn load_observations(cfg: &RunConfig) -> anyhow::Result<(LocationTable, RainPanel)> {
    let locations = io::read_locations(&cfg.locations_path())?;
    let panel = io::read_rainfall(&cfg.rainfall_path(), &locations)?;
    Ok((locations, panel))
}

pub fn synth(cfg: &RunConfig) -> anyhow::Result<()> {
    let spec = cfg.synth_spec()?;
    let data = simulate_dataset(&spec)?;
    create_out(cfg)?;
    io::write_locations(&cfg.out_file("locations.csv"), &data.locations)?;
    io::write_rainfall(&cfg.out_file("rainfall.csv"), &data.panel)?;
    io::write_field(&cfg.out_file("marginals.csv"), &data.panel, &data.field)?;
    if let Some(features) = &data.features {
        io::write_features(&cfg.out_file("features.csv"), &data.panel, features)?;
    }
    io::write_json(&cfg.out_file("truth.json"), &Truth::from_spec(&spec))?;
    Ok(())
}

pub fn fit_marginals(cfg: &RunConfig, strict: bool) -> anyhow::Result<()> {
    let (_, panel) = load_observations(cfg)?;
    let features = io::read_features(&cfg.features_path(), &panel)?;
    let transform = match cfg.transform {
        TransformKind::Identity => Transform::identity(features.cols()),
        TransformKind::Standardize => Transform::standardize(&features)?,
    };
    let report = jglm_fit(&features, &panel, &transform, &cfg.fit)?;
    let model = MarginalModel::new(transform, report.coefficients.clone())?;
    let field = model.field(&features, panel.n_locations(), panel.n_days())?;

    create_out(cfg)?;
    io::write_model(&cfg.out_file("model.txt"), &model)?;
    io::write_field(&cfg.out_file("marginals.csv"), &panel, &field)?;
    io::write_json(
        &cfg.out_file("fit.json"),
        &json!({
            "converged": report.converged,
            "iterations": report.iterations,
            "initial_loss": report.initial_loss,
            "final_loss": report.final_loss,
            "grad_norm": report.grad_norm,
            "transform": model.transform.name(),
            "observations": panel.n_locations() * panel.n_days(),
        }),
    )?;
    if !report.converged {
        let msg = format!(
            "marginal fit did not converge after {} iterations (gradient norm {:e})",
            report.iterations, report.grad_norm
        );
        if strict {
            return Err(StrictViolation(msg).into());
        }
        log::warn!("{msg}");
    }
    Ok(())
}

pub fn estimate_theta(cfg: &RunConfig, strict: bool) -> anyhow::Result<()> {
    let (locations, panel) = load_observations(cfg)?;
    let field = io::read_field_for(&cfg.marginals_path(), &panel)?;
    let distances = build_distance_matrix(&locations, &cfg.distance)?;
    let search = cfg.search();

    let started = Instant::now();
    let est = estimate(&panel, &field, &distances, &cfg.score, &search)?;
    eprintln!("estimate-theta: {:.2} s", started.elapsed().as_secs_f64());

    create_out(cfg)?;
    io::write_profile(&cfg.out_file("profile.csv"), &est.profile)?;
    io::write_json(
        &cfg.out_file("summary.json"),
        &json!({
            "theta_hat": est.theta_hat,
            "on_boundary": est.on_boundary,
            "lower": search.lower,
            "upper": search.upper,
            "grid_size": search.grid_size,
            "tol": search.tol,
            "nu": search.nu,
            "beta": cfg.score.beta,
            "m": cfg.score.m,
            "seed": cfg.score.seed,
            "day_subsample": cfg.score.day_subsample.to_string(),
            "location_subsample": cfg.score.location_subsample.to_string(),
            "profile_days": search.profile_days.to_string(),
            "refinement": est.refinement,
        }),
    )?;
    if est.on_boundary && strict {
        return Err(StrictViolation(format!(
            "score minimizer lies on the search boundary [{}, {}]",
            search.lower, search.upper
        ))
        .into());
    }
    Ok(())
}

fn theta_for_simulation(cfg: &RunConfig) -> anyhow::Result<f64> {
    if let Some(theta) = cfg.theta {
        return Ok(theta);
    }
    let path = cfg.out_file("summary.json");
    let text = std::fs::read_to_string(&path).map_err(|_| {
        ConfigError(format!(
            "no theta given and {} is not readable; set theta or run estimate-theta first",
            path.display()
        ))
    })?;
    let summary: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    summary["theta_hat"]
        .as_f64()
        .ok_or_else(|| ConfigError(format!("{}: missing numeric theta_hat", path.display())).into())
}

pub fn simulate(cfg: &RunConfig) -> anyhow::Result<()> {
    let theta = theta_for_simulation(cfg)?;
    let locations = io::read_locations(&cfg.locations_path())?;
    let ids = locations.ids();
    let (days, field) = io::read_field(&cfg.marginals_path(), &ids)?;
    let distances = build_distance_matrix(&locations, &cfg.distance)?;
    let cov = build_covariance(&distances, &cfg.kernel(theta)?)?;
    let blocks = joint_forecast_all(&cov, &field, cfg.score.m, cfg.score.seed)?;
    create_out(cfg)?;
    io::write_ensemble(&cfg.out_file("ensemble.csv"), &days, &ids, &blocks)?;
    Ok(())
}

/// Panel of one ensemble member across the ensemble's days.
fn member_panel(blocks: &[VerificationBlock], r: usize, ids: &[String], days: &[String]) -> anyhow::Result<RainPanel> {
    let (n, t) = (ids.len(), blocks.len());
    let mut values = vec![0.0; n * t];
    for (s, b) in blocks.iter().enumerate() {
        for (i, v) in b.member(r).iter().enumerate() {
            values[i * t + s] = *v;
        }
    }
    Ok(RainPanel::new(ids.to_vec(), days.to_vec(), values)?)
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn diagnose(cfg: &RunConfig) -> anyhow::Result<()> {
    let (locations, panel) = load_observations(cfg)?;
    let field = io::read_field_for(&cfg.marginals_path(), &panel)?;
    let ids = locations.ids();
    let ensemble: Vec<EnsembleBlock> = io::read_ensemble(&cfg.ensemble_path(), panel.day_labels(), &ids)?;
    let blocks = ensemble
        .into_iter()
        .map(|b| {
            let obs = panel.day(b.day);
            VerificationBlock::from_ensemble(b, obs)
        })
        .collect::<rainfall_copula::Result<Vec<_>>>()?;
    let distances = build_distance_matrix(&locations, &cfg.distance)?;
    create_out(cfg)?;

    let taus = tau_grid(cfg.tau_points)?;
    let mut auc = serde_json::Map::new();
    for &q in &cfg.q_levels {
        let curve = roc_auc(&field, &panel, q, &taus)?;
        let label = fmt_f64(q);
        io::write_table(
            &cfg.out_file(&format!("roc_q{label}.csv")),
            &["tau", "fpr", "tpr"],
            curve
                .points
                .iter()
                .map(|p| vec![opt_cell(p.tau), fmt_f64(p.fpr), fmt_f64(p.tpr)]),
        )?;
        auc.insert(
            label,
            json!({"auc": curve.auc, "events": curve.events, "non_events": curve.non_events}),
        );
    }

    let ranks = rank_histogram(&blocks, cfg.rank_bins, cfg.score.seed)?;
    io::write_table(
        &cfg.out_file("rank_hist.csv"),
        &["bin", "count", "frequency"],
        ranks
            .counts
            .iter()
            .zip(&ranks.frequencies)
            .enumerate()
            .map(|(k, (c, f))| vec![k.to_string(), c.to_string(), fmt_f64(*f)]),
    )?;

    let ecdf = ecdf_curve(&blocks, &cfg.ecdf_levels)?;
    io::write_table(
        &cfg.out_file("ecdf.csv"),
        &["level", "model", "observed"],
        ecdf
            .iter()
            .map(|p| vec![fmt_f64(p.level), fmt_f64(p.model), fmt_f64(p.observed)]),
    )?;

    let observed = cross_correlation(&panel, &locations, &cfg.center)?;
    let ens_days: Vec<String> = blocks.iter().map(|b| panel.day_labels()[b.day].clone()).collect();
    let m = blocks[0].m();
    let mut sums = vec![(0.0, 0usize); ids.len()];
    for r in 0..m {
        let member = member_panel(&blocks, r, &ids, &ens_days)?;
        let cc = cross_correlation(&member, &locations, &cfg.center)?;
        for (acc, c) in sums.iter_mut().zip(&cc.correlations) {
            if let Some(c) = c {
                acc.0 += c;
                acc.1 += 1;
            }
        }
    }
    let c = observed.center_index;
    io::write_table(
        &cfg.out_file("crosscorr.csv"),
        &["loc", "distance", "observed", "model"],
        (0..ids.len()).map(|i| {
            let model = (sums[i].1 > 0).then(|| sums[i].0 / sums[i].1 as f64);
            vec![
                ids[i].clone(),
                fmt_f64(distances.get(c, i)),
                opt_cell(observed.correlations[i]),
                opt_cell(model),
            ]
        }),
    )?;

    let crps = mean_crps(&blocks)?;
    let variogram = variogram_summary(&blocks, &distances, cfg.variogram_p)?;
    let bias = rmsb_mab(&blocks)?;
    let es = energy_scores(&blocks, cfg.score.beta)?;
    let es_mean = es.iter().sum::<f64>() / es.len() as f64;
    io::write_json(
        &cfg.out_file("diagnostics.json"),
        &json!({
            "days": blocks.len(),
            "locations": ids.len(),
            "members": m,
            "roc": auc,
            "rank_histogram": {
                "counts": ranks.counts,
                "chi_square": ranks.chi_square,
                "p_value": ranks.p_value,
            },
            "crps_mean": crps,
            "variogram": {"p": cfg.variogram_p, "mean": variogram.mean, "sum": variogram.sum},
            "rmsb": bias.rmsb,
            "mab": bias.mab,
            "energy_score": {"beta": cfg.score.beta, "mean": es_mean},
            "crosscorr_center": observed.center_id,
        }),
    )?;
    Ok(())
}
