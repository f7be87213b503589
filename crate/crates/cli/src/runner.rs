//! One runner per experiment kind: each turns a validated config into named
//! result tables plus the pass/fail records `--check` reports.

use anyhow::{Context, Result};
use rayon::prelude::*;

use scenery_homog_core::covariance::{CovarianceModel, ModelKind};
use scenery_homog_core::effective::{
    corrector_norm, rho, sigma2_lambda, sigma2_spectral, CorrectorSpec, DampingRegime,
};
use scenery_homog_core::field::{empirical_cov, FieldSampler, GridField, HarmonicField};
use scenery_homog_core::fk::{convergence_table, Alpha, ConvergenceSpec};
use scenery_homog_core::paths::{
    block_split, default_dt, sample_paths, scenery_integral, BrownianPath, PathSpec, SceneryRegime,
};
use scenery_homog_core::rng::RngStream;
use scenery_homog_core::spde::{cauchy_variance, moment_compare, MollifierSpec, MomentSpec};

use crate::check::CheckRecord;
use crate::config::{
    Backend, CorrectorConfig, EffectiveConfig, ExperimentConfig, FieldCheckConfig,
    HomogenizeConfig, SceneryConfig, SceneryRegimeName, SpdeConfig,
};
use crate::table::Table;

pub struct RunResult {
    /// Named tables, written as `<name>.csv` and `<name>.json`.
    pub tables: Vec<(String, Table)>,
    pub checks: Vec<CheckRecord>,
}

pub fn execute(config: &ExperimentConfig) -> Result<RunResult> {
    match config {
        ExperimentConfig::Effective(c) => run_effective(c),
        ExperimentConfig::Homogenize(c) => run_homogenize(c),
        ExperimentConfig::Scenery(c) => run_scenery(c),
        ExperimentConfig::Corrector(c) => run_corrector(c),
        ExperimentConfig::Spde(c) => run_spde(c),
        ExperimentConfig::FieldCheck(c) => run_field_check(c),
    }
}

fn regime_name(regime: DampingRegime) -> &'static str {
    match regime {
        DampingRegime::TimeMixing => "time_mixing",
        DampingRegime::Balanced => "balanced",
        DampingRegime::SpaceMixing => "space_mixing",
    }
}

fn is_unit_gaussian(model: &CovarianceModel) -> bool {
    matches!(model.kind(), ModelKind::GaussianSeparable)
        && model.amplitude() == 1.0
        && model.ell_t() == 1.0
        && model.ell_x() == 1.0
        && model.d() == 3
}

fn run_effective(cfg: &EffectiveConfig) -> Result<RunResult> {
    let model = &cfg.common.model;
    let mut table = Table::new(&[
        "regime",
        "rho",
        "sigma2",
        "rho_error",
        "evals",
        "sigma2_spectral",
        "spectral_error",
        "spectral_evals",
        "warnings",
    ]);
    let mut checks = Vec::new();

    for regime in [
        DampingRegime::TimeMixing,
        DampingRegime::Balanced,
        DampingRegime::SpaceMixing,
    ] {
        let name = regime_name(regime);
        let coeffs = rho(model, regime).with_context(|| format!("rho for {name}"))?;
        let spectral = match regime {
            DampingRegime::TimeMixing => None,
            _ => Some(sigma2_spectral(model, regime)?),
        };
        let (s_val, s_err, s_evals) = match &spectral {
            Some(q) => (
                format!("{:.16e}", q.value),
                format!("{:.16e}", q.error_estimate),
                q.evals.to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        table.push(vec![
            name.into(),
            coeffs.rho.into(),
            coeffs.sigma2.into(),
            coeffs.rho_error.into(),
            coeffs.evals.into(),
            s_val.into(),
            s_err.into(),
            s_evals.into(),
            coeffs.warnings.join("; ").into(),
        ]);

        checks.push(CheckRecord::le(
            &format!("{name}_sigma2_is_twice_rho"),
            (coeffs.sigma2 - 2.0 * coeffs.rho).abs(),
            0.0,
            "sigma2 column must equal 2 rho exactly",
        ));
        if let Some(q) = &spectral {
            checks.push(CheckRecord::le(
                &format!("{name}_two_route_identity"),
                (coeffs.sigma2 - q.value).abs() / coeffs.sigma2.abs().max(f64::MIN_POSITIVE),
                1e-6,
                "damping route 2 rho vs the spectral variance form, relative",
            ));
        }
    }

    if is_unit_gaussian(model) {
        let rho_tm = rho(model, DampingRegime::TimeMixing)?.rho;
        let rho_sm = rho(model, DampingRegime::SpaceMixing)?.rho;
        let sqrt_half_pi = (std::f64::consts::PI / 2.0).sqrt();
        checks.push(CheckRecord::le(
            "time_mixing_rho_matches_oracle",
            (rho_tm - sqrt_half_pi).abs() / sqrt_half_pi,
            1e-8,
            "unit model damping against the closed form sqrt(pi/2), relative",
        ));
        checks.push(CheckRecord::le(
            "space_mixing_rho_matches_oracle",
            (rho_sm - 2.0).abs() / 2.0,
            1e-8,
            "unit model damping against the closed form 2, relative",
        ));
    }

    Ok(RunResult {
        tables: vec![("coefficients".into(), table)],
        checks,
    })
}

fn harmonic_factory(
    model: CovarianceModel,
    j_modes: usize,
) -> impl Fn(RngStream) -> scenery_homog_core::Result<FieldSampler> {
    move |stream| Ok(FieldSampler::Harmonic(HarmonicField::synth(&model, j_modes, stream)?))
}

fn run_homogenize(cfg: &HomogenizeConfig) -> Result<RunResult> {
    let model = &cfg.common.model;
    let template = ConvergenceSpec {
        alpha: Alpha::Finite(cfg.alpha),
        t: cfg.t,
        x: cfg.x.clone(),
        n_paths: cfg.n_paths,
        n_fields: cfg.n_fields,
        dt: cfg.dt,
        stream: RngStream::new(cfg.common.master_seed),
    };
    let factory = harmonic_factory(model.clone(), cfg.j_modes);
    let rows = convergence_table(&factory, model, &cfg.f, &cfg.eps_schedule, &template)?;

    let mut table = Table::new(&[
        "epsilon",
        "re_mean",
        "im_mean",
        "re_stderr",
        "im_stderr",
        "u0_ref",
        "abs_err",
        "dt_delta",
        "n_paths",
        "n_fields",
    ]);
    for r in &rows {
        table.push(vec![
            r.epsilon.into(),
            r.re_mean.into(),
            r.im_mean.into(),
            r.re_stderr.into(),
            r.im_stderr.into(),
            r.u0_ref.into(),
            r.abs_err.into(),
            r.dt_delta.into(),
            r.n_paths.into(),
            r.n_fields.into(),
        ]);
    }

    let mut checks = Vec::new();
    for (i, pair) in rows.windows(2).enumerate() {
        let se = |r: &scenery_homog_core::fk::ConvergenceRow| r.re_stderr.hypot(r.im_stderr);
        checks.push(CheckRecord::le(
            &format!("abs_err_decreasing_step_{i}"),
            pair[1].abs_err,
            pair[0].abs_err + 3.0 * (se(&pair[0]) + se(&pair[1])),
            format!(
                "|u_eps - u0| from eps = {} to eps = {}, slack 3 combined stderr",
                pair[0].epsilon, pair[1].epsilon
            ),
        ));
    }

    Ok(RunResult {
        tables: vec![("convergence".into(), table)],
        checks,
    })
}

/// Per-field scenery tallies, folded sequentially after the parallel map so
/// the result is independent of the worker count.
struct SceneryFieldTally {
    mean: f64,
    second_moment: f64,
    block_remainder_sq: f64,
    blocks_sq: f64,
    n_blocks: u64,
    delta_t: f64,
}

fn run_scenery(cfg: &SceneryConfig) -> Result<RunResult> {
    let model = &cfg.common.model;
    let d = model.d();
    let master = RngStream::new(cfg.common.master_seed);

    let build_regime = |eps: f64| -> Result<SceneryRegime> {
        Ok(match cfg.regime {
            SceneryRegimeName::TimeMixing => SceneryRegime::time_mixing(cfg.alpha.unwrap(), eps)?,
            SceneryRegimeName::SpaceMixing => SceneryRegime::space_mixing(cfg.alpha.unwrap(), eps)?,
            SceneryRegimeName::WhiteNoise => SceneryRegime::white_noise(eps)?,
        })
    };
    let target_rate = match cfg.regime {
        SceneryRegimeName::WhiteNoise => model.r_time_integral_radial(0.0),
        _ => rho(model, DampingRegime::for_alpha(cfg.alpha.unwrap()))?.sigma2,
    };
    let target = target_rate * cfg.t;

    let mut table = Table::new(&[
        "epsilon",
        "dt",
        "mean",
        "mean_stderr",
        "variance",
        "variance_stderr",
        "target",
        "abs_dev",
        "n_paths",
        "n_fields",
    ]);
    let mut block_table = Table::new(&[
        "epsilon",
        "gamma1",
        "gamma2",
        "n_blocks",
        "delta_t",
        "blocks_sq_mean",
        "remainder_sq_mean",
        "n_paths",
        "n_fields",
    ]);
    // The split diagnostic re-walks every path, so it runs on a capped slice
    // of the ensemble; the trend is what matters, not the variance floor.
    let block_paths = cfg.n_paths.min(400);

    let mut deviations = Vec::with_capacity(cfg.eps_schedule.len());
    let mut dev_tol = Vec::with_capacity(cfg.eps_schedule.len());
    let mut remainders = Vec::with_capacity(cfg.eps_schedule.len());

    for &eps in &cfg.eps_schedule {
        let regime = build_regime(eps)?;
        let dt = cfg.dt.unwrap_or_else(|| default_dt(model, &regime));
        let horizon = cfg.t / (eps * eps);

        // Every eps reuses one set of field and path streams, so the trend
        // across the schedule is a coupled comparison instead of drowning in
        // field-ensemble noise.
        let tallies: Vec<SceneryFieldTally> = (0..cfg.n_fields)
            .into_par_iter()
            .map(|k| -> Result<SceneryFieldTally> {
                let sampler =
                    FieldSampler::Harmonic(HarmonicField::synth(model, cfg.j_modes, master.derive(k))?);
                let paths = sample_paths(&PathSpec {
                    d,
                    horizon,
                    dt,
                    n_paths: cfg.n_paths,
                    stream: master.derive(1_000_000_000 + k),
                })?;
                let mut sum = 0.0;
                let mut sum_sq = 0.0;
                let mut rem_sq = 0.0;
                let mut blk_sq = 0.0;
                let mut n_blocks = 0;
                let mut delta_t = 0.0;
                for i in 0..cfg.n_paths {
                    let path = paths.path(i);
                    let x = scenery_integral(&sampler, &path, &regime, cfg.t)?;
                    sum += x;
                    sum_sq += x * x;
                    if let Some((g1, g2)) = cfg.block {
                        if i < block_paths {
                            let split = block_split(&sampler, &path, &regime, g1, g2, cfg.t)?;
                            rem_sq += split.gaps * split.gaps + split.tail * split.tail;
                            blk_sq += split.blocks * split.blocks;
                            n_blocks = split.n_blocks;
                            delta_t = split.delta_t;
                        }
                    }
                }
                let n = cfg.n_paths as f64;
                Ok(SceneryFieldTally {
                    mean: sum / n,
                    second_moment: sum_sq / n,
                    block_remainder_sq: rem_sq / block_paths as f64,
                    blocks_sq: blk_sq / block_paths as f64,
                    n_blocks,
                    delta_t,
                })
            })
            .collect::<Result<_>>()?;

        let nf = cfg.n_fields as f64;
        let mean: f64 = tallies.iter().map(|t| t.mean).sum::<f64>() / nf;
        let m2: f64 = tallies.iter().map(|t| t.second_moment).sum::<f64>() / nf;
        let variance = m2 - mean * mean;
        let mean_var = tallies.iter().map(|t| (t.mean - mean).powi(2)).sum::<f64>() / (nf - 1.0).max(1.0);
        let mean_stderr = (mean_var / nf).sqrt();
        let m2_var = tallies.iter().map(|t| (t.second_moment - m2).powi(2)).sum::<f64>()
            / (nf - 1.0).max(1.0);
        let variance_stderr = (m2_var / nf).sqrt();
        let abs_dev = (variance - target).abs();

        table.push(vec![
            eps.into(),
            dt.into(),
            mean.into(),
            mean_stderr.into(),
            variance.into(),
            variance_stderr.into(),
            target.into(),
            abs_dev.into(),
            cfg.n_paths.into(),
            cfg.n_fields.into(),
        ]);
        deviations.push(abs_dev);
        dev_tol.push(3.0 * variance_stderr);

        if let Some((g1, g2)) = cfg.block {
            let rem: f64 = tallies.iter().map(|t| t.block_remainder_sq).sum::<f64>() / nf;
            let blk: f64 = tallies.iter().map(|t| t.blocks_sq).sum::<f64>() / nf;
            block_table.push(vec![
                eps.into(),
                g1.into(),
                g2.into(),
                tallies[0].n_blocks.into(),
                tallies[0].delta_t.into(),
                blk.into(),
                rem.into(),
                block_paths.into(),
                cfg.n_fields.into(),
            ]);
            remainders.push(rem);
        }
    }

    let mut checks = Vec::new();
    if deviations.len() >= 2 {
        checks.push(CheckRecord::le(
            "variance_deviation_shrinks",
            *deviations.last().unwrap(),
            deviations[0],
            "|Var - sigma2 t| at the finest eps vs the coarsest",
        ));
    }
    checks.push(CheckRecord::le(
        "variance_within_3_stderr_at_final_eps",
        *deviations.last().unwrap(),
        *dev_tol.last().unwrap(),
        "finite-eps variance against the limit, 3 stderr of the field ensemble",
    ));
    for (i, pair) in remainders.windows(2).enumerate() {
        checks.push(CheckRecord::le(
            &format!("block_remainder_decreasing_step_{i}"),
            pair[1],
            pair[0],
            "E[(gaps + tail)^2] must shrink with eps",
        ));
    }

    let mut tables = vec![("variance".into(), table)];
    if cfg.block.is_some() {
        tables.push(("blocks".into(), block_table));
    }
    Ok(RunResult { tables, checks })
}

fn run_corrector(cfg: &CorrectorConfig) -> Result<RunResult> {
    let model = &cfg.common.model;
    let limit = rho(model, DampingRegime::for_alpha(cfg.alpha))?.sigma2;

    let mut table = Table::new(&[
        "lambda",
        "epsilon",
        "alpha",
        "corrector_norm",
        "norm_error",
        "sigma2_lambda",
        "sigma2_error",
        "sigma2_limit",
        "gap",
    ]);
    let mut norms = Vec::new();
    let mut sigmas = Vec::new();
    for &lambda in &cfg.lambda_schedule {
        let epsilon = lambda.sqrt();
        let spec = CorrectorSpec::coupled(epsilon, cfg.alpha)?;
        let norm = corrector_norm(model, &spec)?;
        let s2 = sigma2_lambda(model, &spec)?;
        let gap = limit - s2.value;
        table.push(vec![
            lambda.into(),
            epsilon.into(),
            cfg.alpha.into(),
            norm.value.into(),
            norm.error_estimate.into(),
            s2.value.into(),
            s2.error_estimate.into(),
            limit.into(),
            gap.into(),
        ]);
        norms.push(norm.value);
        sigmas.push(s2.value);
    }

    let mut checks = Vec::new();
    for (i, pair) in norms.windows(2).enumerate() {
        checks.push(CheckRecord::le(
            &format!("corrector_norm_decreasing_step_{i}"),
            pair[1],
            pair[0],
            "lambda-weighted corrector norm must fall as lambda does",
        ));
    }
    for (i, pair) in sigmas.windows(2).enumerate() {
        checks.push(CheckRecord::ge(
            &format!("sigma2_lambda_increasing_step_{i}"),
            pair[1],
            pair[0],
            "truncated variance must rise toward its limit",
        ));
    }
    if norms.len() >= 2 {
        checks.push(CheckRecord::le(
            "corrector_norm_final_fraction",
            norms.last().unwrap() / norms[0],
            0.05,
            "final lambda<Phi,Phi> as a fraction of the initial one",
        ));
    }
    checks.push(CheckRecord::le(
        "sigma2_gap_final",
        (limit - sigmas.last().unwrap()) / limit,
        0.02,
        "relative distance of the truncated variance from its limit at the final lambda",
    ));

    Ok(RunResult {
        tables: vec![("corrector_scan".into(), table)],
        checks,
    })
}

fn run_spde(cfg: &SpdeConfig) -> Result<RunResult> {
    let model = &cfg.common.model;
    let master = RngStream::new(cfg.common.master_seed);
    let factory = harmonic_factory(model.clone(), cfg.j_modes);

    let specs: Vec<MomentSpec> = cfg
        .moments
        .iter()
        .enumerate()
        .map(|(i, &(n1, n2))| MomentSpec {
            n1,
            n2,
            n_path_tuples: cfg.n_path_tuples,
            t: cfg.t,
            x: cfg.x.clone(),
            dt: cfg.dt,
            stream: master.derive(i as u64),
        })
        .collect();
    let rows = moment_compare(&factory, model, &cfg.f, &specs, &cfg.eps_schedule, cfg.n_fields)?;

    let mut table = Table::new(&[
        "epsilon",
        "n1",
        "n2",
        "re_moment",
        "im_moment",
        "re_stderr",
        "im_stderr",
        "limit_re",
        "limit_im",
        "limit_stderr",
        "abs_diff",
        "n_fields",
    ]);
    for r in &rows {
        table.push(vec![
            r.epsilon.into(),
            (r.n1 as u64).into(),
            (r.n2 as u64).into(),
            r.re_moment.into(),
            r.im_moment.into(),
            r.re_stderr.into(),
            r.im_stderr.into(),
            r.limit_re.into(),
            r.limit_im.into(),
            r.limit_stderr.into(),
            r.abs_diff.into(),
            r.n_fields.into(),
        ]);
    }

    let mut checks = Vec::new();
    let n_eps = cfg.eps_schedule.len();
    for (m_idx, &(n1, n2)) in cfg.moments.iter().enumerate() {
        let slice = &rows[m_idx * n_eps..(m_idx + 1) * n_eps];
        for (i, pair) in slice.windows(2).enumerate() {
            let se = |r: &scenery_homog_core::spde::MomentRow| {
                r.re_stderr.hypot(r.im_stderr) + r.limit_stderr
            };
            checks.push(CheckRecord::le(
                &format!("moment_{n1}_{n2}_gap_decreasing_step_{i}"),
                pair[1].abs_diff,
                pair[0].abs_diff + 3.0 * (se(&pair[0]) + se(&pair[1])),
                format!(
                    "|moment_eps - limit| from eps = {} to eps = {}, slack 3 combined stderr",
                    pair[0].epsilon, pair[1].epsilon
                ),
            ));
        }
    }

    let mut tables = vec![("moments".into(), table)];
    if let Some(cauchy) = cfg.cauchy {
        let n_steps = (cfg.t / cauchy.dt).ceil().max(1.0) as usize;
        let path = BrownianPath::at_rest(model.d(), cauchy.dt, n_steps)?;
        let spec = MollifierSpec { eps_moll: cauchy.eps_moll };
        let value = cauchy_variance(model, &spec, &path, cfg.t)?;
        let reference = model.r_time_integral_radial(0.0) * cfg.t;
        let rel_dev = (value - reference).abs() / reference;
        let mut cauchy_table = Table::new(&[
            "eps_moll",
            "dt",
            "t",
            "value",
            "reference",
            "rel_dev",
        ]);
        cauchy_table.push(vec![
            cauchy.eps_moll.into(),
            cauchy.dt.into(),
            cfg.t.into(),
            value.into(),
            reference.into(),
            rel_dev.into(),
        ]);
        tables.push(("cauchy".into(), cauchy_table));
        checks.push(CheckRecord::le(
            "cauchy_variance_within_2pct",
            rel_dev,
            0.02,
            "mollified quadratic variation on the frozen path vs the white-noise rate",
        ));
    }

    Ok(RunResult { tables, checks })
}

fn default_lags(model: &CovarianceModel) -> Vec<(f64, Vec<f64>)> {
    let d = model.d();
    let lt = model.ell_t();
    let lx = model.ell_x();
    let e1 = |s: f64| {
        let mut v = vec![0.0; d];
        v[0] = s;
        v
    };
    vec![
        (0.0, e1(0.0)),
        (0.0, e1(0.5 * lx)),
        (0.0, e1(lx)),
        (0.0, e1(2.0 * lx)),
        (0.5 * lt, e1(0.0)),
        (lt, e1(0.0)),
        (2.0 * lt, e1(0.0)),
        (0.5 * lt, e1(0.5 * lx)),
        (lt, e1(lx)),
        (2.0 * lt, e1(2.0 * lx)),
    ]
}

fn run_field_check(cfg: &FieldCheckConfig) -> Result<RunResult> {
    let model = &cfg.common.model;
    let master = RngStream::new(cfg.common.master_seed);
    let lags = cfg.lags.clone().unwrap_or_else(|| default_lags(model));

    let mut table = Table::new(&[
        "backend",
        "t_lag",
        "x_lag",
        "estimate",
        "stderr",
        "exact",
        "z",
        "n_realizations",
    ]);
    let mut checks = Vec::new();

    for (b_idx, backend) in cfg.backends.iter().enumerate() {
        let factory: Box<dyn Fn(RngStream) -> scenery_homog_core::Result<FieldSampler>> =
            match backend {
                Backend::Harmonic => {
                    let model = model.clone();
                    let j = cfg.j_modes;
                    Box::new(move |s| Ok(FieldSampler::Harmonic(HarmonicField::synth(&model, j, s)?)))
                }
                Backend::Grid => {
                    let model = model.clone();
                    let grid = cfg.grid.clone().expect("validated");
                    Box::new(move |s| Ok(FieldSampler::Grid(GridField::synth(&model, &grid, s)?)))
                }
            };
        let estimates = empirical_cov(&factory, &lags, cfg.n_realizations, master.derive(b_idx as u64))?;

        let mut worst: (f64, String) = (0.0, String::new());
        for est in &estimates {
            let exact = model.r_eval(est.t_lag, &est.x_lag);
            let z = (est.estimate - exact) / est.stderr;
            let x_str = est
                .x_lag
                .iter()
                .map(|c| format!("{c:.16e}"))
                .collect::<Vec<_>>()
                .join(";");
            if z.abs() > worst.0 {
                worst = (z.abs(), format!("t_lag = {}, x_lag = [{}]", est.t_lag, x_str));
            }
            table.push(vec![
                backend.name().into(),
                est.t_lag.into(),
                x_str.into(),
                est.estimate.into(),
                est.stderr.into(),
                exact.into(),
                z.into(),
                cfg.n_realizations.into(),
            ]);
        }
        checks.push(CheckRecord::le(
            &format!("{}_covariance_within_3_stderr", backend.name()),
            worst.0,
            3.0,
            format!("largest |z| over the lag set, at {}", worst.1),
        ));
    }

    Ok(RunResult {
        tables: vec![("covariance".into(), table)],
        checks,
    })
}
