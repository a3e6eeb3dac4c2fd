//! Experiment drivers behind the CLI subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use esprit_precoder_core::design::{design, phase_increment_profile, variance, DesignOutput};
use esprit_precoder_core::evaluation::{build_strategies, BenchmarkPlan};
use esprit_precoder_core::{BenchmarkPoint, CodebookSpec, PrecoderEntry, Scenario};

use crate::config::{point_scenario, ExperimentConfig, ExperimentKind};
use crate::output::{self, num, opt, OutputSet};

/// Thread pool for sweep points and Monte Carlo trials. `None` uses all cores.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        b = b.num_threads(t);
    }
    Ok(b.build()?)
}

/// Run `body` against a fresh output set; on error nothing is left behind.
fn with_outputs(cfg: &ExperimentConfig, body: impl FnOnce(&mut OutputSet) -> Result<()>) -> Result<Vec<PathBuf>> {
    let mut out = OutputSet::create(&cfg.out_dir, cfg.seed, &cfg.hash())?;
    match body(&mut out) {
        Ok(()) => out.commit(),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn eta_tag(eta: f64) -> String {
    format!("eta_{eta:e}")
}

fn write_design(out: &mut OutputSet, cfg: &ExperimentConfig, tag: &str, d: &DesignOutput) -> Result<()> {
    let grid = cfg.angle_grid()?;
    let m = d.precoder.num_beams();
    out.csv(
        &format!("precoder_{tag}.csv"),
        &output::precoder_header(m),
        output::precoder_rows(&d.precoder),
    )?;
    let (h, rows) = output::beampattern_table(&cfg.array, &d.precoder, &grid)?;
    out.csv(&format!("beampattern_{tag}.csv"), &h, rows)?;
    let (h, rows) = output::phase_table(&d.precoder)?;
    out.csv(&format!("phase_increments_{tag}.csv"), &h, rows)?;
    let (h, rows) = output::trace_table(&d.trace);
    out.csv(&format!("trace_{tag}.csv"), &h, rows)
}

/// `design` subcommand: one design (`beampattern`) or one per η (`eta-sweep`).
pub fn cmd_design(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Vec<PathBuf>> {
    let etas = match cfg.experiment {
        ExperimentKind::Beampattern => vec![cfg.design.eta],
        ExperimentKind::EtaSweep => cfg.sweep.values.clone(),
        other => bail!("design runs beampattern or eta-sweep experiments, not {other:?}"),
    };
    let base = cfg.baseline_precoder()?;
    let grid = cfg.angle_grid()?;
    info!(
        "designing {} precoder(s), N = {}, M = {}",
        etas.len(),
        base.num_antennas(),
        base.num_beams()
    );
    let designs: Vec<DesignOutput> = pool.install(|| {
        etas.par_iter()
            .map(|&eta| design(&cfg.array, &base, &cfg.design.with_eta(eta), &grid))
            .collect::<std::result::Result<Vec<_>, _>>()
    })?;

    with_outputs(cfg, |out| {
        out.csv(
            "precoder_baseline.csv",
            &output::precoder_header(base.num_beams()),
            output::precoder_rows(&base.normalized()?),
        )?;
        let (h, rows) = output::beampattern_table(&cfg.array, &base.normalized()?, &grid)?;
        out.csv("beampattern_baseline.csv", &h, rows)?;
        for (eta, d) in etas.iter().zip(&designs) {
            write_design(out, cfg, &eta_tag(*eta), d)?;
        }
        if cfg.experiment == ExperimentKind::EtaSweep {
            let header = [
                "eta",
                "sip_error",
                "sip_error_normalized",
                "synthesis_error",
                "objective",
                "outer_iterations",
                "phase_increment_variance",
            ]
            .map(String::from);
            let rows = etas
                .iter()
                .zip(&designs)
                .map(|(eta, d)| {
                    let last = d.trace.last().expect("trace has the initial record");
                    let profile = phase_increment_profile(d.precoder.matrix(), 0)?;
                    Ok(vec![
                        num(*eta),
                        num(last.sip_error),
                        num(d.fit.residual),
                        num(last.synthesis_error),
                        num(last.objective),
                        (d.trace.records.len() - 1).to_string(),
                        num(variance(&profile)),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            out.csv("sip_vs_eta.csv", &header, rows)?;
        }
        Ok(())
    })
}

/// `beampattern` subcommand: magnitudes of a given precoder file, or of the
/// three compared strategies.
pub fn cmd_beampattern(cfg: &ExperimentConfig, precoder: Option<&Path>) -> Result<Vec<PathBuf>> {
    let grid = cfg.angle_grid()?;
    let entries: Vec<(String, esprit_precoder_core::Precoder)> = match precoder {
        Some(path) => {
            let f = output::read_precoder(path)?;
            if f.num_antennas() != cfg.array.num_elements {
                bail!(
                    "{} has {} rows but the array has {} elements",
                    path.display(),
                    f.num_antennas(),
                    cfg.array.num_elements
                );
            }
            vec![("input".to_string(), f)]
        }
        None => build_strategies(&cfg.array, &cfg.codebook, &cfg.design, &grid)?
            .into_iter()
            .map(|e| (e.name, e.precoder))
            .collect(),
    };
    with_outputs(cfg, |out| {
        for (name, f) in &entries {
            let (h, rows) = output::beampattern_table(&cfg.array, f, &grid)?;
            out.csv(&format!("beampattern_{name}.csv"), &h, rows)?;
        }
        Ok(())
    })
}

/// One evaluated sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    /// Prior half-width, `aod-sweep` only.
    pub half_width_deg: Option<f64>,
    pub report: BenchmarkPoint,
}

fn benchmark(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    entries: &[PrecoderEntry],
    pool: &rayon::ThreadPool,
) -> Result<BenchmarkPoint> {
    let plan = BenchmarkPlan::new(&cfg.array, scenario, entries, cfg.benchmark_settings())?;
    let results = pool.install(|| (0..plan.trials()).into_par_iter().map(|t| plan.run_trial(t)).collect());
    Ok(plan.aggregate(results)?)
}

/// Evaluate the three strategies over the configured sweep.
pub fn evaluate_sweep(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Vec<SweepPoint>> {
    let grid = cfg.angle_grid()?;
    match cfg.experiment {
        ExperimentKind::SnrSweep | ExperimentKind::TwoPath => {
            // The codebook does not depend on SNR: design once.
            let entries = build_strategies(&cfg.array, &cfg.codebook, &cfg.design, &grid)?;
            let reference = cfg.scenario.paths[0].snr_db;
            cfg.sweep
                .values
                .iter()
                .map(|&snr| {
                    info!("{} = {snr}", cfg.experiment.axis_name());
                    let scenario = cfg.scenario.with_snr_shift(snr - reference);
                    Ok(SweepPoint {
                        axis_value: snr,
                        half_width_deg: None,
                        report: benchmark(cfg, &scenario, &entries, pool)?,
                    })
                })
                .collect()
        }
        ExperimentKind::AodSweep => {
            let points: Vec<(f64, f64)> = cfg
                .half_widths()
                .into_iter()
                .flat_map(|hw| cfg.sweep.values.iter().map(move |&t| (hw, t)))
                .collect();
            pool.install(|| {
                points
                    .par_iter()
                    .map(|&(hw, theta)| {
                        info!("aod {theta}° ± {hw}°");
                        let scenario = point_scenario(&cfg.scenario, theta, hw)?;
                        let codebook = CodebookSpec {
                            intervals: scenario.intervals(),
                            ..cfg.codebook.clone()
                        };
                        let entries = build_strategies(&cfg.array, &codebook, &cfg.design, &grid)
                            .with_context(|| format!("strategies at {theta}° ± {hw}°"))?;
                        Ok(SweepPoint {
                            axis_value: theta,
                            half_width_deg: Some(hw),
                            report: benchmark(cfg, &scenario, &entries, pool)?,
                        })
                    })
                    .collect()
            })
        }
        other => bail!("evaluate runs snr-sweep, aod-sweep or two-path experiments, not {other:?}"),
    }
}

pub fn benchmark_table(cfg: &ExperimentConfig, points: &[SweepPoint]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = [
        cfg.experiment.axis_name(),
        "half_width_deg",
        "precoder",
        "num_beams",
        "rmse_deg",
        "rmse_ci_lo_deg",
        "rmse_ci_hi_deg",
        "crb_deg",
        "failure_rate",
        "trials",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    for p in points {
        for s in &p.report.precoders {
            rows.push(vec![
                num(p.axis_value),
                opt(p.half_width_deg),
                s.name.clone(),
                s.num_beams.to_string(),
                opt(s.rmse_deg),
                opt(s.rmse_ci_deg.map(|c| c.0)),
                opt(s.rmse_ci_deg.map(|c| c.1)),
                opt(s.crb_total_deg),
                num(s.failure_rate),
                s.trial_count.to_string(),
            ]);
        }
    }
    (header, rows)
}

/// `evaluate` subcommand.
pub fn cmd_evaluate(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Vec<PathBuf>> {
    let points = evaluate_sweep(cfg, pool)?;
    with_outputs(cfg, |out| {
        let (h, rows) = benchmark_table(cfg, &points);
        out.csv("benchmark.csv", &h, rows)?;
        out.json(
            "summary.json",
            &json!({
                "seed": cfg.seed,
                "config_sha256": cfg.hash(),
                "experiment": cfg.experiment,
                "axis": cfg.experiment.axis_name(),
                "trials": cfg.evaluation.trials,
                "points": points,
            }),
        )
    })
}
