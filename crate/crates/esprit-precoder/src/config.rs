//! Experiment configuration (JSON).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use esprit_precoder_core::codebook::{difference_beam_precoder, sum_beam_precoder};
use esprit_precoder_core::{
    AngleGrid, ArrayConfig, BenchmarkSettings, CodebookSpec, DesignConfig, PathSpec, Precoder, Scenario,
    UncertaintyInterval,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// One design at `design.eta`.
    Beampattern,
    /// One design per `sweep.values` entry (η).
    EtaSweep,
    /// Benchmark over `sweep.values` (SNR of path 0 in dB; other paths keep
    /// their offset).
    SnrSweep,
    /// Single-path benchmark over `sweep.values` (AoD in degrees), once per
    /// entry of `sweep.half_widths_deg`.
    AodSweep,
    /// As `snr-sweep`, with exactly two paths.
    TwoPath,
}

impl ExperimentKind {
    pub fn is_design(self) -> bool {
        matches!(self, ExperimentKind::Beampattern | ExperimentKind::EtaSweep)
    }

    pub fn axis_name(self) -> &'static str {
        match self {
            ExperimentKind::Beampattern | ExperimentKind::EtaSweep => "eta",
            ExperimentKind::SnrSweep | ExperimentKind::TwoPath => "snr_db",
            ExperimentKind::AodSweep => "aod_deg",
        }
    }
}

/// Starting precoder of the design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Baseline {
    /// `[F_sum, γ F_diff]` from the codebook section.
    Codebook,
    DifferenceBeams {
        angles_deg: Vec<f64>,
    },
    SumBeams {
        angles_deg: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub values: Vec<f64>,
    /// `aod-sweep` only. Empty means the half-width of the scenario interval.
    #[serde(default)]
    pub half_widths_deg: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo_deg: f64,
    pub hi_deg: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    pub trials: usize,
    pub bootstrap_resamples: usize,
    pub confidence: f64,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        let b = BenchmarkSettings::default();
        EvaluationSettings {
            trials: b.trials,
            bootstrap_resamples: b.bootstrap_resamples,
            confidence: b.confidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub array: ArrayConfig,
    pub codebook: CodebookSpec,
    #[serde(default)]
    pub design: DesignConfig,
    pub scenario: Scenario,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_baseline")]
    pub baseline: Baseline,
    /// Beampattern grid; defaults to the array's default grid.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub evaluation: EvaluationSettings,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_baseline() -> Baseline {
    Baseline::Codebook
}

impl Default for ExperimentConfig {
    /// Single path at 20° with a ±3° prior, SNR sweep 0..30 dB.
    fn default() -> Self {
        let scenario = Scenario::single_path(20.0, 3.0, 20.0, 50).expect("valid default scenario");
        ExperimentConfig {
            array: ArrayConfig::default(),
            codebook: CodebookSpec::new(
                scenario.intervals(),
                esprit_precoder_core::codebook::DEFAULT_GAMMA,
                true,
            ),
            design: DesignConfig::default(),
            scenario,
            experiment: ExperimentKind::SnrSweep,
            sweep: Sweep {
                values: vec![0.0, 10.0, 20.0, 30.0],
                half_widths_deg: Vec::new(),
            },
            seed: 0,
            out_dir: default_out_dir(),
            baseline: Baseline::Codebook,
            grid: None,
            evaluation: EvaluationSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Canonical pretty-printed JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON with `out_dir` blanked, so the hash
    /// identifies the computation and not where it was written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        let digest = Sha256::digest(serde_json::to_vec(&c).expect("config serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        self.design.validate()?;
        self.scenario.validate()?;
        self.codebook.validate()?;
        let l = self.scenario.num_paths();
        ensure!(
            self.codebook.intervals.len() == l,
            "codebook has {} intervals but the scenario has {} paths",
            self.codebook.intervals.len(),
            l
        );
        let mut seen = vec![false; l];
        for u in &self.codebook.intervals {
            ensure!(u.path_index < l, "interval path_index {} out of range", u.path_index);
            ensure!(!seen[u.path_index], "two intervals for path {}", u.path_index);
            seen[u.path_index] = true;
        }
        for (i, p) in self.scenario.paths.iter().enumerate() {
            ensure!(
                p.uncertainty.path_index == i,
                "scenario path {i} has uncertainty path_index {}",
                p.uncertainty.path_index
            );
        }
        if let Some(g) = self.grid {
            self.grid_from(g)?;
        }
        let e = &self.evaluation;
        ensure!(e.trials >= 1, "evaluation.trials must be at least 1");
        ensure!(
            e.bootstrap_resamples >= 1,
            "evaluation.bootstrap_resamples must be at least 1"
        );
        ensure!(
            e.confidence > 0.0 && e.confidence < 1.0,
            "evaluation.confidence must be in (0, 1)"
        );

        let values = &self.sweep.values;
        ensure!(values.iter().all(|v| v.is_finite()), "sweep values must be finite");
        match self.experiment {
            ExperimentKind::Beampattern => {}
            ExperimentKind::EtaSweep => {
                ensure!(!values.is_empty(), "eta-sweep needs sweep.values");
                ensure!(values.iter().all(|v| *v >= 0.0), "eta values must be non-negative");
            }
            ExperimentKind::SnrSweep | ExperimentKind::TwoPath => {
                ensure!(!values.is_empty(), "{} needs sweep.values", self.experiment.axis_name());
                if self.experiment == ExperimentKind::TwoPath {
                    ensure!(l == 2, "two-path needs exactly two scenario paths, found {l}");
                }
            }
            ExperimentKind::AodSweep => {
                ensure!(l == 1, "aod-sweep needs a single-path scenario, found {l} paths");
                ensure!(!values.is_empty(), "aod-sweep needs sweep.values");
                for hw in self.half_widths() {
                    for &theta in values {
                        point_scenario(&self.scenario, theta, hw)
                            .with_context(|| format!("aod-sweep point {theta}° ± {hw}°"))?;
                    }
                }
            }
        }
        if self.experiment != ExperimentKind::AodSweep && !self.sweep.half_widths_deg.is_empty() {
            bail!("sweep.half_widths_deg is only used by aod-sweep");
        }
        self.baseline_precoder()?;
        Ok(())
    }

    fn grid_from(&self, g: GridSpec) -> Result<AngleGrid> {
        Ok(AngleGrid::uniform(g.lo_deg, g.hi_deg, g.count)?)
    }

    pub fn angle_grid(&self) -> Result<AngleGrid> {
        match self.grid {
            Some(g) => self.grid_from(g),
            None => Ok(self.array.default_grid()),
        }
    }

    pub fn half_widths(&self) -> Vec<f64> {
        if self.sweep.half_widths_deg.is_empty() {
            vec![self.scenario.paths[0].uncertainty.width_deg() / 2.0]
        } else {
            self.sweep.half_widths_deg.clone()
        }
    }

    pub fn baseline_precoder(&self) -> Result<Precoder> {
        Ok(match &self.baseline {
            Baseline::Codebook => esprit_precoder_core::codebook::build_baseline(&self.array, &self.codebook)?,
            Baseline::DifferenceBeams { angles_deg } => {
                ensure!(!angles_deg.is_empty(), "baseline angles are empty");
                difference_beam_precoder(&self.array, angles_deg)?
            }
            Baseline::SumBeams { angles_deg } => {
                ensure!(!angles_deg.is_empty(), "baseline angles are empty");
                sum_beam_precoder(&self.array, angles_deg)?
            }
        })
    }

    pub fn benchmark_settings(&self) -> BenchmarkSettings {
        BenchmarkSettings {
            trials: self.evaluation.trials,
            seed: self.seed,
            bootstrap_resamples: self.evaluation.bootstrap_resamples,
            confidence: self.evaluation.confidence,
        }
    }
}

/// Single-path scenario moved to `theta_deg` with prior `± half_width_deg`.
pub fn point_scenario(base: &Scenario, theta_deg: f64, half_width_deg: f64) -> Result<Scenario> {
    let p = base.paths[0];
    let uncertainty = UncertaintyInterval::around(0, theta_deg, half_width_deg)?;
    let mut s = base.clone();
    s.paths = vec![PathSpec {
        theta_deg,
        snr_db: p.snr_db,
        uncertainty,
    }];
    s.validate()?;
    Ok(s)
}
