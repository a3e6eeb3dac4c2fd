//! Monte Carlo RMSE evaluation, estimate pairing and the deterministic
//! Cramér-Rao bound.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array::ArrayConfig;
use crate::channel::{covariance_of, draw_gains, simulate, Scenario, TrialSeed};
use crate::error::{Error, Result};
use crate::esprit::{AoDEstimate, BeamspaceEsprit};
use crate::linalg::{CMatrix, RMatrix, C64};
use crate::precoder::Precoder;
use crate::sip::SipSolution;

/// Relative tolerance on equal Frobenius norms across compared precoders.
pub const POWER_MATCH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    /// `assignment[i]` is the index of the estimate paired with truth `i`.
    pub assignment: Vec<usize>,
    /// `|θ̂ - θ|` per truth entry, degrees.
    pub errors: Vec<f64>,
}

/// Minimum total squared error assignment (Hungarian algorithm).
pub fn pair_estimates(truth: &[f64], est: &[f64]) -> Result<Pairing> {
    if truth.len() != est.len() {
        return Err(Error::DimensionMismatch {
            context: "pairing lengths",
            expected: truth.len(),
            found: est.len(),
        });
    }
    let n = truth.len();
    let cost = |i: usize, j: usize| {
        let d = truth[i] - est[j];
        d * d
    };
    // Potentials formulation, 1-based with a virtual column 0.
    let inf = f64::INFINITY;
    let mut u = alloc::vec![0.0; n + 1];
    let mut v = alloc::vec![0.0; n + 1];
    let mut owner = alloc::vec![0usize; n + 1];
    let mut way = alloc::vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_v = alloc::vec![inf; n + 1];
        let mut used = alloc::vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < min_v[j] {
                        min_v[j] = cur;
                        way[j] = j0;
                    }
                    if min_v[j] < delta {
                        delta = min_v[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = alloc::vec![0usize; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    let errors = (0..n).map(|i| (truth[i] - est[assignment[i]]).abs()).collect();
    Ok(Pairing { assignment, errors })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_index: usize,
    pub estimate: Option<AoDEstimate>,
    /// Empty when the trial failed.
    pub paired_errors_deg: Vec<f64>,
    pub failed: bool,
    /// Deterministic CRB per path for this trial's gains, degrees².
    pub crb_deg2: Option<Vec<f64>>,
}

impl TrialResult {
    pub fn squared_error(&self) -> f64 {
        self.paired_errors_deg.iter().map(|e| e * e).sum()
    }
}

/// `(mean over successful trials of Σ_ℓ error_ℓ²)^{1/2}`, degrees.
pub fn rmse(trials: &[TrialResult]) -> Result<f64> {
    let ok: Vec<&TrialResult> = trials.iter().filter(|t| !t.failed).collect();
    if ok.is_empty() {
        return Err(Error::AllTrialsFailed);
    }
    let mse = ok.iter().map(|t| t.squared_error()).sum::<f64>() / ok.len() as f64;
    Ok(libm::sqrt(mse))
}

pub fn failure_rate(trials: &[TrialResult]) -> f64 {
    if trials.is_empty() {
        return 0.0;
    }
    trials.iter().filter(|t| t.failed).count() as f64 / trials.len() as f64
}

/// Percentile bootstrap interval of the RMSE over successful trials.
pub fn bootstrap_rmse_interval(
    trials: &[TrialResult],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    let sq: Vec<f64> = trials.iter().filter(|t| !t.failed).map(|t| t.squared_error()).collect();
    if sq.is_empty() {
        return Err(Error::AllTrialsFailed);
    }
    if resamples == 0 || !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidConfig(
            "bootstrap needs resamples > 0 and confidence in (0, 1)",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sq.len();
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            let total: f64 = (0..n).map(|_| sq[rng.random_range(0..n)]).sum();
            libm::sqrt(total / n as f64)
        })
        .collect();
    stats.sort_by(|a, b| a.total_cmp(b));
    let tail = (1.0 - confidence) / 2.0;
    let pick = |q: f64| {
        let idx = libm::floor(q * (resamples - 1) as f64 + 0.5) as usize;
        stats[idx.min(resamples - 1)]
    };
    Ok((pick(tail), pick(1.0 - tail)))
}

/// Complex Jacobian blocks of `μ_n = √P Fᵀ V α_n`: `C = √P Fᵀ V` and
/// `√P Fᵀ V̇`.
fn response_blocks(arr: &ArrayConfig, scenario: &Scenario, f: &Precoder) -> Result<(CMatrix, CMatrix)> {
    let angles = scenario.angles();
    let sp = libm::sqrt(scenario.tx_power);
    let ft = f.matrix().transpose();
    let c = (&ft * arr.steering_matrix(&angles)?).scale(sp);
    let cd = (&ft * arr.derivative_matrix(&angles)?).scale(sp);
    Ok((c, cd))
}

fn check_gains(scenario: &Scenario, gains: &CMatrix) -> Result<()> {
    if gains.nrows() != scenario.num_paths() || gains.ncols() == 0 {
        return Err(Error::DimensionMismatch {
            context: "gain matrix rows vs paths",
            expected: scenario.num_paths(),
            found: gains.nrows(),
        });
    }
    Ok(())
}

/// `2/σ² Re(XᴴY)`.
fn real_gram(x: &CMatrix, y: &CMatrix, noise: f64) -> RMatrix {
    (x.adjoint() * y).map(|z| 2.0 * z.re / noise)
}

/// Full Fisher information over `[θ (rad); Re α; Im α]`, with `α` ordered
/// snapshot-major (`α_{0,0}, α_{1,0}, …`). Dimension `L + 2LN`.
pub fn fisher_information(arr: &ArrayConfig, scenario: &Scenario, f: &Precoder, gains: &CMatrix) -> Result<RMatrix> {
    check_gains(scenario, gains)?;
    let (c, cd) = response_blocks(arr, scenario, f)?;
    let l = scenario.num_paths();
    let n = gains.ncols();
    let m = c.nrows();
    let dim = l + 2 * l * n;
    let j = C64::new(0.0, 1.0);
    // Jacobian of the stacked mean (M·N complex rows).
    let mut d = CMatrix::zeros(m * n, dim);
    for s in 0..n {
        for p in 0..l {
            for r in 0..m {
                d[(s * m + r, p)] = cd[(r, p)] * gains[(p, s)];
                d[(s * m + r, l + s * l + p)] = c[(r, p)];
                d[(s * m + r, l + l * n + s * l + p)] = c[(r, p)] * j;
            }
        }
    }
    Ok(real_gram(&d, &d, scenario.noise_power))
}

/// Deterministic CRB on the AoDs, degrees², one entry per path.
///
/// The per-snapshot gains are nuisance parameters; their blocks are
/// eliminated by a Schur complement snapshot by snapshot, which equals the
/// `θθ` block of the inverse of [`fisher_information`].
pub fn crb_aod(arr: &ArrayConfig, scenario: &Scenario, f: &Precoder, gains: &CMatrix) -> Result<Vec<f64>> {
    check_gains(scenario, gains)?;
    let (c, cd) = response_blocks(arr, scenario, f)?;
    let l = scenario.num_paths();
    let sigma2 = scenario.noise_power;
    let mut nuisance_dir = CMatrix::zeros(c.nrows(), 2 * l);
    nuisance_dir.columns_mut(0, l).copy_from(&c);
    nuisance_dir
        .columns_mut(l, l)
        .copy_from(&c.map(|z| z * C64::new(0.0, 1.0)));
    let j_aa = real_gram(&nuisance_dir, &nuisance_dir, sigma2);
    let j_aa_inv = j_aa.clone().try_inverse().ok_or(Error::Singular {
        context: "CRB nuisance block",
        condition: f64::INFINITY,
    })?;
    let mut info = RMatrix::zeros(l, l);
    for s in 0..gains.ncols() {
        let mut delta = cd.clone();
        for p in 0..l {
            let g = gains[(p, s)];
            delta.column_mut(p).apply(|z| *z *= g);
        }
        let j_tt = real_gram(&delta, &delta, sigma2);
        let j_ta = real_gram(&delta, &nuisance_dir, sigma2);
        info += j_tt - &j_ta * &j_aa_inv * j_ta.transpose();
    }
    let cov = info.clone().try_inverse().ok_or(Error::Singular {
        context: "CRB angle information",
        condition: f64::INFINITY,
    })?;
    let to_deg2 = (180.0 / core::f64::consts::PI) * (180.0 / core::f64::consts::PI);
    let out: Vec<f64> = (0..l).map(|i| cov[(i, i)] * to_deg2).collect();
    if out.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Singular {
            context: "CRB angle information",
            condition: f64::INFINITY,
        });
    }
    Ok(out)
}

/// A named precoder with its estimator state.
///
/// `sip` holds the error when `Λ` or `Q` cannot be formed (too few beams,
/// rank-deficient `J2 F`); every trial of such a precoder counts as failed.
#[derive(Debug, Clone)]
pub struct PrecoderEntry {
    pub name: String,
    pub precoder: Precoder,
    pub sip: Result<SipSolution>,
}

impl PrecoderEntry {
    pub fn new(name: impl Into<String>, precoder: Precoder) -> Self {
        let sip = SipSolution::new(precoder.matrix());
        PrecoderEntry {
            name: name.into(),
            precoder,
            sip,
        }
    }

    pub fn with_sip(name: impl Into<String>, precoder: Precoder, sip: SipSolution) -> Self {
        PrecoderEntry {
            name: name.into(),
            precoder,
            sip: Ok(sip),
        }
    }

    pub fn is_usable(&self, num_paths: usize) -> bool {
        self.sip.is_ok() && self.precoder.num_beams() >= num_paths + 2
    }
}

/// Rescale every precoder to `‖F‖_F² = power`.
pub fn equalize_power(entries: &mut [PrecoderEntry], power: f64) -> Result<()> {
    for e in entries.iter_mut() {
        e.precoder = e.precoder.with_power(power)?;
        e.sip = SipSolution::new(e.precoder.matrix());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrecoderStats {
    pub name: String,
    /// `None` when every trial failed.
    pub rmse_deg: Option<f64>,
    pub rmse_ci_deg: Option<(f64, f64)>,
    pub failure_rate: f64,
    pub trial_count: usize,
    pub num_beams: usize,
    /// `√(mean CRB)` per path, degrees.
    pub crb_deg: Vec<f64>,
    /// `√(mean Σ_ℓ CRB_ℓ)`, comparable to the joint RMSE.
    pub crb_total_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchmarkPoint {
    pub precoders: Vec<PrecoderStats>,
}

impl BenchmarkPoint {
    pub fn get(&self, name: &str) -> Option<&PrecoderStats> {
        self.precoders.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkSettings {
    pub trials: usize,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub confidence: f64,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        BenchmarkSettings {
            trials: 100,
            seed: 0,
            bootstrap_resamples: 1000,
            confidence: 0.95,
        }
    }
}

/// One scenario evaluated against a set of power-matched precoders.
///
/// Trials are independent: [`run_trial`](Self::run_trial) can be called in
/// any order or in parallel, and [`aggregate`](Self::aggregate) only depends
/// on the trial index, not on completion order.
pub struct BenchmarkPlan<'a> {
    arr: &'a ArrayConfig,
    scenario: &'a Scenario,
    entries: &'a [PrecoderEntry],
    estimators: Vec<Result<BeamspaceEsprit>>,
    settings: BenchmarkSettings,
}

impl<'a> BenchmarkPlan<'a> {
    pub fn new(
        arr: &'a ArrayConfig,
        scenario: &'a Scenario,
        entries: &'a [PrecoderEntry],
        settings: BenchmarkSettings,
    ) -> Result<Self> {
        scenario.validate()?;
        if entries.is_empty() {
            return Err(Error::InvalidConfig("benchmark needs at least one precoder"));
        }
        if settings.trials == 0 {
            return Err(Error::InvalidConfig("benchmark needs at least one trial"));
        }
        let reference = entries[0].precoder.frobenius_norm();
        for e in entries {
            let found = e.precoder.frobenius_norm();
            if (found - reference).abs() > POWER_MATCH_TOL * reference {
                return Err(Error::UnequalPower { reference, found });
            }
        }
        let estimators = entries
            .iter()
            .map(|e| {
                e.sip
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|sip| BeamspaceEsprit::new(sip, scenario.num_paths()))
            })
            .collect();
        Ok(BenchmarkPlan {
            arr,
            scenario,
            entries,
            estimators,
            settings,
        })
    }

    pub fn trials(&self) -> usize {
        self.settings.trials
    }

    /// One trial for every precoder. The gain sequence is shared; noise
    /// streams differ per precoder.
    pub fn run_trial(&self, trial: usize) -> Vec<TrialResult> {
        let seed = TrialSeed::new(self.settings.seed, trial as u64);
        let gains = draw_gains(self.scenario, &seed);
        let truth = self.scenario.angles();
        self.entries
            .iter()
            .zip(&self.estimators)
            .enumerate()
            .map(|(i, (entry, est))| {
                let crb = crb_aod(self.arr, self.scenario, &entry.precoder, &gains).ok();
                let outcome = est
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|est| {
                        let batch = simulate(self.arr, self.scenario, &entry.precoder, &gains, &seed, i as u32)?;
                        est.estimate(&covariance_of(&batch.observations), self.arr)
                    })
                    .and_then(|e| pair_estimates(&truth, &e.angles_deg).map(|p| (e, p)));
                match outcome {
                    Ok((e, p)) => TrialResult {
                        trial_index: trial,
                        estimate: Some(e),
                        paired_errors_deg: p.errors,
                        failed: false,
                        crb_deg2: crb,
                    },
                    Err(_) => TrialResult {
                        trial_index: trial,
                        estimate: None,
                        paired_errors_deg: Vec::new(),
                        failed: true,
                        crb_deg2: crb,
                    },
                }
            })
            .collect()
    }

    /// Combine per-trial outputs (`results[t][precoder]`, any order of `t`).
    pub fn aggregate(&self, mut results: Vec<Vec<TrialResult>>) -> Result<BenchmarkPoint> {
        results.sort_by_key(|r| r.first().map(|t| t.trial_index).unwrap_or(0));
        let l = self.scenario.num_paths();
        let mut precoders = Vec::with_capacity(self.entries.len());
        for (i, entry) in self.entries.iter().enumerate() {
            let trials: Vec<TrialResult> = results.iter().map(|r| r[i].clone()).collect();
            let rmse_deg = rmse(&trials).ok();
            let rmse_ci_deg = bootstrap_rmse_interval(
                &trials,
                self.settings.bootstrap_resamples,
                self.settings.confidence,
                self.settings.seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            )
            .ok();
            let crbs: Vec<&Vec<f64>> = trials.iter().filter_map(|t| t.crb_deg2.as_ref()).collect();
            let (crb_deg, crb_total_deg) = if crbs.is_empty() {
                (Vec::new(), None)
            } else {
                let k = crbs.len() as f64;
                let per: Vec<f64> = (0..l).map(|p| crbs.iter().map(|c| c[p]).sum::<f64>() / k).collect();
                let total = libm::sqrt(per.iter().sum::<f64>());
                (per.iter().map(|v| libm::sqrt(*v)).collect(), Some(total))
            };
            precoders.push(PrecoderStats {
                name: entry.name.clone(),
                rmse_deg,
                rmse_ci_deg,
                failure_rate: failure_rate(&trials),
                trial_count: trials.len(),
                num_beams: entry.precoder.num_beams(),
                crb_deg,
                crb_total_deg,
            });
        }
        Ok(BenchmarkPoint { precoders })
    }

    pub fn run(&self) -> Result<BenchmarkPoint> {
        let results = (0..self.settings.trials).map(|t| self.run_trial(t)).collect();
        self.aggregate(results)
    }
}

/// Sequential benchmark of one scenario.
pub fn run_benchmark(
    arr: &ArrayConfig,
    scenario: &Scenario,
    entries: &[PrecoderEntry],
    settings: BenchmarkSettings,
) -> Result<BenchmarkPoint> {
    BenchmarkPlan::new(arr, scenario, entries, settings)?.run()
}

pub const SUM: &str = "sum";
pub const SUM_DIFF: &str = "sum-diff";
pub const SUM_DIFF_ESPRIT: &str = "sum-diff-esprit";

/// The three compared strategies for a codebook: plain sum beams, the
/// phase-only fit of the sum/difference baseline, and the ESPRIT-oriented
/// design started from that baseline. All are rescaled to the power of the
/// baseline, `‖F‖_F² = M_base`.
pub fn build_strategies(
    arr: &ArrayConfig,
    codebook: &crate::codebook::CodebookSpec,
    design_cfg: &crate::design::DesignConfig,
    grid: &crate::array::AngleGrid,
) -> Result<Vec<PrecoderEntry>> {
    let mut sum_spec = codebook.clone();
    sum_spec.include_diff = false;
    let mut base_spec = codebook.clone();
    base_spec.include_diff = true;
    let sum = crate::codebook::build_baseline(arr, &sum_spec)?;
    let base = crate::codebook::build_baseline(arr, &base_spec)?;
    let power = base.num_beams() as f64;

    let phase_only = crate::design::phase_only_fit(arr, &base, &design_cfg.inner, grid)?;
    let oriented = crate::design::design(arr, &base, design_cfg, grid)?;

    let mut entries = alloc::vec![
        PrecoderEntry::new(SUM, sum),
        PrecoderEntry::new(SUM_DIFF, phase_only.precoder),
        PrecoderEntry::new(SUM_DIFF_ESPRIT, oriented.precoder),
    ];
    equalize_power(&mut entries, power)?;
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::PathSpec;
    use crate::codebook::{sum_beam_precoder, CodebookSpec, UncertaintyInterval};
    use crate::design::DesignConfig;
    use proptest::prelude::*;
    use rand::Rng;

    fn trial(errors: &[f64]) -> TrialResult {
        TrialResult {
            trial_index: 0,
            estimate: None,
            paired_errors_deg: errors.to_vec(),
            failed: false,
            crb_deg2: None,
        }
    }

    fn failed() -> TrialResult {
        TrialResult {
            failed: true,
            ..trial(&[])
        }
    }

    fn brute_force(truth: &[f64], est: &[f64]) -> f64 {
        fn rec(truth: &[f64], est: &[f64], used: &mut [bool], i: usize) -> f64 {
            if i == truth.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..est.len() {
                if !used[j] {
                    used[j] = true;
                    let d = truth[i] - est[j];
                    best = best.min(d * d + rec(truth, est, used, i + 1));
                    used[j] = false;
                }
            }
            best
        }
        rec(truth, est, &mut alloc::vec![false; est.len()], 0)
    }

    #[test]
    fn pairing_example() {
        let p = pair_estimates(&[20.0, 70.0], &[70.1, 19.9]).unwrap();
        assert_eq!(p.assignment, alloc::vec![1, 0]);
        assert!((p.errors[0] - 0.1).abs() < 1e-12 && (p.errors[1] - 0.1).abs() < 1e-12);
        let single = pair_estimates(&[12.0], &[12.75]).unwrap();
        assert!((single.errors[0] - 0.75).abs() < 1e-15);
        assert!(pair_estimates(&[1.0], &[1.0, 2.0]).is_err());
        assert!(pair_estimates(&[], &[]).unwrap().errors.is_empty());
    }

    #[test]
    fn pairing_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..100 {
            let l = 1 + case % 4;
            let truth: Vec<f64> = (0..l).map(|_| rng.random_range(-80.0..80.0)).collect();
            let est: Vec<f64> = (0..l).map(|_| rng.random_range(-80.0..80.0)).collect();
            let p = pair_estimates(&truth, &est).unwrap();
            let mut seen = alloc::vec![false; l];
            for &j in &p.assignment {
                assert!(!seen[j]);
                seen[j] = true;
            }
            let total: f64 = p.errors.iter().map(|e| e * e).sum();
            assert!((total - brute_force(&truth, &est)).abs() < 1e-9);
        }
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[trial(&[0.0]), trial(&[0.0])]).unwrap(), 0.0);
        assert!((rmse(&[trial(&[2.0])]).unwrap() - 2.0).abs() < 1e-15);
        assert!((rmse(&[trial(&[1.0]), trial(&[3.0])]).unwrap() - libm::sqrt(5.0)).abs() < 1e-15);
        assert!((rmse(&[trial(&[3.0, 4.0])]).unwrap() - 5.0).abs() < 1e-15);
        assert!((rmse(&[trial(&[1.0]), failed(), trial(&[3.0])]).unwrap() - libm::sqrt(5.0)).abs() < 1e-15);
        assert!(matches!(rmse(&[failed()]), Err(Error::AllTrialsFailed)));
        assert!((failure_rate(&[failed(), trial(&[1.0]), trial(&[1.0]), failed()]) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn rmse_is_order_invariant(errs in proptest::collection::vec((0.0f64..5.0, 0.0f64..5.0), 1..20)) {
            let fwd: Vec<TrialResult> = errs.iter().map(|(a, b)| trial(&[*a, *b])).collect();
            let rev: Vec<TrialResult> = errs.iter().rev().map(|(a, b)| trial(&[*b, *a])).collect();
            let (x, y) = (rmse(&fwd).unwrap(), rmse(&rev).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn bootstrap_brackets_rmse() {
        let trials: Vec<TrialResult> = (0..50).map(|i| trial(&[0.1 * (i % 7) as f64])).collect();
        let (lo, hi) = bootstrap_rmse_interval(&trials, 500, 0.95, 3).unwrap();
        let r = rmse(&trials).unwrap();
        assert!(lo <= r && r <= hi && lo < hi);
        assert_eq!(bootstrap_rmse_interval(&trials, 500, 0.95, 3).unwrap(), (lo, hi));
        assert!(bootstrap_rmse_interval(&trials, 0, 0.95, 3).is_err());
        assert!(bootstrap_rmse_interval(&[failed()], 10, 0.95, 3).is_err());
    }

    fn two_path() -> Scenario {
        Scenario::new(
            alloc::vec![
                PathSpec {
                    theta_deg: 20.0,
                    snr_db: 10.0,
                    uncertainty: UncertaintyInterval::around(0, 20.0, 3.0).unwrap()
                },
                PathSpec {
                    theta_deg: 35.0,
                    snr_db: 5.0,
                    uncertainty: UncertaintyInterval::around(1, 35.0, 3.0).unwrap()
                },
            ],
            3,
        )
        .unwrap()
    }

    fn small_setup() -> (ArrayConfig, Scenario, Precoder, CMatrix) {
        let arr = ArrayConfig::half_wavelength(12).unwrap();
        let sc = two_path();
        let f = sum_beam_precoder(&arr, &[17.0, 20.0, 23.0, 33.0, 37.0]).unwrap();
        let gains = draw_gains(&sc, &TrialSeed::new(5, 0));
        (arr, sc, f, gains)
    }

    // Stacked real mean [Re μ; Im μ] for parameters [θ (rad); Re α; Im α].
    fn stacked_mean(arr: &ArrayConfig, sc: &Scenario, f: &Precoder, params: &[f64]) -> Vec<f64> {
        let l = sc.num_paths();
        let n = (params.len() - l) / (2 * l);
        let angles: Vec<f64> = params[..l].iter().map(|t| t.to_degrees()).collect();
        let gains = CMatrix::from_fn(l, n, |p, s| {
            C64::new(params[l + s * l + p], params[l + l * n + s * l + p])
        });
        let v = arr.steering_matrix(&angles).unwrap();
        let mu = (f.matrix().transpose() * v * gains).scale(libm::sqrt(sc.tx_power));
        let mut out: Vec<f64> = mu.iter().map(|z| z.re).collect();
        out.extend(mu.iter().map(|z| z.im));
        out
    }

    #[test]
    fn fisher_matches_finite_differences() {
        let (arr, sc, f, gains) = small_setup();
        let l = sc.num_paths();
        let n = gains.ncols();
        let mut params: Vec<f64> = sc.angles().iter().map(|t| t.to_radians()).collect();
        for s in 0..n {
            for p in 0..l {
                params.push(gains[(p, s)].re);
            }
        }
        for s in 0..n {
            for p in 0..l {
                params.push(gains[(p, s)].im);
            }
        }
        let h = 1e-6;
        let dim = params.len();
        let rows = stacked_mean(&arr, &sc, &f, &params).len();
        let mut jac = RMatrix::zeros(rows, dim);
        for k in 0..dim {
            let mut up = params.clone();
            let mut dn = params.clone();
            up[k] += h;
            dn[k] -= h;
            let (a, b) = (stacked_mean(&arr, &sc, &f, &up), stacked_mean(&arr, &sc, &f, &dn));
            for r in 0..rows {
                jac[(r, k)] = (a[r] - b[r]) / (2.0 * h);
            }
        }
        let numeric = (jac.transpose() * &jac).scale(2.0 / sc.noise_power);
        let analytic = fisher_information(&arr, &sc, &f, &gains).unwrap();
        let rel = (&analytic - &numeric).norm() / analytic.norm();
        assert!(rel < 1e-4, "relative error {rel}");
    }

    #[test]
    fn schur_crb_equals_full_inverse() {
        let (arr, sc, f, gains) = small_setup();
        let full = fisher_information(&arr, &sc, &f, &gains)
            .unwrap()
            .try_inverse()
            .unwrap();
        let crb = crb_aod(&arr, &sc, &f, &gains).unwrap();
        let to_deg2 = (180.0 / core::f64::consts::PI).powi(2);
        for p in 0..2 {
            let want = full[(p, p)] * to_deg2;
            assert!((crb[p] - want).abs() < 1e-8 * want);
        }
    }

    #[test]
    fn doubling_power_halves_crb() {
        let (arr, sc, f, gains) = small_setup();
        let base = crb_aod(&arr, &sc, &f, &gains).unwrap();
        let doubled = Scenario {
            tx_power: 2.0 * sc.tx_power,
            ..sc.clone()
        };
        let half = crb_aod(&arr, &doubled, &f, &gains).unwrap();
        for p in 0..2 {
            assert!((half[p] - base[p] / 2.0).abs() < 1e-12 * base[p]);
        }
    }

    #[test]
    fn crb_decreases_over_nested_codebooks() {
        let arr = ArrayConfig::half_wavelength(32).unwrap();
        let sc = Scenario::single_path(0.0, 3.0, 10.0, 10).unwrap();
        let gains = draw_gains(&sc, &TrialSeed::new(1, 2));
        let all = [0.0, 1.5, -1.5, 3.0, -3.0, 4.5, -4.5];
        let mut last = f64::INFINITY;
        for m in 2..=all.len() {
            let cols = arr.steering_matrix(&all[..m]).unwrap().conjugate();
            let crb = crb_aod(&arr, &sc, &Precoder::new(cols), &gains).unwrap()[0];
            assert!(crb < last, "M = {m}: {crb} !< {last}");
            last = crb;
        }
    }

    fn benchmark_entries(arr: &ArrayConfig) -> Vec<PrecoderEntry> {
        let a = sum_beam_precoder(arr, &[17.0, 20.0, 23.0]).unwrap();
        let b = sum_beam_precoder(arr, &[18.0, 20.0, 22.0, 24.0]).unwrap();
        let mut entries = alloc::vec![PrecoderEntry::new("a", a), PrecoderEntry::new("b", b)];
        equalize_power(&mut entries, 4.0).unwrap();
        entries
    }

    #[test]
    fn benchmark_is_deterministic_and_order_free() {
        let arr = ArrayConfig::half_wavelength(16).unwrap();
        let sc = Scenario::single_path(20.0, 3.0, 10.0, 20).unwrap();
        let entries = benchmark_entries(&arr);
        let settings = BenchmarkSettings {
            trials: 12,
            seed: 9,
            bootstrap_resamples: 200,
            confidence: 0.9,
        };
        let first = run_benchmark(&arr, &sc, &entries, settings).unwrap();
        assert_eq!(first, run_benchmark(&arr, &sc, &entries, settings).unwrap());
        let plan = BenchmarkPlan::new(&arr, &sc, &entries, settings).unwrap();
        let shuffled: Vec<Vec<TrialResult>> = (0..12).rev().map(|t| plan.run_trial(t)).collect();
        assert_eq!(plan.aggregate(shuffled).unwrap(), first);
        let other = run_benchmark(&arr, &sc, &entries, BenchmarkSettings { seed: 10, ..settings }).unwrap();
        assert_ne!(first, other);
        for p in &first.precoders {
            assert_eq!(p.trial_count, 12);
            assert_eq!(p.failure_rate, 0.0);
            assert!(p.rmse_deg.unwrap() > 0.0);
            assert!(p.crb_deg[0] > 0.0);
        }
    }

    #[test]
    fn plan_refuses_unequal_power() {
        let arr = ArrayConfig::half_wavelength(16).unwrap();
        let sc = Scenario::single_path(20.0, 3.0, 10.0, 5).unwrap();
        let mut entries = benchmark_entries(&arr);
        entries[1].precoder = entries[1].precoder.with_power(4.0 * (1.0 + 1e-8)).unwrap();
        assert!(matches!(
            BenchmarkPlan::new(&arr, &sc, &entries, BenchmarkSettings::default()),
            Err(Error::UnequalPower { .. })
        ));
    }

    #[test]
    fn unusable_precoder_counts_as_failed() {
        let arr = ArrayConfig::half_wavelength(16).unwrap();
        let sc = Scenario::single_path(20.0, 3.0, 10.0, 5).unwrap();
        let mut entries = benchmark_entries(&arr);
        entries.push(PrecoderEntry::new(
            "narrow",
            sum_beam_precoder(&arr, &[19.0, 21.0]).unwrap(),
        ));
        equalize_power(&mut entries, 4.0).unwrap();
        assert!(!entries[2].is_usable(1));
        let settings = BenchmarkSettings {
            trials: 4,
            ..Default::default()
        };
        let report = run_benchmark(&arr, &sc, &entries, settings).unwrap();
        let narrow = report.get("narrow").unwrap();
        assert_eq!(narrow.failure_rate, 1.0);
        assert_eq!(narrow.rmse_deg, None);
        assert!(narrow.crb_total_deg.is_some());
        assert!(report.get("a").unwrap().rmse_deg.is_some());
    }

    #[test]
    fn strategies_share_power() {
        let arr = ArrayConfig::half_wavelength(16).unwrap();
        let spec = CodebookSpec::new(
            alloc::vec![UncertaintyInterval::around(0, 10.0, 8.0).unwrap()],
            0.01,
            true,
        );
        let entries = build_strategies(&arr, &spec, &DesignConfig::default(), &arr.default_grid()).unwrap();
        let names: Vec<&str> = entries.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, [SUM, SUM_DIFF, SUM_DIFF_ESPRIT]);
        let m = entries[1].precoder.num_beams() as f64;
        for e in &entries {
            assert!((e.precoder.power() - m).abs() < 1e-9 * m);
        }
        assert_eq!(entries[1].precoder.num_beams(), 2 * entries[0].precoder.num_beams());
    }
}
