//! MISO downlink snapshot generation and sample covariance.
//!
//! `y_n = √P Fᵀ V α_n + z_n` with `α_{ℓ,n} = g_ℓ w_{ℓ,n}`: `g_ℓ` is a fixed
//! real gain realizing the path SNR `P g_ℓ² / σ²`, `w_{ℓ,n}` is a fresh
//! circularly-symmetric complex Gaussian with standard deviation
//! `gain_std`.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{check_angle, ArrayConfig};
use crate::codebook::UncertaintyInterval;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::precoder::Precoder;

/// Default standard deviation of the per-snapshot gain fluctuation.
pub const DEFAULT_GAIN_STD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathSpec {
    pub theta_deg: f64,
    pub snr_db: f64,
    pub uncertainty: UncertaintyInterval,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub paths: Vec<PathSpec>,
    pub num_snapshots: usize,
    #[cfg_attr(feature = "serde", serde(default = "unit"))]
    pub noise_power: f64,
    #[cfg_attr(feature = "serde", serde(default = "unit"))]
    pub tx_power: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_gain_std"))]
    pub gain_std: f64,
}

#[cfg(feature = "serde")]
fn unit() -> f64 {
    1.0
}

#[cfg(feature = "serde")]
fn default_gain_std() -> f64 {
    DEFAULT_GAIN_STD
}

impl Scenario {
    pub fn new(paths: Vec<PathSpec>, num_snapshots: usize) -> Result<Self> {
        let s = Scenario {
            paths,
            num_snapshots,
            noise_power: 1.0,
            tx_power: 1.0,
            gain_std: DEFAULT_GAIN_STD,
        };
        s.validate()?;
        Ok(s)
    }

    /// One path at `theta_deg` with prior interval `theta_deg ± half_width_deg`.
    pub fn single_path(theta_deg: f64, half_width_deg: f64, snr_db: f64, num_snapshots: usize) -> Result<Self> {
        let uncertainty = UncertaintyInterval::around(0, theta_deg, half_width_deg)?;
        Self::new(
            alloc::vec![PathSpec {
                theta_deg,
                snr_db,
                uncertainty
            }],
            num_snapshots,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::InvalidConfig("scenario needs at least one path"));
        }
        if self.num_snapshots == 0 {
            return Err(Error::InvalidConfig("scenario needs at least one snapshot"));
        }
        for (i, p) in self.paths.iter().enumerate() {
            check_angle(p.theta_deg)?;
            p.uncertainty.validate()?;
            if !p.snr_db.is_finite() {
                return Err(Error::NonFinite("path SNR"));
            }
            if self.paths[..i].iter().any(|q| q.theta_deg == p.theta_deg) {
                return Err(Error::InvalidConfig("path angles must be distinct"));
            }
        }
        for v in [self.noise_power, self.tx_power, self.gain_std] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(
                    "noise power, tx power and gain std must be positive",
                ));
            }
        }
        Ok(())
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn angles(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.theta_deg).collect()
    }

    pub fn intervals(&self) -> Vec<UncertaintyInterval> {
        self.paths.iter().map(|p| p.uncertainty).collect()
    }

    /// `g_ℓ = √(SNR_ℓ σ² / P)`.
    pub fn fixed_gains(&self) -> Vec<f64> {
        self.paths
            .iter()
            .map(|p| libm::sqrt(libm::pow(10.0, p.snr_db / 10.0) * self.noise_power / self.tx_power))
            .collect()
    }

    /// Same scenario with every path SNR shifted by `delta_db`.
    pub fn with_snr_shift(&self, delta_db: f64) -> Self {
        let mut s = self.clone();
        for p in &mut s.paths {
            p.snr_db += delta_db;
        }
        s
    }
}

/// Independent random streams drawn from one generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Gains,
    /// Noise for the precoder with this index.
    Noise(u32),
}

impl Purpose {
    fn stream(self) -> u64 {
        match self {
            Purpose::Gains => 0,
            Purpose::Noise(i) => 1 + i as u64,
        }
    }
}

/// Seed of one Monte Carlo trial. ChaCha is counter based, so every
/// `(root, trial, purpose)` triple addresses its own reproducible stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeed {
    pub root: u64,
    pub trial: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl TrialSeed {
    pub fn new(root: u64, trial: u64) -> Self {
        TrialSeed { root, trial }
    }

    pub fn rng(&self, purpose: Purpose) -> ChaCha8Rng {
        let mut trial = self.trial;
        let mut state = self.root ^ splitmix64(&mut trial);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(purpose.stream());
        rng
    }
}

/// Circularly-symmetric complex Gaussian with `E|w|² = variance`.
fn complex_gaussian<R: rand::Rng>(rng: &mut R, variance: f64) -> C64 {
    let s = libm::sqrt(variance / 2.0);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

/// `α_{ℓ,n} = g_ℓ w_{ℓ,n}`, shape `L × N`.
pub fn draw_gains(scenario: &Scenario, seed: &TrialSeed) -> CMatrix {
    let fixed = scenario.fixed_gains();
    let mut rng = seed.rng(Purpose::Gains);
    let var = scenario.gain_std * scenario.gain_std;
    let mut out = CMatrix::zeros(scenario.num_paths(), scenario.num_snapshots);
    // Column-major fill keeps snapshot n's gains adjacent in the stream.
    for n in 0..scenario.num_snapshots {
        for (l, g) in fixed.iter().enumerate() {
            out[(l, n)] = complex_gaussian(&mut rng, var) * *g;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBatch {
    /// `M × N`, column `n` is `y_n`.
    pub observations: CMatrix,
    pub true_gains: CMatrix,
    pub seed: TrialSeed,
}

/// Noiseless beamspace response `√P Fᵀ V α`.
pub fn noiseless_observations(
    arr: &ArrayConfig,
    scenario: &Scenario,
    f: &Precoder,
    gains: &CMatrix,
) -> Result<CMatrix> {
    if f.num_antennas() != arr.num_elements {
        return Err(Error::DimensionMismatch {
            context: "precoder rows vs array size",
            expected: arr.num_elements,
            found: f.num_antennas(),
        });
    }
    if gains.nrows() != scenario.num_paths() {
        return Err(Error::DimensionMismatch {
            context: "gain rows vs path count",
            expected: scenario.num_paths(),
            found: gains.nrows(),
        });
    }
    let v = arr.steering_matrix(&scenario.angles())?;
    let c = f.matrix().transpose() * v;
    Ok((c * gains).scale(libm::sqrt(scenario.tx_power)))
}

/// Observations for one trial; noise comes from [`Purpose::Noise`]`(stream)`.
pub fn simulate(
    arr: &ArrayConfig,
    scenario: &Scenario,
    f: &Precoder,
    gains: &CMatrix,
    seed: &TrialSeed,
    stream: u32,
) -> Result<SnapshotBatch> {
    let mut y = noiseless_observations(arr, scenario, f, gains)?;
    let mut rng = seed.rng(Purpose::Noise(stream));
    for n in 0..y.ncols() {
        for m in 0..y.nrows() {
            y[(m, n)] += complex_gaussian(&mut rng, scenario.noise_power);
        }
    }
    Ok(SnapshotBatch {
        observations: y,
        true_gains: gains.clone(),
        seed: *seed,
    })
}

/// `R̃ = (1/N) Σ y_n y_nᴴ`.
pub fn sample_covariance(batch: &SnapshotBatch) -> CMatrix {
    covariance_of(&batch.observations)
}

pub fn covariance_of(y: &CMatrix) -> CMatrix {
    let n = y.ncols().max(1) as f64;
    let r = (y * y.adjoint()).unscale(n);
    // Exact Hermitian symmetry.
    (&r + r.adjoint()).scale(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{build_baseline, CodebookSpec};
    use crate::linalg::hermitian_eig_desc;

    fn arr() -> ArrayConfig {
        ArrayConfig::half_wavelength(64).unwrap()
    }

    fn sum_precoder(s: &Scenario) -> Precoder {
        build_baseline(&arr(), &CodebookSpec::new(s.intervals(), 0.01, false)).unwrap()
    }

    #[test]
    fn zero_db_gives_unit_fixed_gain() {
        let s = Scenario::single_path(20.0, 3.0, 0.0, 10).unwrap();
        assert!((s.fixed_gains()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gain_sample_mean_is_small() {
        let mut s = Scenario::single_path(20.0, 3.0, 0.0, 100_000).unwrap();
        s.gain_std = 10.0;
        let g = draw_gains(&s, &TrialSeed::new(42, 0));
        let mean = g.row(0).iter().sum::<C64>() / 1e5;
        // 5 standard errors of the mean.
        assert!(mean.norm() < 5.0 * 10.0 / (1e5f64).sqrt());
        let power = g.row(0).iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e5;
        assert!((power - 100.0).abs() < 2.0);
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        let s = Scenario::single_path(20.0, 3.0, 10.0, 50).unwrap();
        let a = draw_gains(&s, &TrialSeed::new(1, 3));
        let b = draw_gains(&s, &TrialSeed::new(1, 3));
        let c = draw_gains(&s, &TrialSeed::new(1, 4));
        let d = draw_gains(&s, &TrialSeed::new(2, 3));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn noiseless_single_path_matches_beamspace_response() {
        let mut s = Scenario::single_path(20.0, 3.0, 0.0, 1).unwrap();
        s.noise_power = 1e-300;
        let f = sum_precoder(&s);
        let gains = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let batch = simulate(&arr(), &s, &f, &gains, &TrialSeed::new(0, 0), 0).unwrap();
        let want = f.matrix().transpose() * arr().steering_vector(20.0).unwrap();
        assert!((batch.observations.column(0) - want).norm() < 1e-12);
    }

    #[test]
    fn noise_power_matches_dimension() {
        let s = Scenario::single_path(20.0, 3.0, 0.0, 10_000).unwrap();
        let f = sum_precoder(&s);
        let gains = CMatrix::zeros(1, 10_000);
        let batch = simulate(&arr(), &s, &f, &gains, &TrialSeed::new(9, 0), 0).unwrap();
        let m = f.num_beams() as f64;
        let mean = batch.observations.iter().map(|z| z.norm_sqr()).sum::<f64>() / 10_000.0;
        assert!((mean - m).abs() / m < 0.05);
        // Noise floor of the covariance.
        let (ev, _) = hermitian_eig_desc(&sample_covariance(&batch));
        let avg = ev.iter().sum::<f64>() / ev.len() as f64;
        assert!((avg - 1.0).abs() < 0.05);
    }

    #[test]
    fn simulation_is_linear_in_gains() {
        let s = Scenario::single_path(-35.0, 3.0, 10.0, 20).unwrap();
        let f = sum_precoder(&s);
        let seed = TrialSeed::new(5, 1);
        let g = draw_gains(&s, &seed);
        let y1 = simulate(&arr(), &s, &f, &g, &seed, 0).unwrap().observations;
        let y2 = simulate(&arr(), &s, &f, &g.scale(2.0), &seed, 0).unwrap().observations;
        let signal = noiseless_observations(&arr(), &s, &f, &g).unwrap();
        assert!(((y2 - y1) - signal).norm() < 1e-9);
    }

    #[test]
    fn covariance_is_hermitian_psd() {
        let s = Scenario::single_path(10.0, 3.0, 10.0, 1).unwrap();
        let f = sum_precoder(&s);
        let seed = TrialSeed::new(3, 0);
        let g = draw_gains(&s, &seed);
        let batch = simulate(&arr(), &s, &f, &g, &seed, 0).unwrap();
        let r = sample_covariance(&batch);
        assert!((&r - r.adjoint()).norm() < 1e-12);
        let y = batch.observations.column(0);
        assert!((&r - y * y.adjoint()).norm() < 1e-9 * r.norm());
        let (ev, _) = hermitian_eig_desc(&r);
        assert!(ev.iter().all(|&e| e > -1e-9 * ev[0]));
        assert!(r.trace().re >= 0.0);
    }

    #[test]
    fn decorrelated_paths_span_l_dimensions() {
        let paths = alloc::vec![
            PathSpec {
                theta_deg: 20.0,
                snr_db: 20.0,
                uncertainty: UncertaintyInterval::new(0, 17.0, 23.0).unwrap()
            },
            PathSpec {
                theta_deg: 70.0,
                snr_db: 20.0,
                uncertainty: UncertaintyInterval::new(1, 67.0, 73.0).unwrap()
            },
        ];
        let mut s = Scenario::new(paths, 10_000).unwrap();
        s.noise_power = 1e-12;
        let f = sum_precoder(&s);
        let seed = TrialSeed::new(77, 0);
        let g = draw_gains(&s, &seed);
        let r = sample_covariance(&simulate(&arr(), &s, &f, &g, &seed, 0).unwrap());
        let (ev, _) = hermitian_eig_desc(&r);
        let above = ev.iter().filter(|&&e| e > 1e3 * s.noise_power).count();
        assert_eq!(above, 2);
    }

    #[test]
    fn scenario_validation() {
        let u = UncertaintyInterval::new(0, 17.0, 23.0).unwrap();
        let p = PathSpec {
            theta_deg: 20.0,
            snr_db: 0.0,
            uncertainty: u,
        };
        assert!(Scenario::new(alloc::vec![p, p], 10).is_err());
        assert!(Scenario::new(alloc::vec![p], 0).is_err());
        assert!(Scenario::new(Vec::new(), 10).is_err());
    }
}
