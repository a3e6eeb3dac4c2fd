//! ESPRIT-oriented precoder design by alternating minimization.
//!
//! The objective is
//!
//! ```text
//! ‖B - Aᵀ F‖_F² + η ‖J1 F - J2 F Λ‖_F²      s.t. |F_nm| = 1 (optional)
//! ```
//!
//! For fixed `Λ` it is a quadratic `fᴴ H f - 2 Re(pᴴ f) + c0` in
//! `f = vec(F)` with
//!
//! ```text
//! H = I_M ⊗ (Ā Aᵀ) + η (I_M ⊗ J1 - Λᵀ ⊗ J2)ᴴ (I_M ⊗ J1 - Λᵀ ⊗ J2)
//! p = vec(Ā B)
//! ```
//!
//! `H` is never formed; [`QuadraticModel`] applies it block-wise in
//! `O(N²M + NM²)`. The `F` step runs projected gradient on the unit-modulus
//! torus, the `Λ` step is the closed-form least-squares fit.

use alloc::vec::Vec;

use crate::array::{AngleGrid, ArrayConfig};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, cis, frobenius_sq, unvectorize, vectorize, CMatrix, CVector, C64};
use crate::precoder::{project_entry, Precoder};
use crate::sip::{lambda_ls, lambda_ls_min_norm, sip_error, sip_residual, LambdaFit, SipSolution};

/// Default SIP weight `η`.
pub const DEFAULT_ETA: f64 = 1e5;
const POWER_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum StepRule {
    /// `μ = 1/λ_max(H)`; stop at the first non-improving step.
    FixedInverseLipschitz,
    /// Start from `1/λ_max(H)` and halve on every non-improving step.
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InnerSolverConfig {
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Stop once `‖f_{k+1} - f_k‖ ≤ grad_tol · ‖f_k‖`.
    pub grad_tol: f64,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        InnerSolverConfig {
            max_iters: 500,
            step_rule: StepRule::FixedInverseLipschitz,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DesignConfig {
    /// Weight on the SIP error.
    pub eta: f64,
    pub max_outer_iters: usize,
    /// Relative objective decrease below which the outer loop stops.
    pub conv_tol: f64,
    pub inner: InnerSolverConfig,
    /// Enforce `|F_nm| = 1` (phase-only beamforming).
    pub unit_modulus: bool,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            eta: DEFAULT_ETA,
            max_outer_iters: 100,
            conv_tol: 1e-6,
            inner: InnerSolverConfig::default(),
            unit_modulus: true,
        }
    }
}

impl DesignConfig {
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidConfig("eta must be non-negative"));
        }
        if !(self.conv_tol.is_finite() && self.conv_tol > 0.0) {
            return Err(Error::InvalidConfig("conv_tol must be positive"));
        }
        if self.inner.max_iters == 0 {
            return Err(Error::InvalidConfig("inner max_iters must be at least 1"));
        }
        if !(self.inner.grad_tol.is_finite() && self.inner.grad_tol >= 0.0) {
            return Err(Error::InvalidConfig("grad_tol must be non-negative"));
        }
        Ok(())
    }
}

/// Matrix-vector action of a Hermitian positive semi-definite operator.
pub trait HermitianOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &CVector) -> CVector;
}

impl HermitianOperator for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &CVector) -> CVector {
        self * x
    }
}

/// The fixed-`Λ` quadratic model of the design objective.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    /// `Ā Aᵀ`, `N × N`.
    gram: CMatrix,
    /// `Ā B`, i.e. `p` reshaped to `N × M`.
    target: CMatrix,
    c0: f64,
    /// When the desired pattern is `B = Aᵀ F₀`, `F₀` lets the synthesis error
    /// be evaluated as `‖Aᵀ(F₀ - F)‖²` without cancellation.
    anchor: Option<CMatrix>,
    lambda: CMatrix,
    eta: f64,
}

/// Build `H`, `p`, `c0` for steering matrix `A` (`N × G`), desired
/// beampattern `B` (`G × M`), `Λ` and `η`.
pub fn build_quadratic(a: &CMatrix, b: &CMatrix, lambda: &CMatrix, eta: f64) -> Result<QuadraticModel> {
    if a.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch {
            context: "desired beampattern rows vs grid size",
            expected: a.ncols(),
            found: b.nrows(),
        });
    }
    let m = b.ncols();
    if lambda.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            context: "lambda must be M x M",
            expected: m,
            found: lambda.nrows(),
        });
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidConfig("eta must be non-negative"));
    }
    let a_bar = a.conjugate();
    Ok(QuadraticModel {
        gram: &a_bar * a.transpose(),
        target: a_bar * b,
        c0: frobenius_sq(b),
        anchor: None,
        lambda: lambda.clone(),
        eta,
    })
}

impl QuadraticModel {
    /// Model for the desired pattern `B = Aᵀ F₀` given the precomputed Gram
    /// matrix `Ā Aᵀ`.
    pub fn anchored(gram: CMatrix, anchor: CMatrix, lambda: CMatrix, eta: f64) -> Self {
        let target = &gram * &anchor;
        let c0 = hermitian_form(&gram, &anchor);
        QuadraticModel {
            gram,
            target,
            c0,
            anchor: Some(anchor),
            lambda,
            eta,
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.gram.nrows()
    }

    pub fn num_beams(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn lambda(&self) -> &CMatrix {
        &self.lambda
    }

    pub fn set_lambda(&mut self, lambda: CMatrix) {
        self.lambda = lambda;
    }

    /// `p = vec(Ā B)`.
    pub fn p(&self) -> CVector {
        vectorize(&self.target)
    }

    /// `H` applied to `vec(F)`, returned in matrix form.
    pub fn apply_matrix(&self, f: &CMatrix) -> CMatrix {
        let mut out = &self.gram * f;
        if self.eta > 0.0 {
            // Adjoint of F ↦ J1 F - J2 F Λ is R ↦ J1ᵀ R - J2ᵀ R Λᴴ.
            let r = sip_residual(f, &self.lambda);
            let n = f.nrows();
            let r_lh = &r * self.lambda.adjoint();
            for m in 0..f.ncols() {
                for k in 0..n - 1 {
                    out[(k, m)] += r[(k, m)] * self.eta;
                    out[(k + 1, m)] -= r_lh[(k, m)] * self.eta;
                }
            }
        }
        out
    }

    /// `‖B - Aᵀ F‖_F²`.
    pub fn synthesis_error(&self, f: &CMatrix) -> f64 {
        match &self.anchor {
            Some(anchor) => hermitian_form(&self.gram, &(anchor - f)),
            None => {
                let quad = hermitian_form(&self.gram, f);
                let lin = self.target.dotc(f).re;
                (quad - 2.0 * lin + self.c0).max(0.0)
            }
        }
    }

    pub fn sip_error(&self, f: &CMatrix) -> f64 {
        sip_error(f, &self.lambda)
    }

    /// Full objective for the model's `Λ`.
    pub fn objective(&self, f: &CMatrix) -> f64 {
        self.synthesis_error(f) + self.eta * self.sip_error(f)
    }

    /// Dense `H` (`MN × MN`). Intended for small instances and checks.
    pub fn dense(&self) -> CMatrix {
        let n = self.num_antennas();
        let m = self.num_beams();
        let dim = n * m;
        let mut h = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut e = CVector::zeros(dim);
            e[j] = C64::new(1.0, 0.0);
            h.set_column(j, &self.apply(&e));
        }
        h
    }
}

impl HermitianOperator for QuadraticModel {
    fn dim(&self) -> usize {
        self.num_antennas() * self.num_beams()
    }

    fn apply(&self, x: &CVector) -> CVector {
        let f = unvectorize(x, self.num_antennas(), self.num_beams());
        vectorize(&self.apply_matrix(&f))
    }
}

/// `Re tr(Xᴴ G X)` for Hermitian `G`.
fn hermitian_form(g: &CMatrix, x: &CMatrix) -> f64 {
    x.dotc(&(g * x)).re.max(0.0)
}

/// Entry-wise `z/|z|`; zeros map to `1`.
pub fn unit_modulus_project(f: &CVector) -> CVector {
    f.map(project_entry)
}

/// Largest eigenvalue of `op` by power iteration from a fixed start vector.
pub fn largest_eigenvalue<O: HermitianOperator + ?Sized>(op: &O, iterations: usize) -> f64 {
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    // Deterministic start with no special alignment to any Kronecker block.
    let mut x = CVector::from_fn(n, |k, _| cis(0.37 * (k * k) as f64 + 0.11 * k as f64));
    x.unscale_mut(x.norm());
    // For unit x, ‖Hx‖ ≤ λ_max and increases towards it.
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let y = op.apply(&x);
        estimate = y.norm();
        if estimate == 0.0 {
            return 0.0;
        }
        x = y.unscale(estimate);
    }
    estimate
}

/// Outcome of the unit-modulus `F` step.
#[derive(Debug, Clone)]
pub struct InnerResult {
    pub f: CVector,
    /// `fᴴ H f - 2 Re(pᴴ f)` at the returned point.
    pub value: f64,
    pub iterations: usize,
    pub step: f64,
}

fn quadratic_value(hf: &CVector, f: &CVector, p: &CVector) -> f64 {
    f.dotc(hf).re - 2.0 * p.dotc(f).re
}

/// Projected gradient on `min fᴴ H f - 2 Re(pᴴ f)` s.t. `|f_n| = 1`.
///
/// The iterate `f ← P(f - μ (H f - p))` is monotone for `μ ≤ 1/λ_max(H)`;
/// the best iterate seen is returned, so the result never scores worse than
/// `f_init`.
pub fn solve_f_subproblem<O: HermitianOperator + ?Sized>(
    op: &O,
    p: &CVector,
    f_init: &CVector,
    cfg: &InnerSolverConfig,
) -> Result<InnerResult> {
    if op.dim() != p.len() || p.len() != f_init.len() {
        return Err(Error::DimensionMismatch {
            context: "quadratic subproblem operands",
            expected: op.dim(),
            found: p.len().min(f_init.len()),
        });
    }
    if !p
        .iter()
        .chain(f_init.iter())
        .all(|z| z.re.is_finite() && z.im.is_finite())
    {
        return Err(Error::NonFinite("subproblem inputs"));
    }
    let lipschitz = largest_eigenvalue(op, POWER_ITERATIONS);
    if !lipschitz.is_finite() {
        return Err(Error::NonFinite("quadratic operator"));
    }
    let mut f = unit_modulus_project(f_init);
    let mut hf = op.apply(&f);
    let mut value = quadratic_value(&hf, &f, p);
    if lipschitz <= 0.0 {
        // H = 0: the objective is linear and P(p) is optimal.
        let g = unit_modulus_project(p);
        let hg = op.apply(&g);
        let vg = quadratic_value(&hg, &g, p);
        if vg < value {
            return Ok(InnerResult {
                f: g,
                value: vg,
                iterations: 1,
                step: 0.0,
            });
        }
        return Ok(InnerResult {
            f,
            value,
            iterations: 0,
            step: 0.0,
        });
    }
    let base_step = 1.0 / lipschitz;
    let mut step = base_step;
    let norm_f = libm::sqrt(f.len() as f64);
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let grad = &hf - p;
        let candidate = unit_modulus_project(&(&f - grad.scale(step)));
        let h_candidate = op.apply(&candidate);
        let v_candidate = quadratic_value(&h_candidate, &candidate, p);
        if !v_candidate.is_finite() {
            return Err(Error::NonFinite("subproblem iterate"));
        }
        if v_candidate >= value {
            match cfg.step_rule {
                StepRule::FixedInverseLipschitz => break,
                StepRule::Backtracking => {
                    step *= 0.5;
                    if step < base_step * 1e-9 {
                        break;
                    }
                    continue;
                }
            }
        }
        let moved = (&candidate - &f).norm();
        f = candidate;
        hf = h_candidate;
        value = v_candidate;
        if moved <= cfg.grad_tol * norm_f {
            break;
        }
    }
    Ok(InnerResult {
        f,
        value,
        iterations,
        step,
    })
}

/// Conjugate gradient for `H f = p` (the unconstrained `F` step).
pub fn solve_unconstrained<O: HermitianOperator + ?Sized>(
    op: &O,
    p: &CVector,
    f_init: &CVector,
    max_iters: usize,
    tol: f64,
) -> CVector {
    let mut x = f_init.clone();
    let mut r = p - op.apply(&x);
    let mut d = r.clone();
    let mut rr = r.norm_squared();
    let stop = tol * tol * p.norm_squared();
    for _ in 0..max_iters {
        if rr <= stop {
            break;
        }
        let hd = op.apply(&d);
        let curvature = d.dotc(&hd).re;
        if curvature <= 0.0 {
            break;
        }
        let alpha = rr / curvature;
        x += d.scale(alpha);
        r -= hd.scale(alpha);
        let rr_new = r.norm_squared();
        d = &r + d.scale(rr_new / rr);
        rr = rr_new;
    }
    x
}

/// One row of the design trace.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRecord {
    pub iteration: usize,
    pub synthesis_error: f64,
    pub sip_error: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DesignTrace {
    pub records: Vec<TraceRecord>,
}

impl DesignTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn is_non_increasing(&self, tol: f64) -> bool {
        self.records.windows(2).all(|w| w[1].objective <= w[0].objective + tol)
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone)]
pub struct DesignOutput {
    /// Designed precoder scaled to `trace(F Fᴴ) = M`.
    pub precoder: Precoder,
    /// The same precoder at design scale (unit modulus when constrained).
    pub raw: Precoder,
    /// Least-squares `Λ` of the output precoder.
    pub fit: LambdaFit,
    pub trace: DesignTrace,
}

impl DesignOutput {
    /// `Λ`, residual and deflation projector of the output precoder.
    pub fn sip_solution(&self) -> Result<SipSolution> {
        SipSolution::from_fit(self.precoder.matrix(), self.fit.clone())
    }
}

/// Alternating minimization over `F` and `Λ`, starting from `F_base` and
/// `Λ_LS(F_base)`.
///
/// The desired pattern is `B = Aᵀ F_base`. With the unit-modulus constraint,
/// `F_base` is first rescaled to the Frobenius norm of a unit-modulus matrix
/// (`√(N M)`) so the target is reachable in scale.
pub fn design(arr: &ArrayConfig, f_base: &Precoder, dcfg: &DesignConfig, grid: &AngleGrid) -> Result<DesignOutput> {
    arr.validate()?;
    dcfg.validate()?;
    let (n, m) = f_base.matrix().shape();
    if n != arr.num_elements {
        return Err(Error::DimensionMismatch {
            context: "baseline precoder rows",
            expected: arr.num_elements,
            found: n,
        });
    }
    if m == 0 || !all_finite(f_base.matrix()) {
        return Err(Error::InvalidConfig("baseline precoder must be finite and non-empty"));
    }
    let a = arr.steering_matrix(grid.angles())?;
    let gram = a.conjugate() * a.transpose();

    let (anchor, mut f) = if dcfg.unit_modulus {
        let scaled = f_base.with_power((n * m) as f64)?;
        let start = scaled.unit_modulus().into_matrix();
        (scaled.into_matrix(), start)
    } else {
        (f_base.matrix().clone(), f_base.matrix().clone())
    };
    let initial = lambda_ls_min_norm(&f)?;
    let mut model = QuadraticModel::anchored(gram, anchor, initial.lambda, dcfg.eta);

    let mut trace = DesignTrace::default();
    let record = |iteration: usize, model: &QuadraticModel, f: &CMatrix| {
        let synthesis_error = model.synthesis_error(f);
        let sip = model.sip_error(f);
        TraceRecord {
            iteration,
            synthesis_error,
            sip_error: sip,
            objective: synthesis_error + model.eta() * sip,
        }
    };
    trace.records.push(record(0, &model, &f));

    for iteration in 1..=dcfg.max_outer_iters {
        let previous = trace.last().map(|r| r.objective).unwrap_or(f64::INFINITY);

        // F step.
        let p = model.p();
        let f_vec = vectorize(&f);
        let next = if dcfg.unit_modulus {
            solve_f_subproblem(&model, &p, &f_vec, &dcfg.inner)?.f
        } else {
            solve_unconstrained(&model, &p, &f_vec, dcfg.inner.max_iters, dcfg.inner.grad_tol)
        };
        let candidate = unvectorize(&next, n, m);
        if model.objective(&candidate) <= previous {
            f = candidate;
        }

        // Λ step.
        let after_f = model.objective(&f);
        let mut trial = model.clone();
        trial.set_lambda(lambda_ls_min_norm(&f)?.lambda);
        if trial.objective(&f) <= after_f {
            model = trial;
        }

        let rec = record(iteration, &model, &f);
        let current = rec.objective;
        trace.records.push(rec);
        let decrease = previous - current;
        if decrease <= dcfg.conv_tol * previous.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let raw = Precoder::new(f);
    let precoder = raw.normalized()?;
    let fit = lambda_ls(precoder.matrix())?;
    Ok(DesignOutput {
        precoder,
        raw,
        fit,
        trace,
    })
}

/// A single unit-modulus pattern-matching `F` step with no SIP weight: the
/// phase-only version of `F_base`.
pub fn phase_only_fit(
    arr: &ArrayConfig,
    f_base: &Precoder,
    inner: &InnerSolverConfig,
    grid: &AngleGrid,
) -> Result<DesignOutput> {
    let cfg = DesignConfig {
        eta: 0.0,
        max_outer_iters: 1,
        conv_tol: 1e-6,
        inner: *inner,
        unit_modulus: true,
    };
    design(arr, f_base, &cfg, grid)
}

/// Wrapped consecutive phase differences `arg F[k+1,m] - arg F[k,m]` in
/// `(-π, π]`. Zero entries have phase 0.
pub fn phase_increment_profile(f: &CMatrix, column: usize) -> Result<Vec<f64>> {
    if column >= f.ncols() {
        return Err(Error::DimensionMismatch {
            context: "phase profile column",
            expected: f.ncols(),
            found: column,
        });
    }
    let phase = |z: C64| if z.norm() == 0.0 { 0.0 } else { z.arg() };
    let col = f.column(column);
    Ok((0..f.nrows() - 1)
        .map(|k| wrap_phase(phase(col[k + 1]) - phase(col[k])))
        .collect())
}

pub(crate) fn wrap_phase(x: f64) -> f64 {
    let tau = 2.0 * core::f64::consts::PI;
    let mut y = x % tau;
    if y <= -core::f64::consts::PI {
        y += tau;
    } else if y > core::f64::consts::PI {
        y -= tau;
    }
    y
}

/// Population variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}
