//! Projection of a raw χ onto physical process matrices.
//!
//! The fit minimizes `‖χ − H‖_F²`, where `H` is the Hermitian part of the
//! raw matrix, over `χ = T†T` with `T` lower triangular (real diagonal, 16
//! real parameters), so positivity holds by construction. The bound
//! `λmax(P) ≤ 1` is enforced with a staged quadratic penalty whose weight
//! grows geometrically; each stage also updates a Lagrange multiplier
//! estimate so the constraint can be met at finite weight. In
//! trace-preserving mode `Tr χ = 1` and residuals i–iii are added as
//! equality constraints.
//!
//! After the stages a closed-form restoration step removes whatever
//! violation is left: the general mode rescales χ by `1/λmax(P)`, the
//! trace-preserving mode maps every operation element `E` to `E P^{-1/2}`.
//!
//! The factorized problem can stall at rank-deficient stationary points
//! even though the underlying problem is convex, so a second candidate is
//! computed directly in χ space by Dykstra's alternating projections and the
//! better feasible point wins.

use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::pauli::{self, hermitian_eig2, hermitian_eig4, sigma, Mat4};
use crate::process::{p_eig_plus, p_matrix_of, radical, tp_residuals, ChiStatus, ProcessMatrix};

/// Constraint violation accepted in a returned fit.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Below this radical the gradient of the radical term is taken as zero.
const RADICAL_FLOOR: f64 = 1e-12;

/// Eigenvalue floor used when building the warm start.
const WARM_START_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Hermitian, positive semidefinite, `λmax(P) ≤ 1`.
    General,
    /// Additionally `Tr χ = 1` and residuals i–iii equal to zero.
    TracePreserving,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub mode: FitMode,
    /// Budget of inner gradient steps summed over all stages.
    pub max_iterations: usize,
    pub objective_tolerance: f64,
    pub initial_weight: f64,
    pub weight_factor: f64,
    pub stages: usize,
    /// Recorded with the result; the optimizer itself draws no random numbers.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            mode: FitMode::General,
            max_iterations: 5000,
            objective_tolerance: 1e-10,
            initial_weight: 1.0,
            weight_factor: 10.0,
            stages: 6,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn trace_preserving() -> Self {
        FitConfig {
            mode: FitMode::TracePreserving,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.stages == 0 {
            return Err(QptError::InvalidArgument(
                "max_iterations and stages must be positive".into(),
            ));
        }
        if !(self.objective_tolerance > 0.0
            && self.initial_weight > 0.0
            && self.weight_factor > 1.0)
        {
            return Err(QptError::InvalidArgument(
                "tolerances and weights must be positive with an increasing schedule".into(),
            ));
        }
        Ok(())
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.stages)
            .map(|s| self.initial_weight * self.weight_factor.powi(s as i32))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub weight: f64,
    pub objective: f64,
    pub violation: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub chi: ProcessMatrix,
    /// Squared Frobenius distance to the hermitized input.
    pub objective: f64,
    pub iterations: usize,
    pub constraint_violation: f64,
    pub converged: bool,
    pub restarted: bool,
    pub stages: Vec<StageRecord>,
}

/// `(χ + χ†)/2`, the Frobenius-nearest Hermitian matrix.
pub fn hermitize(chi_raw: &ProcessMatrix) -> ProcessMatrix {
    let m = chi_raw.matrix();
    ProcessMatrix::raw((m + m.adjoint()) * Complex64::new(0.5, 0.0))
        .expect("hermitizing a finite matrix keeps it finite")
}

/// Number of real parameters of a lower-triangular T with real diagonal.
pub const N_PARAMS: usize = 16;

const OFF_DIAGONAL: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

pub fn t_from_params(x: &[f64; N_PARAMS]) -> Mat4 {
    let mut t = Mat4::zeros();
    for i in 0..4 {
        t[(i, i)] = Complex64::new(x[i], 0.0);
    }
    for (p, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        t[(i, j)] = Complex64::new(x[4 + 2 * p], x[5 + 2 * p]);
    }
    t
}

fn params_from_t(t: &Mat4) -> [f64; N_PARAMS] {
    let mut x = [0.0; N_PARAMS];
    for i in 0..4 {
        x[i] = t[(i, i)].re;
    }
    for (p, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        x[4 + 2 * p] = t[(i, j)].re;
        x[5 + 2 * p] = t[(i, j)].im;
    }
    x
}

pub fn chi_from_params(x: &[f64; N_PARAMS]) -> Mat4 {
    let t = t_from_params(x);
    t.adjoint() * t
}

/// Hermitian χ-gradient of `Re χ_ab`.
fn grad_re(a: usize, b: usize) -> Mat4 {
    let mut g = Mat4::zeros();
    g[(a, b)] += Complex64::new(0.5, 0.0);
    g[(b, a)] += Complex64::new(0.5, 0.0);
    g
}

/// Hermitian χ-gradient of `Im χ_ab`.
fn grad_im(a: usize, b: usize) -> Mat4 {
    let mut g = Mat4::zeros();
    g[(a, b)] += Complex64::new(0.0, 0.5);
    g[(b, a)] += Complex64::new(0.0, -0.5);
    g
}

/// χ-gradients of the three residuals returned by [`tp_residuals`].
fn residual_gradients() -> [Mat4; 3] {
    [
        grad_im(2, 3) + grad_re(0, 1),
        grad_im(1, 3) - grad_re(0, 2),
        grad_im(1, 2) + grad_re(0, 3),
    ]
}

/// Violation of the constraints for `mode`, never negative.
pub fn constraint_violation(chi: &Mat4, mode: FitMode) -> f64 {
    let (eigs, _) = hermitian_eig4(chi);
    let mut v = (-eigs[0]).max(p_eig_plus(chi) - 1.0).max(0.0);
    if mode == FitMode::TracePreserving {
        v = v.max((chi.trace().re - 1.0).abs());
        for r in tp_residuals(chi) {
            v = v.max(r.abs());
        }
    }
    v
}

/// The penalized objective for one stage, as a function of the 16 real
/// parameters of T.
#[derive(Debug, Clone)]
pub struct PenalizedObjective {
    pub target: Mat4,
    pub mode: FitMode,
    pub weight: f64,
    /// Multiplier of the `λmax(P) ≤ 1` constraint.
    pub bound_multiplier: f64,
    /// Multipliers of `Tr χ − 1` and residuals i–iii (trace-preserving mode).
    pub equality_multipliers: [f64; 4],
}

impl PenalizedObjective {
    pub fn new(target: Mat4, mode: FitMode, weight: f64) -> Self {
        PenalizedObjective {
            target,
            mode,
            weight,
            bound_multiplier: 0.0,
            equality_multipliers: [0.0; 4],
        }
    }

    fn equalities(&self, chi: &Mat4) -> [f64; 4] {
        let [a, b, c] = tp_residuals(chi);
        [chi.trace().re - 1.0, a, b, c]
    }

    pub fn value(&self, x: &[f64; N_PARAMS]) -> f64 {
        self.value_and_gradient(x).0
    }

    pub fn value_and_gradient(&self, x: &[f64; N_PARAMS]) -> (f64, [f64; N_PARAMS]) {
        let t = t_from_params(x);
        let chi = t.adjoint() * t;
        let diff = chi - self.target;
        let mut value = diff.norm_squared();
        let mut g = diff * Complex64::new(2.0, 0.0);

        let w = self.weight;
        let shift = self.bound_multiplier / (2.0 * w);
        let excess = p_eig_plus(&chi) - 1.0;
        let active = (excess + shift).max(0.0);
        value += w * (active * active - shift * shift);
        if active > 0.0 {
            let rad = radical(&chi);
            let mut g_bound = Mat4::identity();
            if rad >= RADICAL_FLOOR {
                let r = tp_residuals(&chi);
                for (rk, gk) in r.iter().zip(residual_gradients()) {
                    g_bound += gk * Complex64::new(2.0 * rk / rad, 0.0);
                }
            }
            g += g_bound * Complex64::new(2.0 * w * active, 0.0);
        }

        if self.mode == FitMode::TracePreserving {
            let h = self.equalities(&chi);
            let grads = residual_gradients();
            for (k, hk) in h.iter().enumerate() {
                let nu = self.equality_multipliers[k];
                value += w * hk * hk + nu * hk;
                let gk = if k == 0 {
                    Mat4::identity()
                } else {
                    grads[k - 1]
                };
                g += gk * Complex64::new(2.0 * w * hk + nu, 0.0);
            }
        }

        // d/dT of f(T†T) for Hermitian gradient G is 2 T G on the free entries.
        let d = t * g * Complex64::new(2.0, 0.0);
        let mut grad = [0.0; N_PARAMS];
        for i in 0..4 {
            grad[i] = d[(i, i)].re;
        }
        for (p, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
            grad[4 + 2 * p] = d[(i, j)].re;
            grad[5 + 2 * p] = d[(i, j)].im;
        }
        (value, grad)
    }

    fn update_multipliers(&mut self, chi: &Mat4) {
        let w = self.weight;
        self.bound_multiplier =
            (self.bound_multiplier + 2.0 * w * (p_eig_plus(chi) - 1.0)).max(0.0);
        if self.mode == FitMode::TracePreserving {
            let h = self.equalities(chi);
            for (mu, hk) in self.equality_multipliers.iter_mut().zip(h) {
                *mu += 2.0 * w * hk;
            }
        }
    }
}

struct InnerOutcome {
    x: [f64; N_PARAMS],
    iterations: usize,
    converged: bool,
}

fn norm2(v: &[f64; N_PARAMS]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Gradient descent with Barzilai–Borwein trial steps and Armijo
/// backtracking.
fn minimize(
    objective: &PenalizedObjective,
    start: [f64; N_PARAMS],
    budget: usize,
    tolerance: f64,
) -> InnerOutcome {
    let mut x = start;
    let (mut f, mut g) = objective.value_and_gradient(&x);
    let mut step = 1.0 / norm2(&g).sqrt().max(1.0);
    let mut iterations = 0;
    while iterations < budget {
        let gg = norm2(&g);
        if !f.is_finite() || gg < 1e-30 {
            return InnerOutcome {
                x,
                iterations,
                converged: f.is_finite(),
            };
        }
        iterations += 1;
        let mut t = step;
        let (x_new, f_new, g_new) = loop {
            let trial: [f64; N_PARAMS] = std::array::from_fn(|i| x[i] - t * g[i]);
            let (ft, gt) = objective.value_and_gradient(&trial);
            if ft.is_finite() && ft <= f - 1e-4 * t * gg {
                break (trial, ft, gt);
            }
            t *= 0.5;
            if t < 1e-30 {
                return InnerOutcome {
                    x,
                    iterations,
                    converged: true,
                };
            }
        };
        let s: [f64; N_PARAMS] = std::array::from_fn(|i| x_new[i] - x[i]);
        let y: [f64; N_PARAMS] = std::array::from_fn(|i| g_new[i] - g[i]);
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        step = if sy > 0.0 { norm2(&s) / sy } else { 2.0 * t };
        let change = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        if change < tolerance {
            return InnerOutcome {
                x,
                iterations,
                converged: true,
            };
        }
    }
    InnerOutcome {
        x,
        iterations,
        converged: false,
    }
}

/// T with `T†T` equal to the eigenvalue-floored version of `h`.
fn warm_start(h: &Mat4) -> [f64; N_PARAMS] {
    let (values, vectors) = hermitian_eig4(h);
    let mut floored = Mat4::zeros();
    for k in 0..4 {
        let v = vectors.column(k);
        floored += v * v.adjoint() * Complex64::new(values[k].max(WARM_START_FLOOR), 0.0);
    }
    // Reverse the index order so an ordinary L L† factorization yields
    // χ = T†T with T lower triangular: T = J L† J.
    let rev = Mat4::from_fn(|i, j| floored[(3 - i, 3 - j)]);
    let mut jitter = 0.0;
    loop {
        let shifted = rev + Mat4::identity() * Complex64::new(jitter, 0.0);
        if let Some(chol) = Cholesky::new(shifted) {
            let l_adj = chol.l().adjoint();
            let t = Mat4::from_fn(|i, j| l_adj[(3 - i, 3 - j)]);
            return params_from_t(&t);
        }
        jitter = if jitter == 0.0 {
            WARM_START_FLOOR
        } else {
            jitter * 10.0
        };
    }
}

fn fallback_start() -> [f64; N_PARAMS] {
    let mut x = [0.0; N_PARAMS];
    x[..4].fill(0.5);
    x
}

/// Clips the eigenvalues of a Hermitian 4×4 matrix at zero.
fn project_psd(h: &Mat4) -> Mat4 {
    let (values, vectors) = hermitian_eig4(h);
    let mut out = Mat4::zeros();
    for k in 0..4 {
        if values[k] > 0.0 {
            let v = vectors.column(k);
            out += v * v.adjoint() * Complex64::new(values[k], 0.0);
        }
    }
    out
}

/// Adjoint of χ ↦ P(χ): `(P*Y)_mn = Tr(σ_m σ_n Y)`.
fn p_adjoint(y: &pauli::Mat2) -> Mat4 {
    Mat4::from_fn(|m, n| (sigma(m) * sigma(n) * y).trace())
}

/// Projection onto `{P(χ) ≤ I}` (general) or `{P(χ) = I}` (trace
/// preserving). Since `P P* = 8·id` this is `χ − P*(P − Π(P))/8`.
fn project_p_set(chi: &Mat4, mode: FitMode) -> Mat4 {
    let p = p_matrix_of(chi);
    let p = (p + p.adjoint()) * Complex64::new(0.5, 0.0);
    let target = match mode {
        FitMode::TracePreserving => pauli::Mat2::identity(),
        FitMode::General => match hermitian_eig2(&p) {
            Ok(eig) => eig
                .eigenvalues
                .iter()
                .zip(&eig.eigenvectors)
                .fold(pauli::Mat2::zeros(), |acc, (l, v)| {
                    acc + v * v.adjoint() * Complex64::new(l.min(1.0), 0.0)
                }),
            Err(_) => return *chi,
        },
    };
    chi - p_adjoint(&(p - target)) * Complex64::new(0.125, 0.0)
}

const DYKSTRA_MAX_ITER: usize = 20_000;
const DYKSTRA_TOL: f64 = 1e-15;

/// Frobenius projection of `target` onto the feasible set, returned as the
/// last positive semidefinite iterate.
fn dykstra(target: &Mat4, mode: FitMode) -> Mat4 {
    let mut x = *target;
    let mut psd = x;
    let (mut p, mut q) = (Mat4::zeros(), Mat4::zeros());
    for _ in 0..DYKSTRA_MAX_ITER {
        psd = project_psd(&(x + p));
        p += x - psd;
        let next = project_p_set(&(psd + q), mode);
        q += psd - next;
        let change = (next - x).norm();
        x = next;
        if change <= DYKSTRA_TOL * (1.0 + x.norm()) {
            break;
        }
    }
    psd
}

/// Removes residual constraint violation in closed form.
fn restore(chi: &Mat4, mode: FitMode) -> Option<Mat4> {
    match mode {
        FitMode::General => {
            let top = p_eig_plus(chi);
            Some(if top > 1.0 {
                chi / Complex64::new(top, 0.0)
            } else {
                *chi
            })
        }
        FitMode::TracePreserving => {
            let p = p_matrix_of(chi);
            let p = (p + p.adjoint()) * Complex64::new(0.5, 0.0);
            let eig = hermitian_eig2(&p).ok()?;
            if eig.eigenvalues[0] <= 1e-12 {
                return None;
            }
            let mut q = pauli::Mat2::zeros();
            for (l, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
                q += v * v.adjoint() * Complex64::new(l.powf(-0.5), 0.0);
            }
            // σ_m Q = Σ_n c_mn σ_n, so E Q has coefficients Cᵀ e and
            // χ' = Cᵀ χ C̄.
            let c = Mat4::from_fn(|m, n| pauli::complex_coefficients(&(sigma(m) * q))[n]);
            Some(c.transpose() * chi * c.conjugate())
        }
    }
}

struct Candidate {
    chi: Mat4,
    objective: f64,
    violation: f64,
}

/// Fits the nearest physical χ to `chi_raw`.
pub fn fit_physical(chi_raw: &ProcessMatrix, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let target = *hermitize(chi_raw).matrix();
    if !target.norm_squared().is_finite() {
        return Err(QptError::InvalidArgument(
            "process matrix entries are too large to fit".into(),
        ));
    }
    let mode = config.mode;
    let weights = config.weights();
    let distance = |chi: &Mat4| (chi - target).norm_squared();

    let mut x = warm_start(&target);
    let mut restarted = false;
    if mode == FitMode::TracePreserving && chi_from_params(&x).trace().re < 1e-6 {
        x = fallback_start();
        restarted = true;
    }

    let mut objective = PenalizedObjective::new(target, mode, weights[0]);
    let mut stages = Vec::new();
    let mut used = 0usize;
    let mut converged = false;
    let mut best: Option<Candidate> = None;
    let mut least_violating: Option<Candidate> = None;

    // Feasible candidates compete on objective, infeasible ones on violation.
    let consider = |chi: Mat4, best: &mut Option<Candidate>, worst: &mut Option<Candidate>| {
        let cand = Candidate {
            objective: distance(&chi),
            violation: constraint_violation(&chi, mode),
            chi,
        };
        if cand.violation <= FEASIBILITY_TOL {
            if best.as_ref().is_none_or(|b| cand.objective < b.objective) {
                *best = Some(cand);
            }
        } else if worst.as_ref().is_none_or(|b| cand.violation < b.violation) {
            *worst = Some(cand);
        }
    };

    let mut stage = 0;
    let per_stage = (config.max_iterations / (config.stages + 1)).max(1);
    loop {
        let extra = stage >= weights.len();
        if extra
            && (used >= config.max_iterations
                || stages
                    .last()
                    .is_some_and(|s: &StageRecord| s.violation <= FEASIBILITY_TOL))
        {
            break;
        }
        if !extra && used >= config.max_iterations {
            break;
        }
        objective.weight = weights[stage.min(weights.len() - 1)];
        let before = constraint_violation(&chi_from_params(&x), mode);
        let budget = if extra {
            config.max_iterations - used
        } else {
            per_stage.min(config.max_iterations - used)
        };
        let out = minimize(&objective, x, budget, config.objective_tolerance);
        used += out.iterations;
        let chi = chi_from_params(&out.x);
        let finite = pauli::is_finite4(&chi);
        let violation = if finite {
            constraint_violation(&chi, mode)
        } else {
            f64::INFINITY
        };

        if stage == 0
            && !restarted
            && (!finite || (violation > before && violation > FEASIBILITY_TOL))
        {
            x = fallback_start();
            restarted = true;
            objective = PenalizedObjective::new(target, mode, weights[0]);
            continue;
        }
        if !finite {
            break;
        }
        stages.push(StageRecord {
            weight: objective.weight,
            objective: distance(&chi),
            violation,
            iterations: out.iterations,
        });
        consider(chi, &mut best, &mut least_violating);
        converged = out.converged && violation <= FEASIBILITY_TOL;
        objective.update_multipliers(&chi);
        x = out.x;
        stage += 1;
        if extra && out.iterations == 0 {
            break;
        }
    }

    // Closed-form restoration of the last iterate, the best infeasible one
    // and the direct projection.
    let last = chi_from_params(&x);
    let projected = dykstra(&target, mode);
    for chi in [
        Some(last),
        least_violating.as_ref().map(|c| c.chi),
        Some(projected),
    ]
    .into_iter()
    .flatten()
    {
        if let Some(restored) = restore(&chi, mode) {
            if pauli::is_finite4(&restored) {
                consider(restored, &mut best, &mut least_violating);
            }
        }
    }

    match best {
        Some(mut c) => {
            // Tighten the winner from FEASIBILITY_TOL down to round-off.
            if c.violation > 0.0 {
                if let Some(restored) = restore(&c.chi, mode) {
                    let violation = constraint_violation(&restored, mode);
                    if violation <= c.violation {
                        c = Candidate {
                            objective: distance(&restored),
                            violation,
                            chi: restored,
                        };
                    }
                }
            }
            let physical = ProcessMatrix::physical(c.chi);
            match physical {
                Ok(chi) => Ok(FitResult {
                    chi,
                    objective: c.objective,
                    iterations: used,
                    constraint_violation: c.violation,
                    converged,
                    restarted,
                    stages,
                }),
                Err(_) => Err(failed(c, used, restarted, stages)),
            }
        }
        None => {
            let c = least_violating.unwrap_or_else(|| Candidate {
                chi: last,
                objective: distance(&last),
                violation: constraint_violation(&last, mode),
            });
            Err(failed(c, used, restarted, stages))
        }
    }
}

fn failed(c: Candidate, iterations: usize, restarted: bool, stages: Vec<StageRecord>) -> QptError {
    let chi = ProcessMatrix::with_status(c.chi, ChiStatus::Raw)
        .unwrap_or_else(|_| ProcessMatrix::raw(Mat4::zeros()).unwrap());
    QptError::FitFailed {
        best: Box::new(FitResult {
            chi,
            objective: c.objective,
            iterations,
            constraint_violation: c.violation,
            converged: false,
            restarted,
            stages,
        }),
    }
}
