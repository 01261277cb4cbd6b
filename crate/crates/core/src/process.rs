//! Process matrices over the fixed basis (I, σx, σy, σz).
//!
//! A channel acts as `ρ' = Σ_mn χ_mn σ_m ρ σ_n`. Its P matrix is
//! `P = Σ_mn χ_mn σ_n σ_m = Σ_i E_i† E_i`, which equals the identity for a
//! trace-preserving process and is bounded by it in general.
//!
//! For this basis P has the closed form `P = Tr(χ) I + 2 a·σ` with
//!
//! ```text
//! a_x = Im χ34 + Re χ12
//! a_y = Re χ13 − Im χ24
//! a_z = Im χ23 + Re χ14
//! ```
//!
//! (one-based indices), so the eigenvalues of P are `Tr(χ) ± 2|a|`. The
//! three components of `a` (with the sign of `a_y` flipped to match the
//! usual statement of the constraints) are the trace-preservation residuals
//! i–iii; all of them vanish, together with `Tr(χ) − 1`, exactly when
//! `P = I`.

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::pauli::{
    self, hermitian_eig2, hermitian_eig4, is_finite4, sigma, Mat2, Mat4, HERMITIAN_TOL,
};
use crate::states::DensityMatrix;

/// Tolerance used when a process matrix is declared physical.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Relative cut-off below which eigenvalues of χ are not turned into Kraus
/// operators.
pub const KRAUS_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChiStatus {
    /// Direct output of linear inversion; only finiteness is guaranteed.
    Raw,
    /// Hermitian, positive semidefinite and within the P ≤ I bound.
    Physical,
}

/// The 4×4 process matrix χ. Row/column 0..3 correspond to I, σx, σy, σz.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    chi: Mat4,
    status: ChiStatus,
}

impl ProcessMatrix {
    pub fn raw(chi: Mat4) -> Result<Self> {
        if !is_finite4(&chi) {
            return Err(QptError::Validation(
                "process matrix has non-finite entries".into(),
            ));
        }
        Ok(ProcessMatrix {
            chi,
            status: ChiStatus::Raw,
        })
    }

    /// Validates physicality at [`PHYSICAL_TOL`].
    pub fn physical(chi: Mat4) -> Result<Self> {
        Self::physical_within(chi, PHYSICAL_TOL)
    }

    pub fn physical_within(chi: Mat4, tolerance: f64) -> Result<Self> {
        let raw = Self::raw(chi)?;
        let report = constraint_report(&raw, tolerance)?;
        if report.min_chi_eigenvalue < -tolerance {
            return Err(QptError::NotPhysical {
                min_eigenvalue: report.min_chi_eigenvalue,
            });
        }
        if !report.eq10_satisfied {
            return Err(QptError::Validation(format!(
                "largest eigenvalue of P is {:.12} > 1",
                report.p_eig_plus
            )));
        }
        Ok(ProcessMatrix {
            chi,
            status: ChiStatus::Physical,
        })
    }

    pub fn with_status(chi: Mat4, status: ChiStatus) -> Result<Self> {
        match status {
            ChiStatus::Raw => Self::raw(chi),
            ChiStatus::Physical => Self::physical(chi),
        }
    }

    /// χ_mn = Σ_i e_im e_in* where `E_i = Σ_m e_im σ_m`.
    pub fn from_operators(operators: &[Mat2]) -> Result<Self> {
        Self::raw(chi_from_operators(operators))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.chi
    }

    pub fn status(&self) -> ChiStatus {
        self.status
    }

    /// One-based element access, matching the usual χ_mn notation.
    pub fn element(&self, m: usize, n: usize) -> Result<Complex64> {
        if !(1..=4).contains(&m) || !(1..=4).contains(&n) {
            return Err(QptError::InvalidArgument(format!(
                "χ index ({m},{n}) out of range"
            )));
        }
        Ok(self.chi[(m - 1, n - 1)])
    }

    pub fn trace(&self) -> f64 {
        self.chi.trace().re
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (self.chi - self.chi.adjoint()).norm()
    }

    pub fn frobenius_distance(&self, other: &ProcessMatrix) -> f64 {
        (self.chi - other.chi).norm()
    }

    pub(crate) fn require_hermitian(&self) -> Result<()> {
        let residual = self.hermiticity_residual();
        if residual <= HERMITIAN_TOL {
            Ok(())
        } else {
            Err(QptError::NotHermitian { residual })
        }
    }
}

pub(crate) fn chi_from_operators(operators: &[Mat2]) -> Mat4 {
    let mut chi = Mat4::zeros();
    for e in operators {
        let c = Vector4::from(pauli::complex_coefficients(e));
        chi += c * c.adjoint();
    }
    chi
}

/// `Σ_mn χ_mn σ_m ρ σ_n` without any validation.
pub fn channel_action(chi: &Mat4, rho: &Mat2) -> Mat2 {
    let left: [Mat2; 4] = std::array::from_fn(|m| sigma(m) * rho);
    let mut out = Mat2::zeros();
    for m in 0..4 {
        for n in 0..4 {
            let c = chi[(m, n)];
            if c != Complex64::new(0.0, 0.0) {
                out += left[m] * sigma(n) * c;
            }
        }
    }
    out
}

/// Applies the channel to a state. The result carries the input's label and
/// must itself be a valid (possibly lossy) state.
pub fn apply_channel(chi: &ProcessMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    chi.require_hermitian()?;
    DensityMatrix::new(channel_action(chi.matrix(), rho.matrix()), rho.label())
}

/// `P = Σ_mn χ_mn σ_n† σ_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PMatrix(pub Mat2);

impl PMatrix {
    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }
}

pub fn p_matrix(chi: &ProcessMatrix) -> PMatrix {
    PMatrix(p_matrix_of(chi.matrix()))
}

pub(crate) fn p_matrix_of(chi: &Mat4) -> Mat2 {
    let mut p = Mat2::zeros();
    for m in 0..4 {
        for n in 0..4 {
            p += sigma(n) * sigma(m) * chi[(m, n)];
        }
    }
    p
}

/// Residuals of constraints i–iii:
/// `(Im χ34 + Re χ12, Im χ24 − Re χ13, Im χ23 + Re χ14)`.
pub fn tp_residuals(chi: &Mat4) -> [f64; 3] {
    [
        chi[(2, 3)].im + chi[(0, 1)].re,
        chi[(1, 3)].im - chi[(0, 2)].re,
        chi[(1, 2)].im + chi[(0, 3)].re,
    ]
}

/// The square-root term shared by both closed-form eigenvalues of P.
pub fn radical(chi: &Mat4) -> f64 {
    let [a, b, c] = tp_residuals(chi);
    (a * a + b * b + c * c).sqrt()
}

/// Largest eigenvalue of P in closed form, `Tr(χ) + 2·radical`.
pub fn p_eig_plus(chi: &Mat4) -> f64 {
    chi.trace().re + 2.0 * radical(chi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub trace_chi: f64,
    pub p_eig_plus: f64,
    pub p_eig_minus: f64,
    pub radical: f64,
    pub tp_residuals: [f64; 3],
    pub trace_identity_residual: f64,
    pub min_chi_eigenvalue: f64,
    pub eq10_satisfied: bool,
    pub tp_consistent: bool,
}

pub fn constraint_report(chi: &ProcessMatrix, tolerance: f64) -> Result<ConstraintReport> {
    chi.require_hermitian()?;
    let m = chi.matrix();
    let trace_chi = m.trace().re;
    let residuals = tp_residuals(m);
    let rad = radical(m);
    let p_eig_plus = trace_chi + 2.0 * rad;
    let p_eig_minus = trace_chi - 2.0 * rad;
    let p_trace = p_matrix_of(m).trace().re;
    let (eigs, _) = hermitian_eig4(m);
    let tp_consistent =
        (trace_chi - 1.0).abs() <= tolerance && residuals.iter().all(|r| r.abs() <= tolerance);
    Ok(ConstraintReport {
        trace_chi,
        p_eig_plus,
        p_eig_minus,
        radical: rad,
        tp_residuals: residuals,
        trace_identity_residual: (trace_chi - p_trace / 2.0).abs(),
        min_chi_eigenvalue: eigs[0],
        eq10_satisfied: p_eig_plus <= 1.0 + tolerance,
        tp_consistent,
    })
}

/// Eigenvalues of P from a direct numerical eigendecomposition, ascending.
/// Independent cross-check of the closed form in [`constraint_report`].
pub fn p_eigenvalues_reference(chi: &ProcessMatrix) -> Result<(f64, f64)> {
    chi.require_hermitian()?;
    // Hermitize away the round-off asymmetry before the 2×2 solver sees it.
    let p = p_matrix_of(chi.matrix());
    let p = (p + p.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = hermitian_eig2(&p)?;
    Ok((eig.eigenvalues[0], eig.eigenvalues[1]))
}

/// Operation elements of a channel, ordered by decreasing weight.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    operators: Vec<Mat2>,
    weights: Vec<f64>,
}

impl KrausSet {
    pub fn operators(&self) -> &[Mat2] {
        &self.operators
    }

    /// Eigenvalue of χ each operator was built from.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn apply(&self, rho: &Mat2) -> Mat2 {
        self.operators
            .iter()
            .fold(Mat2::zeros(), |acc, e| acc + e * rho * e.adjoint())
    }

    /// `Σ E† E`.
    pub fn completeness(&self) -> Mat2 {
        self.operators
            .iter()
            .fold(Mat2::zeros(), |acc, e| acc + e.adjoint() * e)
    }

    pub fn to_chi(&self) -> Mat4 {
        chi_from_operators(&self.operators)
    }
}

/// Rotates `e` by a global phase so its largest-magnitude entry is real and
/// non-negative. Ties go to the first entry in row-major order.
fn fix_phase(e: Mat2) -> Mat2 {
    let entries = [e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]];
    let max = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return e;
    }
    let pivot = entries
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-12))
        .copied()
        .unwrap();
    e * (pivot.conj() / pivot.norm())
}

pub fn kraus_from_chi(chi: &ProcessMatrix) -> Result<KrausSet> {
    chi.require_hermitian()?;
    let (values, vectors) = hermitian_eig4(chi.matrix());
    if values[0] < -PHYSICAL_TOL {
        return Err(QptError::NotPhysical {
            min_eigenvalue: values[0],
        });
    }
    let cutoff = KRAUS_RANK_TOL * chi.trace().max(0.0);
    let mut operators = Vec::new();
    let mut weights = Vec::new();
    for a in (0..4).rev() {
        let mu = values[a];
        if mu <= cutoff || mu <= 0.0 {
            continue;
        }
        let coeffs: [Complex64; 4] = std::array::from_fn(|m| vectors[(m, a)] * mu.sqrt());
        operators.push(fix_phase(pauli::from_complex_coefficients(&coeffs)));
        weights.push(mu);
    }
    Ok(KrausSet { operators, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{canonical_channel, Axis, Channel};
    use crate::states::ideal_probe_states;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag4(d: [f64; 4]) -> Mat4 {
        Mat4::from_diagonal(&Vector4::from(d.map(|x| c(x, 0.0))))
    }

    fn real2(a: f64, b: f64, cc: f64, d: f64) -> Mat2 {
        Mat2::new(c(a, 0.0), c(b, 0.0), c(cc, 0.0), c(d, 0.0))
    }

    fn polarizer() -> ProcessMatrix {
        canonical_channel(&Channel::Polarizer(Axis::Z)).unwrap()
    }

    #[test]
    fn identity_channel_is_identity_map() {
        let chi = ProcessMatrix::raw(diag4([1.0, 0.0, 0.0, 0.0])).unwrap();
        for rho in ideal_probe_states() {
            let out = apply_channel(&chi, &rho).unwrap();
            assert!((out.matrix() - rho.matrix()).norm() < 1e-15);
        }
    }

    #[test]
    fn polarizer_on_mixed_state() {
        // Oracle: E ρ E† with E = |0⟩⟨0|.
        let rho = DensityMatrix::maximally_mixed("mixed");
        let e = real2(1.0, 0.0, 0.0, 0.0);
        let oracle = e * rho.matrix() * e.adjoint();
        let out = apply_channel(&polarizer(), &rho).unwrap();
        assert!((out.matrix() - oracle).norm() < 1e-15);
        assert!((out.matrix() - real2(0.5, 0.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((out.trace() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bit_flip() {
        let chi = ProcessMatrix::raw(diag4([0.0, 1.0, 0.0, 0.0])).unwrap();
        let out = apply_channel(&chi, &ideal_probe_states()[0]).unwrap();
        assert_eq!(*out.matrix(), real2(0.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn apply_rejects_non_hermitian() {
        let mut m = diag4([1.0, 0.0, 0.0, 0.0]);
        m[(0, 1)] = c(0.1, 0.0);
        let chi = ProcessMatrix::raw(m).unwrap();
        assert!(matches!(
            apply_channel(&chi, &ideal_probe_states()[0]),
            Err(QptError::NotHermitian { .. })
        ));
    }

    #[test]
    fn p_matrix_examples() {
        let id = ProcessMatrix::raw(diag4([1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(*p_matrix(&id).matrix(), sigma(0));

        // Oracle: E†E with E = |0⟩⟨0|.
        let e = real2(1.0, 0.0, 0.0, 0.0);
        assert!((p_matrix(&polarizer()).matrix() - e.adjoint() * e).norm() < 1e-15);

        let dephase = ProcessMatrix::raw(diag4([0.5, 0.5, 0.0, 0.0])).unwrap();
        assert!((p_matrix(&dephase).matrix() - sigma(0)).norm() < 1e-15);
    }

    #[test]
    fn p_matrix_follows_literal_index_order() {
        // A Hermitian χ with an imaginary σx–σy coherence; the literal σ_n σ_m
        // order gives +2 Im χ23 σz, the swapped order would give the opposite sign.
        let mut m = Mat4::zeros();
        m[(1, 2)] = c(0.0, 0.1);
        m[(2, 1)] = c(0.0, -0.1);
        let p = p_matrix_of(&m);
        assert!((p - sigma(3) * c(0.2, 0.0)).norm() < 1e-15);
        assert!((p - p.adjoint()).norm() == 0.0);
    }

    #[test]
    fn report_identity() {
        let id = ProcessMatrix::raw(diag4([1.0, 0.0, 0.0, 0.0])).unwrap();
        let r = constraint_report(&id, 1e-9).unwrap();
        assert_eq!(r.trace_chi, 1.0);
        assert_eq!(r.radical, 0.0);
        assert_eq!((r.p_eig_minus, r.p_eig_plus), (1.0, 1.0));
        assert!(r.tp_consistent && r.eq10_satisfied);
    }

    #[test]
    fn report_polarizer_saturates_bound() {
        let r = constraint_report(&polarizer(), 1e-9).unwrap();
        assert!((r.trace_chi - 0.5).abs() < 1e-15);
        assert!((r.radical - 0.25).abs() < 1e-15);
        assert!((r.p_eig_plus - 1.0).abs() < 1e-15);
        assert!(r.p_eig_minus.abs() < 1e-15);
        assert!(r.eq10_satisfied);
        assert!(!r.tp_consistent);
        // Oracle eigenvalues of diag(1, 0).
        let (lo, hi) = p_eigenvalues_reference(&polarizer()).unwrap();
        assert!(lo.abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn report_hadamard() {
        let h = 0.5;
        let mut m = Mat4::zeros();
        for (a, b) in [(1, 1), (3, 3), (1, 3), (3, 1)] {
            m[(a, b)] = c(h, 0.0);
        }
        // Oracle: e e† with e = (0, 1/√2, 0, 1/√2).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let e = Vector4::new(c(0.0, 0.0), c(s, 0.0), c(0.0, 0.0), c(s, 0.0));
        assert!((e * e.adjoint() - m).norm() < 1e-15);
        let r = constraint_report(&ProcessMatrix::raw(m).unwrap(), 1e-9).unwrap();
        assert!((r.trace_chi - 1.0).abs() < 1e-15);
        assert_eq!(r.radical, 0.0);
        assert!(r.tp_consistent);
    }

    #[test]
    fn reference_eigenvalues_agree_on_diagonal() {
        let chi = ProcessMatrix::raw(diag4([0.3, 0.2, 0.1, 0.1])).unwrap();
        let r = constraint_report(&chi, 1e-9).unwrap();
        let (lo, hi) = p_eigenvalues_reference(&chi).unwrap();
        assert!((lo - r.p_eig_minus).abs() < 1e-10);
        assert!((hi - r.p_eig_plus).abs() < 1e-10);
    }

    #[test]
    fn kraus_examples() {
        let id = ProcessMatrix::raw(diag4([1.0, 0.0, 0.0, 0.0])).unwrap();
        let k = kraus_from_chi(&id).unwrap();
        assert_eq!(k.len(), 1);
        assert!((k.operators()[0] - sigma(0)).norm() < 1e-15);

        let k = kraus_from_chi(&polarizer()).unwrap();
        assert_eq!(k.len(), 1);
        assert!((k.operators()[0] - real2(1.0, 0.0, 0.0, 0.0)).norm() < 1e-14);

        let ad = canonical_channel(&Channel::AmplitudeDamping(0.36)).unwrap();
        let k = kraus_from_chi(&ad).unwrap();
        assert_eq!(k.len(), 2);
        let e0 = real2(1.0, 0.0, 0.0, 0.8);
        let e1 = real2(0.0, 0.6, 0.0, 0.0);
        for target in [e0, e1] {
            let hit = k.operators().iter().any(|e| (e - target).norm() < 1e-12);
            assert!(hit, "missing {target} in {:?}", k.operators());
        }
        assert!((k.to_chi() - ad.matrix()).norm() < 1e-10);
    }

    #[test]
    fn kraus_rejects_negative_chi() {
        let chi = ProcessMatrix::raw(diag4([1.0, -0.01, 0.0, 0.0])).unwrap();
        assert!(matches!(
            kraus_from_chi(&chi),
            Err(QptError::NotPhysical { .. })
        ));
    }

    #[test]
    fn physical_constructor_checks_bound() {
        assert!(ProcessMatrix::physical(diag4([1.0, 0.0, 0.0, 0.0])).is_ok());
        assert!(ProcessMatrix::physical(diag4([1.2, 0.0, 0.0, 0.0])).is_err());
        assert!(ProcessMatrix::physical(diag4([1.0, -0.1, 0.0, 0.0])).is_err());
    }
}
