//! Density matrices with loss accounting and Stokes-parameter state
//! tomography.
//!
//! Loss is carried by the trace of the state: an output ensemble that lost
//! half of its qubits has trace 1/2. Output states are normalized to the
//! input flux, never to their own flux.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::pauli::{self, hermitian_eig2, is_finite2, Mat2, HERMITIAN_TOL};

/// Tolerance on eigenvalue positivity and trace bounds for states.
pub const STATE_TOL: f64 = 1e-9;

/// A single-qubit state, possibly sub-normalized by loss.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: Mat2,
    label: String,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and `0 ≤ Tr ≤ 1`, all within 1e-9.
    pub fn new(matrix: Mat2, label: impl Into<String>) -> Result<Self> {
        validate_state(&matrix)?;
        Ok(DensityMatrix {
            matrix,
            label: label.into(),
        })
    }

    /// Pure state `|ψ⟩⟨ψ|`; `psi` is normalized first.
    pub fn pure(psi: Vector2<Complex64>, label: impl Into<String>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(QptError::InvalidArgument(
                "state vector has zero norm".into(),
            ));
        }
        let psi = psi / Complex64::new(norm, 0.0);
        Self::new(psi * psi.adjoint(), label)
    }

    pub fn maximally_mixed(label: impl Into<String>) -> Self {
        DensityMatrix {
            matrix: pauli::sigma(0) * Complex64::new(0.5, 0.0),
            label: label.into(),
        }
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    /// Expectation value `Tr(ρ σ_k)` for a one-based basis index.
    pub fn expectation(&self, index: usize) -> Result<f64> {
        let s = pauli::pauli(index)?;
        Ok((self.matrix * s).trace().re)
    }

    pub fn stokes(&self) -> StokesVector {
        stokes_of(&self.matrix)
    }

    /// Same state rescaled to unit trace.
    pub fn normalized(&self) -> Result<DensityMatrix> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(QptError::Validation(format!(
                "cannot normalize state '{}' with trace {t:.3e}",
                self.label
            )));
        }
        Ok(DensityMatrix {
            matrix: self.matrix / Complex64::new(t, 0.0),
            label: self.label.clone(),
        })
    }
}

pub(crate) fn validate_state(m: &Mat2) -> Result<()> {
    if !is_finite2(m) {
        return Err(QptError::Validation("state has non-finite entries".into()));
    }
    let residual = pauli::hermiticity_residual(m);
    if residual > HERMITIAN_TOL {
        return Err(QptError::NotHermitian { residual });
    }
    let eig = hermitian_eig2(m)?;
    if eig.eigenvalues[0] < -STATE_TOL {
        return Err(QptError::Validation(format!(
            "state has negative eigenvalue {:.3e}",
            eig.eigenvalues[0]
        )));
    }
    let t = m.trace().re;
    if !(-STATE_TOL..=1.0 + STATE_TOL).contains(&t) {
        return Err(QptError::Validation(format!(
            "state trace {t} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Rescales a normalized output state by the transmitted flux fraction
/// `n_out / n_in`.
///
/// Fluxes are intensities or counts per fixed interval, so they need not be
/// integers.
pub fn scale_output(
    rho_normalized: &DensityMatrix,
    n_out: f64,
    n_in: f64,
) -> Result<DensityMatrix> {
    if !(n_in.is_finite() && n_in > 0.0) {
        return Err(QptError::InvalidArgument(format!(
            "input flux must be positive, got {n_in}"
        )));
    }
    if !(n_out.is_finite() && n_out >= 0.0) {
        return Err(QptError::InvalidArgument(format!(
            "output flux must be non-negative, got {n_out}"
        )));
    }
    if n_out > n_in {
        return Err(QptError::Validation(format!(
            "output flux {n_out} exceeds input flux {n_in}"
        )));
    }
    let t = rho_normalized.trace();
    if (t - 1.0).abs() > STATE_TOL {
        return Err(QptError::Validation(format!(
            "state to be scaled must have unit trace, got {t}"
        )));
    }
    DensityMatrix::new(
        rho_normalized.matrix * Complex64::new(n_out / n_in, 0.0),
        rho_normalized.label.clone(),
    )
}

/// Measurement setting. Each setting has a plus and a minus outcome:
/// Z = H/V, X = D/A, Y = R/L.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
    Y,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::Z, Basis::X, Basis::Y];

    /// Index into the Stokes vector of the asymmetry measured by this setting.
    pub fn stokes_index(self) -> usize {
        match self {
            Basis::X => 1,
            Basis::Y => 2,
            Basis::Z => 3,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Z => "Z",
            Basis::X => "X",
            Basis::Y => "Y",
        })
    }
}

impl FromStr for Basis {
    type Err = QptError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(Basis::Z),
            "X" | "x" => Ok(Basis::X),
            "Y" | "y" => Ok(Basis::Y),
            _ => Err(QptError::InvalidArgument(format!("unknown basis '{s}'"))),
        }
    }
}

/// Detector counts for one measurement setting over a fixed interval.
///
/// Counts are real-valued so that noiseless expectations can be stored
/// exactly; Poisson-sampled counts are whole numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub basis: Basis,
    pub counts_plus: f64,
    pub counts_minus: f64,
    pub n_in: u64,
}

impl CountRecord {
    pub fn new(basis: Basis, counts_plus: f64, counts_minus: f64, n_in: u64) -> Result<Self> {
        let rec = CountRecord {
            basis,
            counts_plus,
            counts_minus,
            n_in,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_in == 0 {
            return Err(QptError::InvalidArgument(
                "reference flux n_in must be positive".into(),
            ));
        }
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.counts_plus) || !ok(self.counts_minus) {
            return Err(QptError::Validation(format!(
                "{} counts must be finite and non-negative",
                self.basis
            )));
        }
        let total = self.counts_plus + self.counts_minus;
        let n_in = self.n_in as f64;
        if total > n_in * (1.0 + 1e-12) {
            return Err(QptError::Validation(format!(
                "{} counts {total} exceed reference flux {n_in}",
                self.basis
            )));
        }
        Ok(())
    }

    pub fn transmitted_fraction(&self) -> f64 {
        (self.counts_plus + self.counts_minus) / self.n_in as f64
    }
}

/// `S = (Tr ρ, Tr ρσx, Tr ρσy, Tr ρσz)` so `ρ = ½ Σ S_k σ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesVector(pub [f64; 4]);

impl StokesVector {
    pub fn flux(&self) -> f64 {
        self.0[0]
    }

    pub fn polarization_norm(&self) -> f64 {
        let [_, a, b, c] = self.0;
        (a * a + b * b + c * c).sqrt()
    }
}

pub fn stokes_of(rho: &Mat2) -> StokesVector {
    let c = pauli::complex_coefficients(rho);
    StokesVector([2.0 * c[0].re, 2.0 * c[1].re, 2.0 * c[2].re, 2.0 * c[3].re])
}

/// Stokes parameters from one record per basis. S0 is the transmitted
/// fraction averaged over the three settings.
pub fn stokes_from_counts(records: &[CountRecord]) -> Result<StokesVector> {
    let mut by_basis: [Option<&CountRecord>; 3] = [None; 3];
    let n_in = records
        .first()
        .ok_or_else(|| QptError::Validation("no count records".into()))?
        .n_in;
    for rec in records {
        rec.validate()?;
        if rec.n_in != n_in {
            return Err(QptError::Validation(format!(
                "records disagree on reference flux ({} vs {n_in})",
                rec.n_in
            )));
        }
        let slot = &mut by_basis[rec.basis.stokes_index() - 1];
        if slot.is_some() {
            return Err(QptError::Validation(format!(
                "basis {} measured twice",
                rec.basis
            )));
        }
        *slot = Some(rec);
    }
    let mut s = [0.0; 4];
    for (k, slot) in by_basis.iter().enumerate() {
        let rec = slot.ok_or_else(|| {
            let missing = Basis::ALL
                .iter()
                .find(|b| b.stokes_index() == k + 1)
                .unwrap();
            QptError::Validation(format!("missing basis {missing}"))
        })?;
        let n = n_in as f64;
        s[k + 1] = (rec.counts_plus - rec.counts_minus) / n;
        s[0] += rec.transmitted_fraction() / 3.0;
    }
    Ok(StokesVector(s))
}

/// Nearest positive semidefinite matrix with the given trace: negative
/// eigenvalues are clipped to zero, then the spectrum is rescaled to `trace`.
pub fn project_physical(m: &Mat2, trace: f64) -> Result<Mat2> {
    let eig = hermitian_eig2(m)?;
    if eig.eigenvalues[0] >= 0.0 {
        let t = m.trace().re;
        return Ok(if t > 0.0 && t != trace {
            m * Complex64::new(trace / t, 0.0)
        } else {
            *m
        });
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(QptError::Validation(
            "state has no positive spectrum".into(),
        ));
    }
    let mut out = Mat2::zeros();
    for (l, v) in clipped.iter().zip(&eig.eigenvectors) {
        out += v * v.adjoint() * Complex64::new(l * trace / total, 0.0);
    }
    Ok(out)
}

/// Linear reconstruction from Stokes parameters followed by the physical
/// projection that preserves the measured flux S0.
pub fn state_from_stokes(s: &StokesVector) -> Result<DensityMatrix> {
    if !s.0.iter().all(|x| x.is_finite()) {
        return Err(QptError::InvalidArgument(
            "non-finite Stokes parameters".into(),
        ));
    }
    let s0 = s.flux();
    if s0 <= 0.0 {
        return Err(QptError::Validation(format!(
            "flux S0 must be positive, got {s0}"
        )));
    }
    let half = s.0.map(|x| x / 2.0);
    let linear = pauli::recompose(&pauli::PauliVector(half));
    let projected = project_physical(&linear, s0.min(1.0))?;
    DensityMatrix::new(projected, "")
}

/// Horizontal, vertical, diagonal and right-circular probe states.
pub fn ideal_probe_states() -> [DensityMatrix; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = Complex64::new;
    [
        DensityMatrix::pure(Vector2::new(c(1.0, 0.0), c(0.0, 0.0)), "H"),
        DensityMatrix::pure(Vector2::new(c(0.0, 0.0), c(1.0, 0.0)), "V"),
        DensityMatrix::pure(Vector2::new(c(h, 0.0), c(h, 0.0)), "D"),
        DensityMatrix::pure(Vector2::new(c(h, 0.0), c(0.0, h)), "R"),
    ]
    .map(|r| r.expect("ideal probes are valid states"))
}
