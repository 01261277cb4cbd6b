//! Linear inversion from measured probe/output pairs to a raw χ.
//!
//! With measured inputs `ρ_j = Σ_i r_ji σ_i` and loss-scaled outputs
//! `ρ'_j = Σ_k λ_jk σ_k`, the channel satisfies `λ_jk = Σ_mn β^{mn}_jk χ_mn`
//! where
//!
//! ```text
//! β^{mn}_jk = ½ Tr(σ_k σ_m ρ_j σ_n)
//! ```
//!
//! Both the 16 rows (jk) and the 16 columns (mn) are flattened row-major:
//! row `4·j + k`, column `4·m + n`, all zero-based.

use nalgebra::{Matrix4, SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{QptError, Result};
use crate::pauli::{self, sigma, Mat2, Mat4};
use crate::process::ProcessMatrix;
use crate::states::DensityMatrix;

pub type BetaMatrix = SMatrix<Complex64, 16, 16>;

/// Condition numbers above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e8;

/// Probes must be normalized to this tolerance.
pub const PROBE_TRACE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ProbeSet {
    inputs: [DensityMatrix; 4],
    r: Matrix4<f64>,
    condition_number: f64,
}

impl ProbeSet {
    pub fn inputs(&self) -> &[DensityMatrix; 4] {
        &self.inputs
    }

    /// `r[(j, i)]` is the coefficient of σ_i in probe j (zero-based).
    pub fn coefficients(&self) -> &Matrix4<f64> {
        &self.r
    }

    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }
}

fn condition_of(singular_values: &[f64]) -> f64 {
    let max = singular_values.iter().cloned().fold(0.0, f64::max);
    let min = singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn probe_coefficients(inputs: &[DensityMatrix; 4]) -> Result<ProbeSet> {
    let mut r = Matrix4::zeros();
    for (j, rho) in inputs.iter().enumerate() {
        let t = rho.trace();
        if (t - 1.0).abs() > PROBE_TRACE_TOL {
            return Err(QptError::Validation(format!(
                "probe {} ('{}') has trace {t}, expected 1",
                j + 1,
                rho.label()
            )));
        }
        let coeffs = pauli::decompose(rho.matrix())?;
        for (i, v) in coeffs.0.iter().enumerate() {
            r[(j, i)] = *v;
        }
    }
    let svd = r.svd(true, false);
    let sv = svd.singular_values.as_slice();
    let condition_number = condition_of(sv);
    if condition_number.is_nan() || condition_number > MAX_CONDITION {
        // The left singular vector of the smallest singular value is the
        // combination of probes that nearly cancels.
        let weakest = (0..4).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap();
        let u = svd.u.expect("requested U");
        let terms: Vec<String> = (0..4)
            .filter(|&j| u[(j, weakest)].abs() > 1e-3)
            .map(|j| format!("{:+.3}·{}", u[(j, weakest)], probe_name(inputs, j)))
            .collect();
        return Err(QptError::TomographicallyIncomplete {
            condition_number,
            detail: format!("probe combination {} ≈ 0", terms.join(" ")),
        });
    }
    Ok(ProbeSet {
        inputs: inputs.clone(),
        r,
        condition_number,
    })
}

fn probe_name(inputs: &[DensityMatrix; 4], j: usize) -> String {
    let label = inputs[j].label();
    if label.is_empty() {
        format!("probe{}", j + 1)
    } else {
        label.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct BetaTensor {
    beta: BetaMatrix,
    condition_number: f64,
}

impl BetaTensor {
    pub fn matrix(&self) -> &BetaMatrix {
        &self.beta
    }

    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    /// `Σ_mn β^{mn}_jk χ_mn` for every jk.
    pub fn forward(&self, chi: &Mat4) -> SVector<Complex64, 16> {
        self.beta * vectorize(chi)
    }
}

pub(crate) fn vectorize(chi: &Mat4) -> SVector<Complex64, 16> {
    SVector::from_fn(|idx, _| chi[(idx / 4, idx % 4)])
}

pub fn build_beta(probes: &ProbeSet) -> Result<BetaTensor> {
    let mut beta = BetaMatrix::zeros();
    for j in 0..4 {
        let rho_j = pauli::recompose(&pauli::PauliVector(std::array::from_fn(|i| {
            probes.r[(j, i)]
        })));
        for m in 0..4 {
            let left = sigma(m) * rho_j;
            for n in 0..4 {
                let coeffs = pauli::complex_coefficients(&(left * sigma(n)));
                for (k, value) in coeffs.iter().enumerate() {
                    beta[(4 * j + k, 4 * m + n)] = *value;
                }
            }
        }
    }
    let condition_number = condition_of(beta.singular_values().as_slice());
    if condition_number.is_nan() || condition_number > MAX_CONDITION {
        return Err(QptError::TomographicallyIncomplete {
            condition_number,
            detail: "β matrix is singular for this probe set".into(),
        });
    }
    Ok(BetaTensor {
        beta,
        condition_number,
    })
}

/// `λ_jk`: Pauli coefficients of the loss-scaled outputs, index `4·j + k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaVector(pub [f64; 16]);

impl LambdaVector {
    fn as_complex(&self) -> SVector<Complex64, 16> {
        SVector::from_fn(|i, _| Complex64::new(self.0[i], 0.0))
    }

    pub fn scaled(&self, a: f64) -> LambdaVector {
        LambdaVector(self.0.map(|x| a * x))
    }

    pub fn add(&self, other: &LambdaVector) -> LambdaVector {
        LambdaVector(std::array::from_fn(|i| self.0[i] + other.0[i]))
    }
}

/// λ from already loss-scaled output matrices. Zero matrices (fully
/// absorbed outputs) are allowed.
pub fn lambda_from_outputs(outputs: &[Mat2; 4]) -> Result<LambdaVector> {
    let mut lambda = [0.0; 16];
    for (j, out) in outputs.iter().enumerate() {
        pauli::require_hermitian(out)?;
        for (k, c) in pauli::complex_coefficients(out).iter().enumerate() {
            if c.im.abs() > pauli::HERMITIAN_TOL {
                return Err(QptError::Validation(format!(
                    "output {} coefficient {} has imaginary part {:.3e}",
                    j + 1,
                    k + 1,
                    c.im
                )));
            }
            lambda[4 * j + k] = c.re;
        }
    }
    Ok(LambdaVector(lambda))
}

pub fn lambda_from_states(outputs: &[DensityMatrix; 4]) -> Result<LambdaVector> {
    lambda_from_outputs(&std::array::from_fn(|j| *outputs[j].matrix()))
}

/// Solves `β χ⃗ = λ⃗` by LU with partial pivoting. The result is not
/// hermitized.
pub fn invert_chi(beta: &BetaTensor, lambda: &LambdaVector) -> Result<ProcessMatrix> {
    if beta.condition_number.is_nan() || beta.condition_number > MAX_CONDITION {
        return Err(QptError::TomographicallyIncomplete {
            condition_number: beta.condition_number,
            detail: "refusing to invert an ill-conditioned β".into(),
        });
    }
    let rhs = lambda.as_complex();
    let x = beta
        .beta
        .lu()
        .solve(&rhs)
        .ok_or_else(|| QptError::TomographicallyIncomplete {
            condition_number: beta.condition_number,
            detail: "LU factorization of β is singular".into(),
        })?;
    let residual = (beta.beta * x - rhs).norm();
    if residual > 1e-9 * rhs.norm().max(f64::MIN_POSITIVE) && residual > 0.0 {
        return Err(QptError::Validation(format!(
            "inversion residual {residual:.3e} too large"
        )));
    }
    ProcessMatrix::raw(Mat4::from_fn(|m, n| x[4 * m + n]))
}
