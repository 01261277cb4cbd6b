//! Fixed operator basis {I, σx, σy, σz} and the small dense linear algebra
//! built on it.
//!
//! Indices exposed through the public functions are one-based (1 = I,
//! 2 = σx, 3 = σy, 4 = σz). Internally everything is zero-based.
//!
//! A Hermitian 2×2 matrix is written `M = Σ r_i σ_i` with
//! `r_i = Tr(M σ_i) / 2`; the factor of one half lives in the
//! decomposition, never in the sum.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;

use crate::error::{QptError, Result};

pub type Mat2 = Matrix2<Complex64>;
pub type Mat4 = Matrix4<Complex64>;

/// Frobenius tolerance on `‖M − M†‖` for inputs that should be Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Zero-based basis element: 0 = I, 1 = σx, 2 = σy, 3 = σz.
pub(crate) fn sigma(k: usize) -> Mat2 {
    match k {
        0 => Mat2::new(ONE, ZERO, ZERO, ONE),
        1 => Mat2::new(ZERO, ONE, ONE, ZERO),
        2 => Mat2::new(ZERO, -I, I, ZERO),
        3 => Mat2::new(ONE, ZERO, ZERO, -ONE),
        _ => unreachable!("basis index {k} out of range"),
    }
}

fn check_index(index: usize) -> Result<usize> {
    if (1..=4).contains(&index) {
        Ok(index - 1)
    } else {
        Err(QptError::InvalidArgument(format!(
            "basis index {index} outside 1..=4"
        )))
    }
}

/// Basis operator σ_index for a one-based index.
pub fn pauli(index: usize) -> Result<Mat2> {
    Ok(sigma(check_index(index)?))
}

/// Real coefficients of a Hermitian 2×2 matrix over (I, σx, σy, σz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliVector(pub [f64; 4]);

impl PauliVector {
    pub fn new(r: [f64; 4]) -> Self {
        PauliVector(r)
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    /// One-based accessor.
    pub fn get(&self, index: usize) -> Result<f64> {
        Ok(self.0[check_index(index)?])
    }
}

/// `‖M − M†‖_F`.
pub fn hermiticity_residual(m: &Mat2) -> f64 {
    (m - m.adjoint()).norm()
}

pub(crate) fn require_hermitian(m: &Mat2) -> Result<()> {
    let residual = hermiticity_residual(m);
    if residual.is_finite() && residual <= HERMITIAN_TOL {
        Ok(())
    } else {
        Err(QptError::NotHermitian { residual })
    }
}

/// Complex coefficients `c_k = Tr(σ_k M) / 2` for an arbitrary 2×2 matrix.
pub fn complex_coefficients(m: &Mat2) -> [Complex64; 4] {
    // Closed forms of Tr(σ_k M) / 2.
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    [
        (a + d) * 0.5,
        (b + c) * 0.5,
        (b - c) * I * 0.5,
        (a - d) * 0.5,
    ]
}

/// `Σ_k c_k σ_k` for complex coefficients.
pub fn from_complex_coefficients(c: &[Complex64; 4]) -> Mat2 {
    Mat2::new(c[0] + c[3], c[1] - I * c[2], c[1] + I * c[2], c[0] - c[3])
}

pub fn decompose(m: &Mat2) -> Result<PauliVector> {
    require_hermitian(m)?;
    let c = complex_coefficients(m);
    Ok(PauliVector([c[0].re, c[1].re, c[2].re, c[3].re]))
}

pub fn recompose(r: &PauliVector) -> Mat2 {
    let [a, x, y, z] = r.0;
    Mat2::new(
        Complex64::new(a + z, 0.0),
        Complex64::new(x, -y),
        Complex64::new(x, y),
        Complex64::new(a - z, 0.0),
    )
}

/// σ_m σ_i σ_n for one-based indices.
pub fn pauli_triple_product(m: usize, i: usize, n: usize) -> Result<Mat2> {
    let (m, i, n) = (check_index(m)?, check_index(i)?, check_index(n)?);
    Ok(sigma(m) * sigma(i) * sigma(n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEig2 {
    /// Ascending.
    pub eigenvalues: [f64; 2],
    pub eigenvectors: [Vector2<Complex64>; 2],
}

impl HermitianEig2 {
    pub fn reconstruct(&self) -> Mat2 {
        let mut out = Mat2::zeros();
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            out += v * v.adjoint() * Complex64::new(*lambda, 0.0);
        }
        out
    }
}

/// Closed-form eigendecomposition of a Hermitian 2×2 matrix.
///
/// With `M = a I + b·σ` the eigenvalues are `a ± |b|` and the eigenvectors
/// are the Bloch-sphere poles along `±b/|b|`.
pub fn hermitian_eig2(m: &Mat2) -> Result<HermitianEig2> {
    require_hermitian(m)?;
    let c = complex_coefficients(m);
    let (a, bx, by, bz) = (c[0].re, c[1].re, c[2].re, c[3].re);
    let norm = (bx * bx + by * by + bz * bz).sqrt();
    let scale = a.abs().max(norm);
    if norm <= 1e-300 || norm <= f64::EPSILON * 1e-3 * scale {
        return Ok(HermitianEig2 {
            eigenvalues: [a, a],
            eigenvectors: [Vector2::new(ONE, ZERO), Vector2::new(ZERO, ONE)],
        });
    }
    let (nx, ny, nz) = (bx / norm, by / norm, bz / norm);
    // Two algebraically equivalent forms of the +1 eigenvector of n·σ; take
    // whichever is better conditioned.
    let up = if nz >= 0.0 {
        Vector2::new(Complex64::new(1.0 + nz, 0.0), Complex64::new(nx, ny))
    } else {
        Vector2::new(Complex64::new(nx, -ny), Complex64::new(1.0 - nz, 0.0))
    };
    let up = up / Complex64::new(up.norm(), 0.0);
    let down = Vector2::new(-up[1].conj(), up[0].conj());
    Ok(HermitianEig2 {
        eigenvalues: [a - norm, a + norm],
        eigenvectors: [down, up],
    })
}

/// Eigendecomposition of a 4×4 Hermitian matrix, eigenvalues ascending and
/// eigenvectors in the matching columns.
pub(crate) fn hermitian_eig4(m: &Mat4) -> (Vector4<f64>, Mat4) {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = Vector4::from_fn(|k, _| eig.eigenvalues[order[k]]);
    let vectors = Mat4::from_fn(|row, col| eig.eigenvectors[(row, order[col])]);
    (values, vectors)
}

pub(crate) fn is_finite2(m: &Mat2) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn is_finite4(m: &Mat4) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real2(a: f64, b: f64, cc: f64, d: f64) -> Mat2 {
        Mat2::new(c(a, 0.0), c(b, 0.0), c(cc, 0.0), c(d, 0.0))
    }

    #[test]
    fn basis_matrices() {
        assert_eq!(pauli(1).unwrap(), real2(1.0, 0.0, 0.0, 1.0));
        assert_eq!(pauli(2).unwrap(), real2(0.0, 1.0, 1.0, 0.0));
        assert_eq!(pauli(3).unwrap(), Mat2::new(ZERO, -I, I, ZERO));
        assert_eq!(pauli(4).unwrap(), real2(1.0, 0.0, 0.0, -1.0));
        assert!(matches!(pauli(0), Err(QptError::InvalidArgument(_))));
        assert!(matches!(pauli(5), Err(QptError::InvalidArgument(_))));
    }

    #[test]
    fn orthogonality_is_exact() {
        for i in 1..=4 {
            for j in 1..=4 {
                let t = (pauli(i).unwrap() * pauli(j).unwrap()).trace();
                let expected = if i == j { 2.0 } else { 0.0 };
                assert_eq!(t, c(expected, 0.0), "Tr(σ{i} σ{j})");
            }
        }
    }

    #[test]
    fn decompose_examples() {
        let mixed = real2(0.5, 0.0, 0.0, 0.5);
        assert_eq!(decompose(&mixed).unwrap().0, [0.5, 0.0, 0.0, 0.0]);
        let zero_state = real2(1.0, 0.0, 0.0, 0.0);
        assert_eq!(decompose(&zero_state).unwrap().0, [0.5, 0.0, 0.0, 0.5]);
        let half = real2(0.5, 0.0, 0.0, 0.0);
        assert_eq!(decompose(&half).unwrap().0, [0.25, 0.0, 0.0, 0.25]);
    }

    #[test]
    fn decompose_rejects_non_hermitian() {
        let m = real2(1.0, 1.0, 0.0, 0.0);
        match decompose(&m) {
            Err(QptError::NotHermitian { residual }) => {
                assert!((residual - 2f64.sqrt()).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
        // Within tolerance is accepted.
        let m = Mat2::new(ONE, c(0.0, 1e-11), ZERO, ZERO);
        assert!(decompose(&m).is_ok());
    }

    #[test]
    fn recompose_examples() {
        assert_eq!(
            recompose(&PauliVector([0.5, 0.0, 0.0, 0.5])),
            real2(1.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(
            recompose(&PauliVector([0.5, 0.5, 0.0, 0.0])),
            real2(0.5, 0.5, 0.5, 0.5)
        );
        assert_eq!(
            recompose(&PauliVector([0.25, 0.0, 0.0, 0.25])),
            real2(0.5, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn triple_products() {
        assert_eq!(pauli_triple_product(1, 1, 1).unwrap(), sigma(0));
        assert_eq!(
            pauli_triple_product(2, 3, 1).unwrap(),
            Mat2::new(I, ZERO, ZERO, -I)
        );
        assert_eq!(pauli_triple_product(2, 1, 2).unwrap(), sigma(0));
        assert!(pauli_triple_product(1, 5, 1).is_err());
    }

    #[test]
    fn triple_products_decompose_exactly() {
        for m in 1..=4 {
            for i in 1..=4 {
                for n in 1..=4 {
                    let p = pauli_triple_product(m, i, n).unwrap();
                    let back = from_complex_coefficients(&complex_coefficients(&p));
                    assert!((back - p).norm() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn eig2_examples() {
        let e = hermitian_eig2(&real2(1.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(e.eigenvalues, [0.0, 1.0]);
        let plus = real2(0.5, 0.5, 0.5, 0.5);
        let e = hermitian_eig2(&plus).unwrap();
        assert!((e.eigenvalues[0]).abs() < 1e-15 && (e.eigenvalues[1] - 1.0).abs() < 1e-15);
        assert!((e.reconstruct() - plus).norm() < 1e-15);
        let e = hermitian_eig2(&sigma(0)).unwrap();
        assert_eq!(e.eigenvalues, [1.0, 1.0]);
        assert!(hermitian_eig2(&real2(0.0, 1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn eig2_south_pole() {
        // b along −z exercises the alternate eigenvector branch.
        let m = real2(0.0, 0.0, 0.0, 1.0);
        let e = hermitian_eig2(&m).unwrap();
        assert_eq!(e.eigenvalues, [0.0, 1.0]);
        assert!((e.reconstruct() - m).norm() < 1e-15);
    }

    fn hermitian(r: [f64; 4]) -> Mat2 {
        recompose(&PauliVector(r))
    }

    proptest! {
        #[test]
        fn decompose_recompose_identity(r in prop::array::uniform4(-5.0f64..5.0)) {
            let back = decompose(&recompose(&PauliVector(r))).unwrap().0;
            for k in 0..4 {
                prop_assert!((back[k] - r[k]).abs() <= 1e-12);
            }
        }

        #[test]
        fn recompose_decompose_identity(r in prop::array::uniform4(-5.0f64..5.0)) {
            let m = hermitian(r);
            let back = recompose(&decompose(&m).unwrap());
            prop_assert!((back - m).norm() <= 1e-12);
            // r[1] is half the trace.
            prop_assert!((decompose(&m).unwrap().0[0] - m.trace().re / 2.0).abs() <= 1e-12);
        }

        #[test]
        fn eig2_reconstructs(r in prop::array::uniform4(-5.0f64..5.0)) {
            let m = hermitian(r);
            let e = hermitian_eig2(&m).unwrap();
            prop_assert!(e.eigenvalues[0] <= e.eigenvalues[1]);
            let err = (e.reconstruct() - m).norm();
            prop_assert!(err <= 1e-12 * m.norm().max(1.0));
            let [u, v] = &e.eigenvectors;
            prop_assert!((u.norm() - 1.0).abs() < 1e-12);
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
            prop_assert!(u.dotc(v).norm() < 1e-12);
        }
    }
}
