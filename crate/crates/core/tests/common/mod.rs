//! Random generators shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use qpt::process::{p_eig_plus, ProcessMatrix};
use qpt::{canonical_channel, Axis, Channel, DensityMatrix, Mat2, Mat4};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_c(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_complex4(rng: &mut impl Rng) -> Mat4 {
    Matrix4::from_fn(|_, _| gaussian_c(rng))
}

pub fn random_hermitian4(rng: &mut impl Rng) -> Mat4 {
    let a = random_complex4(rng);
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// A random physical χ with `λmax(P)` drawn from `[0.2, 1]`.
pub fn random_physical_chi(rng: &mut impl Rng) -> Mat4 {
    let t = random_complex4(rng);
    let chi = t.adjoint() * t;
    let scale = rng.random_range(0.2..=1.0) / p_eig_plus(&chi);
    chi * Complex64::new(scale, 0.0)
}

/// A random SU(2) element from a unit quaternion, times a random phase.
pub fn random_unitary(rng: &mut impl Rng) -> Mat2 {
    let q: [f64; 4] = std::array::from_fn(|_| gaussian_c(rng).re);
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [a, b, c, d] = q.map(|x| x / n);
    let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    Matrix2::new(
        Complex64::new(a, b),
        Complex64::new(c, d),
        Complex64::new(-c, d),
        Complex64::new(a, -b),
    ) * phase
}

/// A random density matrix with trace in `(0, 1]`.
pub fn random_state(rng: &mut impl Rng) -> DensityMatrix {
    let a = Matrix2::from_fn(|_, _| gaussian_c(rng));
    let m = a * a.adjoint();
    let trace = rng.random_range(0.05..=1.0);
    let m = m * Complex64::new(trace / m.trace().re, 0.0);
    DensityMatrix::new(m, "random").expect("positive by construction")
}

/// The canonical channels exercised by the end-to-end checks.
pub fn canonical_channels() -> Vec<Channel> {
    let mut out = vec![
        Channel::Identity,
        Channel::PauliX,
        Channel::PauliY,
        Channel::PauliZ,
    ];
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        out.push(Channel::Rotation { axis, angle: 0.7 });
    }
    out.push(Channel::Hadamard);
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        out.push(Channel::Polarizer(axis));
    }
    for g in [0.1, 0.36, 0.9] {
        out.push(Channel::AmplitudeDamping(g));
    }
    out.push(Channel::Depolarizing(0.2));
    out.push(Channel::Depolarizing(1.0));
    out.push(Channel::Attenuator(0.7));
    out
}

pub fn chi_of(channel: &Channel) -> ProcessMatrix {
    canonical_channel(channel).expect("canonical channels are physical")
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
