//! Library of analytic single-qubit channels used as ground truth.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector4;
use num_complex::Complex64;

use crate::error::{QptError, Result};
use crate::pauli::{sigma, Mat2, Mat4};
use crate::process::{chi_from_operators, ProcessMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn sigma(self) -> Mat2 {
        match self {
            Axis::X => sigma(1),
            Axis::Y => sigma(2),
            Axis::Z => sigma(3),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl FromStr for Axis {
    type Err = QptError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            _ => Err(QptError::InvalidArgument(format!("unknown axis '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    Identity,
    PauliX,
    PauliY,
    PauliZ,
    Hadamard,
    /// `exp(−i angle σ_axis / 2)`.
    Rotation {
        axis: Axis,
        angle: f64,
    },
    /// Projector `(I + σ_axis)/2`; absorbs the orthogonal polarization.
    Polarizer(Axis),
    AmplitudeDamping(f64),
    /// `ρ → (1 − p) ρ + p I/2`.
    Depolarizing(f64),
    /// Polarization-independent transmission `η`.
    Attenuator(f64),
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl Channel {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(QptError::InvalidArgument(format!(
                "{what} = {v} out of range"
            )))
        };
        match *self {
            Channel::AmplitudeDamping(g) if !(0.0..=1.0).contains(&g) => bad("gamma", g),
            Channel::Depolarizing(p) if !(0.0..=1.0).contains(&p) => bad("p", p),
            Channel::Attenuator(eta) if !(eta > 0.0 && eta <= 1.0) => bad("eta", eta),
            Channel::Rotation { angle, .. } if !angle.is_finite() => bad("angle", angle),
            _ => Ok(()),
        }
    }

    /// Analytic operation elements. Empty for channels defined directly by χ.
    pub fn kraus(&self) -> Result<Vec<Mat2>> {
        self.validate()?;
        Ok(match *self {
            Channel::Identity => vec![sigma(0)],
            Channel::PauliX => vec![sigma(1)],
            Channel::PauliY => vec![sigma(2)],
            Channel::PauliZ => vec![sigma(3)],
            Channel::Hadamard => {
                vec![(sigma(1) + sigma(3)) * c(std::f64::consts::FRAC_1_SQRT_2)]
            }
            Channel::Rotation { axis, angle } => {
                let half = angle / 2.0;
                vec![sigma(0) * c(half.cos()) - axis.sigma() * Complex64::new(0.0, half.sin())]
            }
            Channel::Polarizer(axis) => vec![(sigma(0) + axis.sigma()) * c(0.5)],
            Channel::AmplitudeDamping(g) => vec![
                Mat2::new(c(1.0), c(0.0), c(0.0), c((1.0 - g).sqrt())),
                Mat2::new(c(0.0), c(g.sqrt()), c(0.0), c(0.0)),
            ],
            Channel::Depolarizing(p) => vec![
                sigma(0) * c((1.0 - 0.75 * p).sqrt()),
                sigma(1) * c((p / 4.0).sqrt()),
                sigma(2) * c((p / 4.0).sqrt()),
                sigma(3) * c((p / 4.0).sqrt()),
            ],
            Channel::Attenuator(eta) => vec![sigma(0) * c(eta.sqrt())],
        })
    }

    pub fn chi(&self) -> Result<ProcessMatrix> {
        canonical_channel(self)
    }
}

/// Analytic physical χ for a named channel.
pub fn canonical_channel(channel: &Channel) -> Result<ProcessMatrix> {
    channel.validate()?;
    let chi = match *channel {
        Channel::Depolarizing(p) => {
            let q = p / 4.0;
            Mat4::from_diagonal(&Vector4::new(c(1.0 - 3.0 * q), c(q), c(q), c(q)))
        }
        Channel::Attenuator(eta) => {
            Mat4::from_diagonal(&Vector4::new(c(eta), c(0.0), c(0.0), c(0.0)))
        }
        _ => chi_from_operators(&channel.kraus()?),
    };
    ProcessMatrix::physical(chi)
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Identity => write!(f, "identity"),
            Channel::PauliX => write!(f, "pauli-x"),
            Channel::PauliY => write!(f, "pauli-y"),
            Channel::PauliZ => write!(f, "pauli-z"),
            Channel::Hadamard => write!(f, "hadamard"),
            Channel::Rotation { axis, angle } => write!(f, "rotation-{}:{angle}", axis.name()),
            Channel::Polarizer(axis) => write!(f, "polarizer-{}", axis.name()),
            Channel::AmplitudeDamping(g) => write!(f, "amplitude-damping:{g}"),
            Channel::Depolarizing(p) => write!(f, "depolarizing:{p}"),
            Channel::Attenuator(eta) => write!(f, "attenuator:{eta}"),
        }
    }
}

/// Parses names such as `hadamard`, `polarizer-z`, `rotation-x:0.3` or
/// `amplitude-damping:0.36`.
impl FromStr for Channel {
    type Err = QptError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let value = || -> Result<f64> {
            let p = param.ok_or_else(|| {
                QptError::InvalidArgument(format!("channel '{name}' needs a ':<value>' parameter"))
            })?;
            p.parse::<f64>()
                .map_err(|_| QptError::InvalidArgument(format!("bad channel parameter '{p}'")))
        };
        let no_param = |ch: Channel| -> Result<Channel> {
            match param {
                None => Ok(ch),
                Some(_) => Err(QptError::InvalidArgument(format!(
                    "channel '{name}' takes no parameter"
                ))),
            }
        };
        let channel = match name {
            "identity" => no_param(Channel::Identity)?,
            "pauli-x" => no_param(Channel::PauliX)?,
            "pauli-y" => no_param(Channel::PauliY)?,
            "pauli-z" => no_param(Channel::PauliZ)?,
            "hadamard" => no_param(Channel::Hadamard)?,
            "amplitude-damping" => Channel::AmplitudeDamping(value()?),
            "depolarizing" => Channel::Depolarizing(value()?),
            "attenuator" => Channel::Attenuator(value()?),
            _ => {
                if let Some(axis) = name.strip_prefix("rotation-") {
                    Channel::Rotation {
                        axis: axis.parse()?,
                        angle: value()?,
                    }
                } else if let Some(axis) = name.strip_prefix("polarizer-") {
                    no_param(Channel::Polarizer(axis.parse()?))?
                } else {
                    return Err(QptError::InvalidArgument(format!("unknown channel '{s}'")));
                }
            }
        };
        channel.validate()?;
        Ok(channel)
    }
}
