//! Synthetic photon-counting experiments and the end-to-end pipeline.
//!
//! Every probe is measured twice: once directly (input tomography) and once
//! after the device (output tomography), each time in the Z, X and Y
//! settings with two detectors per setting. Counts are photons per fixed
//! interval relative to a known reference flux `n_in`.

use std::str::FromStr;

use nalgebra::Vector2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{QptError, Result};
use crate::fitting::{fit_physical, FitConfig, FitResult, FEASIBILITY_TOL};
use crate::inversion::{
    build_beta, invert_chi, lambda_from_outputs, probe_coefficients, BetaTensor,
};
use crate::pauli::{sigma, Mat2};
use crate::process::{channel_action, constraint_report, ConstraintReport, ProcessMatrix};
use crate::states::{
    ideal_probe_states, scale_output, state_from_stokes, stokes_from_counts, stokes_of, Basis,
    CountRecord, DensityMatrix,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const PROBE_LABELS: [&str; 4] = ["H", "V", "D", "R"];

/// Imperfections applied to the probes and to detection.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub shot_noise: bool,
    /// Coherent preparation error per probe in radians: about y for H/V,
    /// about z for D/R.
    pub preparation_rotation: [f64; 4],
    /// Fraction of each probe replaced by I/2.
    pub preparation_depolarization: [f64; 4],
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            shot_noise: false,
            preparation_rotation: [0.0; 4],
            preparation_depolarization: [0.0; 4],
        }
    }
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.preparation_rotation.iter().find(|r| !r.is_finite()) {
            return Err(QptError::InvalidArgument(format!(
                "rotation {r} is not finite"
            )));
        }
        if let Some(d) = self
            .preparation_depolarization
            .iter()
            .find(|d| !(0.0..=1.0).contains(*d))
        {
            return Err(QptError::InvalidArgument(format!(
                "depolarization {d} outside [0, 1]"
            )));
        }
        Ok(())
    }
}

/// Parses `none` or a comma-separated list of `shot`, `rotation=<v>` and
/// `depolarization=<v>`. A value is either one number for all probes or four
/// separated by `/` (H/V/D/R order).
impl FromStr for NoiseSpec {
    type Err = QptError;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = NoiseSpec::default();
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(spec);
        }
        for token in s.split(',').map(str::trim) {
            match token.split_once('=') {
                None if token == "shot" => spec.shot_noise = true,
                Some(("rotation", v)) => spec.preparation_rotation = per_probe(v)?,
                Some(("depolarization", v)) => spec.preparation_depolarization = per_probe(v)?,
                _ => {
                    return Err(QptError::InvalidArgument(format!(
                        "unknown noise setting '{token}'"
                    )))
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn per_probe(text: &str) -> Result<[f64; 4]> {
    let values = text
        .split('/')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| QptError::InvalidArgument(format!("bad noise value '{v}'")))
        })
        .collect::<Result<Vec<f64>>>()?;
    match values.as_slice() {
        [v] => Ok([*v; 4]),
        [a, b, c, d] => Ok([*a, *b, *c, *d]),
        _ => Err(QptError::InvalidArgument(format!(
            "expected 1 or 4 noise values, found {}",
            values.len()
        ))),
    }
}

/// Prepares the four probes H, V, D, R with the requested imperfections.
pub fn make_probes(noise: &NoiseSpec) -> Result<[DensityMatrix; 4]> {
    noise.validate()?;
    let ideal = ideal_probe_states();
    let mut out = Vec::with_capacity(4);
    for (j, probe) in ideal.iter().enumerate() {
        let angle = noise.preparation_rotation[j];
        let axis = if j < 2 { sigma(2) } else { sigma(3) };
        // exp(−i δ σ): a polarization rotation by δ, i.e. 2δ on the sphere.
        let u =
            sigma(0) * Complex64::new(angle.cos(), 0.0) - axis * Complex64::new(0.0, angle.sin());
        let rotated = u * probe.matrix() * u.adjoint();
        let d = noise.preparation_depolarization[j];
        let mixed =
            rotated * Complex64::new(1.0 - d, 0.0) + sigma(0) * Complex64::new(d / 2.0, 0.0);
        out.push(DensityMatrix::new(mixed, PROBE_LABELS[j])?);
    }
    Ok(out.try_into().expect("four probes"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub label: String,
    pub rotation: f64,
    pub depolarization: f64,
    /// The state actually prepared; known only for synthetic data.
    pub prepared_state: Option<Mat2>,
    /// Z, X, Y settings measured on the probe itself.
    pub input_counts: [CountRecord; 3],
    /// Z, X, Y settings measured after the device.
    pub output_counts: [CountRecord; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub n_in: u64,
    pub seed: u64,
    pub shot_noise: bool,
    pub channel_truth: Option<ProcessMatrix>,
    pub probes: [ProbeRecord; 4],
}

impl ExperimentRecord {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(QptError::Format(format!(
                "unsupported experiment schema version {}",
                self.schema_version
            )));
        }
        if self.n_in == 0 {
            return Err(QptError::InvalidArgument("n_in must be positive".into()));
        }
        for p in &self.probes {
            for rec in p.input_counts.iter().chain(&p.output_counts) {
                rec.validate()?;
                if rec.n_in != self.n_in {
                    return Err(QptError::Validation(format!(
                        "probe {} record has n_in {} but experiment has {}",
                        p.label, rec.n_in, self.n_in
                    )));
                }
            }
            stokes_from_counts(&p.input_counts)?;
            stokes_from_counts(&p.output_counts)?;
        }
        Ok(())
    }
}

/// Stream index of the random generator for one (probe, stage, basis)
/// setting; the draws do not depend on the order settings are simulated in.
fn stream_id(probe: usize, output: bool, basis: Basis) -> u64 {
    ((probe as u64 * 2 + output as u64) * 3) + basis.stokes_index() as u64 - 1
}

fn measure(
    state: &Mat2,
    n_in: u64,
    shot_noise: bool,
    seed: u64,
    probe: usize,
    output: bool,
) -> Result<[CountRecord; 3]> {
    let s = stokes_of(state).0;
    let n = n_in as f64;
    let mut records = Vec::with_capacity(3);
    for basis in Basis::ALL {
        let a = s[basis.stokes_index()];
        let expected_plus = (n * (s[0] + a) / 2.0).max(0.0);
        let expected_minus = (n * (s[0] - a) / 2.0).max(0.0);
        let (plus, minus) = if shot_noise {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_id(probe, output, basis));
            let mut draw = |mean: f64| -> f64 {
                if mean <= 0.0 {
                    0.0
                } else {
                    Poisson::new(mean).expect("positive mean").sample(&mut rng)
                }
            };
            let (p, m) = (draw(expected_plus), draw(expected_minus));
            if p + m > n {
                // Loss can only remove photons; keep the ratio, cap the total.
                let p_capped = (p * n / (p + m)).round();
                (p_capped, n - p_capped)
            } else {
                (p, m)
            }
        } else {
            let total = expected_plus + expected_minus;
            if total > n {
                (expected_plus * n / total, expected_minus * n / total)
            } else {
                (expected_plus, expected_minus)
            }
        };
        records.push(CountRecord::new(basis, plus, minus, n_in)?);
    }
    Ok(records.try_into().expect("three settings"))
}

/// Runs the channel on the probes and records input and output counts.
pub fn simulate_counts(
    channel: &ProcessMatrix,
    probes: &[DensityMatrix; 4],
    n_in: u64,
    shot_noise: bool,
    seed: u64,
) -> Result<ExperimentRecord> {
    if n_in == 0 {
        return Err(QptError::InvalidArgument("n_in must be positive".into()));
    }
    let truth = ProcessMatrix::physical(*channel.matrix())
        .map_err(|e| QptError::Validation(format!("channel is not physical: {e}")))?;
    let mut records = Vec::with_capacity(4);
    for (j, probe) in probes.iter().enumerate() {
        let out = channel_action(truth.matrix(), probe.matrix());
        records.push(ProbeRecord {
            label: if probe.label().is_empty() {
                PROBE_LABELS[j].to_string()
            } else {
                probe.label().to_string()
            },
            rotation: 0.0,
            depolarization: 0.0,
            prepared_state: Some(*probe.matrix()),
            input_counts: measure(probe.matrix(), n_in, shot_noise, seed, j, false)?,
            output_counts: measure(&out, n_in, shot_noise, seed, j, true)?,
        });
    }
    Ok(ExperimentRecord {
        schema_version: SCHEMA_VERSION,
        n_in,
        seed,
        shot_noise,
        channel_truth: Some(truth),
        probes: records.try_into().expect("four probes"),
    })
}

/// [`make_probes`] followed by [`simulate_counts`], recording the
/// preparation parameters with each probe.
pub fn simulate_experiment(
    channel: &ProcessMatrix,
    noise: &NoiseSpec,
    n_in: u64,
    seed: u64,
) -> Result<ExperimentRecord> {
    let probes = make_probes(noise)?;
    let mut record = simulate_counts(channel, &probes, n_in, noise.shot_noise, seed)?;
    for (j, p) in record.probes.iter_mut().enumerate() {
        p.rotation = noise.preparation_rotation[j];
        p.depolarization = noise.preparation_depolarization[j];
    }
    Ok(record)
}

/// Measured input states, normalized to unit trace.
pub fn measured_inputs(record: &ExperimentRecord) -> Result<[DensityMatrix; 4]> {
    let mut out = Vec::with_capacity(4);
    for p in &record.probes {
        let s = stokes_from_counts(&p.input_counts)?;
        out.push(
            state_from_stokes(&s)?
                .normalized()?
                .with_label(p.label.clone()),
        );
    }
    Ok(out.try_into().expect("four probes"))
}

/// Output states scaled by their measured transmission.
pub fn scaled_outputs(record: &ExperimentRecord) -> Result<[Mat2; 4]> {
    let n_in = record.n_in as f64;
    let mut out = [Mat2::zeros(); 4];
    for (j, p) in record.probes.iter().enumerate() {
        let s = stokes_from_counts(&p.output_counts)?;
        let transmitted = s.flux();
        if transmitted <= 0.0 {
            continue;
        }
        let normalized = state_from_stokes(&s)?.normalized()?;
        out[j] = *scale_output(&normalized, transmitted.min(1.0) * n_in, n_in)?.matrix();
    }
    Ok(out)
}

/// Linear-inversion stage of the pipeline: raw χ and the β it came from.
pub fn reconstruct_raw(
    record: &ExperimentRecord,
    assume_ideal_inputs: bool,
) -> Result<(ProcessMatrix, BetaTensor)> {
    record.validate()?;
    let inputs = if assume_ideal_inputs {
        ideal_probe_states()
    } else {
        measured_inputs(record)?
    };
    let probes = probe_coefficients(&inputs)?;
    let beta = build_beta(&probes)?;
    let lambda = lambda_from_outputs(&scaled_outputs(record)?)?;
    let raw = invert_chi(&beta, &lambda)?;
    Ok((raw, beta))
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub raw: ProcessMatrix,
    pub fit: FitResult,
    pub report: ConstraintReport,
    pub beta_condition_number: f64,
}

pub fn run_pipeline(
    record: &ExperimentRecord,
    assume_ideal_inputs: bool,
) -> Result<PipelineOutput> {
    run_pipeline_with(record, assume_ideal_inputs, &FitConfig::default())
}

pub fn run_pipeline_with(
    record: &ExperimentRecord,
    assume_ideal_inputs: bool,
    config: &FitConfig,
) -> Result<PipelineOutput> {
    let (raw, beta) = reconstruct_raw(record, assume_ideal_inputs)?;
    let fit = fit_physical(&raw, config)?;
    let report = constraint_report(&fit.chi, FEASIBILITY_TOL)?;
    Ok(PipelineOutput {
        raw,
        fit,
        report,
        beta_condition_number: beta.condition_number(),
    })
}

/// Pure state `cos δ|0⟩ + sin δ|1⟩`, handy for tests and examples.
pub fn tilted_horizontal(angle: f64) -> DensityMatrix {
    DensityMatrix::pure(
        Vector2::new(
            Complex64::new(angle.cos(), 0.0),
            Complex64::new(angle.sin(), 0.0),
        ),
        "H",
    )
    .expect("unit vector")
}
