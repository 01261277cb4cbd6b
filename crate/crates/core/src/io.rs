//! Versioned JSON file formats: χ files, experiment records and constraint
//! reports.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major arrays of
//! rows. χ row/column `i` (zero-based) is basis element `i + 1` of
//! (I, σx, σy, σz). See `docs/file-formats.md` for the full layouts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{QptError, Result};
use crate::experiment::{ExperimentRecord, ProbeRecord, SCHEMA_VERSION};
use crate::pauli::{Mat2, Mat4};
use crate::process::{ChiStatus, ConstraintReport, ProcessMatrix};
use crate::states::CountRecord;

pub const BASIS_TAG: &str = "I,X,Y,Z";

/// Provenance keys that hold wall-clock data and are ignored in comparisons.
pub const TIMESTAMP_KEYS: [&str; 1] = ["created_unix"];

pub type Provenance = BTreeMap<String, Value>;

pub type ComplexJson = [f64; 2];
pub type Matrix2Json = [[ComplexJson; 2]; 2];
pub type Matrix4Json = [[ComplexJson; 4]; 4];

pub fn mat4_to_json(m: &Mat4) -> Matrix4Json {
    std::array::from_fn(|i| std::array::from_fn(|j| [m[(i, j)].re, m[(i, j)].im]))
}

pub fn mat4_from_json(a: &Matrix4Json) -> Mat4 {
    Mat4::from_fn(|i, j| Complex64::new(a[i][j][0], a[i][j][1]))
}

pub fn mat2_to_json(m: &Mat2) -> Matrix2Json {
    std::array::from_fn(|i| std::array::from_fn(|j| [m[(i, j)].re, m[(i, j)].im]))
}

pub fn mat2_from_json(a: &Matrix2Json) -> Mat2 {
    Mat2::from_fn(|i, j| Complex64::new(a[i][j][0], a[i][j][1]))
}

pub fn strip_timestamps(p: &Provenance) -> Provenance {
    p.iter()
        .filter(|(k, _)| !TIMESTAMP_KEYS.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

pub fn now_unix() -> Value {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Value::from(secs)
}

fn check_version(found: u32, what: &str) -> Result<()> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(QptError::Format(format!(
            "unsupported {what} schema version {found} (expected {SCHEMA_VERSION})"
        )))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiFile {
    pub schema_version: u32,
    pub status: ChiStatus,
    pub basis: String,
    pub chi: Matrix4Json,
    #[serde(default)]
    pub provenance: Provenance,
}

impl ChiFile {
    pub fn from_process(chi: &ProcessMatrix, provenance: Provenance) -> Self {
        ChiFile {
            schema_version: SCHEMA_VERSION,
            status: chi.status(),
            basis: BASIS_TAG.to_string(),
            chi: mat4_to_json(chi.matrix()),
            provenance,
        }
    }

    /// Rebuilds the process matrix; a `physical` status is re-validated.
    pub fn to_process(&self) -> Result<ProcessMatrix> {
        check_version(self.schema_version, "chi")?;
        if self.basis != BASIS_TAG {
            return Err(QptError::Format(format!(
                "unsupported basis '{}' (expected '{BASIS_TAG}')",
                self.basis
            )));
        }
        ProcessMatrix::with_status(mat4_from_json(&self.chi), self.status)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeJson {
    pub label: String,
    pub rotation: f64,
    pub depolarization: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prepared_state: Option<Matrix2Json>,
    pub input_counts: Vec<CountRecord>,
    pub output_counts: Vec<CountRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub schema_version: u32,
    pub n_in: u64,
    pub seed: u64,
    pub shot_noise: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_truth: Option<Matrix4Json>,
    pub probes: Vec<ProbeJson>,
    #[serde(default)]
    pub provenance: Provenance,
}

fn three(records: &[CountRecord], label: &str, what: &str) -> Result<[CountRecord; 3]> {
    <[CountRecord; 3]>::try_from(records.to_vec()).map_err(|v| {
        QptError::Format(format!(
            "probe {label}: expected 3 {what} records, found {}",
            v.len()
        ))
    })
}

impl ExperimentFile {
    pub fn from_record(record: &ExperimentRecord, provenance: Provenance) -> Self {
        ExperimentFile {
            schema_version: record.schema_version,
            n_in: record.n_in,
            seed: record.seed,
            shot_noise: record.shot_noise,
            channel_truth: record
                .channel_truth
                .as_ref()
                .map(|c| mat4_to_json(c.matrix())),
            probes: record
                .probes
                .iter()
                .map(|p| ProbeJson {
                    label: p.label.clone(),
                    rotation: p.rotation,
                    depolarization: p.depolarization,
                    prepared_state: p.prepared_state.as_ref().map(mat2_to_json),
                    input_counts: p.input_counts.to_vec(),
                    output_counts: p.output_counts.to_vec(),
                })
                .collect(),
            provenance,
        }
    }

    pub fn to_record(&self) -> Result<ExperimentRecord> {
        check_version(self.schema_version, "experiment")?;
        let mut probes = Vec::with_capacity(4);
        for p in &self.probes {
            probes.push(ProbeRecord {
                label: p.label.clone(),
                rotation: p.rotation,
                depolarization: p.depolarization,
                prepared_state: p.prepared_state.as_ref().map(mat2_from_json),
                input_counts: three(&p.input_counts, &p.label, "input")?,
                output_counts: three(&p.output_counts, &p.label, "output")?,
            });
        }
        let n = probes.len();
        let probes: [ProbeRecord; 4] = probes
            .try_into()
            .map_err(|_| QptError::Format(format!("expected 4 probes, found {n}")))?;
        let channel_truth = match &self.channel_truth {
            Some(m) => Some(ProcessMatrix::physical(mat4_from_json(m))?),
            None => None,
        };
        let record = ExperimentRecord {
            schema_version: self.schema_version,
            n_in: self.n_in,
            seed: self.seed,
            shot_noise: self.shot_noise,
            channel_truth,
            probes,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub schema_version: u32,
    pub tolerance: f64,
    #[serde(flatten)]
    pub report: ConstraintReport,
    /// Derived from the machine fields by [`verdict_lines`].
    pub verdicts: Vec<String>,
}

/// Human-readable summary. A pure function of the report and tolerance.
pub fn verdict_lines(report: &ConstraintReport, tolerance: f64) -> Vec<String> {
    let ok = |b: bool| if b { "ok" } else { "VIOLATED" };
    let psd = report.min_chi_eigenvalue >= -tolerance;
    vec![
        format!(
            "positivity: min eigenvalue of chi = {:.6e} [{}]",
            report.min_chi_eigenvalue,
            ok(psd)
        ),
        format!(
            "P bound: Tr(chi) + 2*radical = {:.12} <= 1 [{}]",
            report.p_eig_plus,
            ok(report.eq10_satisfied)
        ),
        format!(
            "P eigenvalues: {:.12}, {:.12} (Tr(chi) = {:.12}, radical = {:.12})",
            report.p_eig_minus, report.p_eig_plus, report.trace_chi, report.radical
        ),
        format!(
            "trace preservation: residuals i-iii = [{:.3e}, {:.3e}, {:.3e}], Tr(chi) - 1 = {:.3e} [{}]",
            report.tp_residuals[0],
            report.tp_residuals[1],
            report.tp_residuals[2],
            report.trace_chi - 1.0,
            if report.tp_consistent { "trace-preserving" } else { "not trace-preserving" }
        ),
        format!(
            "trace identity: |Tr(chi) - Tr(P)/2| = {:.3e}",
            report.trace_identity_residual
        ),
    ]
}

impl ReportFile {
    pub fn new(report: ConstraintReport, tolerance: f64) -> Self {
        ReportFile {
            schema_version: SCHEMA_VERSION,
            tolerance,
            verdicts: verdict_lines(&report, tolerance),
            report,
        }
    }

    /// Parses and checks that the verdict lines match the machine fields.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ReportFile = serde_json::from_str(text)?;
        check_version(file.schema_version, "report")?;
        if file.verdicts != verdict_lines(&file.report, file.tolerance) {
            return Err(QptError::Format(
                "report verdict lines do not match its fields".into(),
            ));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json())
    }
}
