//! Single-qubit quantum process tomography.
//!
//! The crate reconstructs the 4×4 process matrix χ of a device from measured
//! input and (possibly lossy) output states, checks and enforces physicality
//! of the result, extracts operation elements, and simulates complete
//! photon-counting experiments to exercise the pipeline end to end.
//!
//! Module map:
//!
//! - [`pauli`]: the fixed basis {I, σx, σy, σz} and 2×2 linear algebra.
//! - [`states`]: density matrices with loss, Stokes tomography, output scaling.
//! - [`process`] and [`channels`]: χ, the P matrix, constraint diagnostics,
//!   Kraus extraction and a library of analytic channels.
//! - [`inversion`]: the β tensor built from measured probes and the linear
//!   inversion to a raw χ.
//! - [`fitting`]: projection of a raw χ onto physical process matrices.
//! - [`experiment`]: synthetic experiments and the full reconstruction pipeline.
//! - [`io`]: versioned JSON file formats.

pub mod channels;
pub mod error;
pub mod experiment;
pub mod fitting;
pub mod inversion;
pub mod io;
pub mod pauli;
pub mod process;
pub mod states;

pub use channels::{canonical_channel, Axis, Channel};
pub use error::{QptError, Result};
pub use experiment::{
    make_probes, run_pipeline, run_pipeline_with, simulate_counts, simulate_experiment,
    ExperimentRecord, NoiseSpec, PipelineOutput, ProbeRecord,
};
pub use fitting::{fit_physical, hermitize, FitConfig, FitMode, FitResult};
pub use inversion::{
    build_beta, invert_chi, lambda_from_outputs, probe_coefficients, BetaTensor, LambdaVector,
    ProbeSet,
};
pub use pauli::{decompose, pauli, recompose, Mat2, Mat4, PauliVector};
pub use process::{
    apply_channel, constraint_report, kraus_from_chi, p_eigenvalues_reference, p_matrix, ChiStatus,
    ConstraintReport, KrausSet, PMatrix, ProcessMatrix,
};
pub use states::{
    scale_output, state_from_stokes, stokes_from_counts, Basis, CountRecord, DensityMatrix,
    StokesVector,
};
