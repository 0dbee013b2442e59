//! End-to-end registration: configuration, synthetic data, evaluation, file outputs and
//! the command-line front end.

pub mod cli;
mod config;
mod eval;
mod ini;
mod output;
mod run;
mod synth;

pub use config::PipelineConfig;
pub use eval::{
    cumulative_curve, evaluate_against_ground_truth, landmark_errors, EvaluationReport, GroundTruthErrors,
    CURVE_THRESHOLDS,
};
pub use ini::Ini;
pub use output::{
    landmarks_csv, mark_failed, per_vertex_csv, prepare_output_dir, run_registration, write_registration_outputs,
    RegistrationInputs, FAILED_MARKER,
};
pub use run::{register, register_observed, Adaptation, Registration, RegistrationOptions};
pub use synth::{
    bar_mesh, head_landmarks, head_mesh, make_synthetic_case, unit_sphere, SynthSpec, SyntheticCase, CASE_FILES,
    DEFAULT_HEAD_FREQUENCY,
};
