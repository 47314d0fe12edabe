//! Folding engines: MFE prediction plus ensemble quantities behind one
//! interface.
//!
//! The built-in engine uses a pair-counting energy model (each canonical
//! pair contributes -1, hairpins need at least `min_hairpin` unpaired
//! positions) that can be checked exactly by enumeration. The external
//! engine talks to a thermodynamic folder over a line protocol.

pub mod builtin;
mod external;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure::{NucleotideSequence, StructureError, TargetStructure};

pub use builtin::{BuiltinEngine, PairProbabilities};
pub use external::{parse_reply, ExternalEngine};

/// Environment variable consulted when no external command is configured.
pub const EXTERNAL_CMD_ENV: &str = "MONTPARNASSE_EXTERNAL_CMD";

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FoldError {
    #[error("sequence length {0} does not match target length {1}")]
    LengthMismatch(usize, usize),
    #[error("engine failure: {message}")]
    EngineFailure { message: String, stderr: String },
    #[error("external folder did not reply within {0} s")]
    Timeout(f64),
    #[error("invalid engine configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

impl FoldError {
    pub(crate) fn failure(message: impl Into<String>) -> Self {
        FoldError::EngineFailure {
            message: message.into(),
            stderr: String::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldResult {
    pub mfe_structure: String,
    pub mfe_energy: f64,
    /// -kT ln Z in engine units.
    pub ensemble_free_energy: f64,
    /// Boltzmann probability of the target structure.
    pub target_probability: f64,
    /// Natural log of `target_probability`, kept separately so that tiny
    /// probabilities do not underflow. `-inf` when the target cannot form.
    #[serde(skip)]
    pub target_log_probability: f64,
    pub ensemble_defect: f64,
    #[serde(skip)]
    pub pair_probabilities: Option<PairProbabilities>,
}

pub trait FoldingEngine: Send {
    fn fold(
        &mut self,
        seq: &NucleotideSequence,
        target: &TargetStructure,
    ) -> Result<FoldResult, FoldError>;

    /// Thermal energy in the engine's units.
    fn kt(&self) -> f64;
}

impl<E: FoldingEngine + ?Sized> FoldingEngine for Box<E> {
    fn fold(
        &mut self,
        seq: &NucleotideSequence,
        target: &TargetStructure,
    ) -> Result<FoldResult, FoldError> {
        (**self).fold(seq, target)
    }

    fn kt(&self) -> f64 {
        (**self).kt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    #[default]
    Builtin,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub kind: EngineKind,
    pub min_hairpin: usize,
    pub kt: f64,
    pub external_command: Option<String>,
    pub timeout_secs: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            kind: EngineKind::Builtin,
            min_hairpin: 3,
            kt: 1.0,
            external_command: None,
            timeout_secs: 30.0,
        }
    }
}

impl EngineConfig {
    pub fn builtin(min_hairpin: usize, kt: f64) -> Self {
        EngineConfig {
            min_hairpin,
            kt,
            ..Default::default()
        }
    }

    pub fn external(command: impl Into<String>) -> Self {
        EngineConfig {
            kind: EngineKind::External,
            external_command: Some(command.into()),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), FoldError> {
        if !(self.kt.is_finite() && self.kt > 0.0) {
            return Err(FoldError::Config(format!(
                "kT must be positive, got {}",
                self.kt
            )));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(FoldError::Config(format!(
                "timeout must be positive, got {}",
                self.timeout_secs
            )));
        }
        Ok(())
    }

    /// External command, falling back to the environment override.
    pub fn resolved_command(&self) -> Option<String> {
        self.external_command
            .clone()
            .or_else(|| std::env::var(EXTERNAL_CMD_ENV).ok())
            .filter(|c| !c.trim().is_empty())
    }

    /// Build a fresh engine instance. Runs never share instances.
    pub fn build(&self) -> Result<Box<dyn FoldingEngine>, FoldError> {
        self.validate()?;
        match self.kind {
            EngineKind::Builtin => Ok(Box::new(BuiltinEngine::new(self.min_hairpin, self.kt))),
            EngineKind::External => {
                let cmd = self.resolved_command().ok_or_else(|| {
                    FoldError::Config(format!(
                        "external engine needs a command (flag or {EXTERNAL_CMD_ENV})"
                    ))
                })?;
                Ok(Box::new(ExternalEngine::spawn(
                    &cmd,
                    self.kt,
                    self.timeout_secs,
                )?))
            }
        }
    }
}

/// Fold one sequence with a freshly built engine.
pub fn fold(
    seq: &NucleotideSequence,
    target: &TargetStructure,
    cfg: &EngineConfig,
) -> Result<FoldResult, FoldError> {
    cfg.build()?.fold(seq, target)
}

/// Partition function of the built-in model.
pub fn partition_function(seq: &NucleotideSequence, cfg: &EngineConfig) -> Result<f64, FoldError> {
    cfg.validate()?;
    Ok(BuiltinEngine::new(cfg.min_hairpin, cfg.kt)
        .log_partition_function(seq)
        .exp())
}

/// Ensemble defect of `target` under the configured engine.
pub fn ensemble_defect(
    seq: &NucleotideSequence,
    target: &TargetStructure,
    cfg: &EngineConfig,
) -> Result<f64, FoldError> {
    Ok(fold(seq, target, cfg)?.ensemble_defect)
}

/// Send one request to the configured external folder and return its
/// validated reply.
pub fn external_fold_roundtrip(
    seq: &NucleotideSequence,
    target: &TargetStructure,
    cfg: &EngineConfig,
) -> Result<FoldResult, FoldError> {
    let cmd = cfg
        .resolved_command()
        .ok_or_else(|| FoldError::Config("no external command configured".into()))?;
    cfg.validate()?;
    ExternalEngine::spawn(&cmd, cfg.kt, cfg.timeout_secs)?.fold(seq, target)
}
