//! Experiment configuration: what a run computes and where its report goes.

use clap::ValueEnum;
use cyclicity::boundary::BoundarySet;
use cyclicity::criterion::Theorem;
use cyclicity::phragmen::DomainProfile;
use cyclicity::weights::WeightSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::report::{canonical_json, Format};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum TheoremKind {
    Teo2,
    Teo3,
    Nikolski,
    Gs,
    Geometric,
    DoublyExp,
}

impl TheoremKind {
    /// `param` is `α`, or `p` for the `w = log^p` families.
    pub fn theorem(self, param: f64, beta: f64) -> Theorem {
        match self {
            TheoremKind::Teo2 => Theorem::Teo2 { alpha: param, beta },
            TheoremKind::Teo3 => Theorem::Teo3 { alpha: param },
            TheoremKind::Nikolski => Theorem::Nikolski { alpha: param },
            TheoremKind::Gs => Theorem::Gs { alpha: param },
            TheoremKind::Geometric => Theorem::Geometric { p: param },
            TheoremKind::DoublyExp => Theorem::DoublyExp { p: param },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CommandConfig {
    WeightsCheck {
        weight: WeightSpec,
        grid: usize,
        decades: f64,
        checkpoints: usize,
    },
    Gamma {
        weight: WeightSpec,
        set: BoundarySet,
        theta: Vec<f64>,
        normalize: bool,
    },
    OmegaTrace {
        weight: WeightSpec,
        set: BoundarySet,
        from: f64,
        to: f64,
        points: usize,
        normalize: bool,
    },
    OmegaProfile {
        weight: WeightSpec,
        from: f64,
        to: f64,
        points: usize,
    },
    Sigma {
        profile: DomainProfile,
        rho: Vec<f64>,
    },
    HmMc {
        profile: DomainProfile,
        rho: Vec<f64>,
        z0: f64,
        paths: usize,
        seed: u64,
    },
    AuxVerifyLemma {
        weight: WeightSpec,
        set: BoundarySet,
        a: f64,
        #[serde(rename = "A")]
        big_a: f64,
        grid: usize,
    },
    AuxIdentities {
        weight: WeightSpec,
        set: BoundarySet,
        radii: Vec<f64>,
        angles: usize,
    },
    AuxKeldysh {
        weight: WeightSpec,
        set: BoundarySet,
        theta: Vec<f64>,
    },
    CriterionAnalyze {
        weight: WeightSpec,
        set: BoundarySet,
        checkpoints: usize,
        arcs_cutoff: f64,
        /// Cantor arcs are listed from generations `1..=arcs_depth` only.
        arcs_depth: u32,
        exact: bool,
    },
    Scan {
        theorem: TheoremKind,
        alpha_from: f64,
        alpha_to: f64,
        step: f64,
        /// Only for `teo2`; one scan row per `(α, β)`.
        beta: Vec<f64>,
        depth: u32,
        checkpoints: usize,
        scale: f64,
        t_cut: Option<f64>,
    },
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::WeightsCheck { .. } => "weights check",
            CommandConfig::Gamma { .. } => "gamma",
            CommandConfig::OmegaTrace { .. } => "omega trace",
            CommandConfig::OmegaProfile { .. } => "omega profile",
            CommandConfig::Sigma { .. } => "sigma",
            CommandConfig::HmMc { .. } => "hm-mc",
            CommandConfig::AuxVerifyLemma { .. } => "aux verify-lemma",
            CommandConfig::AuxIdentities { .. } => "aux identities",
            CommandConfig::AuxKeldysh { .. } => "aux keldysh",
            CommandConfig::CriterionAnalyze { .. } => "criterion analyze",
            CommandConfig::Scan { .. } => "scan",
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            CommandConfig::WeightsCheck { .. }
            | CommandConfig::HmMc { .. }
            | CommandConfig::AuxKeldysh { .. }
            | CommandConfig::CriterionAnalyze { .. } => Format::Json,
            _ => Format::Csv,
        }
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn hash(&self) -> Result<String, CliError> {
        Ok(hex::encode(Sha256::digest(canonical_json(self)?.as_bytes())))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Standard output when absent.
    #[serde(default)]
    pub path: Option<String>,
    /// The command's default when absent.
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: CommandConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        canonical_json(self)
    }

    /// The configuration as its canonical JSON reads back, so numbers carry
    /// exactly the digits a report shows.
    pub fn canonical(&self) -> Result<Self, CliError> {
        Self::from_json(&self.to_json()?)
    }

    pub fn format(&self) -> Format {
        self.output.format.unwrap_or_else(|| self.run.default_format())
    }
}
