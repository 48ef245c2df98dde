//! Command-line grammar.  Every subcommand resolves to a [`CommandConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use cyclicity::auxfun::{GammaRegionSpec, A_SMALL_MAX};
use cyclicity::boundary::BoundarySet;
use cyclicity::phragmen::DomainProfile;
use cyclicity::weights::WeightSpec;
use serde::de::DeserializeOwned;

use crate::config::{CommandConfig, TheoremKind};
use crate::report::Format;

fn json<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

fn weight_json(s: &str) -> Result<WeightSpec, String> {
    json(s)
}

fn set_json(s: &str) -> Result<BoundarySet, String> {
    json(s)
}

fn profile_json(s: &str) -> Result<DomainProfile, String> {
    json(s)
}

#[derive(Debug, Parser)]
#[command(name = "cyclicity", version, about = "Cyclicity criteria for weighted Bergman-type spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Cmd>,
    /// Run the experiment described by a JSON config file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the resolved config as JSON to FILE.
    #[arg(long, global = true, value_name = "FILE")]
    pub save_config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Report file; standard output when absent.
    #[arg(long, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Record wall-clock time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
    /// Exit with status 3 when the headline verdict is inconclusive.
    #[arg(long, global = true)]
    pub strict_verdict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Weight diagnostics.
    Weights {
        #[command(subcommand)]
        action: WeightsCmd,
    },
    /// Solve for γ(θ) and the half-plane coordinates of the boundary point.
    Gamma(GammaArgs),
    /// Boundary of the domain Ω.
    Omega {
        #[command(subcommand)]
        action: OmegaCmd,
    },
    /// Ahlfors–Carleman integral σ(ρ) of a profile.
    Sigma(SigmaArgs),
    /// Monte Carlo harmonic measure checked against exp(-π∫dr/s).
    HmMc(HmMcArgs),
    /// Auxiliary outer functions.
    Aux {
        #[command(subcommand)]
        action: AuxCmd,
    },
    /// Arc-classification criterion.
    Criterion {
        #[command(subcommand)]
        action: CriterionCmd,
    },
    /// Criterion verdicts against a theorem's threshold over a parameter range.
    Scan(ScanArgs),
}

#[derive(Debug, Subcommand)]
pub enum WeightsCmd {
    /// Regularity report and condition-integral verdicts.
    Check(WeightsCheckArgs),
}

#[derive(Debug, Subcommand)]
pub enum OmegaCmd {
    /// γ, R and φ at geometrically spaced angles.
    Trace(TraceArgs),
    /// The profile y(x) in the half-plane against its 2√(x/u) asymptotic.
    Profile(ProfileArgs),
}

#[derive(Debug, Subcommand)]
pub enum AuxCmd {
    /// H_λ(z) over the Γ-region grid.
    VerifyLemma(LemmaArgs),
    /// |f_λ S| = 1 at λ, c_λ⁻¹, the sup bound of |f_λ| and H_λ(λ).
    Identities(IdentityArgs),
    /// Amplitude search for the Keldysh witness.
    Keldysh(KeldyshArgs),
}

#[derive(Debug, Subcommand)]
pub enum CriterionCmd {
    /// Partial sums, verdicts and classified arcs.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct WeightArg {
    /// Weight JSON, e.g. '{"family":"log_power","alpha":1}'.
    #[arg(long, value_parser = weight_json)]
    pub weight: WeightSpec,
}

#[derive(Debug, Args)]
pub struct SetArg {
    /// Boundary set JSON, e.g. '{"kind":"cantor","depth":30}'.
    #[arg(long, value_parser = set_json)]
    pub set: BoundarySet,
}

#[derive(Debug, Args)]
pub struct WeightsCheckArgs {
    #[command(flatten)]
    pub weight: WeightArg,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Decades below the pure-region cut covered by the grid.
    #[arg(long, default_value_t = 12.0)]
    pub decades: f64,
    #[arg(long, default_value_t = 29)]
    pub checkpoints: usize,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    #[command(flatten)]
    pub weight: WeightArg,
    #[command(flatten)]
    pub set: SetArg,
    #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    /// Rescale Λ so that Λ(1) ≤ 0.09.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub weight: WeightArg,
    #[command(flatten)]
    pub set: SetArg,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub weight: WeightArg,
    #[arg(long, default_value_t = 10.0)]
    pub from: f64,
    #[arg(long, default_value_t = 1e6)]
    pub to: f64,
    #[arg(long, default_value_t = 25)]
    pub points: usize,
}

const HALF_PLANE: &str = r#"{"variant":"sector","phi":"zero"}"#;

#[derive(Debug, Args)]
pub struct SigmaArgs {
    /// Profile JSON, e.g. '{"variant":"cartesian","phi":"x"}'.
    #[arg(long, value_parser = profile_json)]
    pub profile: DomainProfile,
    #[arg(long, required = true, value_delimiter = ',')]
    pub rho: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct HmMcArgs {
    #[arg(long, value_parser = profile_json, default_value = HALF_PLANE)]
    pub profile: DomainProfile,
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    pub rho: Vec<f64>,
    /// Real starting point.
    #[arg(long, default_value_t = 1.0)]
    pub z0: f64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 20_240_917)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    #[command(flatten)]
    pub weight: WeightArg,
    #[command(flatten)]
    pub set: SetArg,
    #[arg(long)]
    pub a: Option<f64>,
    /// 1000 for the full circle, 100 otherwise.
    #[arg(long = "A")]
    pub big_a: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct IdentityArgs {
    #[arg(long, value_parser = weight_json, default_value = r#"{"family":"log_power","alpha":1}"#)]
    pub weight: WeightSpec,
    #[arg(long, value_parser = set_json, default_value = r#"{"kind":"full"}"#)]
    pub set: BoundarySet,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,0.9,0.99,0.999")]
    pub radii: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub angles: usize,
}

#[derive(Debug, Args)]
pub struct KeldyshArgs {
    #[arg(long, value_parser = weight_json, default_value = r#"{"family":"log_power","alpha":2}"#)]
    pub weight: WeightSpec,
    #[arg(long, value_parser = set_json, default_value = r#"{"kind":"point"}"#)]
    pub set: BoundarySet,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.001,0.0001")]
    pub theta: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub weight: WeightArg,
    #[command(flatten)]
    pub set: SetArg,
    /// Number of checkpoints L_k = 10·10^(k/4).
    #[arg(long, default_value_t = 29)]
    pub checkpoints: usize,
    /// Smallest right endpoint b of the listed arcs.
    #[arg(long, default_value_t = 1e-6)]
    pub arcs_cutoff: f64,
    /// Generations of a Cantor set listed in the arc table.
    #[arg(long, default_value_t = 12)]
    pub arcs_depth: u32,
    /// Sum every Cantor level instead of windowed blocks.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub theorem: TheoremKind,
    /// Start of the α range (p for geometric and doubly_exp).
    #[arg(long)]
    pub alpha_from: f64,
    #[arg(long)]
    pub alpha_to: f64,
    #[arg(long)]
    pub step: f64,
    /// β values for teo2.
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    pub depth: u32,
    #[arg(long, default_value_t = 29)]
    pub checkpoints: usize,
    /// Weight scale c₀.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long)]
    pub t_cut: Option<f64>,
}

impl Cmd {
    pub fn into_config(self) -> CommandConfig {
        match self {
            Cmd::Weights { action: WeightsCmd::Check(a) } => CommandConfig::WeightsCheck {
                weight: a.weight.weight,
                grid: a.grid,
                decades: a.decades,
                checkpoints: a.checkpoints,
            },
            Cmd::Gamma(a) => CommandConfig::Gamma {
                weight: a.weight.weight,
                set: a.set.set,
                theta: a.theta,
                normalize: a.normalize,
            },
            Cmd::Omega { action: OmegaCmd::Trace(a) } => CommandConfig::OmegaTrace {
                weight: a.weight.weight,
                set: a.set.set,
                from: a.from,
                to: a.to,
                points: a.points,
                normalize: a.normalize,
            },
            Cmd::Omega { action: OmegaCmd::Profile(a) } => {
                CommandConfig::OmegaProfile { weight: a.weight.weight, from: a.from, to: a.to, points: a.points }
            }
            Cmd::Sigma(a) => CommandConfig::Sigma { profile: a.profile, rho: a.rho },
            Cmd::HmMc(a) => CommandConfig::HmMc { profile: a.profile, rho: a.rho, z0: a.z0, paths: a.paths, seed: a.seed },
            Cmd::Aux { action: AuxCmd::VerifyLemma(a) } => {
                let d = GammaRegionSpec::with_defaults(a.weight.weight, a.set.set);
                CommandConfig::AuxVerifyLemma {
                    weight: a.weight.weight,
                    set: a.set.set,
                    a: a.a.unwrap_or(A_SMALL_MAX),
                    big_a: a.big_a.unwrap_or(d.big_a),
                    grid: a.grid,
                }
            }
            Cmd::Aux { action: AuxCmd::Identities(a) } => {
                CommandConfig::AuxIdentities { weight: a.weight, set: a.set, radii: a.radii, angles: a.angles }
            }
            Cmd::Aux { action: AuxCmd::Keldysh(a) } => {
                CommandConfig::AuxKeldysh { weight: a.weight, set: a.set, theta: a.theta }
            }
            Cmd::Criterion { action: CriterionCmd::Analyze(a) } => CommandConfig::CriterionAnalyze {
                weight: a.weight.weight,
                set: a.set.set,
                checkpoints: a.checkpoints,
                arcs_cutoff: a.arcs_cutoff,
                arcs_depth: a.arcs_depth,
                exact: a.exact,
            },
            Cmd::Scan(a) => CommandConfig::Scan {
                theorem: a.theorem,
                alpha_from: a.alpha_from,
                alpha_to: a.alpha_to,
                step: a.step,
                beta: a.beta,
                depth: a.depth,
                checkpoints: a.checkpoints,
                scale: a.scale,
                t_cut: a.t_cut,
            },
        }
    }
}
