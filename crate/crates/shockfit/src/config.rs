//! Run configuration: a single TOML file with nested sections for the gas,
//! the inflow, the nozzle and exit perturbations, the perturbation
//! hypothesis, and the numerical controls.

use crate::background::unit_flux_inflow;
use crate::gas::{FlowState, GasModel, IgnitionParams};
use crate::locator::{Hypothesis, HypothesisCase, NozzlePerturbation, RootPolicy};
use crate::profile::Profile;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub gas: GasBlock,
    pub inflow: InflowBlock,
    pub nozzle: NozzleBlock,
    pub exit: ExitBlock,
    pub hypothesis: HypothesisBlock,
    #[serde(default)]
    pub numerics: NumericsBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasBlock {
    pub gamma: f64,
    pub c_v: f64,
    pub q_e: f64,
    pub kappa: f64,
    pub ignition: IgnitionBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IgnitionBlock {
    pub t0: f64,
    pub a: f64,
    pub activation_energy: f64,
    pub r0: f64,
}

/// Inflow: pressure plus one of `rho`/`s` (or `unit_mass_flux = true`) and
/// one of `mach`/`q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflowBlock {
    pub p: f64,
    pub rho: Option<f64>,
    pub s: Option<f64>,
    pub mach: Option<f64>,
    pub q: Option<f64>,
    #[serde(default)]
    pub unit_mass_flux: bool,
    pub z: f64,
    #[serde(default = "default_true")]
    pub require_ignition: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NozzleBlock {
    pub length: f64,
    pub sigma: f64,
    pub theta: ProfileSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitBlock {
    pub p_sigma: ProfileSpec,
    pub p_kappa: ProfileSpec,
}

/// Profile data: polynomial coefficients (constant term first), a constant,
/// inline uniform samples, or a two-column sample file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Constant { constant: f64 },
    Poly { poly: Vec<f64> },
    Samples { samples: Vec<f64>, x0: f64, x1: f64 },
    SamplesFile { samples_file: PathBuf },
}

impl ProfileSpec {
    pub fn build(&self, base_dir: &Path) -> Result<Profile> {
        match self {
            ProfileSpec::Constant { constant } => Ok(Profile::constant(*constant)),
            ProfileSpec::Poly { poly } => Profile::poly(poly.clone()),
            ProfileSpec::Samples { samples, x0, x1 } => Profile::samples(*x0, *x1, samples.clone()),
            ProfileSpec::SamplesFile { samples_file } => {
                let path = if samples_file.is_absolute() {
                    samples_file.clone()
                } else {
                    base_dir.join(samples_file)
                };
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::Config(format!("cannot read profile file {}: {e}", path.display()))
                })?;
                read_samples_table(&text, &path)
            }
        }
    }
}

/// Parse a two-column whitespace-separated table with uniformly spaced,
/// monotone abscissae.
fn read_samples_table(text: &str, path: &Path) -> Result<Profile> {
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(a), Some(b)) = (it.next(), it.next()) else {
            return Err(Error::Config(format!(
                "{}:{}: expected two columns",
                path.display(),
                lineno + 1
            )));
        };
        let x: f64 = a.parse().map_err(|_| {
            Error::Config(format!(
                "{}:{}: bad abscissa {a:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        let v: f64 = b.parse().map_err(|_| {
            Error::Config(format!(
                "{}:{}: bad value {b:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        xs.push(x);
        vs.push(v);
    }
    if xs.len() < 4 {
        return Err(Error::Config(format!(
            "{}: need at least 4 sample rows, got {}",
            path.display(),
            xs.len()
        )));
    }
    let h = xs[1] - xs[0];
    if !(h > 0.0) {
        return Err(Error::Config(format!(
            "{}: abscissae must increase",
            path.display()
        )));
    }
    for k in 1..xs.len() {
        let step = xs[k] - xs[k - 1];
        if (step - h).abs() > 1e-9 * h.abs().max(1.0) {
            return Err(Error::Config(format!(
                "{}: abscissae must be uniformly spaced (row {} breaks the step)",
                path.display(),
                k + 1
            )));
        }
    }
    Profile::samples(xs[0], *xs.last().unwrap(), vs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisBlock {
    /// One of `h1`, `h2`, `h3`, `h4`.
    pub case: String,
    pub a: Option<f64>,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub s: Option<f64>,
    pub beta0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBlock {
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_ny")]
    pub ny: usize,
    pub nx_up: Option<usize>,
    pub tol: Option<f64>,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(default)]
    pub root_policy: RootPolicySpec,
}

fn default_nx() -> usize {
    256
}
fn default_ny() -> usize {
    64
}
fn default_max_sweeps() -> usize {
    100
}

impl Default for NumericsBlock {
    fn default() -> Self {
        Self {
            nx: default_nx(),
            ny: default_ny(),
            nx_up: None,
            tol: None,
            max_sweeps: default_max_sweeps(),
            root_policy: RootPolicySpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootPolicySpec {
    #[default]
    Nearest,
    Smallest,
    Largest,
}

impl From<RootPolicySpec> for RootPolicy {
    fn from(v: RootPolicySpec) -> Self {
        match v {
            RootPolicySpec::Nearest => RootPolicy::NearestXiStar,
            RootPolicySpec::Smallest => RootPolicy::Smallest,
            RootPolicySpec::Largest => RootPolicy::Largest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
}

/// Sweep values; the hypothesis decides which lists apply (H1 sweeps
/// `sigma`, H2/H3 sweep `kappa`, H4 takes the Cartesian product).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default)]
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub kappa: Vec<f64>,
}

/// A fully resolved scenario ready for the solvers.
#[derive(Debug)]
pub struct Scenario {
    pub gas: GasModel,
    pub inflow: FlowState,
    pub require_ignition: bool,
    pub pert: NozzlePerturbation,
    pub hypothesis: Hypothesis,
    pub numerics: NumericsBlock,
    pub out_dir: PathBuf,
    pub sweep: Option<SweepBlock>,
    pub notes: Vec<String>,
}

impl RunConfig {
    pub fn from_str_checked(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str_checked(&text)
    }

    /// Resolve the raw blocks into model objects, deriving the dependent
    /// perturbation scale from the hypothesis.
    pub fn resolve(&self, base_dir: &Path) -> Result<Scenario> {
        let mut notes = Vec::new();
        let ignition = IgnitionParams::new(
            self.gas.ignition.t0,
            self.gas.ignition.a,
            self.gas.ignition.activation_energy,
            self.gas.ignition.r0,
        )?;
        let hypothesis = self.hypothesis_spec()?;
        // The hypothesis couples sigma and kappa; derive the dependent one.
        let (sigma, kappa) = match hypothesis.case {
            HypothesisCase::H1 { a1, s } => {
                let sigma = self.nozzle.sigma;
                let kappa = a1 * sigma.powf(s);
                if (kappa - self.gas.kappa).abs() > 1e-12 * kappa.abs().max(1e-12) {
                    notes.push(format!(
                        "H1 derives kappa = A1 sigma^s = {kappa:.6e}, overriding [gas] kappa = {:.6e}",
                        self.gas.kappa
                    ));
                }
                (sigma, kappa)
            }
            HypothesisCase::H2 { a2, s } => {
                let kappa = self.gas.kappa;
                let sigma = a2 * kappa.powf(s);
                if (sigma - self.nozzle.sigma).abs() > 1e-12 * sigma.abs().max(1e-12) {
                    notes.push(format!(
                        "H2 derives sigma = A2 kappa^s = {sigma:.6e}, overriding [nozzle] sigma = {:.6e}",
                        self.nozzle.sigma
                    ));
                }
                (sigma, kappa)
            }
            HypothesisCase::H3 { a } => {
                let kappa = self.gas.kappa;
                let sigma = a * kappa;
                if (sigma - self.nozzle.sigma).abs() > 1e-12 * sigma.abs().max(1e-12) {
                    notes.push(format!(
                        "H3 derives sigma = A kappa = {sigma:.6e}, overriding [nozzle] sigma = {:.6e}",
                        self.nozzle.sigma
                    ));
                }
                (sigma, kappa)
            }
            HypothesisCase::H4 => (self.nozzle.sigma, self.gas.kappa),
        };
        let gas = GasModel::new(self.gas.gamma, self.gas.c_v, self.gas.q_e, kappa, ignition)?;
        let inflow = self.build_inflow(&gas)?;
        let pert = NozzlePerturbation::new(
            self.nozzle.length,
            sigma,
            kappa,
            self.nozzle.theta.build(base_dir)?,
            self.exit.p_sigma.build(base_dir)?,
            self.exit.p_kappa.build(base_dir)?,
        )?;
        let out_dir = self
            .output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Scenario {
            gas,
            inflow,
            require_ignition: self.inflow.require_ignition,
            pert,
            hypothesis,
            numerics: self.numerics.clone(),
            out_dir,
            sweep: self.sweep.clone(),
            notes,
        })
    }

    fn hypothesis_spec(&self) -> Result<Hypothesis> {
        let h = &self.hypothesis;
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::Config(format!("hypothesis {} requires `{name}`", h.case)))
        };
        let case = match h.case.to_ascii_lowercase().as_str() {
            "h1" => HypothesisCase::H1 {
                a1: need("a1", h.a1)?,
                s: need("s", h.s)?,
            },
            "h2" => HypothesisCase::H2 {
                a2: need("a2", h.a2)?,
                s: need("s", h.s)?,
            },
            "h3" => HypothesisCase::H3 { a: need("a", h.a)? },
            "h4" => HypothesisCase::H4,
            other => {
                return Err(Error::Config(format!(
                    "hypothesis case must be one of h1..h4, got {other:?}"
                )))
            }
        };
        let hyp = Hypothesis {
            case,
            beta0: h.beta0,
        };
        hyp.validate()?;
        Ok(hyp)
    }

    fn build_inflow(&self, gas: &GasModel) -> Result<FlowState> {
        let inf = &self.inflow;
        if !(inf.p > 0.0) {
            return Err(Error::Config(format!(
                "inflow p must be > 0, got {}",
                inf.p
            )));
        }
        if inf.unit_mass_flux {
            if inf.rho.is_some() || inf.s.is_some() {
                return Err(Error::Config(
                    "inflow: unit_mass_flux excludes `rho` and `s`".into(),
                ));
            }
            let mach = inf
                .mach
                .ok_or_else(|| Error::Config("inflow: unit_mass_flux requires `mach`".into()))?;
            return unit_flux_inflow(gas, inf.p, mach, inf.z);
        }
        let rho = match (inf.rho, inf.s) {
            (Some(rho), None) => {
                if !(rho > 0.0) {
                    return Err(Error::Config(format!("inflow rho must be > 0, got {rho}")));
                }
                rho
            }
            (None, Some(s)) => gas.density(inf.p, s)?,
            (None, None) => {
                return Err(Error::Config(
                    "inflow: give exactly one of `rho`, `s`, or set unit_mass_flux".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "inflow: give only one of `rho` and `s`".into(),
                ))
            }
        };
        let q = match (inf.q, inf.mach) {
            (Some(q), None) => q,
            (None, Some(m)) => m * gas.sound_speed(inf.p, rho)?,
            (None, None) => return Err(Error::Config("inflow: give one of `mach` and `q`".into())),
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "inflow: give only one of `mach` and `q`".into(),
                ))
            }
        };
        let s = gas.entropy(inf.p, rho)?;
        FlowState::new(inf.p, 0.0, q, s, inf.z)
            .map_err(|e| Error::Config(format!("inflow state invalid: {e}")))
    }
}
