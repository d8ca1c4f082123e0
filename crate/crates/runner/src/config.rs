//! Experiment configuration (TOML) and its resolution into library objects.

use std::collections::BTreeMap;
use std::path::Path;

use lrdyn::algebra::{pauli, Volume, DEFAULT_SUPEROP_CAP};
use lrdyn::generator::{GeneratorSpec, InteractionTerm, TimeProfile};
use lrdyn::lattice::{DecayBase, DecayFunction, MetricGraph};
use lrdyn::models;
use lrdyn::{Mat, C64};
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CheckHypotheses,
    EulerConvergence,
    LrScan,
    BoundDomination,
    ThermoSweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::CheckHypotheses => "check-hypotheses",
            Experiment::EulerConvergence => "euler-convergence",
            Experiment::LrScan => "lr-scan",
            Experiment::BoundDomination => "bound-domination",
            Experiment::ThermoSweep => "thermo-sweep",
        }
    }

    fn needs_superop(self) -> bool {
        matches!(self, Experiment::EulerConvergence)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub model: ModelConfig,
    #[serde(default)]
    pub volume: VolumeConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub times: TimesConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub euler: EulerConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// A registered model name, or `custom` with explicit `terms`.
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermConfig>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub support: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<OperatorConfig>,
    #[serde(default)]
    pub lindblads: Vec<OperatorConfig>,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// A local matrix: a scaled Pauli string, or explicit rows of `[re, im]`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum OperatorConfig {
    Pauli {
        pauli: String,
        #[serde(default = "one")]
        coefficient: f64,
    },
    Matrix {
        matrix: Vec<Vec<[f64; 2]>>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileConfig {
    #[default]
    Constant,
    Sinusoidal {
        #[serde(default = "one")]
        offset: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    PiecewiseLinear {
        knots: Vec<[f64; 2]>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lattice {
    Chain,
    Grid,
    Custom,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeConfig {
    #[serde(default = "default_lattice")]
    pub lattice: Lattice,
    /// Chain length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    /// Distance matrix of a custom graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_site_dim")]
    pub site_dim: usize,
    #[serde(default = "default_superop_cap")]
    pub superop_cap: usize,
}

fn default_lattice() -> Lattice {
    Lattice::Chain
}

fn default_site_dim() -> usize {
    2
}

fn default_superop_cap() -> usize {
    DEFAULT_SUPEROP_CAP
}

impl Default for VolumeConfig {
    fn default() -> Self {
        Self {
            lattice: Lattice::Chain,
            sites: None,
            width: None,
            height: None,
            distances: None,
            site_dim: 2,
            superop_cap: DEFAULT_SUPEROP_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayKind {
    PowerLaw,
    Exponential,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    /// Defaults to a power law `(1 + r)^-(d+1)` on `Zᵈ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<DecayKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TimesConfig {
    #[serde(default)]
    pub start: f64,
    #[serde(default = "one")]
    pub stop: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    11
}

impl Default for TimesConfig {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 1.0,
            points: default_points(),
        }
    }
}

impl TimesConfig {
    pub fn grid(&self) -> Vec<f64> {
        lrdyn::generator::time_grid(self.start, self.stop, self.points)
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Integrator tolerance (relative and absolute).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<f64>,
    /// Tolerance of the numerical assertions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assertion: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_probes")]
    pub probes: usize,
}

fn default_probes() -> usize {
    4
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { probes: 4 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EulerConfig {
    #[serde(default = "default_steps")]
    pub steps: Vec<usize>,
}

fn default_steps() -> Vec<usize> {
    vec![10, 100, 1000]
}

impl Default for EulerConfig {
    fn default() -> Self {
        Self {
            steps: default_steps(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SiteOperator {
    pub pauli: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
}

impl Default for SiteOperator {
    fn default() -> Self {
        Self {
            pauli: "Z".into(),
            site: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// `B`; defaults to `σ_z` on site 0.
    #[serde(default)]
    pub observable: SiteOperator,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_mu_grid")]
    pub mu_grid: Vec<f64>,
}

fn default_theta() -> f64 {
    lrdyn::lrbound::DEFAULT_THETA
}

fn default_mu_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            observable: SiteOperator::default(),
            theta: default_theta(),
            mu_grid: default_mu_grid(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Odd interval lengths (chains) or square sides (grids).
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    /// Observable at the centre; `site` is ignored.
    #[serde(default = "default_sweep_observable")]
    pub observable: SiteOperator,
}

fn default_sizes() -> Vec<usize> {
    vec![3, 5, 7]
}

fn default_sweep_observable() -> SiteOperator {
    SiteOperator {
        pauli: "X".into(),
        site: None,
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sizes: default_sizes(),
            observable: default_sweep_observable(),
        }
    }
}

/// Parse a config file.
pub fn load(path: &Path) -> Result<Config, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<Config, RunError> {
    toml::from_str(text).map_err(|e| RunError::Config(e.to_string().trim_end().to_string()))
}

fn field(name: &str, reason: impl Into<String>) -> RunError {
    RunError::Config(format!("{name}: {}", reason.into()))
}

/// Everything a run needs, resolved and checked.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: Config,
    pub spec: GeneratorSpec,
    pub integrator_tol: f64,
    pub assertion_tol: f64,
}

impl Config {
    pub fn integrator_tol(&self) -> f64 {
        self.tolerances.integrator.unwrap_or(lrdyn::propagator::DEFAULT_TOL)
    }

    pub fn assertion_tol(&self) -> f64 {
        self.tolerances.assertion.unwrap_or(match self.experiment {
            Experiment::CheckHypotheses => 1e-10,
            _ => 1e-9,
        })
    }

    fn graph(&self) -> Result<MetricGraph, RunError> {
        let v = &self.volume;
        let sweep_largest = self.sweep.sizes.iter().copied().max();
        let g = match v.lattice {
            Lattice::Chain => {
                let n = match (v.sites, self.experiment) {
                    (Some(n), _) => n,
                    (None, Experiment::ThermoSweep) => sweep_largest.unwrap_or(0),
                    (None, _) => return Err(field("volume.sites", "required for a chain")),
                };
                MetricGraph::chain(n)
            }
            Lattice::Grid => {
                let side = (self.experiment == Experiment::ThermoSweep).then_some(sweep_largest).flatten();
                let w = v.width.or(side).ok_or_else(|| field("volume.width", "required for a grid"))?;
                let h = v.height.or(side).ok_or_else(|| field("volume.height", "required for a grid"))?;
                MetricGraph::grid(w, h)
            }
            Lattice::Custom => {
                let rows = v
                    .distances
                    .as_ref()
                    .ok_or_else(|| field("volume.distances", "required for a custom graph"))?;
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(field("volume.distances", "must be a square matrix"));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                let dist = ndarray::Array2::from_shape_vec((n, n), flat).expect("square");
                MetricGraph::custom((0..n).map(|i| i.to_string()).collect(), dist)
            }
        };
        g.map_err(|e| field("volume", e.to_string()))
    }

    fn decay(&self, graph: &MetricGraph) -> Result<DecayFunction, RunError> {
        let d = &self.decay;
        let base = match d.base {
            None => match (d.alpha, d.rate) {
                (Some(alpha), None) => DecayBase::PowerLaw { alpha },
                (None, Some(_)) => {
                    return Err(field("decay.base", "set base = \"exponential\" to use a rate"))
                }
                (None, None) => DecayBase::default_for_dim(graph.family().lattice_dim().unwrap_or(1)),
                (Some(_), Some(_)) => return Err(field("decay", "give either alpha or rate")),
            },
            Some(DecayKind::PowerLaw) => DecayBase::PowerLaw {
                alpha: d.alpha.ok_or_else(|| field("decay.alpha", "required for a power law"))?,
            },
            Some(DecayKind::Exponential) => DecayBase::Exponential {
                rate: d.rate.ok_or_else(|| field("decay.rate", "required for an exponential base"))?,
            },
        };
        let mu = d.mu.unwrap_or(1.0);
        DecayFunction::new(base, mu, graph).map_err(|e| field("decay", e.to_string()))
    }

    fn check_numbers(&self) -> Result<(), RunError> {
        for (name, v) in [
            ("tolerances.integrator", self.tolerances.integrator),
            ("tolerances.assertion", self.tolerances.assertion),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(field(name, format!("must be positive, got {v}")));
                }
            }
        }
        let t = &self.times;
        if !(t.start.is_finite() && t.stop.is_finite() && t.start >= 0.0 && t.stop >= t.start) {
            return Err(field("times", format!("need 0 ≤ start ≤ stop, got [{}, {}]", t.start, t.stop)));
        }
        if t.points < 2 {
            return Err(field("times.points", "need at least 2 points"));
        }
        if self.experiment == Experiment::EulerConvergence && self.euler.steps.contains(&0) {
            return Err(field("euler.steps", "step counts must be ≥ 1"));
        }
        if !(self.scan.theta > 0.0) {
            return Err(field("scan.theta", "must be positive"));
        }
        if self.scan.mu_grid.iter().any(|&m| !(m > 0.0)) {
            return Err(field("scan.mu_grid", "every μ must be positive"));
        }
        Ok(())
    }

    /// Resolve names, build the generator and check caps without running
    /// anything expensive.
    pub fn prepare(&self) -> Result<Prepared, RunError> {
        self.check_numbers()?;
        let graph = self.graph()?;
        let decay = self.decay(&graph)?;
        let n = graph.len();
        if self.volume.site_dim < 2 {
            return Err(field("volume.site_dim", "must be ≥ 2"));
        }
        let volume = Volume::new(graph, vec![self.volume.site_dim; n])
            .and_then(|v| v.with_superop_cap(self.volume.superop_cap))
            .map_err(|e| cap_error(e, self.volume.site_dim))?;
        if self.experiment.needs_superop() && !volume.superop_allowed() {
            return Err(RunError::Config(format!(
                "{} forms superoperator matrices: dimension {} exceeds volume.superop_cap = {}; {}",
                self.experiment.name(),
                volume.total_dim(),
                volume.superop_cap(),
                suggest(self.volume.site_dim, volume.superop_cap())
            )));
        }
        let spec = self.build_model(volume, decay)?;
        if self.experiment == Experiment::ThermoSweep {
            let mut sizes = self.sweep.sizes.clone();
            sizes.sort_unstable();
            sizes.dedup();
            if sizes.len() != self.sweep.sizes.len() || sizes != self.sweep.sizes {
                return Err(field("sweep.sizes", "must be strictly increasing"));
            }
        }
        Ok(Prepared {
            config: self.clone(),
            spec,
            integrator_tol: self.integrator_tol(),
            assertion_tol: self.assertion_tol(),
        })
    }

    fn build_model(&self, volume: Volume, decay: DecayFunction) -> Result<GeneratorSpec, RunError> {
        let m = &self.model;
        if m.name != "custom" {
            if !m.terms.is_empty() {
                return Err(field("model.terms", "only allowed with name = \"custom\""));
            }
            let card = models::card(&m.name).map_err(|e| field("model.name", e.to_string()))?;
            if card.needs_seed && self.seed.is_none() {
                return Err(field("seed", format!("model {} needs an explicit seed", m.name)));
            }
            return models::build(&m.name, &m.params, volume, Some(decay), self.seed).map_err(|e| match e {
                lrdyn::Error::InvalidParameter { name, reason } if name != "seed" => {
                    field(&format!("model.params.{name}"), reason)
                }
                other => field("model", other.to_string()),
            });
        }
        if !m.params.is_empty() {
            return Err(field("model.params", "custom models take explicit terms instead"));
        }
        let terms = m
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| t.build(&volume).map_err(|e| field(&format!("model.terms[{i}]"), e)))
            .collect::<Result<Vec<_>, _>>()?;
        GeneratorSpec::new(volume, terms)
            .map(|s| s.with_decay(decay))
            .map_err(|e| field("model.terms", e.to_string()))
    }
}

fn suggest(site_dim: usize, cap: usize) -> String {
    let mut n = 0;
    let mut d = 1usize;
    while d * site_dim <= cap {
        d *= site_dim;
        n += 1;
    }
    format!("use at most {n} sites of dimension {site_dim} or raise the cap")
}

fn cap_error(e: lrdyn::Error, site_dim: usize) -> RunError {
    match e {
        lrdyn::Error::CapExceeded { cap, .. } => {
            RunError::Config(format!("volume: {e}; {}", suggest(site_dim, cap)))
        }
        other => field("volume", other.to_string()),
    }
}

impl OperatorConfig {
    fn matrix(&self, dim: usize) -> Result<Mat, String> {
        let m = match self {
            OperatorConfig::Pauli { pauli: p, coefficient } => pauli::pauli_string(p)
                .map_err(|e| e.to_string())?
                .mapv(|z| z * *coefficient),
            OperatorConfig::Matrix { matrix } => {
                let n = matrix.len();
                if matrix.iter().any(|r| r.len() != n) {
                    return Err("matrix rows must all have the same length as the matrix".into());
                }
                let flat: Vec<C64> = matrix.iter().flatten().map(|[re, im]| C64::new(*re, *im)).collect();
                Mat::from_shape_vec((n, n), flat).expect("square")
            }
        };
        if m.nrows() != dim {
            return Err(format!("operator is {0}×{0}, support needs {dim}×{dim}", m.nrows()));
        }
        Ok(m)
    }
}

impl ProfileConfig {
    fn profile(&self) -> Result<TimeProfile, String> {
        Ok(match self {
            ProfileConfig::Constant => TimeProfile::Constant,
            ProfileConfig::Sinusoidal {
                offset,
                amplitude,
                omega,
                phase,
            } => TimeProfile::Sinusoidal {
                offset: *offset,
                amplitude: *amplitude,
                omega: *omega,
                phase: *phase,
            },
            ProfileConfig::PiecewiseLinear { knots } => {
                TimeProfile::piecewise_linear(knots.iter().map(|[t, v]| (*t, *v)).collect())
                    .map_err(|e| e.to_string())?
            }
        })
    }
}

impl TermConfig {
    fn build(&self, volume: &Volume) -> Result<InteractionTerm, String> {
        let dim = volume.local_dim(&self.support).map_err(|e| e.to_string())?;
        let phi = match &self.phi {
            Some(op) => op.matrix(dim).map_err(|e| format!("phi: {e}"))?,
            None => Mat::zeros((dim, dim)),
        };
        let lindblads = self
            .lindblads
            .iter()
            .enumerate()
            .map(|(i, l)| l.matrix(dim).map_err(|e| format!("lindblads[{i}]: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        let label = self.label.clone().unwrap_or_else(|| "custom".into());
        InteractionTerm::new(self.support.clone(), phi, lindblads, self.profile.profile()?, label)
            .map_err(|e| e.to_string())
    }
}
