//! Finite metric graphs standing in for truncations of an infinite lattice,
//! together with the decay functions `F`, `F_μ` and their summability
//! constants `‖F‖` and `C`.
//!
//! Constants over an infinite lattice are represented twice: as the value of
//! the defining supremum over the finite graph at hand (a lower estimate of
//! the lattice value) and as a certified upper bound. Certificates always
//! consume the certified value.

use ndarray::Array2;
use serde::Serialize;

use crate::{Error, Result};

/// Largest graph accepted for dense distance storage.
pub const MAX_VERTICES: usize = 4096;

/// Default cap on the number of subsets produced by [`enumerate_subsets`].
pub const DEFAULT_SUBSET_CAP: usize = 1_000_000;

/// Number of explicitly summed shells before switching to an integral tail
/// bound in the analytic `‖F‖` bounds.
const ANALYTIC_SHELLS: usize = 20_000;

/// The infinite lattice a graph is a truncation of.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FamilyTag {
    /// `Z` with `d(x, y) = |x - y|`.
    Chain,
    /// `Z²` with the path (Manhattan) metric; `width` is the row length of
    /// the truncation.
    Grid { width: usize, height: usize },
    /// The graph is the whole metric space.
    Custom,
}

impl FamilyTag {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyTag::Chain => "chain-Z1",
            FamilyTag::Grid { .. } => "grid-Z2",
            FamilyTag::Custom => "custom",
        }
    }

    /// Dimension of the underlying lattice, `None` for custom graphs.
    pub fn lattice_dim(&self) -> Option<usize> {
        match self {
            FamilyTag::Chain => Some(1),
            FamilyTag::Grid { .. } => Some(2),
            FamilyTag::Custom => None,
        }
    }
}

/// Finite vertex set with a dense distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricGraph {
    vertices: Vec<String>,
    dist: Array2<f64>,
    family: FamilyTag,
}

impl MetricGraph {
    /// Chain `0, 1, …, n-1` with `d(x, y) = |x - y|`.
    pub fn chain(n: usize) -> Result<Self> {
        check_size(n)?;
        let dist = Array2::from_shape_fn((n, n), |(i, j)| (i as f64 - j as f64).abs());
        Ok(Self {
            vertices: (0..n).map(|i| i.to_string()).collect(),
            dist,
            family: FamilyTag::Chain,
        })
    }

    /// `width × height` grid with the Manhattan metric. Site `(row, col)`
    /// has index `row * width + col`.
    pub fn grid(width: usize, height: usize) -> Result<Self> {
        let n = width * height;
        check_size(n)?;
        let coord = |i: usize| ((i / width) as f64, (i % width) as f64);
        let dist = Array2::from_shape_fn((n, n), |(i, j)| {
            let (a, b) = (coord(i), coord(j));
            (a.0 - b.0).abs() + (a.1 - b.1).abs()
        });
        Ok(Self {
            vertices: (0..n)
                .map(|i| format!("({},{})", i / width, i % width))
                .collect(),
            dist,
            family: FamilyTag::Grid { width, height },
        })
    }

    /// Arbitrary finite metric space. All metric axioms are checked,
    /// including the triangle inequality by exhaustive scan.
    pub fn custom(vertices: Vec<String>, dist: Array2<f64>) -> Result<Self> {
        let n = vertices.len();
        check_size(n)?;
        if dist.dim() != (n, n) {
            return Err(Error::InvalidMetric(format!(
                "distance matrix is {:?}, expected ({n}, {n})",
                dist.dim()
            )));
        }
        for i in 0..n {
            if dist[[i, i]] != 0.0 {
                return Err(Error::InvalidMetric(format!("d({i},{i}) = {} ≠ 0", dist[[i, i]])));
            }
            for j in 0..n {
                let d = dist[[i, j]];
                if !d.is_finite() {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) is not finite")));
                }
                if d != dist[[j, i]] {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) ≠ d({j},{i})")));
                }
                if i != j && d <= 0.0 {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) = {d} must be > 0")));
                }
            }
        }
        let graph = Self {
            vertices,
            dist,
            family: FamilyTag::Custom,
        };
        if let Some((x, y, z)) = graph.triangle_violation() {
            return Err(Error::InvalidMetric(format!(
                "triangle inequality fails for d({x},{z}) > d({x},{y}) + d({y},{z})"
            )));
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn family(&self) -> &FamilyTag {
        &self.family
    }

    pub fn distances(&self) -> &Array2<f64> {
        &self.dist
    }

    #[inline]
    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.dist[[x, y]]
    }

    /// First triple `(x, y, z)` with `d(x,z) > d(x,y) + d(y,z)`, if any.
    pub fn triangle_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.len();
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let lhs = self.dist[[x, z]];
                    let rhs = self.dist[[x, y]] + self.dist[[y, z]];
                    if lhs > rhs * (1.0 + 1e-12) {
                        return Some((x, y, z));
                    }
                }
            }
        }
        None
    }

    /// Subgraph on `sites` (in the given order) with the restricted metric.
    /// The family tag is kept: the result truncates the same lattice.
    pub fn induced(&self, sites: &[usize]) -> Result<Self> {
        if let Some(&bad) = sites.iter().find(|&&s| s >= self.len()) {
            return Err(Error::InvalidSupport(format!("site {bad} not in graph")));
        }
        let dist = Array2::from_shape_fn((sites.len(), sites.len()), |(i, j)| {
            self.dist[[sites[i], sites[j]]]
        });
        Ok(Self {
            vertices: sites.iter().map(|&s| self.vertices[s].clone()).collect(),
            dist,
            family: self.family.clone(),
        })
    }

    /// `d(X, Y) = min_{x∈X, y∈Y} d(x, y)`; infinite when either set is empty.
    pub fn set_distance(&self, xs: &[usize], ys: &[usize]) -> f64 {
        xs.iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| self.dist[[x, y]])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self, sites: &[usize]) -> f64 {
        sites
            .iter()
            .flat_map(|&x| sites.iter().map(move |&y| (x, y)))
            .map(|(x, y)| self.dist[[x, y]])
            .fold(0.0, f64::max)
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_VERTICES {
        return Err(Error::GraphTooLarge {
            got: n,
            cap: MAX_VERTICES,
        });
    }
    Ok(())
}

/// Positive, non-increasing base function `F`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecayBase {
    /// `F(r) = (1 + r)^(-alpha)`.
    PowerLaw { alpha: f64 },
    /// `F(r) = exp(-rate · r)`. Summable on `Zᵈ` but its convolution
    /// constant is unbounded there, so it only certifies custom graphs.
    Exponential { rate: f64 },
}

impl DecayBase {
    /// `(1 + r)^-(d+1)`, the default base on `Zᵈ`.
    pub fn default_for_dim(dim: usize) -> Self {
        DecayBase::PowerLaw {
            alpha: dim as f64 + 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DecayBase::PowerLaw { alpha } if !(alpha >= 0.0 && alpha.is_finite()) => Err(
                Error::InvalidDecay(format!("power-law exponent must be ≥ 0, got {alpha}")),
            ),
            DecayBase::Exponential { rate } if !(rate >= 0.0 && rate.is_finite()) => Err(
                Error::InvalidDecay(format!("exponential rate must be ≥ 0, got {rate}")),
            ),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            DecayBase::PowerLaw { alpha } => (1.0 + r).powf(-alpha),
            DecayBase::Exponential { rate } => (-rate * r).exp(),
        }
    }
}

/// Where a certified constant comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Supremum over a finite truncation; only a lower estimate of the
    /// lattice value.
    FiniteTruncation,
    /// Rigorous upper bound for the infinite lattice.
    AnalyticBound,
    /// The graph is the whole space, so the finite supremum is the value.
    Exact,
}

/// A summability constant: its finite-truncation estimate and the value
/// certificates are allowed to use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayConstant {
    pub estimate: f64,
    pub certified: f64,
    pub provenance: Provenance,
}

/// `sup_x Σ_y F(d(x, y))` over a finite graph.
pub fn f_norm_estimate(base: &DecayBase, graph: &MetricGraph) -> f64 {
    f_norm_with(graph, |r| base.eval(r))
}

fn f_norm_with(graph: &MetricGraph, f: impl Fn(f64) -> f64) -> f64 {
    let n = graph.len();
    (0..n)
        .map(|x| (0..n).map(|y| f(graph.dist(x, y))).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `sup_{x,y} Σ_z F(d(x,z)) F(d(y,z)) / F(d(x,y))` over a finite graph.
pub fn c_constant_estimate(base: &DecayBase, graph: &MetricGraph) -> f64 {
    c_constant_with(graph, |r| base.eval(r))
}

fn c_constant_with(graph: &MetricGraph, f: impl Fn(f64) -> f64) -> f64 {
    let n = graph.len();
    let table = Array2::from_shape_fn((n, n), |(i, j)| f(graph.dist(i, j)));
    let mut best: f64 = 0.0;
    for x in 0..n {
        for y in x..n {
            let s: f64 = (0..n).map(|z| table[[x, z]] * table[[y, z]]).sum();
            best = best.max(s / table[[x, y]]);
        }
    }
    best
}

/// Upper bound `2^α ‖F‖` for the convolution constant of a power law.
///
/// For `α ≥ 1` this follows from `1 + d(x,y) ≤ (1 + d(x,z)) + (1 + d(z,y))`
/// and convexity of `u ↦ u^α`; it holds on any metric space. For `α = 0`
/// it is exact. For `0 < α < 1` the valid bound is `2‖F‖`, which is
/// returned instead.
pub fn c_constant_analytic(base: &DecayBase, f_norm: f64) -> Result<f64> {
    match *base {
        DecayBase::PowerLaw { alpha } if alpha >= 1.0 || alpha == 0.0 => {
            Ok(2f64.powf(alpha) * f_norm)
        }
        DecayBase::PowerLaw { alpha } if alpha > 0.0 => Ok(2.0 * f_norm),
        DecayBase::PowerLaw { alpha } => Err(Error::InvalidDecay(format!(
            "power-law exponent must be ≥ 0, got {alpha}"
        ))),
        DecayBase::Exponential { .. } => Err(Error::InvalidDecay(
            "analytic convolution bound is only available for power-law bases".into(),
        )),
    }
}

/// Certified upper bound on `‖F‖` over the infinite lattice of `family`.
pub fn f_norm_analytic(base: &DecayBase, family: &FamilyTag) -> Result<f64> {
    let n = ANALYTIC_SHELLS;
    match (*base, family) {
        (DecayBase::PowerLaw { alpha }, FamilyTag::Chain) => {
            if alpha <= 1.0 {
                return Err(Error::InvalidDecay(format!(
                    "(1+r)^-{alpha} is not summable on Z (need α > 1)"
                )));
            }
            // Σ_{k∈Z} (1+|k|)^-α = 1 + 2 Σ_{m≥2} m^-α, tail ≤ ∫_N^∞ x^-α dx.
            let head: f64 = (2..=n).map(|m| (m as f64).powf(-alpha)).sum();
            let tail = (n as f64).powf(1.0 - alpha) / (alpha - 1.0);
            Ok(1.0 + 2.0 * (head + tail))
        }
        (DecayBase::PowerLaw { alpha }, FamilyTag::Grid { .. }) => {
            if alpha <= 2.0 {
                return Err(Error::InvalidDecay(format!(
                    "(1+r)^-{alpha} is not summable on Z² (need α > 2)"
                )));
            }
            // 4k sites at Manhattan distance k ≥ 1.
            let head: f64 = (2..=n)
                .map(|m| (m as f64 - 1.0) * (m as f64).powf(-alpha))
                .sum();
            let tail = (n as f64).powf(2.0 - alpha) / (alpha - 2.0);
            Ok(1.0 + 4.0 * (head + tail))
        }
        (DecayBase::Exponential { rate }, FamilyTag::Chain) if rate > 0.0 => {
            let q = (-rate).exp();
            Ok(1.0 + 2.0 * q / (1.0 - q))
        }
        (DecayBase::Exponential { rate }, FamilyTag::Grid { .. }) if rate > 0.0 => {
            let q = (-rate).exp();
            Ok(1.0 + 4.0 * q / ((1.0 - q) * (1.0 - q)))
        }
        (DecayBase::Exponential { .. }, FamilyTag::Chain | FamilyTag::Grid { .. }) => Err(
            Error::InvalidDecay("exponential base with zero rate is not summable".into()),
        ),
        (_, FamilyTag::Custom) => Err(Error::InvalidDecay(
            "custom graphs have no analytic family bound; use the exact finite value".into(),
        )),
    }
}

/// Number of lattice points at distance exactly `k` from a point, as an
/// upper bound usable for tail sums (`None` for custom graphs).
pub(crate) fn shell_count(family: &FamilyTag, k: usize) -> Option<f64> {
    match family {
        FamilyTag::Chain => Some(if k == 0 { 1.0 } else { 2.0 }),
        FamilyTag::Grid { .. } => Some(if k == 0 { 1.0 } else { 4.0 * k as f64 }),
        FamilyTag::Custom => None,
    }
}

/// `F`, the rate `μ`, `F_μ(r) = e^{-μr} F(r)`, and the constants `‖F‖`, `C`
/// and `C_μ` evaluated for a graph (and, for lattice families, bounded on the
/// full lattice).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFunction {
    base: DecayBase,
    mu: f64,
    family: FamilyTag,
    f_norm: DecayConstant,
    c_const: DecayConstant,
    c_mu: DecayConstant,
}

impl DecayFunction {
    /// Evaluate all constants for `graph`. For chain and grid families the
    /// certified values are analytic lattice bounds; for custom graphs the
    /// graph is the whole space and the finite values are exact.
    pub fn new(base: DecayBase, mu: f64, graph: &MetricGraph) -> Result<Self> {
        base.validate()?;
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidDecay(format!("μ must be ≥ 0, got {mu}")));
        }
        if graph.is_empty() {
            return Err(Error::InvalidDecay("empty graph".into()));
        }
        let f_est = f_norm_estimate(&base, graph);
        let c_est = c_constant_estimate(&base, graph);
        let c_mu_est = c_constant_with(graph, |r| (-mu * r).exp() * base.eval(r));
        let family = graph.family().clone();
        let (f_norm, c_const, c_mu) = match family {
            FamilyTag::Custom => (
                DecayConstant {
                    estimate: f_est,
                    certified: f_est,
                    provenance: Provenance::Exact,
                },
                DecayConstant {
                    estimate: c_est,
                    certified: c_est,
                    provenance: Provenance::Exact,
                },
                DecayConstant {
                    estimate: c_mu_est,
                    certified: c_mu_est,
                    provenance: Provenance::Exact,
                },
            ),
            _ => {
                let f_up = f_norm_analytic(&base, &family)?;
                let c_up = c_constant_analytic(&base, f_up)?;
                let analytic = |estimate, certified| DecayConstant {
                    estimate,
                    certified,
                    provenance: Provenance::AnalyticBound,
                };
                // C_μ ≤ C because e^{-μ(d(x,z)+d(z,y)-d(x,y))} ≤ 1.
                (analytic(f_est, f_up), analytic(c_est, c_up), analytic(c_mu_est, c_up))
            }
        };
        Ok(Self {
            base,
            mu,
            family,
            f_norm,
            c_const,
            c_mu,
        })
    }

    /// Same base and graph constants with a different rate.
    pub fn with_mu(&self, mu: f64, graph: &MetricGraph) -> Result<Self> {
        Self::new(self.base, mu, graph)
    }

    pub fn base(&self) -> &DecayBase {
        &self.base
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn family(&self) -> &FamilyTag {
        &self.family
    }

    pub fn f_norm(&self) -> &DecayConstant {
        &self.f_norm
    }

    pub fn c_const(&self) -> &DecayConstant {
        &self.c_const
    }

    pub fn c_mu(&self) -> &DecayConstant {
        &self.c_mu
    }

    #[inline]
    pub fn f(&self, r: f64) -> f64 {
        self.base.eval(r)
    }

    /// `F_μ(r) = e^{-μ r} F(r)`.
    pub fn f_mu(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::NegativeDistance(r));
        }
        Ok(self.f_mu_unchecked(r))
    }

    #[inline]
    pub(crate) fn f_mu_unchecked(&self, r: f64) -> f64 {
        (-self.mu * r).exp() * self.base.eval(r)
    }

    /// Certified upper bound on `Σ_{z : d(x,z) ≥ k_min} F_μ(d(x,z))` over the
    /// whole lattice, used for thermodynamic-limit tails.
    pub fn lattice_tail(&self, k_min: usize) -> Option<f64> {
        let n = ANALYTIC_SHELLS.max(k_min + 1);
        let mut sum = 0.0;
        for k in k_min..=n {
            sum += shell_count(&self.family, k)? * self.f_mu_unchecked(k as f64);
        }
        // Remainder beyond n. F is nonincreasing, so F(k) ≤ F(n+1) there and
        // the exponential factor leaves a geometric series.
        let k = (n + 1) as f64;
        let geometric = match self.base {
            DecayBase::Exponential { rate } => Some(((-(self.mu + rate)).exp(), 1.0)),
            DecayBase::PowerLaw { .. } if self.mu > 0.0 => {
                Some(((-self.mu).exp(), self.base.eval(k)))
            }
            DecayBase::PowerLaw { .. } => None,
        };
        let rest = if let Some((q, f_next)) = geometric {
            match self.family {
                FamilyTag::Chain => 2.0 * f_next * q.powf(k) / (1.0 - q),
                FamilyTag::Grid { .. } => {
                    // Σ_{j≥k} j q^j = q^k (k/(1-q) + q/(1-q)²)
                    4.0 * f_next * q.powf(k) * (k / (1.0 - q) + q / ((1.0 - q) * (1.0 - q)))
                }
                FamilyTag::Custom => return None,
            }
        } else {
            match (self.base, &self.family) {
                (DecayBase::PowerLaw { alpha }, FamilyTag::Chain) if alpha > 1.0 => {
                    2.0 * k.powf(1.0 - alpha) / (alpha - 1.0)
                }
                (DecayBase::PowerLaw { alpha }, FamilyTag::Grid { .. }) if alpha > 2.0 => {
                    4.0 * k.powf(2.0 - alpha) / (alpha - 2.0)
                }
                _ => return None,
            }
        };
        Some(sum + rest)
    }
}

/// Finite subsets `Z` of a graph used to enumerate interaction supports.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetFamily {
    pub subsets: Vec<Vec<usize>>,
}

impl SubsetFamily {
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }
}

/// All subsets with at most `k_max` sites and diameter at most `r_max`,
/// ordered by size and then lexicographically by sorted site index.
pub fn enumerate_subsets(
    graph: &MetricGraph,
    r_max: f64,
    k_max: usize,
    cap: usize,
) -> Result<SubsetFamily> {
    if !(r_max >= 0.0) {
        return Err(Error::InvalidSupport(format!("R_max must be ≥ 0, got {r_max}")));
    }
    if k_max == 0 {
        return Err(Error::InvalidSupport("k_max must be ≥ 1".into()));
    }
    let n = graph.len();
    let mut out = Vec::new();
    for size in 1..=k_max.min(n) {
        let mut current = Vec::with_capacity(size);
        extend_subsets(graph, r_max, size, 0, &mut current, &mut out, cap)?;
    }
    Ok(SubsetFamily { subsets: out })
}

fn extend_subsets(
    graph: &MetricGraph,
    r_max: f64,
    size: usize,
    start: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    cap: usize,
) -> Result<()> {
    if current.len() == size {
        if out.len() >= cap {
            return Err(Error::TooManySubsets { cap });
        }
        out.push(current.clone());
        return Ok(());
    }
    for next in start..graph.len() {
        if current.iter().all(|&s| graph.dist(s, next) <= r_max) {
            current.push(next);
            extend_subsets(graph, r_max, size, next + 1, current, out, cap)?;
            current.pop();
        }
    }
    Ok(())
}
