//! Time-dependent Lindblad generators `𝓛_Λ(t) = Σ_Z Ψ_Z(t)` in the
//! Heisenberg picture, their certificate norms and hypothesis checks.
//!
//! Each term carries matrices `Φ₀`, `L₀` and a scalar profile `f(t)` with
//! `Φ(t) = f(t)Φ₀` and `L_a(t) = f(t)L₀_a`, so the dissipative part scales
//! with `f²`.

use std::fmt;
use std::sync::Arc;

use ndarray::linalg::kron;
use ndarray_linalg::{EigValsh, UPLO};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{self, dagger, op_norm, LocalIndexer, Volume};
use crate::lattice::DecayFunction;
use crate::{Error, Mat, Result, C64};

/// Hermiticity tolerance for `Φ`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default number of uniform samples for time suprema without an envelope.
pub const DEFAULT_TIME_SAMPLES: usize = 101;

/// Scalar time dependence of one interaction term.
#[derive(Clone)]
pub enum TimeProfile {
    Constant,
    /// `offset + amplitude·sin(ω t + phase)`.
    Sinusoidal {
        offset: f64,
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    /// Linear interpolation through `(t, value)` knots, held constant
    /// outside them.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// Arbitrary function; suprema over time are sampled.
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeProfile::Constant => write!(f, "Constant"),
            TimeProfile::Sinusoidal {
                offset,
                amplitude,
                omega,
                phase,
            } => write!(f, "Sinusoidal({offset} + {amplitude}·sin({omega}t + {phase}))"),
            TimeProfile::PiecewiseLinear { knots } => write!(f, "PiecewiseLinear({knots:?})"),
            TimeProfile::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl PartialEq for TimeProfile {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (TimeProfile::Constant, TimeProfile::Constant) => true,
            (
                TimeProfile::Sinusoidal {
                    offset: a,
                    amplitude: b,
                    omega: c,
                    phase: d,
                },
                TimeProfile::Sinusoidal {
                    offset: e,
                    amplitude: f,
                    omega: g,
                    phase: h,
                },
            ) => (a, b, c, d) == (e, f, g, h),
            (
                TimeProfile::PiecewiseLinear { knots: a },
                TimeProfile::PiecewiseLinear { knots: b },
            ) => a == b,
            (TimeProfile::Custom { f: a, .. }, TimeProfile::Custom { f: b, .. }) => {
                Arc::ptr_eq(a, b)
            }
            _ => false,
        }
    }
}

impl TimeProfile {
    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidParameter {
                name: "knots".into(),
                reason: "at least one knot is required".into(),
            });
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0)
            || knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite())
        {
            return Err(Error::InvalidParameter {
                name: "knots".into(),
                reason: "knot times must be finite and strictly increasing".into(),
            });
        }
        Ok(TimeProfile::PiecewiseLinear { knots })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Sinusoidal {
                offset,
                amplitude,
                omega,
                phase,
            } => offset + amplitude * (omega * t + phase).sin(),
            TimeProfile::PiecewiseLinear { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let i = knots.partition_point(|k| k.0 <= t);
                let (t0, v0) = knots[i - 1];
                let (t1, v1) = knots[i];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
            TimeProfile::Custom { f, .. } => f(t),
        }
    }

    /// `sup_t |f(t)|` when known in closed form.
    pub fn envelope(&self) -> Option<f64> {
        match self {
            TimeProfile::Constant => Some(1.0),
            TimeProfile::Sinusoidal {
                offset, amplitude, ..
            } => Some(offset.abs() + amplitude.abs()),
            TimeProfile::PiecewiseLinear { knots } => {
                Some(knots.iter().map(|k| k.1.abs()).fold(0.0, f64::max))
            }
            TimeProfile::Custom { .. } => None,
        }
    }

    /// Lipschitz constant of `f` when known in closed form.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            TimeProfile::Constant => Some(0.0),
            TimeProfile::Sinusoidal {
                amplitude, omega, ..
            } => Some(amplitude.abs() * omega.abs()),
            TimeProfile::PiecewiseLinear { knots } => Some(
                knots
                    .windows(2)
                    .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                    .fold(0.0, f64::max),
            ),
            TimeProfile::Custom { .. } => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            TimeProfile::Constant => true,
            TimeProfile::Sinusoidal {
                amplitude, omega, ..
            } => *amplitude == 0.0 || *omega == 0.0,
            TimeProfile::PiecewiseLinear { knots } => knots.iter().all(|k| k.1 == knots[0].1),
            TimeProfile::Custom { .. } => false,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            TimeProfile::Constant => "constant",
            TimeProfile::Sinusoidal { .. } => "sinusoidal",
            TimeProfile::PiecewiseLinear { .. } => "piecewise-linear",
            TimeProfile::Custom { name, .. } => name,
        }
    }
}

/// One summand `Ψ_Z(t)` of the generator.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionTerm {
    pub support: Vec<usize>,
    pub phi: Mat,
    pub lindblads: Vec<Mat>,
    pub profile: TimeProfile,
    pub label: String,
    phi_norm: f64,
    lindblad_norm_sq: f64,
}

impl InteractionTerm {
    /// Checks shapes and Hermiticity of `Φ`. The support is validated
    /// against a volume when the term is added to a [`GeneratorSpec`].
    pub fn new(
        support: Vec<usize>,
        phi: Mat,
        lindblads: Vec<Mat>,
        profile: TimeProfile,
        label: impl Into<String>,
    ) -> Result<Self> {
        let term = Self::unchecked(support, phi, lindblads, profile, label)?;
        let defect = op_norm(&(&term.phi - &dagger(&term.phi)));
        if !(defect <= HERMITIAN_TOL) {
            return Err(Error::NonHermitian { index: 0, defect });
        }
        Ok(term)
    }

    /// Like [`InteractionTerm::new`] but accepts a non-Hermitian `Φ`; only
    /// useful as a negative control for [`check_hypotheses`].
    pub fn unchecked(
        support: Vec<usize>,
        phi: Mat,
        lindblads: Vec<Mat>,
        profile: TimeProfile,
        label: impl Into<String>,
    ) -> Result<Self> {
        if support.is_empty() || support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSupport(format!(
                "term support {support:?} must be nonempty and strictly increasing"
            )));
        }
        let k = phi.nrows();
        if !phi.is_square() || lindblads.iter().any(|l| l.dim() != (k, k)) {
            return Err(Error::DimensionMismatch(
                "Φ and every L_a must be square of the same dimension".into(),
            ));
        }
        let phi_norm = op_norm(&phi);
        let lindblad_norm_sq = lindblads.iter().map(|l| op_norm(l).powi(2)).sum();
        Ok(Self {
            support,
            phi,
            lindblads,
            profile,
            label: label.into(),
            phi_norm,
            lindblad_norm_sq,
        })
    }

    pub fn phi_at(&self, t: f64) -> Mat {
        let f = self.profile.eval(t);
        self.phi.mapv(|z| z * f)
    }

    pub fn lindblads_at(&self, t: f64) -> Vec<Mat> {
        let f = self.profile.eval(t);
        self.lindblads.iter().map(|l| l.mapv(|z| z * f)).collect()
    }

    /// `2‖Φ(t)‖ + 2Σ_a‖L_a(t)‖²`, the upper bound used for `‖Ψ_Z(t)‖_cb`.
    pub fn cb_norm_bound(&self, t: f64) -> f64 {
        let f = self.profile.eval(t).abs();
        2.0 * f * self.phi_norm + 2.0 * f * f * self.lindblad_norm_sq
    }

    /// `sup_t` of [`InteractionTerm::cb_norm_bound`] when the profile has an
    /// envelope.
    pub fn cb_norm_envelope(&self) -> Option<f64> {
        let e = self.profile.envelope()?;
        Some(2.0 * e * self.phi_norm + 2.0 * e * e * self.lindblad_norm_sq)
    }

    /// Lipschitz constant of `t ↦ Ψ_Z(t)` in cb-norm, bounded through
    /// `|f₁ − f₂|` and `|f₁² − f₂²| ≤ 2·env·|f₁ − f₂|`.
    pub fn cb_lipschitz(&self) -> Option<f64> {
        let lip = self.profile.lipschitz()?;
        let env = self.profile.envelope()?;
        Some(lip * (2.0 * self.phi_norm + 4.0 * env * self.lindblad_norm_sq))
    }

    /// `sup` over `t₁, t₂` in `[a, b]` of the cb-norm bound of
    /// `Ψ_Z(t₁) − Ψ_Z(t₂)` computed from sampled profile values.
    fn cb_difference(&self, f1: f64, f2: f64) -> f64 {
        2.0 * (f1 - f2).abs() * self.phi_norm
            + 2.0 * (f1 * f1 - f2 * f2).abs() * self.lindblad_norm_sq
    }

    /// Left and right multipliers `iΦ − ½ΣL*L` and `−iΦ − ½ΣL*L` at profile
    /// value `f`, so that `i[Φ,A] − ½{ΣL*L, A} = G_l·A + A·G_r`. For
    /// Hermitian `Φ` the second is the adjoint of the first.
    fn local_g(&self, f: f64) -> (Mat, Mat) {
        let i = C64::new(0.0, 1.0);
        let k = self.local_dim();
        let mut damp = Mat::zeros((k, k));
        for l in &self.lindblads {
            damp = damp - dagger(l).dot(l).mapv(|z| z * 0.5 * f * f);
        }
        let h = self.phi.mapv(|z| z * i * f);
        (&damp + &h, &damp - &h)
    }

    fn local_dim(&self) -> usize {
        self.phi.nrows()
    }
}

/// `i[Φ(t),A] + Σ_a (L_a* A L_a − ½{L_a*L_a, A})` on `𝓗_Z`.
pub fn psi_z(term: &InteractionTerm, t: f64, a: &Mat) -> Result<Mat> {
    let k = term.local_dim();
    if a.dim() != (k, k) {
        return Err(Error::DimensionMismatch(format!(
            "observable is {:?}, term acts on dimension {k}",
            a.dim()
        )));
    }
    let i = C64::new(0.0, 1.0);
    let phi = term.phi_at(t);
    let mut out = algebra::commutator(&phi, a)?.mapv(|z| z * i);
    for l in term.lindblads_at(t) {
        let ld = dagger(&l);
        let ll = ld.dot(&l);
        out = out + ld.dot(a).dot(&l) - algebra::anticommutator(&ll, a)?.mapv(|z| z * 0.5);
    }
    Ok(out)
}

/// Options for [`GeneratorSpec::psi_interaction_norm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiNormOptions {
    /// Uniform samples on `[0, t_max]` for terms without an envelope.
    pub samples: usize,
    /// Leave single-site terms out of the sum.
    pub exclude_single_site: bool,
}

impl Default for PsiNormOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_TIME_SAMPLES,
            exclude_single_site: false,
        }
    }
}

/// Value of `‖Ψ‖_{t,μ}` and whether it is a rigorous upper bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiNorm {
    pub value: f64,
    /// False if any term's time supremum was sampled.
    pub rigorous: bool,
}

/// The family `{Φ(t,Z), L_a(t,Z)}` on a volume, plus the decay function used
/// for certificates.
#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    volume: Volume,
    terms: Vec<InteractionTerm>,
    decay: Option<DecayFunction>,
    indexers: Vec<LocalIndexer>,
}

/// Superoperator matrix of `𝓛(t)` under column-stacking vectorisation.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    pub time: f64,
    pub matrix: Mat,
}

impl GeneratorSpec {
    pub fn new(volume: Volume, terms: Vec<InteractionTerm>) -> Result<Self> {
        let mut indexers = Vec::with_capacity(terms.len());
        for (index, term) in terms.iter().enumerate() {
            let idx = volume.indexer(&term.support)?;
            if idx.local_dim() != term.local_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "term {index} ({}) has dimension {} but its support needs {}",
                    term.label,
                    term.local_dim(),
                    idx.local_dim()
                )));
            }
            indexers.push(idx);
        }
        Ok(Self {
            volume,
            terms,
            decay: None,
            indexers,
        })
    }

    pub fn with_decay(mut self, decay: DecayFunction) -> Self {
        self.decay = Some(decay);
        self
    }

    pub fn volume(&self) -> &Volume {
        &self.volume
    }

    pub fn terms(&self) -> &[InteractionTerm] {
        &self.terms
    }

    pub fn decay(&self) -> Option<&DecayFunction> {
        self.decay.as_ref()
    }

    pub fn mu(&self) -> Option<f64> {
        self.decay.as_ref().map(|d| d.mu())
    }

    pub fn dim(&self) -> usize {
        self.volume.total_dim()
    }

    /// True if every term's profile is constant in time.
    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|t| t.profile.is_constant())
    }

    /// True if every profile has a closed-form envelope and Lipschitz
    /// constant.
    pub fn has_exact_envelopes(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.profile.envelope().is_some() && t.profile.lipschitz().is_some())
    }

    /// Terms whose support lies inside `sites`, re-indexed to positions in
    /// `sites` and placed on `volume` (which must have `sites.len()` sites).
    pub fn restrict(&self, sites: &[usize], volume: Volume) -> Result<Self> {
        if volume.n_sites() != sites.len() {
            return Err(Error::DimensionMismatch(
                "restricted volume must have one site per kept site".into(),
            ));
        }
        let mut terms = Vec::new();
        for term in &self.terms {
            let mapped: Option<Vec<usize>> = term
                .support
                .iter()
                .map(|x| sites.iter().position(|s| s == x))
                .collect();
            if let Some(support) = mapped {
                if support.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidSupport(
                        "restriction must preserve site order".into(),
                    ));
                }
                let mut t = term.clone();
                t.support = support;
                terms.push(t);
            }
        }
        let spec = Self::new(volume, terms)?;
        Ok(match &self.decay {
            Some(d) => spec.with_decay(d.clone()),
            None => spec,
        })
    }

    /// `𝓛(t)A` for a full observable `A`, without forming superoperators.
    pub fn apply(&self, t: f64, a: &Mat) -> Result<Mat> {
        let d = self.dim();
        if a.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "observable is {:?}, volume dimension is {d}",
                a.dim()
            )));
        }
        Ok(self.apply_unchecked(t, a))
    }

    pub(crate) fn apply_unchecked(&self, t: f64, a: &Mat) -> Mat {
        let d = self.dim();
        let mut out = Mat::zeros((d, d));
        for (term, idx) in self.terms.iter().zip(&self.indexers) {
            let f = term.profile.eval(t);
            if f == 0.0 {
                continue;
            }
            let (gl, gr) = term.local_g(f);
            let one = C64::new(1.0, 0.0);
            idx.left_mul_add(&gl, a, one, &mut out);
            idx.right_mul_add(a, &gr, one, &mut out);
            let f2 = C64::new(f * f, 0.0);
            for l in &term.lindblads {
                idx.left_mul_add(&dagger(l), &idx.right_mul(a, l), f2, &mut out);
            }
        }
        out
    }

    /// Full superoperator matrix of `𝓛(t)`, of side `dim²`.
    pub fn assemble(&self, t: f64) -> Result<GeneratorMatrix> {
        self.volume.require_superop()?;
        Ok(GeneratorMatrix {
            time: t,
            matrix: self.assemble_unchecked(t),
        })
    }

    pub(crate) fn assemble_unchecked(&self, t: f64) -> Mat {
        let d = self.dim();
        let id = self.volume.identity();
        let mut gl = Mat::zeros((d, d));
        let mut gr = Mat::zeros((d, d));
        let mut s = Mat::zeros((d * d, d * d));
        for (term, idx) in self.terms.iter().zip(&self.indexers) {
            let f = term.profile.eval(t);
            if f == 0.0 {
                continue;
            }
            let (l, r) = term.local_g(f);
            gl += &idx.embed(&l);
            gr += &idx.embed(&r);
            for l in &term.lindblads {
                let full = idx.embed(&l.mapv(|z| z * f));
                // L*·A·L ↦ Lᵀ ⊗ L*
                s += &kron(&full.t().to_owned(), &dagger(&full));
            }
        }
        // G_l·A + A·G_r ↦ 𝟙 ⊗ G_l + G_rᵀ ⊗ 𝟙
        s += &kron(&id, &gl);
        s += &kron(&gr.t().to_owned(), &id);
        s
    }

    /// `Σ_Z cb_norm_bound(Z, t)`, an upper bound on `‖𝓛(t)‖`.
    pub fn cb_sum(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.cb_norm_bound(t)).sum()
    }

    /// `sup_{s∈[0,t_max]} sup_{x,y} Σ_{Z∋x,y} ‖Ψ_Z(s)‖_cb / F_μ(d(x,y))`.
    ///
    /// Terms whose profile has an envelope contribute their envelope, which
    /// bounds the supremum over time from above. Other terms are sampled on
    /// a uniform grid and the result is flagged non-rigorous.
    pub fn psi_interaction_norm(&self, t_max: f64, opts: PsiNormOptions) -> Result<PsiNorm> {
        let decay = self.decay.as_ref().ok_or(Error::MuUnset)?;
        if !(t_max >= 0.0) {
            return Err(Error::InvalidTime(format!("t_max = {t_max}")));
        }
        let terms: Vec<&InteractionTerm> = self
            .terms
            .iter()
            .filter(|t| !(opts.exclude_single_site && t.support.len() == 1))
            .collect();
        let rigorous = terms.iter().all(|t| t.profile.envelope().is_some());
        let times: Vec<f64> = if rigorous {
            vec![0.0]
        } else {
            time_grid(0.0, t_max, opts.samples.max(2))
        };
        let n = self.volume.n_sites();
        let graph = self.volume.graph();
        let mut best: f64 = 0.0;
        for &s in &times {
            let mut acc = vec![0.0; n * n];
            for term in &terms {
                let b = term
                    .cb_norm_envelope()
                    .unwrap_or_else(|| term.cb_norm_bound(s));
                for &x in &term.support {
                    for &y in &term.support {
                        acc[x * n + y] += b;
                    }
                }
            }
            for x in 0..n {
                for y in 0..n {
                    let v = acc[x * n + y];
                    if v > 0.0 {
                        best = best.max(v / decay.f_mu_unchecked(graph.dist(x, y)));
                    }
                }
            }
        }
        Ok(PsiNorm {
            value: best,
            rigorous,
        })
    }

    /// `M_t = ‖Ψ‖_{t,μ}·|Λ|·‖F‖` with the certified `‖F‖`.
    pub fn m_t(&self, t: f64, opts: PsiNormOptions) -> Result<PsiNorm> {
        let decay = self.decay.as_ref().ok_or(Error::MuUnset)?;
        let psi = self.psi_interaction_norm(t, opts)?;
        Ok(PsiNorm {
            value: psi.value * self.volume.n_sites() as f64 * decay.f_norm().certified,
            rigorous: psi.rigorous,
        })
    }

    /// Upper bound on `sup ‖𝓛(t₁) − 𝓛(t₂)‖` over `t₁, t₂ ∈ [a, b]`.
    ///
    /// Exact (in the sense of a valid bound) when every profile declares a
    /// Lipschitz constant; otherwise estimated from `samples` points and the
    /// second value is false.
    pub fn continuity_modulus(&self, a: f64, b: f64, samples: usize) -> (f64, bool) {
        if self.has_exact_envelopes() {
            let lip: f64 = self.terms.iter().filter_map(|t| t.cb_lipschitz()).sum();
            return (lip * (b - a).abs(), true);
        }
        let grid = time_grid(a, b, samples.max(2));
        let mut total = 0.0;
        for term in &self.terms {
            let vals: Vec<f64> = grid.iter().map(|&t| term.profile.eval(t)).collect();
            let mut worst: f64 = 0.0;
            for &f1 in &vals {
                for &f2 in &vals {
                    worst = worst.max(term.cb_difference(f1, f2));
                }
            }
            total += worst;
        }
        (total, false)
    }
}

/// `samples` uniformly spaced points covering `[a, b]`.
pub fn time_grid(a: f64, b: f64, samples: usize) -> Vec<f64> {
    if samples <= 1 {
        return vec![a];
    }
    (0..samples)
        .map(|k| a + (b - a) * k as f64 / (samples - 1) as f64)
        .collect()
}

/// Result of [`dissipativity_defect`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dissipativity {
    /// Minimum eigenvalue of `𝓛(A*A) − 𝓛(A*)A − A*𝓛(A)`.
    pub min_eigenvalue: f64,
    /// Minimum eigenvalue of `Σ_Z Σ_a [A, L_a]*[A, L_a]`.
    pub identity_min_eigenvalue: f64,
    /// Operator-norm distance between the two operators.
    pub identity_defect: f64,
}

fn hermitian_min_eig(m: &Mat) -> Result<f64> {
    let h = (m + &dagger(m)).mapv(|z| z * 0.5);
    let ev = h.eigvalsh(UPLO::Lower)?;
    Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Complete dissipativity of `𝓛(t)` probed at `A`.
pub fn dissipativity_defect(spec: &GeneratorSpec, t: f64, a: &Mat) -> Result<Dissipativity> {
    let ad = dagger(a);
    let lhs = spec.apply(t, &ad.dot(a))? - spec.apply(t, &ad)?.dot(a) - ad.dot(&spec.apply(t, a)?);
    let d = spec.dim();
    let mut rhs = Mat::zeros((d, d));
    for (term, idx) in spec.terms.iter().zip(&spec.indexers) {
        for l in term.lindblads_at(t) {
            let full = idx.embed(&l);
            let c = algebra::commutator(a, &full)?;
            rhs += &dagger(&c).dot(&c);
        }
    }
    Ok(Dissipativity {
        min_eigenvalue: hermitian_min_eig(&lhs)?,
        identity_min_eigenvalue: hermitian_min_eig(&rhs)?,
        identity_defect: op_norm(&(&lhs - &rhs)),
    })
}

/// Options for [`check_hypotheses`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypothesisOptions {
    /// Random observables per grid time.
    pub probes: usize,
    pub seed: u64,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        Self { probes: 4, seed: 0 }
    }
}

/// Outcome of [`check_hypotheses`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypothesisReport {
    /// `max_t ‖𝓛(t)(𝟙)‖`.
    pub unit_defect: f64,
    /// `max ‖𝓛(t)(A*) − 𝓛(t)(A)*‖` over probes.
    pub hermiticity_defect: f64,
    /// Smallest eigenvalue seen in [`dissipativity_defect`].
    pub min_dissipativity: f64,
    /// Largest distance from the commutator-sum identity.
    pub dissipativity_identity_defect: f64,
    /// `max ‖𝓛(t+δ) − 𝓛(t)‖` over consecutive grid points.
    pub continuity_modulus: f64,
    /// Whether the continuity modulus was computed exactly (superoperator
    /// norms) rather than bounded through cb-norm differences.
    pub continuity_exact: bool,
}

impl HypothesisReport {
    /// All defects within `tol` (the continuity modulus is not a defect).
    pub fn passes(&self, tol: f64) -> bool {
        self.unit_defect <= tol
            && self.hermiticity_defect <= tol
            && self.min_dissipativity >= -tol
            && self.dissipativity_identity_defect <= tol
    }
}

/// Evaluate unitality, Hermiticity preservation, complete dissipativity and
/// norm continuity of `𝓛` on a time grid.
pub fn check_hypotheses(
    spec: &GeneratorSpec,
    t_grid: &[f64],
    opts: HypothesisOptions,
) -> Result<HypothesisReport> {
    let d = spec.dim();
    let id = spec.volume.identity();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = HypothesisReport {
        unit_defect: 0.0,
        hermiticity_defect: 0.0,
        min_dissipativity: f64::INFINITY,
        dissipativity_identity_defect: 0.0,
        continuity_modulus: 0.0,
        continuity_exact: spec.volume.superop_allowed(),
    };
    for &t in t_grid {
        report.unit_defect = report.unit_defect.max(op_norm(&spec.apply(t, &id)?));
        for _ in 0..opts.probes {
            let a = algebra::random_matrix(&mut rng, d);
            let herm = spec.apply(t, &dagger(&a))? - dagger(&spec.apply(t, &a)?);
            report.hermiticity_defect = report.hermiticity_defect.max(op_norm(&herm));
            let diss = dissipativity_defect(spec, t, &a)?;
            report.min_dissipativity = report.min_dissipativity.min(diss.min_eigenvalue);
            report.dissipativity_identity_defect =
                report.dissipativity_identity_defect.max(diss.identity_defect);
        }
    }
    if t_grid.is_empty() {
        report.min_dissipativity = 0.0;
    }
    for w in t_grid.windows(2) {
        let eps = if report.continuity_exact {
            op_norm(&(spec.assemble_unchecked(w[1]) - spec.assemble_unchecked(w[0])))
        } else {
            spec.terms
                .iter()
                .map(|term| term.cb_difference(term.profile.eval(w[1]), term.profile.eval(w[0])))
                .sum()
        };
        report.continuity_modulus = report.continuity_modulus.max(eps);
    }
    Ok(report)
}
