//! Propagators `γ_{t,s}` of `dA/dt = 𝓛(t)A`, the Euler product, and checks
//! of their structural properties.
//!
//! The cocycle composes as `γ_{t,r} = γ_{t,s}∘γ_{s,r}`, so the superoperator
//! matrix solves `S' = 𝓛(t)·S` with `S(s) = 𝟙`.

mod rk;

pub use rk::{integrate, RkOptions, RkStats};

use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{self, apply_superop, dagger, embed, op_norm, LocalOperator};
use crate::generator::{GeneratorSpec, PsiNormOptions};
use crate::{Error, Mat, Result, C64};

/// Default integrator tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Tolerance on the smallest Choi eigenvalue for complete positivity.
pub const CHOI_TOL: f64 = 1e-8;

/// Samples per Euler subinterval when the continuity modulus is estimated.
pub const EPS_SAMPLES: usize = 8;

fn check_interval(s: f64, t: f64) -> Result<()> {
    if !(s.is_finite() && t.is_finite() && s <= t) {
        return Err(Error::InvalidTime(format!("need s ≤ t, got s = {s}, t = {t}")));
    }
    Ok(())
}

/// Solve `dA/dt = 𝓛(t)A` from `A(s) = a` and return `A(t)` for every time
/// in `times` (nondecreasing, all `≥ s`).
pub fn evolve_full_at(
    spec: &GeneratorSpec,
    a: &Mat,
    s: f64,
    times: &[f64],
    opts: RkOptions,
) -> Result<(Vec<Mat>, RkStats)> {
    let d = spec.dim();
    if a.dim() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "observable is {:?}, volume dimension is {d}",
            a.dim()
        )));
    }
    integrate(|t, y| spec.apply_unchecked(t, y), a.clone(), s, times, opts)
}

/// `γ_{t,s}(a)` for a full observable.
pub fn evolve_full(spec: &GeneratorSpec, a: &Mat, s: f64, t: f64, tol: f64) -> Result<Mat> {
    check_interval(s, t)?;
    let (mut ys, _) = evolve_full_at(spec, a, s, &[t], RkOptions::with_tol(tol))?;
    Ok(ys.pop().expect("one output"))
}

/// `γ_{t,s}(A ⊗ 𝟙)` for a local observable.
pub fn evolve(spec: &GeneratorSpec, a: &LocalOperator, s: f64, t: f64, tol: f64) -> Result<Mat> {
    let full = embed(a, spec.volume())?;
    evolve_full(spec, &full, s, t, tol)
}

/// The map `γ_{t,s}`, as a superoperator matrix when the volume is small
/// enough and as an evolve-action otherwise.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub s: f64,
    pub t: f64,
    pub tol: f64,
    matrix: Option<Mat>,
    spec: GeneratorSpec,
    pub stats: RkStats,
}

impl Propagator {
    pub fn matrix(&self) -> Result<&Mat> {
        self.matrix.as_ref().ok_or(Error::MatrixFree)
    }

    pub fn is_matrix_free(&self) -> bool {
        self.matrix.is_none()
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    /// `γ_{t,s}(a)` for a full observable.
    pub fn apply(&self, a: &Mat) -> Result<Mat> {
        match &self.matrix {
            Some(m) => {
                let d = self.spec.dim();
                if a.dim() != (d, d) {
                    return Err(Error::DimensionMismatch(format!(
                        "observable is {:?}, volume dimension is {d}",
                        a.dim()
                    )));
                }
                Ok(apply_superop(m, a))
            }
            None => evolve_full(&self.spec, a, self.s, self.t, self.tol),
        }
    }

    /// `‖γ(𝟙) − 𝟙‖`.
    pub fn unitality_defect(&self) -> Result<f64> {
        let id = self.spec.volume().identity();
        Ok(op_norm(&(self.apply(&id)? - &id)))
    }

    /// `max(‖γ(A)‖ − ‖A‖, 0)` over `probes` random `A` of unit norm.
    pub fn contraction_violation(&self, probes: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.spec.dim();
        let mut worst: f64 = 0.0;
        for _ in 0..probes {
            let a = algebra::random_unit_matrix(&mut rng, d);
            worst = worst.max(op_norm(&self.apply(&a)?) - 1.0);
        }
        Ok(worst)
    }
}

/// Build `γ_{t,s}`. Within the volume's superoperator cap this integrates
/// `S' = 𝓛(t)S`; above it a matrix-free propagator is returned.
pub fn propagator_matrix(spec: &GeneratorSpec, s: f64, t: f64, tol: f64) -> Result<Propagator> {
    check_interval(s, t)?;
    let opts = RkOptions::with_tol(tol);
    if !spec.volume().superop_allowed() {
        return Ok(Propagator {
            s,
            t,
            tol,
            matrix: None,
            spec: spec.clone(),
            stats: RkStats::default(),
        });
    }
    let d = spec.dim();
    let id: Mat = Array2::eye(d * d);
    let (mut ys, stats) = if spec.is_time_independent() {
        let g = spec.assemble_unchecked(s);
        integrate(|_, y| g.dot(y), id, s, &[t], opts)?
    } else {
        integrate(|u, y| spec.assemble_unchecked(u).dot(y), id, s, &[t], opts)?
    };
    Ok(Propagator {
        s,
        t,
        tol,
        matrix: ys.pop(),
        spec: spec.clone(),
        stats,
    })
}

/// `Π_{k=n..1}(id + (t/n)𝓛(kt/n))` with the `k = 1` factor rightmost.
pub fn euler_product(spec: &GeneratorSpec, n: usize, t: f64) -> Result<Mat> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n".into(),
            reason: "the Euler product needs n ≥ 1".into(),
        });
    }
    spec.volume().require_superop()?;
    let d2 = spec.dim() * spec.dim();
    let h = t / n as f64;
    let factor = |k: usize| -> Mat {
        let mut m = spec.assemble_unchecked(k as f64 * h).mapv(|z| z * h);
        for i in 0..d2 {
            m[[i, i]] += C64::new(1.0, 0.0);
        }
        m
    };
    if spec.is_time_independent() {
        return Ok(matrix_power(&factor(1), n));
    }
    let mut out = factor(1);
    for k in 2..=n {
        out = factor(k).dot(&out);
    }
    Ok(out)
}

fn matrix_power(m: &Mat, mut n: usize) -> Mat {
    let mut base = m.clone();
    let mut out: Mat = Array2::eye(m.nrows());
    while n > 0 {
        if n & 1 == 1 {
            out = out.dot(&base);
        }
        n >>= 1;
        if n > 0 {
            base = base.dot(&base);
        }
    }
    out
}

/// Measured Euler error against the a-priori bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerReport {
    pub n: usize,
    pub t: f64,
    /// `‖T_n(t) − γ_{t,0}‖`.
    pub error: f64,
    /// `t e^{2tM}(ε_n + M² e^{tM/n} t/(2n))`.
    pub bound: f64,
    pub eps_n: f64,
    /// Whether `ε_n` comes from declared Lipschitz constants rather than
    /// sampling.
    pub eps_exact: bool,
    pub m_t: f64,
    /// Whether `M_t` is a rigorous bound (no sampled profiles).
    pub m_rigorous: bool,
    /// `D = 1 + (t/n)² M²`.
    pub d: f64,
    /// Whether `D` satisfies the step condition of the positivity argument.
    pub assumption_s: bool,
}

impl EulerReport {
    pub fn holds(&self) -> bool {
        self.error <= self.bound
    }

    /// The bound is a certificate only with exact `ε_n` and `M_t`.
    pub fn certified(&self) -> bool {
        self.eps_exact && self.m_rigorous
    }
}

/// `(1 + 1/m)^m`, with the value `1` at `m = 0`.
fn e_pow(m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        (1.0 + 1.0 / m as f64).powi(m as i32)
    }
}

/// Step condition `D(t/n) < (1+1/(n−1))^{n−1} / (1+1/(n−2))^{n−2}`. It is
/// vacuous for `n = 1`, where the positivity argument needs no induction.
pub fn step_condition(d: f64, n: usize) -> bool {
    match n {
        0 | 1 => true,
        _ => d < e_pow(n - 1) / e_pow(n - 2),
    }
}

/// Compare `T_n(t)` with `γ_{t,0}` and evaluate the error bound.
pub fn euler_report(spec: &GeneratorSpec, n: usize, t: f64, tol: f64) -> Result<EulerReport> {
    check_interval(0.0, t)?;
    let tn = euler_product(spec, n, t)?;
    let gamma = propagator_matrix(spec, 0.0, t, tol)?;
    let error = op_norm(&(tn - gamma.matrix()?));
    let m = spec.m_t(t, PsiNormOptions::default())?;
    let h = t / n as f64;
    let (eps_n, eps_exact) = if spec.has_exact_envelopes() {
        spec.continuity_modulus(0.0, h, 2)
    } else {
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let (e, _) = spec.continuity_modulus(j as f64 * h, (j + 1) as f64 * h, EPS_SAMPLES);
            worst = worst.max(e);
        }
        (worst, false)
    };
    let mt = m.value;
    let bound = t * (2.0 * t * mt).exp() * (eps_n + mt * mt * (h * mt).exp() * h / 2.0);
    let d = 1.0 + h * h * mt * mt;
    Ok(EulerReport {
        n,
        t,
        error,
        bound,
        eps_n,
        eps_exact,
        m_t: mt,
        m_rigorous: m.rigorous,
        d,
        assumption_s: step_condition(d, n),
    })
}

/// Smallest eigenvalue of the Choi matrix `Σ_ij E_ij ⊗ Φ(E_ij)` of the
/// Schrödinger-picture adjoint `Φ` of a Heisenberg superoperator matrix.
pub fn choi_min_eigenvalue(heisenberg: &Mat) -> Result<f64> {
    let d2 = heisenberg.nrows();
    let d = (d2 as f64).sqrt().round() as usize;
    if d * d != d2 || !heisenberg.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} is not a superoperator matrix",
            heisenberg.dim()
        )));
    }
    // Under the Hilbert-Schmidt pairing the adjoint map has matrix S*.
    let schr = dagger(heisenberg);
    // Block (i, j) is Φ(E_ij), with vec(E_ij) the unit vector at i + j·d.
    let choi = Array2::from_shape_fn((d2, d2), |(row, col)| {
        let (i, a) = (row / d, row % d);
        let (j, b) = (col / d, col % d);
        schr[[a + b * d, i + j * d]]
    });
    let h = (&choi + &dagger(&choi)).mapv(|z| z * 0.5);
    let ev = h.eigvalsh(UPLO::Lower)?;
    Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Smallest Choi eigenvalue of a propagator; completely positive iff
/// `≥ −CHOI_TOL`.
pub fn choi_check(p: &Propagator) -> Result<f64> {
    choi_min_eigenvalue(p.matrix()?)
}

/// `‖γ_{t,s}∘γ_{s,r} − γ_{t,r}‖`, on random unit probes when matrix-free.
pub fn cocycle_defect(spec: &GeneratorSpec, r: f64, s: f64, t: f64, tol: f64) -> Result<f64> {
    check_interval(r, s)?;
    check_interval(s, t)?;
    let ts = propagator_matrix(spec, s, t, tol)?;
    let sr = propagator_matrix(spec, r, s, tol)?;
    let tr = propagator_matrix(spec, r, t, tol)?;
    if let (Ok(a), Ok(b), Ok(c)) = (ts.matrix(), sr.matrix(), tr.matrix()) {
        return Ok(op_norm(&(a.dot(b) - c)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let a = algebra::random_unit_matrix(&mut rng, spec.dim());
        let composed = ts.apply(&sr.apply(&a)?)?;
        worst = worst.max(op_norm(&(composed - tr.apply(&a)?)));
    }
    Ok(worst)
}
