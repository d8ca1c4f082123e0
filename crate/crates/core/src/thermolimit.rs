//! Cauchy behaviour of finite-volume dynamics along nested volumes.
//!
//! The difference bound for `Λ_m ⊂ Λ_n` and `A` supported in `X ⊂ Λ_m` is
//!
//! ```text
//! ‖A‖ ‖Ψ‖_{t,μ} (∫_s^t e^{μ v_{r,μ} r} dr) |X| sup_{x∈X} Σ_{z∈Λ_n∖Λ_m} F_μ(d(x,z))
//! ```
//!
//! The derivation carries a `1/C_μ` from the Lieb-Robinson bound and a `C_μ`
//! from the convolution step; they cancel and only the cancelled form is
//! evaluated.

use rayon::prelude::*;

use crate::algebra::{embed, LocalOperator, Volume};
use crate::generator::{time_grid, GeneratorSpec, PsiNormOptions};
use crate::lattice::FamilyTag;
use crate::propagator::evolve_full;
use crate::{algebra::op_norm, Error, Mat, Result};

/// Intervals for Simpson quadrature of the time integral.
const QUADRATURE_INTERVALS: usize = 64;

/// Nested volumes `Λ_1 ⊂ … ⊂ Λ_N`, all restrictions of one generator on
/// the largest volume.
#[derive(Clone, Debug)]
pub struct VolumeSequence {
    largest: GeneratorSpec,
    sites: Vec<Vec<usize>>,
    specs: Vec<GeneratorSpec>,
}

impl VolumeSequence {
    /// `sites[k]` lists the sites of `Λ_{k+1}` as indices into the volume of
    /// `largest`; each list is sorted and strictly contains the previous.
    pub fn new(largest: GeneratorSpec, sites: Vec<Vec<usize>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidSequence("no volumes".into()));
        }
        let n = largest.volume().n_sites();
        for (k, s) in sites.iter().enumerate() {
            if s.is_empty() || s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|&x| x >= n) {
                return Err(Error::InvalidSequence(format!(
                    "volume {k} must be a sorted nonempty subset of the {n} sites"
                )));
            }
            if k > 0 {
                let prev = &sites[k - 1];
                if s.len() <= prev.len() || !prev.iter().all(|x| s.contains(x)) {
                    return Err(Error::InvalidSequence(format!(
                        "volume {k} does not strictly contain volume {}",
                        k - 1
                    )));
                }
            }
        }
        let vol = largest.volume();
        let specs = sites
            .iter()
            .map(|s| {
                let graph = vol.graph().induced(s)?;
                let dims = s.iter().map(|&x| vol.site_dims()[x]).collect();
                let sub = Volume::new(graph, dims)?.with_superop_cap(vol.superop_cap())?;
                largest.restrict(s, sub)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            largest,
            sites,
            specs,
        })
    }

    /// Centered intervals of the given odd sizes on a chain with an odd
    /// number of sites.
    pub fn centered_chain(largest: GeneratorSpec, sizes: &[usize]) -> Result<Self> {
        let n = largest.volume().n_sites();
        if *largest.volume().graph().family() != FamilyTag::Chain || n.is_multiple_of(2) {
            return Err(Error::InvalidSequence(
                "centered intervals need a chain with an odd number of sites".into(),
            ));
        }
        let c = n / 2;
        let sites = sizes
            .iter()
            .map(|&k| {
                if k % 2 == 0 || k > n {
                    return Err(Error::InvalidSequence(format!(
                        "interval size {k} must be odd and at most {n}"
                    )));
                }
                Ok((c - k / 2..=c + k / 2).collect())
            })
            .collect::<Result<_>>()?;
        Self::new(largest, sites)
    }

    /// Centered squares of the given odd sides on a square grid with an odd
    /// side.
    pub fn centered_square(largest: GeneratorSpec, sides: &[usize]) -> Result<Self> {
        let (w, h) = match *largest.volume().graph().family() {
            FamilyTag::Grid { width, height } => (width, height),
            _ => {
                return Err(Error::InvalidSequence(
                    "centered squares need a grid volume".into(),
                ))
            }
        };
        if w != h || w % 2 == 0 {
            return Err(Error::InvalidSequence(
                "centered squares need an odd square grid".into(),
            ));
        }
        let c = w / 2;
        let sites = sides
            .iter()
            .map(|&k| {
                if k % 2 == 0 || k > w {
                    return Err(Error::InvalidSequence(format!(
                        "square side {k} must be odd and at most {w}"
                    )));
                }
                let r = c - k / 2..=c + k / 2;
                let mut s: Vec<usize> = r
                    .clone()
                    .flat_map(|y| r.clone().map(move |x| y * w + x))
                    .collect();
                s.sort_unstable();
                Ok(s)
            })
            .collect::<Result<_>>()?;
        Self::new(largest, sites)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self, k: usize) -> &[usize] {
        &self.sites[k]
    }

    pub fn spec(&self, k: usize) -> &GeneratorSpec {
        &self.specs[k]
    }

    pub fn largest(&self) -> &GeneratorSpec {
        &self.largest
    }

    /// The generator on `Λ_m` equals the restriction of the generator on `Λ_n`, term
    /// for term.
    pub fn consistent(&self, m: usize, n: usize) -> Result<bool> {
        let pos: Vec<usize> = self.sites[m]
            .iter()
            .map(|x| self.sites[n].iter().position(|y| y == x).expect("nested"))
            .collect();
        let again = self.specs[n].restrict(&pos, self.specs[m].volume().clone())?;
        Ok(again.terms() == self.specs[m].terms())
    }

    fn local_in(&self, a: &LocalOperator, k: usize) -> Result<LocalOperator> {
        let support = a
            .support
            .iter()
            .map(|x| {
                self.sites[k].iter().position(|y| y == x).ok_or_else(|| {
                    Error::SupportOutsideVolume {
                        support: a.support.clone(),
                        sites: self.sites[k].len(),
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LocalOperator::new(support, a.matrix.clone(), a.label.clone())
    }

    /// `γ^{(k)}_{t,s}(A)` for `A` given on the sites of the largest volume.
    pub fn evolve_in(&self, a: &LocalOperator, k: usize, s: f64, t: f64, tol: f64) -> Result<Mat> {
        let local = self.local_in(a, k)?;
        evolve_full(&self.specs[k], &embed(&local, self.specs[k].volume())?, s, t, tol)
    }

    /// Embed a full observable on `Λ_m` into `Λ_n`.
    pub fn lift(&self, m: usize, n: usize, op: &Mat) -> Result<Mat> {
        let pos: Vec<usize> = self.sites[m]
            .iter()
            .map(|x| {
                self.sites[n]
                    .iter()
                    .position(|y| y == x)
                    .ok_or_else(|| Error::InvalidSequence(format!("volume {m} ⊄ volume {n}")))
            })
            .collect::<Result<_>>()?;
        let idx = self.specs[n].volume().indexer(&pos)?;
        Ok(idx.embed(op))
    }

    /// `sup_{x∈X} Σ_{z∈Λ_n∖Λ_m} F_μ(d(x,z))`.
    pub fn boundary_sum(&self, support: &[usize], m: usize, n: usize) -> Result<f64> {
        let decay = self.largest.decay().ok_or(Error::MuUnset)?;
        let graph = self.largest.volume().graph();
        let added: Vec<usize> = self.sites[n]
            .iter()
            .copied()
            .filter(|z| !self.sites[m].contains(z))
            .collect();
        Ok(support
            .iter()
            .map(|&x| {
                added
                    .iter()
                    .map(|&z| decay.f_mu_unchecked(graph.dist(x, z)))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max))
    }

    /// `d(X, Λ_n∖Λ_m)`.
    pub fn boundary_distance(&self, support: &[usize], m: usize, n: usize) -> f64 {
        let added: Vec<usize> = self.sites[n]
            .iter()
            .copied()
            .filter(|z| !self.sites[m].contains(z))
            .collect();
        self.largest.volume().graph().set_distance(support, &added)
    }
}

/// `‖γ^{(n)}_{t,s}(A) − γ^{(m)}_{t,s}(A) ⊗ 𝟙‖`.
pub fn volume_difference(
    seq: &VolumeSequence,
    a: &LocalOperator,
    n: usize,
    m: usize,
    s: f64,
    t: f64,
    tol: f64,
) -> Result<f64> {
    if m > n {
        return Err(Error::InvalidSequence(format!("need m ≤ n, got m = {m}, n = {n}")));
    }
    if m == n {
        seq.local_in(a, m)?;
        return Ok(0.0);
    }
    let big = seq.evolve_in(a, n, s, t, tol)?;
    let small = seq.evolve_in(a, m, s, t, tol)?;
    Ok(op_norm(&(big - seq.lift(m, n, &small)?)))
}

/// `∫_s^t e^{‖Ψ‖_{r,μ} C_μ r} dr`, in closed form when `‖Ψ‖_{r,μ}` is an
/// envelope (constant in `r`) and by Simpson's rule otherwise.
pub fn time_integral(spec: &GeneratorSpec, c_mu: f64, s: f64, t: f64) -> Result<f64> {
    if t <= s {
        return Ok(0.0);
    }
    let opts = PsiNormOptions::default();
    let psi = spec.psi_interaction_norm(t, opts)?;
    if psi.rigorous {
        let a = psi.value * c_mu;
        return Ok(if a == 0.0 {
            t - s
        } else {
            ((a * t).exp() - (a * s).exp()) / a
        });
    }
    let nodes = time_grid(s, t, QUADRATURE_INTERVALS + 1);
    let h = (t - s) / QUADRATURE_INTERVALS as f64;
    let mut acc = 0.0;
    for (i, &r) in nodes.iter().enumerate() {
        let w = if i == 0 || i == QUADRATURE_INTERVALS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let p = spec.psi_interaction_norm(r, opts)?.value;
        acc += w * (p * c_mu * r).exp();
    }
    Ok(acc * h / 3.0)
}

fn prefactor(seq: &VolumeSequence, a: &LocalOperator, s: f64, t: f64) -> Result<f64> {
    let spec = seq.largest();
    let decay = spec.decay().ok_or(Error::MuUnset)?;
    let c_mu = decay.c_mu().certified;
    let psi = spec.psi_interaction_norm(t, PsiNormOptions::default())?.value;
    Ok(a.norm() * psi * time_integral(spec, c_mu, s, t)? * a.support.len() as f64)
}

/// Upper bound on [`volume_difference`]. `‖Ψ‖_{t,μ}` and the decay
/// constants are taken from the largest volume.
pub fn difference_bound(
    seq: &VolumeSequence,
    a: &LocalOperator,
    n: usize,
    m: usize,
    s: f64,
    t: f64,
) -> Result<f64> {
    if m >= n || t <= s {
        return Ok(0.0);
    }
    Ok(prefactor(seq, a, s, t)? * seq.boundary_sum(&a.support, m, n)?)
}

/// Bound on `Σ_{z∉Λ_N}` of the boundary sum for the largest volume, using
/// the shell counts of the infinite chain or grid. `None` for other
/// families.
pub fn certified_tail(seq: &VolumeSequence, a: &LocalOperator, s: f64, t: f64) -> Result<Option<f64>> {
    let last = seq.len() - 1;
    let spec = seq.largest();
    let decay = spec.decay().ok_or(Error::MuUnset)?;
    let graph = spec.volume().graph();
    let lattice_deg = match graph.family().lattice_dim() {
        Some(d) => 2 * d,
        None => return Ok(None),
    };
    // Sites of Λ_N missing a lattice neighbour inside Λ_N.
    let inside = seq.sites(last);
    let boundary: Vec<usize> = inside
        .iter()
        .copied()
        .filter(|&x| inside.iter().filter(|&&y| graph.dist(x, y) == 1.0).count() < lattice_deg)
        .collect();
    let mut worst: f64 = 0.0;
    for &x in &a.support {
        let k_min = graph.set_distance(&[x], &boundary) as usize + 1;
        match decay.lattice_tail(k_min) {
            Some(v) => worst = worst.max(v),
            None => return Ok(None),
        }
    }
    if t <= s {
        return Ok(Some(0.0));
    }
    Ok(Some(prefactor(seq, a, s, t)? * worst))
}

/// One row of [`cauchy_sweep`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    /// Index of the larger volume (`n`; `m = n − 1`).
    pub n: usize,
    pub sites: usize,
    pub boundary_distance: f64,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Output of [`cauchy_sweep`].
#[derive(Clone, Debug, PartialEq)]
pub struct CauchySweep {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln(measured)` against boundary distance,
    /// over rows with a positive measurement (needs at least two).
    pub slope: Option<f64>,
    /// Bound on the distance from the largest volume to the limit.
    pub certified_tail: Option<f64>,
}

impl CauchySweep {
    pub fn dominated(&self) -> bool {
        self.rows.iter().all(|r| r.measured <= r.bound)
    }

    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].measured <= w[0].measured)
    }
}

/// Differences between consecutive volumes of `seq` and their bounds.
pub fn cauchy_sweep(
    seq: &VolumeSequence,
    a: &LocalOperator,
    s: f64,
    t: f64,
    tol: f64,
) -> Result<CauchySweep> {
    let evolved: Vec<Mat> = (0..seq.len())
        .into_par_iter()
        .map(|k| seq.evolve_in(a, k, s, t, tol))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(seq.len().saturating_sub(1));
    for n in 1..seq.len() {
        let measured = op_norm(&(&evolved[n] - &seq.lift(n - 1, n, &evolved[n - 1])?));
        let bound = difference_bound(seq, a, n, n - 1, s, t)?;
        rows.push(SweepRow {
            n,
            sites: seq.sites(n).len(),
            boundary_distance: seq.boundary_distance(&a.support, n - 1, n),
            measured,
            bound,
            ratio: if bound > 0.0 { measured / bound } else { 0.0 },
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.measured > 0.0)
        .map(|r| (r.boundary_distance, r.measured.ln()))
        .collect();
    Ok(CauchySweep {
        slope: fit_slope(&pts),
        certified_tail: certified_tail(seq, a, s, t)?,
        rows,
    })
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
