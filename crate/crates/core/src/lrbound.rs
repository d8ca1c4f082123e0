//! Lieb-Robinson certificates and the empirical quantities they bound.
//!
//! For `𝒦` supported in `X` with `𝒦(𝟙) = 0` and `B` supported in `Y`, the
//! certificate bounds `‖𝒦(γ_{t,s}(B))‖` by
//!
//! ```text
//! (‖𝒦‖_cb ‖B‖ / C_μ) · e^{‖Ψ‖_{t,μ} C_μ (t−s)} · Σ_{x∈X} Σ_{y∈Y} F_μ(d(x,y))
//! ```
//!
//! This form is only valid for disjoint `X`, `Y`: at `t = s` with `X = Y`
//! the left side can reach `‖𝒦‖_cb‖B‖` while the right side is
//! `‖𝒦‖_cb‖B‖ F_μ(0)/C_μ < ‖𝒦‖_cb‖B‖`. Summing the iteration that produces
//! it from its zeroth term instead gives
//!
//! ```text
//! ‖𝒦‖_cb ‖B‖ · (δ_Y(X) + (e^{‖Ψ‖_{t,μ} C_μ (t−s)} − 1)/C_μ · Σ_{x∈X} Σ_{y∈Y} F_μ(d(x,y)))
//! ```
//!
//! which holds for all supports and is what [`LRCertificate::corrected_bound`]
//! evaluates.

use rayon::prelude::*;

use crate::algebra::{dagger, embed, op_norm, LocalIndexer, LocalOperator, Volume};
use crate::generator::{GeneratorSpec, PsiNormOptions};
use crate::lattice::{DecayFunction, MetricGraph};
use crate::propagator::{evolve_full, evolve_full_at, RkOptions};
use crate::{Error, Mat, Result, C64};

/// Default front threshold relative to `‖B‖·cb_bound`.
pub const DEFAULT_THETA: f64 = 1e-3;

/// How a [`LocalSuperMap`] acts.
#[derive(Clone, Debug, PartialEq)]
pub enum SuperMapForm {
    /// `B ↦ [A, B]`.
    Commutator { a: Mat },
    /// `B ↦ i[A, B] + Σ_a (L_a* B L_a − ½{L_a*L_a, B})`.
    Lindblad { a: Mat, lindblads: Vec<Mat> },
}

/// A map `𝒦` on `𝓐_Λ` supported in `X` that vanishes on `𝟙`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSuperMap {
    pub support: Vec<usize>,
    pub form: SuperMapForm,
    pub cb_bound: f64,
}

impl LocalSuperMap {
    pub fn commutator(a: &LocalOperator) -> Self {
        Self {
            support: a.support.clone(),
            cb_bound: 2.0 * op_norm(&a.matrix),
            form: SuperMapForm::Commutator { a: a.matrix.clone() },
        }
    }

    pub fn lindblad(support: Vec<usize>, a: Mat, lindblads: Vec<Mat>) -> Result<Self> {
        let k = a.nrows();
        if !a.is_square() || lindblads.iter().any(|l| l.dim() != (k, k)) {
            return Err(Error::DimensionMismatch(
                "Lindblad-form map needs square matrices of one dimension".into(),
            ));
        }
        if op_norm(&(&a - &dagger(&a))) > crate::generator::HERMITIAN_TOL {
            return Err(Error::NonHermitian {
                index: 0,
                defect: op_norm(&(&a - &dagger(&a))),
            });
        }
        let cb = 2.0 * op_norm(&a) + 2.0 * lindblads.iter().map(|l| op_norm(l).powi(2)).sum::<f64>();
        Ok(Self {
            support,
            form: SuperMapForm::Lindblad { a, lindblads },
            cb_bound: cb,
        })
    }

    /// Commutator with the single-site Pauli `letter` at `site`.
    pub fn pauli(letter: char, site: usize) -> Result<Self> {
        Ok(Self::commutator(&LocalOperator::pauli(
            &letter.to_string(),
            vec![site],
        )?))
    }

    /// `𝒦(b)` for a full observable on `volume`.
    pub fn apply(&self, volume: &Volume, b: &Mat) -> Result<Mat> {
        let idx = volume.indexer(&self.support)?;
        let k = match &self.form {
            SuperMapForm::Commutator { a } => a.nrows(),
            SuperMapForm::Lindblad { a, .. } => a.nrows(),
        };
        if k != idx.local_dim() {
            return Err(Error::DimensionMismatch(format!(
                "map acts on dimension {k}, support {:?} needs {}",
                self.support,
                idx.local_dim()
            )));
        }
        let d = volume.total_dim();
        if b.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "observable is {:?}, volume dimension is {d}",
                b.dim()
            )));
        }
        Ok(self.apply_with(&idx, b))
    }

    fn apply_with(&self, idx: &LocalIndexer, b: &Mat) -> Mat {
        match &self.form {
            SuperMapForm::Commutator { a } => idx.left_mul(a, b) - idx.right_mul(b, a),
            SuperMapForm::Lindblad { a, lindblads } => {
                let i = C64::new(0.0, 1.0);
                let mut out = (idx.left_mul(a, b) - idx.right_mul(b, a)).mapv(|z| z * i);
                for l in lindblads {
                    let ld = dagger(l);
                    let ll = ld.dot(l).mapv(|z| z * 0.5);
                    out += &idx.left_mul(&ld, &idx.right_mul(b, l));
                    out -= &idx.left_mul(&ll, b);
                    out -= &idx.right_mul(b, &ll);
                }
                out
            }
        }
    }
}

/// Which bound display a number came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundForm {
    Sum,
    Exponential,
    Corrected,
}

/// Constants of the Lieb-Robinson bound for one `μ`.
#[derive(Clone, Debug)]
pub struct LRCertificate {
    pub mu: f64,
    /// `‖Ψ‖_{t,μ}`.
    pub psi_norm: f64,
    /// False if `‖Ψ‖_{t,μ}` was sampled rather than bounded.
    pub psi_rigorous: bool,
    /// Certified upper bound on `C_μ`.
    pub c_mu: f64,
    /// Certified upper bound on `‖F‖`.
    pub f_norm: f64,
    /// `v = ‖Ψ‖_{t,μ} C_μ / μ`.
    pub velocity: f64,
    /// Horizon `t` for which `‖Ψ‖_{t,μ}` was evaluated.
    pub t_max: f64,
    decay: DecayFunction,
}

impl LRCertificate {
    /// Certificate for `spec` over `[0, t_max]` from its decay function.
    pub fn new(spec: &GeneratorSpec, t_max: f64, opts: PsiNormOptions) -> Result<Self> {
        let decay = spec.decay().ok_or(Error::MuUnset)?.clone();
        let psi = spec.psi_interaction_norm(t_max, opts)?;
        let c_mu = decay.c_mu().certified;
        let mu = decay.mu();
        if !(mu > 0.0) {
            return Err(Error::InvalidDecay(
                "the velocity needs μ > 0".into(),
            ));
        }
        Ok(Self {
            mu,
            psi_norm: psi.value,
            psi_rigorous: psi.rigorous,
            c_mu,
            f_norm: decay.f_norm().certified,
            velocity: psi.value * c_mu / mu,
            t_max,
            decay,
        })
    }

    pub fn decay(&self) -> &DecayFunction {
        &self.decay
    }

    /// `Σ_{x∈X} Σ_{y∈Y} F_μ(d(x,y))`.
    pub fn pair_sum(&self, graph: &MetricGraph, xs: &[usize], ys: &[usize]) -> f64 {
        xs.iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| self.decay.f_mu_unchecked(graph.dist(x, y)))
            .sum()
    }

    fn check_dt(dt: f64) -> Result<()> {
        if !(dt >= 0.0) {
            return Err(Error::InvalidTime(format!("t − s = {dt}")));
        }
        Ok(())
    }

    /// `(cb‖B‖/C_μ) e^{‖Ψ‖C_μ(t−s)} Σ_x Σ_y F_μ(d(x,y))`.
    pub fn sum_bound(
        &self,
        graph: &MetricGraph,
        cb: f64,
        b_norm: f64,
        xs: &[usize],
        ys: &[usize],
        dt: f64,
    ) -> Result<f64> {
        Self::check_dt(dt)?;
        if cb * b_norm == 0.0 {
            return Ok(0.0);
        }
        Ok(cb * b_norm / self.c_mu
            * (self.psi_norm * self.c_mu * dt).exp()
            * self.pair_sum(graph, xs, ys))
    }

    /// `(cb‖B‖/C_μ) ‖F‖ min(|X|,|Y|) e^{−μ(d(X,Y) − v(t−s))}`.
    pub fn exponential_bound(
        &self,
        graph: &MetricGraph,
        cb: f64,
        b_norm: f64,
        xs: &[usize],
        ys: &[usize],
        dt: f64,
    ) -> Result<f64> {
        Self::check_dt(dt)?;
        if cb * b_norm == 0.0 {
            return Ok(0.0);
        }
        let dist = graph.set_distance(xs, ys);
        let size = xs.len().min(ys.len()) as f64;
        Ok(cb * b_norm / self.c_mu
            * self.f_norm
            * size
            * (-self.mu * (dist - self.velocity * dt)).exp())
    }

    /// `cb‖B‖ (δ_Y(X) + (e^{‖Ψ‖C_μ(t−s)} − 1)/C_μ · Σ_x Σ_y F_μ(d(x,y)))`.
    pub fn corrected_bound(
        &self,
        graph: &MetricGraph,
        cb: f64,
        b_norm: f64,
        xs: &[usize],
        ys: &[usize],
        dt: f64,
    ) -> Result<f64> {
        Self::check_dt(dt)?;
        let overlap = xs.iter().any(|x| ys.contains(x));
        let delta = if overlap { 1.0 } else { 0.0 };
        let growth = (self.psi_norm * self.c_mu * dt).exp_m1() / self.c_mu;
        Ok(cb * b_norm * (delta + growth * self.pair_sum(graph, xs, ys)))
    }

    pub fn bound(
        &self,
        form: BoundForm,
        graph: &MetricGraph,
        k: &LocalSuperMap,
        b: &LocalOperator,
        dt: f64,
    ) -> Result<f64> {
        let b_norm = b.norm();
        let f = match form {
            BoundForm::Sum => Self::sum_bound,
            BoundForm::Exponential => Self::exponential_bound,
            BoundForm::Corrected => Self::corrected_bound,
        };
        f(self, graph, k.cb_bound, b_norm, &k.support, &b.support, dt)
    }
}

/// `‖𝒦(γ_{t,s}(B))‖`.
pub fn empirical_lr(
    spec: &GeneratorSpec,
    k: &LocalSuperMap,
    b: &LocalOperator,
    s: f64,
    t: f64,
    tol: f64,
) -> Result<f64> {
    let full = embed(b, spec.volume())?;
    let evolved = evolve_full(spec, &full, s, t, tol)?;
    Ok(op_norm(&k.apply(spec.volume(), &evolved)?))
}

/// One cell of a light-cone scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRow {
    pub site: usize,
    pub time: f64,
    /// `max_σ ‖[σ_x, B(t)]‖` over the single-site Pauli basis at `site`.
    pub empirical: f64,
    pub bound_sum: f64,
    pub bound_exp: f64,
    /// `empirical / bound_sum` (0 when both vanish).
    pub ratio: f64,
}

/// First time the empirical value at a site reaches the threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Front {
    pub site: usize,
    pub distance: f64,
    pub arrival: Option<f64>,
}

/// Output of [`lightcone_scan`].
#[derive(Clone, Debug, PartialEq)]
pub struct LightconeScan {
    pub rows: Vec<ScanRow>,
    pub theta: f64,
    pub fronts: Vec<Front>,
    /// Least-squares slope of distance against arrival time.
    pub v_emp: Option<f64>,
}

impl LightconeScan {
    /// Arrival times nondecreasing in distance, treating "never" as `+∞`.
    pub fn front_monotone(&self) -> bool {
        let mut fronts = self.fronts.clone();
        fronts.sort_by(|a, b| a.distance.total_cmp(&b.distance));
        let key = |f: &Front| f.arrival.unwrap_or(f64::INFINITY);
        fronts.windows(2).all(|w| {
            w[0].distance == w[1].distance || key(&w[0]) <= key(&w[1])
        })
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }
}

/// Empirical velocity from `(arrival, distance)` points at positive
/// distance: the least-squares slope when at least two distinct arrival
/// times exist and the slope is positive, otherwise `max d/t`.
pub fn front_velocity(fronts: &[Front]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = fronts
        .iter()
        .filter(|f| f.distance > 0.0)
        .filter_map(|f| f.arrival.filter(|&t| t > 0.0).map(|t| (t, f.distance)))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let fallback = pts.iter().map(|(t, d)| d / t).fold(0.0, f64::max);
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let md = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let std: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - md)).sum();
    if pts.len() >= 2 && stt > 0.0 && std > 0.0 {
        Some(std / stt)
    } else {
        Some(fallback)
    }
}

/// Commutators of `B(t)` with the single-site Pauli basis at each of
/// `sites`, at each time in `times` (`s = times[0]`).
///
/// `theta` is the front threshold relative to `‖B‖·2`.
pub fn lightcone_scan(
    spec: &GeneratorSpec,
    cert: &LRCertificate,
    b: &LocalOperator,
    sites: &[usize],
    times: &[f64],
    theta: f64,
    tol: f64,
) -> Result<LightconeScan> {
    let vol = spec.volume();
    let graph = vol.graph();
    let s = *times.first().ok_or_else(|| Error::InvalidTime("empty time grid".into()))?;
    let full = embed(b, vol)?;
    let (evolved, _) = evolve_full_at(spec, &full, s, times, RkOptions::with_tol(tol))?;
    let b_norm = b.norm();
    let maps: Vec<Vec<(LocalIndexer, LocalSuperMap)>> = sites
        .iter()
        .map(|&x| {
            ['X', 'Y', 'Z']
                .iter()
                .map(|&p| Ok((vol.indexer(&[x])?, LocalSuperMap::pauli(p, x)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, usize)> = (0..times.len())
        .flat_map(|ti| (0..sites.len()).map(move |si| (ti, si)))
        .collect();
    let rows: Vec<ScanRow> = cells
        .par_iter()
        .map(|&(ti, si)| -> Result<ScanRow> {
            let x = sites[si];
            let dt = times[ti] - s;
            let empirical = maps[si]
                .iter()
                .map(|(idx, k)| op_norm(&k.apply_with(idx, &evolved[ti])))
                .fold(0.0, f64::max);
            let bound_sum = cert.sum_bound(graph, 2.0, b_norm, &[x], &b.support, dt)?;
            let bound_exp = cert.exponential_bound(graph, 2.0, b_norm, &[x], &b.support, dt)?;
            let ratio = if bound_sum > 0.0 {
                empirical / bound_sum
            } else if empirical > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            Ok(ScanRow {
                site: x,
                time: times[ti],
                empirical,
                bound_sum,
                bound_exp,
                ratio,
            })
        })
        .collect::<Result<_>>()?;

    let threshold = theta * b_norm * 2.0;
    let fronts: Vec<Front> = sites
        .iter()
        .enumerate()
        .map(|(si, &x)| Front {
            site: x,
            distance: graph.set_distance(&[x], &b.support),
            arrival: (0..times.len())
                .map(|ti| rows[ti * sites.len() + si])
                .find(|r| r.empirical >= threshold)
                .map(|r| r.time),
        })
        .collect();
    let v_emp = front_velocity(&fronts);
    Ok(LightconeScan {
        rows,
        theta: threshold,
        fronts,
        v_emp,
    })
}

/// One probe of [`domination_sweep`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRow {
    pub b_site: usize,
    pub b_pauli: char,
    pub k_site: usize,
    pub k_pauli: char,
    pub time: f64,
    pub empirical: f64,
    pub bound_sum: f64,
    pub bound_corrected: f64,
}

impl ProbeRow {
    pub fn overlapping(&self) -> bool {
        self.b_site == self.k_site
    }

    pub fn sum_violated(&self) -> bool {
        self.empirical > self.bound_sum
    }

    pub fn corrected_violated(&self) -> bool {
        self.empirical > self.bound_corrected
    }
}

/// Every single-site Pauli `B` against every single-site Pauli commutator
/// `𝒦` on the volume, at each of `times` (`s = times[0]`).
pub fn domination_sweep(
    spec: &GeneratorSpec,
    cert: &LRCertificate,
    times: &[f64],
    tol: f64,
) -> Result<Vec<ProbeRow>> {
    let vol = spec.volume();
    let graph = vol.graph();
    let s = *times.first().ok_or_else(|| Error::InvalidTime("empty time grid".into()))?;
    let letters = ['X', 'Y', 'Z'];
    let n = vol.n_sites();
    let probes: Vec<(usize, char)> = (0..n)
        .flat_map(|y| letters.iter().map(move |&p| (y, p)))
        .collect();
    let maps: Vec<(usize, char, LocalIndexer, LocalSuperMap)> = probes
        .iter()
        .map(|&(x, p)| Ok((x, p, vol.indexer(&[x])?, LocalSuperMap::pauli(p, x)?)))
        .collect::<Result<_>>()?;
    let blocks: Vec<Vec<ProbeRow>> = probes
        .par_iter()
        .map(|&(y, p)| -> Result<Vec<ProbeRow>> {
            let b = LocalOperator::pauli(&p.to_string(), vec![y])?;
            let full = embed(&b, vol)?;
            let (evolved, _) = evolve_full_at(spec, &full, s, times, RkOptions::with_tol(tol))?;
            let mut rows = Vec::with_capacity(times.len() * maps.len());
            for (ti, bt) in evolved.iter().enumerate() {
                let dt = times[ti] - s;
                for (x, kp, idx, k) in &maps {
                    rows.push(ProbeRow {
                        b_site: y,
                        b_pauli: p,
                        k_site: *x,
                        k_pauli: *kp,
                        time: times[ti],
                        empirical: op_norm(&k.apply_with(idx, bt)),
                        bound_sum: cert.sum_bound(graph, k.cb_bound, 1.0, &[*x], &[y], dt)?,
                        bound_corrected: cert
                            .corrected_bound(graph, k.cb_bound, 1.0, &[*x], &[y], dt)?,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Counts of violated probes in a sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ViolationCounts {
    pub probes: usize,
    pub sum_all: usize,
    pub sum_disjoint: usize,
    pub sum_overlapping: usize,
    pub corrected: usize,
}

pub fn count_violations(rows: &[ProbeRow]) -> ViolationCounts {
    let mut c = ViolationCounts {
        probes: rows.len(),
        ..Default::default()
    };
    for r in rows {
        if r.sum_violated() {
            c.sum_all += 1;
            if r.overlapping() {
                c.sum_overlapping += 1;
            } else {
                c.sum_disjoint += 1;
            }
        }
        if r.corrected_violated() {
            c.corrected += 1;
        }
    }
    c
}
