//! Finite tensor-product operator algebra: volumes, local operators and their
//! embeddings, norms, commutators and supports.

mod local;
pub mod pauli;

pub use local::LocalIndexer;

use ndarray::{linalg::kron, Array1, Array2};
use ndarray_linalg::SVD;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::lattice::MetricGraph;
use crate::{Error, Mat, Result, C64};

/// Absolute cap on the Hilbert-space dimension of a volume.
pub const MAX_TOTAL_DIM: usize = 4096;

/// Default cap on the Hilbert-space dimension for which superoperators are
/// formed as dense matrices (superoperator side `16² = 256`).
pub const DEFAULT_SUPEROP_CAP: usize = 16;

/// Largest admissible superoperator cap (superoperator side `4096`).
pub const MAX_SUPEROP_CAP: usize = 64;

/// A finite set of sites `Λ` with a Hilbert space `𝓗_x` attached to each.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    graph: MetricGraph,
    site_dims: Vec<usize>,
    total_dim: usize,
    superop_cap: usize,
}

impl Volume {
    pub fn new(graph: MetricGraph, site_dims: Vec<usize>) -> Result<Self> {
        if site_dims.len() != graph.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} site dimensions for {} sites",
                site_dims.len(),
                graph.len()
            )));
        }
        if site_dims.iter().any(|&d| d < 2) {
            return Err(Error::DimensionMismatch(
                "every site needs dimension ≥ 2".into(),
            ));
        }
        let mut total: usize = 1;
        for &d in &site_dims {
            total = total.saturating_mul(d);
        }
        if total > MAX_TOTAL_DIM {
            return Err(Error::CapExceeded {
                what: "any dense computation",
                dim: total,
                cap: MAX_TOTAL_DIM,
            });
        }
        Ok(Self {
            graph,
            site_dims,
            total_dim: total,
            superop_cap: DEFAULT_SUPEROP_CAP,
        })
    }

    /// Qubit at every vertex.
    pub fn qubits(graph: MetricGraph) -> Result<Self> {
        let n = graph.len();
        Self::new(graph, vec![2; n])
    }

    /// Raise or lower the dimension up to which superoperators are formed.
    pub fn with_superop_cap(mut self, cap: usize) -> Result<Self> {
        if cap > MAX_SUPEROP_CAP {
            return Err(Error::CapExceeded {
                what: "superoperator cap setting",
                dim: cap,
                cap: MAX_SUPEROP_CAP,
            });
        }
        self.superop_cap = cap;
        Ok(self)
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn site_dims(&self) -> &[usize] {
        &self.site_dims
    }

    pub fn n_sites(&self) -> usize {
        self.site_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn superop_cap(&self) -> usize {
        self.superop_cap
    }

    pub fn superop_allowed(&self) -> bool {
        self.total_dim <= self.superop_cap
    }

    pub(crate) fn require_superop(&self) -> Result<()> {
        if self.superop_allowed() {
            Ok(())
        } else {
            Err(Error::CapExceeded {
                what: "superoperator matrices",
                dim: self.total_dim,
                cap: self.superop_cap,
            })
        }
    }

    /// Product of the site dimensions over `support`.
    pub fn local_dim(&self, support: &[usize]) -> Result<usize> {
        self.check_support(support)?;
        Ok(support.iter().map(|&x| self.site_dims[x]).product())
    }

    pub fn check_support(&self, support: &[usize]) -> Result<()> {
        check_sorted_unique(support)?;
        if support.iter().any(|&x| x >= self.n_sites()) {
            return Err(Error::SupportOutsideVolume {
                support: support.to_vec(),
                sites: self.n_sites(),
            });
        }
        Ok(())
    }

    pub fn indexer(&self, support: &[usize]) -> Result<LocalIndexer> {
        self.check_support(support)?;
        Ok(LocalIndexer::new(&self.site_dims, support))
    }

    pub fn identity(&self) -> Mat {
        Array2::eye(self.total_dim)
    }
}

fn check_sorted_unique(support: &[usize]) -> Result<()> {
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSupport(format!(
            "support {support:?} must be strictly increasing"
        )));
    }
    Ok(())
}

/// An element of `𝓐_X`: a matrix on `⊗_{x∈X} 𝓗_x`, tensor factors in the
/// order of the (sorted) support.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    pub support: Vec<usize>,
    pub matrix: Mat,
    pub label: String,
}

impl LocalOperator {
    pub fn new(support: Vec<usize>, matrix: Mat, label: impl Into<String>) -> Result<Self> {
        check_sorted_unique(&support)?;
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "operator matrix is {:?}",
                matrix.dim()
            )));
        }
        Ok(Self {
            support,
            matrix,
            label: label.into(),
        })
    }

    /// Pauli string on consecutive entries of `support`, e.g. `("XZ", [0, 3])`.
    pub fn pauli(letters: &str, support: Vec<usize>) -> Result<Self> {
        if letters.chars().count() != support.len() {
            return Err(Error::DimensionMismatch(format!(
                "{letters:?} does not match support {support:?}"
            )));
        }
        Self::new(support, pauli::pauli_string(letters)?, letters)
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.matrix)
    }
}

/// `A ⊗ 𝟙_{Λ∖X}` as a full matrix.
pub fn embed(a: &LocalOperator, volume: &Volume) -> Result<Mat> {
    let idx = volume.indexer(&a.support)?;
    if a.matrix.nrows() != idx.local_dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator {:?} is {}-dimensional, support {:?} needs {}",
            a.label,
            a.matrix.nrows(),
            a.support,
            idx.local_dim()
        )));
    }
    Ok(idx.embed(&a.matrix))
}

/// Operator norm (largest singular value). `NaN` if the SVD does not
/// converge, which only happens on non-finite input.
pub fn op_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match m.svd(false, false) {
        Ok((_, s, _)) => s.iter().copied().fold(0.0, f64::max),
        Err(_) => f64::NAN,
    }
}

pub fn frobenius_norm(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate transpose.
pub fn dagger(m: &Mat) -> Mat {
    m.t().mapv(|z| z.conj())
}

fn same_shape(a: &Mat, b: &Mat) -> Result<()> {
    if a.dim() != b.dim() || !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// `AB − BA`.
pub fn commutator(a: &Mat, b: &Mat) -> Result<Mat> {
    same_shape(a, b)?;
    Ok(a.dot(b) - b.dot(a))
}

/// `AB + BA`.
pub fn anticommutator(a: &Mat, b: &Mat) -> Result<Mat> {
    same_shape(a, b)?;
    Ok(a.dot(b) + b.dot(a))
}

/// Smallest `X ⊂ Λ` with `M = M' ⊗ 𝟙_{Λ∖X}` up to `tol`: a site belongs to
/// the support iff conjugating `M` by some Weyl unitary on that site moves
/// it by more than `tol` in operator norm.
pub fn minimal_support(m: &Mat, volume: &Volume, tol: f64) -> Result<Vec<usize>> {
    let d = volume.total_dim();
    if m.dim() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {:?}, volume dimension is {d}",
            m.dim()
        )));
    }
    let mut support = Vec::new();
    for x in 0..volume.n_sites() {
        let idx = volume.indexer(&[x])?;
        let moved = pauli::weyl_basis(volume.site_dims()[x]).iter().any(|w| {
            let conj = idx.right_mul(&idx.left_mul(w, m), &dagger(w));
            op_norm(&(conj - m)) > tol
        });
        if moved {
            support.push(x);
        }
    }
    Ok(support)
}

/// Column-stacking vectorisation: `vec(A)[i + j·d] = A[i, j]`.
pub fn vec_col(a: &Mat) -> Array1<C64> {
    a.t().iter().copied().collect()
}

/// Inverse of [`vec_col`].
pub fn unvec_col(v: &Array1<C64>, d: usize) -> Mat {
    Array2::from_shape_fn((d, d), |(i, j)| v[i + j * d])
}

/// Superoperator matrix of `A ↦ X·A·Y` under [`vec_col`]: `Yᵀ ⊗ X`.
pub fn sandwich_superop(x: &Mat, y: &Mat) -> Mat {
    kron(&y.t().to_owned(), x)
}

/// Apply a superoperator matrix to an operator.
pub fn apply_superop(s: &Mat, a: &Mat) -> Mat {
    unvec_col(&s.dot(&vec_col(a)), a.nrows())
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// Used as an oracle for the integrators, so it deliberately shares no code
/// with them.
pub fn expm(m: &Mat) -> Mat {
    let n = m.nrows();
    let one_norm = (0..n)
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while one_norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m.mapv(|z| z * scale);
    let mut result: Mat = Array2::eye(n);
    let mut term: Mat = Array2::eye(n);
    for k in 1..=40 {
        term = term.dot(&a).mapv(|z| z / k as f64);
        result += &term;
        if frobenius_norm(&term) <= 1e-18 * frobenius_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Mat {
    Array2::from_shape_simple_fn((d, d), || {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Gaussian Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Mat {
    let g = random_matrix(rng, d);
    (&g + &dagger(&g)).mapv(|z| z * 0.5)
}

/// Random matrix rescaled to unit operator norm.
pub fn random_unit_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Mat {
    let g = random_matrix(rng, d);
    let n = op_norm(&g);
    g.mapv(|z| z / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit_chain(n: usize) -> Volume {
        Volume::qubits(MetricGraph::chain(n).unwrap()).unwrap()
    }

    fn max_abs(m: &Mat) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn embed_identity_and_sigma_z() {
        let v = qubit_chain(2);
        let id = LocalOperator::new(vec![1], pauli::identity(2), "I").unwrap();
        assert_eq!(embed(&id, &v).unwrap(), v.identity());

        let z0 = LocalOperator::pauli("Z", vec![0]).unwrap();
        let e = embed(&z0, &v).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| e[[i, i]].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        assert_eq!(max_abs(&(&e - &Array2::from_diag(&e.diag()))), 0.0);
    }

    #[test]
    fn embed_matches_kronecker_on_spread_support() {
        let v = qubit_chain(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 2);
        let b = random_matrix(&mut rng, 2);
        let op = LocalOperator::new(vec![0, 2], kron(&a, &b), "ab").unwrap();
        let expected = kron(&kron(&a, &pauli::identity(2)), &b);
        assert!(max_abs(&(embed(&op, &v).unwrap() - expected)) < 1e-15);
    }

    #[test]
    fn embed_rejects_bad_supports() {
        let v = qubit_chain(2);
        let op = LocalOperator::pauli("X", vec![2]).unwrap();
        assert!(matches!(embed(&op, &v), Err(Error::SupportOutsideVolume { .. })));
        assert!(LocalOperator::new(vec![1, 0], pauli::identity(4), "").is_err());
        let wrong = LocalOperator::new(vec![0], pauli::identity(4), "").unwrap();
        assert!(matches!(embed(&wrong, &v), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn op_norm_examples() {
        assert_abs_diff_eq!(op_norm(&pauli::identity(5)), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(op_norm(&pauli::pauli_string("XX").unwrap()), 1.0, epsilon = 1e-14);
        let d = Array2::from_diag(&ndarray::array![C64::new(3.0, 0.0), C64::new(0.0, -4.0)]);
        assert_abs_diff_eq!(op_norm(&d), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn pauli_algebra() {
        let c = commutator(&pauli::x(), &pauli::y()).unwrap();
        let expected = pauli::z().mapv(|z| z * C64::new(0.0, 2.0));
        assert!(max_abs(&(c - expected)) < 1e-15);

        let a = random_matrix(&mut ChaCha8Rng::seed_from_u64(3), 2);
        assert_eq!(max_abs(&commutator(&a, &pauli::identity(2)).unwrap()), 0.0);
        assert!(commutator(&a, &pauli::identity(3)).is_err());
        assert!(anticommutator(&a, &pauli::identity(3)).is_err());
    }

    #[test]
    fn disjoint_supports_commute_exactly() {
        let v = qubit_chain(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = LocalOperator::new(vec![0], random_matrix(&mut rng, 2), "a").unwrap();
        let b = LocalOperator::new(vec![1, 2], random_matrix(&mut rng, 4), "b").unwrap();
        let c = commutator(&embed(&a, &v).unwrap(), &embed(&b, &v).unwrap()).unwrap();
        assert!(max_abs(&c) < 1e-14);
    }

    #[test]
    fn minimal_support_examples() {
        let v = qubit_chain(2);
        let z1 = embed(&LocalOperator::pauli("Z", vec![1]).unwrap(), &v).unwrap();
        assert_eq!(minimal_support(&z1, &v, 1e-10).unwrap(), vec![1]);
        assert!(minimal_support(&v.identity(), &v, 1e-10).unwrap().is_empty());

        let v4 = qubit_chain(4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let op = LocalOperator::new(vec![0, 2], random_matrix(&mut rng, 4), "r").unwrap();
        let full = embed(&op, &v4).unwrap();
        assert_eq!(minimal_support(&full, &v4, 1e-10).unwrap(), vec![0, 2]);
    }

    #[test]
    fn minimal_support_qutrits() {
        let g = MetricGraph::chain(2).unwrap();
        let v = Volume::new(g, vec![3, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let op = LocalOperator::new(vec![0], random_matrix(&mut rng, 3), "q").unwrap();
        let full = embed(&op, &v).unwrap();
        assert_eq!(minimal_support(&full, &v, 1e-10).unwrap(), vec![0]);
    }

    #[test]
    fn vectorisation_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (x, a, y) = (
            random_matrix(&mut rng, 3),
            random_matrix(&mut rng, 3),
            random_matrix(&mut rng, 3),
        );
        let v = vec_col(&a);
        assert_eq!(v[1], a[[1, 0]]);
        assert_eq!(v[3], a[[0, 1]]);
        assert_eq!(unvec_col(&v, 3), a);
        let direct = x.dot(&a).dot(&y);
        let via = apply_superop(&sandwich_superop(&x, &y), &a);
        assert!(max_abs(&(direct - via)) < 1e-13);
    }

    #[test]
    fn local_kernels_match_dense_embedding() {
        let g = MetricGraph::chain(4).unwrap();
        let v = Volume::new(g, vec![2, 3, 2, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, v.total_dim());
        for support in [vec![1], vec![0, 2], vec![1, 3], vec![0, 1, 2, 3]] {
            let idx = v.indexer(&support).unwrap();
            let op = random_matrix(&mut rng, idx.local_dim());
            let full = idx.embed(&op);
            assert!(max_abs(&(idx.left_mul(&op, &a) - full.dot(&a))) < 1e-12);
            assert!(max_abs(&(idx.right_mul(&a, &op) - a.dot(&full))) < 1e-12);
        }
    }

    #[test]
    fn expm_known_values() {
        // exp(iθ σ_x) = cos θ 𝟙 + i sin θ σ_x
        let th = 0.7;
        let e = expm(&pauli::x().mapv(|z| z * C64::new(0.0, th)));
        let expected = pauli::identity(2).mapv(|z| z * th.cos())
            + pauli::x().mapv(|z| z * C64::new(0.0, th.sin()));
        assert!(max_abs(&(e - expected)) < 1e-14);
        // Large diagonal argument goes through squaring.
        let d = Array2::from_diag(&ndarray::array![C64::new(-30.0, 0.0), C64::new(2.0, 1.0)]);
        let e = expm(&d);
        assert_abs_diff_eq!(e[[0, 0]].re, (-30f64).exp(), epsilon = 1e-20);
        let z = C64::new(2.0, 1.0).exp();
        assert!((e[[1, 1]] - z).norm() < 1e-12 * z.norm());
    }

    #[test]
    fn weyl_basis_spans() {
        for d in [2, 3] {
            let basis = pauli::weyl_basis(d);
            assert_eq!(basis.len(), d * d - 1);
            for w in &basis {
                let u = w.dot(&dagger(w));
                assert!(max_abs(&(u - pauli::identity(d))) < 1e-14);
                // traceless
                assert!(w.diag().sum().norm() < 1e-14);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn embedding_is_homomorphism_and_isometry(seed in any::<u64>(), site in 0usize..3) {
            let v = qubit_chain(3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, 2);
            let b = random_matrix(&mut rng, 2);
            let la = LocalOperator::new(vec![site], a.clone(), "a").unwrap();
            let lb = LocalOperator::new(vec![site], b.clone(), "b").unwrap();
            let lab = LocalOperator::new(vec![site], a.dot(&b), "ab").unwrap();
            let ea = embed(&la, &v).unwrap();
            let prod = ea.dot(&embed(&lb, &v).unwrap());
            prop_assert!(max_abs(&(embed(&lab, &v).unwrap() - prod)) < 1e-12);
            prop_assert!((op_norm(&ea) - op_norm(&a)).abs() < 1e-12 * op_norm(&a).max(1.0));
        }

        #[test]
        fn op_norm_submultiplicative_and_unitarily_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, 4);
            let b = random_matrix(&mut rng, 4);
            prop_assert!(op_norm(&a.dot(&b)) <= op_norm(&a) * op_norm(&b) * (1.0 + 1e-12));
            let u = expm(&random_hermitian(&mut rng, 4).mapv(|z| z * C64::new(0.0, 1.0)));
            let rotated = u.dot(&a).dot(&dagger(&u));
            prop_assert!((op_norm(&rotated) - op_norm(&a)).abs() < 1e-10 * op_norm(&a));
        }

        #[test]
        fn commutator_bilinear_antisymmetric(seed in any::<u64>(), s in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, 3);
            let b = random_matrix(&mut rng, 3);
            let c = random_matrix(&mut rng, 3);
            let ab = commutator(&a, &b).unwrap();
            prop_assert!(max_abs(&(&ab + &commutator(&b, &a).unwrap())) < 1e-12);
            let lin = commutator(&(&a + &c.mapv(|z| z * s)), &b).unwrap();
            let sum = &ab + &commutator(&c, &b).unwrap().mapv(|z| z * s);
            prop_assert!(max_abs(&(lin - sum)) < 1e-11);
            let sym = anticommutator(&a, &b).unwrap() - anticommutator(&b, &a).unwrap();
            prop_assert!(max_abs(&sym) < 1e-12);
        }
    }
}
