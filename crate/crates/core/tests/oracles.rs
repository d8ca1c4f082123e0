//! Dynamics checked against solutions derived by hand or computed along an
//! unrelated route (Schrödinger picture, explicit unitaries, direct sums).

use lrdyn::algebra::{dagger, embed, expm, op_norm, pauli, LocalOperator, Volume};
use lrdyn::generator::{GeneratorSpec, InteractionTerm, TimeProfile};
use lrdyn::lattice::{DecayBase, DecayFunction, MetricGraph};
use lrdyn::lrbound::{domination_sweep, LRCertificate};
use lrdyn::models::{build, Params};
use lrdyn::propagator::{choi_check, evolve, propagator_matrix};
use lrdyn::thermolimit::{volume_difference, VolumeSequence};
use lrdyn::{Mat, C64};
use ndarray::array;

const TOL: f64 = 1e-12;

fn max_abs(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn qubits(n: usize) -> Volume {
    Volume::qubits(MetricGraph::chain(n).unwrap()).unwrap()
}

fn trace(m: &Mat) -> C64 {
    m.diag().sum()
}

#[test]
fn amplitude_damping_against_schrodinger_master_equation() {
    // ρ' = LρL† − ½{L†L, ρ} with L = √γ|0⟩⟨1| solves to
    // ρ11(t) = e^{−γt}ρ11, ρ00(t) = 1 − ρ11(t), ρ01(t) = e^{−γt/2}ρ01.
    let gamma: f64 = 0.5;
    let t: f64 = 0.9;
    let spec = build("amplitude-damping", &Params::new(), qubits(1), None, None).unwrap();
    let rho = array![[c(0.3), C64::new(0.1, -0.2)], [C64::new(0.1, 0.2), c(0.7)]];
    let decay = (-gamma * t).exp();
    let rho_t = array![
        [c(1.0) - rho[[1, 1]] * decay, rho[[0, 1]] * decay.sqrt()],
        [rho[[1, 0]] * decay.sqrt(), rho[[1, 1]] * decay]
    ];
    for letter in ["X", "Y", "Z"] {
        let a = LocalOperator::pauli(letter, vec![0]).unwrap();
        let heis = evolve(&spec, &a, 0.0, t, TOL).unwrap();
        let lhs = trace(&rho.dot(&heis));
        let rhs = trace(&rho_t.dot(&a.matrix));
        assert!((lhs - rhs).norm() < 1e-10, "{letter}: {lhs} vs {rhs}");
    }
}

#[test]
fn precession_matches_unitary_conjugation() {
    // Φ = (ω/2)σ_z, so γ_t(A) = U†AU with U = diag(e^{−iωt/2}, e^{iωt/2}).
    let omega = 1.7;
    let t = 2.3;
    let vol = qubits(1);
    let term = InteractionTerm::new(
        vec![0],
        pauli::z().mapv(|z| z * (omega / 2.0)),
        vec![],
        TimeProfile::Constant,
        "field",
    )
    .unwrap();
    let spec = GeneratorSpec::new(vol, vec![term]).unwrap();
    let u = array![
        [C64::from_polar(1.0, -omega * t / 2.0), c(0.0)],
        [c(0.0), C64::from_polar(1.0, omega * t / 2.0)]
    ];
    let x = LocalOperator::pauli("X", vec![0]).unwrap();
    let want = dagger(&u).dot(&x.matrix).dot(&u);
    let got = evolve(&spec, &x, 0.0, t, TOL).unwrap();
    assert!(max_abs(&(got - &want)) < 1e-10);
    // Closed form cos(ωt)σ_x − sin(ωt)σ_y.
    let closed = pauli::x().mapv(|z| z * (omega * t).cos()) - pauli::y().mapv(|z| z * (omega * t).sin());
    assert!(max_abs(&(want - closed)) < 1e-14);
}

#[test]
fn ising_pair_matches_diagonal_unitary() {
    // Φ = J σ_zσ_z on two qubits; U = e^{−iΦt} is diagonal.
    let j = 0.8;
    let t = 1.1;
    let spec = build(
        "tfim-dephasing",
        &[("J".into(), j), ("h".into(), 0.0), ("gamma".into(), 0.0)].into(),
        qubits(2),
        None,
        None,
    )
    .unwrap();
    let signs = [1.0, -1.0, -1.0, 1.0];
    let u = Mat::from_diag(&ndarray::Array1::from_iter(
        signs.iter().map(|s| C64::from_polar(1.0, -j * s * t)),
    ));
    let a = LocalOperator::pauli("X", vec![0]).unwrap();
    let full = embed(&a, spec.volume()).unwrap();
    let want = dagger(&u).dot(&full).dot(&u);
    assert!(max_abs(&(evolve(&spec, &a, 0.0, t, TOL).unwrap() - want)) < 1e-10);
}

#[test]
fn time_dependent_precession_integrates_the_profile() {
    // With Φ(t) = f(t)(ω/2)σ_z the phase is ω∫f.
    let omega = 1.0;
    let (a, w) = (0.5, 2.0);
    let t: f64 = 1.4;
    let profile = TimeProfile::Sinusoidal {
        offset: 1.0,
        amplitude: a,
        omega: w,
        phase: 0.0,
    };
    let term =
        InteractionTerm::new(vec![0], pauli::z().mapv(|z| z * (omega / 2.0)), vec![], profile, "f")
            .unwrap();
    let spec = GeneratorSpec::new(qubits(1), vec![term]).unwrap();
    let phase = omega * (t + a * (1.0 - (w * t).cos()) / w);
    let want = pauli::x().mapv(|z| z * phase.cos()) - pauli::y().mapv(|z| z * phase.sin());
    let x = LocalOperator::pauli("X", vec![0]).unwrap();
    assert!(max_abs(&(evolve(&spec, &x, 0.0, t, TOL).unwrap() - want)) < 1e-9);
}

#[test]
fn constant_propagator_matches_expm_of_explicit_superoperator() {
    // Superoperator written out from Kronecker products, independent of the
    // generator assembly. Column stacking maps X·A·Y to Yᵀ⊗X, so the
    // generator is 𝟙⊗G_l + G_rᵀ⊗𝟙 + Lᵀ⊗L* with G_l,r = ±iΦ − ½L*L.
    let phi = pauli::x().mapv(|z| z * 0.6) + pauli::z().mapv(|z| z * 0.2);
    let l = pauli::sigma_minus().mapv(|z| z * 0.7);
    let term = InteractionTerm::new(vec![0], phi.clone(), vec![l.clone()], TimeProfile::Constant, "t").unwrap();
    let spec = GeneratorSpec::new(qubits(1), vec![term]).unwrap();
    let id = pauli::identity(2);
    let ll = dagger(&l).dot(&l).mapv(|z| z * 0.5);
    let i = C64::new(0.0, 1.0);
    let gl = phi.mapv(|z| z * i) - &ll;
    let gr = phi.mapv(|z| z * -i) - &ll;
    let sup = ndarray::linalg::kron(&id, &gl)
        + ndarray::linalg::kron(&gr.t().to_owned(), &id)
        + ndarray::linalg::kron(&l.t().to_owned(), &dagger(&l));
    let t = 1.7;
    let want = expm(&sup.mapv(|z| z * t));
    let p = propagator_matrix(&spec, 0.0, t, TOL).unwrap();
    assert!(op_norm(&(p.matrix().unwrap() - want)) < 1e-9);
    assert!(choi_check(&p).unwrap() > -1e-10);
}

#[test]
fn depolarising_choi_spectrum() {
    // L_k = √(κ/4)σ_k (k = x, y, z) gives the depolarising channel with
    // survival p = e^{−κt}; its Choi matrix has eigenvalues (1+3p)/2 once
    // and (1−p)/2 three times (trace 2).
    let kappa: f64 = 0.8;
    let t: f64 = 0.6;
    let ls = [pauli::x(), pauli::y(), pauli::z()]
        .map(|m| m.mapv(|z| z * (kappa / 4.0).sqrt()))
        .to_vec();
    let term = InteractionTerm::new(vec![0], Mat::zeros((2, 2)), ls, TimeProfile::Constant, "dep").unwrap();
    let spec = GeneratorSpec::new(qubits(1), vec![term]).unwrap();
    let p = (-kappa * t).exp();
    let prop = propagator_matrix(&spec, 0.0, t, TOL).unwrap();
    let min = choi_check(&prop).unwrap();
    assert!((min - (1.0 - p) / 2.0).abs() < 1e-9, "{min}");
    // Heisenberg action on σ_x is multiplication by p.
    let x = LocalOperator::pauli("X", vec![0]).unwrap();
    let got = evolve(&spec, &x, 0.0, t, TOL).unwrap();
    assert!(max_abs(&(got - pauli::x().mapv(|z| z * p))) < 1e-10);
}

#[test]
fn trivial_generator_gives_zero_commutators_off_support() {
    let vol = qubits(4);
    let decay = DecayFunction::new(DecayBase::PowerLaw { alpha: 2.0 }, 1.0, vol.graph()).unwrap();
    let spec = build("dephasing", &[("gamma".into(), 0.0)].into(), vol, Some(decay), None).unwrap();
    let cert = LRCertificate::new(&spec, 1.0, Default::default()).unwrap();
    let rows = domination_sweep(&spec, &cert, &[0.0, 0.5, 1.0], TOL).unwrap();
    assert_eq!(rows.len(), 3 * 12 * 12);
    for r in &rows {
        if r.overlapping() {
            assert!(r.empirical == 0.0 || (r.empirical - 2.0).abs() < 1e-12);
        } else {
            assert_eq!(r.empirical, 0.0);
        }
    }
}

#[test]
fn on_site_dynamics_has_no_finite_size_effect() {
    let vol = qubits(5);
    let decay = DecayFunction::new(DecayBase::PowerLaw { alpha: 2.0 }, 1.0, vol.graph()).unwrap();
    let spec = build("amplitude-damping", &Params::new(), vol, Some(decay), None).unwrap();
    let seq = VolumeSequence::centered_chain(spec, &[1, 3, 5]).unwrap();
    let a = LocalOperator::pauli("Y", vec![2]).unwrap();
    let d = volume_difference(&seq, &a, 2, 0, 0.0, 1.0, TOL).unwrap();
    assert!(d < 1e-10, "{d}");
}
