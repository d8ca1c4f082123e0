//! Named generator builders with documented parameters and closed forms.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{op_norm, pauli, random_hermitian, random_matrix, Volume};
use crate::generator::{GeneratorSpec, InteractionTerm, TimeProfile};
use crate::lattice::{enumerate_subsets, DecayFunction};
use crate::{Error, Mat, Result};

/// Model parameters by name; missing entries take the card default.
pub type Params = BTreeMap<String, f64>;

/// Version tag of the random-model sampling procedure. Changing the order
/// or distribution of draws requires a new tag.
pub const RANDOM_MODEL_VERSION: &str = "rd-v1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    /// Rates must be nonnegative.
    pub rate: bool,
    pub description: &'static str,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelCard {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
    pub volume: &'static str,
    pub needs_seed: bool,
    pub needs_decay: bool,
    /// Exact facts usable as test oracles.
    pub closed_form: &'static str,
    /// Which structural properties of the generator the model exercises.
    pub exercises: &'static str,
}

const fn rate(name: &'static str, default: f64, description: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        default,
        rate: true,
        description,
    }
}

const fn coupling(name: &'static str, default: f64, description: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        default,
        rate: false,
        description,
    }
}

static CARDS: [ModelCard; 5] = [
    ModelCard {
        name: "dephasing",
        summary: "On-site dephasing L_x = √γ σ_z, no Hamiltonian.",
        params: &[rate("gamma", 0.5, "dephasing rate γ")],
        volume: "qubit at every site, any graph",
        needs_seed: false,
        needs_decay: false,
        closed_form: "σ_x(t) = e^{−2γt} σ_x, σ_y(t) = e^{−2γt} σ_y, σ_z(t) = σ_z; γ = 0 gives 𝓛 = 0",
        exercises: "purely dissipative, constant, strictly on-site",
    },
    ModelCard {
        name: "amplitude-damping",
        summary: "On-site decay L_x = √γ σ₋ with σ₋ = |0⟩⟨1|, no Hamiltonian.",
        params: &[rate("gamma", 0.5, "decay rate γ")],
        volume: "qubit at every site, any graph",
        needs_seed: false,
        needs_decay: false,
        closed_form: "Heisenberg picture: σ_z(t) = e^{−γt} σ_z + (1 − e^{−γt}) 𝟙, \
                      σ_x(t) = e^{−γt/2} σ_x; every state relaxes to |0⟩⟨0| (σ_z = +1)",
        exercises: "non-normal Lindblad operators, non-unital Schrödinger dynamics",
    },
    ModelCard {
        name: "tfim-dephasing",
        summary: "Ising coupling J σ_zσ_z on distance-1 pairs, transverse field h σ_x and \
                  dephasing √γ σ_z on every site.",
        params: &[
            coupling("J", 1.0, "Ising coupling"),
            coupling("h", 1.0, "transverse field"),
            rate("gamma", 0.1, "dephasing rate γ"),
        ],
        volume: "qubit at every site; pairs at distance 1",
        needs_seed: false,
        needs_decay: false,
        closed_form: "h = γ = 0: every σ_z is conserved",
        exercises: "interacting Hamiltonian part with on-site dissipation, constant",
    },
    ModelCard {
        name: "driven-xy",
        summary: "XY coupling J(σ_xσ_x + σ_yσ_y) on distance-1 pairs with profile \
                  1 + a·sin(ωt), plus constant dephasing √γ σ_z on every site.",
        params: &[
            coupling("J", 1.0, "XY coupling"),
            coupling("amplitude", 0.5, "drive amplitude a"),
            coupling("omega", 2.0, "drive frequency ω"),
            rate("gamma", 0.1, "dephasing rate γ"),
        ],
        volume: "qubit at every site; pairs at distance 1",
        needs_seed: false,
        needs_decay: false,
        closed_form: "total magnetisation Σ_x σ_z^x is conserved",
        exercises: "time-dependent generator with a Lipschitz profile",
    },
    ModelCard {
        name: "random-decaying",
        summary: "One term on every pair {x, y}: Φ = s·F_μ(d)·H/‖H‖ with H Gaussian \
                  Hermitian, L = √(γ F_μ(d))·G/‖G‖ with G complex Gaussian. Needs a seed \
                  and a decay function; draws follow the rd-v1 procedure.",
        params: &[
            coupling("strength", 1.0, "Hamiltonian scale s"),
            rate("gamma", 0.2, "dissipation scale γ"),
        ],
        volume: "any site dimensions, any graph",
        needs_seed: true,
        needs_decay: true,
        closed_form: "cb norm of the {x,y} term ≤ (2|s| + 2γ)·F_μ(d(x,y)), so the interaction \
                      norm is bounded uniformly in the volume",
        exercises: "long-range interactions decaying exactly as F_μ",
    },
];

pub fn cards() -> &'static [ModelCard] {
    &CARDS
}

pub fn card(name: &str) -> Result<&'static ModelCard> {
    CARDS
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::UnknownModel(name.to_string()))
}

impl ModelCard {
    /// Defaults merged with `params`, after domain checks.
    pub fn resolve(&self, params: &Params) -> Result<Params> {
        for key in params.keys() {
            if !self.params.iter().any(|p| p.name == key) {
                return Err(Error::InvalidParameter {
                    name: key.clone(),
                    reason: format!("not a parameter of {}", self.name),
                });
            }
        }
        let mut out = Params::new();
        for p in self.params {
            let v = params.get(p.name).copied().unwrap_or(p.default);
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: p.name.into(),
                    reason: format!("must be finite, got {v}"),
                });
            }
            if p.rate && v < 0.0 {
                return Err(Error::InvalidParameter {
                    name: p.name.into(),
                    reason: format!("rates must be ≥ 0, got {v}"),
                });
            }
            out.insert(p.name.to_string(), v);
        }
        Ok(out)
    }

    /// Human-readable description for `models show`.
    pub fn describe(&self) -> String {
        let mut s = format!("{}\n  {}\n  parameters:\n", self.name, self.summary);
        for p in self.params {
            let kind = if p.rate { ", ≥ 0" } else { "" };
            s += &format!("    {} = {} ({}{kind})\n", p.name, p.default, p.description);
        }
        s += &format!("  volume: {}\n", self.volume);
        if self.needs_seed {
            s += "  requires: seed\n";
        }
        if self.needs_decay {
            s += "  requires: decay function\n";
        }
        s += &format!("  closed form: {}\n  exercises: {}\n", self.closed_form, self.exercises);
        s
    }
}

fn require_qubits(name: &str, volume: &Volume) -> Result<()> {
    if volume.site_dims().iter().any(|&d| d != 2) {
        return Err(Error::DimensionMismatch(format!(
            "{name} needs a qubit at every site"
        )));
    }
    Ok(())
}

fn scaled(m: Mat, s: f64) -> Mat {
    m.mapv(|z| z * s)
}

fn nearest_pairs(volume: &Volume) -> Vec<[usize; 2]> {
    let g = volume.graph();
    let n = volume.n_sites();
    (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| [x, y]))
        .filter(|&[x, y]| g.dist(x, y) == 1.0)
        .collect()
}

fn onsite(volume: &Volume, phi: Mat, lindblads: Vec<Mat>, label: &str) -> Result<Vec<InteractionTerm>> {
    (0..volume.n_sites())
        .map(|x| {
            InteractionTerm::new(
                vec![x],
                phi.clone(),
                lindblads.clone(),
                TimeProfile::Constant,
                label,
            )
        })
        .collect()
}

/// Build the named model on `volume`. `decay` is attached to the generator when
/// given and is required by models that scale their terms with `F_μ`.
pub fn build(
    name: &str,
    params: &Params,
    volume: Volume,
    decay: Option<DecayFunction>,
    seed: Option<u64>,
) -> Result<GeneratorSpec> {
    let card = card(name)?;
    let p = card.resolve(params)?;
    let zero = Mat::zeros((2, 2));
    let terms = match name {
        "dephasing" => {
            require_qubits(name, &volume)?;
            onsite(&volume, zero, vec![scaled(pauli::z(), p["gamma"].sqrt())], "dephasing")?
        }
        "amplitude-damping" => {
            require_qubits(name, &volume)?;
            onsite(
                &volume,
                zero,
                vec![scaled(pauli::sigma_minus(), p["gamma"].sqrt())],
                "decay",
            )?
        }
        "tfim-dephasing" => {
            require_qubits(name, &volume)?;
            let zz = scaled(pauli::pauli_string("ZZ")?, p["J"]);
            let mut terms = nearest_pairs(&volume)
                .into_iter()
                .map(|pair| {
                    InteractionTerm::new(pair.to_vec(), zz.clone(), vec![], TimeProfile::Constant, "zz")
                })
                .collect::<Result<Vec<_>>>()?;
            terms.extend(onsite(
                &volume,
                scaled(pauli::x(), p["h"]),
                vec![scaled(pauli::z(), p["gamma"].sqrt())],
                "field+dephasing",
            )?);
            terms
        }
        "driven-xy" => {
            require_qubits(name, &volume)?;
            let xy = scaled(pauli::pauli_string("XX")? + pauli::pauli_string("YY")?, p["J"]);
            let profile = TimeProfile::Sinusoidal {
                offset: 1.0,
                amplitude: p["amplitude"],
                omega: p["omega"],
                phase: 0.0,
            };
            let mut terms = nearest_pairs(&volume)
                .into_iter()
                .map(|pair| InteractionTerm::new(pair.to_vec(), xy.clone(), vec![], profile.clone(), "xy"))
                .collect::<Result<Vec<_>>>()?;
            terms.extend(onsite(
                &volume,
                zero,
                vec![scaled(pauli::z(), p["gamma"].sqrt())],
                "dephasing",
            )?);
            terms
        }
        "random-decaying" => {
            let seed = seed.ok_or_else(|| Error::InvalidParameter {
                name: "seed".into(),
                reason: "random-decaying needs an explicit seed".into(),
            })?;
            let decay = decay.as_ref().ok_or(Error::MuUnset)?;
            random_decaying_terms(&volume, decay, p["strength"], p["gamma"], seed)?
        }
        _ => unreachable!("card lookup succeeded"),
    };
    let spec = GeneratorSpec::new(volume, terms)?;
    Ok(match decay {
        Some(d) => spec.with_decay(d),
        None => spec,
    })
}

/// The rd-v1 procedure: one ChaCha8 stream seeded with `seed`; pairs in
/// [`enumerate_subsets`] order; per pair first the Hermitian draw, then the
/// Lindblad draw (always drawn, dropped when `γ = 0`).
fn random_decaying_terms(
    volume: &Volume,
    decay: &DecayFunction,
    strength: f64,
    gamma: f64,
    seed: u64,
) -> Result<Vec<InteractionTerm>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = volume.graph();
    let all: Vec<usize> = (0..volume.n_sites()).collect();
    let n = volume.n_sites();
    let family = enumerate_subsets(graph, graph.diameter(&all), 2, n * (n + 1) / 2 + 1)?;
    let mut terms = Vec::new();
    for pair in family.subsets.into_iter().filter(|z| z.len() == 2) {
        let k = volume.local_dim(&pair)?;
        let f = decay.f_mu(graph.dist(pair[0], pair[1]))?;
        let h = random_hermitian(&mut rng, k);
        let g = random_matrix(&mut rng, k);
        let phi = scaled(h.clone(), strength * f / op_norm(&h));
        let lindblads = if gamma > 0.0 {
            vec![scaled(g.clone(), (gamma * f).sqrt() / op_norm(&g))]
        } else {
            vec![]
        };
        terms.push(InteractionTerm::new(pair, phi, lindblads, TimeProfile::Constant, "random")?);
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{embed, LocalOperator};
    use crate::generator::{check_hypotheses, HypothesisOptions, PsiNormOptions};
    use crate::lattice::{DecayBase, MetricGraph};
    use crate::propagator::evolve;
    use crate::C64;
    use rand::Rng;

    fn chain(n: usize) -> Volume {
        Volume::qubits(MetricGraph::chain(n).unwrap()).unwrap()
    }

    fn decay_on(v: &Volume) -> DecayFunction {
        DecayFunction::new(DecayBase::PowerLaw { alpha: 3.0 }, 0.5, v.graph()).unwrap()
    }

    fn max_abs(m: &Mat) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn build_default(name: &str, v: Volume) -> GeneratorSpec {
        let d = decay_on(&v);
        build(name, &Params::new(), v, Some(d), Some(42)).unwrap()
    }

    #[test]
    fn registry() {
        let names: Vec<_> = cards().iter().map(|c| c.name).collect();
        assert_eq!(
            names,
            ["dephasing", "amplitude-damping", "tfim-dephasing", "driven-xy", "random-decaying"]
        );
        assert!(matches!(card("ising"), Err(Error::UnknownModel(_))));
        assert!(card("driven-xy").unwrap().describe().contains("omega = 2"));
    }

    #[test]
    fn parameter_domain() {
        let v = chain(2);
        let neg: Params = [("gamma".to_string(), -0.1)].into();
        assert!(matches!(
            build("dephasing", &neg, v.clone(), None, None),
            Err(Error::InvalidParameter { .. })
        ));
        let unknown: Params = [("kappa".to_string(), 1.0)].into();
        assert!(build("dephasing", &unknown, v.clone(), None, None).is_err());
        let neg_j: Params = [("J".to_string(), -1.0)].into();
        assert!(build("tfim-dephasing", &neg_j, v.clone(), None, None).is_ok());
        assert!(build("random-decaying", &Params::new(), v.clone(), Some(decay_on(&v)), None).is_err());
        assert!(matches!(
            build("random-decaying", &Params::new(), v.clone(), None, Some(1)),
            Err(Error::MuUnset)
        ));
        let qutrit = Volume::new(MetricGraph::chain(1).unwrap(), vec![3]).unwrap();
        assert!(build("dephasing", &Params::new(), qutrit, None, None).is_err());
    }

    #[test]
    fn zero_rate_dephasing_is_trivial() {
        let v = chain(2);
        let p: Params = [("gamma".to_string(), 0.0)].into();
        let spec = build("dephasing", &p, v, None, None).unwrap();
        assert_eq!(max_abs(&spec.assemble(0.3).unwrap().matrix), 0.0);
    }

    #[test]
    fn every_card_passes_hypotheses() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let times: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..5.0)).collect();
        for c in cards() {
            let spec = build_default(c.name, chain(3));
            let r = check_hypotheses(&spec, &times, HypothesisOptions::default()).unwrap();
            assert!(r.passes(1e-10), "{}: {r:?}", c.name);
        }
    }

    #[test]
    fn dephasing_closed_form() {
        let spec = build_default("dephasing", chain(2));
        let x = LocalOperator::pauli("X", vec![1]).unwrap();
        let got = evolve(&spec, &x, 0.0, 0.8, 1e-12).unwrap();
        let want = scaled(embed(&x, spec.volume()).unwrap(), (-2.0f64 * 0.5 * 0.8).exp());
        assert!(max_abs(&(got - want)) < 1e-10);
    }

    #[test]
    fn amplitude_damping_closed_form() {
        let spec = build_default("amplitude-damping", chain(1));
        let t: f64 = 1.3;
        let e = (-0.5 * t).exp();
        let z = LocalOperator::pauli("Z", vec![0]).unwrap();
        let want = scaled(pauli::z(), e) + scaled(pauli::identity(2), 1.0 - e);
        assert!(max_abs(&(evolve(&spec, &z, 0.0, t, 1e-12).unwrap() - want)) < 1e-10);
        let x = LocalOperator::pauli("X", vec![0]).unwrap();
        let want = scaled(pauli::x(), (-0.25 * t).exp());
        assert!(max_abs(&(evolve(&spec, &x, 0.0, t, 1e-12).unwrap() - want)) < 1e-10);
    }

    #[test]
    fn driven_xy_conserves_magnetisation() {
        let spec = build_default("driven-xy", chain(3));
        let v = spec.volume();
        let m: Mat = (0..3)
            .map(|x| embed(&LocalOperator::pauli("Z", vec![x]).unwrap(), v).unwrap())
            .fold(Mat::zeros((8, 8)), |a, b| a + b);
        for t in [0.0, 0.7, 1.9] {
            assert!(max_abs(&spec.apply(t, &m).unwrap()) < 1e-13);
        }
        assert!(!spec.is_time_independent());
    }

    #[test]
    fn tfim_without_field_conserves_sigma_z() {
        let p: Params = [("h".to_string(), 0.0), ("gamma".to_string(), 0.0)].into();
        let spec = build("tfim-dephasing", &p, chain(3), None, None).unwrap();
        let z = embed(&LocalOperator::pauli("Z", vec![1]).unwrap(), spec.volume()).unwrap();
        assert!(max_abs(&spec.apply(0.0, &z).unwrap()) < 1e-14);
        assert_eq!(spec.terms().len(), 2 + 3);
    }

    #[test]
    fn random_model_is_deterministic_and_scaled() {
        let a = build_default("random-decaying", chain(4));
        let b = build_default("random-decaying", chain(4));
        assert_eq!(a.terms(), b.terms());
        let v = chain(4);
        let other = build("random-decaying", &Params::new(), v.clone(), Some(decay_on(&v)), Some(43)).unwrap();
        assert_ne!(a.terms(), other.terms());
        assert_eq!(a.terms().len(), 6);
        let decay = a.decay().unwrap();
        for t in a.terms() {
            let f = decay.f_mu(a.volume().graph().dist(t.support[0], t.support[1])).unwrap();
            assert!((op_norm(&t.phi) - f).abs() < 1e-12 * f);
            assert!((op_norm(&t.lindblads[0]).powi(2) - 0.2 * f).abs() < 1e-12 * f);
        }
        // First draw of the stream fixes the rd-v1 layout.
        assert_ne!(a.terms()[0].phi[[0, 1]], C64::new(0.0, 0.0));
    }

    #[test]
    fn random_model_norm_bounded_across_volumes() {
        let mut values = Vec::new();
        for n in [3, 5, 7] {
            let spec = build_default("random-decaying", chain(n));
            let p = spec.psi_interaction_norm(1.0, PsiNormOptions::default()).unwrap();
            assert!(p.rigorous);
            values.push(p.value);
        }
        let f_norm = decay_on(&chain(7)).f_norm().certified;
        let cap = (2.0 + 2.0 * 0.2) * f_norm.max(1.0);
        assert!(values.iter().all(|&v| v.is_finite() && v <= cap), "{values:?} vs {cap}");
        assert!(values.windows(2).all(|w| w[1] <= w[0] * 1.5), "{values:?}");
    }
}
