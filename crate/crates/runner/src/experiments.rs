//! The five experiment kinds. Each returns a table for `results.csv`,
//! assertions, structured results for `summary.json` and an optional chart.

use lrdyn::algebra::LocalOperator;
use lrdyn::generator::{check_hypotheses, GeneratorSpec, HypothesisOptions, PsiNormOptions};
use lrdyn::lattice::FamilyTag;
use lrdyn::lrbound::{count_violations, domination_sweep, lightcone_scan, LRCertificate};
use lrdyn::propagator::euler_report;
use lrdyn::thermolimit::{cauchy_sweep, VolumeSequence};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::artifacts::{line_chart, Assertion, Axes, Cell, Series, Table};
use crate::config::{Experiment, Prepared, SiteOperator};
use crate::RunError;

pub struct Outcome {
    pub table: Table,
    pub assertions: Vec<Assertion>,
    pub results: Value,
    pub certificate: Option<Value>,
    pub chart: Option<String>,
}

pub fn run(p: &Prepared) -> Result<Outcome, RunError> {
    match p.config.experiment {
        Experiment::CheckHypotheses => hypotheses(p),
        Experiment::EulerConvergence => euler(p),
        Experiment::LrScan => lr_scan(p),
        Experiment::BoundDomination => domination(p),
        Experiment::ThermoSweep => thermo(p),
    }
}

fn certificate(spec: &GeneratorSpec, t_max: f64) -> Result<(LRCertificate, Value), RunError> {
    let cert = LRCertificate::new(spec, t_max, PsiNormOptions::default())?;
    let d = cert.decay();
    let v = json!({
        "mu": cert.mu,
        "base": d.base(),
        "f_norm": d.f_norm(),
        "c": d.c_const(),
        "c_mu": d.c_mu(),
        "psi_norm": cert.psi_norm,
        "psi_rigorous": cert.psi_rigorous,
        "velocity": cert.velocity,
        "t_max": cert.t_max,
    });
    Ok((cert, v))
}

fn observable(op: &SiteOperator, default_site: usize, n: usize) -> Result<LocalOperator, RunError> {
    let site = op.site.unwrap_or(default_site);
    if site >= n {
        return Err(RunError::Config(format!("observable site {site} is outside the {n}-site volume")));
    }
    if op.pauli.chars().count() != 1 {
        return Err(RunError::Config(format!("observable must be one Pauli letter, got {:?}", op.pauli)));
    }
    LocalOperator::pauli(&op.pauli, vec![site]).map_err(|e| RunError::Config(format!("observable: {e}")))
}

fn hypotheses(p: &Prepared) -> Result<Outcome, RunError> {
    let grid = p.config.times.grid();
    let opts = HypothesisOptions {
        probes: p.config.check.probes,
        seed: p.config.seed.unwrap_or(0),
    };
    let per_time = grid
        .par_iter()
        .map(|&t| check_hypotheses(&p.spec, &[t], opts))
        .collect::<Result<Vec<_>, _>>()?;
    let overall = check_hypotheses(&p.spec, &grid, opts)?;
    let mut table = Table::new(&[
        "time",
        "unit_defect",
        "hermiticity_defect",
        "min_dissipativity",
        "dissipativity_identity_defect",
    ]);
    for (t, r) in grid.iter().zip(&per_time) {
        table.push(vec![
            Cell::F(*t),
            Cell::F(r.unit_defect),
            Cell::F(r.hermiticity_defect),
            Cell::F(r.min_dissipativity),
            Cell::F(r.dissipativity_identity_defect),
        ]);
    }
    let tol = p.assertion_tol;
    let assertions = vec![
        Assertion::check("unitality ‖𝓛(t)(𝟙)‖ ≤ tol", overall.unit_defect <= tol, format!("{:e}", overall.unit_defect)),
        Assertion::check(
            "Hermiticity preservation",
            overall.hermiticity_defect <= tol,
            format!("{:e}", overall.hermiticity_defect),
        ),
        Assertion::check(
            "complete dissipativity ≥ −tol",
            overall.min_dissipativity >= -tol,
            format!("{:e}", overall.min_dissipativity),
        ),
        Assertion::check(
            "commutator-sum identity",
            overall.dissipativity_identity_defect <= tol,
            format!("{:e}", overall.dissipativity_identity_defect),
        ),
    ];
    Ok(Outcome {
        table,
        assertions,
        results: json!({
            "unit_defect": overall.unit_defect,
            "hermiticity_defect": overall.hermiticity_defect,
            "min_dissipativity": overall.min_dissipativity,
            "dissipativity_identity_defect": overall.dissipativity_identity_defect,
            "continuity_modulus": overall.continuity_modulus,
            "continuity_exact": overall.continuity_exact,
            "tolerance": tol,
        }),
        certificate: None,
        chart: None,
    })
}

/// Accepted range of `error(n)/error(2n)` for first-order convergence.
const HALVING: (f64, f64) = (1.8, 2.2);

fn euler(p: &Prepared) -> Result<Outcome, RunError> {
    let t = p.config.times.stop;
    if !(t > 0.0) {
        return Err(RunError::Config("times.stop: the Euler time must be positive".into()));
    }
    let mut ns: Vec<usize> = p.config.euler.steps.iter().flat_map(|&n| [n, 2 * n]).collect();
    ns.sort_unstable();
    ns.dedup();
    let reports = ns
        .par_iter()
        .map(|&n| euler_report(&p.spec, n, t, p.integrator_tol))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&[
        "n", "t", "error", "bound", "ratio", "eps_n", "eps_exact", "m_t", "m_rigorous", "d", "step_condition",
    ]);
    for r in &reports {
        table.push(vec![
            Cell::I(r.n),
            Cell::F(r.t),
            Cell::F(r.error),
            Cell::F(r.bound),
            Cell::F(r.error / r.bound),
            Cell::F(r.eps_n),
            Cell::B(r.eps_exact),
            Cell::F(r.m_t),
            Cell::B(r.m_rigorous),
            Cell::F(r.d),
            Cell::B(r.assumption_s),
        ]);
    }
    let by_n = |n: usize| reports.iter().find(|r| r.n == n).expect("computed");
    let mut assertions: Vec<Assertion> = reports
        .iter()
        .map(|r| {
            Assertion::check(
                format!("error ≤ bound at n = {}", r.n),
                r.holds(),
                format!("{:e} vs {:e}", r.error, r.bound),
            )
        })
        .collect();
    let constant = p.spec.is_time_independent();
    for &n in &p.config.euler.steps {
        let name = format!("error halves from n = {n} to {}", 2 * n);
        if !constant {
            assertions.push(Assertion::skipped(name, "asserted for constant generators only"));
            continue;
        }
        let q = by_n(n).error / by_n(2 * n).error;
        assertions.push(Assertion::check(name, q >= HALVING.0 && q <= HALVING.1, format!("ratio {q:.4}")));
    }
    let chart = line_chart(
        Axes {
            title: "Euler product error",
            x_label: "n",
            y_label: "operator-norm error",
            log_x: true,
            log_y: true,
        },
        &[
            Series {
                name: "measured".into(),
                points: reports.iter().map(|r| (r.n as f64, r.error)).collect(),
            },
            Series {
                name: "bound".into(),
                points: reports.iter().map(|r| (r.n as f64, r.bound)).collect(),
            },
        ],
    );
    Ok(Outcome {
        table,
        assertions,
        results: json!({
            "t": t,
            "time_independent": constant,
            "certified": reports.iter().all(|r| r.certified()),
            "m_t": reports.first().map(|r| r.m_t),
        }),
        certificate: None,
        chart: Some(chart),
    })
}

fn lr_scan(p: &Prepared) -> Result<Outcome, RunError> {
    let spec = &p.spec;
    let vol = spec.volume();
    let times = p.config.times.grid();
    let t_max = *times.last().expect("≥ 2 points");
    let b = observable(&p.config.scan.observable, 0, vol.n_sites())?;
    let (cert, cert_json) = certificate(spec, t_max)?;
    let sites: Vec<usize> = (0..vol.n_sites()).collect();
    let scan = lightcone_scan(spec, &cert, &b, &sites, &times, p.config.scan.theta, p.integrator_tol)?;
    let graph = vol.graph();
    let mut table = Table::new(&["site", "distance", "time", "empirical", "bound_sum", "bound_exp", "ratio"]);
    for r in &scan.rows {
        table.push(vec![
            Cell::I(r.site),
            Cell::F(graph.set_distance(&[r.site], &b.support)),
            Cell::F(r.time),
            Cell::F(r.empirical),
            Cell::F(r.bound_sum),
            Cell::F(r.bound_exp),
            Cell::F(r.ratio),
        ]);
    }
    let decay = spec.decay().expect("prepared specs carry a decay function");
    let velocities = p
        .config
        .scan
        .mu_grid
        .iter()
        .map(|&mu| -> Result<(f64, f64), RunError> {
            let d = decay.with_mu(mu, graph)?;
            let c = LRCertificate::new(&spec.clone().with_decay(d), t_max, PsiNormOptions::default())?;
            Ok((mu, c.velocity))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let disjoint_violations = scan
        .rows
        .iter()
        .filter(|r| !b.support.contains(&r.site) && r.empirical > r.bound_sum)
        .count();
    let mut assertions = vec![
        Assertion::check(
            "empirical ≤ sum bound on cells disjoint from B",
            disjoint_violations == 0,
            format!("{disjoint_violations} violations"),
        ),
        Assertion::check(
            "front arrival nondecreasing in distance",
            scan.front_monotone(),
            format!(
                "{:?}",
                scan.fronts.iter().map(|f| (f.distance, f.arrival)).collect::<Vec<_>>()
            ),
        ),
    ];
    for &(mu, v) in &velocities {
        let name = format!("v_emp ≤ v at μ = {mu}");
        assertions.push(match scan.v_emp {
            Some(ve) => Assertion::check(name, ve <= v, format!("{ve:.6} vs {v:.6}")),
            None => Assertion::skipped(name, "front reached fewer than two distances"),
        });
    }
    let series = sites
        .iter()
        .map(|&x| Series {
            name: format!("site {x}"),
            points: scan.rows.iter().filter(|r| r.site == x).map(|r| (r.time, r.empirical)).collect(),
        })
        .collect::<Vec<_>>();
    let chart = line_chart(
        Axes {
            title: "‖[σ_x, B(t)]‖ per site",
            x_label: "t",
            y_label: "commutator norm",
            log_x: false,
            log_y: true,
        },
        &series,
    );
    Ok(Outcome {
        table,
        assertions,
        results: json!({
            "observable": {"pauli": b.label, "site": b.support[0]},
            "theta_relative": p.config.scan.theta,
            "theta_absolute": scan.theta,
            "fronts": scan.fronts.iter().map(|f| json!({"site": f.site, "distance": f.distance, "arrival": f.arrival})).collect::<Vec<_>>(),
            "v_emp": scan.v_emp,
            "velocities": velocities.iter().map(|(mu, v)| json!({"mu": mu, "velocity": v})).collect::<Vec<_>>(),
            "max_ratio": scan.max_ratio(),
        }),
        certificate: Some(cert_json),
        chart: Some(chart),
    })
}

fn domination(p: &Prepared) -> Result<Outcome, RunError> {
    let spec = &p.spec;
    let times = p.config.times.grid();
    let (cert, cert_json) = certificate(spec, *times.last().expect("≥ 2 points"))?;
    let rows = domination_sweep(spec, &cert, &times, p.integrator_tol)?;
    let counts = count_violations(&rows);
    let mut table = Table::new(&[
        "b_site",
        "b_pauli",
        "k_site",
        "k_pauli",
        "time",
        "empirical",
        "bound_sum",
        "bound_corrected",
        "overlapping",
    ]);
    for r in &rows {
        table.push(vec![
            Cell::I(r.b_site),
            Cell::S(r.b_pauli.to_string()),
            Cell::I(r.k_site),
            Cell::S(r.k_pauli.to_string()),
            Cell::F(r.time),
            Cell::F(r.empirical),
            Cell::F(r.bound_sum),
            Cell::F(r.bound_corrected),
            Cell::B(r.overlapping()),
        ]);
    }
    let assertions = vec![
        Assertion::check(
            "empirical ≤ sum bound, all probes",
            counts.sum_all == 0,
            format!(
                "{} of {} probes violate ({} overlapping, {} disjoint)",
                counts.sum_all, counts.probes, counts.sum_overlapping, counts.sum_disjoint
            ),
        ),
        Assertion::check(
            "empirical ≤ sum bound, disjoint supports",
            counts.sum_disjoint == 0,
            format!("{} violations", counts.sum_disjoint),
        ),
        Assertion::check(
            "empirical ≤ corrected bound, all probes",
            counts.corrected == 0,
            format!("{} violations", counts.corrected),
        ),
    ];
    let max_ratio = rows
        .iter()
        .filter(|r| !r.overlapping() && r.bound_sum > 0.0)
        .map(|r| r.empirical / r.bound_sum)
        .fold(0.0, f64::max);
    Ok(Outcome {
        table,
        assertions,
        results: json!({
            "probes": counts.probes,
            "sum_violations": counts.sum_all,
            "sum_violations_overlapping": counts.sum_overlapping,
            "sum_violations_disjoint": counts.sum_disjoint,
            "corrected_violations": counts.corrected,
            "max_ratio_disjoint": max_ratio,
        }),
        certificate: Some(cert_json),
        chart: None,
    })
}

fn thermo(p: &Prepared) -> Result<Outcome, RunError> {
    let spec = p.spec.clone();
    let sizes = &p.config.sweep.sizes;
    let vol = spec.volume();
    let (seq, centre) = match *vol.graph().family() {
        FamilyTag::Chain => {
            let n = vol.n_sites();
            (VolumeSequence::centered_chain(spec.clone(), sizes), n / 2)
        }
        FamilyTag::Grid { width, .. } => {
            let c = width / 2;
            (VolumeSequence::centered_square(spec.clone(), sizes), c * width + c)
        }
        FamilyTag::Custom => {
            return Err(RunError::Config("thermo-sweep: volume.lattice must be chain or grid".into()))
        }
    };
    let seq = seq.map_err(|e| RunError::Config(format!("sweep.sizes: {e}")))?;
    let a = observable(&p.config.sweep.observable, centre, vol.n_sites())?;
    let a = LocalOperator::pauli(&a.label, vec![centre])?;
    let (s, t) = (p.config.times.start, p.config.times.stop);
    let (_, cert_json) = certificate(&spec, t)?;
    let sweep = cauchy_sweep(&seq, &a, s, t, p.integrator_tol)?;
    let mut table = Table::new(&["n", "sites", "boundary_distance", "measured", "bound", "ratio"]);
    for r in &sweep.rows {
        table.push(vec![
            Cell::I(r.n),
            Cell::I(r.sites),
            Cell::F(r.boundary_distance),
            Cell::F(r.measured),
            Cell::F(r.bound),
            Cell::F(r.ratio),
        ]);
    }
    let mu = spec.mu().expect("prepared specs carry a decay function");
    let points = sweep.rows.iter().filter(|r| r.measured > 0.0).count();
    let mut assertions = vec![Assertion::check(
        "measured ≤ bound for every consecutive pair",
        sweep.dominated(),
        format!("max ratio {:.3e}", sweep.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)),
    )];
    let name = format!("fitted slope ≤ −μ/2 = {}", -mu / 2.0);
    assertions.push(match sweep.slope {
        Some(k) if points >= 3 => Assertion::check(name, k <= -mu / 2.0, format!("slope {k:.4}")),
        _ => Assertion::skipped(name, format!("{points} positive points, need 3")),
    });
    let chart = line_chart(
        Axes {
            title: "Consecutive-volume differences",
            x_label: "boundary distance",
            y_label: "operator norm",
            log_x: false,
            log_y: true,
        },
        &[
            Series {
                name: "measured".into(),
                points: sweep.rows.iter().map(|r| (r.boundary_distance, r.measured)).collect(),
            },
            Series {
                name: "bound".into(),
                points: sweep.rows.iter().map(|r| (r.boundary_distance, r.bound)).collect(),
            },
        ],
    );
    Ok(Outcome {
        table,
        assertions,
        results: json!({
            "observable": {"pauli": a.label, "site": centre},
            "s": s,
            "t": t,
            "slope": sweep.slope,
            "certified_tail": sweep.certified_tail,
            "mu": mu,
        }),
        certificate: Some(cert_json),
        chart: Some(chart),
    })
}
