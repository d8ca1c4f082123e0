//! Dormand-Prince 5(4) integration of linear matrix ODEs `Y' = f(t, Y)`.

use crate::algebra::frobenius_norm;
use crate::{Error, Mat, Result, C64};

/// Tolerances and limits for [`integrate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RkOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl RkOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

impl Default for RkOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 1_000_000,
        }
    }
}

/// Step statistics of one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RkStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest accepted scaled error estimate (≤ 1).
    pub max_error_ratio: f64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combo(y: &Mat, h: f64, ks: &[Mat], w: &[f64]) -> Mat {
    let mut out = y.clone();
    for (k, &c) in ks.iter().zip(w) {
        if c != 0.0 {
            out.scaled_add(C64::new(h * c, 0.0), k);
        }
    }
    out
}

/// Integrate from `t0` and return the state at every time in `outputs`
/// (nondecreasing, all `≥ t0`). Steps are shortened to land exactly on
/// each output time.
pub fn integrate<F>(
    mut f: F,
    y0: Mat,
    t0: f64,
    outputs: &[f64],
    opts: RkOptions,
) -> Result<(Vec<Mat>, RkStats)>
where
    F: FnMut(f64, &Mat) -> Mat,
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol".into(),
            reason: "tolerances must be positive".into(),
        });
    }
    if outputs.iter().any(|t| !(t.is_finite() && *t >= t0))
        || outputs.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::InvalidTime(format!(
            "output times must be finite, nondecreasing and ≥ {t0}"
        )));
    }
    let t_end = outputs.last().copied().unwrap_or(t0);
    let span = t_end - t0;
    let floor = 1e-14 * span;
    let mut stats = RkStats::default();
    let mut out = Vec::with_capacity(outputs.len());

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.evaluations += 1;
    let mut h = initial_step(&y, &k1, span, opts);
    let mut next = 0;

    loop {
        while next < outputs.len() && outputs[next] <= t {
            out.push(y.clone());
            next += 1;
        }
        if next == outputs.len() {
            break;
        }
        let target = outputs[next];
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps(opts.max_steps));
        }
        let remaining = target - t;
        let landing = h >= remaining;
        let step = if landing { remaining } else { h };

        let mut ks: Vec<Mat> = Vec::with_capacity(7);
        ks.push(k1.clone());
        for s in 1..7 {
            let ys = combo(&y, step, &ks, A[s]);
            ks.push(f(t + C[s] * step, &ys));
        }
        stats.evaluations += 6;
        // The seventh stage is evaluated at the fifth-order solution.
        let y_new = combo(&y, step, &ks[..6], A[6]);
        let err_vec = combo(&Mat::zeros(y.dim()), step, &ks, &E);
        let scale = opts.atol + opts.rtol * frobenius_norm(&y).max(frobenius_norm(&y_new));
        let err = frobenius_norm(&err_vec) / scale;

        if err <= 1.0 {
            stats.accepted += 1;
            stats.max_error_ratio = stats.max_error_ratio.max(err);
            t = if landing { target } else { t + step };
            y = y_new;
            k1 = ks.pop().expect("seven stages");
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // A shortened landing step says nothing about the natural size.
            h = if landing { h.max(step * factor) } else { step * factor };
        } else {
            stats.rejected += 1;
            h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < floor {
                return Err(Error::StepUnderflow {
                    t,
                    h,
                    floor,
                    err,
                });
            }
        }
        if !err.is_finite() {
            return Err(Error::StepUnderflow {
                t,
                h,
                floor,
                err,
            });
        }
    }
    Ok((out, stats))
}

fn initial_step(y: &Mat, dy: &Mat, span: f64, opts: RkOptions) -> f64 {
    if span <= 0.0 {
        return 0.0;
    }
    let scale = opts.atol + opts.rtol * frobenius_norm(y);
    let d0 = frobenius_norm(y) / scale;
    let d1 = frobenius_norm(dy) / scale;
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    h.min(span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{expm, random_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs(m: &Mat) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn scalar_exponential() {
        let y0 = Mat::from_elem((1, 1), C64::new(1.0, 0.0));
        let (ys, stats) = integrate(
            |_, y| y.mapv(|z| -z),
            y0,
            0.0,
            &[0.5, 1.0, 3.0],
            RkOptions::default(),
        )
        .unwrap();
        for (y, t) in ys.iter().zip([0.5f64, 1.0, 3.0]) {
            assert!((y[[0, 0]].re - (-t).exp()).abs() < 1e-10);
        }
        assert!(stats.accepted > 0);
        assert!(stats.max_error_ratio <= 1.0);
    }

    #[test]
    fn matrix_ode_matches_expm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_matrix(&mut rng, 6);
        let y0 = random_matrix(&mut rng, 6);
        let (ys, _) = integrate(|_, y| m.dot(y), y0.clone(), 0.0, &[1.0], RkOptions::default())
            .unwrap();
        let exact = expm(&m).dot(&y0);
        assert!(max_abs(&(&ys[0] - &exact)) < 1e-8 * max_abs(&exact));
    }

    #[test]
    fn time_dependent_scalar() {
        // y' = cos(t)·y → y = exp(sin t)
        let y0 = Mat::from_elem((1, 1), C64::new(1.0, 0.0));
        let (ys, _) = integrate(
            |t, y| y.mapv(|z| z * t.cos()),
            y0,
            0.0,
            &[2.0],
            RkOptions::default(),
        )
        .unwrap();
        assert!((ys[0][[0, 0]].re - 2f64.sin().exp()).abs() < 1e-9);
    }

    #[test]
    fn empty_interval_and_repeated_outputs() {
        let y0 = Mat::from_elem((1, 1), C64::new(2.0, 0.0));
        let (ys, stats) =
            integrate(|_, y| y.clone(), y0.clone(), 1.0, &[1.0, 1.0], RkOptions::default())
                .unwrap();
        assert_eq!(ys, vec![y0.clone(), y0]);
        assert_eq!(stats.accepted, 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let y0 = Mat::from_elem((1, 1), C64::new(1.0, 0.0));
        assert!(integrate(|_, y| y.clone(), y0.clone(), 1.0, &[0.5], RkOptions::default()).is_err());
        assert!(integrate(|_, y| y.clone(), y0.clone(), 0.0, &[1.0], RkOptions::with_tol(0.0)).is_err());
        let few = RkOptions {
            max_steps: 3,
            ..RkOptions::default()
        };
        assert!(matches!(
            integrate(|_, y| y.mapv(|z| z * 50.0), y0, 0.0, &[10.0], few),
            Err(Error::TooManySteps(3))
        ));
    }

    #[test]
    fn stiff_problem_underflows() {
        // The right-hand side blows up in finite time, forcing ever smaller steps.
        let y0 = Mat::from_elem((1, 1), C64::new(1.0, 0.0));
        let r = integrate(
            |t, y| y.mapv(|z| z / (1.0 - t).powi(3)),
            y0,
            0.0,
            &[2.0],
            RkOptions::default(),
        );
        assert!(matches!(r, Err(Error::StepUnderflow { .. })), "{r:?}");
    }
}
