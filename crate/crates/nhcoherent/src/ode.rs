//! Embedded Dormand-Prince 5(4) integrator over flat real state vectors,
//! with PI step-size control, first-same-as-last stage reuse and cubic
//! Hermite dense output for event localisation.
//!
//! The driver advances segment by segment; callers place segment boundaries
//! on their sample grid so emitted samples are step endpoints, not
//! interpolants. Dense output is only consulted when a monitor needs a
//! crossing bracketed inside one step.

use crate::error::{Error, Result};
use crate::RVec;

#[derive(Clone, Debug)]
pub struct RkOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps_per_segment: usize,
}

impl Default for RkOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps_per_segment: 1_000_000,
        }
    }
}

/// One accepted step with enough data for cubic Hermite interpolation.
pub struct DenseStep<'a> {
    pub t0: f64,
    pub t1: f64,
    pub y0: &'a RVec,
    pub y1: &'a RVec,
    pub f0: &'a RVec,
    pub f1: &'a RVec,
}

impl DenseStep<'_> {
    /// Cubic Hermite interpolant; exact at both endpoints.
    pub fn eval(&self, t: f64) -> RVec {
        let h = self.t1 - self.t0;
        let th = ((t - self.t0) / h).clamp(0.0, 1.0);
        let d = self.y1 - self.y0;
        let a = self.y0 + &d * th;
        let bracket = &d * (1.0 - 2.0 * th) + self.f0 * ((th - 1.0) * h) + self.f1 * (th * h);
        a + bracket * (th * (th - 1.0))
    }
}

/// Whether to keep integrating after a visited step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepFlow {
    Continue,
    Stop,
}

const SAFETY: f64 = 0.9;
const ALPHA: f64 = 0.17;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

// Dormand-Prince coefficients.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth-order weights equal the last A row (first-same-as-last).
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// Difference to the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub struct Rk45<F> {
    f: F,
    opts: RkOptions,
    h: Option<f64>,
    err_old: f64,
}

impl<F> Rk45<F>
where
    F: FnMut(f64, &RVec) -> Result<RVec>,
{
    pub fn new(f: F, opts: RkOptions) -> Self {
        Self {
            f,
            opts,
            h: None,
            err_old: 1e-4,
        }
    }

    fn scaled_err(&self, y0: &RVec, y1: &RVec, ev: &RVec) -> f64 {
        let n = y0.len().max(1);
        let mut acc = 0.0;
        for i in 0..y0.len() {
            let sc = self.opts.abs_tol + self.opts.rel_tol * y0[i].abs().max(y1[i].abs());
            let r = ev[i] / sc;
            acc += r * r;
        }
        (acc / n as f64).sqrt()
    }

    /// Classic starting-step heuristic from the derivative magnitude.
    fn initial_step(&mut self, t0: f64, y0: &RVec, span: f64) -> Result<f64> {
        let f0 = (self.f)(t0, y0)?;
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..y0.len() {
            let sc = self.opts.abs_tol + self.opts.rel_tol * y0[i].abs();
            d0 += (y0[i] / sc).powi(2);
            d1 += (f0[i] / sc).powi(2);
        }
        let d0 = (d0 / y0.len() as f64).sqrt();
        let d1 = (d1 / y0.len() as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span);
        let y1 = y0 + &f0 * h0;
        let f1 = (self.f)(t0 + h0, &y1)?;
        let mut d2: f64 = 0.0;
        for i in 0..y0.len() {
            let sc = self.opts.abs_tol + self.opts.rel_tol * y0[i].abs();
            d2 += (((f1[i] - f0[i]) / sc) / h0).powi(2);
        }
        let d2 = (d2 / y0.len() as f64).sqrt();
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok(h0.max(1e-12).min(h1).min(span).max(f64::MIN_POSITIVE * 1e16))
    }

    /// Advance from `(t0, y0)` to exactly `t1`, visiting each accepted step.
    /// When the visitor returns [`StepFlow::Stop`] the integration ends at
    /// that step's endpoint. Returns the final `(t, y)`.
    pub fn advance<V>(
        &mut self,
        t0: f64,
        y0: &RVec,
        t1: f64,
        mut visit: V,
    ) -> Result<(f64, RVec)>
    where
        V: FnMut(&DenseStep) -> Result<StepFlow>,
    {
        if !(t1 > t0) {
            if t1 == t0 {
                return Ok((t0, y0.clone()));
            }
            return Err(Error::InvalidSpan { t0, t1 });
        }
        let span = t1 - t0;
        let mut t = t0;
        let mut y = y0.clone();
        let mut h = match self.h {
            Some(h) => h.min(span),
            None => self.initial_step(t0, y0, span)?,
        };
        let mut k1 = (self.f)(t, &y)?;
        let mut rejected = false;
        let mut steps = 0usize;
        let dim = y.len();

        loop {
            if steps >= self.opts.max_steps_per_segment {
                return Err(Error::InvalidParameter(format!(
                    "step budget exhausted at t = {t}"
                )));
            }
            steps += 1;

            let t_floor = 16.0 * f64::EPSILON * t.abs().max(1.0);
            if h < t_floor {
                return Err(Error::StepSizeUnderflow { t });
            }
            let mut last = false;
            if t + h >= t1 - t_floor {
                h = t1 - t;
                last = true;
            }

            // stage evaluations; a failing stage shrinks the step and retries
            let mut ks: Vec<RVec> = Vec::with_capacity(7);
            ks.push(k1.clone());
            let mut stage_err: Option<Error> = None;
            for s in 1..7 {
                let mut ys = y.clone();
                for (j, kj) in ks.iter().enumerate() {
                    let a = A[s][j];
                    if a != 0.0 {
                        ys += kj * (h * a);
                    }
                }
                match (self.f)(t + C[s] * h, &ys) {
                    Ok(k) => ks.push(k),
                    Err(e) => {
                        stage_err = Some(e);
                        break;
                    }
                }
            }
            if let Some(e) = stage_err {
                h *= 0.25;
                rejected = true;
                if h < t_floor {
                    return Err(e);
                }
                continue;
            }

            let mut y1 = y.clone();
            let mut ev = RVec::zeros(dim);
            for (j, kj) in ks.iter().enumerate() {
                if B[j] != 0.0 {
                    y1 += kj * (h * B[j]);
                }
                if E[j] != 0.0 {
                    ev += kj * (h * E[j]);
                }
            }
            let finite = y1.iter().all(|x| x.is_finite()) && ev.iter().all(|x| x.is_finite());
            let err = if finite {
                self.scaled_err(&y, &y1, &ev)
            } else {
                f64::INFINITY
            };

            if err <= 1.0 {
                let fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    SAFETY * err.powf(-ALPHA) * self.err_old.powf(BETA)
                };
                let fac = fac.clamp(FAC_MIN, if rejected { 1.0 } else { FAC_MAX });
                self.err_old = err.max(1e-4);
                let f1 = ks.pop().unwrap(); // stage 7 is f(t + h, y1)
                let step = DenseStep {
                    t0: t,
                    t1: t + h,
                    y0: &y,
                    y1: &y1,
                    f0: &ks[0],
                    f1: &f1,
                };
                let flow = visit(&step)?;
                t += h;
                y = y1;
                k1 = f1;
                rejected = false;
                if flow == StepFlow::Stop {
                    self.h = Some(h * fac);
                    return Ok((t, y));
                }
                if last {
                    self.h = Some(h * fac);
                    return Ok((t1, y));
                }
                h *= fac;
            } else {
                let fac = if err.is_finite() {
                    (SAFETY * err.powf(-ALPHA)).clamp(FAC_MIN, 1.0)
                } else {
                    0.1
                };
                h *= fac;
                rejected = true;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drive<F>(f: F, t0: f64, y0: RVec, t1: f64, opts: RkOptions) -> Result<(f64, RVec)>
    where
        F: FnMut(f64, &RVec) -> Result<RVec>,
    {
        Rk45::new(f, opts).advance(t0, &y0, t1, |_| Ok(StepFlow::Continue))
    }

    #[test]
    fn exponential_growth() {
        let (_, y) = drive(
            |_, y| Ok(y.clone()),
            0.0,
            RVec::from_element(1, 1.0),
            1.0,
            RkOptions::default(),
        )
        .unwrap();
        assert!((y[0] - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_full_period() {
        let f = |_: f64, y: &RVec| Ok(RVec::from_vec(vec![-y[1], y[0]]));
        let tau = 2.0 * std::f64::consts::PI;
        let (_, y) = drive(f, 0.0, RVec::from_vec(vec![1.0, 0.0]), tau, RkOptions::default())
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8);
        assert!(y[1].abs() < 1e-8);
    }

    #[test]
    fn tolerance_controls_accuracy() {
        let run = |rel: f64| {
            let f = |_: f64, y: &RVec| Ok(RVec::from_vec(vec![-y[1], y[0]]));
            let (_, y) = drive(
                f,
                0.0,
                RVec::from_vec(vec![1.0, 0.0]),
                20.0,
                RkOptions {
                    rel_tol: rel,
                    abs_tol: rel * 1e-3,
                    ..Default::default()
                },
            )
            .unwrap();
            ((y[0] - 20.0_f64.cos()).powi(2) + (y[1] - 20.0_f64.sin()).powi(2)).sqrt()
        };
        let coarse = run(1e-5);
        let fine = run(1e-11);
        assert!(fine < coarse);
        assert!(fine < 1e-9, "fine error {fine:.3e}");
    }

    #[test]
    fn dense_output_tracks_the_solution() {
        let f = |_: f64, y: &RVec| Ok(y.clone());
        let mut max_dev: f64 = 0.0;
        Rk45::new(f, RkOptions::default())
            .advance(0.0, &RVec::from_element(1, 1.0), 2.0, |step| {
                for k in 1..4 {
                    let tm = step.t0 + (step.t1 - step.t0) * k as f64 / 4.0;
                    let ym = step.eval(tm);
                    max_dev = max_dev.max((ym[0] - tm.exp()).abs());
                }
                Ok(StepFlow::Continue)
            })
            .unwrap();
        assert!(max_dev < 1e-6, "dense output deviation {max_dev:.3e}");
    }

    #[test]
    fn visitor_can_stop_early() {
        let f = |_: f64, y: &RVec| Ok(y.clone());
        let (t, _) = Rk45::new(f, RkOptions::default())
            .advance(0.0, &RVec::from_element(1, 1.0), 5.0, |step| {
                Ok(if step.t1 > 1.0 {
                    StepFlow::Stop
                } else {
                    StepFlow::Continue
                })
            })
            .unwrap();
        assert!(t > 1.0 && t < 5.0);
    }

    #[test]
    fn failing_stage_surfaces_the_cause() {
        let f = |t: f64, y: &RVec| {
            if t > 0.5 {
                Err(Error::ProviderFailure {
                    t,
                    message: "no data".into(),
                })
            } else {
                Ok(y.clone())
            }
        };
        let err = drive(f, 0.0, RVec::from_element(1, 1.0), 1.0, RkOptions::default())
            .unwrap_err();
        match err {
            Error::ProviderFailure { .. } => {}
            other => panic!("expected provider failure, got {other:?}"),
        }
    }

    #[test]
    fn backward_span_is_rejected() {
        let err = drive(
            |_, y: &RVec| Ok(y.clone()),
            1.0,
            RVec::from_element(1, 1.0),
            0.0,
            RkOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::InvalidSpan { .. } => {}
            other => panic!("expected invalid span, got {other:?}"),
        }
    }

    #[test]
    fn empty_span_is_identity() {
        let (t, y) = drive(
            |_, y: &RVec| Ok(y.clone()),
            2.0,
            RVec::from_element(1, 3.0),
            2.0,
            RkOptions::default(),
        )
        .unwrap();
        assert_eq!(t, 2.0);
        assert_eq!(y[0], 3.0);
    }

    #[test]
    fn segmented_drive_matches_single_span() {
        let f = |_: f64, y: &RVec| Ok(RVec::from_vec(vec![-y[1], y[0]]));
        let mut solver = Rk45::new(f, RkOptions::default());
        let mut y = RVec::from_vec(vec![1.0, 0.0]);
        let mut t = 0.0;
        for k in 1..=10 {
            let target = k as f64 * 0.3;
            let (tn, yn) = solver.advance(t, &y, target, |_| Ok(StepFlow::Continue)).unwrap();
            t = tn;
            y = yn;
        }
        assert!((y[0] - 3.0_f64.cos()).abs() < 1e-8);
        assert!((y[1] - 3.0_f64.sin()).abs() < 1e-8);
    }
}
