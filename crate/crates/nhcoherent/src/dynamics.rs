//! Propagation of Gaussian coherent states under quadratic, possibly
//! non-Hermitian Hamiltonians, along two equivalent routes:
//!
//! * the complex route evolves `(z, B, alpha)` with complex centre `z`,
//!   a matrix Riccati equation for `B` and a scalar phase `alpha`;
//! * the real route evolves `(Z, G, beta)` with real centre `Z`, the
//!   symplectic metric `G` and a log-norm `beta`.
//!
//! Both routes share the adaptive integrator, emit samples on a fixed grid
//! and stop with a breakdown report when the positivity margin (`Im B` or
//! `G`) is exhausted.

use std::fmt;

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::geometry::{metric_from_shape, reduce_state, Metric, ShapeMatrix};
use crate::ode::{DenseStep, Rk45, RkOptions, StepFlow};
use crate::phasespace::{omega, omega_c, split_blocks, PhasePoint, QuadraticHamiltonian, RealPhasePoint};
use crate::{C64, CMat, CVec, RMat, RVec};

/// Breakdown threshold factor relative to the running trace scale.
pub const BREAK_REL_TOL: f64 = 1e-8;

/// Convention for the real-route log-norm equation. `ClosedForm` weights the
/// quadratic and linear terms by `(2, 1)`; `NormExact` weights them by
/// `(1, 2)`, which is the variant that reproduces the Schroedinger norm of
/// the evolved state. The self-check command reports which variant the
/// grid-level oracle favours.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NormVariant {
    #[default]
    ClosedForm,
    NormExact,
}

impl NormVariant {
    fn kappa(self) -> (f64, f64) {
        match self {
            NormVariant::ClosedForm => (2.0, 1.0),
            NormVariant::NormExact => (1.0, 2.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Sample spacing; internal steps never straddle a sample time.
    pub dt_sample: f64,
    pub hbar: f64,
    pub norm_variant: NormVariant,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            dt_sample: 1e-2,
            hbar: 1.0,
            norm_variant: NormVariant::default(),
        }
    }
}

impl IntegratorOptions {
    fn validate(&self) -> Result<()> {
        if !(self.dt_sample > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt_sample must be positive, got {}",
                self.dt_sample
            )));
        }
        if !(self.hbar > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hbar must be positive, got {}",
                self.hbar
            )));
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "tolerances must be positive".into(),
            ));
        }
        Ok(())
    }

    fn rk(&self) -> RkOptions {
        RkOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BreakdownReason {
    PositivityLoss,
    StepFailure,
    ProviderFailure,
}

impl fmt::Display for BreakdownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BreakdownReason::PositivityLoss => "positivity-loss",
            BreakdownReason::StepFailure => "step-failure",
            BreakdownReason::ProviderFailure => "provider-failure",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct BreakdownReport {
    pub t_breakdown: f64,
    pub min_eig: f64,
    pub reason: BreakdownReason,
}

#[derive(Clone, Debug)]
pub struct ComplexSample {
    pub t: f64,
    pub z: PhasePoint,
    pub b: ShapeMatrix,
    pub alpha: C64,
}

#[derive(Clone, Debug)]
pub struct ComplexTrajectory {
    pub hbar: f64,
    pub samples: Vec<ComplexSample>,
    pub breakdown: Option<BreakdownReport>,
}

impl ComplexTrajectory {
    pub fn n(&self) -> usize {
        self.samples[0].z.n()
    }

    pub fn last(&self) -> &ComplexSample {
        self.samples.last().expect("trajectory holds the initial sample")
    }
}

#[derive(Clone, Debug)]
pub struct RealSample {
    pub t: f64,
    pub z: RealPhasePoint,
    pub g: Metric,
    pub beta: f64,
}

#[derive(Clone, Debug)]
pub struct RealTrajectory {
    pub hbar: f64,
    pub samples: Vec<RealSample>,
    pub breakdown: Option<BreakdownReport>,
}

impl RealTrajectory {
    pub fn n(&self) -> usize {
        self.samples[0].z.n()
    }

    pub fn last(&self) -> &RealSample {
        self.samples.last().expect("trajectory holds the initial sample")
    }
}

fn min_eig_sym(m: &RMat) -> f64 {
    SymmetricEigen::new((m + m.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Sample grid `t0 < t0 + dt < ... <= t1`; the final time is always a grid
/// point and never duplicated.
fn sample_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let mut ts = Vec::new();
    let mut k = 1usize;
    loop {
        let t = t0 + k as f64 * dt;
        if t >= t1 - 1e-12 * dt {
            break;
        }
        ts.push(t);
        k += 1;
    }
    ts.push(t1);
    ts
}

// ---------------------------------------------------------------------------
// complex route
// ---------------------------------------------------------------------------

struct ComplexState {
    n: usize,
}

impl ComplexState {
    fn dim(&self) -> usize {
        4 * self.n + 2 * self.n * self.n + 2
    }

    fn pack(&self, z: &CVec, b: &CMat, alpha: C64) -> RVec {
        let n = self.n;
        let mut y = RVec::zeros(self.dim());
        for i in 0..2 * n {
            y[i] = z[i].re;
            y[2 * n + i] = z[i].im;
        }
        let base = 4 * n;
        for i in 0..n {
            for j in 0..n {
                y[base + i * n + j] = b[(i, j)].re;
                y[base + n * n + i * n + j] = b[(i, j)].im;
            }
        }
        y[base + 2 * n * n] = alpha.re;
        y[base + 2 * n * n + 1] = alpha.im;
        y
    }

    fn unpack(&self, y: &RVec) -> (CVec, CMat, C64) {
        let n = self.n;
        let z = CVec::from_fn(2 * n, |i, _| C64::new(y[i], y[2 * n + i]));
        let base = 4 * n;
        let b = CMat::from_fn(n, n, |i, j| {
            C64::new(y[base + i * n + j], y[base + n * n + i * n + j])
        });
        let alpha = C64::new(y[base + 2 * n * n], y[base + 2 * n * n + 1]);
        (z, b, alpha)
    }
}

/// Right-hand side of the complex route. Preserves the symmetry of `B`
/// exactly for symmetric Hamiltonian blocks; `B` is symmetrised on unpack to
/// absorb rounding drift.
fn complex_rhs(
    packer: &ComplexState,
    ham: &QuadraticHamiltonian,
    hbar: f64,
    t: f64,
    y: &RVec,
) -> Result<RVec> {
    let n = packer.n;
    let (z, b_raw, _alpha) = packer.unpack(y);
    let b = (&b_raw + b_raw.transpose()) * C64::new(0.5, 0.0);
    let (h, c) = ham.coefficients(t)?;
    let blocks = split_blocks(&h);

    // z' = Omega (H z + c)
    let grad = &h * &z + &c;
    let mut zdot = CVec::zeros(2 * n);
    for i in 0..n {
        zdot[i] = -grad[n + i];
        zdot[n + i] = grad[i];
    }

    // B' = -H_qq - H_qp B - B H_pq - B H_pp B
    let bdot = -&blocks.qq - &blocks.qp * &b - &b * &blocks.pq - &b * &blocks.pp * &b;

    // alpha' = (p.q' - H(z))/hbar + (i/2) tr(H_pp B + H_pq)
    //        + (i/4) tr((Im B)^{-1} Im B')
    let mut p_qdot = C64::new(0.0, 0.0);
    for i in 0..n {
        p_qdot += z[i] * zdot[n + i];
    }
    let mut val = C64::new(0.0, 0.0);
    for i in 0..2 * n {
        val += z[i] * (C64::new(0.5, 0.0) * grad[i] + C64::new(0.5, 0.0) * c[i]);
    }
    // val = z.(Hz)/2 + z.c = H(z)
    let tr1 = (&blocks.pp * &b + &blocks.pq).trace();
    let im_b = b.map(|x| x.im);
    let im_b_inv = im_b.lu().try_inverse().ok_or(Error::Singular { what: "Im B" })?;
    let tr2 = (&im_b_inv * bdot.map(|x| x.im)).trace();
    let alphadot = (p_qdot - val) / hbar
        + C64::new(0.0, 0.5) * tr1
        + C64::new(0.0, 0.25 * tr2);

    Ok(packer.pack(&zdot, &bdot, alphadot))
}

struct OwnedStep {
    t0: f64,
    t1: f64,
    y0: RVec,
    y1: RVec,
    f0: RVec,
    f1: RVec,
}

impl OwnedStep {
    fn from(step: &DenseStep) -> Self {
        Self {
            t0: step.t0,
            t1: step.t1,
            y0: step.y0.clone(),
            y1: step.y1.clone(),
            f0: step.f0.clone(),
            f1: step.f1.clone(),
        }
    }

    fn eval(&self, t: f64) -> RVec {
        DenseStep {
            t0: self.t0,
            t1: self.t1,
            y0: &self.y0,
            y1: &self.y1,
            f0: &self.f0,
            f1: &self.f1,
        }
        .eval(t)
    }
}

/// Bisect the positivity margin `min_eig - threshold` inside one step.
fn bisect_breakdown<M>(step: &OwnedStep, margin: M) -> (f64, f64)
where
    M: Fn(&RVec) -> (f64, f64), // (min_eig, threshold)
{
    let mut lo = step.t0;
    let mut hi = step.t1;
    let tol = 1e-6 * hi.abs().max(1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let y = step.eval(mid);
        let (me, th) = margin(&y);
        if me <= th {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let (me, _) = margin(&step.eval(t));
    (t, me)
}

/// Drive one route over the sample grid with a positivity monitor.
/// `emit` turns an accepted grid state into a sample; `margin` reports the
/// monitored smallest eigenvalue and its breakdown threshold.
fn drive_monitored<F, M, E, S>(
    t0: f64,
    t1: f64,
    y0: RVec,
    opts: &IntegratorOptions,
    rhs: F,
    margin: M,
    mut emit: E,
) -> Result<(Vec<S>, Option<BreakdownReport>)>
where
    F: Fn(f64, &RVec) -> Result<RVec>,
    M: Fn(&RVec) -> (f64, f64),
    E: FnMut(f64, &RVec) -> Result<S>,
{
    if !(t1 > t0) {
        return Err(Error::InvalidSpan { t0, t1 });
    }
    let mut samples = Vec::new();
    samples.push(emit(t0, &y0)?);
    let (me0, th0) = margin(&y0);
    if me0 <= th0 {
        return Ok((
            samples,
            Some(BreakdownReport {
                t_breakdown: t0,
                min_eig: me0,
                reason: BreakdownReason::PositivityLoss,
            }),
        ));
    }

    let mut solver = Rk45::new(&rhs, opts.rk());
    let mut t = t0;
    let mut y = y0;
    for target in sample_grid(t0, t1, opts.dt_sample) {
        let mut crossing: Option<OwnedStep> = None;
        let advanced = solver.advance(t, &y, target, |step| {
            let (me, th) = margin(step.y1);
            if me <= th {
                crossing = Some(OwnedStep::from(step));
                return Ok(StepFlow::Stop);
            }
            Ok(StepFlow::Continue)
        });
        match advanced {
            Ok((tn, yn)) => {
                if let Some(step) = crossing {
                    let (tb, me) = bisect_breakdown(&step, &margin);
                    return Ok((
                        samples,
                        Some(BreakdownReport {
                            t_breakdown: tb,
                            min_eig: me,
                            reason: BreakdownReason::PositivityLoss,
                        }),
                    ));
                }
                t = tn;
                y = yn;
                samples.push(emit(t, &y)?);
            }
            Err(Error::StepSizeUnderflow { t: tu }) => {
                let (me, _) = margin(&y);
                return Ok((
                    samples,
                    Some(BreakdownReport {
                        t_breakdown: tu,
                        min_eig: me,
                        reason: BreakdownReason::StepFailure,
                    }),
                ));
            }
            Err(Error::ProviderFailure { t: tf, .. }) => {
                let (me, _) = margin(&y);
                return Ok((
                    samples,
                    Some(BreakdownReport {
                        t_breakdown: tf,
                        min_eig: me,
                        reason: BreakdownReason::ProviderFailure,
                    }),
                ));
            }
            Err(e) => return Err(e),
        }
    }
    Ok((samples, None))
}

/// Evolve `(z, B, alpha)` from `t0` to `t1`, sampling every `dt_sample`.
/// Positivity loss of `Im B` truncates the trajectory with a breakdown
/// report instead of an error.
pub fn propagate_complex(
    ham: &QuadraticHamiltonian,
    z0: &PhasePoint,
    b0: &ShapeMatrix,
    alpha0: C64,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<ComplexTrajectory> {
    opts.validate()?;
    let n = ham.n();
    if z0.n() != n || b0.n() != n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: 2 * z0.n().max(b0.n()),
        });
    }
    let packer = ComplexState { n };
    let y0 = packer.pack(z0.as_vector(), b0.matrix(), alpha0);
    let trace0 = b0.im().trace();
    let hbar = opts.hbar;

    let margin = |y: &RVec| {
        let (_, b, _) = packer.unpack(y);
        let im = (b.map(|x| x.im) + b.map(|x| x.im).transpose()) * 0.5;
        let me = min_eig_sym(&im);
        let th = BREAK_REL_TOL * trace0.max(im.trace()) / n as f64;
        (me, th)
    };
    let emit = |t: f64, y: &RVec| -> Result<ComplexSample> {
        let (z, b_raw, alpha) = packer.unpack(y);
        let b = (&b_raw + b_raw.transpose()) * C64::new(0.5, 0.0);
        Ok(ComplexSample {
            t,
            z: PhasePoint::new(z)?,
            b: ShapeMatrix::new(b)?,
            alpha,
        })
    };

    let (samples, breakdown) = drive_monitored(
        t0,
        t1,
        y0,
        opts,
        |t, y| complex_rhs(&packer, ham, hbar, t, y),
        margin,
        emit,
    )?;
    Ok(ComplexTrajectory {
        hbar,
        samples,
        breakdown,
    })
}

// ---------------------------------------------------------------------------
// real route
// ---------------------------------------------------------------------------

struct RealState {
    n: usize,
}

impl RealState {
    fn dim(&self) -> usize {
        2 * self.n + 4 * self.n * self.n + 1
    }

    fn pack(&self, z: &RVec, g: &RMat, beta: f64) -> RVec {
        let d = 2 * self.n;
        let mut y = RVec::zeros(self.dim());
        for i in 0..d {
            y[i] = z[i];
        }
        for i in 0..d {
            for j in 0..d {
                y[d + i * d + j] = g[(i, j)];
            }
        }
        y[d + d * d] = beta;
        y
    }

    fn unpack(&self, y: &RVec) -> (RVec, RMat, f64) {
        let d = 2 * self.n;
        let z = RVec::from_fn(d, |i, _| y[i]);
        let g = RMat::from_fn(d, d, |i, j| y[d + i * d + j]);
        (z, g, y[d + d * d])
    }
}

fn real_rhs(
    packer: &RealState,
    ham: &QuadraticHamiltonian,
    hbar: f64,
    kappa: (f64, f64),
    t: f64,
    y: &RVec,
) -> Result<RVec> {
    let n = packer.n;
    let d = 2 * n;
    let (z, g_raw, _beta) = packer.unpack(y);
    let g = (&g_raw + g_raw.transpose()) * 0.5;
    let (h, c) = ham.coefficients(t)?;
    let h_re = h.map(|x| x.re);
    let h_im = h.map(|x| x.im);
    let c_re = RVec::from_fn(d, |i, _| c[i].re);
    let c_im = RVec::from_fn(d, |i, _| c[i].im);
    let om = omega(n);

    // G^{-1} = Omega G Omega^T holds on the symplectic manifold; the flow
    // preserves it, so the cheap inverse stays consistent.
    let g_inv = &om * &g * om.transpose();

    // Z' = Omega (Re H Z + Re c) + G^{-1} (Im H Z + Im c)
    let zdot = &om * (&h_re * &z + &c_re) + &g_inv * (&h_im * &z + &c_im);

    // G' = Re H Omega G - G Omega Re H - Im H + G Omega^T Im H Omega G
    let gdot = &h_re * &om * &g - &g * &om * &h_re - &h_im
        + &g * om.transpose() * &h_im * &om * &g;

    // beta' = -(kq/hbar) Z.ImH Z - (kl/hbar) Imc.Z - tr(ImH Omega G Omega^T)/2
    let (kq, kl) = kappa;
    let quad = (&h_im * &z).dot(&z);
    let lin = c_im.dot(&z);
    let trace = (&h_im * &g_inv).trace();
    let betadot = -(kq / hbar) * quad - (kl / hbar) * lin - 0.5 * trace;

    Ok(packer.pack(&zdot, &gdot, betadot))
}

/// Evolve `(Z, G, beta)` from `t0` to `t1`, sampling every `dt_sample`.
/// Positivity loss of `G` truncates the trajectory with a breakdown report.
pub fn propagate_real(
    ham: &QuadraticHamiltonian,
    z0: &RealPhasePoint,
    g0: &Metric,
    beta0: f64,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<RealTrajectory> {
    opts.validate()?;
    let n = ham.n();
    if z0.n() != n || g0.n() != n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: 2 * z0.n().max(g0.n()),
        });
    }
    let packer = RealState { n };
    let y0 = packer.pack(z0.as_vector(), g0.matrix(), beta0);
    let trace0 = g0.matrix().trace();
    let hbar = opts.hbar;
    let kappa = opts.norm_variant.kappa();

    let margin = |y: &RVec| {
        let (_, g, _) = packer.unpack(y);
        let me = min_eig_sym(&g);
        let th = BREAK_REL_TOL * trace0.max(g.trace()) / (2 * n) as f64;
        (me, th)
    };
    let emit = |t: f64, y: &RVec| -> Result<RealSample> {
        let (z, g_raw, beta) = packer.unpack(y);
        let g = (&g_raw + g_raw.transpose()) * 0.5;
        Ok(RealSample {
            t,
            z: RealPhasePoint::new(z)?,
            g: Metric::new(g)?,
            beta,
        })
    };

    let (samples, breakdown) = drive_monitored(
        t0,
        t1,
        y0,
        opts,
        |t, y| real_rhs(&packer, ham, hbar, kappa, t, y),
        margin,
        emit,
    )?;
    Ok(RealTrajectory {
        hbar,
        samples,
        breakdown,
    })
}

/// Project a complex trajectory sample by sample: `Z = P_J z`,
/// `G = metric(B)` and `beta = 2 Im alpha + 2 Im sigma / hbar`, which is the
/// Schroedinger norm of the evolved state.
pub fn project_trajectory(ct: &ComplexTrajectory) -> Result<RealTrajectory> {
    let mut samples = Vec::with_capacity(ct.samples.len());
    for s in &ct.samples {
        let red = reduce_state(&s.z, &s.b)?;
        let g = metric_from_shape(&s.b)?;
        let beta = 2.0 * s.alpha.im + 2.0 * red.sigma.im / ct.hbar;
        samples.push(RealSample {
            t: s.t,
            z: red.real_centre,
            g,
            beta,
        });
    }
    Ok(RealTrajectory {
        hbar: ct.hbar,
        samples,
        breakdown: ct.breakdown.clone(),
    })
}

// ---------------------------------------------------------------------------
// flow maps
// ---------------------------------------------------------------------------

/// Complex symplectic flow `S(t)` solving `S' = Omega H S`, `S(0) = I`.
#[derive(Clone, Debug)]
pub struct FlowMatrix {
    pub t: f64,
    s: CMat,
}

impl FlowMatrix {
    pub fn matrix(&self) -> &CMat {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.s.nrows() / 2
    }
}

fn pack_cmat(m: &CMat) -> RVec {
    let (r, c) = m.shape();
    let mut y = RVec::zeros(2 * r * c);
    for i in 0..r {
        for j in 0..c {
            y[i * c + j] = m[(i, j)].re;
            y[r * c + i * c + j] = m[(i, j)].im;
        }
    }
    y
}

fn unpack_cmat(y: &RVec, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |i, j| C64::new(y[i * c + j], y[r * c + i * c + j]))
}

/// Integrate the flow equation from `t0` to `t1` starting at the identity.
pub fn propagate_flow(
    ham: &QuadraticHamiltonian,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<FlowMatrix> {
    opts.validate()?;
    let n = ham.n();
    let d = 2 * n;
    let om = omega_c(n);
    let rhs = |t: f64, y: &RVec| -> Result<RVec> {
        let s = unpack_cmat(y, d, d);
        let (h, _) = ham.coefficients(t)?;
        Ok(pack_cmat(&(&om * &h * &s)))
    };
    if t1 == t0 {
        return Ok(FlowMatrix {
            t: t0,
            s: CMat::identity(d, d),
        });
    }
    let mut solver = Rk45::new(rhs, opts.rk());
    let y0 = pack_cmat(&CMat::identity(d, d));
    let (_, y) = solver.advance(t0, &y0, t1, |_| Ok(StepFlow::Continue))?;
    Ok(FlowMatrix {
        t: t1,
        s: unpack_cmat(&y, d, d),
    })
}

/// Moebius action of a complex symplectic flow on the shape matrix:
/// `S * B = (S_pp B + S_pq)(S_qp B + S_qq)^{-1}`. Fails with a positivity
/// error when the image leaves the Siegel half space.
pub fn mobius_transport(flow: &FlowMatrix, shape: &ShapeMatrix) -> Result<ShapeMatrix> {
    let n = shape.n();
    if flow.n() != n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: 2 * flow.n(),
        });
    }
    let s = flow.matrix();
    let spp = s.view((0, 0), (n, n)).into_owned();
    let spq = s.view((0, n), (n, n)).into_owned();
    let sqp = s.view((n, 0), (n, n)).into_owned();
    let sqq = s.view((n, n), (n, n)).into_owned();
    let b = shape.matrix();
    let denom = &sqp * b + &sqq;
    let denom_inv = denom
        .lu()
        .try_inverse()
        .ok_or(Error::Singular { what: "Moebius denominator" })?;
    let num = &spp * b + &spq;
    let raw = num * denom_inv;
    let sym = (&raw + raw.transpose()) * C64::new(0.5, 0.0);
    ShapeMatrix::new(sym)
}

/// Doubled real flow for the metric Riccati equation: with
/// `A = [[Omega ReH, -Omega^T ImH Omega], [-ImH, ReH Omega]]` and
/// `Phi' = A Phi`, `Phi(0) = I`, the metric evolves as
/// `G(t) = (Phi_21 + Phi_22 G0)(Phi_11 + Phi_12 G0)^{-1}`.
#[derive(Clone, Debug)]
pub struct DoubledFlow {
    pub t: f64,
    phi: RMat,
}

impl DoubledFlow {
    pub fn matrix(&self) -> &RMat {
        &self.phi
    }

    pub fn n(&self) -> usize {
        self.phi.nrows() / 4
    }
}

fn pack_rmat(m: &RMat) -> RVec {
    let (r, c) = m.shape();
    RVec::from_fn(r * c, |k, _| m[(k / c, k % c)])
}

fn unpack_rmat(y: &RVec, r: usize, c: usize) -> RMat {
    RMat::from_fn(r, c, |i, j| y[i * c + j])
}

pub fn propagate_doubled(
    ham: &QuadraticHamiltonian,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<DoubledFlow> {
    opts.validate()?;
    let n = ham.n();
    let d = 2 * n;
    let om = omega(n);
    let rhs = |t: f64, y: &RVec| -> Result<RVec> {
        let phi = unpack_rmat(y, 2 * d, 2 * d);
        let (h, _) = ham.coefficients(t)?;
        let h_re = h.map(|x| x.re);
        let h_im = h.map(|x| x.im);
        let mut a = RMat::zeros(2 * d, 2 * d);
        a.view_mut((0, 0), (d, d)).copy_from(&(&om * &h_re));
        a.view_mut((0, d), (d, d))
            .copy_from(&(-(om.transpose() * &h_im * &om)));
        a.view_mut((d, 0), (d, d)).copy_from(&(-&h_im));
        a.view_mut((d, d), (d, d)).copy_from(&(&h_re * &om));
        Ok(pack_rmat(&(a * phi)))
    };
    if t1 == t0 {
        return Ok(DoubledFlow {
            t: t0,
            phi: RMat::identity(2 * d, 2 * d),
        });
    }
    let mut solver = Rk45::new(rhs, opts.rk());
    let y0 = pack_rmat(&RMat::identity(2 * d, 2 * d));
    let (_, y) = solver.advance(t0, &y0, t1, |_| Ok(StepFlow::Continue))?;
    Ok(DoubledFlow {
        t: t1,
        phi: unpack_rmat(&y, 2 * d, 2 * d),
    })
}

/// Fractional-linear action of the doubled flow on a metric.
pub fn metric_transport(flow: &DoubledFlow, g0: &Metric) -> Result<Metric> {
    let n = g0.n();
    if flow.n() != n {
        return Err(Error::DimensionMismatch {
            expected: 4 * n,
            found: 4 * flow.n(),
        });
    }
    let d = 2 * n;
    let phi = flow.matrix();
    let p11 = phi.view((0, 0), (d, d)).into_owned();
    let p12 = phi.view((0, d), (d, d)).into_owned();
    let p21 = phi.view((d, 0), (d, d)).into_owned();
    let p22 = phi.view((d, d), (d, d)).into_owned();
    let g = g0.matrix();
    let denom = &p11 + &p12 * g;
    let denom_inv = denom
        .lu()
        .try_inverse()
        .ok_or(Error::Singular { what: "doubled-flow denominator" })?;
    let raw = (&p21 + &p22 * g) * denom_inv;
    Metric::new((&raw + raw.transpose()) * 0.5)
}

/// Push a metric through a complex symplectic flow:
/// `G -> Omega M Omega^T G M^{-1}` with `M = Re S - Im S J`, `J = -Omega G`.
/// For real `S` this reduces to `(S^{-1})^T G S^{-1}`.
pub fn metric_transport_complex(flow: &FlowMatrix, g0: &Metric) -> Result<Metric> {
    let n = g0.n();
    if flow.n() != n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: 2 * flow.n(),
        });
    }
    let om = omega(n);
    let j = -(&om * g0.matrix());
    let s_re = flow.matrix().map(|x| x.re);
    let s_im = flow.matrix().map(|x| x.im);
    let m = &s_re - &s_im * &j;
    let m_inv = m
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::Singular { what: "metric transport" })?;
    let j_new = &m * &j * &m_inv;
    let raw = &om * &j_new;
    Metric::new((&raw + raw.transpose()) * 0.5)
}

/// Residuals of the stationarity conditions at `(z, B)`:
/// the centre residual `|Omega (H z + c)|_max` and the shape residual
/// `|B'|_max` of the Riccati right-hand side.
pub fn stationary_residual(
    ham: &QuadraticHamiltonian,
    t: f64,
    z: &PhasePoint,
    shape: &ShapeMatrix,
) -> Result<(f64, f64)> {
    let n = ham.n();
    if z.n() != n || shape.n() != n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: 2 * z.n().max(shape.n()),
        });
    }
    let (h, c) = ham.coefficients(t)?;
    let grad = &h * z.as_vector() + &c;
    let zdot = crate::phasespace::omega_apply(&grad)?;
    let blocks = split_blocks(&h);
    let b = shape.matrix();
    let bdot = -&blocks.qq - &blocks.qp * b - b * &blocks.pq - b * &blocks.pp * b;
    let rz = zdot.iter().map(|x| x.norm()).fold(0.0_f64, f64::max);
    let rb = bdot.iter().map(|x| x.norm()).fold(0.0_f64, f64::max);
    Ok((rz, rb))
}
