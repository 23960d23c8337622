//! Position-space evaluation of Gaussian coherent states on one-dimensional
//! grids, and the analytic Wigner Gaussian attached to a state.
//!
//! The state with centre `z = (p, q)`, shape `B` and phase `alpha` is
//!
//! ```text
//! psi(x) = e^{i alpha} (Im B)^{1/4} (pi hbar)^{-1/4}
//!          exp{ (i/hbar) [ p (x - q) + B (x - q)^2 / 2 ] }
//! ```
//!
//! For complex `z` the state equals `e^{i sigma / hbar}` times the state at
//! the projected real centre, so its squared norm is `e^{-2 Im sigma / hbar}`.

use crate::error::{Error, Result};
use crate::geometry::{metric_from_shape, reduce_state, Metric, ShapeMatrix};
use crate::phasespace::{PhasePoint, RealPhasePoint};
use crate::{C64, RMat};

/// Uniform one-dimensional grid, inclusive of both endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    points: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, points: usize) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid span [{x_min}, {x_max}] is empty or not finite"
            )));
        }
        if points < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 16 points, got {points}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            points,
        })
    }

    /// Grid of `points` nodes centred at `centre` with half width
    /// `sigmas` standard deviations of the given state.
    pub fn centered(centre: f64, half_width: f64, points: usize) -> Result<Self> {
        Self::new(centre - half_width, centre + half_width, points)
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.points - 1) as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx()
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }
}

/// Complex amplitudes sampled on a [`GridSpec`].
#[derive(Clone, Debug)]
pub struct WaveFunction {
    grid: GridSpec,
    values: Vec<C64>,
}

impl WaveFunction {
    pub fn new(grid: GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::DimensionMismatch {
                expected: grid.points(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Squared L2 norm by the trapezoid rule.
    pub fn norm_sq(&self) -> f64 {
        let dx = self.grid.dx();
        let m = self.values.len();
        let mut acc = 0.5 * (self.values[0].norm_sqr() + self.values[m - 1].norm_sqr());
        for v in &self.values[1..m - 1] {
            acc += v.norm_sqr();
        }
        acc * dx
    }

    /// L2 distance to another wave function on the same grid.
    pub fn l2_distance(&self, other: &WaveFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter(
                "wave functions live on different grids".into(),
            ));
        }
        let dx = self.grid.dx();
        let mut acc = 0.0;
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            acc += (a - b).norm_sqr();
        }
        Ok((acc * dx).sqrt())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Evaluate a one-dimensional coherent state on a grid.
///
/// Fails with [`Error::GridTooCoarse`] unless the grid resolves the narrowest
/// length scale `sqrt(hbar / Im B)` with at least eight points.
pub fn evaluate_coherent_state(
    grid: &GridSpec,
    z: &PhasePoint,
    shape: &ShapeMatrix,
    alpha: C64,
    hbar: f64,
) -> Result<WaveFunction> {
    if z.n() != 1 || shape.n() != 1 {
        return Err(Error::InvalidParameter(
            "grid evaluation is one-dimensional".into(),
        ));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hbar must be positive, got {hbar}"
        )));
    }
    let b = shape.matrix()[(0, 0)];
    let p = z.as_vector()[0];
    let q = z.as_vector()[1];
    let width = (hbar / b.im).sqrt();
    let required = width / 8.0;
    if grid.dx() > required {
        return Err(Error::GridTooCoarse {
            required,
            actual: grid.dx(),
        });
    }
    let pref = C64::new(b.im.powf(0.25) / (std::f64::consts::PI * hbar).powf(0.25), 0.0)
        * (C64::new(0.0, 1.0) * alpha).exp();
    let i_over_h = C64::new(0.0, 1.0 / hbar);
    let mut values = Vec::with_capacity(grid.points());
    for k in 0..grid.points() {
        let u = C64::new(grid.x(k), 0.0) - q;
        let exponent = i_over_h * (p * u + C64::new(0.5, 0.0) * b * u * u);
        values.push(pref * exponent.exp());
    }
    WaveFunction::new(grid.clone(), values)
}

/// Analytic Wigner function of a Gaussian state: a normal density on phase
/// space with total mass `e^{-beta}`, centred at the real centre, with
/// covariance `(hbar/2) G^{-1}`.
#[derive(Clone, Debug)]
pub struct WignerGaussian {
    pub centre: RealPhasePoint,
    pub metric: Metric,
    pub mass: f64,
    pub hbar: f64,
}

impl WignerGaussian {
    pub fn n(&self) -> usize {
        self.centre.n()
    }

    /// Density value at a phase-space point.
    pub fn eval(&self, at: &RealPhasePoint) -> Result<f64> {
        let n = self.n();
        if at.n() != n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: 2 * at.n(),
            });
        }
        let d = at.as_vector() - self.centre.as_vector();
        let quad = (self.metric.matrix() * &d).dot(&d);
        let norm = (std::f64::consts::PI * self.hbar).powi(n as i32);
        Ok(self.mass / norm * (-quad / self.hbar).exp())
    }

    /// Covariance matrix `(hbar/2) G^{-1}` of the normalised density.
    pub fn covariance(&self) -> RMat {
        self.metric.inverse() * (self.hbar / 2.0)
    }
}

/// Wigner Gaussian of the state `e^{i alpha} psi_z^B`, reducing a complex
/// centre to its real equivalent first.
pub fn wigner_of_state(
    z: &PhasePoint,
    shape: &ShapeMatrix,
    alpha: C64,
    hbar: f64,
) -> Result<WignerGaussian> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hbar must be positive, got {hbar}"
        )));
    }
    let red = reduce_state(z, shape)?;
    let metric = metric_from_shape(shape)?;
    let mass = (-2.0 * alpha.im - 2.0 * red.sigma.im / hbar).exp();
    Ok(WignerGaussian {
        centre: red.real_centre,
        metric,
        mass,
        hbar,
    })
}

/// Relative mismatch between the mass carried by `beta` and the mass implied
/// by `alpha` and `sigma`: `|exp(beta - 2 Im alpha - 2 Im sigma / hbar) - 1|`.
pub fn norm_consistency(alpha: C64, sigma: C64, beta: f64, hbar: f64) -> f64 {
    let implied = 2.0 * alpha.im + 2.0 * sigma.im / hbar;
    (beta - implied).exp_m1().abs()
}
