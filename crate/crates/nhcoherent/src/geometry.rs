//! Dictionary between the Gaussian shape matrix `B`, the phase-space metric
//! `G`, the compatible complex structure `J`, and positive Lagrangian frames,
//! together with the reduction of complex centres to equivalent real ones.
//!
//! Conventions: `B` is complex symmetric with `Im B > 0`; `G` is symmetric,
//! positive definite and symplectic; `J = -Omega G` satisfies `J^2 = -I` and
//! `Omega J > 0`; the frame `(B; I)` spans the positive Lagrangian
//! `L_B = { (B q, q) }`, which is the kernel of the projection
//! `P_J z = Re z + J Im z`.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::phasespace::{omega, PhasePoint, RealPhasePoint};
use crate::{C64, CMat, RMat};

/// Entrywise symmetry tolerance for stored matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Condition-number cliff for inversions.
pub const COND_CLIFF: f64 = 1e12;
/// Relative threshold factor for positive-definiteness checks.
pub const PD_REL_TOL: f64 = 1e-10;

fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

fn max_norm_c(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.norm()))
}

fn sym_defect(m: &RMat) -> f64 {
    max_abs(&(m - m.transpose()))
}

fn sym_defect_c(m: &CMat) -> f64 {
    max_norm_c(&(m - m.transpose()))
}

/// Eigenvalues of a real symmetric matrix, ascending.
fn sym_eigs(m: &RMat) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

/// Positive definiteness with threshold `PD_REL_TOL * trace / n`.
fn check_pd(m: &RMat, what: &'static str) -> Result<f64> {
    let n = m.nrows();
    let threshold = PD_REL_TOL * m.trace().max(0.0) / n as f64;
    let eigs = sym_eigs(m);
    let min_eig = eigs[0];
    if min_eig <= threshold {
        return Err(Error::NotPositiveDefinite {
            what,
            min_eig,
            threshold,
        });
    }
    Ok(min_eig)
}

fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Complex symmetric shape matrix with positive definite imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeMatrix {
    b: CMat,
}

impl ShapeMatrix {
    pub fn new(b: CMat) -> Result<Self> {
        if b.nrows() != b.ncols() || b.nrows() == 0 {
            return Err(Error::NotSquareEven {
                rows: b.nrows(),
                cols: b.ncols(),
            });
        }
        let dev = sym_defect_c(&b);
        let scale = max_norm_c(&b).max(1.0);
        if dev > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric {
                what: "shape matrix",
                max_dev: dev,
            });
        }
        let im = b.map(|c| c.im);
        let min_eig = check_pd(&im, "Im B")?;
        let eigs = sym_eigs(&im);
        let cond = eigs[eigs.len() - 1] / min_eig;
        if cond > COND_CLIFF {
            return Err(Error::IllConditioned { what: "Im B", cond });
        }
        // store exactly symmetric
        let bs = (&b + b.transpose()) * C64::new(0.5, 0.0);
        Ok(Self { b: bs })
    }

    /// Scalar shape for `n = 1`.
    pub fn scalar(b: C64) -> Result<Self> {
        Self::new(CMat::from_element(1, 1, b))
    }

    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.b
    }

    pub fn re(&self) -> RMat {
        self.b.map(|c| c.re)
    }

    pub fn im(&self) -> RMat {
        self.b.map(|c| c.im)
    }

    /// Smallest eigenvalue of `Im B`.
    pub fn min_eig_im(&self) -> f64 {
        sym_eigs(&self.im())[0]
    }
}

/// Symmetric, positive definite, symplectic phase-space metric.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    g: RMat,
}

impl Metric {
    pub fn new(g: RMat) -> Result<Self> {
        if g.nrows() != g.ncols() || g.nrows() % 2 != 0 || g.nrows() == 0 {
            return Err(Error::NotSquareEven {
                rows: g.nrows(),
                cols: g.ncols(),
            });
        }
        let scale = max_abs(&g).max(1.0);
        let dev = sym_defect(&g);
        if dev > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric {
                what: "metric",
                max_dev: dev,
            });
        }
        check_pd(&g, "metric")?;
        let n = g.nrows() / 2;
        let om = omega(n);
        let defect = max_abs(&(&g * &om * &g - &om));
        if defect > 1e-9 * (1.0 + scale) * (1.0 + scale) {
            return Err(Error::NotSymplecticMetric { defect });
        }
        let gs = (&g + g.transpose()) * 0.5;
        Ok(Self { g: gs })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            g: RMat::identity(2 * n, 2 * n),
        }
    }

    pub fn n(&self) -> usize {
        self.g.nrows() / 2
    }

    pub fn matrix(&self) -> &RMat {
        &self.g
    }

    /// `G^{-1} = Omega G Omega^T`, exact for symplectic `G`.
    pub fn inverse(&self) -> RMat {
        let om = omega(self.n());
        &om * &self.g * om.transpose()
    }

    pub fn min_eig(&self) -> f64 {
        sym_eigs(&self.g)[0]
    }
}

/// Compatible complex structure: `J^2 = -I`, symplectic, `Omega J > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexStructure {
    j: RMat,
}

impl ComplexStructure {
    pub fn new(j: RMat) -> Result<Self> {
        if j.nrows() != j.ncols() || j.nrows() % 2 != 0 || j.nrows() == 0 {
            return Err(Error::NotSquareEven {
                rows: j.nrows(),
                cols: j.ncols(),
            });
        }
        let n = j.nrows() / 2;
        let scale = max_abs(&j).max(1.0);
        let tol = 1e-9 * (1.0 + scale) * (1.0 + scale);
        let sq_defect = max_abs(&(&j * &j + RMat::identity(2 * n, 2 * n)));
        if sq_defect > tol {
            return Err(Error::InvalidStructure {
                reason: format!("J^2 + I has max entry {sq_defect:.3e}"),
            });
        }
        let om = omega(n);
        let sympl = max_abs(&(j.transpose() * &om * &j - &om));
        if sympl > tol {
            return Err(Error::InvalidStructure {
                reason: format!("J^T Omega J - Omega has max entry {sympl:.3e}"),
            });
        }
        let oj = &om * &j;
        if sym_defect(&oj) > tol {
            return Err(Error::InvalidStructure {
                reason: "Omega J is not symmetric".into(),
            });
        }
        check_pd(&(&oj + oj.transpose()).scale(0.5), "Omega J").map_err(|_| {
            Error::InvalidStructure {
                reason: "Omega J is not positive definite".into(),
            }
        })?;
        Ok(Self { j })
    }

    pub fn n(&self) -> usize {
        self.j.nrows() / 2
    }

    pub fn matrix(&self) -> &RMat {
        &self.j
    }
}

/// Canonical frame of a positive Lagrangian subspace, stored as `(B; I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianFrame {
    f: CMat,
    shape: ShapeMatrix,
}

impl LagrangianFrame {
    /// Validates that the columns of `f` (a `2n x n` matrix) span a positive
    /// Lagrangian subspace, then normalises to the `(B; I)` canonical form.
    pub fn new(f: CMat) -> Result<Self> {
        let (rows, n) = (f.nrows(), f.ncols());
        if n == 0 || rows != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: rows,
            });
        }
        let scale2 = f.iter().map(|c| c.norm_sqr()).sum::<f64>().max(1e-300);
        // full column rank via the Gram matrix
        let gram = f.adjoint() * &f;
        let gram_eigs = SymmetricEigen::new(gram).eigenvalues;
        let gmin = gram_eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if gmin <= 1e-24 * scale2 {
            return Err(Error::NotPositiveLagrangian {
                reason: "rank-deficient frame".into(),
            });
        }
        if !frame_is_isotropic(&f, 1e-9 * scale2) {
            return Err(Error::NotPositiveLagrangian {
                reason: "columns are not Omega-isotropic".into(),
            });
        }
        let hmin = frame_positivity_min_eig(&f);
        if hmin <= 1e-10 * scale2 {
            return Err(Error::NotPositiveLagrangian {
                reason: format!("positivity form has min eigenvalue {hmin:.3e}"),
            });
        }
        let fp = f.view((0, 0), (n, n)).into_owned();
        let fq = f.view((n, 0), (n, n)).into_owned();
        let fq_inv = invert_checked(&fq, "frame q-block")?;
        let b_raw = &fp * &fq_inv;
        let b = (&b_raw + b_raw.transpose()) * C64::new(0.5, 0.0);
        let shape = ShapeMatrix::new(b)?;
        Ok(Self {
            f: canonical_frame(&shape),
            shape,
        })
    }

    pub fn n(&self) -> usize {
        self.shape.n()
    }

    /// The canonical `(B; I)` matrix.
    pub fn matrix(&self) -> &CMat {
        &self.f
    }

    pub fn column(&self, k: usize) -> PhasePoint {
        PhasePoint::new(self.f.column(k).into_owned()).unwrap()
    }
}

fn canonical_frame(shape: &ShapeMatrix) -> CMat {
    let n = shape.n();
    let mut f = CMat::zeros(2 * n, n);
    f.view_mut((0, 0), (n, n)).copy_from(shape.matrix());
    f.view_mut((n, 0), (n, n)).copy_from(&CMat::identity(n, n));
    f
}

fn frame_is_isotropic(f: &CMat, tol: f64) -> bool {
    let om = crate::phasespace::omega_c(f.nrows() / 2);
    let iso = f.transpose() * om * f;
    max_norm_c(&iso) <= tol
}

/// Smallest eigenvalue of the Hermitian Gram matrix of the positivity form
/// on the frame columns, `(i/2) F^T Omega conj(F)`.
fn frame_positivity_min_eig(f: &CMat) -> f64 {
    let nn = f.nrows() / 2;
    let om = crate::phasespace::omega_c(nn);
    let gh = (f.transpose() * om * f.map(|c| c.conj())) * C64::new(0.0, 0.5);
    let gh = (&gh + gh.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(gh)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

fn invert_checked(m: &CMat, what: &'static str) -> Result<CMat> {
    let lu = m.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::Singular { what })?;
    let cond = inf_norm_c(m) * inf_norm_c(&inv);
    if cond > COND_CLIFF {
        return Err(Error::IllConditioned { what, cond });
    }
    Ok(inv)
}

fn inf_norm_c(m: &CMat) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

fn inf_norm(m: &RMat) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

/// `G = [[I, 0], [-Re B, I]] diag((Im B)^{-1}, Im B) [[I, -Re B], [0, I]]`.
pub fn metric_from_shape(shape: &ShapeMatrix) -> Result<Metric> {
    let n = shape.n();
    let re = shape.re();
    let im = shape.im();
    let im_inv = im
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::Singular { what: "Im B" })?;
    let mut g = RMat::zeros(2 * n, 2 * n);
    let tl = &im_inv;
    let tr = -(&im_inv * &re);
    let bl = -(&re * &im_inv);
    let br = &im + &re * &im_inv * &re;
    g.view_mut((0, 0), (n, n)).copy_from(tl);
    g.view_mut((0, n), (n, n)).copy_from(&tr);
    g.view_mut((n, 0), (n, n)).copy_from(&bl);
    g.view_mut((n, n), (n, n)).copy_from(&br);
    let cond = inf_norm(&g) * inf_norm(&g); // ||G^{-1}|| = ||Omega G Omega^T|| = ||G||
    if cond > COND_CLIFF {
        return Err(Error::IllConditioned {
            what: "metric from shape",
            cond,
        });
    }
    Metric::new(g)
}

/// `J = -Omega G`.
pub fn structure_from_metric(metric: &Metric) -> Result<ComplexStructure> {
    let om = omega(metric.n());
    ComplexStructure::new(-(&om * metric.matrix()))
}

/// Block formula for `J` directly from `B`; agrees with
/// `structure_from_metric(metric_from_shape(B))`.
pub fn structure_from_shape(shape: &ShapeMatrix) -> Result<ComplexStructure> {
    let n = shape.n();
    let re = shape.re();
    let im = shape.im();
    let im_inv = im
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::Singular { what: "Im B" })?;
    let mut j = RMat::zeros(2 * n, 2 * n);
    j.view_mut((0, 0), (n, n)).copy_from(&(-(&re * &im_inv)));
    j.view_mut((0, n), (n, n))
        .copy_from(&(&im + &re * &im_inv * &re));
    j.view_mut((n, 0), (n, n)).copy_from(&(-&im_inv));
    j.view_mut((n, n), (n, n)).copy_from(&(&im_inv * &re));
    let cond = inf_norm(&j) * inf_norm(&j);
    if cond > COND_CLIFF {
        return Err(Error::IllConditioned {
            what: "structure from shape",
            cond,
        });
    }
    ComplexStructure::new(j)
}

/// Canonical frame `(B; I)` of `L_B`.
pub fn frame_from_shape(shape: &ShapeMatrix) -> LagrangianFrame {
    LagrangianFrame {
        f: canonical_frame(shape),
        shape: shape.clone(),
    }
}

/// Shape matrix of a frame: `B = F_p F_q^{-1}` (already canonicalised).
pub fn shape_from_frame(frame: &LagrangianFrame) -> ShapeMatrix {
    frame.shape.clone()
}

pub fn structure_from_frame(frame: &LagrangianFrame) -> Result<ComplexStructure> {
    structure_from_shape(&frame.shape)
}

/// Whether the columns of `f` span a positive Lagrangian subspace.
/// Errors on rank deficiency, returns `false` on sign failures.
pub fn is_positive_lagrangian(f: &CMat, tol: f64) -> Result<bool> {
    let (rows, n) = (f.nrows(), f.ncols());
    if n == 0 || rows != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: rows,
        });
    }
    let scale2 = f.iter().map(|c| c.norm_sqr()).sum::<f64>().max(1e-300);
    let gram = f.adjoint() * f;
    let gmin = SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if gmin <= 1e-24 * scale2 {
        return Err(Error::NotPositiveLagrangian {
            reason: "rank-deficient frame".into(),
        });
    }
    Ok(frame_is_isotropic(f, tol.max(1e-9 * scale2))
        && frame_positivity_min_eig(f) > tol.max(1e-10 * scale2))
}

/// `P_J z = Re z + J Im z`.
pub fn project_centre(z: &PhasePoint, j: &ComplexStructure) -> Result<RealPhasePoint> {
    if z.n() != j.n() {
        return Err(Error::DimensionMismatch {
            expected: 2 * j.n(),
            found: 2 * z.n(),
        });
    }
    RealPhasePoint::new(z.re() + j.matrix() * z.im())
}

/// Result of reducing a complex centre to its equivalent real one.
#[derive(Clone, Debug)]
pub struct ProjectionResult {
    pub real_centre: RealPhasePoint,
    pub sigma: C64,
}

/// Reduce `(z, B)` to the equivalent real centre `Z = P_J z` and the phase
/// `sigma = (P + p) . (Q - q) / 2`, so that the `(z, B)` state equals
/// `e^{i sigma / hbar}` times the `(Z, B)` state.
pub fn reduce_state(z: &PhasePoint, shape: &ShapeMatrix) -> Result<ProjectionResult> {
    if z.n() != shape.n() {
        return Err(Error::DimensionMismatch {
            expected: 2 * shape.n(),
            found: 2 * z.n(),
        });
    }
    let j = structure_from_shape(shape)?;
    let real_centre = project_centre(z, &j)?;
    let sigma = sigma_phase(z, &real_centre);
    Ok(ProjectionResult { real_centre, sigma })
}

/// `sigma = (P + p) . (Q - q) / 2` for a complex centre `z = (p, q)` and its
/// real replacement `Z = (P, Q)`.
pub fn sigma_phase(z: &PhasePoint, real_centre: &RealPhasePoint) -> C64 {
    let n = z.n();
    let p = z.p();
    let q = z.q();
    let pp = real_centre.p();
    let qq = real_centre.q();
    let mut s = C64::new(0.0, 0.0);
    for k in 0..n {
        s += (C64::new(pp[k], 0.0) + p[k]) * (C64::new(qq[k], 0.0) - q[k]);
    }
    0.5 * s
}

/// Kaehler pairing `h(z, w) = z . (G conj(w)) - i z . (Omega conj(w))`.
///
/// Positive semidefinite on the diagonal; its kernel is exactly the positive
/// Lagrangian `L_B` attached to `G`, and it is positive definite on real
/// points.
pub fn hermitian_inner(z: &PhasePoint, w: &PhasePoint, metric: &Metric) -> Result<C64> {
    if z.n() != metric.n() || w.n() != metric.n() {
        return Err(Error::DimensionMismatch {
            expected: 2 * metric.n(),
            found: 2 * z.n().max(w.n()),
        });
    }
    let gc = to_complex(metric.matrix());
    let wbar = w.as_vector().map(|c| c.conj());
    let gw = &gc * &wbar;
    let term1 = crate::phasespace::bilinear(z.as_vector(), &gw);
    let ow = crate::phasespace::omega_apply(&wbar)?;
    let term2 = crate::phasespace::bilinear(z.as_vector(), &ow);
    Ok(term1 - C64::new(0.0, 1.0) * term2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::positivity_form;
    use crate::sampling;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn metric_hand_values() {
        let b = ShapeMatrix::scalar(c(0.0, 1.0)).unwrap();
        assert_eq!(metric_from_shape(&b).unwrap().matrix(), &RMat::identity(2, 2));

        let b2 = ShapeMatrix::scalar(c(0.0, 2.0)).unwrap();
        let g2 = metric_from_shape(&b2).unwrap();
        assert_eq!(g2.matrix(), &RMat::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 2.0]));

        let b3 = ShapeMatrix::scalar(c(1.0, 1.0)).unwrap();
        let g3 = metric_from_shape(&b3).unwrap();
        assert_eq!(
            g3.matrix(),
            &RMat::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 2.0])
        );
    }

    #[test]
    fn structure_hand_values() {
        let g = Metric::identity(1);
        let j = structure_from_metric(&g).unwrap();
        assert_eq!(j.matrix(), &RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));

        let g2 = Metric::new(RMat::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 2.0])).unwrap();
        let j2 = structure_from_metric(&g2).unwrap();
        assert_eq!(j2.matrix(), &RMat::from_row_slice(2, 2, &[0.0, 2.0, -0.5, 0.0]));

        let g3 = Metric::new(RMat::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 2.0])).unwrap();
        let j3 = structure_from_metric(&g3).unwrap();
        assert_eq!(
            j3.matrix(),
            &RMat::from_row_slice(2, 2, &[-1.0, 2.0, -1.0, 1.0])
        );
        // block formula agrees
        let b3 = ShapeMatrix::scalar(c(1.0, 1.0)).unwrap();
        let j3b = structure_from_shape(&b3).unwrap();
        assert_abs_diff_eq!(
            (j3.matrix() - j3b.matrix()).norm(),
            0.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn invalid_inputs_rejected() {
        // Im B not positive
        assert!(ShapeMatrix::scalar(c(1.0, -1.0)).is_err());
        assert!(ShapeMatrix::scalar(c(1.0, 0.0)).is_err());
        // asymmetric B
        let mut b = CMat::identity(2, 2) * c(0.0, 1.0);
        b[(0, 1)] = c(0.5, 0.0);
        assert!(ShapeMatrix::new(b).is_err());
        // near-singular Im B passes the shape check but not the metric cliff
        let tiny = ShapeMatrix::scalar(c(0.0, 1e-14)).unwrap();
        match metric_from_shape(&tiny) {
            Err(Error::IllConditioned { .. }) => {}
            other => panic!("expected ill-conditioned, got {other:?}"),
        }
        assert!(structure_from_shape(&tiny).is_err());
        // non-symplectic metric
        assert!(Metric::new(RMat::identity(2, 2) * 2.0).is_err());
        // Omega itself is a complex structure of the wrong sign
        let om = omega(1);
        assert!(ComplexStructure::new(om.clone()).is_err());
        assert!(ComplexStructure::new(-om).is_ok());
    }

    #[test]
    fn frame_hand_values() {
        // (1 + 2i; 1 + i) -> B = (3 + i)/2
        let f = CMat::from_row_slice(2, 1, &[c(1.0, 2.0), c(1.0, 1.0)]);
        let frame = LagrangianFrame::new(f).unwrap();
        let b = shape_from_frame(&frame);
        assert_abs_diff_eq!((b.matrix()[(0, 0)] - c(1.5, 0.5)).norm(), 0.0, epsilon = 1e-14);

        // column rescaling leaves the subspace unchanged
        let f2 = CMat::from_row_slice(2, 1, &[c(0.0, 2.0), c(2.0, 0.0)]);
        let frame2 = LagrangianFrame::new(f2).unwrap();
        assert_abs_diff_eq!(
            (shape_from_frame(&frame2).matrix()[(0, 0)] - c(0.0, 1.0)).norm(),
            0.0,
            epsilon = 1e-14
        );

        // canonical frame stores (B; I)
        assert_eq!(frame2.matrix()[(0, 0)], c(0.0, 1.0));
        assert_eq!(frame2.matrix()[(1, 0)], c(1.0, 0.0));
    }

    #[test]
    fn frame_rejections() {
        // conjugate Lagrangian is negative
        let f = CMat::from_row_slice(2, 1, &[c(0.0, -1.0), c(1.0, 0.0)]);
        assert!(LagrangianFrame::new(f.clone()).is_err());
        assert!(!is_positive_lagrangian(&f, 1e-9).unwrap());
        // real frame is isotropic but h vanishes
        let fr = CMat::from_row_slice(2, 1, &[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(!is_positive_lagrangian(&fr, 1e-9).unwrap());
        // rank-deficient two-column frame
        let mut f2 = CMat::zeros(4, 2);
        f2[(0, 0)] = c(0.0, 1.0);
        f2[(2, 0)] = c(1.0, 0.0);
        f2[(0, 1)] = c(0.0, 1.0);
        f2[(2, 1)] = c(1.0, 0.0);
        assert!(is_positive_lagrangian(&f2, 1e-9).is_err());
        // non-isotropic pair for n = 2
        let mut f3 = CMat::zeros(4, 2);
        // col 0 = e_p1, col 1 = e_q1 => Omega pairing = -1
        f3[(0, 0)] = c(1.0, 0.0);
        f3[(2, 1)] = c(1.0, 0.0);
        assert!(!is_positive_lagrangian(&f3, 1e-9).unwrap());
    }

    #[test]
    fn dictionary_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 1..=3 {
            for _ in 0..20 {
                let b = sampling::random_shape(n, &mut rng);
                let g = metric_from_shape(&b).unwrap();
                let gm = g.matrix();
                let om = omega(n);
                // symplectic and unit determinant
                assert!(max_abs(&(gm * &om * gm - &om)) < 1e-9);
                assert!((gm.determinant() - 1.0).abs() < 1e-9);
                // J consistency both ways, and G = Omega J
                let j = structure_from_metric(&g).unwrap();
                let jb = structure_from_shape(&b).unwrap();
                assert!(max_abs(&(j.matrix() - jb.matrix())) < 1e-9);
                assert!(max_abs(&(&om * j.matrix() - gm)) < 1e-12);
                // J^2 = -I
                let jj = j.matrix() * j.matrix();
                assert!(max_abs(&(jj + RMat::identity(2 * n, 2 * n))) < 1e-9);
                // frame round trip
                let frame = frame_from_shape(&b);
                let b2 = shape_from_frame(&frame);
                assert!(max_norm_c(&(b.matrix() - b2.matrix())) < 1e-12);
                assert!(is_positive_lagrangian(frame.matrix(), 1e-9).unwrap());
                // kernel identity: P_J annihilates the frame columns
                for k in 0..n {
                    let col = frame.column(k);
                    let pz = project_centre(&col, &j).unwrap();
                    assert!(pz.as_vector().amax() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn projection_hand_values() {
        let b = ShapeMatrix::scalar(c(0.0, 1.0)).unwrap();
        // z = (i, 0): momentum shifted into the complex plane
        let z = PhasePoint::from_slice(&[c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let r = reduce_state(&z, &b).unwrap();
        assert_abs_diff_eq!(r.real_centre.as_vector()[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.real_centre.as_vector()[1], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!((r.sigma - c(0.0, -0.5)).norm(), 0.0, epsilon = 1e-14);

        // z = (0, i)
        let z2 = PhasePoint::from_slice(&[c(0.0, 0.0), c(0.0, 1.0)]).unwrap();
        let r2 = reduce_state(&z2, &b).unwrap();
        assert_abs_diff_eq!(r2.real_centre.as_vector()[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r2.real_centre.as_vector()[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((r2.sigma - c(0.0, -0.5)).norm(), 0.0, epsilon = 1e-14);

        // real z is a fixed point with sigma = 0
        let zr = PhasePoint::from_real(&[0.3, -0.7]).unwrap();
        let rr = reduce_state(&zr, &b).unwrap();
        assert_abs_diff_eq!((zr.re() - rr.real_centre.as_vector()).amax(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rr.sigma.norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn reduction_identity_property() {
        // B (Q - q) = P - p for random states
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=3 {
            for _ in 0..20 {
                let b = sampling::random_shape(n, &mut rng);
                let z = sampling::random_complex_point(n, &mut rng);
                let r = reduce_state(&z, &b).unwrap();
                let zc = r.real_centre.to_complex();
                let dq = zc.q() - z.q();
                let dp = zc.p() - z.p();
                let lhs = b.matrix() * dq;
                assert!(
                    (lhs - dp).iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-9,
                    "B(Q - q) = P - p violated"
                );
            }
        }
    }

    #[test]
    fn hermitian_inner_values_and_structure() {
        let g = Metric::identity(1);
        let z = PhasePoint::from_real(&[1.0, 0.0]).unwrap();
        assert_eq!(hermitian_inner(&z, &z, &g).unwrap(), c(1.0, 0.0));
        let w = PhasePoint::from_real(&[0.0, 1.0]).unwrap();
        assert_eq!(hermitian_inner(&z, &w, &g).unwrap(), c(0.0, 1.0));

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 1..=2 {
            for _ in 0..15 {
                let b = sampling::random_shape(n, &mut rng);
                let g = metric_from_shape(&b).unwrap();
                let j = structure_from_metric(&g).unwrap();
                let frame = frame_from_shape(&b);
                // kernel columns are h-orthogonal to every real point and null
                for k in 0..n {
                    let col = frame.column(k);
                    let x = sampling::random_real_point(n, &mut rng).to_complex();
                    assert!(hermitian_inner(&col, &x, &g).unwrap().norm() < 1e-9);
                    assert!(hermitian_inner(&col, &col, &g).unwrap().norm() < 1e-9);
                }
                // positive semidefinite diagonal, strictly positive on real points
                let z = sampling::random_complex_point(n, &mut rng);
                assert!(hermitian_inner(&z, &z, &g).unwrap().re > -1e-10);
                let x = sampling::random_real_point(n, &mut rng).to_complex();
                let hx = hermitian_inner(&x, &x, &g).unwrap();
                assert!(hx.re > 0.0 && hx.im.abs() < 1e-12);
                // P_J is hermitian for the pairing
                let w = sampling::random_complex_point(n, &mut rng);
                let pz = project_centre(&z, &j).unwrap().to_complex();
                let pw = project_centre(&w, &j).unwrap().to_complex();
                let a = hermitian_inner(&pz, &w, &g).unwrap();
                let bb = hermitian_inner(&z, &pw, &g).unwrap();
                assert!((a - bb).norm() < 1e-9, "projection not hermitian");
            }
        }
    }

    #[test]
    fn positivity_form_positive_on_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in 1..=3 {
            for _ in 0..15 {
                let b = sampling::random_shape(n, &mut rng);
                let frame = frame_from_shape(&b);
                let v = sampling::random_complex_point(n, &mut rng);
                // arbitrary combination of frame columns
                let mut zv = crate::CVec::zeros(2 * n);
                for k in 0..n {
                    zv += frame.matrix().column(k).into_owned() * v.as_vector()[k];
                }
                let z = PhasePoint::new(zv).unwrap();
                let h = positivity_form(&z, &z).unwrap();
                if v.as_vector().iter().any(|x| x.norm() > 1e-3) {
                    assert!(h.re > 0.0, "h should be positive on L_B");
                }
            }
        }
    }
}
