//! Phase-space points in `(p, q)` ordering, the standard symplectic form,
//! and complex quadratic Hamiltonians.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;


use crate::error::{Error, Result};
use crate::{C64, CMat, CVec, RVec};

/// Max tolerated asymmetry before intake symmetrisation emits a warning.
pub const SYMMETRY_WARN_TOL: f64 = 1e-12;

/// Standard symplectic form in `(p, q)` block ordering:
/// `Omega = [[0, -I], [I, 0]]`, so `Omega^2 = -I`.
pub fn omega(n: usize) -> crate::RMat {
    let mut m = crate::RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = -1.0;
        m[(n + i, i)] = 1.0;
    }
    m
}

/// Complex cast of [`omega`].
pub fn omega_c(n: usize) -> CMat {
    omega(n).map(|x| C64::new(x, 0.0))
}

/// `Omega * v` without forming the matrix: `(p, q) -> (-q, p)`.
pub fn omega_apply(v: &CVec) -> Result<CVec> {
    let n = half_dim(v.len())?;
    let mut out = CVec::zeros(2 * n);
    for i in 0..n {
        out[i] = -v[n + i];
        out[n + i] = v[i];
    }
    Ok(out)
}

fn half_dim(len: usize) -> Result<usize> {
    if len == 0 || len % 2 != 0 {
        return Err(Error::NotSquareEven { rows: len, cols: 1 });
    }
    Ok(len / 2)
}

/// A (possibly complex) phase-space point `z = (p, q)` of length `2n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    v: CVec,
}

impl PhasePoint {
    pub fn new(v: CVec) -> Result<Self> {
        half_dim(v.len())?;
        Ok(Self { v })
    }

    pub fn from_slice(entries: &[C64]) -> Result<Self> {
        Self::new(CVec::from_row_slice(entries))
    }

    /// Point with zero imaginary part from real components.
    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(CVec::from_iterator(
            entries.len(),
            entries.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    pub fn n(&self) -> usize {
        self.v.len() / 2
    }

    pub fn as_vector(&self) -> &CVec {
        &self.v
    }

    pub fn p(&self) -> CVec {
        self.v.rows(0, self.n()).into_owned()
    }

    pub fn q(&self) -> CVec {
        self.v.rows(self.n(), self.n()).into_owned()
    }

    pub fn re(&self) -> RVec {
        self.v.map(|c| c.re)
    }

    pub fn im(&self) -> RVec {
        self.v.map(|c| c.im)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.v.iter().all(|c| c.im.abs() <= tol)
    }
}

impl fmt::Display for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.v.iter().map(|c| format!("{}{:+}i", c.re, c.im)).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// A real phase-space point `Z = (P, Q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPhasePoint {
    v: RVec,
}

impl RealPhasePoint {
    pub fn new(v: RVec) -> Result<Self> {
        half_dim(v.len())?;
        Ok(Self { v })
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(RVec::from_row_slice(entries))
    }

    pub fn n(&self) -> usize {
        self.v.len() / 2
    }

    pub fn as_vector(&self) -> &RVec {
        &self.v
    }

    pub fn p(&self) -> RVec {
        self.v.rows(0, self.n()).into_owned()
    }

    pub fn q(&self) -> RVec {
        self.v.rows(self.n(), self.n()).into_owned()
    }

    pub fn to_complex(&self) -> PhasePoint {
        PhasePoint {
            v: self.v.map(|x| C64::new(x, 0.0)),
        }
    }
}

fn check_same_dim(z: &PhasePoint, w: &PhasePoint) -> Result<()> {
    if z.v.len() != w.v.len() {
        return Err(Error::DimensionMismatch {
            expected: z.v.len(),
            found: w.v.len(),
        });
    }
    Ok(())
}

/// Bilinear symplectic pairing `z . (Omega w)`; no conjugation.
pub fn symplectic_pairing(z: &PhasePoint, w: &PhasePoint) -> Result<C64> {
    check_same_dim(z, w)?;
    let ow = omega_apply(&w.v)?;
    Ok(z.v.iter().zip(ow.iter()).map(|(a, b)| a * b).sum())
}

/// Hermitian positivity form `h(z, w) = (i/2) z . (Omega conj(w))`.
///
/// `h(z, z)` is real; it is positive on positive Lagrangian subspaces.
pub fn positivity_form(z: &PhasePoint, w: &PhasePoint) -> Result<C64> {
    check_same_dim(z, w)?;
    let wbar = PhasePoint {
        v: w.v.map(|c| c.conj()),
    };
    Ok(C64::new(0.0, 0.5) * symplectic_pairing(z, &wbar)?)
}

/// Checks `M^T Omega M = Omega` entrywise to `tol`.
pub fn is_symplectic(m: &CMat, tol: f64) -> Result<bool> {
    if m.nrows() != m.ncols() || m.nrows() % 2 != 0 || m.nrows() == 0 {
        return Err(Error::NotSquareEven {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows() / 2;
    let om = omega_c(n);
    let defect = m.transpose() * &om * m - om;
    Ok(defect.iter().all(|c| c.norm() <= tol))
}

/// Quadratic-plus-linear Hamiltonian `H(z) = z . (H z) / 2 + c . z` with
/// complex symmetric `H` (2n x 2n) and complex `c` (2n), possibly
/// time-dependent through a coefficient provider.
#[derive(Clone)]
pub struct QuadraticHamiltonian {
    n: usize,
    coeffs: Coefficients,
    warned: Arc<AtomicBool>,
}

#[derive(Clone)]
enum Coefficients {
    Constant { h: CMat, c: CVec },
    Provider(Arc<dyn Fn(f64) -> Result<(CMat, CVec)> + Send + Sync>),
}

/// Blocks of a `2n x 2n` coefficient matrix in `(p, q)` ordering.
pub struct HamiltonianBlocks {
    pub pp: CMat,
    pub pq: CMat,
    pub qp: CMat,
    pub qq: CMat,
}

pub fn split_blocks(h: &CMat) -> HamiltonianBlocks {
    let n = h.nrows() / 2;
    HamiltonianBlocks {
        pp: h.view((0, 0), (n, n)).into_owned(),
        pq: h.view((0, n), (n, n)).into_owned(),
        qp: h.view((n, 0), (n, n)).into_owned(),
        qq: h.view((n, n), (n, n)).into_owned(),
    }
}

fn check_coeff_dims(n: usize, h: &CMat, c: &CVec) -> Result<()> {
    if h.nrows() != 2 * n || h.ncols() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: h.nrows().max(h.ncols()),
        });
    }
    if c.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: c.len(),
        });
    }
    Ok(())
}

/// Max entrywise deviation from symmetry.
pub fn asymmetry(h: &CMat) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..h.nrows() {
        for j in (i + 1)..h.ncols() {
            dev = dev.max((h[(i, j)] - h[(j, i)]).norm());
        }
    }
    dev
}

fn symmetrized(h: &CMat) -> CMat {
    (h + h.transpose()) * C64::new(0.5, 0.0)
}

impl QuadraticHamiltonian {
    /// Constant coefficients. `H` is symmetrised on intake; asymmetry beyond
    /// [`SYMMETRY_WARN_TOL`] is logged once.
    pub fn constant(h: CMat, c: CVec) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() % 2 != 0 || h.nrows() == 0 {
            return Err(Error::NotSquareEven {
                rows: h.nrows(),
                cols: h.ncols(),
            });
        }
        let n = h.nrows() / 2;
        check_coeff_dims(n, &h, &c)?;
        let dev = asymmetry(&h);
        if dev > SYMMETRY_WARN_TOL {
            log::warn!("symmetrising Hamiltonian matrix: asymmetry {dev:.3e}");
        }
        Ok(Self {
            n,
            coeffs: Coefficients::Constant { h: symmetrized(&h), c },
            warned: Arc::new(AtomicBool::new(true)),
        })
    }

    /// Purely quadratic constant Hamiltonian (`c = 0`).
    pub fn quadratic(h: CMat) -> Result<Self> {
        let n = h.nrows() / 2;
        Self::constant(h, CVec::zeros(2 * n))
    }

    /// Time-dependent coefficients supplied per query time.
    pub fn from_provider<F>(n: usize, f: F) -> Self
    where
        F: Fn(f64) -> Result<(CMat, CVec)> + Send + Sync + 'static,
    {
        Self {
            n,
            coeffs: Coefficients::Provider(Arc::new(f)),
            warned: Arc::new(AtomicBool::new(false)),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.coeffs, Coefficients::Constant { .. })
    }

    /// Coefficients `(H, c)` at time `t`, symmetrised.
    pub fn coefficients(&self, t: f64) -> Result<(CMat, CVec)> {
        match &self.coeffs {
            Coefficients::Constant { h, c } => Ok((h.clone(), c.clone())),
            Coefficients::Provider(f) => {
                let (h, c) = f(t).map_err(|e| Error::ProviderFailure {
                    t,
                    message: e.to_string(),
                })?;
                check_coeff_dims(self.n, &h, &c)?;
                let dev = asymmetry(&h);
                if dev > SYMMETRY_WARN_TOL && !self.warned.swap(true, Ordering::Relaxed) {
                    log::warn!("symmetrising provided Hamiltonian at t={t}: asymmetry {dev:.3e}");
                }
                Ok((symmetrized(&h), c))
            }
        }
    }

    /// Value and gradient: `H(z) = z.(Hz)/2 + c.z`, `grad = Hz + c`.
    pub fn eval(&self, t: f64, z: &PhasePoint) -> Result<(C64, PhasePoint)> {
        if z.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.n,
                found: 2 * z.n(),
            });
        }
        let (h, c) = self.coefficients(t)?;
        let hz = &h * z.as_vector();
        let value = 0.5 * bilinear(z.as_vector(), &hz) + bilinear(&c, z.as_vector());
        let grad = hz + c;
        Ok((value, PhasePoint::new(grad)?))
    }
}

/// Bilinear dot `a . b` (no conjugation).
pub fn bilinear(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

impl fmt::Debug for QuadraticHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.coeffs {
            Coefficients::Constant { h, c } => f
                .debug_struct("QuadraticHamiltonian")
                .field("n", &self.n)
                .field("h", h)
                .field("c", c)
                .finish(),
            Coefficients::Provider(_) => f
                .debug_struct("QuadraticHamiltonian")
                .field("n", &self.n)
                .field("coeffs", &"<provider>")
                .finish(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::RngExt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn omega_squares_to_minus_identity() {
        for n in 1..=3 {
            let om = omega(n);
            let sq = &om * &om;
            assert_eq!(sq, -crate::RMat::identity(2 * n, 2 * n));
        }
    }

    #[test]
    fn pairing_matches_hand_values() {
        let z = PhasePoint::from_real(&[1.0, 0.0]).unwrap();
        let w = PhasePoint::from_real(&[0.0, 1.0]).unwrap();
        // (1,0).Omega(0,1) = (1,0).(-1,0) = -1
        assert_eq!(symplectic_pairing(&z, &w).unwrap(), c(-1.0, 0.0));
        assert_eq!(symplectic_pairing(&w, &z).unwrap(), c(1.0, 0.0));

        let zi = PhasePoint::from_slice(&[c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        // with external conjugation: (i,1).Omega(-i,1) = -2i
        let wbar = PhasePoint::from_slice(&[c(0.0, -1.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(symplectic_pairing(&zi, &wbar).unwrap(), c(0.0, -2.0));
    }

    #[test]
    fn pairing_is_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=3 {
            for _ in 0..25 {
                let z = random_point(n, &mut rng);
                let w = random_point(n, &mut rng);
                let a = symplectic_pairing(&z, &w).unwrap();
                let b = symplectic_pairing(&w, &z).unwrap();
                assert!((a + b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pairing_dimension_mismatch() {
        let z = PhasePoint::from_real(&[1.0, 0.0]).unwrap();
        let w = PhasePoint::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(symplectic_pairing(&z, &w).is_err());
    }

    #[test]
    fn positivity_form_values() {
        // ground-state-like column (i, 1): h = 1
        let z = PhasePoint::from_slice(&[c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(positivity_form(&z, &z).unwrap().re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(positivity_form(&z, &z).unwrap().im, 0.0, epsilon = 1e-14);
        // real points are isotropic: h((1,1),(1,1)) = 0
        let r = PhasePoint::from_real(&[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(positivity_form(&r, &r).unwrap().norm(), 0.0, epsilon = 1e-14);
        // conjugate column flips the sign
        let zb = PhasePoint::from_slice(&[c(0.0, -1.0), c(1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(positivity_form(&zb, &zb).unwrap().re, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn positivity_form_diagonal_is_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for _ in 0..25 {
                let z = random_point(n, &mut rng);
                assert!(positivity_form(&z, &z).unwrap().im.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn symplectic_checks() {
        let n = 2;
        let id = CMat::identity(2 * n, 2 * n);
        assert!(is_symplectic(&id, 1e-12).unwrap());
        assert!(is_symplectic(&omega_c(n), 1e-12).unwrap());
        let scaled = id * c(2.0, 0.0);
        assert!(!is_symplectic(&scaled, 1e-12).unwrap());
        let odd = CMat::identity(3, 3);
        assert!(is_symplectic(&odd, 1e-12).is_err());
    }

    #[test]
    fn eval_matches_hand_values() {
        // H(z) = i q^2 / 2 at z = (0, 2): value 2i, gradient (0, 2i)
        let mut h = CMat::zeros(2, 2);
        h[(1, 1)] = c(0.0, 1.0);
        let ham = QuadraticHamiltonian::quadratic(h).unwrap();
        let z = PhasePoint::from_real(&[0.0, 2.0]).unwrap();
        let (v, g) = ham.eval(0.0, &z).unwrap();
        assert_eq!(v, c(0.0, 2.0));
        assert_eq!(g.as_vector()[0], c(0.0, 0.0));
        assert_eq!(g.as_vector()[1], c(0.0, 2.0));

        // shifted harmonic: H(z) = z.z/2 + i gamma.(Omega z), gamma = (0,1)
        let h2 = CMat::identity(2, 2);
        // c = i Omega^T gamma = i (1, 0)
        let cvec = CVec::from_row_slice(&[c(0.0, 1.0), c(0.0, 0.0)]);
        let ham2 = QuadraticHamiltonian::constant(h2, cvec).unwrap();
        let z2 = PhasePoint::from_real(&[1.0, 0.0]).unwrap();
        let (v2, g2) = ham2.eval(0.0, &z2).unwrap();
        assert_eq!(v2, c(0.5, 1.0));
        assert_eq!(g2.as_vector()[0], c(1.0, 1.0));
        assert_eq!(g2.as_vector()[1], c(0.0, 0.0));

        let zbad = PhasePoint::from_real(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(ham2.eval(0.0, &zbad).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=2 {
            for _ in 0..10 {
                let ham = random_ham(n, &mut rng);
                let z = random_point(n, &mut rng);
                let (_, grad) = ham.eval(0.0, &z).unwrap();
                let step = 1e-6;
                for k in 0..2 * n {
                    let mut zp = z.as_vector().clone();
                    let mut zm = z.as_vector().clone();
                    zp[k] += c(step, 0.0);
                    zm[k] -= c(step, 0.0);
                    let (vp, _) = ham.eval(0.0, &PhasePoint::new(zp).unwrap()).unwrap();
                    let (vm, _) = ham.eval(0.0, &PhasePoint::new(zm).unwrap()).unwrap();
                    let fd = (vp - vm) / c(2.0 * step, 0.0);
                    let g = grad.as_vector()[k];
                    assert!(
                        (fd - g).norm() <= 1e-6 * (1.0 + g.norm()),
                        "fd {fd} vs grad {g}"
                    );
                }
            }
        }
    }

    #[test]
    fn intake_symmetrises() {
        let mut h = CMat::identity(2, 2);
        h[(0, 1)] = c(0.3, 0.0);
        h[(1, 0)] = c(0.1, 0.0);
        let ham = QuadraticHamiltonian::quadratic(h).unwrap();
        let (hs, _) = ham.coefficients(0.0).unwrap();
        assert_eq!(hs[(0, 1)], c(0.2, 0.0));
        assert_eq!(hs[(1, 0)], c(0.2, 0.0));
    }

    #[test]
    fn provider_roundtrip_and_failure() {
        let ham = QuadraticHamiltonian::from_provider(1, |t| {
            if t > 0.5 {
                return Err(Error::InvalidParameter("past validity".into()));
            }
            Ok((CMat::identity(2, 2) * c(t, 0.0), CVec::zeros(2)))
        });
        let (h, _) = ham.coefficients(0.25).unwrap();
        assert_eq!(h[(0, 0)], c(0.25, 0.0));
        match ham.coefficients(1.0) {
            Err(Error::ProviderFailure { t, .. }) => assert_eq!(t, 1.0),
            other => panic!("expected provider failure, got {other:?}"),
        }
    }

    fn random_point(n: usize, rng: &mut ChaCha8Rng) -> PhasePoint {
        let v = CVec::from_iterator(
            2 * n,
            (0..2 * n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
        );
        PhasePoint::new(v).unwrap()
    }

    fn random_ham(n: usize, rng: &mut ChaCha8Rng) -> QuadraticHamiltonian {
        let mut h = CMat::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            for j in i..2 * n {
                let v = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let cvec = CVec::from_iterator(
            2 * n,
            (0..2 * n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
        );
        QuadraticHamiltonian::constant(h, cvec).unwrap()
    }
}
