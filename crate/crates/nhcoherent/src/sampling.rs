//! Seeded random generators for shapes, metrics, Hamiltonians and phase-space
//! points. Shared by the test suites and the self-check command so that every
//! randomised check is reproducible from a single seed.

use rand::RngExt;

use crate::geometry::{metric_from_shape, Metric, ShapeMatrix};
use crate::phasespace::{PhasePoint, QuadraticHamiltonian, RealPhasePoint};
use crate::{C64, CMat, CVec, RMat, RVec};

fn symmetrize_c(m: &CMat) -> CMat {
    (m + m.transpose()) * C64::new(0.5, 0.0)
}

fn random_real_sym<R: rand::Rng>(n: usize, scale: f64, rng: &mut R) -> RMat {
    let m = RMat::from_fn(n, n, |_, _| rng.random_range(-scale..scale));
    (&m + m.transpose()) * 0.5
}

/// Random shape matrix: `B = S + i (R R^T + eps I)` with symmetric `S`.
/// The imaginary part is well conditioned by construction.
pub fn random_shape<R: rand::Rng>(n: usize, rng: &mut R) -> ShapeMatrix {
    let re = random_real_sym(n, 1.5, rng);
    let r = RMat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let im = &r * r.transpose() + RMat::identity(n, n) * rng.random_range(0.3..1.2);
    let b = re.map(|x| C64::new(x, 0.0)) + im.map(|x| C64::new(0.0, x));
    ShapeMatrix::new(symmetrize_c(&b)).expect("sampled shape is valid by construction")
}

/// Random symplectic metric, obtained from a random shape.
pub fn random_metric<R: rand::Rng>(n: usize, rng: &mut R) -> Metric {
    metric_from_shape(&random_shape(n, rng)).expect("sampled metric is valid by construction")
}

/// Random complex phase-space point with entries in `[-2, 2] + i [-2, 2]`.
pub fn random_complex_point<R: rand::Rng>(n: usize, rng: &mut R) -> PhasePoint {
    let v = CVec::from_fn(2 * n, |_, _| {
        C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
    });
    PhasePoint::new(v).unwrap()
}

/// Random real phase-space point with entries in `[-2, 2]`.
pub fn random_real_point<R: rand::Rng>(n: usize, rng: &mut R) -> RealPhasePoint {
    RealPhasePoint::new(RVec::from_fn(2 * n, |_, _| rng.random_range(-2.0..2.0))).unwrap()
}

/// Random point on the positive Lagrangian of `shape`: `(B v, v)` for a
/// random complex `v`.
pub fn random_kernel_point<R: rand::Rng>(shape: &ShapeMatrix, rng: &mut R) -> PhasePoint {
    let n = shape.n();
    let v = CVec::from_fn(n, |_, _| {
        C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
    });
    let mut z = CVec::zeros(2 * n);
    let bv = shape.matrix() * &v;
    z.rows_mut(0, n).copy_from(&bv);
    z.rows_mut(n, n).copy_from(&v);
    PhasePoint::new(z).unwrap()
}

/// Random quadratic Hamiltonian `H = H_re + i H_im` with symmetric parts and
/// `Im H <= 0` (damped), plus a random linear term. `Im H = -R^T R` is
/// negative semidefinite by construction; with probability one it is
/// strictly negative definite.
pub fn random_damped_hamiltonian<R: rand::Rng>(
    n: usize,
    with_linear: bool,
    rng: &mut R,
) -> QuadraticHamiltonian {
    let re = random_real_sym(2 * n, 1.0, rng);
    let r = RMat::from_fn(2 * n, 2 * n, |_, _| rng.random_range(-0.7..0.7));
    let im = -(&r * r.transpose());
    let h = re.map(|x| C64::new(x, 0.0)) + im.map(|x| C64::new(0.0, x));
    let c = if with_linear {
        CVec::from_fn(2 * n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    } else {
        CVec::zeros(2 * n)
    };
    QuadraticHamiltonian::constant(symmetrize_c(&h), c).unwrap()
}

/// Random Hermitian-limit Hamiltonian (`Im H = 0`, real linear term).
pub fn random_real_hamiltonian<R: rand::Rng>(n: usize, rng: &mut R) -> QuadraticHamiltonian {
    let re = random_real_sym(2 * n, 1.0, rng);
    let c = CVec::from_fn(2 * n, |_, _| C64::new(rng.random_range(-1.0..1.0), 0.0));
    QuadraticHamiltonian::constant(re.map(|x| C64::new(x, 0.0)), c).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampled_objects_satisfy_their_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=3 {
            let b = random_shape(n, &mut rng);
            assert!(b.min_eig_im() > 0.0);
            let g = random_metric(n, &mut rng);
            assert!(g.min_eig() > 0.0);
            let h = random_damped_hamiltonian(n, true, &mut rng);
            let (hm, _) = h.coefficients(0.0).unwrap();
            let im = hm.map(|c| c.im);
            let max_eig = SymmetricEigen::new((&im + im.transpose()) * 0.5)
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(max_eig <= 1e-12, "Im H must be negative semidefinite");
        }
    }

    #[test]
    fn kernel_points_lie_on_the_lagrangian() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = random_shape(2, &mut rng);
        let z = random_kernel_point(&b, &mut rng);
        let diff = b.matrix() * z.q() - z.p();
        assert!(diff.iter().map(|c| c.norm()).fold(0.0, f64::max) < 1e-12);
    }

    #[test]
    fn seeding_is_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let za = random_complex_point(2, &mut a);
        let zb = random_complex_point(2, &mut b);
        assert_eq!(za.as_vector(), zb.as_vector());
    }
}
