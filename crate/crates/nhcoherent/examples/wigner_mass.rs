//! Numerically Wigner-transform a coherent state with a complex centre and
//! compare mass, centroid and covariance with the closed-form Gaussian.

use nhcoherent::geometry::ShapeMatrix;
use nhcoherent::oracles::wigner_transform_numeric;
use nhcoherent::phasespace::PhasePoint;
use nhcoherent::states::{evaluate_coherent_state, wigner_of_state, GridSpec};
use nhcoherent::{C64, Result};

fn main() -> Result<()> {
    let hbar = 1.0;
    // imaginary momentum displaces the Wigner blob in position
    let z = PhasePoint::from_slice(&[C64::new(0.0, 1.0), C64::new(0.0, 0.0)])?;
    let b = ShapeMatrix::scalar(C64::new(0.0, 1.0))?;

    let reference = wigner_of_state(&z, &b, C64::new(0.0, 0.0), hbar)?;
    let centre = reference.centre.as_vector();
    println!("closed form: centre = ({}, {}), mass = {:.6}",
        centre[0], centre[1], reference.mass);

    let grid = GridSpec::centered(centre[1], 8.0, 1024)?;
    let psi = evaluate_coherent_state(&grid, &z, &b, C64::new(0.0, 0.0), hbar)?;
    let p_grid = GridSpec::centered(centre[0], 8.0, 257)?;
    let map = wigner_transform_numeric(&psi, &p_grid, hbar)?;

    let mass = map.mass();
    let centroid = map.centroid();
    let cov = map.covariance();
    println!("numeric:     centre = ({:.6}, {:.6}), mass = {:.6}",
        centroid.as_vector()[0], centroid.as_vector()[1], mass);
    println!("covariance =\n{:.6}", cov);
    println!("expected     (hbar/2) G^-1 =\n{:.6}", reference.covariance());

    let mass_gap = (mass - reference.mass).abs() / reference.mass;
    let centroid_gap = (centroid.as_vector() - centre).amax();
    let cov_gap = (cov - reference.covariance()).amax();
    println!("relative mass gap = {mass_gap:.3e}");
    println!("centroid gap      = {centroid_gap:.3e}");
    println!("covariance gap    = {cov_gap:.3e}");
    assert!(mass_gap < 1e-6 && centroid_gap < 1e-6 && cov_gap < 1e-4);
    println!("phase-space moments match the geometry");
    Ok(())
}
