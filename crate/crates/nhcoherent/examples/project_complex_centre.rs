//! Project a complex phase-space centre to its real equivalent and check
//! that the two wave functions agree pointwise up to the scalar phase.

use nhcoherent::geometry::{reduce_state, ShapeMatrix};
use nhcoherent::phasespace::PhasePoint;
use nhcoherent::states::{evaluate_coherent_state, GridSpec};
use nhcoherent::{C64, Result};

fn main() -> Result<()> {
    let hbar = 1.0;
    let z = PhasePoint::from_slice(&[C64::new(0.0, 1.0), C64::new(1.0, 0.5)])?;
    let b = ShapeMatrix::scalar(C64::new(0.5, 1.0))?;

    let red = reduce_state(&z, &b)?;
    let zr = &red.real_centre;
    println!("complex centre  z = [{}, {}]", z.as_vector()[0], z.as_vector()[1]);
    println!("real equivalent Z = [{}, {}]", zr.as_vector()[0], zr.as_vector()[1]);
    println!("sigma = {}", red.sigma);
    println!("mass factor e^(-2 Im sigma / hbar) = {:.6}",
        (-2.0 * red.sigma.im / hbar).exp());

    // same state, two labels: psi_z = e^{i sigma / hbar} psi_Z
    let grid = GridSpec::centered(zr.q()[0], 10.0, 1024)?;
    let psi = evaluate_coherent_state(&grid, &z, &b, C64::new(0.0, 0.0), hbar)?;
    let zc = PhasePoint::new(zr.as_vector().map(|v| C64::new(v, 0.0)))?;
    let psi_eq = evaluate_coherent_state(&grid, &zc, &b, red.sigma / hbar, hbar)?;

    let peak = psi.max_abs();
    let gap = psi
        .values()
        .iter()
        .zip(psi_eq.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0_f64, f64::max);
    println!("pointwise gap / peak = {:.3e}", gap / peak);
    assert!(gap / peak < 1e-12);
    println!("the complex label is redundant: same state, shifted phase");
    Ok(())
}
