//! Check a propagated trajectory against the Schroedinger equation on a
//! grid, then break the scalar phase on purpose and watch the residual
//! explode. This is the end-to-end correctness probe for the phase ODE.

use nhcoherent::dynamics::{propagate_complex, IntegratorOptions};
use nhcoherent::geometry::ShapeMatrix;
use nhcoherent::oracles::{ablate_alpha_trace, schrodinger_residual};
use nhcoherent::phasespace::{PhasePoint, QuadraticHamiltonian};
use nhcoherent::states::GridSpec;
use nhcoherent::{C64, CMat, Result};

fn main() -> Result<()> {
    // harmonic oscillator, displaced squeezed start
    let ham = QuadraticHamiltonian::quadratic(CMat::identity(2, 2))?;
    let z0 = PhasePoint::from_real(&[0.5, 1.0])?;
    let b0 = ShapeMatrix::scalar(C64::new(0.2, 1.6))?;
    let opts = IntegratorOptions {
        dt_sample: 1e-3,
        ..Default::default()
    };
    let ct = propagate_complex(&ham, &z0, &b0, C64::new(0.0, 0.0), 0.0, 0.3, &opts)?;

    let grid = GridSpec::centered(0.0, 9.0, 512)?;
    let report = schrodinger_residual(&ct, &ham, &grid)?;
    println!(
        "relative residual of i hbar d/dt psi = H psi over {} interior samples:",
        report.times.len()
    );
    println!("  max = {:.3e}", report.max_residual);

    // negative control: drop the trace part of the phase ODE
    let ablated = ablate_alpha_trace(&ct, &ham)?;
    let broken = schrodinger_residual(&ablated, &ham, &grid)?;
    println!("  max with the trace term removed = {:.3e}", broken.max_residual);

    assert!(report.max_residual < 1e-4);
    assert!(broken.max_residual > 1e-1);
    println!("the full phase ODE is required: the ablation fails by orders of magnitude");
    Ok(())
}
