//! Evolve the same damped state along the complex route (z, B, alpha) and
//! the real route (Z, G, beta) and confirm they describe one evolution.

use nhcoherent::dynamics::{
    project_trajectory, propagate_complex, propagate_real, IntegratorOptions, NormVariant,
};
use nhcoherent::geometry::{metric_from_shape, reduce_state, ShapeMatrix};
use nhcoherent::phasespace::{PhasePoint, QuadraticHamiltonian};
use nhcoherent::{C64, CMat, CVec, Result};

fn main() -> Result<()> {
    // damped oscillator with a weak linear drive: H = H_re + i H_im, c real
    let h = CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(1.0, -0.1),
            C64::new(0.2, 0.0),
            C64::new(0.2, 0.0),
            C64::new(1.5, -0.3),
        ],
    );
    let c = CVec::from_fn(2, |i, _| C64::new(if i == 0 { 0.3 } else { -0.1 }, 0.0));
    let ham = QuadraticHamiltonian::constant(h, c)?;

    let z0 = PhasePoint::from_slice(&[C64::new(0.4, 0.2), C64::new(1.0, -0.3)])?;
    let b0 = ShapeMatrix::scalar(C64::new(0.3, 1.4))?;
    let opts = IntegratorOptions {
        dt_sample: 0.05,
        norm_variant: NormVariant::NormExact,
        ..Default::default()
    };

    // complex route, then project every sample
    let ct = propagate_complex(&ham, &z0, &b0, C64::new(0.0, 0.0), 0.0, 2.0, &opts)?;
    let projected = project_trajectory(&ct)?;

    // real route from the projected initial data
    let red0 = reduce_state(&z0, &b0)?;
    let g0 = metric_from_shape(&b0)?;
    let beta0 = 2.0 * red0.sigma.im / opts.hbar;
    let rt = propagate_real(&ham, &red0.real_centre, &g0, beta0, 0.0, 2.0, &opts)?;

    let mut gap_z: f64 = 0.0;
    let mut gap_g: f64 = 0.0;
    let mut gap_beta: f64 = 0.0;
    for (a, b) in projected.samples.iter().zip(rt.samples.iter()) {
        gap_z = gap_z.max((a.z.as_vector() - b.z.as_vector()).amax());
        gap_g = gap_g.max((a.g.matrix() - b.g.matrix()).amax());
        gap_beta = gap_beta.max((a.beta - b.beta).abs());
    }
    println!("samples compared: {}", rt.samples.len());
    println!("max |Z_complex - Z_real|    = {gap_z:.3e}");
    println!("max |G_complex - G_real|    = {gap_g:.3e}");
    println!("max |beta_complex - beta_real| = {gap_beta:.3e}");
    assert!(gap_z < 1e-8 && gap_g < 1e-8 && gap_beta < 1e-8);
    println!("both routes agree");
    Ok(())
}
