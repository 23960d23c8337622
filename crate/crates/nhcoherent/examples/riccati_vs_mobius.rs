//! For constant coefficients the shape Riccati flow is a Moebius action of
//! the complexified flow matrix, and the metric follows a doubled linear
//! flow. Both transports must match the direct integrations.

use nhcoherent::dynamics::{
    metric_transport, mobius_transport, propagate_complex, propagate_doubled, propagate_flow,
    propagate_real, IntegratorOptions,
};
use nhcoherent::geometry::{metric_from_shape, ShapeMatrix};
use nhcoherent::phasespace::{PhasePoint, QuadraticHamiltonian, RealPhasePoint};
use nhcoherent::{C64, CMat, Result};

fn main() -> Result<()> {
    // non-Hermitian but damped: Im H is negative semidefinite
    let h = CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(0.8, -0.2),
            C64::new(0.1, -0.1),
            C64::new(0.1, -0.1),
            C64::new(1.2, -0.4),
        ],
    );
    let ham = QuadraticHamiltonian::quadratic(h)?;
    let b0 = ShapeMatrix::scalar(C64::new(-0.3, 0.9))?;
    let g0 = metric_from_shape(&b0)?;
    let opts = IntegratorOptions {
        dt_sample: 0.1,
        ..Default::default()
    };
    let t1 = 1.0;

    // direct Riccati integration of B
    let z0 = PhasePoint::from_real(&[0.0, 0.0])?;
    let ct = propagate_complex(&ham, &z0, &b0, C64::new(0.0, 0.0), 0.0, t1, &opts)?;
    let b_direct = &ct.last().b;

    // Moebius transport under the complexified flow matrix
    let flow = propagate_flow(&ham, 0.0, t1, &opts)?;
    let b_mobius = mobius_transport(&flow, &b0)?;
    let gap_b = (b_mobius.matrix() - b_direct.matrix())
        .iter()
        .fold(0.0_f64, |a, v| a.max(v.norm()));
    println!("|B_moebius - B_riccati|_max = {gap_b:.3e}");

    // direct metric integration of G
    let zr0 = RealPhasePoint::from_slice(&[0.0, 0.0])?;
    let rt = propagate_real(&ham, &zr0, &g0, 0.0, 0.0, t1, &opts)?;
    let g_direct = &rt.last().g;

    // doubled linear flow transport of G
    let doubled = propagate_doubled(&ham, 0.0, t1, &opts)?;
    let g_doubled = metric_transport(&doubled, &g0)?;
    let gap_g = (g_doubled.matrix() - g_direct.matrix()).amax();
    println!("|G_doubled - G_direct|_max  = {gap_g:.3e}");

    assert!(gap_b < 1e-8 && gap_g < 1e-8);
    println!("linear transports reproduce the nonlinear integrations");
    Ok(())
}
