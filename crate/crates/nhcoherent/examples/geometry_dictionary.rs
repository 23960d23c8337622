//! Translate a shape matrix into its metric, complex structure and
//! Lagrangian frame, and verify the dictionary identities.

use nalgebra::DMatrix;
use nhcoherent::geometry::{
    frame_from_shape, metric_from_shape, shape_from_frame, structure_from_metric,
    structure_from_shape, ShapeMatrix,
};
use nhcoherent::phasespace::omega;
use nhcoherent::{C64, CMat, Result};

fn main() -> Result<()> {
    // a genuinely complex 2x2 shape: symmetric, positive imaginary part
    let b = ShapeMatrix::new(CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(0.4, 1.5),
            C64::new(-0.2, 0.3),
            C64::new(-0.2, 0.3),
            C64::new(0.1, 0.9),
        ],
    ))?;
    let n = b.n();
    let om = omega(n);

    let g = metric_from_shape(&b)?;
    let j = structure_from_shape(&b)?;
    println!("G =\n{:.6}", g.matrix());
    println!("J =\n{:.6}", j.matrix());

    // the metric is symplectic and the structure squares to -I
    let sympl = (g.matrix() * &om * g.matrix() - &om).amax();
    let square = (j.matrix() * j.matrix() + DMatrix::identity(2 * n, 2 * n)).amax();
    println!("|G Omega G - Omega|_max = {sympl:.3e}");
    println!("|J^2 + I|_max          = {square:.3e}");

    // J from the metric agrees with J from the shape
    let j_from_g = structure_from_metric(&g)?;
    let agree = (j_from_g.matrix() - j.matrix()).amax();
    println!("|J(G) - J(B)|_max      = {agree:.3e}");

    // frame round trip recovers B exactly
    let frame = frame_from_shape(&b);
    let b_back = shape_from_frame(&frame);
    let round = (b_back.matrix() - b.matrix())
        .iter()
        .fold(0.0_f64, |a, v| a.max(v.norm()));
    println!("frame round trip gap   = {round:.3e}");

    assert!(sympl < 1e-12 && square < 1e-12 && agree < 1e-12 && round < 1e-12);
    println!("dictionary identities hold");
    Ok(())
}
