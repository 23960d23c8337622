//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line (visible with `--nocapture`). Tolerances are pinned
//! here on purpose; do not loosen them to make a failure go away.

use std::time::Instant;

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nhcoherent::dynamics::{
    metric_transport, mobius_transport, project_trajectory, propagate_complex, propagate_doubled,
    propagate_flow, propagate_real, IntegratorOptions,
};
use nhcoherent::geometry::{
    frame_from_shape, metric_from_shape, reduce_state, shape_from_frame, structure_from_frame,
    structure_from_shape,
};
use nhcoherent::oracles::{
    ablate_alpha_trace, adjudicate_norm_variant, run_example, schrodinger_residual,
    wigner_transform_numeric, ExampleSpec,
};
use nhcoherent::phasespace::{omega, positivity_form, PhasePoint, QuadraticHamiltonian};
use nhcoherent::sampling::{
    random_complex_point, random_damped_hamiltonian, random_kernel_point, random_shape,
};
use nhcoherent::states::{evaluate_coherent_state, GridSpec};
use nhcoherent::{C64, CMat, RMat};

fn report(idx: u32, name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {idx} {name}: {} ({detail})",
        if ok { "pass" } else { "fail" }
    );
    assert!(ok, "criterion {idx} {name} failed: {detail}");
}

fn cmax(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.norm()))
}

#[test]
fn criterion_01_geometry_dictionary() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let n = 1 + k % 3;
        let b = random_shape(n, &mut rng);
        let om = omega(n);
        let g = metric_from_shape(&b).unwrap();
        let j = structure_from_shape(&b).unwrap();

        let sympl = (g.matrix() * &om * g.matrix() - &om).amax();
        let square = (j.matrix() * j.matrix() + RMat::identity(2 * n, 2 * n)).amax();
        let omj = &om * j.matrix();
        let omj_sym = (&omj + omj.transpose()) * 0.5;
        let tame = SymmetricEigen::new(omj_sym)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(tame > 0.0, "Omega J must be positive definite");

        // every frame column lies in the kernel of the projection
        let frame = frame_from_shape(&b);
        let mut kernel: f64 = 0.0;
        for c in 0..n {
            let u = frame.matrix().column(c).clone_owned();
            let re = u.map(|v| v.re);
            let im = u.map(|v| v.im);
            kernel = kernel.max((re + j.matrix() * im).amax() / u.norm());
        }

        // round trips through the frame
        let b_back = shape_from_frame(&frame);
        let round_b = cmax(&(b_back.matrix() - b.matrix()));
        let j_back = structure_from_frame(&frame).unwrap();
        let round_j = (j_back.matrix() - j.matrix()).amax();

        worst = worst
            .max(sympl)
            .max(square)
            .max(kernel)
            .max(round_b)
            .max(round_j);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst <= 1e-9 && elapsed < 5.0;
    report(
        1,
        "geometry-dictionary",
        ok,
        &format!("100 shapes n=1..3, worst defect {worst:.3e}, {elapsed:.2}s"),
    );
}

#[test]
fn criterion_02_phase_equivalence_and_wigner() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let hbar = 1.0;
    let mut worst_phase: f64 = 0.0;
    let mut worst_mass: f64 = 0.0;
    let mut centroid_ok = true;
    for _ in 0..50 {
        let b = random_shape(1, &mut rng);
        let z = random_complex_point(1, &mut rng);
        let red = reduce_state(&z, &b).unwrap();
        let pc = red.real_centre.p()[0];
        let qc = red.real_centre.q()[0];
        let sig_a = (hbar / b.im()[(0, 0)]).sqrt();

        // pointwise equality on the pinned 512-point grid
        let grid = GridSpec::centered(qc, 6.0 * sig_a, 512).unwrap();
        let psi = evaluate_coherent_state(&grid, &z, &b, C64::new(0.0, 0.0), hbar).unwrap();
        let zc = PhasePoint::new(red.real_centre.as_vector().map(|v| C64::new(v, 0.0))).unwrap();
        let psi_eq = evaluate_coherent_state(&grid, &zc, &b, red.sigma / hbar, hbar).unwrap();
        let peak = psi.max_abs();
        let gap = psi
            .values()
            .iter()
            .zip(psi_eq.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        worst_phase = worst_phase.max(gap / peak);

        // Wigner moments on grids sized by the state's own covariance
        let g = metric_from_shape(&b).unwrap();
        let cov = g.inverse() * (hbar / 2.0);
        let sig_p = cov[(0, 0)].sqrt();
        let p_half = 6.0 * sig_p + 0.5;
        let p_abs_max = pc.abs() + p_half;
        let dx = (sig_a / 8.0).min(std::f64::consts::PI * hbar / (2.0 * (p_abs_max + 0.5)));
        let x_half = 7.5 * sig_a;
        let points = ((2.0 * x_half / dx).ceil() as usize + 2).max(64);
        let x_grid = GridSpec::centered(qc, x_half, points).unwrap();
        let psi_w = evaluate_coherent_state(&x_grid, &z, &b, C64::new(0.0, 0.0), hbar).unwrap();
        let p_grid = GridSpec::centered(pc, p_half, 201).unwrap();
        let map = wigner_transform_numeric(&psi_w, &p_grid, hbar).unwrap();

        let mass_expected = (-2.0 * red.sigma.im / hbar).exp();
        worst_mass = worst_mass.max((map.mass() - mass_expected).abs() / mass_expected);
        let centroid = map.centroid();
        if (centroid.p()[0] - pc).abs() > p_grid.dx() || (centroid.q()[0] - qc).abs() > x_grid.dx()
        {
            centroid_ok = false;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst_phase <= 1e-9 && worst_mass <= 1e-4 && centroid_ok && elapsed < 60.0;
    report(
        2,
        "phase-equivalence-and-wigner",
        ok,
        &format!(
            "50 states, phase gap {worst_phase:.3e}, mass gap {worst_mass:.3e}, centroid within one cell: {centroid_ok}, {elapsed:.2}s"
        ),
    );
}

#[test]
fn criterion_03_riccati_vs_linear_transport() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let opts = IntegratorOptions {
        dt_sample: 0.1,
        ..Default::default()
    };
    let mut worst_b: f64 = 0.0;
    let mut worst_g: f64 = 0.0;
    for k in 0..20 {
        let n = 1 + k % 2;
        let ham = random_damped_hamiltonian(n, false, &mut rng);
        let b0 = random_shape(n, &mut rng);
        let g0 = metric_from_shape(&b0).unwrap();

        let z0 = PhasePoint::new(nhcoherent::CVec::zeros(2 * n)).unwrap();
        let ct = propagate_complex(&ham, &z0, &b0, C64::new(0.0, 0.0), 0.0, 1.0, &opts).unwrap();
        assert!(ct.breakdown.is_none(), "damped flows stay positive");
        let flow = propagate_flow(&ham, 0.0, 1.0, &opts).unwrap();
        let b_mob = mobius_transport(&flow, &b0).unwrap();
        worst_b = worst_b.max(cmax(&(b_mob.matrix() - ct.last().b.matrix())));

        let zr0 = nhcoherent::phasespace::RealPhasePoint::new(nhcoherent::RVec::zeros(2 * n))
            .unwrap();
        let rt = propagate_real(&ham, &zr0, &g0, 0.0, 0.0, 1.0, &opts).unwrap();
        assert!(rt.breakdown.is_none());
        let doubled = propagate_doubled(&ham, 0.0, 1.0, &opts).unwrap();
        let g_lin = metric_transport(&doubled, &g0).unwrap();
        worst_g = worst_g.max((g_lin.matrix() - rt.last().g.matrix()).amax());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst_b <= 1e-6 && worst_g <= 1e-6 && elapsed < 30.0;
    report(
        3,
        "riccati-vs-linear-transport",
        ok,
        &format!("20 Hamiltonians, |dB| {worst_b:.3e}, |dG| {worst_g:.3e}, {elapsed:.2}s"),
    );
}

#[test]
fn criterion_04_route_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let opts = IntegratorOptions {
        dt_sample: 0.05,
        ..Default::default()
    };
    let mut worst_z: f64 = 0.0;
    let mut worst_g: f64 = 0.0;
    for k in 0..20 {
        let n = 1 + k % 2;
        let ham = random_damped_hamiltonian(n, true, &mut rng);
        let b0 = random_shape(n, &mut rng);
        let z0 = random_complex_point(n, &mut rng);

        let ct = propagate_complex(&ham, &z0, &b0, C64::new(0.0, 0.0), 0.0, 1.0, &opts).unwrap();
        assert!(ct.breakdown.is_none());
        let projected = project_trajectory(&ct).unwrap();

        let red0 = reduce_state(&z0, &b0).unwrap();
        let g0 = metric_from_shape(&b0).unwrap();
        let beta0 = 2.0 * red0.sigma.im / opts.hbar;
        let rt = propagate_real(&ham, &red0.real_centre, &g0, beta0, 0.0, 1.0, &opts).unwrap();
        assert!(rt.breakdown.is_none());
        assert_eq!(projected.samples.len(), rt.samples.len());
        for (a, b) in projected.samples.iter().zip(rt.samples.iter()) {
            worst_z = worst_z.max((a.z.as_vector() - b.z.as_vector()).amax());
            worst_g = worst_g.max((a.g.matrix() - b.g.matrix()).amax());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst_z <= 1e-5 && worst_g <= 1e-5 && elapsed < 30.0;
    report(
        4,
        "route-equivalence",
        ok,
        &format!("20 Hamiltonians, |dZ| {worst_z:.3e}, |dG| {worst_g:.3e}, {elapsed:.2}s"),
    );
}

fn example_detail(run: &nhcoherent::oracles::ExampleRun) -> String {
    run.deviations
        .iter()
        .map(|d| format!("{}={:.3e}", d.name, d.value))
        .collect::<Vec<_>>()
        .join(", ")
}

#[test]
fn criterion_05_contraction_attractor() {
    let run = run_example(&ExampleSpec::contraction(), &IntegratorOptions::default()).unwrap();
    let metric = run
        .deviations
        .iter()
        .find(|d| d.name == "metric_vs_closed_form")
        .unwrap();
    let centre = run
        .deviations
        .iter()
        .find(|d| d.name == "attractor_centre_decay")
        .unwrap();
    let ok = run.passed() && metric.threshold == 1e-6 && centre.threshold == 1e-6;
    report(5, "contraction-attractor", ok, &example_detail(&run));
}

#[test]
fn criterion_06_finite_time_blowup() {
    let run = run_example(&ExampleSpec::blowup(), &IntegratorOptions::default()).unwrap();
    let breakdown = run
        .deviations
        .iter()
        .find(|d| d.name == "breakdown_time")
        .unwrap();
    let centre = run
        .deviations
        .iter()
        .find(|d| d.name == "centre_at_0p9")
        .unwrap();
    let ok = run.passed() && breakdown.threshold == 1e-3 && centre.threshold == 1e-6;
    report(6, "finite-time-blowup", ok, &example_detail(&run));
}

#[test]
fn criterion_07_damped_oscillator() {
    let run =
        run_example(&ExampleSpec::damped_oscillator(), &IntegratorOptions::default()).unwrap();
    let stationary = run
        .deviations
        .iter()
        .find(|d| d.name == "stationary_shape_residual")
        .unwrap();
    let ode = run
        .deviations
        .iter()
        .find(|d| d.name == "centre_ode_residual")
        .unwrap();
    let signs = run
        .deviations
        .iter()
        .find(|d| d.name == "sign_change_deficit")
        .unwrap();
    let ok = run.passed()
        && stationary.threshold == 1e-12
        && ode.threshold == 1e-5
        && signs.value == 0.0;
    report(7, "damped-oscillator", ok, &example_detail(&run));
}

#[test]
fn criterion_08_pt_shifted_oscillator() {
    let run = run_example(&ExampleSpec::pt_shifted(), &IntegratorOptions::default()).unwrap();
    let radius = run
        .deviations
        .iter()
        .find(|d| d.name == "radius_drift")
        .unwrap();
    let beta = run
        .deviations
        .iter()
        .find(|d| d.name == "log_norm_vs_closed_form")
        .unwrap();
    let closure = run
        .deviations
        .iter()
        .find(|d| d.name == "loop_closure")
        .unwrap();
    let ok = run.passed()
        && radius.threshold == 1e-5
        && beta.threshold == 1e-5
        && closure.threshold == 1e-4;
    report(8, "pt-shifted-oscillator", ok, &example_detail(&run));
}

#[test]
fn criterion_09_schrodinger_residual_and_adjudication() {
    let opts = IntegratorOptions {
        dt_sample: 1e-3,
        ..Default::default()
    };

    // harmonic oscillator
    let ham = QuadraticHamiltonian::quadratic(CMat::identity(2, 2)).unwrap();
    let z0 = PhasePoint::from_real(&[0.0, 1.0]).unwrap();
    let b0 = nhcoherent::geometry::ShapeMatrix::scalar(C64::new(0.0, 1.0)).unwrap();
    let ct = propagate_complex(&ham, &z0, &b0, C64::new(0.0, 0.0), 0.0, 0.2, &opts).unwrap();
    let grid = GridSpec::centered(0.0, 8.0, 512).unwrap();
    let res_harmonic = schrodinger_residual(&ct, &ham, &grid).unwrap().max_residual;

    // blowup example before breakdown (t <= 0.5)
    let h = CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 1.0),
        ],
    );
    let ham_b = QuadraticHamiltonian::quadratic(h).unwrap();
    let ctb = propagate_complex(&ham_b, &z0, &b0, C64::new(0.0, 0.0), 0.0, 0.5, &opts).unwrap();
    let grid_b = GridSpec::centered(1.5, 14.0, 512).unwrap();
    let res_blowup = schrodinger_residual(&ctb, &ham_b, &grid_b)
        .unwrap()
        .max_residual;

    // ablation control: removing the trace term must break the residual
    let ablated = ablate_alpha_trace(&ct, &ham).unwrap();
    let res_ablated = schrodinger_residual(&ablated, &ham, &grid)
        .unwrap()
        .max_residual;

    // adjudication of the log-norm ODE variants against the projected truth
    let adj = adjudicate_norm_variant(&IntegratorOptions::default()).unwrap();
    let winner_gap = adj.closed_form_gap.min(adj.norm_exact_gap);

    let ok = res_harmonic <= 1e-4
        && res_blowup <= 1e-4
        && res_ablated >= 1e-1
        && adj.reference_residual <= 1e-4
        && winner_gap <= 1e-5;
    report(
        9,
        "schrodinger-residual-and-adjudication",
        ok,
        &format!(
            "harmonic {res_harmonic:.3e}, blowup {res_blowup:.3e}, ablated {res_ablated:.3e}, verdict {:?} (gaps {:.3e} vs {:.3e}), reference residual {:.3e}",
            adj.verdict, adj.closed_form_gap, adj.norm_exact_gap, adj.reference_residual
        ),
    );
}

#[test]
fn criterion_10_plain_positivity_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let opts = IntegratorOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        dt_sample: 0.01,
        ..Default::default()
    };
    let mut worst_drop: f64 = 0.0;
    for k in 0..20 {
        let n = 1 + k % 2;
        let ham = random_damped_hamiltonian(n, false, &mut rng);
        let b = random_shape(n, &mut rng);
        let points: Vec<PhasePoint> =
            (0..10).map(|_| random_kernel_point(&b, &mut rng)).collect();

        // compose short flows so every sample shares one integration path
        let mut s = CMat::identity(2 * n, 2 * n);
        let mut prev: Vec<f64> = points
            .iter()
            .map(|z| positivity_form(z, z).unwrap().re)
            .collect();
        for step in 0..100 {
            let t0 = step as f64 * 0.01;
            let seg = propagate_flow(&ham, t0, t0 + 0.01, &opts).unwrap();
            s = seg.matrix() * &s;
            for (z, h_prev) in points.iter().zip(prev.iter_mut()) {
                let sz = PhasePoint::new(&s * z.as_vector()).unwrap();
                let h_now = positivity_form(&sz, &sz).unwrap().re;
                assert!(h_now > 0.0);
                worst_drop = worst_drop.max((*h_prev - h_now) / h_prev.abs());
                *h_prev = h_now;
            }
        }
    }
    let ok = worst_drop <= 1e-10;
    report(
        10,
        "plain-positivity-monotone",
        ok,
        &format!("20 flows, 100 times, 10 kernel points: worst relative decrease {worst_drop:.3e}"),
    );
}
