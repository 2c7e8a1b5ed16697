use std::f64::consts::PI;

use lmcf::curves::{expander_curve, flow_until, wrap_angle, CurveFlowState, FlowOptions, PlanarCurve};
use lmcf::diagnostics::{blow_down, detect_planes, gaussian_density, translator_identities, DetectOptions};
use lmcf::solitons::{make_grim_reaper, make_jlt_from, make_plane, SolitonFamily, Window};
use lmcf::surface::{lagrangian_angle, mean_curvature, SurfacePatch};
use lmcf::AmbientVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn jlt() -> SolitonFamily {
    make_jlt_from(&expander_curve(1.0, 40.0, 0.01).unwrap())
}

/// `e^{i phi} [[a, -conj b], [b, conj a]]` with `|a|^2 + |b|^2 = 1`; its determinant is `e^{2 i phi}`.
fn random_unitary(rng: &mut impl Rng) -> ([[Complex64; 2]; 2], f64) {
    let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = Complex64::new(v[0], v[1]) / n;
    let b = Complex64::new(v[2], v[3]) / n;
    let phi = rng.gen_range(-PI..PI);
    let e = Complex64::from_polar(1.0, phi);
    ([[e * a, -e * b.conj()], [e * b, e * a.conj()]], phi)
}

fn apply(u: &[[Complex64; 2]; 2], x: AmbientVector) -> AmbientVector {
    let (z1, z2) = (x.z1(), x.z2());
    AmbientVector::from_complex(u[0][0] * z1 + u[0][1] * z2, u[1][0] * z1 + u[1][1] * z2)
}

fn interior(p: &SurfacePatch) -> impl Iterator<Item = usize> + '_ {
    (0..p.grid.len()).filter(|&k| !p.grid.in_boundary_band(k))
}

#[test]
fn unitary_maps_shift_the_angle_by_the_determinant_phase() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = jlt().evaluate(&Window::square(2.0, 0.05), 0.0).unwrap();
    let theta = lagrangian_angle(&p).unwrap();
    let h = mean_curvature(&p).unwrap();
    for _ in 0..5 {
        let (u, phi) = random_unitary(&mut rng);
        let q = p.map_positions(|x| apply(&u, x));
        let theta_q = lagrangian_angle(&q).unwrap();
        let h_q = mean_curvature(&q).unwrap();
        for k in interior(&p) {
            assert!(wrap_angle(theta_q.values[k] - theta.values[k] - 2.0 * phi).abs() < 1e-9);
            assert!((h_q[k].norm() - h[k].norm()).abs() < 1e-9);
        }
    }
}

#[test]
fn grim_reaper_curvature_is_sech() {
    // the profile x1 = log cosh s, y1 = gd(s) has curvature sech s
    let p = make_grim_reaper()
        .evaluate(&Window::new([-2.0, 2.0], [-0.5, 0.5], 0.01), 0.0)
        .unwrap();
    let h = mean_curvature(&p).unwrap();
    let worst = interior(&p)
        .map(|k| {
            let s = p.grid.u(p.grid.ij(k).0);
            (h[k].norm() - 1.0 / s.cosh()).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn translator_identities_are_second_order() {
    let f = make_grim_reaper();
    let w = Window::grim_reaper([-1.0, 1.0], [-0.5, 0.5], 0.04).unwrap();
    let coarse = translator_identities(&f.evaluate(&w, 0.0).unwrap(), 0.0).unwrap();
    let fine_w = Window {
        h: 0.02,
        hv: Some(0.02),
        ..w
    };
    let fine = translator_identities(&f.evaluate(&fine_w, 0.0).unwrap(), 0.0).unwrap();
    let ratio = coarse.laplace_x1.interior / fine.laplace_x1.interior;
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn scaling_preserves_angle_and_inverts_curvature() {
    let p = jlt().evaluate(&Window::square(2.0, 0.05), 0.0).unwrap();
    let q = p.scaled(3.0);
    let (tp, tq) = (lagrangian_angle(&p).unwrap(), lagrangian_angle(&q).unwrap());
    let (hp, hq) = (mean_curvature(&p).unwrap(), mean_curvature(&q).unwrap());
    for k in interior(&p) {
        assert!((tp.values[k] - tq.values[k]).abs() < 1e-12);
        assert!((3.0 * hq[k].norm() - hp[k].norm()).abs() < 1e-9);
    }
}

#[test]
fn detected_planes_are_scale_equivariant() {
    let f = jlt();
    let opts = DetectOptions::default();
    let patches = blow_down(&f, 0.05, -1.0, 1.0, 0.02).unwrap();
    let base = detect_planes(&patches, 1.0, &opts).unwrap();
    let scaled: Vec<SurfacePatch> = patches.iter().map(|p| p.scaled(2.5)).collect();
    let other = detect_planes(&scaled, 2.5, &opts).unwrap();
    assert_eq!(base.planes.len(), 2);
    assert!(base.matches(&other, 1e-9));
}

#[test]
fn density_of_two_planes_adds() {
    let (a, b) = (make_plane(0.0), make_plane(1.1));
    let mut patches = a.evaluate_all(&a.ball_windows(0.0, 12.0, 0.05).unwrap(), 0.0).unwrap();
    patches.extend(b.evaluate_all(&b.ball_windows(0.0, 12.0, 0.05).unwrap(), 0.0).unwrap());
    let rep = gaussian_density(&patches, AmbientVector::ZERO, 1.0, 0.0, 1e-8).unwrap();
    assert!(!rep.truncated);
    assert!((rep.value - 2.0).abs() < 1e-6, "{}", rep.value);
}

#[test]
fn shrinking_circle_radius() {
    let c = PlanarCurve::circle(Complex64::new(0.3, -0.2), 1.0, 200).unwrap();
    let run = flow_until(CurveFlowState::new(c).unwrap(), 0.25, &FlowOptions::default(), |_| {}).unwrap();
    assert!(!run.halted);
    let pts = run.state.curve.points();
    let center = pts.iter().sum::<Complex64>() / pts.len() as f64;
    let radius = pts.iter().map(|p| (p - center).norm()).sum::<f64>() / pts.len() as f64;
    let expected = (1.0 - 2.0 * run.state.time).sqrt();
    assert!((radius - expected).abs() / expected < 0.01, "{radius} vs {expected}");
    assert!((center - Complex64::new(0.3, -0.2)).norm() < 1e-9);
}
