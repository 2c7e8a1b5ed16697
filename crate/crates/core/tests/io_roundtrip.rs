use lmcf::curves::PlanarCurve;
use lmcf::io::{fmt_f64, read_curves, read_patch, write_curves, write_patch};
use lmcf::solitons::{make_grim_reaper, Window};
use lmcf::surface::lagrangian_angle;
use num_complex::Complex64;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

proptest! {
    #[test]
    fn seventeen_digits_round_trip(x in finite()) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn curves_round_trip_bit_for_bit(
        parts in prop::collection::vec(prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 2..20), 1..4)
    ) {
        let curves: Vec<PlanarCurve> = parts
            .iter()
            .filter_map(|p| PlanarCurve::open(p.iter().map(|&(x, y)| Complex64::new(x, y)).collect()).ok())
            .collect();
        prop_assume!(!curves.is_empty());
        let back = read_curves(&write_curves(&curves)).unwrap();
        prop_assert_eq!(back.len(), curves.len());
        for (a, b) in curves.iter().zip(&back) {
            prop_assert_eq!(a.points(), b.as_slice());
        }
    }
}

#[test]
fn grim_patch_with_angle_round_trips() {
    let p = make_grim_reaper()
        .evaluate(&Window::new([-1.0, 1.0], [-0.5, 0.5], 0.1), 0.3)
        .unwrap();
    let theta = lagrangian_angle(&p).unwrap();
    let text = write_patch(&p, &[&theta]).unwrap();
    let (q, fields) = read_patch(&text).unwrap();
    assert_eq!(q.positions, p.positions);
    assert_eq!(fields, vec![theta]);
    assert_eq!((q.grid.nu, q.grid.nv), (p.grid.nu, p.grid.nv));
    assert!((q.grid.hu - p.grid.hu).abs() < 1e-15 && (q.grid.hv - p.grid.hv).abs() < 1e-15);
}
