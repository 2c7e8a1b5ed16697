//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lmcf::curves::{
    directed_distance, expander_curve, flow_until, grim_reaper_profile, wrap_angle, CurveFlowState, FlowOptions,
    PlanarCurve,
};
use lmcf::diagnostics::{
    barrier_residual, blow_down, coarea_check, detect_planes, expander_residual, flux_check, gaussian_density,
    graph_equation_residual, laplace_integral, static_probe, translator_identities, BarrierParams, ProbeOptions,
    TranslatorIdentities, Verdict,
};
use lmcf::solitons::{make_expander, make_grim_reaper, make_jlt_from, make_plane, make_product, SolitonFamily, Window};
use lmcf::surface::{graphical_decomposition, liouville_primitive, ResidualStats, SurfacePatch};
use lmcf::AmbientVector;
use num_complex::Complex64;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lib<T>(r: lmcf::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn jlt(step: f64) -> Result<SolitonFamily, String> {
    Ok(make_jlt_from(&lib(expander_curve(1.0, 160.0, step))?))
}

fn grim_window(h: f64) -> Window {
    Window::grim_reaper([-1.4, 1.4], [-1.0, 1.0], h).unwrap()
}

fn halved(w: &Window) -> Window {
    Window {
        h: 0.5 * w.h,
        hv: Some(0.5 * w.hv()),
        ..*w
    }
}

const TRANSLATOR_THETA: f64 = 0.3;

fn identity_rows(i: &TranslatorIdentities) -> [(&'static str, ResidualStats); 4] {
    [
        ("angle", i.angle_constant),
        ("|H|", i.curvature_norm),
        ("x1", i.laplace_x1),
        ("theta", i.laplace_theta),
    ]
}

fn identities_at(
    f: &SolitonFamily,
    w: &Window,
) -> Result<(TranslatorIdentities, TranslatorIdentities, Duration), String> {
    let start = Instant::now();
    let c = lib(translator_identities(&lib(f.evaluate(w, 0.0))?, TRANSLATOR_THETA))?;
    let fine = lib(translator_identities(
        &lib(f.evaluate(&halved(w), 0.0))?,
        TRANSLATOR_THETA,
    ))?;
    Ok((c, fine, start.elapsed()))
}

fn convergent(name: &str, c: f64, f: f64) -> (bool, String) {
    let ratio = c / f;
    (c <= 1e-3 && ratio >= 3.5, format!("{name} {c:.2e} (x{ratio:.2})"))
}

fn criterion_1() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, f, w) in [
        ("grim", make_grim_reaper(), grim_window(0.01)),
        ("jlt", jlt(0.005)?, Window::square(3.0, 0.01)),
    ] {
        let (c, fine, took) = identities_at(&f, &w)?;
        let mut line = Vec::new();
        for ((name, a), (_, b)) in identity_rows(&c).into_iter().zip(identity_rows(&fine)) {
            let (good, text) = convergent(name, a.interior, b.interior);
            ok &= good;
            line.push(text);
        }
        ok &= took <= Duration::from_secs(30);
        parts.push(format!("{label}: {} in {:.1}s", line.join(", "), took.as_secs_f64()));
    }
    ensure(ok, parts.join("; "))
}

fn criterion_2() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, f, w) in [
        ("grim", make_grim_reaper(), grim_window(0.01)),
        ("jlt", jlt(0.005)?, Window::square(3.0, 0.01)),
    ] {
        let (c, fine, _) = identities_at(&f, &w)?;
        let (good, text) = convergent(label, c.translator.interior, fine.translator.interior);
        ok &= good;
        parts.push(text);
    }
    ensure(ok, format!("max|H - e1^perp|: {}", parts.join(", ")))
}

fn criterion_3() -> Outcome {
    let f = make_expander(&lib(expander_curve(1.0, 160.0, 0.005))?);
    let w = Window::new([-2.0, 2.0], [-3.0, 3.0], 0.01);
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [0.5, 1.0, 2.0] {
        let r = lib(expander_residual(&lib(f.evaluate(&w, s))?, s))?;
        ok &= r.interior <= 1e-3;
        parts.push(format!("s={s}: {:.2e}", r.interior));
    }
    ensure(ok, parts.join(", "))
}

fn criterion_4() -> Outcome {
    let opts = FlowOptions::default();
    let circle = lib(PlanarCurve::circle(Complex64::new(0.0, 0.0), 1.0, 100))?;
    let run = lib(flow_until(lib(CurveFlowState::new(circle))?, 1.0, &opts, |_| {}))?;
    let extinction = (run.state.time - 0.5).abs() / 0.5;

    let (a, b) = (-1.55, 1.55);
    let start = lib(grim_reaper_profile(a, b, 0.01).and_then(|c| c.redistributed()))?;
    let moved = lib(flow_until(lib(CurveFlowState::new(start))?, 0.5, &opts, |_| {}))?;
    let exact = lib(grim_reaper_profile(a, b, 1e-3))?;
    let shifted: Vec<Complex64> = moved
        .state
        .curve
        .points()
        .iter()
        .map(|p| p - moved.state.time)
        .collect();
    let drift = directed_distance(&shifted, exact.points(), f64::INFINITY) / (b - a);
    ensure(
        run.halted && extinction <= 0.01 && !moved.halted && drift <= 0.02,
        format!(
            "circle extinction t = {:.6} ({:.2e} rel), grim drift {:.2e} of width",
            run.state.time, extinction, drift
        ),
    )
}

fn criterion_5() -> Outcome {
    let f = jlt(0.01)?;
    let (a0, a1) = f.asymptotic_angles().unwrap();
    let o = ProbeOptions::default();
    let patches = lib(blow_down(&f, 1e-2, -1.0, o.radius, o.h))?;
    let c = lib(detect_planes(&patches, o.radius, &o.detect))?;
    let mut ok = c.planes.len() == 2 && c.planes.iter().all(|p| p.multiplicity == 1);
    for p in &c.planes {
        ok &= wrap_angle(p.angle - a0).abs().min(wrap_angle(p.angle - a1).abs()) <= 2e-2;
    }
    let angles: Vec<String> = c.planes.iter().map(|p| format!("{:.4}", p.angle)).collect();
    let scales = lmcf::diagnostics::default_scales();
    let s_values = [-1.0, -0.5, 0.25, 0.5];
    let v_jlt = lib(static_probe(&f, &scales, &s_values, &o))?.verdict;
    let v_plane = lib(static_probe(&make_plane(0.4), &scales, &s_values, &o))?.verdict;
    ok &= v_jlt == Verdict::NonStatic && v_plane == Verdict::Static;
    ensure(
        ok,
        format!(
            "planes [{}] vs asymptotes [{a0:.4}, {a1:.4}]; jlt {v_jlt:?}, plane {v_plane:?}",
            angles.join(", ")
        ),
    )
}

fn density_at(f: &SolitonFamily, x0: AmbientVector, big_t: f64, t: f64, h: f64) -> Result<f64, String> {
    let rho = x0.norm() + 10.0 * (big_t - t).sqrt() + 1.0;
    let patches = lib(f.evaluate_all(&lib(f.ball_windows(t, rho, h))?, t))?;
    let rep = lib(gaussian_density(&patches, x0, big_t, t, 1e-8))?;
    if rep.truncated {
        return Err(format!("density window truncated at t = {t}"));
    }
    Ok(rep.value)
}

fn criterion_6() -> Outcome {
    let plane = make_plane(0.0);
    let through = density_at(&plane, AmbientVector::ZERO, 1.0, 0.0, 0.05)?;
    let d: f64 = 0.7;
    let offset = density_at(&plane, AmbientVector::new(0.3, d, -0.2, 0.0), 1.0, 0.0, 0.05)?;
    let expected = (-d * d / 4.0).exp();
    let mut ok = (through - 1.0).abs() <= 1e-6 && (offset - expected).abs() <= 1e-6;
    let mut parts = vec![format!(
        "plane {:.2e}, offset {:.2e}",
        (through - 1.0).abs(),
        (offset - expected).abs()
    )];
    for (label, f) in [("grim", make_grim_reaper()), ("jlt", jlt(0.01)?)] {
        let mut values = Vec::new();
        for t in [-2.0, -1.5, -1.0, -0.5, 0.0] {
            values.push(density_at(&f, AmbientVector::ZERO, 1.0, t, 0.05)?);
        }
        let rise = values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        ok &= rise <= 1e-4;
        parts.push(format!(
            "{label} {:.4} -> {:.4} (max rise {rise:.1e})",
            values[0], values[4]
        ));
    }
    ensure(ok, parts.join(", "))
}

fn positive_beyond(p: &SurfacePatch, residual: &[f64], included: &[bool], radius: f64) -> usize {
    (0..p.grid.len())
        .filter(|&k| included[k] && !p.grid.in_boundary_band(k) && p.positions[k].norm() >= radius && residual[k] > 0.0)
        .count()
}

fn criterion_7() -> Outcome {
    let params = BarrierParams::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, f, w) in [
        ("grim", make_grim_reaper(), grim_window(0.02)),
        ("jlt", jlt(0.01)?, Window::square(3.0, 0.02)),
    ] {
        let mut r0 = Vec::new();
        let mut beyond = 0;
        for w in [w, halved(&w)] {
            let p = lib(f.evaluate(&w, 0.0))?;
            let rep = lib(barrier_residual(&p, &params))?;
            beyond += positive_beyond(&p, &rep.residual.values, &rep.included, 1.1 * rep.r0);
            r0.push(rep.r0);
        }
        let change = if r0[0] == r0[1] {
            0.0
        } else {
            (r0[1] - r0[0]).abs() / r0[0].max(r0[1])
        };
        ok &= change <= 0.05 && beyond == 0;
        parts.push(format!(
            "{label} R0 {:.4} / {:.4} ({change:.1e}), {beyond} positive beyond",
            r0[0], r0[1]
        ));
    }
    ensure(ok, parts.join(", "))
}

fn criterion_8() -> Outcome {
    let p = lib(make_grim_reaper().evaluate(&grim_window(0.01), 0.0))?;
    let g = p.grid;
    let rect = |a: f64| {
        let i = ((a * (g.nu - 1) as f64).round() as usize).max(3);
        let j = ((a * (g.nv - 1) as f64).round() as usize).max(3);
        (i, g.nu - 1 - i, j, g.nv - 1 - j)
    };
    let mut worst = 0.0f64;
    for a in [0.3, 0.15, 0.05] {
        worst = worst.max(lib(flux_check(&p, rect(a), None))?.relative_error);
    }
    ensure(
        worst <= 0.02,
        format!("worst relative flux error {worst:.2e} over 3 regions"),
    )
}

fn criterion_9() -> Outcome {
    let g = lib(coarea_check(
        &lib(make_grim_reaper().evaluate(&grim_window(0.01), 0.0))?,
        100,
    ))?;
    let j = lib(coarea_check(
        &lib(jlt(0.01)?.evaluate(&Window::square(3.0, 0.01), 0.0))?,
        100,
    ))?;
    ensure(
        g.relative_error <= 0.02 && j.relative_error <= 0.02,
        format!("grim {:.2e}, jlt {:.2e}", g.relative_error, j.relative_error),
    )
}

fn criterion_10() -> Outcome {
    let zero = lib(laplace_integral(0.0))?;
    let scaled = 10.0 * lib(laplace_integral(100.0))?;
    let target = (2.0 * PI).sqrt();
    let rel = (scaled - target).abs() / target;
    ensure(
        (zero - 2.0 * PI).abs() <= 1e-10 && rel <= 0.01,
        format!(
            "|I(0) - 2pi| = {:.1e}, sqrt(100) I(100) off by {rel:.2e}",
            (zero - 2.0 * PI).abs()
        ),
    )
}

fn criterion_11() -> Outcome {
    let f = jlt(0.01)?;
    let (a0, a1) = f.asymptotic_angles().unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (u, plane) in [([8.0, 11.0], a1), ([-11.0, -8.0], a0)] {
        let p = lib(f.evaluate(&Window::new(u, [-2.0, 2.0], 0.01), 0.0))?;
        let d = lib(graphical_decomposition(std::slice::from_ref(&p), &[plane], 1.0, 0.5))?;
        let covered: usize = d.components.iter().map(|c| c.nodes.len()).sum();
        let graphical = d.components.len() == 1 && d.components[0].degree == 1 && covered == p.grid.len();
        let r = lib(graph_equation_residual(&p, plane))?;
        ok &= graphical && r.interior <= 1e-3;
        parts.push(format!(
            "u in {u:?}: graphical {graphical}, residual {:.1e}",
            r.interior
        ));
    }
    ensure(ok, parts.join(", "))
}

fn criterion_12() -> Outcome {
    let p = lib(jlt(0.01)?.evaluate(&Window::square(3.0, 0.01), 0.0))?;
    let lp = lib(liouville_primitive(&p, 1e-6))?;
    let boundary = lp.boundary.value.abs() / lp.boundary.loop_length;
    let r: f64 = 1.5;
    let gamma = lib(PlanarCurve::circle(Complex64::new(0.0, 0.0), r, 400))?;
    let q = lib(make_product(&gamma).evaluate(&Window::new([0.0, 1.0], [-1.0, 1.0], 0.0025).with_hv(0.01), 0.0))?;
    let seam = lib(liouville_primitive(&q, 1e-6))?;
    let expected = 2.0 * PI * r * r;
    let seam_err = seam
        .seam_cycles
        .iter()
        .map(|c| (c.value.abs() - expected).abs() / expected)
        .fold(f64::NAN, f64::min);
    ensure(
        lp.max_cell_holonomy <= 1e-6 && boundary <= 1e-6 && seam_err <= 5e-3,
        format!(
            "jlt cells {:.1e}, boundary {boundary:.1e} per length; circle product {:.2e} rel",
            lp.max_cell_holonomy, seam_err
        ),
    )
}

fn criterion_13() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [&[&str]; 3] = [
        &["make-soliton", "--family", "jlt", "--h", "0.1"],
        &[
            "density",
            "--family",
            "grim",
            "--h",
            "0.1",
            "--times=-1,0",
            "--random-centers",
            "3",
        ],
        &["flow-curve", "--preset", "circle", "--points", "60"],
    ];
    let read = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        let mut v: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        v.sort();
        v
    };
    let mut compared = 0;
    for (k, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = tmp.path().join(format!("{k}-{rep}"));
            let status = Command::new(env!("CARGO_BIN_EXE_lmcf"))
                .args(*args)
                .arg("--out")
                .arg(&dir)
                .output()
                .map_err(|e| e.to_string())?
                .status;
            if !status.success() {
                return Err(format!("`{}` exited with {status}", args.join(" ")));
            }
            outputs.push(read(&dir));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("`{}` differs between runs", args.join(" ")));
        }
        compared += outputs[0].len();
    }
    Ok(format!("{compared} files byte-identical across reruns"))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("translator identities converge", criterion_1),
        ("translator residual converges", criterion_2),
        ("expander residual", criterion_3),
        ("curve shortening benchmarks", criterion_4),
        ("blow-down planes and static probe", criterion_5),
        ("gaussian density", criterion_6),
        ("barrier radius", criterion_7),
        ("flux identity", criterion_8),
        ("coarea identity", criterion_9),
        ("laplace integral", criterion_10),
        ("graph equation", criterion_11),
        ("liouville holonomy", criterion_12),
        ("determinism", criterion_13),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{took:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{took:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
