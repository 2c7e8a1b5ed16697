use std::f64::consts::PI;

use lmcf::curves::wrap_angle;
use lmcf::diagnostics::{expander_residual, flux_check, graph_equation_residual, translator_identities, FluxCheck};
use lmcf::io::fmt_f64;
use lmcf::solitons::{SolitonFamily, SolitonKind, Window};
use lmcf::surface::{liouville_primitive, ResidualStats, SurfacePatch};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{check_times, setup_family};
use crate::output::{probe, Check, Failure, Output};
use crate::settings::{flags, parse_list, positive, resolve, CommonArgs, Config, FamilyArgs, NumList};

/// Identities asserted on translators; the others are reported only.
const ASSERTED: [&str; 5] = [
    "angle_constant",
    "curvature_norm",
    "laplace_x1",
    "laplace_theta",
    "translator",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// Reference angle of the eigenfunction identity.
    pub theta_bar: f64,
    pub tolerance: f64,
    /// Smallest accepted error ratio between spacings `h` and `h/2`.
    pub min_ratio: f64,
    pub refine: bool,
    /// Times at which expanders are checked.
    pub s_values: Vec<f64>,
    /// Time at which products are checked.
    pub t: f64,
    pub flux_tolerance: f64,
    /// Bound on `|holonomy| / loop length` for exactness.
    pub holonomy_tolerance: f64,
    /// Relative tolerance of the seam holonomy of circle products.
    pub seam_tolerance: f64,
    /// Translator windows `u0,u1,v0,v1` far out on the ends, checked for the graph equation.
    pub graph_windows: Vec<[f64; 4]>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            theta_bar: 0.3,
            tolerance: 1e-3,
            min_ratio: 3.5,
            refine: true,
            s_values: vec![0.5, 1.0, 2.0],
            t: 0.0,
            flux_tolerance: 0.02,
            holonomy_tolerance: 1e-6,
            seam_tolerance: 5e-3,
            graph_windows: vec![[8.0, 11.0, -2.0, 2.0], [-11.0, -8.0, -2.0, 2.0]],
        }
    }
}

#[derive(Clone, Debug, clap::Args, Serialize)]
pub struct Args {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub family: FamilyArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_bar: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub min_ratio: Option<f64>,
    /// Also run at `h/2` and check the convergence ratio.
    #[arg(long)]
    pub refine: Option<bool>,
    #[arg(long, value_parser = parse_list)]
    pub s_values: Option<NumList>,
    #[arg(long)]
    pub t: Option<f64>,
}

fn ratio(coarse: f64, fine: f64) -> f64 {
    if coarse < 1e-12 {
        f64::INFINITY
    } else {
        coarse / fine
    }
}

fn halved(w: &Window) -> Window {
    Window {
        h: 0.5 * w.h,
        hv: Some(0.5 * w.hv()),
        ..*w
    }
}

struct Residuals {
    rows: Vec<(String, ResidualStats, Option<ResidualStats>)>,
}

impl Residuals {
    fn csv(&self) -> String {
        let mut s = String::from("# verify-residuals v1\nname,interior_h,boundary_h,interior_h2,boundary_h2,ratio\n");
        for (name, c, f) in &self.rows {
            let (fi, fb) = f.map_or((f64::NAN, f64::NAN), |f| (f.interior, f.boundary));
            let r = f.map_or(f64::NAN, |f| ratio(c.interior, f.interior));
            s.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                fmt_f64(c.interior),
                fmt_f64(c.boundary),
                fmt_f64(fi),
                fmt_f64(fb),
                fmt_f64(r)
            ));
        }
        s
    }
}

/// Three nested parameter rectangles and the annulus between the outer and inner one.
type Rect = (usize, usize, usize, usize);

fn flux_regions(p: &SurfacePatch) -> Vec<(Rect, Option<Rect>)> {
    let g = p.grid;
    let rect = |a: f64| {
        let i = ((a * (g.nu - 1) as f64).round() as usize).max(3);
        let j = ((a * (g.nv - 1) as f64).round() as usize).max(3);
        (i, g.nu - 1 - i, j, g.nv - 1 - j)
    };
    vec![
        (rect(0.3), None),
        (rect(0.15), None),
        (rect(0.05), None),
        (rect(0.05), Some(rect(0.3))),
    ]
}

fn translating(
    out: &mut Output,
    fam: &SolitonFamily,
    window: &Window,
    s: &Settings,
    residuals: &mut Residuals,
) -> Result<(), Failure> {
    let p = probe("evaluate", fam.evaluate(window, 0.0))?;
    let coarse = probe("translator-identities", translator_identities(&p, s.theta_bar))?;
    let fine = if s.refine {
        let q = probe("evaluate", fam.evaluate(&halved(window), 0.0))?;
        Some(probe("translator-identities", translator_identities(&q, s.theta_bar))?)
    } else {
        None
    };
    let mut ratios = serde_json::Map::new();
    for (k, (name, c)) in coarse.entries().into_iter().enumerate() {
        let f = fine.as_ref().map(|f| f.entries()[k].1);
        residuals.rows.push((name.into(), c, f));
        if let Some(f) = f {
            ratios.insert(name.into(), json!(ratio(c.interior, f.interior)));
        }
        if ASSERTED.contains(&name) {
            out.check(Check::at_most(name, c.interior, s.tolerance));
            if let Some(f) = f {
                out.check(Check::at_least(
                    format!("{name}_ratio"),
                    ratio(c.interior, f.interior),
                    s.min_ratio,
                ));
            }
        }
    }
    out.set("identities", json!({ "h": coarse, "h_half": fine }));
    out.set("ratios", ratios);
    out.line(format!("{:<16} {:>12} {:>12} {:>8}", "identity", "h", "h/2", "ratio"));
    for (name, c, f) in &residuals.rows {
        let (fi, r) = f.map_or((f64::NAN, f64::NAN), |f| (f.interior, ratio(c.interior, f.interior)));
        out.line(format!("{name:<16} {:>12.4e} {:>12.4e} {:>8.3}", c.interior, fi, r));
    }

    let mut fluxes: Vec<FluxCheck> = Vec::new();
    for (k, (outer, inner)) in flux_regions(&p).into_iter().enumerate() {
        let f = probe("flux", flux_check(&p, outer, inner))?;
        out.check(Check::at_most(
            format!("flux_region_{k}"),
            f.relative_error,
            s.flux_tolerance,
        ));
        fluxes.push(f);
    }
    out.set("flux", &fluxes);

    let lp = liouville(out, &p, s.holonomy_tolerance)?;
    holonomy_checks(out, &lp, s.holonomy_tolerance);

    if fam.kind == SolitonKind::JltTranslator {
        let (a0, a1) = fam.asymptotic_angles().expect("translators carry a generating curve");
        let mut graphs = Vec::new();
        for (k, gw) in s.graph_windows.iter().enumerate() {
            let w = Window::new([gw[0], gw[1]], [gw[2], gw[3]], window.h).with_hv(window.hv());
            let gp = probe("evaluate", fam.evaluate(&w, 0.0))?;
            let theta = probe("lagrangian-angle", gp.calculus().and_then(|c| c.lagrangian_angle()))?;
            let mid = theta.values[gp.grid.idx(gp.grid.nu / 2, gp.grid.nv / 2)];
            let plane = if wrap_angle(mid - a0).abs() <= wrap_angle(mid - a1).abs() {
                a0
            } else {
                a1
            };
            let r = probe("graph-equation", graph_equation_residual(&gp, plane))?;
            out.check(Check::at_most(format!("graph_equation_{k}"), r.interior, s.tolerance));
            graphs.push(json!({ "window": gw, "plane_angle": plane, "residual": r }));
        }
        out.set("graph_equation", graphs);
    }
    Ok(())
}

fn holonomy_checks(out: &mut Output, lp: &lmcf::surface::LiouvillePrimitive, tol: f64) {
    out.check(Check::at_most("cell_holonomy", lp.max_cell_holonomy, tol));
    out.check(Check::at_most(
        "boundary_holonomy",
        lp.boundary.value.abs() / lp.boundary.loop_length,
        tol,
    ));
}

fn liouville(out: &mut Output, p: &SurfacePatch, tol: f64) -> Result<lmcf::surface::LiouvillePrimitive, Failure> {
    let lp = probe("liouville", liouville_primitive(p, tol))?;
    out.set(
        "liouville",
        json!({
            "max_cell_holonomy": lp.max_cell_holonomy,
            "boundary": lp.boundary,
            "seam_cycles": lp.seam_cycles,
            "exact": lp.exact,
        }),
    );
    out.line(format!(
        "Liouville holonomy: cells {:.3e}, boundary {:.3e} over length {:.4}",
        lp.max_cell_holonomy, lp.boundary.value, lp.boundary.loop_length
    ));
    Ok(lp)
}

pub fn run(args: &Args) -> Result<(Output, Option<std::path::PathBuf>), Failure> {
    let mut cfg: Config<Settings> = resolve(&args.common, &[args.family.overlay()?, flags(args)])?;
    {
        let s = &cfg.settings;
        positive("tolerance", s.tolerance)?;
        positive("min_ratio", s.min_ratio)?;
        positive("flux_tolerance", s.flux_tolerance)?;
        positive("holonomy_tolerance", s.holonomy_tolerance)?;
        positive("seam_tolerance", s.seam_tolerance)?;
    }
    let refine = cfg.settings.refine;
    let (desc, fam) = setup_family(&mut cfg, SolitonKind::GrimReaper, 0.01, |h| {
        if refine {
            0.5 * h
        } else {
            h
        }
    })?;
    let s = cfg.settings.clone();
    let mut out = Output::new("verify", &cfg);
    out.set("family", &desc);
    out.line(format!("{:?}, h = {}", desc.kind, desc.window.h));
    let mut residuals = Residuals { rows: Vec::new() };
    match desc.kind {
        SolitonKind::GrimReaper | SolitonKind::JltTranslator => {
            translating(&mut out, &fam, &desc.window, &s, &mut residuals)?;
        }
        SolitonKind::Plane => {
            let p = probe("evaluate", fam.evaluate(&desc.window, 0.0))?;
            let c = probe("calculus", p.calculus())?;
            let theta = probe("lagrangian-angle", c.lagrangian_angle())?;
            let (lo, hi) = theta.range();
            let h = ResidualStats::of(&p.grid, c.mean_curvature().iter().map(|v| v.norm()));
            let lag = ResidualStats::of(&p.grid, c.lagrangian_residual().into_iter());
            residuals.rows.push(("mean_curvature".into(), h, None));
            residuals.rows.push(("lagrangian".into(), lag, None));
            out.check(Check::at_most("mean_curvature", h.interior, s.tolerance));
            out.check(Check::at_most("angle_oscillation", hi - lo, s.tolerance));
            out.check(Check::at_most("lagrangian", lag.interior, s.tolerance));
            let lp = liouville(&mut out, &p, s.holonomy_tolerance)?;
            holonomy_checks(&mut out, &lp, s.holonomy_tolerance);
        }
        SolitonKind::Expander => {
            check_times(&fam, &s.s_values)?;
            let mut rows = Vec::new();
            for &t in &s.s_values {
                let p = probe("evaluate", fam.evaluate(&desc.window, t))?;
                let c = probe("expander-residual", expander_residual(&p, t))?;
                let f = if s.refine {
                    let q = probe("evaluate", fam.evaluate(&halved(&desc.window), t))?;
                    Some(probe("expander-residual", expander_residual(&q, t))?)
                } else {
                    None
                };
                let name = format!("expander_s={t}");
                out.check(Check::at_most(name.clone(), c.interior, s.tolerance));
                if let Some(f) = f {
                    out.check(Check::at_least(
                        format!("{name}_ratio"),
                        ratio(c.interior, f.interior),
                        s.min_ratio,
                    ));
                }
                out.line(format!(
                    "expander residual at s = {t}: {:.4e} (h/2: {:.4e})",
                    c.interior,
                    f.map_or(f64::NAN, |f| f.interior)
                ));
                residuals.rows.push((name, c, f));
                rows.push(json!({ "s": t, "h": c, "h_half": f }));
            }
            out.set("expander", rows);
        }
        SolitonKind::Product => {
            check_times(&fam, &[s.t])?;
            let p = probe("evaluate", fam.evaluate(&desc.window, s.t))?;
            let c = probe("calculus", p.calculus())?;
            let lag = ResidualStats::of(&p.grid, c.lagrangian_residual().into_iter());
            residuals.rows.push(("lagrangian".into(), lag, None));
            out.check(Check::at_most("lagrangian", lag.interior, s.tolerance));
            let lp = liouville(&mut out, &p, s.holonomy_tolerance)?;
            out.check(Check::at_most(
                "cell_holonomy",
                lp.max_cell_holonomy,
                s.holonomy_tolerance,
            ));
            if desc.profile.as_deref() == Some("circle") {
                let r = desc.radius.unwrap_or(1.0);
                let expected = 2.0 * PI * (r * r - 2.0 * s.t);
                match lp.seam_cycles.first() {
                    Some(cycle) => {
                        let err = (cycle.value - expected).abs() / expected;
                        out.set("seam_holonomy", json!({ "value": cycle.value, "expected": expected }));
                        out.line(format!(
                            "seam holonomy {:.8} vs 2 pi R(t)^2 = {:.8}",
                            cycle.value, expected
                        ));
                        out.check(Check::at_most("seam_holonomy_relative_error", err, s.seam_tolerance));
                    }
                    None => out.check(Check::holds("seam_cycle_found", false)),
                }
            }
        }
    }
    out.file("residuals.csv", residuals.csv());
    Ok((out, cfg.out))
}
