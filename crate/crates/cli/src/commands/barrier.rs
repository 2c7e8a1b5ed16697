use std::f64::consts::{FRAC_PI_2, PI};

use lmcf::diagnostics::{barrier_residual, decay_envelope, laplace_integral, BarrierParams, BarrierReport};
use lmcf::io::{write_patch, write_table};
use lmcf::solitons::{SolitonFamily, SolitonKind, Window};
use lmcf::surface::SurfacePatch;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::setup_family;
use crate::output::{probe, Check, Failure, Output};
use crate::settings::{flags, parse_list, positive, resolve, CommonArgs, Config, FamilyArgs, NumList};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub alpha: f64,
    pub delta: f64,
    pub b: f64,
    pub r_min: f64,
    /// Repeat the residual at half the spacing and compare `R0`.
    pub refine: bool,
    /// Allowed relative change of `R0` under refinement.
    pub stability: f64,
    /// Nodes beyond `margin_factor * R0` must have non-positive residual.
    pub margin_factor: f64,
    pub laplace_r: Vec<f64>,
    /// Reference angle of the decay envelope; chosen per family when unset.
    pub theta_bar: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        let p = BarrierParams::default();
        Self {
            alpha: p.alpha,
            delta: p.delta,
            b: p.b,
            r_min: p.r_min,
            refine: true,
            stability: 0.05,
            margin_factor: 1.1,
            laplace_r: vec![0.0, 1.0, 10.0, 100.0],
            theta_bar: None,
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
    /// Barrier exponent, must be below 1/3.
    #[arg(long = "exponent")]
    #[serde(rename = "alpha")]
    pub exponent: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub refine: Option<bool>,
    #[arg(long)]
    pub stability: Option<f64>,
    #[arg(long)]
    pub margin_factor: Option<f64>,
    #[arg(long, value_parser = parse_list)]
    pub laplace_r: Option<NumList>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_bar: Option<f64>,
}

fn evaluate(fam: &SolitonFamily, kind: SolitonKind, w: &Window) -> Result<SurfacePatch, Failure> {
    let t = if kind == SolitonKind::Expander { 0.5 } else { 0.0 };
    probe("evaluate", fam.evaluate(w, t))
}

/// Positive residuals at interior nodes beyond `radius`.
fn positive_beyond(p: &SurfacePatch, rep: &BarrierReport, radius: f64) -> usize {
    (0..p.grid.len())
        .filter(|&k| {
            rep.included[k]
                && !p.grid.in_boundary_band(k)
                && p.positions[k].norm() >= radius
                && rep.residual.values[k] > 0.0
        })
        .count()
}

pub fn run(args: &Args) -> Result<(Output, Option<std::path::PathBuf>), Failure> {
    let mut cfg: Config<Settings> = resolve(&args.common, &[args.family.overlay()?, flags(args)])?;
    {
        let s = &cfg.settings;
        if !(s.alpha < 1.0 / 3.0 && s.alpha >= 0.0) {
            return Err(Failure::Validation(format!("alpha = {} must lie in [0, 1/3)", s.alpha)));
        }
        positive("b", s.b)?;
        positive("r_min", s.r_min)?;
        positive("stability", s.stability)?;
        if !(s.margin_factor >= 1.0) {
            return Err(Failure::Validation("margin_factor must be at least 1".into()));
        }
        if !(s.delta >= 0.0) || s.laplace_r.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
            return Err(Failure::Validation("delta and laplace_r must be non-negative".into()));
        }
    }
    let refine = cfg.settings.refine;
    let (desc, fam) = setup_family(&mut cfg, SolitonKind::GrimReaper, 0.02, |h| {
        if refine {
            0.5 * h
        } else {
            h
        }
    })?;
    let s = cfg.settings.clone();
    let params = BarrierParams {
        alpha: s.alpha,
        delta: s.delta,
        b: s.b,
        r_min: s.r_min,
    };

    let patch = evaluate(&fam, desc.kind, &desc.window)?;
    let rep = probe("barrier", barrier_residual(&patch, &params))?;
    let mut out = Output::new("barrier", &cfg);
    out.set("family", &desc);
    out.set("R0", rep.r0);
    out.set("excluded_nodes", rep.excluded);
    out.line(format!("{:?}, h = {}: R0 = {:.6}", desc.kind, desc.window.h, rep.r0));
    let beyond = positive_beyond(&patch, &rep, s.margin_factor * rep.r0);
    let mut positive_total = beyond;
    out.set("positive_beyond", beyond);

    if s.refine {
        let w = Window {
            h: 0.5 * desc.window.h,
            hv: Some(0.5 * desc.window.hv()),
            ..desc.window
        };
        let fine_patch = evaluate(&fam, desc.kind, &w)?;
        let fine = probe("barrier", barrier_residual(&fine_patch, &params))?;
        let change = if rep.r0 == 0.0 && fine.r0 == 0.0 {
            0.0
        } else {
            (fine.r0 - rep.r0).abs() / rep.r0.max(fine.r0)
        };
        let fine_beyond = positive_beyond(&fine_patch, &fine, s.margin_factor * fine.r0);
        positive_total += fine_beyond;
        out.set("R0_fine", fine.r0);
        out.set("relative_change", change);
        out.set("positive_beyond_fine", fine_beyond);
        out.line(format!(
            "h = {}: R0 = {:.6} (relative change {change:.3e})",
            w.h, fine.r0
        ));
        out.check(Check::at_most("r0_grid_stability", change, s.stability));
    }
    out.line(format!(
        "positive residuals beyond {} R0: {positive_total}",
        s.margin_factor
    ));
    out.check(Check::holds("no_positive_residual_beyond", positive_total == 0));

    let theta_bar = match s.theta_bar {
        Some(a) => a,
        None => match desc.kind {
            SolitonKind::GrimReaper => FRAC_PI_2,
            _ => match fam.asymptotic_angles() {
                Some((a0, _)) => a0,
                None => probe("lagrangian-angle", lmcf::surface::lagrangian_angle(&patch))?.values[0],
            },
        },
    };
    let env = probe(
        "decay-envelope",
        decay_envelope(&patch, theta_bar, s.alpha, s.b, s.r_min),
    )?;
    out.set("decay", json!({ "theta_bar": theta_bar, "min_margin": env.min_margin }));
    out.line(format!(
        "decay envelope about theta = {theta_bar:.6}: min margin {:.3e}",
        env.min_margin
    ));

    let mut laplace = Vec::new();
    let mut rows = Vec::new();
    for &r in &s.laplace_r {
        let value = probe("laplace-integral", laplace_integral(r))?;
        let scaled = r.sqrt() * value;
        rows.push(vec![r, value, scaled]);
        laplace.push(json!({ "r": r, "laplace_value": value, "scaled": scaled }));
        out.line(format!("I({r}) = {value:.12e}, sqrt(r) I(r) = {scaled:.12}"));
        if r == 0.0 {
            out.check(Check::at_most("laplace_at_zero", (value - 2.0 * PI).abs(), 1e-10));
        } else if r >= 100.0 {
            let target = (2.0 * PI).sqrt();
            out.check(Check::at_most(
                format!("laplace_asymptotic(r={r})"),
                (scaled - target).abs() / target,
                0.01,
            ));
        }
    }
    out.set("laplace", laplace);
    out.file(
        "barrier.csv",
        probe("write-patch", write_patch(&patch, &[&rep.residual, &rep.relative]))?,
    );
    out.file(
        "laplace.csv",
        write_table("laplace-integral v1", &["r", "laplace_value", "scaled"], &rows),
    );
    Ok((out, cfg.out))
}
