use std::f64::consts::{FRAC_PI_2, PI};

use lmcf::curves::{
    directed_distance, flow_until, grim_reaper_profile, looped_curve, CurveFlowState, FlowOptions, PlanarCurve,
};
use lmcf::io::{write_curves, write_table};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::output::{probe, Check, Failure, Output};
use crate::settings::{flags, positive, resolve, CommonArgs, Config};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Preset {
    /// Open curve with a small loop that pinches off.
    #[serde(rename = "looped", alias = "example-1.1")]
    #[value(name = "looped", alias = "example-1.1")]
    Loop,
    /// Round circle of radius `--radius`.
    #[serde(rename = "circle")]
    Circle,
    /// Grim-reaper profile, which should translate with unit speed.
    #[serde(rename = "grim-reaper")]
    #[value(name = "grim-reaper")]
    GrimReaper,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub preset: Preset,
    pub radius: f64,
    pub points: Option<usize>,
    pub t_end: Option<f64>,
    pub cfl: f64,
    pub blowup_threshold: f64,
    pub resolution_limit: f64,
    pub redistribute: bool,
    pub sample_every: usize,
    /// `y` range of the grim-reaper profile.
    pub y_range: [f64; 2],
    pub tolerance: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        let o = FlowOptions::default();
        Self {
            preset: Preset::Loop,
            radius: 1.0,
            points: None,
            t_end: None,
            cfl: o.cfl,
            blowup_threshold: o.blowup_threshold,
            resolution_limit: o.resolution_limit,
            redistribute: o.redistribute,
            sample_every: 10,
            y_range: [-1.55, 1.55],
            tolerance: None,
        }
    }
}

#[derive(Clone, Debug, clap::Args, Serialize)]
pub struct Args {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Circle radius, or scale of the looped curve.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Number of curve points (overrides `--h`).
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Time step as a fraction of `h_min^2`.
    #[arg(long)]
    pub cfl: Option<f64>,
    #[arg(long)]
    pub blowup_threshold: Option<f64>,
    /// Halt when `max curvature * h_min` exceeds this.
    #[arg(long)]
    pub resolution_limit: Option<f64>,
    #[arg(long)]
    pub redistribute: Option<bool>,
    /// Record every n-th step in flow.csv.
    #[arg(long)]
    pub sample_every: Option<usize>,
    /// Acceptance tolerance of the preset's check.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

const LOOP_LENGTH: f64 = 8.0;

fn initial_curve(s: &Settings, h: Option<f64>) -> Result<(PlanarCurve, f64), Failure> {
    let count = |length: f64, default: usize| -> usize {
        s.points
            .or(h.map(|h| (length / h).ceil() as usize + 1))
            .unwrap_or(default)
    };
    let curve = match s.preset {
        Preset::Loop => looped_curve(s.radius, count(LOOP_LENGTH * s.radius, 600)),
        Preset::Circle => PlanarCurve::circle(Complex64::new(0.0, 0.0), s.radius, count(2.0 * PI * s.radius, 100)),
        Preset::GrimReaper => {
            let [a, b] = s.y_range;
            if !(-FRAC_PI_2 < a && a < b && b < FRAC_PI_2) {
                return Err(Failure::Validation(format!(
                    "y_range [{a}, {b}] must lie inside (-pi/2, pi/2)"
                )));
            }
            let step = match (s.points, h) {
                (Some(n), _) if n > 1 => (b - a) / (n - 1) as f64,
                (_, Some(h)) => h,
                _ => 0.01,
            };
            grim_reaper_profile(a, b, step).and_then(|c| c.redistributed())
        }
    }
    .map_err(|e| Failure::Validation(format!("cannot build the initial curve: {e}")))?;
    let spacing = curve.length() / curve.num_segments() as f64;
    Ok((curve, spacing))
}

pub fn run(args: &Args) -> Result<(Output, Option<std::path::PathBuf>), Failure> {
    let mut cfg: Config<Settings> = resolve(&args.common, &[flags(args)])?;
    let s = &mut cfg.settings;
    positive("radius", s.radius)?;
    positive("cfl", s.cfl)?;
    if s.cfl > lmcf::curves::STABILITY_FACTOR {
        return Err(Failure::Validation(format!(
            "cfl {} exceeds the stability limit {}",
            s.cfl,
            lmcf::curves::STABILITY_FACTOR
        )));
    }
    positive("blowup_threshold", s.blowup_threshold)?;
    positive("resolution_limit", s.resolution_limit)?;
    if s.sample_every == 0 {
        return Err(Failure::Validation("sample_every must be at least 1".into()));
    }
    let (curve, spacing) = initial_curve(s, cfg.h)?;
    let t_end = s.t_end.unwrap_or(match s.preset {
        Preset::Loop => 1.0,
        Preset::Circle => s.radius * s.radius,
        Preset::GrimReaper => 0.5,
    });
    positive("t_end", t_end)?;
    let tolerance = s.tolerance.unwrap_or(match s.preset {
        Preset::Loop => 0.01,
        Preset::Circle => 0.01,
        Preset::GrimReaper => 0.02,
    });
    positive("tolerance", tolerance)?;
    s.points = Some(curve.len());
    s.t_end = Some(t_end);
    s.tolerance = Some(tolerance);
    cfg.h = Some(spacing);
    let s = cfg.settings.clone();

    let opts = FlowOptions {
        blowup_threshold: s.blowup_threshold,
        resolution_limit: s.resolution_limit,
        cfl: s.cfl,
        redistribute: s.redistribute,
    };
    let start = probe("flow-curve", CurveFlowState::new(curve.clone()))?;
    let a0 = start.area;
    let row = |step: usize, st: &CurveFlowState| {
        vec![
            step as f64,
            st.time,
            st.area.unwrap_or(f64::NAN),
            st.max_curvature,
            st.curve.length(),
            st.curve.min_segment(),
        ]
    };
    let mut rows = vec![row(0, &start)];
    let mut steps = 0usize;
    let mut monotone = true;
    let mut last_area = a0;
    let mut loop_vanished_at: Option<f64> = None;
    let run = probe(
        "flow-curve",
        flow_until(start, t_end, &opts, |st| {
            steps += 1;
            match (st.area, last_area) {
                (Some(a), Some(prev)) => {
                    monotone &= a <= prev;
                    last_area = Some(a);
                }
                (None, Some(_)) if loop_vanished_at.is_none() => loop_vanished_at = Some(st.time),
                _ => {}
            }
            if steps.is_multiple_of(s.sample_every) {
                rows.push(row(steps, st));
            }
        }),
    )?;
    if !steps.is_multiple_of(s.sample_every) {
        rows.push(row(steps, &run.state));
    }

    let mut out = Output::new("flow-curve", &cfg);
    out.set("preset", s.preset);
    out.set("points", curve.len());
    out.set("halted", run.halted);
    out.set("steps", run.steps);
    out.set("final_time", run.state.time);
    out.set("max_curvature", run.state.max_curvature);
    out.set("initial_area", a0);
    out.set("final_area", run.state.area);
    out.set("area_monotone", monotone);
    out.set("loop_vanished_at", loop_vanished_at);
    out.line(format!(
        "preset {:?}, {} points, h = {:.4e}",
        s.preset,
        curve.len(),
        spacing
    ));
    out.line(format!(
        "{} after {} steps at t = {:.10}",
        if run.halted { "halted" } else { "reached t_end" },
        run.steps,
        run.state.time
    ));
    match s.preset {
        Preset::Loop => {
            let a0 = a0.ok_or_else(|| Failure::Validation("initial curve has no loop".into()))?;
            let fraction = last_area.unwrap_or(0.0) / a0;
            out.set("area_fraction", fraction);
            out.line(format!(
                "loop area {:.6e} -> {:.6e} (fraction {:.3e})",
                a0,
                a0 * fraction,
                fraction
            ));
            out.check(Check::holds("halted", run.halted));
            out.check(Check::holds("loop_area_monotone", monotone));
            out.check(Check::at_most("final_loop_area_fraction", fraction, tolerance));
        }
        Preset::Circle => {
            let expected = 0.5 * s.radius * s.radius;
            let err = (run.state.time - expected).abs() / expected;
            out.set("expected_extinction", expected);
            out.set("extinction_relative_error", err);
            out.line(format!("extinction {:.8} vs R^2/2 = {:.8}", run.state.time, expected));
            out.check(Check::holds("halted", run.halted));
            out.check(Check::at_most("extinction_relative_error", err, tolerance));
        }
        Preset::GrimReaper => {
            let [a, b] = s.y_range;
            let exact = probe("flow-curve", grim_reaper_profile(a, b, 1e-3))?;
            let moved: Vec<Complex64> = run.state.curve.points().iter().map(|p| p - run.state.time).collect();
            let width = b - a;
            let err = directed_distance(&moved, exact.points(), f64::INFINITY) / width;
            out.set("translation_error", err * width);
            out.set("profile_width", width);
            out.line(format!(
                "translation error {:.4e} ({:.3e} of the width)",
                err * width,
                err
            ));
            out.check(Check::holds("not_halted", !run.halted));
            out.check(Check::at_most("translation_error_fraction", err, tolerance));
        }
    }
    out.file("initial.csv", write_curves([&curve]));
    out.file("final.csv", write_curves([&run.state.curve]));
    out.file(
        "flow.csv",
        write_table(
            "curve-flow v1",
            &["step", "t", "area", "max_curvature", "length", "min_segment"],
            &rows,
        ),
    );
    Ok((out, cfg.out))
}
