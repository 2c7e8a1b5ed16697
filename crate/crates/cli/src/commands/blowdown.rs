use lmcf::curves::wrap_angle;
use lmcf::diagnostics::{default_scales, static_probe, BlowdownShape, DetectOptions, ProbeOptions, Verdict};
use lmcf::io::write_table;
use lmcf::solitons::SolitonKind;
use serde::{Deserialize, Serialize};

use super::setup_family;
use crate::output::{probe, Check, Failure, Output};
use crate::settings::{flags, parse_list, positive, resolve, CommonArgs, Config, FamilyArgs, NumList};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub scales: Vec<f64>,
    pub s_values: Vec<f64>,
    pub radius: f64,
    pub flat_tolerance: f64,
    pub expander_tolerance: f64,
    pub angle_tolerance: f64,
    pub cluster_tolerance: f64,
    pub band: f64,
    pub max_planes: usize,
    pub calibration_radius: f64,
    pub calibration_h: f64,
    /// Verdict the run must reach; unset means no verdict is asserted.
    pub expect: Option<Verdict>,
}

impl Default for Settings {
    fn default() -> Self {
        let o = ProbeOptions::default();
        Self {
            scales: default_scales(),
            s_values: vec![-1.0, -0.5, 0.25, 0.5],
            radius: o.radius,
            flat_tolerance: o.flat_tolerance,
            expander_tolerance: o.expander_tolerance,
            angle_tolerance: o.angle_tolerance,
            cluster_tolerance: o.detect.tolerance,
            band: o.detect.band,
            max_planes: o.detect.max_planes,
            calibration_radius: o.calibration_radius,
            calibration_h: o.calibration_h,
            expect: None,
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
    /// Blow-down scales; `1e-1.5` means `10^-1.5`.
    #[arg(long, value_parser = parse_list)]
    pub scales: Option<NumList>,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub s_values: Option<NumList>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub angle_tolerance: Option<f64>,
    #[arg(long, value_enum)]
    pub expect: Option<VerdictArg>,
}

#[derive(Clone, Copy, Debug, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VerdictArg {
    #[value(name = "static")]
    Static,
    #[value(name = "non_static", alias = "non-static")]
    NonStatic,
    #[value(name = "inconclusive")]
    Inconclusive,
}

fn shape_code(s: &BlowdownShape) -> f64 {
    match s {
        BlowdownShape::Planes(_) => 0.0,
        BlowdownShape::Expander { .. } => 1.0,
        BlowdownShape::Curved { .. } => 2.0,
        BlowdownShape::Unresolved { .. } => 3.0,
    }
}

pub fn run(args: &Args) -> Result<(Output, Option<std::path::PathBuf>), Failure> {
    let mut cfg: Config<Settings> = resolve(&args.common, &[args.family.overlay()?, flags(args)])?;
    {
        let s = &cfg.settings;
        for (name, x) in [
            ("radius", s.radius),
            ("flat_tolerance", s.flat_tolerance),
            ("expander_tolerance", s.expander_tolerance),
            ("angle_tolerance", s.angle_tolerance),
            ("cluster_tolerance", s.cluster_tolerance),
            ("band", s.band),
            ("calibration_radius", s.calibration_radius),
            ("calibration_h", s.calibration_h),
        ] {
            positive(name, x)?;
        }
        if s.scales.is_empty() || s.scales.iter().any(|&l| !(l > 0.0)) {
            return Err(Failure::Validation(
                "scales must be a non-empty list of positive numbers".into(),
            ));
        }
        if !(s.s_values.iter().any(|&t| t <= 0.0) && s.s_values.iter().any(|&t| t > 0.0)) {
            return Err(Failure::Validation(
                "s_values need both a value <= 0 and a value > 0".into(),
            ));
        }
    }
    let (desc, fam) = setup_family(&mut cfg, SolitonKind::JltTranslator, 0.02, |h| h)?;
    let s = cfg.settings.clone();
    let opts = ProbeOptions {
        radius: s.radius,
        h: desc.window.h,
        flat_tolerance: s.flat_tolerance,
        expander_tolerance: s.expander_tolerance,
        angle_tolerance: s.angle_tolerance,
        detect: DetectOptions {
            tolerance: s.cluster_tolerance,
            band: s.band,
            max_planes: s.max_planes,
        },
        calibration_radius: s.calibration_radius,
        calibration_h: s.calibration_h,
    };
    let result = probe("static-probe", static_probe(&fam, &s.scales, &s.s_values, &opts))?;

    let mut out = Output::new("blowdown", &cfg);
    out.set("family", &desc);
    out.set("verdict", result.verdict);
    out.set("scale_verdicts", &result.scale_verdicts);
    out.set("min_cos_theta", result.min_cos_theta);
    out.set("almost_calibrated", result.almost_calibrated);
    out.set("entries", &result.entries);
    out.set("asymptotic_angles", fam.asymptotic_angles());
    out.line(format!("{:?}: verdict {:?}", desc.kind, result.verdict));
    out.line(format!(
        "inf cos(theta) on the reference piece: {:.6} ({})",
        result.min_cos_theta,
        if result.almost_calibrated {
            "almost calibrated"
        } else {
            "not almost calibrated"
        }
    ));

    let mut rows = Vec::new();
    let mut plane_rows = Vec::new();
    let mut mismatched = 0usize;
    for e in &result.entries {
        let (n, m, h, r) = match &e.shape {
            BlowdownShape::Planes(c) => (c.planes.len() as f64, c.total_multiplicity() as f64, 0.0, c.residual),
            BlowdownShape::Expander { max_h, residual } | BlowdownShape::Curved { max_h, residual } => {
                (0.0, 0.0, *max_h, *residual)
            }
            BlowdownShape::Unresolved { .. } => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        rows.push(vec![e.scale, e.s, shape_code(&e.shape), n, m, h, r]);
        let desc_line = match &e.shape {
            BlowdownShape::Planes(c) => {
                let angles: Vec<String> = c
                    .planes
                    .iter()
                    .map(|p| format!("{:.6} (x{})", p.angle, p.multiplicity))
                    .collect();
                format!("planes [{}]", angles.join(", "))
            }
            BlowdownShape::Expander { max_h, residual } => {
                format!("expander, max|H| {max_h:.3e}, residual {residual:.3e}")
            }
            BlowdownShape::Curved { max_h, residual } => format!("curved, max|H| {max_h:.3e}, residual {residual:.3e}"),
            BlowdownShape::Unresolved { reason } => format!("unresolved: {reason}"),
        };
        out.line(format!("  scale {:.6e}, s = {:>6}: {desc_line}", e.scale, e.s));
        if let BlowdownShape::Planes(c) = &e.shape {
            for p in &c.planes {
                plane_rows.push(vec![
                    e.scale,
                    e.s,
                    p.angle,
                    p.multiplicity as f64,
                    p.density,
                    p.residual,
                ]);
                if let (true, Some((a0, a1))) = (e.s <= 0.0, fam.asymptotic_angles()) {
                    let d = wrap_angle(p.angle - a0).abs().min(wrap_angle(p.angle - a1).abs());
                    if d > s.angle_tolerance {
                        mismatched += 1;
                    }
                }
            }
        }
    }
    if fam.asymptotic_angles().is_some() {
        out.set("planes_off_asymptotes", mismatched);
        out.check(Check::holds("planes_match_asymptotes", mismatched == 0));
    }
    if let Some(expect) = s.expect {
        out.check(Check::holds(
            format!("verdict_is_{expect:?}").to_lowercase(),
            result.verdict == expect,
        ));
    }
    out.file(
        "blowdown.csv",
        write_table(
            "blowdown v1 (shape: 0 planes, 1 expander, 2 curved, 3 unresolved)",
            &["scale", "s", "shape", "planes", "multiplicity", "max_h", "residual"],
            &rows,
        ),
    );
    out.file(
        "planes.csv",
        write_table(
            "detected-planes v1",
            &["scale", "s", "angle", "multiplicity", "density", "residual"],
            &plane_rows,
        ),
    );
    Ok((out, cfg.out))
}
