use lmcf::diagnostics::coarea_check;
use lmcf::io::write_table;
use lmcf::solitons::SolitonKind;
use lmcf::surface::level_set;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::setup_family;
use crate::output::{probe, Check, Failure, Output};
use crate::settings::{flags, parse_list, positive, resolve, CommonArgs, Config, FamilyArgs, NumList};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// Number of levels in the coarea sum.
    pub levels: usize,
    /// Levels of the Lagrangian angle whose curves are exported; evenly
    /// spaced inside the angle range when unset.
    pub export_levels: Option<Vec<f64>>,
    pub export_count: usize,
    /// Relative tolerance of the coarea identity.
    pub tolerance: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            levels: 100,
            export_levels: None,
            export_count: 5,
            tolerance: 0.02,
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
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub export_levels: Option<NumList>,
    #[arg(long)]
    pub export_count: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

pub fn run(args: &Args) -> Result<(Output, Option<std::path::PathBuf>), Failure> {
    let mut cfg: Config<Settings> = resolve(&args.common, &[args.family.overlay()?, flags(args)])?;
    positive("tolerance", cfg.settings.tolerance)?;
    if cfg.settings.levels == 0 {
        return Err(Failure::Validation("levels must be at least 1".into()));
    }
    let (desc, fam) = setup_family(&mut cfg, SolitonKind::GrimReaper, 0.01, |h| h)?;
    let t = if desc.kind == SolitonKind::Expander { 0.5 } else { 0.0 };
    let patch = probe("evaluate", fam.evaluate(&desc.window, t))?;
    let calc = probe("calculus", patch.calculus())?;
    let theta = probe("lagrangian-angle", calc.lagrangian_angle())?;
    let (lo, hi) = theta.range();
    let export = cfg.settings.export_levels.clone().unwrap_or_else(|| {
        let n = cfg.settings.export_count;
        (0..n)
            .map(|k| lo + (k as f64 + 1.0) * (hi - lo) / (n as f64 + 1.0))
            .collect()
    });
    cfg.settings.export_levels = Some(export.clone());
    let s = cfg.settings.clone();
    let coarea = probe("coarea", coarea_check(&patch, s.levels))?;

    let mut out = Output::new("levelsets", &cfg);
    out.set("family", &desc);
    out.set("t", t);
    out.set("angle_range", [lo, hi]);
    out.set("coarea", coarea);
    out.line(format!("{:?}: Lagrangian angle in [{lo:.6}, {hi:.6}]", desc.kind));
    out.line(format!(
        "coarea: sum of level lengths {:.8} vs int |H| {:.8} (relative error {:.3e})",
        coarea.level_integral, coarea.area_integral, coarea.relative_error
    ));
    out.check(Check::at_most(
        "coarea_relative_error",
        coarea.relative_error,
        s.tolerance,
    ));

    let mut points = Vec::new();
    let mut summary = Vec::new();
    let mut reports = Vec::new();
    for &a in &export {
        let rep = probe("level-set", level_set(&calc, &theta, a))?;
        for (ci, curve) in rep.curves.iter().enumerate() {
            for x in curve.points() {
                points.push(vec![rep.level, ci as f64, x.x1, x.y1, x.x2, x.y2]);
            }
        }
        summary.push(vec![
            rep.level,
            rep.curves.len() as f64,
            rep.total_length,
            rep.max_extent,
        ]);
        out.line(format!(
            "  level {:.6}: {} curve(s), length {:.6}, max |x| {:.6}",
            rep.level,
            rep.curves.len(),
            rep.total_length,
            rep.max_extent
        ));
        reports.push(json!({
            "level": rep.level,
            "components": rep.curves.len(),
            "length": rep.total_length,
            "max_extent": rep.max_extent,
        }));
    }
    out.set("levels", reports);
    out.file(
        "levelsets.csv",
        write_table(
            "level-sets v1",
            &["level", "component", "x1", "y1", "x2", "y2"],
            &points,
        ),
    );
    out.file(
        "levels.csv",
        write_table(
            "level-set-lengths v1",
            &["level", "components", "length", "max_extent"],
            &summary,
        ),
    );
    Ok((out, cfg.out))
}
