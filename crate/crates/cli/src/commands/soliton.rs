use lmcf::curves::PlanarCurve;
use lmcf::io::{write_curves, write_patch};
use lmcf::solitons::SolitonKind;
use lmcf::surface::{ResidualStats, ScalarField};
use serde::{Deserialize, Serialize};

use super::{check_times, setup_family};
use crate::output::{probe, Check, Failure, Output};
use crate::settings::{flags, positive, resolve, CommonArgs, Config, FamilyArgs};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// Evaluation time; defaults to 0 (1/2 for expanders).
    pub t: Option<f64>,
    /// Bound on the interior Lagrangian residual.
    pub tolerance: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            t: None,
            tolerance: 1e-3,
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
    pub t: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

pub fn run(args: &Args) -> Result<(Output, Option<std::path::PathBuf>), Failure> {
    let mut cfg: Config<Settings> = resolve(&args.common, &[args.family.overlay()?, flags(args)])?;
    positive("tolerance", cfg.settings.tolerance)?;
    let (desc, fam) = setup_family(&mut cfg, SolitonKind::GrimReaper, 0.05, |h| h)?;
    let t = cfg
        .settings
        .t
        .unwrap_or(if desc.kind == SolitonKind::Expander { 0.5 } else { 0.0 });
    check_times(&fam, &[t])?;
    cfg.settings.t = Some(t);

    let patch = probe("evaluate", fam.evaluate(&desc.window, t))?;
    let calc = probe("calculus", patch.calculus())?;
    let theta = probe("lagrangian-angle", calc.lagrangian_angle())?;
    let h_norm = probe(
        "mean-curvature",
        ScalarField::new(
            "mean_curvature_norm",
            calc.mean_curvature().iter().map(|h| h.norm()).collect(),
        ),
    )?;
    let lagrangian = ResidualStats::of(&patch.grid, calc.lagrangian_residual().into_iter());
    let max_h = ResidualStats::of(&patch.grid, h_norm.values.iter().copied());

    let mut out = Output::new("make-soliton", &cfg);
    out.set("family", &desc);
    out.set("t", t);
    out.set("grid", patch.grid);
    out.set("nodes", patch.grid.len());
    out.set("angle_range", theta.range());
    out.set("max_mean_curvature", max_h);
    out.set("lagrangian_residual", lagrangian);
    out.set("asymptotic_angles", fam.asymptotic_angles());
    out.line(format!(
        "{:?} at t = {t}: {} x {} nodes",
        desc.kind, patch.grid.nu, patch.grid.nv
    ));
    let (lo, hi) = theta.range();
    out.line(format!("Lagrangian angle in [{lo:.6}, {hi:.6}]"));
    if let Some((a0, a1)) = fam.asymptotic_angles() {
        out.line(format!("asymptotic angles {a0:.10} {a1:.10}"));
    }
    out.check(Check::at_most(
        "lagrangian_residual",
        lagrangian.interior,
        cfg.settings.tolerance,
    ));

    let mut family_json = serde_json::to_string_pretty(&desc).expect("descriptor serializes");
    family_json.push('\n');
    out.file("family.json", family_json);
    out.file(
        "patch.csv",
        probe("write-patch", write_patch(&patch, &[&theta, &h_norm]))?,
    );
    if let Some((points, _)) = fam.generating_curve() {
        let curve = probe("generating-curve", PlanarCurve::open(points.to_vec()))?;
        out.file("curve.csv", write_curves([&curve]));
    }
    Ok((out, cfg.out))
}
