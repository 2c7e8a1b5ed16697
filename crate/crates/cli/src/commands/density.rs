use lmcf::diagnostics::{gaussian_density, DensityReport, DENSITY_TOLERANCE};
use lmcf::io::write_table;
use lmcf::solitons::SolitonKind;
use lmcf::AmbientVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{check_times, setup_family};
use crate::output::{probe, Check, Failure, Output};
use crate::settings::{flags, parse_list, positive, resolve, CommonArgs, Config, FamilyArgs, NumList};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// Time `T` of the backwards heat kernel.
    #[serde(rename = "T")]
    pub big_t: f64,
    pub times: Vec<f64>,
    pub centers: Vec<[f64; 4]>,
    /// Extra centers drawn uniformly from the ball of radius `random_radius`.
    pub random_centers: usize,
    pub random_radius: f64,
    /// Radius of the evaluated piece around each center; derived from `T - t` when unset.
    pub rho: Option<f64>,
    pub tolerance: f64,
    /// Allowed increase of the density between consecutive times.
    pub slack: f64,
    /// Tolerance against the closed form for planes.
    pub plane_tolerance: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            big_t: 1.0,
            times: vec![-2.0, -1.5, -1.0, -0.5, 0.0],
            centers: vec![[0.0; 4]],
            random_centers: 0,
            random_radius: 1.0,
            rho: None,
            tolerance: DENSITY_TOLERANCE,
            slack: 1e-4,
            plane_tolerance: 1e-6,
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
    /// Time `T` of the backwards heat kernel.
    #[arg(long = "big-t", allow_hyphen_values = true)]
    #[serde(rename = "T")]
    pub big_t: Option<f64>,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub times: Option<NumList>,
    /// A single center `x1,y1,x2,y2` (replaces the configured list).
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    #[serde(skip)]
    pub x0: Option<NumList>,
    #[arg(long)]
    pub random_centers: Option<usize>,
    #[arg(long)]
    pub random_radius: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub slack: Option<f64>,
}

fn random_centers(seed: u64, count: usize, radius: f64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        if x.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            out.push(x.map(|c| c * radius));
        }
    }
    out
}

pub fn run(args: &Args) -> Result<(Output, Option<std::path::PathBuf>), Failure> {
    let mut overlay = flags(args);
    if let Some(NumList(x)) = &args.x0 {
        if x.len() != 4 {
            return Err(Failure::Validation("--x0 expects x1,y1,x2,y2".into()));
        }
        overlay["centers"] = json!([x]);
    }
    let mut cfg: Config<Settings> = resolve(&args.common, &[args.family.overlay()?, overlay])?;
    {
        let s = &mut cfg.settings;
        positive("tolerance", s.tolerance)?;
        if s.tolerance >= 1.0 {
            return Err(Failure::Validation("tolerance must be below 1".into()));
        }
        positive("slack", s.slack)?;
        positive("random_radius", s.random_radius)?;
        if s.times.is_empty() || s.times.iter().any(|&t| !(t < s.big_t)) {
            return Err(Failure::Validation(format!(
                "times must be non-empty and below T = {}",
                s.big_t
            )));
        }
        s.times.sort_by(f64::total_cmp);
        if let Some(rho) = s.rho {
            positive("rho", rho)?;
        }
    }
    let (desc, fam) = setup_family(&mut cfg, SolitonKind::GrimReaper, 0.05, |h| h)?;
    check_times(&fam, &cfg.settings.times)?;
    let s = cfg.settings.clone();
    let mut centers = s.centers.clone();
    centers.extend(random_centers(cfg.seed, s.random_centers, s.random_radius));
    if centers.is_empty() {
        return Err(Failure::Validation("no density centers".into()));
    }

    let mut out = Output::new("density", &cfg);
    out.set("family", &desc);
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let h = desc.window.h;
    for (ci, c) in centers.iter().enumerate() {
        let x0 = AmbientVector::new(c[0], c[1], c[2], c[3]);
        let mut series: Vec<DensityReport> = Vec::new();
        for &t in &s.times {
            let tau = s.big_t - t;
            let rho = s.rho.unwrap_or(x0.norm() + 10.0 * tau.sqrt() + 1.0);
            let windows = probe("density", fam.ball_windows(t, rho, h))?;
            let patches = probe("density", fam.evaluate_all(&windows, t))?;
            let rep = probe("density", gaussian_density(&patches, x0, s.big_t, t, s.tolerance))?;
            let expected = if desc.kind == SolitonKind::Plane {
                let a = desc.alpha.unwrap_or(0.0);
                let along = x0.x1 * x0.x1 + (x0.x2 * a.cos() + x0.y2 * a.sin()).powi(2);
                Some((-(x0.norm_sq() - along).max(0.0) / (4.0 * tau)).exp())
            } else {
                None
            };
            rows.push(vec![
                ci as f64,
                c[0],
                c[1],
                c[2],
                c[3],
                t,
                rep.value,
                rep.tail_bound,
                rep.truncation_radius,
                if rep.truncated { 1.0 } else { 0.0 },
                expected.unwrap_or(f64::NAN),
            ]);
            if let Some(e) = expected {
                out.check(Check::at_most(
                    format!("plane_density[{ci}](t={t})"),
                    (rep.value - e).abs(),
                    s.plane_tolerance,
                ));
            }
            out.check(Check::holds(format!("not_truncated[{ci}](t={t})"), !rep.truncated));
            out.line(format!(
                "center {ci} t = {t:>5}: density {:.10} (tail bound {:.2e}, radius {:.2})",
                rep.value, rep.tail_bound, rep.truncation_radius
            ));
            entries.push(json!({ "center_index": ci, "t": t, "report": rep, "expected": expected }));
            series.push(rep);
        }
        let increase = series
            .windows(2)
            .map(|w| w[1].value - w[0].value)
            .fold(f64::NEG_INFINITY, f64::max);
        if series.len() > 1 {
            out.check(Check::at_most(format!("monotone[{ci}]"), increase, s.slack));
        }
    }
    out.set("centers", &centers);
    out.set("entries", entries);
    out.file(
        "density.csv",
        write_table(
            "gaussian-density v1",
            &[
                "center",
                "x1",
                "y1",
                "x2",
                "y2",
                "t",
                "density",
                "tail_bound",
                "truncation_radius",
                "truncated",
                "expected",
            ],
            &rows,
        ),
    );
    Ok((out, cfg.out))
}
