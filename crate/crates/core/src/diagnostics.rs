//! Numerical probes built on the surface calculus: Gaussian densities, blow-downs
//! and their limit planes, the static probe, the barrier function, the Laplace
//! integral bound, decay envelopes, and residuals of the translator identities.

use std::f64::consts::PI;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ambient::{apply_j, AmbientVector, TwoFrame};
use crate::curves::wrap_angle;
use crate::error::{Error, Result};
use crate::solitons::{SolitonFamily, SolitonKind, Window};
use crate::surface::{
    flux_integral, level_set, second_fundamental_eigen, BoundaryLoop, Calculus, ResidualStats, ScalarField,
    SurfacePatch,
};

/// Backwards heat kernel `exp(-|x - x0|^2 / 4(T - t)) / 4 pi (T - t)`.
pub fn heat_kernel(x0: AmbientVector, big_t: f64, x: AmbientVector, t: f64) -> Result<f64> {
    if !(t < big_t) {
        return Err(Error::Domain(format!(
            "heat kernel needs t < T, got t = {t}, T = {big_t}"
        )));
    }
    let tau = big_t - t;
    Ok((-(x - x0).norm_sq() / (4.0 * tau)).exp() / (4.0 * PI * tau))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub center: AmbientVector,
    /// `T - t`.
    pub scale: f64,
    #[serde(rename = "density")]
    pub value: f64,
    pub truncation_radius: f64,
    pub tail_bound: f64,
    /// Quadratic area growth constant estimated from the patches.
    pub area_constant: f64,
    /// Some patch boundary lies inside the truncation radius.
    pub truncated: bool,
}

/// Default requested tail tolerance of [`gaussian_density`].
pub const DENSITY_TOLERANCE: f64 = 1e-8;

/// `(C/pi)(u + 1) e^{-u}`: the kernel mass outside `|x - x0|^2 = 4 tau u` for a
/// surface with area growth `C r^2`.
fn tail_mass(c: f64, u: f64) -> f64 {
    c / PI * (u + 1.0) * (-u).exp()
}

/// Area-weighted quadrature of the heat kernel over the patches.
pub fn gaussian_density(
    patches: &[SurfacePatch],
    x0: AmbientVector,
    big_t: f64,
    t: f64,
    tol: f64,
) -> Result<DensityReport> {
    heat_kernel(x0, big_t, x0, t)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Invalid("density tolerance must lie in (0, 1)".into()));
    }
    let tau = big_t - t;
    let mut value = 0.0;
    // (distance to x0, area weight) for the growth estimate
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut nearest_edge = f64::INFINITY;
    for p in patches {
        let c = p.calculus()?;
        let w = c.area_weights();
        for (k, x) in p.positions.iter().enumerate() {
            let d2 = (*x - x0).norm_sq();
            value += w[k] * (-d2 / (4.0 * tau)).exp() / (4.0 * PI * tau);
            samples.push((d2.sqrt(), w[k]));
            let (i, j) = p.grid.ij(k);
            if i == 0 || j == 0 || i + 1 == p.grid.nu || j + 1 == p.grid.nv {
                nearest_edge = nearest_edge.min(d2.sqrt());
            }
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let r_max = samples.last().map_or(0.0, |s| s.0);
    let mut area_constant = 0.0f64;
    if r_max > 0.0 {
        let mut acc = 0.0;
        let mut next = 0;
        for k in 4..=16 {
            let r = r_max * k as f64 / 16.0;
            while next < samples.len() && samples[next].0 <= r {
                acc += samples[next].1;
                next += 1;
            }
            area_constant = area_constant.max(acc / (r * r));
        }
    }
    let c1 = area_constant.max(f64::MIN_POSITIVE);
    // smallest u with tail_mass(c1, u) <= tol / 2
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while tail_mass(c1, hi) > 0.5 * tol {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail_mass(c1, mid) > 0.5 * tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let truncation_radius = (4.0 * tau * hi).sqrt();
    Ok(DensityReport {
        center: x0,
        scale: tau,
        value,
        truncation_radius,
        tail_bound: tail_mass(c1, hi),
        area_constant,
        truncated: nearest_edge < truncation_radius,
    })
}

/// Blow-down `lambda L_{s / lambda^2}` restricted to `B_radius`, with ambient
/// node spacing about `h`. Returns one patch per parameter window.
pub fn blow_down(f: &SolitonFamily, lambda: f64, s: f64, radius: f64, h: f64) -> Result<Vec<SurfacePatch>> {
    if !(lambda > 0.0) {
        return Err(Error::Domain("blow-down scale must be positive".into()));
    }
    let t = s / (lambda * lambda);
    let windows = f.ball_windows(t, radius / lambda, h / lambda)?;
    windows.iter().map(|w| Ok(f.evaluate(w, t)?.scaled(lambda))).collect()
}

/// Blow-down evaluated on a fixed parameter window.
pub fn blow_down_window(f: &SolitonFamily, lambda: f64, s: f64, w: &Window) -> Result<SurfacePatch> {
    if !(lambda > 0.0) {
        return Err(Error::Domain("blow-down scale must be positive".into()));
    }
    Ok(f.evaluate(w, s / (lambda * lambda))?.scaled(lambda))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectedPlane {
    /// Mean Lagrangian angle of the cluster.
    pub angle: f64,
    pub multiplicity: usize,
    /// Gaussian density of the cluster at the origin.
    pub density: f64,
    /// Largest distance of a cluster node to the fitted plane.
    pub residual: f64,
    #[serde(skip)]
    pub basis: Option<TwoFrame>,
    pub nodes: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlaneConfiguration {
    pub planes: Vec<DetectedPlane>,
    pub residual: f64,
    /// Nodes in clusters whose density rounds to zero.
    pub discarded_nodes: usize,
}

impl PlaneConfiguration {
    pub fn total_multiplicity(&self) -> usize {
        self.planes.iter().map(|p| p.multiplicity).sum()
    }

    /// Same planes with the same multiplicities, angles within `tol`.
    pub fn matches(&self, other: &Self, tol: f64) -> bool {
        self.planes.len() == other.planes.len()
            && self.planes.iter().all(|p| {
                other
                    .planes
                    .iter()
                    .any(|q| q.multiplicity == p.multiplicity && wrap_angle(q.angle - p.angle).abs() <= tol)
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectOptions {
    /// Clustering tolerance on the oriented tangent plane, in radians.
    pub tolerance: f64,
    /// Accepted distance of a cluster density from an integer.
    pub band: f64,
    pub max_planes: usize,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-2,
            band: 0.2,
            max_planes: 8,
        }
    }
}

/// Unit simple bivector `a ^ b` of an oriented orthonormal frame. For two
/// oriented planes with principal angles `p, q` the distance between these
/// is `sqrt(2 - 2 cos p cos q)`, close to `sqrt(p^2 + q^2)`.
fn bivector(f: &TwoFrame) -> [f64; 6] {
    let (a, b) = (f.a.to_array(), f.b.to_array());
    let mut out = [0.0; 6];
    let mut n = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            out[n] = a[i] * b[j] - a[j] * b[i];
            n += 1;
        }
    }
    out
}

fn bivector_distance(p: &[f64; 6], q: &[f64; 6]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

struct Cluster {
    reference: [f64; 6],
    /// (patch, node)
    members: Vec<(usize, usize)>,
}

/// Clusters the nodes inside `B_radius` by oriented tangent plane and fits a
/// plane to each cluster. Multiplicities are Gaussian densities at the origin
/// with `T - t = radius^2 / 16`, rounded.
pub fn detect_planes(patches: &[SurfacePatch], radius: f64, opts: &DetectOptions) -> Result<PlaneConfiguration> {
    let calculi: Vec<Calculus> = patches.iter().map(|p| p.calculus()).collect::<Result<_>>()?;
    let weights: Vec<Vec<f64>> = calculi.iter().map(|c| c.area_weights()).collect();
    let tau = radius * radius / 16.0;
    let mut clusters: Vec<Cluster> = Vec::new();
    for (pi, c) in calculi.iter().enumerate() {
        for (k, x) in c.patch.positions.iter().enumerate() {
            if x.norm() >= radius {
                continue;
            }
            let frame = c
                .tangent_frame(k)
                .orthonormalized()
                .ok_or_else(|| Error::Invalid("degenerate tangent frame".into()))?;
            let b = bivector(&frame);
            match clusters
                .iter_mut()
                .find(|cl| bivector_distance(&cl.reference, &b) <= opts.tolerance)
            {
                Some(cl) => cl.members.push((pi, k)),
                None => clusters.push(Cluster {
                    reference: b,
                    members: vec![(pi, k)],
                }),
            }
        }
    }
    let mut config = PlaneConfiguration::default();
    for cl in clusters {
        let mut density = 0.0;
        let mut phase = Complex64::new(0.0, 0.0);
        let mut mass = 0.0;
        let mut centroid = Vector4::zeros();
        for &(pi, k) in &cl.members {
            let x = patches[pi].positions[k];
            let w = weights[pi][k];
            density += w * (-x.norm_sq() / (4.0 * tau)).exp() / (4.0 * PI * tau);
            phase += calculi[pi].holomorphic_phase(k) * w;
            mass += w;
            centroid += Vector4::from(x.to_array()) * w;
        }
        let m = density.round();
        if (density - m).abs() > opts.band {
            return Err(Error::AmbiguousMultiplicity { density });
        }
        if m < 1.0 {
            config.discarded_nodes += cl.members.len();
            continue;
        }
        centroid /= mass;
        let mut cov = Matrix4::zeros();
        for &(pi, k) in &cl.members {
            let d = Vector4::from(patches[pi].positions[k].to_array()) - centroid;
            cov += d * d.transpose() * weights[pi][k];
        }
        let eig = SymmetricEigen::new(cov);
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let col = |n: usize| {
            let v = eig.eigenvectors.column(order[n]);
            AmbientVector::new(v[0], v[1], v[2], v[3])
        };
        let (a, mut b) = (col(0), col(1));
        let bv = bivector(&TwoFrame::new(a, b));
        if bv.iter().zip(&cl.reference).map(|(x, y)| x * y).sum::<f64>() < 0.0 {
            b = -b;
        }
        let basis = TwoFrame::new(a, b);
        let c4 = AmbientVector::new(centroid[0], centroid[1], centroid[2], centroid[3]);
        let residual = cl
            .members
            .iter()
            .map(|&(pi, k)| {
                let d = patches[pi].positions[k] - c4;
                (d - a * d.dot(a) - b * d.dot(b)).norm()
            })
            .fold(0.0, f64::max);
        config.residual = config.residual.max(residual);
        config.planes.push(DetectedPlane {
            angle: phase.arg(),
            multiplicity: m as usize,
            density,
            residual,
            basis: Some(basis),
            nodes: cl.members.len(),
        });
    }
    if config.planes.len() > opts.max_planes {
        return Err(Error::Topology(format!(
            "{} planes detected, more than the limit of {}",
            config.planes.len(),
            opts.max_planes
        )));
    }
    config.planes.sort_by(|p, q| p.angle.total_cmp(&q.angle));
    Ok(config)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Static,
    NonStatic,
    Inconclusive,
}

/// What a single blow-down looks like in the unit ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum BlowdownShape {
    /// Flat: a union of planes (possibly empty).
    Planes(PlaneConfiguration),
    /// Curved with small expander residual `|H - x^perp / 2s|`.
    Expander {
        max_h: f64,
        residual: f64,
    },
    /// Curved and not an expander.
    Curved {
        max_h: f64,
        residual: f64,
    },
    Unresolved {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowdownEntry {
    pub scale: f64,
    pub s: f64,
    pub shape: BlowdownShape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowdownProbe {
    pub scales: Vec<f64>,
    pub s_values: Vec<f64>,
    pub entries: Vec<BlowdownEntry>,
    pub scale_verdicts: Vec<Verdict>,
    pub verdict: Verdict,
    /// `inf cos(theta)` on a reference piece of the unscaled solution.
    pub min_cos_theta: f64,
    pub almost_calibrated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    /// Ball radius in which blow-downs are examined.
    pub radius: f64,
    /// Ambient node spacing of blow-down patches.
    pub h: f64,
    /// `max |H|` below which a blow-down counts as flat.
    pub flat_tolerance: f64,
    /// Relative expander residual below which a curved blow-down counts as an expander.
    pub expander_tolerance: f64,
    /// Angle tolerance when comparing configurations at different `s`.
    pub angle_tolerance: f64,
    pub detect: DetectOptions,
    /// Radius and spacing of the reference piece used for the calibration check.
    pub calibration_radius: f64,
    pub calibration_h: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            radius: 1.0,
            h: 0.02,
            flat_tolerance: 0.05,
            expander_tolerance: 0.1,
            angle_tolerance: 2e-2,
            detect: DetectOptions::default(),
            calibration_radius: 4.0,
            calibration_h: 0.1,
        }
    }
}

/// Default blow-down scales `10^-1, 10^-1.5, 10^-2`.
pub fn default_scales() -> Vec<f64> {
    vec![0.1, 10f64.powf(-1.5), 0.01]
}

fn curvature_in_ball(patches: &[SurfacePatch], s: f64, radius: f64) -> Result<(f64, f64)> {
    let (mut max_h, mut residual) = (0.0f64, 0.0f64);
    for p in patches {
        let c = p.calculus()?;
        let hv = c.mean_curvature();
        for k in 0..c.len() {
            let x = p.positions[k];
            if x.norm() >= radius || p.grid.in_boundary_band(k) {
                continue;
            }
            max_h = max_h.max(hv[k].norm());
            residual = residual.max((hv[k] - c.normal(k, x) * (0.5 / s)).norm());
        }
    }
    Ok((max_h, residual))
}

fn classify(f: &SolitonFamily, scale: f64, s: f64, o: &ProbeOptions) -> Result<BlowdownShape> {
    let patches = match blow_down(f, scale, s, o.radius, o.h) {
        Ok(p) => p,
        Err(e @ Error::Domain(_)) => return Ok(BlowdownShape::Unresolved { reason: e.to_string() }),
        Err(e) => return Err(e),
    };
    if s > 0.0 {
        let (max_h, residual) = curvature_in_ball(&patches, s, o.radius)?;
        if max_h > o.flat_tolerance {
            return Ok(if residual <= o.expander_tolerance * max_h {
                BlowdownShape::Expander { max_h, residual }
            } else {
                BlowdownShape::Curved { max_h, residual }
            });
        }
    }
    match detect_planes(&patches, o.radius, &o.detect) {
        Ok(c) => Ok(BlowdownShape::Planes(c)),
        Err(e @ (Error::AmbiguousMultiplicity { .. } | Error::Topology(_))) => {
            Ok(BlowdownShape::Unresolved { reason: e.to_string() })
        }
        Err(e) => Err(e),
    }
}

fn scale_verdict(entries: &[&BlowdownEntry], tol: f64) -> Verdict {
    let mut configs: Vec<&PlaneConfiguration> = Vec::new();
    let mut unresolved = false;
    for e in entries {
        match &e.shape {
            BlowdownShape::Planes(c) => configs.push(c),
            BlowdownShape::Expander { .. } | BlowdownShape::Curved { .. } => return Verdict::NonStatic,
            BlowdownShape::Unresolved { .. } => unresolved = true,
        }
    }
    if configs.windows(2).any(|w| !w[0].matches(w[1], tol)) {
        return Verdict::NonStatic;
    }
    if unresolved || configs.is_empty() {
        Verdict::Inconclusive
    } else {
        Verdict::Static
    }
}

/// Minimum of `cos(theta)` over the patches.
pub fn min_cos_theta(patches: &[SurfacePatch]) -> Result<f64> {
    let mut m = f64::INFINITY;
    for p in patches {
        let theta = p.calculus()?.lagrangian_angle()?;
        m = theta.values.iter().map(|t| t.cos()).fold(m, f64::min);
    }
    Ok(m)
}

/// Runs blow-downs of `f` at every scale and every `s` and decides whether they
/// agree: flat configurations for all `s` that coincide give `static`; a
/// curved blow-down at some `s > 0` or differing configurations give
/// `non_static`.
pub fn static_probe(f: &SolitonFamily, scales: &[f64], s_values: &[f64], o: &ProbeOptions) -> Result<BlowdownProbe> {
    if !(s_values.iter().any(|&s| s <= 0.0) && s_values.iter().any(|&s| s > 0.0)) {
        return Err(Error::Invalid("static probe needs both s <= 0 and s > 0".into()));
    }
    if scales.is_empty() || scales.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Invalid("scales must be positive".into()));
    }
    let t_ref = if f.kind == SolitonKind::Expander { 0.5 } else { 0.0 };
    let windows = f.ball_windows(t_ref, o.calibration_radius, o.calibration_h)?;
    let min_cos = min_cos_theta(&f.evaluate_all(&windows, t_ref)?)?;
    let mut entries = Vec::new();
    for &scale in scales {
        for &s in s_values {
            entries.push(BlowdownEntry {
                scale,
                s,
                shape: classify(f, scale, s, o)?,
            });
        }
    }
    let scale_verdicts: Vec<Verdict> = scales
        .iter()
        .map(|&l| {
            let at: Vec<&BlowdownEntry> = entries.iter().filter(|e| e.scale == l).collect();
            scale_verdict(&at, o.angle_tolerance)
        })
        .collect();
    let verdict = if scale_verdicts.iter().all(|v| *v == scale_verdicts[0]) {
        scale_verdicts[0]
    } else {
        Verdict::Inconclusive
    };
    Ok(BlowdownProbe {
        scales: scales.to_vec(),
        s_values: s_values.to_vec(),
        entries,
        scale_verdicts,
        verdict,
        min_cos_theta: min_cos,
        almost_calibrated: min_cos > 0.0,
    })
}

/// `B |x|^-alpha exp(-|x|/2) + delta exp(x1/2)`.
pub fn barrier_value(x: AmbientVector, alpha: f64, delta: f64, b: f64) -> f64 {
    let r = x.norm();
    b * r.powf(-alpha) * (-0.5 * r).exp() + delta * (0.5 * x.x1).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub alpha: f64,
    pub delta: f64,
    pub b: f64,
    /// Nodes closer than this to the origin are excluded.
    pub r_min: f64,
}

impl Default for BarrierParams {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            delta: 0.0,
            b: 1.0,
            r_min: 0.1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BarrierReport {
    /// `Delta V - V (|H|^2 + 1) / 4`; zero at excluded nodes.
    pub residual: ScalarField,
    /// Same residual divided by `V`.
    pub relative: ScalarField,
    pub included: Vec<bool>,
    pub excluded: usize,
    /// Largest `|x|` over interior nodes with positive residual (0 if none).
    pub r0: f64,
}

pub fn barrier_residual(p: &SurfacePatch, params: &BarrierParams) -> Result<BarrierReport> {
    if !(params.alpha < 1.0 / 3.0) {
        return Err(Error::Domain(format!(
            "barrier exponent {} must be below 1/3",
            params.alpha
        )));
    }
    let c = p.calculus()?;
    let v = ScalarField::from_positions("barrier", p, |x| barrier_value(x, params.alpha, params.delta, params.b));
    // the origin may be a node; evaluate there with a harmless stand-in
    let v = match v {
        Ok(v) => v,
        Err(_) => ScalarField::new(
            "barrier",
            p.positions
                .iter()
                .map(|&x| {
                    let val = barrier_value(x, params.alpha, params.delta, params.b);
                    if val.is_finite() {
                        val
                    } else {
                        0.0
                    }
                })
                .collect(),
        )?,
    };
    let lap = c.laplacian(&v)?;
    let hv = c.mean_curvature();
    let mut residual = vec![0.0; c.len()];
    let mut relative = vec![0.0; c.len()];
    let mut included = vec![false; c.len()];
    let mut excluded = 0;
    let mut r0 = 0.0f64;
    for k in 0..c.len() {
        let r = p.positions[k].norm();
        // the stencil must not touch the excluded core either
        if r < params.r_min {
            excluded += 1;
            continue;
        }
        let val = lap.values[k] - v.values[k] * (hv[k].norm_sq() + 1.0) / 4.0;
        if !val.is_finite() {
            excluded += 1;
            continue;
        }
        included[k] = true;
        residual[k] = val;
        relative[k] = val / v.values[k];
        if val > 0.0 && !p.grid.in_boundary_band(k) {
            r0 = r0.max(r);
        }
    }
    Ok(BarrierReport {
        residual: ScalarField::new("barrier_residual", residual)?,
        relative: ScalarField::new("barrier_relative", relative)?,
        included,
        excluded,
        r0,
    })
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for k in 0..7 {
        let x = h * GK_NODES[k];
        let s = f(c - x) + f(c + x);
        kronrod += KRONROD_WEIGHTS[k] * s;
        if k % 2 == 1 {
            gauss += GAUSS_WEIGHTS[k / 2] * s;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

/// Adaptive Gauss-Kronrod (7/15) quadrature to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        let (v, err) = gauss_kronrod(f, a, b);
        if err <= tol || depth >= 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(&f, a, b, tol, 0)
}

/// `int_0^{2 pi} exp(-r - r cos t) dt` to `1e-10` absolute.
pub fn laplace_integral(r: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("laplace integral needs r >= 0, got {r}")));
    }
    Ok(integrate(|t| (-r - r * t.cos()).exp(), 0.0, 2.0 * PI, 1e-11))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayEnvelope {
    /// Envelope minus `|theta - theta_bar| + |grad theta|`; `None` inside `r_min`.
    pub margin: Vec<Option<f64>>,
    /// `B |x|^-alpha exp(-|x|/2 - x1/2)`; `None` inside `r_min`.
    pub envelope: Vec<Option<f64>>,
    pub min_margin: f64,
    /// Node of the smallest margin.
    pub worst_node: Option<usize>,
}

/// Compares `|theta - theta_bar| + |grad theta|` with the envelope
/// `B |x|^-alpha exp(-|x|/2 - x1/2)` node by node.
pub fn decay_envelope(p: &SurfacePatch, theta_bar: f64, alpha: f64, b: f64, r_min: f64) -> Result<DecayEnvelope> {
    if !(alpha < 1.0 / 3.0) {
        return Err(Error::Domain(format!("decay exponent {alpha} must be below 1/3")));
    }
    let c = p.calculus()?;
    let theta = c.lagrangian_angle()?;
    let grad = c.gradient(&theta)?;
    let mut margin = Vec::with_capacity(c.len());
    let mut envelope = Vec::with_capacity(c.len());
    let (mut min_margin, mut worst_node) = (f64::INFINITY, None);
    for k in 0..c.len() {
        let x = p.positions[k];
        let r = x.norm();
        if r < r_min {
            margin.push(None);
            envelope.push(None);
            continue;
        }
        let env = b * r.powf(-alpha) * (-0.5 * r - 0.5 * x.x1).exp();
        envelope.push(Some(env));
        let m = env - ((theta.values[k] - theta_bar).abs() + grad[k].norm());
        if m < min_margin {
            min_margin = m;
            worst_node = Some(k);
        }
        margin.push(Some(m));
    }
    Ok(DecayEnvelope {
        margin,
        envelope,
        min_margin,
        worst_node,
    })
}

/// Residuals of the identities satisfied by translators with velocity `e1`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TranslatorIdentities {
    /// `max - min` of `theta + <J e1, x>` over interior and over all nodes.
    pub angle_constant: ResidualStats,
    /// `| |H| - |e1^perp| |`.
    pub curvature_norm: ResidualStats,
    /// `Delta x1 - |H|^2`.
    pub laplace_x1: ResidualStats,
    /// `Delta theta + <grad theta, e1>`.
    pub laplace_theta: ResidualStats,
    /// `|H - e1^perp|`.
    pub translator: ResidualStats,
    /// `Delta cos(theta) + <grad cos(theta), e1> + cos(theta) |H|^2`.
    pub cos_theta: ResidualStats,
    /// `Delta u - u (|H|^2 + 1) / 4` for `u = (theta - theta_bar) exp(x1/2)`.
    pub eigenfunction: ResidualStats,
    /// `|H - J grad theta|`.
    pub h_j_grad_theta: ResidualStats,
    /// `Delta |x|^2 - 4 - 2 <x, H>`.
    pub laplace_r2: ResidualStats,
    /// `omega` on an orthonormal tangent frame.
    pub lagrangian: ResidualStats,
}

impl TranslatorIdentities {
    pub fn entries(&self) -> [(&'static str, ResidualStats); 10] {
        [
            ("angle_constant", self.angle_constant),
            ("curvature_norm", self.curvature_norm),
            ("laplace_x1", self.laplace_x1),
            ("laplace_theta", self.laplace_theta),
            ("translator", self.translator),
            ("cos_theta", self.cos_theta),
            ("eigenfunction", self.eigenfunction),
            ("h_j_grad_theta", self.h_j_grad_theta),
            ("laplace_r2", self.laplace_r2),
            ("lagrangian", self.lagrangian),
        ]
    }
}

fn oscillation(grid: &crate::surface::Grid, values: &[f64]) -> ResidualStats {
    let (mut lo_i, mut hi_i, mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (k, &v) in values.iter().enumerate() {
        lo = lo.min(v);
        hi = hi.max(v);
        if !grid.in_boundary_band(k) {
            lo_i = lo_i.min(v);
            hi_i = hi_i.max(v);
        }
    }
    ResidualStats {
        interior: (hi_i - lo_i).max(0.0),
        boundary: hi - lo,
    }
}

pub fn translator_identities(p: &SurfacePatch, theta_bar: f64) -> Result<TranslatorIdentities> {
    let c = p.calculus()?;
    let g = &p.grid;
    let e1 = AmbientVector::e1();
    let hv = c.mean_curvature();
    let theta = c.lagrangian_angle()?;
    let grad_theta = c.gradient(&theta)?;
    let lap_theta = c.laplacian(&theta)?;
    let x1 = ScalarField::from_positions("x1", p, |x| x.x1)?;
    let lap_x1 = c.laplacian(&x1)?;
    let r2 = ScalarField::from_positions("r2", p, |x| x.norm_sq())?;
    let lap_r2 = c.laplacian(&r2)?;
    let cos_t = ScalarField::new("cos_theta", theta.values.iter().map(|t| t.cos()).collect())?;
    let grad_cos = c.gradient(&cos_t)?;
    let lap_cos = c.laplacian(&cos_t)?;
    let u = ScalarField::new(
        "u",
        theta
            .values
            .iter()
            .zip(&p.positions)
            .map(|(t, x)| (t - theta_bar) * (0.5 * x.x1).exp())
            .collect(),
    )?;
    let lap_u = c.laplacian(&u)?;
    let n = c.len();
    let e1_perp: Vec<AmbientVector> = (0..n).map(|k| c.normal(k, e1)).collect();
    let stats = |f: &dyn Fn(usize) -> f64| ResidualStats::of(g, (0..n).map(f));
    let angle_plus: Vec<f64> = (0..n)
        .map(|k| theta.values[k] + apply_j(e1).dot(p.positions[k]))
        .collect();
    Ok(TranslatorIdentities {
        angle_constant: oscillation(g, &angle_plus),
        curvature_norm: stats(&|k| hv[k].norm() - e1_perp[k].norm()),
        laplace_x1: stats(&|k| lap_x1.values[k] - hv[k].norm_sq()),
        laplace_theta: stats(&|k| lap_theta.values[k] + grad_theta[k].dot(e1)),
        translator: stats(&|k| (hv[k] - e1_perp[k]).norm()),
        cos_theta: stats(&|k| lap_cos.values[k] + grad_cos[k].dot(e1) + cos_t.values[k] * hv[k].norm_sq()),
        eigenfunction: stats(&|k| lap_u.values[k] - u.values[k] * (hv[k].norm_sq() + 1.0) / 4.0),
        h_j_grad_theta: stats(&|k| (hv[k] - apply_j(grad_theta[k])).norm()),
        laplace_r2: stats(&|k| lap_r2.values[k] - 4.0 - 2.0 * p.positions[k].dot(hv[k])),
        lagrangian: ResidualStats::of(g, c.lagrangian_residual().into_iter()),
    })
}

/// `|H - x^perp / 2s|` at every node.
pub fn expander_residual(p: &SurfacePatch, s: f64) -> Result<ResidualStats> {
    if !(s > 0.0) {
        return Err(Error::Domain("expander residual needs s > 0".into()));
    }
    let c = p.calculus()?;
    let hv = c.mean_curvature();
    Ok(ResidualStats::of(
        &p.grid,
        (0..c.len()).map(|k| (hv[k] - c.normal(k, p.positions[k]) * (0.5 / s)).norm()),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxCheck {
    /// `oint <nu, e1>` over the boundary of the region.
    pub flux: f64,
    /// `int |H|^2 dmu` over the region.
    pub integral: f64,
    pub relative_error: f64,
}

/// Both sides of `oint <nu, e1> = int |H|^2` on the parameter rectangle
/// `[i0, i1] x [j0, j1]`, minus the inner rectangle when given.
pub fn flux_check(
    p: &SurfacePatch,
    outer: (usize, usize, usize, usize),
    inner: Option<(usize, usize, usize, usize)>,
) -> Result<FluxCheck> {
    let c = p.calculus()?;
    let h2: Vec<f64> = c.mean_curvature().iter().map(|h| h.norm_sq()).collect();
    let (i0, i1, j0, j1) = outer;
    let mut flux = flux_integral(&BoundaryLoop::rectangle(&c, i0, i1, j0, j1, true)?, AmbientVector::e1())?;
    let mut integral = c.integrate_rect(&h2, i0, i1, j0, j1);
    if let Some((a0, a1, b0, b1)) = inner {
        if !(i0 <= a0 && a1 <= i1 && j0 <= b0 && b1 <= j1) {
            return Err(Error::Invalid("inner rectangle must lie inside the outer one".into()));
        }
        flux += flux_integral(
            &BoundaryLoop::rectangle(&c, a0, a1, b0, b1, false)?,
            AmbientVector::e1(),
        )?;
        integral -= c.integrate_rect(&h2, a0, a1, b0, b1);
    }
    Ok(FluxCheck {
        flux,
        integral,
        relative_error: (flux - integral).abs() / integral.abs().max(f64::MIN_POSITIVE),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoareaCheck {
    /// Midpoint sum of level-set lengths of `theta` over `levels` levels.
    pub level_integral: f64,
    /// `int |H| dmu`.
    pub area_integral: f64,
    pub levels: usize,
    pub relative_error: f64,
}

/// Both sides of `int H^1({theta = a}) da = int |H| dmu` over the patch.
pub fn coarea_check(p: &SurfacePatch, levels: usize) -> Result<CoareaCheck> {
    if levels == 0 {
        return Err(Error::Invalid("coarea check needs at least one level".into()));
    }
    let c = p.calculus()?;
    let theta = c.lagrangian_angle()?;
    let (lo, hi) = theta.range();
    let da = (hi - lo) / levels as f64;
    let mut level_integral = 0.0;
    for k in 0..levels {
        let a = lo + (k as f64 + 0.5) * da;
        level_integral += level_set(&c, &theta, a)?.total_length * da;
    }
    let h_norm: Vec<f64> = c.mean_curvature().iter().map(|h| h.norm()).collect();
    let w = c.area_weights();
    let area_integral: f64 = h_norm.iter().zip(&w).map(|(h, w)| h * w).sum();
    Ok(CoareaCheck {
        level_integral,
        area_integral,
        levels,
        relative_error: (level_integral - area_integral).abs() / area_integral.abs().max(f64::MIN_POSITIVE),
    })
}

/// `max |arctan l1 + arctan l2 - (theta - plane_angle)|` over the patch, with
/// `(l1, l2)` the graph eigenvalues over `P_plane_angle`.
pub fn graph_equation_residual(p: &SurfacePatch, plane_angle: f64) -> Result<ResidualStats> {
    let eig = second_fundamental_eigen(p, plane_angle)?;
    let c = p.calculus()?;
    let theta = c.lagrangian_angle()?;
    Ok(ResidualStats::of(
        &p.grid,
        (0..c.len()).map(|k| {
            let (l1, l2) = eig[k];
            let (_, det) = c.graph_slope(k, plane_angle);
            let flip = if det < 0.0 { PI } else { 0.0 };
            wrap_angle(theta.values[k] - plane_angle - l1.atan() - l2.atan() - flip)
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solitons::{make_grim_reaper, make_plane};

    #[test]
    fn heat_kernel_examples() {
        let o = AmbientVector::ZERO;
        assert!((heat_kernel(o, 1.0, o, 0.0).unwrap() - 0.079_577_471_545_947_67).abs() < 1e-17);
        assert!((heat_kernel(o, 1.0 / (4.0 * PI), o, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let x = AmbientVector::new(0.0, 2.0, 0.0, 0.0);
        assert!((heat_kernel(o, 1.0, x, 0.0).unwrap() - (-1.0f64).exp() / (4.0 * PI)).abs() < 1e-17);
        assert!(matches!(heat_kernel(o, 1.0, o, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn laplace_integral_examples() {
        assert!((laplace_integral(0.0).unwrap() - 2.0 * PI).abs() < 1e-10);
        let v = 10.0 * laplace_integral(100.0).unwrap();
        assert!((v / (2.0 * PI).sqrt() - 1.0).abs() < 0.01);
        assert!(laplace_integral(-1.0).is_err());
    }

    #[test]
    fn plane_density_and_detection() {
        let f = make_plane(0.4);
        let p = f.evaluate(&Window::square(10.0, 0.1), 0.0).unwrap();
        let d = gaussian_density(std::slice::from_ref(&p), AmbientVector::ZERO, 1.0, 0.0, 1e-8).unwrap();
        assert!((d.value - 1.0).abs() < 1e-6, "{}", d.value);
        assert!(!d.truncated && d.tail_bound < 1e-8);
        let small = f.evaluate(&Window::square(2.0, 0.1), 0.0).unwrap();
        assert!(
            gaussian_density(&[small], AmbientVector::ZERO, 1.0, 0.0, 1e-8)
                .unwrap()
                .truncated
        );

        let ball = f.evaluate(&Window::square(1.0, 0.02), 0.0).unwrap();
        let c = detect_planes(std::slice::from_ref(&ball), 1.0, &DetectOptions::default()).unwrap();
        assert_eq!(c.planes.len(), 1);
        assert_eq!(c.planes[0].multiplicity, 1);
        assert!((c.planes[0].angle - 0.4).abs() < 1e-12);
        let c2 = detect_planes(&[ball.clone(), ball], 1.0, &DetectOptions::default()).unwrap();
        assert_eq!(c2.planes[0].multiplicity, 2);
    }

    #[test]
    fn blow_down_of_grim_reaper_shrinks_width() {
        let f = make_grim_reaper();
        let w = Window::grim_reaper([-1.5, 1.5], [-1.0, 1.0], 0.1).unwrap();
        let p = blow_down_window(&f, 0.1, 0.0, &w).unwrap();
        let q = f.evaluate(&w, 0.0).unwrap();
        for (a, b) in p.positions.iter().zip(&q.positions) {
            assert_eq!(*a, *b * 0.1);
            assert!(a.y1.abs() < 0.05 * PI);
        }
    }

    #[test]
    fn barrier_needs_small_exponent() {
        let p = make_plane(0.0).evaluate(&Window::square(2.0, 0.1), 0.0).unwrap();
        let bad = BarrierParams {
            alpha: 0.4,
            ..Default::default()
        };
        assert!(barrier_residual(&p, &bad).is_err());
        let rep = barrier_residual(&p, &BarrierParams::default()).unwrap();
        assert!(rep.excluded >= 1);
    }

    #[test]
    fn decay_envelope_on_plane_and_scaling() {
        let p = make_plane(0.3).evaluate(&Window::square(3.0, 0.1), 0.0).unwrap();
        let d1 = decay_envelope(&p, 0.3, 0.3, 1.0, 1.0).unwrap();
        assert!(d1.min_margin > 0.0);
        let d2 = decay_envelope(&p, 0.3, 0.3, 2.0, 1.0).unwrap();
        for (a, b) in d1.envelope.iter().zip(&d2.envelope) {
            if let (Some(a), Some(b)) = (a, b) {
                assert_eq!(*b, 2.0 * a);
            }
        }
    }
}
