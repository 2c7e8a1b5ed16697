//! Explicit solutions of Lagrangian mean curvature flow in C^2 as time-indexed
//! families of surface patches: planes, the grim reaper, translators built on
//! expander curves, products of evolving curves with a line, and self-expanders.
//!
//! A family is evaluated on a [`Window`] of its natural parameters. Translating
//! kinds satisfy `L_t = L_0 + t e1` exactly and the expander kind satisfies
//! `L_t = sqrt(2t) L_{1/2}` exactly, node by node.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ambient::AmbientVector;
use crate::curves::{
    expander_curve, flow_until, looped_curve, CurveFlowState, ExpanderCurve, FlowOptions, PlanarCurve, Point,
};
use crate::error::{Error, Result};
use crate::surface::{Grid, SurfacePatch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonKind {
    Plane,
    #[serde(alias = "grim-reaper", alias = "grim")]
    GrimReaper,
    #[serde(alias = "jlt", alias = "jlt-translator")]
    JltTranslator,
    Product,
    Expander,
}

impl SolitonKind {
    pub fn is_translating(self) -> bool {
        matches!(self, Self::Plane | Self::GrimReaper | Self::JltTranslator)
    }
}

/// Parameter window of a family.
///
/// | kind | `u` | `v` |
/// |---|---|---|
/// | plane | coefficient of `e1` | coefficient of `(0, 0, cos a, sin a)` |
/// | grim reaper | arc length `s` of the profile, `y1 = gd(s)` | `x2` |
/// | translator | arc length `y` of the expander curve | `x` |
/// | product | fraction of the curve's points, in `[0, 1]` | `x2` |
/// | expander | `r` (so `x1 = sqrt(2t) r`) | arc length of the expander curve |
///
/// `h` is the spacing in `u` and `hv` (default `h`) in `v`. Directions sampled
/// on a generating curve snap to a multiple of the curve spacing. `component`
/// selects `w` (0) or `-w` (1) for expanders.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hv: Option<f64>,
    #[serde(default)]
    pub component: usize,
}

impl Window {
    pub fn new(u: [f64; 2], v: [f64; 2], h: f64) -> Self {
        Self {
            u,
            v,
            h,
            hv: None,
            component: 0,
        }
    }

    pub fn square(half: f64, h: f64) -> Self {
        Self::new([-half, half], [-half, half], h)
    }

    /// Grim-reaper window given by a `y1` range in `(-pi/2, pi/2)`.
    pub fn grim_reaper(y1: [f64; 2], x2: [f64; 2], h: f64) -> Result<Self> {
        if !(-FRAC_PI_2 < y1[0] && y1[0] < y1[1] && y1[1] < FRAC_PI_2) {
            return Err(Error::Domain(format!(
                "grim reaper window y1 in [{}, {}] must lie inside (-pi/2, pi/2)",
                y1[0], y1[1]
            )));
        }
        Ok(Self::new([y1[0].tan().asinh(), y1[1].tan().asinh()], x2, h))
    }

    pub fn with_hv(mut self, hv: f64) -> Self {
        self.hv = Some(hv);
        self
    }

    pub fn with_component(mut self, c: usize) -> Self {
        self.component = c;
        self
    }

    pub fn hv(&self) -> f64 {
        self.hv.unwrap_or(self.h)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.u[0] < self.u[1]
            && self.v[0] < self.v[1]
            && self.h > 0.0
            && self.hv() > 0.0
            && self.u.iter().chain(&self.v).all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("malformed window {self:?}")))
        }
    }
}

/// A curve sampled at uniform arc length, with its tangent angle.
#[derive(Clone, Debug, PartialEq)]
struct SampledCurve {
    points: Vec<Point>,
    angle: Vec<f64>,
    /// Arc length of the first sample.
    s0: f64,
    h: f64,
}

impl SampledCurve {
    fn from_expander(c: &ExpanderCurve) -> Self {
        Self {
            points: c.curve.points().to_vec(),
            angle: c.angle.clone(),
            s0: c.arclength[0],
            h: c.h,
        }
    }

    fn s(&self, k: usize) -> f64 {
        self.s0 + k as f64 * self.h
    }

    /// Indices covering `[a, b]` with a stride close to `step / h`.
    fn indices(&self, a: f64, b: f64, step: f64) -> Result<(usize, usize, usize)> {
        let n = self.points.len();
        let lo = ((a - self.s0) / self.h - 1e-9).ceil();
        let hi = ((b - self.s0) / self.h + 1e-9).floor();
        if lo < 0.0 || hi > (n - 1) as f64 {
            return Err(Error::Domain(format!(
                "window [{a}, {b}] exceeds the generating curve [{}, {}]",
                self.s0,
                self.s(n - 1)
            )));
        }
        let stride = ((step / self.h).round() as usize).max(1);
        let (lo, hi) = (lo as usize, hi as usize);
        let count = (hi - lo) / stride + 1;
        if count < 4 {
            return Err(Error::Domain(format!(
                "window [{a}, {b}] holds fewer than 4 curve samples"
            )));
        }
        Ok((lo, stride, count))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Generator {
    Plane,
    GrimReaper,
    Jlt(SampledCurve),
    Product(PlanarCurve, FlowOptions),
    Expander(SampledCurve),
}

/// A time-indexed family of explicit solutions.
#[derive(Clone, Debug, PartialEq)]
pub struct SolitonFamily {
    pub kind: SolitonKind,
    /// Angle of the plane (plane kind only).
    pub alpha: f64,
    /// Shooting parameter of the generating expander curve, when known.
    pub shoot: Option<f64>,
    generator: Generator,
}

/// `log cosh s` without overflow.
fn log_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Gudermannian function: the angle whose tangent is `sinh s`.
fn gudermannian(s: f64) -> f64 {
    2.0 * (0.5 * s).tanh().atan()
}

/// `acosh(exp(a))` for `a >= 0` without overflow.
fn acosh_exp(a: f64) -> f64 {
    a + (1.0 + (1.0 - (-2.0 * a).exp()).max(0.0).sqrt()).ln()
}

pub fn make_plane(alpha: f64) -> SolitonFamily {
    SolitonFamily {
        kind: SolitonKind::Plane,
        alpha,
        shoot: None,
        generator: Generator::Plane,
    }
}

pub fn make_grim_reaper() -> SolitonFamily {
    SolitonFamily {
        kind: SolitonKind::GrimReaper,
        alpha: 0.0,
        shoot: None,
        generator: Generator::GrimReaper,
    }
}

fn check_angle_field(curve: &PlanarCurve, angle: Option<&[f64]>) -> Result<SampledCurve> {
    let angle = angle.ok_or_else(|| Error::Construction("curve carries no angle field".into()))?;
    if angle.len() != curve.len() {
        return Err(Error::Construction(format!(
            "{} angles for {} curve points",
            angle.len(),
            curve.len()
        )));
    }
    if curve.spacing_ratio() > 1.0 + 1e-3 {
        return Err(Error::Construction(
            "generating curve must be sampled at uniform arc length".into(),
        ));
    }
    let h = curve.length() / (curve.len() - 1) as f64;
    Ok(SampledCurve {
        points: curve.points().to_vec(),
        angle: angle.to_vec(),
        s0: -h * ((curve.len() - 1) / 2) as f64,
        h,
    })
}

/// Translator over an expander curve `w` given with its tangent angle field.
/// Arc length is measured from the middle sample.
pub fn make_jlt(curve: &PlanarCurve, angle: Option<&[f64]>) -> Result<SolitonFamily> {
    Ok(SolitonFamily {
        kind: SolitonKind::JltTranslator,
        alpha: 0.0,
        shoot: None,
        generator: Generator::Jlt(check_angle_field(curve, angle)?),
    })
}

/// Translator over an integrated expander curve, keeping its arc-length origin.
pub fn make_jlt_from(w: &ExpanderCurve) -> SolitonFamily {
    SolitonFamily {
        kind: SolitonKind::JltTranslator,
        alpha: 0.0,
        shoot: Some(w.shoot),
        generator: Generator::Jlt(SampledCurve::from_expander(w)),
    }
}

/// `gamma_t x R` where `gamma_t` is the curve shortening flow of `gamma`.
pub fn make_product(gamma: &PlanarCurve) -> SolitonFamily {
    SolitonFamily {
        kind: SolitonKind::Product,
        alpha: 0.0,
        shoot: None,
        generator: Generator::Product(gamma.clone(), FlowOptions::default()),
    }
}

/// `R x sqrt(2t) w~` with `w~ = w u (-w)`.
pub fn make_expander(w: &ExpanderCurve) -> SolitonFamily {
    SolitonFamily {
        kind: SolitonKind::Expander,
        alpha: 0.0,
        shoot: Some(w.shoot),
        generator: Generator::Expander(SampledCurve::from_expander(w)),
    }
}

impl SolitonFamily {
    /// Whether `t` lies in the family's time domain.
    pub fn check_time(&self, t: f64) -> Result<()> {
        let ok = t.is_finite()
            && match self.kind {
                SolitonKind::Expander => t > 0.0,
                SolitonKind::Product => t >= 0.0,
                _ => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "time {t} is outside the domain of the {:?} family",
                self.kind
            )))
        }
    }

    /// Tangent angles of the generating expander curve at its two ends.
    pub fn asymptotic_angles(&self) -> Option<(f64, f64)> {
        match &self.generator {
            Generator::Jlt(c) | Generator::Expander(c) => Some((c.angle[0], *c.angle.last().unwrap())),
            _ => None,
        }
    }

    /// Samples of the generating curve (for translators and expanders).
    pub fn generating_curve(&self) -> Option<(&[Point], &[f64])> {
        match &self.generator {
            Generator::Jlt(c) | Generator::Expander(c) => Some((&c.points, &c.angle)),
            _ => None,
        }
    }

    pub fn evaluate(&self, w: &Window, t: f64) -> Result<SurfacePatch> {
        w.validate()?;
        self.check_time(t)?;
        match &self.generator {
            Generator::Plane => {
                let g = Grid::covering((w.u[0], w.u[1]), (w.v[0], w.v[1]), w.h, w.hv())?;
                let (c, s) = (self.alpha.cos(), self.alpha.sin());
                SurfacePatch::from_fn(g, "plane", |u, v| AmbientVector::new(u, 0.0, v * c, v * s))
            }
            Generator::GrimReaper => {
                let g = Grid::covering((w.u[0], w.u[1]), (w.v[0], w.v[1]), w.h, w.hv())?;
                SurfacePatch::from_fn(g, "grim_reaper", |s, x2| {
                    AmbientVector::new(log_cosh(s) + t, gudermannian(s), x2, 0.0)
                })
            }
            Generator::Jlt(c) => {
                let (lo, stride, count) = c.indices(w.u[0], w.u[1], w.h)?;
                let gx = Grid::covering((0.0, 1.0), (w.v[0], w.v[1]), 1.0, w.hv())?;
                let g = Grid::new(count, gx.nv, c.s(lo), gx.v0, c.h * stride as f64, gx.hv)?;
                let mut pos = Vec::with_capacity(g.len());
                for i in 0..g.nu {
                    let k = lo + i * stride;
                    let (p, phi) = (c.points[k], c.angle[k]);
                    for j in 0..g.nv {
                        let x = g.v(j);
                        pos.push(AmbientVector::new(
                            0.5 * (p.norm_sqr() - x * x) + t,
                            -phi,
                            x * p.re,
                            x * p.im,
                        ));
                    }
                }
                SurfacePatch::new(g, pos, Some("jlt_translator".into()))
            }
            Generator::Expander(c) => {
                if w.component > 1 {
                    return Err(Error::Invalid("expander windows have components 0 and 1".into()));
                }
                let sign = if w.component == 0 { 1.0 } else { -1.0 };
                let scale = (2.0 * t).sqrt();
                let (lo, stride, count) = c.indices(w.v[0], w.v[1], w.hv())?;
                let gr = Grid::covering((w.u[0], w.u[1]), (0.0, 1.0), w.h, 1.0)?;
                let g = Grid::new(gr.nu, count, gr.u0, c.s(lo), gr.hu, c.h * stride as f64)?;
                let mut pos = Vec::with_capacity(g.len());
                for i in 0..g.nu {
                    let r = g.u(i);
                    for j in 0..g.nv {
                        let p = c.points[lo + j * stride] * sign;
                        pos.push(AmbientVector::new(r, 0.0, p.re, p.im) * scale);
                    }
                }
                SurfacePatch::new(g, pos, Some("expander".into()))
            }
            Generator::Product(gamma, opts) => {
                let curve = if t > 0.0 {
                    let run = flow_until(CurveFlowState::new(gamma.clone())?, t, opts, |_| {})?;
                    if run.halted {
                        return Err(Error::Domain(format!(
                            "curve flow blew up at time {} before {t}",
                            run.state.time
                        )));
                    }
                    run.state.curve
                } else {
                    gamma.clone()
                };
                let mut pts = curve.points().to_vec();
                if curve.is_closed() {
                    pts.push(pts[0]);
                }
                let n = pts.len();
                let du = 1.0 / (n - 1) as f64;
                let lo = ((w.u[0].max(0.0) / du) - 1e-9).ceil() as usize;
                let hi = (((w.u[1].min(1.0)) / du) + 1e-9).floor() as usize;
                let stride = ((w.h / du).round() as usize).max(1);
                if hi <= lo {
                    return Err(Error::Domain("product window selects no curve points".into()));
                }
                let count = (hi - lo) / stride + 1;
                let gx = Grid::covering((0.0, 1.0), (w.v[0], w.v[1]), 1.0, w.hv())?;
                let g = Grid::new(count, gx.nv, lo as f64 * du, gx.v0, du * stride as f64, gx.hv)?;
                let mut pos = Vec::with_capacity(g.len());
                for i in 0..g.nu {
                    let p = pts[lo + i * stride];
                    for j in 0..g.nv {
                        pos.push(AmbientVector::new(p.re, p.im, g.v(j), 0.0));
                    }
                }
                SurfacePatch::new(g, pos, Some("product".into()))
            }
        }
    }

    pub fn evaluate_all(&self, windows: &[Window], t: f64) -> Result<Vec<SurfacePatch>> {
        windows.iter().map(|w| self.evaluate(w, t)).collect()
    }

    /// Windows whose images at time `t` cover `L_t` inside the ball `B_rho(0)`
    /// with ambient node spacing close to `h`. The images may extend somewhat
    /// beyond the ball. An empty list means the ball misses `L_t`.
    pub fn ball_windows(&self, t: f64, rho: f64, h: f64) -> Result<Vec<Window>> {
        self.check_time(t)?;
        if !(rho > 0.0 && h > 0.0) {
            return Err(Error::Invalid("ball radius and spacing must be positive".into()));
        }
        match &self.generator {
            Generator::Plane => Ok(vec![Window::square(rho, h)]),
            Generator::GrimReaper => {
                // x1 = log cosh s + t must lie in (-rho, rho)
                let top = rho - t;
                if top <= 0.0 {
                    return Ok(Vec::new());
                }
                let s_hi = acosh_exp(top) + 2.0 * h;
                let bottom = -rho - t;
                let x2 = [-rho, rho];
                if bottom <= 0.0 {
                    Ok(vec![Window::new([-s_hi, s_hi], x2, h)])
                } else {
                    let s_lo = (acosh_exp(bottom) - 2.0 * h).max(0.0);
                    Ok(vec![
                        Window::new([-s_hi, -s_lo], x2, h),
                        Window::new([s_lo, s_hi], x2, h),
                    ])
                }
            }
            Generator::Jlt(c) => jlt_ball_windows(c, t, rho, h),
            Generator::Expander(c) => {
                let scale = (2.0 * t).sqrt();
                let inside: Vec<usize> = (0..c.points.len())
                    .filter(|&k| scale * c.points[k].norm() < rho)
                    .collect();
                let (Some(&a), Some(&b)) = (inside.first(), inside.last()) else {
                    return Ok(Vec::new());
                };
                if a == 0 || b + 1 == c.points.len() {
                    return Err(Error::Domain(
                        "generating curve too short for the requested ball".into(),
                    ));
                }
                let pad = 2.0 * c.h;
                let r = rho / scale;
                let w = Window::new([-r, r], [c.s(a) - pad, c.s(b) + pad], h / scale);
                Ok(vec![w, w.with_component(1)])
            }
            Generator::Product(..) => Ok(vec![Window::new([0.0, 1.0], [-rho, rho], h).with_hv(h)]),
        }
    }
}

/// For a translator at time `t`: the point at `(y, x)` is
/// `((|w|^2 - x^2)/2 + t, -phi, x w)`. Collects, per run of curve samples, the
/// `x`-intervals that can reach `B_rho`, and sizes the spacing from the
/// parametric speeds.
fn jlt_ball_windows(c: &SampledCurve, t: f64, rho: f64, h: f64) -> Result<Vec<Window>> {
    let n = c.points.len();
    // beyond the ends |w| keeps growing; the ends must already sit outside the ball's shell
    for k in [0, n - 1] {
        if c.points[k].norm_sqr() + 2.0 * t < 2.0 * rho {
            return Err(Error::Domain(
                "generating curve too short for the requested ball".into(),
            ));
        }
    }
    // for each sample, the admissible range of x >= 0
    let range = |k: usize| -> Option<(f64, f64)> {
        let w2 = c.points[k].norm_sqr();
        let phi = c.angle[k];
        if phi.abs() >= rho {
            return None;
        }
        let r = (rho * rho - phi * phi).sqrt();
        let lo2 = (w2 + 2.0 * t - 2.0 * r).max(0.0);
        let hi2 = (w2 + 2.0 * t + 2.0 * r).min(r * r / w2);
        (hi2 > lo2).then(|| (lo2.sqrt(), hi2.sqrt()))
    };
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for k in 0..=n {
        let hit = k < n && range(k).is_some();
        match (hit, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                runs.push((s, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    for (a, b) in runs {
        if a == 0 || b + 1 == n {
            return Err(Error::Domain(
                "generating curve too short for the requested ball".into(),
            ));
        }
        let (mut x_lo, mut x_hi) = (f64::INFINITY, 0.0f64);
        for k in a..=b {
            let (l, u) = range(k).unwrap();
            x_lo = x_lo.min(l);
            x_hi = x_hi.max(u);
        }
        // parametric speeds |F_y| and |F_x| bounded over the box
        let mut speed_y = 0.0f64;
        let mut speed_x = 0.0f64;
        for k in a..=b {
            let p = c.points[k];
            let tau = Complex64::from_polar(1.0, c.angle[k]);
            let along = p.re * tau.re + p.im * tau.im;
            let turn = p.im * tau.re - p.re * tau.im;
            speed_y = speed_y.max((along * along + turn * turn + x_hi * x_hi).sqrt());
            speed_x = speed_x.max((x_hi * x_hi + p.norm_sqr()).sqrt());
        }
        let hy = (h / speed_y).max(c.h);
        let hx = h / speed_x;
        let y = [c.s(a) - 2.0 * hy, c.s(b) + 2.0 * hy];
        let y = [y[0].max(c.s(0)), y[1].min(c.s(n - 1))];
        if x_lo <= 2.0 * hx {
            out.push(Window::new(y, [-x_hi - 2.0 * hx, x_hi + 2.0 * hx], hy).with_hv(hx));
        } else {
            let x = [x_lo - 2.0 * hx, x_hi + 2.0 * hx];
            out.push(Window::new(y, [-x[1], -x[0]], hy).with_hv(hx));
            out.push(Window::new(y, x, hy).with_hv(hx));
        }
    }
    Ok(out)
}

/// Serialized description of a family together with its sampling window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyDescriptor {
    pub kind: SolitonKind,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub shoot: Option<f64>,
    pub window: Window,
    /// Product profile: `circle` (needs `radius`), `ellipse`, `looped` or `line`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Arc-length half span of the generating expander curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<f64>,
}

/// Default half span of generated expander curves; enough for blow-downs down to `lambda = 1e-2`.
pub const DEFAULT_CURVE_SPAN: f64 = 160.0;

/// Largest spacing used to integrate expander curves.
pub const MAX_CURVE_STEP: f64 = 0.01;

impl FamilyDescriptor {
    pub fn build(&self) -> Result<SolitonFamily> {
        let need_shoot = || {
            self.shoot
                .ok_or_else(|| Error::Invalid(format!("{:?} family needs `shoot`", self.kind)))
        };
        let curve_step = {
            let h = self.window.h.min(self.window.hv());
            h / (h / MAX_CURVE_STEP - 1e-9).ceil().max(1.0)
        };
        match self.kind {
            SolitonKind::Plane => Ok(make_plane(self.alpha.unwrap_or(0.0))),
            SolitonKind::GrimReaper => Ok(make_grim_reaper()),
            SolitonKind::JltTranslator => {
                let w = expander_curve(need_shoot()?, self.span.unwrap_or(DEFAULT_CURVE_SPAN), curve_step)?;
                Ok(make_jlt_from(&w))
            }
            SolitonKind::Expander => {
                let w = expander_curve(need_shoot()?, self.span.unwrap_or(DEFAULT_CURVE_SPAN), curve_step)?;
                Ok(make_expander(&w))
            }
            SolitonKind::Product => {
                let n = 400;
                let gamma = match self.profile.as_deref().unwrap_or("circle") {
                    "circle" => PlanarCurve::circle(Complex64::new(0.0, 0.0), self.radius.unwrap_or(1.0), n)?,
                    "ellipse" => {
                        let r = self.radius.unwrap_or(1.0);
                        PlanarCurve::ellipse(2.0 * r, r, n)?
                    }
                    "looped" => looped_curve(self.radius.unwrap_or(1.0), n)?,
                    "line" => PlanarCurve::segment(Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0), n)?,
                    other => return Err(Error::Invalid(format!("unknown product profile `{other}`"))),
                };
                Ok(make_product(&gamma))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::lagrangian_angle;

    #[test]
    fn plane_points() {
        let p = make_plane(0.0).evaluate(&Window::square(1.0, 0.5), 3.0).unwrap();
        for x in &p.positions {
            assert_eq!(x.y1, 0.0);
            assert_eq!(x.y2, 0.0);
        }
        let theta = lagrangian_angle(&make_plane(0.7).evaluate(&Window::square(1.0, 0.1), 0.0).unwrap()).unwrap();
        assert!(theta.values.iter().all(|t| (t - 0.7).abs() < 1e-12));
    }

    #[test]
    fn grim_reaper_origin_and_translation() {
        let f = make_grim_reaper();
        let w = Window::new([-1.0, 1.0], [-1.0, 1.0], 0.25);
        let p0 = f.evaluate(&w, 0.0).unwrap();
        let k = p0.grid.idx(4, 4);
        assert_eq!(p0.positions[k], AmbientVector::ZERO);
        let p1 = f.evaluate(&w, 2.5).unwrap();
        for (a, b) in p0.positions.iter().zip(&p1.positions) {
            assert_eq!(*b - *a, AmbientVector::new(2.5, 0.0, 0.0, 0.0));
        }
        assert!(Window::grim_reaper([-1.6, 0.0], [0.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn stable_helpers() {
        for s in [-3.0f64, -0.2, 0.0, 0.7, 5.0] {
            assert!((log_cosh(s) - s.cosh().ln()).abs() < 1e-14);
            assert!((gudermannian(s) - s.sinh().atan()).abs() < 1e-14);
        }
        assert!(log_cosh(1e4).is_finite());
        assert!((acosh_exp(0.5) - 0.5f64.exp().acosh()).abs() < 1e-14);
        assert!((acosh_exp(800.0) - (800.0 + std::f64::consts::LN_2)).abs() < 1e-9);
    }

    #[test]
    fn jlt_translates_and_carries_curve_angle() {
        let w = expander_curve(1.0, 8.0, 0.01).unwrap();
        let f = make_jlt_from(&w);
        let win = Window::new([-2.0, 2.0], [-1.0, 1.0], 0.05);
        let p0 = f.evaluate(&win, 0.0).unwrap();
        let p1 = f.evaluate(&win, -1.25).unwrap();
        for (a, b) in p0.positions.iter().zip(&p1.positions) {
            assert_eq!(*b - *a, AmbientVector::new(-1.25, 0.0, 0.0, 0.0));
        }
        let theta = lagrangian_angle(&p0).unwrap();
        for i in 0..p0.grid.nu {
            let k = ((p0.grid.u(i) - w.arclength[0]) / w.h).round() as usize;
            for j in 0..p0.grid.nv {
                assert!((theta.values[p0.grid.idx(i, j)] - w.angle[k]).abs() < 5e-4);
            }
        }
        assert!(f.evaluate(&Window::new([-9.0, 0.0], [-1.0, 1.0], 0.05), 0.0).is_err());
    }

    #[test]
    fn jlt_needs_angle_field() {
        let w = expander_curve(1.0, 4.0, 0.01).unwrap();
        assert!(matches!(make_jlt(&w.curve, None), Err(Error::Construction(_))));
        assert!(make_jlt(&w.curve, Some(&w.angle)).is_ok());
    }

    #[test]
    fn expander_is_exactly_self_similar() {
        let w = expander_curve(0.5, 6.0, 0.01).unwrap();
        let f = make_expander(&w);
        let win = Window::new([-1.0, 1.0], [-3.0, 3.0], 0.05);
        let p1 = f.evaluate(&win, 1.0).unwrap();
        let p2 = f.evaluate(&win, 2.0).unwrap();
        for (a, b) in p1.positions.iter().zip(&p2.positions) {
            assert!((*b - *a * 2f64.sqrt()).norm() <= 1e-15 * b.norm().max(1.0));
        }
        assert!(matches!(f.evaluate(&win, 0.0), Err(Error::Domain(_))));
        assert!(matches!(f.evaluate(&win, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn product_of_circle() {
        let f = make_product(&PlanarCurve::circle(Complex64::new(0.0, 0.0), 1.0, 200).unwrap());
        let p = f
            .evaluate(&Window::new([0.0, 1.0], [-1.0, 1.0], 0.005).with_hv(0.1), 0.0)
            .unwrap();
        assert_eq!(p.grid.nu, 201);
        assert_eq!(p.position(0, 3), p.position(200, 3));
        assert!(f.evaluate(&Window::new([0.0, 1.0], [-1.0, 1.0], 0.01), -0.1).is_err());
        // flowing past extinction is a domain error
        assert!(f.evaluate(&Window::new([0.0, 1.0], [-1.0, 1.0], 0.01), 0.6).is_err());
    }

    #[test]
    fn grim_reaper_ball_windows() {
        let f = make_grim_reaper();
        assert!(f.ball_windows(5.0, 1.0, 0.1).unwrap().is_empty());
        assert_eq!(f.ball_windows(0.0, 1.0, 0.1).unwrap().len(), 1);
        let ws = f.ball_windows(-100.0, 3.0, 0.1).unwrap();
        assert_eq!(ws.len(), 2);
        for w in &ws {
            let p = f.evaluate(w, -100.0).unwrap();
            assert!(p.positions.iter().any(|x| x.norm() < 2.0));
            assert!(p.positions.iter().all(|x| x.x1.abs() < 3.5));
        }
    }

    #[test]
    fn jlt_ball_windows_cover_both_ends() {
        let w = expander_curve(1.0, 40.0, 0.01).unwrap();
        let f = make_jlt_from(&w);
        let t = -200.0;
        let ws = f.ball_windows(t, 5.0, 0.1).unwrap();
        assert_eq!(ws.len(), 2);
        for win in &ws {
            let p = f.evaluate(win, t).unwrap();
            assert!(p.positions.iter().any(|x| x.norm() < 5.0));
        }
        assert!(matches!(f.ball_windows(-2000.0, 5.0, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn descriptor_round_trip() {
        let d = FamilyDescriptor {
            kind: SolitonKind::JltTranslator,
            alpha: None,
            shoot: Some(1.0),
            window: Window::square(1.0, 0.05),
            profile: None,
            radius: None,
            span: Some(10.0),
        };
        let text = serde_json::to_string(&d).unwrap();
        assert!(text.contains("\"kind\":\"jlt_translator\""));
        let back: FamilyDescriptor = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.build().unwrap().kind, SolitonKind::JltTranslator);
        let bad = FamilyDescriptor { shoot: None, ..d };
        assert!(bad.build().is_err());
        for (name, kind) in [
            ("\"jlt\"", SolitonKind::JltTranslator),
            ("\"grim-reaper\"", SolitonKind::GrimReaper),
        ] {
            assert_eq!(serde_json::from_str::<SolitonKind>(name).unwrap(), kind);
        }
    }
}
