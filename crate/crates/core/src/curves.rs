//! Planar curves in C: discretisation, curve shortening flow, the grim-reaper
//! profile and the expander curves `w` with `k = w^perp`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Complex64;

/// Minimum number of points in a [`PlanarCurve`].
pub const MIN_POINTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Closed,
    /// Open curve with clamped endpoints.
    Open,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanarCurve {
    points: Vec<Point>,
    topology: Topology,
}

fn cross(a: Point, b: Point) -> f64 {
    a.re * b.im - a.im * b.re
}

impl PlanarCurve {
    pub fn new(points: Vec<Point>, topology: Topology) -> Result<Self> {
        if points.len() < MIN_POINTS {
            return Err(Error::MalformedCurve {
                index: points.len(),
                reason: format!("need at least {MIN_POINTS} points"),
            });
        }
        let c = Self { points, topology };
        for (i, l) in c.segment_lengths().iter().enumerate() {
            if !(l.is_finite() && *l > 0.0) {
                return Err(Error::MalformedCurve {
                    index: i,
                    reason: "coincident or non-finite consecutive points".into(),
                });
            }
        }
        Ok(c)
    }

    pub fn open(points: Vec<Point>) -> Result<Self> {
        Self::new(points, Topology::Open)
    }

    pub fn closed(points: Vec<Point>) -> Result<Self> {
        Self::new(points, Topology::Closed)
    }

    pub fn circle(center: Point, radius: f64, n: usize) -> Result<Self> {
        let pts = (0..n)
            .map(|k| center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64))
            .collect();
        Self::closed(pts)
    }

    pub fn ellipse(a: f64, b: f64, n: usize) -> Result<Self> {
        let pts = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                Complex64::new(a * t.cos(), b * t.sin())
            })
            .collect();
        Self::closed(pts)
    }

    pub fn segment(a: Point, b: Point, n: usize) -> Result<Self> {
        let pts = (0..n).map(|k| a + (b - a) * (k as f64 / (n - 1) as f64)).collect();
        Self::open(pts)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn is_closed(&self) -> bool {
        self.topology == Topology::Closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_segments(&self) -> usize {
        match self.topology {
            Topology::Closed => self.points.len(),
            Topology::Open => self.points.len() - 1,
        }
    }

    fn seg(&self, k: usize) -> (Point, Point) {
        let n = self.points.len();
        (self.points[k], self.points[(k + 1) % n])
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        (0..self.num_segments())
            .map(|k| {
                let (a, b) = self.seg(k);
                (b - a).norm()
            })
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Ratio of the longest to the shortest segment.
    pub fn spacing_ratio(&self) -> f64 {
        let l = self.segment_lengths();
        let (lo, hi) = l
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        hi / lo
    }

    pub fn min_segment(&self) -> f64 {
        self.segment_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Shoelace area of the closing polygon (positive when counter-clockwise).
    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.points)
    }

    pub fn diameter(&self) -> f64 {
        let (mut lo, mut hi) = (
            Complex64::new(f64::INFINITY, f64::INFINITY),
            Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in &self.points {
            lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        (hi - lo).norm()
    }

    /// Discrete curvature vector at point `i` (three-point stencil on arc length).
    pub fn curvature_vector(&self, i: usize) -> Result<Point> {
        let n = self.points.len();
        let (prev, next) = match self.topology {
            Topology::Closed => ((i + n - 1) % n, (i + 1) % n),
            Topology::Open => {
                if i == 0 || i + 1 >= n {
                    return Err(Error::Invalid(format!(
                        "curvature requested at endpoint {i} of an open curve"
                    )));
                }
                (i - 1, i + 1)
            }
        };
        let p = self.points[i];
        let a = p - self.points[prev];
        let b = self.points[next] - p;
        let (h1, h2) = (a.norm(), b.norm());
        if h1 <= 1e-300 || h2 <= 1e-300 {
            return Err(Error::MalformedCurve {
                index: i,
                reason: "degenerate segment".into(),
            });
        }
        Ok((b / h2 - a / h1) * (2.0 / (h1 + h2)))
    }

    /// Curvature vectors at every point; endpoints of open curves get zero.
    pub fn curvature_vectors(&self) -> Result<Vec<Point>> {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                if self.topology == Topology::Open && (i == 0 || i + 1 == n) {
                    Ok(Complex64::new(0.0, 0.0))
                } else {
                    self.curvature_vector(i)
                }
            })
            .collect()
    }

    /// Continuous tangent-angle function of the segments.
    pub fn tangent_angles(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.num_segments());
        for k in 0..self.num_segments() {
            let (a, b) = self.seg(k);
            let raw = (b - a).arg();
            let v = match out.last() {
                None => raw,
                Some(&prev) => prev + wrap_angle(raw - prev),
            };
            out.push(v);
        }
        out
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Self {
        Self {
            points: self.points.iter().map(|&p| f(p)).collect(),
            topology: self.topology,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|p| p * s)
    }

    pub fn translated(&self, z: Point) -> Self {
        self.map(|p| p + z)
    }

    /// Cumulative chord length at each point.
    pub fn cumulative_length(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.points.len());
        out.push(0.0);
        for w in self.points.windows(2) {
            acc += (w[1] - w[0]).norm();
            out.push(acc);
        }
        out
    }

    /// Resample at uniform arc length (cubic Hermite through the current
    /// points, second-order tangents). Open curves keep their endpoints; closed
    /// curves keep point 0.
    pub fn redistributed(&self) -> Result<Self> {
        let n = self.points.len();
        let closed = self.is_closed();
        // extended point list so that segment k runs from ext[k] to ext[k+1]
        let mut ext = self.points.clone();
        if closed {
            ext.push(self.points[0]);
        }
        let nseg = ext.len() - 1;
        let h: Vec<f64> = (0..nseg).map(|k| (ext[k + 1] - ext[k]).norm()).collect();
        let total: f64 = h.iter().sum();
        let tangent = |i: usize| -> Point {
            // derivative with respect to chord length at ext[i]
            let (hp, hn, pp, pn);
            if closed {
                let im = if i == 0 { nseg - 1 } else { i - 1 };
                let ip = if i == nseg { 1 } else { i + 1 };
                let ii = if i == nseg { 0 } else { i };
                hp = h[im];
                hn = h[ii];
                pp = ext[im];
                pn = ext[ip];
            } else if i == 0 {
                let (h0, h1) = (h[0], h[1]);
                let d0 = (ext[1] - ext[0]) / h0;
                let d1 = (ext[2] - ext[1]) / h1;
                return d0 + (d0 - d1) * (h0 / (h0 + h1));
            } else if i == nseg {
                let (h0, h1) = (h[nseg - 2], h[nseg - 1]);
                let d0 = (ext[nseg - 1] - ext[nseg - 2]) / h0;
                let d1 = (ext[nseg] - ext[nseg - 1]) / h1;
                return d1 + (d1 - d0) * (h1 / (h0 + h1));
            } else {
                hp = h[i - 1];
                hn = h[i];
                pp = ext[i - 1];
                pn = ext[i + 1];
            }
            let p = ext[i];
            ((pn - p) / hn * hp + (p - pp) / hp * hn) / (hp + hn)
        };
        let count = if closed { n } else { n - 1 };
        let step = total / count as f64;
        let mut out = Vec::with_capacity(n);
        out.push(ext[0]);
        let mut seg = 0usize;
        let mut seg_start = 0.0;
        for k in 1..count {
            let target = step * k as f64;
            while seg + 1 < nseg && seg_start + h[seg] < target {
                seg_start += h[seg];
                seg += 1;
            }
            let hs = h[seg];
            let t = ((target - seg_start) / hs).clamp(0.0, 1.0);
            let (p0, p1) = (ext[seg], ext[seg + 1]);
            let (m0, m1) = (tangent(seg) * hs, tangent(seg + 1) * hs);
            let t2 = t * t;
            let t3 = t2 * t;
            let q = p0 * (2.0 * t3 - 3.0 * t2 + 1.0)
                + m0 * (t3 - 2.0 * t2 + t)
                + p1 * (-2.0 * t3 + 3.0 * t2)
                + m1 * (t3 - t2);
            out.push(q);
        }
        if !closed {
            out.push(ext[nseg]);
        }
        Self::new(out, self.topology)
    }

    /// Pairs `(i, j)`, `i < j`, of non-adjacent segments that cross.
    pub fn self_intersections(&self) -> Vec<(usize, usize)> {
        let nseg = self.num_segments();
        let cell = self.segment_lengths().iter().cloned().fold(0.0, f64::max) * 1.01;
        let key = |p: Point| ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64);
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for k in 0..nseg {
            let (a, b) = self.seg(k);
            let (ka, kb) = (key(a), key(b));
            for gx in ka.0.min(kb.0)..=ka.0.max(kb.0) {
                for gy in ka.1.min(kb.1)..=ka.1.max(kb.1) {
                    grid.entry((gx, gy)).or_default().push(k);
                }
            }
        }
        let mut out = Vec::new();
        let mut keys: Vec<_> = grid.keys().cloned().collect();
        keys.sort_unstable();
        for key in keys {
            let segs = &grid[&key];
            for (x, &i) in segs.iter().enumerate() {
                for &j in &segs[x + 1..] {
                    let (i, j) = (i.min(j), i.max(j));
                    if self.segments_cross(i, j) {
                        out.push((i, j));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn adjacent(&self, i: usize, j: usize) -> bool {
        let nseg = self.num_segments();
        j == i + 1 || (self.is_closed() && i == 0 && j == nseg - 1) || i == j
    }

    fn segments_cross(&self, i: usize, j: usize) -> bool {
        if self.adjacent(i, j) {
            return false;
        }
        let (a, b) = self.seg(i);
        let (c, d) = self.seg(j);
        segment_intersection(a, b, c, d).is_some()
    }

    /// Area of the smallest loop cut off by a self-intersection, if any.
    /// `hint` restricts the first search to a neighbourhood of a previous loop.
    pub fn loop_area(&self, hint: Option<(usize, usize)>) -> Option<(f64, (usize, usize))> {
        let nseg = self.num_segments();
        let local = hint.and_then(|(i0, j0)| {
            let w = 12usize;
            let mut best: Option<(usize, usize)> = None;
            for i in i0.saturating_sub(w)..(i0 + w).min(nseg) {
                for j in j0.saturating_sub(w)..(j0 + w).min(nseg) {
                    if i < j && self.segments_cross(i, j) {
                        let better = best.is_none_or(|(bi, bj)| j - i < bj - bi);
                        if better {
                            best = Some((i, j));
                        }
                    }
                }
            }
            best
        });
        let pair = local.or_else(|| self.self_intersections().into_iter().min_by_key(|&(i, j)| (j - i, i)))?;
        let (i, j) = pair;
        let (a, b) = self.seg(i);
        let (c, d) = self.seg(j);
        let x = segment_intersection(a, b, c, d)?;
        let mut poly = vec![x];
        poly.extend_from_slice(&self.points[i + 1..=j]);
        Some((polygon_signed_area(&poly).abs(), pair))
    }
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

pub fn polygon_signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|k| cross(pts[k], pts[(k + 1) % n])).sum::<f64>()
}

fn segment_intersection(a: Point, b: Point, c: Point, d: Point) -> Option<Point> {
    let r = b - a;
    let s = d - c;
    let denom = cross(r, s);
    if denom == 0.0 {
        return None;
    }
    let t = cross(c - a, s) / denom;
    let u = cross(c - a, r) / denom;
    if (0.0..1.0).contains(&t) && (0.0..1.0).contains(&u) {
        Some(a + r * t)
    } else {
        None
    }
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    let t = if l2 == 0.0 {
        0.0
    } else {
        ((p - a).re * ab.re + (p - a).im * ab.im) / l2
    };
    (p - (a + ab * t.clamp(0.0, 1.0))).norm()
}

/// Distance from `p` to the polyline through `pts`.
pub fn distance_to_polyline(p: Point, pts: &[Point]) -> f64 {
    pts.windows(2)
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// One-sided distance `sup_{a in A} dist(a, B)` over points of `a` inside the
/// ball of radius `radius` (all points when `radius` is infinite).
pub fn directed_distance(a: &[Point], b: &[Point], radius: f64) -> f64 {
    a.iter()
        .filter(|p| p.norm() <= radius)
        .map(|&p| distance_to_polyline(p, b))
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two polylines restricted to a ball around the origin.
pub fn hausdorff_in_ball(a: &[Point], b: &[Point], radius: f64) -> f64 {
    directed_distance(a, b, radius).max(directed_distance(b, a, radius))
}

/// A multi-component curve (e.g. `w` together with `-w`).
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSet {
    pub components: Vec<PlanarCurve>,
}

impl CurveSet {
    pub fn total_points(&self) -> usize {
        self.components.iter().map(PlanarCurve::len).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            components: self.components.iter().map(|c| c.scaled(s)).collect(),
        }
    }
}

/// `w` together with its point reflection `-w`.
pub fn double_curve(w: &PlanarCurve) -> Result<CurveSet> {
    if w.is_closed() {
        return Err(Error::Topology("double_curve expects an open curve".into()));
    }
    Ok(CurveSet {
        components: vec![w.clone(), w.map(|p| -p)],
    })
}

/// Samples `(-log cos y, y)` for `y` in `[y_min, y_max]` with spacing close to `h`.
pub fn grim_reaper_profile(y_min: f64, y_max: f64, h: f64) -> Result<PlanarCurve> {
    if !(-FRAC_PI_2 < y_min && y_min < y_max && y_max < FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "grim reaper range [{y_min}, {y_max}] must lie inside (-pi/2, pi/2)"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::Invalid("spacing must be positive".into()));
    }
    let n = ((y_max - y_min) / h).round().max(1.0) as usize + 1;
    let pts = (0..n)
        .map(|k| {
            let y = y_min + (y_max - y_min) * k as f64 / (n - 1) as f64;
            Complex64::new(-y.cos().ln(), y)
        })
        .collect();
    PlanarCurve::open(pts)
}

/// An expander curve `w` (so that `sqrt(2t) w` moves by curve shortening flow)
/// sampled at uniform arc length, with its tangent angle.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpanderCurve {
    pub curve: PlanarCurve,
    /// Tangent angle of `w` at each point.
    pub angle: Vec<f64>,
    /// Arc-length parameter of each point; zero at the axis crossing.
    pub arclength: Vec<f64>,
    pub shoot: f64,
    pub h: f64,
}

impl ExpanderCurve {
    /// Tangent angles at the two ends `(start, end)`.
    pub fn asymptotic_angles(&self) -> (f64, f64) {
        (self.angle[0], *self.angle.last().unwrap())
    }

    /// `max angle - min angle`.
    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = self
            .angle
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
                (lo.min(a), hi.max(a))
            });
        hi - lo
    }

    /// Max over interior points of `|k - w^perp|` with finite-difference curvature.
    pub fn residual(&self) -> Result<f64> {
        let pts = self.curve.points();
        let mut worst = 0.0f64;
        for i in 1..pts.len() - 1 {
            let k = self.curve.curvature_vector(i)?;
            let t = (pts[i + 1] - pts[i - 1]).unscale((pts[i + 1] - pts[i - 1]).norm());
            let w = pts[i];
            let along = w.re * t.re + w.im * t.im;
            let perp = w - t * along;
            worst = worst.max((k - perp).norm());
        }
        Ok(worst)
    }
}

fn expander_rhs(s: [f64; 3]) -> [f64; 3] {
    let (c, sn) = (s[2].cos(), s[2].sin());
    [c, sn, s[1] * c - s[0] * sn]
}

fn rk4(s: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], f: f64| [a[0] + f * b[0], a[1] + f * b[1], a[2] + f * b[2]];
    let k1 = expander_rhs(s);
    let k2 = expander_rhs(add(s, k1, h / 2.0));
    let k3 = expander_rhs(add(s, k2, h / 2.0));
    let k4 = expander_rhs(add(s, k3, h));
    [
        s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        s[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Integrates `w' = e^{i phi}`, `phi' = <w, i e^{i phi}>` (the scalar form of
/// `k = w^perp`) with RK4 in both directions from `w = (shoot, 0)`,
/// `phi = pi/2`, over arc length `[-span, span]`.
pub fn expander_curve(shoot: f64, arclength_span: f64, h: f64) -> Result<ExpanderCurve> {
    if !(shoot > 0.0) {
        return Err(Error::Domain("shoot must be positive".into()));
    }
    if !(h > 0.0 && h <= arclength_span / 100.0) {
        return Err(Error::Invalid(format!(
            "step {h} must be positive and at most span/100 = {}",
            arclength_span / 100.0
        )));
    }
    let n = (arclength_span / h).round() as usize;
    let start = [shoot, 0.0, FRAC_PI_2];
    let integrate = |dir: f64| -> Result<Vec<[f64; 3]>> {
        let mut out = Vec::with_capacity(n + 1);
        let mut s = start;
        out.push(s);
        for step in 0..n {
            s = rk4(s, dir * h);
            if !s.iter().all(|x| x.is_finite()) {
                return Err(Error::IntegrationDiverged { step });
            }
            out.push(s);
        }
        Ok(out)
    };
    let back = integrate(-1.0)?;
    let fwd = integrate(1.0)?;
    let states: Vec<[f64; 3]> = back.iter().rev().chain(fwd.iter().skip(1)).cloned().collect();
    let arclength = (0..states.len()).map(|k| (k as f64 - n as f64) * h).collect();
    let curve = PlanarCurve::open(states.iter().map(|s| Complex64::new(s[0], s[1])).collect())?;
    Ok(ExpanderCurve {
        curve,
        angle: states.iter().map(|s| s[2]).collect(),
        arclength,
        shoot,
        h,
    })
}

/// Preset with a small loop whose tangent angle oscillates by `pi + 0.5`: the
/// loop collapses under the flow and leaves a cusp. `scale` shrinks the whole
/// shape, `n` is the point count.
pub fn looped_curve(scale: f64, n: usize) -> Result<PlanarCurve> {
    let smooth_step = |x: f64| 0.5 * (1.0 + x.tanh());
    let extra = 0.5;
    let length = 8.0;
    let angle = |s: f64| (PI + extra) * smooth_step((s - 3.0) / 0.35) - extra * smooth_step((s - 5.2) / 0.3);
    // fine trapezoid integration of the tangent, then uniform resampling
    let fine = 40 * n;
    let ds = length / fine as f64;
    let mut p = Complex64::new(0.0, 0.0);
    let mut dense = Vec::with_capacity(fine + 1);
    dense.push(p);
    for k in 0..fine {
        let s0 = k as f64 * ds;
        let t = (Complex64::from_polar(1.0, angle(s0)) + Complex64::from_polar(1.0, angle(s0 + ds))) * 0.5;
        p += t * ds;
        dense.push(p);
    }
    let pts = (0..n).map(|k| dense[k * fine / (n - 1)] * scale).collect();
    PlanarCurve::open(pts)
}

/// Curve shortening flow state.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveFlowState {
    pub curve: PlanarCurve,
    pub time: f64,
    pub max_curvature: f64,
    /// Enclosed area for closed curves, loop area for open curves with a detected loop.
    pub area: Option<f64>,
    loop_hint: Option<(usize, usize)>,
}

impl CurveFlowState {
    pub fn new(curve: PlanarCurve) -> Result<Self> {
        let k = curve.curvature_vectors()?;
        let max_curvature = k.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let (area, loop_hint) = Self::area_of(&curve, None);
        Ok(Self {
            curve,
            time: 0.0,
            max_curvature,
            area,
            loop_hint,
        })
    }

    fn area_of(curve: &PlanarCurve, hint: Option<(usize, usize)>) -> (Option<f64>, Option<(usize, usize)>) {
        if curve.is_closed() {
            (Some(curve.signed_area().abs()), None)
        } else {
            match curve.loop_area(hint) {
                Some((a, pair)) => (Some(a), Some(pair)),
                None => (None, None),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Curvature above which the integrator halts.
    pub blowup_threshold: f64,
    /// Halt once `max_curvature * h_min` exceeds this, i.e. when the discrete
    /// turning angle per segment shows the curvature is no longer resolved.
    pub resolution_limit: f64,
    /// Fraction of `h_min^2` used by [`flow_until`] as the time step.
    pub cfl: f64,
    /// Redistribute points after every step.
    pub redistribute: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            blowup_threshold: 1e3,
            resolution_limit: 1.0,
            cfl: 0.35,
            redistribute: true,
        }
    }
}

/// Largest `dt` accepted by [`csf_step`].
pub const STABILITY_FACTOR: f64 = 0.4;

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Advanced(CurveFlowState),
    /// Curvature blew up or outgrew the grid; carries the final state.
    Halted(CurveFlowState),
}

impl StepOutcome {
    pub fn state(&self) -> &CurveFlowState {
        match self {
            StepOutcome::Advanced(s) | StepOutcome::Halted(s) => s,
        }
    }

    pub fn into_state(self) -> CurveFlowState {
        match self {
            StepOutcome::Advanced(s) | StepOutcome::Halted(s) => s,
        }
    }
}

/// One explicit Euler step of `dp/dt = k` followed by tangential redistribution.
pub fn csf_step(s: &CurveFlowState, dt: f64, opts: &FlowOptions) -> Result<StepOutcome> {
    let h_min = s.curve.min_segment();
    let required = STABILITY_FACTOR * h_min * h_min;
    if !(dt > 0.0) || dt > required {
        return Err(Error::Stability { dt, required });
    }
    let k = s.curve.curvature_vectors()?;
    let moved: Vec<Point> = s.curve.points().iter().zip(&k).map(|(&p, &kv)| p + kv * dt).collect();
    let mut curve = PlanarCurve::new(moved, s.curve.topology())?;
    if opts.redistribute {
        curve = curve.redistributed()?;
    }
    let kn = curve.curvature_vectors()?;
    let max_curvature = kn.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !max_curvature.is_finite() {
        return Err(Error::MalformedCurve {
            index: 0,
            reason: "non-finite curvature".into(),
        });
    }
    let (area, loop_hint) = CurveFlowState::area_of(&curve, s.loop_hint);
    let next = CurveFlowState {
        curve,
        time: s.time + dt,
        max_curvature,
        area,
        loop_hint,
    };
    let unresolved = max_curvature * next.curve.min_segment() > opts.resolution_limit;
    if max_curvature > opts.blowup_threshold || unresolved {
        Ok(StepOutcome::Halted(next))
    } else {
        Ok(StepOutcome::Advanced(next))
    }
}

#[derive(Clone, Debug)]
pub struct FlowRun {
    pub state: CurveFlowState,
    pub halted: bool,
    pub steps: usize,
}

/// Runs the flow with `dt = cfl * h_min^2` until `t_end` or blow-up, calling
/// `observe` after every accepted step.
pub fn flow_until(
    start: CurveFlowState,
    t_end: f64,
    opts: &FlowOptions,
    mut observe: impl FnMut(&CurveFlowState),
) -> Result<FlowRun> {
    let mut state = start;
    let mut steps = 0;
    while state.time < t_end {
        let h = state.curve.min_segment();
        let dt = (opts.cfl * h * h).min(t_end - state.time);
        if dt <= 1e-300 {
            break;
        }
        let out = csf_step(&state, dt, opts)?;
        steps += 1;
        match out {
            StepOutcome::Advanced(s) => {
                state = s;
                observe(&state);
            }
            StepOutcome::Halted(s) => {
                observe(&s);
                return Ok(FlowRun {
                    state: s,
                    halted: true,
                    steps,
                });
            }
        }
    }
    Ok(FlowRun {
        state,
        halted: false,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_and_degenerate_curves() {
        let few = (0..5).map(|k| Complex64::new(k as f64, 0.0)).collect();
        assert!(PlanarCurve::open(few).is_err());
        let mut pts: Vec<Point> = (0..20).map(|k| Complex64::new(k as f64, 0.0)).collect();
        pts[7] = pts[6];
        assert!(matches!(
            PlanarCurve::open(pts),
            Err(Error::MalformedCurve { index: 6, .. })
        ));
    }

    #[test]
    fn circle_curvature_points_to_center() {
        let r = 2.5;
        let c = PlanarCurve::circle(Complex64::new(1.0, -1.0), r, 200).unwrap();
        for i in [0, 17, 199] {
            let k = c.curvature_vector(i).unwrap();
            assert!((k.norm() - 1.0 / r).abs() < 1e-10 / r);
            let to_center = Complex64::new(1.0, -1.0) - c.points()[i];
            assert!((k / k.norm() - to_center / to_center.norm()).norm() < 1e-10);
        }
    }

    #[test]
    fn straight_segment_has_zero_curvature() {
        let c = PlanarCurve::segment(Complex64::new(-1.0, 2.0), Complex64::new(3.0, 0.5), 40).unwrap();
        for i in 1..39 {
            assert!(c.curvature_vector(i).unwrap().norm() < 1e-12);
        }
        assert!(c.curvature_vector(0).is_err());
    }

    /// Curvature of the graph x = -log cos y: |x''| / (1 + x'^2)^{3/2}
    /// with x' = tan y, x'' = sec^2 y, which simplifies to cos y.
    fn graph_curvature(y: f64) -> f64 {
        let d1 = y.tan();
        let d2 = 1.0 / (y.cos() * y.cos());
        d2.abs() / (1.0 + d1 * d1).powf(1.5)
    }

    #[test]
    fn grim_reaper_profile_curvature() {
        let errs: Vec<f64> = [0.01, 0.005]
            .iter()
            .map(|&h| {
                let c = grim_reaper_profile(-1.2, 1.2, h).unwrap();
                let mut worst = 0.0f64;
                for i in 1..c.len() - 1 {
                    let y = c.points()[i].im;
                    let k = c.curvature_vector(i).unwrap().norm();
                    worst = worst.max((k - graph_curvature(y)).abs());
                }
                worst
            })
            .collect();
        assert!(errs[0] < 1e-3, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
        let c = grim_reaper_profile(-1.0, 1.0, 0.01).unwrap();
        let mid = c.len() / 2;
        assert_eq!(c.points()[mid], Complex64::new(0.0, 0.0));
        assert!((c.curvature_vector(mid).unwrap().norm() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn grim_reaper_domain() {
        assert!(matches!(grim_reaper_profile(-1.6, 0.0, 0.01), Err(Error::Domain(_))));
        assert!(matches!(grim_reaper_profile(0.5, 0.2, 0.01), Err(Error::Domain(_))));
    }

    #[test]
    fn stability_violation_reports_required_step() {
        let c = PlanarCurve::circle(Complex64::new(0.0, 0.0), 1.0, 64).unwrap();
        let s = CurveFlowState::new(c).unwrap();
        let h = s.curve.min_segment();
        match csf_step(&s, h * h, &FlowOptions::default()) {
            Err(Error::Stability { required, .. }) => {
                assert!((required - 0.4 * h * h).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn clamped_segment_is_fixed() {
        let c = PlanarCurve::segment(Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0), 50).unwrap();
        let s = CurveFlowState::new(c.clone()).unwrap();
        let h = c.min_segment();
        let out = csf_step(&s, 0.3 * h * h, &FlowOptions::default()).unwrap();
        for (a, b) in out.state().curve.points().iter().zip(c.points()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn length_decreases_and_area_rate_is_two_pi() {
        let c = PlanarCurve::ellipse(1.5, 1.0, 160).unwrap();
        let mut s = CurveFlowState::new(c).unwrap();
        let opts = FlowOptions::default();
        let mut history = vec![(s.time, s.area.unwrap())];
        for _ in 0..200 {
            let prev_len = s.curve.length();
            let h = s.curve.min_segment();
            s = csf_step(&s, 0.35 * h * h, &opts).unwrap().into_state();
            assert!(s.curve.length() <= prev_len + 1e-10);
            history.push((s.time, s.area.unwrap()));
        }
        for w in history.windows(11).step_by(10) {
            let rate = (w[10].1 - w[0].1) / (w[10].0 - w[0].0);
            assert!((rate + 2.0 * PI).abs() <= 0.03 * 2.0 * PI, "rate {rate}");
        }
    }

    #[test]
    fn redistribution_bounds_spacing_ratio() {
        let c = grim_reaper_profile(-1.5, 1.5, 0.01).unwrap();
        assert!(c.spacing_ratio() > 4.0);
        let r = c.redistributed().unwrap();
        assert!(r.spacing_ratio() <= 4.0);
        assert_eq!(r.points()[0], c.points()[0]);
        assert_eq!(r.points().last(), c.points().last());
    }

    #[test]
    fn self_intersection_of_looped_preset() {
        let c = looped_curve(1.0, 800).unwrap();
        let hits = c.self_intersections();
        assert_eq!(hits.len(), 1, "{hits:?}");
        let (area, _) = c.loop_area(None).unwrap();
        assert!((area - 0.42).abs() < 0.02, "{area}");
        let angles = c.tangent_angles();
        let osc = angles.iter().cloned().fold(f64::MIN, f64::max) - angles.iter().cloned().fold(f64::MAX, f64::min);
        assert!(osc > PI && osc < PI + 0.6);
    }

    #[test]
    fn double_curve_doubles_points() {
        let w = PlanarCurve::segment(Complex64::new(1.0, 0.0), Complex64::new(10.0, 0.0), 30).unwrap();
        let d = double_curve(&w).unwrap();
        assert_eq!(d.total_points(), 60);
        assert_eq!(d.components[1].points()[0], Complex64::new(-1.0, 0.0));
        let closed = PlanarCurve::circle(Complex64::new(0.0, 0.0), 1.0, 20).unwrap();
        assert!(double_curve(&closed).is_err());
    }

    #[test]
    fn expander_rejects_bad_input() {
        assert!(matches!(expander_curve(0.0, 10.0, 0.01), Err(Error::Domain(_))));
        assert!(expander_curve(1.0, 1.0, 0.1).is_err());
    }
}
