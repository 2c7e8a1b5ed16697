//! Parametric surface patches in C^2 on structured grids, with the intrinsic
//! calculus needed by the translator identities: fundamental forms, mean
//! curvature, Lagrangian angle, gradient and Laplace-Beltrami operator,
//! conormal flux, level sets, graphical decomposition and the Liouville
//! primitive.
//!
//! All derivatives are second order: central differences in the interior and
//! one-sided three/four point stencils on the first and last grid lines.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ambient::{apply_j, holomorphic_volume, symplectic_form, AmbientVector, TwoFrame};
use crate::curves::wrap_angle;
use crate::error::{Error, Result};

/// Width (in nodes) of the boundary band reported separately from the interior.
pub const BOUNDARY_BAND: usize = 2;

/// Smallest admissible `det g` at a node.
pub const MIN_METRIC_DET: f64 = 1e-10;

/// Rectangular `(u, v)` lattice. Node `(i, j)` sits at `(u0 + i hu, v0 + j hv)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nu: usize,
    pub nv: usize,
    pub u0: f64,
    pub v0: f64,
    pub hu: f64,
    pub hv: f64,
}

impl Grid {
    pub fn new(nu: usize, nv: usize, u0: f64, v0: f64, hu: f64, hv: f64) -> Result<Self> {
        if nu < 4 || nv < 4 {
            return Err(Error::Invalid(format!("grid {nu}x{nv} is smaller than 4x4")));
        }
        if !(hu > 0.0 && hv > 0.0) {
            return Err(Error::Invalid("grid spacings must be positive".into()));
        }
        Ok(Self { nu, nv, u0, v0, hu, hv })
    }

    /// Grid covering `[u_min, u_max] x [v_min, v_max]` with spacings close to `h_u`, `h_v`.
    pub fn covering(u: (f64, f64), v: (f64, f64), h_u: f64, h_v: f64) -> Result<Self> {
        let nu = ((u.1 - u.0) / h_u).round().max(3.0) as usize + 1;
        let nv = ((v.1 - v.0) / h_v).round().max(3.0) as usize + 1;
        Self::new(
            nu,
            nv,
            u.0,
            v.0,
            (u.1 - u.0) / (nu - 1) as f64,
            (v.1 - v.0) / (nv - 1) as f64,
        )
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k / self.nv, k % self.nv)
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u0 + i as f64 * self.hu
    }

    pub fn v(&self, j: usize) -> f64 {
        self.v0 + j as f64 * self.hv
    }

    /// Whether node `k` lies within [`BOUNDARY_BAND`] nodes of the grid edge.
    pub fn in_boundary_band(&self, k: usize) -> bool {
        let (i, j) = self.ij(k);
        i < BOUNDARY_BAND || j < BOUNDARY_BAND || i + BOUNDARY_BAND >= self.nu || j + BOUNDARY_BAND >= self.nv
    }

    fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.ij(k);
        let (nu, nv) = (self.nu, self.nv);
        [
            (i > 0).then(|| (i - 1, j)),
            (i + 1 < nu).then(|| (i + 1, j)),
            (j > 0).then(|| (i, j - 1)),
            (j + 1 < nv).then(|| (i, j + 1)),
        ]
        .into_iter()
        .flatten()
        .map(move |(a, b)| a * nv + b)
    }

    /// Trapezoid-rule weights in parameter space.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (i, j) = self.ij(k);
                let wu = if i == 0 || i + 1 == self.nu { 0.5 } else { 1.0 };
                let wv = if j == 0 || j + 1 == self.nv { 0.5 } else { 1.0 };
                wu * wv * self.hu * self.hv
            })
            .collect()
    }
}

/// A scalar value per grid node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub name: String,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("field `{name}` is not finite at node {k}")));
        }
        Ok(Self { name, values })
    }

    pub fn from_positions(name: &str, p: &SurfacePatch, f: impl Fn(AmbientVector) -> f64) -> Result<Self> {
        Self::new(name, p.positions.iter().map(|&x| f(x)).collect())
    }

    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Grid immersion `F(u, v)` into C^2.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfacePatch {
    pub grid: Grid,
    pub positions: Vec<AmbientVector>,
    /// Name of the generating construction, when analytic.
    pub tag: Option<String>,
}

impl SurfacePatch {
    pub fn new(grid: Grid, positions: Vec<AmbientVector>, tag: Option<String>) -> Result<Self> {
        if positions.len() != grid.len() {
            return Err(Error::Invalid(format!(
                "{} positions for a grid of {} nodes",
                positions.len(),
                grid.len()
            )));
        }
        if let Some(k) = positions.iter().position(|x| !x.is_finite()) {
            let (i, j) = grid.ij(k);
            return Err(Error::Invalid(format!("non-finite position at node ({i}, {j})")));
        }
        Ok(Self { grid, positions, tag })
    }

    pub fn from_fn(grid: Grid, tag: &str, f: impl Fn(f64, f64) -> AmbientVector) -> Result<Self> {
        let positions = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ij(k);
                f(grid.u(i), grid.v(j))
            })
            .collect();
        Self::new(grid, positions, Some(tag.to_string()))
    }

    pub fn position(&self, i: usize, j: usize) -> AmbientVector {
        self.positions[self.grid.idx(i, j)]
    }

    pub fn map_positions(&self, f: impl Fn(AmbientVector) -> AmbientVector) -> Self {
        Self {
            grid: self.grid,
            positions: self.positions.iter().map(|&x| f(x)).collect(),
            tag: self.tag.clone(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_positions(|x| x * s)
    }

    pub fn translated(&self, by: AmbientVector) -> Self {
        self.map_positions(|x| x + by)
    }

    /// Nodes `i0..=i1`, `j0..=j1`.
    pub fn sub_patch(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> Result<Self> {
        if i1 >= self.grid.nu || j1 >= self.grid.nv || i0 > i1 || j0 > j1 {
            return Err(Error::Invalid("sub-patch range outside grid".into()));
        }
        let g = Grid::new(
            i1 - i0 + 1,
            j1 - j0 + 1,
            self.grid.u(i0),
            self.grid.v(j0),
            self.grid.hu,
            self.grid.hv,
        )?;
        let mut pos = Vec::with_capacity(g.len());
        for i in i0..=i1 {
            for j in j0..=j1 {
                pos.push(self.position(i, j));
            }
        }
        Self::new(g, pos, self.tag.clone())
    }

    pub fn calculus(&self) -> Result<Calculus<'_>> {
        Calculus::new(self)
    }
}

trait Linear: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>> Linear for T {}

#[inline]
fn d1<T: Linear>(get: impl Fn(usize) -> T, k: usize, n: usize, h: f64) -> T {
    let s = 0.5 / h;
    if k == 0 {
        (get(0) * -3.0 + get(1) * 4.0 - get(2)) * s
    } else if k + 1 == n {
        (get(n - 1) * 3.0 - get(n - 2) * 4.0 + get(n - 3)) * s
    } else {
        (get(k + 1) - get(k - 1)) * s
    }
}

#[inline]
fn d2<T: Linear>(get: impl Fn(usize) -> T, k: usize, n: usize, h: f64) -> T {
    let s = 1.0 / (h * h);
    if k == 0 {
        (get(0) * 2.0 - get(1) * 5.0 + get(2) * 4.0 - get(3)) * s
    } else if k + 1 == n {
        (get(n - 1) * 2.0 - get(n - 2) * 5.0 + get(n - 3) * 4.0 - get(n - 4)) * s
    } else {
        (get(k + 1) - get(k) * 2.0 + get(k - 1)) * s
    }
}

/// First and second parameter derivatives of a nodal quantity.
#[derive(Clone, Debug)]
pub struct Derivatives<T> {
    pub du: Vec<T>,
    pub dv: Vec<T>,
    pub duu: Vec<T>,
    pub duv: Vec<T>,
    pub dvv: Vec<T>,
}

fn derivatives<T: Linear>(g: &Grid, f: &[T]) -> Derivatives<T> {
    let (nu, nv) = (g.nu, g.nv);
    let along_u = |vals: &[T], k: usize, second: bool| {
        let (i, j) = g.ij(k);
        let get = |a: usize| vals[a * nv + j];
        if second {
            d2(get, i, nu, g.hu)
        } else {
            d1(get, i, nu, g.hu)
        }
    };
    let along_v = |vals: &[T], k: usize, second: bool| {
        let (i, j) = g.ij(k);
        let get = |b: usize| vals[i * nv + b];
        if second {
            d2(get, j, nv, g.hv)
        } else {
            d1(get, j, nv, g.hv)
        }
    };
    let n = g.len();
    let du: Vec<T> = (0..n).map(|k| along_u(f, k, false)).collect();
    let dv: Vec<T> = (0..n).map(|k| along_v(f, k, false)).collect();
    let duu = (0..n).map(|k| along_u(f, k, true)).collect();
    let dvv = (0..n).map(|k| along_v(f, k, true)).collect();
    let duv = (0..n).map(|k| along_u(&dv, k, false)).collect();
    Derivatives { du, dv, duu, duv, dvv }
}

/// First fundamental form at a node: `g = [E, F, G]`, its inverse and `sqrt(det g)`.
#[derive(Clone, Copy, Debug)]
pub struct Metric {
    pub g: [f64; 3],
    pub inv: [f64; 3],
    pub sqrt_det: f64,
}

/// Per-node differential geometry of a patch.
pub struct Calculus<'a> {
    pub patch: &'a SurfacePatch,
    pub frame: Derivatives<AmbientVector>,
    pub metric: Vec<Metric>,
}

/// Max of a nodal quantity over the interior and over the boundary band.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub interior: f64,
    pub boundary: f64,
}

impl ResidualStats {
    pub fn of(grid: &Grid, values: impl Iterator<Item = f64>) -> Self {
        let mut s = Self::default();
        for (k, v) in values.enumerate() {
            let v = v.abs();
            if grid.in_boundary_band(k) {
                s.boundary = s.boundary.max(v);
            } else {
                s.interior = s.interior.max(v);
            }
        }
        s
    }

    pub fn overall(&self) -> f64 {
        self.interior.max(self.boundary)
    }
}

impl<'a> Calculus<'a> {
    pub fn new(patch: &'a SurfacePatch) -> Result<Self> {
        let g = &patch.grid;
        let frame = derivatives(g, &patch.positions);
        let mut metric = Vec::with_capacity(g.len());
        for k in 0..g.len() {
            let (fu, fv) = (frame.du[k], frame.dv[k]);
            let (e, f, gg) = (fu.norm_sq(), fu.dot(fv), fv.norm_sq());
            let det = e * gg - f * f;
            if !(det >= MIN_METRIC_DET) {
                let (i, j) = g.ij(k);
                return Err(Error::SingularMetric { i, j, det });
            }
            metric.push(Metric {
                g: [e, f, gg],
                inv: [gg / det, -f / det, e / det],
                sqrt_det: det.sqrt(),
            });
        }
        Ok(Self { patch, frame, metric })
    }

    pub fn grid(&self) -> &Grid {
        &self.patch.grid
    }

    pub fn len(&self) -> usize {
        self.metric.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metric.is_empty()
    }

    pub fn tangent_frame(&self, k: usize) -> TwoFrame {
        TwoFrame::new(self.frame.du[k], self.frame.dv[k])
    }

    /// Tangential projection of `x` at node `k`.
    pub fn tangential(&self, k: usize, x: AmbientVector) -> AmbientVector {
        let (fu, fv) = (self.frame.du[k], self.frame.dv[k]);
        let m = &self.metric[k].inv;
        let (a, b) = (x.dot(fu), x.dot(fv));
        fu * (m[0] * a + m[1] * b) + fv * (m[1] * a + m[2] * b)
    }

    pub fn normal(&self, k: usize, x: AmbientVector) -> AmbientVector {
        x - self.tangential(k, x)
    }

    /// `g^{ij} F_ij`, whose normal part is the mean curvature vector.
    fn trace_hessian(&self, k: usize) -> AmbientVector {
        let m = &self.metric[k].inv;
        self.frame.duu[k] * m[0] + self.frame.duv[k] * (2.0 * m[1]) + self.frame.dvv[k] * m[2]
    }

    pub fn mean_curvature(&self) -> Vec<AmbientVector> {
        (0..self.len()).map(|k| self.normal(k, self.trace_hessian(k))).collect()
    }

    /// `omega` on an orthonormal tangent frame; zero on Lagrangian patches.
    pub fn lagrangian_residual(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| symplectic_form(&self.tangent_frame(k)) / self.metric[k].sqrt_det)
            .collect()
    }

    /// `Omega` on an oriented orthonormal tangent frame.
    pub fn holomorphic_phase(&self, k: usize) -> Complex64 {
        holomorphic_volume(&self.tangent_frame(k)) / self.metric[k].sqrt_det
    }

    /// Lagrangian angle unwrapped by breadth-first propagation from node (0, 0).
    pub fn lagrangian_angle(&self) -> Result<ScalarField> {
        let g = self.grid();
        let raw: Vec<f64> = (0..self.len()).map(|k| self.holomorphic_phase(k).arg()).collect();
        let mut theta = vec![f64::NAN; raw.len()];
        theta[0] = raw[0];
        let mut queue = VecDeque::from([0usize]);
        while let Some(k) = queue.pop_front() {
            let base = theta[k];
            for n in g.neighbors(k) {
                if theta[n].is_nan() {
                    theta[n] = base + wrap_angle(raw[n] - base);
                    queue.push_back(n);
                }
            }
        }
        for k in 0..theta.len() {
            for n in g.neighbors(k) {
                let jump = (theta[n] - theta[k]).abs();
                if jump > PI / 2.0 {
                    let (i, j) = g.ij(k);
                    return Err(Error::AngleUnwrap { i, j, jump });
                }
            }
        }
        ScalarField::new("theta", theta)
    }

    pub fn field_derivatives(&self, f: &ScalarField) -> Result<Derivatives<f64>> {
        if f.values.len() != self.len() {
            return Err(Error::Invalid(format!(
                "field `{}` has {} values for {} nodes",
                f.name,
                f.values.len(),
                self.len()
            )));
        }
        Ok(derivatives(self.grid(), &f.values))
    }

    fn gradient_from(&self, k: usize, fu: f64, fv: f64) -> AmbientVector {
        let m = &self.metric[k].inv;
        self.frame.du[k] * (m[0] * fu + m[1] * fv) + self.frame.dv[k] * (m[1] * fu + m[2] * fv)
    }

    /// Intrinsic gradient `g^{ij} f_j F_i`.
    pub fn gradient(&self, f: &ScalarField) -> Result<Vec<AmbientVector>> {
        let d = self.field_derivatives(f)?;
        Ok((0..self.len())
            .map(|k| self.gradient_from(k, d.du[k], d.dv[k]))
            .collect())
    }

    /// Laplace-Beltrami `g^{ij} (f_ij - Gamma^k_ij f_k)`.
    pub fn laplacian(&self, f: &ScalarField) -> Result<ScalarField> {
        let d = self.field_derivatives(f)?;
        let vals = (0..self.len())
            .map(|k| {
                let m = &self.metric[k].inv;
                let trace = m[0] * d.duu[k] + 2.0 * m[1] * d.duv[k] + m[2] * d.dvv[k];
                let grad = self.gradient_from(k, d.du[k], d.dv[k]);
                trace - self.trace_hessian(k).dot(grad)
            })
            .collect();
        ScalarField::new(format!("laplacian_{}", f.name), vals)
    }

    /// Trapezoid quadrature weights for `dmu`.
    pub fn area_weights(&self) -> Vec<f64> {
        self.grid()
            .trapezoid_weights()
            .into_iter()
            .zip(&self.metric)
            .map(|(w, m)| w * m.sqrt_det)
            .collect()
    }

    /// `int f dmu` over the nodes `i0..=i1`, `j0..=j1` with trapezoid weights.
    pub fn integrate_rect(&self, values: &[f64], i0: usize, i1: usize, j0: usize, j1: usize) -> f64 {
        let g = self.grid();
        let mut acc = 0.0;
        for i in i0..=i1 {
            let wu = if i == i0 || i == i1 { 0.5 } else { 1.0 };
            for j in j0..=j1 {
                let wv = if j == j0 || j == j1 { 0.5 } else { 1.0 };
                let k = g.idx(i, j);
                acc += wu * wv * values[k] * self.metric[k].sqrt_det;
            }
        }
        acc * g.hu * g.hv
    }

    /// Graph gauge over the oriented plane `P_angle`: the tangent plane is the
    /// graph of `A: P -> J P`, returned as `(A, det of the projection)`.
    pub fn graph_slope(&self, k: usize, plane_angle: f64) -> (Matrix2<f64>, f64) {
        let plane = TwoFrame::lagrangian_plane(plane_angle);
        let (a, b) = (plane.a, plane.b);
        let (ja, jb) = (apply_j(a), apply_j(b));
        let (fu, fv) = (self.frame.du[k], self.frame.dv[k]);
        let m = Matrix2::new(fu.dot(a), fv.dot(a), fu.dot(b), fv.dot(b));
        let n = Matrix2::new(fu.dot(ja), fv.dot(ja), fu.dot(jb), fv.dot(jb));
        let det = m.determinant();
        let slope = m.try_inverse().map(|mi| n * mi).unwrap_or_else(Matrix2::zeros);
        (slope, det / self.metric[k].sqrt_det)
    }

    /// `*omega_alpha`: the area form of `P_alpha` on the oriented unit tangent plane.
    pub fn star_omega(&self, k: usize, plane_angle: f64) -> f64 {
        let (_, det) = self.graph_slope(k, plane_angle);
        det
    }
}

/// Mean curvature vector at every node.
pub fn mean_curvature(p: &SurfacePatch) -> Result<Vec<AmbientVector>> {
    Ok(p.calculus()?.mean_curvature())
}

pub fn lagrangian_angle(p: &SurfacePatch) -> Result<ScalarField> {
    p.calculus()?.lagrangian_angle()
}

pub fn intrinsic_gradient(p: &SurfacePatch, f: &ScalarField) -> Result<Vec<AmbientVector>> {
    p.calculus()?.gradient(f)
}

pub fn laplace_beltrami(p: &SurfacePatch, f: &ScalarField) -> Result<ScalarField> {
    p.calculus()?.laplacian(f)
}

/// Eigenvalues `(l1 <= l2)` of the Hessian of the local potential when the
/// patch is written as a gradient graph over `P_angle`.
pub fn second_fundamental_eigen(p: &SurfacePatch, plane_angle: f64) -> Result<Vec<(f64, f64)>> {
    let c = p.calculus()?;
    (0..c.len())
        .map(|k| {
            let (a, det) = c.graph_slope(k, plane_angle);
            if det.abs() < 1e-8 {
                let (i, j) = p.grid.ij(k);
                return Err(Error::NotGraphical { i, j });
            }
            let sym = (a + a.transpose()) * 0.5;
            let e = SymmetricEigen::new(sym).eigenvalues;
            Ok((e[0].min(e[1]), e[0].max(e[1])))
        })
        .collect()
}

/// An open polyline on the surface carrying the unit conormal at each point.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopPiece {
    pub points: Vec<AmbientVector>,
    pub conormals: Vec<AmbientVector>,
}

impl LoopPiece {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// A loop on a patch, made of pieces (e.g. the four sides of a rectangle) that
/// each carry their own conormals.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryLoop {
    pub pieces: Vec<LoopPiece>,
    pub closed: bool,
}

impl BoundaryLoop {
    /// Boundary of the parameter rectangle `[i0, i1] x [j0, j1]`, counter-clockwise
    /// in parameter space. The conormal points out of the rectangle when
    /// `outward`, into it otherwise (inner boundary of an annulus).
    pub fn rectangle(c: &Calculus, i0: usize, i1: usize, j0: usize, j1: usize, outward: bool) -> Result<Self> {
        let g = c.grid();
        if !(i0 < i1 && j0 < j1 && i1 < g.nu && j1 < g.nv) {
            return Err(Error::Invalid("rectangle outside the grid".into()));
        }
        let sign = if outward { 1.0 } else { -1.0 };
        // conormal along u = const is +-grad u / |grad u|, along v = const +-grad v / |grad v|
        let grad_u = |k: usize| c.gradient_from(k, 1.0, 0.0);
        let grad_v = |k: usize| c.gradient_from(k, 0.0, 1.0);
        let unit = |x: AmbientVector| x * (1.0 / x.norm());
        let piece = |nodes: Vec<usize>, nu: &dyn Fn(usize) -> AmbientVector| LoopPiece {
            points: nodes.iter().map(|&k| c.patch.positions[k]).collect(),
            conormals: nodes.iter().map(|&k| nu(k) * sign).collect(),
        };
        let bottom: Vec<usize> = (i0..=i1).map(|i| g.idx(i, j0)).collect();
        let right: Vec<usize> = (j0..=j1).map(|j| g.idx(i1, j)).collect();
        let top: Vec<usize> = (i0..=i1).rev().map(|i| g.idx(i, j1)).collect();
        let left: Vec<usize> = (j0..=j1).rev().map(|j| g.idx(i0, j)).collect();
        Ok(Self {
            pieces: vec![
                piece(bottom, &|k| -unit(grad_v(k))),
                piece(right, &|k| unit(grad_u(k))),
                piece(top, &|k| unit(grad_v(k))),
                piece(left, &|k| -unit(grad_u(k))),
            ],
            closed: true,
        })
    }

    pub fn length(&self) -> f64 {
        self.pieces.iter().map(LoopPiece::length).sum()
    }

    pub fn max_extent(&self) -> f64 {
        self.pieces
            .iter()
            .flat_map(|p| p.points.iter())
            .map(|x| x.norm())
            .fold(0.0, f64::max)
    }

    pub fn points(&self) -> impl Iterator<Item = &AmbientVector> {
        self.pieces.iter().flat_map(|p| p.points.iter())
    }
}

/// Trapezoid line integral of `<nu, direction>` along a closed loop.
pub fn flux_integral(lp: &BoundaryLoop, direction: AmbientVector) -> Result<f64> {
    if !lp.closed {
        return Err(Error::Topology("flux integral needs a closed loop".into()));
    }
    let mut acc = 0.0;
    for piece in &lp.pieces {
        for k in 0..piece.points.len().saturating_sub(1) {
            let ds = (piece.points[k + 1] - piece.points[k]).norm();
            let a = piece.conormals[k].dot(direction);
            let b = piece.conormals[k + 1].dot(direction);
            acc += 0.5 * (a + b) * ds;
        }
    }
    Ok(acc)
}

/// Level curves `{f = a}` of a field on a patch.
#[derive(Clone, Debug)]
pub struct LevelSetReport {
    /// Level actually extracted (after the tie-break perturbation).
    pub level: f64,
    pub curves: Vec<BoundaryLoop>,
    pub total_length: f64,
    /// `sup |x|` over the level set (0 when empty).
    pub max_extent: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum EdgeId {
    /// Edge from `(i, j)` to `(i + 1, j)`.
    U(usize, usize),
    /// Edge from `(i, j)` to `(i, j + 1)`.
    V(usize, usize),
}

/// Marching-squares extraction of `{f = a}` in parameter space, mapped to C^2.
/// Node values equal to `a` shift the level by `1e-12 * range(f)`.
pub fn level_set(c: &Calculus, f: &ScalarField, a: f64) -> Result<LevelSetReport> {
    let g = *c.grid();
    if f.values.len() != g.len() {
        return Err(Error::Invalid("field does not match the patch".into()));
    }
    let (lo, hi) = f.range();
    let mut level = a;
    if f.values.contains(&level) {
        level += 1e-12 * (hi - lo).max(f64::MIN_POSITIVE);
    }
    let grad = c.gradient(f)?;
    let val = |i: usize, j: usize| f.values[g.idx(i, j)] - level;
    let crossing = |e: EdgeId| -> Option<(AmbientVector, AmbientVector)> {
        let ((i, j), (k, l)) = match e {
            EdgeId::U(i, j) => ((i, j), (i + 1, j)),
            EdgeId::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (fa, fb) = (val(i, j), val(k, l));
        if (fa < 0.0) == (fb < 0.0) {
            return None;
        }
        let t = fa / (fa - fb);
        let (ka, kb) = (g.idx(i, j), g.idx(k, l));
        let x = c.patch.positions[ka] * (1.0 - t) + c.patch.positions[kb] * t;
        let n = grad[ka] * (1.0 - t) + grad[kb] * t;
        Some((x, n * (1.0 / n.norm())))
    };
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for i in 0..g.nu - 1 {
        for j in 0..g.nv - 1 {
            // edges in counter-clockwise order: bottom, right, top, left
            let edges = [
                EdgeId::U(i, j),
                EdgeId::V(i + 1, j),
                EdgeId::U(i, j + 1),
                EdgeId::V(i, j),
            ];
            let cut: Vec<EdgeId> = edges.into_iter().filter(|&e| crossing(e).is_some()).collect();
            match cut.len() {
                2 => segments.push((cut[0], cut[1])),
                4 => {
                    let center = 0.25 * (val(i, j) + val(i + 1, j) + val(i, j + 1) + val(i + 1, j + 1));
                    // saddle: pair edges so that the centre's sign region stays connected
                    if (center < 0.0) == (val(i, j) < 0.0) {
                        segments.push((cut[0], cut[1]));
                        segments.push((cut[2], cut[3]));
                    } else {
                        segments.push((cut[3], cut[0]));
                        segments.push((cut[1], cut[2]));
                    }
                }
                _ => {}
            }
        }
    }
    let mut incident: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(s);
        incident.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut curves = Vec::new();
    let mut order: Vec<usize> = (0..segments.len()).collect();
    // start open chains at their ends so that each chain is traced once
    order.sort_by_key(|&s| {
        let (a, b) = segments[s];
        let end = incident[&a].len() == 1 || incident[&b].len() == 1;
        (!end, s)
    });
    for start in order {
        if used[start] {
            continue;
        }
        let (a, b) = segments[start];
        let (mut chain, mut cur) = if incident[&b].len() == 1 {
            (vec![b, a], a)
        } else {
            (vec![a, b], b)
        };
        used[start] = true;
        loop {
            let next = incident[&cur].iter().copied().find(|&s| !used[s]);
            match next {
                Some(s) => {
                    used[s] = true;
                    let (p, q) = segments[s];
                    cur = if p == cur { q } else { p };
                    chain.push(cur);
                }
                None => break,
            }
        }
        let closed = chain.len() > 2 && chain.first() == chain.last();
        let (points, conormals): (Vec<_>, Vec<_>) = chain.iter().map(|&e| crossing(e).unwrap()).unzip();
        curves.push(BoundaryLoop {
            pieces: vec![LoopPiece { points, conormals }],
            closed,
        });
    }
    let total_length = curves.iter().map(BoundaryLoop::length).sum();
    let max_extent = curves.iter().map(BoundaryLoop::max_extent).fold(0.0, f64::max);
    Ok(LevelSetReport {
        level,
        curves,
        total_length,
        max_extent,
    })
}

/// One component of a graphical decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphComponent {
    /// Index of the patch the component lives on.
    pub patch: usize,
    pub plane_angle: f64,
    /// Covering degree of the projection onto the plane.
    pub degree: usize,
    /// Smallest `|projection|` over the component.
    pub radius: f64,
    /// Largest operator norm of the graph slope.
    pub slope_bound: f64,
    pub nodes: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub components: Vec<GraphComponent>,
}

fn project_onto(x: AmbientVector, plane_angle: f64) -> [f64; 2] {
    let p = TwoFrame::lagrangian_plane(plane_angle);
    [x.dot(p.a), x.dot(p.b)]
}

fn in_triangle(q: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    let d = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
    if d == 0.0 {
        return false;
    }
    let l1 = ((b[1] - c[1]) * (q[0] - c[0]) + (c[0] - b[0]) * (q[1] - c[1])) / d;
    let l2 = ((c[1] - a[1]) * (q[0] - c[0]) + (a[0] - c[0]) * (q[1] - c[1])) / d;
    let l3 = 1.0 - l1 - l2;
    l1 >= 0.0 && l2 >= 0.0 && l3 >= 0.0
}

/// Splits the nodes that project outside `B_radius` of each plane `P_angle`
/// (and on which `*omega_angle >= eps`) into connected components and checks
/// that each projects as a covering map, by counting the preimages of up to 16
/// sample points taken inside the component.
pub fn graphical_decomposition(
    patches: &[SurfacePatch],
    plane_angles: &[f64],
    radius: f64,
    eps: f64,
) -> Result<DecompositionReport> {
    let mut report = DecompositionReport::default();
    for (pi, p) in patches.iter().enumerate() {
        let c = p.calculus()?;
        let g = p.grid;
        let mut claimed = vec![false; g.len()];
        for &alpha in plane_angles {
            let mask: Vec<bool> = (0..g.len())
                .map(|k| {
                    let q = project_onto(p.positions[k], alpha);
                    !claimed[k] && q[0].hypot(q[1]) > radius && c.star_omega(k, alpha) >= eps
                })
                .collect();
            let mut label = vec![usize::MAX; g.len()];
            for seed in 0..g.len() {
                if !mask[seed] || label[seed] != usize::MAX {
                    continue;
                }
                let mut nodes = vec![seed];
                label[seed] = seed;
                let mut head = 0;
                while head < nodes.len() {
                    let k = nodes[head];
                    head += 1;
                    for n in g.neighbors(k) {
                        if mask[n] && label[n] == usize::MAX {
                            label[n] = seed;
                            nodes.push(n);
                        }
                    }
                }
                nodes.sort_unstable();
                let in_comp = |k: usize| label[k] == seed;
                // cells with all four corners in the component
                let cells: Vec<(usize, usize)> = (0..g.nu - 1)
                    .flat_map(|i| (0..g.nv - 1).map(move |j| (i, j)))
                    .filter(|&(i, j)| {
                        in_comp(g.idx(i, j))
                            && in_comp(g.idx(i + 1, j))
                            && in_comp(g.idx(i, j + 1))
                            && in_comp(g.idx(i + 1, j + 1))
                    })
                    .collect();
                if cells.is_empty() {
                    continue;
                }
                let proj = |i: usize, j: usize| project_onto(p.position(i, j), alpha);
                let triangles: Vec<[[f64; 2]; 3]> = cells
                    .iter()
                    .flat_map(|&(i, j)| {
                        let (a, b, cc, d) = (proj(i, j), proj(i + 1, j), proj(i + 1, j + 1), proj(i, j + 1));
                        [[a, b, cc], [a, cc, d]]
                    })
                    .collect();
                // sample points: centroids of triangles in cells away from the component edge
                let deep: Vec<usize> = (0..cells.len())
                    .filter(|&x| {
                        let (i, j) = cells[x];
                        i >= 2
                            && j >= 2
                            && i + 3 < g.nu
                            && j + 3 < g.nv
                            && (i - 2..=i + 3).all(|a| (j - 2..=j + 3).all(|b| in_comp(g.idx(a, b))))
                    })
                    .collect();
                let pool = if deep.is_empty() {
                    (0..cells.len()).collect()
                } else {
                    deep
                };
                let samples: Vec<[f64; 2]> = (0..16.min(pool.len()))
                    .map(|s| {
                        let t = &triangles[2 * pool[s * pool.len() / 16.min(pool.len())]];
                        [(t[0][0] + t[1][0] + t[2][0]) / 3.0, (t[0][1] + t[1][1] + t[2][1]) / 3.0]
                    })
                    .collect();
                let counts: Vec<usize> = samples
                    .iter()
                    .map(|&q| triangles.iter().filter(|t| in_triangle(q, t[0], t[1], t[2])).count())
                    .collect();
                if counts.iter().any(|&n| n != counts[0]) {
                    return Err(Error::NotACovering {
                        counts,
                        witnesses: samples,
                    });
                }
                let slope_bound = nodes
                    .iter()
                    .map(|&k| c.graph_slope(k, alpha).0.svd(false, false).singular_values.max())
                    .fold(0.0f64, f64::max);
                let radius_j = nodes
                    .iter()
                    .map(|&k| {
                        let q = project_onto(p.positions[k], alpha);
                        q[0].hypot(q[1])
                    })
                    .fold(f64::INFINITY, f64::min);
                for &k in &nodes {
                    claimed[k] = true;
                }
                report.components.push(GraphComponent {
                    patch: pi,
                    plane_angle: alpha,
                    degree: counts[0],
                    radius: radius_j,
                    slope_bound,
                    nodes,
                });
            }
        }
    }
    Ok(report)
}

/// Loop integral of the Liouville form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Holonomy {
    pub label: String,
    pub value: f64,
    pub loop_length: f64,
}

#[derive(Clone, Debug)]
pub struct LiouvillePrimitive {
    /// `beta` with `d beta = lambda` along a spanning tree from node (0, 0).
    pub beta: ScalarField,
    /// Largest `|holonomy| / perimeter` over grid cells.
    pub max_cell_holonomy: f64,
    /// Holonomy around the boundary of the parameter rectangle.
    pub boundary: Holonomy,
    /// Holonomies of cycles closing through periodic seams of the patch.
    pub seam_cycles: Vec<Holonomy>,
    pub exact: bool,
}

const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// `int lambda` along the edge from `line[k]` to `line[k + 1]` of a grid line,
/// using the cubic through four consecutive nodes.
fn edge_liouville(line: &[AmbientVector], k: usize) -> f64 {
    let n = line.len();
    let s = if n < 4 { 0 } else { k.saturating_sub(1).min(n - 4) };
    let m = n.min(4);
    let pts = &line[s..s + m];
    // local parameter: node s + r sits at t = r; the edge runs over [k - s, k - s + 1]
    let t0 = (k - s) as f64;
    let nodes: Vec<f64> = (0..m).map(|r| r as f64).collect();
    let eval = |t: f64| -> (AmbientVector, AmbientVector) {
        let mut x = AmbientVector::ZERO;
        let mut dx = AmbientVector::ZERO;
        for r in 0..m {
            let mut l = 1.0;
            let mut dl = 0.0;
            for q in 0..m {
                if q == r {
                    continue;
                }
                let denom = nodes[r] - nodes[q];
                dl = dl * (t - nodes[q]) / denom + l / denom;
                l *= (t - nodes[q]) / denom;
            }
            x += pts[r] * l;
            dx += pts[r] * dl;
        }
        (x, dx)
    };
    GAUSS3
        .iter()
        .map(|&(t, w)| {
            let (x, dx) = eval(t0 + t);
            w * crate::ambient::liouville_form(x, dx)
        })
        .sum()
}

/// Integrates the pullback of the Liouville form over a spanning tree of the
/// grid and reports the holonomy of every cell and of periodic seams.
/// `tolerance` bounds `|holonomy| / loop length` for the patch to count as exact.
pub fn liouville_primitive(p: &SurfacePatch, tolerance: f64) -> Result<LiouvillePrimitive> {
    let g = p.grid;
    let u_line = |j: usize| -> Vec<AmbientVector> { (0..g.nu).map(|i| p.position(i, j)).collect() };
    let v_line = |i: usize| -> Vec<AmbientVector> { (0..g.nv).map(|j| p.position(i, j)).collect() };
    // eu[i][j]: edge (i, j) -> (i + 1, j); ev[i][j]: edge (i, j) -> (i, j + 1)
    let mut eu = vec![0.0; g.len()];
    let mut ev = vec![0.0; g.len()];
    for j in 0..g.nv {
        let line = u_line(j);
        for i in 0..g.nu - 1 {
            eu[g.idx(i, j)] = edge_liouville(&line, i);
        }
    }
    for i in 0..g.nu {
        let line = v_line(i);
        for j in 0..g.nv - 1 {
            ev[g.idx(i, j)] = edge_liouville(&line, j);
        }
    }
    let mut beta = vec![f64::NAN; g.len()];
    beta[0] = 0.0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(k) = queue.pop_front() {
        let (i, j) = g.ij(k);
        let mut visit = |n: usize, delta: f64| {
            if beta[n].is_nan() {
                beta[n] = beta[k] + delta;
                queue.push_back(n);
            }
        };
        if i + 1 < g.nu {
            visit(g.idx(i + 1, j), eu[k]);
        }
        if i > 0 {
            visit(g.idx(i - 1, j), -eu[g.idx(i - 1, j)]);
        }
        if j + 1 < g.nv {
            visit(g.idx(i, j + 1), ev[k]);
        }
        if j > 0 {
            visit(g.idx(i, j - 1), -ev[g.idx(i, j - 1)]);
        }
    }
    let mut max_cell = 0.0f64;
    for i in 0..g.nu - 1 {
        for j in 0..g.nv - 1 {
            let hol = eu[g.idx(i, j)] + ev[g.idx(i + 1, j)] - eu[g.idx(i, j + 1)] - ev[g.idx(i, j)];
            let per = (p.position(i + 1, j) - p.position(i, j)).norm()
                + (p.position(i + 1, j + 1) - p.position(i + 1, j)).norm()
                + (p.position(i + 1, j + 1) - p.position(i, j + 1)).norm()
                + (p.position(i, j + 1) - p.position(i, j)).norm();
            max_cell = max_cell.max(hol.abs() / per);
        }
    }
    let scale = p.positions.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let periodic_u = (0..g.nv).all(|j| (p.position(0, j) - p.position(g.nu - 1, j)).norm() <= 1e-9 * scale);
    let periodic_v = (0..g.nu).all(|i| (p.position(i, 0) - p.position(i, g.nv - 1)).norm() <= 1e-9 * scale);
    let mut seam_cycles = Vec::new();
    if periodic_u {
        let j = g.nv / 2;
        let line = u_line(j);
        seam_cycles.push(Holonomy {
            label: format!("u-cycle at j={j}"),
            value: (0..g.nu - 1).map(|i| eu[g.idx(i, j)]).sum(),
            loop_length: line.windows(2).map(|w| (w[1] - w[0]).norm()).sum(),
        });
    }
    if periodic_v {
        let i = g.nu / 2;
        let line = v_line(i);
        seam_cycles.push(Holonomy {
            label: format!("v-cycle at i={i}"),
            value: (0..g.nv - 1).map(|j| ev[g.idx(i, j)]).sum(),
            loop_length: line.windows(2).map(|w| (w[1] - w[0]).norm()).sum(),
        });
    }
    let (top, right) = (g.nv - 1, g.nu - 1);
    let boundary_value = (0..right).map(|i| eu[g.idx(i, 0)] - eu[g.idx(i, top)]).sum::<f64>()
        + (0..top).map(|j| ev[g.idx(right, j)] - ev[g.idx(0, j)]).sum::<f64>();
    let side = |a: Vec<AmbientVector>| a.windows(2).map(|w| (w[1] - w[0]).norm()).sum::<f64>();
    let boundary = Holonomy {
        label: "parameter boundary".into(),
        value: boundary_value,
        loop_length: side(u_line(0)) + side(u_line(top)) + side(v_line(0)) + side(v_line(right)),
    };
    let exact = max_cell <= tolerance && seam_cycles.iter().all(|h| h.value.abs() <= tolerance * h.loop_length);
    Ok(LiouvillePrimitive {
        beta: ScalarField::new("beta", beta)?,
        max_cell_holonomy: max_cell,
        boundary,
        seam_cycles,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(alpha: f64, half: f64, h: f64) -> SurfacePatch {
        let g = Grid::covering((-half, half), (-half, half), h, h).unwrap();
        SurfacePatch::from_fn(g, "plane", |u, v| {
            AmbientVector::new(u, 0.0, v * alpha.cos(), v * alpha.sin())
        })
        .unwrap()
    }

    /// circle(R) x R, parametrised by angle (u) and x2 (v); closes in u.
    fn circle_product(r: f64, n: usize, h: f64) -> SurfacePatch {
        let g = Grid::new(n + 1, 21, 0.0, -1.0, 2.0 * PI / n as f64, h).unwrap();
        SurfacePatch::from_fn(g, "circle_product", |u, v| {
            AmbientVector::new(r * u.cos(), r * u.sin(), v, 0.0)
        })
        .unwrap()
    }

    #[test]
    fn grid_rejects_tiny() {
        assert!(Grid::new(3, 10, 0.0, 0.0, 0.1, 0.1).is_err());
        assert!(Grid::new(10, 10, 0.0, 0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn plane_is_flat_with_constant_angle() {
        let p = plane(0.7, 1.0, 0.05);
        let c = p.calculus().unwrap();
        for h in c.mean_curvature() {
            assert!(h.norm() < 1e-10);
        }
        let theta = c.lagrangian_angle().unwrap();
        assert!(theta.values.iter().all(|t| (t - 0.7).abs() < 1e-12));
        assert!(c.lagrangian_residual().iter().all(|r| r.abs() < 1e-14));
    }

    #[test]
    fn coordinate_function_on_plane() {
        let p = plane(0.7, 1.0, 0.05);
        let c = p.calculus().unwrap();
        let f = ScalarField::from_positions("x1", &p, |x| x.x1).unwrap();
        for g in c.gradient(&f).unwrap() {
            assert!((g - AmbientVector::e1()).norm() < 1e-12);
        }
        assert!(c.laplacian(&f).unwrap().values.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn singular_metric_is_reported() {
        let g = Grid::covering((0.0, 1.0), (0.0, 1.0), 0.1, 0.1).unwrap();
        let p = SurfacePatch::from_fn(g, "degenerate", |u, _| AmbientVector::new(u, 0.0, 0.0, 0.0)).unwrap();
        assert!(matches!(p.calculus(), Err(Error::SingularMetric { .. })));
    }

    #[test]
    fn unwrap_failure_is_reported() {
        // angle 2 * pi * u over a coarse grid jumps by more than pi/2 per cell
        let g = Grid::covering((0.0, 1.0), (0.0, 1.0), 0.25, 0.25).unwrap();
        let q = SurfacePatch::from_fn(g, "twist", |u, v| {
            let a = 3.0 * PI * v;
            AmbientVector::new(v, 0.0, u * a.cos(), u * a.sin())
        })
        .unwrap();
        assert!(matches!(
            q.calculus().unwrap().lagrangian_angle(),
            Err(Error::AngleUnwrap { .. })
        ));
    }

    #[test]
    fn circle_product_curvature_and_holonomy() {
        let r = 1.5;
        let p = circle_product(r, 400, 0.1);
        let c = p.calculus().unwrap();
        for (k, h) in c.mean_curvature().iter().enumerate() {
            if !p.grid.in_boundary_band(k) {
                assert!((h.norm() - 1.0 / r).abs() < 1e-4);
            }
        }
        let lp = liouville_primitive(&p, 1e-6).unwrap();
        assert_eq!(lp.seam_cycles.len(), 1);
        let hol = lp.seam_cycles[0].value;
        assert!((hol - 2.0 * PI * r * r).abs() < 0.005 * 2.0 * PI * r * r, "{hol}");
        assert!(!lp.exact);
    }

    #[test]
    fn plane_through_origin_has_zero_primitive() {
        let p = plane(0.3, 2.0, 0.1);
        let lp = liouville_primitive(&p, 1e-10).unwrap();
        assert!(lp.beta.values.iter().all(|b| b.abs() < 1e-10));
        assert!(lp.exact);
        assert!(lp.boundary.value.abs() < 1e-12);
    }

    #[test]
    fn boundary_holonomy_of_symplectic_plane_is_twice_area() {
        // d(lambda) = 2 omega, and omega is the area form on the (x1, y1) plane
        let g = Grid::new(11, 21, 0.0, 0.0, 0.1, 0.1).unwrap();
        let p = SurfacePatch::from_fn(g, "symplectic", |u, v| AmbientVector::new(u + 0.5, v - 1.0, 0.0, 0.0)).unwrap();
        let lp = liouville_primitive(&p, 1e-6).unwrap();
        assert!((lp.boundary.value - 4.0).abs() < 1e-12, "{}", lp.boundary.value);
        assert!((lp.boundary.loop_length - 6.0).abs() < 1e-12);
        assert!(!lp.exact);
    }

    #[test]
    fn flux_on_plane_vanishes() {
        let p = plane(1.1, 1.0, 0.05);
        let c = p.calculus().unwrap();
        let lp = BoundaryLoop::rectangle(&c, 3, 30, 5, 25, true).unwrap();
        assert!(flux_integral(&lp, AmbientVector::e1()).unwrap().abs() < 1e-12);
        let open = BoundaryLoop { closed: false, ..lp };
        assert!(matches!(
            flux_integral(&open, AmbientVector::e1()),
            Err(Error::Topology(_))
        ));
    }

    #[test]
    fn level_set_of_plane_angle_is_empty() {
        let p = plane(0.4, 1.0, 0.1);
        let c = p.calculus().unwrap();
        let theta = c.lagrangian_angle().unwrap();
        let ls = level_set(&c, &theta, 0.9).unwrap();
        assert!(ls.curves.is_empty());
        assert_eq!(ls.total_length, 0.0);
    }

    #[test]
    fn level_set_tie_break_and_length() {
        let p = plane(0.0, 1.0, 0.1);
        let c = p.calculus().unwrap();
        let f = ScalarField::from_positions("x1", &p, |x| x.x1).unwrap();
        // 0.0 is a node value: perturbed, still one straight line of length 2
        let ls = level_set(&c, &f, 0.0).unwrap();
        assert!(ls.level > 0.0 && ls.level < 1e-11);
        assert_eq!(ls.curves.len(), 1);
        assert!((ls.total_length - 2.0).abs() < 1e-9);
        assert!(!ls.curves[0].closed);
    }

    #[test]
    fn closed_level_curve() {
        let p = plane(0.0, 1.0, 0.02);
        let c = p.calculus().unwrap();
        let f = ScalarField::from_positions("r2", &p, |x| x.norm_sq()).unwrap();
        let ls = level_set(&c, &f, 0.25).unwrap();
        assert_eq!(ls.curves.len(), 1);
        assert!(ls.curves[0].closed);
        assert!((ls.total_length - PI).abs() < 1e-3);
        assert!((ls.max_extent - 0.5).abs() < 1e-3);
        // conormal = grad f / |grad f| is the outward radial direction
        let flux = flux_integral(&ls.curves[0], AmbientVector::e1()).unwrap();
        assert!(flux.abs() < 1e-6);
    }

    #[test]
    fn decomposition_of_plane_and_double_cover() {
        let alpha = 0.6;
        let p = plane(alpha, 4.0, 0.1);
        let rep = graphical_decomposition(std::slice::from_ref(&p), &[alpha], 1.0, 0.5).unwrap();
        assert_eq!(rep.components.len(), 1);
        assert_eq!(rep.components[0].degree, 1);
        assert!(rep.components[0].slope_bound < 1e-12);

        // two separate copies: one component each
        let rep = graphical_decomposition(&[p.clone(), p.clone()], &[alpha], 1.0, 0.5).unwrap();
        assert_eq!(rep.components.len(), 2);
        assert!(rep.components.iter().all(|c| c.degree == 1));

        // the plane traversed twice around the origin as one immersed annulus
        let plane_frame = TwoFrame::lagrangian_plane(alpha);
        let g = Grid::covering((1.5, 4.0), (0.0, 4.0 * PI), 0.05, 0.02).unwrap();
        let annulus = SurfacePatch::from_fn(g, "double_cover", |r, t| {
            plane_frame.a * (r * t.cos()) + plane_frame.b * (r * t.sin())
        })
        .unwrap();
        let rep = graphical_decomposition(&[annulus], &[alpha], 1.0, 0.5).unwrap();
        assert_eq!(rep.components.len(), 1);
        assert_eq!(rep.components[0].degree, 2);
    }

    #[test]
    fn graph_eigenvalues_of_plane_over_itself() {
        let p = plane(0.9, 1.0, 0.1);
        for (a, b) in second_fundamental_eigen(&p, 0.9).unwrap() {
            assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
        }
        // P_0 projects degenerately onto P_{pi/2}
        let q = plane(0.0, 1.0, 0.1);
        assert!(matches!(
            second_fundamental_eigen(&q, PI / 2.0),
            Err(Error::NotGraphical { .. })
        ));
    }
}
