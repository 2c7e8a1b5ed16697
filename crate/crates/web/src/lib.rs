//! Browser bindings: expander curves by shooting, curve shortening flow of a
//! circle or the looped preset, and the Laplace-type integral.

use lmcf::curves::{self, CurveFlowState, FlowOptions, PlanarCurve};
use lmcf::diagnostics;
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

fn js(e: lmcf::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn flatten(c: &PlanarCurve) -> Vec<f64> {
    c.points().iter().flat_map(|p| [p.re, p.im]).collect()
}

/// Expander curve shot from the axis with slope parameter `shoot`.
#[wasm_bindgen]
pub struct Expander {
    inner: curves::ExpanderCurve,
}

#[wasm_bindgen]
impl Expander {
    #[wasm_bindgen(constructor)]
    pub fn new(shoot: f64, span: f64, h: f64) -> Result<Expander, JsError> {
        Ok(Self {
            inner: curves::expander_curve(shoot, span, h).map_err(js)?,
        })
    }

    /// Interleaved `x, y` samples.
    pub fn points(&self) -> Vec<f64> {
        flatten(&self.inner.curve)
    }

    /// Tangent angles at the two ends.
    pub fn asymptotic_angles(&self) -> Vec<f64> {
        let (a, b) = self.inner.asymptotic_angles();
        vec![a, b]
    }

    pub fn residual(&self) -> Result<f64, JsError> {
        self.inner.residual().map_err(js)
    }
}

/// A curve moving by curve shortening flow.
#[wasm_bindgen]
pub struct CurveFlow {
    state: CurveFlowState,
    opts: FlowOptions,
    halted: bool,
}

#[wasm_bindgen]
impl CurveFlow {
    pub fn circle(radius: f64, n: usize) -> Result<CurveFlow, JsError> {
        Self::start(PlanarCurve::circle(Complex64::new(0.0, 0.0), radius, n))
    }

    pub fn looped(scale: f64, n: usize) -> Result<CurveFlow, JsError> {
        Self::start(curves::looped_curve(scale, n))
    }

    fn start(c: lmcf::Result<PlanarCurve>) -> Result<CurveFlow, JsError> {
        Ok(Self {
            state: CurveFlowState::new(c.map_err(js)?).map_err(js)?,
            opts: FlowOptions::default(),
            halted: false,
        })
    }

    /// Advances by `dt` (or until the flow halts); returns whether it halted.
    pub fn advance(&mut self, dt: f64) -> Result<bool, JsError> {
        if self.halted || dt.is_nan() || dt <= 0.0 {
            return Ok(self.halted);
        }
        let t_end = self.state.time + dt;
        let run = curves::flow_until(self.state.clone(), t_end, &self.opts, |_| {}).map_err(js)?;
        self.state = run.state;
        self.halted = run.halted;
        Ok(self.halted)
    }

    pub fn points(&self) -> Vec<f64> {
        flatten(&self.state.curve)
    }

    pub fn closed(&self) -> bool {
        self.state.curve.is_closed()
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    /// Enclosed or loop area; `NaN` when there is none.
    pub fn area(&self) -> f64 {
        self.state.area.unwrap_or(f64::NAN)
    }

    pub fn max_curvature(&self) -> f64 {
        self.state.max_curvature
    }
}

/// `int_0^{2 pi} exp(-r - r cos t) dt`.
#[wasm_bindgen]
pub fn laplace_integral(r: f64) -> Result<f64, JsError> {
    diagnostics::laplace_integral(r).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_shrinks_to_a_point() {
        let mut f = CurveFlow::circle(1.0, 60).unwrap();
        let a0 = f.area();
        assert!(!f.advance(0.1).unwrap());
        assert!(f.area() < a0);
        while !f.advance(0.05).unwrap() {}
        assert!((f.time() - 0.5).abs() < 0.01);
        assert_eq!(f.points().len() % 2, 0);
    }

    #[test]
    fn expander_ends_are_straight() {
        let e = Expander::new(1.0, 20.0, 0.02).unwrap();
        let a = e.asymptotic_angles();
        assert_eq!(a.len(), 2);
        assert!(e.residual().unwrap() < 1e-3);
    }

    #[test]
    fn laplace_at_zero() {
        assert!((laplace_integral(0.0).unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
