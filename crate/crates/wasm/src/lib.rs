//! WebAssembly bindings for the static demo page in `www/`.
//!
//! The plain functions (`eigenfield`, `lambda_curve`, `limit_targets`) hold
//! the logic and are tested natively; the `#[wasm_bindgen]` wrappers only
//! convert errors.

use plap_core::experiments::{solve_row, Resolution, SweepOptions};
use plap_core::geometry::perimeter_volume_ratio;
use plap_core::{AnnulusSpec, SolverConfig};
use wasm_bindgen::prelude::*;

/// Largest mesh the page may request; keeps a solve under a few seconds.
pub const MAX_VERTICES: usize = 40_000;

/// Converged eigenpair flattened for drawing.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Eigenfield {
    lambda: f64,
    iterations: usize,
    converged: bool,
    dlambda_inner: f64,
    dlambda_outer: f64,
    vertices: Vec<f64>,
    triangles: Vec<u32>,
    values: Vec<f64>,
}

#[wasm_bindgen]
impl Eigenfield {
    #[wasm_bindgen(getter)]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }
    #[wasm_bindgen(getter)]
    pub fn converged(&self) -> bool {
        self.converged
    }
    /// Inner-boundary derivative estimate (NaN when not converged).
    #[wasm_bindgen(getter, js_name = dlambdaInner)]
    pub fn dlambda_inner(&self) -> f64 {
        self.dlambda_inner
    }
    #[wasm_bindgen(getter, js_name = dlambdaOuter)]
    pub fn dlambda_outer(&self) -> f64 {
        self.dlambda_outer
    }
    /// Interleaved `x, y` coordinates.
    #[wasm_bindgen(getter)]
    pub fn vertices(&self) -> Vec<f64> {
        self.vertices.clone()
    }
    /// Vertex index triples.
    #[wasm_bindgen(getter)]
    pub fn triangles(&self) -> Vec<u32> {
        self.triangles.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
}

fn resolution(n_radial: usize, n_angular: usize) -> Result<Resolution, String> {
    let res = Resolution::new(n_radial, n_angular);
    if (n_radial + 1) * n_angular > MAX_VERTICES {
        return Err(format!("mesh {res} exceeds {MAX_VERTICES} vertices"));
    }
    Ok(res)
}

/// Solves on `A(1, r0, s)` and returns the field with both boundary derivatives.
pub fn eigenfield(r0: f64, s: f64, p: f64, n_radial: usize, n_angular: usize) -> Result<Eigenfield, String> {
    let spec = AnnulusSpec::planar(1.0, r0, s).map_err(|e| e.to_string())?;
    spec.check_contained().map_err(|e| e.to_string())?;
    let opts = SweepOptions {
        boundary_formulas: true,
        ..SweepOptions::plain(SolverConfig::new(p))
    };
    let (row, mesh, res) =
        solve_row(&spec, resolution(n_radial, n_angular)?, &opts).map_err(|e| e.to_string())?;
    Ok(Eigenfield {
        lambda: row.lambda,
        iterations: row.iterations,
        converged: row.converged,
        dlambda_inner: row.dlambda_inner.unwrap_or(f64::NAN),
        dlambda_outer: row.dlambda_outer.unwrap_or(f64::NAN),
        vertices: mesh.vertices.iter().flatten().copied().collect(),
        triangles: mesh.triangles.iter().flatten().map(|&v| v as u32).collect(),
        values: res.field.values,
    })
}

/// `lambda` at `count` evenly spaced offsets in `[0, s_max]`, as interleaved
/// `s, lambda` pairs. Stops with an error at the first non-converged solve.
pub fn lambda_curve(
    r0: f64,
    p: f64,
    s_max: f64,
    count: usize,
    n_radial: usize,
    n_angular: usize,
) -> Result<Vec<f64>, String> {
    if count < 2 {
        return Err("need at least two offsets".into());
    }
    let base = AnnulusSpec::planar(1.0, r0, 0.0).map_err(|e| e.to_string())?;
    let res = resolution(n_radial, n_angular)?;
    let opts = SweepOptions::plain(SolverConfig::new(p));
    let mut out = Vec::with_capacity(2 * count);
    for k in 0..count {
        let s = s_max * k as f64 / (count - 1) as f64;
        let spec = base.with_offset(s);
        spec.check_contained().map_err(|e| e.to_string())?;
        let (row, _, _) = solve_row(&spec, res, &opts).map_err(|e| e.to_string())?;
        if !row.converged {
            return Err(format!("solver did not converge at s = {s}"));
        }
        out.extend([s, row.lambda]);
    }
    Ok(out)
}

/// Closed-form limits at offset `s`: `[2 / (1 - r0 + s), |dA| / |A|]`.
pub fn limit_targets(r0: f64, s: f64) -> Result<Vec<f64>, String> {
    let spec = AnnulusSpec::planar(1.0, r0, s).map_err(|e| e.to_string())?;
    spec.check_contained().map_err(|e| e.to_string())?;
    Ok(vec![2.0 / (1.0 - r0 + s), perimeter_volume_ratio(&spec)])
}

#[wasm_bindgen(js_name = solveEigenfield)]
pub fn solve_eigenfield_js(
    r0: f64,
    s: f64,
    p: f64,
    n_radial: usize,
    n_angular: usize,
) -> Result<Eigenfield, JsError> {
    eigenfield(r0, s, p, n_radial, n_angular).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = lambdaCurve)]
pub fn lambda_curve_js(
    r0: f64,
    p: f64,
    s_max: f64,
    count: usize,
    n_radial: usize,
    n_angular: usize,
) -> Result<Vec<f64>, JsError> {
    lambda_curve(r0, p, s_max, count, n_radial, n_angular).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = limitTargets)]
pub fn limit_targets_js(r0: f64, s: f64) -> Result<Vec<f64>, JsError> {
    limit_targets(r0, s).map_err(|e| JsError::new(&e))
}
