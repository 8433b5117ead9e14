//! WebAssembly bindings for the browser demo. Every export returns a JSON
//! string; the page in `www/` draws it on a canvas.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use dstar::experiment::Case;
use dstar::forms::builtin;
use dstar::lab::{consistency_error, crisscross_closed_form_wh, crisscross_exact_wh, discrete_codifferential};
use dstar::mesh::{self, RefinementRule};
use dstar::whitney::{de_rham_map, WhitneySpace};
use dstar::{SimplicialComplex, SolveOptions};

/// Keeps a browser tab responsive.
const MAX_CELLS: usize = 70_000;

#[derive(Serialize)]
struct Field {
    h: f64,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    /// Computed `d*_h π_h u` at each vertex.
    computed: Vec<f64>,
    /// Value of the stated closed form at each vertex.
    stated: Vec<f64>,
    /// Corrected closed form.
    exact: Vec<f64>,
    /// `d*u = 2x`.
    smooth: Vec<f64>,
    error: f64,
}

#[derive(Serialize)]
struct CurveRow {
    level: usize,
    h: f64,
    cells: usize,
    error: f64,
    order: Option<f64>,
    a_h: f64,
    dist: f64,
}

#[derive(Serialize)]
struct MeshView {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    edges: Vec<[usize; 2]>,
    cells: usize,
    h: f64,
    shape_constant: f64,
    /// Edge directions for which the mesh is uniform, if any.
    uniform_directions: Option<Vec<Vec<f64>>>,
}

fn opts() -> SolveOptions {
    SolveOptions::with_tol(1e-10)
}

fn guard(cells: usize) -> Result<(), String> {
    if cells > MAX_CELLS {
        Err(format!("{cells} cells exceeds the demo limit of {MAX_CELLS}"))
    } else {
        Ok(())
    }
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn crisscross_field_json(m: usize) -> Result<String, String> {
    guard(4usize.saturating_pow(m as u32 + 1))?;
    let c = mesh::crisscross(m).map_err(|e| e.to_string())?;
    let u = builtin("square1form").map_err(|e| e.to_string())?;
    let s1 = WhitneySpace::new(&c, 1).map_err(|e| e.to_string())?;
    let s0 = WhitneySpace::new(&c, 0).map_err(|e| e.to_string())?;
    let cu = de_rham_map(&c, 1, &u).map_err(|e| e.to_string())?;
    let (w, _) = discrete_codifferential(&s1, &s0, &cu, opts()).map_err(|e| e.to_string())?;
    let g = u.codifferential().expect("builtin carries d*u");
    let error = s0.l2_error(&w, g).map_err(|e| e.to_string())?;
    let h = c.mesh_stats().h_max;
    let vertices: Vec<[f64; 2]> = (0..c.n_vertices()).map(|i| [c.vertex(i)[0], c.vertex(i)[1]]).collect();
    let at = |f: fn(f64, f64) -> dstar::Result<f64>| -> Vec<f64> {
        vertices.iter().map(|v| f(h, v[0]).unwrap_or(f64::NAN)).collect()
    };
    let field = Field {
        h,
        triangles: (0..c.n_cells()).map(|t| {
            let s = c.cell(t);
            [s[0], s[1], s[2]]
        }).collect(),
        computed: w.coeffs.clone(),
        stated: at(crisscross_closed_form_wh),
        exact: at(crisscross_exact_wh),
        smooth: vertices.iter().map(|v| 2.0 * v[0]).collect(),
        vertices,
        error,
    };
    json(&field)
}

pub fn consistency_curve_json(case: &str, max_level: usize) -> Result<String, String> {
    let case: Case = case.parse().map_err(|e: dstar::Error| e.to_string())?;
    let form = case.form().ok_or_else(|| format!("{} has no consistency column", case.name()))?;
    let u = builtin(form).map_err(|e| e.to_string())?;
    let mut rows: Vec<CurveRow> = Vec::new();
    for level in case.first_level()..=max_level {
        guard(case.cells_at(level))?;
        let c = case.mesh(level).map_err(|e| e.to_string())?;
        let r = consistency_error(&c, &u, opts()).map_err(|e| e.to_string())?;
        let order = rows.last().map(|p| (p.error / r.error).log2());
        rows.push(CurveRow {
            level,
            h: r.h,
            cells: r.cell_count,
            error: r.error,
            order,
            a_h: r.a_h,
            dist: r.dist,
        });
    }
    json(&rows)
}

fn view(c: &SimplicialComplex) -> MeshView {
    let stats = c.mesh_stats();
    MeshView {
        dim: c.dim(),
        vertices: (0..c.n_vertices()).map(|i| c.vertex(i).to_vec()).collect(),
        edges: c.simplices(1).map(|e| [e[0], e[1]]).collect(),
        cells: c.n_cells(),
        h: stats.h_max,
        shape_constant: stats.shape_constant,
        uniform_directions: mesh::find_uniform_directions(c).map(|r| r.directions),
    }
}

pub fn mesh_view_json(generator: &str, level: usize, rule: &str) -> Result<String, String> {
    let rule: Option<RefinementRule> = if rule.is_empty() {
        None
    } else {
        Some(rule.parse().map_err(|e: dstar::Error| e.to_string())?)
    };
    let cells = match generator {
        "crisscross" => 4usize.saturating_pow(level as u32),
        "pwuniform2d" => 20 * 4usize.saturating_pow(level.saturating_sub(1) as u32),
        _ => 6 * 8usize.saturating_pow(level as u32),
    };
    // uniformity search is quadratic in edges; keep the view small
    guard(cells * 8)?;
    let c = mesh::generate(generator, level, rule).map_err(|e| e.to_string())?;
    json(&view(&c))
}

/// Vertex values of the Whitney codifferential of `(1 − x²)dx` on the
/// crisscross mesh with `4^m` triangles.
#[wasm_bindgen]
pub fn crisscross_field(m: usize) -> Result<String, JsValue> {
    crisscross_field_json(m).map_err(|e| JsValue::from_str(&e))
}

/// Consistency error per level for an experiment case.
#[wasm_bindgen]
pub fn consistency_curve(case: &str, max_level: usize) -> Result<String, JsValue> {
    consistency_curve_json(case, max_level).map_err(|e| JsValue::from_str(&e))
}

/// Vertices, edges and uniformity verdict of a generated mesh. `rule` may be
/// empty for the generator default.
#[wasm_bindgen]
pub fn mesh_view(generator: &str, level: usize, rule: &str) -> Result<String, JsValue> {
    mesh_view_json(generator, level, rule).map_err(|e| JsValue::from_str(&e))
}
