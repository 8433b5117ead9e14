//! Lowest-order Whitney forms: basis evaluation, mass matrices, the de Rham
//! map and L² norms.
//!
//! Pointwise k-form values are component vectors over increasing index
//! tuples `dx^I` (lexicographic order), so the pointwise Euclidean inner
//! product is the plain dot product.

use std::sync::OnceLock;

use crate::complex::{Cochain, SimplicialComplex};
use crate::error::{Error, Result};
use crate::forms::AnalyticForm;
use crate::geometry::{binomial, combinations, det, dot, inverse, signed_volume, wedge_components};
use crate::par::map_indexed;
use crate::quadrature::{rule, QuadratureRule, DE_RHAM_DEGREE, INNER_PRODUCT_DEGREE};
use crate::sparse::CsrMatrix;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Constant gradients of the barycentric coordinates of one cell.
#[derive(Clone, Debug)]
pub struct BarycentricFrame {
    pub origin: Vec<f64>,
    pub grads: Vec<Vec<f64>>,
    pub volume: f64,
}

impl BarycentricFrame {
    /// `points` are the cell vertices in sorted (orientation) order.
    pub fn new(points: &[&[f64]]) -> Result<Self> {
        let n = points.len() - 1;
        let b: Vec<Vec<f64>> = (0..n)
            .map(|r| (0..n).map(|c| points[c + 1][r] - points[0][r]).collect())
            .collect();
        let inv = inverse(&b).ok_or(Error::DegenerateCell { cell: 0 })?;
        let mut grads = Vec::with_capacity(n + 1);
        let mut g0 = vec![0.0; n];
        for row in &inv {
            for (g, v) in g0.iter_mut().zip(row) {
                *g -= v;
            }
        }
        grads.push(g0);
        grads.extend(inv);
        Ok(Self {
            origin: points[0].to_vec(),
            grads,
            volume: signed_volume(points).abs(),
        })
    }

    pub fn barycentric(&self, x: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = x.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        let mut lam = Vec::with_capacity(self.grads.len());
        let rest: Vec<f64> = self.grads[1..].iter().map(|g| dot(g, &d)).collect();
        lam.push(1.0 - rest.iter().sum::<f64>());
        lam.extend(rest);
        lam
    }

    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.grads
            .iter()
            .map(|a| self.grads.iter().map(|b| dot(a, b)).collect())
            .collect()
    }
}

/// Whitney basis of degree `k` on one cell, stored as affine coefficient
/// vectors: the form for local face `f` is `Σ_i λ_{f_i} terms[f][i]`.
#[derive(Clone, Debug)]
struct LocalBasis {
    n_comp: usize,
    faces: Vec<Vec<usize>>,
    terms: Vec<Vec<Vec<f64>>>,
}

impl LocalBasis {
    fn new(frame: &BarycentricFrame, n: usize, k: usize) -> Self {
        let faces = combinations(n + 1, k + 1);
        let kf = factorial(k);
        let terms = faces
            .iter()
            .map(|f| {
                (0..=k)
                    .map(|i| {
                        let gs: Vec<&[f64]> = f
                            .iter()
                            .enumerate()
                            .filter(|&(j, _)| j != i)
                            .map(|(_, &a)| frame.grads[a].as_slice())
                            .collect();
                        let sign = if i % 2 == 0 { kf } else { -kf };
                        wedge_components(&gs, n).into_iter().map(|v| sign * v).collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            n_comp: binomial(n, k),
            faces,
            terms,
        }
    }

    /// Vertex coefficients `A_a` of the affine form `Σ_a λ_a A_a` assembled
    /// from local face coefficients.
    fn affine_form(&self, n: usize, local_coeffs: &[f64]) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n_comp]; n + 1];
        for (fi, f) in self.faces.iter().enumerate() {
            let c = local_coeffs[fi];
            if c == 0.0 {
                continue;
            }
            for (i, &vtx) in f.iter().enumerate() {
                for (dst, t) in a[vtx].iter_mut().zip(&self.terms[fi][i]) {
                    *dst += c * t;
                }
            }
        }
        a
    }

    fn eval_face(&self, face: usize, lam: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_comp];
        for (i, &vtx) in self.faces[face].iter().enumerate() {
            for (o, t) in out.iter_mut().zip(&self.terms[face][i]) {
                *o += lam[vtx] * t;
            }
        }
        out
    }
}

fn eval_affine(a: &[Vec<f64>], lam: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (av, &l) in a.iter().zip(lam) {
        for (o, v) in out.iter_mut().zip(av) {
            *o += l * v;
        }
    }
}

/// Evaluates the Whitney basis form of the k-face `face` (global vertex
/// indices) of `cell` at `point`.
pub fn eval_whitney_basis(
    complex: &SimplicialComplex,
    cell: usize,
    k: usize,
    face: &[usize],
    point: &[f64],
) -> Result<Vec<f64>> {
    let n = complex.dim();
    if k > n || face.len() != k + 1 {
        return Err(Error::DegreeOutOfRange { k, n });
    }
    let verts = complex.cell_sorted(cell);
    let mut sorted = face.to_vec();
    sorted.sort_unstable();
    let positions: Option<Vec<usize>> = sorted
        .iter()
        .map(|v| verts.iter().position(|w| w == v))
        .collect();
    let positions = positions.ok_or_else(|| Error::NotAFace {
        cell,
        face: face.to_vec(),
    })?;
    let frame = BarycentricFrame::new(&complex.cell_points(cell))?;
    let basis = LocalBasis::new(&frame, n, k);
    let fi = basis
        .faces
        .iter()
        .position(|f| *f == positions)
        .expect("positions form a local face");
    Ok(basis.eval_face(fi, &frame.barycentric(point)))
}

/// ∫_T λ_a λ_b for the reference rule, scaled by the cell volume later.
fn barycentric_moments(n: usize, quad: &QuadratureRule) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n + 1]; n + 1];
    for (p, w) in quad.points.iter().zip(&quad.weights) {
        for a in 0..=n {
            for b in 0..=n {
                m[a][b] += w * p[a] * p[b];
            }
        }
    }
    m
}

/// The space Λ^k_h of Whitney k-forms on a complex.
#[derive(Debug)]
pub struct WhitneySpace<'a> {
    complex: &'a SimplicialComplex,
    degree: usize,
    mass: OnceLock<CsrMatrix>,
}

impl<'a> WhitneySpace<'a> {
    pub fn new(complex: &'a SimplicialComplex, degree: usize) -> Result<Self> {
        if degree > complex.dim() {
            return Err(Error::DegreeOutOfRange {
                k: degree,
                n: complex.dim(),
            });
        }
        Ok(Self {
            complex,
            degree,
            mass: OnceLock::new(),
        })
    }

    pub fn complex(&self) -> &'a SimplicialComplex {
        self.complex
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.complex.n_simplices(self.degree)
    }

    /// `(M_k)_{στ} = <W a_σ, W a_τ>`, assembled once and cached.
    pub fn mass_matrix(&self) -> &CsrMatrix {
        self.mass.get_or_init(|| self.assemble_mass())
    }

    fn assemble_mass(&self) -> CsrMatrix {
        let c = self.complex;
        let n = c.dim();
        let k = self.degree;
        let quad = rule(n, INNER_PRODUCT_DEGREE).expect("supported rule");
        let moments = barycentric_moments(n, &quad);
        let faces = combinations(n + 1, k + 1);
        let kf2 = factorial(k) * factorial(k);
        let locals: Vec<Vec<f64>> = map_indexed(c.n_cells(), |cell| {
            let frame = BarycentricFrame::new(&c.cell_points(cell)).expect("valid cell");
            let gram = frame.gram();
            let m = faces.len();
            let mut local = vec![0.0; m * m];
            for (a, fa) in faces.iter().enumerate() {
                for (b, fb) in faces.iter().enumerate().skip(a) {
                    let mut v = 0.0;
                    for (i, &vi) in fa.iter().enumerate() {
                        let ra: Vec<usize> = fa.iter().copied().filter(|&x| x != vi).collect();
                        for (j, &vj) in fb.iter().enumerate() {
                            let rb: Vec<usize> = fb.iter().copied().filter(|&x| x != vj).collect();
                            let g: Vec<Vec<f64>> = ra
                                .iter()
                                .map(|&p| rb.iter().map(|&q| gram[p][q]).collect())
                                .collect();
                            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                            v += sign * moments[vi][vj] * det(&g);
                        }
                    }
                    v *= kf2 * frame.volume;
                    local[a * m + b] = v;
                    local[b * m + a] = v;
                }
            }
            local
        });
        let m = faces.len();
        let mut triplets = Vec::with_capacity(locals.len() * m * m);
        for (cell, local) in locals.iter().enumerate() {
            let glob = c.cell_faces(k, cell);
            for a in 0..m {
                for b in 0..m {
                    triplets.push((glob[a], glob[b], local[a * m + b]));
                }
            }
        }
        let n_dof = self.dim();
        CsrMatrix::from_triplets(n_dof, n_dof, &triplets).expect("indices in range")
    }

    fn check_form(&self, g: &AnalyticForm) -> Result<()> {
        if g.dim() != self.complex.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.complex.dim(),
                found: g.dim(),
            });
        }
        if g.degree() != self.degree {
            return Err(Error::DimensionMismatch {
                expected: self.degree,
                found: g.degree(),
            });
        }
        Ok(())
    }

    fn check_cochain(&self, c: &Cochain) -> Result<()> {
        if c.degree != self.degree {
            return Err(Error::DimensionMismatch {
                expected: self.degree,
                found: c.degree,
            });
        }
        if c.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "cochain of length {} on a space of dimension {}",
                c.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Value of `W_h c` at `point` inside `cell`.
    pub fn eval(&self, c: &Cochain, cell: usize, point: &[f64]) -> Result<Vec<f64>> {
        self.check_cochain(c)?;
        let n = self.complex.dim();
        let frame = BarycentricFrame::new(&self.complex.cell_points(cell))?;
        let basis = LocalBasis::new(&frame, n, self.degree);
        let local: Vec<f64> = self
            .complex
            .cell_faces(self.degree, cell)
            .iter()
            .map(|&g| c.coeffs[g])
            .collect();
        let a = basis.affine_form(n, &local);
        let mut out = vec![0.0; basis.n_comp];
        eval_affine(&a, &frame.barycentric(point), &mut out);
        Ok(out)
    }

    /// `d W_h c` on one cell: a constant (k+1)-form.
    pub fn derivative_on_cell(&self, c: &Cochain, cell: usize) -> Result<Vec<f64>> {
        self.check_cochain(c)?;
        let n = self.complex.dim();
        let k = self.degree;
        if k >= n {
            return Ok(vec![]);
        }
        let frame = BarycentricFrame::new(&self.complex.cell_points(cell))?;
        let kf = factorial(k + 1);
        let mut out = vec![0.0; binomial(n, k + 1)];
        for (f, &g) in combinations(n + 1, k + 1)
            .iter()
            .zip(self.complex.cell_faces(k, cell))
        {
            let gs: Vec<&[f64]> = f.iter().map(|&a| frame.grads[a].as_slice()).collect();
            for (o, v) in out.iter_mut().zip(wedge_components(&gs, n)) {
                *o += kf * c.coeffs[g] * v;
            }
        }
        Ok(out)
    }

    /// `s_τ = <g, W a_τ>` for every k-simplex τ.
    pub fn load_vector(&self, g: &AnalyticForm) -> Result<Vec<f64>> {
        self.check_form(g)?;
        let c = self.complex;
        let n = c.dim();
        let k = self.degree;
        let quad = rule(n, INNER_PRODUCT_DEGREE)?;
        let locals: Vec<Vec<f64>> = map_indexed(c.n_cells(), |cell| {
            let pts = c.cell_points(cell);
            let frame = BarycentricFrame::new(&pts).expect("valid cell");
            let basis = LocalBasis::new(&frame, n, k);
            let xs = quad.physical_points(&pts);
            let mut gv = vec![0.0; basis.n_comp];
            let mut local = vec![0.0; basis.faces.len()];
            for ((x, lam), w) in xs.iter().zip(&quad.points).zip(&quad.weights) {
                g.eval_into(x, &mut gv);
                for (fi, l) in local.iter_mut().enumerate() {
                    *l += w * dot(&gv, &basis.eval_face(fi, lam));
                }
            }
            local.iter_mut().for_each(|l| *l *= frame.volume);
            local
        });
        let mut s = vec![0.0; self.dim()];
        for (cell, local) in locals.iter().enumerate() {
            for (&gidx, v) in c.cell_faces(k, cell).iter().zip(local) {
                s[gidx] += v;
            }
        }
        Ok(s)
    }

    /// `‖g‖²` by cellwise quadrature.
    pub fn norm_squared(&self, g: &AnalyticForm) -> Result<f64> {
        self.check_form(g)?;
        let zero = Cochain::zeros(self.complex, self.degree);
        Ok(self.error_squared(&zero, g))
    }

    /// `‖W_h c − g‖`.
    pub fn l2_error(&self, c: &Cochain, g: &AnalyticForm) -> Result<f64> {
        self.check_cochain(c)?;
        self.check_form(g)?;
        Ok(self.error_squared(c, g).sqrt())
    }

    /// `‖W_h c‖`.
    pub fn l2_norm(&self, c: &Cochain) -> Result<f64> {
        self.check_cochain(c)?;
        let zero = AnalyticForm::constant(
            self.complex.dim(),
            self.degree,
            vec![0.0; binomial(self.complex.dim(), self.degree)],
        )?;
        Ok(self.error_squared(c, &zero).sqrt())
    }

    fn error_squared(&self, c: &Cochain, g: &AnalyticForm) -> f64 {
        let cx = self.complex;
        let n = cx.dim();
        let k = self.degree;
        let quad = rule(n, INNER_PRODUCT_DEGREE).expect("supported rule");
        let per_cell: Vec<f64> = map_indexed(cx.n_cells(), |cell| {
            let pts = cx.cell_points(cell);
            let frame = BarycentricFrame::new(&pts).expect("valid cell");
            let basis = LocalBasis::new(&frame, n, k);
            let local: Vec<f64> = cx.cell_faces(k, cell).iter().map(|&i| c.coeffs[i]).collect();
            let a = basis.affine_form(n, &local);
            let xs = quad.physical_points(&pts);
            let mut wv = vec![0.0; basis.n_comp];
            let mut gv = vec![0.0; basis.n_comp];
            let mut sum = 0.0;
            for ((x, lam), w) in xs.iter().zip(&quad.points).zip(&quad.weights) {
                eval_affine(&a, lam, &mut wv);
                g.eval_into(x, &mut gv);
                let e: f64 = wv.iter().zip(&gv).map(|(p, q)| (p - q) * (p - q)).sum();
                sum += w * e;
            }
            sum * frame.volume
        });
        per_cell.iter().sum()
    }

    /// Coefficients of `π_h u = W_h R_h u`, i.e. the de Rham map of `u`.
    pub fn canonical_projection(&self, u: &AnalyticForm) -> Result<Cochain> {
        de_rham_map(self.complex, self.degree, u)
    }
}

/// `R_h u`: the integral of `u` over every k-simplex, oriented by increasing
/// vertex index.
pub fn de_rham_map(complex: &SimplicialComplex, k: usize, u: &AnalyticForm) -> Result<Cochain> {
    let n = complex.dim();
    if u.degree() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: u.degree(),
        });
    }
    if u.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.dim(),
        });
    }
    if k > n {
        return Err(Error::DegreeOutOfRange { k, n });
    }
    if k == 0 {
        let coeffs = (0..complex.n_vertices())
            .map(|v| u.eval(complex.vertex(v))[0])
            .collect();
        return Ok(Cochain::new(0, coeffs));
    }
    let quad = rule(k, DE_RHAM_DEGREE)?;
    let tuples = combinations(n, k);
    let kf = factorial(k);
    let coeffs = map_indexed(complex.n_simplices(k), |s| {
        let pts = complex.simplex_points(k, s);
        // columns of the parametrization Jacobian
        let cols: Vec<Vec<f64>> = pts[1..]
            .iter()
            .map(|p| p.iter().zip(pts[0]).map(|(a, b)| a - b).collect())
            .collect();
        let minors: Vec<f64> = tuples
            .iter()
            .map(|rows| {
                let m: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|&r| cols.iter().map(|col| col[r]).collect())
                    .collect();
                det(&m)
            })
            .collect();
        let mut uv = vec![0.0; tuples.len()];
        let mut sum = 0.0;
        for (x, w) in quad.physical_points(&pts).iter().zip(&quad.weights) {
            u.eval_into(x, &mut uv);
            sum += w * dot(&uv, &minors);
        }
        sum / kf
    });
    Ok(Cochain::new(k, coeffs))
}
