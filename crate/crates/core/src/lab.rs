//! The Whitney codifferential `d*_h` and the quantities used to study its
//! consistency: the error `‖d*_h π_h u − d*u‖`, `A_h(u)`, the best
//! approximation distance of `d*u`, and the crisscross closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{Cochain, SimplicialComplex};
use crate::error::{Error, Result};
use crate::forms::AnalyticForm;
use crate::sparse::{cg_solve, dot, SolveOptions, SolveReport};
use crate::whitney::{de_rham_map, WhitneySpace};

/// `d*_h` of the Whitney form with coefficients `c_u`: solves
/// `M_{k−1} c = D_{k−1}ᵀ M_k c_u`.
pub fn discrete_codifferential(
    space_k: &WhitneySpace,
    space_km1: &WhitneySpace,
    c_u: &Cochain,
    opts: SolveOptions,
) -> Result<(Cochain, SolveReport)> {
    let k = space_k.degree();
    if k == 0 || space_km1.degree() + 1 != k {
        return Err(Error::DegreeOutOfRange {
            k,
            n: space_k.complex().dim(),
        });
    }
    if c_u.len() != space_k.dim() {
        return Err(Error::ShapeMismatch(format!(
            "cochain of length {} on a space of dimension {}",
            c_u.len(),
            space_k.dim()
        )));
    }
    let d = space_k.complex().coboundary_matrix(k - 1)?;
    let rhs = d.transpose_spmv(&space_k.mass_matrix().spmv(&c_u.coeffs)?)?;
    let (x, rep) = cg_solve(space_km1.mass_matrix(), &rhs, opts)?;
    Ok((Cochain::new(k - 1, x), rep))
}

/// Vertex values of `w_h = d*_h π_h u` for `u = (1 − x²)dx` on a crisscross
/// mesh with triangle diameter `h ≤ 1`, as stated in the closed form: the
/// value depends only on `x`.
///
/// The stated values at `x = ±(1 − h/2)` are `∓(6 − 2h)`. The exact discrete
/// solution there is `∓(6 − 7h/2)`; see [`crisscross_exact_wh`].
pub fn crisscross_closed_form_wh(h: f64, x: f64) -> Result<f64> {
    closed_form(h, x, 2.0)
}

/// Exact vertex values of `w_h`. Identical to [`crisscross_closed_form_wh`]
/// except in the two columns next to the boundary, where the value is
/// `∓(6 − 7h/2)`.
pub fn crisscross_exact_wh(h: f64, x: f64) -> Result<f64> {
    closed_form(h, x, 3.5)
}

fn closed_form(h: f64, x: f64, edge_slope: f64) -> Result<f64> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::ShapeMismatch(format!("closed form needs 0 < h ≤ 1, got {h}")));
    }
    let half = h / 2.0;
    let q = (x + 1.0) / half;
    let i = q.round();
    if (q - i).abs() > 1e-9 || i < 0.0 {
        return Err(Error::OffGrid { x, half_h: half });
    }
    let i = i as i64;
    let last = (4.0 / h).round() as i64;
    if i > last {
        return Err(Error::OffGrid { x, half_h: half });
    }
    Ok(if i == 0 {
        -h
    } else if i == last {
        h
    } else if i == 1 {
        -6.0 + edge_slope * h
    } else if i == last - 1 {
        6.0 - edge_slope * h
    } else if i % 2 == 0 {
        0.0
    } else {
        6.0 * x
    })
}

/// Largest `|w_h(v) − f(h, x_v)|` over the vertices of crisscross level `m`,
/// where `w_h` is computed by assembly, split into the two columns next to
/// the boundary and everything else.
pub fn crisscross_oracle_deviation(
    m: usize,
    f: fn(f64, f64) -> Result<f64>,
    opts: SolveOptions,
) -> Result<OracleDeviation> {
    let h = 4.0 / (1u64 << m) as f64;
    let c = crate::mesh::crisscross(m)?;
    let u = crate::forms::builtin("square1form")?;
    let s1 = WhitneySpace::new(&c, 1)?;
    let s0 = WhitneySpace::new(&c, 0)?;
    let cu = de_rham_map(&c, 1, &u)?;
    let (w, _) = discrete_codifferential(&s1, &s0, &cu, opts)?;
    let mut out = OracleDeviation {
        h,
        near_boundary: 0.0,
        elsewhere: 0.0,
    };
    for v in 0..c.n_vertices() {
        let x = c.vertex(v)[0];
        let dev = (w.coeffs[v] - f(h, x)?).abs();
        if ((x.abs() - (1.0 - h / 2.0)).abs()) < 1e-12 {
            out.near_boundary = out.near_boundary.max(dev);
        } else {
            out.elsewhere = out.elsewhere.max(dev);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleDeviation {
    pub h: f64,
    /// max deviation on the vertex columns `x = ±(1 − h/2)`
    pub near_boundary: f64,
    pub elsewhere: f64,
}

impl OracleDeviation {
    pub fn max(&self) -> f64 {
        self.near_boundary.max(self.elsewhere)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyResult {
    pub h: f64,
    pub cell_count: usize,
    /// `‖d*_h π_h u − d*u‖`
    pub error: f64,
    pub a_h: f64,
    /// `dist(d*u, Λ_h^{k−1})`
    pub dist: f64,
    pub reports: Vec<SolveReport>,
}

impl ConsistencyResult {
    /// `A_h ≤ error ≤ dist + A_h + slack`.
    pub fn sandwich_holds(&self, slack: f64) -> bool {
        self.a_h <= self.error + slack && self.error <= self.dist + self.a_h + slack
    }
}

fn codifferential_of(u: &AnalyticForm) -> Result<&AnalyticForm> {
    u.codifferential()
        .ok_or_else(|| Error::UnknownForm(format!("{} has no closed-form codifferential", u.name())))
}

/// Consistency error of `d*_h` for `u`, with `A_h(u)` and the distance of
/// `d*u` from the Whitney (k−1)-forms.
pub fn consistency_error(
    complex: &SimplicialComplex,
    u: &AnalyticForm,
    opts: SolveOptions,
) -> Result<ConsistencyResult> {
    let k = u.degree();
    let g = codifferential_of(u)?;
    if k == 0 {
        return Err(Error::DegreeOutOfRange { k, n: complex.dim() });
    }
    let space_k = WhitneySpace::new(complex, k)?;
    let space_km1 = WhitneySpace::new(complex, k - 1)?;
    let c_u = de_rham_map(complex, k, u)?;
    let (w, rep_w) = discrete_codifferential(&space_k, &space_km1, &c_u, opts)?;
    let error = space_km1.l2_error(&w, g)?;
    let (a_h, rep_a) = a_h_with(&space_k, &space_km1, u, &c_u, opts)?;
    let (dist, rep_d) = best_approx_distance(&space_km1, g, opts)?;
    Ok(ConsistencyResult {
        h: complex.mesh_stats().h_max,
        cell_count: complex.n_cells(),
        error,
        a_h,
        dist,
        reports: vec![rep_w, rep_a, rep_d],
    })
}

/// `A_h(u) = sup_{v_h} <u − π_h u, d v_h> / ‖v_h‖`, as the `M_{k−1}⁻¹`-norm
/// of `b = D_{k−1}ᵀ(s − M_k R_h u)` with `s_τ = <u, W a_τ>`.
pub fn a_h(complex: &SimplicialComplex, u: &AnalyticForm, opts: SolveOptions) -> Result<f64> {
    let k = u.degree();
    if k == 0 {
        return Err(Error::DegreeOutOfRange { k, n: complex.dim() });
    }
    let space_k = WhitneySpace::new(complex, k)?;
    let space_km1 = WhitneySpace::new(complex, k - 1)?;
    let c_u = de_rham_map(complex, k, u)?;
    a_h_with(&space_k, &space_km1, u, &c_u, opts).map(|(a, _)| a)
}

fn a_h_with(
    space_k: &WhitneySpace,
    space_km1: &WhitneySpace,
    u: &AnalyticForm,
    c_u: &Cochain,
    opts: SolveOptions,
) -> Result<(f64, SolveReport)> {
    let k = space_k.degree();
    let mut r = space_k.load_vector(u)?;
    for (ri, mi) in r.iter_mut().zip(space_k.mass_matrix().spmv(&c_u.coeffs)?) {
        *ri -= mi;
    }
    let b = space_k.complex().coboundary_matrix(k - 1)?.transpose_spmv(&r)?;
    let (z, rep) = cg_solve(space_km1.mass_matrix(), &b, opts)?;
    let sq = dot(&b, &z);
    if sq < -1e-12 {
        return Err(Error::NegativeRadicand(sq));
    }
    Ok((sq.max(0.0).sqrt(), rep))
}

/// `dist(g, Λ_h^k) = ‖g − P_h g‖` where `P_h` is the L² projection. The
/// projection solves `M_k y = t`, `t_j = <g, W a_j>`; the distance is then
/// measured by quadrature of `g − W_h y`.
pub fn best_approx_distance(
    space: &WhitneySpace,
    g: &AnalyticForm,
    opts: SolveOptions,
) -> Result<(f64, SolveReport)> {
    let t = space.load_vector(g)?;
    let (y, rep) = cg_solve(space.mass_matrix(), &t, opts)?;
    let dist = space.l2_error(&Cochain::new(space.degree(), y), g)?;
    Ok((dist, rep))
}

/// `Δ^c c = d^c δ^c c + δ^c d^c c`, with the terms that leave `0..=n`
/// dropped.
pub fn combinatorial_laplacian_apply(
    complex: &SimplicialComplex,
    c: &Cochain,
    opts: SolveOptions,
) -> Result<Cochain> {
    let n = complex.dim();
    let k = c.degree;
    if k > n {
        return Err(Error::DegreeOutOfRange { k, n });
    }
    let space_k = WhitneySpace::new(complex, k)?;
    let mut out = vec![0.0; space_k.dim()];
    if k > 0 {
        let space_km1 = WhitneySpace::new(complex, k - 1)?;
        let (delta, _) = discrete_codifferential(&space_k, &space_km1, c, opts)?;
        let d = complex.coboundary_matrix(k - 1)?;
        for (o, v) in out.iter_mut().zip(d.spmv(&delta.coeffs)?) {
            *o += v;
        }
    }
    if k < n {
        let space_kp1 = WhitneySpace::new(complex, k + 1)?;
        let dc = Cochain::new(k + 1, complex.coboundary_matrix(k)?.spmv(&c.coeffs)?);
        let (delta, _) = discrete_codifferential(&space_kp1, &space_k, &dc, opts)?;
        for (o, v) in out.iter_mut().zip(&delta.coeffs) {
            *o += v;
        }
    }
    Ok(Cochain::new(k, out))
}

/// `max ‖d v_h‖ · h_min / ‖v_h‖` over every basis cochain and `n_random`
/// random cochains drawn from `seed`.
pub fn inverse_estimate_ratio(space: &WhitneySpace, n_random: usize, seed: u64) -> Result<f64> {
    let complex = space.complex();
    let k = space.degree();
    let n = complex.dim();
    if k >= n {
        return Err(Error::DegreeOutOfRange { k, n });
    }
    let h_min = complex.mesh_stats().h_min;
    let m = space.mass_matrix();
    let next = WhitneySpace::new(complex, k + 1)?;
    let m1 = next.mass_matrix();
    let d = complex.coboundary_matrix(k)?;
    let dt = d.transpose();
    let mut best: f64 = 0.0;
    for tau in 0..space.dim() {
        let (rows, signs) = dt.row(tau);
        let mut num = 0.0;
        for (&a, &sa) in rows.iter().zip(signs) {
            for (&b, &sb) in rows.iter().zip(signs) {
                num += sa * sb * m1.get(a, b);
            }
        }
        best = best.max((num.max(0.0) / m.get(tau, tau)).sqrt() * h_min);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        let v: Vec<f64> = (0..space.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dv = d.spmv(&v)?;
        let num = m1.quadratic_form(&dv, &dv)?;
        let den = m.quadratic_form(&v, &v)?;
        best = best.max((num.max(0.0) / den).sqrt() * h_min);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{builtin, potential_p};
    use crate::mesh::{crisscross, cube_six_tet, kuhn_grid, pwuniform2d, refine, RefinementRule};

    fn random_cochain(rng: &mut ChaCha8Rng, c: &SimplicialComplex, k: usize) -> Cochain {
        Cochain::new(k, (0..c.n_simplices(k)).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(crisscross_closed_form_wh(0.5, 0.0).unwrap(), 0.0);
        assert_eq!(crisscross_closed_form_wh(0.5, -0.75).unwrap(), -5.0);
        assert_eq!(crisscross_exact_wh(0.5, -0.75).unwrap(), -4.25);
        assert_eq!(crisscross_closed_form_wh(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(crisscross_closed_form_wh(0.5, -1.0).unwrap(), -0.5);
        assert_eq!(crisscross_closed_form_wh(0.5, -0.75 + 0.25).unwrap(), 0.0);
        assert_eq!(crisscross_closed_form_wh(0.25, -0.875).unwrap(), -5.5);
        assert_eq!(crisscross_closed_form_wh(0.25, 0.875).unwrap(), 5.5);
        assert_eq!(crisscross_closed_form_wh(0.25, 0.375).unwrap(), 2.25);
        assert!(matches!(
            crisscross_closed_form_wh(0.5, 0.1),
            Err(Error::OffGrid { .. })
        ));
        assert!(crisscross_closed_form_wh(2.0, 0.0).is_err());
    }

    #[test]
    fn oracle_matches_computed_vertex_values() {
        let tight = SolveOptions::with_tol(1e-13);
        for m in 2..=5 {
            let stated = crisscross_oracle_deviation(m, crisscross_closed_form_wh, tight).unwrap();
            assert!(stated.elsewhere <= 1e-8, "{stated:?}");
            // the stated near-boundary value is off by 3h/2
            assert!((stated.near_boundary - 1.5 * stated.h).abs() < 1e-8, "{stated:?}");
            let exact = crisscross_oracle_deviation(m, crisscross_exact_wh, tight).unwrap();
            assert!(exact.max() <= 1e-8, "{exact:?}");
        }
    }

    #[test]
    fn dlap_right_hand_side_is_four_x_m() {
        let u = builtin("square1form").unwrap();
        for m in 3..=5 {
            let h = 4.0 / (1u64 << m) as f64;
            let c = crisscross(m).unwrap();
            let s1 = WhitneySpace::new(&c, 1).unwrap();
            let cu = de_rham_map(&c, 1, &u).unwrap();
            let rhs = c
                .coboundary_matrix(0)
                .unwrap()
                .transpose_spmv(&s1.mass_matrix().spmv(&cu.coeffs).unwrap())
                .unwrap();
            let area = h * h / 4.0;
            let mut checked = 0;
            for v in 0..c.n_vertices() {
                let x = c.vertex(v)[0];
                let q = ((x + 1.0) / (h / 2.0)).round() as i64;
                let last = (4.0 / h).round() as i64;
                if q % 2 == 1 && q > 1 && q < last - 1 {
                    assert!((rhs[v] - 4.0 * x * area).abs() < 1e-12, "x={x}");
                    checked += 1;
                }
            }
            assert!(checked > 0);
        }
    }

    #[test]
    fn codifferential_of_zero_and_adjointness() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for c in [crisscross(3).unwrap(), cube_six_tet()] {
            for k in 1..=c.dim() {
                let sk = WhitneySpace::new(&c, k).unwrap();
                let skm1 = WhitneySpace::new(&c, k - 1).unwrap();
                let (z, _) = discrete_codifferential(&sk, &skm1, &Cochain::zeros(&c, k), opts()).unwrap();
                assert!(z.coeffs.iter().all(|&v| v == 0.0));
                let a = random_cochain(&mut rng, &c, k);
                let b = random_cochain(&mut rng, &c, k - 1);
                let (da, _) = discrete_codifferential(&sk, &skm1, &a, SolveOptions::with_tol(1e-13)).unwrap();
                let lhs = skm1.mass_matrix().quadratic_form(&b.coeffs, &da.coeffs).unwrap();
                let db = c.coboundary_matrix(k - 1).unwrap().spmv(&b.coeffs).unwrap();
                let rhs = sk.mass_matrix().quadratic_form(&db, &a.coeffs).unwrap();
                assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0), "{lhs} {rhs}");
            }
        }
        let c = crisscross(2).unwrap();
        let s1 = WhitneySpace::new(&c, 1).unwrap();
        let s0 = WhitneySpace::new(&c, 0).unwrap();
        assert!(discrete_codifferential(&s0, &s0, &Cochain::zeros(&c, 0), opts()).is_err());
        assert!(discrete_codifferential(&s1, &s0, &Cochain::zeros(&c, 0), opts()).is_err());
    }

    #[test]
    fn table2_second_row() {
        let r = consistency_error(&crisscross(3).unwrap(), &builtin("square1form").unwrap(), opts()).unwrap();
        assert_eq!(r.cell_count, 64);
        assert!((r.error - 1.50).abs() < 0.005, "{}", r.error);
        assert!(r.sandwich_holds(1e-8));
        assert!(r.a_h >= 1.0);
    }

    #[test]
    fn sandwich_and_pythagoras() {
        // error² = dist² + A_h² because d*_h π_h u − P_h d*u is orthogonal to d*u − P_h d*u
        for (c, name) in [
            (crisscross(3).unwrap(), "square1form"),
            (pwuniform2d(2).unwrap(), "square1form"),
            (cube_six_tet(), "cube1form"),
            (cube_six_tet(), "cube2form"),
        ] {
            let r = consistency_error(&c, &builtin(name).unwrap(), SolveOptions::with_tol(1e-13)).unwrap();
            assert!(r.sandwich_holds(1e-8));
            let lhs = r.error * r.error;
            let rhs = r.dist * r.dist + r.a_h * r.a_h;
            assert!((lhs - rhs).abs() < 1e-8 * lhs.max(1.0), "{name}: {lhs} {rhs}");
        }
    }

    #[test]
    fn a_h_vanishes_for_whitney_forms_and_top_degree() {
        let c = crisscross(3).unwrap();
        let g = AnalyticForm::constant(2, 1, vec![0.3, -0.2]).unwrap();
        assert!(a_h(&c, &g, opts()).unwrap() < 1e-10);
        let u2 = builtin("square2form").unwrap();
        for mesh in [crisscross(2).unwrap(), pwuniform2d(2).unwrap(), kuhn_grid(2, 4).unwrap()] {
            assert!(a_h(&mesh, &u2, opts()).unwrap() <= 1e-10);
        }
        assert!(a_h(&c, &potential_p(), opts()).is_err());
    }

    #[test]
    fn best_approximation() {
        let c = crisscross(3).unwrap();
        let s0 = WhitneySpace::new(&c, 0).unwrap();
        let lin = AnalyticForm::new(
            "affine",
            2,
            0,
            1,
            vec![std::sync::Arc::new(|x: &[f64]| 1.0 + 2.0 * x[0] - x[1]) as crate::forms::Coefficient],
        )
        .unwrap();
        assert!(best_approx_distance(&s0, &lin, opts()).unwrap().0 < 1e-8);
        // d*u = 2x is affine, hence in Λ⁰_h: the distance is zero at every level
        let g = builtin("square1form").unwrap();
        let g = g.codifferential().unwrap();
        assert!(best_approx_distance(&s0, g, opts()).unwrap().0 < 1e-8);
        // d*u for the 2-form on the cube is not piecewise linear
        let u = builtin("cube2form").unwrap();
        let mut dists = Vec::new();
        let mut mesh = cube_six_tet();
        for _ in 0..3 {
            mesh = refine(&mesh, RefinementRule::RegularRed3D).unwrap();
            let s = WhitneySpace::new(&mesh, 1).unwrap();
            dists.push(best_approx_distance(&s, u.codifferential().unwrap(), opts()).unwrap().0);
        }
        let order = (dists[1] / dists[2]).log2();
        assert!(order >= 0.9, "{dists:?}");
    }

    #[test]
    fn laplacian_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = crisscross(2).unwrap();
        let ones = Cochain::new(0, vec![1.0; c.n_vertices()]);
        let l1 = combinatorial_laplacian_apply(&c, &ones, opts()).unwrap();
        assert!(l1.coeffs.iter().all(|v| v.abs() < 1e-12));
        for k in 0..=2 {
            let m = WhitneySpace::new(&c, k).unwrap();
            let a = random_cochain(&mut rng, &c, k);
            let b = random_cochain(&mut rng, &c, k);
            let tight = SolveOptions::with_tol(1e-13);
            let la = combinatorial_laplacian_apply(&c, &a, tight).unwrap();
            let lb = combinatorial_laplacian_apply(&c, &b, tight).unwrap();
            let x = m.mass_matrix().quadratic_form(&a.coeffs, &lb.coeffs).unwrap();
            let y = m.mass_matrix().quadratic_form(&la.coeffs, &b.coeffs).unwrap();
            assert!((x - y).abs() < 1e-8 * x.abs().max(1.0));
            assert!(m.mass_matrix().quadratic_form(&a.coeffs, &la.coeffs).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn inverse_estimate_plateaus() {
        let ratios: Vec<f64> = (2..=5)
            .map(|m| {
                let c = crisscross(m).unwrap();
                inverse_estimate_ratio(&WhitneySpace::new(&c, 0).unwrap(), 50, 1).unwrap()
            })
            .collect();
        let hs: Vec<f64> = (2..=5).map(|m| (4.0 / (1u64 << m) as f64).ln()).collect();
        let lr: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
        let (mh, mr) = (hs.iter().sum::<f64>() / 4.0, lr.iter().sum::<f64>() / 4.0);
        let slope = hs.iter().zip(&lr).map(|(h, r)| (h - mh) * (r - mr)).sum::<f64>()
            / hs.iter().map(|h| (h - mh).powi(2)).sum::<f64>();
        assert!(slope.abs() <= 0.1, "{ratios:?}");
        let c = crisscross(2).unwrap();
        let s2 = WhitneySpace::new(&c, 2).unwrap();
        assert!(inverse_estimate_ratio(&s2, 1, 1).is_err());
    }
}
