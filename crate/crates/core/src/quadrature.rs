//! Quadrature on simplices from collapsed (Duffy) products of Gauss–Legendre
//! rules.

use crate::error::{Error, Result};
use crate::geometry::simplex_measure;

pub const MAX_DEGREE: usize = 10;
/// Degree used for every L² inner product and error norm.
pub const INNER_PRODUCT_DEGREE: usize = 8;
/// Degree used for the de Rham map.
pub const DE_RHAM_DEGREE: usize = 6;

/// Points are barycentric tuples of length `dim + 1`; weights sum to one.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A rule on the reference `dim`-simplex exact for total degree `degree`.
pub fn rule(dim: usize, degree: usize) -> Result<QuadratureRule> {
    if !(1..=3).contains(&dim) || degree > MAX_DEGREE {
        return Err(Error::UnsupportedQuadrature { dim, degree });
    }
    // direction j carries the Jacobian factor (1 - s_j)^(dim - 1 - j)
    let factors: Vec<(Vec<f64>, Vec<f64>)> = (0..dim)
        .map(|j| gauss_legendre((degree + dim - j) / 2 + 1))
        .collect();

    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![0usize; dim];
    let mut fact = 1.0;
    for d in 2..=dim {
        fact *= d as f64;
    }
    'outer: loop {
        let mut t = vec![0.0; dim];
        let mut remaining = 1.0;
        let mut w = fact;
        for j in 0..dim {
            let (ref nodes, ref ws) = factors[j];
            let s = nodes[idx[j]];
            t[j] = s * remaining;
            w *= ws[idx[j]] * remaining;
            remaining *= 1.0 - s;
        }
        let mut bary = Vec::with_capacity(dim + 1);
        bary.push(1.0 - t.iter().sum::<f64>());
        bary.extend_from_slice(&t);
        points.push(bary);
        weights.push(w);

        for j in (0..dim).rev() {
            idx[j] += 1;
            if idx[j] < factors[j].0.len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    Ok(QuadratureRule {
        dim,
        degree,
        points,
        weights,
    })
}

impl QuadratureRule {
    /// Maps the rule's barycentric points to a physical simplex.
    pub fn physical_points(&self, vertices: &[&[f64]]) -> Vec<Vec<f64>> {
        let n = vertices[0].len();
        self.points
            .iter()
            .map(|b| {
                let mut x = vec![0.0; n];
                for (bi, v) in b.iter().zip(vertices) {
                    for c in 0..n {
                        x[c] += bi * v[c];
                    }
                }
                x
            })
            .collect()
    }
}

/// ∫ f over the affine simplex spanned by `vertices` (`dim + 1` points of a
/// common ambient dimension).
pub fn integrate_on_simplex<F>(rule: &QuadratureRule, vertices: &[&[f64]], f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if vertices.len() != rule.dim + 1 {
        return Err(Error::DimensionMismatch {
            expected: rule.dim + 1,
            found: vertices.len(),
        });
    }
    let measure = simplex_measure(vertices);
    let scale = vertices
        .iter()
        .skip(1)
        .map(|v| {
            v.iter()
                .zip(vertices[0])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    if measure <= 1e-14 * scale.powi(rule.dim as i32) {
        return Err(Error::DegenerateCell { cell: 0 });
    }
    let pts = rule.physical_points(vertices);
    let sum: f64 = pts.iter().zip(&rule.weights).map(|(x, w)| w * f(x)).sum();
    Ok(sum * measure)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    /// Exponent tuples of total degree <= p in `d` variables.
    fn monomials(d: usize, p: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..d {
            let mut next = Vec::new();
            for e in &out {
                let used: usize = e.iter().sum();
                for a in 0..=(p - used) {
                    let mut e2 = e.clone();
                    e2.push(a);
                    next.push(e2);
                }
            }
            out = next;
        }
        out
    }

    #[test]
    fn exactness_sweep() {
        for dim in 1..=3 {
            for degree in 0..=MAX_DEGREE {
                let r = rule(dim, degree).unwrap();
                let wsum: f64 = r.weights.iter().sum();
                assert!((wsum - 1.0).abs() < 1e-14, "dim {dim} deg {degree}");
                for p in &r.points {
                    assert!(p.iter().all(|&b| (-1e-15..=1.0 + 1e-15).contains(&b)));
                }
                for e in monomials(dim, degree) {
                    let exact = e.iter().map(|&a| factorial(a)).product::<f64>() * factorial(dim)
                        / factorial(e.iter().sum::<usize>() + dim);
                    let approx: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(b, w)| {
                            w * e
                                .iter()
                                .enumerate()
                                .map(|(i, &a)| b[i + 1].powi(a as i32))
                                .product::<f64>()
                        })
                        .sum();
                    assert!(
                        ((approx - exact) / exact).abs() < 1e-12,
                        "dim {dim} deg {degree} monomial {e:?}: {approx} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn unsupported_requests() {
        assert!(rule(2, 11).is_err());
        assert!(rule(4, 2).is_err());
        assert!(rule(0, 2).is_err());
    }

    #[test]
    fn triangle_integrals() {
        let tri: [&[f64]; 3] = [&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]];
        let r1 = rule(2, 1).unwrap();
        assert!((integrate_on_simplex(&r1, &tri, |_| 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((integrate_on_simplex(&r1, &tri, |x| x[0]).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let r2 = rule(2, 2).unwrap();
        assert!(
            (integrate_on_simplex(&r2, &tri, |x| x[0] * x[1]).unwrap() - 1.0 / 24.0).abs() < 1e-15
        );
        let other: [&[f64]; 3] = [&[1.0, 2.0], &[4.0, 2.5], &[-1.0, 5.0]];
        let area = 0.5 * ((3.0f64) * 3.0 - 0.5 * (-2.0));
        assert!((integrate_on_simplex(&r1, &other, |_| 1.0).unwrap() - area).abs() < 1e-13);
    }

    #[test]
    fn tetrahedron_second_moment() {
        let tet: [&[f64]; 4] = [&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]];
        let r = rule(3, 2).unwrap();
        let v = integrate_on_simplex(&r, &tet, |x| x[0] * x[0]).unwrap();
        assert!((v - 1.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn degree_four_agrees_across_rules() {
        let tri: [&[f64]; 3] = [&[0.2, -0.1], &[1.3, 0.4], &[0.1, 1.7]];
        let f = |x: &[f64]| 1.0 + x[0] * x[0] * x[1] * x[1] - 3.0 * x[0].powi(3) * x[1] + x[1].powi(4);
        let a = integrate_on_simplex(&rule(2, 4).unwrap(), &tri, f).unwrap();
        let b = integrate_on_simplex(&rule(2, 8).unwrap(), &tri, f).unwrap();
        assert!(((a - b) / b).abs() < 1e-12);
    }

    #[test]
    fn degenerate_simplex_is_rejected() {
        let tri: [&[f64]; 3] = [&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]];
        assert!(integrate_on_simplex(&rule(2, 2).unwrap(), &tri, |_| 1.0).is_err());
    }
}
