//! Small dense linear algebra on simplices (dimension at most 3).

/// Determinant of a square matrix given by rows (size ≤ 3, or any size via
/// Gaussian elimination).
pub fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        n => {
            let mut a: Vec<Vec<f64>> = m.to_vec();
            let mut d = 1.0;
            for c in 0..n {
                let p = (c..n)
                    .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
                    .unwrap();
                if a[p][c] == 0.0 {
                    return 0.0;
                }
                if p != c {
                    a.swap(p, c);
                    d = -d;
                }
                d *= a[c][c];
                for r in c + 1..n {
                    let f = a[r][c] / a[c][c];
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
            d
        }
    }
}

/// Inverse of an `n x n` matrix with `n ≤ 3` via the adjugate.
pub fn inverse(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut inv = vec![vec![0.0; n]; n];
    if n == 1 {
        inv[0][0] = 1.0 / d;
        return Some(inv);
    }
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<f64>> = (0..n)
                .filter(|&r| r != j)
                .map(|r| (0..n).filter(|&c| c != i).map(|c| m[r][c]).collect())
                .collect();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            inv[i][j] = sign * det(&minor) / d;
        }
    }
    Some(inv)
}

/// `k`-dimensional measure of the simplex spanned by `k + 1` points in R^n.
pub fn simplex_measure(vertices: &[&[f64]]) -> f64 {
    let k = vertices.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let edges: Vec<Vec<f64>> = vertices[1..]
        .iter()
        .map(|v| v.iter().zip(vertices[0]).map(|(a, b)| a - b).collect())
        .collect();
    let gram: Vec<Vec<f64>> = edges
        .iter()
        .map(|a| edges.iter().map(|b| dot(a, b)).collect())
        .collect();
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    det(&gram).max(0.0).sqrt() / fact
}

/// Signed volume of an `n`-simplex in R^n.
pub fn signed_volume(vertices: &[&[f64]]) -> f64 {
    let n = vertices.len() - 1;
    let rows: Vec<Vec<f64>> = vertices[1..]
        .iter()
        .map(|v| v.iter().zip(vertices[0]).map(|(a, b)| a - b).collect())
        .collect();
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    det(&rows) / fact
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// All increasing `k`-element subsets of `0..n`, in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] < n - k + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Components of `w_1 ∧ … ∧ w_k` on the basis `dx^I`, `I` increasing, in
/// lexicographic order. Each component is the `k x k` minor on columns `I`.
pub fn wedge_components(covectors: &[&[f64]], n: usize) -> Vec<f64> {
    let k = covectors.len();
    combinations(n, k)
        .iter()
        .map(|cols| {
            let m: Vec<Vec<f64>> = covectors
                .iter()
                .map(|w| cols.iter().map(|&c| w[c]).collect())
                .collect();
            det(&m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(
            combinations(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        for n in 0..6 {
            for k in 0..=n {
                assert_eq!(combinations(n, k).len(), binomial(n, k));
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let m = vec![
            vec![2.0, 1.0, 0.5],
            vec![-1.0, 3.0, 0.0],
            vec![0.0, 1.0, 4.0],
        ];
        let inv = inverse(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!(inverse(&[vec![1.0, 2.0], vec![2.0, 4.0]]).is_none());
    }

    #[test]
    fn measures() {
        let edge: [&[f64]; 2] = [&[0.0, 0.0, 0.0], &[3.0, 4.0, 0.0]];
        assert!((simplex_measure(&edge) - 5.0).abs() < 1e-15);
        let tri: [&[f64]; 3] = [&[0.0, 0.0, 1.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 1.0]];
        assert!((simplex_measure(&tri) - 0.5).abs() < 1e-15);
        let tet: [&[f64]; 4] = [&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]];
        assert!((signed_volume(&tet) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn wedge_of_coordinate_covectors() {
        let dx = [1.0, 0.0, 0.0];
        let dy = [0.0, 1.0, 0.0];
        assert_eq!(wedge_components(&[&dx, &dy], 3), vec![1.0, 0.0, 0.0]);
        assert_eq!(wedge_components(&[&dy, &dx], 3), vec![-1.0, 0.0, 0.0]);
        assert_eq!(wedge_components(&[], 3), vec![1.0]);
        let det4 = det(&[
            vec![2.0, 0.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 3.0, 0.0],
            vec![1.0, 0.0, 0.0, 1.0],
        ]);
        assert!((det4 - 3.0).abs() < 1e-14);
    }
}
