//! Oriented simplicial complexes in R² and R³.
//!
//! Every simplex is oriented by increasing vertex index. Skeletons are stored
//! in lexicographic order, and each cell keeps the vertex tuple it was built
//! with (its *ordered* tuple) because refinement rules are order dependent.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::{binomial, combinations, distance, signed_volume, simplex_measure};
use crate::sparse::CsrMatrix;

const PAD: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialComplex {
    dim: usize,
    coords: Vec<f64>,
    /// Ordered vertex tuples, stride `dim + 1`, sorted by their sorted tuple.
    cells: Vec<usize>,
    /// `skeletons[k]`: increasing `(k+1)`-tuples, stride `k + 1`.
    skeletons: Vec<Vec<usize>>,
    /// `cell_faces[k]`: per cell, indices of its k-faces in the lexicographic
    /// order of local vertex positions; stride `C(dim+1, k+1)`.
    cell_faces: Vec<Vec<usize>>,
    /// `boundary[k]` for `k ≥ 1`: per k-simplex, the index of the face that
    /// omits local vertex `i`, for `i = 0..=k`.
    boundary: Vec<Vec<usize>>,
    /// Number of cells incident to each (dim-1)-face.
    facet_cell_count: Vec<u8>,
}

/// A real k-cochain indexed by the k-skeleton.
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl Cochain {
    pub fn new(degree: usize, coeffs: Vec<f64>) -> Self {
        Self { degree, coeffs }
    }

    pub fn zeros(complex: &SimplicialComplex, degree: usize) -> Self {
        Self::new(degree, vec![0.0; complex.n_simplices(degree)])
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Mesh size and shape quality. `shape_constant` is the minimum over cells of
/// the inscribed-ball diameter divided by the cell diameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshStats {
    pub h_max: f64,
    pub h_min: f64,
    pub shape_constant: f64,
}

fn key(s: &[usize]) -> [usize; 4] {
    let mut k = [PAD; 4];
    k[..s.len()].copy_from_slice(s);
    k
}

impl SimplicialComplex {
    /// Builds the complex, enumerating all skeletons and incidences.
    ///
    /// `vertices` holds `dim` coordinates per vertex; `cells` holds `dim + 1`
    /// vertex indices per cell, in the order refinement rules should see them.
    pub fn build(dim: usize, vertices: Vec<f64>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if vertices.len() % dim != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} coordinates is not a multiple of dimension {dim}",
                vertices.len()
            )));
        }
        let nv = vertices.len() / dim;
        let np = dim + 1;
        let mut used = vec![false; nv];
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() != np {
                return Err(Error::ShapeMismatch(format!(
                    "cell {c} has {} vertices, expected {np}",
                    cell.len()
                )));
            }
            for &v in cell {
                if v >= nv {
                    return Err(Error::IndexOutOfRange {
                        cell: c,
                        index: v,
                        n_vertices: nv,
                    });
                }
                used[v] = true;
            }
            let mut s = cell.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::DuplicateCell { cell: c });
            }
            let pts: Vec<&[f64]> = cell.iter().map(|&v| &vertices[v * dim..(v + 1) * dim]).collect();
            let diam = cell_diameter(&pts);
            let vol = signed_volume(&pts).abs();
            if !(vol > 1e-12 * diam.powi(dim as i32)) {
                return Err(Error::DegenerateCell { cell: c });
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::ShapeMismatch(format!("vertex {v} belongs to no cell")));
        }

        let mut order: Vec<usize> = (0..cells.len()).collect();
        let sorted_cells: Vec<[usize; 4]> = cells
            .iter()
            .map(|c| {
                let mut s = c.clone();
                s.sort_unstable();
                key(&s)
            })
            .collect();
        order.sort_by_key(|&i| sorted_cells[i]);
        for w in order.windows(2) {
            if sorted_cells[w[0]] == sorted_cells[w[1]] {
                return Err(Error::DuplicateCell { cell: w[1] });
            }
        }
        let ordered: Vec<usize> = order.iter().flat_map(|&i| cells[i].iter().copied()).collect();
        let sorted_flat: Vec<usize> = order
            .iter()
            .flat_map(|&i| sorted_cells[i][..np].iter().copied())
            .collect();
        let n_cells = order.len();

        let mut skeletons = Vec::with_capacity(np);
        let mut cell_faces = Vec::with_capacity(np);
        for k in 0..=dim {
            let local = combinations(np, k + 1);
            let mut keys: Vec<[usize; 4]> = Vec::with_capacity(n_cells * local.len());
            for c in 0..n_cells {
                let s = &sorted_flat[c * np..(c + 1) * np];
                for l in &local {
                    let f: Vec<usize> = l.iter().map(|&i| s[i]).collect();
                    keys.push(key(&f));
                }
            }
            let mut uniq = keys.clone();
            uniq.sort_unstable();
            uniq.dedup();
            let faces: Vec<usize> = keys
                .iter()
                .map(|kk| uniq.binary_search(kk).expect("face enumerated"))
                .collect();
            let flat: Vec<usize> = if k == 0 {
                (0..nv).collect()
            } else {
                uniq.iter().flat_map(|kk| kk[..=k].iter().copied()).collect()
            };
            skeletons.push(flat);
            cell_faces.push(faces);
        }

        let mut boundary = vec![Vec::new()];
        for k in 1..=dim {
            let lower = &skeletons[k - 1];
            let n_lower = lower.len() / k;
            let find = |s: &[usize]| -> usize {
                let (mut lo, mut hi) = (0, n_lower);
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    match lower[mid * k..(mid + 1) * k].cmp(s) {
                        std::cmp::Ordering::Less => lo = mid + 1,
                        std::cmp::Ordering::Greater => hi = mid,
                        std::cmp::Ordering::Equal => return mid,
                    }
                }
                unreachable!("face of a simplex missing from the skeleton")
            };
            let sk = &skeletons[k];
            let mut b = Vec::with_capacity(sk.len());
            let mut face = Vec::with_capacity(k);
            for s in sk.chunks(k + 1) {
                for omit in 0..=k {
                    face.clear();
                    face.extend(s.iter().enumerate().filter(|&(i, _)| i != omit).map(|(_, &v)| v));
                    b.push(find(&face));
                }
            }
            boundary.push(b);
        }

        let n_facets = skeletons[dim - 1].len() / dim;
        let mut facet_cell_count = vec![0u8; n_facets];
        for c in 0..n_cells {
            for &f in &boundary[dim][c * np..(c + 1) * np] {
                facet_cell_count[f] = facet_cell_count[f].saturating_add(1);
                if facet_cell_count[f] > 2 {
                    return Err(Error::NonManifold {
                        face: skeletons[dim - 1][f * dim..(f + 1) * dim].to_vec(),
                    });
                }
            }
        }

        Ok(Self {
            dim,
            coords: vertices,
            cells: ordered,
            skeletons,
            cell_faces,
            boundary,
            facet_cell_count,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    /// The cell's vertex tuple in construction order.
    pub fn cell(&self, c: usize) -> &[usize] {
        let np = self.dim + 1;
        &self.cells[c * np..(c + 1) * np]
    }

    /// Cell vertices in increasing index order (the cell's orientation).
    pub fn cell_sorted(&self, c: usize) -> &[usize] {
        self.simplex(self.dim, c)
    }

    pub fn cell_points(&self, c: usize) -> Vec<&[f64]> {
        self.cell_sorted(c).iter().map(|&v| self.vertex(v)).collect()
    }

    pub fn n_simplices(&self, k: usize) -> usize {
        self.skeletons[k].len() / (k + 1)
    }

    pub fn simplex(&self, k: usize, i: usize) -> &[usize] {
        &self.skeletons[k][i * (k + 1)..(i + 1) * (k + 1)]
    }

    pub fn simplices(&self, k: usize) -> impl Iterator<Item = &[usize]> {
        self.skeletons[k].chunks(k + 1)
    }

    pub fn simplex_points(&self, k: usize, i: usize) -> Vec<&[f64]> {
        self.simplex(k, i).iter().map(|&v| self.vertex(v)).collect()
    }

    /// Global indices of the k-faces of cell `c`, ordered like
    /// `combinations(dim + 1, k + 1)` over the cell's sorted vertices.
    pub fn cell_faces(&self, k: usize, c: usize) -> &[usize] {
        let stride = binomial(self.dim + 1, k + 1);
        &self.cell_faces[k][c * stride..(c + 1) * stride]
    }

    /// Faces of k-simplex `i`; entry `j` omits vertex `j` and has incidence
    /// sign `(-1)^j`.
    pub fn faces_of(&self, k: usize, i: usize) -> &[usize] {
        &self.boundary[k][i * (k + 1)..(i + 1) * (k + 1)]
    }

    pub fn find_simplex(&self, simplex: &[usize]) -> Option<usize> {
        let k = simplex.len().checked_sub(1)?;
        if k > self.dim {
            return None;
        }
        let mut s = simplex.to_vec();
        s.sort_unstable();
        let sk = &self.skeletons[k];
        let n = sk.len() / (k + 1);
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match sk[mid * (k + 1)..(mid + 1) * (k + 1)].cmp(&s[..]) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Number of cells containing each (dim-1)-face (1 on the boundary,
    /// 2 in the interior).
    pub fn facet_cell_counts(&self) -> &[u8] {
        &self.facet_cell_count
    }

    /// Marks the k-simplices contained in the boundary of the domain.
    pub fn boundary_mask(&self, k: usize) -> Vec<bool> {
        let n = self.dim;
        let mut mask = vec![false; self.n_simplices(k)];
        if k >= n {
            return mask;
        }
        let mut facets: Vec<bool> = self.facet_cell_count.iter().map(|&c| c == 1).collect();
        // push facet flags down to lower dimensions
        let mut level = n - 1;
        while level > k {
            let mut lower = vec![false; self.n_simplices(level - 1)];
            for (i, &b) in facets.iter().enumerate() {
                if b {
                    for &f in self.faces_of(level, i) {
                        lower[f] = true;
                    }
                }
            }
            facets = lower;
            level -= 1;
        }
        mask.copy_from_slice(&facets);
        mask
    }

    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.dim)
            .map(|k| {
                let c = self.n_simplices(k) as i64;
                if k % 2 == 0 {
                    c
                } else {
                    -c
                }
            })
            .sum()
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        signed_volume(&self.cell_points(c)).abs()
    }

    /// Signed coboundary `D_k : C^k → C^{k+1}`.
    pub fn coboundary_matrix(&self, k: usize) -> Result<CsrMatrix> {
        if k >= self.dim {
            return Err(Error::DegreeOutOfRange { k, n: self.dim });
        }
        let rows = self.n_simplices(k + 1);
        let mut t = Vec::with_capacity(rows * (k + 2));
        for s in 0..rows {
            for (i, &f) in self.faces_of(k + 1, s).iter().enumerate() {
                t.push((s, f, if i % 2 == 0 { 1.0 } else { -1.0 }));
            }
        }
        CsrMatrix::from_triplets(rows, self.n_simplices(k), &t)
    }

    pub fn mesh_stats(&self) -> MeshStats {
        let mut h_max: f64 = 0.0;
        let mut h_min = f64::INFINITY;
        let mut shape = f64::INFINITY;
        let n = self.dim;
        for c in 0..self.n_cells() {
            let pts = self.cell_points(c);
            let diam = cell_diameter(&pts);
            let vol = signed_volume(&pts).abs();
            let surface: f64 = (0..=n)
                .map(|omit| {
                    let face: Vec<&[f64]> = pts
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != omit)
                        .map(|(_, p)| *p)
                        .collect();
                    simplex_measure(&face)
                })
                .sum();
            let inradius = n as f64 * vol / surface;
            h_max = h_max.max(diam);
            h_min = h_min.min(diam);
            shape = shape.min(2.0 * inradius / diam);
        }
        MeshStats {
            h_max,
            h_min,
            shape_constant: shape,
        }
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_volume(c)).sum()
    }

    /// Writes the text mesh format: `dim n_vertices n_cells`, one vertex per
    /// line, then one cell (ordered tuple) per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.dim, self.n_vertices(), self.n_cells())?;
        for v in 0..self.n_vertices() {
            let line: Vec<String> = self.vertex(v).iter().map(|x| format!("{x:?}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        for c in 0..self.n_cells() {
            let line: Vec<String> = self.cell(c).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let parse_err = |line: usize, msg: &str| Error::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (ln, header) = lines.next().ok_or_else(|| parse_err(0, "empty input"))?;
        let header = header?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(ln, "bad header"))?;
        if h.len() != 3 {
            return Err(parse_err(ln, "header must be `dim n_vertices n_cells`"));
        }
        let (dim, nv, nc) = (h[0], h[1], h[2]);
        let mut coords = Vec::with_capacity(nv * dim);
        for _ in 0..nv {
            let (ln, line) = lines.next().ok_or_else(|| parse_err(ln, "missing vertex line"))?;
            let line = line?;
            let xs: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_err(ln, "bad coordinate"))?;
            if xs.len() != dim {
                return Err(parse_err(ln, "wrong number of coordinates"));
            }
            coords.extend(xs);
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (ln, line) = lines.next().ok_or_else(|| parse_err(ln, "missing cell line"))?;
            let line = line?;
            let vs: Vec<usize> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_err(ln, "bad vertex index"))?;
            cells.push(vs);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(parse_err(ln, "trailing data"));
        }
        Self::build(dim, coords, cells)
    }
}

pub fn cell_diameter(pts: &[&[f64]]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(distance(pts[i], pts[j]));
        }
    }
    d
}

/// Convenience wrapper matching the module's construction entry point.
pub fn build_complex(dim: usize, vertices: Vec<f64>, cells: Vec<Vec<usize>>) -> Result<SimplicialComplex> {
    SimplicialComplex::build(dim, vertices, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> SimplicialComplex {
        build_complex(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![vec![0, 1, 2]]).unwrap()
    }

    fn crisscross_one() -> SimplicialComplex {
        build_complex(
            2,
            vec![-1.0, -1.0, 1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 0.0, 0.0],
            vec![vec![0, 1, 4], vec![1, 3, 4], vec![2, 3, 4], vec![0, 2, 4]],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_skeletons() {
        let t = triangle();
        assert_eq!((t.n_simplices(0), t.n_simplices(1), t.n_simplices(2)), (3, 3, 1));
        assert_eq!(t.simplex(1, 0), &[0, 1]);
        assert_eq!(t.simplex(1, 2), &[1, 2]);
        let d0 = t.coboundary_matrix(0).unwrap().to_dense();
        for row in &d0 {
            let mut nz: Vec<f64> = row.iter().copied().filter(|&v| v != 0.0).collect();
            nz.sort_by(f64::total_cmp);
            assert_eq!(nz, vec![-1.0, 1.0]);
        }
        assert_eq!(d0[0], vec![-1.0, 1.0, 0.0]);
    }

    #[test]
    fn crisscross_level_one_counts() {
        let c = crisscross_one();
        assert_eq!((c.n_simplices(0), c.n_simplices(1), c.n_simplices(2)), (5, 8, 4));
        let d1 = c.coboundary_matrix(1).unwrap();
        assert_eq!((d1.nrows(), d1.ncols(), d1.nnz()), (4, 8, 12));
        assert_eq!(c.euler_characteristic(), 1);
        let counts = c.facet_cell_counts();
        assert_eq!(counts.iter().filter(|&&n| n == 1).count(), 4);
        assert_eq!(counts.iter().filter(|&&n| n == 2).count(), 4);
    }

    #[test]
    fn d_squared_vanishes() {
        let c = crisscross_one();
        let prod = c
            .coboundary_matrix(1)
            .unwrap()
            .matmul(&c.coboundary_matrix(0).unwrap())
            .unwrap();
        assert_eq!(prod.nnz(), 0);
    }

    #[test]
    fn stats_of_unit_triangle() {
        let s = triangle().mesh_stats();
        assert!((s.h_max - 2f64.sqrt()).abs() < 1e-15);
        // inradius of the unit right triangle is 1 - 1/sqrt(2)
        let expect = 2.0 * (1.0 - 0.5f64.sqrt()) / 2f64.sqrt();
        assert!((s.shape_constant - expect).abs() < 1e-14);
    }

    #[test]
    fn construction_errors() {
        let v = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 2.0, 0.0];
        assert!(matches!(
            build_complex(2, v.clone(), vec![vec![0, 1, 3]]),
            Err(Error::DegenerateCell { .. }) | Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            build_complex(2, v[..6].to_vec(), vec![vec![0, 1, 7]]),
            Err(Error::IndexOutOfRange { index: 7, .. })
        ));
        assert!(matches!(
            build_complex(2, v[..6].to_vec(), vec![vec![0, 1, 2], vec![2, 1, 0]]),
            Err(Error::DuplicateCell { .. })
        ));
        assert!(matches!(
            build_complex(2, v[..6].to_vec(), vec![vec![0, 1, 1]]),
            Err(Error::DuplicateCell { .. })
        ));
        let collinear = vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        assert!(matches!(
            build_complex(2, collinear, vec![vec![0, 1, 2]]),
            Err(Error::DegenerateCell { cell: 0 })
        ));
        let fan = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, -1.0, 1.0, 1.0];
        assert!(matches!(
            build_complex(2, fan, vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]]),
            Err(Error::NonManifold { .. })
        ));
        assert!(matches!(
            build_complex(2, v[..6].to_vec(), vec![vec![0, 1, 2]]).and_then(|c| c.coboundary_matrix(2)),
            Err(Error::DegreeOutOfRange { k: 2, n: 2 })
        ));
    }

    #[test]
    fn text_round_trip() {
        let c = crisscross_one();
        let text = c.to_text();
        assert!(text.starts_with("2 5 4\n"));
        let back = SimplicialComplex::read_text(text.as_bytes()).unwrap();
        assert_eq!(back, c);
        assert!(SimplicialComplex::read_text("2 1 0\n0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn ordered_tuples_survive_build() {
        let c = build_complex(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![vec![2, 0, 1]]).unwrap();
        assert_eq!(c.cell(0), &[2, 0, 1]);
        assert_eq!(c.cell_sorted(0), &[0, 1, 2]);
    }

    #[test]
    fn boundary_mask_marks_hull() {
        let c = crisscross_one();
        let edges = c.boundary_mask(1);
        assert_eq!(edges.iter().filter(|&&b| b).count(), 4);
        let verts = c.boundary_mask(0);
        assert_eq!(verts, vec![true, true, true, true, false]);
    }
}
