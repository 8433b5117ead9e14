//! Mesh sequences on the square and the cube, midpoint refinement rules and a
//! checker for uniform triangulations.
//!
//! Cells keep the vertex order they were created with. The regular rules
//! subdivide in that stored order (so red refinement keeps Kuhn paths
//! intact); the Whitney rules subdivide in increasing global index order and
//! are therefore sensitive to vertex numbering. Midpoints are numbered after
//! the existing vertices, in edge-skeleton order.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::geometry::{combinations, det};

const SNAP: f64 = (1u64 << 40) as f64;

fn snap(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v * SNAP).round() as i64).collect()
}

/// Deduplicates vertices by exact comparison on a 2⁻⁴⁰ grid.
#[derive(Debug, Default)]
pub struct VertexPool {
    dim: usize,
    coords: Vec<f64>,
    index: HashMap<Vec<i64>, usize>,
}

impl VertexPool {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn insert(&mut self, x: &[f64]) -> usize {
        let key = snap(x);
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.coords.len() / self.dim;
        self.coords.extend_from_slice(x);
        self.index.insert(key, i);
        i
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RefinementRule {
    Crisscross2D,
    RegularStandard2D,
    WhitneyStandard2D,
    RegularRed3D,
    WhitneyStandard3D,
}

impl RefinementRule {
    pub const ALL: [RefinementRule; 5] = [
        Self::Crisscross2D,
        Self::RegularStandard2D,
        Self::WhitneyStandard2D,
        Self::RegularRed3D,
        Self::WhitneyStandard3D,
    ];

    pub fn dim(self) -> usize {
        match self {
            Self::Crisscross2D | Self::RegularStandard2D | Self::WhitneyStandard2D => 2,
            Self::RegularRed3D | Self::WhitneyStandard3D => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Crisscross2D => "Crisscross2D",
            Self::RegularStandard2D => "RegularStandard2D",
            Self::WhitneyStandard2D => "WhitneyStandard2D",
            Self::RegularRed3D => "RegularRed3D",
            Self::WhitneyStandard3D => "WhitneyStandard3D",
        }
    }

    /// Whether the rule subdivides in increasing global vertex order rather
    /// than in the stored cell order.
    fn uses_sorted_order(self) -> bool {
        matches!(
            self,
            Self::Crisscross2D | Self::WhitneyStandard2D | Self::WhitneyStandard3D
        )
    }
}

impl fmt::Display for RefinementRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RefinementRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownGenerator(s.to_string()))
    }
}

// Children in terms of local slots: 0..=n are the parent vertices, n+1.. are
// midpoints in combination order (01, 02, 12 in 2D; 01, 02, 03, 12, 13, 23 in 3D).
const V: [usize; 4] = [0, 1, 2, 3];
const M2: [[usize; 3]; 3] = [[0, 3, 4], [3, 0, 5], [4, 5, 0]];

fn m2(i: usize, j: usize) -> usize {
    M2[i][j]
}

fn m3(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    4 + match (a, b) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => unreachable!("distinct local vertices"),
    }
}

fn children(rule: RefinementRule) -> Vec<Vec<usize>> {
    match rule {
        RefinementRule::RegularStandard2D => vec![
            vec![V[0], m2(0, 1), m2(0, 2)],
            vec![m2(0, 1), V[1], m2(1, 2)],
            vec![m2(0, 2), m2(1, 2), V[2]],
            vec![m2(0, 1), m2(1, 2), m2(0, 2)],
        ],
        RefinementRule::Crisscross2D | RefinementRule::WhitneyStandard2D => vec![
            vec![V[0], m2(0, 1), m2(0, 2)],
            vec![m2(0, 1), V[1], m2(1, 2)],
            vec![m2(0, 1), m2(1, 2), V[2]],
            vec![m2(0, 1), m2(0, 2), V[2]],
        ],
        // Bey's ordering; every interior child contains the m02–m13 diagonal
        RefinementRule::RegularRed3D => vec![
            vec![V[0], m3(0, 1), m3(0, 2), m3(0, 3)],
            vec![m3(0, 1), V[1], m3(1, 2), m3(1, 3)],
            vec![m3(0, 2), m3(1, 2), V[2], m3(2, 3)],
            vec![m3(0, 3), m3(1, 3), m3(2, 3), V[3]],
            vec![m3(0, 1), m3(0, 2), m3(0, 3), m3(1, 3)],
            vec![m3(0, 1), m3(0, 2), m3(1, 2), m3(1, 3)],
            vec![m3(0, 2), m3(0, 3), m3(1, 3), m3(2, 3)],
            vec![m3(0, 2), m3(1, 2), m3(1, 3), m3(2, 3)],
        ],
        // octahedron split around m01–m23; equator cycle m02, m03, m13, m12
        RefinementRule::WhitneyStandard3D => vec![
            vec![V[0], m3(0, 1), m3(0, 2), m3(0, 3)],
            vec![m3(0, 1), V[1], m3(1, 2), m3(1, 3)],
            vec![m3(0, 2), m3(1, 2), V[2], m3(2, 3)],
            vec![m3(0, 3), m3(1, 3), m3(2, 3), V[3]],
            vec![m3(0, 1), m3(0, 2), m3(0, 3), m3(2, 3)],
            vec![m3(0, 1), m3(0, 3), m3(1, 3), m3(2, 3)],
            vec![m3(0, 1), m3(1, 2), m3(1, 3), m3(2, 3)],
            vec![m3(0, 1), m3(0, 2), m3(1, 2), m3(2, 3)],
        ],
    }
}

/// One level of midpoint refinement.
pub fn refine(complex: &SimplicialComplex, rule: RefinementRule) -> Result<SimplicialComplex> {
    let n = complex.dim();
    if rule.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: rule.dim(),
            found: n,
        });
    }
    let nv = complex.n_vertices();
    let mut coords = complex.coords().to_vec();
    for e in complex.simplices(1) {
        let (a, b) = (complex.vertex(e[0]), complex.vertex(e[1]));
        coords.extend(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)));
    }
    let pattern = children(rule);
    let local_edges = combinations(n + 1, 2);
    let mut cells = Vec::with_capacity(complex.n_cells() * pattern.len());
    for c in 0..complex.n_cells() {
        let order: Vec<usize> = if rule.uses_sorted_order() {
            complex.cell_sorted(c).to_vec()
        } else {
            complex.cell(c).to_vec()
        };
        let mut slots = order.clone();
        for e in &local_edges {
            let edge = complex
                .find_simplex(&[order[e[0]], order[e[1]]])
                .expect("cell edges are in the skeleton");
            slots.push(nv + edge);
        }
        for child in &pattern {
            let mut cell: Vec<usize> = child.iter().map(|&s| slots[s]).collect();
            if rule.uses_sorted_order() {
                cell.sort_unstable();
            }
            cells.push(cell);
        }
    }
    SimplicialComplex::build(n, coords, cells)
}

/// Applies `rule` `levels` times.
pub fn refine_n(complex: &SimplicialComplex, rule: RefinementRule, levels: usize) -> Result<SimplicialComplex> {
    let mut c = complex.clone();
    for _ in 0..levels {
        c = refine(&c, rule)?;
    }
    Ok(c)
}

/// Crisscross mesh of (−1,1)²: 4^(m−1) subsquares of side 4/2^m, each cut by
/// both diagonals. Subsquare corners are numbered before centers.
pub fn crisscross(m: usize) -> Result<SimplicialComplex> {
    if m == 0 {
        return Err(Error::ShapeMismatch("crisscross level starts at 1".into()));
    }
    let k = 1usize << (m - 1);
    let s = 2.0 / k as f64;
    let mut coords = Vec::with_capacity(2 * ((k + 1) * (k + 1) + k * k));
    for iy in 0..=k {
        for ix in 0..=k {
            coords.extend([-1.0 + s * ix as f64, -1.0 + s * iy as f64]);
        }
    }
    for jy in 0..k {
        for jx in 0..k {
            coords.extend([-1.0 + s * (jx as f64 + 0.5), -1.0 + s * (jy as f64 + 0.5)]);
        }
    }
    let corner = |ix: usize, iy: usize| iy * (k + 1) + ix;
    let mut cells = Vec::with_capacity(4 * k * k);
    for jy in 0..k {
        for jx in 0..k {
            let z = (k + 1) * (k + 1) + jy * k + jx;
            let a = corner(jx, jy);
            let b = corner(jx + 1, jy);
            let c = corner(jx + 1, jy + 1);
            let d = corner(jx, jy + 1);
            for (p, q) in [(a, b), (b, c), (d, c), (a, d)] {
                cells.push(vec![p, q, z]);
            }
        }
    }
    SimplicialComplex::build(2, coords, cells)
}

/// (−1,1)³ split into the six Kuhn tetrahedra around the main diagonal.
/// Vertex `x + 2y + 4z` (bits) so that every Kuhn path increases in index.
pub fn cube_six_tet() -> SimplicialComplex {
    kuhn_grid(3, 1).expect("valid grid")
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Kuhn (Freudenthal) triangulation of (−1,1)^dim with `n` cubes per side.
/// Every cube is split into dim! simplices along its main diagonal.
pub fn kuhn_grid(dim: usize, n: usize) -> Result<SimplicialComplex> {
    if !(2..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if n == 0 {
        return Err(Error::ShapeMismatch("grid needs at least one cube per side".into()));
    }
    let h = 2.0 / n as f64;
    let np = n + 1;
    let total = np.pow(dim as u32);
    let mut coords = Vec::with_capacity(total * dim);
    for idx in 0..total {
        let mut r = idx;
        for _ in 0..dim {
            coords.push(-1.0 + h * (r % np) as f64);
            r /= np;
        }
    }
    let stride: Vec<usize> = (0..dim).map(|d| np.pow(d as u32)).collect();
    let perms = permutations(dim);
    let mut cells = Vec::new();
    for cube in 0..n.pow(dim as u32) {
        let mut r = cube;
        let mut base = 0;
        for s in &stride {
            base += (r % n) * s;
            r /= n;
        }
        for p in &perms {
            let mut v = base;
            let mut cell = vec![v];
            for &axis in p {
                v += stride[axis];
                cell.push(v);
            }
            cells.push(cell);
        }
    }
    SimplicialComplex::build(dim, coords, cells)
}

const PWUNIFORM_FIXTURE: &str = include_str!("../data/pwuniform20.mesh");

/// The shipped 20-triangle unstructured triangulation of (−1,1)².
pub fn pwuniform_base() -> SimplicialComplex {
    SimplicialComplex::read_text(PWUNIFORM_FIXTURE.as_bytes()).expect("bundled fixture is valid")
}

/// Piecewise uniform sequence: the fixture refined `level − 1` times by
/// regular standard subdivision.
pub fn pwuniform2d(level: usize) -> Result<SimplicialComplex> {
    if level == 0 {
        return Err(Error::ShapeMismatch("pwuniform2d level starts at 1".into()));
    }
    refine_n(&pwuniform_base(), RefinementRule::RegularStandard2D, level - 1)
}

/// Cells (and the vertices they use) that satisfy `keep`, reindexed.
pub fn restrict<F>(complex: &SimplicialComplex, keep: F) -> Result<SimplicialComplex>
where
    F: Fn(usize) -> bool,
{
    let mut map = HashMap::new();
    let mut coords = Vec::new();
    let mut cells = Vec::new();
    for c in (0..complex.n_cells()).filter(|&c| keep(c)) {
        let cell = complex
            .cell(c)
            .iter()
            .map(|&v| {
                *map.entry(v).or_insert_with(|| {
                    coords.extend_from_slice(complex.vertex(v));
                    coords.len() / complex.dim() - 1
                })
            })
            .collect();
        cells.push(cell);
    }
    SimplicialComplex::build(complex.dim(), coords, cells)
}

pub fn centroid(complex: &SimplicialComplex, cell: usize) -> Vec<f64> {
    let pts = complex.cell_points(cell);
    let w = 1.0 / pts.len() as f64;
    (0..complex.dim())
        .map(|i| pts.iter().map(|p| p[i]).sum::<f64>() * w)
        .collect()
}

/// Outcome of testing the uniform-triangulation conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformityReport {
    pub directions: Vec<Vec<f64>>,
    /// Every cell has an edge parallel to each direction.
    pub cond1_ok: bool,
    /// Every edge patch around an interior edge parallel to a direction is
    /// symmetric under reflection through the edge midpoint.
    pub cond2_ok: bool,
    pub witness: Option<String>,
}

impl UniformityReport {
    pub fn is_uniform(&self) -> bool {
        self.cond1_ok && self.cond2_ok
    }
}

fn parallel(a: &[f64], b: &[f64]) -> bool {
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cross2: f64 = if a.len() == 2 {
        (a[0] * b[1] - a[1] * b[0]).powi(2)
    } else {
        (a[1] * b[2] - a[2] * b[1]).powi(2)
            + (a[2] * b[0] - a[0] * b[2]).powi(2)
            + (a[0] * b[1] - a[1] * b[0]).powi(2)
    };
    cross2.sqrt() <= 1e-12 * na * nb
}

fn edge_vector(complex: &SimplicialComplex, e: usize) -> Vec<f64> {
    let v = complex.simplex(1, e);
    let (a, b) = (complex.vertex(v[0]), complex.vertex(v[1]));
    b.iter().zip(a).map(|(x, y)| x - y).collect()
}

fn cell_key(complex: &SimplicialComplex, cell: usize, map: impl Fn(&[f64]) -> Vec<f64>) -> Vec<Vec<i64>> {
    let mut k: Vec<Vec<i64>> = complex.cell_points(cell).iter().map(|p| snap(&map(p))).collect();
    k.sort();
    k
}

/// Tests both conditions of the uniform-triangulation definition for the
/// given `n` directions.
pub fn check_uniform(complex: &SimplicialComplex, directions: &[Vec<f64>]) -> Result<UniformityReport> {
    let n = complex.dim();
    if directions.len() != n || directions.iter().any(|d| d.len() != n) {
        return Err(Error::ShapeMismatch(format!("need {n} direction vectors of length {n}")));
    }
    let scale: f64 = directions
        .iter()
        .map(|d| d.iter().map(|x| x * x).sum::<f64>().sqrt())
        .product();
    if det(directions).abs() <= 1e-12 * scale {
        return Err(Error::DependentDirections);
    }
    let n_edges = complex.n_simplices(1);
    let edge_dir: Vec<Option<usize>> = (0..n_edges)
        .map(|e| {
            let v = edge_vector(complex, e);
            directions.iter().position(|d| parallel(&v, d))
        })
        .collect();

    let mut witness = None;
    let mut cond1_ok = true;
    'cells: for c in 0..complex.n_cells() {
        let edges = complex.cell_faces(1, c);
        for j in 0..n {
            if !edges.iter().any(|&e| edge_dir[e] == Some(j)) {
                cond1_ok = false;
                witness = Some(format!("cell {c} has no edge parallel to direction {j}"));
                break 'cells;
            }
        }
    }

    let mut patches: Vec<Vec<usize>> = vec![Vec::new(); n_edges];
    for c in 0..complex.n_cells() {
        for &e in complex.cell_faces(1, c) {
            patches[e].push(c);
        }
    }
    let boundary = complex.boundary_mask(1);
    let mut cond2_ok = true;
    for e in 0..n_edges {
        if boundary[e] || edge_dir[e].is_none() {
            continue;
        }
        let v = complex.simplex(1, e);
        let mid: Vec<f64> = complex
            .vertex(v[0])
            .iter()
            .zip(complex.vertex(v[1]))
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let original: HashSet<Vec<Vec<i64>>> =
            patches[e].iter().map(|&c| cell_key(complex, c, |p| p.to_vec())).collect();
        let reflected: HashSet<Vec<Vec<i64>>> = patches[e]
            .iter()
            .map(|&c| cell_key(complex, c, |p| p.iter().zip(&mid).map(|(x, m)| 2.0 * m - x).collect()))
            .collect();
        if original != reflected {
            cond2_ok = false;
            if witness.is_none() {
                witness = Some(format!("patch of edge {v:?} is not point symmetric"));
            }
            break;
        }
    }
    Ok(UniformityReport {
        directions: directions.to_vec(),
        cond1_ok,
        cond2_ok,
        witness,
    })
}

/// Distinct edge directions of a mesh, normalised up to sign.
pub fn edge_directions(complex: &SimplicialComplex) -> Vec<Vec<f64>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for e in 0..complex.n_simplices(1) {
        let v = edge_vector(complex, e);
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut u: Vec<f64> = v.iter().map(|x| x / len).collect();
        if let Some(first) = u.iter().find(|x| x.abs() > 1e-9) {
            if *first < 0.0 {
                u.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let key: Vec<i64> = u.iter().map(|x| (x * 1e9).round() as i64).collect();
        if seen.insert(key) {
            out.push(u);
        }
    }
    out
}

/// Whether some choice of `n` independent edge directions makes the mesh
/// uniform. Returns the first passing report.
pub fn find_uniform_directions(complex: &SimplicialComplex) -> Option<UniformityReport> {
    let dirs = edge_directions(complex);
    let n = complex.dim();
    for combo in combinations(dirs.len(), n) {
        let pick: Vec<Vec<f64>> = combo.iter().map(|&i| dirs[i].clone()).collect();
        match check_uniform(complex, &pick) {
            Ok(r) if r.is_uniform() => return Some(r),
            _ => {}
        }
    }
    None
}

/// Generators exposed by name.
pub const GENERATOR_NAMES: [&str; 3] = ["crisscross", "pwuniform2d", "cube6"];

/// `crisscross` at level m, `pwuniform2d` at level L, or `cube6` refined
/// `level` times by `rule` (default RegularRed3D).
pub fn generate(name: &str, level: usize, rule: Option<RefinementRule>) -> Result<SimplicialComplex> {
    match name {
        "crisscross" => crisscross(level),
        "pwuniform2d" => pwuniform2d(level),
        "cube6" => refine_n(&cube_six_tet(), rule.unwrap_or(RefinementRule::RegularRed3D), level),
        other => Err(Error::UnknownGenerator(other.to_string())),
    }
}
