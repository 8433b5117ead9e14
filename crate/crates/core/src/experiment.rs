//! Experiment cases, the table they produce and its csv/txt/md renderings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::forms::builtin;
use crate::lab::{consistency_error, crisscross_closed_form_wh, crisscross_exact_wh, crisscross_oracle_deviation};
use crate::mesh::{self, RefinementRule};
use crate::sparse::SolveOptions;

/// Default cap on the number of cells of a single mesh.
pub const DEFAULT_CELL_LIMIT: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Case {
    Table1,
    Table2,
    Table3,
    Table4,
    Table5,
    Oracle,
    Uniformity,
}

impl Case {
    pub const ALL: [Case; 7] = [
        Case::Table1,
        Case::Table2,
        Case::Table3,
        Case::Table4,
        Case::Table5,
        Case::Oracle,
        Case::Uniformity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Case::Table1 => "table1",
            Case::Table2 => "table2",
            Case::Table3 => "table3",
            Case::Table4 => "table4",
            Case::Table5 => "table5",
            Case::Oracle => "oracle",
            Case::Uniformity => "uniformity",
        }
    }

    pub fn first_level(self) -> usize {
        match self {
            Case::Table4 => 0,
            Case::Oracle => 2,
            _ => 1,
        }
    }

    pub fn default_max_level(self) -> usize {
        match self {
            Case::Table1 | Case::Table2 => 6,
            Case::Table3 | Case::Table5 => 4,
            Case::Table4 => 3,
            Case::Oracle => 5,
            Case::Uniformity => 3,
        }
    }

    pub fn form(self) -> Option<&'static str> {
        match self {
            Case::Table1 | Case::Table2 | Case::Oracle => Some("square1form"),
            Case::Table3 | Case::Table4 => Some("cube1form"),
            Case::Table5 => Some("cube2form"),
            Case::Uniformity => None,
        }
    }

    pub fn rule(self) -> Option<RefinementRule> {
        match self {
            Case::Table1 => Some(RefinementRule::RegularStandard2D),
            Case::Table2 | Case::Oracle => Some(RefinementRule::Crisscross2D),
            Case::Table3 | Case::Table5 => Some(RefinementRule::RegularRed3D),
            Case::Table4 => Some(RefinementRule::WhitneyStandard3D),
            Case::Uniformity => None,
        }
    }

    /// Cells of the mesh at `level`: 20·4^(L−1), 4^(L+1), 6·8^L or 6·8^(L+1).
    pub fn cells_at(self, level: usize) -> usize {
        let pow = |b: usize, e: usize| b.saturating_pow(e as u32);
        match self {
            Case::Table1 => 20usize.saturating_mul(pow(4, level.saturating_sub(1))),
            Case::Table2 => pow(4, level + 1),
            Case::Oracle => pow(4, level),
            Case::Table3 | Case::Table5 => 6usize.saturating_mul(pow(8, level)),
            Case::Table4 => 6usize.saturating_mul(pow(8, level + 1)),
            Case::Uniformity => 6usize.saturating_mul(pow(8, level)),
        }
    }

    /// The mesh used at `level`.
    pub fn mesh(self, level: usize) -> Result<SimplicialComplex> {
        match self {
            Case::Table1 => mesh::pwuniform2d(level),
            // 16 triangles at the first level
            Case::Table2 => mesh::crisscross(level + 1),
            Case::Oracle => mesh::crisscross(level),
            Case::Table3 | Case::Table5 => {
                mesh::refine_n(&mesh::cube_six_tet(), RefinementRule::RegularRed3D, level)
            }
            Case::Table4 => {
                mesh::refine_n(&mesh::cube_six_tet(), RefinementRule::WhitneyStandard3D, level + 1)
            }
            Case::Uniformity => mesh::refine_n(&mesh::cube_six_tet(), RefinementRule::RegularRed3D, level),
        }
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Case::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCase(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub level: usize,
    pub h: f64,
    pub cells: usize,
    pub error: f64,
    pub order: Option<f64>,
    pub a_h: Option<f64>,
    pub dist: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentTable {
    pub case: Case,
    pub rule: Option<RefinementRule>,
    pub form: Option<&'static str>,
    pub tol: f64,
    pub rows: Vec<Row>,
    /// Free-form result lines (oracle and uniformity verdicts).
    pub notes: Vec<String>,
    /// Wall time per row in seconds.
    pub timings: Vec<f64>,
}

impl ExperimentTable {
    pub fn new(case: Case, tol: f64) -> Self {
        Self {
            case,
            rule: case.rule(),
            form: case.form(),
            tol,
            rows: Vec::new(),
            notes: Vec::new(),
            timings: Vec::new(),
        }
    }

    fn push(&mut self, mut row: Row, seconds: f64) {
        row.order = self.rows.last().map(|prev| (prev.error / row.error).log2());
        self.rows.push(row);
        self.timings.push(seconds);
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub max_level: Option<usize>,
    pub solve: SolveOptions,
    pub cell_limit: usize,
    /// Directory for dumping every mesh in the text format.
    pub mesh_out: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_level: None,
            solve: SolveOptions::default(),
            cell_limit: DEFAULT_CELL_LIMIT,
            mesh_out: None,
        }
    }
}

fn dump_mesh(opts: &RunOptions, name: &str, c: &SimplicialComplex) -> Result<()> {
    if let Some(dir) = &opts.mesh_out {
        fs::create_dir_all(dir)?;
        let f = fs::File::create(dir.join(format!("{name}.mesh")))?;
        c.write_text(std::io::BufWriter::new(f))?;
    }
    Ok(())
}

/// Runs every level of `case` up to the requested maximum.
pub fn run_case(case: Case, opts: &RunOptions) -> Result<ExperimentTable> {
    let max_level = opts.max_level.unwrap_or(case.default_max_level());
    let mut table = ExperimentTable::new(case, opts.solve.rel_tol);
    for level in case.first_level()..=max_level {
        let cells = case.cells_at(level);
        if cells > opts.cell_limit {
            return Err(Error::ResourceGuard {
                level,
                cells,
                limit: opts.cell_limit,
            });
        }
    }
    match case {
        Case::Oracle => run_oracle(&mut table, max_level, opts)?,
        Case::Uniformity => run_uniformity(&mut table, max_level, opts)?,
        _ => {
            let u = builtin(case.form().expect("tables have a form"))?;
            for level in case.first_level()..=max_level {
                let start = Instant::now();
                let c = case.mesh(level)?;
                dump_mesh(opts, &format!("{}_level{level}", case.name()), &c)?;
                let r = consistency_error(&c, &u, opts.solve)?;
                table.push(
                    Row {
                        level,
                        h: r.h,
                        cells: r.cell_count,
                        error: r.error,
                        order: None,
                        a_h: Some(r.a_h),
                        dist: Some(r.dist),
                    },
                    start.elapsed().as_secs_f64(),
                );
            }
        }
    }
    Ok(table)
}

fn run_oracle(table: &mut ExperimentTable, max_level: usize, opts: &RunOptions) -> Result<()> {
    for m in Case::Oracle.first_level()..=max_level {
        let start = Instant::now();
        let c = mesh::crisscross(m)?;
        dump_mesh(opts, &format!("oracle_level{m}"), &c)?;
        let stated = crisscross_oracle_deviation(m, crisscross_closed_form_wh, opts.solve)?;
        let exact = crisscross_oracle_deviation(m, crisscross_exact_wh, opts.solve)?;
        table.rows.push(Row {
            level: m,
            h: stated.h,
            cells: c.n_cells(),
            error: stated.max(),
            order: None,
            a_h: None,
            dist: None,
        });
        table.timings.push(start.elapsed().as_secs_f64());
        let verdict = |d: f64| if d <= 1e-8 { "pass" } else { "FAIL" };
        table.notes.push(format!(
            "h={}: stated formula max dev {} ({}), columns x=±(1-h/2) {}, elsewhere {}; exact formula max dev {} ({})",
            stated.h,
            sci(stated.max()),
            verdict(stated.max()),
            sci(stated.near_boundary),
            sci(stated.elsewhere),
            sci(exact.max()),
            verdict(exact.max())
        ));
    }
    Ok(())
}

fn run_uniformity(table: &mut ExperimentTable, max_level: usize, opts: &RunOptions) -> Result<()> {
    let axes = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    let diagonals = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
    let mut red = mesh::cube_six_tet();
    let mut std3 = mesh::cube_six_tet();
    for level in 1..=max_level {
        red = mesh::refine(&red, RefinementRule::RegularRed3D)?;
        dump_mesh(opts, &format!("uniformity_red_level{level}"), &red)?;
        let r = mesh::check_uniform(&red, &axes)?;
        table.notes.push(format!(
            "regular red level {level} ({} cells), axes: cond1 {} cond2 {} -> {}",
            red.n_cells(),
            r.cond1_ok,
            r.cond2_ok,
            if r.is_uniform() { "uniform" } else { "not uniform" }
        ));
        let c = mesh::crisscross(level + 1)?;
        let r = mesh::check_uniform(&c, &diagonals)?;
        table.notes.push(format!(
            "crisscross m={} ({} cells), diagonals: cond1 {} cond2 {}",
            level + 1,
            c.n_cells(),
            r.cond1_ok,
            r.cond2_ok
        ));
        if level <= 2 {
            std3 = mesh::refine(&std3, RefinementRule::WhitneyStandard3D)?;
            let found = mesh::find_uniform_directions(&std3);
            table.notes.push(format!(
                "standard 3D level {level} ({} cells), all edge-direction triples: {}",
                std3.n_cells(),
                match found {
                    Some(r) => format!("uniform for {:?}", r.directions),
                    None => "not uniform".to_string(),
                }
            ));
        }
    }
    Ok(())
}

/// `1.23e-04` style with a signed two-digit exponent.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.2e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

fn opt_sci(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

fn order_str(x: Option<f64>) -> String {
    x.map(|o| format!("{o:.2}")).unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Txt,
    Md,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Txt => "txt",
            Format::Md => "md",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "txt" => Ok(Format::Txt),
            "md" => Ok(Format::Md),
            other => Err(Error::ShapeMismatch(format!("unknown format `{other}` (csv, txt, md)"))),
        }
    }
}

pub const CSV_HEADER: &str = "level,h,cells,error,order,a_h,dist";

pub fn to_csv(t: &ExperimentTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let full = |x: Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
    for r in &t.rows {
        let _ = writeln!(
            out,
            "{},{:?},{},{:?},{},{},{}",
            r.level,
            r.h,
            r.cells,
            r.error,
            full(r.order),
            full(r.a_h),
            full(r.dist)
        );
    }
    out
}

fn describe(t: &ExperimentTable) -> String {
    let mut parts = vec![format!("case {}", t.case.name())];
    if let Some(r) = t.rule {
        parts.push(format!("rule {r}"));
    }
    if let Some(f) = t.form {
        parts.push(format!("form {f}"));
    }
    parts.push(format!("cg rel_tol {:e}", t.tol));
    parts.join(", ")
}

const COLUMNS: [&str; 7] = ["level", "h", "cells", "error", "order", "A_h", "dist"];

fn cells_of(r: &Row) -> [String; 7] {
    [
        r.level.to_string(),
        sci(r.h),
        r.cells.to_string(),
        sci(r.error),
        order_str(r.order),
        opt_sci(r.a_h),
        opt_sci(r.dist),
    ]
}

pub fn to_markdown(t: &ExperimentTable) -> String {
    let mut out = format!("{}\n\n", describe(t));
    out.push_str(&format!("| {} |\n", COLUMNS.join(" | ")));
    out.push_str(&format!("|{}|\n", vec!["---:"; COLUMNS.len()].join("|")));
    for r in &t.rows {
        out.push_str(&format!("| {} |\n", cells_of(r).join(" | ")));
    }
    if !t.notes.is_empty() {
        out.push('\n');
        for n in &t.notes {
            out.push_str(&format!("- {n}\n"));
        }
    }
    out
}

pub fn to_text(t: &ExperimentTable) -> String {
    let body: Vec<[String; 7]> = t.rows.iter().map(cells_of).collect();
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|i| body.iter().map(|r| r[i].len()).chain([COLUMNS[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = format!("# {}\n", describe(t));
    if !t.rows.is_empty() {
        let head: Vec<String> = COLUMNS.iter().map(|c| c.to_string()).collect();
        out.push_str(&line(&head));
        out.push('\n');
        for (r, secs) in body.iter().zip(&t.timings) {
            out.push_str(&line(r));
            out.push_str(&format!("  # {secs:.2}s\n"));
        }
    }
    for n in &t.notes {
        out.push_str(&format!("# {n}\n"));
    }
    out
}

pub fn render(t: &ExperimentTable, format: Format) -> String {
    match format {
        Format::Csv => to_csv(t),
        Format::Txt => to_text(t),
        Format::Md => to_markdown(t),
    }
}

/// Writes `<dir>/<case>.<ext>` and returns the path.
pub fn emit(t: &ExperimentTable, format: Format, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.{}", t.case.name(), format.extension()));
    fs::write(&path, render(t, format))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_formatting() {
        assert_eq!(sci(0.5), "5.00e-01");
        assert_eq!(sci(1.15), "1.15e+00");
        assert_eq!(sci(196608.0), "1.97e+05");
        assert_eq!(sci(0.0), "0.00e+00");
        assert_eq!(order_str(Some(-0.38)), "-0.38");
        assert_eq!(order_str(Some(-0.001)), "-0.00");
        assert_eq!(order_str(Some(0.8)), "0.80");
        assert_eq!(order_str(None), "");
    }

    #[test]
    fn empty_table_is_header_only_csv() {
        let t = ExperimentTable::new(Case::Table2, 1e-10);
        assert_eq!(to_csv(&t), "level,h,cells,error,order,a_h,dist\n");
    }

    #[test]
    fn cell_counts_match_meshes() {
        for case in [Case::Table1, Case::Table2, Case::Table3, Case::Table4] {
            for level in case.first_level()..case.first_level() + 2 {
                assert_eq!(case.mesh(level).unwrap().n_cells(), case.cells_at(level), "{case:?}");
            }
        }
        assert_eq!(Case::Table3.cells_at(6), 1_572_864);
    }

    #[test]
    fn resource_guard() {
        let opts = RunOptions {
            max_level: Some(6),
            ..RunOptions::default()
        };
        assert!(matches!(
            run_case(Case::Table3, &opts),
            Err(Error::ResourceGuard { level: 6, .. })
        ));
    }

    #[test]
    fn orders_and_names() {
        let mut t = ExperimentTable::new(Case::Table2, 1e-10);
        let row = |e| Row {
            level: 1,
            h: 1.0,
            cells: 16,
            error: e,
            order: None,
            a_h: None,
            dist: None,
        };
        t.push(row(2.0), 0.0);
        t.push(row(1.0), 0.0);
        assert_eq!(t.rows[0].order, None);
        assert_eq!(t.rows[1].order, Some(1.0));
        for c in Case::ALL {
            assert_eq!(c.name().parse::<Case>().unwrap(), c);
        }
        assert!("table9".parse::<Case>().is_err());
        assert!("xml".parse::<Format>().is_err());
    }
}
