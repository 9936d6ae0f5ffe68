//! CSV writers and readers for trajectories, kernel tables, and cumulant
//! tables, plus the comparison report between two trajectory files.
//!
//! Floats are written with 17 significant digits so that a value read back
//! is bit-identical to the one written; two runs of the same scenario
//! therefore produce byte-identical files.

use std::fs;
use std::io;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

/// Render one float with enough digits to round-trip exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Trajectory table: one row per time, one (re, im) column pair per matrix
/// element in row-major order.
pub fn trajectory_csv(times: &[f64], matrices: &[Array2<Complex64>]) -> String {
    assert_eq!(times.len(), matrices.len());
    let d = matrices.first().map_or(0, |m| m.nrows());
    let mut out = String::from("t");
    for m in 0..d {
        for n in 0..d {
            out.push_str(&format!(",re_rho_{m}_{n},im_rho_{m}_{n}"));
        }
    }
    out.push('\n');
    for (t, matrix) in times.iter().zip(matrices) {
        out.push_str(&format_float(*t));
        for m in 0..d {
            for n in 0..d {
                let v = matrix[(m, n)];
                out.push(',');
                out.push_str(&format_float(v.re));
                out.push(',');
                out.push_str(&format_float(v.im));
            }
        }
        out.push('\n');
    }
    out
}

/// One row of the kernel table: the running kernel integrals, the bath
/// coordinate mean, and the three integrated functionals.
#[derive(Debug)]
pub struct KernelRow {
    pub t: f64,
    pub sym_integral: f64,
    pub antisym_integral: f64,
    pub mean: f64,
    pub damping: f64,
    pub backaction: f64,
    pub displacement: f64,
}

pub fn kernels_csv(rows: &[KernelRow]) -> String {
    let mut out = String::from("t,s_integral,a_integral,mean_xi,lambda,phi,psi\n");
    for row in rows {
        let fields = [
            row.t,
            row.sym_integral,
            row.antisym_integral,
            row.mean,
            row.damping,
            row.backaction,
            row.displacement,
        ];
        let rendered: Vec<String> = fields.iter().map(|v| format_float(*v)).collect();
        out.push_str(&rendered.join(","));
        out.push('\n');
    }
    out
}

/// Cumulant table: per-order contributions to the log coherence of one
/// matrix element, next to the exact log and the second-order resummation.
pub fn cumulants_csv(
    times: &[f64],
    orders: usize,
    rows: &[(Vec<Complex64>, Complex64, Complex64)],
) -> String {
    assert_eq!(times.len(), rows.len());
    let mut out = String::from("t");
    for order in 1..=orders {
        out.push_str(&format!(",re_order_{order},im_order_{order}"));
    }
    out.push_str(",re_exact_log,im_exact_log,re_tcl2_log,im_tcl2_log\n");
    for (t, (contributions, exact_log, tcl2_log)) in times.iter().zip(rows) {
        out.push_str(&format_float(*t));
        for value in contributions.iter().chain([exact_log, tcl2_log]) {
            out.push(',');
            out.push_str(&format_float(value.re));
            out.push(',');
            out.push_str(&format_float(value.im));
        }
        out.push('\n');
    }
    out
}

/// Write via a sibling temp file and rename, so a crash mid-write never
/// leaves a truncated file at the target path.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// A trajectory file read back: header labels (past `t`), the time column,
/// and one value column per label.
#[derive(Debug)]
pub struct TrajectoryTable {
    pub header: Vec<String>,
    pub times: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
}

pub fn read_trajectory(path: &Path) -> Result<TrajectoryTable, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| format!("{}: empty file", path.display()))?;
    let mut header: Vec<String> = header_line.split(',').map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err(format!("{}: first column must be t", path.display()));
    }
    header.remove(0);
    let mut times = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (row, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() + 1 {
            return Err(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                row + 1,
                fields.len(),
                header.len() + 1
            ));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| format!("{}: row {}: bad number {s:?}: {e}", path.display(), row + 1))
        };
        times.push(parse(fields[0])?);
        for (column, field) in columns.iter_mut().zip(&fields[1..]) {
            column.push(parse(field)?);
        }
    }
    Ok(TrajectoryTable {
        header,
        times,
        columns,
    })
}

#[derive(Debug)]
pub struct ElementDeviation {
    /// Matrix element label, e.g. "0_1".
    pub label: String,
    pub max: f64,
    pub time: f64,
}

#[derive(Debug)]
pub struct Comparison {
    pub per_element: Vec<ElementDeviation>,
    pub max: f64,
    pub max_element: String,
    pub max_time: f64,
    pub rows: usize,
    pub pass: bool,
    pub threshold: f64,
}

/// Compare two trajectory tables element-wise. The headers must agree and
/// the time grids must be exactly equal; deviations are absolute values of
/// complex differences.
pub fn compare_tables(
    a: &TrajectoryTable,
    b: &TrajectoryTable,
    threshold: f64,
) -> Result<Comparison, String> {
    if a.header != b.header {
        return Err("headers differ; the files describe different systems".to_string());
    }
    if a.times.len() != b.times.len() {
        return Err(format!(
            "row counts differ: {} vs {}",
            a.times.len(),
            b.times.len()
        ));
    }
    for (i, (ta, tb)) in a.times.iter().zip(&b.times).enumerate() {
        if ta != tb {
            return Err(format!("time grids differ at row {i}: {ta} vs {tb}"));
        }
    }
    // Columns come in re/im pairs per matrix element.
    let mut per_element = Vec::new();
    let mut max = 0.0_f64;
    let mut max_element = String::new();
    let mut max_time = 0.0;
    for pair in 0..a.header.len() / 2 {
        let re = 2 * pair;
        let im = re + 1;
        let label = a.header[re]
            .strip_prefix("re_rho_")
            .unwrap_or(&a.header[re])
            .to_string();
        let mut element_max = 0.0_f64;
        let mut element_time = 0.0;
        for (row, t) in a.times.iter().enumerate() {
            let dv = Complex64::new(
                a.columns[re][row] - b.columns[re][row],
                a.columns[im][row] - b.columns[im][row],
            )
            .norm();
            if dv > element_max {
                element_max = dv;
                element_time = *t;
            }
        }
        if element_max > max {
            max = element_max;
            max_element = label.clone();
            max_time = element_time;
        }
        per_element.push(ElementDeviation {
            label,
            max: element_max,
            time: element_time,
        });
    }
    Ok(Comparison {
        per_element,
        max,
        max_element,
        max_time,
        rows: a.times.len(),
        pass: max <= threshold,
        threshold,
    })
}

/// Human-readable report. The last line is always `pass: true` or
/// `pass: false` so scripts can key off it.
pub fn comparison_report(file_a: &str, file_b: &str, cmp: &Comparison) -> String {
    let mut out = String::new();
    out.push_str(&format!("file_a: {file_a}\n"));
    out.push_str(&format!("file_b: {file_b}\n"));
    out.push_str(&format!("rows: {}\n", cmp.rows));
    out.push_str(&format!("threshold: {:e}\n", cmp.threshold));
    for element in &cmp.per_element {
        out.push_str(&format!(
            "element {}: max_deviation {:e} at t = {}\n",
            element.label, element.max, element.time
        ));
    }
    out.push_str(&format!(
        "max_deviation: {:e} (element {} at t = {})\n",
        cmp.max, cmp.max_element, cmp.max_time
    ));
    out.push_str(&format!("pass: {}\n", cmp.pass));
    out
}
