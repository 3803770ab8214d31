//! CSV and JSON artifact handling.
//!
//! Numeric cells are written with the shortest representation that parses
//! back to the same `f64`, so persisted artifacts round-trip exactly and
//! reruns are byte-comparable.

use std::fs;
use std::path::{Path, PathBuf};

use opinf_core::dynamics::{QuadraticModel, Trajectory};
use opinf_core::metrics::ErrorMeasure;
use opinf_core::pod::PodBasis;
use opinf_core::{DenseMatrix, DenseVector};

use crate::harness::HarnessError;

pub type IoResult<T> = Result<T, HarnessError>;

fn io_err(path: &Path, err: std::io::Error) -> HarnessError {
    HarnessError::Io(format!("{}: {err}", path.display()))
}

fn parse_err(path: &Path, detail: impl std::fmt::Display) -> HarnessError {
    HarnessError::Parse(format!("{}: {detail}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> IoResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Headerless numeric CSV, one row per matrix row.
pub fn write_matrix(path: &Path, m: &DenseMatrix) -> IoResult<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&m[(i, j)].to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_matrix(path: &Path) -> IoResult<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let row = row.map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 1)))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(path, format!("ragged row at line {}", lineno + 1)));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, "empty matrix file"));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DenseMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn write_vector(path: &Path, v: &DenseVector) -> IoResult<()> {
    let mut out = String::new();
    for x in v.iter() {
        out.push_str(&x.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_vector(path: &Path) -> IoResult<DenseVector> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let vals: Result<Vec<f64>, _> = text
        .lines()
        .filter(|l| !l.is_empty())
        .map(str::parse::<f64>)
        .collect();
    let vals = vals.map_err(|e| parse_err(path, e))?;
    Ok(DenseVector::from_vec(vals))
}

/// Trajectory CSV: header `t,x1..xn,u1..up`, one row per time index. Row
/// `k` carries the input driving the step from state `k` to `k + 1`; the
/// final row pads the input fields with zeros.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> IoResult<()> {
    let n = traj.states.nrows();
    let p = traj.inputs.nrows();
    let steps = traj.inputs.ncols();
    let mut out = String::from("t");
    for i in 1..=n {
        out.push_str(&format!(",x{i}"));
    }
    for i in 1..=p {
        out.push_str(&format!(",u{i}"));
    }
    out.push('\n');
    for k in 0..=steps {
        out.push_str(&(k as f64 * traj.dt).to_string());
        for i in 0..n {
            out.push(',');
            out.push_str(&traj.states[(i, k)].to_string());
        }
        for i in 0..p {
            out.push(',');
            let u = if k < steps { traj.inputs[(i, k)] } else { 0.0 };
            out.push_str(&u.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_trajectory(path: &Path) -> IoResult<Trajectory> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err(path, "missing header"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") {
        return Err(parse_err(path, "header must start with t"));
    }
    let n = cols.iter().filter(|c| c.starts_with('x')).count();
    let p = cols.iter().filter(|c| c.starts_with('u')).count();
    if 1 + n + p != cols.len() || n == 0 {
        return Err(parse_err(path, "malformed trajectory header"));
    }

    let mut times = Vec::new();
    let mut states_rows: Vec<Vec<f64>> = Vec::new();
    let mut input_rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 2)))?;
        if vals.len() != cols.len() {
            return Err(parse_err(path, format!("ragged row at line {}", lineno + 2)));
        }
        times.push(vals[0]);
        states_rows.push(vals[1..1 + n].to_vec());
        input_rows.push(vals[1 + n..].to_vec());
    }
    if times.is_empty() {
        return Err(parse_err(path, "no data rows"));
    }
    let k = times.len() - 1;
    let dt = if k > 0 { times[1] - times[0] } else { 1.0 };
    let states = DenseMatrix::from_fn(n, k + 1, |i, j| states_rows[j][i]);
    let inputs = DenseMatrix::from_fn(p, k, |i, j| input_rows[j][i]);
    let diverged = states.iter().any(|v| !v.is_finite());
    Ok(Trajectory {
        states,
        inputs,
        dt,
        diverged,
    })
}

pub fn write_basis(dir: &Path, basis: &PodBasis) -> IoResult<()> {
    ensure_dir(dir)?;
    write_matrix(&dir.join("pod_basis.csv"), &basis.v)?;
    write_vector(&dir.join("singular_values.csv"), &basis.singular_values)
}

pub fn read_basis(dir: &Path) -> IoResult<PodBasis> {
    let v = read_matrix(&dir.join("pod_basis.csv"))?;
    let singular_values = read_vector(&dir.join("singular_values.csv"))?;
    Ok(PodBasis { v, singular_values })
}

/// One learned model family on disk: per-parameter operator files plus a
/// JSON manifest with the fit metadata.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ModelManifest {
    pub method: String,
    pub dim: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub params: Vec<f64>,
    pub converged: Vec<bool>,
    pub constant_term: bool,
}

pub fn model_dir(out: &Path, method: &str, dim: usize) -> PathBuf {
    out.join("models").join(method).join(format!("n{dim:02}"))
}

pub fn write_family(
    dir: &Path,
    manifest: &ModelManifest,
    models: &[QuadraticModel],
) -> IoResult<()> {
    ensure_dir(dir)?;
    for (j, model) in models.iter().enumerate() {
        write_matrix(&dir.join(format!("mu{j:02}_A.csv")), &model.a)?;
        write_matrix(&dir.join(format!("mu{j:02}_B.csv")), &model.b)?;
        write_matrix(&dir.join(format!("mu{j:02}_F.csv")), &model.f)?;
        let c = DenseMatrix::from_column_slice(model.c.len(), 1, model.c.as_slice());
        write_matrix(&dir.join(format!("mu{j:02}_c.csv")), &c)?;
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| HarnessError::Parse(e.to_string()))?;
    fs::write(&path, text).map_err(|e| io_err(&path, e))
}

pub fn read_family(dir: &Path) -> IoResult<(ModelManifest, Vec<QuadraticModel>)> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let manifest: ModelManifest =
        serde_json::from_str(&text).map_err(|e| parse_err(&path, e))?;
    let mut models = Vec::with_capacity(manifest.params.len());
    for j in 0..manifest.params.len() {
        let a = read_matrix(&dir.join(format!("mu{j:02}_A.csv")))?;
        let b = read_matrix(&dir.join(format!("mu{j:02}_B.csv")))?;
        let f = read_matrix(&dir.join(format!("mu{j:02}_F.csv")))?;
        let c = read_matrix(&dir.join(format!("mu{j:02}_c.csv")))?;
        let c = DenseVector::from_column_slice(c.column(0).as_slice());
        let model = QuadraticModel::with_constant(a, b, f, c)
            .map_err(|e| HarnessError::Core(e.to_string()))?;
        models.push(model);
    }
    Ok((manifest, models))
}

fn cell(e: &ErrorMeasure) -> String {
    match e {
        ErrorMeasure::Finite(v) => v.to_string(),
        ErrorMeasure::Diverged => "diverged".into(),
    }
}

pub fn parse_cell(s: &str) -> Option<ErrorMeasure> {
    if s == "diverged" {
        Some(ErrorMeasure::Diverged)
    } else {
        s.parse::<f64>().ok().map(ErrorMeasure::Finite)
    }
}

/// Validation table CSV: one row per regularization weight with the
/// per-parameter errors, the row mean, and a marker on the chosen row.
pub fn write_validation_table(
    path: &Path,
    table: &opinf_core::select::ValidationTable,
) -> IoResult<()> {
    let mut out = String::from("lambda");
    for mu in &table.interior_params {
        out.push_str(&format!(",mu_{mu}"));
    }
    out.push_str(",mean,chosen\n");
    for (i, lambda) in table.lambdas.iter().enumerate() {
        out.push_str(&lambda.to_string());
        for e in &table.errors[i] {
            out.push(',');
            out.push_str(&cell(e));
        }
        out.push(',');
        out.push_str(&cell(&table.row_mean(i)));
        out.push(',');
        out.push_str(if i == table.chosen { "1" } else { "0" });
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Per-(method, dimension) result row of the experiment summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub dim: usize,
    pub e_train: ErrorMeasure,
    pub e_test: ErrorMeasure,
    /// `None` when some family member is not Hurwitz.
    pub rho: Option<f64>,
    pub diverged: bool,
}

const SUMMARY_HEADER: &str = "method,n,e_train,e_test,rho,diverged";

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> IoResult<()> {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        let rho = match row.rho {
            Some(v) => v.to_string(),
            None => "undefined".into(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.method,
            row.dim,
            cell(&row.e_train),
            cell(&row.e_test),
            rho,
            row.diverged
        ));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_summary(path: &Path) -> IoResult<Vec<SummaryRow>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SUMMARY_HEADER => {}
        _ => return Err(parse_err(path, "bad summary header")),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(parse_err(path, format!("line {}: bad field count", lineno + 2)));
        }
        let invalid = || parse_err(path, format!("line {}: bad value", lineno + 2));
        let rho = match parts[4] {
            "undefined" => None,
            s => Some(s.parse::<f64>().map_err(|_| invalid())?),
        };
        rows.push(SummaryRow {
            method: parts[0].to_string(),
            dim: parts[1].parse().map_err(|_| invalid())?,
            e_train: parse_cell(parts[2]).ok_or_else(invalid)?,
            e_test: parse_cell(parts[3]).ok_or_else(invalid)?,
            rho,
            diverged: parts[5].parse().map_err(|_| invalid())?,
        });
    }
    Ok(rows)
}

/// Per-training-node stability radii.
pub fn write_rho_nodes(path: &Path, rows: &[(String, usize, f64, bool, Option<f64>)]) -> IoResult<()> {
    let mut out = String::from("method,n,mu,hurwitz,rho\n");
    for (method, dim, mu, hurwitz, rho) in rows {
        let rho = match rho {
            Some(v) => v.to_string(),
            None => "undefined".into(),
        };
        out.push_str(&format!("{method},{dim},{mu},{hurwitz},{rho}\n"));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use opinf_core::quadform::compressed_len;
    use tempfile::tempdir;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DenseMatrix::from_fn(4, 3, |i, j| {
            (i as f64 + 1.0) / (j as f64 + 3.0) * 1e-7 + std::f64::consts::PI * i as f64
        });
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn trajectory_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let traj = Trajectory {
            states: DenseMatrix::from_fn(2, 4, |i, j| (i * 10 + j) as f64 * 0.1),
            inputs: DenseMatrix::from_fn(1, 3, |_, j| j as f64 - 0.5),
            dt: 0.25,
            diverged: false,
        };
        write_trajectory(&path, &traj).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,x1,x2,u1\n"));
        let back = read_trajectory(&path).unwrap();
        assert_eq!(back.states, traj.states);
        assert_eq!(back.inputs, traj.inputs);
        assert_eq!(back.dt, traj.dt);
        assert!(!back.diverged);
    }

    #[test]
    fn family_round_trip() {
        let dir = tempdir().unwrap();
        let n = 3;
        let models: Vec<QuadraticModel> = (0..2)
            .map(|k| {
                QuadraticModel::with_constant(
                    DenseMatrix::from_element(n, n, -(k as f64) - 1.0),
                    DenseMatrix::from_element(n, 1, 0.5),
                    DenseMatrix::from_element(n, compressed_len(n), 0.25),
                    DenseVector::from_element(n, 0.125),
                )
                .unwrap()
            })
            .collect();
        let manifest = ModelManifest {
            method: "pir".into(),
            dim: n,
            lambda: 1e-3,
            epsilon: 1e-10,
            params: vec![0.1, 0.2],
            converged: vec![true, true],
            constant_term: true,
        };
        write_family(dir.path(), &manifest, &models).unwrap();
        let (m2, back) = read_family(dir.path()).unwrap();
        assert_eq!(m2.lambda, manifest.lambda);
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], models[0]);
        assert_eq!(back[1], models[1]);
    }

    #[test]
    fn summary_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        let rows = vec![
            SummaryRow {
                method: "pir".into(),
                dim: 4,
                e_train: ErrorMeasure::Finite(0.001),
                e_test: ErrorMeasure::Finite(0.1),
                rho: Some(2.5),
                diverged: false,
            },
            SummaryRow {
                method: "plain".into(),
                dim: 8,
                e_train: ErrorMeasure::Finite(1e-6),
                e_test: ErrorMeasure::Diverged,
                rho: None,
                diverged: true,
            },
        ];
        write_summary(&path, &rows).unwrap();
        let back = read_summary(&path).unwrap();
        assert_eq!(rows, back);
    }
}
