//! Input vectors, grids and CSV artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use crate::Failure;

/// CSV document: `#` comment lines, a header row and data rows.
#[derive(Debug, Default)]
pub struct Csv {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<String>,
}

impl Csv {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), ..Default::default() }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        for l in line.into().lines() {
            self.comments.push(l.to_string());
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.rows.push(fields.join(","));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            s.push_str("# ");
            s.push_str(c);
            s.push('\n');
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:e}")
}

/// Writes the artifact to `out` (or standard output) and the summary to standard output (or
/// standard error when the artifact occupies standard output).
pub fn emit(out: Option<&PathBuf>, artifact: &str, summary: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, artifact)
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
            print!("{summary}");
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(artifact.as_bytes())
                .map_err(|e| Failure::Io(format!("cannot write to standard output: {e}")))?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

/// `delta:k` or the path of a file holding one value per line (blank lines and `#` comments
/// are skipped).
pub fn initial_vector(arg: &str, n: usize) -> Result<DVector<f64>, Failure> {
    if let Some(k) = arg.strip_prefix("delta:") {
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| Failure::Io(format!("bad initial distribution `{arg}`: expected delta:<state>")))?;
        if k >= n {
            return Err(Failure::Io(format!("delta:{k} is outside states 0..={}", n - 1)));
        }
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        return Ok(v);
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {arg}: {e}")))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Failure::Io(format!("{arg}: line {}: `{line}` is not a number", i + 1)))?;
        values.push(v);
    }
    if values.len() != n {
        return Err(Failure::Io(format!("{arg}: expected {n} values, found {}", values.len())));
    }
    Ok(DVector::from_vec(values))
}

/// Multiples of `step` in `(0, horizon]`, always ending at `horizon`.
pub fn checkpoints(horizon: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(horizon > 0.0) || !(step > 0.0) {
        return Err(Failure::Io(format!("horizon and grid step must be positive (got {horizon}, {step})")));
    }
    let n = ((horizon / step) * (1.0 + 1e-12)).floor() as usize;
    let mut grid: Vec<f64> = (1..=n).map(|k| k as f64 * step).filter(|&t| t < horizon).collect();
    grid.push(horizon);
    Ok(grid)
}
