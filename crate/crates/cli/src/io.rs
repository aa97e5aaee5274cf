//! File formats: sample CSVs, matrix files, JSON records.
//!
//! CSV floats are written with Rust's shortest round-trip formatting, so a
//! re-run from a manifest reproduces files byte for byte.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

use quadtilt::metrics::SampleSet;
use quadtilt::Matrix;

/// `index,x_1..x_d` with shortest-round-trip float formatting.
pub fn write_samples_csv(path: &Path, points: &[Vec<f64>]) -> Result<()> {
    if points.is_empty() {
        bail!("refusing to write empty sample CSV {}", path.display());
    }
    let dim = points[0].len();
    let mut out = String::new();
    out.push_str("index");
    for j in 1..=dim {
        out.push_str(&format!(",x_{j}"));
    }
    out.push('\n');
    for (i, p) in points.iter().enumerate() {
        out.push_str(&i.to_string());
        for v in p {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_samples_csv(path: &Path) -> Result<SampleSet> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty CSV")?;
    if !header.starts_with("index") {
        bail!("{}: expected header starting with 'index'", path.display());
    }
    let mut points = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let _index = fields.next();
        let point: Vec<f64> = fields
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .with_context(|| format!("{}:{}: bad float {f:?}", path.display(), lineno + 2))
            })
            .collect::<Result<_>>()?;
        if point.is_empty() {
            bail!("{}:{}: row has no coordinates", path.display(), lineno + 2);
        }
        points.push(point);
    }
    Ok(SampleSet::new(points, 0)?)
}

/// Whitespace-separated rows, one per line; `#` starts a comment.
pub fn read_matrix_file(path: &Path) -> Result<Matrix> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|f| {
                f.parse::<f64>()
                    .with_context(|| format!("{}:{}: bad float {f:?}", path.display(), lineno + 1))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no matrix rows found", path.display());
    }
    Ok(Matrix::from_rows(rows)?)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bitwise() {
        let dir = std::env::temp_dir().join(format!("quadtilt-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("samples.csv");
        let points = vec![vec![0.1, -2.5e-11], vec![1.0 / 3.0, f64::MIN_POSITIVE]];
        write_samples_csv(&path, &points).unwrap();
        let back = read_samples_csv(&path).unwrap();
        for (a, b) in points.iter().zip(back.points()) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn matrix_file_parses_rows_and_comments() {
        let dir = std::env::temp_dir().join(format!("quadtilt-mat-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("L.txt");
        std::fs::write(&path, "# factor\n1.0 -0.5\n\n0.25 2  # second row\n").unwrap();
        let m = read_matrix_file(&path).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.get(0, 1), -0.5);
        assert_eq!(m.get(1, 1), 2.0);
        std::fs::remove_dir_all(&dir).ok();
    }
}
