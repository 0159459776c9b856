//! CSV ingestion and emission.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{Dataset, Design};

/// A dataset loaded from disk, with its column names.
#[derive(Clone, Debug)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub response: String,
    pub feature_names: Vec<String>,
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Input(format!("cannot open {path_str}: {e}")))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Input(format!("cannot read header of {path_str}: {e}")))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.is_empty() {
        return Err(Error::Input(format!("{path_str} has no columns")));
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // 1-based, after the header line
        let record = record.map_err(|e| Error::Input(format!("{path_str}:{line}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::Csv {
                path: path_str.clone(),
                line,
                column: format!("(row has {} fields, expected {})", record.len(), headers.len()),
                message: "ragged row".into(),
            });
        }
        let mut row = Vec::with_capacity(headers.len());
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Csv {
                path: path_str.clone(),
                line,
                column: headers[j].clone(),
                message: if field.is_empty() {
                    "empty cell".into()
                } else {
                    format!("non-numeric cell '{field}'")
                },
            })?;
            if !value.is_finite() {
                return Err(Error::Csv {
                    path: path_str.clone(),
                    line,
                    column: headers[j].clone(),
                    message: format!("non-finite cell '{field}'"),
                });
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Input(format!("{path_str} has no data rows")));
    }
    Ok((headers, rows))
}

/// Loads a dataset: the named column is the response, every other column is
/// a feature in header order.
pub fn load_csv(path: &Path, response_column: &str) -> Result<LoadedCsv> {
    let (headers, rows) = read_table(path)?;
    let y_idx = headers
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| {
            Error::Input(format!(
                "response column '{response_column}' not found in {} (columns: {})",
                path.display(),
                headers.join(", ")
            ))
        })?;
    if headers.len() < 2 {
        return Err(Error::Input("need at least one feature column".into()));
    }
    let n = rows.len();
    let p = headers.len() - 1;
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        let mut jj = 0;
        for (j, &v) in row.iter().enumerate() {
            if j == y_idx {
                y[i] = v;
            } else {
                x[(i, jj)] = v;
                jj += 1;
            }
        }
    }
    let feature_names = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != y_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Ok(LoadedCsv {
        dataset: Dataset::new(x, y)?,
        response: response_column.to_string(),
        feature_names,
    })
}

/// Loads a design-only CSV (every column is a feature).
pub fn load_design_csv(path: &Path) -> Result<(Design, Vec<String>)> {
    let (headers, rows) = read_table(path)?;
    let n = rows.len();
    let p = headers.len();
    let mut x = DMatrix::zeros(n, p);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Ok((Design::new(x)?, headers))
}

/// Writes a dataset with the response in the first column. Floats use the
/// shortest exact decimal form, so a reload reproduces them bit for bit.
pub fn write_csv(path: &Path, dataset: &Dataset, response: &str, features: &[String]) -> Result<()> {
    if features.len() != dataset.p() {
        return Err(Error::Input(format!(
            "{} feature names for p = {}",
            features.len(),
            dataset.p()
        )));
    }
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))?;
    let mut header = vec![response.to_string()];
    header.extend(features.iter().cloned());
    writer
        .write_record(&header)
        .map_err(|e| Error::Input(format!("write failed: {e}")))?;
    for i in 0..dataset.n() {
        let mut row = vec![format!("{}", dataset.y()[i])];
        for j in 0..dataset.p() {
            row.push(format!("{}", dataset.x()[(i, j)]));
        }
        writer
            .write_record(&row)
            .map_err(|e| Error::Input(format!("write failed: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::Input(format!("write failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::substream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn loads_a_small_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("small.csv");
        std::fs::write(&path, "y,x1,x2\n1,0.5,2\n0,-1,3\n1,2.5,-4\n").unwrap();
        let loaded = load_csv(&path, "y").unwrap();
        assert_eq!(loaded.dataset.n(), 3);
        assert_eq!(loaded.dataset.p(), 2);
        assert_eq!(loaded.feature_names, vec!["x1", "x2"]);
        assert_eq!(loaded.dataset.y().as_slice(), &[1.0, 0.0, 1.0]);
        assert_eq!(loaded.dataset.x()[(2, 0)], 2.5);
    }

    #[test]
    fn blank_cell_error_names_the_cell() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("blank.csv");
        std::fs::write(&path, "y,x1\n1,0.5\n0,\n").unwrap();
        let err = load_csv(&path, "y").unwrap_err();
        match err {
            Error::Csv { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "x1");
            }
            other => panic!("expected a csv error, got {other:?}"),
        }
    }

    #[test]
    fn missing_response_column_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nores.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(load_csv(&path, "y"), Err(Error::Input(_))));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = substream(13, 0);
        let x = DMatrix::from_fn(7, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(7, |_, _| rng.sample::<f64, _>(StandardNormal));
        let dataset = Dataset::new(x, y).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.csv");
        let names: Vec<String> = (1..=3).map(|j| format!("x{j}")).collect();
        write_csv(&path, &dataset, "y", &names).unwrap();
        let loaded = load_csv(&path, "y").unwrap();
        assert_eq!(loaded.dataset.y(), dataset.y());
        assert_eq!(loaded.dataset.x(), dataset.x());
    }

    #[test]
    fn design_only_loader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("design.csv");
        std::fs::write(&path, "x1,x2,x3\n1,2,3\n4,5,6\n").unwrap();
        let (design, names) = load_design_csv(&path).unwrap();
        assert_eq!(design.n(), 2);
        assert_eq!(design.p(), 3);
        assert_eq!(names, vec!["x1", "x2", "x3"]);
    }
}
