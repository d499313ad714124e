//! Plain-text serialization: fixed 17-significant-digit floats and CSV matrices.

use nalgebra::DMatrix;

/// Formats with 17 significant digits in scientific notation, so values
/// round-trip exactly and output is byte-stable.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        // normalizes -0.0
        return format!("{:.16e}", 0.0);
    }
    format!("{x:.16e}")
}

/// Header `c1,…,cn` followed by one line per row.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=m.ncols()).map(|c| format!("c{c}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| fmt17(m[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, field {field}: {message}")]
pub struct CsvError {
    pub line: usize,
    pub field: usize,
    pub message: String,
}

/// Parses a numeric CSV matrix. A first line that is not numeric is taken as
/// the header; blank lines are skipped.
pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>, CsvError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut seen_first = false;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Vec<Result<f64, _>> = fields.iter().map(|f| f.parse::<f64>()).collect();
        if !seen_first {
            seen_first = true;
            if parsed.iter().any(|p| p.is_err()) {
                continue;
            }
        }
        let mut row = Vec::with_capacity(fields.len());
        for (k, p) in parsed.into_iter().enumerate() {
            match p {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(CsvError {
                        line: ln + 1,
                        field: k + 1,
                        message: format!("not a finite number: {:?}", fields[k]),
                    })
                }
            }
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CsvError {
                    line: ln + 1,
                    field: row.len().min(first.len()) + 1,
                    message: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CsvError { line: 0, field: 0, message: "no data rows".into() });
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_digits() {
        assert_eq!(fmt17(0.25), "2.5000000000000000e-1");
        assert_eq!(fmt17(-0.0), fmt17(0.0));
        let x = 1.0 / 3.0;
        assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.5, 1.0 / 7.0, 0.0, 3e-20, 4.0]);
        assert_eq!(matrix_from_csv(&matrix_to_csv(&m)).unwrap(), m);
        let err = matrix_from_csv("c1,c2\n1,2\n3,x\n").unwrap_err();
        assert_eq!((err.line, err.field), (3, 2));
        let err = matrix_from_csv("1,2\n3\n").unwrap_err();
        assert_eq!(err.line, 2);
    }
}
