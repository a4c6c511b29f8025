//! Deterministic text output: field CSV files and JSON numbers.

use std::str::FromStr;

use serde_json::{Number, Value};

use crate::field::{FaceField, ScalarField};
use crate::grid::Grid;

use super::CliError;

/// Column header of every field file.
pub const CSV_HEADER: [&str; 9] = ["kind", "axis", "i", "j", "k", "x", "y", "z", "value"];

/// 17 significant digits with a signed exponent (`1.5000000000000000e+0`),
/// which round-trips every `f64`. Negative zero prints as zero.
pub fn fmt_float(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    let s = format!("{v:.16e}");
    match s.split_once('e') {
        Some((mantissa, exp)) if !exp.starts_with('-') => format!("{mantissa}e+{exp}"),
        _ => s,
    }
}

/// JSON number printed with [`fmt_float`]; `null` for non-finite values.
pub fn json_float(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&fmt_float(v)).expect("formatted float is a JSON number"))
}

/// One row per active cell (if `cells` is given), then one row per face
/// adjacent to the active region (if `faces` is given), in canonical order.
pub fn export_fields(grid: &Grid, cells: Option<&[f64]>, faces: Option<&[f64]>) -> String {
    let d = grid.ndim();
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(CSV_HEADER).expect("writing to memory");
    let row = |kind: &str, axis: Option<usize>, idx: [usize; 3], x: [f64; 3], v: f64| {
        let mut r = vec![
            kind.to_string(),
            axis.map(|a| a.to_string()).unwrap_or_default(),
        ];
        r.extend((0..3).map(|a| {
            if a < d {
                idx[a].to_string()
            } else {
                String::new()
            }
        }));
        r.extend((0..3).map(|a| {
            if a < d {
                fmt_float(x[a])
            } else {
                String::new()
            }
        }));
        r.push(fmt_float(v));
        r
    };
    if let Some(cells) = cells {
        for (c, &v) in cells.iter().enumerate() {
            let rec = row("cell", None, grid.cell_coords(c), grid.cell_center(c), v);
            out.write_record(&rec).expect("writing to memory");
        }
    }
    if let Some(faces) = faces {
        for id in grid.relevant_faces() {
            let index = grid.face_index(id);
            let rec = row(
                "face",
                Some(index.axis),
                index.coords,
                grid.face_center(id),
                faces[id],
            );
            out.write_record(&rec).expect("writing to memory");
        }
    }
    String::from_utf8(out.into_inner().expect("in-memory writer")).expect("ascii output")
}

/// Cell and face values read back from a field file. Rows must appear in
/// canonical order and match the grid; a missing section yields `None`.
pub fn parse_fields(
    grid: &Grid,
    text: &str,
) -> Result<(Option<ScalarField>, Option<FaceField>), CliError> {
    let bad =
        |line: usize, msg: String| CliError::Invalid(format!("field file line {line}: {msg}"));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::Invalid(format!("field file: {e}")))?
        .clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(CliError::Invalid(format!(
            "field file: header must be {}",
            CSV_HEADER.join(",")
        )));
    }
    let d = grid.ndim();
    let mut cells = Vec::new();
    let mut faces = FaceField::zeros(grid);
    let mut n_faces = 0;
    let mut expected_faces = grid.relevant_faces();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        let idx = |a: usize| -> Result<usize, CliError> {
            rec[2 + a].parse::<usize>().map_err(|_| {
                bad(
                    line,
                    format!("index column {} is not an integer", CSV_HEADER[2 + a]),
                )
            })
        };
        let mut coords = [0usize; 3];
        for (a, c) in coords.iter_mut().enumerate().take(d) {
            *c = idx(a)?;
        }
        let value: f64 = rec[8]
            .parse()
            .map_err(|_| bad(line, "value is not a number".into()))?;
        if !value.is_finite() {
            return Err(bad(line, "value is not finite".into()));
        }
        match &rec[0] {
            "cell" => {
                if n_faces > 0 {
                    return Err(bad(line, "cell rows must precede face rows".into()));
                }
                let c = cells.len();
                if c >= grid.n_active() || grid.cell_coords(c) != coords {
                    return Err(bad(line, "cell rows out of canonical order".into()));
                }
                cells.push(value);
            }
            "face" => {
                let axis: usize = rec[1]
                    .parse()
                    .map_err(|_| bad(line, "face axis is not an integer".into()))?;
                let id = expected_faces
                    .next()
                    .ok_or_else(|| bad(line, "more face rows than faces".into()))?;
                let index = grid.face_index(id);
                if index.axis != axis || index.coords != coords {
                    return Err(bad(line, "face rows out of canonical order".into()));
                }
                faces[id] = value;
                n_faces += 1;
            }
            other => return Err(bad(line, format!("unknown row kind {other:?}"))),
        }
    }
    if !cells.is_empty() && cells.len() != grid.n_active() {
        return Err(CliError::Invalid(format!(
            "field file: expected {} cell rows, found {}",
            grid.n_active(),
            cells.len()
        )));
    }
    if n_faces > 0 && expected_faces.next().is_some() {
        return Err(CliError::Invalid("field file: missing face rows".into()));
    }
    let cells = (!cells.is_empty()).then(|| ScalarField::from_raw(cells));
    let faces = (n_faces > 0).then_some(faces);
    Ok((cells, faces))
}
