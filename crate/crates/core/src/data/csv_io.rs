use std::path::Path;

use ndarray::Array2;

use super::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Reads a labelled CSV: numeric feature columns followed by an integer label.
///
/// `num_classes` is `max(label) + 1`. Row numbers in errors are 1-based and
/// count the header line when present.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_csv(file, has_header)
}

pub fn read_csv<R: std::io::Read>(reader: R, has_header: bool) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let first_line = if has_header { 2 } else { 1 };
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = first_line + i;
        let rec = rec.map_err(|e| Error::Data(format!("row {line}: {e}")))?;
        if rec.len() < 2 {
            return Err(Error::Data(format!("row {line}: need at least one feature and a label")));
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::Data(format!("row {line}: expected {w} columns, found {}", rec.len())));
        }
        for (j, cell) in rec.iter().take(w - 1).enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Data(format!("row {line}, column {}: non-numeric cell {cell:?}", j + 1)))?;
            if !v.is_finite() {
                return Err(Error::Data(format!("row {line}, column {}: non-finite value", j + 1)));
            }
            values.push(v);
        }
        let cell = &rec[w - 1];
        let label: i64 = cell
            .parse()
            .map_err(|_| Error::Data(format!("row {line}: label {cell:?} is not an integer")))?;
        if label < 0 {
            return Err(Error::Data(format!("row {line}: negative label {label}")));
        }
        labels.push(label as usize);
    }
    let Some(w) = width else {
        return Err(Error::Data("CSV contains no data rows".into()));
    };
    let num_classes = labels.iter().max().map_or(0, |m| m + 1).max(2);
    let features = Array2::from_shape_vec((labels.len(), w - 1), values).map_err(|e| Error::Shape(e.to_string()))?;
    LabeledDataset::new(features, labels, num_classes)
}
