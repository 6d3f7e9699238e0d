use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::ColumnKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ColumnEncoding {
    /// Passed through unchanged.
    Numeric,
    /// Code `c < categories` becomes an indicator block with a 1 at `c`.
    OneHot { categories: usize },
}

impl ColumnEncoding {
    fn width(&self) -> usize {
        match *self {
            ColumnEncoding::Numeric => 1,
            ColumnEncoding::OneHot { categories } => categories,
        }
    }
}

/// Maps raw rows (codes or reals) to the numeric matrix the trees see.
/// Output columns follow (input column order, category order).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingMap {
    pub columns: Vec<ColumnEncoding>,
}

impl EncodingMap {
    pub fn identity(width: usize) -> Self {
        EncodingMap { columns: alloc::vec![ColumnEncoding::Numeric; width] }
    }

    /// One-hot for categorical columns using the given cardinalities
    /// (ignored for numeric columns).
    pub fn for_columns(kinds: &[ColumnKind], cardinalities: &[usize]) -> Result<Self> {
        if kinds.len() != cardinalities.len() {
            return Err(Error::DimensionMismatch { expected: kinds.len(), found: cardinalities.len() });
        }
        let columns = kinds
            .iter()
            .zip(cardinalities)
            .map(|(k, &m)| match k {
                ColumnKind::Numeric => ColumnEncoding::Numeric,
                ColumnKind::Categorical => ColumnEncoding::OneHot { categories: m },
            })
            .collect();
        Ok(EncodingMap { columns })
    }

    pub fn input_width(&self) -> usize {
        self.columns.len()
    }

    pub fn output_width(&self) -> usize {
        self.columns.iter().map(|c| c.width()).sum()
    }

    /// Input columns that encode to zero output columns.
    pub fn empty_features(&self) -> Vec<usize> {
        (0..self.columns.len()).filter(|&j| self.columns[j].width() == 0).collect()
    }

    fn encode_row_into(&self, row: &[f64], out: &mut Vec<f64>) -> Result<()> {
        for (j, (enc, &v)) in self.columns.iter().zip(row).enumerate() {
            match *enc {
                ColumnEncoding::Numeric => out.push(v),
                ColumnEncoding::OneHot { categories } => {
                    if !(v >= 0.0 && v < categories as f64 && v == libm::trunc(v)) {
                        return Err(Error::input(alloc::format!("code {v} invalid for column {j}")));
                    }
                    let c = v as usize;
                    out.extend((0..categories).map(|i| (i == c) as u8 as f64));
                }
            }
        }
        Ok(())
    }

    /// Encode a row-major matrix of `input_width` columns.
    pub fn encode(&self, values: &[f64]) -> Result<Matrix> {
        let w = self.input_width();
        if w == 0 || !values.len().is_multiple_of(w) {
            return Err(Error::DimensionMismatch { expected: w, found: values.len() });
        }
        let rows = values.len() / w;
        let mut data = Vec::with_capacity(rows * self.output_width());
        for r in values.chunks(w) {
            self.encode_row_into(r, &mut data)?;
        }
        Ok(Matrix { rows, cols: self.output_width(), data })
    }
}

/// Row-major numeric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()).collect()
    }
}

/// One-hot encode every feature of a categorical dataset.
pub fn encode_onehot(dataset: &Dataset) -> Result<(Matrix, EncodingMap)> {
    let kinds = alloc::vec![ColumnKind::Categorical; dataset.n_features()];
    let cards: Vec<usize> = dataset.vocab.iter().map(|v| v.len()).collect();
    let map = EncodingMap::for_columns(&kinds, &cards)?;
    let values: Vec<f64> = dataset.codes.iter().map(|&c| c as f64).collect();
    if dataset.n_features() == 0 {
        return Ok((Matrix { rows: dataset.n_rows(), cols: 0, data: Vec::new() }, map));
    }
    Ok((map.encode(&values)?, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn onehot_examples() {
        let d = Dataset::new(
            vec!["f".to_string()],
            vec![vec!["A".to_string(), "B".to_string(), "C".to_string()]],
            vec![1],
            vec![0],
        )
        .unwrap();
        let (m, map) = encode_onehot(&d).unwrap();
        assert_eq!(m.data, vec![0.0, 1.0, 0.0]);
        assert_eq!(map.output_width(), 3);

        let two = EncodingMap::for_columns(&[ColumnKind::Categorical; 2], &[2, 2]).unwrap();
        assert_eq!(two.output_width(), 4);
        assert_eq!(two.encode(&[1.0, 0.0]).unwrap().data, vec![0.0, 1.0, 1.0, 0.0]);

        let empty = EncodingMap::for_columns(&[ColumnKind::Categorical, ColumnKind::Numeric], &[0, 0]).unwrap();
        assert_eq!(empty.empty_features(), vec![0]);
        assert_eq!(empty.output_width(), 1);
    }

    #[test]
    fn rejects_bad_codes() {
        let map = EncodingMap::for_columns(&[ColumnKind::Categorical], &[2]).unwrap();
        assert!(map.encode(&[2.0]).is_err());
        assert!(map.encode(&[0.5]).is_err());
    }
}
