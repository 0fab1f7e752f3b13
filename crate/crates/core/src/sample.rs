//! Samples of points in the unit cube.

use alloc::vec::Vec;
use core::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// `n` points in `[0,1]^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    data: Vec<f64>,
    dim: usize,
}

impl Sample {
    /// Builds a sample from a flat row-major buffer of `n * dim` values.
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "sample dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(invalid("sample", "sample must contain at least one point"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
                context: "flat buffer length is not a multiple of the dimension",
            });
        }
        for (i, &v) in data.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfUnitCube {
                    row: i / dim,
                    column: i % dim,
                    value: v,
                });
            }
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                    context: "ragged sample rows",
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(data, dim)
    }

    /// One-dimensional sample.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Keeps only the columns in `cols`, in order.
    pub fn project(&self, cols: Range<usize>) -> Result<Sample> {
        if cols.start >= cols.end || cols.end > self.dim {
            return Err(invalid("columns", "projection range must be a non-empty sub-range of the columns"));
        }
        let mut data = Vec::with_capacity(self.len() * cols.len());
        for r in self.rows() {
            data.extend_from_slice(&r[cols.clone()]);
        }
        Ok(Sample {
            data,
            dim: cols.len(),
        })
    }

    /// Keeps the listed columns (in the given order).
    pub fn select_columns(&self, cols: &[usize]) -> Result<Sample> {
        if cols.is_empty() || cols.iter().any(|&c| c >= self.dim) {
            return Err(invalid("columns", "column selection out of range"));
        }
        let mut data = Vec::with_capacity(self.len() * cols.len());
        for r in self.rows() {
            data.extend(cols.iter().map(|&c| r[c]));
        }
        Ok(Sample {
            data,
            dim: cols.len(),
        })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Sample> {
        if rows.is_empty() {
            return Err(invalid("rows", "row selection must not be empty"));
        }
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &i in rows {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.len(),
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Sample {
            data,
            dim: self.dim,
        })
    }

    /// Replaces row `i`, returning a new sample.
    pub fn with_row(&self, i: usize, point: &[f64]) -> Result<Sample> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: point.len(),
                context: "replacement point",
            });
        }
        if let Some((c, &v)) = point.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfUnitCube {
                row: i,
                column: c,
                value: v,
            });
        }
        let mut data = self.data.clone();
        data[i * self.dim..(i + 1) * self.dim].copy_from_slice(point);
        Ok(Sample {
            data,
            dim: self.dim,
        })
    }

    /// Seeded shuffle followed by a split into `parts` contiguous, disjoint
    /// chunks of equal size (trailing rows that do not fill a chunk are
    /// dropped).
    pub fn shuffled_split(&self, parts: usize, seed: u64) -> Result<Vec<Sample>> {
        if parts == 0 || self.len() < parts {
            return Err(invalid("parts", "need at least one row per split part"));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let size = self.len() / parts;
        (0..parts)
            .map(|p| self.select_rows(&order[p * size..(p + 1) * size]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_out_of_cube() {
        let err = Sample::new(vec![0.1, 1.5], 1).unwrap_err();
        assert!(matches!(err, Error::OutOfUnitCube { row: 1, .. }));
        assert!(Sample::new(vec![], 1).is_err());
        assert!(Sample::new(vec![0.1, 0.2, 0.3], 2).is_err());
    }

    #[test]
    fn projection_and_split() {
        let s = Sample::from_rows(&[[0.1, 0.2, 0.3], [0.4, 0.5, 0.6], [0.7, 0.8, 0.9], [0.0, 1.0, 0.5]]).unwrap();
        let p = s.project(1..3).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.row(1), &[0.5, 0.6]);
        let q = s.select_columns(&[2, 0]).unwrap();
        assert_eq!(q.row(0), &[0.3, 0.1]);

        let halves = s.shuffled_split(2, 7).unwrap();
        assert_eq!(halves.len(), 2);
        let mut all: Vec<f64> = halves.iter().flat_map(|h| h.as_flat().iter().copied()).collect();
        let mut orig = s.as_flat().to_vec();
        all.sort_by(f64::total_cmp);
        orig.sort_by(f64::total_cmp);
        assert_eq!(all, orig);
        assert_eq!(s.shuffled_split(2, 7).unwrap(), halves);
    }
}
