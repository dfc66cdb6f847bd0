use crate::{Error, Result};

/// Dense row-major tensor of `f64`. Rank 1 (`[n]`) and rank 2 (`[n, m]`)
/// cover everything this crate does; scalars are `[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::dim(
                "Tensor::new",
                format!("{n} elements for shape {shape:?}"),
                format!("{}", data.len()),
            ));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor { shape, data: vec![0.0; n] }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor { shape: vec![1], data: vec![v] }
    }

    /// Rank-2 tensor from a slice of equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n * m);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != m {
                return Err(Error::dim(
                    format!("Tensor::from_rows row {i}"),
                    format!("{m}"),
                    format!("{}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Tensor::new(vec![n, m], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// The single element of a `[1]` (or `[1,1]`) tensor.
    pub fn item(&self) -> Result<f64> {
        if self.data.len() != 1 {
            return Err(Error::Usage(format!(
                "item() on tensor of shape {:?}",
                self.shape
            )));
        }
        Ok(self.data[0])
    }

    /// Rows of a rank-2 tensor (a rank-1 tensor counts as a single row).
    pub fn rows(&self) -> usize {
        match self.shape.as_slice() {
            [n, _] => *n,
            _ => 1,
        }
    }

    /// Columns of a rank-2 tensor (or the length of a rank-1 tensor).
    pub fn cols(&self) -> usize {
        match self.shape.as_slice() {
            [_, m] => *m,
            [m] => *m,
            _ => 0,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows() && j < self.cols());
        self.data[i * self.cols() + j]
    }

    /// Row `i` of a rank-2 tensor as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.cols();
        &self.data[i * m..(i + 1) * m]
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.shape == other.shape
    }

    /// New tensor holding the chosen rows, in the given order. 1-D tensors
    /// gather elements.
    pub fn gather_rows(&self, idx: &[usize]) -> Tensor {
        match self.shape.as_slice() {
            [_, m] => {
                let m = *m;
                let mut data = Vec::with_capacity(idx.len() * m);
                for &i in idx {
                    data.extend_from_slice(self.row(i));
                }
                Tensor { shape: vec![idx.len(), m], data }
            }
            _ => {
                let data = idx.iter().map(|&i| self.data[i]).collect();
                Tensor { shape: vec![idx.len()], data }
            }
        }
    }

    /// New `[n, chosen]` tensor keeping only the chosen columns, in order.
    pub fn select_cols(&self, cols: &[usize]) -> Tensor {
        let n = self.rows();
        let mut data = Vec::with_capacity(n * cols.len());
        for i in 0..n {
            for &j in cols {
                data.push(self.at(i, j));
            }
        }
        Tensor { shape: vec![n, cols.len()], data }
    }
}
