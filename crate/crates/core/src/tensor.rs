use std::fmt;

use crate::error::{Error, Result};

/// Dense row-major `f64` array.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("tensor contains non-finite values".into()));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(usize) -> f64) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: (0..n).map(&mut f).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(vec![n, n], |i| if i / n == i % n { 1.0 } else { 0.0 })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            s => Err(Error::Shape(format!("expected a matrix, got shape {s:?}"))),
        }
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(0)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        let (n, k) = self.dims2()?;
        let (k2, m) = rhs.dims2()?;
        if k != k2 {
            return Err(Error::Shape(format!(
                "matmul inner dimensions differ: {:?} x {:?}",
                self.shape, rhs.shape
            )));
        }
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let lhs_row = &self.data[i * k..(i + 1) * k];
            let out_row = &mut out[i * m..(i + 1) * m];
            for (p, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[p * m..(p + 1) * m];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Tensor {
            shape: vec![n, m],
            data: out,
        })
    }

    pub fn transpose(&self) -> Result<Tensor> {
        let (r, c) = self.dims2()?;
        Ok(Tensor::from_fn(vec![c, r], |i| self.data[(i % r) * c + i / r]))
    }

    pub fn add(&self, rhs: &Tensor) -> Result<Tensor> {
        if self.shape != rhs.shape {
            return Err(Error::Shape(format!(
                "cannot add {:?} and {:?}",
                self.shape, rhs.shape
            )));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Add `bias` to every row.
    pub fn add_row(&self, bias: &[f64]) -> Result<Tensor> {
        let (_, c) = self.dims2()?;
        if bias.len() != c {
            return Err(Error::Shape(format!(
                "row bias of {} for {c} columns",
                bias.len()
            )));
        }
        let mut out = self.clone();
        for (i, v) in out.data.iter_mut().enumerate() {
            *v += bias[i % c];
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Columns `[start, start + width)` of a matrix.
    pub fn columns(&self, start: usize, width: usize) -> Result<Tensor> {
        let (r, c) = self.dims2()?;
        if start + width > c {
            return Err(Error::Shape(format!("columns {start}..{} of {c}", start + width)));
        }
        Ok(Tensor::from_fn(vec![r, width], |i| {
            self.data[(i / width) * c + start + i % width]
        }))
    }

    /// Rows `[start, start + count)` of a matrix.
    pub fn slice_rows(&self, start: usize, count: usize) -> Result<Tensor> {
        let (r, c) = self.dims2()?;
        if start + count > r {
            return Err(Error::Shape(format!("rows {start}..{} of {r}", start + count)));
        }
        Ok(Tensor {
            shape: vec![count, c],
            data: self.data[start * c..(start + count) * c].to_vec(),
        })
    }

    /// Stack matrices with equal column counts vertically.
    pub fn concat_rows(parts: &[&Tensor]) -> Result<Tensor> {
        let cols = parts.first().map(|t| t.cols()).unwrap_or(0);
        let mut data = Vec::new();
        let mut rows = 0;
        for t in parts {
            let (r, c) = t.dims2()?;
            if c != cols {
                return Err(Error::Shape(format!("concat of {c} and {cols} columns")));
            }
            rows += r;
            data.extend_from_slice(&t.data);
        }
        Ok(Tensor {
            shape: vec![rows, cols],
            data,
        })
    }

    /// Join matrices with equal row counts side by side.
    pub fn concat_cols(parts: &[Tensor]) -> Result<Tensor> {
        let rows = parts.first().map(|t| t.rows()).unwrap_or(0);
        let cols: usize = parts.iter().map(|t| t.cols()).sum();
        let mut out = Tensor::zeros(vec![rows, cols]);
        let mut offset = 0;
        for t in parts {
            let (r, c) = t.dims2()?;
            if r != rows {
                return Err(Error::Shape(format!("concat of {r} and {rows} rows")));
            }
            for i in 0..r {
                out.data[i * cols + offset..i * cols + offset + c].copy_from_slice(t.row(i));
            }
            offset += c;
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor{:?}", self.shape)?;
        if self.data.len() <= 16 {
            write!(f, " {:?}", self.data)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::new(vec![1], vec![f64::NAN]).is_err());
        assert_eq!(Tensor::new(vec![2, 0], vec![]).unwrap().len(), 0);
    }

    #[test]
    fn matmul_and_transpose() {
        let a = Tensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = a.transpose().unwrap();
        assert_eq!(b.shape(), &[3, 2]);
        assert_eq!(b.at(2, 1), 6.0);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[14.0, 32.0, 32.0, 77.0]);
        assert!(a.matmul(&a).is_err());
        assert_eq!(a.matmul(&Tensor::identity(3)).unwrap(), a);
    }

    #[test]
    fn slicing_and_concat() {
        let a = Tensor::from_fn(vec![3, 4], |i| i as f64);
        let left = a.columns(0, 2).unwrap();
        let right = a.columns(2, 2).unwrap();
        assert_eq!(Tensor::concat_cols(&[left, right]).unwrap(), a);
        let top = a.slice_rows(0, 1).unwrap();
        let rest = a.slice_rows(1, 2).unwrap();
        assert_eq!(Tensor::concat_rows(&[&top, &rest]).unwrap(), a);
        let empty = Tensor::zeros(vec![0, 4]);
        assert_eq!(Tensor::concat_rows(&[&a, &empty]).unwrap(), a);
    }
}
