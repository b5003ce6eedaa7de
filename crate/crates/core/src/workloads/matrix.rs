use super::WorkloadError;

/// Square integer matrix, row-major. Arithmetic wraps on overflow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    n: usize,
    data: Vec<i64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds an n x n matrix from row-major values; panics on a length mismatch.
    pub fn from_rows(n: usize, data: Vec<i64>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data length");
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.data[row * self.n + col]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }

    pub fn multiply(&self, other: &Matrix) -> Result<Matrix, WorkloadError> {
        if self.n != other.n {
            return Err(WorkloadError::DimensionMismatch(self.n, other.n));
        }
        let n = self.n;
        let mut out = Matrix::zeros(n);
        // i-k-j order keeps the inner loop on contiguous rows
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d = d.wrapping_add(a.wrapping_mul(b));
                }
            }
        }
        Ok(out)
    }

    /// Multiply-accumulate count of one product, for modeled work.
    pub fn mac_count(&self) -> u64 {
        (self.n as u64).pow(3)
    }
}
