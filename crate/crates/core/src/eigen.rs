//! Dense symmetric eigensolver and operator norms.
//!
//! The solver is the cyclic Jacobi rotation method: sweeps of plane
//! rotations annihilate off-diagonal entries until their Frobenius mass is
//! negligible. It is deterministic, needs no pivot heuristics, and is
//! adequate for the dense desk-scale matrices used here.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EigenError {
    #[error("data length {got} does not match a {n}x{n} matrix")]
    DataLengthMismatch { got: usize, n: usize },
    #[error("entry ({i},{j}) breaks symmetry by {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
}

/// Off-diagonal Frobenius mass below this multiple of the total mass stops
/// the sweep loop.
const SWEEP_TOLERANCE: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

/// Real symmetric matrix in full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Symmetry must hold within 1e-12 entrywise.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self, EigenError> {
        if data.len() != n * n {
            return Err(EigenError::DataLengthMismatch { got: data.len(), n });
        }
        for i in 0..n {
            for j in i + 1..n {
                let gap = (data[i * n + j] - data[j * n + i]).abs();
                if gap > 1e-12 {
                    return Err(EigenError::NotSymmetric { i, j, gap });
                }
            }
        }
        Ok(SymMatrix { n, data })
    }

    /// Builds from the upper triangle of `f`, mirroring the rest.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Eigenvalues sorted descending.
    pub fn eigenvalues_desc(&self) -> Vec<f64> {
        let (mut values, _) = self.eigen_pairs();
        values.sort_by(|a, b| b.partial_cmp(a).expect("eigenvalues are finite"));
        values
    }

    /// Largest absolute eigenvalue; the operator norm of a symmetric matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.eigen_pairs()
            .0
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Unordered eigenvalues with matching eigenvectors: `vectors[k]` is the
    /// unit eigenvector of `values[k]`.
    pub fn eigen_pairs(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = self.n;
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].to_vec())
            .collect();
        let mut v: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
            .collect();
        let total_mass = self.frobenius_sq().max(f64::MIN_POSITIVE);
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
                .map(|(p, q)| a[p][q] * a[p][q])
                .sum();
            if off <= SWEEP_TOLERANCE * SWEEP_TOLERANCE * total_mass {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
        let values: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        // Eigenvectors are the columns of the accumulated rotation product.
        let vectors: Vec<Vec<f64>> = (0..n).map(|k| (0..n).map(|i| v[i][k]).collect()).collect();
        (values, vectors)
    }
}

/// One Jacobi rotation zeroing `a[p][q]`, accumulated into `v`.
fn rotate(a: &mut [Vec<f64>], v: &mut [Vec<f64>], p: usize, q: usize) {
    let apq = a[p][q];
    if apq == 0.0 {
        return;
    }
    let tau = (a[q][q] - a[p][p]) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.len();

    let app = a[p][p];
    let aqq = a[q][q];
    a[p][p] = app - t * apq;
    a[q][q] = aqq + t * apq;
    a[p][q] = 0.0;
    a[q][p] = 0.0;
    // Rows p and q are rewritten while scanning every other row i, so the
    // index loop stays.
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        if i != p && i != q {
            let aip = a[i][p];
            let aiq = a[i][q];
            a[i][p] = c * aip - s * aiq;
            a[p][i] = a[i][p];
            a[i][q] = s * aip + c * aiq;
            a[q][i] = a[i][q];
        }
    }
    for row in v.iter_mut() {
        let vip = row[p];
        let viq = row[q];
        row[p] = c * vip - s * viq;
        row[q] = s * vip + c * viq;
    }
}

/// Dense complex matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, EigenError> {
        if data.len() != rows * cols {
            return Err(EigenError::DataLengthMismatch {
                got: data.len(),
                n: rows,
            });
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let data = (0..rows * cols)
            .map(|idx| f(idx / cols, idx % cols))
            .collect();
        ComplexMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    /// Largest singular value, computed as `√λ_max(AᴴA)` with the Hermitian
    /// product embedded as a real symmetric matrix of twice the dimension.
    pub fn operator_norm(&self) -> f64 {
        assert!(
            self.rows * self.cols <= 1 << 16,
            "operator_norm caps at 65536 entries, got {}x{}",
            self.rows,
            self.cols
        );
        let m = self.cols;
        // h = AᴴA, Hermitian m×m.
        let mut h = vec![Complex64::new(0.0, 0.0); m * m];
        for i in 0..m {
            for j in i..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..self.rows {
                    acc += self.get(r, i).conj() * self.get(r, j);
                }
                h[i * m + j] = acc;
                h[j * m + i] = acc.conj();
            }
        }
        // Real embedding [[Re h, -Im h], [Im h, Re h]] shares the spectrum
        // of h with doubled multiplicities.
        let embed = SymMatrix::from_fn(2 * m, |i, j| {
            let (bi, ii) = (i / m, i % m);
            let (bj, jj) = (j / m, j % m);
            let z = h[ii * m + jj];
            match (bi, bj) {
                (0, 0) | (1, 1) => z.re,
                (0, 1) => -z.im,
                (1, 0) => z.im,
                _ => unreachable!(),
            }
        });
        let lam_max = embed
            .eigen_pairs()
            .0
            .into_iter()
            .fold(0.0f64, f64::max);
        lam_max.max(0.0).sqrt()
    }
}
