//! Dense complex/real matrices, seeded random streams, QR decomposition and
//! the complex-to-real model transform used by the joint detector.
//!
//! Only the shapes the simulator needs are supported: `N x 2` channels,
//! `N x M` received blocks and their `2N`-row real counterparts.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

/// Threshold on `|R_kk|` below which a channel is treated as rank deficient.
pub const DEGENERATE_THRESHOLD: f64 = 1e-12;

/// Name of the generator behind [`RngStream`], recorded in run manifests.
pub const GENERATOR_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64 + set_stream";

/// Dense complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("complex matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from per-column vectors of equal length.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("ragged columns".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            data.extend(columns.iter().map(|c| c[r]));
        }
        Self::new(rows, cols, data)
    }

    /// Builds a matrix from per-row vectors of equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Multiplies column `c` by a real factor in place.
    pub fn scale_column(&mut self, c: usize, factor: f64) {
        for r in 0..self.rows {
            self[(r, c)] *= factor;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Dense real matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("real matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} times vector of {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }
}

impl std::ops::Index<(usize, usize)> for RealMatrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

/// Seeded random stream: one per realization. Identical `(seed, stream)`
/// pairs replay identical draws; distinct stream ids select independent
/// ChaCha keystreams.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Standard circularly-symmetric complex Gaussian, unit total variance.
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    }

    /// Uniform random bits.
    pub fn bits(&mut self, len: usize) -> Vec<u8> {
        (0..len).map(|_| (self.rng.next_u32() & 1) as u8).collect()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// I.i.d. CN(0, 1) entries: block Rayleigh fading coefficients.
pub fn sample_rayleigh(rows: usize, cols: usize, rng: &mut RngStream) -> Result<ComplexMatrix> {
    let data = (0..rows * cols).map(|_| rng.complex_gaussian()).collect();
    ComplexMatrix::new(rows, cols, data)
}

/// I.i.d. complex AWGN with the given per-entry (total) variance.
pub fn sample_awgn(rows: usize, cols: usize, noise_variance: f64, rng: &mut RngStream) -> Result<ComplexMatrix> {
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be positive, got {noise_variance}"
        )));
    }
    let sigma = noise_variance.sqrt();
    let data = (0..rows * cols).map(|_| rng.complex_gaussian() * sigma).collect();
    ComplexMatrix::new(rows, cols, data)
}

/// Thin result of [`qr_decompose`]: `H = Q R` with `Q` unitary (`N x N`)
/// and `R` upper triangular (`N x cols`) with real non-negative diagonal.
#[derive(Clone, Debug)]
pub struct QrDecomposition {
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
}

/// Householder QR of a tall complex matrix.
///
/// The diagonal of `R` is rotated onto the non-negative real axis, which
/// makes the decomposition unique for full-rank input.
pub fn qr_decompose(h: &ComplexMatrix) -> Result<QrDecomposition> {
    let (n, k) = (h.rows(), h.cols());
    if n < k {
        return Err(Error::Dimension(format!("QR needs rows >= cols, got {n}x{k}")));
    }
    let mut r = h.clone();
    let mut q = ComplexMatrix::identity(n);
    let zero = Complex64::new(0.0, 0.0);

    for col in 0..k {
        let tail_norm_sqr: f64 = (col + 1..n).map(|i| r[(i, col)].norm_sqr()).sum();
        if tail_norm_sqr > 0.0 {
            let x0 = r[(col, col)];
            let norm = (x0.norm_sqr() + tail_norm_sqr).sqrt();
            let phase = if x0.norm() > 0.0 {
                x0 / x0.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let alpha = -phase * norm;
            // Householder vector v = x - alpha e1, reflector I - 2 v v^H / |v|^2.
            let mut v: Vec<Complex64> = (col..n).map(|i| r[(i, col)]).collect();
            v[0] -= alpha;
            let v_norm_sqr: f64 = v.iter().map(Complex64::norm_sqr).sum();
            let scale = 2.0 / v_norm_sqr;
            for j in col..k {
                let dot: Complex64 = v.iter().enumerate().map(|(t, vt)| vt.conj() * r[(col + t, j)]).sum();
                for (t, vt) in v.iter().enumerate() {
                    r[(col + t, j)] -= vt * dot * scale;
                }
            }
            for row in 0..n {
                let dot: Complex64 = v.iter().enumerate().map(|(t, vt)| q[(row, col + t)] * vt).sum();
                for (t, vt) in v.iter().enumerate() {
                    q[(row, col + t)] -= dot * vt.conj() * scale;
                }
            }
            for i in col + 1..n {
                r[(i, col)] = zero;
            }
        }
        let diag = r[(col, col)];
        let magnitude = diag.norm();
        if magnitude < DEGENERATE_THRESHOLD {
            return Err(Error::DegenerateChannel { index: col, magnitude });
        }
        let phase = diag / magnitude;
        for j in col..k {
            r[(col, j)] *= phase.conj();
        }
        r[(col, col)] = Complex64::new(magnitude, 0.0);
        for row in 0..n {
            q[(row, col)] *= phase;
        }
    }
    Ok(QrDecomposition { q, r })
}

/// Stacks real parts over imaginary parts: `N x M` complex to `2N x M` real.
pub fn to_real_observation(y: &ComplexMatrix) -> RealMatrix {
    let (n, m) = (y.rows(), y.cols());
    let mut data = Vec::with_capacity(2 * n * m);
    for r in 0..n {
        data.extend(y.row(r).iter().map(|z| z.re));
    }
    for r in 0..n {
        data.extend(y.row(r).iter().map(|z| z.im));
    }
    RealMatrix {
        rows: 2 * n,
        cols: m,
        data,
    }
}

/// Inverse of [`to_real_observation`].
pub fn from_real_observation(y: &RealMatrix) -> Result<ComplexMatrix> {
    if !y.rows().is_multiple_of(2) {
        return Err(Error::Dimension(format!("odd row count {}", y.rows())));
    }
    let n = y.rows() / 2;
    let data = (0..n)
        .flat_map(|r| (0..y.cols()).map(move |c| (r, c)))
        .map(|(r, c)| Complex64::new(y[(r, c)], y[(r + n, c)]))
        .collect();
    ComplexMatrix::new(n, y.cols(), data)
}

/// Real-valued channel `[[Re H, -Im H], [Im H, Re H]]`.
pub fn to_real_channel(h: &ComplexMatrix) -> RealMatrix {
    let (n, k) = (h.rows(), h.cols());
    let cols = 2 * k;
    let mut data = vec![0.0; 2 * n * cols];
    for r in 0..n {
        for c in 0..k {
            let z = h[(r, c)];
            data[r * cols + c] = z.re;
            data[r * cols + k + c] = -z.im;
            data[(r + n) * cols + c] = z.im;
            data[(r + n) * cols + k + c] = z.re;
        }
    }
    RealMatrix {
        rows: 2 * n,
        cols,
        data,
    }
}

/// Real stacking `[Re x; Im x]` of a complex vector.
pub fn stack_vector(x: &[Complex64]) -> Vec<f64> {
    x.iter().map(|z| z.re).chain(x.iter().map(|z| z.im)).collect()
}
