//! Distribution statistics over image embeddings: Fréchet distance between
//! Gaussian fits, and exact t-SNE for 2-D visualisation.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::imaging::{to_grayscale, RasterImage};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("feature file syntax: {0}")]
    Syntax(String),
    #[error("non-finite value in row {0}")]
    NonFinite(usize),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e}, tolerance {tolerance:e})")]
    NotPsd { eigenvalue: f64, tolerance: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("failed to converge at row/iteration {0}")]
    Convergence(usize),
    #[error("Fréchet distance {0:e} is negative beyond rounding")]
    NegativeDistance(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `n` embeddings of dimension `d`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    n: usize,
    d: usize,
    values: Vec<f32>,
}

pub const FEATURE_MAGIC: &[u8; 4] = b"FSET";

impl FeatureSet {
    pub fn new(n: usize, d: usize, values: Vec<f32>) -> Result<Self, EmbedError> {
        if d == 0 {
            return Err(EmbedError::Invariant("dimension must be at least 1".into()));
        }
        if values.len() != n * d {
            return Err(EmbedError::Syntax(format!("{} values for {n}x{d}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite(i / d));
        }
        if n < 2 {
            return Err(EmbedError::Invariant(format!("{n} rows; covariance needs at least 2")));
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self, EmbedError> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(EmbedError::Syntax("ragged rows".into()));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Binary layout: `FSET`, u32 n, u32 d (little-endian), then n*d f32 LE.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.values.len() * 4);
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.d as u32).to_le_bytes());
        // reserved, keeps the header at 16 bytes
        out.extend_from_slice(&0u32.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbedError> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }
}

fn parse_binary(bytes: &[u8]) -> Result<FeatureSet, EmbedError> {
    if bytes.len() < 12 {
        return Err(EmbedError::Syntax("truncated header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let (n, d) = (word(4), word(8));
    let payload = n * d * 4;
    // Writers pad the header to 16 bytes; a bare 12-byte header is accepted too.
    let body = if bytes.len() == 16 + payload {
        &bytes[16..]
    } else if bytes.len() == 12 + payload {
        &bytes[12..]
    } else {
        return Err(EmbedError::Syntax(format!(
            "expected {payload} payload bytes for {n}x{d}, file has {}",
            bytes.len()
        )));
    };
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    FeatureSet::new(n, d, values)
}

fn parse_csv(bytes: &[u8]) -> Result<FeatureSet, EmbedError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let d = rdr.headers().map_err(|e| EmbedError::Syntax(e.to_string()))?.len();
    let mut values = Vec::new();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| EmbedError::Syntax(e.to_string()))?;
        for cell in rec.iter() {
            let v: f32 = cell
                .parse()
                .map_err(|_| EmbedError::Syntax(format!("row {n}: {cell:?} is not a number")))?;
            if !v.is_finite() {
                return Err(EmbedError::NonFinite(n));
            }
            values.push(v);
        }
        n += 1;
    }
    FeatureSet::new(n, d, values)
}

/// Reads either the binary `FSET` format or a headered CSV.
pub fn read_features(mut reader: impl Read) -> Result<FeatureSet, EmbedError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.starts_with(FEATURE_MAGIC) {
        parse_binary(&bytes)
    } else {
        parse_csv(&bytes)
    }
}

pub fn load_features(path: &Path) -> Result<FeatureSet, EmbedError> {
    read_features(std::fs::File::open(path)?)
}

/// Mean vector and covariance matrix of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl FeatureStats {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self, EmbedError> {
        if sigma.nrows() != mu.len() || sigma.ncols() != mu.len() {
            return Err(EmbedError::Dimension(mu.len(), sigma.nrows()));
        }
        check_symmetric(&sigma)?;
        if sigma.diagonal().iter().any(|&v| v < 0.0) {
            return Err(EmbedError::Invariant("negative variance".into()));
        }
        Ok(Self { mu, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

const SYMMETRY_TOL: f64 = 1e-9;

fn check_symmetric(m: &DMatrix<f64>) -> Result<(), EmbedError> {
    if !m.is_square() {
        return Err(EmbedError::Dimension(m.nrows(), m.ncols()));
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(EmbedError::Invariant(format!("asymmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Column means and unbiased covariance (divisor `n - 1`), symmetrized.
pub fn stats(fs: &FeatureSet) -> FeatureStats {
    let (n, d) = (fs.n, fs.d);
    let mut mu = DVector::<f64>::zeros(d);
    for i in 0..n {
        for (m, &v) in mu.iter_mut().zip(fs.row(i)) {
            *m += v as f64;
        }
    }
    mu /= n as f64;
    let centered = DMatrix::from_fn(n, d, |i, j| fs.row(i)[j] as f64 - mu[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    FeatureStats {
        mu,
        sigma: symmetrize(&cov),
    }
}

/// Relative clamp below which negative eigenvalues count as rounding noise.
pub const EIGEN_CLAMP: f64 = 1e-10;

fn clamped_eigenvalues(m: &DMatrix<f64>, eigenvalues: &DVector<f64>) -> Result<Vec<f64>, EmbedError> {
    let tolerance = EIGEN_CLAMP * m.norm();
    eigenvalues
        .iter()
        .map(|&l| {
            if l < -tolerance {
                Err(EmbedError::NotPsd {
                    eigenvalue: l,
                    tolerance,
                })
            } else {
                Ok(l.max(0.0))
            }
        })
        .collect()
}

/// Symmetric square root of a symmetric PSD matrix via eigendecomposition.
pub fn matrix_sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, EmbedError> {
    check_symmetric(m)?;
    let eig = SymmetricEigen::new(symmetrize(m));
    let roots: Vec<f64> = clamped_eigenvalues(m, &eig.eigenvalues)?
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * roots[j]);
    Ok(symmetrize(&(scaled * v.transpose())))
}

/// Tolerance for clamping slightly negative distances to zero.
pub const FID_NEGATIVE_CLAMP: f64 = 1e-6;

/// Fréchet distance `|mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))`.
///
/// The trace of the non-symmetric root is taken as the trace of the root of
/// the congruent symmetric matrix `S_a^(1/2) S_b S_a^(1/2)`, which has the
/// same eigenvalues.
pub fn fid(a: &FeatureStats, b: &FeatureStats) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::Dimension(a.dim(), b.dim()));
    }
    let root_a = matrix_sqrt_psd(&a.sigma)?;
    let inner = symmetrize(&(&root_a * &b.sigma * &root_a));
    let eigenvalues = SymmetricEigen::new(inner.clone()).eigenvalues;
    let trace_root: f64 = clamped_eigenvalues(&inner, &eigenvalues)?
        .into_iter()
        .map(f64::sqrt)
        .sum();
    let mean_term = (&a.mu - &b.mu).norm_squared();
    let value = mean_term + a.sigma.trace() + b.sigma.trace() - 2.0 * trace_root;
    if value < 0.0 {
        if value > -FID_NEGATIVE_CLAMP {
            log::debug!("clamping Fréchet distance {value:e} to 0");
            return Ok(0.0);
        }
        return Err(EmbedError::NegativeDistance(value));
    }
    Ok(value)
}

/// Squared Euclidean distances between all rows.
pub fn squared_distances(fs: &FeatureSet) -> DMatrix<f64> {
    let n = fs.n;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = fs.row(i);
            (0..n)
                .map(|j| {
                    a.iter()
                        .zip(fs.row(j))
                        .map(|(&x, &y)| {
                            let t = x as f64 - y as f64;
                            t * t
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Per-row Gaussian precisions and the resulting conditional distributions.
#[derive(Debug, Clone)]
pub struct Calibration {
    /// `beta_i = 1 / (2 sigma_i^2)`.
    pub betas: Vec<f64>,
    /// Row `i` holds `p(j | i)`.
    pub conditional: DMatrix<f64>,
}

impl Calibration {
    pub fn sigmas(&self) -> Vec<f64> {
        self.betas.iter().map(|b| (0.5 / b).sqrt()).collect()
    }
}

pub const PERPLEXITY_TOL: f64 = 1e-3;
const MAX_BISECTION_STEPS: usize = 64;

/// Row distribution and its perplexity for precision `beta`.
fn row_distribution(dist: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let min = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (j, (&d, p)) in dist.iter().zip(out.iter_mut()).enumerate() {
        *p = if j == i { 0.0 } else { (-(d - min) * beta).exp() };
        sum += *p;
    }
    let mut entropy = 0.0;
    for p in out.iter_mut() {
        *p /= sum;
        if *p > 0.0 {
            entropy -= *p * p.ln();
        }
    }
    entropy.exp()
}

/// Bisection on each row's Gaussian bandwidth until the conditional
/// distribution reaches `perplexity`.
pub fn calibrate_perplexity(distances: &DMatrix<f64>, perplexity: f64) -> Result<Calibration, EmbedError> {
    let n = distances.nrows();
    if !distances.is_square() || n < 2 {
        return Err(EmbedError::Invariant(
            "distance matrix must be square with n >= 2".into(),
        ));
    }
    for i in 0..n {
        if distances[(i, i)] != 0.0 {
            return Err(EmbedError::Invariant(format!("nonzero diagonal at {i}")));
        }
        for j in 0..i {
            if distances[(i, j)] != distances[(j, i)] {
                return Err(EmbedError::Invariant(format!("asymmetric at ({i}, {j})")));
            }
        }
    }
    let max_perplexity = (n - 1) as f64;
    if !(perplexity >= 1.0) || perplexity > max_perplexity {
        return Err(EmbedError::Convergence(0));
    }
    let rows: Vec<Result<(f64, Vec<f64>), EmbedError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let dist: Vec<f64> = distances.row(i).iter().copied().collect();
            let others = || dist.iter().enumerate().filter(move |&(j, _)| j != i).map(|(_, &d)| d);
            let first = others().next().expect("n >= 2");
            let uniform = others().all(|d| d == first);
            // The maximum perplexity n - 1 is only attained by a uniform row.
            if perplexity >= max_perplexity && !uniform {
                return Err(EmbedError::Convergence(i));
            }
            let mut p = vec![0.0; n];
            let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
            let mut beta = 1.0;
            for _ in 0..MAX_BISECTION_STEPS {
                let perp = row_distribution(&dist, i, beta, &mut p);
                if (perp - perplexity).abs() <= PERPLEXITY_TOL * 0.1 {
                    return Ok((beta, p));
                }
                if perp > perplexity {
                    lo = beta;
                    beta = if hi.is_finite() { (lo + hi) / 2.0 } else { beta * 2.0 };
                } else {
                    hi = beta;
                    beta = (lo + hi) / 2.0;
                }
            }
            let perp = row_distribution(&dist, i, beta, &mut p);
            if (perp - perplexity).abs() <= PERPLEXITY_TOL {
                Ok((beta, p))
            } else {
                Err(EmbedError::Convergence(i))
            }
        })
        .collect();
    let mut betas = Vec::with_capacity(n);
    let mut conditional = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        let (beta, p) = row?;
        betas.push(beta);
        for (j, v) in p.into_iter().enumerate() {
            conditional[(i, j)] = v;
        }
    }
    Ok(Calibration { betas, conditional })
}

/// Achieved perplexity of each row of a conditional distribution matrix.
pub fn row_perplexities(conditional: &DMatrix<f64>) -> Vec<f64> {
    conditional
        .row_iter()
        .map(|r| {
            let h: f64 = r.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
            h.exp()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    /// `None` picks `max(n / (4 * early_exaggeration), 1)`; larger fixed
    /// rates oscillate on small sets.
    pub learning_rate: Option<f64>,
    pub momentum: f64,
    pub iterations: usize,
    pub seed: u64,
    pub early_exaggeration: f64,
}

impl Default for TsneConfig {
    /// Perplexity 30, size-scaled learning rate, momentum 0.8, 1000
    /// iterations, exaggeration 12.
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            learning_rate: None,
            momentum: 0.8,
            iterations: 1000,
            seed: 0,
            early_exaggeration: 12.0,
        }
    }
}

/// Symmetrized joint distribution `(p(j|i) + p(i|j)) / 2n`, floored at
/// 1e-12 off the diagonal and renormalized to sum to one.
pub fn joint_probabilities(conditional: &DMatrix<f64>) -> DMatrix<f64> {
    let n = conditional.nrows();
    let mut p = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            ((conditional[(i, j)] + conditional[(j, i)]) / (2.0 * n as f64)).max(1e-12)
        }
    });
    let total = p.sum();
    p /= total;
    p
}

/// Unnormalized Student-t kernel `1 / (1 + |y_i - y_j|^2)`, zero diagonal.
fn student_kernel(y: &[[f64; 2]]) -> Vec<Vec<f64>> {
    y.par_iter()
        .enumerate()
        .map(|(i, a)| {
            y.iter()
                .enumerate()
                .map(|(j, b)| {
                    if i == j {
                        0.0
                    } else {
                        let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
                        1.0 / (1.0 + dx * dx + dy * dy)
                    }
                })
                .collect()
        })
        .collect()
}

fn kernel_total(w: &[Vec<f64>]) -> f64 {
    w.iter().map(|r| r.iter().sum::<f64>()).sum()
}

/// `KL(P || Q)` for a joint `p` and embedding `y`.
pub fn kl_divergence(p: &DMatrix<f64>, y: &[[f64; 2]]) -> f64 {
    let w = student_kernel(y);
    let z = kernel_total(&w);
    let mut kl = 0.0;
    for (i, row) in w.iter().enumerate() {
        for (j, &wij) in row.iter().enumerate() {
            let pij = p[(i, j)];
            if i != j && pij > 0.0 {
                kl += pij * (pij / (wij / z)).ln();
            }
        }
    }
    kl
}

/// Analytic gradient of [`kl_divergence`] with respect to `y`:
/// `4 sum_j (p_ij - q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2)`.
pub fn kl_gradient(p: &DMatrix<f64>, y: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let w = student_kernel(y);
    gradient_from_kernel(p, y, &w, kernel_total(&w), 1.0)
}

fn gradient_from_kernel(p: &DMatrix<f64>, y: &[[f64; 2]], w: &[Vec<f64>], z: f64, exaggeration: f64) -> Vec<[f64; 2]> {
    let p_total = p.sum() * exaggeration;
    (0..y.len())
        .into_par_iter()
        .map(|i| {
            let mut g = [0.0; 2];
            for (j, &wij) in w[i].iter().enumerate() {
                if i == j {
                    continue;
                }
                let coef = (exaggeration * p[(i, j)] - p_total * wij / z) * wij;
                g[0] += coef * (y[i][0] - y[j][0]);
                g[1] += coef * (y[i][1] - y[j][1]);
            }
            [4.0 * g[0], 4.0 * g[1]]
        })
        .collect()
}

/// Momentum used while the joint distribution is exaggerated.
pub const EARLY_MOMENTUM: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct TsneResult {
    pub embedding: Vec<[f64; 2]>,
    pub kl: f64,
}

/// Exact t-SNE to two dimensions.
///
/// Gradient descent with momentum and per-coordinate adaptive gains; the
/// joint distribution is exaggerated for the first `min(250, iterations / 4)`
/// iterations. Deterministic for a given seed.
pub fn tsne(fs: &FeatureSet, cfg: &TsneConfig) -> Result<TsneResult, EmbedError> {
    let n = fs.n;
    if n < 4 {
        return Err(EmbedError::Invariant(format!("t-SNE needs at least 4 points, got {n}")));
    }
    if !(cfg.perplexity > 0.0 && cfg.perplexity < (n as f64 - 1.0) / 3.0) {
        return Err(EmbedError::Invariant(format!(
            "perplexity {} must be below (n - 1) / 3 = {:.3}",
            cfg.perplexity,
            (n as f64 - 1.0) / 3.0
        )));
    }
    if !(cfg.learning_rate.is_none_or(|r| r > 0.0 && r.is_finite())
        && (0.0..1.0).contains(&cfg.momentum)
        && cfg.early_exaggeration > 0.0)
    {
        return Err(EmbedError::Invariant("invalid optimizer settings".into()));
    }
    let cal = calibrate_perplexity(&squared_distances(fs), cfg.perplexity)?;
    let p = joint_probabilities(&cal.conditional);
    let learning_rate = cfg
        .learning_rate
        .unwrap_or_else(|| (n as f64 / (4.0 * cfg.early_exaggeration)).max(1.0));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = Normal::new(0.0, 1e-2).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [init.sample(&mut rng), init.sample(&mut rng)]).collect();
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let exaggerated = (cfg.iterations / 4).min(250);
    let mut kl = f64::NAN;

    for it in 0..cfg.iterations {
        let (ex, momentum) = if it < exaggerated {
            (cfg.early_exaggeration, EARLY_MOMENTUM.min(cfg.momentum))
        } else {
            (1.0, cfg.momentum)
        };
        let w = student_kernel(&y);
        let z = kernel_total(&w);
        let grad = gradient_from_kernel(&p, &y, &w, z, ex);
        for i in 0..n {
            for k in 0..2 {
                let same_sign = (grad[i][k] > 0.0) == (velocity[i][k] > 0.0);
                gains[i][k] = if same_sign {
                    gains[i][k] * 0.8
                } else {
                    gains[i][k] + 0.2
                };
                gains[i][k] = gains[i][k].max(0.01);
                velocity[i][k] = momentum * velocity[i][k] - learning_rate * gains[i][k] * grad[i][k];
                y[i][k] += velocity[i][k];
            }
        }
        let mean = y.iter().fold([0.0; 2], |m, v| [m[0] + v[0], m[1] + v[1]]);
        for v in &mut y {
            v[0] -= mean[0] / n as f64;
            v[1] -= mean[1] / n as f64;
        }
        kl = kl_divergence(&p, &y);
        if !kl.is_finite() || kl < -1e-12 {
            return Err(EmbedError::Convergence(it));
        }
    }
    Ok(TsneResult { embedding: y, kl })
}

pub fn write_embedding_csv(embedding: &[[f64; 2]], mut w: impl Write) -> std::io::Result<()> {
    use crate::padmetrics::format_sig9;
    writeln!(w, "x,y")?;
    for p in embedding {
        writeln!(w, "{},{}", format_sig9(p[0]), format_sig9(p[1]))?;
    }
    Ok(())
}

/// Grid size and bin count of [`patch_histogram_features`].
pub const STUB_GRID: u32 = 4;
pub const STUB_BINS: usize = 8;

/// Offline stand-in for a CNN embedder: per-cell gray-level histograms over a
/// 4x4 grid plus global mean and standard deviation (130 dimensions).
pub fn patch_histogram_features(img: &RasterImage) -> Vec<f32> {
    let gray = to_grayscale(img);
    let (w, h) = (gray.width(), gray.height());
    let mut out = Vec::with_capacity((STUB_GRID * STUB_GRID) as usize * STUB_BINS + 2);
    for gy in 0..STUB_GRID {
        for gx in 0..STUB_GRID {
            let (x0, x1) = (
                gx * w / STUB_GRID,
                ((gx + 1) * w / STUB_GRID).max(gx * w / STUB_GRID + 1).min(w),
            );
            let (y0, y1) = (
                gy * h / STUB_GRID,
                ((gy + 1) * h / STUB_GRID).max(gy * h / STUB_GRID + 1).min(h),
            );
            let mut hist = [0u32; STUB_BINS];
            let mut count = 0u32;
            for y in y0..y1 {
                for x in x0..x1 {
                    hist[gray.gray_at(x, y) as usize * STUB_BINS / 256] += 1;
                    count += 1;
                }
            }
            out.extend(hist.iter().map(|&c| c as f32 / count.max(1) as f32));
        }
    }
    let px = gray.pixels();
    let mean = px.iter().map(|&v| v as f64).sum::<f64>() / px.len() as f64;
    let var = px.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / px.len() as f64;
    out.push((mean / 255.0) as f32);
    out.push((var.sqrt() / 255.0) as f32);
    out
}
