//! Principal component analysis over feature matrices: covariance with the
//! 1/(m-1) sample convention, a cyclic Jacobi eigensolver, and retention of
//! the smallest component count reaching the variance target.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Error, PartialEq)]
pub enum PcaError {
    #[error("too few samples: {m}, need at least 2")]
    TooFewSamples { m: usize },
    #[error("non-finite input at row {row}, column {column}")]
    NonFiniteInput { row: usize, column: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid variance target {0}, must be in (0, 1]")]
    InvalidVarianceTarget(f64),
    #[error("model parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel<F: Real> {
    pub mean: Vec<F>,
    /// k rows of length d; rows are orthonormal principal axes.
    pub components: Vec<Vec<F>>,
    /// Retained eigenvalues, descending.
    pub eigenvalues: Vec<F>,
    /// Trace of the sample covariance.
    pub total_variance: F,
    pub k: usize,
}

impl<F: Real> PcaModel<F> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn explained_fraction(&self) -> F {
        let retained: F = self.eigenvalues.iter().copied().sum();
        if self.total_variance > F::zero() {
            retained / self.total_variance
        } else {
            F::one()
        }
    }
}

/// Fit PCA on `rows` (each of equal length), keeping the smallest k whose
/// cumulative eigenvalue fraction reaches `variance_target`.
pub fn fit_pca<F: Real, R: AsRef<[F]>>(
    rows: &[R],
    variance_target: f64,
) -> Result<PcaModel<F>, PcaError> {
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(PcaError::InvalidVarianceTarget(variance_target));
    }
    let m = rows.len();
    if m < 2 {
        return Err(PcaError::TooFewSamples { m });
    }
    let d = rows[0].as_ref().len();
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != d {
            return Err(PcaError::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        for (c, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(PcaError::NonFiniteInput { row: r, column: c });
            }
        }
    }

    let mf = F::from_f64_lossy(m as f64);
    let mut mean = vec![F::zero(); d];
    for row in rows {
        for (s, &v) in mean.iter_mut().zip(row.as_ref()) {
            *s = *s + v;
        }
    }
    for s in &mut mean {
        *s = *s / mf;
    }

    // sample covariance, 1/(m-1)
    let denom = F::from_f64_lossy((m - 1) as f64);
    let mut cov = vec![F::zero(); d * d];
    let mut centered = vec![F::zero(); d];
    for row in rows {
        for ((c, &v), &mu) in centered.iter_mut().zip(row.as_ref()).zip(&mean) {
            *c = v - mu;
        }
        for i in 0..d {
            let ci = centered[i];
            for j in i..d {
                cov[i * d + j] = cov[i * d + j] + ci * centered[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let total_variance = (0..d).map(|i| cov[i * d + i]).sum::<F>();

    let (eigenvalues, vectors) = jacobi_eigen(&mut cov, d);

    // sort descending, stable in original index order for ties
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigenvalues[b]
            .partial_cmp(&eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let target = F::from_f64_lossy(variance_target);
    let mut retained_values = Vec::new();
    let mut components = Vec::new();
    let mut cum = F::zero();
    for &idx in &order {
        let lambda = eigenvalues[idx].max(F::zero());
        let mut axis: Vec<F> = (0..d).map(|r| vectors[r * d + idx]).collect();
        fix_sign(&mut axis);
        retained_values.push(lambda);
        components.push(axis);
        cum = cum + lambda;
        if total_variance <= F::zero() || cum / total_variance >= target {
            break;
        }
    }

    Ok(PcaModel {
        mean,
        k: components.len(),
        components,
        eigenvalues: retained_values,
        total_variance,
    })
}

/// components . (x - mean)
pub fn pca_transform<F: Real>(model: &PcaModel<F>, x: &[F]) -> Result<Vec<F>, PcaError> {
    if x.len() != model.dim() {
        return Err(PcaError::DimensionMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    Ok(model
        .components
        .iter()
        .map(|axis| {
            axis.iter()
                .zip(x)
                .zip(&model.mean)
                .map(|((&a, &v), &mu)| a * (v - mu))
                .sum()
        })
        .collect())
}

/// mean + components^T . z
pub fn pca_inverse<F: Real>(model: &PcaModel<F>, z: &[F]) -> Result<Vec<F>, PcaError> {
    if z.len() != model.k {
        return Err(PcaError::DimensionMismatch {
            expected: model.k,
            got: z.len(),
        });
    }
    let mut x = model.mean.clone();
    for (axis, &c) in model.components.iter().zip(z) {
        for (xv, &a) in x.iter_mut().zip(axis) {
            *xv = *xv + c * a;
        }
    }
    Ok(x)
}

/// Largest-magnitude entry of each axis is made positive.
fn fix_sign<F: Real>(axis: &mut [F]) {
    let mut best = 0usize;
    for (i, v) in axis.iter().enumerate() {
        if v.abs() > axis[best].abs() {
            best = i;
        }
    }
    if axis[best] < F::zero() {
        for v in axis.iter_mut() {
            *v = -*v;
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix stored row-major.
/// Returns (eigenvalues, column eigenvectors). Destroys `a`.
fn jacobi_eigen<F: Real>(a: &mut [F], d: usize) -> (Vec<F>, Vec<F>) {
    let mut v = vec![F::zero(); d * d];
    for i in 0..d {
        v[i * d + i] = F::one();
    }
    if d == 0 {
        return (Vec::new(), v);
    }
    let eps = F::from_f64_lossy(1e-30);
    // scale-aware stopping threshold on the off-diagonal Frobenius norm
    let norm: F = (0..d * d).map(|i| a[i] * a[i]).sum::<F>().sqrt();
    let tol = norm * F::from_f64_lossy(1e-14) + eps;
    for _sweep in 0..100 {
        let mut off = F::zero();
        for p in 0..d {
            for q in (p + 1)..d {
                off = off + a[p * d + q] * a[p * d + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq.abs() <= eps {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (F::from_f64_lossy(2.0) * apq);
                let t = {
                    let sign = if theta < F::zero() { -F::one() } else { F::one() };
                    sign / (theta.abs() + (theta * theta + F::one()).sqrt())
                };
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;
                // rotate rows/columns p and q
                for i in 0..d {
                    let aip = a[i * d + p];
                    let aiq = a[i * d + q];
                    a[i * d + p] = c * aip - s * aiq;
                    a[i * d + q] = s * aip + c * aiq;
                }
                for j in 0..d {
                    let apj = a[p * d + j];
                    let aqj = a[q * d + j];
                    a[p * d + j] = c * apj - s * aqj;
                    a[q * d + j] = s * apj + c * aqj;
                }
                for i in 0..d {
                    let vip = v[i * d + p];
                    let viq = v[i * d + q];
                    v[i * d + p] = c * vip - s * viq;
                    v[i * d + q] = s * vip + c * viq;
                }
            }
        }
    }
    let eigenvalues: Vec<F> = (0..d).map(|i| a[i * d + i]).collect();
    (eigenvalues, v)
}

const MODEL_HEADER: &str = "calfsense-pca v1";

/// Versioned text serialization with 17 significant digits.
pub fn save_pca<F: Real, W: Write>(model: &PcaModel<F>, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{MODEL_HEADER}")?;
    writeln!(w, "dim {}", model.dim())?;
    writeln!(w, "k {}", model.k)?;
    writeln!(w, "total_variance {:.17e}", model.total_variance.to_f64_lossy())?;
    writeln!(w, "mean {}", join17(&model.mean))?;
    writeln!(w, "eigenvalues {}", join17(&model.eigenvalues))?;
    for axis in &model.components {
        writeln!(w, "component {}", join17(axis))?;
    }
    Ok(())
}

pub fn load_pca<F: Real, R: BufRead>(r: &mut R) -> Result<PcaModel<F>, PcaError> {
    let mut lines = r.lines();
    let header = next_line(&mut lines)?;
    if header != MODEL_HEADER {
        return Err(PcaError::Parse(format!("bad header `{header}`")));
    }
    let dim: usize = parse_kv(&next_line(&mut lines)?, "dim")?;
    let k: usize = parse_kv(&next_line(&mut lines)?, "k")?;
    let total_variance: f64 = parse_kv(&next_line(&mut lines)?, "total_variance")?;
    let mean = parse_vec(&next_line(&mut lines)?, "mean", dim)?;
    let eigenvalues = parse_vec(&next_line(&mut lines)?, "eigenvalues", k)?;
    let mut components = Vec::with_capacity(k);
    for _ in 0..k {
        components.push(parse_vec(&next_line(&mut lines)?, "component", dim)?);
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        total_variance: F::from_f64_lossy(total_variance),
        k,
    })
}

fn join17<F: Real>(v: &[F]) -> String {
    v.iter()
        .map(|x| format!("{:.17e}", x.to_f64_lossy()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn next_line<B: BufRead>(lines: &mut std::io::Lines<B>) -> Result<String, PcaError> {
    lines
        .next()
        .ok_or_else(|| PcaError::Parse("unexpected end of file".into()))?
        .map_err(|e| PcaError::Parse(e.to_string()))
}

fn parse_kv<T: std::str::FromStr>(line: &str, key: &str) -> Result<T, PcaError> {
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| PcaError::Parse(format!("expected `{key}`, got `{line}`")))?;
    rest.trim()
        .parse()
        .map_err(|_| PcaError::Parse(format!("bad value in `{line}`")))
}

fn parse_vec<F: Real>(line: &str, key: &str, expect: usize) -> Result<Vec<F>, PcaError> {
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| PcaError::Parse(format!("expected `{key}`, got `{line}`")))?;
    let vals: Result<Vec<F>, _> = rest
        .split_whitespace()
        .map(|t| t.parse::<f64>().map(F::from_f64_lossy))
        .collect();
    let vals = vals.map_err(|_| PcaError::Parse(format!("bad number in `{key}` line")))?;
    if vals.len() != expect {
        return Err(PcaError::Parse(format!(
            "`{key}` length {} != {expect}",
            vals.len()
        )));
    }
    Ok(vals)
}
