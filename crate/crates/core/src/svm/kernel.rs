use crate::num::Real;

use super::SvmError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec<F: Real> {
    Linear,
    Rbf { gamma: F },
}

impl<F: Real> KernelSpec<F> {
    /// Kernel value without a dimension check; callers validate once.
    pub(crate) fn eval_unchecked(&self, u: &[F], v: &[F]) -> F {
        match *self {
            KernelSpec::Linear => u.iter().zip(v).map(|(&a, &b)| a * b).sum(),
            KernelSpec::Rbf { gamma } => {
                let d2: F = u
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| {
                        let d = a - b;
                        d * d
                    })
                    .sum();
                (-gamma * d2).exp()
            }
        }
    }
}

pub fn kernel_eval<F: Real>(k: &KernelSpec<F>, u: &[F], v: &[F]) -> Result<F, SvmError> {
    if u.len() != v.len() {
        return Err(SvmError::DimensionMismatch {
            a: u.len(),
            b: v.len(),
        });
    }
    Ok(k.eval_unchecked(u, v))
}

/// Default RBF bandwidth: 1 / (d * mean per-feature variance of the rows).
pub fn default_gamma<F: Real, R: AsRef<[F]>>(rows: &[R]) -> F {
    let m = rows.len();
    let d = rows.first().map_or(0, |r| r.as_ref().len());
    if m < 2 || d == 0 {
        return F::one();
    }
    let mf = F::from_f64_lossy(m as f64);
    let mut mean = vec![F::zero(); d];
    for r in rows {
        for (s, &v) in mean.iter_mut().zip(r.as_ref()) {
            *s = *s + v;
        }
    }
    for s in &mut mean {
        *s = *s / mf;
    }
    let mut var_sum = F::zero();
    for r in rows {
        for (&v, &mu) in r.as_ref().iter().zip(&mean) {
            let dvi = v - mu;
            var_sum = var_sum + dvi * dvi;
        }
    }
    let mean_var = var_sum / (mf * F::from_f64_lossy(d as f64));
    if mean_var > F::zero() {
        F::one() / (F::from_f64_lossy(d as f64) * mean_var)
    } else {
        F::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_is_dot_product() {
        let k = kernel_eval(&KernelSpec::Linear, &[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(k, 11.0);
    }

    #[test]
    fn rbf_at_zero_distance_is_one() {
        let u = [0.3, -0.7, 2.0];
        let k = kernel_eval(&KernelSpec::Rbf { gamma: 1.7 }, &u, &u).unwrap();
        assert_eq!(k, 1.0);
    }

    #[test]
    fn rbf_direct_value() {
        // gamma 0.5, squared distance 2 -> e^-1
        let k = kernel_eval(&KernelSpec::Rbf { gamma: 0.5 }, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((k - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert_eq!(
            kernel_eval(&KernelSpec::<f64>::Linear, &[1.0], &[1.0, 2.0]),
            Err(SvmError::DimensionMismatch { a: 1, b: 2 })
        );
    }
}
