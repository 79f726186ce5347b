//! Binary soft-margin SVM trained by simplified sequential minimal
//! optimization: full sweeps over the first multiplier, seeded random choice
//! of the second, cached kernel matrix.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::num::Real;

use super::kernel::KernelSpec;
use super::SvmError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Box constraint C.
    pub c: f64,
    /// KKT tolerance.
    pub tol: f64,
    /// Consecutive sweeps without an update before stopping.
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            tol: 1e-3,
            max_passes: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel<F: Real> {
    pub support_vectors: Vec<Vec<F>>,
    /// Multipliers of the support vectors, 0 < alpha <= C.
    pub alphas: Vec<F>,
    /// +-1 label of each support vector.
    pub sv_labels: Vec<F>,
    pub bias: F,
    pub kernel: KernelSpec<F>,
}

impl<F: Real> BinaryModel<F> {
    /// f(x) = sum_i alpha_i y_i k(x_i, x) + b
    pub fn decision(&self, x: &[F]) -> F {
        let mut f = self.bias;
        for ((sv, &a), &y) in self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .zip(&self.sv_labels)
        {
            f = f + a * y * self.kernel.eval_unchecked(sv, x);
        }
        f
    }

    pub fn predict(&self, x: &[F]) -> i8 {
        if self.decision(x) >= F::zero() {
            1
        } else {
            -1
        }
    }
}

/// Full training outcome: the model plus per-training-point multipliers for
/// diagnostics (KKT audits, dual feasibility).
#[derive(Debug, Clone)]
pub struct SmoResult<F: Real> {
    pub model: BinaryModel<F>,
    pub alphas: Vec<F>,
    pub sweeps: usize,
}

pub fn train_binary<F: Real, R: AsRef<[F]>>(
    x: &[R],
    y: &[i8],
    kernel: KernelSpec<F>,
    cfg: &TrainConfig,
) -> Result<BinaryModel<F>, SvmError> {
    Ok(train_binary_detailed(x, y, kernel, cfg)?.model)
}

pub fn train_binary_detailed<F: Real, R: AsRef<[F]>>(
    x: &[R],
    y: &[i8],
    kernel: KernelSpec<F>,
    cfg: &TrainConfig,
) -> Result<SmoResult<F>, SvmError> {
    let m = x.len();
    assert_eq!(m, y.len(), "feature/label length mismatch");
    if !y.contains(&1) || !y.contains(&-1) {
        return Err(SvmError::SingleClassInput);
    }
    let d = x[0].as_ref().len();
    for r in x {
        let r = r.as_ref();
        if r.len() != d {
            return Err(SvmError::DimensionMismatch {
                a: d,
                b: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFiniteInput);
        }
    }

    let c = F::from_f64_lossy(cfg.c);
    let tol = F::from_f64_lossy(cfg.tol);
    let two = F::from_f64_lossy(2.0);
    let min_step = F::from_f64_lossy(1e-7);

    // kernel matrix cache; pairwise problems at desk scale fit in memory
    let kmat = build_kernel_matrix(x, &kernel);
    let k = |i: usize, j: usize| kmat[i * m + j];

    let yv: Vec<F> = y
        .iter()
        .map(|&l| if l > 0 { F::one() } else { -F::one() })
        .collect();
    let mut alpha = vec![F::zero(); m];
    let mut b = F::zero();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // f(x_i) - y_i over the cached kernel column
    let f_of = |alpha: &[F], b: F, i: usize| -> F {
        let mut f = b;
        for (j, &a) in alpha.iter().enumerate() {
            if a > F::zero() {
                f = f + a * yv[j] * k(j, i);
            }
        }
        f
    };

    let mut passes = 0usize;
    let mut sweeps = 0usize;
    // hard cap so pathological inputs cannot spin forever
    let sweep_cap = 200 * cfg.max_passes.max(1) + 1000;
    loop {
    while passes < cfg.max_passes && sweeps < sweep_cap {
        sweeps += 1;
        let mut changed = 0usize;
        for i in 0..m {
            let ei = f_of(&alpha, b, i) - yv[i];
            let ri = yv[i] * ei;
            if !((ri < -tol && alpha[i] < c) || (ri > tol && alpha[i] > F::zero())) {
                continue;
            }
            // second index: scan every candidate from a random start so a
            // violating i is only skipped when no j can make progress
            let start = rng.gen_range(0..m);
            for off in 0..m {
                let j = (start + off) % m;
                if j == i {
                    continue;
                }
                let ej = f_of(&alpha, b, j) - yv[j];
                let (ai_old, aj_old) = (alpha[i], alpha[j]);
                let (lo, hi) = if yv[i] != yv[j] {
                    let diff = aj_old - ai_old;
                    (diff.max(F::zero()), (c + diff).min(c))
                } else {
                    let sum = ai_old + aj_old;
                    ((sum - c).max(F::zero()), sum.min(c))
                };
                if lo >= hi {
                    continue;
                }
                let eta = two * k(i, j) - k(i, i) - k(j, j);
                if eta >= F::zero() {
                    continue;
                }
                let mut aj = aj_old - yv[j] * (ei - ej) / eta;
                aj = aj.max(lo).min(hi);
                if (aj - aj_old).abs() < min_step {
                    continue;
                }
                let mut ai = ai_old + yv[i] * yv[j] * (aj_old - aj);
                // snap to the box so roundoff dust is not mistaken for an
                // interior support vector later
                ai = snap_to_box(ai, c);
                aj = snap_to_box(aj, c);
                alpha[i] = ai;
                alpha[j] = aj;

                let b1 =
                    b - ei - yv[i] * (ai - ai_old) * k(i, i) - yv[j] * (aj - aj_old) * k(i, j);
                let b2 =
                    b - ej - yv[i] * (ai - ai_old) * k(i, j) - yv[j] * (aj - aj_old) * k(j, j);
                b = if ai > F::zero() && ai < c {
                    b1
                } else if aj > F::zero() && aj < c {
                    b2
                } else {
                    (b1 + b2) / two
                };
                changed += 1;
                break;
            }
        }
        if changed == 0 {
            passes += 1;
        } else {
            passes = 0;
        }
    }

    // final bias from the converged multipliers: mean over margin support
    // vectors, or the midpoint of the KKT-feasible interval if none are
    // strictly inside the box
    let g_of = |i: usize| -> F {
        let mut g = F::zero();
        for (j, &a) in alpha.iter().enumerate() {
            if a > F::zero() {
                g = g + a * yv[j] * k(j, i);
            }
        }
        g
    };
    let mut sum = F::zero();
    let mut interior = 0usize;
    for i in 0..m {
        if alpha[i] > F::zero() && alpha[i] < c {
            sum = sum + yv[i] - g_of(i);
            interior += 1;
        }
    }
    b = if interior > 0 {
        sum / F::from_f64_lossy(interior as f64)
    } else {
        let mut b_lo = F::neg_infinity();
        let mut b_hi = F::infinity();
        for i in 0..m {
            let fi = yv[i] - g_of(i);
            let upper = (yv[i] > F::zero() && alpha[i] >= c)
                || (yv[i] < F::zero() && alpha[i] <= F::zero());
            if upper {
                b_hi = b_hi.min(fi);
            } else {
                b_lo = b_lo.max(fi);
            }
        }
        (b_lo + b_hi) / two
    };

    // the sweep loop judged convergence against its running bias; audit the
    // multipliers against the recomputed one and resume if anything slipped
    let mut worst = F::zero();
    for i in 0..m {
        let margin = yv[i] * (g_of(i) + b) - F::one();
        let violation = if alpha[i] <= F::zero() {
            (-margin).max(F::zero())
        } else if alpha[i] >= c {
            margin.max(F::zero())
        } else {
            margin.abs()
        };
        worst = worst.max(violation);
    }
    if worst <= tol || sweeps >= sweep_cap {
        break;
    }
    passes = 0;
    } // outer convergence loop

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    let mut sv_labels = Vec::new();
    for i in 0..m {
        if alpha[i] > F::zero() {
            support_vectors.push(x[i].as_ref().to_vec());
            alphas.push(alpha[i]);
            sv_labels.push(yv[i]);
        }
    }
    Ok(SmoResult {
        model: BinaryModel {
            support_vectors,
            alphas,
            sv_labels,
            bias: b,
            kernel,
        },
        alphas: alpha,
        sweeps,
    })
}

/// Clamp multipliers within `box_eps * c` of a bound onto the bound.
fn snap_to_box<F: Real>(a: F, c: F) -> F {
    let eps = c * F::from_f64_lossy(1e-12);
    if a <= eps {
        F::zero()
    } else if a >= c - eps {
        c
    } else {
        a
    }
}

fn build_kernel_matrix<F: Real, R: AsRef<[F]>>(x: &[R], kernel: &KernelSpec<F>) -> Vec<F> {
    let m = x.len();
    let mut kmat = vec![F::zero(); m * m];
    for i in 0..m {
        let xi = x[i].as_ref();
        for j in i..m {
            let v = kernel.eval_unchecked(xi, x[j].as_ref());
            kmat[i * m + j] = v;
            kmat[j * m + i] = v;
        }
    }
    kmat
}

/// Worst KKT violation over a training set, for convergence audits.
/// alpha_i = 0 requires y_i f(x_i) >= 1 - tol; interior alphas require
/// |y_i f(x_i) - 1| <= tol; alpha_i = C requires y_i f(x_i) <= 1 + tol.
pub fn kkt_max_violation<F: Real, R: AsRef<[F]>>(
    model: &BinaryModel<F>,
    x: &[R],
    y: &[i8],
    alphas: &[F],
    cfg: &TrainConfig,
) -> F {
    let c = F::from_f64_lossy(cfg.c);
    let mut worst = F::zero();
    for ((xi, &yi), &a) in x.iter().zip(y).zip(alphas) {
        let yf = F::from_f64_lossy(yi as f64) * model.decision(xi.as_ref());
        let margin = yf - F::one();
        let violation = if a <= F::zero() {
            (-margin).max(F::zero())
        } else if a >= c {
            margin.max(F::zero())
        } else {
            margin.abs()
        };
        worst = worst.max(violation);
    }
    worst
}
