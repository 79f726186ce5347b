//! Versioned text serialization for the multi-class model, including its
//! preprocessing record (standardizer and PCA).

use std::io::{BufRead, Write};

use crate::model::MotionLabel;
use crate::num::Real;
use crate::pca::{load_pca, save_pca};

use super::kernel::KernelSpec;
use super::multiclass::{MultiClassModel, Standardizer};
use super::smo::BinaryModel;
use super::SvmError;

const MODEL_HEADER: &str = "calfsense-svm v1";

pub fn save_multiclass<F: Real, W: Write>(
    model: &MultiClassModel<F>,
    w: &mut W,
) -> std::io::Result<()> {
    writeln!(w, "{MODEL_HEADER}")?;
    writeln!(
        w,
        "classes {}",
        model
            .classes
            .iter()
            .map(|c| c.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    )?;
    match &model.standardizer {
        Some(s) => {
            writeln!(w, "standardizer 1")?;
            writeln!(w, "mean {}", join17(&s.mean))?;
            writeln!(w, "std {}", join17(&s.std))?;
        }
        None => writeln!(w, "standardizer 0")?,
    }
    match &model.pca {
        Some(p) => {
            writeln!(w, "pca 1")?;
            save_pca(p, w)?;
        }
        None => writeln!(w, "pca 0")?,
    }
    writeln!(w, "pairs {}", model.pairs.len())?;
    for (a, b, m) in &model.pairs {
        writeln!(w, "pair {a} {b}")?;
        match m.kernel {
            KernelSpec::Linear => writeln!(w, "kernel linear")?,
            KernelSpec::Rbf { gamma } => {
                writeln!(w, "kernel rbf {:.17e}", gamma.to_f64_lossy())?
            }
        }
        writeln!(w, "bias {:.17e}", m.bias.to_f64_lossy())?;
        let dim = m.support_vectors.first().map_or(0, |v| v.len());
        writeln!(w, "nsv {} dim {dim}", m.support_vectors.len())?;
        writeln!(w, "alphas {}", join17(&m.alphas))?;
        writeln!(w, "labels {}", join17(&m.sv_labels))?;
        for sv in &m.support_vectors {
            writeln!(w, "sv {}", join17(sv))?;
        }
    }
    Ok(())
}

pub fn load_multiclass<F: Real, R: BufRead>(r: &mut R) -> Result<MultiClassModel<F>, SvmError> {
    let mut text = String::new();
    let mut rdr = r;
    std::io::Read::read_to_string(&mut rdr, &mut text)
        .map_err(|e| SvmError::Parse(e.to_string()))?;
    struct Cursor<'a> {
        lines: Vec<&'a str>,
        pos: usize,
    }
    impl<'a> Cursor<'a> {
        fn next(&mut self) -> Result<&'a str, SvmError> {
            let line = self
                .lines
                .get(self.pos)
                .copied()
                .ok_or_else(|| SvmError::Parse("unexpected end of file".into()))?;
            self.pos += 1;
            Ok(line)
        }
    }
    let mut cur = Cursor {
        lines: text.lines().collect(),
        pos: 0,
    };

    if cur.next()? != MODEL_HEADER {
        return Err(SvmError::Parse("bad model header".into()));
    }
    let classes_line = cur.next()?;
    let classes: Result<Vec<MotionLabel>, _> = classes_line
        .strip_prefix("classes ")
        .ok_or_else(|| SvmError::Parse("missing classes line".into()))?
        .split_whitespace()
        .map(|t| t.parse::<MotionLabel>())
        .collect();
    let classes = classes.map_err(|e| SvmError::Parse(e.to_string()))?;

    let standardizer = match cur.next()? {
        "standardizer 1" => {
            let mean = parse_vec::<F>(cur.next()?, "mean")?;
            let std = parse_vec::<F>(cur.next()?, "std")?;
            Some(Standardizer { mean, std })
        }
        "standardizer 0" => None,
        other => return Err(SvmError::Parse(format!("bad standardizer line `{other}`"))),
    };

    let pca = match cur.next()? {
        "pca 1" => {
            // the PCA block is line-oriented; re-buffer the remaining lines
            let rest = &cur.lines[cur.pos..];
            let (dim, k) = peek_pca_shape(rest)?;
            // header, dim, k, total_variance, mean, eigenvalues, k components
            let block_lines = 6 + k;
            if rest.len() < block_lines {
                return Err(SvmError::Parse("truncated pca block".into()));
            }
            let block = rest[..block_lines].join("\n");
            let model = load_pca(&mut std::io::BufReader::new(block.as_bytes()))
                .map_err(|e| SvmError::Parse(e.to_string()))?;
            debug_assert_eq!(model.mean.len(), dim);
            cur.pos += block_lines;
            Some(model)
        }
        "pca 0" => None,
        other => return Err(SvmError::Parse(format!("bad pca line `{other}`"))),
    };

    let n_pairs: usize = parse_kv(cur.next()?, "pairs")?;
    let mut pairs = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let pair_line = cur.next()?;
        let mut it = pair_line
            .strip_prefix("pair ")
            .ok_or_else(|| SvmError::Parse(format!("bad pair line `{pair_line}`")))?
            .split_whitespace();
        let a: usize = parse_tok(it.next())?;
        let b: usize = parse_tok(it.next())?;
        let kernel_line = cur.next()?;
        let kernel = if kernel_line == "kernel linear" {
            KernelSpec::Linear
        } else if let Some(g) = kernel_line.strip_prefix("kernel rbf ") {
            KernelSpec::Rbf {
                gamma: F::from_f64_lossy(
                    g.trim()
                        .parse()
                        .map_err(|_| SvmError::Parse("bad gamma".into()))?,
                ),
            }
        } else {
            return Err(SvmError::Parse(format!("bad kernel line `{kernel_line}`")));
        };
        let bias = F::from_f64_lossy(parse_kv(cur.next()?, "bias")?);
        let nsv_line = cur.next()?;
        let mut it = nsv_line
            .strip_prefix("nsv ")
            .ok_or_else(|| SvmError::Parse(format!("bad nsv line `{nsv_line}`")))?
            .split_whitespace();
        let nsv: usize = parse_tok(it.next())?;
        let _dim_word = it.next();
        let dim: usize = parse_tok(it.next())?;
        let alphas = parse_vec::<F>(cur.next()?, "alphas")?;
        let sv_labels = parse_vec::<F>(cur.next()?, "labels")?;
        if alphas.len() != nsv || sv_labels.len() != nsv {
            return Err(SvmError::Parse("alpha/label count mismatch".into()));
        }
        let mut support_vectors = Vec::with_capacity(nsv);
        for _ in 0..nsv {
            let sv = parse_vec::<F>(cur.next()?, "sv")?;
            if sv.len() != dim {
                return Err(SvmError::Parse("support vector dim mismatch".into()));
            }
            support_vectors.push(sv);
        }
        pairs.push((
            a,
            b,
            BinaryModel {
                support_vectors,
                alphas,
                sv_labels,
                bias,
                kernel,
            },
        ));
    }

    Ok(MultiClassModel {
        classes,
        pairs,
        standardizer,
        pca,
    })
}

fn peek_pca_shape(lines: &[&str]) -> Result<(usize, usize), SvmError> {
    if lines.len() < 3 {
        return Err(SvmError::Parse("truncated pca block".into()));
    }
    let dim: usize = parse_kv(lines[1], "dim")?;
    let k: usize = parse_kv(lines[2], "k")?;
    Ok((dim, k))
}

fn join17<F: Real>(v: &[F]) -> String {
    v.iter()
        .map(|x| format!("{:.17e}", x.to_f64_lossy()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_kv<T: std::str::FromStr>(line: &str, key: &str) -> Result<T, SvmError> {
    line.strip_prefix(key)
        .ok_or_else(|| SvmError::Parse(format!("expected `{key}`, got `{line}`")))?
        .trim()
        .parse()
        .map_err(|_| SvmError::Parse(format!("bad value in `{line}`")))
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>) -> Result<T, SvmError> {
    tok.ok_or_else(|| SvmError::Parse("missing token".into()))?
        .parse()
        .map_err(|_| SvmError::Parse("bad token".into()))
}

fn parse_vec<F: Real>(line: &str, key: &str) -> Result<Vec<F>, SvmError> {
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| SvmError::Parse(format!("expected `{key}`, got `{line}`")))?;
    rest.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map(F::from_f64_lossy)
                .map_err(|_| SvmError::Parse(format!("bad number in `{key}` line")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pca::fit_pca;
    use crate::svm::{train_multiclass, TrainConfig};

    #[test]
    fn save_load_round_trip_with_preprocessing() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64, (i % 3) as f64, (i % 7) as f64])
            .collect();
        let labels: Vec<MotionLabel> = (0..40)
            .map(|i| {
                if i < 20 {
                    MotionLabel::StepInSitu
                } else {
                    MotionLabel::WalkBackward
                }
            })
            .collect();
        let mut model =
            train_multiclass(&rows, &labels, KernelSpec::Rbf { gamma: 0.1 }, &TrainConfig::default())
                .unwrap();
        model.standardizer = Some(Standardizer::fit(&rows));
        model.pca = Some(fit_pca(&rows, 0.99).unwrap());

        let mut buf = Vec::new();
        save_multiclass(&model, &mut buf).unwrap();
        let back: MultiClassModel<f64> =
            load_multiclass(&mut std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn save_load_round_trip_bare() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels: Vec<MotionLabel> = (0..10)
            .map(|i| {
                if i < 5 {
                    MotionLabel::LiftHeel
                } else {
                    MotionLabel::LiftToes
                }
            })
            .collect();
        let model =
            train_multiclass(&rows, &labels, KernelSpec::Linear, &TrainConfig::default()).unwrap();
        let mut buf = Vec::new();
        save_multiclass(&model, &mut buf).unwrap();
        let back: MultiClassModel<f64> =
            load_multiclass(&mut std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(model, back);
    }
}
