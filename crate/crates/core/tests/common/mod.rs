//! Helpers shared by the integration tests: brute-force layer oracles,
//! finite-difference gradients, random tiny models and PDBML fixtures.
#![allow(dead_code)]

use std::io::Write;
use std::path::Path;

use flate2::write::GzEncoder;
use flate2::Compression;
use psc_core::nn::{bce_loss, Model, ModelConfig, Parameters, Real, Tensor, PARAM_NAMES};
use psc_core::seq::{MonomerCode, Vocabulary};
use psc_core::synth::TOY_CODES;
use rand::Rng;

/// `out[t][o] = relu(b[o] + sum_j sum_i x[t+j][i] * w[j][i][o])`, written
/// with explicit nested indexing.
pub fn naive_conv(x: &[Vec<f64>], w: &[Vec<Vec<f64>>], b: &[f64]) -> Vec<Vec<f64>> {
    let k = w.len();
    let c_out = b.len();
    (0..=x.len() - k)
        .map(|t| {
            (0..c_out)
                .map(|o| {
                    let mut z = b[o];
                    for j in 0..k {
                        for (i, &xv) in x[t + j].iter().enumerate() {
                            z += xv * w[j][i][o];
                        }
                    }
                    z.max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Window maxima and the first row attaining each.
#[allow(clippy::needless_range_loop)]
pub fn naive_maxpool(x: &[Vec<f64>], window: usize) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let c = x[0].len();
    let mut vals = Vec::new();
    let mut rows = Vec::new();
    for p in 0..x.len() / window {
        let mut v = vec![f64::NEG_INFINITY; c];
        let mut r = vec![0; c];
        for t in p * window..(p + 1) * window {
            for ch in 0..c {
                if x[t][ch] > v[ch] {
                    v[ch] = x[t][ch];
                    r[ch] = t;
                }
            }
        }
        vals.push(v);
        rows.push(r);
    }
    (vals, rows)
}

pub fn naive_sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn naive_bce(p: f64, y: f64) -> f64 {
    if y == 1.0 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

pub fn to_rows(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.shape()[0])
        .map(|i| t.row(i).iter().map(|&v| v as f64).collect())
        .collect()
}

/// A random valid configuration with input length <= 30 and widths <= 4.
pub fn random_tiny_config<R: Rng>(rng: &mut R) -> ModelConfig {
    loop {
        let cfg = ModelConfig {
            vocab_size: rng.gen_range(2..=6),
            embed_dim: rng.gen_range(1..=4),
            conv1_filters: rng.gen_range(1..=4),
            conv2_filters: rng.gen_range(1..=4),
            pool1_window: rng.gen_range(1..=3),
            conv3_filters: rng.gen_range(1..=4),
            pool2_window: rng.gen_range(1..=3),
            input_len: rng.gen_range(10..=30),
        };
        if cfg.validate().is_ok() {
            return cfg;
        }
    }
}

/// Glorot weights plus small random biases, so that no pre-activation
/// sits exactly on the ReLU kink.
pub fn random_model<R: Rng>(cfg: ModelConfig, rng: &mut R) -> Model {
    let mut params = Parameters::init(&cfg, rng);
    for t in [
        &mut params.conv1_b,
        &mut params.conv2_b,
        &mut params.conv3_b,
        &mut params.dense_b,
    ] {
        for v in t.data_mut() {
            *v = rng.gen_range(-0.1..0.1);
        }
    }
    Model::new(cfg, params).unwrap()
}

/// Random content of length 1..=L followed by padding.
pub fn random_indices<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> Vec<u32> {
    let content = rng.gen_range(1..=cfg.input_len);
    (0..cfg.input_len)
        .map(|t| {
            if t < content {
                rng.gen_range(1..=cfg.vocab_size as u32)
            } else {
                0
            }
        })
        .collect()
}

/// ReLU masks and pooling choices; equal patterns mean the loss is smooth
/// along the segment between two parameter vectors.
fn activation_pattern(model: &Model, indices: &[u32]) -> (Vec<bool>, Vec<usize>) {
    let (_, c) = model.forward(indices).unwrap();
    let mask = [&c.conv1, &c.conv2, &c.conv3]
        .iter()
        .flat_map(|t| t.data().iter().map(|&v| v > 0.0))
        .collect();
    let argmax = c.pool1_argmax.iter().chain(&c.pool2_argmax).copied().collect();
    (mask, argmax)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GradCheck {
    pub checked: usize,
    /// Entries whose finite-difference stencil crosses a ReLU or pooling
    /// switch, where the loss is not differentiable.
    pub skipped: usize,
    pub max_rel_err: f64,
    pub worst: Option<(&'static str, usize, f64, f64)>,
}

/// Scale below which a gradient entry counts as zero for the relative
/// error.
pub const GRAD_FLOOR: f64 = 1e-8;

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(GRAD_FLOOR)
}

/// Central differences with step `h` on every parameter entry.
pub fn grad_check(model: &Model, indices: &[u32], label: Real, h: Real) -> GradCheck {
    let (_, cache) = model.forward(indices).unwrap();
    let analytic = model.backward(&cache, label).unwrap();
    let base = activation_pattern(model, indices);
    let mut probe = model.clone();
    let mut out = GradCheck::default();
    for (ti, name) in PARAM_NAMES.iter().enumerate() {
        for e in 0..analytic.tensors()[ti].len() {
            let orig = model.params.tensors()[ti].data()[e];
            let eval = |delta: Real, probe: &mut Model| {
                probe.params.tensors_mut()[ti].data_mut()[e] = orig + delta;
                let p = probe.predict_proba(indices).unwrap();
                let pattern = activation_pattern(probe, indices);
                (bce_loss(p, label) as f64, pattern == base)
            };
            let (plus, same_plus) = eval(h, &mut probe);
            let (minus, same_minus) = eval(-h, &mut probe);
            probe.params.tensors_mut()[ti].data_mut()[e] = orig;
            if !(same_plus && same_minus) {
                out.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * h as f64);
            let a = analytic.tensors()[ti].data()[e] as f64;
            let err = relative_error(a, numeric);
            out.checked += 1;
            if err > out.max_rel_err {
                out.max_rel_err = err;
                out.worst = Some((name, e, a, numeric));
            }
        }
    }
    out
}

pub fn toy_vocab() -> Vocabulary {
    Vocabulary::from_codes(TOY_CODES.iter().map(|c| MonomerCode::new(c).unwrap()).collect()).unwrap()
}

/// A PDBML document with one `entity_poly_seq` row per residue, in the
/// attribute style of the archive's XML files.
pub fn pdbml_doc(entry: &str, entities: &[(&str, &[&str])]) -> String {
    let mut rows = String::new();
    let mut polys = String::new();
    for (id, residues) in entities {
        polys.push_str(&format!(
            "    <PDBx:entity_poly entity_id=\"{id}\">\n      <PDBx:type>polypeptide(L)</PDBx:type>\n    </PDBx:entity_poly>\n"
        ));
        for (n, code) in residues.iter().enumerate() {
            rows.push_str(&format!(
                "    <PDBx:entity_poly_seq entity_id=\"{id}\" mon_id=\"{code}\" num=\"{}\">\n      <PDBx:hetero>n</PDBx:hetero>\n    </PDBx:entity_poly_seq>\n",
                n + 1
            ));
        }
    }
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" ?>\n<PDBx:datablock datablockName=\"{entry}\" xmlns:PDBx=\"http://pdbml.pdb.org/schema/pdbx-v50.xsd\">\n  <PDBx:entity_polyCategory>\n{polys}  </PDBx:entity_polyCategory>\n  <PDBx:entity_poly_seqCategory>\n{rows}  </PDBx:entity_poly_seqCategory>\n</PDBx:datablock>\n"
    )
}

pub fn write_gz(path: &Path, body: &str) {
    let mut enc = GzEncoder::new(std::fs::File::create(path).unwrap(), Compression::default());
    enc.write_all(body.as_bytes()).unwrap();
    enc.finish().unwrap();
}
