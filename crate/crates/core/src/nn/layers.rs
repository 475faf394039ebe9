//! Layer kernels and their hand-derived gradients.
//!
//! Activations are `(T, C)` row-major tensors: time steps are rows and
//! channels are contiguous, so a kernel-`k` convolution at step `t` reads the
//! contiguous window `x[t*c_in .. (t+k)*c_in]` and multiplies it by the
//! `(k*c_in, c_out)` weight matrix.

use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// Clamp applied to probabilities before taking logarithms.
pub const PROB_EPSILON: Real = 1e-7;

pub fn embedding_forward(indices: &[u32], table: &Tensor) -> Result<Tensor> {
    let rows = table.shape()[0];
    let dim = table.shape()[1];
    let mut out = Vec::with_capacity(indices.len() * dim);
    for &i in indices {
        if i as usize >= rows {
            return Err(Error::IndexOutOfVocab {
                index: i,
                vocab_size: rows - 1,
            });
        }
        out.extend_from_slice(table.row(i as usize));
    }
    Tensor::new(vec![indices.len(), dim], out)
}

/// Scatters `dout` rows into `dtable` by token index.
pub fn embedding_backward(indices: &[u32], dout: &Tensor, dtable: &mut Tensor) {
    let dim = dtable.shape()[1];
    let grad = dtable.data_mut();
    for (t, &i) in indices.iter().enumerate() {
        let row = &mut grad[i as usize * dim..(i as usize + 1) * dim];
        for (g, d) in row.iter_mut().zip(dout.row(t)) {
            *g += *d;
        }
    }
}

fn conv_dims(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<(usize, usize, usize, usize)> {
    let (t, c_in) = (x.shape()[0], x.shape()[1]);
    let (k, w_in, c_out) = (w.shape()[0], w.shape()[1], w.shape()[2]);
    if w_in != c_in {
        return Err(Error::ShapeMismatch {
            expected: vec![k, c_in, c_out],
            got: w.shape().to_vec(),
        });
    }
    b.expect_shape(&[c_out])?;
    if t < k {
        return Err(Error::InputTooShort { len: t, window: k });
    }
    Ok((t, c_in, k, c_out))
}

/// Valid 1-D convolution followed by ReLU.
///
/// `out[t, o] = relu(b[o] + sum_{j<k, i<c_in} x[t+j, i] * w[j, i, o])`.
pub fn conv1d_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (t_in, c_in, k, c_out) = conv_dims(x, w, b)?;
    let t_out = t_in - k + 1;
    let span = k * c_in;
    let xs = x.data();
    let ws = w.data();
    let mut out = vec![0.0; t_out * c_out];
    for (t, row) in out.chunks_exact_mut(c_out).enumerate() {
        row.copy_from_slice(b.data());
        let window = &xs[t * c_in..t * c_in + span];
        for (a, &xv) in window.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let w_row = &ws[a * c_out..(a + 1) * c_out];
            for (o, wv) in row.iter_mut().zip(w_row) {
                *o += xv * wv;
            }
        }
        for o in row.iter_mut() {
            if *o < 0.0 {
                *o = 0.0;
            }
        }
    }
    Tensor::new(vec![t_out, c_out], out)
}

/// Gradients of [`conv1d_forward`].
///
/// `out` is the forward output; positions where it is zero had a
/// non-positive pre-activation and block the gradient. Accumulates into
/// `dw`/`db` and returns `dx` when `want_dx` is set.
pub fn conv1d_backward(
    x: &Tensor,
    w: &Tensor,
    out: &Tensor,
    dout: &Tensor,
    dw: &mut Tensor,
    db: &mut Tensor,
    want_dx: bool,
) -> Result<Option<Tensor>> {
    let (c_in, k, c_out) = (x.shape()[1], w.shape()[0], w.shape()[2]);
    let t_out = out.shape()[0];
    if dout.shape() != out.shape() || t_out + k - 1 != x.shape()[0] {
        return Err(Error::StaleCache(format!(
            "conv gradient {:?} vs output {:?} vs input {:?}",
            dout.shape(),
            out.shape(),
            x.shape()
        )));
    }
    let span = k * c_in;
    let xs = x.data();
    let ws = w.data();
    let mut gate = vec![0.0; c_out];
    let mut dx = want_dx.then(|| vec![0.0; x.len()]);
    for t in 0..t_out {
        let mut any = false;
        for ((g, &o), &d) in gate.iter_mut().zip(out.row(t)).zip(dout.row(t)) {
            *g = if o > 0.0 { d } else { 0.0 };
            any |= *g != 0.0;
        }
        if !any {
            continue;
        }
        for (acc, g) in db.data_mut().iter_mut().zip(&gate) {
            *acc += *g;
        }
        let window = &xs[t * c_in..t * c_in + span];
        let dws = dw.data_mut();
        for (a, &xv) in window.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let dw_row = &mut dws[a * c_out..(a + 1) * c_out];
            for (acc, g) in dw_row.iter_mut().zip(&gate) {
                *acc += xv * g;
            }
        }
        if let Some(dx) = dx.as_mut() {
            let dwin = &mut dx[t * c_in..t * c_in + span];
            for (a, acc) in dwin.iter_mut().enumerate() {
                let w_row = &ws[a * c_out..(a + 1) * c_out];
                *acc += w_row.iter().zip(&gate).map(|(w, g)| w * g).sum::<Real>();
            }
        }
    }
    dx.map(|d| Tensor::new(x.shape().to_vec(), d)).transpose()
}

/// Non-overlapping max pooling with stride `window`. The trailing remainder
/// shorter than `window` is dropped. Also returns, for every output cell, the
/// input row holding the first maximum.
pub fn maxpool1d(x: &Tensor, window: usize) -> Result<(Tensor, Vec<usize>)> {
    let (t_in, c) = (x.shape()[0], x.shape()[1]);
    if window == 0 || t_in < window {
        return Err(Error::InputTooShort {
            len: t_in,
            window,
        });
    }
    let t_out = t_in / window;
    let mut out = Vec::with_capacity(t_out * c);
    let mut arg = Vec::with_capacity(t_out * c);
    for t in 0..t_out {
        let start = t * window;
        out.extend_from_slice(x.row(start));
        arg.extend(std::iter::repeat_n(start, c));
        let base = t * c;
        for r in start + 1..start + window {
            for (i, &v) in x.row(r).iter().enumerate() {
                if v > out[base + i] {
                    out[base + i] = v;
                    arg[base + i] = r;
                }
            }
        }
    }
    Ok((Tensor::new(vec![t_out, c], out)?, arg))
}

/// Routes each output gradient to the recorded argmax row.
pub fn maxpool1d_backward(argmax: &[usize], dout: &Tensor, input_shape: &[usize]) -> Result<Tensor> {
    let c = input_shape[1];
    if dout.len() != argmax.len() || dout.shape()[1] != c {
        return Err(Error::StaleCache(format!(
            "pool gradient {:?} does not match {} recorded maxima",
            dout.shape(),
            argmax.len()
        )));
    }
    let mut dx = Tensor::zeros(input_shape);
    let data = dx.data_mut();
    for (cell, (&row, &g)) in argmax.iter().zip(dout.data()).enumerate() {
        data[row * c + cell % c] += g;
    }
    Ok(dx)
}

/// Logistic function without overflow for large `|z|`.
pub fn sigmoid(z: Real) -> Real {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Returns `(p, z)` for a single sigmoid unit over the flattened input.
pub fn dense_sigmoid_forward(x: &[Real], wd: &Tensor, bd: &Tensor) -> Result<(Real, Real)> {
    if wd.shape() != [x.len(), 1] {
        return Err(Error::ShapeMismatch {
            expected: vec![x.len(), 1],
            got: wd.shape().to_vec(),
        });
    }
    bd.expect_shape(&[1])?;
    let z = bd.data()[0] + x.iter().zip(wd.data()).map(|(a, b)| a * b).sum::<Real>();
    Ok((sigmoid(z), z))
}

fn clamp_prob(p: Real) -> Real {
    p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON)
}

/// Binary cross-entropy on the clamped probability.
pub fn bce_loss(p: Real, y: Real) -> Real {
    let p = clamp_prob(p);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// `dL/dp` on the clamped probability.
pub fn bce_grad(p: Real, y: Real) -> Real {
    let p = clamp_prob(p);
    -y / p + (1.0 - y) / (1.0 - p)
}

/// `dL/dz` through the sigmoid. Zero where the clamp is active.
pub fn bce_sigmoid_grad(p: Real, y: Real) -> Real {
    if !(PROB_EPSILON..=1.0 - PROB_EPSILON).contains(&p) {
        return 0.0;
    }
    p - y
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t(shape: &[usize], data: &[Real]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        Tensor::from_fn(shape, || rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn embedding_lookup() {
        let table = t(&[3, 3], &[0., 0., 0., 1., 0., 0., 0., 1., 0.]);
        let out = embedding_forward(&[2, 1], &table).unwrap();
        assert_eq!(out.data(), &[0., 1., 0., 1., 0., 0.]);
        let pads = embedding_forward(&[0; 4], &table).unwrap();
        assert!(pads.data().iter().all(|&v| v == 0.0));
        assert!(matches!(
            embedding_forward(&[3], &table),
            Err(Error::IndexOutOfVocab { index: 3, vocab_size: 2 })
        ));
    }

    #[test]
    fn embedding_gradient_counts_tokens() {
        let indices = [1, 2, 1];
        let dout = Tensor::from_fn(&[3, 2], || 1.0);
        let mut dtable = Tensor::zeros(&[3, 2]);
        embedding_backward(&indices, &dout, &mut dtable);
        assert_eq!(dtable.data(), &[0., 0., 2., 2., 1., 1.]);
    }

    #[test]
    fn conv_sum_kernel() {
        let x = t(&[3, 1], &[1., 2., 3.]);
        let w = t(&[3, 1, 1], &[1., 1., 1.]);
        assert_eq!(conv1d_forward(&x, &w, &t(&[1], &[0.])).unwrap().data(), &[6.]);
        assert_eq!(conv1d_forward(&x, &w, &t(&[1], &[-10.])).unwrap().data(), &[0.]);
        let short = t(&[2, 1], &[1., 2.]);
        assert!(matches!(
            conv1d_forward(&short, &w, &t(&[1], &[0.])),
            Err(Error::InputTooShort { len: 2, window: 3 })
        ));
    }

    #[test]
    fn conv_matches_naive_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random(&[8, 2], &mut rng);
        let w = random(&[3, 2, 4], &mut rng);
        let b = random(&[4], &mut rng);
        let out = conv1d_forward(&x, &w, &b).unwrap();
        assert_eq!(out.shape(), &[6, 4]);
        for tt in 0..6 {
            for o in 0..4 {
                let mut acc = b.data()[o];
                for j in 0..3 {
                    for i in 0..2 {
                        acc += x.data()[(tt + j) * 2 + i] * w.data()[(j * 2 + i) * 4 + o];
                    }
                }
                let expected = acc.max(0.0);
                assert!((out.data()[tt * 4 + o] - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn pool_examples() {
        let (out, arg) = maxpool1d(&t(&[5, 1], &[1., 3., 2., 5., 4.]), 5).unwrap();
        assert_eq!((out.data(), arg.as_slice()), (&[5.][..], &[3usize][..]));
        let (out, arg) = maxpool1d(&t(&[5, 1], &[7.; 5]), 5).unwrap();
        assert_eq!((out.data(), arg.as_slice()), (&[7.][..], &[0usize][..]));
        assert!(maxpool1d(&t(&[4, 1], &[1.; 4]), 5).is_err());
    }

    #[test]
    fn pool_drops_remainder_and_routes_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random(&[23, 3], &mut rng);
        let (out, arg) = maxpool1d(&x, 5).unwrap();
        assert_eq!(out.shape(), &[4, 3]);
        let dout = Tensor::from_fn(&[4, 3], || 1.0);
        let dx = maxpool1d_backward(&arg, &dout, x.shape()).unwrap();
        assert_eq!(dx.data().iter().sum::<Real>(), 12.0);
        assert!(dx.data()[20 * 3..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sigmoid_is_safe() {
        let wd = Tensor::zeros(&[4, 1]);
        let (p, _) = dense_sigmoid_forward(&[1., 2., 3., 4.], &wd, &t(&[1], &[0.])).unwrap();
        assert_eq!(p, 0.5);
        let (p, _) = dense_sigmoid_forward(&[1., 2., 3., 4.], &wd, &t(&[1], &[50.])).unwrap();
        assert!((1.0 - 4.0 * Real::EPSILON..=1.0).contains(&p));
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert!(dense_sigmoid_forward(&[1., 2.], &wd, &t(&[1], &[0.])).is_err());
    }

    #[test]
    fn bce_values() {
        assert!((bce_loss(0.5, 1.0) - std::f64::consts::LN_2 as Real).abs() < 1e-12);
        assert!((bce_loss(0.5, 0.0) - std::f64::consts::LN_2 as Real).abs() < 1e-12);
        assert!((bce_loss(0.8, 0.0) - 1.609_437_912_434_100_3).abs() < 1e-12);
        let near_one = bce_loss(1.0 - PROB_EPSILON, 1.0);
        // The clamp bound is not exact in f32, so allow twice its size.
        assert!(near_one > 0.0 && near_one < 2.0 * PROB_EPSILON);
        assert!(bce_loss(0.0, 1.0).is_finite() && bce_loss(1.0, 0.0).is_finite());
        // dL/dz = dL/dp * p(1-p)
        let p = 0.3;
        assert!((bce_grad(p, 1.0) * p * (1.0 - p) - bce_sigmoid_grad(p, 1.0)).abs() < 1e-12);
    }
}
