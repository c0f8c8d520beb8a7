//! Layer kernels on channel-last (`[row][col][channel]`) buffers.
//!
//! Convolutions are 3×3 with stride 1 and zero "same" padding; weights are
//! laid out `[ky][kx][in][out]` so the innermost loops run over contiguous
//! output channels.

use super::real::Real;

#[inline]
fn axpy<F: Real>(y: &mut [F], a: F, x: &[F]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Dot product with eight fixed partial sums, so the summation order is
/// the same on every run.
#[inline]
fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    let mut acc = [F::ZERO; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = F::ZERO;
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Yields `(tap, input row, input col)` for the in-bounds taps around `(y, x)`.
#[inline]
fn taps(y: usize, x: usize, size: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..3usize).flat_map(move |ky| {
        (0..3usize).filter_map(move |kx| {
            let yy = (y + ky).checked_sub(1)?;
            let xx = (x + kx).checked_sub(1)?;
            (yy < size && xx < size).then_some((ky * 3 + kx, yy, xx))
        })
    })
}

/// First convolution on a one-hot input given as the active channel of each
/// position. Equivalent to the dense convolution of the one-hot cube.
pub fn conv_onehot_forward<F: Real>(
    active: &[u8],
    size: usize,
    cin: usize,
    weights: &[F],
    bias: &[F],
    cout: usize,
    out: &mut [F],
) {
    for y in 0..size {
        for x in 0..size {
            let o = &mut out[(y * size + x) * cout..][..cout];
            o.copy_from_slice(bias);
            for (tap, yy, xx) in taps(y, x, size) {
                let ch = usize::from(active[yy * size + xx]);
                let row = &weights[(tap * cin + ch) * cout..][..cout];
                for (oi, &wi) in o.iter_mut().zip(row) {
                    *oi += wi;
                }
            }
        }
    }
}

pub fn conv_onehot_backward<F: Real>(
    active: &[u8],
    size: usize,
    cin: usize,
    dz: &[F],
    cout: usize,
    dw: &mut [F],
    db: &mut [F],
) {
    for y in 0..size {
        for x in 0..size {
            let g = &dz[(y * size + x) * cout..][..cout];
            axpy(db, F::ONE, g);
            for (tap, yy, xx) in taps(y, x, size) {
                let ch = usize::from(active[yy * size + xx]);
                let row = &mut dw[(tap * cin + ch) * cout..][..cout];
                for (wi, &gi) in row.iter_mut().zip(g) {
                    *wi += gi;
                }
            }
        }
    }
}

pub fn conv_forward<F: Real>(
    input: &[F],
    size: usize,
    cin: usize,
    weights: &[F],
    bias: &[F],
    cout: usize,
    out: &mut [F],
) {
    for y in 0..size {
        for x in 0..size {
            let o = &mut out[(y * size + x) * cout..][..cout];
            o.copy_from_slice(bias);
            for (tap, yy, xx) in taps(y, x, size) {
                let inp = &input[(yy * size + xx) * cin..][..cin];
                let wbase = tap * cin * cout;
                for (ci, &a) in inp.iter().enumerate() {
                    if a != F::ZERO {
                        axpy(o, a, &weights[wbase + ci * cout..][..cout]);
                    }
                }
            }
        }
    }
}

/// Accumulates weight and bias gradients and, when `din` is given, the
/// gradient with respect to the input.
#[allow(clippy::too_many_arguments)]
pub fn conv_backward<F: Real>(
    input: &[F],
    size: usize,
    cin: usize,
    weights: &[F],
    dz: &[F],
    cout: usize,
    dw: &mut [F],
    db: &mut [F],
    mut din: Option<&mut [F]>,
) {
    if let Some(d) = din.as_deref_mut() {
        d.fill(F::ZERO);
    }
    for y in 0..size {
        for x in 0..size {
            let g = &dz[(y * size + x) * cout..][..cout];
            if g.iter().all(|&v| v == F::ZERO) {
                continue;
            }
            axpy(db, F::ONE, g);
            for (tap, yy, xx) in taps(y, x, size) {
                let ibase = (yy * size + xx) * cin;
                let wbase = tap * cin * cout;
                for ci in 0..cin {
                    let a = input[ibase + ci];
                    if a != F::ZERO {
                        axpy(&mut dw[wbase + ci * cout..][..cout], a, g);
                    }
                    if let Some(d) = din.as_deref_mut() {
                        d[ibase + ci] += dot(&weights[wbase + ci * cout..][..cout], g);
                    }
                }
            }
        }
    }
}

pub fn relu_inplace<F: Real>(values: &mut [F]) {
    for v in values {
        if *v <= F::ZERO || v.is_nan() {
            *v = F::ZERO;
        }
    }
}

/// Zeroes gradient entries whose activation was clipped by the rectifier.
pub fn relu_backward<F: Real>(activated: &[F], grad: &mut [F]) {
    for (g, &a) in grad.iter_mut().zip(activated) {
        if a <= F::ZERO || a.is_nan() {
            *g = F::ZERO;
        }
    }
}

/// 2×2 max pooling with stride 2; odd trailing rows and columns are
/// dropped. `argmax` records the flat input index that won each output.
pub fn maxpool_forward<F: Real>(input: &[F], size: usize, channels: usize, out: &mut [F], argmax: &mut [u32]) {
    let pooled = size / 2;
    for py in 0..pooled {
        for px in 0..pooled {
            for c in 0..channels {
                let mut best_index = ((2 * py) * size + 2 * px) * channels + c;
                let mut best = input[best_index];
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let i = ((2 * py + dy) * size + 2 * px + dx) * channels + c;
                    if input[i] > best {
                        best = input[i];
                        best_index = i;
                    }
                }
                let o = (py * pooled + px) * channels + c;
                out[o] = best;
                argmax[o] = best_index as u32;
            }
        }
    }
}

pub fn maxpool_backward<F: Real>(dout: &[F], argmax: &[u32], din: &mut [F]) {
    din.fill(F::ZERO);
    for (&g, &i) in dout.iter().zip(argmax) {
        din[i as usize] += g;
    }
}

/// `weights` is `[inputs][outputs]`.
pub fn dense_forward<F: Real>(input: &[F], weights: &[F], bias: &[F], out: &mut [F]) {
    let n = out.len();
    out.copy_from_slice(bias);
    for (i, &a) in input.iter().enumerate() {
        if a != F::ZERO {
            axpy(out, a, &weights[i * n..][..n]);
        }
    }
}

pub fn dense_backward<F: Real>(
    input: &[F],
    weights: &[F],
    dout: &[F],
    dw: &mut [F],
    db: &mut [F],
    din: &mut [F],
) {
    let n = dout.len();
    axpy(db, F::ONE, dout);
    for (i, &a) in input.iter().enumerate() {
        if a != F::ZERO {
            axpy(&mut dw[i * n..][..n], a, dout);
        }
        din[i] = dot(&weights[i * n..][..n], dout);
    }
}

/// Numerically stable softmax; returns `ln Σ exp(logit - max)` and the max
/// so callers can form log-probabilities.
pub fn softmax<F: Real>(logits: &[F], probs: &mut [F]) -> (F, F) {
    let mut max = logits[0];
    for &l in &logits[1..] {
        if l > max {
            max = l;
        }
    }
    let mut sum = F::ZERO;
    for (p, &l) in probs.iter_mut().zip(logits) {
        *p = (l - max).exp();
        sum += *p;
    }
    for p in probs.iter_mut() {
        *p = *p / sum;
    }
    (sum.ln(), max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::Rng;

    #[test]
    fn identity_kernel_reproduces_channel() {
        let (size, cin, cout) = (5, 3, 3);
        let mut rng = rng::seeded(1);
        let input: Vec<f32> = (0..size * size * cin).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut w = vec![0.0f32; 9 * cin * cout];
        for c in 0..cin {
            w[(4 * cin + c) * cout + c] = 1.0;
        }
        let mut out = vec![0.0; size * size * cout];
        conv_forward(&input, size, cin, &w, &[0.0; 3], cout, &mut out);
        assert_eq!(out, input);
    }

    #[test]
    fn onehot_conv_matches_dense_conv() {
        let (size, cin, cout) = (5, 4, 6);
        let mut rng = rng::seeded(2);
        let active: Vec<u8> = (0..size * size).map(|_| rng.gen_range(0..cin as u8)).collect();
        let mut dense = vec![0.0f64; size * size * cin];
        for (i, &c) in active.iter().enumerate() {
            dense[i * cin + usize::from(c)] = 1.0;
        }
        let w: Vec<f64> = (0..9 * cin * cout).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..cout).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut a = vec![0.0; size * size * cout];
        let mut d = vec![0.0; size * size * cout];
        conv_onehot_forward(&active, size, cin, &w, &b, cout, &mut a);
        conv_forward(&dense, size, cin, &w, &b, cout, &mut d);
        for (x, y) in a.iter().zip(&d) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_matches_naive_definition() {
        let (size, cin, cout) = (4, 2, 3);
        let mut rng = rng::seeded(3);
        let input: Vec<f64> = (0..size * size * cin).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..9 * cin * cout).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut out = vec![0.0; size * size * cout];
        conv_forward(&input, size, cin, &w, &[0.5; 3], cout, &mut out);
        for y in 0..size as isize {
            for x in 0..size as isize {
                for co in 0..cout {
                    let mut s = 0.5;
                    for ky in -1..=1isize {
                        for kx in -1..=1isize {
                            let (yy, xx) = (y + ky, x + kx);
                            if yy < 0 || xx < 0 || yy >= size as isize || xx >= size as isize {
                                continue;
                            }
                            for ci in 0..cin {
                                let tap = ((ky + 1) * 3 + (kx + 1)) as usize;
                                s += input[(yy as usize * size + xx as usize) * cin + ci]
                                    * w[(tap * cin + ci) * cout + co];
                            }
                        }
                    }
                    let got = out[(y as usize * size + x as usize) * cout + co];
                    assert!((got - s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn maxpool_matches_brute_force() {
        let mut rng = rng::seeded(4);
        for size in [2usize, 3, 5, 7, 15] {
            let ch = 3;
            let input: Vec<f32> = (0..size * size * ch).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = size / 2;
            let mut out = vec![0.0; p * p * ch];
            let mut arg = vec![0; p * p * ch];
            maxpool_forward(&input, size, ch, &mut out, &mut arg);
            for py in 0..p {
                for px in 0..p {
                    for c in 0..ch {
                        let window = [(0, 0), (0, 1), (1, 0), (1, 1)]
                            .map(|(dy, dx)| input[((2 * py + dy) * size + 2 * px + dx) * ch + c]);
                        let m = window.iter().cloned().fold(f32::MIN, f32::max);
                        let o = (py * p + px) * ch + c;
                        assert_eq!(out[o], m);
                        assert_eq!(input[arg[o] as usize], m);
                    }
                }
            }
        }
    }

    #[test]
    fn softmax_handles_extreme_logits() {
        let logits = [1000.0f32, -1000.0, 0.0, 999.0];
        let mut p = [0.0; 4];
        softmax(&logits, &mut p);
        let s: f32 = p.iter().sum();
        assert!((s - 1.0).abs() < 1e-6);
        assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn dot_handles_tails() {
        let a: Vec<f64> = (0..13).map(f64::from).collect();
        let b = vec![1.0; 13];
        assert_eq!(dot(&a, &b), 78.0);
    }
}
