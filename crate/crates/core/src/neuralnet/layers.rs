//! Raw layer kernels over flat slices. Images are channel-major
//! `[channel][row][col]` with square spatial extent.

use alloc::vec;
use alloc::vec::Vec;

/// Row `(i*k + ky)*k + kx`, column `y*size + x` holds the input pixel under
/// tap `(ky, kx)` of output position `(y, x)`, zero in the padding.
fn im2col(input: &[f64], c_in: usize, size: usize, k: usize) -> Vec<f64> {
    let plane = size * size;
    let pad = (k - 1) / 2;
    let mut cols = Vec::with_capacity(c_in * k * k * plane);
    for i in 0..c_in {
        let src = &input[i * plane..(i + 1) * plane];
        for ky in 0..k {
            for kx in 0..k {
                let x0 = pad.saturating_sub(kx).min(size);
                let x1 = (size + pad).saturating_sub(kx).min(size).max(x0);
                for y in 0..size {
                    let iy = y + ky;
                    if iy < pad || iy - pad >= size || x0 == x1 {
                        cols.resize(cols.len() + size, 0.0);
                        continue;
                    }
                    let sx = (iy - pad) * size + x0 + kx - pad;
                    cols.resize(cols.len() + x0, 0.0);
                    cols.extend_from_slice(&src[sx..sx + (x1 - x0)]);
                    cols.resize(cols.len() + size - x1, 0.0);
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], c_in: usize, size: usize, k: usize, out: &mut [f64]) {
    let plane = size * size;
    let pad = (k - 1) / 2;
    for i in 0..c_in {
        let dst = &mut out[i * plane..(i + 1) * plane];
        for ky in 0..k {
            for kx in 0..k {
                let row = &cols[((i * k + ky) * k + kx) * plane..][..plane];
                for y in 0..size {
                    let iy = y + ky;
                    if iy < pad || iy - pad >= size {
                        continue;
                    }
                    let iy = iy - pad;
                    let x0 = pad.saturating_sub(kx);
                    let x1 = (size + pad).saturating_sub(kx).min(size);
                    if x0 >= x1 {
                        continue;
                    }
                    let sx = x0 + kx - pad;
                    for (d, s) in dst[iy * size + sx..iy * size + sx + (x1 - x0)].iter_mut().zip(&row[y * size + x0..y * size + x1]) {
                        *d += s;
                    }
                }
            }
        }
    }
}

/// `c += a · b` for row-major `a: m×k`, `b: k×n`, `c: m×n`, with optional
/// transposition of either operand.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the strides address exactly the asserted extents.
    unsafe {
        matrixmultiply::dgemm(m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, 1.0, c.as_mut_ptr(), n as isize, 1);
    }
}

/// Stride-1 convolution with "same" padding (`(k-1)/2` before, the rest after).
pub(crate) fn conv_forward(
    input: &[f64],
    c_in: usize,
    size: usize,
    weight: &[f64],
    bias: &[f64],
    c_out: usize,
    k: usize,
) -> Vec<f64> {
    let plane = size * size;
    let mut out = vec![0.0; c_out * plane];
    for (o, row) in out.chunks_mut(plane).enumerate() {
        row.fill(bias[o]);
    }
    let cols = im2col(input, c_in, size, k);
    gemm(c_out, c_in * k * k, plane, weight, false, &cols, false, &mut out);
    out
}

/// Accumulates kernel and bias gradients; writes the input gradient when asked.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward(
    input: &[f64],
    c_in: usize,
    size: usize,
    weight: &[f64],
    c_out: usize,
    k: usize,
    dout: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
    dinput: Option<&mut [f64]>,
) {
    let plane = size * size;
    let kk = c_in * k * k;
    for (o, d_plane) in dout.chunks(plane).enumerate() {
        dbias[o] += d_plane.iter().sum::<f64>();
    }
    let cols = im2col(input, c_in, size, k);
    gemm(c_out, plane, kk, dout, false, &cols, true, dweight);
    if let Some(din) = dinput {
        let mut dcols = vec![0.0; kk * plane];
        gemm(kk, c_out, plane, weight, true, dout, false, &mut dcols);
        col2im(&dcols, c_in, size, k, din);
    }
}

/// 2×2 stride-2 max-pool with floor division. Returns pooled values and the
/// flat input index of each maximum (first maximum on ties).
pub(crate) fn maxpool_forward(input: &[f64], channels: usize, size: usize) -> (Vec<f64>, Vec<u32>) {
    let half = size / 2;
    let mut out = Vec::with_capacity(channels * half * half);
    let mut idx = Vec::with_capacity(channels * half * half);
    for c in 0..channels {
        let base = c * size * size;
        for y in 0..half {
            for x in 0..half {
                let mut best = base + 2 * y * size + 2 * x;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let j = base + (2 * y + dy) * size + 2 * x + dx;
                    if input[j] > input[best] {
                        best = j;
                    }
                }
                out.push(input[best]);
                idx.push(best as u32);
            }
        }
    }
    (out, idx)
}

pub(crate) fn maxpool_backward(dout: &[f64], idx: &[u32], input_len: usize) -> Vec<f64> {
    let mut din = vec![0.0; input_len];
    for (d, &i) in dout.iter().zip(idx) {
        din[i as usize] += d;
    }
    din
}

/// `y = W x + b` with `W` stored `[out][in]`.
pub(crate) fn dense_forward(x: &[f64], weight: &[f64], bias: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    bias.iter()
        .enumerate()
        .map(|(o, b)| b + weight[o * n_in..(o + 1) * n_in].iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect()
}

pub(crate) fn dense_backward(
    x: &[f64],
    weight: &[f64],
    dy: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    let n_in = x.len();
    for (o, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        dbias[o] += g;
        for (dw, v) in dweight[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
            *dw += g * v;
        }
    }
    if let Some(dx) = dx {
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for (d, w) in dx.iter_mut().zip(&weight[o * n_in..(o + 1) * n_in]) {
                *d += g * w;
            }
        }
    }
}

#[inline]
pub(crate) fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

#[inline]
pub(crate) fn relu_backward(pre: &[f64], grad: &mut [f64]) {
    for (g, p) in grad.iter_mut().zip(pre) {
        if *p <= 0.0 {
            *g = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_identity_kernel() {
        // 3x3 kernel with a single centre tap copies the input
        let input: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let mut w = vec![0.0; 9];
        w[4] = 1.0;
        let out = conv_forward(&input, 1, 4, &w, &[0.5], 1, 3);
        let expected: Vec<f64> = input.iter().map(|v| v + 0.5).collect();
        assert_eq!(out, expected);
    }

    #[test]
    fn even_kernel_padding_is_asymmetric() {
        // k = 4: pad 1 before, 2 after. Tap (0,0) reads the up-left neighbour.
        let input: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let mut w = vec![0.0; 16];
        w[0] = 1.0;
        let out = conv_forward(&input, 1, 4, &w, &[0.0], 1, 4);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[5], input[0]);
        assert_eq!(out[15], input[10]);
    }

    #[test]
    fn pool_picks_maxima() {
        let input = [1.0, 2.0, 5.0, 0.0, 3.0, 4.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 9.0, 0.0, 0.0];
        let (out, idx) = maxpool_forward(&input, 1, 4);
        assert_eq!(out, vec![4.0, 5.0, 9.0, 0.0]);
        assert_eq!(idx, vec![5, 2, 13, 10]);
        let din = maxpool_backward(&[1.0, 1.0, 1.0, 1.0], &idx, 16);
        assert_eq!(din.iter().sum::<f64>(), 4.0);
    }

    #[test]
    fn pool_floors_odd_sizes() {
        let (out, _) = maxpool_forward(&[0.0; 21 * 21], 1, 21);
        assert_eq!(out.len(), 100);
    }

    #[test]
    fn dense_matches_hand_product() {
        let y = dense_forward(&[1.0, 2.0], &[1.0, 0.0, 0.5, -1.0], &[0.0, 1.0]);
        assert_eq!(y, vec![1.0, -0.5]);
    }
}
