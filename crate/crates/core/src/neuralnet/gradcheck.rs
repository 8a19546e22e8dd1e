//! Central finite differences over a scalar function of the parameters.
//! Uses only forward evaluations, so it is independent of the analytic
//! backward pass it is meant to check.

use alloc::vec::Vec;

use super::network::NetworkParams;

/// Relative error with an absolute floor so near-zero gradients compare
/// on an absolute scale.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// `(f(θ + h·e_i) − f(θ − h·e_i)) / 2h` for each `(tensor, index)` pair.
pub fn numeric_gradient<F>(params: &NetworkParams, coords: &[(usize, usize)], h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&NetworkParams) -> f64,
{
    let mut probe = params.clone();
    coords
        .iter()
        .map(|&(t, i)| {
            let orig = probe.tensors()[t].data()[i];
            probe.tensors_mut()[t].data_mut()[i] = orig + h;
            let up = f(&probe);
            probe.tensors_mut()[t].data_mut()[i] = orig - h;
            let down = f(&probe);
            probe.tensors_mut()[t].data_mut()[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}
