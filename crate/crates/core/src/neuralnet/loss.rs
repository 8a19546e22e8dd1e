use crate::error::{Error, Result};
use crate::gridmap::Action;

use super::network::QValues;

/// Mean over the batch of the squared error on the taken action's Q-value.
pub fn mse_loss(pred: &[QValues], target: &[QValues], actions: &[Action]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if pred.len() != target.len() || pred.len() != actions.len() {
        return Err(Error::Shape { expected: pred.len(), got: target.len().min(actions.len()) });
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .zip(actions)
        .map(|((p, t), a)| {
            let e = p[a.index()] - t[a.index()];
            e * e
        })
        .sum();
    Ok(sum / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let q = [0.3, -0.1, 0.7, 0.0];
        assert_eq!(mse_loss(&[q], &[q], &[Action::North]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[[1.0; 4]], &[[0.0, 1.0, 1.0, 1.0]], &[Action::North]).unwrap(), 1.0);
        let two = mse_loss(&[[1.0; 4], [0.0; 4]], &[[0.0; 4], [0.0; 4]], &[Action::West, Action::South]).unwrap();
        assert_eq!(two, 0.5);
        // non-taken actions never contribute
        assert_eq!(mse_loss(&[[5.0, 0.0, 9.0, 9.0]], &[[5.0; 4]], &[Action::North]).unwrap(), 0.0);
    }

    #[test]
    fn empty_batch_is_error() {
        assert_eq!(mse_loss(&[], &[], &[]).unwrap_err(), Error::EmptyBatch);
    }
}
