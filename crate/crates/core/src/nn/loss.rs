use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// Mean negative log-likelihood of `labels` under row-wise log-probabilities.
/// Returns the loss and its gradient with respect to `logprobs`.
pub fn nll_loss<T: Real>(logprobs: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
    let (n, k) = match *logprobs.shape() {
        [n, k] => (n, k),
        _ => return Err(Error::shape(format!("nll_loss expects (N, K) log-probabilities, got {:?}", logprobs.shape()))),
    };
    if labels.len() != n {
        return Err(Error::shape(format!("nll_loss: {} labels for {n} rows", labels.len())));
    }
    if n == 0 {
        return Err(Error::invalid("nll_loss on an empty batch"));
    }
    let inv_n = T::of(1.0 / n as f64);
    let mut loss = T::zero();
    let mut grad = Tensor::zeros(&[n, k]);
    for (i, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::invalid(format!("label {y} outside [0, {k}) at row {i}")));
        }
        loss -= logprobs.data()[i * k + y];
        grad.data_mut()[i * k + y] = -inv_n;
    }
    Ok((loss * inv_n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_over_four_classes() {
        let lp = Tensor::<f64>::full(&[3, 4], -(4f64.ln()));
        let (l, _) = nll_loss(&lp, &[0, 1, 3]).unwrap();
        assert!((l - 1.386_294_361_119_890_6).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_is_zero() {
        let lp = Tensor::<f64>::from_vec(&[1, 2], vec![0.0, f64::MIN]).unwrap();
        assert_eq!(nll_loss(&lp, &[0]).unwrap().0, 0.0);
    }

    #[test]
    fn batch_mean() {
        let lp = Tensor::<f64>::from_vec(&[2, 2], vec![-1.0, -5.0, -7.0, -3.0]).unwrap();
        assert_eq!(nll_loss(&lp, &[0, 1]).unwrap().0, 2.0);
    }

    #[test]
    fn label_out_of_range() {
        let lp = Tensor::<f64>::zeros(&[1, 4]);
        assert!(nll_loss(&lp, &[4]).is_err());
    }
}
