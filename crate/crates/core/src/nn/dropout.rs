use rand::{Rng, RngCore};

use super::tensor::{Real, Tensor};
use super::Mode;
use crate::error::{Error, Result};

/// Inverted dropout. Returns the output and the multiplicative mask (zero or
/// `1/(1−p)` per element) when one was drawn.
pub fn dropout<T: Real, R: RngCore + ?Sized>(
    input: &Tensor<T>,
    p: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor<T>, Option<Vec<T>>)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid(format!("dropout probability {p} outside [0, 1)")));
    }
    if mode == Mode::Eval || p == 0.0 {
        return Ok((input.clone(), None));
    }
    let scale = T::of(1.0 / (1.0 - p));
    let mask: Vec<T> = (0..input.len())
        .map(|_| if rng.random::<f64>() < p { T::zero() } else { scale })
        .collect();
    let out = input.data().iter().zip(&mask).map(|(&x, &m)| x * m).collect();
    Ok((Tensor::from_vec(input.shape(), out)?, Some(mask)))
}

#[derive(Debug, Clone)]
pub struct Dropout<T> {
    pub p: f64,
    mask: Option<Vec<T>>,
    /// Reuse the last mask instead of drawing a new one (gradient checks).
    pub(crate) frozen: bool,
}

impl<T: Real> Dropout<T> {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::invalid(format!("dropout probability {p} outside [0, 1)")));
        }
        Ok(Self { p, mask: None, frozen: false })
    }

    pub fn forward(&mut self, input: &Tensor<T>, mode: Mode, rng: &mut dyn RngCore) -> Result<Tensor<T>> {
        if self.frozen && mode == Mode::Train {
            if let Some(mask) = self.mask.as_ref().filter(|m| m.len() == input.len()) {
                let out = input.data().iter().zip(mask).map(|(&x, &m)| x * m).collect();
                return Tensor::from_vec(input.shape(), out);
            }
        }
        let (y, mask) = dropout(input, self.p, mode, rng)?;
        self.mask = mask;
        Ok(y)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        match &self.mask {
            None => Ok(grad_out.clone()),
            Some(mask) if mask.len() == grad_out.len() => {
                let g = grad_out.data().iter().zip(mask).map(|(&g, &m)| g * m).collect();
                Tensor::from_vec(grad_out.shape(), g)
            }
            Some(_) => Err(Error::shape("dropout grad shape differs from forward mask")),
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn eval_mode_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::<f64>::from_vec(&[4], vec![1.0, -2.0, 3.0, 4.0]).unwrap();
        for p in [0.0, 0.3, 0.9] {
            assert_eq!(dropout(&x, p, Mode::Eval, &mut rng).unwrap().0, x);
        }
    }

    #[test]
    fn zero_probability_is_identity_in_train() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::<f64>::from_vec(&[3], vec![1.0, -2.0, 3.0]).unwrap();
        assert_eq!(dropout(&x, 0.0, Mode::Train, &mut rng).unwrap().0, x);
    }

    #[test]
    fn half_dropout_zeroes_half_and_rescales() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let x = Tensor::<f32>::full(&[1_000_000], 1.0);
        let (y, _) = dropout(&x, 0.5, Mode::Train, &mut rng).unwrap();
        let zeros = y.data().iter().filter(|&&v| v == 0.0).count() as f64 / 1e6;
        assert!((0.498..=0.502).contains(&zeros), "fraction zeroed {zeros}");
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn probability_one_is_rejected() {
        assert!(Dropout::<f64>::new(1.0).is_err());
        assert!(Dropout::<f64>::new(-0.1).is_err());
    }
}
