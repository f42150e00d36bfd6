//! Stochastic gradient descent with classical momentum.

use super::Tensor;
use crate::error::{Error, Result};

/// Per-parameter velocity buffers for momentum SGD.
pub struct SgdState {
    velocity: Vec<Vec<f64>>,
}

impl SgdState {
    pub fn new(param_sizes: &[usize]) -> Self {
        SgdState { velocity: param_sizes.iter().map(|&n| vec![0.0; n]).collect() }
    }

    /// In-place update `v = mu*v + (g + wd*p); p -= lr*v`.
    /// A non-finite gradient aborts with diagnostics before touching params.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor],
        grads: &[&Tensor],
        lr: f64,
        momentum: f64,
        weight_decay: f64,
    ) -> Result<()> {
        if lr <= 0.0 {
            return Err(Error::Config(format!("learning rate must be positive, got {}", lr)));
        }
        if params.len() != grads.len() || params.len() != self.velocity.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} params, {} grads, {} velocity buffers",
                params.len(),
                grads.len(),
                self.velocity.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            if !g.is_finite() {
                return Err(Error::NonFiniteGrad(format!(
                    "parameter {} (shape {:?}, max|g| = {:e})",
                    i,
                    g.shape(),
                    g.max_abs()
                )));
            }
        }
        for ((p, g), v) in params.iter_mut().zip(grads).zip(self.velocity.iter_mut()) {
            let pd = p.data_mut();
            for j in 0..pd.len() {
                let gj = g.data()[j] + weight_decay * pd[j];
                v[j] = momentum * v[j] + gj;
                pd[j] -= lr * v[j];
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_sgd_is_p_minus_lr_g() {
        let mut p = Tensor::new(vec![2], vec![1.0, -2.0]).unwrap();
        let g = Tensor::new(vec![2], vec![0.5, 0.25]).unwrap();
        let mut st = SgdState::new(&[2]);
        st.step(&mut [&mut p], &[&g], 0.1, 0.0, 0.0).unwrap();
        assert_eq!(p.data(), &[1.0 - 0.05, -2.0 - 0.025]);
    }

    #[test]
    fn zero_grad_keeps_params() {
        let mut p = Tensor::new(vec![2], vec![1.0, -2.0]).unwrap();
        let g = Tensor::zeros(&[2]);
        let mut st = SgdState::new(&[2]);
        st.step(&mut [&mut p], &[&g], 0.1, 0.0, 0.0).unwrap();
        assert_eq!(p.data(), &[1.0, -2.0]);
    }

    #[test]
    fn momentum_matches_hand_recurrence() {
        // f(p) = p^2/2, grad = p; lr 0.1, mu 0.9, start 1.0.
        // v1 = 1.0,            p1 = 1.0 - 0.1*1.0  = 0.9
        // v2 = 0.9*1.0 + 0.9,  p2 = 0.9 - 0.1*1.8  = 0.72
        let mut p = Tensor::scalar(1.0);
        let mut st = SgdState::new(&[1]);
        let g1 = Tensor::scalar(p.item());
        st.step(&mut [&mut p], &[&g1], 0.1, 0.9, 0.0).unwrap();
        assert!((p.item() - 0.9).abs() < 1e-15);
        let g2 = Tensor::scalar(p.item());
        st.step(&mut [&mut p], &[&g2], 0.1, 0.9, 0.0).unwrap();
        assert!((p.item() - 0.72).abs() < 1e-15);
    }

    #[test]
    fn nan_grad_aborts() {
        let mut p = Tensor::scalar(1.0);
        let g = Tensor::scalar(f64::NAN);
        let mut st = SgdState::new(&[1]);
        let err = st.step(&mut [&mut p], &[&g], 0.1, 0.0, 0.0);
        assert!(matches!(err, Err(Error::NonFiniteGrad(_))));
        assert_eq!(p.item(), 1.0);
    }
}
