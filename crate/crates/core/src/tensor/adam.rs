use serde::{Deserialize, Serialize};

use super::{Matrix, TensorError};

/// Moment estimates and step counter, one moment pair per parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub first: Vec<Matrix>,
    pub second: Vec<Matrix>,
}

impl AdamState {
    pub fn new(params: &[Matrix]) -> Self {
        Self {
            step: 0,
            first: params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect(),
            second: params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect(),
        }
    }
}

/// Bias-corrected Adam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(
        &self,
        params: &mut [Matrix],
        grads: &[Matrix],
        state: &mut AdamState,
    ) -> Result<(), TensorError> {
        if params.len() != grads.len() || params.len() != state.first.len() {
            return Err(TensorError::Shape(format!(
                "adam: {} params, {} grads, {} moment slots",
                params.len(),
                grads.len(),
                state.first.len()
            )));
        }
        for (k, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != state.first[k].shape() {
                return Err(TensorError::Shape(format!(
                    "adam slot {k}: param {:?} grad {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }
        state.step += 1;
        let t = state.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = state.first[k].as_mut_slice();
            let v = state.second[k].as_mut_slice();
            for (((w, &gv), mv), vv) in p.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(v) {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let m_hat = *mv / c1;
                let v_hat = *vv / c2;
                *w -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut params = vec![Matrix::from_vec(1, 3, vec![0.5, -1.0, 2.0]).unwrap()];
        let before = params.clone();
        let mut state = AdamState::new(&params);
        let grads = vec![Matrix::zeros(1, 3)];
        for _ in 0..5 {
            Adam::new(0.1).step(&mut params, &grads, &mut state).unwrap();
        }
        assert_eq!(params, before);
        assert_eq!(state.step, 5);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut params = vec![Matrix::from_vec(1, 3, vec![0.0, 0.0, 0.0]).unwrap()];
        let mut state = AdamState::new(&params);
        let grads = vec![Matrix::from_vec(1, 3, vec![3.0, -0.25, 1e-3]).unwrap()];
        Adam::new(0.01).step(&mut params, &grads, &mut state).unwrap();
        let p = params[0].as_slice();
        assert!((p[0] + 0.01).abs() < 1e-9);
        assert!((p[1] - 0.01).abs() < 1e-9);
        assert!((p[2] + 0.01).abs() < 1e-7);
    }

    /// Scalar reference Adam written independently of the matrix path.
    fn reference_adam_norm(w0: &[f64], lr: f64, steps: usize) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let mut w = w0.to_vec();
        let mut m = vec![0.0; w.len()];
        let mut v = vec![0.0; w.len()];
        for t in 1..=steps {
            for i in 0..w.len() {
                let g = 2.0 * w[i];
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let mh = m[i] / (1.0 - b1.powi(t as i32));
                let vh = v[i] / (1.0 - b2.powi(t as i32));
                w[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
        w.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn minimizes_squared_norm_like_reference() {
        let w0 = [0.6, -0.8];
        let lr = 0.05;
        let mut params = vec![Matrix::row_vector(&w0)];
        let mut state = AdamState::new(&params);
        for _ in 0..100 {
            let grads = vec![params[0].scaled(2.0)];
            Adam::new(lr).step(&mut params, &grads, &mut state).unwrap();
        }
        let norm = params[0].norm();
        let reference = reference_adam_norm(&w0, lr, 100);
        assert!(reference < 1e-2, "reference norm {reference}");
        assert!((norm - reference).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut params = vec![Matrix::zeros(2, 2)];
        let mut state = AdamState::new(&params);
        let grads = vec![Matrix::zeros(1, 2)];
        assert!(Adam::new(0.1).step(&mut params, &grads, &mut state).is_err());
    }
}
