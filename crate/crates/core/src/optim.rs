//! Adam with bias correction.

use crate::autodiff::{Gradients, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::Matrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<Matrix>,
    second_moment: Vec<Matrix>,
    step_count: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let zeros: Vec<Matrix> = store
            .values()
            .iter()
            .map(|m| Matrix::zeros(m.rows(), m.cols()))
            .collect();
        AdamState {
            config,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn second_moments(&self) -> &[Matrix] {
        &self.second_moment
    }

    /// Applies one update to every parameter in `store`.
    ///
    /// Refuses non-finite gradients without touching any state.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) -> Result<()> {
        if grads.len() != store.len() || self.first_moment.len() != store.len() {
            return Err(Error::config(format!(
                "adam: {} params, {} grads, {} moments",
                store.len(),
                grads.len(),
                self.first_moment.len()
            )));
        }
        for id in store.ids() {
            if store.get(id).shape() != grads.get(id).shape() {
                return Err(Error::config(format!(
                    "adam: gradient shape mismatch for {}",
                    store.name(id)
                )));
            }
            if !grads.get(id).is_finite() {
                return Err(Error::non_finite(format!("gradient of {}", store.name(id))));
            }
        }

        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);

        for id in store.ids() {
            let i = id.index();
            let g = grads.get(id).data();
            let m = self.first_moment[i].data_mut();
            let v = self.second_moment[i].data_mut();
            let w = store.get_mut(id).data_mut();
            for k in 0..w.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                w[k] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;

    fn scalar_store(x: f64) -> (ParamStore, crate::autodiff::ParamId) {
        let mut store = ParamStore::new();
        let id = store.add("x", Matrix::scalar(x));
        (store, id)
    }

    fn grad_of_square(store: &ParamStore, id: crate::autodiff::ParamId) -> Gradients {
        let mut tape = Tape::new();
        let x = tape.param(store, id).unwrap();
        let sq = tape.mul(x, x).unwrap();
        let loss = tape.sum_all(sq).unwrap();
        tape.backward(loss, store).unwrap()
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [0.37, -5.0, 1e-3] {
            let (mut store, id) = scalar_store(0.0);
            let grads = Gradients::from_matrices(vec![Matrix::scalar(g)]);
            let mut adam = AdamState::new(AdamConfig::default(), &store);
            adam.step(&mut store, &grads).unwrap();
            let moved = store.get(id).item();
            let expect = -3e-4 * g / (g.abs() + 1e-8);
            assert!((moved - expect).abs() < 1e-12, "{moved} vs {expect}");
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let (mut store, id) = scalar_store(0.25);
        let grads = Gradients::zeros_like(&store);
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        adam.step(&mut store, &grads).unwrap();
        assert_eq!(store.get(id).item(), 0.25);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn descends_quadratic_monotonically() {
        let (mut store, id) = scalar_store(1.0);
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        let mut prev = 1.0f64;
        for _ in 0..100 {
            let grads = grad_of_square(&store, id);
            adam.step(&mut store, &grads).unwrap();
            let x = store.get(id).item();
            assert!(x.abs() < prev.abs());
            prev = x;
        }
        assert!(adam.second_moments().iter().all(|v| v.data().iter().all(|&x| x >= 0.0)));
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let (mut store, id) = scalar_store(1.0);
        let mut adam = AdamState::new(AdamConfig::default(), &store);
        let grads = Gradients::from_matrices(vec![Matrix::scalar(f64::NAN)]);
        assert!(matches!(
            adam.step(&mut store, &grads),
            Err(Error::NonFinite { .. })
        ));
        assert_eq!(store.get(id).item(), 1.0);
        assert_eq!(adam.step_count(), 0);
    }
}
