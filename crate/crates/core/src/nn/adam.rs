use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, MlpModel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon.is_finite()
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidTrainConfig(format!(
                "invalid Adam settings {self:?}"
            )))
        }
    }
}

/// First and second moment estimates, laid out like the model.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: MlpModel,
    pub v: MlpModel,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(model: &MlpModel, config: AdamConfig) -> Self {
        Self {
            config,
            m: model.zeros_like(),
            v: model.zeros_like(),
            step_count: 0,
        }
    }
}

/// One bias-corrected Adam update. Non-finite gradients are rejected before
/// any parameter or moment is touched.
pub fn adam_step(model: &mut MlpModel, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if grads.dims() != model.dims() || state.m.dims() != model.dims() {
        return Err(Error::ShapeMismatch(format!(
            "gradient dims {:?} / optimizer dims {:?} do not match model {:?}",
            grads.dims(),
            state.m.dims(),
            model.dims()
        )));
    }
    if let Some((name, _)) = grads
        .tensors()
        .into_iter()
        .find(|(_, t)| t.iter().any(|g| !g.is_finite()))
    {
        return Err(Error::NonFiniteGradient { param: name });
    }

    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    state.step_count += 1;
    let t = i32::try_from(state.step_count).unwrap_or(i32::MAX);
    let correction1 = 1.0 - beta1.powi(t);
    let correction2 = 1.0 - beta2.powi(t);

    let grad_tensors = grads.tensors();
    let params = model.tensors_mut();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for (((p, (_, g)), m), v) in params.into_iter().zip(grad_tensors).zip(ms).zip(vs) {
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
            v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Dense, Matrix};

    fn scalar_model(w: f64) -> MlpModel {
        MlpModel {
            layers: vec![Dense {
                weights: Matrix::from_vec(1, 1, vec![w]).unwrap(),
                bias: vec![0.0],
            }],
        }
    }

    fn scalar_grad(g: f64) -> Gradients {
        let mut grad = scalar_model(g);
        grad.layers[0].bias[0] = 0.0;
        grad
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [3.7, -0.02, 1e4] {
            let mut model = scalar_model(0.5);
            let mut state = AdamState::new(&model, AdamConfig::default());
            adam_step(&mut model, &scalar_grad(g), &mut state).unwrap();
            let moved = model.layers[0].weights.get(0, 0) - 0.5;
            assert!((moved + 1e-3 * g.signum()).abs() < 1e-9, "{moved}");
            assert_eq!(model.layers[0].bias[0], 0.0);
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut model = scalar_model(0.5);
        let before = model.clone();
        let mut state = AdamState::new(&model, AdamConfig::default());
        adam_step(&mut model, &scalar_grad(0.0), &mut state).unwrap();
        assert_eq!(model, before);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn three_hand_iterated_steps() {
        // Gradients 1, -2, 0.5 from theta = 0.3, recurrences evaluated at 40 digits.
        let expected = [
            0.299_000_000_01,
            0.299_366_103_534_720_75,
            0.299_502_794_196_738_2,
        ];
        let mut model = scalar_model(0.3);
        let mut state = AdamState::new(&model, AdamConfig::default());
        for (g, want) in [1.0, -2.0, 0.5].into_iter().zip(expected) {
            adam_step(&mut model, &scalar_grad(g), &mut state).unwrap();
            let got = model.layers[0].weights.get(0, 0);
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
        assert!(state.v.layers[0]
            .weights
            .as_slice()
            .iter()
            .all(|&v| v >= 0.0));
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut model = scalar_model(0.5);
        let before = model.clone();
        let mut state = AdamState::new(&model, AdamConfig::default());
        let err = adam_step(&mut model, &scalar_grad(f64::NAN), &mut state).unwrap_err();
        assert_eq!(err, Error::NonFiniteGradient { param: "w1".into() });
        assert_eq!(model, before);
        assert_eq!(state.step_count, 0);
    }
}
