use crate::error::{Error, Result};

/// Adaptive-moment optimizer state for one flat parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Adam {
    pub fn new(len: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update, descending along `grads`.
    ///
    /// Nothing is modified if any gradient entry is non-finite.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::dims("adam parameters", self.m.len(), params.len()));
        }
        if grads.len() != params.len() {
            return Err(Error::dims("adam gradients", params.len(), grads.len()));
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Rescales `grads` in place so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [&mut [f64]], max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut opt = Adam::new(3);
        let mut p = vec![1.0, -2.0, 0.5];
        for _ in 0..10 {
            opt.step(&mut p, &[0.0; 3], 0.1).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(opt.steps(), 10);
    }

    #[test]
    fn constant_gradient_moves_against_its_sign() {
        let mut opt = Adam::new(2);
        let mut p = vec![0.0, 0.0];
        for _ in 0..50 {
            opt.step(&mut p, &[1.0, -3.0], 0.01).unwrap();
        }
        assert!(p[0] < -0.4 && p[1] > 0.4, "{p:?}");
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut opt = Adam::new(1);
        let mut x = vec![3.0];
        for _ in 0..500 {
            let g = 2.0 * x[0];
            opt.step(&mut x, &[g], 0.1).unwrap();
        }
        assert!(x[0].abs() < 0.01, "x = {}", x[0]);
    }

    #[test]
    fn non_finite_gradient_reports_index() {
        let mut opt = Adam::new(3);
        let mut p = vec![0.0; 3];
        let err = opt.step(&mut p, &[0.0, 1.0, f64::NAN], 0.1).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { index: 2 }));
        assert_eq!(opt.steps(), 0);
        assert_eq!(p, vec![0.0; 3]);
    }

    #[test]
    fn clipping_bounds_the_norm() {
        let mut a = vec![3.0, 0.0];
        let mut b = vec![4.0];
        let before = clip_grad_norm(&mut [&mut a, &mut b], 1.0);
        assert!((before - 5.0).abs() < 1e-12);
        let after = (a[0] * a[0] + b[0] * b[0]).sqrt();
        assert!((after - 1.0).abs() < 1e-12);
    }
}
