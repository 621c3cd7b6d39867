//! Diagonal Gaussian distributions with clamped log standard deviations.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// `½·ln(2π)`
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;
/// `½·ln(2πe)`, the entropy of a unit normal.
pub const HALF_LN_2PI_E: f64 = 1.418_938_533_204_672_7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogStdBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for LogStdBounds {
    fn default() -> Self {
        Self {
            min: -5.0,
            max: 2.0,
        }
    }
}

impl LogStdBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::config(
                "log_std bounds",
                format!("need finite min < max, got [{min}, {max}]"),
            ));
        }
        Ok(Self { min, max })
    }

    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    /// True when `raw` lies strictly inside the range, i.e. the clamp passes
    /// gradient through.
    #[inline]
    pub fn passes_gradient(&self, raw: f64) -> bool {
        raw > self.min && raw < self.max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagGaussian {
    mean: Vec<f64>,
    log_std: Vec<f64>,
}

impl DiagGaussian {
    /// Builds a distribution, clamping `log_std` into `bounds`.
    pub fn new(mean: Vec<f64>, log_std: Vec<f64>, bounds: LogStdBounds) -> Result<Self> {
        if mean.len() != log_std.len() {
            return Err(Error::dims("gaussian log_std", mean.len(), log_std.len()));
        }
        if mean.is_empty() {
            return Err(Error::dims("gaussian dimension", 1, 0));
        }
        if mean.iter().any(|m| !m.is_finite()) || log_std.iter().any(|s| s.is_nan()) {
            return Err(Error::NonFinite {
                what: "gaussian parameters".into(),
            });
        }
        let log_std = log_std.into_iter().map(|s| bounds.clamp(s)).collect();
        Ok(Self { mean, log_std })
    }

    /// Splits a network head output `[mean ; raw_log_std]` into a distribution.
    pub fn from_head(head: &[f64], bounds: LogStdBounds) -> Result<Self> {
        if !head.len().is_multiple_of(2) || head.is_empty() {
            return Err(Error::dims("gaussian head", head.len() + 1, head.len()));
        }
        let d = head.len() / 2;
        Self::new(head[..d].to_vec(), head[d..].to_vec(), bounds)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn std(&self) -> Vec<f64> {
        self.log_std.iter().map(|s| s.exp()).collect()
    }

    pub fn log_prob(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::dims("gaussian sample", self.dim(), x.len()));
        }
        Ok(self
            .mean
            .iter()
            .zip(&self.log_std)
            .zip(x)
            .map(|((m, s), xi)| {
                let u = (xi - m) / s.exp();
                -s - HALF_LN_2PI - 0.5 * u * u
            })
            .sum())
    }

    /// Gradient of `log_prob(x)` with respect to the mean and the (clamped)
    /// log standard deviation.
    pub fn log_prob_grad(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if x.len() != self.dim() {
            return Err(Error::dims("gaussian sample", self.dim(), x.len()));
        }
        let mut d_mean = Vec::with_capacity(self.dim());
        let mut d_log_std = Vec::with_capacity(self.dim());
        for ((m, s), xi) in self.mean.iter().zip(&self.log_std).zip(x) {
            let inv_var = (-2.0 * s).exp();
            let diff = xi - m;
            d_mean.push(diff * inv_var);
            d_log_std.push(diff * diff * inv_var - 1.0);
        }
        Ok((d_mean, d_log_std))
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|s| s + HALF_LN_2PI_E).sum()
    }

    /// `mean + exp(log_std) * eps` with `eps ~ N(0, I)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.log_std)
            .map(|(m, s)| {
                let eps: f64 = rng.sample(StandardNormal);
                m + s.exp() * eps
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(d: usize) -> DiagGaussian {
        DiagGaussian::new(vec![0.0; d], vec![0.0; d], LogStdBounds::default()).unwrap()
    }

    #[test]
    fn standard_normal_values() {
        assert!((unit(1).log_prob(&[0.0]).unwrap() + 0.918_938_533_204_672_7).abs() < 1e-15);
        assert!((unit(2).log_prob(&[0.0, 0.0]).unwrap() + 1.837_877_066_409_345_3).abs() < 1e-14);
        assert!((unit(1).entropy() - 1.418_938_533_204_672_7).abs() < 1e-15);
        assert!((unit(2).entropy() - 2.837_877_066_409_345_3).abs() < 1e-14);
        let wide = DiagGaussian::new(vec![0.0], vec![2f64.ln()], LogStdBounds::default()).unwrap();
        assert!((wide.entropy() - (1.418_938_533_204_672_7 + 2f64.ln())).abs() < 1e-15);
        assert!((wide.entropy() - 2.1121).abs() < 1e-4);
    }

    /// Trapezoid integration of the density on a fine grid. Checks that
    /// `log_prob` is a correctly normalised density, independently of the
    /// closed form.
    #[test]
    fn density_integrates_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let m: f64 = rng.random_range(-2.0..2.0);
            let s: f64 = rng.random_range(-1.0..0.7);
            let g = DiagGaussian::new(vec![m], vec![s], LogStdBounds::default()).unwrap();
            let sd = s.exp();
            let (lo, hi, n) = (m - 12.0 * sd, m + 12.0 * sd, 200_000);
            let h = (hi - lo) / n as f64;
            let mut total = 0.0;
            for i in 0..=n {
                let x = lo + h * i as f64;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                total += w * g.log_prob(&[x]).unwrap().exp();
            }
            assert!((total * h - 1.0).abs() < 1e-10, "integral {}", total * h);
        }
    }

    #[test]
    fn log_prob_matches_textbook_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let d = rng.random_range(1..5usize);
            let mean: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let ls: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..1.5)).collect();
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-4.0..4.0)).collect();
            let g = DiagGaussian::new(mean.clone(), ls.clone(), LogStdBounds::default()).unwrap();
            // product of univariate densities, each 1/(σ√(2π)) exp(-(x-μ)²/(2σ²))
            let mut density = 1.0;
            for i in 0..d {
                let sigma = ls[i].exp();
                density *= (-(x[i] - mean[i]).powi(2) / (2.0 * sigma * sigma)).exp()
                    / (sigma * (2.0 * std::f64::consts::PI).sqrt());
            }
            let got = g.log_prob(&x).unwrap();
            assert!((got - density.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn log_prob_grad_matches_finite_differences() {
        let g =
            DiagGaussian::new(vec![0.3, -1.0], vec![-0.4, 0.2], LogStdBounds::default()).unwrap();
        let x = [1.1, -0.2];
        let (dm, ds) = g.log_prob_grad(&x).unwrap();
        let eps = 1e-6;
        for i in 0..2 {
            let mut m = g.mean().to_vec();
            m[i] += eps;
            let up = DiagGaussian::new(m.clone(), g.log_std().to_vec(), LogStdBounds::default())
                .unwrap();
            m[i] -= 2.0 * eps;
            let dn = DiagGaussian::new(m, g.log_std().to_vec(), LogStdBounds::default()).unwrap();
            let fd = (up.log_prob(&x).unwrap() - dn.log_prob(&x).unwrap()) / (2.0 * eps);
            assert!((fd - dm[i]).abs() < 1e-7);

            let mut s = g.log_std().to_vec();
            s[i] += eps;
            let up =
                DiagGaussian::new(g.mean().to_vec(), s.clone(), LogStdBounds::default()).unwrap();
            s[i] -= 2.0 * eps;
            let dn = DiagGaussian::new(g.mean().to_vec(), s, LogStdBounds::default()).unwrap();
            let fd = (up.log_prob(&x).unwrap() - dn.log_prob(&x).unwrap()) / (2.0 * eps);
            assert!((fd - ds[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn neg_infinite_log_std_is_floored() {
        let g = DiagGaussian::new(
            vec![1.5, -2.0],
            vec![f64::NEG_INFINITY; 2],
            LogStdBounds::default(),
        )
        .unwrap();
        assert_eq!(g.log_std(), &[-5.0, -5.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = g.sample(&mut rng);
        assert!((z[0] - 1.5).abs() < 0.05 && (z[1] + 2.0).abs() < 0.05);
    }

    #[test]
    fn nan_and_length_mismatch_rejected() {
        assert!(DiagGaussian::new(vec![0.0], vec![f64::NAN], LogStdBounds::default()).is_err());
        assert!(
            DiagGaussian::new(vec![f64::INFINITY], vec![0.0], LogStdBounds::default()).is_err()
        );
        assert!(DiagGaussian::new(vec![0.0, 1.0], vec![0.0], LogStdBounds::default()).is_err());
        assert!(unit(2).log_prob(&[0.0]).is_err());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let g =
            DiagGaussian::new(vec![0.2, -0.1], vec![0.1, -0.3], LogStdBounds::default()).unwrap();
        let a = g.sample(&mut ChaCha8Rng::seed_from_u64(42));
        let b = g.sample(&mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn sample_moments_converge() {
        let g = unit(1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| g.sample(&mut rng)[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn entropy_matches_monte_carlo() {
        let g =
            DiagGaussian::new(vec![0.5, -1.0], vec![-0.7, 0.4], LogStdBounds::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let lps: Vec<f64> = (0..n)
            .map(|_| g.log_prob(&g.sample(&mut rng)).unwrap())
            .collect();
        let mean = lps.iter().sum::<f64>() / n as f64;
        let var = lps.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(
            (-mean - g.entropy()).abs() < 3.0 * se,
            "mc {} vs {}",
            -mean,
            g.entropy()
        );
    }

    proptest! {
        #[test]
        fn log_std_always_within_bounds(raw in prop::collection::vec(-50.0f64..50.0, 1..6)) {
            let bounds = LogStdBounds::default();
            let g = DiagGaussian::new(vec![0.0; raw.len()], raw, bounds).unwrap();
            for s in g.log_std() {
                prop_assert!(*s >= bounds.min && *s <= bounds.max);
            }
        }

        #[test]
        fn entropy_is_closed_form(ls in prop::collection::vec(-5.0f64..2.0, 1..6)) {
            let g = DiagGaussian::new(vec![0.0; ls.len()], ls.clone(), LogStdBounds::default()).unwrap();
            let want: f64 = ls.iter().map(|s| s + 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()).sum();
            prop_assert!((g.entropy() - want).abs() < 1e-12);
        }
    }
}
