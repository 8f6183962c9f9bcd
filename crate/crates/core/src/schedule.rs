//! Diffusion noise schedules and single-step forward/reverse updates.
//!
//! Steps are 1-based: `t = T` is the noisiest, `alpha_bar(0) == 1` by
//! definition. The forward process is
//! `z_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps`.

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Default beta range for linear schedules.
pub const DEFAULT_BETA_MIN: f64 = 1e-4;
pub const DEFAULT_BETA_MAX: f64 = 2e-2;
/// Default step counts: 50 for generation, 200 for super-resolution.
pub const DEFAULT_GENERATION_STEPS: usize = 50;
pub const DEFAULT_SR_STEPS: usize = 200;

/// Per-step beta, alpha = 1 - beta, and cumulative alpha-bar.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// Builds a schedule from raw betas, validating every invariant.
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::Schedule("step count must be >= 1".into()));
        }
        if !betas.iter().all(|b| b.is_finite() && *b > 0.0 && *b < 1.0) {
            return Err(Error::Schedule("every beta must lie in (0, 1)".into()));
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bars = Vec::with_capacity(alphas.len());
        let mut prod = 1.0;
        for a in &alphas {
            prod *= a;
            alpha_bars.push(prod);
        }
        Ok(Self { betas, alphas, alpha_bars })
    }

    pub fn step_count(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    /// Beta at 1-based step `t`.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    /// Alpha at 1-based step `t`.
    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    /// Alpha-bar at 1-based step `t`; `alpha_bar(0) == 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.step_count() {
            Err(Error::Schedule(format!(
                "step {t} outside 1..={}",
                self.step_count()
            )))
        } else {
            Ok(())
        }
    }
}

/// Linear beta schedule over `steps` steps, inclusive of both endpoints.
pub fn make_linear_schedule(steps: usize, beta_min: f64, beta_max: f64) -> Result<NoiseSchedule> {
    if steps == 0 {
        return Err(Error::Schedule("step count must be >= 1".into()));
    }
    if !(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0) {
        return Err(Error::Schedule(format!(
            "need 0 < beta_min <= beta_max < 1, got [{beta_min}, {beta_max}]"
        )));
    }
    let betas = if steps == 1 {
        vec![beta_min]
    } else {
        (0..steps)
            .map(|i| beta_min + (beta_max - beta_min) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    NoiseSchedule::from_betas(betas)
}

/// Default schedule with `steps` steps and the standard beta range.
pub fn default_schedule(steps: usize) -> Result<NoiseSchedule> {
    make_linear_schedule(steps, DEFAULT_BETA_MIN, DEFAULT_BETA_MAX)
}

#[inline]
fn mix(x0: &Plane, eps: &Plane, alpha_bar: f64) -> Result<Plane> {
    let sa = alpha_bar.sqrt();
    let sb = (1.0 - alpha_bar).sqrt();
    x0.zip_map(eps, |x, e| sa * x + sb * e)
}

/// Forward noising: `sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps`.
pub fn add_noise(x0: &Plane, eps: &Plane, t: usize, sched: &NoiseSchedule) -> Result<Plane> {
    sched.check_step(t)?;
    x0.check_same_shape(eps, "add_noise")?;
    mix(x0, eps, sched.alpha_bar(t))
}

/// One DDIM update from step `t` to `t_prev` (`t_prev = 0` returns the
/// predicted x0). `noise` is required iff `eta > 0`.
pub fn ddim_step(
    z_t: &Plane,
    eps_hat: &Plane,
    t: usize,
    t_prev: usize,
    sched: &NoiseSchedule,
    eta: f64,
    noise: Option<&Plane>,
) -> Result<Plane> {
    sched.check_step(t)?;
    if t_prev >= t {
        return Err(Error::StepOrder { t, t_prev });
    }
    z_t.check_same_shape(eps_hat, "ddim_step")?;
    if eta > 0.0 && noise.is_none() {
        return Err(Error::MissingNoise("ddim_step with eta > 0".into()));
    }

    let ab_t = sched.alpha_bar(t);
    let ab_prev = sched.alpha_bar(t_prev);
    let sqrt_ab_t = ab_t.sqrt();
    let sqrt_1m_ab_t = (1.0 - ab_t).sqrt();

    let sigma = if eta > 0.0 {
        eta * ((1.0 - ab_prev) / (1.0 - ab_t)).sqrt() * (1.0 - ab_t / ab_prev).sqrt()
    } else {
        0.0
    };
    let dir_coeff = (1.0 - ab_prev - sigma * sigma).max(0.0).sqrt();
    let sqrt_ab_prev = ab_prev.sqrt();

    let mut out = z_t.zip_map(eps_hat, |z, e| {
        let x0_hat = (z - sqrt_1m_ab_t * e) / sqrt_ab_t;
        sqrt_ab_prev * x0_hat + dir_coeff * e
    })?;
    if sigma > 0.0 {
        let n = noise.expect("checked above");
        z_t.check_same_shape(n, "ddim_step noise")?;
        out = out.zip_map(n, |v, x| v + sigma * x)?;
    }
    Ok(out)
}

/// One DDPM (ancestral) update from step `t` to `t - 1`. The posterior
/// variance `beta_tilde_1` is zero, so the final step adds no noise.
pub fn ddpm_step(
    z_t: &Plane,
    eps_hat: &Plane,
    t: usize,
    sched: &NoiseSchedule,
    noise: &Plane,
) -> Result<Plane> {
    sched.check_step(t)?;
    z_t.check_same_shape(eps_hat, "ddpm_step")?;
    z_t.check_same_shape(noise, "ddpm_step noise")?;

    let beta = sched.beta(t);
    let alpha = sched.alpha(t);
    let ab_t = sched.alpha_bar(t);
    let ab_prev = sched.alpha_bar(t - 1);
    let inv_sqrt_alpha = 1.0 / alpha.sqrt();
    let eps_coeff = beta / (1.0 - ab_t).sqrt();
    let beta_tilde = if t == 1 { 0.0 } else { beta * (1.0 - ab_prev) / (1.0 - ab_t) };
    let sigma = beta_tilde.sqrt();

    let mean = z_t.zip_map(eps_hat, |z, e| inv_sqrt_alpha * (z - eps_coeff * e))?;
    if sigma > 0.0 {
        mean.zip_map(noise, |m, n| m + sigma * n)
    } else {
        Ok(mean)
    }
}

/// Descending 1-based step indices for sampling `sample_steps` of a
/// `train_steps` schedule: evenly spaced, rounding down, ending at the
/// noisiest step. Equal counts yield `T, T-1, ..., 1`.
pub fn sample_timesteps(train_steps: usize, sample_steps: usize) -> Result<Vec<usize>> {
    if sample_steps == 0 || train_steps == 0 {
        return Err(Error::Schedule("step counts must be >= 1".into()));
    }
    if sample_steps > train_steps {
        return Err(Error::Schedule(format!(
            "cannot sample {sample_steps} steps from a {train_steps}-step schedule"
        )));
    }
    let mut ts: Vec<usize> = (0..sample_steps)
        .map(|i| ((i + 1) * train_steps) / sample_steps)
        .collect();
    ts.dedup();
    ts.reverse();
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn single_step_schedule() {
        let s = make_linear_schedule(1, 0.02, 0.02).unwrap();
        assert_eq!(s.betas(), &[0.02]);
        assert!((s.alpha_bar(1) - 0.98).abs() < 1e-15);
    }

    #[test]
    fn two_step_alpha_bars() {
        let s = make_linear_schedule(2, 0.1, 0.3).unwrap();
        assert!((s.alpha_bar(1) - 0.9).abs() < 1e-15);
        assert!((s.alpha_bar(2) - 0.63).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_linear_schedule(0, 0.1, 0.2).is_err());
        assert!(make_linear_schedule(10, 0.0, 0.2).is_err());
        assert!(make_linear_schedule(10, 0.3, 0.2).is_err());
        assert!(make_linear_schedule(10, 0.3, 1.0).is_err());
    }

    /// Double-double (compensated) product, used as an extended-precision
    /// oracle for the cumulative alpha product.
    fn dd_cumprod(alphas: &[f64]) -> Vec<f64> {
        // (hi, lo) pairs via Dekker/Veltkamp two-product.
        fn two_prod(a: f64, b: f64) -> (f64, f64) {
            let p = a * b;
            (p, a.mul_add(b, -p))
        }
        let mut out = Vec::with_capacity(alphas.len());
        let (mut hi, mut lo) = (1.0f64, 0.0f64);
        for &a in alphas {
            let (p, e) = two_prod(hi, a);
            let lo_new = lo * a + e;
            hi = p + lo_new;
            lo = (p - hi) + lo_new;
            out.push(hi + lo);
        }
        out
    }

    #[test]
    fn default_sr_schedule_matches_extended_precision_oracle() {
        let s = default_schedule(200).unwrap();
        let oracle = dd_cumprod(s.alphas());
        for (got, want) in s.alpha_bars().iter().zip(oracle.iter()) {
            assert!(((got - want) / want).abs() < 1e-12);
        }
        // Strictly decreasing, endpoints sane.
        for w in s.alpha_bars().windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(s.alpha_bar(1) >= 0.99);
        let last = s.alpha_bar(200);
        assert!(last > 0.0 && last < 1.0);
    }

    #[test]
    fn cumulative_ratio_property() {
        for (steps, lo, hi) in [(7usize, 0.01, 0.4), (50, 1e-4, 2e-2), (200, 1e-4, 2e-2)] {
            let s = make_linear_schedule(steps, lo, hi).unwrap();
            for t in 2..=steps {
                let ratio = s.alpha_bar(t) / s.alpha_bar(t - 1);
                assert!(((ratio - s.alpha(t)) / s.alpha(t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn add_noise_endpoints_and_scalar_case() {
        let x0 = Plane::filled(2, 2, 1, 2.0);
        let eps = Plane::filled(2, 2, 1, 1.0);
        // Hypothetical endpoints exercise the raw mix rule directly.
        assert_eq!(mix(&x0, &eps, 1.0).unwrap().get(0, 0, 0), 2.0);
        assert_eq!(mix(&x0, &eps, 0.0).unwrap().get(0, 0, 0), 1.0);
        // abar = 0.25: 0.5*2 + sqrt(0.75)*1.
        let got = mix(&x0, &eps, 0.25).unwrap().get(0, 0, 0);
        assert!((got - (1.0 + 0.75f64.sqrt())).abs() < 1e-12);
        assert!((got - 1.8660).abs() < 1e-4);
    }

    #[test]
    fn add_noise_validates_inputs() {
        let s = default_schedule(4).unwrap();
        let a = Plane::zeros(2, 2, 1);
        let b = Plane::zeros(2, 3, 1);
        assert!(matches!(add_noise(&a, &b, 1, &s), Err(Error::Dimension(_))));
        assert!(add_noise(&a, &a, 0, &s).is_err());
        assert!(add_noise(&a, &a, 5, &s).is_err());
    }

    #[test]
    fn ddim_terminal_step_returns_x0_hat() {
        let s = make_linear_schedule(4, 0.1, 0.2).unwrap();
        let z = Plane::filled(2, 2, 1, 0.7);
        let e = Plane::filled(2, 2, 1, 0.2);
        let out = ddim_step(&z, &e, 1, 0, &s, 0.0, None).unwrap();
        let ab = s.alpha_bar(1);
        let want = (0.7 - (1.0 - ab).sqrt() * 0.2) / ab.sqrt();
        assert!((out.get(0, 0, 0) - want).abs() < 1e-15);
    }

    #[test]
    fn ddim_zero_eps_rescales() {
        let s = make_linear_schedule(4, 0.1, 0.2).unwrap();
        let z = Plane::filled(1, 3, 1, 1.5);
        let e = Plane::zeros(1, 3, 1);
        let out = ddim_step(&z, &e, 3, 2, &s, 0.0, None).unwrap();
        let want = (s.alpha_bar(2) / s.alpha_bar(3)).sqrt() * 1.5;
        assert!((out.get(0, 0, 0) - want).abs() < 1e-15);
    }

    #[test]
    fn ddim_rejects_bad_order_and_missing_noise() {
        let s = make_linear_schedule(4, 0.1, 0.2).unwrap();
        let z = Plane::zeros(1, 1, 1);
        assert!(matches!(
            ddim_step(&z, &z, 2, 2, &s, 0.0, None),
            Err(Error::StepOrder { .. })
        ));
        assert!(matches!(
            ddim_step(&z, &z, 2, 1, &s, 0.5, None),
            Err(Error::MissingNoise(_))
        ));
    }

    #[test]
    fn ddim_deterministic_at_eta_zero() {
        let s = default_schedule(10).unwrap();
        let mut rng = StreamRng::derive(3, "ddim_det", 0);
        let z = Plane::normal(4, 4, 2, &mut rng);
        let e = Plane::normal(4, 4, 2, &mut rng);
        let a = ddim_step(&z, &e, 5, 4, &s, 0.0, None).unwrap();
        let b = ddim_step(&z, &e, 5, 4, &s, 0.0, None).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn ddpm_scalar_mean_matches_hand_computation() {
        // alpha_t = 0.9 at t = 1 so abar_1 = 0.9 and abar_0 = 1.
        let s = NoiseSchedule::from_betas(vec![0.1]).unwrap();
        let z = Plane::filled(1, 1, 1, 1.0);
        let e = Plane::filled(1, 1, 1, 0.5);
        let noise = Plane::filled(1, 1, 1, 123.0); // must be ignored at t = 1
        let out = ddpm_step(&z, &e, 1, &s, &noise).unwrap();
        let want = (1.0 / 0.9f64.sqrt()) * (1.0 - (0.1 / 0.1f64.sqrt()) * 0.5);
        assert!((out.get(0, 0, 0) - want).abs() < 1e-12);
        assert!((out.get(0, 0, 0) - 0.887_42).abs() < 1e-5);
    }

    #[test]
    fn ddpm_last_step_is_noise_free() {
        let s = default_schedule(5).unwrap();
        let mut rng = StreamRng::derive(4, "ddpm_det", 0);
        let z = Plane::normal(3, 3, 1, &mut rng);
        let e = Plane::normal(3, 3, 1, &mut rng);
        let n1 = Plane::normal(3, 3, 1, &mut rng);
        let n2 = Plane::normal(3, 3, 1, &mut rng);
        let a = ddpm_step(&z, &e, 1, &s, &n1).unwrap();
        let b = ddpm_step(&z, &e, 1, &s, &n2).unwrap();
        assert_eq!(a.data(), b.data());
        // At t > 1 the noise must matter.
        let c = ddpm_step(&z, &e, 3, &s, &n1).unwrap();
        let d = ddpm_step(&z, &e, 3, &s, &n2).unwrap();
        assert_ne!(c.data(), d.data());
    }

    #[test]
    fn strided_timesteps() {
        assert_eq!(sample_timesteps(200, 4).unwrap(), vec![200, 150, 100, 50]);
        assert_eq!(sample_timesteps(5, 5).unwrap(), vec![5, 4, 3, 2, 1]);
        assert_eq!(sample_timesteps(10, 3).unwrap(), vec![10, 6, 3]);
        assert!(sample_timesteps(10, 11).is_err());
        assert!(sample_timesteps(10, 0).is_err());
    }
}
