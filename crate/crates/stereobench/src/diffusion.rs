//! Latent-space diffusion kernels: forward noising, velocity
//! parameterization, deterministic DDIM stepping, and an edge-consistent
//! training loss with its exact analytic gradient.
//!
//! Everything operates on small dense `f64` tensors; these kernels exist to
//! pin down the math (and to be checked against oracles), not to train
//! networks.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::edges::{sobel, sobel_adjoint};
use crate::error::{Error, Result};

/// What a tensor holds within the stereo-synthesis pipeline. Purely
/// descriptive; no arithmetic depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentRole {
    /// Clean right-view latent.
    Clean,
    /// Noised right-view latent at some step.
    Noisy,
    /// Unit-Gaussian noise.
    Noise,
    /// Velocity target.
    Velocity,
    /// Network output.
    Prediction,
    /// Left-view latent passed as conditioning.
    ConditionLeft,
    /// Warped-view latent passed as conditioning.
    ConditionWarped,
}

/// Dense channels-height-width tensor of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
    role: LatentRole,
}

impl LatentTensor {
    pub fn zeros(channels: usize, height: usize, width: usize, role: LatentRole) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "tensor shape ({channels}, {height}, {width}) has a zero extent"
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
            role,
        })
    }

    pub fn from_data(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
        role: LatentRole,
    ) -> Result<Self> {
        let mut t = Self::zeros(channels, height, width, role)?;
        if data.len() != t.data.len() {
            return Err(Error::invalid(format!(
                "tensor data length {} does not match shape ({channels}, {height}, {width})",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tensor holds a non-finite value"));
        }
        t.data = data;
        Ok(t)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn role(&self) -> LatentRole {
        self.role
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    /// Sum of squared elements.
    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

fn check_shapes(a: &LatentTensor, b: &LatentTensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: a.shape(),
            got: b.shape(),
        });
    }
    Ok(())
}

/// Elementwise `ca * a + cb * b`.
fn lincomb(ca: f64, a: &LatentTensor, cb: f64, b: &LatentTensor, role: LatentRole) -> Result<LatentTensor> {
    check_shapes(a, b)?;
    let data = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| ca * x + cb * y)
        .collect();
    LatentTensor::from_data(a.channels, a.height, a.width, data, role)
}

/// Variance schedule with cumulative products `alpha_bar(t)`.
/// `alpha_bar(0) == 1` by convention (the no-noise limit); defined steps are
/// `1..=len()`, over which `alpha_bar` is strictly decreasing in `(0, 1)`.
#[derive(Debug, Clone)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// Linearly interpolated betas from `beta_start` at t=1 to `beta_end`
    /// at t=steps. Requires `0 < beta_start <= beta_end < 1` and at least
    /// one step.
    pub fn linear(beta_start: f64, beta_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidRange {
                reason: "schedule needs at least one step".into(),
            });
        }
        if !(beta_start.is_finite() && beta_end.is_finite())
            || beta_start <= 0.0
            || beta_end < beta_start
            || beta_end >= 1.0
        {
            return Err(Error::InvalidRange {
                reason: format!(
                    "betas must satisfy 0 < start <= end < 1, got start={beta_start}, end={beta_end}"
                ),
            });
        }
        let betas: Vec<f64> = if steps == 1 {
            vec![beta_start]
        } else {
            (0..steps)
                .map(|i| {
                    beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64
                })
                .collect()
        };
        let mut alpha_bars = Vec::with_capacity(steps);
        let mut acc = 1.0;
        for beta in &betas {
            acc *= 1.0 - beta;
            alpha_bars.push(acc);
        }
        Ok(Self { betas, alpha_bars })
    }

    /// The common 1000-step linear schedule from 1e-4 to 0.02.
    pub fn default_linear() -> Self {
        Self::linear(1e-4, 0.02, 1000).expect("default schedule parameters are valid")
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// Beta at step `t`, 1-indexed.
    pub fn beta(&self, t: usize) -> Result<f64> {
        if t == 0 || t > self.len() {
            return Err(Error::StepOutOfRange {
                t,
                max: self.len(),
            });
        }
        Ok(self.betas[t - 1])
    }

    /// Cumulative product of `(1 - beta)` up to step `t`; `t = 0` returns 1.
    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Ok(1.0);
        }
        if t > self.len() {
            return Err(Error::StepOutOfRange {
                t,
                max: self.len(),
            });
        }
        Ok(self.alpha_bars[t - 1])
    }
}

/// `z_t = sqrt(alpha_bar_t) z_0 + sqrt(1 - alpha_bar_t) eps` for
/// `1 <= t <= len`.
pub fn forward_noise(
    z0: &LatentTensor,
    eps: &LatentTensor,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<LatentTensor> {
    if t == 0 {
        return Err(Error::StepOutOfRange {
            t,
            max: schedule.len(),
        });
    }
    let ab = schedule.alpha_bar(t)?;
    lincomb(ab.sqrt(), z0, (1.0 - ab).sqrt(), eps, LatentRole::Noisy)
}

/// Velocity target `v = sqrt(alpha_bar_t) eps - sqrt(1 - alpha_bar_t) z_0`;
/// the rotation of `(z_0, eps)` that complements [`forward_noise`], so
/// `|z_t|^2 + |v|^2 == |z_0|^2 + |eps|^2` elementwise.
pub fn velocity_target(
    z0: &LatentTensor,
    eps: &LatentTensor,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<LatentTensor> {
    if t == 0 {
        return Err(Error::StepOutOfRange {
            t,
            max: schedule.len(),
        });
    }
    let ab = schedule.alpha_bar(t)?;
    lincomb(ab.sqrt(), eps, -(1.0 - ab).sqrt(), z0, LatentRole::Velocity)
}

/// Inverts the noising rotation given a velocity:
/// `z_0 = sqrt(alpha_bar_t) z_t - sqrt(1 - alpha_bar_t) v`.
pub fn recover_z0(
    zt: &LatentTensor,
    v: &LatentTensor,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<LatentTensor> {
    if t == 0 {
        return Err(Error::StepOutOfRange {
            t,
            max: schedule.len(),
        });
    }
    let ab = schedule.alpha_bar(t)?;
    lincomb(ab.sqrt(), zt, -(1.0 - ab).sqrt(), v, LatentRole::Clean)
}

/// One deterministic (eta = 0) DDIM step from `t` down to `t_prev < t` with
/// a velocity prediction:
///
/// ```text
/// z0_hat  = sqrt(ab_t) z_t - sqrt(1 - ab_t) v_hat
/// eps_hat = sqrt(ab_t) v_hat + sqrt(1 - ab_t) z_t
/// z_prev  = sqrt(ab_prev) z0_hat + sqrt(1 - ab_prev) eps_hat
/// ```
///
/// With the exact velocity this reproduces `forward_noise(z0, eps, t_prev)`;
/// at `t_prev = 0` (`alpha_bar = 1`) it returns `z0_hat` itself.
pub fn ddim_step(
    zt: &LatentTensor,
    v_hat: &LatentTensor,
    t: usize,
    t_prev: usize,
    schedule: &NoiseSchedule,
) -> Result<LatentTensor> {
    if t_prev >= t {
        return Err(Error::NonMonotoneSteps { t, t_prev });
    }
    if t == 0 {
        return Err(Error::StepOutOfRange {
            t,
            max: schedule.len(),
        });
    }
    let ab_t = schedule.alpha_bar(t)?;
    let ab_prev = schedule.alpha_bar(t_prev)?;
    let z0_hat = recover_z0(zt, v_hat, t, schedule)?;
    let eps_hat = lincomb(ab_t.sqrt(), v_hat, (1.0 - ab_t).sqrt(), zt, LatentRole::Prediction)?;
    let role = if t_prev == 0 {
        LatentRole::Clean
    } else {
        LatentRole::Noisy
    };
    lincomb(ab_prev.sqrt(), &z0_hat, (1.0 - ab_prev).sqrt(), &eps_hat, role)
}

/// Evenly strided sampling timesteps from `schedule.len()` down to 0
/// inclusive: `num_steps = 50` over a 1000-step schedule yields
/// `[1000, 980, ..., 20, 0]`.
pub fn ddim_timesteps(schedule: &NoiseSchedule, num_steps: usize) -> Result<Vec<usize>> {
    let total = schedule.len();
    if num_steps == 0 || num_steps > total {
        return Err(Error::InvalidRange {
            reason: format!("num_steps must lie in 1..={total}, got {num_steps}"),
        });
    }
    let stride = total / num_steps;
    let mut steps: Vec<usize> = (0..num_steps).map(|i| total - i * stride).collect();
    steps.push(0);
    Ok(steps)
}

/// Runs [`ddim_step`] along a strictly decreasing timestep sequence,
/// calling `denoiser(z_t, t, conditions)` for the velocity estimate at each
/// occupied step. Conditions are passed through untouched.
pub fn ddim_sample<F>(
    z_start: &LatentTensor,
    timesteps: &[usize],
    conditions: &[LatentTensor],
    schedule: &NoiseSchedule,
    mut denoiser: F,
) -> Result<LatentTensor>
where
    F: FnMut(&LatentTensor, usize, &[LatentTensor]) -> LatentTensor,
{
    if timesteps.len() < 2 {
        return Err(Error::InvalidRange {
            reason: "need at least two timesteps to take a step".into(),
        });
    }
    if let Some(w) = timesteps.windows(2).find(|w| w[1] >= w[0]) {
        return Err(Error::NonMonotoneSteps { t: w[0], t_prev: w[1] });
    }
    let mut z = z_start.clone();
    for w in timesteps.windows(2) {
        let (t, t_prev) = (w[0], w[1]);
        let v_hat = denoiser(&z, t, conditions);
        z = ddim_step(&z, &v_hat, t, t_prev, schedule)?;
    }
    Ok(z)
}

/// Weight of the gradient-difference term in [`ec_loss`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcLossConfig {
    pub alpha: f64,
}

impl Default for EcLossConfig {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

impl EcLossConfig {
    fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::invalid(format!(
                "loss alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Edge-consistent loss between a prediction and its target:
///
/// ```text
/// loss = |pred - target|^2 / N  +  alpha * |S(pred) - S(target)|^2 / N
/// ```
///
/// where `S` stacks per-channel Sobel `gx` and `gy` responses and
/// `N = channels * height * width`. A constant offset `c` leaves the Sobel
/// term at zero, so the loss is exactly `c^2`; the loss never drops below
/// its mean-squared-error term.
pub fn ec_loss(pred: &LatentTensor, target: &LatentTensor, cfg: &EcLossConfig) -> Result<f64> {
    check_shapes(pred, target)?;
    cfg.validate()?;
    let n = pred.data.len() as f64;
    let diff: Vec<f64> = pred.data.iter().zip(&target.data).map(|(p, t)| p - t).collect();
    let mse: f64 = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let mut edge_term = 0.0;
    let plane = pred.height * pred.width;
    for c in 0..pred.channels {
        // Sobel is linear, so S(pred) - S(target) == S(pred - target).
        let g = sobel(pred.width, pred.height, &diff[c * plane..(c + 1) * plane])?;
        edge_term += g.gx().iter().map(|v| v * v).sum::<f64>();
        edge_term += g.gy().iter().map(|v| v * v).sum::<f64>();
    }
    Ok(mse + cfg.alpha * edge_term / n)
}

/// Analytic gradient of [`ec_loss`] with respect to the prediction:
/// `2 (pred - target) / N + (2 alpha / N) S^T (S(pred) - S(target))`.
/// The returned tensor keeps the prediction's role.
pub fn ec_loss_grad(
    pred: &LatentTensor,
    target: &LatentTensor,
    cfg: &EcLossConfig,
) -> Result<LatentTensor> {
    check_shapes(pred, target)?;
    cfg.validate()?;
    let n = pred.data.len() as f64;
    let diff: Vec<f64> = pred.data.iter().zip(&target.data).map(|(p, t)| p - t).collect();
    let mut grad = vec![0.0; diff.len()];
    let plane = pred.height * pred.width;
    for c in 0..pred.channels {
        let g = sobel(pred.width, pred.height, &diff[c * plane..(c + 1) * plane])?;
        let adj = sobel_adjoint(pred.width, pred.height, g.gx(), g.gy())?;
        for (out, a) in grad[c * plane..(c + 1) * plane].iter_mut().zip(adj) {
            *out = 2.0 * cfg.alpha * a / n;
        }
    }
    for (out, d) in grad.iter_mut().zip(&diff) {
        *out += 2.0 * d / n;
    }
    LatentTensor::from_data(pred.channels, pred.height, pred.width, grad, pred.role)
}

/// Central-difference gradient of [`ec_loss`], the oracle the analytic
/// gradient is validated against.
pub fn ec_loss_grad_fd(
    pred: &LatentTensor,
    target: &LatentTensor,
    cfg: &EcLossConfig,
    step: f64,
) -> Result<LatentTensor> {
    check_shapes(pred, target)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::NonPositiveParam {
            name: "step",
            value: step,
        });
    }
    let mut probe = pred.clone();
    let mut grad = vec![0.0; pred.data.len()];
    for (i, slot) in grad.iter_mut().enumerate() {
        let original = probe.data[i];
        probe.data[i] = original + step;
        let up = ec_loss(&probe, target, cfg)?;
        probe.data[i] = original - step;
        let down = ec_loss(&probe, target, cfg)?;
        probe.data[i] = original;
        *slot = (up - down) / (2.0 * step);
    }
    LatentTensor::from_data(pred.channels, pred.height, pred.width, grad, pred.role)
}

/// Latent file sidecar: `<path>.json` next to raw little-endian f32 data.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct LatentSidecar {
    channels: usize,
    height: usize,
    width: usize,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    std::path::PathBuf::from(os)
}

/// Writes raw little-endian f32 samples plus the JSON shape sidecar.
pub fn save_latent(path: impl AsRef<Path>, tensor: &LatentTensor) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(tensor.data.len() * 4);
    for v in &tensor.data {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    let sidecar = sidecar_path(path);
    let meta = LatentSidecar {
        channels: tensor.channels,
        height: tensor.height,
        width: tensor.width,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::json(&sidecar, e))?;
    std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
}

/// Reads a latent written by [`save_latent`]. The stored file carries no
/// role, so the caller states what the tensor is.
pub fn load_latent(path: impl AsRef<Path>, role: LatentRole) -> Result<LatentTensor> {
    let path = path.as_ref();
    let sidecar = sidecar_path(path);
    let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let meta: LatentSidecar = serde_json::from_str(&text).map_err(|e| Error::json(&sidecar, e))?;
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let expected = meta.channels * meta.height * meta.width * 4;
    if bytes.len() != expected {
        return Err(Error::invalid(format!(
            "latent {} holds {} bytes, sidecar shape needs {}",
            path.display(),
            bytes.len(),
            expected
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    LatentTensor::from_data(meta.channels, meta.height, meta.width, data, role)
}

/// Outcome of one self-check, for CLI reporting.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_tensor(
    rng: &mut impl rand::Rng,
    shape: (usize, usize, usize),
    role: LatentRole,
) -> LatentTensor {
    let (c, h, w) = shape;
    let data = (0..c * h * w).map(|_| rng.random_range(-2.0..2.0)).collect();
    LatentTensor::from_data(c, h, w, data, role).expect("generated data is valid")
}

/// Runs the loss and sampling consistency suite on seeded random tensors:
/// analytic versus central-difference gradients, the constant-offset closed
/// form, the loss lower bound, the noising rotation identity, and DDIM
/// single-step and full-loop recovery. Returns one outcome per check.
pub fn self_check(seed: u64) -> Vec<CheckOutcome> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cfg = EcLossConfig::default();
    let shape = (4, 8, 8);
    let mut outcomes = Vec::new();

    let mut worst_rel = 0.0f64;
    for _ in 0..5 {
        let pred = random_tensor(&mut rng, shape, LatentRole::Prediction);
        let target = random_tensor(&mut rng, shape, LatentRole::Noise);
        let analytic = ec_loss_grad(&pred, &target, &cfg).expect("shapes match");
        let fd = ec_loss_grad_fd(&pred, &target, &cfg, 1e-5).expect("shapes match");
        let num: f64 = analytic
            .data()
            .iter()
            .zip(fd.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = fd.squared_norm().sqrt();
        worst_rel = worst_rel.max(num / den);
    }
    outcomes.push(CheckOutcome {
        name: "gradient matches central finite differences",
        passed: worst_rel <= 1e-4,
        detail: format!("worst relative error {worst_rel:.3e} (tolerance 1e-4)"),
    });

    let base = random_tensor(&mut rng, shape, LatentRole::Prediction);
    let offset = 0.37;
    let shifted = LatentTensor::from_data(
        shape.0,
        shape.1,
        shape.2,
        base.data().iter().map(|v| v + offset).collect(),
        LatentRole::Prediction,
    )
    .expect("valid data");
    let loss = ec_loss(&shifted, &base, &cfg).expect("shapes match");
    let expected = offset * offset;
    outcomes.push(CheckOutcome {
        name: "constant offset costs exactly its square",
        passed: (loss - expected).abs() <= 1e-12,
        detail: format!("loss {loss:.12} vs {expected:.12}"),
    });

    let pred = random_tensor(&mut rng, shape, LatentRole::Prediction);
    let target = random_tensor(&mut rng, shape, LatentRole::Noise);
    let full = ec_loss(&pred, &target, &cfg).expect("shapes match");
    let mse_only = ec_loss(&pred, &target, &EcLossConfig { alpha: 0.0 }).expect("shapes match");
    outcomes.push(CheckOutcome {
        name: "loss never drops below its squared-error term",
        passed: full >= mse_only,
        detail: format!("loss {full:.6} vs mse {mse_only:.6}"),
    });

    let schedule = NoiseSchedule::default_linear();
    let mut worst_rot = 0.0f64;
    for _ in 0..20 {
        let z0 = random_tensor(&mut rng, shape, LatentRole::Clean);
        let eps = random_tensor(&mut rng, shape, LatentRole::Noise);
        let t = rng.random_range(1..=schedule.len());
        let zt = forward_noise(&z0, &eps, t, &schedule).expect("valid step");
        let v = velocity_target(&z0, &eps, t, &schedule).expect("valid step");
        let lhs = zt.squared_norm() + v.squared_norm();
        let rhs = z0.squared_norm() + eps.squared_norm();
        worst_rot = worst_rot.max((lhs - rhs).abs());
    }
    outcomes.push(CheckOutcome {
        name: "noising preserves the rotation identity",
        passed: worst_rot <= 1e-9,
        detail: format!("worst |z_t|^2+|v|^2 deviation {worst_rot:.3e}"),
    });

    let z0 = random_tensor(&mut rng, shape, LatentRole::Clean);
    let eps = random_tensor(&mut rng, shape, LatentRole::Noise);
    let (t, t_prev) = (600, 480);
    let zt = forward_noise(&z0, &eps, t, &schedule).expect("valid step");
    let v = velocity_target(&z0, &eps, t, &schedule).expect("valid step");
    let stepped = ddim_step(&zt, &v, t, t_prev, &schedule).expect("valid step");
    let direct = forward_noise(&z0, &eps, t_prev, &schedule).expect("valid step");
    let step_err = stepped
        .data()
        .iter()
        .zip(direct.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    outcomes.push(CheckOutcome {
        name: "one exact-velocity step lands on the closed form",
        passed: step_err <= 1e-9,
        detail: format!("max elementwise deviation {step_err:.3e}"),
    });

    let timesteps = ddim_timesteps(&schedule, 50).expect("valid step count");
    let z_start = forward_noise(&z0, &eps, schedule.len(), &schedule).expect("valid step");
    let recovered = ddim_sample(&z_start, &timesteps, &[], &schedule, |_, t, _| {
        velocity_target(&z0, &eps, t, &schedule).expect("valid step")
    })
    .expect("valid trajectory");
    let recover_err = recovered
        .data()
        .iter()
        .zip(z0.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    outcomes.push(CheckOutcome {
        name: "50-step sampling with the exact velocity recovers the latent",
        passed: recover_err <= 1e-6,
        detail: format!("max elementwise deviation {recover_err:.3e}"),
    });

    outcomes
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tensor(data: Vec<f64>, role: LatentRole) -> LatentTensor {
        let n = data.len();
        LatentTensor::from_data(1, 1, n, data, role).unwrap()
    }

    /// Schedule whose single step has the requested cumulative product.
    fn schedule_with_alpha_bar(ab: f64) -> NoiseSchedule {
        NoiseSchedule::linear(1.0 - ab, 1.0 - ab, 1).unwrap()
    }

    #[test]
    fn two_step_schedule_products() {
        let s = NoiseSchedule::linear(0.1, 0.2, 2).unwrap();
        assert_relative_eq!(s.alpha_bar(1).unwrap(), 0.9, max_relative = 1e-12);
        assert_relative_eq!(s.alpha_bar(2).unwrap(), 0.72, max_relative = 1e-12);
        assert_eq!(s.alpha_bar(0).unwrap(), 1.0);
    }

    #[test]
    fn default_schedule_hits_beta_endpoints_and_decreases() {
        let s = NoiseSchedule::default_linear();
        assert_eq!(s.len(), 1000);
        assert_relative_eq!(s.beta(1).unwrap(), 1e-4, max_relative = 1e-12);
        assert_relative_eq!(s.beta(1000).unwrap(), 0.02, max_relative = 1e-12);
        let mut prev = 1.0;
        for t in 1..=s.len() {
            let ab = s.alpha_bar(t).unwrap();
            assert!(ab > 0.0 && ab < 1.0, "alpha_bar({t}) = {ab} outside (0, 1)");
            assert!(ab < prev, "alpha_bar({t}) = {ab} not below {prev}");
            prev = ab;
        }
    }

    #[test]
    fn schedule_rejects_bad_parameters() {
        assert!(matches!(
            NoiseSchedule::linear(0.1, 0.2, 0),
            Err(Error::InvalidRange { .. })
        ));
        assert!(matches!(
            NoiseSchedule::linear(0.0, 0.2, 10),
            Err(Error::InvalidRange { .. })
        ));
        assert!(matches!(
            NoiseSchedule::linear(0.3, 0.2, 10),
            Err(Error::InvalidRange { .. })
        ));
        assert!(matches!(
            NoiseSchedule::linear(0.1, 1.0, 10),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn step_bounds_are_enforced() {
        let s = NoiseSchedule::linear(0.1, 0.2, 2).unwrap();
        assert!(matches!(
            s.alpha_bar(3),
            Err(Error::StepOutOfRange { t: 3, max: 2 })
        ));
        assert!(matches!(s.beta(0), Err(Error::StepOutOfRange { .. })));
        let z = tensor(vec![1.0], LatentRole::Clean);
        let e = tensor(vec![1.0], LatentRole::Noise);
        assert!(matches!(
            forward_noise(&z, &e, 0, &s),
            Err(Error::StepOutOfRange { .. })
        ));
    }

    #[test]
    fn forward_noise_quarter_alpha_bar() {
        // sqrt(0.25)*2 + sqrt(0.75)*4 = 1 + 2*sqrt(3) = 4.46410161513775...
        let s = schedule_with_alpha_bar(0.25);
        let z0 = tensor(vec![2.0], LatentRole::Clean);
        let eps = tensor(vec![4.0], LatentRole::Noise);
        let zt = forward_noise(&z0, &eps, 1, &s).unwrap();
        assert_relative_eq!(zt.data()[0], 1.0 + 2.0 * 3.0f64.sqrt(), max_relative = 1e-12);
        assert_eq!(zt.role(), LatentRole::Noisy);
    }

    #[test]
    fn velocity_limits_approach_noise_and_negated_latent() {
        let z0 = tensor(vec![3.0], LatentRole::Clean);
        let eps = tensor(vec![-5.0], LatentRole::Noise);
        // alpha_bar close to 1: velocity is essentially the noise.
        let near_one = schedule_with_alpha_bar(1.0 - 1e-12);
        let v = velocity_target(&z0, &eps, 1, &near_one).unwrap();
        assert_relative_eq!(v.data()[0], -5.0, epsilon = 1e-5);
        // alpha_bar close to 0: velocity is essentially the negated latent.
        let near_zero = schedule_with_alpha_bar(1e-12);
        let v = velocity_target(&z0, &eps, 1, &near_zero).unwrap();
        assert_relative_eq!(v.data()[0], -3.0, epsilon = 1e-5);
    }

    #[test]
    fn noising_rotation_preserves_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = NoiseSchedule::default_linear();
        for _ in 0..50 {
            let z0 = random_tensor(&mut rng, (2, 3, 4), LatentRole::Clean);
            let eps = random_tensor(&mut rng, (2, 3, 4), LatentRole::Noise);
            let t = rng.random_range(1..=s.len());
            let zt = forward_noise(&z0, &eps, t, &s).unwrap();
            let v = velocity_target(&z0, &eps, t, &s).unwrap();
            assert_relative_eq!(
                zt.squared_norm() + v.squared_norm(),
                z0.squared_norm() + eps.squared_norm(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn recover_z0_inverts_forward_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = NoiseSchedule::default_linear();
        for _ in 0..20 {
            let z0 = random_tensor(&mut rng, (1, 4, 4), LatentRole::Clean);
            let eps = random_tensor(&mut rng, (1, 4, 4), LatentRole::Noise);
            let t = rng.random_range(1..=s.len());
            let zt = forward_noise(&z0, &eps, t, &s).unwrap();
            let v = velocity_target(&z0, &eps, t, &s).unwrap();
            let back = recover_z0(&zt, &v, t, &s).unwrap();
            for (a, b) in back.data().iter().zip(z0.data()) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ddim_step_matches_closed_form_noising() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let s = NoiseSchedule::default_linear();
        for &(t, t_prev) in &[(1000, 980), (500, 250), (20, 0), (2, 1)] {
            let z0 = random_tensor(&mut rng, (1, 3, 5), LatentRole::Clean);
            let eps = random_tensor(&mut rng, (1, 3, 5), LatentRole::Noise);
            let zt = forward_noise(&z0, &eps, t, &s).unwrap();
            let v = velocity_target(&z0, &eps, t, &s).unwrap();
            let stepped = ddim_step(&zt, &v, t, t_prev, &s).unwrap();
            let direct = if t_prev == 0 {
                z0.clone()
            } else {
                forward_noise(&z0, &eps, t_prev, &s).unwrap()
            };
            for (a, b) in stepped.data().iter().zip(direct.data()) {
                assert_relative_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn ddim_step_rejects_non_monotone_pairs() {
        let s = NoiseSchedule::default_linear();
        let z = tensor(vec![1.0], LatentRole::Noisy);
        let v = tensor(vec![0.5], LatentRole::Velocity);
        assert!(matches!(
            ddim_step(&z, &v, 100, 100, &s),
            Err(Error::NonMonotoneSteps { t: 100, t_prev: 100 })
        ));
        assert!(matches!(
            ddim_step(&z, &v, 100, 200, &s),
            Err(Error::NonMonotoneSteps { .. })
        ));
    }

    #[test]
    fn ddim_timestep_ladder_is_evenly_strided() {
        let s = NoiseSchedule::default_linear();
        let ts = ddim_timesteps(&s, 50).unwrap();
        assert_eq!(ts.len(), 51);
        assert_eq!(ts[0], 1000);
        assert_eq!(ts[1], 980);
        assert_eq!(ts[49], 20);
        assert_eq!(ts[50], 0);
        assert!(matches!(
            ddim_timesteps(&s, 0),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn fifty_step_sampling_recovers_the_latent() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let s = NoiseSchedule::default_linear();
        let z0 = random_tensor(&mut rng, (4, 4, 4), LatentRole::Clean);
        let eps = random_tensor(&mut rng, (4, 4, 4), LatentRole::Noise);
        let z_start = forward_noise(&z0, &eps, s.len(), &s).unwrap();
        let ts = ddim_timesteps(&s, 50).unwrap();
        let out = ddim_sample(&z_start, &ts, &[], &s, |_, t, _| {
            velocity_target(&z0, &eps, t, &s).unwrap()
        })
        .unwrap();
        assert_eq!(out.role(), LatentRole::Clean);
        for (a, b) in out.data().iter().zip(z0.data()) {
            assert_relative_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let s = NoiseSchedule::default_linear();
        let a = tensor(vec![1.0, 2.0], LatentRole::Clean);
        let b = tensor(vec![1.0], LatentRole::Noise);
        assert!(matches!(
            forward_noise(&a, &b, 1, &s),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            ec_loss(&a, &b, &EcLossConfig::default()),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn constant_offset_loss_is_its_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let base = random_tensor(&mut rng, (3, 6, 7), LatentRole::Prediction);
        for &c in &[0.5, -1.25, 2.0] {
            let shifted = LatentTensor::from_data(
                3,
                6,
                7,
                base.data().iter().map(|v| v + c).collect(),
                LatentRole::Prediction,
            )
            .unwrap();
            let loss = ec_loss(&shifted, &base, &EcLossConfig::default()).unwrap();
            assert_relative_eq!(loss, c * c, epsilon = 1e-12);
        }
    }

    #[test]
    fn loss_is_bounded_below_by_its_mse_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..10 {
            let p = random_tensor(&mut rng, (2, 5, 5), LatentRole::Prediction);
            let t = random_tensor(&mut rng, (2, 5, 5), LatentRole::Noise);
            let full = ec_loss(&p, &t, &EcLossConfig::default()).unwrap();
            let mse = ec_loss(&p, &t, &EcLossConfig { alpha: 0.0 }).unwrap();
            assert!(full >= mse);
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cfg = EcLossConfig::default();
        let pred = random_tensor(&mut rng, (2, 6, 6), LatentRole::Prediction);
        let target = random_tensor(&mut rng, (2, 6, 6), LatentRole::Noise);
        let analytic = ec_loss_grad(&pred, &target, &cfg).unwrap();
        let fd = ec_loss_grad_fd(&pred, &target, &cfg, 1e-5).unwrap();
        let num: f64 = analytic
            .data()
            .iter()
            .zip(fd.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den = fd.squared_norm().sqrt();
        assert!(num / den <= 1e-4, "relative gradient error {}", num / den);
    }

    #[test]
    fn latent_files_roundtrip_at_f32_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("latent.raw");
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let t = random_tensor(&mut rng, (4, 3, 2), LatentRole::Clean);
        save_latent(&path, &t).unwrap();
        assert!(path.with_extension("raw.json").exists());
        let back = load_latent(&path, LatentRole::Clean).unwrap();
        assert_eq!(back.shape(), (4, 3, 2));
        for (a, b) in back.data().iter().zip(t.data()) {
            assert_relative_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn self_check_suite_passes() {
        for outcome in self_check(0xC0FFEE) {
            assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
        }
    }
}
