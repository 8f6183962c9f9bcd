//! Denoiser stand-ins for the noise-prediction network.
//!
//! Everything here is closed-form: for a Gaussian prior over pixels, the
//! posterior-mean noise prediction is exact, which gives the samplers a
//! correctness oracle (iid prior), a seam probe (spatially correlated
//! prior evaluated with a tile-limited receptive field), a toy
//! encoder/decoder standing in for the VAE, and a trainable per-step
//! affine predictor with the standard noise-regression objective.
//!
//! For prior mean `mu`, std `sigma`, covariance `S` and forward mix
//! `z = sqrt(ab) x + sqrt(1-ab) e`, the exact prediction is
//! `eps_hat = sqrt(1-ab) * (ab*S + (1-ab)I)^{-1} (z - sqrt(ab) mu)`,
//! which reduces to a pointwise formula when `S = sigma^2 I` and to a
//! stationary frequency-domain filter when `S` is a circular blur.

use crate::bucket::{group_batches, resize_to_bucket, DatasetManifest, ManifestRecord, RatioSizeTable};
use crate::error::{Error, Result};
use crate::fft;
use crate::plane::Plane;
use crate::rng::StreamRng;
use crate::schedule::{add_noise, NoiseSchedule};
use crate::tiling::TileRect;

/// How indices past a canvas edge are resolved when a tile gathers
/// context beyond the canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    Circular,
    Reflect,
}

/// Gaussian pixel prior, optionally spatially correlated through a
/// separable circular blur of the given odd-length kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    pub mean: f64,
    pub sigma: f64,
    pub kernel: Option<Vec<f64>>,
    pub boundary: BoundaryMode,
}

impl GaussianPrior {
    pub fn iid(mean: f64, sigma: f64) -> Self {
        Self { mean, sigma, kernel: None, boundary: BoundaryMode::Reflect }
    }

    pub fn correlated(mean: f64, sigma: f64, kernel: Vec<f64>) -> Self {
        Self { mean, sigma, kernel: Some(kernel), boundary: BoundaryMode::Reflect }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config("prior sigma must be > 0".into()));
        }
        if let Some(k) = &self.kernel {
            if k.is_empty() || k.len() % 2 == 0 {
                return Err(Error::Config("correlation kernel must have odd length".into()));
            }
            if k.iter().any(|t| !t.is_finite() || *t < 0.0) {
                return Err(Error::Config("kernel taps must be nonnegative".into()));
            }
            let sum: f64 = k.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("kernel taps must sum to 1, got {sum}")));
            }
        }
        Ok(())
    }
}

/// Which denoiser stands in for the network.
#[derive(Debug, Clone, PartialEq)]
pub enum DenoiserKind {
    /// Exact posterior-mean prediction for an iid prior.
    IidExact,
    /// Exact prediction for the correlated prior, full receptive field.
    CorrelatedExact,
    /// Correlated prediction restricted to tile contents plus `pad`
    /// pixels of context; deliberately approximate near tile borders.
    CorrelatedTileLimited { pad: usize },
    /// Per-step affine model `eps_hat = a_t * z + b_t` with parameters
    /// `[a_1..a_T, b_1..b_T]`.
    ToyParametric { params: Vec<f64> },
}

/// A denoiser kind plus its prior.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserSpec {
    pub kind: DenoiserKind,
    pub prior: GaussianPrior,
}

/// Receptive field of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receptive {
    Full,
    Tile { rect: TileRect, pad: usize },
}

impl DenoiserSpec {
    pub fn validate(&self, sched: &NoiseSchedule) -> Result<()> {
        self.prior.validate()?;
        match &self.kind {
            DenoiserKind::IidExact => {
                if self.prior.kernel.is_some() {
                    return Err(Error::Config(
                        "iid denoiser requires a prior without correlation kernel".into(),
                    ));
                }
            }
            DenoiserKind::CorrelatedExact | DenoiserKind::CorrelatedTileLimited { .. } => {
                if self.prior.kernel.is_none() {
                    return Err(Error::Config(
                        "correlated denoiser requires a correlation kernel".into(),
                    ));
                }
            }
            DenoiserKind::ToyParametric { params } => {
                if params.len() != 2 * sched.step_count() {
                    return Err(Error::Config(format!(
                        "toy parametric denoiser needs 2T = {} parameters, got {}",
                        2 * sched.step_count(),
                        params.len()
                    )));
                }
                if params.iter().any(|p| !p.is_finite()) {
                    return Err(Error::Config("toy parameters must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Noise prediction for the whole canvas. The tile-limited kind
    /// treats the canvas as one tile so that a single-tile plan and a
    /// full-frame run stay bit-identical.
    pub fn predict_full(
        &self,
        z: &Plane,
        t: usize,
        sched: &NoiseSchedule,
        cond: Option<&Plane>,
    ) -> Result<Plane> {
        match &self.kind {
            DenoiserKind::IidExact => eps_iid_core(z, t, &self.prior, sched, cond),
            DenoiserKind::CorrelatedExact => {
                eps_correlated_core(z, t, &self.prior, sched, cond, Receptive::Full)
            }
            DenoiserKind::CorrelatedTileLimited { pad } => {
                let whole = TileRect { x: 0, y: 0, w: z.width(), h: z.height() };
                eps_correlated_core(z, t, &self.prior, sched, cond, Receptive::Tile {
                    rect: whole,
                    pad: *pad,
                })
            }
            DenoiserKind::ToyParametric { params } => eps_toy_affine(z, t, sched, params),
        }
    }

    /// Noise prediction for one tile of `latent`; the returned plane has
    /// the tile's dimensions.
    pub fn predict_tile(
        &self,
        latent: &Plane,
        rect: TileRect,
        t: usize,
        sched: &NoiseSchedule,
        cond: Option<&Plane>,
    ) -> Result<Plane> {
        match &self.kind {
            DenoiserKind::IidExact => {
                let z = latent.crop(rect.x, rect.y, rect.w, rect.h)?;
                let cond_tile = match cond {
                    Some(c) => Some(c.crop(rect.x, rect.y, rect.w, rect.h)?),
                    None => None,
                };
                eps_iid_core(&z, t, &self.prior, sched, cond_tile.as_ref())
            }
            DenoiserKind::ToyParametric { params } => {
                let z = latent.crop(rect.x, rect.y, rect.w, rect.h)?;
                eps_toy_affine(&z, t, sched, params)
            }
            DenoiserKind::CorrelatedExact => {
                let full =
                    eps_correlated_core(latent, t, &self.prior, sched, cond, Receptive::Full)?;
                full.crop(rect.x, rect.y, rect.w, rect.h)
            }
            DenoiserKind::CorrelatedTileLimited { pad } => eps_correlated_core(
                latent,
                t,
                &self.prior,
                sched,
                cond,
                Receptive::Tile { rect, pad: *pad },
            ),
        }
    }
}

fn alpha_bar_checked(t: usize, sched: &NoiseSchedule) -> Result<f64> {
    if t == 0 || t > sched.step_count() {
        return Err(Error::Schedule(format!("step {t} outside 1..={}", sched.step_count())));
    }
    let ab = sched.alpha_bar(t);
    if ab >= 1.0 {
        return Err(Error::Config(
            "alpha_bar(t) must be < 1 for noise prediction".into(),
        ));
    }
    Ok(ab)
}

fn eps_iid_core(
    z: &Plane,
    t: usize,
    prior: &GaussianPrior,
    sched: &NoiseSchedule,
    cond: Option<&Plane>,
) -> Result<Plane> {
    let ab = alpha_bar_checked(t, sched)?;
    if let Some(c) = cond {
        z.check_same_shape(c, "conditioning mean field")?;
    }
    let s2 = prior.sigma * prior.sigma;
    let sqrt_ab = ab.sqrt();
    let shrink = sqrt_ab * s2 / (ab * s2 + (1.0 - ab));
    let sqrt_1m = (1.0 - ab).sqrt();
    let data: Vec<f64> = z
        .data()
        .iter()
        .enumerate()
        .map(|(i, &zv)| {
            let mu = cond.map_or(prior.mean, |c| c.data()[i]);
            let e_x0 = mu + shrink * (zv - sqrt_ab * mu);
            (zv - sqrt_ab * e_x0) / sqrt_1m
        })
        .collect();
    Plane::from_vec(z.height(), z.width(), z.channels(), data)
}

/// Exact posterior-mean noise prediction for an iid Gaussian prior.
pub fn eps_iid_exact(
    z: &Plane,
    t: usize,
    prior: &GaussianPrior,
    sched: &NoiseSchedule,
) -> Result<Plane> {
    prior.validate()?;
    if prior.kernel.is_some() {
        return Err(Error::Config("eps_iid_exact requires a kernel-free prior".into()));
    }
    eps_iid_core(z, t, prior, sched, None)
}

#[inline]
fn circular_index(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Mirror without repeating the edge sample (period 2n - 2).
#[inline]
fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize { (period - m) as usize } else { m as usize }
}

fn resolve_index(i: isize, n: usize, mode: BoundaryMode) -> usize {
    match mode {
        BoundaryMode::Circular => circular_index(i, n),
        BoundaryMode::Reflect => reflect_index(i, n),
    }
}

/// Copies `rect` grown by `pad` on every side, resolving out-of-canvas
/// indices with the prior's boundary mode.
fn gather_extended(src: &Plane, rect: TileRect, pad: usize, mode: BoundaryMode) -> Plane {
    let (eh, ew) = (rect.h + 2 * pad, rect.w + 2 * pad);
    let c = src.channels();
    let mut data = Vec::with_capacity(eh * ew * c);
    for yy in 0..eh {
        let sy = resolve_index(rect.y as isize + yy as isize - pad as isize, src.height(), mode);
        for xx in 0..ew {
            let sx = resolve_index(rect.x as isize + xx as isize - pad as isize, src.width(), mode);
            for ch in 0..c {
                data.push(src.get(sy, sx, ch));
            }
        }
    }
    Plane::from_vec(eh, ew, c, data).expect("extended tile dims are nonzero")
}

fn stationary_lambda(kernel: &[f64], h: usize, w: usize, ab: f64, sigma2: f64) -> Vec<f64> {
    let ph = fft::kernel_power_spectrum(kernel, h);
    let pw = fft::kernel_power_spectrum(kernel, w);
    let mut lambda = Vec::with_capacity(h * w);
    for py in &ph {
        for px in &pw {
            lambda.push(ab * sigma2 * py * px + (1.0 - ab));
        }
    }
    lambda
}

fn filter_channels(field: &Plane, lambda: &[f64], scale: f64) -> Result<Plane> {
    let (h, w, c) = (field.height(), field.width(), field.channels());
    let mut out = vec![0.0; h * w * c];
    let mut chan = vec![0.0; h * w];
    for ch in 0..c {
        for i in 0..h * w {
            chan[i] = field.data()[i * c + ch];
        }
        let solved = fft::apply_inverse_filter(&chan, h, w, lambda);
        for i in 0..h * w {
            out[i * c + ch] = scale * solved[i];
        }
    }
    Plane::from_vec(h, w, c, out)
}

fn eps_correlated_core(
    z: &Plane,
    t: usize,
    prior: &GaussianPrior,
    sched: &NoiseSchedule,
    cond: Option<&Plane>,
    receptive: Receptive,
) -> Result<Plane> {
    let ab = alpha_bar_checked(t, sched)?;
    let kernel = prior
        .kernel
        .as_ref()
        .ok_or_else(|| Error::Config("correlated prediction requires a kernel".into()))?;
    if let Some(c) = cond {
        z.check_same_shape(c, "conditioning mean field")?;
    }
    let s2 = prior.sigma * prior.sigma;
    let sqrt_ab = ab.sqrt();
    let sqrt_1m = (1.0 - ab).sqrt();

    // Residual z - sqrt(ab) * mu on the full canvas.
    let residual = {
        let data: Vec<f64> = z
            .data()
            .iter()
            .enumerate()
            .map(|(i, &zv)| {
                let mu = cond.map_or(prior.mean, |c| c.data()[i]);
                zv - sqrt_ab * mu
            })
            .collect();
        Plane::from_vec(z.height(), z.width(), z.channels(), data)?
    };

    match receptive {
        Receptive::Full => {
            let lambda = stationary_lambda(kernel, z.height(), z.width(), ab, s2);
            filter_channels(&residual, &lambda, sqrt_1m)
        }
        Receptive::Tile { rect, pad } => {
            if rect.right() > z.width() || rect.bottom() > z.height() {
                return Err(Error::Dimension(format!(
                    "tile {}x{}+{}+{} outside canvas {}x{}",
                    rect.w,
                    rect.h,
                    rect.x,
                    rect.y,
                    z.width(),
                    z.height()
                )));
            }
            let ext = gather_extended(&residual, rect, pad, prior.boundary);
            let lambda = stationary_lambda(kernel, ext.height(), ext.width(), ab, s2);
            let filtered = filter_channels(&ext, &lambda, sqrt_1m)?;
            filtered.crop(pad, pad, rect.w, rect.h)
        }
    }
}

/// Exact posterior-mean noise prediction for the correlated prior, with
/// a full or tile-limited receptive field. The tile form returns a
/// tile-sized plane.
pub fn eps_correlated(
    z: &Plane,
    t: usize,
    prior: &GaussianPrior,
    sched: &NoiseSchedule,
    receptive: Receptive,
) -> Result<Plane> {
    prior.validate()?;
    eps_correlated_core(z, t, prior, sched, None, receptive)
}

fn eps_toy_affine(z: &Plane, t: usize, sched: &NoiseSchedule, params: &[f64]) -> Result<Plane> {
    let steps = sched.step_count();
    if params.len() != 2 * steps {
        return Err(Error::Config(format!(
            "toy parametric denoiser needs 2T = {} parameters, got {}",
            2 * steps,
            params.len()
        )));
    }
    if t == 0 || t > steps {
        return Err(Error::Schedule(format!("step {t} outside 1..={steps}")));
    }
    let a = params[t - 1];
    let b = params[steps + t - 1];
    Ok(z.map(|v| a * v + b))
}

/// Draws one sample from the prior: white noise pushed through the
/// separable circular blur (when present), then scaled and shifted.
pub fn sample_prior(
    prior: &GaussianPrior,
    height: usize,
    width: usize,
    channels: usize,
    rng: &mut StreamRng,
) -> Result<Plane> {
    prior.validate()?;
    let white = Plane::normal(height, width, channels, rng);
    let shaped = match &prior.kernel {
        Some(k) => blur_separable(&white, k, BoundaryMode::Circular)?,
        None => white,
    };
    Ok(shaped.map(|v| prior.mean + prior.sigma * v))
}

/// Separable blur, horizontal pass then vertical.
pub fn blur_separable(plane: &Plane, kernel: &[f64], mode: BoundaryMode) -> Result<Plane> {
    if kernel.is_empty() || kernel.len() % 2 == 0 {
        return Err(Error::Config("blur kernel must have odd length".into()));
    }
    let (h, w, c) = (plane.height(), plane.width(), plane.channels());
    let mid = (kernel.len() / 2) as isize;
    let mut horiz = vec![0.0; h * w * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (j, &k) in kernel.iter().enumerate() {
                    let sx = resolve_index(x as isize + j as isize - mid, w, mode);
                    acc += k * plane.get(y, sx, ch);
                }
                horiz[(y * w + x) * c + ch] = acc;
            }
        }
    }
    let horiz = Plane::from_vec(h, w, c, horiz)?;
    let mut out = vec![0.0; h * w * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (j, &k) in kernel.iter().enumerate() {
                    let sy = resolve_index(y as isize + j as isize - mid, h, mode);
                    acc += k * horiz.get(sy, x, ch);
                }
                out[(y * w + x) * c + ch] = acc;
            }
        }
    }
    Plane::from_vec(h, w, c, out)
}

/// Area-average downsample by `factor`, then map `[0, 1]` to `[-1, 1]`.
pub fn encode(image: &Plane, factor: usize) -> Result<Plane> {
    if factor == 0 {
        return Err(Error::Dimension("encode factor must be >= 1".into()));
    }
    if image.height() % factor != 0 || image.width() % factor != 0 {
        return Err(Error::Dimension(format!(
            "image {}x{} not divisible by factor {factor}",
            image.height(),
            image.width()
        )));
    }
    let (oh, ow, c) = (image.height() / factor, image.width() / factor, image.channels());
    let norm = 1.0 / (factor * factor) as f64;
    let mut data = vec![0.0; oh * ow * c];
    for y in 0..oh {
        for x in 0..ow {
            for ch in 0..c {
                let mut acc = 0.0;
                for dy in 0..factor {
                    for dx in 0..factor {
                        acc += image.get(y * factor + dy, x * factor + dx, ch);
                    }
                }
                data[(y * ow + x) * c + ch] = (acc * norm - 0.5) * 2.0;
            }
        }
    }
    Plane::from_vec(oh, ow, c, data)
}

/// Inverse affine map back to `[0, 1]`, bilinear upsample by `factor`,
/// clamp to `[0, 1]`.
pub fn decode(latent: &Plane, factor: usize) -> Result<Plane> {
    if factor == 0 {
        return Err(Error::Dimension("decode factor must be >= 1".into()));
    }
    let affine = latent.map(|v| v * 0.5 + 0.5);
    let up = if factor == 1 {
        affine
    } else {
        affine.resize_bilinear(latent.height() * factor, latent.width() * factor)?
    };
    Ok(up.map(|v| v.clamp(0.0, 1.0)))
}

/// Mean over the batch of the per-item squared noise-prediction error
/// `||eps - eps_hat||^2`, with `t` uniform in `[1, T]` and fresh noise
/// per item; `eps_hat` comes from the per-step affine toy model.
pub fn loss_arad(
    batch: &[Plane],
    params: &[f64],
    sched: &NoiseSchedule,
    rng: &mut StreamRng,
) -> Result<f64> {
    loss_arad_with_grad(batch, params, sched, rng).map(|(l, _)| l)
}

/// Loss plus its analytic gradient with respect to `params`.
pub fn loss_arad_with_grad(
    batch: &[Plane],
    params: &[f64],
    sched: &NoiseSchedule,
    rng: &mut StreamRng,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Batch("batch must be nonempty".into()));
    }
    let steps = sched.step_count();
    if params.len() != 2 * steps {
        return Err(Error::Config(format!(
            "loss needs 2T = {} parameters, got {}",
            2 * steps,
            params.len()
        )));
    }
    let first = &batch[0];
    for item in batch.iter().skip(1) {
        first.check_same_shape(item, "batch item").map_err(|_| {
            Error::Batch("all planes in a batch must share one shape".into())
        })?;
    }

    let inv_b = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    for item in batch {
        let t = 1 + rng.below(steps as u32) as usize;
        let eps = Plane::normal(item.height(), item.width(), item.channels(), rng);
        let z = add_noise(item, &eps, t, sched)?;
        let a = params[t - 1];
        let b = params[steps + t - 1];
        let (mut da, mut db) = (0.0, 0.0);
        let mut item_loss = 0.0;
        for (&zv, &ev) in z.data().iter().zip(eps.data()) {
            let r = a * zv + b - ev;
            item_loss += r * r;
            da += 2.0 * r * zv;
            db += 2.0 * r;
        }
        loss += item_loss * inv_b;
        grad[t - 1] += da * inv_b;
        grad[steps + t - 1] += db * inv_b;
    }
    Ok((loss, grad))
}

/// Result of toy-denoiser training.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: Vec<f64>,
    pub trace: Vec<f64>,
}

/// Plain gradient descent on [`loss_arad`] over bucketed batches.
/// `loader` maps a manifest record to its native-size plane; items are
/// resized to their bucket target before training. All randomness is
/// derived from `seed`.
pub fn train_toy_denoiser(
    manifest: &DatasetManifest,
    table: &RatioSizeTable,
    batch_size: usize,
    steps: usize,
    lr: f64,
    seed: u64,
    sched: &NoiseSchedule,
    loader: &dyn Fn(&ManifestRecord) -> Result<Plane>,
) -> Result<TrainOutcome> {
    if manifest.records.is_empty() {
        return Err(Error::Config("training manifest must be nonempty".into()));
    }
    let mut group_rng = StreamRng::derive(seed, "train_group", 0);
    let batches = group_batches(manifest, table, batch_size, &mut group_rng)?;

    let by_id: std::collections::HashMap<&str, &ManifestRecord> =
        manifest.records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut materialized: Vec<Vec<Plane>> = Vec::with_capacity(batches.len());
    for b in &batches {
        let target = table.entries()[b.bucket].1;
        let mut planes = Vec::with_capacity(b.record_ids.len());
        for id in &b.record_ids {
            let record = by_id
                .get(id.as_str())
                .ok_or_else(|| Error::Batch(format!("unknown record id {id}")))?;
            planes.push(resize_to_bucket(&loader(record)?, target)?);
        }
        materialized.push(planes);
    }

    let mut params = vec![0.0; 2 * sched.step_count()];
    let mut trace = Vec::with_capacity(steps);
    for step in 0..steps {
        let batch = &materialized[step % materialized.len()];
        let mut rng = StreamRng::derive(seed, "train_step", step as u64);
        let (loss, grad) = loss_arad_with_grad(batch, &params, sched, &mut rng)?;
        if !loss.is_finite() {
            return Err(Error::Training { step });
        }
        trace.push(loss);
        for (p, g) in params.iter_mut().zip(grad.iter()) {
            *p -= lr * g;
        }
    }
    Ok(TrainOutcome { params, trace })
}
