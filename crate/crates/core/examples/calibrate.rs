//! Scratch calibration harness for the toy SR task (deleted before ship).

use tilediff::denoiser::{sample_prior, decode, DenoiserKind, DenoiserSpec, GaussianPrior};
use tilediff::metrics::{psnr_y, seam_score};
use tilediff::sampler::{
    upscale_fstd_with_schedule, OffsetMode, SampleConfig, SamplerKind, Strategy,
};
use tilediff::schedule::make_linear_schedule;
use tilediff::rng::StreamRng;
use tilediff::tiling::{plan_disjoint, plan_shifted};

#[derive(Clone, Copy)]
struct Cfg {
    klen: usize,
    sigma_data: f64,
    sigma_model: f64,
    strength: f64,
    steps: usize,
    beta_max: f64,
    default_range: usize,
}

fn binom(n: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 1..n {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    let s: f64 = row.iter().sum();
    row.iter().map(|v| v / s).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn run_cell(c: &Cfg, strategy: Strategy, seed: u64) -> (f64, f64) {
    let kernel = binom(c.klen);
    let data_prior = GaussianPrior::correlated(0.0, c.sigma_data, kernel.clone());
    let mut rng = StreamRng::derive(1000 + seed, "sr_gt", 0);
    let latent_gt = sample_prior(&data_prior, 64, 64, 3, &mut rng).unwrap();
    let hr = decode(&latent_gt, 4).unwrap();
    let lr = hr.resize_bilinear(64, 64).unwrap();

    let denoiser = DenoiserSpec {
        kind: DenoiserKind::CorrelatedTileLimited { pad: 0 },
        prior: GaussianPrior::correlated(0.0, c.sigma_model, kernel),
    };
    let cfg = SampleConfig {
        strategy,
        tile: (32, 32),
        steps: c.steps,
        sampler: SamplerKind::Ddpm,
        seed: 2000 + seed,
    };
    let sched = make_linear_schedule(c.steps, 1e-4, c.beta_max).unwrap();
    let (out, stats) =
        upscale_fstd_with_schedule(&lr, 4, &denoiser, &cfg, c.strength, 4, &sched).unwrap();
    let psnr = psnr_y(&out, &hr).unwrap();
    let plan = match stats.per_step_offsets.last() {
        Some(&off) => plan_shifted(64, 64, (32, 32), off).unwrap(),
        None => plan_disjoint(64, 64, (32, 32)).unwrap(),
    };
    (psnr, seam_score(&out, &plan).unwrap().score)
}

fn evaluate(c: &Cfg, label: &str) {
    let seeds: Vec<u64> = (0..20).collect();
    let mk = |range, mode| Strategy::TiledImplicit { offset_range: range, offset_mode: mode };
    let cells: Vec<(&str, Strategy)> = vec![
        ("dis", Strategy::TiledDisjoint),
        ("fix", mk(c.default_range, OffsetMode::Fixed)),
        ("rnd", mk(c.default_range, OffsetMode::Random)),
        ("r8", mk(8, OffsetMode::Random)),
        ("r16", mk(16, OffsetMode::Random)),
        ("r24", mk(24, OffsetMode::Random)),
    ];
    let mut psnr: std::collections::HashMap<&str, Vec<f64>> = Default::default();
    let mut seam: std::collections::HashMap<&str, Vec<f64>> = Default::default();
    for (name, strat) in &cells {
        for &s in &seeds {
            let (p, sc) = run_cell(c, *strat, s);
            psnr.entry(name).or_default().push(p);
            seam.entry(name).or_default().push(sc);
        }
    }
    let wins = |a: &[f64], b: &[f64]| a.iter().zip(b).filter(|(x, y)| x > y).count();
    let w_d = wins(&psnr["rnd"], &psnr["dis"]);
    let w_f = wins(&psnr["rnd"], &psnr["fix"]);
    let ratio = mean(&seam["dis"]) / mean(&seam["rnd"]);
    let (m8, m16, m24) = (mean(&psnr["r8"]), mean(&psnr["r16"]), mean(&psnr["r24"]));
    let spread = m8.max(m16).max(m24) - m8.min(m16).min(m24);
    let c5 = ratio >= 1.5 && mean(&seam["rnd"]) < 1.2;
    let c6 = mean(&psnr["rnd"]) >= mean(&psnr["dis"])
        && mean(&psnr["rnd"]) >= mean(&psnr["fix"])
        && w_d >= 15
        && w_f >= 15;
    let c7 = spread < 0.5;
    println!(
        "{label}: d={:.2} f={:.2} rnd={:.2} | r8/16/24={m8:.2}/{m16:.2}/{m24:.2} | seam d/r={:.2}/{:.2} ratio={ratio:.2} | wins {w_d}/{w_f} spread={spread:.2} | C5={} C6={} C7={}",
        mean(&psnr["dis"]),
        mean(&psnr["fix"]),
        mean(&psnr["rnd"]),
        mean(&seam["dis"]),
        mean(&seam["rnd"]),
        c5 as u8,
        c6 as u8,
        c7 as u8,
    );
}

fn main() {
    for default_range in [16usize, 8] {
        for strength in [0.3, 0.4] {
            let c = Cfg {
                klen: 17,
                sigma_data: 1.3,
                sigma_model: 2.6,
                strength,
                steps: 200,
                beta_max: 0.02,
                default_range,
            };
            evaluate(
                &c,
                &format!("k17 sd=1.3 sm=2.6 T=200 bmax=0.02 str={strength} rng={default_range}"),
            );
        }
    }
}
