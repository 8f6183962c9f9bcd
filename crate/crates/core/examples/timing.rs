//! Scratch timing probe for the bench config (deleted before ship).

use tilediff::denoiser::{DenoiserKind, DenoiserSpec, GaussianPrior};
use tilediff::sampler::{sample_tiled, OffsetMode, SampleConfig, SamplerKind, Strategy, TiledInit};
use tilediff::schedule::default_schedule;

fn main() {
    let sched = default_schedule(50).unwrap();
    let spec = DenoiserSpec { kind: DenoiserKind::IidExact, prior: GaussianPrior::iid(0.0, 1.0) };
    let init = TiledInit::Noise { height: 128, width: 128, channels: 3 };
    let strategies = [
        ("disjoint", Strategy::TiledDisjoint),
        ("implicit", Strategy::TiledImplicit { offset_range: 16, offset_mode: OffsetMode::Random }),
        ("explicit", Strategy::TiledExplicit { overlap: 32 }),
    ];
    let run = |strategy: Strategy, seed: u64| {
        let cfg = SampleConfig {
            strategy,
            tile: (64, 64),
            steps: 50,
            sampler: SamplerKind::Ddim { eta: 0.0 },
            seed,
        };
        sample_tiled(init.clone(), &spec, &sched, &cfg, None).unwrap().1
    };
    for trial in 0..3 {
        // Warmup.
        for (_, s) in &strategies {
            run(*s, 999);
        }
        let mut totals = [0.0f64; 3];
        let reps = 30;
        for seed in 0..reps {
            // Interleave strategies within each repetition.
            for (i, (_, s)) in strategies.iter().enumerate() {
                totals[i] += run(*s, seed).wall_time_s;
            }
        }
        println!(
            "trial {trial}: d={:.4} i={:.4} e={:.4}  i/d={:.3} e/i={:.3}",
            totals[0] / reps as f64,
            totals[1] / reps as f64,
            totals[2] / reps as f64,
            totals[1] / totals[0],
            totals[2] / totals[1]
        );
    }
}
