//! Recover the noise law of `x' = f(x, u) + w` from one trajectory, smooth it
//! with a histogram and push both back through the drift.

use mismatch_lab::gallery::clipped_shift;
use mismatch_lab::learning::{histogram_density, pushforward_kernel, recover_noise, simulate_additive, Exploration};
use mismatch_lab::models::{KernelModel, Metric};
use mismatch_lab::rng::Stream;
use mismatch_lab::{AdditiveNoiseModel, Measure1D, Result};

fn main() -> Result<()> {
    let actions = vec![0.0, 0.5, 1.0];
    let drift = actions
        .iter()
        .map(|&u| clipped_shift(0.0, 2.0, u, 0.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let noise = Measure1D::uniform(0.0, 1.0)?;
    let m = AdditiveNoiseModel::new(0.0, 2.0, actions, drift, noise.clone());
    let grid: Vec<f64> = (0..=8).map(|i| 0.25 * i as f64).collect();
    let exact = pushforward_kernel(&noise, &m, &grid)?;

    for n in [100, 1_000, 10_000, 100_000] {
        let tr = simulate_additive(&m, &Exploration::UniformRandom, n, &mut Stream::new(n as u64))?;
        let recovered = recover_noise(&tr, &m)?;
        let samples: Vec<f64> = tr
            .actions
            .iter()
            .enumerate()
            .map(|(i, &u)| Ok((tr.states[i + 1] - m.drift_at(tr.states[i], u)?).clamp(0.0, 1.0)))
            .collect::<Result<_>>()?;
        let hist = histogram_density(&samples, None, 0.0, 1.0)?;
        let learned = pushforward_kernel(&hist, &m, &grid)?;
        println!(
            "N={n:>6}: w1(recovered)={:.4e}  tv(histogram)={:.4e}  kernel tv={:.4e}",
            recovered.w1_distance(&noise)?,
            hist.tv_distance(&noise)?,
            exact.kernel_sup(&learned, Metric::TotalVariation)?
        );
    }
    Ok(())
}
