//! Learn a tabular kernel by counting under uniform exploration, design
//! against the estimate and measure the loss on the true model.

use mismatch_lab::learning::{learning_curve, CurveSpec, Estimator, Exploration, Fallback};
use mismatch_lab::rng::Stream;
use mismatch_lab::{Result, TabularMdp};

fn main() -> Result<()> {
    let truth = TabularMdp::random(&mut Stream::new(2), 5, 3, 0.9);
    let spec = CurveSpec {
        estimator: Estimator::Counting,
        sample_sizes: vec![30, 100, 1_000, 10_000, 100_000],
        seeds: (0..20).collect(),
        exploration: Exploration::UniformRandom,
        fallback: Fallback::Uniform,
        tol: 1e-10,
    };
    let curve = learning_curve(&truth, &spec, 99)?;
    for (n, median) in curve.median_losses() {
        let rows: Vec<_> = curve.records.iter().filter(|r| r.n == n).collect();
        let tv = rows.iter().map(|r| r.sup_tv).sum::<f64>() / rows.len() as f64;
        let unvisited: usize = rows.iter().map(|r| r.unvisited_cells).sum();
        println!("N={n:>6}: median loss {median:.3e}, mean sup tv {tv:.4}, unvisited cells {unvisited}");
    }
    println!(
        "median nonincreasing: {}, every record within its bound: {}",
        curve.median_nonincreasing(),
        curve.all_bounds_hold()
    );
    Ok(())
}
