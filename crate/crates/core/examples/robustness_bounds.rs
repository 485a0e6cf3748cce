//! Sweep random tabular pairs and compare measured value gaps and mismatch
//! losses with the total-variation continuity and robustness bounds.

use mismatch_lab::robustness::{bounds_corpus, CorpusSpec};
use mismatch_lab::Result;

fn main() -> Result<()> {
    let spec = CorpusSpec {
        pairs: 50,
        ..CorpusSpec::default()
    };
    let records = bounds_corpus(&spec, 1)?;
    println!("{:>6} {:>5} {:>10} {:>12} {:>12} {:>12}", "eps", "β", "max tv", "max loss", "min slack", "violations");
    for &eps in &spec.eps {
        for &beta in &spec.betas {
            let group: Vec<_> = records
                .iter()
                .filter(|r| r.design_id.ends_with(&format!("_eps{eps}")) && r.discount == beta)
                .collect();
            let max = |f: &dyn Fn(&&_) -> f64| group.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            let slack = group.iter().map(|r| r.robustness_bound - r.loss).fold(f64::INFINITY, f64::min);
            let bad = group.iter().filter(|r| !(r.bound_holds && r.continuity_holds)).count();
            println!(
                "{eps:>6} {beta:>5} {:>10.4} {:>12.3e} {slack:>12.3e} {bad:>12}",
                max(&|r| r.kernel_tv_sup),
                max(&|r| r.loss)
            );
        }
    }
    Ok(())
}
