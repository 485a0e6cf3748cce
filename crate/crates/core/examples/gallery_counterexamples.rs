//! Evaluate every gallery entry by forward propagation and compare with the
//! exact and published closed forms.

use mismatch_lab::gallery::GalleryKind;
use mismatch_lab::models::{kernel_tv_sup, kernel_w1_sup};
use mismatch_lab::Result;

fn main() -> Result<()> {
    let beta = 0.5;
    for kind in GalleryKind::ALL {
        println!("{kind}: {}", kind.description());
        println!(
            "  {:>5} {:>8} {:>8} {:>14} {:>14} {:>14} {:>14}",
            "n", "tv", "w1", "J*(T_n)", "J*(T)", "J(T, γ_n)", "published"
        );
        for n in [4, 10, 100] {
            let entry = kind.make(n)?.with_discount(beta);
            let v = entry.evaluate(1e-12)?;
            let exact = kind.closed_form_exact(beta, n);
            assert!((v.design_optimal - exact.design_optimal.unwrap()).abs() < 1e-9);
            let published = kind.closed_form_paper(beta, n);
            let w1 = kernel_w1_sup(&entry.truth, &entry.design).map_or("-".to_string(), |d| format!("{d:.4}"));
            println!(
                "  {n:>5} {:>8.4} {w1:>8} {:>14.10} {:>14.10} {:>14.10} {:>14}",
                kernel_tv_sup(&entry.truth, &entry.design)?,
                v.design_optimal,
                v.true_optimal,
                v.cross,
                published.design_optimal.map_or("-".into(), |d| format!("{d:.10}")),
            );
        }
        let lim = kind.limit_exact(beta);
        println!(
            "  limit: continuity gap {:.6}, loss {:.6}\n",
            lim.continuity_gap().unwrap(),
            lim.loss().unwrap()
        );
    }
    Ok(())
}
