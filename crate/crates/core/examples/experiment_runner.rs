//! Drive the config-based runner from code: write a config, run it twice,
//! confirm the outputs match and turn them into plot series.

use std::fs;

use mismatch_lab::experiment::{plotdata, run, ExperimentConfig, ExperimentSpec, GalleryParams, RunOptions};
use mismatch_lab::gallery::GalleryKind;
use mismatch_lab::Result;

fn main() -> Result<()> {
    let root = std::env::temp_dir().join("mismatch-lab-example");
    let spec = ExperimentSpec::Gallery(GalleryParams {
        entries: vec![GalleryKind::WeakPomdp, GalleryKind::SetwiseRobust],
        n: vec![2, 4, 10, 100, 1000],
        betas: vec![0.5, 0.9],
    });
    let config = ExperimentConfig::new(0, root.join("run-a"), spec);
    fs::create_dir_all(&root)?;
    fs::write(root.join("gallery.json"), config.to_json()?)?;

    let a = run(&config, &RunOptions::default())?;
    let b = run(&config, &RunOptions { out: Some(root.join("run-b")), jobs: Some(1), ..Default::default() })?;
    assert_eq!(a.manifest.files, b.manifest.files);
    println!("{} rows, {} violations, config {}", a.manifest.files[0].rows, a.manifest.violations, a.manifest.config_sha256);

    let plots = plotdata(&a.output_dir, &root.join("plots"))?;
    for f in plots.files {
        println!("{}", f.display());
    }
    Ok(())
}
