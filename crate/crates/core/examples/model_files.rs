//! Save models as versioned JSON, reload them and list validation findings.

use mismatch_lab::gallery::make_robust_weak;
use mismatch_lab::models::{load_model, save_model, ModelDoc, ModelFile};
use mismatch_lab::rng::Stream;
use mismatch_lab::{Result, TabularPomdp, Validate};

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("mismatch-lab-models");
    std::fs::create_dir_all(&dir)?;

    let pomdp = TabularPomdp::random(&mut Stream::new(4), 3, 2, 2, 0.7);
    let region = make_robust_weak(5)?.truth;
    for (name, doc) in [("pomdp.json", ModelDoc::TabularPomdp(pomdp)), ("region.json", ModelDoc::RegionModel(region))] {
        let path = dir.join(name);
        save_model(&path, &ModelFile::new(doc))?;
        let back = load_model(&path)?;
        println!("{}: {} model, {} violations", path.display(), back.model.kind(), back.model.validate().len());
    }

    let mut broken = TabularPomdp::random(&mut Stream::new(5), 2, 2, 2, 1.5);
    broken.mdp.kernel[1][0] = vec![0.7, 0.7];
    for v in broken.validate() {
        println!("finding: {v}");
    }
    Ok(())
}
