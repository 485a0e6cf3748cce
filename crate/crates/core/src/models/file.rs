//! JSON model files.
//!
//! ```json
//! { "schema_version": 1, "model": { "kind": "tabular_mdp", ... } }
//! ```
//!
//! Tabular models carry explicit tensors. Region and additive-noise models
//! embed every measure in its line-oriented text form as a JSON string.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdditiveNoiseModel, RegionModel, TabularMdp, TabularPomdp, Validate, Violation};
use crate::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub model: ModelDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelDoc {
    TabularMdp(TabularMdp),
    TabularPomdp(TabularPomdp),
    RegionModel(RegionModel),
    AdditiveNoise(AdditiveNoiseModel),
}

impl ModelDoc {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelDoc::TabularMdp(_) => "tabular_mdp",
            ModelDoc::TabularPomdp(_) => "tabular_pomdp",
            ModelDoc::RegionModel(_) => "region_model",
            ModelDoc::AdditiveNoise(_) => "additive_noise",
        }
    }
}

impl Validate for ModelDoc {
    fn validate(&self) -> Vec<Violation> {
        match self {
            ModelDoc::TabularMdp(m) => m.validate(),
            ModelDoc::TabularPomdp(m) => m.validate(),
            ModelDoc::RegionModel(m) => m.validate(),
            ModelDoc::AdditiveNoise(m) => m.validate(),
        }
    }
}

impl ModelFile {
    pub fn new(model: ModelDoc) -> Self {
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            model,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported schema_version {} (expected {MODEL_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    ModelFile::from_json(&std::fs::read_to_string(path)?)
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<()> {
    std::fs::write(path, model.to_json()? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn tabular_round_trip() {
        let m = TabularMdp::random(&mut Stream::new(4), 3, 2, 0.7);
        let f = ModelFile::new(ModelDoc::TabularMdp(m));
        let back = ModelFile::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn schema_version_is_mandatory() {
        let m = TabularMdp::random(&mut Stream::new(4), 2, 1, 0.7);
        let mut v = serde_json::to_value(ModelFile::new(ModelDoc::TabularMdp(m))).unwrap();
        v.as_object_mut().unwrap().remove("schema_version");
        assert!(ModelFile::from_json(&v.to_string()).is_err());
        v.as_object_mut().unwrap().insert("schema_version".into(), 2.into());
        assert!(matches!(ModelFile::from_json(&v.to_string()), Err(Error::InvalidModel(_))));
    }
}
