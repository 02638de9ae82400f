//! Bundled learned modulator parameters and parameter-file loading.
//!
//! Two published parameter sets ship with the binary: `deit_small` (12
//! attention layers of a small vision transformer trained on ImageNet) and
//! `lm6` (a 6-layer language-model transformer trained on WikiText-103).
//! Anything else passed as `--params` is treated as a path to a JSON file in
//! the same schema: an array of layer objects
//! `{"tb": [...], "td": [...], "b": [...], "d": [...]}`.

use crate::errors::{CliError, CliResult};
use reweight_core::ModulatorParams;

pub const DEIT_SMALL_JSON: &str = include_str!("../data/deit_small.json");
pub const LM6_JSON: &str = include_str!("../data/lm6.json");

#[derive(Debug, Clone, PartialEq)]
pub struct ParamBundle {
    pub name: String,
    pub layers: Vec<ModulatorParams>,
}

impl ParamBundle {
    pub fn parse(name: &str, json: &str) -> CliResult<Self> {
        let layers: Vec<ModulatorParams> = serde_json::from_str(json)
            .map_err(|e| CliError::Usage(format!("cannot parse parameter file: {e}")))?;
        if layers.is_empty() {
            return Err(CliError::Usage("parameter file has no layers".into()));
        }
        Ok(ParamBundle {
            name: name.to_string(),
            layers,
        })
    }

    /// Resolve a bundle name or a filesystem path.
    pub fn load(name_or_path: &str) -> CliResult<Self> {
        match name_or_path {
            "deit_small" => Self::parse("deit_small", DEIT_SMALL_JSON),
            "lm6" => Self::parse("lm6", LM6_JSON),
            path => {
                let json = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!(
                        "cannot read parameter file {path} (not a bundled name either): {e}"
                    ))
                })?;
                Self::parse(path, &json)
            }
        }
    }

    /// One-based layer lookup, matching the published tables.
    pub fn layer(&self, index: usize) -> CliResult<&ModulatorParams> {
        if index == 0 || index > self.layers.len() {
            return Err(CliError::Usage(format!(
                "layer {index} out of range 1..={}",
                self.layers.len()
            )));
        }
        Ok(&self.layers[index - 1])
    }
}
