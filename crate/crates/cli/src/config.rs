use std::path::Path;

use polylyap::learner::CenterMethod;
use polylyap::search::LeafOrder;
use serde::Deserialize;

/// Optional settings read from `--config`. Command-line flags win over these,
/// and these win over built-in defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    pub deterministic: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub pieces: Option<usize>,
    pub epsilon: Option<f64>,
    pub budget_nodes: Option<usize>,
    pub budget_seconds: Option<f64>,
    pub leaf_order: Option<LeafOrder>,
    pub center: Option<CenterMethod>,
    pub symmetry_breaking: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub tau_min: Option<f64>,
    pub tol_cex: Option<f64>,
    pub x_max: Option<f64>,
    pub lp_feasibility: Option<f64>,
    pub lp_optimality: Option<f64>,
    pub lp_pivot: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> polylyap::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| polylyap::Error::Parse {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| polylyap::Error::Parse {
            location: path.display().to_string(),
            message: e.message().to_string(),
        })
    }
}
