use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{MlpSpec, RegressorParams};
use crate::data::ScalerParams;
use crate::error::{CraftError, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything an adaptation run needs from the source side: network layout,
/// parameters and the scaler the network was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub spec: MlpSpec,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub scaler: Option<ScalerParams>,
}

impl Checkpoint {
    pub fn new(params: &RegressorParams, scaler: Option<ScalerParams>) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            spec: params.spec.clone(),
            weights: params.weights.clone(),
            biases: params.biases.clone(),
            scaler,
        }
    }

    pub fn params(&self) -> RegressorParams {
        RegressorParams {
            spec: self.spec.clone(),
            weights: self.weights.clone(),
            biases: self.biases.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(CraftError::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        ckpt.params()
            .validate()
            .map_err(|e| CraftError::Checkpoint(e.to_string()))?;
        if let Some(s) = &ckpt.scaler {
            if s.dim() != ckpt.spec.input_dim() {
                return Err(CraftError::Checkpoint(format!(
                    "scaler has {} features, network {}",
                    s.dim(),
                    ckpt.spec.input_dim()
                )));
            }
        }
        Ok(ckpt)
    }

    pub fn require_input_dim(&self, d: usize) -> Result<()> {
        if self.spec.input_dim() != d {
            return Err(CraftError::Checkpoint(format!(
                "checkpoint expects {} features, data has {d}",
                self.spec.input_dim()
            )));
        }
        Ok(())
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ckpt.to_json()).map_err(|e| CraftError::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CraftError::io(path, e))?;
    Checkpoint::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressor::{init_params, Activation};

    fn sample() -> Checkpoint {
        let spec = MlpSpec::new(vec![3, 6, 1], Activation::Tanh).unwrap();
        let mut p = init_params(&spec, 5).unwrap();
        p.biases[0][2] = 1.0 / 3.0;
        p.weights[1][0] = 1e-300;
        let scaler = ScalerParams {
            feature_mean: vec![0.1, 0.2, 0.3],
            feature_std: vec![1.0, 2.0, 3.0],
            label_lo: -4.0,
            label_hi: 7.5,
        };
        Checkpoint::new(&p, Some(scaler))
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let ckpt = sample();
        save_checkpoint(&ckpt, &a).unwrap();
        let loaded = load_checkpoint(&a).unwrap();
        save_checkpoint(&loaded, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let bits = |c: &Checkpoint| c.params().to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&loaded), bits(&ckpt));
    }

    #[test]
    fn layout_has_documented_keys() {
        let v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["spec"]["layers"], serde_json::json!([3, 6, 1]));
        assert_eq!(v["spec"]["activation"], "tanh");
        assert!(v["weights"].is_array() && v["biases"].is_array() && v["scaler"].is_object());
    }

    #[test]
    fn wrong_dims_and_versions_are_rejected() {
        let ckpt = sample();
        assert!(ckpt.require_input_dim(4).is_err());
        assert!(ckpt.require_input_dim(3).is_ok());

        let mut v: serde_json::Value = serde_json::from_str(&ckpt.to_json()).unwrap();
        v["version"] = serde_json::json!(99);
        assert!(Checkpoint::from_json(&v.to_string()).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&ckpt.to_json()).unwrap();
        v["spec"]["layers"] = serde_json::json!([4, 6, 1]);
        assert!(Checkpoint::from_json(&v.to_string()).is_err());
    }
}
