//! JSON checkpoints: the config, flat named tensors, and the modulator
//! parameters in their standard schema.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::model::{Model, ToyModelConfig};
use reweight_core::ModulatorParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: ToyModelConfig,
    pub tensors: Vec<NamedTensor>,
    /// One entry per layer for MultiMax models, empty otherwise.
    pub modulator: Vec<ModulatorParams>,
}

fn tensor(name: &str, shape: Vec<usize>, data: Vec<f64>) -> NamedTensor {
    NamedTensor {
        name: name.to_string(),
        shape,
        data,
    }
}

impl Model {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let d = self.cfg.model_dim;
        let f = self.cfg.ff_dim;
        let mut tensors = vec![tensor(
            "embed",
            vec![self.cfg.vocab, d],
            self.embed.data.clone(),
        )];
        for (i, b) in self.blocks.iter().enumerate() {
            let mats: [(&str, &Mat); 6] = [
                ("wq", &b.wq),
                ("wk", &b.wk),
                ("wv", &b.wv),
                ("wo", &b.wo),
                ("w1", &b.w1),
                ("w2", &b.w2),
            ];
            tensors.push(tensor(
                &format!("block{i}.ln1.gamma"),
                vec![d],
                b.ln1.gamma.clone(),
            ));
            tensors.push(tensor(
                &format!("block{i}.ln1.beta"),
                vec![d],
                b.ln1.beta.clone(),
            ));
            for (name, m) in mats {
                tensors.push(tensor(
                    &format!("block{i}.{name}"),
                    vec![m.rows, m.cols],
                    m.data.clone(),
                ));
            }
            tensors.push(tensor(
                &format!("block{i}.ln2.gamma"),
                vec![d],
                b.ln2.gamma.clone(),
            ));
            tensors.push(tensor(
                &format!("block{i}.ln2.beta"),
                vec![d],
                b.ln2.beta.clone(),
            ));
            tensors.push(tensor(&format!("block{i}.b1"), vec![f], b.b1.clone()));
            tensors.push(tensor(&format!("block{i}.b2"), vec![d], b.b2.clone()));
        }
        tensors.push(tensor(
            "head.w",
            vec![d, self.cfg.classes],
            self.head_w.data.clone(),
        ));
        tensors.push(tensor(
            "head.b",
            vec![self.cfg.classes],
            self.head_b.clone(),
        ));
        Checkpoint {
            config: self.cfg.clone(),
            tensors,
            modulator: self
                .blocks
                .iter()
                .filter_map(|b| b.modulator.clone())
                .collect(),
        }
    }

    pub fn from_checkpoint(cp: &Checkpoint) -> Result<Model> {
        let mut model = Model::init(&cp.config)?;
        let find = |name: &str| -> Result<&NamedTensor> {
            cp.tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| Error::InvalidInput(format!("checkpoint missing tensor {name}")))
        };
        let load_mat = |m: &mut Mat, t: &NamedTensor| -> Result<()> {
            if t.shape != [m.rows, m.cols] || t.data.len() != m.data.len() {
                return Err(Error::InvalidInput(format!(
                    "tensor {} has shape {:?}, expected {:?}",
                    t.name,
                    t.shape,
                    [m.rows, m.cols]
                )));
            }
            m.data.copy_from_slice(&t.data);
            Ok(())
        };
        let load_vec = |v: &mut Vec<f64>, t: &NamedTensor| -> Result<()> {
            if t.shape != [v.len()] {
                return Err(Error::InvalidInput(format!(
                    "tensor {} has shape {:?}, expected {:?}",
                    t.name,
                    t.shape,
                    [v.len()]
                )));
            }
            v.copy_from_slice(&t.data);
            Ok(())
        };

        load_mat(&mut model.embed, find("embed")?)?;
        for i in 0..model.cfg.depth {
            let b = &mut model.blocks[i];
            load_vec(&mut b.ln1.gamma, find(&format!("block{i}.ln1.gamma"))?)?;
            load_vec(&mut b.ln1.beta, find(&format!("block{i}.ln1.beta"))?)?;
            load_mat(&mut b.wq, find(&format!("block{i}.wq"))?)?;
            load_mat(&mut b.wk, find(&format!("block{i}.wk"))?)?;
            load_mat(&mut b.wv, find(&format!("block{i}.wv"))?)?;
            load_mat(&mut b.wo, find(&format!("block{i}.wo"))?)?;
            load_vec(&mut b.ln2.gamma, find(&format!("block{i}.ln2.gamma"))?)?;
            load_vec(&mut b.ln2.beta, find(&format!("block{i}.ln2.beta"))?)?;
            load_mat(&mut b.w1, find(&format!("block{i}.w1"))?)?;
            load_vec(&mut b.b1, find(&format!("block{i}.b1"))?)?;
            load_mat(&mut b.w2, find(&format!("block{i}.w2"))?)?;
            load_vec(&mut b.b2, find(&format!("block{i}.b2"))?)?;
            if b.modulator.is_some() {
                let p = cp.modulator.get(i).ok_or_else(|| {
                    Error::InvalidInput(format!("checkpoint missing modulator for layer {i}"))
                })?;
                b.modulator = Some(p.clone());
            }
        }
        load_mat(&mut model.head_w, find("head.w")?)?;
        load_vec(&mut model.head_b, find("head.b")?)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use reweight_core::ReweightSpec;

    #[test]
    fn checkpoint_round_trip_preserves_forward_pass() {
        let cfg = ToyModelConfig {
            depth: 2,
            heads: 2,
            model_dim: 8,
            ff_dim: 12,
            seq_len: 6,
            vocab: 12,
            classes: 3,
            reweight: ReweightSpec::multimax_identity(2),
            seed: 21,
            batch_size: 4,
        };
        let model = Model::init(&cfg).unwrap();
        let json = serde_json::to_string(&model.to_checkpoint()).unwrap();
        let cp: Checkpoint = serde_json::from_str(&json).unwrap();
        let restored = Model::from_checkpoint(&cp).unwrap();
        assert_eq!(model, restored);
        let tokens = vec![0, 5, 3, 2, 8, 11];
        assert_eq!(
            model.forward_cached(&tokens).unwrap().logits,
            restored.forward_cached(&tokens).unwrap().logits
        );
    }

    #[test]
    fn missing_tensor_rejected() {
        let cfg = ToyModelConfig {
            depth: 1,
            heads: 1,
            model_dim: 4,
            ff_dim: 8,
            seq_len: 4,
            vocab: 8,
            classes: 2,
            reweight: ReweightSpec::softmax_unit(),
            seed: 0,
            batch_size: 2,
        };
        let model = Model::init(&cfg).unwrap();
        let mut cp = model.to_checkpoint();
        cp.tensors.retain(|t| t.name != "head.w");
        assert!(Model::from_checkpoint(&cp).is_err());

        let mut cp2 = model.to_checkpoint();
        cp2.tensors[0].shape = vec![1, 1];
        assert!(Model::from_checkpoint(&cp2).is_err());
    }
}
