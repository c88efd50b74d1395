//! The full column-embedding model: cell embedder, encoder and adapter,
//! stored together in one self-describing checkpoint.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapter::{adapt_table, AdapterConfig, AdapterError, AdapterParams};
use crate::encoder::{
    embed_cells, encode, CellEmbedder, EmbedderSpec, EncoderConfig, EncoderError, EncoderParams,
    FeatureHashEmbedder,
};
use crate::numerics::{Checkpoint, NumericsError, ParamStore, Tensor};
use crate::table::Table;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unsupported cell embedder {0:?}")]
    UnknownEmbedder(String),
    #[error("inconsistent model config: {0}")]
    Inconsistent(String),
    #[error("invalid checkpoint header: {0}")]
    Header(String),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub embedder: EmbedderSpec,
    pub encoder: EncoderConfig,
    pub adapter: AdapterConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let encoder = EncoderConfig::default();
        Self {
            embedder: FeatureHashEmbedder::new(encoder.d, 0).spec(),
            adapter: AdapterConfig {
                d_in: encoder.d,
                ..AdapterConfig::default()
            },
            encoder,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.encoder.validate()?;
        self.adapter.validate()?;
        if self.embedder.dim != self.encoder.d {
            return Err(ModelError::Inconsistent(format!(
                "embedder dim {} differs from encoder d {}",
                self.embedder.dim, self.encoder.d
            )));
        }
        if self.adapter.d_in != self.encoder.d {
            return Err(ModelError::Inconsistent(format!(
                "adapter d_in {} differs from encoder d {}",
                self.adapter.d_in, self.encoder.d
            )));
        }
        Ok(())
    }

    pub fn embedder(&self) -> Result<FeatureHashEmbedder, ModelError> {
        FeatureHashEmbedder::from_spec(&self.embedder)
            .ok_or_else(|| ModelError::UnknownEmbedder(self.embedder.kind.clone()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub embedder: FeatureHashEmbedder,
    pub encoder: EncoderParams,
    pub adapter: AdapterParams,
}

impl Model {
    /// Fresh weights from one seed: the encoder is drawn first, then the
    /// adapter, from the same stream.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = EncoderParams::init(config.encoder.clone(), &mut rng)?;
        let adapter = AdapterParams::init(config.adapter.clone(), &mut rng)?;
        Ok(Self {
            embedder: config.embedder()?,
            config,
            encoder,
            adapter,
        })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut params = ParamStore::new();
        params.extend(self.encoder.store.clone());
        params.extend(self.adapter.store.clone());
        let header = serde_json::to_string(&self.config).expect("config serializes");
        Checkpoint::new(header, params)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, ModelError> {
        let config: ModelConfig =
            serde_json::from_str(&ckpt.config).map_err(|e| ModelError::Header(e.to_string()))?;
        config.validate()?;
        Ok(Self {
            embedder: config.embedder()?,
            encoder: EncoderParams::from_store(config.encoder.clone(), &ckpt.params)?,
            adapter: AdapterParams::from_store(config.adapter.clone(), &ckpt.params)?,
            config,
        })
    }

    /// Column embeddings `C(T)`, shape `[n, k, d']`.
    pub fn column_embeddings(&self, t: &Table) -> Result<Tensor, ModelError> {
        let e = embed_cells(t, &self.embedder);
        let e_prime = encode(&e, &self.encoder)?;
        Ok(adapt_table(&e_prime, &self.adapter)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelConfig {
        ModelConfig {
            embedder: FeatureHashEmbedder::new(8, 3).spec(),
            encoder: EncoderConfig {
                d: 8,
                layers: 1,
                heads: 2,
                ffn_mult: 1,
                row_first: true,
            },
            adapter: AdapterConfig {
                d_in: 8,
                k: 2,
                d_out: 4,
                heads: 2,
                depth: 1,
                ffn_mult: 1,
            },
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = Model::init(small(), 9).unwrap();
        let bytes = m.to_checkpoint().to_bytes();
        let back = Model::from_checkpoint(&Checkpoint::from_bytes(&bytes).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_checkpoint().to_bytes(), bytes);
    }

    #[test]
    fn column_embedding_shape() {
        let m = Model::init(small(), 9).unwrap();
        let t = Table::from_text(
            "t",
            &["a", "b", "c"],
            &[vec!["1", "x", ""], vec!["2", "y", "z"]],
        )
        .unwrap();
        assert_eq!(m.column_embeddings(&t).unwrap().shape(), &[3, 2, 4]);
    }

    #[test]
    fn inconsistent_widths_rejected() {
        let mut cfg = small();
        cfg.adapter.d_in = 16;
        assert!(matches!(
            Model::init(cfg, 0),
            Err(ModelError::Inconsistent(_))
        ));
        let mut cfg = small();
        cfg.embedder.dim = 4;
        assert!(Model::init(cfg, 0).is_err());
    }

    #[test]
    fn defaults_are_consistent() {
        ModelConfig::default().validate().unwrap();
    }
}
