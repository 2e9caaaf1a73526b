//! On-disk model directory.
//!
//! ```text
//! models/
//!   budget.json    budget model
//!   gross.json     gross model
//!   features.json  feature index, in position order
//!   metrics.json   training metadata
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{Feature, FeatureIndex, KnowledgeLibrary};
use crate::regress::{
    train_budget_model, train_gross_model, training_mape, FitConfig, LinearModel, ModelKind,
};

pub const BUDGET_FILE: &str = "budget.json";
pub const GROSS_FILE: &str = "gross.json";
pub const FEATURES_FILE: &str = "features.json";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetrics {
    pub n_records: usize,
    pub n_trainable: usize,
    pub n_features: usize,
    pub lambda: f64,
    pub seed: u64,
    /// In-sample MAPE in percent; absent when every target is zero.
    pub budget_mape: Option<f64>,
    pub gross_mape: Option<f64>,
}

/// Budget and gross models with the index they were trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub budget: LinearModel,
    pub gross: LinearModel,
    pub index: FeatureIndex,
    pub metrics: TrainingMetrics,
}

impl ModelSet {
    /// Builds the index from `lib` and fits both models. The fit itself is
    /// deterministic; `seed` is only recorded.
    pub fn train(lib: &KnowledgeLibrary, cfg: &FitConfig, seed: u64) -> Result<Self> {
        let index = FeatureIndex::build(lib)?;
        let budget = train_budget_model(lib, &index, cfg)?;
        let gross = train_gross_model(lib, &index, cfg)?;
        let metrics = TrainingMetrics {
            n_records: lib.len(),
            n_trainable: lib.trainable().count(),
            n_features: index.len(),
            lambda: cfg.lambda,
            seed,
            budget_mape: training_mape(&budget, lib, &index)?,
            gross_mape: training_mape(&gross, lib, &index)?,
        };
        Ok(Self {
            budget,
            gross,
            index,
            metrics,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_json(&dir.join(BUDGET_FILE), &self.budget)?;
        write_json(&dir.join(GROSS_FILE), &self.gross)?;
        write_json(&dir.join(FEATURES_FILE), &self.index.features())?;
        write_json(&dir.join(METRICS_FILE), &self.metrics)
    }

    /// Loads and cross-checks the four files.
    pub fn load(dir: &Path) -> Result<Self> {
        let budget: LinearModel = read_json(&dir.join(BUDGET_FILE))?;
        let gross: LinearModel = read_json(&dir.join(GROSS_FILE))?;
        let features: Vec<Feature> = read_json(&dir.join(FEATURES_FILE))?;
        let metrics: TrainingMetrics = read_json(&dir.join(METRICS_FILE))?;
        let index = FeatureIndex::from_features(features)?;
        for (model, kind) in [(&budget, ModelKind::Budget), (&gross, ModelKind::Gross)] {
            if model.kind != kind {
                return Err(Error::InvalidArgument(format!(
                    "{kind} file holds a {} model",
                    model.kind
                )));
            }
            model.validate()?;
            if model.feature_block_sizes != index.block_sizes() {
                return Err(Error::InvalidArgument(format!(
                    "{kind} model block sizes {:?} do not match the feature index {:?}",
                    model.feature_block_sizes,
                    index.block_sizes()
                )));
            }
        }
        Ok(Self {
            budget,
            gross,
            index,
            metrics,
        })
    }
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{generate_synthetic_library, SyntheticSpec};

    fn small() -> KnowledgeLibrary {
        let spec = SyntheticSpec {
            n_movies: 40,
            n_actors: 10,
            n_actresses: 6,
            n_directors: 3,
            n_writers: 4,
            n_genres: 4,
            ..SyntheticSpec::default()
        };
        generate_synthetic_library(&spec).unwrap().library
    }

    #[test]
    fn save_then_load_is_identity() {
        let set = ModelSet::train(&small(), &FitConfig::default(), 3).unwrap();
        let dir = std::env::temp_dir().join(format!("bigmovie-store-{}", std::process::id()));
        set.save(&dir).unwrap();
        let back = ModelSet::load(&dir).unwrap();
        fs::remove_dir_all(&dir).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.metrics.n_features, set.index.len());
    }

    #[test]
    fn swapped_model_files_are_rejected() {
        let set = ModelSet::train(&small(), &FitConfig::default(), 3).unwrap();
        let dir = std::env::temp_dir().join(format!("bigmovie-store-swap-{}", std::process::id()));
        set.save(&dir).unwrap();
        fs::copy(dir.join(GROSS_FILE), dir.join(BUDGET_FILE)).unwrap();
        let err = ModelSet::load(&dir).unwrap_err();
        fs::remove_dir_all(&dir).unwrap();
        assert!(err.to_string().contains("budget file"));
    }
}
