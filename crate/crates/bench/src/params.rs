//! Trained ansatz parameters, cached on disk.

use std::path::{Path, PathBuf};

use dynmit::hamiltonian::Model;
use dynmit::vqe::{optimize_params, TrainingOptions, TrainingResult, DEFAULT_LAYERS};
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// Bumped whenever the ansatz layout or gate conventions change, so stale
/// parameter files are not reused.
pub const LAYOUT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedParams {
    pub model: Model,
    pub n: usize,
    pub h: f64,
    pub layout_version: u32,
    pub training: TrainingResult,
}

#[derive(Debug, Clone)]
pub struct ParamCache {
    dir: PathBuf,
    retrain: bool,
}

impl ParamCache {
    pub fn new(dir: impl Into<PathBuf>, retrain: bool) -> Self {
        Self {
            dir: dir.into(),
            retrain,
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, model: Model, n: usize, h: f64) -> PathBuf {
        self.dir
            .join(format!("theta-{model}-n{n}-h{h}-v{LAYOUT_VERSION}.json"))
    }

    /// Cached parameters for `(model, n, h)`, training and storing them when
    /// absent, stale or when retraining was requested.
    pub fn get_or_train(
        &self,
        model: Model,
        n: usize,
        h: f64,
        seed: u64,
        opts: &TrainingOptions,
    ) -> Result<TrainingResult, BenchError> {
        let path = self.path(model, n, h);
        if !self.retrain {
            if let Some(hit) = self.read(&path)? {
                if hit.model == model
                    && hit.n == n
                    && hit.h == h
                    && hit.layout_version == LAYOUT_VERSION
                {
                    return Ok(hit.training);
                }
            }
        }
        let training = optimize_params(model, n, h, DEFAULT_LAYERS, seed, opts)?;
        let entry = CachedParams {
            model,
            n,
            h,
            layout_version: LAYOUT_VERSION,
            training: training.clone(),
        };
        std::fs::create_dir_all(&self.dir).map_err(|e| BenchError::io(&self.dir, e))?;
        let text = serde_json::to_string_pretty(&entry).map_err(|source| BenchError::Json {
            path: path.clone(),
            source,
        })?;
        std::fs::write(&path, text).map_err(|e| BenchError::io(&path, e))?;
        Ok(training)
    }

    fn read(&self, path: &Path) -> Result<Option<CachedParams>, BenchError> {
        match std::fs::read_to_string(path) {
            Ok(text) => Ok(serde_json::from_str(&text).ok()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(BenchError::io(path, e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> TrainingOptions {
        TrainingOptions {
            restarts: 2,
            max_evals: 300,
            ..Default::default()
        }
    }

    #[test]
    fn cache_round_trip_and_retrain() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ParamCache::new(dir.path(), false);
        let a = cache
            .get_or_train(Model::Tfim, 2, 0.5, 1, &quick())
            .unwrap();
        assert!(cache.path(Model::Tfim, 2, 0.5).exists());
        // a different seed still hits the cache
        let b = cache
            .get_or_train(Model::Tfim, 2, 0.5, 99, &quick())
            .unwrap();
        assert_eq!(a, b);
        let fresh = ParamCache::new(dir.path(), true);
        let c = fresh
            .get_or_train(Model::Tfim, 2, 0.5, 99, &quick())
            .unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn corrupt_cache_is_replaced() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ParamCache::new(dir.path(), false);
        std::fs::write(cache.path(Model::Tfim, 2, 1.0), "not json").unwrap();
        let r = cache
            .get_or_train(Model::Tfim, 2, 1.0, 1, &quick())
            .unwrap();
        assert!(r.e_ideal < 0.0);
    }
}
