use std::fs;
use std::path::{Path, PathBuf};

use qhc_core::autoencoder::AeTrainConfig;
use qhc_core::circuits::{FeatureMapKind, FeatureMapSpec};
use qhc_core::kernels::KernelSpec;
use qhc_core::svm::SvmConfig;
use qhc_core::vqc::TrainConfig;
use qhc_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::args::{CommonTrainArgs, MapArgs, MapKind, SolverArgs};

pub const SEED_ENV: &str = "QHC_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_size: usize,
    pub n_folds: usize,
    pub fold_size: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_size: 576,
            n_folds: 5,
            fold_size: 720,
        }
    }
}

/// Everything a run can be configured with. Loaded from JSON, then
/// overridden by flags; the merged result is echoed into metrics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub data: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub label_column: Option<String>,
    pub split: SplitConfig,
    pub svm: SvmConfig,
    pub vqc: TrainConfig,
    pub autoencoder: AeTrainConfig,
    pub feature_map: Option<FeatureMapSpec>,
    pub kernel: Option<KernelSpec>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Applies the flags every training command shares and resolves the seed.
    pub fn merge_common(&mut self, args: &CommonTrainArgs) -> Result<()> {
        if args.data.is_some() {
            self.data.clone_from(&args.data);
        }
        if args.out_dir.is_some() {
            self.out_dir.clone_from(&args.out_dir);
        }
        if args.label_column.is_some() {
            self.label_column.clone_from(&args.label_column);
        }
        if let Some(v) = args.split.train_size {
            self.split.train_size = v;
        }
        if let Some(v) = args.split.folds {
            self.split.n_folds = v;
        }
        if let Some(v) = args.split.fold_size {
            self.split.fold_size = v;
        }
        self.seed = Some(resolve_seed(args.seed, self.seed)?);
        self.label_column.get_or_insert_with(|| qhc_core::data::DEFAULT_LABEL_COLUMN.to_string());
        Ok(())
    }

    pub fn merge_solver(&mut self, args: &SolverArgs) {
        if let Some(v) = args.lambda {
            self.svm.lambda = v;
        }
        if args.c.is_some() {
            self.svm.c = args.c;
        }
        if let Some(v) = args.tol {
            self.svm.tol = v;
        }
        if let Some(v) = args.max_passes {
            self.svm.max_passes = v;
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn label_column(&self) -> &str {
        self.label_column.as_deref().unwrap_or(qhc_core::data::DEFAULT_LABEL_COLUMN)
    }

    pub fn require_data(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| Error::Usage("no input data: pass --data or set `data` in the config".into()))
    }

    pub fn require_out_dir(&self) -> Result<&Path> {
        self.out_dir
            .as_deref()
            .ok_or_else(|| Error::Usage("no output directory: pass --out-dir or set `out_dir` in the config".into()))
    }
}

/// Flag, then config value, then the `QHC_SEED` environment variable, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

/// Feature map from flags layered over an optional configured map.
pub fn resolve_map(args: &MapArgs, configured: Option<FeatureMapSpec>) -> FeatureMapSpec {
    let kind = match args.map {
        Some(MapKind::Amplitude) => FeatureMapKind::AmplitudeEncoding,
        Some(MapKind::U2Reuploading) => FeatureMapKind::U2Reuploading,
        Some(MapKind::PauliZz) => FeatureMapKind::PauliZz,
        None => configured.map_or(FeatureMapKind::AmplitudeEncoding, |m| m.kind),
    };
    let base = match configured {
        Some(m) if m.kind == kind => m,
        _ => match kind {
            FeatureMapKind::AmplitudeEncoding => FeatureMapSpec::amplitude(4),
            FeatureMapKind::U2Reuploading => FeatureMapSpec::u2_reuploading(),
            FeatureMapKind::PauliZz => FeatureMapSpec::pauli_zz(2),
        },
    };
    FeatureMapSpec {
        kind,
        n_qubits: args.qubits.unwrap_or(base.n_qubits),
        reps: args.reps.unwrap_or(base.reps),
    }
}
