use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qhc_core::autoencoder::{ae_train, encode_latent, mse_trace_csv, AeArchitecture, AeTrainConfig};
use qhc_core::data::{
    apply_meta, apply_minmax, fit_minmax, gen_synthetic, load_csv, select_features, split_folds, Dataset, FeatureMeta,
    DEFAULT_LABEL_COLUMN,
};
use qhc_core::evalmetrics::{auc_mean_std, concatenate, roc_curve, AucSummary, RocCurve};
use qhc_core::kernels::{kernel_matrix, KernelSpec};
use qhc_core::svm::{predict_scores, SvmModel};
use qhc_core::vqc::{loss_trace_csv, vqc_predict, vqc_train, VqcModel};
use qhc_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::args::{
    AePreset, ClassicalKernel, Command, CommonTrainArgs, DumpKernel, EvaluateArgs, GenDataArgs, KernelDumpArgs,
    ReduceArgs, ReduceMode, TrainCommand,
};
use crate::config::{resolve_map, resolve_seed, RunConfig};
use crate::output::Staged;

pub const MODEL_FILE: &str = "model.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const ROC_FILE: &str = "roc.csv";
pub const LOSS_FILE: &str = "loss.csv";

/// On-disk model, tagged by family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", rename_all = "snake_case")]
pub enum ModelFile {
    Svm(SvmModel),
    Vqc(VqcModel),
}

impl ModelFile {
    fn n_features(&self) -> usize {
        match self {
            ModelFile::Svm(m) => m.n_features(),
            ModelFile::Vqc(m) => m.input_dim(),
        }
    }

    fn feature_meta(&self) -> &FeatureMeta {
        match self {
            ModelFile::Svm(m) => &m.feature_meta,
            ModelFile::Vqc(m) => &m.feature_meta,
        }
    }

    fn score(&self, ds: &Dataset) -> Result<Vec<f64>> {
        match self {
            ModelFile::Svm(m) => predict_scores(m, ds.features.view()),
            ModelFile::Vqc(m) => vqc_predict(ds.features.view(), m),
        }
    }
}

#[derive(Debug, Serialize)]
struct SolverReport {
    box_constant: f64,
    bias: f64,
    converged: bool,
    iterations: usize,
    kkt_gap: f64,
    n_support: usize,
}

#[derive(Debug, Serialize)]
struct VqcReport {
    epochs: usize,
    final_epoch_loss: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Metrics<'a> {
    command: &'a str,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a Path>,
    n_train: usize,
    n_features: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    svm: Option<SolverReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vqc: Option<VqcReport>,
    auc: AucSummary,
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::GenData(a) => gen_data(&a),
        Command::Reduce(a) => reduce(&a),
        Command::Train(t) => train(t),
        Command::Evaluate(a) => evaluate(&a),
        Command::KernelDump(a) => kernel_dump(&a),
    }
}

fn label_or_default(label: &Option<String>) -> &str {
    label.as_deref().unwrap_or(DEFAULT_LABEL_COLUMN)
}

fn check_dim(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected != got {
        return Err(Error::Config(format!("{what} expects {expected} features, data has {got}")));
    }
    Ok(())
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn gen_data(a: &GenDataArgs) -> Result<()> {
    let seed = resolve_seed(a.seed, None)?;
    let ds = gen_synthetic(a.n, a.d, a.sep, seed)?;
    let mut staged = Staged::default();
    staged.text(&a.out, ds.to_csv(label_or_default(&a.label_column)));
    staged.commit()?;
    println!("wrote {} rows x {} features to {} (seed {seed})", ds.n_rows(), ds.n_features(), a.out.display());
    Ok(())
}

fn reduce(a: &ReduceArgs) -> Result<()> {
    let label = label_or_default(&a.label_column);
    match a.mode {
        ReduceMode::Auc => {
            let k = a.k.ok_or_else(|| Error::Usage("--mode auc needs --k".into()))?;
            let ds = load_csv(&a.input, label)?;
            if k > ds.n_features() {
                return Err(Error::Usage(format!("cannot keep {k} of {} features", ds.n_features())));
            }
            let reduced = select_features(&ds, k)?;
            let mut staged = Staged::default();
            staged.text(&a.out, reduced.to_csv(label));
            print_written(&staged.commit()?);
            println!("kept {} of {} features: {}", k, ds.n_features(), reduced.feature_names.join(","));
            Ok(())
        }
        ReduceMode::Ae => reduce_ae(a, label),
    }
}

fn reduce_ae(a: &ReduceArgs, label: &str) -> Result<()> {
    let run = RunConfig::load(a.config.as_deref())?;
    let mut config = run.autoencoder.clone();
    let arch_for = |d: usize| -> Result<AeArchitecture> {
        match a.preset {
            Some(AePreset::Latent16) => Ok(AeArchitecture::preset_latent16()),
            Some(AePreset::Latent8) => Ok(AeArchitecture::preset_latent8()),
            None => {
                let latent = a.latent.ok_or_else(|| Error::Usage("--mode ae needs --latent or --preset".into()))?;
                AeArchitecture::geometric(d, latent, a.hidden)
            }
        }
    };
    if a.preset == Some(AePreset::Latent8) {
        config = AeTrainConfig::preset_latent8();
    }
    if let Some(v) = a.epochs {
        config.epochs = v;
    }
    if let Some(v) = a.lr {
        config.learning_rate = v;
    }
    if let Some(v) = a.batch {
        config.batch_size = v;
    }
    config.seed = resolve_seed(a.seed, run.seed)?;
    config.validate()?;

    let ds = load_csv(&a.input, label)?;
    let arch = arch_for(ds.n_features())?;
    check_dim(arch.input_dim(), ds.n_features(), "autoencoder")?;

    let scaled = apply_minmax(&ds, &fit_minmax(&ds)?)?;
    let outcome = ae_train(scaled.features.view(), &arch, &config)?;
    let latent = encode_latent(scaled.features.view(), &outcome.model)?;
    let names = (0..arch.latent_dim()).map(|j| format!("z{j}")).collect();
    let reduced = Dataset::new(latent, ds.labels.clone(), names)?;

    let model_out = a.model_out.clone().unwrap_or_else(|| a.out.with_extension("ae_model.json"));
    let trace_out = a.trace_out.clone().unwrap_or_else(|| a.out.with_extension("ae_mse.csv"));
    let mut staged = Staged::default();
    staged.text(&a.out, reduced.to_csv(label));
    staged.json(&model_out, &outcome.model)?;
    staged.text(&trace_out, mse_trace_csv(&outcome.valid_mse));
    print_written(&staged.commit()?);
    println!("architecture {:?}, {} epochs, seed {}", arch.full_sizes(), config.epochs, config.seed);
    match outcome.best_epoch {
        Some(e) => println!(
            "validation MSE {:.6e} -> {:.6e} (best epoch {e})",
            outcome.initial_valid_mse,
            outcome.valid_mse[e - 1]
        ),
        None => println!("validation MSE {:.6e} (no epochs run)", outcome.initial_valid_mse),
    }
    if let Some(t) = outcome.test_mse {
        println!("test MSE {t:.6e}");
    }
    Ok(())
}

/// Training split and test folds, min-max scaled with training statistics.
struct Split {
    train: Dataset,
    folds: Vec<Dataset>,
}

fn split_and_scale(ds: &Dataset, config: &RunConfig) -> Result<Split> {
    let s = config.split;
    let folds = split_folds(ds, s.train_size, s.n_folds, s.fold_size, config.seed())?;
    let scaler = fit_minmax(&folds.train)?;
    Ok(Split {
        train: apply_minmax(&folds.train, &scaler)?,
        folds: folds
            .test_folds
            .iter()
            .map(|f| apply_minmax(f, &scaler))
            .collect::<Result<_>>()?,
    })
}

fn score_folds(folds: &[Dataset], score: impl Fn(&Dataset) -> Result<Vec<f64>>) -> Result<(AucSummary, RocCurve)> {
    let pairs = folds
        .iter()
        .enumerate()
        .map(|(fold, f)| {
            score(f)
                .map(|s| (s, f.labels.clone()))
                .map_err(|e| Error::Fold { fold, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = auc_mean_std(&pairs)?;
    let (scores, labels) = concatenate(&pairs);
    Ok((summary, roc_curve(&scores, &labels)?))
}

fn load_common(common: &CommonTrainArgs) -> Result<(RunConfig, Dataset)> {
    let mut config = RunConfig::load(common.config.as_deref())?;
    config.merge_common(common)?;
    config.require_out_dir()?;
    let ds = load_csv(config.require_data()?, config.label_column())?;
    Ok((config, ds))
}

fn report_auc(auc: &AucSummary) {
    let per_fold: Vec<String> = auc.per_fold.iter().map(|a| format!("{a:.4}")).collect();
    println!(
        "AUC mean {:.4} std {:.4} (folds {}) concatenated {:.4}",
        auc.mean,
        auc.std,
        per_fold.join(" "),
        auc.concatenated_auc
    );
}

fn train(command: TrainCommand) -> Result<()> {
    let start = Instant::now();
    match command {
        TrainCommand::Qsvm { common, map, solver } => {
            let (mut config, ds) = load_common(&common)?;
            config.merge_solver(&solver);
            let configured = config.feature_map.or(match config.kernel {
                Some(KernelSpec::QuantumFidelity { feature_map }) => Some(feature_map),
                _ => None,
            });
            let feature_map = resolve_map(&map, configured);
            let spec = KernelSpec::QuantumFidelity { feature_map };
            config.feature_map = Some(feature_map);
            config.kernel = Some(spec);
            train_svm("train qsvm", config, &ds, spec, start)
        }
        TrainCommand::Svm { common, kernel, gamma, solver } => {
            let (mut config, ds) = load_common(&common)?;
            config.merge_solver(&solver);
            let configured = match config.kernel {
                Some(KernelSpec::QuantumFidelity { .. }) => {
                    return Err(Error::Config("`train svm` takes a classical kernel; use `train qsvm`".into()))
                }
                other => other,
            };
            let default_gamma = 1.0 / ds.n_features().max(1) as f64;
            let spec = match (kernel, configured) {
                (Some(ClassicalKernel::Linear), _) | (None, Some(KernelSpec::Linear)) => KernelSpec::Linear,
                (_, Some(KernelSpec::Rbf { gamma: g })) => KernelSpec::Rbf { gamma: gamma.unwrap_or(g) },
                _ => KernelSpec::Rbf {
                    gamma: gamma.unwrap_or(default_gamma),
                },
            };
            config.feature_map = None;
            config.kernel = Some(spec);
            train_svm("train svm", config, &ds, spec, start)
        }
        TrainCommand::Vqc { common, epochs, lr, batch } => {
            let (mut config, ds) = load_common(&common)?;
            if let Some(v) = epochs {
                config.vqc.epochs = v;
            }
            if let Some(v) = lr {
                config.vqc.learning_rate = v;
            }
            if let Some(v) = batch {
                config.vqc.batch_size = v;
            }
            config.vqc.seed = config.seed();
            train_vqc(config, &ds, start)
        }
    }
}

fn train_svm(command: &str, config: RunConfig, ds: &Dataset, spec: KernelSpec, start: Instant) -> Result<()> {
    spec.validate()?;
    if let Some(d) = spec.expected_dim() {
        check_dim(d, ds.n_features(), "kernel feature map")?;
    }
    let c = config.svm.box_constant(config.split.train_size)?;
    let out_dir = config.require_out_dir()?.to_path_buf();
    println!(
        "{command}: {} training rows, {} features, {} test folds of {}",
        config.split.train_size,
        ds.n_features(),
        config.split.n_folds,
        config.split.fold_size
    );
    println!("config {}", serde_json::to_string(&config).unwrap_or_default());
    println!("C = {c} (lambda {})", config.svm.lambda);

    let split = split_and_scale(ds, &config)?;
    let (model, sol) = SvmModel::fit(split.train.features.view(), &split.train.labels, spec, &config.svm, split.train.meta())?;
    let (auc, roc) = score_folds(&split.folds, |f| predict_scores(&model, f.features.view()))?;
    let n_support = model.support_indices().len();
    let metrics = Metrics {
        command,
        config: &config,
        model: None,
        n_train: split.train.n_rows(),
        n_features: ds.n_features(),
        svm: Some(SolverReport {
            box_constant: sol.c,
            bias: sol.bias,
            converged: sol.converged,
            iterations: sol.iterations,
            kkt_gap: sol.kkt_gap,
            n_support,
        }),
        vqc: None,
        auc,
    };
    let mut staged = Staged::default();
    staged.json(out_dir.join(MODEL_FILE), &ModelFile::Svm(model))?;
    staged.json(out_dir.join(METRICS_FILE), &metrics)?;
    staged.text(out_dir.join(ROC_FILE), roc.to_csv());
    println!(
        "SMO {} after {} iterations, KKT gap {:.3e}, {} support vectors",
        if sol.converged { "converged" } else { "stopped" },
        sol.iterations,
        sol.kkt_gap,
        n_support
    );
    report_auc(&metrics.auc);
    print_written(&staged.commit()?);
    println!("wall time {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn train_vqc(config: RunConfig, ds: &Dataset, start: Instant) -> Result<()> {
    config.vqc.validate()?;
    check_dim(8, ds.n_features(), "VQC")?;
    let out_dir = config.require_out_dir()?.to_path_buf();
    println!(
        "train vqc: {} training rows, {} test folds of {}, {} epochs, lr {}, batch {}",
        config.split.train_size, config.split.n_folds, config.split.fold_size, config.vqc.epochs, config.vqc.learning_rate, config.vqc.batch_size
    );
    println!("config {}", serde_json::to_string(&config).unwrap_or_default());

    let split = split_and_scale(ds, &config)?;
    let (model, trace) = vqc_train(&split.train, &config.vqc)?;
    let (auc, roc) = score_folds(&split.folds, |f| vqc_predict(f.features.view(), &model))?;
    let metrics = Metrics {
        command: "train vqc",
        config: &config,
        model: None,
        n_train: split.train.n_rows(),
        n_features: ds.n_features(),
        svm: None,
        vqc: Some(VqcReport {
            epochs: trace.len(),
            final_epoch_loss: model.final_epoch_loss,
        }),
        auc,
    };
    let mut staged = Staged::default();
    staged.json(out_dir.join(MODEL_FILE), &ModelFile::Vqc(model))?;
    staged.json(out_dir.join(METRICS_FILE), &metrics)?;
    staged.text(out_dir.join(ROC_FILE), roc.to_csv());
    staged.text(out_dir.join(LOSS_FILE), loss_trace_csv(&trace));
    if let (Some(first), Some(last)) = (trace.first(), trace.last()) {
        println!("training loss {first:.5} -> {last:.5}");
    }
    report_auc(&metrics.auc);
    print_written(&staged.commit()?);
    println!("wall time {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn load_model(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: not a model file: {e}", path.display())))
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let start = Instant::now();
    let (config, ds) = load_common(&a.common)?;
    let model = load_model(&a.model)?;
    if ds.n_features() != model.n_features() {
        return Err(Error::Usage(format!(
            "model expects {} features, {} has {}",
            model.n_features(),
            config.require_data()?.display(),
            ds.n_features()
        )));
    }
    let scaled = apply_meta(&ds, model.feature_meta())?;
    let s = config.split;
    let folds = split_folds(&scaled, s.train_size, s.n_folds, s.fold_size, config.seed())?;
    let (auc, roc) = score_folds(&folds.test_folds, |f| model.score(f))?;
    let metrics = Metrics {
        command: "evaluate",
        config: &config,
        model: Some(&a.model),
        n_train: 0,
        n_features: ds.n_features(),
        svm: None,
        vqc: None,
        auc,
    };
    let out_dir = config.require_out_dir()?;
    let mut staged = Staged::default();
    staged.json(out_dir.join(METRICS_FILE), &metrics)?;
    staged.text(out_dir.join(ROC_FILE), roc.to_csv());
    report_auc(&metrics.auc);
    print_written(&staged.commit()?);
    println!("wall time {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn kernel_dump(a: &KernelDumpArgs) -> Result<()> {
    let ds = load_csv(&a.data, label_or_default(&a.label_column))?;
    let rows = a.rows.unwrap_or(ds.n_rows());
    if rows == 0 || rows > ds.n_rows() {
        return Err(Error::Usage(format!("--rows {rows} out of range 1..={}", ds.n_rows())));
    }
    let spec = match a.kernel {
        DumpKernel::Quantum => KernelSpec::QuantumFidelity {
            feature_map: resolve_map(&a.map, None),
        },
        DumpKernel::Rbf => KernelSpec::Rbf {
            gamma: a.gamma.unwrap_or(1.0 / ds.n_features() as f64),
        },
        DumpKernel::Linear => KernelSpec::Linear,
    };
    spec.validate()?;
    if let Some(d) = spec.expected_dim() {
        check_dim(d, ds.n_features(), "kernel feature map")?;
    }
    let subset = ds.select_rows(&(0..rows).collect::<Vec<_>>());
    let scaled = apply_minmax(&subset, &fit_minmax(&subset)?)?;
    let k = kernel_matrix(scaled.features.view(), &spec)?;
    let header: Vec<String> = (0..rows).map(|j| format!("k{j}")).collect();
    let mut csv = header.join(",");
    csv.push('\n');
    for i in 0..rows {
        let row: Vec<String> = k.row(i).iter().map(|v| v.to_string()).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    let mut staged = Staged::default();
    staged.text(&a.out, csv);
    print_written(&staged.commit()?);
    println!("{rows}x{rows} kernel, max asymmetry {:.3e}", k.max_asymmetry());
    Ok(())
}
