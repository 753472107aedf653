//! Command implementations shared by the main dispatcher.

use std::path::Path;

use ddsh::coder::CoderError;
use ddsh::dataset::{
    generate_blobs, load_features, load_labels, save_features, save_labels, DataError, Dataset,
    FeatureFormat, FeatureMatrix,
};
use ddsh::featnet::{encode_all, tanh_saturation_histogram, FeatnetError, FeatureNet};
use ddsh::metrics::{evaluate, EvalKnobs, MetricsError};
use ddsh::retrieval::{PackedCodes, RetrievalError};
use ddsh::supervision::{SimilarityOracle, SupervisionError};
use ddsh::trainer::{self, TrainError, Variant};

use crate::config::RunConfig;
use crate::gradcheck;
use crate::jsondoc::{to_json_string, MetricsDocument, TraceDocument};
use crate::CliError;

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<FeatnetError> for CliError {
    fn from(e: FeatnetError) -> Self {
        match e {
            FeatnetError::Divergence { .. } | FeatnetError::NonFiniteOutput => {
                CliError::Divergence(e.to_string())
            }
            FeatnetError::BadConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(msg) => CliError::Config(msg),
            TrainError::Featnet(f) => f.into(),
            TrainError::Coder(c) => CliError::Data(c.to_string()),
            TrainError::Supervision(s) => CliError::Config(s.to_string()),
        }
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::CutoffOutOfRange { .. } => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<CoderError> for CliError {
    fn from(e: CoderError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SupervisionError> for CliError {
    fn from(e: SupervisionError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Feature files ending in `.csv` are text, anything else is the binary
/// format.
pub fn feature_format(path: &Path) -> FeatureFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => FeatureFormat::Csv,
        _ => FeatureFormat::Binary,
    }
}

fn load_feature_file(path: &Path) -> Result<FeatureMatrix, CliError> {
    Ok(load_features(path, feature_format(path))?)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| {
        CliError::Data(format!("cannot write {}: {e}", path.display()))
    })
}

fn json_err(e: serde_json::Error) -> CliError {
    CliError::Data(format!("serialization failed: {e}"))
}

pub fn cmd_train(cfg: &RunConfig, variant: Option<Variant>) -> Result<(), CliError> {
    let features_path = cfg.require("features")?.to_owned();
    let labels_path = cfg.require("labels")?.to_owned();
    let model_path = cfg.require("model")?.to_owned();
    let codes_path = cfg.require("codes")?.to_owned();
    let out_path = cfg.require("out")?.to_owned();

    let mut train_cfg = cfg.train_config();
    if let Some(v) = variant {
        train_cfg.variant = v;
    }

    let features = load_feature_file(&features_path)?;
    let labels = load_labels(&labels_path)?;
    let dataset = Dataset::new(features, labels)?;
    let sim = SimilarityOracle::new(dataset.labels.clone(), train_cfg.weight_policy);

    log::info!(
        "training variant {:?}: n={}, d={}, c={}",
        train_cfg.variant,
        dataset.n(),
        dataset.features.d(),
        train_cfg.bits
    );
    let model = trainer::train(&dataset, &sim, &train_cfg)?;

    model.net.save(&model_path)?;
    PackedCodes::pack(&model.codes).save(&codes_path)?;
    let doc = TraceDocument {
        seed: train_cfg.seed,
        config_echo: train_cfg,
        trace: model.trace,
    };
    write_text(&out_path, &to_json_string(&doc).map_err(json_err)?)?;
    Ok(())
}

pub fn cmd_encode(model: &Path, features: &Path, codes_out: &Path) -> Result<(), CliError> {
    let net = FeatureNet::load(model)?;
    let features = load_feature_file(features)?;
    let codes = encode_all(&net, &features)?;
    PackedCodes::pack(&codes).save(codes_out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_eval(
    db_codes: &Path,
    db_labels: &Path,
    query_codes: &Path,
    query_labels: &Path,
    radii: Vec<u32>,
    ks: Vec<usize>,
    map_at: Option<usize>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let db = PackedCodes::load(db_codes)?;
    let dbl = load_labels(db_labels)?;
    let queries = PackedCodes::load(query_codes)?;
    let ql = load_labels(query_labels)?;
    let default = EvalKnobs::default();
    let knobs = EvalKnobs {
        ks: if ks.is_empty() { default.ks } else { ks },
        radii: if radii.is_empty() { default.radii } else { radii },
        map_at,
    };
    let report = evaluate(&queries, &ql, &db, &dbl, &knobs)?;
    let echo = serde_json::json!({
        "db_codes": db_codes.display().to_string(),
        "db_labels": db_labels.display().to_string(),
        "query_codes": query_codes.display().to_string(),
        "query_labels": query_labels.display().to_string(),
        "ks": knobs.ks,
        "radii": knobs.radii,
        "map_at": knobs.map_at,
    });
    let doc = MetricsDocument::from_report(report, echo, 0, Vec::new());
    let json = to_json_string(&doc).map_err(json_err)?;
    match out {
        Some(path) => write_text(path, &json)?,
        None => println!("{json}"),
    }
    Ok(())
}

pub fn cmd_gradcheck(seed: u64, trials: usize, corrupt: bool) -> Result<(), CliError> {
    let reports = gradcheck::run_suite(seed, trials, corrupt);
    let mut all_passed = true;
    for (i, report) in reports.iter().enumerate() {
        for layer in &report.layers {
            println!(
                "net {i} layer {}: max rel err weights {:.3e}, biases {:.3e}",
                layer.layer, layer.max_weight_err, layer.max_bias_err
            );
        }
        all_passed &= report.passed;
    }
    let worst = reports.iter().fold(0.0f64, |acc, r| acc.max(r.max_err));
    if all_passed {
        println!("PASS: max relative error {worst:.3e} < {:.0e}", gradcheck::TOLERANCE);
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "gradient check failed: max relative error {worst:.3e} >= {:.0e}",
            gradcheck::TOLERANCE
        )))
    }
}

pub fn cmd_diag_tanh(
    model: &Path,
    features: &Path,
    bins: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let net = FeatureNet::load(model)?;
    let features = load_feature_file(features)?;
    let hist = tanh_saturation_histogram(&net, &features, bins)?;
    let json = to_json_string(&hist).map_err(json_err)?;
    match out {
        Some(path) => write_text(path, &json)?,
        None => println!("{json}"),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_gen_blobs(
    classes: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
    seed: u64,
    features_out: &Path,
    labels_out: &Path,
    format: FeatureFormat,
) -> Result<(), CliError> {
    let dataset = generate_blobs(classes, per_class, dim, spread, seed)?;
    save_features(&dataset.features, features_out, format)?;
    save_labels(&dataset.labels, labels_out)?;
    log::info!(
        "wrote {} points of dimension {dim} to {} / {}",
        dataset.n(),
        features_out.display(),
        labels_out.display()
    );
    Ok(())
}
