//! JSON emission with fixed-width floats.
//!
//! Every f64 is written as `{:.16e}` (17 significant digits), enough to
//! round-trip any double bit-exactly, so reruns of a deterministic
//! pipeline produce byte-identical documents.

use std::collections::BTreeMap;
use std::io;

use ddsh::metrics::{PrPoint, RetrievalReport, TopkPoint};
use ddsh::trainer::{LossRecord, TrainConfig};
use serde::{Deserialize, Serialize};

pub struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize with 17-significant-digit floats.
pub fn to_json_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits utf-8"))
}

/// Evaluation results plus provenance, as written by the eval command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub map: f64,
    pub map_at: Option<usize>,
    pub per_query_ap: Vec<f64>,
    pub topk: Vec<TopkPoint>,
    pub pr: Vec<PrPoint>,
    pub sr: BTreeMap<u32, f64>,
    pub loss_trace: Vec<LossRecord>,
    pub config_echo: serde_json::Value,
    pub seed: u64,
}

impl MetricsDocument {
    pub fn from_report(
        report: RetrievalReport,
        config_echo: serde_json::Value,
        seed: u64,
        loss_trace: Vec<LossRecord>,
    ) -> Self {
        Self {
            map: report.map,
            map_at: report.map_at,
            per_query_ap: report.per_query_ap,
            topk: report.topk,
            pr: report.pr,
            sr: report.sr,
            loss_trace,
            config_echo,
            seed,
        }
    }
}

/// Loss trace plus provenance, as written by the train command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceDocument {
    pub seed: u64,
    pub config_echo: TrainConfig,
    pub trace: Vec<LossRecord>,
}
