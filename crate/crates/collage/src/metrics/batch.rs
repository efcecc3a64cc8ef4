//! Scoring many collages and aggregating them into per-group tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use collage_core::rubric::AXES;
use collage_core::{GridLayout, RubricScores, TransferReport};
use serde::{Deserialize, Serialize};

use super::grid_cka;
use crate::agents::Agents;
use crate::fsutil::write_atomic;
use crate::picture::Picture;
use crate::pipeline::Mode;
use crate::providers::{CachedEmbedder, EmbeddingProvider};

pub const RESULTS_CSV: &str = "results.csv";
pub const RESULTS_JSON: &str = "results.json";
pub const MEAN_ITEM: &str = "mean";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    /// Row label; defaults to the collage file stem.
    #[serde(default)]
    pub item: Option<String>,
    pub group: String,
    #[serde(default)]
    pub mode: Mode,
    pub collage: PathBuf,
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default)]
    pub packshot: Option<PathBuf>,
    /// `RxC`; 2x2 when absent.
    #[serde(default)]
    pub layout: Option<String>,
}

impl ManifestItem {
    pub fn label(&self) -> String {
        self.item.clone().unwrap_or_else(|| {
            self.collage.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub items: Vec<ManifestItem>,
    /// JSON object mapping item label to an externally computed score.
    #[serde(default)]
    pub external_scores: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestFile {
    Items(Vec<ManifestItem>),
    Full(Manifest),
}

impl Manifest {
    /// Reads a manifest, either a bare item array or `{items, external_scores}`.
    /// Relative paths resolve against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self, BatchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BatchError::io(path, e))?;
        let parsed: ManifestFile =
            serde_json::from_str(&text).map_err(|e| BatchError::Manifest(format!("{}: {e}", path.display())))?;
        let mut m = match parsed {
            ManifestFile::Items(items) => Manifest { items, external_scores: None },
            ManifestFile::Full(m) => m,
        };
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for item in &mut m.items {
            resolve(&mut item.collage);
            item.reference.iter_mut().for_each(resolve);
            item.packshot.iter_mut().for_each(resolve);
        }
        m.external_scores.iter_mut().for_each(resolve);
        Ok(m)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl BatchError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }
}

/// Scorers shared by all batch workers.
pub struct Evaluator {
    pub agents: Agents,
    pub embedder: CachedEmbedder,
}

impl Evaluator {
    pub fn new(agents: Agents, embedder: Arc<dyn EmbeddingProvider>) -> Self {
        Self { agents, embedder: CachedEmbedder::new(embedder) }
    }
}

/// Everything measured for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScores {
    pub visual: RubricScores,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cka: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub group: String,
    pub item: String,
    /// One entry per numeric column; `None` renders as an empty cell.
    pub values: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<ItemScores>,
}

impl BatchRow {
    pub fn is_mean(&self) -> bool {
        self.item == MEAN_ITEM
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    /// Numeric column names, between `item` and `error`.
    pub columns: Vec<String>,
    pub rows: Vec<BatchRow>,
}

impl BatchReport {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["group".to_string(), "item".to_string()];
        h.extend(self.columns.iter().cloned());
        h.push("error".into());
        h
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![r.group.clone(), r.item.clone()];
            rec.extend(r.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is UTF-8")
    }
}

pub const TRANSFER_COLUMNS: [&str; 3] = ["transfer.grid_plan", "transfer.narrative_logic", "transfer.product_fit"];

/// Fixed column order: each axis's sub-dimensions followed by its mean, then
/// transfer scores and CKA when any item is in reference mode, then the
/// external score when a sidecar is given.
pub fn columns(with_reference: bool, with_external: bool) -> Vec<String> {
    let mut c = Vec::new();
    for (axis, subs) in AXES {
        c.extend(subs.iter().map(|s| format!("{axis}.{s}")));
        c.push(format!("{axis}.mean"));
    }
    if with_reference {
        c.extend(TRANSFER_COLUMNS.iter().map(|s| s.to_string()));
        c.push("cka".into());
    }
    if with_external {
        c.push("external_score".into());
    }
    c
}

fn values_of(columns: &[String], scores: &ItemScores, external: Option<f64>) -> Vec<Option<f64>> {
    let mut named: BTreeMap<String, f64> =
        scores.visual.flattened().into_iter().map(|(k, v)| (k, f64::from(v))).collect();
    for (axis, _) in AXES {
        if let Some(m) = scores.visual.axis_mean(axis) {
            named.insert(format!("{axis}.mean"), m);
        }
    }
    if let Some(t) = &scores.transfer {
        for (k, v) in t.scores() {
            named.insert(format!("transfer.{k}"), f64::from(v));
        }
    }
    if let Some(c) = scores.cka {
        named.insert("cka".into(), c);
    }
    if let Some(e) = external {
        named.insert("external_score".into(), e);
    }
    columns.iter().map(|c| named.get(c).copied()).collect()
}

fn mean_row(group: &str, rows: &[&BatchRow], width: usize) -> BatchRow {
    let values = (0..width)
        .map(|i| {
            let xs: Vec<f64> = rows.iter().filter(|r| r.error.is_none()).filter_map(|r| r.values[i]).collect();
            (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
        })
        .collect();
    BatchRow { group: group.into(), item: MEAN_ITEM.into(), values, error: None, details: None }
}

fn score_item(item: &ManifestItem, eval: &Evaluator) -> Result<ItemScores, String> {
    let layout: GridLayout = match &item.layout {
        Some(l) => l.parse().map_err(|e| format!("{e}"))?,
        None => GridLayout::quad(),
    };
    let collage = Picture::open(&item.collage).map_err(|e| e.to_string())?;
    if let Some(p) = &item.packshot {
        if !p.is_file() {
            return Err(format!("packshot {} does not exist", p.display()));
        }
    }
    let visual = eval.agents.score_visual_quality(&collage, &layout).map_err(|e| e.to_string())?;
    let (transfer, cka) = match item.mode {
        Mode::Creation => (None, None),
        Mode::Reference => {
            let path = item.reference.as_ref().ok_or("reference-mode item has no reference grid")?;
            let reference = Picture::open(path).map_err(|e| e.to_string())?;
            let report = eval
                .agents
                .score_reference_transfer(&reference, &collage, &layout)
                .map_err(|e| e.to_string())?;
            let alignment = grid_cka(&reference, &collage, &layout, &eval.embedder).map_err(|e| e.to_string())?;
            (Some(report), Some(alignment.cka))
        }
    };
    Ok(ItemScores { visual, transfer, cka })
}

/// Scores every item with at most `parallelism` concurrent workers, writes
/// `results.csv` and `results.json` into `out`, and returns the table. A
/// failing item becomes an error row; the rest of the batch still runs.
pub fn batch_evaluate(
    manifest: &Manifest,
    eval: &Evaluator,
    out: &Path,
    parallelism: usize,
) -> Result<BatchReport, BatchError> {
    let external: Option<BTreeMap<String, f64>> = match &manifest.external_scores {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| BatchError::io(p, e))?;
            Some(serde_json::from_str(&text).map_err(|e| BatchError::Manifest(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let with_reference = manifest.items.iter().any(|i| i.mode == Mode::Reference);
    let columns = columns(with_reference, external.is_some());

    let n = manifest.items.len();
    let results: Vec<Mutex<Option<Result<ItemScores, String>>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..parallelism.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = manifest.items.get(i) else { break };
                let r = score_item(item, eval);
                if let Err(e) = &r {
                    log::warn!("item {} failed: {e}", item.label());
                }
                *results[i].lock().expect("result slot") = Some(r);
            });
        }
    });

    let mut item_rows: Vec<BatchRow> = Vec::with_capacity(n);
    for (item, slot) in manifest.items.iter().zip(results) {
        let label = item.label();
        let row = match slot.into_inner().expect("result slot").expect("every item scored") {
            Ok(scores) => {
                let ext = external.as_ref().and_then(|m| m.get(&label).copied());
                BatchRow {
                    group: item.group.clone(),
                    item: label,
                    values: values_of(&columns, &scores, ext),
                    error: None,
                    details: Some(scores),
                }
            }
            Err(e) => BatchRow {
                group: item.group.clone(),
                item: label,
                values: vec![None; columns.len()],
                error: Some(e),
                details: None,
            },
        };
        item_rows.push(row);
    }

    let mut groups: Vec<&str> = Vec::new();
    for r in &item_rows {
        if !groups.contains(&r.group.as_str()) {
            groups.push(&r.group);
        }
    }
    let mut rows = Vec::with_capacity(item_rows.len() + groups.len());
    for g in groups {
        let members: Vec<&BatchRow> = item_rows.iter().filter(|r| r.group == g).collect();
        let mean = mean_row(g, &members, columns.len());
        rows.extend(members.into_iter().cloned());
        rows.push(mean);
    }

    let report = BatchReport { columns, rows };
    std::fs::create_dir_all(out).map_err(|e| BatchError::io(out, e))?;
    let csv_path = out.join(RESULTS_CSV);
    write_atomic(&csv_path, report.to_csv().as_bytes()).map_err(|e| BatchError::io(&csv_path, e))?;
    let json_path = out.join(RESULTS_JSON);
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_atomic(&json_path, json.as_bytes()).map_err(|e| BatchError::io(&json_path, e))?;
    Ok(report)
}
