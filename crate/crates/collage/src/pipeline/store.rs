//! Run directory layout, its advisory lock, and artifact persistence.

use std::fs::{File, OpenOptions, TryLockError};
use std::path::{Path, PathBuf};

use collage_core::{parse_document, to_canonical_json, Context, Document};
use serde::{Deserialize, Serialize};

use super::state::PipelineState;
use super::trace::RunTrace;
use super::PipelineError;
use crate::agents::generation::collage_file_name;
use crate::fsutil::{write_atomic, write_if_changed};
use crate::picture::{sha256_hex, Picture, ProductInput};

pub const LOCK_FILE: &str = ".run.lock";
pub const TRACE_FILE: &str = "trace.json";
pub const INPUT_FILE: &str = "input.json";
pub const PACKSHOT_FILE: &str = "packshot.png";
pub const REFERENCE_FILE: &str = "reference.png";
pub const TRANSFER_FILE: &str = "transfer.json";
pub const ANALYSIS_FILE: &str = "reference_analysis.txt";

pub fn framework_file(n: u32) -> String {
    format!("framework_iter{n}.json")
}

pub fn plan_file(n: u32) -> String {
    format!("plan_iter{n}.json")
}

pub fn prompts_file(n: u32) -> String {
    format!("prompts_iter{n}.json")
}

pub fn critique_file(n: u32) -> String {
    format!("critique_iter{n}.json")
}

/// Exclusive lock on a run directory, released on drop.
#[derive(Debug)]
pub struct RunLock {
    file: File,
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(run_dir: &Path) -> Result<Self, PipelineError> {
        let path = run_dir.join(LOCK_FILE);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| PipelineError::io(&path, e))?;
        match file.try_lock() {
            Ok(()) => Ok(Self { file, path }),
            Err(TryLockError::WouldBlock) => Err(PipelineError::Locked(run_dir.to_path_buf())),
            Err(TryLockError::Error(e)) => Err(PipelineError::io(&path, e)),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
        let _ = self.file.unlock();
    }
}

/// What a run directory was created from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub product_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_intent: Option<String>,
    pub packshot_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_digest: Option<String>,
}

impl InputRecord {
    pub fn of(input: &ProductInput) -> Self {
        Self {
            product_name: input.name.clone(),
            user_intent: input.user_intent.clone(),
            packshot_digest: input.packshot.digest().to_string(),
            reference_digest: input.reference.as_ref().map(|r| r.digest().to_string()),
        }
    }
}

/// Paths and typed reads/writes inside one run directory.
#[derive(Debug, Clone)]
pub struct RunStore {
    dir: PathBuf,
}

impl RunStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).is_file()
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.path(name);
        write_if_changed(&path, bytes).map_err(|e| PipelineError::io(&path, e))
    }

    /// Writes a document in canonical form and returns the digest of the bytes written.
    pub fn write_doc<T: Serialize>(&self, name: &str, doc: &T) -> Result<String, PipelineError> {
        let text = to_canonical_json(doc);
        self.write(name, text.as_bytes())?;
        Ok(sha256_hex(text.as_bytes()))
    }

    pub fn read(&self, name: &str) -> Result<Vec<u8>, PipelineError> {
        let path = self.path(name);
        std::fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => PipelineError::CorruptRun(format!("missing artifact {name}")),
            _ => PipelineError::io(&path, e),
        })
    }

    pub fn read_text(&self, name: &str) -> Result<String, PipelineError> {
        String::from_utf8(self.read(name)?)
            .map_err(|_| PipelineError::CorruptRun(format!("{name} is not UTF-8")))
    }

    /// Reads and parses a plan document, returning it with the digest of the file bytes.
    pub fn read_doc<T: Document>(&self, name: &str, ctx: &Context<'_>) -> Result<(T, String), PipelineError> {
        let text = self.read_text(name)?;
        let doc = parse_document::<T>(&text, ctx)
            .map_err(|e| PipelineError::CorruptRun(format!("{name}: {}", e.problems().join("; "))))?;
        Ok((doc, sha256_hex(text.as_bytes())))
    }

    pub fn read_json<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<T, PipelineError> {
        serde_json::from_slice(&self.read(name)?)
            .map_err(|e| PipelineError::CorruptRun(format!("{name}: {e}")))
    }

    pub fn read_picture(&self, name: &str) -> Result<Picture, PipelineError> {
        let bytes = self.read(name)?;
        Picture::decode(&bytes).map_err(|e| PipelineError::CorruptRun(format!("{name}: {e}")))
    }

    pub fn load_trace(&self) -> Result<Option<RunTrace>, PipelineError> {
        if !self.exists(TRACE_FILE) {
            return Ok(None);
        }
        let trace: RunTrace = self.read_json(TRACE_FILE)?;
        let problems = trace.violations();
        if !problems.is_empty() {
            return Err(PipelineError::CorruptRun(format!("{TRACE_FILE}: {}", problems.join("; "))));
        }
        Ok(Some(trace))
    }

    pub fn save_trace(&self, trace: &RunTrace) -> Result<(), PipelineError> {
        let mut text = serde_json::to_string_pretty(trace).expect("trace serializes");
        text.push('\n');
        let path = self.path(TRACE_FILE);
        write_atomic(&path, text.as_bytes()).map_err(|e| PipelineError::io(&path, e))
    }

    /// Records the input on first use; afterwards checks that the same input is being used.
    pub fn bind_input(&self, input: &ProductInput) -> Result<(), PipelineError> {
        let record = InputRecord::of(input);
        if self.exists(INPUT_FILE) {
            let existing: InputRecord = self.read_json(INPUT_FILE)?;
            if existing != record {
                return Err(PipelineError::CorruptRun(format!(
                    "run directory belongs to a different input ({:?})",
                    existing.product_name
                )));
            }
        }
        self.write(PACKSHOT_FILE, input.packshot.png())?;
        if let Some(r) = &input.reference {
            self.write(REFERENCE_FILE, r.png())?;
        }
        self.write_doc(INPUT_FILE, &record).map(drop)
    }

    /// Rebuilds the input a run directory was created from.
    pub fn load_input(&self) -> Result<ProductInput, PipelineError> {
        let record: InputRecord = self.read_json(INPUT_FILE)?;
        let packshot = self.read_picture(PACKSHOT_FILE)?;
        let check = |name: &str, pic: &Picture, want: &str| {
            if pic.digest() == want {
                Ok(())
            } else {
                Err(PipelineError::CorruptRun(format!("{name} does not match {INPUT_FILE}")))
            }
        };
        check(PACKSHOT_FILE, &packshot, &record.packshot_digest)?;
        let mut input = ProductInput::new(packshot, record.product_name)
            .map_err(|e| PipelineError::CorruptRun(e.to_string()))?;
        input.user_intent = record.user_intent;
        if let Some(want) = &record.reference_digest {
            let reference = self.read_picture(REFERENCE_FILE)?;
            check(REFERENCE_FILE, &reference, want)?;
            input.reference = Some(reference);
        }
        Ok(input)
    }
}

/// Writes every artifact of `state` plus the trace. Existing files with
/// identical content are left untouched, so repeating the call is harmless.
pub fn persist_state(state: &PipelineState, trace: &RunTrace, run_dir: &Path) -> Result<(), PipelineError> {
    let store = RunStore::new(run_dir);
    if let Some(t) = &state.transfer {
        store.write_doc(TRANSFER_FILE, t)?;
    }
    if let Some(a) = &state.reference_analysis {
        store.write(ANALYSIS_FILE, a.as_bytes())?;
    }
    for rec in &state.history {
        store.write_doc(&framework_file(rec.iteration), &rec.framework)?;
        store.write_doc(&plan_file(rec.iteration), &rec.plan)?;
        store.write_doc(&prompts_file(rec.iteration), &rec.prompt_set)?;
        if !store.exists(&collage_file_name(rec.iteration)) {
            return Err(PipelineError::CorruptRun(format!(
                "collage for iteration {} is missing",
                rec.iteration
            )));
        }
        if let Some(c) = &rec.critique {
            store.write_doc(&critique_file(rec.iteration), c)?;
        }
    }
    store.save_trace(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::picture::testing::packshot;

    #[test]
    fn second_lock_is_refused_until_release() {
        let dir = tempfile::tempdir().unwrap();
        let first = RunLock::acquire(dir.path()).unwrap();
        assert!(matches!(RunLock::acquire(dir.path()), Err(PipelineError::Locked(_))));
        drop(first);
        assert!(!dir.path().join(LOCK_FILE).exists());
        RunLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn input_round_trips_and_mismatch_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        let input = ProductInput::new(packshot(64), "Cream").unwrap().with_intent("gift set");
        store.bind_input(&input).unwrap();
        let back = store.load_input().unwrap();
        assert_eq!(back.name, "Cream");
        assert_eq!(back.user_intent.as_deref(), Some("gift set"));
        assert_eq!(back.packshot, input.packshot);
        store.bind_input(&input).unwrap();
        let other = ProductInput::new(packshot(64), "Balm").unwrap();
        assert!(matches!(store.bind_input(&other), Err(PipelineError::CorruptRun(_))));
    }

    #[test]
    fn missing_artifact_is_corrupt_run() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        assert!(matches!(store.read("plan_iter0.json"), Err(PipelineError::CorruptRun(_))));
    }
}
