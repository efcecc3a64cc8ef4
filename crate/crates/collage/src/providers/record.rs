//! Call recording: request/response digests for the run trace, and per-task
//! call counts for tests.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{
    ChatProvider, ChatRequest, EmbeddingProvider, GeneratedImage, ImageGenRequest, ImageProvider,
    ProviderError,
};
use crate::picture::{sha256_hex, Picture};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub capability: String,
    pub task: String,
    pub request_digest: String,
    /// Absent when the call failed.
    pub response_digest: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct CallLog {
    records: Arc<Mutex<Vec<CallRecord>>>,
}

impl CallLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, record: CallRecord) {
        self.records.lock().expect("call log").push(record);
    }

    pub fn snapshot(&self) -> Vec<CallRecord> {
        self.records.lock().expect("call log").clone()
    }

    pub fn len(&self) -> usize {
        self.records.lock().expect("call log").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count(&self, capability: &str) -> usize {
        self.records.lock().expect("call log").iter().filter(|r| r.capability == capability).count()
    }

    pub fn count_task(&self, task: &str) -> usize {
        self.records.lock().expect("call log").iter().filter(|r| r.task == task).count()
    }
}

/// Wraps a provider and appends one [`CallRecord`] per call to a shared log.
pub struct Recorded<P: ?Sized> {
    log: CallLog,
    inner: Arc<P>,
}

impl<P: ?Sized> Recorded<P> {
    pub fn new(inner: Arc<P>, log: CallLog) -> Self {
        Self { log, inner }
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for Recorded<P> {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let out = self.inner.complete(request);
        self.log.push(CallRecord {
            capability: "chat".into(),
            task: request.task.clone(),
            request_digest: request.digest(),
            response_digest: out.as_ref().ok().map(|t| sha256_hex(t.as_bytes())),
        });
        out
    }
}

impl<P: ImageProvider + ?Sized> ImageProvider for Recorded<P> {
    fn generate(&self, request: &ImageGenRequest) -> Result<GeneratedImage, ProviderError> {
        let out = self.inner.generate(request);
        self.log.push(CallRecord {
            capability: "image".into(),
            task: "GENERATE".into(),
            request_digest: request.digest(),
            response_digest: out.as_ref().ok().map(|g| g.image.digest().to_string()),
        });
        out
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Recorded<P> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn embed(&self, image: &Picture) -> Result<Vec<f64>, ProviderError> {
        let out = self.inner.embed(image);
        self.log.push(CallRecord {
            capability: "embed".into(),
            task: "EMBED".into(),
            request_digest: image.digest().to_string(),
            response_digest: out.as_ref().ok().map(|v| {
                let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
                sha256_hex(&bytes)
            }),
        });
        out
    }
}
