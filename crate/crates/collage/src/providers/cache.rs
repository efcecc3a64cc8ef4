use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use super::{embed_image, EmbeddingProvider, EmbeddingVector, ProviderError};
use crate::picture::Picture;

/// Embedding provider wrapper that memoizes results by image content digest,
/// so identical panels cost one provider call.
pub struct CachedEmbedder {
    inner: Arc<dyn EmbeddingProvider>,
    cache: RwLock<HashMap<String, EmbeddingVector>>,
    misses: AtomicUsize,
}

impl CachedEmbedder {
    pub fn new(inner: Arc<dyn EmbeddingProvider>) -> Self {
        Self { inner, cache: RwLock::new(HashMap::new()), misses: AtomicUsize::new(0) }
    }

    pub fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    pub fn embed(&self, image: &Picture) -> Result<EmbeddingVector, ProviderError> {
        if let Some(v) = self.cache.read().expect("cache lock").get(image.digest()) {
            return Ok(v.clone());
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let v = embed_image(self.inner.as_ref(), image)?;
        // concurrent misses on the same digest store identical vectors
        self.cache.write().expect("cache lock").insert(image.digest().to_string(), v.clone());
        Ok(v)
    }

    /// Number of calls that reached the wrapped provider.
    pub fn provider_calls(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::picture::testing::packshot;
    use crate::providers::mock::MockEmbedder;

    #[test]
    fn identical_panels_hit_provider_once() {
        let cache = CachedEmbedder::new(Arc::new(MockEmbedder::default()));
        let p = packshot(64);
        let copies: Vec<Picture> = (0..4).map(|_| Picture::decode(p.png()).unwrap()).collect();
        let vecs: Vec<_> = copies.iter().map(|c| cache.embed(c).unwrap()).collect();
        assert_eq!(cache.provider_calls(), 1);
        assert!(vecs.windows(2).all(|w| w[0] == w[1]));
    }
}
