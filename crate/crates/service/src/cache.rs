//! Featuremap cache with single-flight construction.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use divex_core::catalog::CatalogSnapshot;
use divex_core::explore::{build_featuremap, Featuremap, FeaturemapRequest, DEFAULT_TOP_N};
use divex_core::features::FeatureKind;
use divex_core::som::LayoutMode;

use crate::error::ApiError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MapKey {
    pub concept: String,
    pub source: String,
    pub top_n: usize,
    pub organization: LayoutMode,
    pub measure: FeatureKind,
    pub seed: u64,
}

impl MapKey {
    fn of(req: &FeaturemapRequest) -> Self {
        MapKey {
            concept: req.concept.trim().to_lowercase(),
            source: req.source.clone(),
            top_n: req.top_n,
            organization: req.organization,
            measure: req.measure.kind(),
            seed: req.seed,
        }
    }
}

type Slot = Arc<OnceLock<Result<Arc<Featuremap>, ApiError>>>;

/// Concurrent requests for the same map wait on one build; results,
/// including errors, are kept for the lifetime of the snapshot.
#[derive(Default)]
pub struct FeaturemapCache {
    slots: Mutex<HashMap<MapKey, Slot>>,
    builds: AtomicUsize,
}

impl FeaturemapCache {
    /// Seeds the cache with maps precomputed at ingest (som layout on
    /// concept vectors, default size).
    pub fn preloaded(maps: Vec<Featuremap>, seed: u64) -> Self {
        let cache = FeaturemapCache::default();
        {
            let mut slots = cache.slots.lock().expect("fresh mutex");
            for map in maps {
                let key = MapKey {
                    concept: map.concept.clone(),
                    source: map.source.clone(),
                    top_n: DEFAULT_TOP_N,
                    organization: map.mode,
                    measure: map.measure,
                    seed,
                };
                let slot = OnceLock::new();
                let _ = slot.set(Ok(Arc::new(map)));
                slots.insert(key, Arc::new(slot));
            }
        }
        cache
    }

    /// Number of maps built (not served from cache) so far.
    pub fn builds(&self) -> usize {
        self.builds.load(Ordering::Relaxed)
    }

    pub fn get_or_build(
        &self,
        snapshot: &CatalogSnapshot,
        req: &FeaturemapRequest,
    ) -> Result<Arc<Featuremap>, ApiError> {
        let slot = {
            let mut slots = self.slots.lock().unwrap_or_else(|p| p.into_inner());
            slots.entry(MapKey::of(req)).or_default().clone()
        };
        slot.get_or_init(|| {
            self.builds.fetch_add(1, Ordering::Relaxed);
            build_featuremap(snapshot, req)
                .map(Arc::new)
                .map_err(ApiError::from)
        })
        .clone()
    }
}
