//! HTTP middleware over an ingested catalog, plus the pieces of the `divex`
//! command line that tests drive directly.

mod api;
mod cache;
pub mod error;
mod params;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use divex_core::catalog::store::load_catalog;
use divex_core::explore::{DEFAULT_TAU, DEFAULT_TOP_N};
use tokio::net::TcpListener;

pub use api::{router, AppState};
pub use cache::FeaturemapCache;

pub const DEFAULT_K: usize = 20;
pub const DEFAULT_THUMB_MAX_EDGE: u32 = 256;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub catalog_dir: PathBuf,
    pub bind: String,
    pub thumb_max_edge: u32,
    /// Seed for featuremaps built on request.
    pub som_seed: u64,
    pub default_k: usize,
    pub default_top_n: usize,
    pub default_tau: f64,
}

impl ServiceConfig {
    pub fn new(catalog_dir: impl Into<PathBuf>, bind: impl Into<String>) -> Self {
        ServiceConfig {
            catalog_dir: catalog_dir.into(),
            bind: bind.into(),
            thumb_max_edge: DEFAULT_THUMB_MAX_EDGE,
            som_seed: 0,
            default_k: DEFAULT_K,
            default_top_n: DEFAULT_TOP_N,
            default_tau: DEFAULT_TAU,
        }
    }
}

/// Loads the catalog and prepares shared request state. A `som_seed` of
/// `None` adopts the seed recorded at ingest.
pub fn load_state(
    mut config: ServiceConfig,
    som_seed: Option<u64>,
) -> anyhow::Result<Arc<AppState>> {
    anyhow::ensure!(config.thumb_max_edge > 0, "thumbMaxEdge must be positive");
    anyhow::ensure!(
        config.default_k > 0 && config.default_top_n > 0,
        "default k and topN must be positive"
    );
    anyhow::ensure!(
        (0.0..=1.0).contains(&config.default_tau),
        "default tau must lie in [0, 1]"
    );
    let stored = load_catalog(&config.catalog_dir)
        .with_context(|| format!("loading catalog {}", config.catalog_dir.display()))?;
    config.som_seed = som_seed.unwrap_or(stored.seed);
    let maps = if config.som_seed == stored.seed {
        FeaturemapCache::preloaded(stored.featuremaps, stored.seed)
    } else {
        FeaturemapCache::default()
    };
    Ok(Arc::new(AppState {
        snapshot: Arc::new(stored.snapshot),
        config,
        maps,
    }))
}

/// Binds `state.config.bind` and serves until `shutdown` resolves.
/// `on_bound` receives the actual address (useful with port 0).
pub async fn serve(
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
    on_bound: impl FnOnce(SocketAddr),
) -> anyhow::Result<()> {
    let listener = TcpListener::bind(&state.config.bind)
        .await
        .with_context(|| format!("binding {}", state.config.bind))?;
    let addr = listener.local_addr()?;
    tracing::info!(%addr, videos = state.snapshot.video_count(), "serving");
    on_bound(addr);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
        .context("server failed")
}
