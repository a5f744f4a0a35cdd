//! Shared fixtures for the benchmarks.

use furuta_core::{EpisodeSpec, LoadedConfig, PolicyKind};

/// Bundled config with its LQR gain.
pub fn bundled() -> (LoadedConfig, [f64; 4]) {
    let loaded = LoadedConfig::bundled();
    let k = loaded.config.design().expect("bundled design succeeds").k;
    (loaded, k)
}

/// The default 10 s episode for `policy`.
pub fn episode(policy: PolicyKind) -> EpisodeSpec {
    let (loaded, k) = bundled();
    loaded
        .config
        .episode_spec(&loaded.params, k, policy)
        .expect("bundled episode spec is valid")
}
