//! Shared scenario builders for the kernel benchmarks.

use emberwatch_core::config::ScenarioConfig;

/// Reference scenario trimmed for quick per-iteration setup.
pub fn bench_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.scenario.num_uavs = 3;
    cfg.scenario.num_aps = 10;
    cfg.scenario.unlimited_energy = true;
    cfg
}
