//! Run manifests: enough metadata to reproduce a run from its output
//! directory. The manifest carries the wall clock and is therefore the one
//! file excluded from byte-identity comparisons between repeated runs.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Result;

fn config_fingerprint(dir: &Path) -> u64 {
    // FNV-1a over the archived config copy
    match std::fs::read(dir.join("config.toml")) {
        Ok(bytes) => {
            let mut h: u64 = 0xcbf2_9ce4_8422_2325;
            for b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100_0000_01b3);
            }
            h
        }
        Err(_) => 0,
    }
}

pub fn write(out: &Path, seed: u64, config: &Option<PathBuf>, elapsed: Duration) -> Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let manifest = format!(
        "version = \"{}\"\nseed = {}\nconfig_source = \"{}\"\nconfig_fingerprint = \"{:016x}\"\ncommand = \"{}\"\nwall_clock_s = {:.3}\n",
        env!("CARGO_PKG_VERSION"),
        seed,
        config
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "<built-in defaults>".to_string()),
        config_fingerprint(out),
        args.join(" ").replace('"', "'"),
        elapsed.as_secs_f64(),
    );
    std::fs::write(out.join("manifest.toml"), manifest)?;
    Ok(())
}
