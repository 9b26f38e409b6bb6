//! Distance-binned energy-need table driving the tracking-to-charging
//! switch. Built from evaluation episodes of a trained charging policy:
//! each bin keeps the worst observed energy to reach a station from that
//! starting distance; queries scale by a safety factor.

use std::io::Write;
use std::path::Path;

use crate::error::{CoreError, Result};

/// Safety multiplier applied at query time.
pub const SWITCH_SAFETY_FACTOR: f64 = 1.2;

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdTable {
    pub bin_width: f64,
    /// Worst-case energy (J) per distance bin, monotone nondecreasing.
    pub max_energy: Vec<f64>,
}

impl ThresholdTable {
    /// Bin `(distance, consumed energy)` samples, take per-bin maxima,
    /// interpolate empty bins from their nonempty neighbors, and enforce
    /// monotonicity with a running maximum (a farther station can never
    /// need less energy).
    pub fn from_samples(samples: &[(f64, f64)], bin_width: f64, bins: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(CoreError::InvalidConfig("no samples for the threshold table".into()));
        }
        if bin_width <= 0.0 || bins == 0 {
            return Err(CoreError::InvalidConfig("bad threshold-table binning".into()));
        }
        let mut max_energy = vec![f64::NAN; bins];
        for &(d, e) in samples {
            let idx = ((d / bin_width) as usize).min(bins - 1);
            if max_energy[idx].is_nan() || e > max_energy[idx] {
                max_energy[idx] = e;
            }
        }
        // fill empty bins by linear interpolation between nonempty ones,
        // extending flat at both ends
        let filled: Vec<(usize, f64)> =
            max_energy.iter().enumerate().filter(|(_, v)| !v.is_nan()).map(|(i, v)| (i, *v)).collect();
        for i in 0..bins {
            if max_energy[i].is_nan() {
                let before = filled.iter().rev().find(|(j, _)| *j < i);
                let after = filled.iter().find(|(j, _)| *j > i);
                max_energy[i] = match (before, after) {
                    (Some(&(j0, v0)), Some(&(j1, v1))) => {
                        v0 + (v1 - v0) * (i - j0) as f64 / (j1 - j0) as f64
                    }
                    (Some(&(_, v0)), None) => v0,
                    (None, Some(&(_, v1))) => v1,
                    (None, None) => unreachable!("samples is nonempty"),
                };
            }
        }
        let mut run = 0.0f64;
        for v in max_energy.iter_mut() {
            run = run.max(*v);
            *v = run;
        }
        Ok(Self { bin_width, max_energy })
    }

    fn lookup(&self, distance: f64) -> f64 {
        let idx = ((distance / self.bin_width) as usize).min(self.max_energy.len() - 1);
        self.max_energy[idx]
    }

    /// Energy level below which a UAV at `distance` from its nearest station
    /// should head home.
    pub fn threshold(&self, distance: f64, safety: f64) -> f64 {
        safety * self.lookup(distance)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "# threshold table: worst-case energy to reach a station")?;
        writeln!(f, "# columns: bin_lo_m\tbin_hi_m\tmax_energy_j")?;
        // shortest round-trip float formatting so read_from reproduces the
        // table bit-exactly
        for (i, v) in self.max_energy.iter().enumerate() {
            writeln!(f, "{}\t{}\t{}", i as f64 * self.bin_width, (i + 1) as f64 * self.bin_width, v)?;
        }
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut bin_width = None;
        let mut max_energy = Vec::new();
        for line in text.lines() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(CoreError::BadFormat(format!("bad table row: {line}")));
            }
            let lo: f64 = cols[0].parse().map_err(|_| CoreError::BadFormat(line.into()))?;
            let hi: f64 = cols[1].parse().map_err(|_| CoreError::BadFormat(line.into()))?;
            let v: f64 = cols[2].parse().map_err(|_| CoreError::BadFormat(line.into()))?;
            if bin_width.is_none() {
                bin_width = Some(hi - lo);
            }
            max_energy.push(v);
        }
        let bin_width = bin_width.ok_or_else(|| CoreError::BadFormat("empty table".into()))?;
        if max_energy.is_empty() {
            return Err(CoreError::BadFormat("empty table".into()));
        }
        Ok(Self { bin_width, max_energy })
    }
}
