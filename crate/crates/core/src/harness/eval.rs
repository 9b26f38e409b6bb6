//! Evaluation protocols: frozen-policy mission runs averaged over fire
//! realizations, and the placement baselines (uniform / Gaussian-around-
//! ignition, each with and without the learned repositioning).

use std::path::Path;

use rand_distr::{Distribution, Normal};

use super::to_physical_action;
use crate::config::ScenarioConfig;
use crate::env::{Action, EpisodeLog, Mission, ThresholdTable, World};
use crate::error::Result;
use crate::learner::Mlp;
use crate::rng::{stream, SeedTree};

/// How tracking UAVs are driven during an evaluation episode.
#[derive(Clone, Copy)]
pub enum TrackingControl<'a> {
    /// Frozen policy, no exploration noise.
    Policy(&'a Mlp),
    /// Stay where placed (placement baselines).
    Static,
}

/// Initial swarm placement.
#[derive(Clone, Copy, Debug)]
pub enum Placement {
    /// Keep the episode's uniform draw.
    Uniform,
    /// Cluster around the ignition point with the given per-axis std (m).
    AroundIgnition { std: f64 },
}

/// Per-realization mission outcome.
#[derive(Clone, Copy, Debug)]
pub struct RealizationSummary {
    pub realization: usize,
    pub mean_coverage: f64,
    pub coverage_at_cdf_slot: f64,
    pub cost_at_cdf_slot: f64,
    /// UAVs that entered charging mode.
    pub switches: usize,
    /// Of those, how many docked at a station.
    pub arrivals: usize,
    /// Of those, how many ran out of energy mid-flight.
    pub exhaustions: usize,
}

/// Averaged series plus per-realization records.
#[derive(Clone, Debug)]
pub struct EvalSummary {
    pub slots: usize,
    pub cdf_slot: usize,
    pub mean_cost: Vec<f64>,
    pub mean_coverage: Vec<f64>,
    pub mean_excess: Vec<f64>,
    pub realizations: Vec<RealizationSummary>,
}

impl EvalSummary {
    pub fn mean_coverage_at(&self, slot: usize) -> f64 {
        self.mean_coverage[slot.min(self.mean_coverage.len() - 1)]
    }

    /// Sorted per-realization coverage at the CDF slot (an empirical CDF).
    pub fn coverage_cdf(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.realizations.iter().map(|r| r.coverage_at_cdf_slot).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

/// Run one full mission episode and log every slot.
pub fn run_mission_episode(
    cfg: &ScenarioConfig,
    seeds: &SeedTree,
    tracking: TrackingControl<'_>,
    charging: Option<&Mlp>,
    table: Option<&ThresholdTable>,
    placement: Placement,
) -> Result<(EpisodeLog, usize, usize, usize)> {
    let mission = if table.is_some() && !cfg.scenario.unlimited_energy {
        Mission::Mixed
    } else {
        Mission::Tracking
    };
    let mut world = World::new(cfg, seeds, mission)?;
    world.threshold = table.cloned();

    if let Placement::AroundIgnition { std } = placement {
        let mut init_rng = seeds.stream(&[stream::INIT]);
        let normal = Normal::new(0.0, std).expect("finite std");
        let ignition = world.front.ignition;
        for u in world.uavs.iter_mut() {
            u.position.x = (ignition.x + normal.sample(&mut init_rng)).clamp(0.0, cfg.scenario.region_size);
            u.position.y = (ignition.y + normal.sample(&mut init_rng)).clamp(0.0, cfg.scenario.region_size);
        }
    }

    let m_all = world.uavs.len();
    let mut log = EpisodeLog::default();
    let mut switched = vec![false; m_all];
    let mut arrived = vec![false; m_all];
    let mut exhausted = vec![false; m_all];

    for _ in 0..cfg.scenario.episode_slots {
        let mut actions = vec![Action::default(); m_all];
        for m in 0..m_all {
            match world.uavs[m].mode {
                crate::airframe::UavMode::Tracking => {
                    if let TrackingControl::Policy(actor) = tracking {
                        let state = world.tracking_state(m)?;
                        let norm = actor.forward(&state)?;
                        actions[m] = to_physical_action(cfg, &norm);
                    } else {
                        // placement baseline: hold position, transmit at
                        // full power
                        actions[m] = Action { accel: crate::geom::Vec3::ZERO, power: cfg.cellfree.max_power };
                    }
                }
                crate::airframe::UavMode::Charging => {
                    if let Some(actor) = charging {
                        let state = world.charging_state(m)?;
                        let norm = actor.forward(&state)?;
                        actions[m] = to_physical_action(cfg, &norm);
                    }
                }
                crate::airframe::UavMode::Docked => {}
            }
        }
        let out = world.step(&actions)?;
        for m in 0..m_all {
            if world.uavs[m].mode == crate::airframe::UavMode::Charging && !switched[m] {
                switched[m] = true;
            }
            if out.arrived[m] {
                arrived[m] = true;
            }
            if out.exhausted[m] {
                exhausted[m] = true;
            }
        }
        log.push(out.record);
    }
    let switches = switched.iter().filter(|&&x| x).count();
    let arrivals = (0..m_all).filter(|&m| switched[m] && arrived[m]).count();
    let exhaustions = (0..m_all).filter(|&m| exhausted[m]).count();
    Ok((log, switches, arrivals, exhaustions))
}

/// Evaluate frozen policies across independent fire realizations.
pub fn evaluate(
    cfg: &ScenarioConfig,
    tracking_actor: Option<&Mlp>,
    charging_actor: Option<&Mlp>,
    table: Option<&ThresholdTable>,
    realizations: usize,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<EvalSummary> {
    cfg.validate()?;
    let tree = SeedTree::new(seed);
    let slots = cfg.scenario.episode_slots;
    let cdf_slot = cfg.eval.cdf_slot.min(slots.saturating_sub(1));
    let mut mean_cost = vec![0.0; slots];
    let mut mean_coverage = vec![0.0; slots];
    let mut mean_excess = vec![0.0; slots];
    let mut summaries = Vec::with_capacity(realizations);

    for r in 0..realizations {
        let seeds = tree.child(&[stream::EVAL, r as u64]);
        let control = match tracking_actor {
            Some(a) => TrackingControl::Policy(a),
            None => TrackingControl::Static,
        };
        let (log, switches, arrivals, exhaustions) =
            run_mission_episode(cfg, &seeds, control, charging_actor, table, Placement::Uniform)?;
        let mut cov_sum = 0.0;
        for (n, rec) in log.records.iter().enumerate() {
            mean_cost[n] += rec.cost / realizations as f64;
            mean_coverage[n] += rec.coverage / realizations as f64;
            let active: Vec<f64> = rec.excess.iter().copied().filter(|e| *e != 0.0).collect();
            let excess = if active.is_empty() { 0.0 } else { active.iter().sum::<f64>() / active.len() as f64 };
            mean_excess[n] += excess / realizations as f64;
            cov_sum += rec.coverage;
        }
        summaries.push(RealizationSummary {
            realization: r,
            mean_coverage: cov_sum / slots as f64,
            coverage_at_cdf_slot: log.records[cdf_slot].coverage,
            cost_at_cdf_slot: log.records[cdf_slot].cost,
            switches,
            arrivals,
            exhaustions,
        });
    }
    let summary = EvalSummary { slots, cdf_slot, mean_cost, mean_coverage, mean_excess, realizations: summaries };
    if let Some(dir) = out_dir {
        write_eval(dir, &summary)?;
    }
    Ok(summary)
}

fn write_eval(dir: &Path, s: &EvalSummary) -> Result<()> {
    use std::io::Write;
    std::fs::create_dir_all(dir)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("series.tsv"))?);
    writeln!(f, "slot\tmean_cost\tmean_coverage\tmean_excess")?;
    for n in 0..s.slots {
        writeln!(f, "{}\t{:.9e}\t{:.9e}\t{:.9e}", n + 1, s.mean_cost[n], s.mean_coverage[n], s.mean_excess[n])?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("realizations.tsv"))?);
    writeln!(f, "realization\tmean_coverage\tcoverage_at_cdf_slot\tcost_at_cdf_slot\tswitches\tarrivals\texhaustions")?;
    for r in &s.realizations {
        writeln!(
            f,
            "{}\t{:.9e}\t{:.9e}\t{:.9e}\t{}\t{}\t{}",
            r.realization,
            r.mean_coverage,
            r.coverage_at_cdf_slot,
            r.cost_at_cdf_slot,
            r.switches,
            r.arrivals,
            r.exhaustions
        )?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("coverage_cdf.tsv"))?);
    writeln!(f, "coverage\tcumulative_probability")?;
    let cdf = s.coverage_cdf();
    for (i, v) in cdf.iter().enumerate() {
        writeln!(f, "{:.9e}\t{:.9e}", v, (i + 1) as f64 / cdf.len() as f64)?;
    }
    Ok(())
}

/// One benchmark arm's averaged series.
#[derive(Clone, Debug)]
pub struct ArmSeries {
    pub name: &'static str,
    pub mean_cost: Vec<f64>,
    pub mean_coverage: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct BenchmarkSummary {
    pub slots: usize,
    pub arms: Vec<ArmSeries>,
}

impl BenchmarkSummary {
    pub fn arm(&self, name: &str) -> Option<&ArmSeries> {
        self.arms.iter().find(|a| a.name == name)
    }
}

/// Compare static placements against the learned policy under both uniform
/// and ignition-clustered initializations. Runs with unlimited energy so the
/// arms differ only in placement and control.
pub fn benchmark(
    cfg: &ScenarioConfig,
    tracking_actor: &Mlp,
    realizations: usize,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<BenchmarkSummary> {
    let mut cfg = cfg.clone();
    cfg.scenario.unlimited_energy = true;
    cfg.validate()?;
    let slots = cfg.scenario.episode_slots;
    let gaussian = Placement::AroundIgnition { std: 10f64.sqrt() };
    let arms: [(&'static str, bool, Placement); 4] = [
        ("uniform", false, Placement::Uniform),
        ("gaussian", false, gaussian),
        ("uniform_rl", true, Placement::Uniform),
        ("gaussian_rl", true, gaussian),
    ];
    let tree = SeedTree::new(seed);
    let mut out = Vec::with_capacity(4);
    for (name, learned, placement) in arms {
        let mut mean_cost = vec![0.0; slots];
        let mut mean_coverage = vec![0.0; slots];
        for r in 0..realizations {
            // same fire/layout seeds across arms so the comparison is paired
            let seeds = tree.child(&[stream::EVAL, r as u64]);
            let control = if learned {
                TrackingControl::Policy(tracking_actor)
            } else {
                TrackingControl::Static
            };
            let (log, _, _, _) = run_mission_episode(&cfg, &seeds, control, None, None, placement)?;
            for (n, rec) in log.records.iter().enumerate() {
                mean_cost[n] += rec.cost / realizations as f64;
                mean_coverage[n] += rec.coverage / realizations as f64;
            }
        }
        out.push(ArmSeries { name, mean_cost, mean_coverage });
    }
    let summary = BenchmarkSummary { slots, arms: out };
    if let Some(dir) = out_dir {
        use std::io::Write;
        std::fs::create_dir_all(dir)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("benchmark.tsv"))?);
        write!(f, "slot")?;
        for a in &summary.arms {
            write!(f, "\tcost_{}\tcoverage_{}", a.name, a.name)?;
        }
        writeln!(f)?;
        for n in 0..slots {
            write!(f, "{}", n + 1)?;
            for a in &summary.arms {
                write!(f, "\t{:.9e}\t{:.9e}", a.mean_cost[n], a.mean_coverage[n])?;
            }
            writeln!(f)?;
        }
    }
    Ok(summary)
}

/// Expected coverage of `m` uniformly placed cameras at the mean altitude:
/// the FoV-to-region area ratio, summed over the swarm.
pub fn analytic_random_coverage(cfg: &ScenarioConfig, m: usize) -> f64 {
    let mean_h = 0.5 * (cfg.scenario.altitude_min + cfg.scenario.altitude_max);
    let t1 = cfg.camera.half_angle1_deg.to_radians().tan();
    let t2 = cfg.camera.half_angle2_deg.to_radians().tan();
    m as f64 * 4.0 * mean_h * mean_h * t1 * t2 / (cfg.scenario.region_size * cfg.scenario.region_size)
}
