//! Experiment orchestration: seeded training loops for both mission stages,
//! threshold-table construction, evaluation/benchmark protocols and the
//! plain-text metric emitters the CLI exposes.

pub mod checkpoint;
pub mod eval;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use eval::{benchmark, evaluate, BenchmarkSummary, EvalSummary};

use std::path::Path;

use rand::Rng;

use crate::cellfree::{deterministic_sinr, mmse_sinr_exact, spectral_efficiency};
use crate::cellfree::NoiseModel;
use crate::channel::{draw_split, ChannelParams, LinkGrid};
use crate::config::{PeerBehavior, ScenarioConfig};
use crate::env::{assign_station, Action, Mission, ThresholdTable, World};
use crate::error::{CoreError, Result};
use crate::fire::{advance_front, rasterize_density, sample_wind, FireFront, FrontGeometry, SpreadParams, WindState};
use crate::geom::{Vec2, Vec3};
use crate::learner::{denormalize, Mlp, ReplayBuffer, Td3, Td3Config};
use crate::rng::{stream, SeedTree};

/// Which policy is being trained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Tracking,
    Charging,
}

impl Stage {
    pub fn state_dim(&self) -> usize {
        match self {
            Stage::Tracking => World::TRACKING_STATE_DIM,
            Stage::Charging => World::CHARGING_STATE_DIM,
        }
    }
}

/// One training episode's summary.
#[derive(Clone, Copy, Debug)]
pub struct EpisodeStat {
    pub episode: usize,
    pub reward: f64,
    pub critic_loss: f64,
    pub slots: usize,
    pub arrived: bool,
}

pub struct TrainOutcome {
    pub td3: Td3,
    pub curve: Vec<EpisodeStat>,
}

/// Map a normalized `[-1, 1]^4` action onto physical acceleration and power.
pub fn to_physical_action(cfg: &ScenarioConfig, norm: &[f64]) -> Action {
    let a = cfg.scenario.max_accel;
    Action {
        accel: Vec3::new(
            norm[0].clamp(-1.0, 1.0) * a,
            norm[1].clamp(-1.0, 1.0) * a,
            norm[2].clamp(-1.0, 1.0) * a,
        ),
        power: denormalize(norm[3], 0.0, cfg.cellfree.max_power),
    }
}

fn random_normalized_action<R: Rng>(rng: &mut R) -> Vec<f64> {
    (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Train one stage from scratch or resume from a checkpoint. The curve is
/// appended to `<out>/training_curve.tsv` and the actor saved to
/// `<out>/actor.bin` when an output directory is given.
pub fn train(
    cfg: &ScenarioConfig,
    stage: Stage,
    seed: u64,
    out_dir: Option<&Path>,
    resume: Option<&Path>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let td3_cfg = Td3Config::from_section(&cfg.td3, stage.state_dim(), 4);
    let tree = SeedTree::new(seed).child(&[stream::POLICY]);

    let (mut td3, mut buffer, mut replay_rng, mut noise_rng, mut curve, start_episode) =
        match resume {
            Some(path) => {
                let ck = checkpoint::load_checkpoint(path, &td3_cfg)?;
                if ck.stage != stage {
                    return Err(CoreError::InvalidConfig("checkpoint is for the other stage".into()));
                }
                if ck.seed != seed {
                    return Err(CoreError::InvalidConfig(format!(
                        "checkpoint seed {} does not match run seed {seed}",
                        ck.seed
                    )));
                }
                (ck.td3, ck.buffer, ck.replay_rng, ck.noise_rng, ck.curve, ck.next_episode)
            }
            None => (
                Td3::new(td3_cfg.clone(), &tree),
                ReplayBuffer::new(cfg.td3.replay_capacity, stage.state_dim(), 4),
                tree.stream(&[stream::REPLAY]),
                tree.stream(&[stream::POLICY]),
                Vec::new(),
                0,
            ),
        };

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }

    for episode in start_episode..cfg.td3.train_episodes {
        let stat = match stage {
            Stage::Charging => run_charging_training_episode(
                cfg, seed, episode, &mut td3, &mut buffer, &mut replay_rng, &mut noise_rng,
            )?,
            Stage::Tracking => run_tracking_training_episode(
                cfg, seed, episode, &mut td3, &mut buffer, &mut replay_rng, &mut noise_rng,
            )?,
        };
        if !stat.reward.is_finite() || !stat.critic_loss.is_finite() || !td3.is_finite() {
            return Err(CoreError::NonFinite(format!("training diverged at episode {episode}")));
        }
        curve.push(stat);

        if let Some(dir) = out_dir {
            let every = cfg.td3.checkpoint_every;
            if every > 0 && (episode + 1) % every == 0 {
                let ck = Checkpoint {
                    stage,
                    seed,
                    next_episode: episode + 1,
                    td3: td3.clone(),
                    buffer: buffer.clone(),
                    replay_rng: replay_rng.clone(),
                    noise_rng: noise_rng.clone(),
                    curve: curve.clone(),
                };
                checkpoint::save_checkpoint(&dir.join(format!("checkpoint_{:06}.bin", episode + 1)), &ck)?;
            }
        }
    }

    if let Some(dir) = out_dir {
        crate::learner::model_io::save_mlp(&dir.join("actor.bin"), td3.actor())?;
        write_curve(&dir.join("training_curve.tsv"), &curve)?;
    }
    Ok(TrainOutcome { td3, curve })
}

#[allow(clippy::too_many_arguments)]
fn run_charging_training_episode(
    cfg: &ScenarioConfig,
    seed: u64,
    episode: usize,
    td3: &mut Td3,
    buffer: &mut ReplayBuffer,
    replay_rng: &mut rand_chacha::ChaCha12Rng,
    noise_rng: &mut rand_chacha::ChaCha12Rng,
) -> Result<EpisodeStat> {
    let ep_tree = SeedTree::new(seed).child(&[stream::EPISODE, episode as u64]);
    let mut world = World::new(cfg, &ep_tree, Mission::Charging)?;
    let mut peer_rng = ep_tree.stream(&[stream::PEER]);
    let m_all = world.uavs.len();
    let warmup = episode < cfg.td3.warmup_episodes;

    let mut state = world.charging_state(0)?;
    let mut total_reward = 0.0;
    let mut loss_acc = 0.0;
    let mut loss_count = 0usize;
    let mut slots = 0usize;
    let mut arrived = false;

    for _ in 0..cfg.td3.charging_episode_cap {
        let norm = if warmup {
            random_normalized_action(noise_rng)
        } else {
            td3.act(&state, cfg.td3.exploration_noise, noise_rng)?
        };
        let mut actions = vec![Action::default(); m_all];
        actions[0] = to_physical_action(cfg, &norm);
        // peers wander: uniform random accelerations, no transmission
        for slot_action in actions.iter_mut().skip(1) {
            let peer_norm = random_normalized_action(&mut peer_rng);
            *slot_action = to_physical_action(cfg, &peer_norm);
            slot_action.power = 0.0;
        }
        let out = world.step(&actions)?;
        let reward = out.rewards[0].total;
        let done = out.terminals[0];
        let next_state = world.charging_state(0)?;
        buffer.push(&state, &norm, reward, &next_state, done);
        state = next_state;
        total_reward += reward;
        slots += 1;

        if !warmup && buffer.len() >= cfg.td3.minibatch {
            let batch = buffer.sample(cfg.td3.minibatch, replay_rng);
            let diag = td3.update(&batch, replay_rng);
            loss_acc += diag.critic_loss;
            loss_count += 1;
        }
        if done {
            arrived = out.arrived[0];
            break;
        }
    }
    Ok(EpisodeStat {
        episode,
        reward: total_reward,
        critic_loss: if loss_count > 0 { loss_acc / loss_count as f64 } else { 0.0 },
        slots,
        arrived,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_tracking_training_episode(
    cfg: &ScenarioConfig,
    seed: u64,
    episode: usize,
    td3: &mut Td3,
    buffer: &mut ReplayBuffer,
    replay_rng: &mut rand_chacha::ChaCha12Rng,
    noise_rng: &mut rand_chacha::ChaCha12Rng,
) -> Result<EpisodeStat> {
    let ep_tree = SeedTree::new(seed).child(&[stream::EPISODE, episode as u64]);
    let mut tracking_cfg = cfg.clone();
    tracking_cfg.scenario.unlimited_energy = true;
    let mut world = World::new(&tracking_cfg, &ep_tree, Mission::Tracking)?;
    let mut peer_rng = ep_tree.stream(&[stream::PEER]);
    let m_all = world.uavs.len();
    let warmup = episode < cfg.td3.warmup_episodes;
    let store_all = cfg.td3.store_peer_transitions;

    let mut states: Vec<Vec<f64>> = (0..m_all).map(|m| world.tracking_state(m)).collect::<Result<_>>()?;
    let mut total_reward = 0.0;
    let mut loss_acc = 0.0;
    let mut loss_count = 0usize;
    let mut slots = 0usize;

    for _ in 0..cfg.td3.tracking_episode_slots {
        let mut norms: Vec<Vec<f64>> = Vec::with_capacity(m_all);
        for m in 0..m_all {
            let norm = if warmup {
                random_normalized_action(noise_rng)
            } else if m == 0 {
                td3.act(&states[m], cfg.td3.exploration_noise, noise_rng)?
            } else {
                match cfg.td3.peer_behavior {
                    PeerBehavior::Policy => td3.act(&states[m], cfg.td3.exploration_noise, &mut peer_rng)?,
                    PeerBehavior::Random => random_normalized_action(&mut peer_rng),
                    PeerBehavior::Static => vec![0.0; 4],
                }
            };
            norms.push(norm);
        }
        let actions: Vec<Action> = norms.iter().map(|n| to_physical_action(cfg, n)).collect();
        let out = world.step(&actions)?;
        let next_states: Vec<Vec<f64>> =
            (0..m_all).map(|m| world.tracking_state(m)).collect::<Result<_>>()?;
        let stored = if store_all { m_all } else { 1 };
        for m in 0..stored {
            buffer.push(&states[m], &norms[m], out.rewards[m].total, &next_states[m], false);
        }
        total_reward += out.rewards[0].total;
        states = next_states;
        slots += 1;

        if !warmup && buffer.len() >= cfg.td3.minibatch {
            let batch = buffer.sample(cfg.td3.minibatch, replay_rng);
            let diag = td3.update(&batch, replay_rng);
            loss_acc += diag.critic_loss;
            loss_count += 1;
        }
    }
    Ok(EpisodeStat {
        episode,
        reward: total_reward,
        critic_loss: if loss_count > 0 { loss_acc / loss_count as f64 } else { 0.0 },
        slots,
        arrived: false,
    })
}

pub fn write_curve(path: &Path, curve: &[EpisodeStat]) -> Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "episode\treward\tcritic_loss\tslots\tarrived")?;
    for st in curve {
        writeln!(
            f,
            "{}\t{:.9e}\t{:.9e}\t{}\t{}",
            st.episode, st.reward, st.critic_loss, st.slots, st.arrived as u8
        )?;
    }
    Ok(())
}

/// One evaluation episode of a frozen charging policy; returns the initial
/// distance to the assigned station, the energy consumed until arrival (or
/// exhaustion), and whether it arrived.
pub fn run_charging_eval_episode(
    cfg: &ScenarioConfig,
    actor: &Mlp,
    seeds: &SeedTree,
) -> Result<(f64, f64, bool)> {
    let mut world = World::new(cfg, seeds, Mission::Charging)?;
    let station = world.assignments[0].map(|i| world.stations[i]).expect("charging mission assigns");
    let start_distance = world.uavs[0].position.distance(station);
    let start_energy = world.uavs[0].energy;
    let m_all = world.uavs.len();
    let mut peer_rng = seeds.stream(&[stream::PEER]);
    let mut arrived = false;
    for _ in 0..cfg.td3.charging_episode_cap {
        let state = world.charging_state(0)?;
        let norm = actor.forward(&state)?;
        let mut actions = vec![Action::default(); m_all];
        actions[0] = to_physical_action(cfg, &norm);
        for slot_action in actions.iter_mut().skip(1) {
            let peer_norm = random_normalized_action(&mut peer_rng);
            *slot_action = to_physical_action(cfg, &peer_norm);
            slot_action.power = 0.0;
        }
        let out = world.step(&actions)?;
        if out.terminals[0] {
            arrived = out.arrived[0];
            break;
        }
    }
    let consumed = start_energy - world.uavs[0].energy;
    Ok((start_distance, consumed, arrived))
}

/// Build the switch-threshold table by evaluating a trained charging policy
/// over many episodes and keeping the worst observed energy per starting
/// distance. Episodes that never arrive are skipped (the safety factor at
/// query time covers them).
pub fn build_threshold_table(
    cfg: &ScenarioConfig,
    actor: &Mlp,
    episodes: usize,
    seed: u64,
) -> Result<ThresholdTable> {
    let tree = SeedTree::new(seed);
    let mut samples = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let seeds = tree.child(&[stream::EVAL, e as u64]);
        let (distance, consumed, arrived) = run_charging_eval_episode(cfg, actor, &seeds)?;
        if arrived {
            samples.push((distance, consumed));
        }
    }
    if samples.is_empty() {
        return Err(CoreError::InvalidConfig(
            "threshold table: the charging policy never reached a station".into(),
        ));
    }
    let max_distance = cfg.scenario.region_size * 2.0f64.sqrt() + cfg.scenario.altitude_max;
    let bins = 24usize;
    ThresholdTable::from_samples(&samples, max_distance / bins as f64, bins)
}

/// Fire-only simulation: per-slot perimeter and density snapshots.
pub fn simulate_fire(cfg: &ScenarioConfig, seed: u64, out_dir: &Path, stride: usize) -> Result<usize> {
    use std::io::Write;
    cfg.validate()?;
    let stride = stride.max(1);
    let tree = SeedTree::new(seed).child(&[stream::EPISODE, 0]);
    let mut layout_rng = tree.stream(&[stream::LAYOUT]);
    let mut wind_rng = tree.stream(&[stream::WIND]);
    let s = &cfg.scenario;
    let region = s.region_size;
    let ignition_side = region * s.ignition_fraction;
    let lo = (region - ignition_side) / 2.0;
    let ignition = Vec2::new(
        layout_rng.gen_range(lo..lo + ignition_side),
        layout_rng.gen_range(lo..lo + ignition_side),
    );
    let mean_direction = cfg
        .fire
        .wind_direction_mean
        .unwrap_or_else(|| layout_rng.gen_range(0.0..std::f64::consts::TAU));
    let prior = WindState::from_priors(
        cfg.fire.wind_speed_mean,
        cfg.fire.wind_speed_std,
        mean_direction,
        cfg.fire.wind_direction_std,
    );
    let params = SpreadParams::new(cfg.fire.spread_rate, s.slot_duration)?;
    let geometry = FrontGeometry::from_config(&cfg.fire, region);

    let fronts_dir = out_dir.join("fronts");
    let density_dir = out_dir.join("density");
    std::fs::create_dir_all(&fronts_dir)?;
    std::fs::create_dir_all(&density_dir)?;

    let mut front = FireFront::ignite(ignition);
    let mut written = 0usize;
    for slot in 0..=s.episode_slots {
        if slot % stride == 0 {
            let mut f = std::io::BufWriter::new(std::fs::File::create(
                fronts_dir.join(format!("front_{slot:04}.txt")),
            )?);
            writeln!(f, "# slot {slot}")?;
            writeln!(f, "# vertices {}", front.points.len())?;
            for p in &front.points {
                writeln!(f, "{}\t{}", p.x, p.y)?;
            }
            let grid = rasterize_density(&front, region, cfg.fire.cell_size);
            let mut g = std::io::BufWriter::new(std::fs::File::create(
                density_dir.join(format!("density_{slot:04}.txt")),
            )?);
            writeln!(g, "# slot {slot}")?;
            writeln!(g, "# cell_size {}", grid.cell_size)?;
            writeln!(g, "# region {region}")?;
            writeln!(g, "# nx {} ny {}", grid.nx, grid.ny)?;
            for j in 0..grid.ny {
                let row: Vec<String> = (0..grid.nx).map(|i| format!("{}", grid.weight(i, j))).collect();
                writeln!(g, "{}", row.join(" "))?;
            }
            written += 1;
        }
        if slot < s.episode_slots {
            let wind = sample_wind(&prior, &mut wind_rng);
            front = advance_front(&front, &wind, &params, &geometry)?;
        }
    }
    Ok(written)
}

/// One row of the deterministic-equivalent validation sweep.
#[derive(Clone, Copy, Debug)]
pub struct RmtRow {
    pub num_uavs: usize,
    pub num_aps: usize,
    pub mc_se: f64,
    pub det_se: f64,
    /// Worst per-UAV relative SE gap.
    pub max_rel_gap: f64,
    pub draws: usize,
}

/// Monte-Carlo versus deterministic spectral efficiency over an (M, L) grid.
pub fn validate_rmt(
    cfg: &ScenarioConfig,
    seed: u64,
    grid: &[(usize, usize)],
    draws: usize,
    out_dir: Option<&Path>,
) -> Result<Vec<RmtRow>> {
    use std::io::Write;
    cfg.validate()?;
    let chan = ChannelParams::from_config(&cfg.channel);
    let tree = SeedTree::new(seed);
    let mut rows = Vec::with_capacity(grid.len());
    for (cell, &(m, l)) in grid.iter().enumerate() {
        let mut layout_rng = tree.stream(&[stream::LAYOUT, cell as u64]);
        let region = cfg.scenario.region_size;
        let uavs: Vec<Vec3> = (0..m)
            .map(|_| {
                Vec3::new(
                    layout_rng.gen_range(0.0..region),
                    layout_rng.gen_range(0.0..region),
                    layout_rng.gen_range(cfg.scenario.altitude_min..cfg.scenario.altitude_max),
                )
            })
            .collect();
        let aps: Vec<Vec3> = (0..l)
            .map(|_| {
                Vec3::new(
                    layout_rng.gen_range(0.0..region),
                    layout_rng.gen_range(0.0..region),
                    cfg.scenario.ground_node_height,
                )
            })
            .collect();
        let link_grid = LinkGrid::build(&uavs, &aps, &chan)?;
        let powers = vec![cfg.cellfree.max_power; m];
        let noise = NoiseModel::build(&link_grid, &powers, chan.noise_power);

        let mut mc_rng = tree.stream(&[stream::CHANNEL, cell as u64]);
        let mut se_acc = vec![0.0; m];
        for _ in 0..draws {
            let real = draw_split(&link_grid, &mut mc_rng);
            for u in 0..m {
                let sinr = mmse_sinr_exact(&real, &powers, &noise, u)?;
                se_acc[u] +=
                    spectral_efficiency(sinr, cfg.channel.pilot_length, cfg.channel.coherence_block);
            }
        }
        let mc: Vec<f64> = se_acc.iter().map(|v| v / draws as f64).collect();
        let (sinr_det, _) = deterministic_sinr(
            &link_grid,
            &powers,
            chan.noise_power,
            cfg.cellfree.fp_tolerance,
            cfg.cellfree.fp_max_iterations,
        )?;
        let det: Vec<f64> = sinr_det
            .iter()
            .map(|&s| spectral_efficiency(s, cfg.channel.pilot_length, cfg.channel.coherence_block))
            .collect();
        let max_rel_gap = (0..m)
            .map(|u| (mc[u] - det[u]).abs() / det[u].max(1e-12))
            .fold(0.0f64, f64::max);
        rows.push(RmtRow {
            num_uavs: m,
            num_aps: l,
            mc_se: mc.iter().sum::<f64>() / m as f64,
            det_se: det.iter().sum::<f64>() / m as f64,
            max_rel_gap,
            draws,
        });
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("rmt_validation.tsv"))?);
        writeln!(f, "num_uavs\tnum_aps\tmc_se\tdet_se\tmax_rel_gap\tdraws")?;
        for r in &rows {
            writeln!(
                f,
                "{}\t{}\t{:.9e}\t{:.9e}\t{:.9e}\t{}",
                r.num_uavs, r.num_aps, r.mc_se, r.det_se, r.max_rel_gap, r.draws
            )?;
        }
    }
    Ok(rows)
}

/// Straight-line energy lower bound used to sanity-check threshold tables:
/// hover power sustained over the time to cover `distance` at top speed.
pub fn hover_energy_lower_bound(cfg: &ScenarioConfig, distance: f64) -> f64 {
    let hover = cfg.power.blade_profile + cfg.power.induced;
    hover * distance / cfg.scenario.max_speed
}

/// Nearest-station helper re-exported for mission analyses.
pub fn nearest_station_distance(position: Vec3, stations: &[Vec3]) -> Option<f64> {
    assign_station(position, stations).map(|i| position.distance(stations[i]))
}
