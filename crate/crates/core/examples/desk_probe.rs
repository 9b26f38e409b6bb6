//! Scratch probe for tuning the desk-scale charging run.

use std::time::Instant;

use emberwatch_core::config::ScenarioConfig;
use emberwatch_core::harness::{self, Stage};
use emberwatch_core::rng::{stream, SeedTree};

fn desk_charging_cfg() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.scenario.region_size = 100.0;
    cfg.scenario.num_uavs = 1;
    cfg.scenario.num_aps = 4;
    cfg.scenario.num_stations = 1;
    cfg.scenario.energy_min_init = 8e3;
    cfg.scenario.energy_max = 25e3;
    cfg.scenario.unlimited_energy = false;
    cfg.td3.hidden_sizes = vec![64, 64, 64];
    cfg.td3.minibatch = 128;
    cfg.td3.warmup_episodes = 60;
    cfg.td3.train_episodes = 700;
    cfg.td3.charging_episode_cap = 200;
    cfg
}

fn main() {
    let cfg = desk_charging_cfg();
    let t0 = Instant::now();
    let out = harness::train(&cfg, Stage::Charging, 12345, None, None).unwrap();
    let train_time = t0.elapsed();
    println!("training {} episodes took {:.1} s", cfg.td3.train_episodes, train_time.as_secs_f64());

    // reward curve in windows of 50
    for w in out.curve.chunks(50) {
        let mean: f64 = w.iter().map(|s| s.reward).sum::<f64>() / w.len() as f64;
        let arr: f64 = w.iter().filter(|s| s.arrived).count() as f64 / w.len() as f64;
        let slots: f64 = w.iter().map(|s| s.slots as f64).sum::<f64>() / w.len() as f64;
        println!(
            "ep {:4}..{:4}: mean reward {:9.2}  arrival {:4.2}  slots {:5.1}",
            w[0].episode,
            w[w.len() - 1].episode,
            mean,
            arr,
            slots
        );
    }

    // frozen-policy evaluation
    let t1 = Instant::now();
    let tree = SeedTree::new(777);
    let mut arrivals = 0;
    let n_eval = 200;
    for e in 0..n_eval {
        let seeds = tree.child(&[stream::EVAL, e]);
        let (_, _, arrived) = harness::run_charging_eval_episode(&cfg, out.td3.actor(), &seeds).unwrap();
        if arrived {
            arrivals += 1;
        }
    }
    println!(
        "eval: {arrivals}/{n_eval} arrivals in {:.1} s  (total {:.1} s)",
        t1.elapsed().as_secs_f64(),
        t0.elapsed().as_secs_f64()
    );
}
