//! Full training-state checkpoints: networks, optimizer moments, replay
//! memory, RNG positions and the reward curve, so a resumed run continues
//! bit-exactly where it stopped.

use std::io::{Read, Write};
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{EpisodeStat, Stage};
use crate::error::{CoreError, Result};
use crate::learner::model_io::{
    read_bool_slice, read_f64_slice, read_mlp, read_u64, write_bool_slice, write_f64_slice,
    write_mlp, write_u64,
};
use crate::learner::{ReplayBuffer, Td3};

const CKPT_MAGIC: &[u8; 8] = b"EWCKPT\x01\0";

pub(super) fn save_rng<W: Write>(w: &mut W, rng: &ChaCha12Rng) -> Result<()> {
    w.write_all(&rng.get_seed())?;
    let pos = rng.get_word_pos();
    write_u64(w, (pos & u128::from(u64::MAX)) as u64)?;
    write_u64(w, (pos >> 64) as u64)?;
    write_u64(w, rng.get_stream())?;
    Ok(())
}

pub(super) fn load_rng<R: Read>(r: &mut R) -> Result<ChaCha12Rng> {
    let mut seed = [0u8; 32];
    r.read_exact(&mut seed)?;
    let lo = read_u64(r)?;
    let hi = read_u64(r)?;
    let stream = read_u64(r)?;
    let mut rng = ChaCha12Rng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(lo) | (u128::from(hi) << 64));
    Ok(rng)
}

pub struct Checkpoint {
    pub stage: Stage,
    pub seed: u64,
    pub next_episode: usize,
    pub td3: Td3,
    pub buffer: ReplayBuffer,
    pub replay_rng: ChaCha12Rng,
    pub noise_rng: ChaCha12Rng,
    pub curve: Vec<EpisodeStat>,
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(CKPT_MAGIC)?;
    write_u64(&mut f, matches!(ck.stage, Stage::Charging) as u64)?;
    write_u64(&mut f, ck.seed)?;
    write_u64(&mut f, ck.next_episode as u64)?;

    let (nets, adams, update_count) = ck.td3.parts();
    write_u64(&mut f, update_count)?;
    for net in nets {
        write_mlp(&mut f, net)?;
    }
    for adam in adams {
        let (t, m, v) = adam.flat_state();
        write_u64(&mut f, t)?;
        write_f64_slice(&mut f, &m)?;
        write_f64_slice(&mut f, &v)?;
    }

    let buf = &ck.buffer;
    write_u64(&mut f, buf.capacity() as u64)?;
    write_u64(&mut f, buf.state_dim() as u64)?;
    write_u64(&mut f, buf.action_dim() as u64)?;
    write_u64(&mut f, buf.len() as u64)?;
    write_u64(&mut f, buf.cursor() as u64)?;
    let (s, a, r, s2, t) = buf.raw_parts();
    write_f64_slice(&mut f, s)?;
    write_f64_slice(&mut f, a)?;
    write_f64_slice(&mut f, r)?;
    write_f64_slice(&mut f, s2)?;
    write_bool_slice(&mut f, t)?;

    save_rng(&mut f, &ck.replay_rng)?;
    save_rng(&mut f, &ck.noise_rng)?;

    write_u64(&mut f, ck.curve.len() as u64)?;
    for st in &ck.curve {
        write_u64(&mut f, st.episode as u64)?;
        write_f64_slice(&mut f, &[st.reward, st.critic_loss])?;
        write_u64(&mut f, st.slots as u64)?;
        write_u64(&mut f, st.arrived as u64)?;
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path, expected: &crate::learner::Td3Config) -> Result<Checkpoint> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != CKPT_MAGIC {
        return Err(CoreError::BadFormat("not a training checkpoint".into()));
    }
    let stage = if read_u64(&mut f)? == 1 { Stage::Charging } else { Stage::Tracking };
    let seed = read_u64(&mut f)?;
    let next_episode = read_u64(&mut f)? as usize;

    let update_count = read_u64(&mut f)?;
    let mut td3 = Td3::new(expected.clone(), &crate::rng::SeedTree::new(0));
    {
        let (nets, adams, count) = td3.parts_mut();
        for net in nets {
            let loaded = read_mlp(&mut f)?;
            if loaded.sizes != net.sizes {
                return Err(CoreError::BadFormat(format!(
                    "checkpoint network sizes {:?} do not match config {:?}",
                    loaded.sizes, net.sizes
                )));
            }
            *net = loaded;
        }
        for adam in adams {
            let t = read_u64(&mut f)?;
            let m = read_f64_slice(&mut f)?;
            let v = read_f64_slice(&mut f)?;
            adam.set_flat_state(t, &m, &v);
        }
        *count = update_count;
    }

    let capacity = read_u64(&mut f)? as usize;
    let state_dim = read_u64(&mut f)? as usize;
    let action_dim = read_u64(&mut f)? as usize;
    let len = read_u64(&mut f)? as usize;
    let cursor = read_u64(&mut f)? as usize;
    let s = read_f64_slice(&mut f)?;
    let a = read_f64_slice(&mut f)?;
    let r = read_f64_slice(&mut f)?;
    let s2 = read_f64_slice(&mut f)?;
    let t = read_bool_slice(&mut f)?;
    let buffer = ReplayBuffer::from_parts(capacity, state_dim, action_dim, len, cursor, s, a, r, s2, t);

    let replay_rng = load_rng(&mut f)?;
    let noise_rng = load_rng(&mut f)?;

    let n = read_u64(&mut f)? as usize;
    let mut curve = Vec::with_capacity(n);
    for _ in 0..n {
        let episode = read_u64(&mut f)? as usize;
        let pair = read_f64_slice(&mut f)?;
        let slots = read_u64(&mut f)? as usize;
        let arrived = read_u64(&mut f)? == 1;
        curve.push(EpisodeStat { episode, reward: pair[0], critic_loss: pair[1], slots, arrived });
    }
    Ok(Checkpoint { stage, seed, next_episode, td3, buffer, replay_rng, noise_rng, curve })
}
