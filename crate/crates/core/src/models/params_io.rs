//! Portable binary parameter files.
//!
//! Layout is versioned and endianness-specified: all integers and
//! floats are little-endian, so a file written on any platform loads
//! bit-exactly on any other.

use std::io::{Read, Write};
use std::path::Path;

use super::agent::{AgentConfig, AgentState};
use super::mlp::{Activation, MlpParams};
use super::replay::ReplayPool;
use crate::error::{Error, Result};

const MLP_MAGIC: &[u8; 4] = b"CSN1";
const AGENT_MAGIC: &[u8; 4] = b"CSA1";
const FORMAT_VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::ParamsFormat("truncated parameter file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn encode_mlp(buf: &mut Vec<u8>, p: &MlpParams) {
    put_u32(buf, p.dims.len() as u32);
    for &d in &p.dims {
        put_u32(buf, d as u32);
    }
    buf.push(p.output_activation.tag());
    put_f64(buf, p.dropout_rate);
    for l in 0..p.dims.len() - 1 {
        for &w in &p.weights[l] {
            put_f64(buf, w);
        }
        for &b in &p.biases[l] {
            put_f64(buf, b);
        }
    }
}

fn decode_mlp(r: &mut Reader) -> Result<MlpParams> {
    let n_dims = r.u32()? as usize;
    if !(2..=16).contains(&n_dims) {
        return Err(Error::ParamsFormat(format!("implausible dim count {n_dims}")));
    }
    let mut dims = Vec::with_capacity(n_dims);
    for _ in 0..n_dims {
        dims.push(r.u32()? as usize);
    }
    let output_activation = Activation::from_tag(r.u8()?)?;
    let dropout_rate = r.f64()?;
    let mut weights = Vec::with_capacity(n_dims - 1);
    let mut biases = Vec::with_capacity(n_dims - 1);
    for l in 0..n_dims - 1 {
        let (fan_in, fan_out) = (dims[l], dims[l + 1]);
        let mut w = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_in * fan_out {
            w.push(r.f64()?);
        }
        let mut b = Vec::with_capacity(fan_out);
        for _ in 0..fan_out {
            b.push(r.f64()?);
        }
        weights.push(w);
        biases.push(b);
    }
    Ok(MlpParams {
        dims,
        weights,
        biases,
        output_activation,
        dropout_rate,
    })
}

/// Serializes one network.
pub fn encode_mlp_file(p: &MlpParams) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MLP_MAGIC);
    put_u32(&mut buf, FORMAT_VERSION);
    encode_mlp(&mut buf, p);
    buf
}

pub fn decode_mlp_file(bytes: &[u8]) -> Result<MlpParams> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MLP_MAGIC {
        return Err(Error::ParamsFormat("bad magic (not a network file)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::ParamsFormat(format!("unsupported version {version}")));
    }
    let p = decode_mlp(&mut r)?;
    if !r.done() {
        return Err(Error::ParamsFormat("trailing bytes after network".into()));
    }
    Ok(p)
}

pub fn save_mlp(p: &MlpParams, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_mlp_file(p))?;
    Ok(())
}

pub fn load_mlp(path: &Path) -> Result<MlpParams> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_mlp_file(&bytes)
}

/// Serializes the four agent networks and hyperparameters (the
/// experience pool is runtime state and is not persisted).
pub fn encode_agent_file(agent: &AgentState) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(AGENT_MAGIC);
    put_u32(&mut buf, FORMAT_VERSION);
    let c = &agent.cfg;
    put_f64(&mut buf, c.gamma);
    put_f64(&mut buf, c.tau);
    put_f64(&mut buf, c.noise_mu);
    put_f64(&mut buf, c.noise_sigma);
    put_f64(&mut buf, c.noise_decay);
    put_f64(&mut buf, c.actor_lr);
    put_f64(&mut buf, c.critic_lr);
    put_u32(&mut buf, c.batch_size as u32);
    put_u64(&mut buf, c.pool_capacity as u64);
    for net in [
        &agent.actor,
        &agent.critic,
        &agent.actor_target,
        &agent.critic_target,
    ] {
        encode_mlp(&mut buf, net);
    }
    buf
}

pub fn decode_agent_file(bytes: &[u8]) -> Result<AgentState> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != AGENT_MAGIC {
        return Err(Error::ParamsFormat("bad magic (not an agent file)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::ParamsFormat(format!("unsupported version {version}")));
    }
    let cfg = AgentConfig {
        gamma: r.f64()?,
        tau: r.f64()?,
        noise_mu: r.f64()?,
        noise_sigma: r.f64()?,
        noise_decay: r.f64()?,
        actor_lr: r.f64()?,
        critic_lr: r.f64()?,
        batch_size: r.u32()? as usize,
        pool_capacity: r.u64()? as usize,
    };
    let actor = decode_mlp(&mut r)?;
    let critic = decode_mlp(&mut r)?;
    let actor_target = decode_mlp(&mut r)?;
    let critic_target = decode_mlp(&mut r)?;
    if !r.done() {
        return Err(Error::ParamsFormat("trailing bytes after agent".into()));
    }
    let pool = ReplayPool::new(cfg.pool_capacity);
    Ok(AgentState::from_parts(
        actor,
        critic,
        actor_target,
        critic_target,
        pool,
        cfg,
    ))
}

pub fn save_agent(agent: &AgentState, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_agent_file(agent))?;
    Ok(())
}

pub fn load_agent(path: &Path) -> Result<AgentState> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_agent_file(&bytes)
}
