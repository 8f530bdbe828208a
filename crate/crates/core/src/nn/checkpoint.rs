//! Binary checkpoint format.
//!
//! ```text
//! magic      8 bytes   "SWRMCKPT"
//! version    u32 LE    1
//! kind       u8        1 = gaussian policy, 2 = value network
//! flags      u8        bit 0: optimizer moments follow
//! n_dims     u32 LE
//! dims       u32 LE x n_dims
//! params     f64 LE    weights (row-major, layer by layer), then biases
//!                      (layer by layer), then log_std (policy only)
//! moments    optional: t as u64 LE, then m, then v, each f64 LE in the
//!                      same order as params
//! ```
//!
//! Encoding is canonical, so `decode` followed by `encode` reproduces the
//! input bytes exactly.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::{AdamState, GaussianPolicy, Mlp, NnError, PolicyOptimizer, ValueNet};

pub const MAGIC: &[u8; 8] = b"SWRMCKPT";
pub const VERSION: u32 = 1;

const KIND_POLICY: u8 = 1;
const KIND_VALUE: u8 = 2;
const FLAG_MOMENTS: u8 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint holds a {found}, expected a {expected}")]
    WrongKind { expected: &'static str, found: &'static str },
    #[error("checkpoint truncated")]
    Truncated,
    #[error("{0} trailing bytes after checkpoint payload")]
    TrailingBytes(usize),
    #[error("invalid network shape: {0}")]
    Shape(#[from] NnError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Policy {
        policy: GaussianPolicy,
        optimizer: Option<PolicyOptimizer>,
    },
    Value {
        value: ValueNet,
        optimizer: Option<AdamState>,
    },
}

fn kind_name(kind: u8) -> &'static str {
    match kind {
        KIND_POLICY => "policy",
        KIND_VALUE => "value network",
        _ => "unknown network",
    }
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn header(out: &mut Vec<u8>, kind: u8, has_moments: bool, dims: &[usize]) {
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind);
    out.push(if has_moments { FLAG_MOMENTS } else { 0 });
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Checkpoint::Policy { policy, optimizer } => {
                header(&mut out, KIND_POLICY, optimizer.is_some(), policy.mean_net.dims());
                put_f64s(&mut out, policy.mean_net.params());
                put_f64s(&mut out, &policy.log_std);
                if let Some(opt) = optimizer {
                    out.extend_from_slice(&opt.net.t.to_le_bytes());
                    put_f64s(&mut out, &opt.net.m);
                    put_f64s(&mut out, &opt.log_std.m);
                    put_f64s(&mut out, &opt.net.v);
                    put_f64s(&mut out, &opt.log_std.v);
                }
            }
            Checkpoint::Value { value, optimizer } => {
                header(&mut out, KIND_VALUE, optimizer.is_some(), value.net.dims());
                put_f64s(&mut out, value.net.params());
                if let Some(opt) = optimizer {
                    out.extend_from_slice(&opt.t.to_le_bytes());
                    put_f64s(&mut out, &opt.m);
                    put_f64s(&mut out, &opt.v);
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let kind = r.take(1)?[0];
        let flags = r.take(1)?[0];
        let n_dims = r.u32()? as usize;
        let dims = (0..n_dims).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let mut net = Mlp::zeros(&dims)?;
        let n_params = net.num_params();
        net.params_mut().copy_from_slice(&r.f64s(n_params)?);
        let has_moments = flags & FLAG_MOMENTS != 0;

        let ckpt = match kind {
            KIND_POLICY => {
                let out_dim = net.output_dim();
                let log_std = r.f64s(out_dim)?;
                let policy = GaussianPolicy::new(net, log_std)?;
                let optimizer = if has_moments {
                    let t = r.u64()?;
                    let mut opt = PolicyOptimizer::new(&policy);
                    opt.net.m = r.f64s(n_params)?;
                    opt.log_std.m = r.f64s(out_dim)?;
                    opt.net.v = r.f64s(n_params)?;
                    opt.log_std.v = r.f64s(out_dim)?;
                    opt.net.t = t;
                    opt.log_std.t = t;
                    Some(opt)
                } else {
                    None
                };
                Checkpoint::Policy { policy, optimizer }
            }
            KIND_VALUE => {
                let value = ValueNet::new(net)?;
                let optimizer = if has_moments {
                    let t = r.u64()?;
                    let mut opt = AdamState::new(n_params);
                    opt.m = r.f64s(n_params)?;
                    opt.v = r.f64s(n_params)?;
                    opt.t = t;
                    Some(opt)
                } else {
                    None
                };
                Checkpoint::Value { value, optimizer }
            }
            other => {
                return Err(CheckpointError::WrongKind {
                    expected: "policy or value network",
                    found: kind_name(other),
                })
            }
        };
        let rest = bytes.len() - r.pos;
        if rest != 0 {
            return Err(CheckpointError::TrailingBytes(rest));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::decode(&fs::read(path)?)
    }
}

pub fn save_policy(path: &Path, policy: &GaussianPolicy, optimizer: Option<&PolicyOptimizer>) -> Result<(), CheckpointError> {
    Checkpoint::Policy {
        policy: policy.clone(),
        optimizer: optimizer.cloned(),
    }
    .save(path)
}

pub fn load_policy(path: &Path) -> Result<GaussianPolicy, CheckpointError> {
    match Checkpoint::load(path)? {
        Checkpoint::Policy { policy, .. } => Ok(policy),
        Checkpoint::Value { .. } => Err(CheckpointError::WrongKind {
            expected: "policy",
            found: kind_name(KIND_VALUE),
        }),
    }
}

pub fn save_value(path: &Path, value: &ValueNet, optimizer: Option<&AdamState>) -> Result<(), CheckpointError> {
    Checkpoint::Value {
        value: value.clone(),
        optimizer: optimizer.cloned(),
    }
    .save(path)
}

pub fn load_value(path: &Path) -> Result<ValueNet, CheckpointError> {
    match Checkpoint::load(path)? {
        Checkpoint::Value { value, .. } => Ok(value),
        Checkpoint::Policy { .. } => Err(CheckpointError::WrongKind {
            expected: "value network",
            found: kind_name(KIND_POLICY),
        }),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CheckpointError> {
        let raw = self.take(n.checked_mul(8).ok_or(CheckpointError::Truncated)?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}
