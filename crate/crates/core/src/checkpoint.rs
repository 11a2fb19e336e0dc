//! Binary checkpoint format for [`Network`] parameters.
//!
//! All integers and floats are little-endian.
//!
//! | offset | size | field                                         |
//! |--------|------|-----------------------------------------------|
//! | 0      | 8    | magic `b"SLSQNET\0"`                          |
//! | 8      | 4    | format version (`1`)                          |
//! | 12     | 4    | architecture (`0` standard, `1` dueling)      |
//! | 16     | 4    | observation size                              |
//! | 20     | 4    | hidden width                                  |
//! | 24     | 4    | action count                                  |
//! | 28     | 4    | flags (bit 0: optimizer state follows)        |
//! | 32     | ...  | parameters as f32                             |
//!
//! Parameters are written layer by layer, weights (row-major by input) then
//! bias: trunk 1, trunk 2, then either the Q head or the value head followed
//! by the advantage head. When flag bit 0 is set the parameters are followed
//! by the Adam step (u64), its four hyperparameters (f32 lr, beta1, beta2,
//! eps), the first moments and then the second moments, in parameter order.
//! Trailing bytes are rejected.

use std::path::Path;

use thiserror::Error;

use crate::neural::{Adam, AdamConfig, Architecture, Dense, NetShape, Network};

pub const MAGIC: [u8; 8] = *b"SLSQNET\0";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 32;
const FLAG_OPTIMIZER: u32 = 1;
const MAX_WIDTH: u32 = 1 << 16;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("file is {0} bytes, shorter than the header")]
    Truncated(usize),
    #[error("bad magic bytes")]
    Magic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("unknown architecture tag {0}")]
    Architecture(u32),
    #[error("unsupported flags {0:#x}")]
    Flags(u32),
    #[error("invalid dimensions {input}x{hidden}x{actions}")]
    Dimensions { input: u32, hidden: u32, actions: u32 },
    #[error("expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },
    #[error("non-finite value in checkpoint")]
    NonFinite,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub network: Network,
    pub optimizer: Option<Adam>,
}

fn arch_tag(arch: Architecture) -> u32 {
    match arch {
        Architecture::Standard => 0,
        Architecture::Dueling => 1,
    }
}

impl Checkpoint {
    pub fn new(network: Network) -> Self {
        Self {
            network,
            optimizer: None,
        }
    }

    pub fn with_optimizer(network: Network, optimizer: Adam) -> Self {
        assert!(optimizer.matches(&network));
        Self {
            network,
            optimizer: Some(optimizer),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let shape = self.network.shape();
        let params = self.network.param_count();
        let extra = self.optimizer.as_ref().map_or(0, |_| 8 + 16 + 8 * params);
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * params + extra);
        out.extend_from_slice(&MAGIC);
        for word in [
            FORMAT_VERSION,
            arch_tag(self.network.architecture()),
            shape.input as u32,
            shape.hidden as u32,
            shape.actions as u32,
            if self.optimizer.is_some() { FLAG_OPTIMIZER } else { 0 },
        ] {
            out.extend_from_slice(&word.to_le_bytes());
        }
        for t in self.network.tensors() {
            put_floats(&mut out, t);
        }
        if let Some(adam) = &self.optimizer {
            let c = adam.config;
            out.extend_from_slice(&adam.step.to_le_bytes());
            put_floats(&mut out, &[c.lr, c.beta1, c.beta2, c.eps]);
            for t in adam.m.iter().chain(&adam.v) {
                put_floats(&mut out, t);
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < HEADER_LEN {
            return Err(CheckpointError::Truncated(bytes.len()));
        }
        if bytes[..8] != MAGIC {
            return Err(CheckpointError::Magic);
        }
        let word = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap());
        let version = word(0);
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let arch = match word(1) {
            0 => Architecture::Standard,
            1 => Architecture::Dueling,
            other => return Err(CheckpointError::Architecture(other)),
        };
        let (input, hidden, actions) = (word(2), word(3), word(4));
        let valid = |n: u32| (1..=MAX_WIDTH).contains(&n);
        if !(valid(input) && valid(hidden) && valid(actions)) {
            return Err(CheckpointError::Dimensions { input, hidden, actions });
        }
        let flags = word(5);
        if flags & !FLAG_OPTIMIZER != 0 {
            return Err(CheckpointError::Flags(flags));
        }
        let shape = NetShape {
            input: input as usize,
            hidden: hidden as usize,
            actions: actions as usize,
        };
        let dims = shape.layer_dims(arch);
        let params: usize = dims.iter().map(|(i, o)| i * o + o).sum();
        let with_opt = flags & FLAG_OPTIMIZER != 0;
        let expected = HEADER_LEN + 4 * params + if with_opt { 24 + 8 * params } else { 0 };
        if bytes.len() != expected {
            return Err(CheckpointError::Length {
                expected,
                found: bytes.len(),
            });
        }

        let mut cursor = Cursor { bytes, pos: HEADER_LEN };
        let layers = dims
            .iter()
            .map(|&(i, o)| {
                Ok(Dense {
                    inputs: i,
                    outputs: o,
                    weights: cursor.floats(i * o)?,
                    bias: cursor.floats(o)?,
                })
            })
            .collect::<Result<Vec<_>, CheckpointError>>()?;
        let network = Network::from_layers(arch, shape, layers).expect("dimensions derived from shape");
        let optimizer = if with_opt {
            let step = u64::from_le_bytes(cursor.take(8).try_into().unwrap());
            let hp = cursor.floats(4)?;
            let config = AdamConfig {
                lr: hp[0],
                beta1: hp[1],
                beta2: hp[2],
                eps: hp[3],
            };
            let lens: Vec<usize> = network.tensors().map(<[f32]>::len).collect();
            let m = lens.iter().map(|&n| cursor.floats(n)).collect::<Result<_, _>>()?;
            let v = lens.iter().map(|&n| cursor.floats(n)).collect::<Result<_, _>>()?;
            Some(Adam { config, step, m, v })
        } else {
            None
        };
        Ok(Self { network, optimizer })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::decode(&std::fs::read(path)?)
    }
}

fn put_floats(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> &[u8] {
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        s
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f32>, CheckpointError> {
        let values: Vec<f32> = self
            .take(4 * n)
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if values.iter().all(|v| v.is_finite()) {
            Ok(values)
        } else {
            Err(CheckpointError::NonFinite)
        }
    }
}
