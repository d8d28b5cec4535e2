//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "NDMODEL\n"
//! version  u32      1
//! hlen     u64      length of the JSON header
//! header   hlen     scalar type, model config, class index, variate key,
//!                   optimizer hyperparameters and step, free-form metadata
//! params   f64 * P  every layer, weights (row-major) then biases
//! moments  f64 * 2P first then second Adam moments, only if the header has them
//! trailer  8 bytes  "NDMODEL$"
//! ```
//!
//! Values are widened to `f64`, which is exact for `f32` and `f64`, so a
//! save/load round trip reproduces every parameter bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdamConfig, AdamState, Dense, ModelConfig, Network};
use crate::blocking::Block;
use crate::corpus::AuthorId;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"NDMODEL\n";
const TRAILER: &[u8; 8] = b"NDMODEL$";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    scalar: String,
    config: ModelConfig,
    classes: Vec<AuthorId>,
    variate_key: String,
    adam: Option<(AdamConfig, u64)>,
    meta: BTreeMap<String, String>,
}

/// A trained block model with everything needed to resume or serve it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub network: Network<T>,
    pub adam: Option<AdamState<T>>,
    /// `classes[c]` is the author behind output unit `c`.
    pub classes: Vec<AuthorId>,
    pub variate_key: String,
    pub meta: BTreeMap<String, String>,
}

fn write_layers<T: Real, W: Write>(out: &mut W, layers: &[Dense<T>]) -> std::io::Result<()> {
    for l in layers {
        for v in l.w.iter().chain(l.b.iter()) {
            out.write_all(&v.to_f64_exact().to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_layers<T: Real, R: Read>(input: &mut R, shapes: &[(usize, usize)]) -> Result<Vec<Dense<T>>> {
    let mut layers = Vec::with_capacity(shapes.len());
    let mut word = [0u8; 8];
    for &(fi, fo) in shapes {
        let mut layer = Dense::<T>::zeros(fi, fo);
        for v in layer.w.iter_mut().chain(layer.b.iter_mut()) {
            input
                .read_exact(&mut word)
                .map_err(|_| Error::Checkpoint("truncated parameter data".into()))?;
            *v = T::from_f64_lossy(f64::from_le_bytes(word));
        }
        layers.push(layer);
    }
    Ok(layers)
}

impl<T: Real> Checkpoint<T> {
    pub fn new(
        network: Network<T>,
        adam: Option<AdamState<T>>,
        classes: Vec<AuthorId>,
        variate_key: impl Into<String>,
    ) -> Self {
        Checkpoint {
            network,
            adam,
            classes,
            variate_key: variate_key.into(),
            meta: BTreeMap::new(),
        }
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        let header = Header {
            scalar: T::NAME.to_string(),
            config: self.network.config().clone(),
            classes: self.classes.clone(),
            variate_key: self.variate_key.clone(),
            adam: self.adam.as_ref().map(|a| (a.config, a.t)),
            meta: self.meta.clone(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let io = |e| Error::io("<checkpoint>", e);
        out.write_all(CHECKPOINT_MAGIC).map_err(io)?;
        out.write_all(&CHECKPOINT_VERSION.to_le_bytes()).map_err(io)?;
        out.write_all(&(json.len() as u64).to_le_bytes()).map_err(io)?;
        out.write_all(&json).map_err(io)?;
        write_layers(out, self.network.layers()).map_err(io)?;
        if let Some(adam) = &self.adam {
            write_layers(out, &adam.m).map_err(io)?;
            write_layers(out, &adam.v).map_err(io)?;
        }
        out.write_all(TRAILER).map_err(io)?;
        Ok(())
    }

    pub fn read<R: Read>(input: &mut R) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("not a model checkpoint"));
        }
        let mut word4 = [0u8; 4];
        input.read_exact(&mut word4).map_err(|_| bad("truncated header"))?;
        let version = u32::from_le_bytes(word4);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "version {version}, expected {CHECKPOINT_VERSION}"
            )));
        }
        let mut word8 = [0u8; 8];
        input.read_exact(&mut word8).map_err(|_| bad("truncated header"))?;
        let hlen = u64::from_le_bytes(word8) as usize;
        if hlen > 1 << 30 {
            return Err(bad("implausible header length"));
        }
        let mut json = vec![0u8; hlen];
        input.read_exact(&mut json).map_err(|_| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(&json).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if header.scalar != T::NAME {
            return Err(Error::Checkpoint(format!(
                "scalar type {}, expected {}",
                header.scalar,
                T::NAME
            )));
        }
        if header.classes.len() != header.config.n_classes {
            return Err(bad("class index does not match the output width"));
        }
        header.config.validate()?;
        let shapes = header.config.layer_shapes();
        let layers = read_layers(input, &shapes)?;
        let network = Network::from_layers(header.config, layers)?;
        let adam = match header.adam {
            Some((config, t)) => Some(AdamState {
                config,
                t,
                m: read_layers(input, &shapes)?,
                v: read_layers(input, &shapes)?,
            }),
            None => None,
        };
        input.read_exact(&mut word8).map_err(|_| bad("missing trailer"))?;
        if &word8 != TRAILER {
            return Err(bad("corrupt trailer"));
        }
        if input.read(&mut [0u8; 1]).map_err(|e| Error::io("<checkpoint>", e))? != 0 {
            return Err(bad("trailing bytes after checkpoint"));
        }
        Ok(Checkpoint {
            network,
            adam,
            classes: header.classes,
            variate_key: header.variate_key,
            meta: header.meta,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write(&mut out).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(&mut BufReader::new(file))
    }

    /// Loads a checkpoint and checks it was trained for `block`'s classes.
    pub fn load_for_block(path: impl AsRef<Path>, block: &Block) -> Result<Self> {
        let ck = Self::load(path)?;
        ck.check_block(block)?;
        Ok(ck)
    }

    pub fn check_block(&self, block: &Block) -> Result<()> {
        if self.network.n_classes() != block.n_classes() {
            return Err(Error::ModelMismatch(format!(
                "model has {} classes, block `{}` has {}",
                self.network.n_classes(),
                block.variate_key,
                block.n_classes()
            )));
        }
        if self.classes != block.authors {
            return Err(Error::ModelMismatch(format!(
                "class index differs from block `{}`",
                block.variate_key
            )));
        }
        Ok(())
    }
}
