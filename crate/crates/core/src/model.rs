//! Flat binary model container.
//!
//! Layout (all integers little-endian, floats as raw f64 LE bits so the
//! round trip is value-exact):
//!
//! ```text
//! magic    8  b"AESADNET"
//! version  u32 = 1
//! seed     u64
//! layers   u32
//! per layer: in u32, out u32, activation u8, weights out·in f64, bias out f64
//! stats    u8 (0|1); if 1: d u32, mins d f64, maxs d f64
//! ```
//!
//! The optional min-max block stores the normalization fitted on the
//! training split so that evaluation applies the same transform.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::activation::Activation;
use crate::data::MinMaxStats;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::tensor::Tensor;

const MAGIC: &[u8; 8] = b"AESADNET";
const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct ModelFile {
    pub network: Network,
    pub stats: Option<MinMaxStats>,
}

impl ModelFile {
    pub fn new(network: Network, stats: Option<MinMaxStats>) -> Self {
        Self { network, stats }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.network.seed().to_le_bytes())?;
        w.write_all(&(self.network.layers().len() as u32).to_le_bytes())?;
        for layer in self.network.layers() {
            w.write_all(&(layer.in_dim() as u32).to_le_bytes())?;
            w.write_all(&(layer.out_dim() as u32).to_le_bytes())?;
            w.write_all(&[layer.activation().to_tag()])?;
            for v in layer.weights().values() {
                w.write_all(&v.to_le_bytes())?;
            }
            for v in layer.bias() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        match &self.stats {
            None => w.write_all(&[0u8])?,
            Some(stats) => {
                w.write_all(&[1u8])?;
                w.write_all(&(stats.mins.len() as u32).to_le_bytes())?;
                for v in &stats.mins {
                    w.write_all(&v.to_le_bytes())?;
                }
                for v in &stats.maxs {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))?;
        if &magic != MAGIC {
            return Err(Error::ModelFormat(format!(
                "{}: not a model file",
                path.display()
            )));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {version}"
            )));
        }
        let seed = read_u64(&mut r)?;
        let n_layers = read_u32(&mut r)? as usize;
        if n_layers == 0 || n_layers > 1024 {
            return Err(Error::ModelFormat(format!("implausible layer count {n_layers}")));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let in_dim = read_u32(&mut r)? as usize;
            let out_dim = read_u32(&mut r)? as usize;
            let mut tag = [0u8; 1];
            r.read_exact(&mut tag)?;
            let activation = Activation::from_tag(tag[0])
                .ok_or_else(|| Error::ModelFormat(format!("unknown activation tag {}", tag[0])))?;
            let weights = read_f64s(&mut r, in_dim * out_dim)?;
            let bias = read_f64s(&mut r, out_dim)?;
            layers.push(Network::layer_parts(
                Tensor::from_vec(out_dim, in_dim, weights)?,
                bias,
                activation,
            )?);
        }
        let network = Network::from_parts(layers, seed)?;

        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let stats = match flag[0] {
            0 => None,
            1 => {
                let d = read_u32(&mut r)? as usize;
                let mins = read_f64s(&mut r, d)?;
                let maxs = read_f64s(&mut r, d)?;
                Some(MinMaxStats { mins, maxs })
            }
            other => {
                return Err(Error::ModelFormat(format!("bad stats flag {other}")));
            }
        };
        Ok(ModelFile { network, stats })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| Error::ModelFormat(format!("truncated: {e}")))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::ModelFormat(format!("truncated: {e}")))?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::ModelFormat(format!("truncated: {e}")))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
