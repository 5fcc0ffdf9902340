//! Binary checkpoint: the 8-byte magic `HGFFCKPT`, a little-endian u64 header
//! length, a JSON header, then every tensor as little-endian f64 in header
//! order (parameters, then Adam first moments, then second moments).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::{Adam, AdamConfig};
use crate::config::NetConfig;
use crate::error::{NnError, Result};
use crate::params::Params;

const MAGIC: &[u8; 8] = b"HGFFCKPT";
const FORMAT: &str = "hgff-checkpoint-v1";

/// Position of a ChaCha8 stream, enough to resume it exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    /// 32-byte seed as hex.
    pub seed: String,
    pub stream: u64,
    /// Word position, as a decimal string since it is 128-bit.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        let seed = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        Self {
            seed,
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        use rand::SeedableRng;
        let bad = || NnError::Checkpoint("malformed RNG state".into());
        if self.seed.len() != 64 {
            return Err(bad());
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos.parse().map_err(|_| bad())?);
        Ok(rng)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format: String,
    config: NetConfig,
    step: u64,
    rng: Option<RngState>,
    adam: Option<AdamHeader>,
    #[serde(default)]
    meta: serde_json::Value,
    tensors: Vec<TensorInfo>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AdamHeader {
    config: AdamConfig,
    t: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: NetConfig,
    pub params: Params,
    /// Training steps taken so far.
    pub step: u64,
    pub rng: Option<RngState>,
    pub adam: Option<Adam>,
    /// Free-form metadata, e.g. the training configuration.
    pub meta: serde_json::Value,
}

impl Checkpoint {
    pub fn new(config: NetConfig, params: Params) -> Self {
        Self {
            config,
            params,
            step: 0,
            rng: None,
            adam: None,
            meta: serde_json::Value::Null,
        }
    }

    fn all_tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let names = self.params.names();
        let mut out: Vec<(String, &Array2<f64>)> =
            names.iter().cloned().zip(self.params.tensors()).collect();
        if let Some(adam) = &self.adam {
            out.extend(
                names
                    .iter()
                    .map(|n| format!("adam.m.{n}"))
                    .zip(adam.m.tensors()),
            );
            out.extend(
                names
                    .iter()
                    .map(|n| format!("adam.v.{n}"))
                    .zip(adam.v.tensors()),
            );
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let tensors = self.all_tensors();
        let header = Header {
            format: FORMAT.into(),
            config: self.config,
            step: self.step,
            rng: self.rng.clone(),
            adam: self.adam.as_ref().map(|a| AdamHeader {
                config: a.config,
                t: a.t,
            }),
            meta: self.meta.clone(),
            tensors: tensors
                .iter()
                .map(|(name, t)| TensorInfo {
                    name: name.clone(),
                    shape: [t.nrows(), t.ncols()],
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        w.write_all(MAGIC)?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for (_, t) in tensors {
            for v in t.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(NnError::Checkpoint("not a checkpoint file".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len);
        if len > 1 << 30 {
            return Err(NnError::Checkpoint("header too large".into()));
        }
        let mut json = vec![0u8; len as usize];
        r.read_exact(&mut json)?;
        let header: Header = serde_json::from_slice(&json)?;
        if header.format != FORMAT {
            return Err(NnError::Checkpoint(format!(
                "unknown format {:?}",
                header.format
            )));
        }
        header.config.validate()?;

        let template = Params::zeros(&header.config);
        let mut params = template.clone();
        let mut adam = header.adam.as_ref().map(|a| Adam {
            config: a.config,
            t: a.t,
            m: template.zeros_like(),
            v: template.zeros_like(),
        });
        let mut targets: Vec<(String, &mut Array2<f64>)> = template
            .names()
            .into_iter()
            .zip(params.tensors_mut())
            .collect();
        if let Some(a) = &mut adam {
            let names = template.names();
            targets.extend(
                names
                    .iter()
                    .map(|n| format!("adam.m.{n}"))
                    .zip(a.m.tensors_mut()),
            );
            targets.extend(
                names
                    .iter()
                    .map(|n| format!("adam.v.{n}"))
                    .zip(a.v.tensors_mut()),
            );
        }
        if targets.len() != header.tensors.len() {
            return Err(NnError::Checkpoint(format!(
                "header lists {} tensors, configuration implies {}",
                header.tensors.len(),
                targets.len()
            )));
        }
        let mut buf = [0u8; 8];
        for ((name, t), info) in targets.into_iter().zip(&header.tensors) {
            if name != info.name || [t.nrows(), t.ncols()] != info.shape {
                return Err(NnError::Checkpoint(format!(
                    "tensor {} {:?} does not match expected {} {:?}",
                    info.name,
                    info.shape,
                    name,
                    [t.nrows(), t.ncols()]
                )));
            }
            for v in t.iter_mut() {
                r.read_exact(&mut buf)?;
                *v = f64::from_le_bytes(buf);
            }
        }
        if r.read(&mut buf)? != 0 {
            return Err(NnError::Checkpoint(
                "trailing bytes after tensor data".into(),
            ));
        }
        Ok(Self {
            config: header.config,
            params,
            step: header.step,
            rng: header.rng,
            adam,
            meta: header.meta,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn sample(with_adam: bool) -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = NetConfig::default();
        let params = Params::init(&cfg, &mut rng);
        let _: f64 = rng.random();
        let mut ck = Checkpoint::new(cfg, params);
        ck.step = 1234;
        ck.rng = Some(RngState::capture(&rng));
        ck.meta = serde_json::json!({"note": "x"});
        if with_adam {
            let mut adam = Adam::new(AdamConfig::default(), &ck.params);
            let mut g = ck.params.clone();
            g.scale(0.5);
            let mut p = ck.params.clone();
            adam.step(&mut p, &g);
            ck.params = p;
            ck.adam = Some(adam);
        }
        ck
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for with_adam in [false, true] {
            let ck = sample(with_adam);
            let mut bytes = Vec::new();
            ck.write_to(&mut bytes).unwrap();
            let back = Checkpoint::read_from(bytes.as_slice()).unwrap();
            for (a, b) in ck.params.tensors().iter().zip(back.params.tensors()) {
                assert!(a
                    .iter()
                    .zip(b.iter())
                    .all(|(x, y)| x.to_bits() == y.to_bits()));
            }
            assert_eq!(back, ck);
            let mut again = Vec::new();
            back.write_to(&mut again).unwrap();
            assert_eq!(bytes, again);
        }
    }

    #[test]
    fn rng_state_resumes_stream() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..17 {
            let _: u32 = rng.random();
        }
        let mut resumed = RngState::capture(&rng).restore().unwrap();
        let a: Vec<u64> = (0..10).map(|_| rng.random()).collect();
        let b: Vec<u64> = (0..10).map(|_| resumed.random()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let ck = sample(false);
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::read_from(bad.as_slice()).is_err());
        let truncated = &bytes[..bytes.len() - 3];
        assert!(Checkpoint::read_from(truncated).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::read_from(extra.as_slice()).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let ck = sample(true);
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
    }
}
