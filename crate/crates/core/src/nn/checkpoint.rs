//! Versioned binary model files: magic `CVNN`, version, a JSON header with
//! the model kind, free-form metadata and the layer specs of each network,
//! then every parameter blob as little-endian f32 in layer order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Layer, LayerSpec, Network, NnError, Result};
use crate::binio;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"CVNN";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub meta: serde_json::Value,
    pub networks: Vec<Network>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: serde_json::Value,
    networks: Vec<Vec<LayerSpec>>,
}

pub fn write_checkpoint<W: Write>(w: &mut W, ck: &Checkpoint) -> Result<()> {
    w.write_all(MAGIC)?;
    binio::write_u32(w, CHECKPOINT_VERSION)?;
    let header = Header {
        kind: ck.kind.clone(),
        meta: ck.meta.clone(),
        networks: ck.networks.iter().map(Network::specs).collect(),
    };
    binio::write_json(w, &header)?;
    for net in &ck.networks {
        for p in net.params() {
            binio::write_f32s(w, p.value.iter().map(|&v| v as f32))?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Checkpoint> {
    binio::expect_magic(r, MAGIC).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    let version = binio::read_u32(r)?;
    if version != CHECKPOINT_VERSION {
        return Err(NnError::Checkpoint(format!(
            "unsupported version {version}"
        )));
    }
    let header: Header = binio::read_json(r)?;
    let mut networks = Vec::with_capacity(header.networks.len());
    for specs in header.networks {
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            let values = spec
                .param_lens()
                .into_iter()
                .map(|n| {
                    binio::read_f32s(r, n).map(|v| v.into_iter().map(f64::from).collect())
                })
                .collect::<std::io::Result<Vec<_>>>()?;
            layers.push(Layer::with_params(spec, values)?);
        }
        networks.push(Network::from_layers(layers));
    }
    Ok(Checkpoint {
        kind: header.kind,
        meta: header.meta,
        networks,
    })
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write_checkpoint(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_checkpoint(&mut BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_rounds_to_f32() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Network::new(
            &[
                LayerSpec::Conv2d {
                    in_channels: 1,
                    out_channels: 2,
                    kernel: 3,
                    stride: 1,
                    padding: 1,
                },
                LayerSpec::Relu,
                LayerSpec::RnnTanh {
                    inputs: 4,
                    hidden: 3,
                    return_sequences: false,
                },
            ],
            &mut rng,
        )
        .unwrap();
        let ck = Checkpoint {
            kind: "test".into(),
            meta: serde_json::json!({"a": 1}),
            networks: vec![net.clone()],
        };
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &ck).unwrap();
        let back = read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(back.kind, "test");
        assert_eq!(back.meta, ck.meta);
        for (a, b) in back.networks[0].params().zip(net.params()) {
            let rounded: Vec<f64> = b.value.iter().map(|&v| v as f32 as f64).collect();
            assert_eq!(a.value, rounded);
        }
        // a second round trip is exact
        let mut buf2 = Vec::new();
        write_checkpoint(&mut buf2, &back).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn rejects_bad_magic() {
        let buf = b"XXXX\x01\x00\x00\x00".to_vec();
        assert!(matches!(
            read_checkpoint(&mut buf.as_slice()),
            Err(NnError::Checkpoint(_))
        ));
    }
}
