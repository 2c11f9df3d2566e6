//! Versioned binary model checkpoint.
//!
//! Layout (integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "QSER"
//! 4       4     format version (u32, currently 1)
//! 8       32    model spec: input_height, input_width, input_channels,
//!               conv1_kernels, conv2_kernels, kernel_size, pool_window,
//!               num_classes (8 × u32)
//! 40      12    feature config: fft_size, hop, n_mels (3 × u32)
//! 52      8     feature floor_db (f64)
//! 60      16    corpus db_min, db_max (2 × f64)
//! 76      8     feature-config hash (u64)
//! 84      4     label count (u32), then per label: byte length (u32) +
//!               UTF-8 bytes
//! ...           six parameter groups in fixed order — conv1 scales,
//!               conv1 angles, conv2 scales, conv2 angles, dense weights,
//!               dense biases — each as element count (u64) + f64 values
//! ```
//!
//! A checkpoint carries everything needed to classify a raw wav file:
//! the feature settings, the corpus normalization extremes, the label
//! names, and all parameters. Loading re-derives the expected group
//! lengths from the spec and rejects any mismatch.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::feature::FeatureConfig;
use crate::layers::{DenseLayer, QConvLayer};
use crate::model::{ModelSpec, QcnnModel};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"QSER";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained (or initial) model plus the context needed to reproduce its
/// input features. Round-trips through the file format bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: QcnnModel,
    pub feature_config: FeatureConfig,
    pub db_min: f64,
    pub db_max: f64,
    pub feature_hash: u64,
    pub labels: Vec<String>,
}

impl Checkpoint {
    pub fn new(
        model: QcnnModel,
        feature_config: FeatureConfig,
        db_min: f64,
        db_max: f64,
        labels: Vec<String>,
    ) -> Self {
        let feature_hash = feature_config.hash();
        Self {
            model,
            feature_config,
            db_min,
            db_max,
            feature_hash,
            labels,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(serialized_len(&self.model.spec, &self.labels));
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let s = &self.model.spec;
        for v in [
            s.input_height,
            s.input_width,
            s.input_channels,
            s.conv1_kernels,
            s.conv2_kernels,
            s.kernel_size,
            s.pool_window,
            s.num_classes,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        let f = &self.feature_config;
        for v in [f.fft_size, f.hop, f.n_mels] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&f.floor_db.to_le_bytes());
        out.extend_from_slice(&self.db_min.to_le_bytes());
        out.extend_from_slice(&self.db_max.to_le_bytes());
        out.extend_from_slice(&self.feature_hash.to_le_bytes());
        out.extend_from_slice(&(self.labels.len() as u32).to_le_bytes());
        for label in &self.labels {
            let bytes = label.as_bytes();
            out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
            out.extend_from_slice(bytes);
        }
        for group in self.model.param_groups() {
            out.extend_from_slice(&(group.len() as u64).to_le_bytes());
            for &v in group.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut fh| fh.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
            .map_err(|e| Error::Compatibility(format!("{}: {e}", path.display())))
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::Compatibility("bad magic, not a checkpoint".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Compatibility(format!(
                "unsupported checkpoint version {version} (supported: {CHECKPOINT_VERSION})"
            )));
        }
        let spec = ModelSpec {
            input_height: r.u32()? as usize,
            input_width: r.u32()? as usize,
            input_channels: r.u32()? as usize,
            conv1_kernels: r.u32()? as usize,
            conv2_kernels: r.u32()? as usize,
            kernel_size: r.u32()? as usize,
            pool_window: r.u32()? as usize,
            num_classes: r.u32()? as usize,
        };
        spec.validate()
            .map_err(|e| Error::Compatibility(format!("corrupt model spec: {e}")))?;
        let feature_config = FeatureConfig {
            fft_size: r.u32()? as usize,
            hop: r.u32()? as usize,
            n_mels: r.u32()? as usize,
            floor_db: r.f64()?,
        };
        feature_config
            .validate()
            .map_err(|e| Error::Compatibility(format!("corrupt feature config: {e}")))?;
        let db_min = r.f64()?;
        let db_max = r.f64()?;
        let feature_hash = r.u64()?;
        let n_labels = r.u32()? as usize;
        if n_labels != spec.num_classes {
            return Err(Error::Compatibility(format!(
                "label table has {n_labels} entries, spec declares {} classes",
                spec.num_classes
            )));
        }
        let mut labels = Vec::with_capacity(n_labels);
        for _ in 0..n_labels {
            let len = r.u32()? as usize;
            if len > 4096 {
                return Err(Error::Compatibility("absurd label length".into()));
            }
            let raw = r.take(len)?;
            labels.push(
                String::from_utf8(raw.to_vec())
                    .map_err(|_| Error::Compatibility("label is not valid UTF-8".into()))?,
            );
        }

        let mut conv1 = QConvLayer::new(spec.input_channels, spec.conv1_kernels, spec.kernel_size)?;
        let mut conv2 = QConvLayer::new(spec.conv1_kernels, spec.conv2_kernels, spec.kernel_size)?;
        let flat = spec.flat_dim()?;
        let mut dense = DenseLayer::new(flat, spec.num_classes)?;
        {
            let groups: [&mut Vec<f64>; 6] = [
                &mut conv1.scale,
                &mut conv1.angle,
                &mut conv2.scale,
                &mut conv2.angle,
                &mut dense.weights,
                &mut dense.biases,
            ];
            for group in groups {
                let n = r.u64()? as usize;
                if n != group.len() {
                    return Err(Error::Compatibility(format!(
                        "parameter group holds {n} values, spec implies {}",
                        group.len()
                    )));
                }
                for slot in group.iter_mut() {
                    *slot = r.f64()?;
                }
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::Compatibility(format!(
                "{} trailing bytes after parameters",
                bytes.len() - r.pos
            )));
        }

        Ok(Self {
            model: QcnnModel {
                spec,
                conv1,
                conv2,
                dense,
            },
            feature_config,
            db_min,
            db_max,
            feature_hash,
            labels,
        })
    }
}

/// Exact on-disk size of a checkpoint for the given spec and label table.
pub fn serialized_len(spec: &ModelSpec, labels: &[String]) -> usize {
    let header = 4 + 4 + 32 + 12 + 8 + 16 + 8;
    let label_table = 4 + labels.iter().map(|l| 4 + l.len()).sum::<usize>();
    let counts = crate::model::count_parameters(spec)
        .map(|c| c.total)
        .unwrap_or(0);
    header + label_table + 6 * 8 + counts * 8
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Compatibility(format!(
                "truncated: wanted {n} bytes at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
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
}
