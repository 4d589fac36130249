//! Named parameter blocks and their binary container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "KNN1"  u32 block_count
//! per block: u32 name_len, name bytes (UTF-8), u32 ndims, ndims × u64 dims,
//!            product(dims) × f64
//! ```

use std::collections::HashSet;
use std::io::{Read, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::layers::{Activation, ConvLayer, DenseLayer};

const MAGIC: &[u8; 4] = b"KNN1";

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("not a parameter file (bad magic)")]
    BadMagic,
    #[error("truncated or unreadable parameter file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parameter name is not valid UTF-8")]
    BadName,
    #[error("duplicate parameter block {0}")]
    Duplicate(String),
    #[error("parameter block {name}: {reason}")]
    Mismatch { name: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl ParamSpec {
    pub fn new(name: String, shape: Vec<usize>) -> Self {
        ParamSpec { name, shape }
    }
}

/// Uniform enumeration of a model's parameter tensors. `specs`, `slices` and
/// `slices_mut` visit the same tensors in the same order.
pub trait Parameters {
    fn specs(&self, prefix: &str, out: &mut Vec<ParamSpec>);
    fn slices<'a>(&'a self, out: &mut Vec<&'a [f64]>);
    fn slices_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>);

    fn param_count(&self) -> usize {
        let mut s = Vec::new();
        self.slices(&mut s);
        s.iter().map(|s| s.len()).sum()
    }

    fn to_model_params(&self) -> ModelParams {
        let mut specs = Vec::new();
        self.specs("", &mut specs);
        let mut slices = Vec::new();
        self.slices(&mut slices);
        ModelParams {
            blocks: specs
                .into_iter()
                .zip(slices)
                .map(|(spec, data)| ParamBlock {
                    name: spec.name.trim_start_matches('.').to_string(),
                    shape: spec.shape,
                    data: data.to_vec(),
                })
                .collect(),
        }
    }

    /// Overwrites every parameter from `params`, which must have the same
    /// names and shapes in the same order.
    fn load_model_params(&mut self, params: &ModelParams) -> Result<(), ParamsError> {
        let mut specs = Vec::new();
        self.specs("", &mut specs);
        if specs.len() != params.blocks.len() {
            return Err(ParamsError::Mismatch {
                name: "<model>".into(),
                reason: format!("expected {} blocks, found {}", specs.len(), params.blocks.len()),
            });
        }
        let mut slices = Vec::new();
        self.slices_mut(&mut slices);
        for ((spec, slice), block) in specs.iter().zip(slices).zip(&params.blocks) {
            let name = spec.name.trim_start_matches('.');
            if name != block.name || spec.shape != block.shape {
                return Err(ParamsError::Mismatch {
                    name: block.name.clone(),
                    reason: format!("expected {name} with shape {:?}, found shape {:?}", spec.shape, block.shape),
                });
            }
            slice.copy_from_slice(&block.data);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// All learned weights of a network, as ordered named blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelParams {
    pub blocks: Vec<ParamBlock>,
}

impl ModelParams {
    pub fn get(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.blocks.len() as u32).to_le_bytes())?;
        for block in &self.blocks {
            out.write_all(&(block.name.len() as u32).to_le_bytes())?;
            out.write_all(block.name.as_bytes())?;
            out.write_all(&(block.shape.len() as u32).to_le_bytes())?;
            for &d in &block.shape {
                out.write_all(&(d as u64).to_le_bytes())?;
            }
            for v in &block.data {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, ParamsError> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(ParamsError::BadMagic);
        }
        let count = read_u32(&mut input)? as usize;
        let mut names = HashSet::new();
        let mut blocks = Vec::with_capacity(count);
        for _ in 0..count {
            let len = read_u32(&mut input)? as usize;
            let mut name = vec![0u8; len];
            input.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| ParamsError::BadName)?;
            if !names.insert(name.clone()) {
                return Err(ParamsError::Duplicate(name));
            }
            let ndims = read_u32(&mut input)? as usize;
            let mut shape = Vec::with_capacity(ndims);
            for _ in 0..ndims {
                let mut b = [0u8; 8];
                input.read_exact(&mut b)?;
                shape.push(u64::from_le_bytes(b) as usize);
            }
            let n: usize = shape.iter().product();
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                let mut b = [0u8; 8];
                input.read_exact(&mut b)?;
                data.push(f64::from_le_bytes(b));
            }
            blocks.push(ParamBlock { name, shape, data });
        }
        Ok(ModelParams { blocks })
    }
}

fn read_u32<R: Read>(input: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// `n` values uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot_uniform<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize, n: usize) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-bound..=bound)).collect()
}

/// Shape of one layer in an initialization plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerShape {
    Conv { name: String, width: usize, in_dim: usize, filters: usize },
    Dense { name: String, in_dim: usize, out_dim: usize },
}

/// Glorot-uniform weights and zero biases for every layer of `plan`,
/// deterministic per seed.
pub fn init_params(plan: &[LayerShape], seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::default();
    for layer in plan {
        let (name, p) = match layer {
            LayerShape::Conv { name, width, in_dim, filters } => {
                (name, ConvLayer::new(*width, *in_dim, *filters, &mut rng).to_model_params())
            }
            LayerShape::Dense { name, in_dim, out_dim } => (
                name,
                DenseLayer::new(*in_dim, *out_dim, Activation::Relu, &mut rng).to_model_params(),
            ),
        };
        params.blocks.extend(p.blocks.into_iter().map(|mut b| {
            b.name = format!("{name}.{}", b.name);
            b
        }));
    }
    params
}
