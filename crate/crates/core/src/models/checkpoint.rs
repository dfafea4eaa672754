//! `CFWT` weight checkpoints.
//!
//! Layout, all little-endian: magic `CFWT`, `u32` version, the config block
//! (kind code, T, K, L, M, d_model, h, d_k, d_v, kernel size, hidden,
//! encoder blocks, decoder blocks, norm axis, activation as `u32`; α and ε as
//! `f64`), a `u8` standardisation flag followed by four `f64` when set, a
//! `u32` array count, then per array: `u16` name length, name bytes, `u8`
//! rank, `u32` dims, `f64` data.

use std::path::Path;

use crate::autodiff::NormAxis;
use crate::error::{Error, Result};
use crate::fsutil::{write_atomic, ByteReader};
use crate::models::config::{Activation, ModelConfig, ModelKind};
use crate::models::{ModelWeights, PredictorModel};
use crate::scalar::Scalar;
use crate::sim::Standardization;
use crate::tensor::Array;

const MAGIC: &[u8; 4] = b"CFWT";
const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

/// Serialises a model to bytes.
pub fn write_checkpoint<S: Scalar>(model: &PredictorModel<S>) -> Result<Vec<u8>> {
    let c = &model.config;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_u32(&mut out, c.kind.code() as usize)?;
    for v in [c.t, c.k, c.l, c.m, c.d_model, c.heads, c.d_k, c.d_v, c.kernel_size, c.hidden, c.encoder_blocks, c.decoder_blocks] {
        put_u32(&mut out, v)?;
    }
    put_u32(&mut out, usize::from(c.norm_axis == NormAxis::Feature))?;
    put_u32(&mut out, usize::from(c.activation == Activation::Identity))?;
    out.extend_from_slice(&c.alpha.to_le_bytes());
    out.extend_from_slice(&c.eps.to_le_bytes());
    match &model.standardization {
        Some(s) => {
            out.push(1);
            for v in [s.mean_re, s.std_re, s.mean_im, s.std_im] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        None => out.push(0),
    }
    put_u32(&mut out, model.weights.len())?;
    for (name, arr) in model.weights.iter() {
        let len = u16::try_from(name.len()).map_err(|_| Error::Format(format!("weight name too long: {name}")))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        let rank = u8::try_from(arr.rank()).map_err(|_| Error::Format("rank exceeds 255".into()))?;
        out.push(rank);
        for &d in arr.shape() {
            put_u32(&mut out, d)?;
        }
        for v in arr.data() {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses checkpoint bytes and audits the weights against the config.
pub fn read_checkpoint<S: Scalar>(bytes: &[u8]) -> Result<PredictorModel<S>> {
    let mut r = ByteReader::new(bytes, "CFWT");
    r.magic(MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported CFWT version {version}")));
    }
    let kind = ModelKind::from_code(r.u32()?)?;
    let mut ints = [0usize; 12];
    for v in ints.iter_mut() {
        *v = r.u32()? as usize;
    }
    let [t, k, l, m, d_model, heads, d_k, d_v, kernel_size, hidden, encoder_blocks, decoder_blocks] = ints;
    let norm_axis = if r.u32()? == 1 { NormAxis::Feature } else { NormAxis::Time };
    let activation = if r.u32()? == 1 { Activation::Identity } else { Activation::Relu };
    let (alpha, eps) = (r.f64()?, r.f64()?);
    let config = ModelConfig {
        kind,
        t,
        k,
        l,
        m,
        d_model,
        heads,
        d_k,
        d_v,
        kernel_size,
        alpha,
        eps,
        hidden,
        encoder_blocks,
        decoder_blocks,
        norm_axis,
        activation,
    };
    let standardization = match r.u8()? {
        0 => None,
        1 => Some(Standardization { mean_re: r.f64()?, std_re: r.f64()?, mean_im: r.f64()?, std_im: r.f64()? }),
        f => return Err(Error::Format(format!("bad standardization flag {f}"))),
    };
    let count = r.u32()? as usize;
    let mut weights = ModelWeights::new();
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Format("weight name is not UTF-8".into()))?
            .to_string();
        let rank = r.u8()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| r.f64().map(S::lit)).collect::<Result<Vec<_>>>()?;
        let arr = Array::from_vec(&shape, data).map_err(|e| Error::Format(format!("weight `{name}`: {e}")))?;
        weights.insert(name, arr);
    }
    r.finish()?;
    let model = PredictorModel { config, weights, standardization };
    model.audit().map_err(|e| Error::Format(format!("checkpoint does not match its config: {e}")))?;
    Ok(model)
}

pub fn save_checkpoint<S: Scalar>(model: &PredictorModel<S>, path: &Path) -> Result<()> {
    write_atomic(path, &write_checkpoint(model)?)
}

pub fn load_checkpoint<S: Scalar>(path: &Path) -> Result<PredictorModel<S>> {
    read_checkpoint(&std::fs::read(path)?)
}
