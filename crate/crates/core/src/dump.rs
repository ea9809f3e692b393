//! Binary channel dump.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes   b"HBFCHAN1"
//! hlen     u32       length of the JSON header in bytes
//! header   hlen      {"dims":[d1,d2,d3],"seed":u64,"params":{...}}
//! payload  d1·d2·d3 × (f64 re, f64 im), storage order of ComplexTensor3
//! ```
//!
//! Floats are written with `to_le_bytes`, so a dump round-trips bit-exactly.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::linalg::ComplexTensor3;

pub const MAGIC: &[u8; 8] = b"HBFCHAN1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub dims: [usize; 3],
    pub seed: u64,
    pub params: ChannelParams,
}

pub fn write_channel<W: Write>(mut w: W, tensor: &ComplexTensor3, seed: u64, params: &ChannelParams) -> Result<()> {
    let header = DumpHeader {
        dims: tensor.dims(),
        seed,
        params: params.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let hlen = u32::try_from(json.len()).map_err(|_| Error::Format("header too large".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&hlen.to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(tensor.as_slice().len() * 16);
    for z in tensor.as_slice() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_channel<R: Read>(mut r: R) -> Result<(DumpHeader, ComplexTensor3)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let header: DumpHeader = serde_json::from_slice(&json)?;

    let count = header
        .dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("dims overflow".into()))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != count * 16 {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            count * 16
        )));
    }
    let data = payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    let tensor = ComplexTensor3::from_raw(header.dims, data)?;
    Ok((header, tensor))
}
