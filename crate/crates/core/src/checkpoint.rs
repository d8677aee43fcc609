//! Binary checkpoint format.
//!
//! ```text
//! magic     6 bytes  "ZSCAT1"
//! arch_id   u32 LE   1, 2 or 3
//! embed_dim u32 LE
//! hidden    u32 LE   0 for architecture 1
//! seed      u64 LE
//! params    f64 LE   every parameter block in layout order, row-major
//! ```
//!
//! Nothing may follow the last parameter.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::model::{Architecture, RelatednessModel};

pub const MAGIC: &[u8; 6] = b"ZSCAT1";

pub fn save_checkpoint<W: Write>(model: &RelatednessModel, mut sink: W) -> Result<()> {
    sink.write_all(MAGIC)?;
    sink.write_u32::<LittleEndian>(model.arch().id())?;
    sink.write_u32::<LittleEndian>(dim_u32(model.embed_dim())?)?;
    sink.write_u32::<LittleEndian>(dim_u32(model.hidden_dim())?)?;
    sink.write_u64::<LittleEndian>(model.seed())?;
    for &v in model.params() {
        sink.write_f64::<LittleEndian>(v)?;
    }
    sink.flush()?;
    Ok(())
}

fn dim_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| {
        Error::InvalidArgument(format!("dimension {n} does not fit the checkpoint header"))
    })
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptCheckpoint(msg.into())
}

pub fn load_checkpoint<R: Read>(mut source: R) -> Result<RelatednessModel> {
    let mut magic = [0u8; 6];
    source
        .read_exact(&mut magic)
        .map_err(|_| corrupt("file shorter than the magic number"))?;
    if &magic != MAGIC {
        return Err(corrupt(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let header = |e: std::io::Error| corrupt(format!("truncated header: {e}"));
    let arch_id = source.read_u32::<LittleEndian>().map_err(header)?;
    let embed_dim = source.read_u32::<LittleEndian>().map_err(header)? as usize;
    let hidden = source.read_u32::<LittleEndian>().map_err(header)? as usize;
    let seed = source.read_u64::<LittleEndian>().map_err(header)?;

    let arch = Architecture::from_id(arch_id)
        .map_err(|_| corrupt(format!("unknown architecture id {arch_id}")))?;
    if !arch.uses_lstm() && hidden != 0 {
        return Err(corrupt("architecture 1 must record hidden size 0"));
    }
    let mut model = RelatednessModel::zeros(arch, embed_dim, hidden)
        .map_err(|e| corrupt(format!("header describes an invalid model: {e}")))?;

    let expected = model.params().len();
    let mut params = vec![0.0; expected];
    source
        .read_f64_into::<LittleEndian>(&mut params)
        .map_err(|_| corrupt(format!("truncated parameters: expected {expected} values")))?;
    let mut rest = [0u8; 1];
    if source.read(&mut rest)? != 0 {
        return Err(corrupt("trailing bytes after parameters"));
    }
    if params.iter().any(|v| !v.is_finite()) {
        return Err(corrupt("non-finite parameter"));
    }
    model = RelatednessModel::from_parts(arch, embed_dim, hidden, seed, params)?;
    Ok(model)
}
