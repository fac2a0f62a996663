//! Model files.
//!
//! Layout (little-endian):
//!
//! | bytes | field                                   |
//! |-------|-----------------------------------------|
//! | 8     | magic `SOFOREST`                        |
//! | 4     | format version (u32)                    |
//! | 8     | payload length (u64)                    |
//! | n     | payload: bincode-encoded [`Forest`]     |
//! | 4     | CRC-32 of the payload (u32)             |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Forest;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"SOFOREST";
pub const MODEL_VERSION: u32 = 1;

pub fn save_model(forest: &Forest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let payload = bincode::serialize(forest)
        .map_err(|e| Error::Format(format!("cannot encode model: {e}")))?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(MODEL_MAGIC).map_err(io)?;
    w.write_all(&MODEL_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(payload.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&payload).map_err(io)?;
    w.write_all(&crc32fast::hash(&payload).to_le_bytes()).map_err(io)?;
    w.flush().map_err(io)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Forest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Forest> {
    let truncated = || Error::Format("truncated model file".into());
    if bytes.len() < 8 || &bytes[..8] != MODEL_MAGIC {
        if bytes.len() < 8 && MODEL_MAGIC.starts_with(bytes) {
            return Err(truncated());
        }
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let header = bytes.get(8..20).ok_or_else(truncated)?;
    let version = u32::from_le_bytes(header[..4].try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(Error::Version {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let len = u64::from_le_bytes(header[4..12].try_into().unwrap());
    let len = usize::try_from(len).map_err(|_| truncated())?;
    let end = 20usize.checked_add(len).ok_or_else(truncated)?;
    let payload = bytes.get(20..end).ok_or_else(truncated)?;
    let crc = bytes.get(end..end + 4).ok_or_else(truncated)?;
    if bytes.len() != end + 4 {
        return Err(Error::Format("trailing bytes after model".into()));
    }
    if crc32fast::hash(payload).to_le_bytes() != crc {
        return Err(Error::Format("checksum mismatch".into()));
    }
    let forest: Forest = bincode::deserialize(payload)
        .map_err(|e| Error::Format(format!("cannot decode model: {e}")))?;
    forest.validate()?;
    Ok(forest)
}
