//! Binary network checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4 | magic `HTCK` |
//! | 4 | format version (`u32`, currently 1) |
//! | 4 | activation tag (`u32`, 0 = sine) |
//! | 8 | input scale (`f64`) |
//! | 4 | number of layer sizes `L` (`u32`) |
//! | 4·L | layer sizes (`u32`) |
//! | 8 | parameter count `P` (`u64`) |
//! | 8·P | flat parameters (`f64`) |

use std::io::{Read, Write};
use std::path::Path;

use super::{Activation, Architecture, MlpParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"HTCK";
const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(w: &mut W, params: &MlpParams) -> Result<()> {
    let arch = params.architecture();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let tag: u32 = match arch.activation {
        Activation::Sine => 0,
    };
    w.write_all(&tag.to_le_bytes())?;
    w.write_all(&arch.input_scale.to_le_bytes())?;
    w.write_all(&(arch.layer_sizes.len() as u32).to_le_bytes())?;
    for &s in &arch.layer_sizes {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    w.write_all(&(params.flat().len() as u64).to_le_bytes())?;
    for v in params.flat() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated checkpoint".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<MlpParams> {
    if &take::<4, _>(r)? != MAGIC {
        return Err(Error::Format("not a network checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let activation = match u32::from_le_bytes(take(r)?) {
        0 => Activation::Sine,
        t => return Err(Error::Format(format!("unknown activation tag {t}"))),
    };
    let input_scale = f64::from_le_bytes(take(r)?);
    let n_sizes = u32::from_le_bytes(take(r)?) as usize;
    if n_sizes > 1024 {
        return Err(Error::Format(format!("implausible layer count {n_sizes}")));
    }
    let layer_sizes = (0..n_sizes)
        .map(|_| take(r).map(|b| u32::from_le_bytes(b) as usize))
        .collect::<Result<Vec<_>>>()?;
    let arch = Architecture {
        layer_sizes,
        activation,
        input_scale,
    };
    arch.validate().map_err(|e| Error::Format(e.to_string()))?;
    let count = u64::from_le_bytes(take(r)?) as usize;
    if count != arch.param_count() {
        return Err(Error::Format(format!(
            "parameter count {count} does not match architecture ({})",
            arch.param_count()
        )));
    }
    let flat = (0..count)
        .map(|_| take(r).map(f64::from_le_bytes))
        .collect::<Result<Vec<_>>>()?;
    MlpParams::from_flat(&arch, &flat)
}

pub fn save_checkpoint(path: &Path, params: &MlpParams) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_checkpoint(&mut f, params)?;
    f.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<MlpParams> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_checkpoint(&mut f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let mut arch = Architecture::uniform(2, 7).unwrap();
        arch.input_scale = 2.5;
        let p = MlpParams::init(&arch, 9).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &p).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 8 + 4 + 4 * 4 + 8 + 8 * arch.param_count());
        let q = read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn rejects_corrupt_input() {
        let p = MlpParams::init(&Architecture::uniform(1, 3).unwrap(), 0).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &p).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_checkpoint(&mut bad.as_slice()), Err(Error::Format(_))));
        let short = &buf[..buf.len() - 3];
        assert!(matches!(read_checkpoint(&mut &short[..]), Err(Error::Format(_))));
    }
}
