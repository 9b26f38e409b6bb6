//! Versioned flat-array model files and the binary primitives shared with
//! the training checkpoints. All integers are little-endian; floats are raw
//! IEEE-754 bits, so files round-trip bit-exactly.

use std::io::{Read, Write};

use super::mlp::{Mlp, OutputActivation};
use crate::error::{CoreError, Result};
use crate::rng::SeedTree;

const MLP_MAGIC: &[u8; 8] = b"EWMLP\x01\0\0";

pub fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn write_f64_slice<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    write_u64(w, v.len() as u64)?;
    for x in v {
        w.write_all(&x.to_bits().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_f64_slice<R: Read>(r: &mut R) -> Result<Vec<f64>> {
    let n = read_u64(r)? as usize;
    let mut out = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_bits(u64::from_le_bytes(b)));
    }
    Ok(out)
}

pub fn write_bool_slice<W: Write>(w: &mut W, v: &[bool]) -> Result<()> {
    write_u64(w, v.len() as u64)?;
    for &x in v {
        w.write_all(&[x as u8])?;
    }
    Ok(())
}

pub fn read_bool_slice<R: Read>(r: &mut R) -> Result<Vec<bool>> {
    let n = read_u64(r)? as usize;
    let mut bytes = vec![0u8; n];
    r.read_exact(&mut bytes)?;
    Ok(bytes.into_iter().map(|b| b != 0).collect())
}

pub fn write_mlp<W: Write>(w: &mut W, net: &Mlp) -> Result<()> {
    w.write_all(MLP_MAGIC)?;
    write_u64(w, matches!(net.output, OutputActivation::Tanh) as u64)?;
    write_u64(w, net.sizes.len() as u64)?;
    for &s in &net.sizes {
        write_u64(w, s as u64)?;
    }
    write_f64_slice(w, &net.flat_params())
}

pub fn read_mlp<R: Read>(r: &mut R) -> Result<Mlp> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MLP_MAGIC {
        return Err(CoreError::BadFormat("not a model file".into()));
    }
    let output = if read_u64(r)? == 1 { OutputActivation::Tanh } else { OutputActivation::Linear };
    let n = read_u64(r)? as usize;
    if n < 2 || n > 64 {
        return Err(CoreError::BadFormat(format!("implausible layer count {n}")));
    }
    let mut sizes = Vec::with_capacity(n);
    for _ in 0..n {
        sizes.push(read_u64(r)? as usize);
    }
    // build with a throwaway stream, then overwrite every parameter
    let mut net = Mlp::new(&sizes, output, &mut SeedTree::new(0).stream(&[0]));
    let flat = read_f64_slice(r)?;
    net.set_flat_params(&flat)?;
    Ok(net)
}

pub fn save_mlp(path: &std::path::Path, net: &Mlp) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_mlp(&mut f, net)
}

pub fn load_mlp(path: &std::path::Path) -> Result<Mlp> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_mlp(&mut f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mlp_round_trip_is_bit_exact() {
        let mut rng = SeedTree::new(31).stream(&[0]);
        let net = Mlp::new(&[5, 32, 32, 4], OutputActivation::Tanh, &mut rng);
        let mut buf = Vec::new();
        write_mlp(&mut buf, &net).unwrap();
        let back = read_mlp(&mut buf.as_slice()).unwrap();
        assert_eq!(net.sizes, back.sizes);
        assert_eq!(net.output, back.output);
        let a = net.flat_params();
        let b = back.flat_params();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn garbage_is_rejected() {
        let junk = b"not a model".to_vec();
        assert!(read_mlp(&mut junk.as_slice()).is_err());
    }
}
