//! Little-endian primitives shared by the binary file formats.

use std::io::{self, Read, Write};

pub fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub fn write_u32(w: &mut impl Write, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn write_u64(w: &mut impl Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn write_f64(w: &mut impl Write, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

/// Bulk f64 slice read; the file stores plain little-endian doubles.
pub fn read_f64_slice(r: &mut impl Read, out: &mut [f64]) -> io::Result<()> {
    let mut buf = [0u8; 8 * 1024];
    let mut filled = 0;
    while filled < out.len() {
        let want = (out.len() - filled).min(buf.len() / 8);
        let bytes = &mut buf[..want * 8];
        r.read_exact(bytes)?;
        for (i, chunk) in bytes.chunks_exact(8).enumerate() {
            out[filled + i] = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        filled += want;
    }
    Ok(())
}

pub fn write_f64_slice(w: &mut impl Write, vals: &[f64]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(8 * 1024);
    for chunk in vals.chunks(1024) {
        buf.clear();
        for &v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// splitmix64 step; used to derive independent RNG streams from one seed.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a stream seed from a base seed and a tag path.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut s = mix64(seed);
    for &t in tags {
        s = mix64(s ^ t);
    }
    s
}
