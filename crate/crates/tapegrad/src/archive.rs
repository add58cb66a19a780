use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::store::{Mat32, Param, ParamStore};

const MAGIC: &[u8; 4] = b"TGAR";
const VERSION: u32 = 1;

/// Write named stores to a single archive. Tensor payloads are row-major
/// little-endian f32, so a save/load cycle is bit-exact.
pub fn save_stores(path: &Path, stores: &[(&str, &ParamStore)]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(stores.len() as u32).to_le_bytes())?;
    for (name, store) in stores {
        write_str(&mut w, name)?;
        w.write_all(&store.step.to_le_bytes())?;
        w.write_all(&(store.len() as u32).to_le_bytes())?;
        for (pname, p) in store.iter() {
            write_str(&mut w, pname)?;
            let flags: u8 = if p.ema.is_some() { 1 } else { 0 };
            w.write_all(&[flags])?;
            w.write_all(&(p.value.nrows() as u32).to_le_bytes())?;
            w.write_all(&(p.value.ncols() as u32).to_le_bytes())?;
            write_mat(&mut w, &p.value)?;
            write_mat(&mut w, &p.m)?;
            write_mat(&mut w, &p.v)?;
            if let Some(ema) = &p.ema {
                write_mat(&mut w, ema)?;
            }
        }
    }
    w.flush()
}

pub fn load_stores(path: &Path) -> io::Result<Vec<(String, ParamStore)>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "not a tensor archive"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unsupported archive version {version}"),
        ));
    }
    let n_stores = read_u32(&mut r)? as usize;
    let mut out = Vec::with_capacity(n_stores);
    for _ in 0..n_stores {
        let sname = read_str(&mut r)?;
        let step = read_u64(&mut r)?;
        let n_params = read_u32(&mut r)? as usize;
        let mut store = ParamStore::new();
        store.step = step;
        for _ in 0..n_params {
            let pname = read_str(&mut r)?;
            let mut flags = [0u8; 1];
            r.read_exact(&mut flags)?;
            let rows = read_u32(&mut r)? as usize;
            let cols = read_u32(&mut r)? as usize;
            let value = read_mat(&mut r, rows, cols)?;
            let m = read_mat(&mut r, rows, cols)?;
            let v = read_mat(&mut r, rows, cols)?;
            let ema = if flags[0] & 1 != 0 { Some(read_mat(&mut r, rows, cols)?) } else { None };
            store.insert(&pname, value);
            let p = store.get_mut(&pname);
            p.m = m;
            p.v = v;
            p.ema = ema;
        }
        out.push((sname, store));
    }
    Ok(out)
}

fn write_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    let bytes = s.as_bytes();
    w.write_all(&(bytes.len() as u16).to_le_bytes())?;
    w.write_all(bytes)
}

fn read_str<R: Read>(r: &mut R) -> io::Result<String> {
    let mut len = [0u8; 2];
    r.read_exact(&mut len)?;
    let mut buf = vec![0u8; u16::from_le_bytes(len) as usize];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

fn write_mat<W: Write>(w: &mut W, m: &Mat32) -> io::Result<()> {
    for &v in m.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_mat<R: Read>(r: &mut R, rows: usize, cols: usize) -> io::Result<Mat32> {
    let mut buf = vec![0u8; rows * cols * 4];
    r.read_exact(&mut buf)?;
    let data: Vec<f32> =
        buf.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Mat32::from_shape_vec((rows, cols), data)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Exact equality of two stores including moments and EMA, for resume checks.
pub fn stores_identical(a: &ParamStore, b: &ParamStore) -> bool {
    if a.step != b.step || a.len() != b.len() {
        return false;
    }
    a.iter().zip(b.iter()).all(|((an, ap), (bn, bp))| an == bn && params_identical(ap, bp))
}

fn params_identical(a: &Param, b: &Param) -> bool {
    fn bits_eq(x: &Mat32, y: &Mat32) -> bool {
        x.dim() == y.dim() && x.iter().zip(y.iter()).all(|(a, b)| a.to_bits() == b.to_bits())
    }
    bits_eq(&a.value, &b.value)
        && bits_eq(&a.m, &b.m)
        && bits_eq(&a.v, &b.v)
        && match (&a.ema, &b.ema) {
            (None, None) => true,
            (Some(x), Some(y)) => bits_eq(x, y),
            _ => false,
        }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn archive_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut store = ParamStore::new();
        for (i, shape) in [(3usize, 5usize), (1, 7), (4, 1)].iter().enumerate() {
            let mut m = Mat32::zeros(*shape);
            for v in m.iter_mut() {
                *v = rng.random_range(-2.0..2.0);
            }
            store.insert(&format!("p{i}"), m);
        }
        store.enable_ema();
        store.step = 42;
        // perturb moments so they are nontrivial
        for (_, p) in store.iter_mut() {
            p.m.fill(0.25);
            p.v.fill(1e-9);
        }

        let dir = std::env::temp_dir().join(format!("tgar_test_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.tgar");
        save_stores(&path, &[("model", &store)]).unwrap();
        let loaded = load_stores(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].0, "model");
        assert!(stores_identical(&store, &loaded[0].1));
        std::fs::remove_dir_all(&dir).ok();
    }
}
