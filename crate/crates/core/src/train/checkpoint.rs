//! Checkpoint format: magic "WRNK", format version, matrix dimensions,
//! U and V row-major, then the auxiliary variables aligned to the
//! co-occurrence record order. Little-endian throughout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::Path;

use super::AuxVariables;
use crate::binio;
use crate::error::{Error, Result};
use crate::model::EmbeddingModel;

const MAGIC: &[u8; 4] = b"WRNK";
const VERSION: u32 = 1;

pub struct Checkpoint {
    pub model: EmbeddingModel,
    pub aux: AuxVariables,
}

pub fn save_checkpoint(model: &EmbeddingModel, aux: &AuxVariables, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let file = File::create(&tmp).map_err(|e| Error::io(tmp.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        let werr = |e| Error::io("writing checkpoint", e);
        w_all(&mut w, MAGIC).map_err(werr)?;
        binio::write_u32(&mut w, VERSION).map_err(werr)?;
        binio::write_u32(&mut w, model.words() as u32).map_err(werr)?;
        binio::write_u32(&mut w, model.contexts() as u32).map_err(werr)?;
        binio::write_u32(&mut w, model.k() as u32).map_err(werr)?;
        binio::write_f64_slice(&mut w, model.word_rows()).map_err(werr)?;
        binio::write_f64_slice(&mut w, model.context_rows()).map_err(werr)?;
        binio::write_u64(&mut w, aux.len() as u64).map_err(werr)?;
        binio::write_f64_slice(&mut w, aux.values()).map_err(werr)?;
        use std::io::Write;
        w.flush().map_err(werr)?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io("renaming checkpoint", e))?;
    Ok(())
}

fn w_all(w: &mut impl std::io::Write, bytes: &[u8]) -> std::io::Result<()> {
    w.write_all(bytes)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = BufReader::new(file);
    let rerr = |e| Error::io("reading checkpoint", e);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(rerr)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad checkpoint magic {magic:?}")));
    }
    let version = binio::read_u32(&mut r).map_err(rerr)?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}, expected {VERSION}"
        )));
    }
    let words = binio::read_u32(&mut r).map_err(rerr)? as usize;
    let contexts = binio::read_u32(&mut r).map_err(rerr)? as usize;
    let k = binio::read_u32(&mut r).map_err(rerr)? as usize;
    if words == 0 || contexts == 0 || k == 0 {
        return Err(Error::Format(format!(
            "degenerate checkpoint dimensions {words}x{contexts}x{k}"
        )));
    }
    let mut u = vec![0.0; words * k];
    binio::read_f64_slice(&mut r, &mut u).map_err(rerr)?;
    let mut v = vec![0.0; contexts * k];
    binio::read_f64_slice(&mut r, &mut v).map_err(rerr)?;
    let n_aux = binio::read_u64(&mut r).map_err(rerr)? as usize;
    let mut xi = vec![0.0; n_aux];
    binio::read_f64_slice(&mut r, &mut xi).map_err(rerr)?;
    let mut trailing = [0u8; 1];
    match r.read(&mut trailing) {
        Ok(0) => {}
        Ok(_) => return Err(Error::Format("trailing bytes after checkpoint payload".into())),
        Err(e) => return Err(Error::io("reading checkpoint", e)),
    }

    let model = EmbeddingModel::from_parts(u, v, words, contexts, k)?;
    let aux = AuxVariables::from_values(xi)?;
    Ok(Checkpoint { model, aux })
}
