//! Little-endian batch files with a JSON sidecar.
//!
//! ```text
//! "HCLB" | version u32 | N u32 | n u64 | s f64 | seed u64 | config hash u64
//! n·N × (re f64, im f64)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::sampler::{Provenance, SampleBatch, SamplerConfig};
use crate::error::{Error, Result};
use crate::lie::{GroupSpec, StratifiedAlgebra};

const MAGIC: &[u8; 4] = b"HCLB";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSidecar {
    pub group: GroupSpec,
    pub config: SamplerConfig,
    pub config_hash: u64,
    /// Time of the stored points; differs from `config.s` for dilated batches.
    pub s: f64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub fn write_batch(path: &Path, batch: &SampleBatch) -> Result<()> {
    let alg = batch.algebra();
    let prov = batch.provenance();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(alg.dim() as u32).to_le_bytes())?;
    w.write_all(&(batch.len() as u64).to_le_bytes())?;
    w.write_all(&batch.s().to_le_bytes())?;
    w.write_all(&prov.config.seed.to_le_bytes())?;
    w.write_all(&prov.config_hash.to_le_bytes())?;
    for z in batch.raw() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    let sidecar = BatchSidecar {
        group: alg.to_spec(),
        config: prov.config.clone(),
        config_hash: prov.config_hash,
        s: batch.s(),
    };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

fn take<const K: usize>(r: &mut impl Read) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_batch(path: &Path) -> Result<SampleBatch> {
    let sidecar: BatchSidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let alg = Arc::new(StratifiedAlgebra::from_spec(&sidecar.group)?);
    let mut r = BufReader::new(File::open(path)?);
    if &take::<4>(&mut r)? != MAGIC {
        return Err(Error::Parse(format!("{} is not a batch file", path.display())));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported batch version {version}")));
    }
    let dim = u32::from_le_bytes(take(&mut r)?) as usize;
    if dim != alg.dim() {
        return Err(Error::Dimension {
            expected: alg.dim(),
            got: dim,
        });
    }
    let n = u64::from_le_bytes(take(&mut r)?) as usize;
    let s = f64::from_le_bytes(take(&mut r)?);
    let seed = u64::from_le_bytes(take(&mut r)?);
    let hash = u64::from_le_bytes(take(&mut r)?);
    if seed != sidecar.config.seed || hash != sidecar.config_hash || s != sidecar.s {
        return Err(Error::Parse("batch header disagrees with its sidecar".into()));
    }
    if hash != sidecar.config.hash_with(&alg) {
        return Err(Error::Parse("config hash does not match the sidecar config".into()));
    }
    let mut points = Vec::with_capacity(n * dim);
    for _ in 0..n * dim {
        let re = f64::from_le_bytes(take(&mut r)?);
        let im = f64::from_le_bytes(take(&mut r)?);
        points.push(Complex64::new(re, im));
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Parse("trailing bytes after batch payload".into()));
    }
    let provenance = Provenance {
        config: sidecar.config,
        config_hash: hash,
    };
    SampleBatch::from_parts(alg, s, points, provenance)
}
