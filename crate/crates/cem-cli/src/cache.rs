//! Binary cache for multiscale basis sets.
//!
//! Building the basis dominates run time, so sweeps that revisit a
//! configuration can reload it from disk. The file layout is little-endian:
//!
//! ```text
//! magic      8 bytes   "CEMBASIS"
//! version    u32       1
//! key        u64       fingerprint of (grid, medium, layers, variant, modes)
//! layers     i64       oversampling layer count, -1 for the global space
//! variant    u8        0 relaxed, 1 constrained
//! modes      u32       basis functions per coarse element
//! nColumns   u32
//! nDofs      u64       fine DOFs per column
//! columns    nColumns * (u32 element, u32 mode, nDofs * f64 values)
//! ```
//!
//! Columns are stored in (element, mode) order with the column's nodal
//! values contiguous. Reading verifies magic, version, key, and every
//! recorded count before handing the basis back.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read as _, Write as _};
use std::path::Path;

use anyhow::{bail, Context, Result};
use cem::basis::{CemBasisSet, Variant};
use cem::{FineFieldF64, GridF64, MaterialFieldF64};

const MAGIC: &[u8; 8] = b"CEMBASIS";
const VERSION: u32 = 1;

/// FNV-1a over everything the basis depends on. Collisions would silently
/// reuse a stale basis, but 64 bits over a handful of configurations per
/// project makes that a non-concern.
pub fn cache_key(
    grid: &GridF64,
    medium: &MaterialFieldF64,
    layers: Option<usize>,
    variant: Variant,
    modes: usize,
) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    let spec = grid.spec();
    for n in [spec.coarse_nx, spec.coarse_ny, spec.sub_nx, spec.sub_ny] {
        eat(&(n as u64).to_le_bytes());
    }
    for cell in 0..grid.n_fine_cells() {
        eat(&medium.young(cell).to_le_bytes());
        eat(&medium.poisson(cell).to_le_bytes());
    }
    eat(&layers.map_or(u64::MAX, |m| m as u64).to_le_bytes());
    eat(&[variant_tag(variant)]);
    eat(&(modes as u64).to_le_bytes());
    hash
}

fn variant_tag(variant: Variant) -> u8 {
    match variant {
        Variant::Relaxed => 0,
        Variant::Constrained => 1,
    }
}

pub fn write_cache(path: &Path, key: u64, space: &CemBasisSet<f64>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&key.to_le_bytes())?;
    let layers: i64 = space.layers().map_or(-1, |m| m as i64);
    w.write_all(&layers.to_le_bytes())?;
    w.write_all(&[variant_tag(space.variant())])?;
    w.write_all(&(space.modes() as u32).to_le_bytes())?;
    w.write_all(&(space.n_columns() as u32).to_le_bytes())?;
    let n_dofs = if space.n_columns() == 0 {
        0
    } else {
        space.column(0).len()
    };
    w.write_all(&(n_dofs as u64).to_le_bytes())?;
    for k in 0..space.n_columns() {
        let (element, mode) = space.source(k);
        w.write_all(&(element as u32).to_le_bytes())?;
        w.write_all(&(mode as u32).to_le_bytes())?;
        let column = space.column(k);
        for i in 0..column.len() {
            w.write_all(&column[i].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl std::io::Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl std::io::Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_cache(path: &Path, expected_key: u64) -> Result<CemBasisSet<f64>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .with_context(|| format!("reading {}", path.display()))?;
    if &magic != MAGIC {
        bail!("{} is not a basis cache file", path.display());
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        bail!("cache version {version} is not supported (expected {VERSION})");
    }
    let key = read_u64(&mut r)?;
    if key != expected_key {
        bail!(
            "cache key {key:#018x} does not match the requested configuration {expected_key:#018x}"
        );
    }
    let mut layers_bytes = [0u8; 8];
    r.read_exact(&mut layers_bytes)?;
    let layers_raw = i64::from_le_bytes(layers_bytes);
    let layers = if layers_raw < 0 {
        None
    } else {
        Some(layers_raw as usize)
    };
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let variant = match tag[0] {
        0 => Variant::Relaxed,
        1 => Variant::Constrained,
        t => bail!("unknown variant tag {t}"),
    };
    let modes = read_u32(&mut r)? as usize;
    let n_columns = read_u32(&mut r)? as usize;
    let n_dofs = read_u64(&mut r)? as usize;
    if modes == 0 || n_columns % modes != 0 {
        bail!("cache holds {n_columns} columns, not a multiple of {modes} modes");
    }
    let mut columns = Vec::with_capacity(n_columns);
    for k in 0..n_columns {
        let element = read_u32(&mut r)? as usize;
        let mode = read_u32(&mut r)? as usize;
        if (element, mode) != (k / modes, k % modes) {
            bail!("cache column {k} is labeled ({element}, {mode}), out of order");
        }
        let mut values = vec![0.0f64; n_dofs];
        let mut bytes = [0u8; 8];
        for v in values.iter_mut() {
            r.read_exact(&mut bytes)?;
            *v = f64::from_le_bytes(bytes);
        }
        columns.push(FineFieldF64::from_vec(values));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        bail!("{} has trailing bytes after the last column", path.display());
    }
    Ok(CemBasisSet::from_parts(variant, layers, modes, columns))
}
