//! Binary on-disk cache for shooting results, enabled by `NLS_NORMALIZED_CACHE_DIR`.
//! Any file that fails the magic, version, parameter or checksum test is ignored
//! and overwritten after recomputation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::grid::RadialGrid;

use super::shooting::{ShootConfig, ShotProfile};

pub const CACHE_ENV: &str = "NLS_NORMALIZED_CACHE_DIR";
const MAGIC: &[u8; 8] = b"NLSWPROF";
const VERSION: u32 = 1;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV)
        .filter(|s| !s.is_empty())
        .map(PathBuf::from)
}

pub fn file_name(dim: usize, p: f64) -> String {
    format!("ground_N{dim}_p{:016x}.bin", p.to_bits())
}

fn encode(dim: usize, p: f64, cfg: &ShootConfig, shot: &ShotProfile) -> Vec<u8> {
    let n = shot.w.len();
    let mut buf = Vec::with_capacity(80 + 16 * n);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(dim as u32).to_le_bytes());
    for x in [p, cfg.r_far, cfg.step] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    for x in [shot.w0, shot.bracket_width, shot.residual] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for x in shot.w.iter().chain(&shot.dw) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    let sum = fnv1a(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Option<[u8; K]> {
        let s = self.bytes.get(self.pos..self.pos + K)?;
        self.pos += K;
        s.try_into().ok()
    }
    fn f64(&mut self) -> Option<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }
    fn u32(&mut self) -> Option<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }
    fn u64(&mut self) -> Option<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }
}

fn decode(bytes: &[u8], dim: usize, p: f64, cfg: &ShootConfig) -> Option<ShotProfile> {
    if bytes.len() < 8 {
        return None;
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    if fnv1a(body) != u64::from_le_bytes(tail.try_into().ok()?) {
        return None;
    }
    let mut r = Reader { bytes: body, pos: 0 };
    if &r.take::<8>()? != MAGIC || r.u32()? != VERSION || r.u32()? as usize != dim {
        return None;
    }
    for expect in [p, cfg.r_far, cfg.step] {
        if r.f64()?.to_bits() != expect.to_bits() {
            return None;
        }
    }
    let n = r.u64()? as usize;
    let (w0, bracket_width, residual) = (r.f64()?, r.f64()?, r.f64()?);
    if body.len() != r.pos + 16 * n {
        return None;
    }
    let mut vals = Vec::with_capacity(2 * n);
    for _ in 0..2 * n {
        let x = r.f64()?;
        if !x.is_finite() {
            return None;
        }
        vals.push(x);
    }
    let dw = vals.split_off(n);
    let h = cfg.step;
    let grid = RadialGrid::new(dim, (n - 1) as f64 * h, n).ok()?;
    Some(ShotProfile {
        w0,
        bracket_width,
        grid,
        w: vals,
        dw,
        residual,
    })
}

pub fn load(dir: &Path, dim: usize, p: f64, cfg: &ShootConfig) -> Option<ShotProfile> {
    let bytes = fs::read(dir.join(file_name(dim, p))).ok()?;
    decode(&bytes, dim, p, cfg)
}

/// Best effort: a cache that cannot be written only costs recomputation.
pub fn store(dir: &Path, dim: usize, p: f64, cfg: &ShootConfig, shot: &ShotProfile) {
    let _ = fs::create_dir_all(dir);
    let path = dir.join(file_name(dim, p));
    let tmp = dir.join(format!("{}.{}.tmp", file_name(dim, p), std::process::id()));
    let ok = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(&encode(dim, p, cfg, shot)))
        .is_ok();
    if ok {
        let _ = fs::rename(&tmp, &path);
    } else {
        let _ = fs::remove_file(&tmp);
    }
}
