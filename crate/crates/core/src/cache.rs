//! On-disk spectrum cache, one file per chain.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size    field
//! 0       8       magic "OTOCSPEC"
//! 8       4       format version (u32)
//! 12      4       flags (u32): bit 0 set when eigenvectors are complex
//! 16      8       D (u64)
//! 24      8       L (u64)
//! 32      8       J (f64)
//! 40      8       hx (f64)
//! 48      8       hz (f64)
//! 56      8*D     eigenvalues, ascending
//! ...     8*D*D   eigenvectors, column-major; complex entries take 16 bytes (re, im)
//! ...     32      SHA-256 of every preceding byte
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use faer::{c64, Mat};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectrum::{ChainParams, Spectrum};

pub const MAGIC: &[u8; 8] = b"OTOCSPEC";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 56;
const DIGEST_LEN: usize = 32;
const FLAG_COMPLEX: u32 = 1;

/// Canonical file stem for a chain, with every parameter at fixed precision.
pub fn cache_key(p: &ChainParams) -> String {
    // Anything that prints as zero is written unsigned, so -0.0 and 0.0 share a file.
    let fixed = |x: f64| {
        let s = format!("{x:.12}");
        if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
            s.trim_start_matches('-').to_string()
        } else {
            s
        }
    };
    format!("L{}_J{}_hx{}_hz{}", p.sites, fixed(p.coupling), fixed(p.hx), fixed(p.hz))
}

#[derive(Clone, Debug)]
pub struct SpectrumCache {
    dir: PathBuf,
}

/// Summary of one cache file, as reported by [`SpectrumCache::entries`].
#[derive(Clone, Debug, serde::Serialize)]
pub struct CacheEntry {
    pub file: String,
    pub bytes: u64,
    pub chain: Option<ChainParams>,
    pub dim: Option<usize>,
    pub error: Option<String>,
}

impl SpectrumCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SpectrumCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, p: &ChainParams) -> PathBuf {
        self.dir.join(format!("{}.spec", cache_key(p)))
    }

    /// The cached spectrum for `p`, or `None` when no file exists.
    pub fn load(&self, p: &ChainParams) -> Result<Option<Spectrum>> {
        let path = self.path_for(p);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(path, e)),
        };
        let (chain, s) = decode(&bytes).map_err(|msg| Error::Cache { path: path.clone(), msg })?;
        if chain != *p {
            return Err(Error::Cache { path, msg: format!("file holds {chain:?}, expected {p:?}") });
        }
        Ok(Some(s.with_chain(chain)))
    }

    pub fn store(&self, p: &ChainParams, s: &Spectrum) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path_for(p);
        let tmp = path.with_extension("spec.tmp");
        fs::write(&tmp, encode(p, s)).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    /// Loads the spectrum of `p`, diagonalizing and storing it on a miss.
    pub fn get_or_compute(&self, p: &ChainParams) -> Result<Spectrum> {
        if let Some(s) = self.load(p)? {
            return Ok(s);
        }
        let s = Spectrum::of_chain(p)?;
        self.store(p, &s)?;
        Ok(s)
    }

    pub fn entries(&self) -> Result<Vec<CacheEntry>> {
        let mut out = Vec::new();
        let rd = match fs::read_dir(&self.dir) {
            Ok(rd) => rd,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(Error::io(&self.dir, e)),
        };
        for entry in rd {
            let entry = entry.map_err(|e| Error::io(&self.dir, e))?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("spec") {
                continue;
            }
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let file = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            let (chain, dim, error) = match decode(&bytes) {
                Ok((c, s)) => (Some(c), Some(s.dim()), None),
                Err(msg) => (None, None, Some(msg)),
            };
            out.push(CacheEntry { file, bytes: bytes.len() as u64, chain, dim, error });
        }
        out.sort_by(|a, b| a.file.cmp(&b.file));
        Ok(out)
    }

    /// Removes every cache file; returns how many were deleted.
    pub fn clear(&self) -> Result<usize> {
        let entries = self.entries()?;
        for e in &entries {
            let path = self.dir.join(&e.file);
            fs::remove_file(&path).map_err(|err| Error::io(path, err))?;
        }
        Ok(entries.len())
    }
}

pub fn encode(p: &ChainParams, s: &Spectrum) -> Vec<u8> {
    let d = s.dim();
    let real = s.real_eigenvectors();
    let width = if real.is_some() { 8 } else { 16 };
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * d + width * d * d + DIGEST_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(if real.is_some() { 0 } else { FLAG_COMPLEX }).to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&(p.sites as u64).to_le_bytes());
    for x in [p.coupling, p.hx, p.hz] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for e in s.eigenvalues() {
        out.extend_from_slice(&e.to_le_bytes());
    }
    match real {
        Some(v) => {
            for j in 0..d {
                for i in 0..d {
                    out.extend_from_slice(&v[(i, j)].to_le_bytes());
                }
            }
        }
        None => {
            for j in 0..d {
                for i in 0..d {
                    let z = s.amplitude(i, j);
                    out.extend_from_slice(&z.re.to_le_bytes());
                    out.extend_from_slice(&z.im.to_le_bytes());
                }
            }
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<(ChainParams, Spectrum), String> {
    if bytes.len() < HEADER_LEN + DIGEST_LEN {
        return Err(format!("truncated file ({} bytes)", bytes.len()));
    }
    if &bytes[..8] != MAGIC {
        return Err("not a spectrum cache file".into());
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err("checksum mismatch".into());
    }
    let u32_at = |o: usize| u32::from_le_bytes(body[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(body[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(body[o..o + 8].try_into().unwrap());
    let version = u32_at(8);
    if version != FORMAT_VERSION {
        return Err(format!("format version {version}, expected {FORMAT_VERSION}"));
    }
    let complex = u32_at(12) & FLAG_COMPLEX != 0;
    let d = usize::try_from(u64_at(16)).map_err(|_| "dimension overflows".to_string())?;
    let sites = u64_at(24) as usize;
    let chain = ChainParams { sites, coupling: f64_at(32), hx: f64_at(40), hz: f64_at(48) };
    if sites >= 32 || d != 1 << sites {
        return Err(format!("dimension {d} does not match {sites} sites"));
    }
    let width = if complex { 16 } else { 8 };
    if body.len() != HEADER_LEN + 8 * d + width * d * d {
        return Err(format!("payload has {} bytes, expected {}", body.len(), HEADER_LEN + 8 * d + width * d * d));
    }
    let eigenvalues: Vec<f64> = (0..d).map(|k| f64_at(HEADER_LEN + 8 * k)).collect();
    let base = HEADER_LEN + 8 * d;
    let spectrum = if complex {
        let v = Mat::from_fn(d, d, |i, j| {
            let o = base + 16 * (j * d + i);
            c64::new(f64_at(o), f64_at(o + 8))
        });
        Spectrum::from_complex_parts(eigenvalues, v)
    } else {
        Spectrum::from_real_parts(eigenvalues, Mat::from_fn(d, d, |i, j| f64_at(base + 8 * (j * d + i))))
    };
    spectrum.map(|s| (chain, s)).map_err(|e| e.to_string())
}
