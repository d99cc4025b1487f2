//! On-disk cache of built worlds.
//!
//! A file holds one header line followed by the raw `n⁴` count bytes. The key
//! is the exact marked half, the modulus and the model fingerprint.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use counterpoint_core::world::build_world_with;
use counterpoint_core::{Dichotomy, ModelVariant, World, WorldError};

pub const CACHE_ENV: &str = "COUNTERPOINT_CACHE_DIR";
const MAGIC: &str = "counterpoint-world 1";

#[derive(Debug, Clone)]
pub struct WorldCache {
    dir: Option<PathBuf>,
}

impl WorldCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        WorldCache { dir }
    }

    /// `$COUNTERPOINT_CACHE_DIR`, else `$XDG_CACHE_HOME/counterpoint`, else
    /// `$HOME/.cache/counterpoint`.
    pub fn default_dir() -> Option<PathBuf> {
        let var = |name| std::env::var_os(name).filter(|v| !v.is_empty()).map(PathBuf::from);
        var(CACHE_ENV)
            .or_else(|| var("XDG_CACHE_HOME").map(|p| p.join("counterpoint")))
            .or_else(|| var("HOME").map(|p| p.join(".cache").join("counterpoint")))
    }

    fn header(d: &Dichotomy, variant: &ModelVariant) -> String {
        format!(
            "{MAGIC} n={} half={:x} model={}",
            d.modulus(),
            d.half().bits(),
            variant.fingerprint()
        )
    }

    fn path(dir: &Path, d: &Dichotomy, variant: &ModelVariant) -> PathBuf {
        let model: String = variant
            .fingerprint()
            .split(';')
            .map(|kv| kv.split_once('=').map_or(kv, |(_, v)| v))
            .collect::<Vec<_>>()
            .join("-");
        dir.join(format!(
            "world-n{}-{:x}-{model}.bin",
            d.modulus(),
            d.half().bits()
        ))
    }

    fn load(path: &Path, header: &str, d: &Dichotomy, variant: ModelVariant) -> Option<World> {
        let bytes = fs::read(path).ok()?;
        let split = bytes.iter().position(|&b| b == b'\n')?;
        if &bytes[..split] != header.as_bytes() {
            return None;
        }
        World::from_counts(*d, variant, bytes[split + 1..].to_vec()).ok()
    }

    fn store(path: &Path, header: &str, w: &World) -> std::io::Result<()> {
        let dir = path.parent().expect("cache file has a directory");
        fs::create_dir_all(dir)?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(header.as_bytes())?;
            f.write_all(b"\n")?;
            f.write_all(w.counts())?;
        }
        fs::rename(tmp, path)
    }

    /// Loads a cached world or builds and stores it. Cache write failures are
    /// reported on stderr and otherwise ignored.
    pub fn world(&self, d: &Dichotomy, variant: ModelVariant) -> Result<World, WorldError> {
        let Some(dir) = &self.dir else {
            return build_world_with(d, variant);
        };
        let header = Self::header(d, &variant);
        let path = Self::path(dir, d, &variant);
        if let Some(w) = Self::load(&path, &header, d, variant) {
            return Ok(w);
        }
        let w = build_world_with(d, variant)?;
        if let Err(e) = Self::store(&path, &header, &w) {
            eprintln!("warning: cannot write world cache {}: {e}", path.display());
        }
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = WorldCache::new(Some(dir.path().to_path_buf()));
        let d = Dichotomy::fux();
        let v = ModelVariant::default();
        let built = cache.world(&d, v).unwrap();
        let path = WorldCache::path(dir.path(), &d, &v);
        assert!(path.exists());
        assert_eq!(cache.world(&d, v).unwrap(), built);

        fs::write(&path, b"garbage").unwrap();
        assert_eq!(cache.world(&d, v).unwrap(), built);
        let header = WorldCache::header(&d, &v);
        assert!(WorldCache::load(&path, &header, &d, v).is_some());
    }
}
