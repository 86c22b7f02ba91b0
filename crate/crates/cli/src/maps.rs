use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::{Context, Result};
use log::{debug, warn};
use omnicount_core::geometry::omap::{read_fragment_map, write_fragment_map};
use omnicount_core::geometry::{build_fragment_maps, FragmentMap, OmniCameraModel, UnwarpConfig};

/// FNV-1a, stable across builds so cache file names stay valid.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Fragment maps for a camera and unwarp config, read from or written to
/// `cache` when given.
pub fn fragment_maps(camera: &OmniCameraModel, cfg: &UnwarpConfig, cache: Option<&Path>) -> Result<Vec<FragmentMap>> {
    let Some(dir) = cache else {
        return Ok(build_fragment_maps(camera, cfg)?);
    };
    let key = fnv1a(serde_json::to_string(&(camera, cfg))?.as_bytes());
    let path = |i: usize| dir.join(format!("{key:016x}_{i}.omap"));
    let cached: Option<Vec<FragmentMap>> = (0..cfg.k)
        .map(|i| {
            let file = File::open(path(i)).ok()?;
            read_fragment_map(BufReader::new(file))
                .map_err(|e| warn!("ignoring unreadable map {}: {e}", path(i).display()))
                .ok()
        })
        .collect();
    if let Some(maps) = cached {
        debug!("loaded {} cached fragment maps", maps.len());
        return Ok(maps);
    }
    let maps = build_fragment_maps(camera, cfg)?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (i, m) in maps.iter().enumerate() {
        let p = path(i);
        let file = File::create(&p).with_context(|| format!("writing {}", p.display()))?;
        write_fragment_map(m, BufWriter::new(file))?;
    }
    Ok(maps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_returns_identical_maps() {
        let dir = tempfile::tempdir().unwrap();
        let cam = OmniCameraModel::centered(200, 200, 20.0, 95.0);
        let cfg = UnwarpConfig {
            fragment_height: 32,
            ..Default::default()
        };
        let built = fragment_maps(&cam, &cfg, Some(dir.path())).unwrap();
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 3);
        let cached = fragment_maps(&cam, &cfg, Some(dir.path())).unwrap();
        assert_eq!(built, cached);
        assert_eq!(built, fragment_maps(&cam, &cfg, None).unwrap());
    }
}
