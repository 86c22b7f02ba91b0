//! `OMAP` sidecar files: one fragment map per file so a scene's maps are
//! built once.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "OMAP"  u16 version
//! u32 fragment_index  u32 source_width  u32 source_height  u32 width  u32 height
//! f64 start_angle  f64 end_angle  f64 core_start  f64 core_end
//! f64 r_lo  f64 r_hi  f64 center_x  f64 center_y
//! width*height × (i32 x, i32 y)   source coordinates, 8 fractional bits
//! ```

use std::io::{Read, Write};

use super::{FragmentMap, GeometryError, Point2};

pub const OMAP_MAGIC: &[u8; 4] = b"OMAP";
pub const OMAP_VERSION: u16 = 1;

pub fn write_fragment_map<W: Write>(map: &FragmentMap, mut out: W) -> Result<(), GeometryError> {
    let mut buf = Vec::with_capacity(90 + map.lut.len() * 8);
    buf.extend_from_slice(OMAP_MAGIC);
    buf.extend_from_slice(&OMAP_VERSION.to_le_bytes());
    for v in [
        map.fragment_index,
        map.source_width,
        map.source_height,
        map.width,
        map.height,
    ] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in [
        map.start_angle,
        map.end_angle,
        map.core_start,
        map.core_end,
        map.r_lo,
        map.r_hi,
        map.center.x,
        map.center.y,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for [x, y] in &map.lut {
        buf.extend_from_slice(&x.to_le_bytes());
        buf.extend_from_slice(&y.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn encode_fragment_map(map: &FragmentMap) -> Vec<u8> {
    let mut out = Vec::new();
    write_fragment_map(map, &mut out).expect("writing to a Vec cannot fail");
    out
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], GeometryError> {
        if self.0.len() < N {
            return Err(GeometryError::Omap("truncated file".into()));
        }
        let (head, rest) = self.0.split_at(N);
        self.0 = rest;
        Ok(head.try_into().expect("split at N"))
    }

    fn u32(&mut self) -> Result<usize, GeometryError> {
        Ok(u32::from_le_bytes(self.take()?) as usize)
    }

    fn f64(&mut self) -> Result<f64, GeometryError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn decode_fragment_map(bytes: &[u8]) -> Result<FragmentMap, GeometryError> {
    let mut c = Cursor(bytes);
    if &c.take::<4>()? != OMAP_MAGIC {
        return Err(GeometryError::Omap("bad magic".into()));
    }
    let version = u16::from_le_bytes(c.take()?);
    if version != OMAP_VERSION {
        return Err(GeometryError::Omap(format!("unsupported version {version}")));
    }
    let fragment_index = c.u32()?;
    let source_width = c.u32()?;
    let source_height = c.u32()?;
    let width = c.u32()?;
    let height = c.u32()?;
    let start_angle = c.f64()?;
    let end_angle = c.f64()?;
    let core_start = c.f64()?;
    let core_end = c.f64()?;
    let r_lo = c.f64()?;
    let r_hi = c.f64()?;
    let center = Point2::new(c.f64()?, c.f64()?);
    if width < 2 || height < 2 {
        return Err(GeometryError::Omap(format!("bad fragment size {width}x{height}")));
    }
    let n = width
        .checked_mul(height)
        .filter(|n| n.checked_mul(8) == Some(c.0.len()))
        .ok_or_else(|| GeometryError::Omap("lookup table size does not match dimensions".into()))?;
    let mut lut = Vec::with_capacity(n);
    for _ in 0..n {
        let x = i32::from_le_bytes(c.take()?);
        let y = i32::from_le_bytes(c.take()?);
        lut.push([x, y]);
    }
    Ok(FragmentMap {
        fragment_index,
        start_angle,
        end_angle,
        core_start,
        core_end,
        r_lo,
        r_hi,
        center,
        source_width,
        source_height,
        width,
        height,
        lut,
    })
}

pub fn read_fragment_map<R: Read>(mut input: R) -> Result<FragmentMap, GeometryError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode_fragment_map(&bytes)
}
