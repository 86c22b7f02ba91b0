use crate::frame::OmniFrame;

use super::TemporalError;

/// Smallest privacy resolution accepted by [`downscale`].
pub const MIN_SCALE_RES: usize = 8;

/// Input spans covered by each output cell when `in_len` pixels are
/// box-filtered down to `out_len`.
fn area_weights(in_len: usize, out_len: usize) -> Vec<Vec<(usize, f64)>> {
    let step = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|o| {
            let lo = o as f64 * step;
            let hi = (o + 1) as f64 * step;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(in_len);
            (first..last)
                .filter_map(|p| {
                    let w = hi.min(p as f64 + 1.0) - lo.max(p as f64);
                    (w > 0.0).then_some((p, w))
                })
                .collect()
        })
        .collect()
}

/// Area-average (box filter) decimation of a square frame to
/// `scale_res`×`scale_res`. Means are rounded half away from zero.
pub fn downscale(frame: &OmniFrame, scale_res: usize) -> Result<OmniFrame, TemporalError> {
    let (w, h, ch) = frame.dims();
    if w != h {
        return Err(TemporalError::InvalidResolution(format!("frame {w}x{h} is not square")));
    }
    if scale_res < MIN_SCALE_RES || scale_res > w {
        return Err(TemporalError::InvalidResolution(format!(
            "cannot downscale {w}px to {scale_res}px (allowed {MIN_SCALE_RES}..={w})"
        )));
    }
    let weights = area_weights(w, scale_res);
    let src = frame.data();
    // Horizontal pass: h rows × scale_res columns.
    let mut rows = vec![0f64; h * scale_res * ch];
    for y in 0..h {
        for (ox, taps) in weights.iter().enumerate() {
            for c in 0..ch {
                let mut acc = 0.0;
                for &(x, wt) in taps {
                    acc += src[(y * w + x) * ch + c] as f64 * wt;
                }
                rows[(y * scale_res + ox) * ch + c] = acc;
            }
        }
    }
    let mut out = vec![0u8; scale_res * scale_res * ch];
    for (oy, vtaps) in weights.iter().enumerate() {
        let vsum: f64 = vtaps.iter().map(|t| t.1).sum();
        for (ox, htaps) in weights.iter().enumerate() {
            let norm = vsum * htaps.iter().map(|t| t.1).sum::<f64>();
            for c in 0..ch {
                let mut acc = 0.0;
                for &(y, wt) in vtaps {
                    acc += rows[(y * scale_res + ox) * ch + c] * wt;
                }
                out[(oy * scale_res + ox) * ch + c] = (acc / norm).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    let out = OmniFrame::new(scale_res, scale_res, ch, out).expect("downscale buffer");
    Ok(out.with_stamp(frame.index, frame.timestamp))
}

/// Source coordinate and blend fraction for each output pixel, with pixel
/// centres aligned and edges clamped.
fn linear_taps(in_len: usize, out_len: usize) -> Vec<(usize, usize, f32)> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|o| {
            let s = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (in_len - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(in_len - 1);
            (i0, i1, (s - i0 as f64) as f32)
        })
        .collect()
}

#[inline]
fn lerp(a: f32, b: f32, t: f32) -> f32 {
    a + (b - a) * t
}

/// Bilinear resampling to `target_res`×`target_res`. Constant regions stay
/// exactly constant and a same-size resample is the identity.
pub fn upscale_linear(frame: &OmniFrame, target_res: usize) -> Result<OmniFrame, TemporalError> {
    let (w, h, ch) = frame.dims();
    if target_res == 0 || target_res < w.max(h) {
        return Err(TemporalError::InvalidResolution(format!(
            "cannot upscale {w}x{h} to {target_res}px"
        )));
    }
    let xs = linear_taps(w, target_res);
    let ys = linear_taps(h, target_res);
    let src = frame.data();
    let mut out = vec![0u8; target_res * target_res * ch];
    for (oy, &(y0, y1, fy)) in ys.iter().enumerate() {
        let (ra, rb) = (y0 * w, y1 * w);
        for (ox, &(x0, x1, fx)) in xs.iter().enumerate() {
            for c in 0..ch {
                let p = |row: usize, col: usize| src[(row + col) * ch + c] as f32;
                let top = lerp(p(ra, x0), p(ra, x1), fx);
                let bottom = lerp(p(rb, x0), p(rb, x1), fx);
                out[(oy * target_res + ox) * ch + c] = lerp(top, bottom, fy).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    let out = OmniFrame::new(target_res, target_res, ch, out).expect("upscale buffer");
    Ok(out.with_stamp(frame.index, frame.timestamp))
}

/// Pixel replication to twice the size.
pub fn nearest_2x(frame: &OmniFrame) -> OmniFrame {
    let (w, h, ch) = frame.dims();
    let src = frame.data();
    let ow = 2 * w;
    let mut out = vec![0u8; 4 * w * h * ch];
    for y in 0..2 * h {
        for x in 0..ow {
            let s = ((y / 2) * w + x / 2) * ch;
            let d = (y * ow + x) * ch;
            out[d..d + ch].copy_from_slice(&src[s..s + ch]);
        }
    }
    OmniFrame::new(ow, 2 * h, ch, out)
        .expect("nearest buffer")
        .with_stamp(frame.index, frame.timestamp)
}
