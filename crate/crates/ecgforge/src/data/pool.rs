//! Area-average downsampling of voltage frames.
//!
//! Output cell (i, j) averages the source region
//! `[i h/th, (i+1) h/th) x [j w/tw, (j+1) w/tw)` with exact fractional
//! overlap weights, so the bins partition the source exactly and the total
//! mean is preserved. Integer-ratio targets reduce to plain block means.

use crate::error::{Error, Result};

/// Overlap weights of source cells `[r, r+1)` against output bin `i` of
/// `t_bins` over `n` source cells.
fn bin_weights(n: usize, t_bins: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n as f64 / t_bins as f64;
    (0..t_bins)
        .map(|i| {
            let lo = i as f64 * scale;
            let hi = (i + 1) as f64 * scale;
            let r_lo = lo.floor() as usize;
            let r_hi = (hi.ceil() as usize).min(n);
            let mut weights = Vec::with_capacity(r_hi - r_lo);
            for r in r_lo..r_hi {
                let overlap = (hi.min((r + 1) as f64) - lo.max(r as f64)).max(0.0);
                if overlap > 0.0 {
                    weights.push((r, overlap));
                }
            }
            weights
        })
        .collect()
}

/// Downsample a row-major `h x w` field to `th x tw` by area averaging.
pub fn area_downsample(field: &[f64], h: usize, w: usize, th: usize, tw: usize) -> Result<Vec<f64>> {
    if field.len() != h * w {
        return Err(Error::Shape(format!(
            "field holds {} values for {h}x{w}",
            field.len()
        )));
    }
    if th == 0 || tw == 0 {
        return Err(Error::Config("target dims must be positive".into()));
    }
    if th > h || tw > w {
        return Err(Error::Config(format!(
            "target {th}x{tw} exceeds source {h}x{w}"
        )));
    }
    let row_bins = bin_weights(h, th);
    let col_bins = bin_weights(w, tw);
    let bin_area = (h as f64 / th as f64) * (w as f64 / tw as f64);
    let mut out = vec![0.0; th * tw];
    for (i, rows) in row_bins.iter().enumerate() {
        for (j, cols) in col_bins.iter().enumerate() {
            let mut acc = 0.0;
            for &(r, wr) in rows {
                for &(c, wc) in cols {
                    acc += wr * wc * field[r * w + c];
                }
            }
            out[i * tw + j] = acc / bin_area;
        }
    }
    Ok(out)
}

/// Downsample every frame of a sequence.
pub fn downsample_frames(
    frames: &[Vec<f64>],
    h: usize,
    w: usize,
    th: usize,
    tw: usize,
) -> Result<Vec<Vec<f64>>> {
    frames
        .iter()
        .map(|f| area_downsample(f, h, w, th, tw))
        .collect()
}
