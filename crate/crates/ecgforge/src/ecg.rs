//! Pseudo-ECG forward operator.
//!
//! The extracellular potential at an electrode is the inverse-distance
//! weighted sum of the diffusion source term over the sheet:
//!
//! ```text
//! phi_e = sum_cells div(D grad u)(c) * dx^2 * h / |r_c - r_e|
//! ```
//!
//! with sheet thickness `h = 1 mm` converting the volumetric integral to a
//! surface sum (midpoint quadrature at cell centers). The free-space `1/4pi`
//! constant is absorbed into the signal scale; only relative morphology
//! matters downstream. The source field is *the same operator* as the
//! solver's diffusion term, shared by construction.

use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::solver::{diffusion_term, VoltageFrameSequence};
use crate::tissue::TissueGrid;
use serde::{Deserialize, Serialize};

/// Sheet thickness used by the 2D-to-volume quadrature, mm.
pub const SHEET_THICKNESS_MM: f64 = 1.0;

/// Observation point in mm, relative to the top-left corner of the sheet;
/// z is the out-of-plane offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Electrode {
    pub position_mm: [f64; 3],
}

impl Electrode {
    /// Distance to a cell center; the z offset keeps this positive for every
    /// in-plane source with the default electrode.
    #[inline]
    fn distance_to(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.position_mm[0];
        let dy = y - self.position_mm[1];
        let dz = self.position_mm[2];
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

impl Default for Electrode {
    /// The standard observation point, 40 mm above the sheet.
    fn default() -> Self {
        Electrode {
            position_mm: [50.0, 50.0, 40.0],
        }
    }
}

/// Scalar extracellular-potential trace sampled at frame times.
#[derive(Clone, Debug, PartialEq)]
pub struct EcgSignal {
    pub samples: Vec<f64>,
    pub timestamps_ms: Vec<f64>,
}

/// Volume-source density of a voltage frame: exactly the solver's
/// diffusion operator applied to the frame.
pub fn source_field(grid: &TissueGrid, u_frame: &[f64]) -> Result<Vec<f64>> {
    diffusion_term(grid, u_frame)
}

/// Inverse-distance sum of an explicit source field. Errors if the electrode
/// coincides with a cell center (singular kernel).
pub fn potential_from_source(
    grid: &TissueGrid,
    source: &[f64],
    electrode: &Electrode,
) -> Result<f64> {
    if source.len() != grid.cell_count() {
        return Err(Error::Shape(format!(
            "source holds {} values for a {}-cell grid",
            source.len(),
            grid.cell_count()
        )));
    }
    let cell_volume = grid.dx * grid.dx * SHEET_THICKNESS_MM;
    let mut acc = 0.0;
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let i = grid.idx(ix, iy);
            let s = source[i];
            if s == 0.0 {
                continue;
            }
            let (x, y) = grid.cell_center(ix, iy);
            let r = electrode.distance_to(x, y);
            if r == 0.0 {
                return Err(Error::Config(format!(
                    "electrode coincides with cell center ({x}, {y}) mm: kernel is singular"
                )));
            }
            acc += s * cell_volume / r;
        }
    }
    Ok(acc)
}

/// Extracellular potential of one voltage frame at the electrode.
pub fn ecg_sample(grid: &TissueGrid, u_frame: &[f64], electrode: &Electrode) -> Result<f64> {
    let source = source_field(grid, u_frame)?;
    potential_from_source(grid, &source, electrode)
}

/// Pseudo-ECG trace of a whole frame sequence; per-frame samples are
/// independent and computed in parallel, concatenated in timestamp order.
pub fn ecg_trace(
    sequence: &VoltageFrameSequence,
    grid: &TissueGrid,
    electrode: &Electrode,
) -> Result<EcgSignal> {
    if sequence.nx != grid.nx || sequence.ny != grid.ny {
        return Err(Error::Shape(format!(
            "sequence frames are {}x{} but grid is {}x{}",
            sequence.nx, sequence.ny, grid.nx, grid.ny
        )));
    }
    let results = map_indexed(sequence.len(), |t| {
        ecg_sample(grid, &sequence.frames[t], electrode)
    });
    let mut samples = Vec::with_capacity(results.len());
    for r in results {
        samples.push(r?);
    }
    Ok(EcgSignal {
        samples,
        timestamps_ms: sequence.timestamps_ms.clone(),
    })
}

/// Always-sequential variant of [`ecg_trace`] for the benchmark suite.
pub fn ecg_trace_seq(
    sequence: &VoltageFrameSequence,
    grid: &TissueGrid,
    electrode: &Electrode,
) -> Result<EcgSignal> {
    let results = crate::parallel::map_indexed_seq(sequence.len(), |t| {
        ecg_sample(grid, &sequence.frames[t], electrode)
    });
    let mut samples = Vec::with_capacity(results.len());
    for r in results {
        samples.push(r?);
    }
    Ok(EcgSignal {
        samples,
        timestamps_ms: sequence.timestamps_ms.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> TissueGrid {
        TissueGrid::uniform(20, 20, 1.0, 0.1)
    }

    fn random_frame(grid: &TissueGrid, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..grid.cell_count()).map(|_| rng.gen_range(0.0..1.0)).collect()
    }

    #[test]
    fn uniform_frame_yields_zero_sample() {
        let g = grid();
        let frame = vec![0.42; g.cell_count()];
        let norm: f64 = frame.iter().map(|x| x * x).sum::<f64>().sqrt();
        let phi = ecg_sample(&g, &frame, &Electrode::default()).unwrap();
        assert!(phi.abs() <= 1e-12 * norm, "phi = {phi}");
    }

    #[test]
    fn source_field_is_the_diffusion_operator_bitwise() {
        let g = grid();
        for seed in 0..100 {
            let frame = random_frame(&g, seed);
            let a = source_field(&g, &frame).unwrap();
            let b = diffusion_term(&g, &frame).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn delta_source_matches_one_term_closed_form() {
        // A frame's source field always sums to zero under zero-flux
        // boundaries, so a single-cell source is exercised at the kernel
        // level.
        let g = grid();
        let e = Electrode::default();
        let mut source = vec![0.0; g.cell_count()];
        let (ix, iy) = (7, 3);
        let s = -1.75;
        source[g.idx(ix, iy)] = s;
        let (x, y) = g.cell_center(ix, iy);
        let dist = ((x - 50.0f64).powi(2) + (y - 50.0f64).powi(2) + 40.0f64.powi(2)).sqrt();
        let expected = s * g.dx * g.dx * SHEET_THICKNESS_MM / dist;
        let phi = potential_from_source(&g, &source, &e).unwrap();
        assert_eq!(phi, expected);
    }

    #[test]
    fn mirror_frames_produce_equal_samples() {
        // Electrode above the sheet center; mirroring the frame about the
        // vertical midline preserves all source-to-electrode distances.
        let g = TissueGrid::uniform(20, 20, 1.0, 0.1); // 20 mm square
        let e = Electrode {
            position_mm: [10.0, 10.0, 40.0],
        };
        let frame = random_frame(&g, 5);
        let mut mirrored = vec![0.0; g.cell_count()];
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                mirrored[g.idx(g.nx - 1 - ix, iy)] = frame[g.idx(ix, iy)];
            }
        }
        let a = ecg_sample(&g, &frame, &e).unwrap();
        let b = ecg_sample(&g, &mirrored, &e).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn sample_is_linear_in_the_frame() {
        let g = grid();
        let e = Electrode::default();
        let f1 = random_frame(&g, 1);
        let f2 = random_frame(&g, 2);
        let (a, b) = (1.7, -0.4);
        let combo: Vec<f64> = f1.iter().zip(&f2).map(|(x, y)| a * x + b * y).collect();
        let phi_combo = ecg_sample(&g, &combo, &e).unwrap();
        let phi_1 = ecg_sample(&g, &f1, &e).unwrap();
        let phi_2 = ecg_sample(&g, &f2, &e).unwrap();
        let expected = a * phi_1 + b * phi_2;
        assert!(
            (phi_combo - expected).abs() <= 1e-9 * expected.abs().max(1e-9),
            "{phi_combo} vs {expected}"
        );
    }

    #[test]
    fn trace_is_linear_in_the_sequence() {
        let g = grid();
        let e = Electrode::default();
        let mk_seq = |seed: u64| VoltageFrameSequence {
            nx: g.nx,
            ny: g.ny,
            frames: (0..6).map(|t| random_frame(&g, seed * 100 + t)).collect(),
            timestamps_ms: (0..6).map(|t| t as f64).collect(),
            source_grid_id: String::new(),
        };
        let s1 = mk_seq(1);
        let s2 = mk_seq(2);
        let sum = VoltageFrameSequence {
            frames: s1
                .frames
                .iter()
                .zip(&s2.frames)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
            ..s1.clone()
        };
        let t1 = ecg_trace(&s1, &g, &e).unwrap();
        let t2 = ecg_trace(&s2, &g, &e).unwrap();
        let ts = ecg_trace(&sum, &g, &e).unwrap();
        for i in 0..ts.samples.len() {
            let expected = t1.samples[i] + t2.samples[i];
            assert!(
                (ts.samples[i] - expected).abs() <= 1e-9 * expected.abs().max(1e-9),
                "sample {i}"
            );
        }
    }

    #[test]
    fn farther_electrode_sees_weaker_single_source() {
        let g = grid();
        let mut source = vec![0.0; g.cell_count()];
        source[g.idx(4, 4)] = 2.0;
        let mut prev = f64::INFINITY;
        for z in [10.0, 20.0, 40.0, 80.0, 160.0] {
            let e = Electrode {
                position_mm: [50.0, 50.0, z],
            };
            let phi = potential_from_source(&g, &source, &e).unwrap().abs();
            assert!(phi < prev, "|phi| must shrink with distance");
            prev = phi;
        }
    }

    #[test]
    fn electrode_on_cell_center_is_singular() {
        let g = grid();
        let mut source = vec![0.0; g.cell_count()];
        source[g.idx(3, 3)] = 1.0;
        let (x, y) = g.cell_center(3, 3);
        let e = Electrode {
            position_mm: [x, y, 0.0],
        };
        assert!(potential_from_source(&g, &source, &e).is_err());
    }

    #[test]
    fn all_rest_sequence_gives_zero_trace() {
        let g = grid();
        let seq = VoltageFrameSequence {
            nx: g.nx,
            ny: g.ny,
            frames: vec![vec![0.0; g.cell_count()]; 4],
            timestamps_ms: vec![0.0, 1.0, 2.0, 3.0],
            source_grid_id: String::new(),
        };
        let trace = ecg_trace(&seq, &g, &Electrode::default()).unwrap();
        assert!(trace.samples.iter().all(|&s| s == 0.0));
    }
}
