//! Procedural generation of 2D tissue models.
//!
//! A tissue model is a rectangular sheet of cells, each carrying a diffusion
//! coefficient (mm²/ms) and a conductive flag. Four pathology classes are
//! generated: healthy tissue, gap-junction remodelling (reduced diffusion),
//! fibrotic remodelling (large non-conductive patches), and the combination
//! of both. Non-conductive regions are carved out as random axis-aligned
//! ellipses until a target area fraction is reached.
//!
//! Generation is a pure function of its config: the RNG is ChaCha8 seeded
//! from `config.seed`, so identical configs reproduce grids byte for byte on
//! every platform.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The four simulated pathology classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TissueClass {
    Healthy,
    GapJunction,
    Fibrotic,
    Combined,
}

impl TissueClass {
    pub const ALL: [TissueClass; 4] = [
        TissueClass::Healthy,
        TissueClass::GapJunction,
        TissueClass::Fibrotic,
        TissueClass::Combined,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TissueClass::Healthy => "healthy",
            TissueClass::GapJunction => "gap_junction",
            TissueClass::Fibrotic => "fibrotic",
            TissueClass::Combined => "combined",
        }
    }
}

impl std::fmt::Display for TissueClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// 2D diffusion map plus conductive mask. Cells are square with edge `dx`
/// (mm); cell `(ix, iy)` is stored at index `iy * nx + ix` and its center
/// sits at `((ix + 0.5) dx, (iy + 0.5) dx)` measured from the top-left
/// corner of the sheet.
#[derive(Clone, Debug, PartialEq)]
pub struct TissueGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub width_mm: f64,
    pub height_mm: f64,
    /// Per-cell diffusion coefficient, mm²/ms. Zero exactly on
    /// non-conductive cells.
    pub diffusion: Vec<f64>,
    pub conductive: Vec<bool>,
}

impl TissueGrid {
    /// Uniform fully conductive grid, mostly used by tests and benchmarks.
    pub fn uniform(nx: usize, ny: usize, dx: f64, d: f64) -> Self {
        TissueGrid {
            nx,
            ny,
            dx,
            width_mm: nx as f64 * dx,
            height_mm: ny as f64 * dx,
            diffusion: vec![d; nx * ny],
            conductive: vec![d > 0.0; nx * ny],
        }
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Center of cell `(ix, iy)` in mm from the top-left corner.
    #[inline]
    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        ((ix as f64 + 0.5) * self.dx, (iy as f64 + 0.5) * self.dx)
    }

    /// Fraction of cells that are non-conductive.
    pub fn nonconductive_fraction(&self) -> f64 {
        let holes = self.conductive.iter().filter(|c| !**c).count();
        holes as f64 / self.cell_count() as f64
    }

    pub fn max_diffusion(&self) -> f64 {
        self.diffusion.iter().cloned().fold(0.0, f64::max)
    }

    /// Check the structural invariants: extent consistency, non-negative
    /// diffusion, and zero-diffusion cells being exactly the non-conductive
    /// set.
    pub fn validate(&self) -> Result<()> {
        if self.diffusion.len() != self.cell_count() || self.conductive.len() != self.cell_count()
        {
            return Err(Error::Shape(format!(
                "grid arrays must hold {} cells",
                self.cell_count()
            )));
        }
        let wx = self.nx as f64 * self.dx;
        let wy = self.ny as f64 * self.dx;
        if (wx - self.width_mm).abs() > 1e-9 * self.width_mm.max(1.0)
            || (wy - self.height_mm).abs() > 1e-9 * self.height_mm.max(1.0)
        {
            return Err(Error::Config(format!(
                "grid extent mismatch: {}x{} cells at dx={} vs {}x{} mm",
                self.nx, self.ny, self.dx, self.width_mm, self.height_mm
            )));
        }
        for (i, (&d, &c)) in self.diffusion.iter().zip(&self.conductive).enumerate() {
            if d < 0.0 || !d.is_finite() {
                return Err(Error::Config(format!("cell {i}: diffusion {d} invalid")));
            }
            if (d == 0.0) != !c {
                return Err(Error::Config(format!(
                    "cell {i}: diffusion {d} inconsistent with conductive={c}"
                )));
            }
        }
        Ok(())
    }
}

/// Axis-aligned elliptic non-conductive patch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipsePatch {
    pub center_mm: (f64, f64),
    pub rx_mm: f64,
    pub ry_mm: f64,
}

impl EllipsePatch {
    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let fx = (x - self.center_mm.0) / self.rx_mm;
        let fy = (y - self.center_mm.1) / self.ry_mm;
        fx * fx + fy * fy <= 1.0
    }
}

/// Everything [`generate_tissue`] needs to build one case.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub class: TissueClass,
    pub seed: u64,
    /// Background diffusion range `[d_min, d_max]`, mm²/ms. One uniform draw
    /// per grid: the background is homogeneous within a case.
    pub d_range: (f64, f64),
    /// Inclusive range for the intended patch count. The generator stops
    /// adding patches early once the target fraction is reached, so the
    /// realized count may be lower.
    pub patch_count_range: (usize, usize),
    /// Inclusive range for ellipse semi-axes, mm.
    pub patch_radius_range_mm: (f64, f64),
    /// Desired non-conductive area fraction; the realized fraction lands
    /// within ±20% relative of this unless the patch budget runs out first.
    pub target_nonconductive_fraction: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
}

impl GenerationConfig {
    /// Class presets. Diffusion ranges: healthy 0.09–0.10 mm²/ms,
    /// gap-junction remodelling 0.01–0.09 mm²/ms; fibrotic keeps the healthy
    /// background under large patches, combined pairs reduced diffusion with
    /// large patches. Patch sizes: small (2–6 mm) for healthy/gap-junction,
    /// large (10–30 mm) for fibrotic/combined.
    pub fn for_class(class: TissueClass, seed: u64, nx: usize, ny: usize, dx: f64) -> Self {
        let (d_range, patch_count_range, patch_radius_range_mm, target) = match class {
            TissueClass::Healthy => ((0.09, 0.10), (1, 5), (2.0, 6.0), 0.02),
            TissueClass::GapJunction => ((0.01, 0.09), (1, 5), (2.0, 6.0), 0.02),
            TissueClass::Fibrotic => ((0.09, 0.10), (5, 15), (10.0, 30.0), 0.15),
            TissueClass::Combined => ((0.01, 0.09), (5, 15), (10.0, 30.0), 0.15),
        };
        GenerationConfig {
            class,
            seed,
            d_range,
            patch_count_range,
            patch_radius_range_mm: patch_radius_range_mm,
            target_nonconductive_fraction: target,
            nx,
            ny,
            dx,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (d_min, d_max) = self.d_range;
        if !(d_min > 0.0 && d_max >= d_min && d_max.is_finite()) {
            return Err(Error::Config(format!(
                "d_range ({d_min}, {d_max}) must satisfy 0 < d_min <= d_max"
            )));
        }
        let (r_min, r_max) = self.patch_radius_range_mm;
        if !(r_min > 0.0 && r_max >= r_min && r_max.is_finite()) {
            return Err(Error::Config(format!(
                "patch radii ({r_min}, {r_max}) must be positive and ordered"
            )));
        }
        if self.patch_count_range.0 > self.patch_count_range.1 {
            return Err(Error::Config(format!(
                "patch_count_range ({}, {}) is reversed",
                self.patch_count_range.0, self.patch_count_range.1
            )));
        }
        let t = self.target_nonconductive_fraction;
        if !(0.0..0.5).contains(&t) {
            return Err(Error::Config(format!(
                "target_nonconductive_fraction {t} must lie in [0, 0.5)"
            )));
        }
        if self.nx == 0 || self.ny == 0 || self.dx <= 0.0 {
            return Err(Error::Config(format!(
                "grid dims {}x{} at dx={} invalid",
                self.nx, self.ny, self.dx
            )));
        }
        let width = self.nx as f64 * self.dx;
        let height = self.ny as f64 * self.dx;
        let patches_requested = self.patch_count_range.1 > 0 && t > 0.0;
        if patches_requested && 2.0 * r_min > width.min(height) {
            return Err(Error::Config(format!(
                "smallest patch (diameter {} mm) cannot fit a {width}x{height} mm sheet",
                2.0 * r_min
            )));
        }
        Ok(())
    }
}

/// A generated grid together with the patch list for the JSON sidecar.
#[derive(Clone, Debug)]
pub struct GeneratedTissue {
    pub grid: TissueGrid,
    pub patches: Vec<EllipsePatch>,
    /// The single background diffusion draw for this case.
    pub background_d: f64,
}

/// Rasterize one ellipse onto a scratch mask, returning indices of cells
/// newly covered (center-in-ellipse test). Only the ellipse's bounding box
/// is scanned.
fn rasterize_new_cells(
    nx: usize,
    ny: usize,
    dx: f64,
    covered: &[bool],
    patch: &EllipsePatch,
) -> Vec<usize> {
    let (cx, cy) = patch.center_mm;
    let ix_lo = (((cx - patch.rx_mm) / dx - 0.5).floor().max(0.0)) as usize;
    let ix_hi = ((((cx + patch.rx_mm) / dx - 0.5).ceil()) as usize).min(nx.saturating_sub(1));
    let iy_lo = (((cy - patch.ry_mm) / dx - 0.5).floor().max(0.0)) as usize;
    let iy_hi = ((((cy + patch.ry_mm) / dx - 0.5).ceil()) as usize).min(ny.saturating_sub(1));
    let mut fresh = Vec::new();
    for iy in iy_lo..=iy_hi {
        for ix in ix_lo..=ix_hi {
            let i = iy * nx + ix;
            if covered[i] {
                continue;
            }
            let (x, y) = ((ix as f64 + 0.5) * dx, (iy as f64 + 0.5) * dx);
            if patch.contains(x, y) {
                fresh.push(i);
            }
        }
    }
    fresh
}

/// Generate one tissue model. Pure function of the config: identical configs
/// produce bit-identical grids.
pub fn generate_tissue(config: &GenerationConfig) -> Result<GeneratedTissue> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (d_min, d_max) = config.d_range;
    let background_d = if d_min == d_max {
        d_min
    } else {
        rng.gen_range(d_min..=d_max)
    };

    let n_cells = config.nx * config.ny;
    let mut covered = vec![false; n_cells];
    let mut covered_count = 0usize;
    let mut patches = Vec::new();

    let target = config.target_nonconductive_fraction;
    let (count_lo, count_hi) = config.patch_count_range;
    let intended = if count_hi == 0 {
        0
    } else {
        rng.gen_range(count_lo..=count_hi)
    };

    let (r_min, r_max) = config.patch_radius_range_mm;
    let width = config.nx as f64 * config.dx;
    let height = config.ny as f64 * config.dx;
    let upper = 1.2 * target;

    if target > 0.0 {
        for _ in 0..intended {
            let frac = covered_count as f64 / n_cells as f64;
            if frac >= target {
                break;
            }
            let center = (rng.gen_range(0.0..width), rng.gen_range(0.0..height));
            let rx = rng.gen_range(r_min..=r_max);
            let ry = rng.gen_range(r_min..=r_max);
            let full = EllipsePatch {
                center_mm: center,
                rx_mm: rx,
                ry_mm: ry,
            };
            let fresh = rasterize_new_cells(config.nx, config.ny, config.dx, &covered, &full);
            let frac_with = (covered_count + fresh.len()) as f64 / n_cells as f64;
            let accepted = if frac_with <= upper {
                full
            } else {
                // Shrink this patch until the union stays at or under the
                // target: bisect on a common radius scale.
                let mut lo = 0.0f64;
                let mut hi = 1.0f64;
                for _ in 0..48 {
                    let mid = 0.5 * (lo + hi);
                    let candidate = EllipsePatch {
                        center_mm: center,
                        rx_mm: rx * mid,
                        ry_mm: ry * mid,
                    };
                    let fresh_mid =
                        rasterize_new_cells(config.nx, config.ny, config.dx, &covered, &candidate);
                    let f_mid = (covered_count + fresh_mid.len()) as f64 / n_cells as f64;
                    if f_mid >= target {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let at_hi = EllipsePatch {
                    center_mm: center,
                    rx_mm: rx * hi,
                    ry_mm: ry * hi,
                };
                let fresh_hi =
                    rasterize_new_cells(config.nx, config.ny, config.dx, &covered, &at_hi);
                let f_hi = (covered_count + fresh_hi.len()) as f64 / n_cells as f64;
                if f_hi <= upper {
                    at_hi
                } else {
                    // Even the bracketing scale overshoots (coarse grid);
                    // fall back to the largest undershooting scale.
                    EllipsePatch {
                        center_mm: center,
                        rx_mm: rx * lo,
                        ry_mm: ry * lo,
                    }
                }
            };
            let fresh = rasterize_new_cells(config.nx, config.ny, config.dx, &covered, &accepted);
            if fresh.is_empty() {
                continue;
            }
            for &i in &fresh {
                covered[i] = true;
            }
            covered_count += fresh.len();
            patches.push(accepted);
        }
    }

    let mut diffusion = vec![0.0; n_cells];
    let mut conductive = vec![false; n_cells];
    for i in 0..n_cells {
        if !covered[i] {
            diffusion[i] = background_d;
            conductive[i] = true;
        }
    }
    let grid = TissueGrid {
        nx: config.nx,
        ny: config.ny,
        dx: config.dx,
        width_mm: width,
        height_mm: height,
        diffusion,
        conductive,
    };
    grid.validate()?;
    Ok(GeneratedTissue {
        grid,
        patches,
        background_d,
    })
}

/// Class mix for a corpus of `n_total` cases in the fixed ratio
/// healthy : gap-junction : fibrotic : combined = 1 : 1 : 2 : 1.
pub fn corpus_plan(n_total: usize) -> Result<Vec<(TissueClass, usize)>> {
    if n_total == 0 || n_total % 5 != 0 {
        return Err(Error::Config(format!(
            "corpus size {n_total} must be a positive multiple of 5 (class ratio 1:1:2:1)"
        )));
    }
    let unit = n_total / 5;
    Ok(vec![
        (TissueClass::Healthy, unit),
        (TissueClass::GapJunction, unit),
        (TissueClass::Fibrotic, 2 * unit),
        (TissueClass::Combined, unit),
    ])
}
