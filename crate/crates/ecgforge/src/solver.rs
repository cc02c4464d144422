//! Monodomain reaction-diffusion solver with a three-variable
//! Fenton–Karma cell model.
//!
//! The transmembrane potential `u` (dimensionless, rest at 0) evolves as
//!
//! ```text
//! du/dt = div(D grad u) - (J_fi + J_so + J_si) + I_stim
//! ```
//!
//! on a cell-centered grid with zero-flux boundaries. Diffusion uses a
//! 5-point stencil with harmonic face averaging of `D`, so non-conductive
//! cells (`D = 0`) act as internal no-flux boundaries. Time integration is
//! forward Euler for `u` and exact-exponential relaxation for the gates
//! `v`, `w`.
//!
//! A single simulation is deterministic: identical inputs produce
//! bit-identical frame sequences. The per-cell sweeps run through
//! [`crate::parallel`], whose parallel and sequential paths agree bitwise.

use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::tissue::TissueGrid;
use serde::{Deserialize, Serialize};

/// Time constants (ms), thresholds and steepness of the three-current
/// Fenton–Karma kinetics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FentonKarmaParams {
    pub tau_d: f64,
    pub tau_o: f64,
    pub tau_r: f64,
    pub tau_si: f64,
    pub tau_v_plus: f64,
    /// v-gate recovery constant for `u >= u_v`.
    pub tau_v1_minus: f64,
    /// v-gate recovery constant for `u < u_v`.
    pub tau_v2_minus: f64,
    pub tau_w_plus: f64,
    pub tau_w_minus: f64,
    pub u_c: f64,
    pub u_v: f64,
    pub u_c_si: f64,
    pub k: f64,
}

impl FentonKarmaParams {
    /// Atrial-variant defaults for the three-current model (Fenton–Karma
    /// family, cf. Goodman et al., Europace 2005). Every field can be
    /// overridden through the simulation config file.
    pub fn atrial() -> Self {
        FentonKarmaParams {
            tau_d: 0.25,
            tau_o: 12.5,
            tau_r: 33.0,
            tau_si: 30.0,
            tau_v_plus: 3.33,
            tau_v1_minus: 1250.0,
            tau_v2_minus: 19.6,
            tau_w_plus: 870.0,
            tau_w_minus: 41.0,
            u_c: 0.13,
            u_v: 0.04,
            u_c_si: 0.85,
            k: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let taus = [
            ("tau_d", self.tau_d),
            ("tau_o", self.tau_o),
            ("tau_r", self.tau_r),
            ("tau_si", self.tau_si),
            ("tau_v_plus", self.tau_v_plus),
            ("tau_v1_minus", self.tau_v1_minus),
            ("tau_v2_minus", self.tau_v2_minus),
            ("tau_w_plus", self.tau_w_plus),
            ("tau_w_minus", self.tau_w_minus),
        ];
        for (name, tau) in taus {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::Config(format!("{name} = {tau} must be positive")));
            }
        }
        if !(self.u_c > 0.0 && self.u_c < 1.0) {
            return Err(Error::Config(format!("u_c = {} must lie in (0, 1)", self.u_c)));
        }
        if self.k <= 0.0 {
            return Err(Error::Config(format!("k = {} must be positive", self.k)));
        }
        Ok(())
    }

    /// Smallest gate relaxation constant; bounds usable step sizes.
    pub fn min_gate_tau(&self) -> f64 {
        [
            self.tau_v_plus,
            self.tau_v1_minus,
            self.tau_v2_minus,
            self.tau_w_plus,
            self.tau_w_minus,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

impl Default for FentonKarmaParams {
    fn default() -> Self {
        Self::atrial()
    }
}

/// Per-cell model state: normalized potential and the two gates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellState {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl CellState {
    pub const fn rest() -> Self {
        CellState { u: 0.0, v: 1.0, w: 1.0 }
    }

    fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.w.is_finite()
    }
}

/// Spatial footprint of a stimulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum StimRegion {
    Disk { center_mm: (f64, f64), radius_mm: f64 },
    /// Vertical strip along the left edge, used by the default S1 pacing.
    LeftStrip { width_mm: f64 },
}

impl StimRegion {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            StimRegion::Disk { center_mm, radius_mm } => {
                let dx = x - center_mm.0;
                let dy = y - center_mm.1;
                dx * dx + dy * dy <= radius_mm * radius_mm
            }
            StimRegion::LeftStrip { width_mm } => x <= width_mm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StimRegion::Disk { radius_mm, .. } => radius_mm > 0.0,
            StimRegion::LeftStrip { width_mm } => width_mm > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config("stimulus region extent must be positive".into()))
        }
    }
}

/// One stimulus pulse: where, how strong (u-units per ms) and when.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimulusProtocol {
    pub region: StimRegion,
    pub amplitude: f64,
    pub start_ms: f64,
    pub duration_ms: f64,
}

impl StimulusProtocol {
    /// Default S1: a 5 mm strip on the left edge, 0.5 u/ms for 2 ms at t=0,
    /// which launches a single planar wave across the sheet.
    pub fn default_s1() -> Self {
        StimulusProtocol {
            region: StimRegion::LeftStrip { width_mm: 5.0 },
            amplitude: 0.5,
            start_ms: 0.0,
            duration_ms: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        if self.duration_ms <= 0.0 {
            return Err(Error::Config(format!(
                "stimulus duration {} ms must be positive",
                self.duration_ms
            )));
        }
        Ok(())
    }

    #[inline]
    fn active_at(&self, t: f64) -> bool {
        t >= self.start_ms && t < self.start_ms + self.duration_ms
    }
}

impl Default for StimulusProtocol {
    fn default() -> Self {
        Self::default_s1()
    }
}

/// Step size, horizon and frame stride of one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub dt_ms: f64,
    pub total_time_ms: f64,
    /// Steps between stored frames; the frame at t=0 is always stored.
    pub snapshot_stride: usize,
}

impl SimulationConfig {
    /// Config that yields exactly `frames` stored frames (including t=0)
    /// at the given stride.
    pub fn with_frames(dt_ms: f64, snapshot_stride: usize, frames: usize) -> Self {
        assert!(frames >= 1 && snapshot_stride >= 1);
        SimulationConfig {
            dt_ms,
            total_time_ms: dt_ms * (snapshot_stride * (frames - 1)) as f64,
            snapshot_stride,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.total_time_ms / self.dt_ms).round() as usize
    }

    /// Validate against a grid and parameter set. The diffusion stability
    /// bound `dt <= dx^2 / (4 D_max)` must hold with at least a 2x margin;
    /// the gate step must resolve the fastest gate constant.
    pub fn validate(&self, grid: &TissueGrid, params: &FentonKarmaParams) -> Result<()> {
        if !(self.dt_ms > 0.0 && self.dt_ms.is_finite()) {
            return Err(Error::Config(format!("dt = {} ms must be positive", self.dt_ms)));
        }
        if self.total_time_ms < 0.0 || !self.total_time_ms.is_finite() {
            return Err(Error::Config(format!(
                "total_time = {} ms must be non-negative",
                self.total_time_ms
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot_stride must be >= 1".into()));
        }
        let d_max = grid.max_diffusion();
        if d_max > 0.0 {
            let bound = grid.dx * grid.dx / (4.0 * d_max);
            if self.dt_ms > 0.5 * bound {
                return Err(Error::Config(format!(
                    "dt = {} ms violates the stability bound {} ms (dx^2/(4 D_max)) with 2x margin",
                    self.dt_ms, bound
                )));
            }
        }
        if self.dt_ms > 0.5 * params.min_gate_tau() {
            return Err(Error::Config(format!(
                "dt = {} ms too coarse for the fastest gate constant {} ms",
                self.dt_ms,
                params.min_gate_tau()
            )));
        }
        Ok(())
    }
}

impl Default for SimulationConfig {
    /// 0.1 ms steps over ~500 ms, strided to 64 stored frames.
    fn default() -> Self {
        SimulationConfig::with_frames(0.1, 80, 64)
    }
}

/// Time-ordered stack of transmembrane-potential frames from one run.
#[derive(Clone, Debug, PartialEq)]
pub struct VoltageFrameSequence {
    pub nx: usize,
    pub ny: usize,
    pub frames: Vec<Vec<f64>>,
    pub timestamps_ms: Vec<f64>,
    pub source_grid_id: String,
}

impl VoltageFrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// The three Fenton–Karma currents at one state. The reaction term entering
/// the `u` update is `-(J_fi + J_so + J_si)`.
///
/// The excitation switch uses the convention `H(x) = 1` for `x >= 0`, with a
/// single `u >= u_c` test shared by `J_fi` and `J_so` so the total current is
/// single-valued at the threshold.
#[inline]
pub fn fk_currents(state: &CellState, p: &FentonKarmaParams) -> (f64, f64, f64) {
    let u = state.u;
    let excited = u >= p.u_c;
    let j_fi = if excited {
        -(state.v / p.tau_d) * (1.0 - u) * (u - p.u_c)
    } else {
        0.0
    };
    let j_so = if excited { 1.0 / p.tau_r } else { u / p.tau_o };
    let j_si = -(state.w / (2.0 * p.tau_si)) * (1.0 + (p.k * (u - p.u_c_si)).tanh());
    (j_fi, j_so, j_si)
}

/// Advance the gates by `dt` at frozen `u` using the exact exponential
/// relaxation toward the voltage-dependent target. Gates stay in [0, 1];
/// `(u < u_c, v = 1, w = 1)` is a fixed point.
#[inline]
pub fn gate_step(state: &CellState, p: &FentonKarmaParams, dt: f64) -> CellState {
    let u = state.u;
    let (v_inf, tau_v) = if u >= p.u_c {
        (0.0, p.tau_v_plus)
    } else if u >= p.u_v {
        (1.0, p.tau_v1_minus)
    } else {
        (1.0, p.tau_v2_minus)
    };
    let (w_inf, tau_w) = if u >= p.u_c {
        (0.0, p.tau_w_plus)
    } else {
        (1.0, p.tau_w_minus)
    };
    CellState {
        u,
        v: v_inf + (state.v - v_inf) * (-dt / tau_v).exp(),
        w: w_inf + (state.w - w_inf) * (-dt / tau_w).exp(),
    }
}

#[inline]
fn face_diffusion(da: f64, db: f64) -> f64 {
    // Harmonic mean; zero whenever either side is non-conductive.
    if da <= 0.0 || db <= 0.0 {
        0.0
    } else {
        2.0 * da * db / (da + db)
    }
}

#[inline]
fn diffusion_at(grid: &TissueGrid, u_field: &[f64], i: usize) -> f64 {
    let d_c = grid.diffusion[i];
    if d_c <= 0.0 {
        return 0.0;
    }
    let nx = grid.nx;
    let ix = i % nx;
    let iy = i / nx;
    let u_c = u_field[i];
    let mut acc = 0.0;
    if ix > 0 {
        let j = i - 1;
        acc += face_diffusion(d_c, grid.diffusion[j]) * (u_field[j] - u_c);
    }
    if ix + 1 < nx {
        let j = i + 1;
        acc += face_diffusion(d_c, grid.diffusion[j]) * (u_field[j] - u_c);
    }
    if iy > 0 {
        let j = i - nx;
        acc += face_diffusion(d_c, grid.diffusion[j]) * (u_field[j] - u_c);
    }
    if iy + 1 < grid.ny {
        let j = i + nx;
        acc += face_diffusion(d_c, grid.diffusion[j]) * (u_field[j] - u_c);
    }
    acc / (grid.dx * grid.dx)
}

/// Discrete `div(D grad u)` over the whole grid: 5-point stencil, harmonic
/// face averaging, zero-flux outer boundaries and zero-flux faces against
/// non-conductive cells.
pub fn diffusion_term(grid: &TissueGrid, u_field: &[f64]) -> Result<Vec<f64>> {
    if u_field.len() != grid.cell_count() {
        return Err(Error::Shape(format!(
            "field holds {} values for a {}-cell grid",
            u_field.len(),
            grid.cell_count()
        )));
    }
    Ok(map_indexed(grid.cell_count(), |i| {
        diffusion_at(grid, u_field, i)
    }))
}

/// Always-sequential variant of [`diffusion_term`], for benchmarks comparing
/// the parallel sweep against single-threaded execution.
pub fn diffusion_term_seq(grid: &TissueGrid, u_field: &[f64]) -> Result<Vec<f64>> {
    if u_field.len() != grid.cell_count() {
        return Err(Error::Shape(format!(
            "field holds {} values for a {}-cell grid",
            u_field.len(),
            grid.cell_count()
        )));
    }
    Ok(crate::parallel::map_indexed_seq(grid.cell_count(), |i| {
        diffusion_at(grid, u_field, i)
    }))
}

/// Pure-diffusion update of a raw `u` field (reaction and stimulus off).
/// Test hook for the zero-flux conservation property.
pub fn step_diffusion_only(grid: &TissueGrid, u_field: &mut [f64], dt: f64) -> Result<()> {
    let div = diffusion_term(grid, u_field)?;
    for (u, d) in u_field.iter_mut().zip(&div) {
        *u += dt * d;
    }
    Ok(())
}

/// One forward-Euler monodomain step at time `t` (ms). Non-conductive cells
/// are pinned to rest and excluded from reaction and stimulus. `step` only
/// labels diagnostics.
pub fn step_monodomain(
    grid: &TissueGrid,
    states: &mut Vec<CellState>,
    p: &FentonKarmaParams,
    stim: &StimulusProtocol,
    t: f64,
    dt: f64,
    step: usize,
) -> Result<()> {
    let n = grid.cell_count();
    if states.len() != n {
        return Err(Error::Shape(format!(
            "state vector holds {} cells for a {}-cell grid",
            states.len(),
            n
        )));
    }
    let u_field: Vec<f64> = states.iter().map(|s| s.u).collect();
    let stim_on = stim.active_at(t);

    let next: Vec<CellState> = map_indexed(n, |i| {
        if !grid.conductive[i] {
            return CellState::rest();
        }
        let s = states[i];
        let (j_fi, j_so, j_si) = fk_currents(&s, p);
        let mut du = diffusion_at(grid, &u_field, i) - (j_fi + j_so + j_si);
        if stim_on {
            let (x, y) = grid.cell_center(i % grid.nx, i / grid.nx);
            if stim.region.contains(x, y) {
                du += stim.amplitude;
            }
        }
        let mut out = gate_step(&s, p, dt);
        out.u = s.u + dt * du;
        out
    });

    for (i, s) in next.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::NonFinite {
                context: "monodomain step",
                ix: i % grid.nx,
                iy: i / grid.nx,
                step,
            });
        }
    }
    *states = next;
    Ok(())
}

/// Run a full simulation, storing every `snapshot_stride`-th frame starting
/// at t=0. Deterministic for fixed inputs.
pub fn run_simulation(
    grid: &TissueGrid,
    p: &FentonKarmaParams,
    stim: &StimulusProtocol,
    cfg: &SimulationConfig,
) -> Result<VoltageFrameSequence> {
    run_simulation_tagged(grid, p, stim, cfg, String::new())
}

/// [`run_simulation`] with a case id recorded on the output.
pub fn run_simulation_tagged(
    grid: &TissueGrid,
    p: &FentonKarmaParams,
    stim: &StimulusProtocol,
    cfg: &SimulationConfig,
    source_grid_id: String,
) -> Result<VoltageFrameSequence> {
    grid.validate()?;
    p.validate()?;
    stim.validate()?;
    cfg.validate(grid, p)?;

    let n_steps = cfg.n_steps();
    let stride = cfg.snapshot_stride;
    let mut states = vec![CellState::rest(); grid.cell_count()];
    let mut frames = Vec::with_capacity(n_steps / stride + 1);
    let mut timestamps = Vec::with_capacity(n_steps / stride + 1);
    frames.push(states.iter().map(|s| s.u).collect::<Vec<_>>());
    timestamps.push(0.0);

    for step in 0..n_steps {
        let t = step as f64 * cfg.dt_ms;
        step_monodomain(grid, &mut states, p, stim, t, cfg.dt_ms, step)?;
        let done = step + 1;
        if done % stride == 0 {
            frames.push(states.iter().map(|s| s.u).collect());
            timestamps.push(done as f64 * cfg.dt_ms);
        }
    }

    Ok(VoltageFrameSequence {
        nx: grid.nx,
        ny: grid.ny,
        frames,
        timestamps_ms: timestamps,
        source_grid_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> FentonKarmaParams {
        FentonKarmaParams::atrial()
    }

    #[test]
    fn rest_state_has_no_fast_or_outward_current() {
        let (j_fi, j_so, _) = fk_currents(&CellState::rest(), &params());
        assert_eq!(j_fi, 0.0);
        assert_eq!(j_so, 0.0);
    }

    #[test]
    fn closed_gate_blocks_fast_inward_current() {
        let s = CellState { u: 0.5, v: 0.0, w: 1.0 };
        let (j_fi, _, _) = fk_currents(&s, &params());
        assert_eq!(j_fi, 0.0);
    }

    #[test]
    fn gate_fixed_point_at_rest() {
        let s = CellState::rest();
        let out = gate_step(&s, &params(), 0.5);
        assert_eq!(out, s);
    }

    #[test]
    fn v_gate_decays_monotonically_when_excited() {
        let p = params();
        let mut s = CellState { u: 0.5, v: 1.0, w: 1.0 };
        let mut prev = s.v;
        for _ in 0..200 {
            s = gate_step(&s, &p, 1.0);
            assert!(s.v <= prev && s.v >= 0.0);
            prev = s.v;
        }
        assert!(s.v < 1e-10);
    }

    #[test]
    fn gate_decay_matches_closed_form() {
        // v relaxes toward 0 with rate 1/tau_v_plus while u > u_c; the
        // exact-exponential step must reproduce exp(-t/tau) to 1e-6.
        let p = params();
        let dt = 0.37;
        let mut s = CellState { u: 0.5, v: 0.3, w: 1.0 };
        for step in 1..=10 {
            s = gate_step(&s, &p, dt);
            let expected = 0.3 * (-(step as f64) * dt / p.tau_v_plus).exp();
            assert!(
                (s.v - expected).abs() < 1e-6,
                "step {step}: v={} expected {expected}",
                s.v
            );
        }
    }

    #[test]
    fn gates_stay_in_unit_interval() {
        let p = params();
        let mut s = CellState { u: 0.2, v: 0.9, w: 0.1 };
        for step in 0..500 {
            // alternate above/below threshold
            s.u = if step % 7 < 3 { 0.6 } else { 0.01 };
            s = gate_step(&s, &p, 0.8);
            assert!((0.0..=1.0).contains(&s.v), "v={}", s.v);
            assert!((0.0..=1.0).contains(&s.w), "w={}", s.w);
        }
    }

    #[test]
    fn diffusion_of_constant_field_is_zero() {
        let grid = TissueGrid::uniform(16, 12, 1.0, 0.1);
        let field = vec![0.7; grid.cell_count()];
        let out = diffusion_term(&grid, &field).unwrap();
        assert!(out.iter().all(|&x| x.abs() <= 1e-12));
    }

    #[test]
    fn diffusion_on_fully_nonconductive_grid_is_zero() {
        let grid = TissueGrid::uniform(8, 8, 1.0, 0.0);
        let field: Vec<f64> = (0..64).map(|i| (i as f64).sin()).collect();
        let out = diffusion_term(&grid, &field).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn diffusion_rejects_mismatched_field() {
        let grid = TissueGrid::uniform(4, 4, 1.0, 0.1);
        assert!(matches!(
            diffusion_term(&grid, &[0.0; 5]),
            Err(Error::Shape(_))
        ));
    }

    fn sine_error(nx: usize) -> f64 {
        // u(x) = sin(2 pi x / L) on a strip; interior cells must approach
        // -D (2 pi / L)^2 sin(2 pi x / L) at second order.
        let d = 0.1;
        let l = 64.0;
        let dx = l / nx as f64;
        let ny = 8;
        let grid = TissueGrid::uniform(nx, ny, dx, d);
        let kx = 2.0 * std::f64::consts::PI / l;
        let mut field = vec![0.0; grid.cell_count()];
        for iy in 0..ny {
            for ix in 0..nx {
                let (x, _) = grid.cell_center(ix, iy);
                field[grid.idx(ix, iy)] = (kx * x).sin();
            }
        }
        let out = diffusion_term(&grid, &field).unwrap();
        let mut err_max: f64 = 0.0;
        for iy in 0..ny {
            for ix in 3..nx - 3 {
                let (x, _) = grid.cell_center(ix, iy);
                let exact = -d * kx * kx * (kx * x).sin();
                err_max = err_max.max((out[grid.idx(ix, iy)] - exact).abs());
            }
        }
        err_max
    }

    #[test]
    fn diffusion_converges_at_second_order_on_sine() {
        let coarse = sine_error(64);
        let fine = sine_error(128);
        let order = (coarse / fine).log2();
        assert!(order >= 1.8, "observed order {order} (errors {coarse}, {fine})");
    }

    #[test]
    fn rest_drift_bounded_by_residual_slow_inward_current() {
        let p = params();
        let dt = 0.1;
        let bound = dt * 1.0 / (2.0 * p.tau_si) * (1.0 + (-p.k * p.u_c_si).tanh());
        let stim = StimulusProtocol {
            amplitude: 0.0,
            ..StimulusProtocol::default_s1()
        };

        // Fully non-conductive grid: cells are clamped, delta-u is exactly 0.
        let grid0 = TissueGrid::uniform(6, 6, 1.0, 0.0);
        let mut states = vec![CellState::rest(); grid0.cell_count()];
        step_monodomain(&grid0, &mut states, &p, &stim, 0.0, dt, 0).unwrap();
        for s in &states {
            assert!(s.u.abs() <= bound);
        }

        // Conductive grid at uniform rest: only the residual J_si moves u.
        let grid1 = TissueGrid::uniform(6, 6, 1.0, 0.1);
        let mut states = vec![CellState::rest(); grid1.cell_count()];
        step_monodomain(&grid1, &mut states, &p, &stim, 0.0, dt, 0).unwrap();
        for s in &states {
            assert!(s.u.abs() <= bound * (1.0 + 1e-12), "du {} > {}", s.u, bound);
        }
    }

    #[test]
    fn stimulated_disk_crosses_threshold() {
        let p = params();
        let grid = TissueGrid::uniform(20, 20, 1.0, 0.1);
        let stim = StimulusProtocol {
            region: StimRegion::Disk {
                center_mm: (10.0, 10.0),
                radius_mm: 3.0,
            },
            amplitude: 0.5,
            start_ms: 0.0,
            duration_ms: 2.0,
        };
        let mut states = vec![CellState::rest(); grid.cell_count()];
        let dt = 0.1;
        for step in 0..20 {
            step_monodomain(&grid, &mut states, &p, &stim, step as f64 * dt, dt, step).unwrap();
        }
        let center = grid.idx(10, 10);
        assert!(states[center].u > p.u_c, "u={} at disk center", states[center].u);
    }

    #[test]
    fn pure_diffusion_conserves_total_u() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut grid = TissueGrid::uniform(30, 30, 1.0, 0.1);
        // punch a few holes so interior no-flux faces participate
        for i in [95usize, 96, 125, 126, 400, 401, 430] {
            grid.diffusion[i] = 0.0;
            grid.conductive[i] = false;
        }
        let mut field: Vec<f64> = (0..grid.cell_count())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        // keep non-conductive cells out of the budget: they never change
        let total_before: f64 = field.iter().sum();
        let dt = 0.5; // dx^2/(4 D) = 2.5 ms, 5x margin
        for _ in 0..1000 {
            step_diffusion_only(&grid, &mut field, dt).unwrap();
        }
        let total_after: f64 = field.iter().sum();
        let scale: f64 = field.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        assert!(
            (total_after - total_before).abs() <= 1e-10 * scale,
            "drift {} on scale {scale}",
            total_after - total_before
        );
    }

    #[test]
    fn zero_horizon_returns_single_initial_frame() {
        let grid = TissueGrid::uniform(10, 10, 1.0, 0.1);
        let cfg = SimulationConfig {
            dt_ms: 0.1,
            total_time_ms: 0.0,
            snapshot_stride: 4,
        };
        let seq =
            run_simulation(&grid, &params(), &StimulusProtocol::default_s1(), &cfg).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.timestamps_ms, vec![0.0]);
        assert!(seq.frames[0].iter().all(|&u| u == 0.0));
    }

    #[test]
    fn frame_count_follows_stride() {
        let grid = TissueGrid::uniform(8, 8, 1.0, 0.1);
        let cfg = SimulationConfig::with_frames(0.1, 5, 7);
        let seq =
            run_simulation(&grid, &params(), &StimulusProtocol::default_s1(), &cfg).unwrap();
        assert_eq!(seq.len(), 7);
        assert_eq!(seq.n_timestamps_strictly_increasing(), true);
    }

    #[test]
    fn simulation_is_deterministic() {
        let grid = TissueGrid::uniform(12, 12, 1.0, 0.1);
        let cfg = SimulationConfig::with_frames(0.1, 10, 9);
        let stim = StimulusProtocol::default_s1();
        let a = run_simulation(&grid, &params(), &stim, &cfg).unwrap();
        let b = run_simulation(&grid, &params(), &stim, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unstable_dt_is_rejected() {
        let grid = TissueGrid::uniform(10, 10, 1.0, 0.1);
        let cfg = SimulationConfig {
            dt_ms: 2.0, // bound is 2.5 ms, margin requires <= 1.25 ms
            total_time_ms: 10.0,
            snapshot_stride: 1,
        };
        assert!(matches!(
            run_simulation(&grid, &params(), &StimulusProtocol::default_s1(), &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn gates_bounded_through_paced_run() {
        let grid = TissueGrid::uniform(16, 16, 1.0, 0.1);
        let p = params();
        let stim = StimulusProtocol::default_s1();
        let mut states = vec![CellState::rest(); grid.cell_count()];
        for step in 0..3000 {
            step_monodomain(&grid, &mut states, &p, &stim, step as f64 * 0.1, 0.1, step).unwrap();
            debug_assert!(states
                .iter()
                .all(|s| (0.0..=1.0).contains(&s.v) && (0.0..=1.0).contains(&s.w)));
        }
        assert!(states
            .iter()
            .all(|s| (0.0..=1.0).contains(&s.v) && (0.0..=1.0).contains(&s.w)));
    }

    impl VoltageFrameSequence {
        fn n_timestamps_strictly_increasing(&self) -> bool {
            self.timestamps_ms.windows(2).all(|w| w[1] > w[0])
        }
    }
}
