//! Split-step integration of the paraxial equation.
//!
//! Vacuum steps use the angular-spectrum propagator
//! `û(κ, z+dz) = û(κ, z) exp(−i κ² dz / 2k)`; phase screens multiply the
//! field by `exp(iφ)`. A channel of M slabs is integrated as
//! `dz/2 → screen → dz → screen → … → screen → dz/2` with the screens at the
//! interval centres.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{ArrayBase, Data, Ix2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::screens::{lattice_offsets, ScreenEvaluator, ScreenStrip, SparseScreenSet};
use crate::turbulence::ChannelGeometry;

/// Fraction of the grid width covered by the absorbing boundary on each side.
pub const ABSORBER_WIDTH: f64 = 0.05;
/// Amplitude of the absorber at the grid edge is `exp(−ABSORBER_STRENGTH)`.
pub const ABSORBER_STRENGTH: f64 = 10.0;
/// Width of the band watched by the aliasing guard.
pub const GUARD_BAND_WIDTH: f64 = 0.10;
/// Power fraction in the guard band that flags a realization.
pub const GUARD_POWER_FRACTION: f64 = 0.01;
/// Upper bound on the memory spent on widened screen strips per worker.
pub const STRIP_MEMORY_BUDGET: usize = 512 << 20;

/// Gaussian source parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamParams {
    /// Beam-spot radius W0, m.
    pub waist_radius: f64,
    /// Wavefront radius F0, m; `None` for a collimated beam.
    #[serde(default)]
    pub focal_length: Option<f64>,
}

impl BeamParams {
    pub fn collimated(waist_radius: f64) -> Self {
        Self {
            waist_radius,
            focal_length: None,
        }
    }

    pub fn focused(waist_radius: f64, focal_length: f64) -> Self {
        Self {
            waist_radius,
            focal_length: Some(focal_length),
        }
    }

    /// Vacuum beam-spot radius after a distance `z`.
    pub fn radius_at(&self, z: f64, wavenumber: f64) -> f64 {
        let w0 = self.waist_radius;
        let focus = match self.focal_length {
            Some(f) => 1.0 - z / f,
            None => 1.0,
        };
        let diffraction = 2.0 * z / (wavenumber * w0 * w0);
        w0 * (focus * focus + diffraction * diffraction).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.waist_radius.is_finite() && self.waist_radius > 0.0) {
            return Err(invalid("beam waist radius must be positive"));
        }
        if let Some(f) = self.focal_length {
            if !f.is_finite() || f == 0.0 {
                return Err(invalid("focal length must be finite and non-zero"));
            }
        }
        Ok(())
    }
}

/// Transverse complex amplitude on a square grid, stored row-major `[y][x]`,
/// normalised so that `Σ|u|² Δx Δy` is the beam power.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    values: Vec<Complex64>,
    grid: Grid,
    z: f64,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
            z: 0.0,
        }
    }

    pub fn from_values(values: Vec<Complex64>, grid: Grid, z: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "expected {} values for a {}² grid, got {}",
                grid.len(),
                grid.n,
                values.len()
            )));
        }
        Ok(Self { values, grid, z })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.grid.n + col]
    }

    /// Discrete power `Σ|u|² Δx Δy`.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// Multiplies the field by a global phase `exp(iψ)`.
    pub fn rotate_phase(&mut self, psi: f64) {
        let r = Complex64::from_polar(1.0, psi);
        self.values.iter_mut().for_each(|v| *v *= r);
    }
}

/// Collimated or focused Gaussian source
/// `u = √(2/πW0²) exp(−r²/W0² − i k r²/2F0)`.
pub fn init_gaussian_beam(beam: &BeamParams, wavenumber: f64, grid: Grid) -> Result<ComplexField> {
    beam.validate()?;
    if beam.waist_radius < 4.0 * grid.step {
        return Err(invalid(format!(
            "beam waist {} m is not resolved by grid step {} m",
            beam.waist_radius, grid.step
        )));
    }
    let w0 = beam.waist_radius;
    let amp = (2.0 / (PI * w0 * w0)).sqrt();
    let curvature = beam.focal_length.map_or(0.0, |f| wavenumber / (2.0 * f));
    let coords = grid.coordinates();
    let mut values = Vec::with_capacity(grid.len());
    for &y in &coords {
        for &x in &coords {
            let r2 = x * x + y * y;
            values.push(Complex64::from_polar(amp * (-r2 / (w0 * w0)).exp(), -curvature * r2));
        }
    }
    Ok(ComplexField {
        values,
        grid,
        z: 0.0,
    })
}

fn transpose_in_place(data: &mut [Complex64], n: usize) {
    const BLOCK: usize = 32;
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + BLOCK).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Angular-spectrum propagator for one grid and wavenumber.
///
/// Holds FFT plans, scratch space and the transfer functions of the step
/// lengths used so far.
#[derive(Clone)]
pub struct Propagator {
    grid: Grid,
    wavenumber: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    kappa2: Vec<f64>,
    transfer: Vec<(f64, Vec<Complex64>)>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("grid", &self.grid)
            .field("wavenumber", &self.wavenumber)
            .finish()
    }
}

impl Propagator {
    pub fn new(grid: Grid, wavenumber: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n);
        let inverse = planner.plan_fft_inverse(grid.n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let freqs = grid.frequencies();
        let mut kappa2 = Vec::with_capacity(grid.len());
        for &a in &freqs {
            for &b in &freqs {
                kappa2.push(a * a + b * b);
            }
        }
        Self {
            grid,
            wavenumber,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            kappa2,
            transfer: Vec::new(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn transfer_index(&mut self, dz: f64) -> usize {
        if let Some(i) = self.transfer.iter().position(|(d, _)| *d == dz) {
            return i;
        }
        let factor = -dz / (2.0 * self.wavenumber);
        let n2 = (self.grid.n * self.grid.n) as f64;
        let h = self
            .kappa2
            .iter()
            .map(|k2| Complex64::from_polar(1.0 / n2, factor * k2))
            .collect();
        self.transfer.push((dz, h));
        self.transfer.len() - 1
    }

    /// Vacuum step of length `dz` (≥ 0), in place.
    pub fn vacuum_propagate(&mut self, field: &mut ComplexField, dz: f64) -> Result<()> {
        if !(dz.is_finite() && dz >= 0.0) {
            return Err(invalid(format!("step must be finite and non-negative, got {dz}")));
        }
        if field.grid != self.grid {
            return Err(invalid("field grid does not match the propagator"));
        }
        if dz == 0.0 {
            return Ok(());
        }
        let n = self.grid.n;
        let idx = self.transfer_index(dz);
        let data = &mut field.values;
        self.forward.process_with_scratch(data, &mut self.scratch);
        transpose_in_place(data, n);
        self.forward.process_with_scratch(data, &mut self.scratch);
        // The spectrum is now laid out [kx][ky]; κ² is symmetric in the two.
        for (v, h) in data.iter_mut().zip(&self.transfer[idx].1) {
            *v *= h;
        }
        self.inverse.process_with_scratch(data, &mut self.scratch);
        transpose_in_place(data, n);
        self.inverse.process_with_scratch(data, &mut self.scratch);
        field.z += dz;
        Ok(())
    }
}

/// One vacuum step with a fresh propagator.
pub fn vacuum_propagate(field: &ComplexField, dz: f64, wavenumber: f64) -> Result<ComplexField> {
    let mut out = field.clone();
    Propagator::new(field.grid, wavenumber).vacuum_propagate(&mut out, dz)?;
    Ok(out)
}

/// Multiplies the field pointwise by `exp(iφ)`; `phase` is indexed `[y][x]`.
pub fn apply_screen<S: Data<Elem = f64>>(field: &mut ComplexField, phase: &ArrayBase<S, Ix2>) -> Result<()> {
    let n = field.grid.n;
    if phase.dim() != (n, n) {
        return Err(invalid(format!(
            "screen shape {:?} does not match field grid {n}×{n}",
            phase.dim()
        )));
    }
    for (v, &p) in field.values.iter_mut().zip(phase.iter()) {
        let (s, c) = p.sin_cos();
        *v *= Complex64::new(c, s);
    }
    Ok(())
}

/// Power through a centred circular aperture (cell-centre inclusion), clipped to `[0, 1]`.
pub fn aperture_transmittance(field: &ComplexField, radius: f64) -> f64 {
    aperture_transmittances(field, &[radius])[0]
}

/// Transmittances for several aperture radii in one pass.
pub fn aperture_transmittances(field: &ComplexField, radii: &[f64]) -> Vec<f64> {
    let grid = field.grid;
    let coords = grid.coordinates();
    let r2: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let mut sums = vec![0.0; radii.len()];
    for (row, &y) in coords.iter().enumerate() {
        for (col, &x) in coords.iter().enumerate() {
            let d2 = x * x + y * y;
            let p = field.values[row * grid.n + col].norm_sqr();
            for (s, lim) in sums.iter_mut().zip(&r2) {
                // A zero-radius aperture has no area, even over the axis cell.
                if d2 <= *lim && *lim > 0.0 {
                    *s += p;
                }
            }
        }
    }
    sums.into_iter()
        .map(|s| (s * grid.cell_area()).clamp(0.0, 1.0))
        .collect()
}

/// Beam-spot radius from the second moment of the intensity, `W² = 2⟨r²⟩`,
/// taken about the intensity centroid.
pub fn beam_radius(field: &ComplexField) -> f64 {
    let coords = field.grid.coordinates();
    let n = field.grid.n;
    let (mut p, mut mx, mut my) = (0.0, 0.0, 0.0);
    for (row, &y) in coords.iter().enumerate() {
        for (col, &x) in coords.iter().enumerate() {
            let w = field.values[row * n + col].norm_sqr();
            p += w;
            mx += w * x;
            my += w * y;
        }
    }
    let (cx, cy) = (mx / p, my / p);
    let mut m2 = 0.0;
    for (row, &y) in coords.iter().enumerate() {
        for (col, &x) in coords.iter().enumerate() {
            let w = field.values[row * n + col].norm_sqr();
            m2 += w * ((x - cx).powi(2) + (y - cy).powi(2));
        }
    }
    (2.0 * m2 / p).sqrt()
}

fn edge_distance(i: usize, n: usize) -> usize {
    i.min(n - 1 - i)
}

fn absorber_profile(n: usize) -> Vec<f64> {
    let band = ((ABSORBER_WIDTH * n as f64).round() as usize).max(1);
    (0..n)
        .map(|i| {
            let d = edge_distance(i, n);
            if d >= band {
                1.0
            } else {
                let t = (band - d) as f64 / band as f64;
                (-ABSORBER_STRENGTH * t.powi(4)).exp()
            }
        })
        .collect()
}

/// Fraction of the field power lying within the guard band at the grid edges.
pub fn edge_power_fraction(field: &ComplexField) -> f64 {
    let n = field.grid.n;
    let band = ((GUARD_BAND_WIDTH * n as f64).round() as usize).max(1);
    let (mut edge, mut total) = (0.0, 0.0);
    for row in 0..n {
        let row_edge = edge_distance(row, n) < band;
        for col in 0..n {
            let p = field.values[row * n + col].norm_sqr();
            total += p;
            if row_edge || edge_distance(col, n) < band {
                edge += p;
            }
        }
    }
    if total > 0.0 {
        edge / total
    } else {
        0.0
    }
}

/// Result of propagating one realization at one shift.
#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub field: ComplexField,
    /// The aliasing guard tripped at some step.
    pub flagged: bool,
    /// Largest guard-band power fraction seen along the path.
    pub max_edge_fraction: f64,
}

/// Reusable split-step integrator for one channel geometry and source.
///
/// The source and its first half-step do not depend on the screens, so they
/// are computed once.
#[derive(Clone)]
pub struct ChannelPropagator {
    geometry: ChannelGeometry,
    propagator: Propagator,
    absorber: Vec<f64>,
    launch: ComplexField,
    launch_edge_fraction: f64,
}

impl std::fmt::Debug for ChannelPropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChannelPropagator")
            .field("geometry", &self.geometry)
            .finish()
    }
}

impl ChannelPropagator {
    pub fn new(geometry: &ChannelGeometry, beam: &BeamParams) -> Result<Self> {
        geometry.validate()?;
        let grid = Grid::new(geometry.grid_n, geometry.grid_step);
        let k = geometry.wavenumber();
        let mut propagator = Propagator::new(grid, k);
        let absorber = absorber_profile(grid.n);
        let mut launch = init_gaussian_beam(beam, k, grid)?;
        propagator.vacuum_propagate(&mut launch, 0.5 * geometry.slab_thickness())?;
        let launch_edge_fraction = edge_power_fraction(&launch);
        apply_absorber(&mut launch, &absorber);
        Ok(Self {
            geometry: geometry.clone(),
            propagator,
            absorber,
            launch,
            launch_edge_fraction,
        })
    }

    pub fn grid(&self) -> Grid {
        self.propagator.grid
    }

    pub fn geometry(&self) -> &ChannelGeometry {
        &self.geometry
    }

    /// Builds the per-screen evaluators of one realization.
    pub fn evaluators(&self, screens: &SparseScreenSet) -> Vec<ScreenEvaluator> {
        screens
            .screens
            .iter()
            .map(|s| ScreenEvaluator::new(s, self.grid()))
            .collect()
    }

    pub fn propagate(
        &mut self,
        screens: &SparseScreenSet,
        evaluators: &[ScreenEvaluator],
        shift: f64,
    ) -> Result<ChannelOutput> {
        let m = self.geometry.n_screens;
        if screens.len() != m || evaluators.len() != m {
            return Err(invalid(format!(
                "expected {m} screens, got {} screens and {} evaluators",
                screens.len(),
                evaluators.len()
            )));
        }
        self.integrate(|j, field| {
            let screen = &screens.screens[j];
            if !screen.modes.is_empty() {
                apply_screen(field, &evaluators[j].evaluate(screen, shift))?;
            }
            Ok(())
        })
    }

    /// Output fields for every shift of one realization.
    ///
    /// When all shifts are whole grid steps and the strips fit in
    /// `STRIP_MEMORY_BUDGET`, each screen is rendered once over a widened
    /// strip and windowed per shift; otherwise it is re-evaluated per shift.
    pub fn propagate_shifts(&mut self, screens: &SparseScreenSet, shifts: &[f64]) -> Result<Vec<ChannelOutput>> {
        let m = self.geometry.n_screens;
        if screens.len() != m {
            return Err(invalid(format!("expected {m} screens, got {}", screens.len())));
        }
        let grid = self.grid();
        let offsets = lattice_offsets(shifts, grid.step).filter(|o| {
            let span = o.iter().max().unwrap_or(&0) - o.iter().min().unwrap_or(&0);
            let bytes = m * grid.n * (grid.n + span as usize) * std::mem::size_of::<f64>();
            !o.is_empty() && bytes <= STRIP_MEMORY_BUDGET
        });
        match offsets {
            Some(offsets) => {
                let lo = *offsets.iter().min().unwrap_or(&0);
                let hi = *offsets.iter().max().unwrap_or(&0);
                let strips: Vec<ScreenStrip> = screens
                    .screens
                    .iter()
                    .map(|s| ScreenStrip::new(s, grid, lo, hi))
                    .collect();
                offsets
                    .iter()
                    .map(|&o| {
                        self.integrate(|j, field| {
                            if !screens.screens[j].modes.is_empty() {
                                apply_screen(field, &strips[j].window(o))?;
                            }
                            Ok(())
                        })
                    })
                    .collect()
            }
            None => {
                let evaluators = self.evaluators(screens);
                shifts
                    .iter()
                    .map(|&s| self.propagate(screens, &evaluators, s))
                    .collect()
            }
        }
    }

    fn integrate(
        &mut self,
        mut apply: impl FnMut(usize, &mut ComplexField) -> Result<()>,
    ) -> Result<ChannelOutput> {
        let m = self.geometry.n_screens;
        let dz = self.geometry.slab_thickness();
        let mut field = self.launch.clone();
        let mut max_edge = self.launch_edge_fraction;
        for j in 0..m {
            apply(j, &mut field)?;
            let step = if j + 1 == m { 0.5 * dz } else { dz };
            self.propagator.vacuum_propagate(&mut field, step)?;
            max_edge = max_edge.max(edge_power_fraction(&field));
            apply_absorber(&mut field, &self.absorber);
        }
        Ok(ChannelOutput {
            field,
            flagged: max_edge > GUARD_POWER_FRACTION,
            max_edge_fraction: max_edge,
        })
    }
}

fn apply_absorber(field: &mut ComplexField, profile: &[f64]) {
    let n = field.grid.n;
    for (row, chunk) in field.values.chunks_mut(n).enumerate() {
        let my = profile[row];
        for (v, mx) in chunk.iter_mut().zip(profile) {
            let m = my * mx;
            if m != 1.0 {
                *v *= m;
            }
        }
    }
}

/// Propagates the source through all screens of `screens` evaluated at `shift`.
pub fn propagate_channel(
    screens: &SparseScreenSet,
    shift: f64,
    geometry: &ChannelGeometry,
    beam: &BeamParams,
) -> Result<ChannelOutput> {
    let mut cp = ChannelPropagator::new(geometry, beam)?;
    let evaluators = cp.evaluators(screens);
    cp.propagate(screens, &evaluators, shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    const K: f64 = 2.0 * PI / 808e-9;

    fn random_field(grid: Grid, seed: u64) -> ComplexField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        ComplexField::from_values(values, grid, 0.0).unwrap()
    }

    #[test]
    fn gaussian_normalisation_and_axis_value() {
        let grid = Grid::new(256, 4e-3);
        let beam = BeamParams::focused(0.08, 50e3);
        let f = init_gaussian_beam(&beam, K, grid).unwrap();
        // 8 W0 = 0.64 m < 1.024 m extent
        assert!((f.power() - 1.0).abs() < 1e-6);
        let axis = f.at(128, 128);
        assert!((axis.norm() - (2.0 / (PI * 0.0064)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_phase_is_quadratic() {
        let grid = Grid::new(64, 2e-3);
        let beam = BeamParams::focused(0.02, 1e3);
        let f = init_gaussian_beam(&beam, K, grid).unwrap();
        let (row, col) = (32, 40);
        let (x, y) = (grid.coordinate(col), grid.coordinate(row));
        let expected = -K * (x * x + y * y) / 2e3;
        let diff = (f.at(row, col).arg() - expected).rem_euclid(2.0 * PI);
        assert!(diff < 1e-9 || 2.0 * PI - diff < 1e-9);
    }

    #[test]
    fn unresolved_beam_rejected() {
        let grid = Grid::new(64, 1e-2);
        assert!(init_gaussian_beam(&BeamParams::collimated(0.03), K, grid).is_err());
    }

    #[test]
    fn zero_step_is_identity() {
        let grid = Grid::new(32, 1e-3);
        let f = random_field(grid, 1);
        let g = vacuum_propagate(&f, 0.0, K).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn vacuum_step_conserves_power() {
        let grid = Grid::new(64, 1e-3);
        let f = random_field(grid, 2);
        let g = vacuum_propagate(&f, 750.0, K).unwrap();
        assert!((f.power() - g.power()).abs() < 1e-12 * f.power().max(1.0));
        assert!((g.z() - 750.0).abs() < 1e-12);
    }

    #[test]
    fn steps_compose() {
        let grid = Grid::new(64, 2e-3);
        let f = init_gaussian_beam(&BeamParams::collimated(0.02), K, grid).unwrap();
        let one = vacuum_propagate(&f, 900.0, K).unwrap();
        let mut p = Propagator::new(grid, K);
        let mut two = f.clone();
        p.vacuum_propagate(&mut two, 300.0).unwrap();
        p.vacuum_propagate(&mut two, 600.0).unwrap();
        for (a, b) in one.values().iter().zip(two.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn transpose_round_trip() {
        let grid = Grid::new(64, 1.0);
        let f = random_field(grid, 3);
        let mut v = f.values().to_vec();
        transpose_in_place(&mut v, 64);
        assert_eq!(v[5 * 64 + 7], f.values()[7 * 64 + 5]);
        transpose_in_place(&mut v, 64);
        assert_eq!(v, f.values());
    }

    #[test]
    fn screen_preserves_modulus() {
        let grid = Grid::new(16, 1e-3);
        let mut f = random_field(grid, 4);
        let before = f.clone();
        let phase = Array2::from_shape_fn((16, 16), |(r, c)| (r * 3 + c) as f64 * 0.7);
        apply_screen(&mut f, &phase).unwrap();
        for (a, b) in f.values().iter().zip(before.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        apply_screen(&mut f, &Array2::zeros((16, 16))).unwrap();
        assert!(apply_screen(&mut f, &Array2::zeros((8, 16))).is_err());
    }

    #[test]
    fn screens_add() {
        let grid = Grid::new(16, 1e-3);
        let f = random_field(grid, 5);
        let p1 = Array2::from_shape_fn((16, 16), |(r, c)| (r as f64).sin() + c as f64 * 0.1);
        let p2 = Array2::from_shape_fn((16, 16), |(r, c)| (c as f64).cos() - r as f64 * 0.3);
        let mut a = f.clone();
        apply_screen(&mut a, &p1).unwrap();
        apply_screen(&mut a, &p2).unwrap();
        let mut b = f;
        apply_screen(&mut b, &(&p1 + &p2)).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn aperture_limits() {
        let grid = Grid::new(128, 2e-3);
        let f = init_gaussian_beam(&BeamParams::collimated(0.02), K, grid).unwrap();
        assert_eq!(aperture_transmittance(&f, 0.0), 0.0);
        assert!((aperture_transmittance(&f, 1.0) - f.power().min(1.0)).abs() < 1e-12);
        let radii: Vec<f64> = (0..20).map(|i| i as f64 * 0.004).collect();
        let etas = aperture_transmittances(&f, &radii);
        assert!(etas.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn aperture_ignores_global_phase() {
        let grid = Grid::new(64, 2e-3);
        let f = init_gaussian_beam(&BeamParams::focused(0.02, 500.0), K, grid).unwrap();
        let mut g = f.clone();
        g.rotate_phase(1.234);
        let a = aperture_transmittance(&f, 0.015);
        let b = aperture_transmittance(&g, 0.015);
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn absorber_is_flat_inside() {
        let prof = absorber_profile(100);
        assert_eq!(prof[5], 1.0);
        assert_eq!(prof[50], 1.0);
        assert!(prof[0] < 1e-4);
        assert!(prof[0] < prof[2] && prof[2] < prof[4]);
    }
    #[test]
    fn strip_and_per_shift_paths_agree() {
        use crate::screens::{AmplitudeLaw, RingTable, SparseScreenSet};
        use crate::turbulence::TurbulenceParams;
        let g = ChannelGeometry {
            wavelength: 808e-9,
            distance: 2000.0,
            n_screens: 3,
            grid_n: 64,
            grid_step: 4e-3,
            aperture_radius: 0.04,
        };
        let t = TurbulenceParams {
            cn2: 1e-14,
            inner_scale: 0.005,
            outer_scale: 10.0,
            kappa_min: None,
            kappa_max: None,
        };
        let table = RingTable::for_geometry(&t, &g, 64).unwrap();
        let screens = SparseScreenSet::sample(&table, &g, 5, AmplitudeLaw::Deterministic);
        let mut cp = ChannelPropagator::new(&g, &BeamParams::collimated(0.03)).unwrap();
        let shifts = [0.0, 0.004, 0.02];
        let fast = cp.propagate_shifts(&screens, &shifts).unwrap();
        let ev = cp.evaluators(&screens);
        for (out, &s) in fast.iter().zip(&shifts) {
            let slow = cp.propagate(&screens, &ev, s).unwrap();
            let d = out
                .field
                .values
                .iter()
                .zip(&slow.field.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
            assert!(d < 1e-9, "{s}: {d}");
        }
        assert_eq!(cp.propagate_shifts(&screens, &[0.001]).unwrap().len(), 1);
    }

}
