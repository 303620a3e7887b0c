//! Image-domain containers: pixel-centered grids, complex image series,
//! coil sensitivity maps, and the acquired radial dataset.

use ndarray::{Array3, ArrayView1, ArrayView2, Axis};
use num_complex::Complex64;

use crate::trajectory::SpokeSchedule;
use crate::{Error, Result};

/// Square pixel-centered grid over the field of view `[-1, 1]²`.
///
/// Pixel `(i, j)` is centered at `(-1 + (i + 1/2)Δ, -1 + (j + 1/2)Δ)` with
/// `Δ = 2/n`, so centers never touch the boundary and the pixel areas tile
/// the FOV exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CartesianGrid {
    n_x: usize,
    n_y: usize,
}

impl CartesianGrid {
    pub fn square(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Grid(format!("grid size must be at least 2, got {n}")));
        }
        Ok(Self { n_x: n, n_y: n })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_pixels(&self) -> usize {
        self.n_x * self.n_y
    }

    /// Pixel spacing `Δ = 2/n_x`.
    pub fn spacing(&self) -> f64 {
        2.0 / self.n_x as f64
    }

    fn axis_center(i: usize, n: usize) -> f64 {
        -1.0 + (i as f64 + 0.5) * (2.0 / n as f64)
    }

    /// Center coordinates of pixel `(i, j)`.
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            Self::axis_center(i, self.n_x),
            Self::axis_center(j, self.n_y),
        ]
    }

    /// The shared 1-D center coordinates (same for both axes of a square grid).
    pub fn centers_1d(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| Self::axis_center(i, self.n_x)).collect()
    }
}

/// Complex-valued image sequence on a [`CartesianGrid`], stored as
/// `(x, y, frame)`. Frame `j` (0-based) sits at cardiac phase `(j+1)/n_t`.
#[derive(Debug, Clone)]
pub struct DynamicImage {
    grid: CartesianGrid,
    values: Array3<Complex64>,
}

impl DynamicImage {
    pub fn new(grid: CartesianGrid, values: Array3<Complex64>) -> Result<Self> {
        let (nx, ny, nt) = values.dim();
        if nx != grid.n_x() || ny != grid.n_y() {
            return Err(Error::Grid(format!(
                "image shape {nx}x{ny} does not match grid {}x{}",
                grid.n_x(),
                grid.n_y()
            )));
        }
        if nt == 0 {
            return Err(Error::Grid("image needs at least one frame".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: CartesianGrid, n_t: usize) -> Result<Self> {
        Self::new(grid, Array3::zeros((grid.n_x(), grid.n_y(), n_t)))
    }

    pub fn grid(&self) -> CartesianGrid {
        self.grid
    }

    pub fn n_t(&self) -> usize {
        self.values.dim().2
    }

    pub fn values(&self) -> &Array3<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array3<Complex64> {
        &mut self.values
    }

    pub fn frame(&self, j: usize) -> ArrayView2<'_, Complex64> {
        self.values.index_axis(Axis(2), j)
    }

    /// Cardiac phase of frame `j`: `(j+1)/n_t`, in `(0, 1]`.
    pub fn cardiac_phase(&self, j: usize) -> f64 {
        (j as f64 + 1.0) / self.n_t() as f64
    }

    pub fn magnitude(&self) -> Array3<f64> {
        self.values.mapv(|v| v.norm())
    }

    pub fn max_magnitude(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Per-coil complex sensitivity maps, stored as `(coil, x, y)`.
#[derive(Debug, Clone)]
pub struct CoilMaps {
    grid: CartesianGrid,
    maps: Array3<Complex64>,
}

impl CoilMaps {
    pub fn new(grid: CartesianGrid, maps: Array3<Complex64>) -> Result<Self> {
        let (nc, nx, ny) = maps.dim();
        if nx != grid.n_x() || ny != grid.n_y() {
            return Err(Error::Grid(format!(
                "coil map shape {nx}x{ny} does not match grid {}x{}",
                grid.n_x(),
                grid.n_y()
            )));
        }
        if nc == 0 {
            return Err(Error::Grid("need at least one coil".into()));
        }
        Ok(Self { grid, maps })
    }

    pub fn grid(&self) -> CartesianGrid {
        self.grid
    }

    pub fn n_c(&self) -> usize {
        self.maps.dim().0
    }

    pub fn maps(&self) -> &Array3<Complex64> {
        &self.maps
    }

    pub fn coil(&self, c: usize) -> ArrayView2<'_, Complex64> {
        self.maps.index_axis(Axis(0), c)
    }
}

/// A multi-coil radial acquisition: the spoke schedule, coil maps, and the
/// measured samples, shape `(spoke, coil, sample)`.
///
/// Samples of spoke `s` live on frequencies `k_r^i = -k_max + i·2k_max/n_k`
/// (cycles per FOV-unit, symmetric echo, DC at `i = n_k/2`), along the spoke
/// direction at `schedule.entries[s].angle`.
#[derive(Debug, Clone)]
pub struct KSpaceDataset {
    pub schedule: SpokeSchedule,
    pub coil_maps: CoilMaps,
    pub k_max: f64,
    pub noise_sigma: f64,
    pub samples: Array3<Complex64>,
    pub ground_truth: Option<DynamicImage>,
    pub seed: u64,
}

impl KSpaceDataset {
    pub fn grid(&self) -> CartesianGrid {
        self.coil_maps.grid()
    }

    pub fn n_spokes(&self) -> usize {
        self.samples.dim().0
    }

    pub fn n_c(&self) -> usize {
        self.samples.dim().1
    }

    pub fn n_k(&self) -> usize {
        self.samples.dim().2
    }

    /// Readout frequencies shared by every spoke.
    pub fn k_grid(&self) -> Vec<f64> {
        let n_k = self.n_k();
        (0..n_k)
            .map(|i| -self.k_max + (i as f64 / n_k as f64) * 2.0 * self.k_max)
            .collect()
    }

    pub fn spoke_samples(&self, spoke: usize, coil: usize) -> ArrayView1<'_, Complex64> {
        self.samples
            .index_axis(Axis(0), spoke)
            .index_axis_move(Axis(0), coil)
    }

    /// Checks the structural invariants tying schedule, coils and samples
    /// together; call after assembling a dataset by hand or from disk.
    pub fn validate(&self) -> Result<()> {
        let (n_spokes, n_c, n_k) = self.samples.dim();
        if n_spokes != self.schedule.n_spokes() {
            return Err(Error::Grid(format!(
                "samples hold {n_spokes} spokes but schedule has {}",
                self.schedule.n_spokes()
            )));
        }
        if n_c != self.coil_maps.n_c() {
            return Err(Error::Grid(format!(
                "samples hold {n_c} coils but maps have {}",
                self.coil_maps.n_c()
            )));
        }
        if n_k != self.grid().n_x() {
            return Err(Error::Grid(format!(
                "symmetric-echo readout requires n_k = n_x, got {n_k} vs {}",
                self.grid().n_x()
            )));
        }
        if n_k % 2 != 0 {
            return Err(Error::Grid(format!("n_k must be even to place DC on the grid, got {n_k}")));
        }
        if !(self.k_max > 0.0 && self.k_max.is_finite()) {
            return Err(Error::Grid(format!("k_max must be positive and finite, got {}", self.k_max)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Grid(format!(
                "noise_sigma must be non-negative and finite, got {}",
                self.noise_sigma
            )));
        }
        if let Some(truth) = &self.ground_truth {
            if truth.grid() != self.grid() {
                return Err(Error::Grid("ground truth grid does not match coil maps".into()));
            }
            if truth.n_t() != self.schedule.n_frames() {
                return Err(Error::Grid(format!(
                    "ground truth has {} frames but schedule has {}",
                    truth.n_t(),
                    self.schedule.n_frames()
                )));
            }
        }
        Ok(())
    }
}
