//! Dynamic ellipse phantom, synthetic coil maps, brute-force k-space
//! simulation, and the density-compensated adjoint baseline.
//!
//! The simulator doubles as the verification oracle for the fast forward
//! operator: it evaluates the unnormalized 2D Fourier transform of a gridded
//! frame by direct summation, with no FFT and no interpolation shortcuts.

use ndarray::{Array2, Array3, ArrayView2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::TAU;

use crate::data::{CartesianGrid, CoilMaps, DynamicImage, KSpaceDataset};
use crate::trajectory::SpokeSchedule;
use crate::{Error, Result};

/// One (possibly pulsating) ellipse of the phantom. The semi-axes scale by
/// `1 + pulse_amplitude·sin(2πt + pulse_phase)` over the cardiac cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center: [f64; 2],
    pub semi_axes: [f64; 2],
    /// Counterclockwise rotation of the axes, radians.
    pub rotation: f64,
    pub intensity: Complex64,
    /// Relative pulsation amplitude, in `[0, 0.5]`.
    pub pulse_amplitude: f64,
    pub pulse_phase: f64,
}

impl Ellipse {
    fn scale_at(&self, t: f64) -> f64 {
        // Reduce t first so the motion is exactly 1-periodic.
        let tr = t - t.floor();
        1.0 + self.pulse_amplitude * (TAU * tr + self.pulse_phase).sin()
    }

    /// Whether point `p` lies inside the ellipse at phase `t`.
    pub fn contains(&self, p: [f64; 2], t: f64) -> bool {
        let s = self.scale_at(t);
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let (sin_r, cos_r) = self.rotation.sin_cos();
        let u = (cos_r * dx + sin_r * dy) / (self.semi_axes[0] * s);
        let v = (cos_r * dy - sin_r * dx) / (self.semi_axes[1] * s);
        u * u + v * v <= 1.0
    }

    /// Half-extent of the axis-aligned bounding box at maximal dilation.
    fn max_extent(&self) -> [f64; 2] {
        let (sin_r, cos_r) = self.rotation.sin_cos();
        let [a, b] = self.semi_axes;
        let s = 1.0 + self.pulse_amplitude;
        [
            s * ((a * cos_r).powi(2) + (b * sin_r).powi(2)).sqrt(),
            s * ((a * sin_r).powi(2) + (b * cos_r).powi(2)).sqrt(),
        ]
    }
}

/// A phantom: overlapping ellipses (values add up) over a flat background.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhantomSpec {
    pub ellipses: Vec<Ellipse>,
    pub background: Complex64,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.ellipses.iter().enumerate() {
            if !(e.semi_axes[0] > 0.0 && e.semi_axes[1] > 0.0) {
                return Err(Error::Phantom(format!("ellipse {i}: semi-axes must be positive")));
            }
            if !(0.0..=0.5).contains(&e.pulse_amplitude) {
                return Err(Error::Phantom(format!(
                    "ellipse {i}: pulse amplitude {} outside [0, 0.5]",
                    e.pulse_amplitude
                )));
            }
            let ext = e.max_extent();
            if e.center[0].abs() + ext[0] > 1.0 || e.center[1].abs() + ext[1] > 1.0 {
                return Err(Error::Phantom(format!(
                    "ellipse {i} leaves the unit square at maximal dilation"
                )));
            }
            if !(e.intensity.re.is_finite() && e.intensity.im.is_finite()) {
                return Err(Error::Phantom(format!("ellipse {i}: intensity must be finite")));
            }
        }
        Ok(())
    }

    /// The default 64x64-scale test phantom: a torso-like static body, two
    /// pulsating chambers beating out of phase, and two static features.
    pub fn desk() -> Self {
        Self {
            ellipses: vec![
                Ellipse {
                    center: [0.02, 0.0],
                    semi_axes: [0.58, 0.70],
                    rotation: 0.10,
                    intensity: Complex64::from_polar(0.55, 0.30),
                    pulse_amplitude: 0.0,
                    pulse_phase: 0.0,
                },
                Ellipse {
                    center: [-0.18, 0.12],
                    semi_axes: [0.17, 0.14],
                    rotation: 0.50,
                    intensity: Complex64::from_polar(0.75, -0.40),
                    pulse_amplitude: 0.35,
                    pulse_phase: 0.0,
                },
                Ellipse {
                    center: [-0.30, -0.06],
                    semi_axes: [0.09, 0.11],
                    rotation: -0.30,
                    intensity: Complex64::from_polar(0.90, 0.80),
                    pulse_amplitude: 0.25,
                    pulse_phase: std::f64::consts::FRAC_PI_2,
                },
                Ellipse {
                    center: [0.33, -0.25],
                    semi_axes: [0.10, 0.16],
                    rotation: 0.90,
                    intensity: Complex64::from_polar(0.70, 1.20),
                    pulse_amplitude: 0.0,
                    pulse_phase: 0.0,
                },
                Ellipse {
                    center: [0.30, 0.35],
                    semi_axes: [0.07, 0.05],
                    rotation: 0.0,
                    intensity: Complex64::from_polar(1.00, -1.00),
                    pulse_amplitude: 0.0,
                    pulse_phase: 0.0,
                },
            ],
            background: Complex64::new(0.0, 0.0),
        }
    }

    /// A single static disk, handy as a fully-sampled baseline target.
    pub fn disk(radius: f64) -> Self {
        Self {
            ellipses: vec![Ellipse {
                center: [0.0, 0.0],
                semi_axes: [radius, radius],
                rotation: 0.0,
                intensity: Complex64::new(1.0, 0.0),
                pulse_amplitude: 0.0,
                pulse_phase: 0.0,
            }],
            background: Complex64::new(0.0, 0.0),
        }
    }
}

/// Rasterizes the phantom: pixel value = background + sum of intensities of
/// the ellipses containing the pixel center at that frame's cardiac phase.
pub fn render_phantom(spec: &PhantomSpec, grid: CartesianGrid, n_t: usize) -> Result<DynamicImage> {
    spec.validate()?;
    if n_t == 0 {
        return Err(Error::Phantom("need at least one frame".into()));
    }
    let centers = grid.centers_1d();
    let mut values = Array3::zeros((grid.n_x(), grid.n_y(), n_t));
    for j in 0..n_t {
        let t = (j as f64 + 1.0) / n_t as f64;
        for (ix, &x) in centers.iter().enumerate() {
            for (iy, &y) in centers.iter().enumerate() {
                let mut v = spec.background;
                for e in &spec.ellipses {
                    if e.contains([x, y], t) {
                        v += e.intensity;
                    }
                }
                values[[ix, iy, j]] = v;
            }
        }
    }
    DynamicImage::new(grid, values)
}

/// Synthesizes `n_c` smooth coil maps: Gaussian lobes (width 1.2 FOV-units)
/// centered on the FOV boundary at angles `2πc/n_c`, each with a random
/// linear phase ramp; normalized so the maximal root-sum-of-squares
/// magnitude over pixels is 1.
pub fn synth_coil_maps(grid: CartesianGrid, n_c: usize, seed: u64) -> Result<CoilMaps> {
    if n_c == 0 {
        return Err(Error::Phantom("need at least one coil".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ramp_dist = Normal::new(0.0, 0.5).expect("valid std");
    let centers = grid.centers_1d();
    let width = 1.2;
    let mut maps = Array3::zeros((n_c, grid.n_x(), grid.n_y()));
    for c in 0..n_c {
        let lobe_angle = TAU * c as f64 / n_c as f64;
        let (ly, lx) = lobe_angle.sin_cos();
        let ramp = [ramp_dist.sample(&mut rng), ramp_dist.sample(&mut rng)];
        let phase0 = TAU * rng.random::<f64>();
        for (ix, &x) in centers.iter().enumerate() {
            for (iy, &y) in centers.iter().enumerate() {
                let d2 = (x - lx).powi(2) + (y - ly).powi(2);
                let mag = (-d2 / (2.0 * width * width)).exp();
                let phase = phase0 + TAU * (ramp[0] * x + ramp[1] * y);
                maps[[c, ix, iy]] = Complex64::from_polar(mag, phase);
            }
        }
    }
    let mut max_rss = 0.0f64;
    for ix in 0..grid.n_x() {
        for iy in 0..grid.n_y() {
            let rss: f64 = (0..n_c).map(|c| maps[[c, ix, iy]].norm_sqr()).sum::<f64>().sqrt();
            max_rss = max_rss.max(rss);
        }
    }
    maps.mapv_inplace(|v| v / max_rss);
    CoilMaps::new(grid, maps)
}

/// Brute-force reference transform: the Riemann-sum unnormalized 2D Fourier
/// transform of `frame·coil` sampled along the spoke direction,
/// `Δ²·Σ f(x)·S(x)·exp(-2πi·k·(ξ·x))` per requested frequency.
pub fn direct_dft_spoke(
    frame: ArrayView2<'_, Complex64>,
    coil: ArrayView2<'_, Complex64>,
    angle: f64,
    k_r: &[f64],
) -> Vec<Complex64> {
    assert_eq!(frame.dim(), coil.dim());
    let (n_x, n_y) = frame.dim();
    assert_eq!(n_x, n_y, "square grids only");
    let grid = CartesianGrid::square(n_x).expect("valid grid");
    let centers = grid.centers_1d();
    let (xi_y, xi_x) = angle.sin_cos();

    // Weighted image and its projection coordinate, skipping exact zeros.
    let mut weights = Vec::with_capacity(n_x * n_y);
    for (ix, &x) in centers.iter().enumerate() {
        for (iy, &y) in centers.iter().enumerate() {
            let w = frame[[ix, iy]] * coil[[ix, iy]];
            if w != Complex64::new(0.0, 0.0) {
                weights.push((w, xi_x * x + xi_y * y));
            }
        }
    }

    let delta_sq = grid.spacing() * grid.spacing();
    k_r.iter()
        .map(|&k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(w, u) in &weights {
                let (s, c) = (-TAU * k * u).sin_cos();
                acc += w * Complex64::new(c, s);
            }
            delta_sq * acc
        })
        .collect()
}

/// Simulates a radial acquisition of `truth`: every spoke's samples come from
/// the brute-force transform of its frame, plus i.i.d. complex Gaussian noise
/// when `noise_sigma > 0`. The readout uses `n_k = n_x` frequencies with
/// `k_max = n_x/4` cycles per FOV-unit.
pub fn simulate_acquisition(
    truth: &DynamicImage,
    maps: &CoilMaps,
    schedule: &SpokeSchedule,
    noise_sigma: f64,
    seed: u64,
) -> Result<KSpaceDataset> {
    if truth.n_t() != schedule.n_frames() {
        return Err(Error::Phantom(format!(
            "phantom has {} frames but schedule expects {}",
            truth.n_t(),
            schedule.n_frames()
        )));
    }
    if truth.grid() != maps.grid() {
        return Err(Error::Phantom("phantom and coil maps use different grids".into()));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Phantom(format!("noise sigma must be finite and >= 0, got {noise_sigma}")));
    }
    let grid = truth.grid();
    let n_k = grid.n_x();
    let n_c = maps.n_c();
    let k_max = grid.n_x() as f64 / 4.0;
    let k_grid: Vec<f64> = (0..n_k)
        .map(|i| -k_max + (i as f64 / n_k as f64) * 2.0 * k_max)
        .collect();

    let mut samples = Array3::zeros((schedule.n_spokes(), n_c, n_k));
    for entry in schedule.entries() {
        let frame = truth.frame(entry.frame_index);
        for c in 0..n_c {
            let spoke = direct_dft_spoke(frame, maps.coil(c), entry.angle, &k_grid);
            for (i, v) in spoke.into_iter().enumerate() {
                samples[[entry.spoke_index, c, i]] = v;
            }
        }
    }
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, noise_sigma).expect("checked above");
        for v in samples.iter_mut() {
            let re = noise.sample(&mut rng);
            let im = noise.sample(&mut rng);
            *v += Complex64::new(re, im);
        }
    }

    let data = KSpaceDataset {
        schedule: schedule.clone(),
        coil_maps: maps.clone(),
        k_max,
        noise_sigma,
        samples,
        ground_truth: Some(truth.clone()),
        seed,
    };
    data.validate()?;
    Ok(data)
}

/// Density-compensation weights for the adjoint: the ramp `|k_r|` with the
/// zero-frequency weight replaced by `Δk/4`.
pub fn density_weights(k_grid: &[f64]) -> Vec<f64> {
    let dk = if k_grid.len() > 1 { k_grid[1] - k_grid[0] } else { 1.0 };
    k_grid
        .iter()
        .map(|&k| if k == 0.0 { dk / 4.0 } else { k.abs() })
        .collect()
}

pub(crate) fn adjoint_recon_raw(data: &KSpaceDataset, grid: CartesianGrid) -> Result<DynamicImage> {
    data.validate()?;
    if grid != data.grid() {
        return Err(Error::Phantom("adjoint grid must match the dataset grid".into()));
    }
    let n_t = data.schedule.n_frames();
    let n_c = data.n_c();
    let n_k = data.n_k();
    let k_grid = data.k_grid();
    let weights = density_weights(&k_grid);
    let centers = grid.centers_1d();
    let n = grid.n_x();
    let delta_sq = grid.spacing() * grid.spacing();
    let dk = k_grid[1] - k_grid[0];

    let mut values: Array3<Complex64> = Array3::zeros((n, n, n_t));
    let mut weighted = vec![Complex64::new(0.0, 0.0); n_k];
    for entry in data.schedule.entries() {
        let (xi_y, xi_x) = entry.angle.sin_cos();
        let j = entry.frame_index;
        for c in 0..n_c {
            for i in 0..n_k {
                weighted[i] = weights[i] * data.samples[[entry.spoke_index, c, i]];
            }
            let coil = data.coil_maps.coil(c);
            for (ix, &x) in centers.iter().enumerate() {
                for (iy, &y) in centers.iter().enumerate() {
                    let u = xi_x * x + xi_y * y;
                    // exp(+2πi k_i u) over the uniform k grid, by recurrence.
                    let (s0, c0) = (TAU * k_grid[0] * u).sin_cos();
                    let (sd, cd) = (TAU * dk * u).sin_cos();
                    let step = Complex64::new(cd, sd);
                    let mut ph = Complex64::new(c0, s0);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for w in &weighted {
                        acc += w * ph;
                        ph *= step;
                    }
                    values[[ix, iy, j]] += delta_sq * coil[[ix, iy]].conj() * acc;
                }
            }
        }
    }
    DynamicImage::new(grid, values)
}

/// The classical baseline: conjugate-transpose of the acquisition operator
/// applied to ramp-density-compensated samples, coil-combined with the
/// conjugate maps, normalized to unit maximal magnitude.
pub fn adjoint_recon(data: &KSpaceDataset, grid: CartesianGrid) -> Result<DynamicImage> {
    let mut img = adjoint_recon_raw(data, grid)?;
    let max = img.max_magnitude();
    if max > 0.0 {
        img.values_mut().mapv_inplace(|v| v / max);
    }
    Ok(img)
}
