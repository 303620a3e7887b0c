//! The NUFFT-free forward model.
//!
//! A spoke's k-space samples are produced in two steps tied together by the
//! Fourier Slice Theorem: line integrals of the sensitivity-weighted image
//! perpendicular to the spoke direction (a Radon projection, computed by
//! summing the network over a rotated grid), then an unnormalized 1D Fourier
//! transform of that projection along the spoke. Because the network is a
//! continuous function, the rotated grid needs no interpolation; only the
//! discrete coil maps are interpolated.

use ndarray::ArrayView2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::data::{CartesianGrid, KSpaceDataset};
use crate::encoding::StiffEncoder;
use crate::network::{intensity, MlpParams};
use crate::{Error, Result};

/// Anything that can be sampled at a continuous spatio-temporal coordinate.
/// The trained network is the main implementor; analytic test functions
/// implement it to validate the operator against closed forms.
pub trait IntensityField {
    fn intensity_at(&self, x: f64, y: f64, t: f64) -> Complex64;
}

/// The network as a continuous field.
pub struct NetworkField<'a> {
    pub params: &'a MlpParams,
    pub encoder: &'a StiffEncoder,
}

impl IntensityField for NetworkField<'_> {
    fn intensity_at(&self, x: f64, y: f64, t: f64) -> Complex64 {
        intensity(self.params, self.encoder, [x, y], t)
    }
}

impl<F: Fn(f64, f64, f64) -> Complex64> IntensityField for F {
    fn intensity_at(&self, x: f64, y: f64, t: f64) -> Complex64 {
        self(x, y, t)
    }
}

/// Tunables of the forward model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardConfig {
    /// Multiplies `|k_r|` inside the loss weights `1 + |k_r|`; the sampling
    /// frequencies themselves are untouched.
    pub k_unit_scale: f64,
    /// Supersampling factor of the line-integral quadrature.
    pub tau_oversample: usize,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            k_unit_scale: 1.0,
            tau_oversample: 1,
        }
    }
}

impl ForwardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_unit_scale.is_finite() && self.k_unit_scale > 0.0) {
            return Err(Error::Forward(format!(
                "k_unit_scale must be positive and finite, got {}",
                self.k_unit_scale
            )));
        }
        if self.tau_oversample == 0 {
            return Err(Error::Forward("tau_oversample must be at least 1".into()));
        }
        Ok(())
    }
}

/// Residual weights `w_i = 1 + |k_r^i · scale|`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    values: Vec<f64>,
}

impl LossWeights {
    pub fn ramp(k_r: &[f64], k_unit_scale: f64) -> Self {
        Self {
            values: k_r.iter().map(|&k| 1.0 + (k * k_unit_scale).abs()).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Precomputed geometry for one spoke: direction, frequencies, quadrature
/// abscissae, and the rotated evaluation points.
#[derive(Debug, Clone)]
pub struct SpokeForwardPlan {
    pub angle: f64,
    /// Cardiac phase the network is evaluated at.
    pub t: f64,
    pub xi: [f64; 2],
    pub xi_perp: [f64; 2],
    pub k_r: Vec<f64>,
    /// Projection abscissae: the pixel centers along the spoke direction.
    pub s: Vec<f64>,
    /// Quadrature abscissae along the perpendicular.
    pub tau: Vec<f64>,
    pub d_s: f64,
    pub d_tau: f64,
    /// Rotated points `s_j·ξ + τ_m·ξ⊥`, laid out `j·n_tau + m`.
    pub points: Vec<[f64; 2]>,
    pub weights: LossWeights,
}

impl SpokeForwardPlan {
    /// Plans a spoke at `angle`/phase `t` over `grid` with `n_k = n_x`
    /// readout frequencies up to `k_max`.
    pub fn new(
        angle: f64,
        t: f64,
        grid: CartesianGrid,
        k_max: f64,
        cfg: &ForwardConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(k_max.is_finite() && k_max > 0.0) {
            return Err(Error::Forward(format!("k_max must be positive, got {k_max}")));
        }
        let n_k = grid.n_x();
        let (xi_y, xi_x) = angle.sin_cos();
        let xi = [xi_x, xi_y];
        // Counterclockwise quarter turn of ξ.
        let xi_perp = [-xi_y, xi_x];
        let k_r: Vec<f64> = (0..n_k)
            .map(|i| -k_max + (i as f64 / n_k as f64) * 2.0 * k_max)
            .collect();
        let s = grid.centers_1d();
        let n_tau = n_k * cfg.tau_oversample;
        let d_tau = 2.0 / n_tau as f64;
        let tau: Vec<f64> = (0..n_tau).map(|m| -1.0 + (m as f64 + 0.5) * d_tau).collect();
        let mut points = Vec::with_capacity(s.len() * tau.len());
        for &sj in &s {
            for &tm in &tau {
                points.push([sj * xi[0] + tm * xi_perp[0], sj * xi[1] + tm * xi_perp[1]]);
            }
        }
        let weights = LossWeights::ramp(&k_r, cfg.k_unit_scale);
        Ok(Self {
            angle,
            t,
            xi,
            xi_perp,
            k_r,
            s,
            tau,
            d_s: grid.spacing(),
            d_tau,
            points,
            weights,
        })
    }

    /// Plans the given spoke of a dataset.
    pub fn for_spoke(data: &KSpaceDataset, spoke_index: usize, cfg: &ForwardConfig) -> Result<Self> {
        if spoke_index >= data.n_spokes() {
            return Err(Error::Forward(format!(
                "spoke index {spoke_index} out of range ({} spokes)",
                data.n_spokes()
            )));
        }
        let entry = data.schedule.entry(spoke_index);
        Self::new(entry.angle, entry.cardiac_phase, data.grid(), data.k_max, cfg)
    }
}

/// Bilinear interpolation of a coil map at arbitrary points, on the
/// pixel-centered lattice of the map's (square) grid. Points outside
/// `[-1,1]²` return exactly zero; inside, lattice cells that extend past the
/// outermost centers use zero ghost values, so the map decays continuously
/// to the FOV edge.
pub fn interp_coil(map: ArrayView2<'_, Complex64>, points: &[[f64; 2]]) -> Vec<Complex64> {
    let (n_x, n_y) = map.dim();
    assert_eq!(n_x, n_y, "square grids only");
    let n = n_x as isize;
    let inv_delta = n_x as f64 / 2.0;
    let zero = Complex64::new(0.0, 0.0);
    points
        .iter()
        .map(|&[x, y]| {
            if x.abs() > 1.0 || y.abs() > 1.0 {
                return zero;
            }
            // Continuous lattice coordinate: center i sits at u = i.
            let u = (x + 1.0) * inv_delta - 0.5;
            let v = (y + 1.0) * inv_delta - 0.5;
            let i0 = u.floor();
            let j0 = v.floor();
            let fu = u - i0;
            let fv = v - j0;
            let (i0, j0) = (i0 as isize, j0 as isize);
            let at = |i: isize, j: isize| -> Complex64 {
                if i < 0 || j < 0 || i >= n || j >= n {
                    zero
                } else {
                    map[[i as usize, j as usize]]
                }
            };
            at(i0, j0) * ((1.0 - fu) * (1.0 - fv))
                + at(i0 + 1, j0) * (fu * (1.0 - fv))
                + at(i0, j0 + 1) * ((1.0 - fu) * fv)
                + at(i0 + 1, j0 + 1) * (fu * fv)
        })
        .collect()
}

/// Radon projection of `field · coil` along the plan's direction: for each
/// abscissa `s_j`, the quadrature `Δτ·Σ_m field(s_j·ξ+τ_m·ξ⊥)·coil(...)`.
/// Points where the interpolated coil is exactly zero are skipped; they
/// cannot contribute.
pub fn radon_slice_field<F: IntensityField>(
    field: &F,
    coil: ArrayView2<'_, Complex64>,
    t: f64,
    plan: &SpokeForwardPlan,
) -> Vec<Complex64> {
    let coil_vals = interp_coil(coil, &plan.points);
    let n_tau = plan.tau.len();
    let zero = Complex64::new(0.0, 0.0);
    plan.s
        .iter()
        .enumerate()
        .map(|(j, _)| {
            let mut acc = zero;
            for m in 0..n_tau {
                let idx = j * n_tau + m;
                let c = coil_vals[idx];
                if c != zero {
                    let p = plan.points[idx];
                    acc += field.intensity_at(p[0], p[1], t) * c;
                }
            }
            plan.d_tau * acc
        })
        .collect()
}

/// [`radon_slice_field`] for the network.
pub fn radon_slice(
    params: &MlpParams,
    encoder: &StiffEncoder,
    coil: ArrayView2<'_, Complex64>,
    t: f64,
    plan: &SpokeForwardPlan,
) -> Vec<Complex64> {
    radon_slice_field(&NetworkField { params, encoder }, coil, t, plan)
}

/// Unnormalized 1D Fourier transform of a projection sampled at equispaced
/// abscissae `s`: `Δs·Σ_j profile_j·exp(-2πi·k·s_j)` per frequency.
pub fn ft1d_profile(profile: &[Complex64], s: &[f64], k_r: &[f64]) -> Vec<Complex64> {
    assert_eq!(profile.len(), s.len());
    assert!(s.len() > 1);
    let d_s = s[1] - s[0];
    k_r.iter()
        .map(|&k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (p, &sj) in profile.iter().zip(s) {
                let (sin, cos) = (-TAU * k * sj).sin_cos();
                acc += p * Complex64::new(cos, sin);
            }
            d_s * acc
        })
        .collect()
}

/// FFT-based evaluation of [`ft1d_profile`], valid when the frequency grid is
/// uniform with `Δk·Δs·n = 1` (the dataset's `k_max = n/4` convention). The
/// pixel-centered abscissae and the shifted frequency origin appear as phase
/// factors before and after a plain length-n FFT.
pub fn ft1d_profile_fft(profile: &[Complex64], s: &[f64], k_r: &[f64]) -> Result<Vec<Complex64>> {
    let n = profile.len();
    assert_eq!(n, s.len());
    if k_r.len() != n || n < 2 {
        return Err(Error::Forward("FFT path needs matching grid sizes".into()));
    }
    let d_s = s[1] - s[0];
    let d_k = k_r[1] - k_r[0];
    for w in k_r.windows(2) {
        if ((w[1] - w[0]) - d_k).abs() > 1e-12 * d_k.abs() {
            return Err(Error::Forward("FFT path needs a uniform frequency grid".into()));
        }
    }
    if (d_k * d_s * n as f64 - 1.0).abs() > 1e-9 {
        return Err(Error::Forward(format!(
            "FFT path needs Δk·Δs·n = 1, got {}",
            d_k * d_s * n as f64
        )));
    }
    let k0 = k_r[0];
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = profile
        .iter()
        .zip(s)
        .map(|(p, &sj)| {
            let (sin, cos) = (-TAU * k0 * sj).sin_cos();
            p * Complex64::new(cos, sin)
        })
        .collect();
    rustfft::FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    // Remaining exponent after the k0 factor: -2π·i·Δk·(s_0 + j·Δs)·i_k with
    // the j-dependent part handled by the FFT; correct for the s_0 offset.
    Ok(buf
        .into_iter()
        .enumerate()
        .map(|(ik, v)| {
            let (sin, cos) = (-TAU * ik as f64 * d_k * s[0]).sin_cos();
            d_s * v * Complex64::new(cos, sin)
        })
        .collect())
}

/// k-space samples of one spoke and coil under the current network: the 1D
/// transform of the Radon projection (Fourier Slice composition).
pub fn spoke_forward(
    params: &MlpParams,
    encoder: &StiffEncoder,
    data: &KSpaceDataset,
    spoke_index: usize,
    coil_index: usize,
    cfg: &ForwardConfig,
) -> Result<Vec<Complex64>> {
    if coil_index >= data.n_c() {
        return Err(Error::Forward(format!(
            "coil index {coil_index} out of range ({} coils)",
            data.n_c()
        )));
    }
    let plan = SpokeForwardPlan::for_spoke(data, spoke_index, cfg)?;
    let profile = radon_slice(params, encoder, data.coil_maps.coil(coil_index), plan.t, &plan);
    Ok(ft1d_profile(&profile, &plan.s, &plan.k_r))
}

pub(crate) fn weighted_residual_loss(
    predicted: &[Vec<Complex64>],
    measured: &KSpaceDataset,
    spoke_index: usize,
    weights: &LossWeights,
) -> f64 {
    let n_c = measured.n_c();
    let n_k = measured.n_k();
    let mut acc = 0.0;
    for (c, g) in predicted.iter().enumerate() {
        for (i, &w) in weights.values().iter().enumerate() {
            let r = g[i] - measured.samples[[spoke_index, c, i]];
            acc += (w * r.re).powi(2) + (w * r.im).powi(2);
        }
    }
    acc / (n_k * n_c) as f64
}

/// The weighted spoke data-fidelity term: mean over frequencies and coils of
/// the squared modulus of `(1+|k_r|)·(predicted - measured)`.
pub fn spoke_loss(
    params: &MlpParams,
    encoder: &StiffEncoder,
    data: &KSpaceDataset,
    spoke_index: usize,
    cfg: &ForwardConfig,
) -> Result<f64> {
    let plan = SpokeForwardPlan::for_spoke(data, spoke_index, cfg)?;
    let predicted: Vec<Vec<Complex64>> = (0..data.n_c())
        .map(|c| {
            let profile = radon_slice(params, encoder, data.coil_maps.coil(c), plan.t, &plan);
            ft1d_profile(&profile, &plan.s, &plan.k_r)
        })
        .collect();
    Ok(weighted_residual_loss(&predicted, data, spoke_index, &plan.weights))
}

/// Mean of [`spoke_loss`] over a batch of spokes.
pub fn batch_loss(
    params: &MlpParams,
    encoder: &StiffEncoder,
    data: &KSpaceDataset,
    spokes: &[usize],
    cfg: &ForwardConfig,
) -> Result<f64> {
    if spokes.is_empty() {
        return Err(Error::Forward("batch must contain at least one spoke".into()));
    }
    let mut acc = 0.0;
    for &s in spokes {
        acc += spoke_loss(params, encoder, data, s, cfg)?;
    }
    Ok(acc / spokes.len() as f64)
}

/// Simulates a noiseless acquisition of the network itself through this
/// module's forward operator (not the brute-force oracle). By construction,
/// `spoke_loss` of the same parameters on the result is exactly zero.
pub fn synthesize_dataset(
    params: &MlpParams,
    encoder: &StiffEncoder,
    maps: &crate::data::CoilMaps,
    schedule: &crate::trajectory::SpokeSchedule,
    k_max: f64,
    cfg: &ForwardConfig,
) -> Result<KSpaceDataset> {
    let grid = maps.grid();
    let n_k = grid.n_x();
    let mut samples = ndarray::Array3::zeros((schedule.n_spokes(), maps.n_c(), n_k));
    let data_shell = KSpaceDataset {
        schedule: schedule.clone(),
        coil_maps: maps.clone(),
        k_max,
        noise_sigma: 0.0,
        samples: samples.clone(),
        ground_truth: None,
        seed: 0,
    };
    for spoke in 0..schedule.n_spokes() {
        for c in 0..maps.n_c() {
            let g = spoke_forward(params, encoder, &data_shell, spoke, c, cfg)?;
            for (i, v) in g.into_iter().enumerate() {
                samples[[spoke, c, i]] = v;
            }
        }
    }
    let mut data = data_shell;
    data.samples = samples;
    data.validate()?;
    Ok(data)
}
