//! Coordinate encodings: Gaussian Fourier features and their spatio-temporal
//! variant with separate static and dynamic frequency blocks.
//!
//! A feature vector of length `L = 2·M_s + 4·M_d` is built from two frozen
//! Gaussian frequency matrices. The static half encodes space only; each
//! dynamic row is modulated by period-1 sinusoids of the cardiac phase, which
//! is what lets the share of static features act as a temporal-regularization
//! knob.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::{Error, Result};

/// Hyperparameters of the spatio-temporal encoding.
///
/// `static_percent` is the requested share of static features
/// (`200·M_s/L`), `length` the total feature count, `sigma` the standard
/// deviation of the Gaussian frequency draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StiffParams {
    pub static_percent: f64,
    pub length: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for StiffParams {
    fn default() -> Self {
        Self {
            static_percent: 67.0,
            length: 800,
            sigma: 6.5,
            seed: 0,
        }
    }
}

impl StiffParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.static_percent.is_finite() && (0.0..=100.0).contains(&self.static_percent)) {
            return Err(Error::Encoding(format!(
                "static_percent must lie in [0, 100], got {}",
                self.static_percent
            )));
        }
        if self.length < 6 {
            return Err(Error::Encoding(format!(
                "feature length must be at least 6, got {}",
                self.length
            )));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Encoding(format!(
                "sigma must be finite and non-negative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Integer block sizes realizing a requested `(static_percent, length)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedSizes {
    pub m_static: usize,
    pub m_dynamic: usize,
}

impl ResolvedSizes {
    pub fn length(&self) -> usize {
        2 * self.m_static + 4 * self.m_dynamic
    }

    /// The share of static features actually realized: `200·M_s/L`.
    pub fn effective_static_percent(&self) -> f64 {
        200.0 * self.m_static as f64 / self.length() as f64
    }
}

/// Picks `(M_s, M_d)` with `L = 2·M_s + 4·M_d` closest to the requested
/// static share: `M_s` starts at `round(p_s·L/200)` and moves by the minimal
/// amount (preferring downward) until `L − 2·M_s` is divisible by 4.
pub fn resolve_sizes(static_percent: f64, length: usize) -> Result<ResolvedSizes> {
    StiffParams {
        static_percent,
        length,
        sigma: 0.0,
        seed: 0,
    }
    .validate()?;
    let m0 = (static_percent * length as f64 / 200.0).round() as i64;
    let max_m = (length / 2) as i64;
    for step in 0..=max_m {
        for m in [m0 - step, m0 + step] {
            if !(0..=max_m).contains(&m) {
                continue;
            }
            let rest = length as i64 - 2 * m;
            if rest >= 0 && rest % 4 == 0 {
                return Ok(ResolvedSizes {
                    m_static: m as usize,
                    m_dynamic: (rest / 4) as usize,
                });
            }
        }
    }
    Err(Error::Encoding(format!(
        "no nonnegative (M_s, M_d) with 2*M_s + 4*M_d = {length} exists (length must be even)"
    )))
}

/// Frozen random frequency matrices for the spatio-temporal encoding.
#[derive(Debug, Clone)]
pub struct StiffEncoder {
    params: StiffParams,
    sizes: ResolvedSizes,
    b_static: Array2<f64>,
    b_dynamic: Array2<f64>,
}

/// Draws the frequency matrices for `params`, deterministically per seed.
///
/// A single RNG stream fills the static matrix first, then the dynamic one,
/// so runs differing only in `M_d` share the same static frequencies.
pub fn build_encoder(params: StiffParams) -> Result<StiffEncoder> {
    params.validate()?;
    let sizes = resolve_sizes(params.static_percent, params.length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, params.sigma)
        .map_err(|e| Error::Encoding(format!("bad frequency distribution: {e}")))?;
    let mut draw = |rows: usize| {
        Array2::from_shape_fn((rows, 2), |_| normal.sample(&mut rng))
    };
    let b_static = draw(sizes.m_static);
    let b_dynamic = draw(sizes.m_dynamic);
    Ok(StiffEncoder {
        params,
        sizes,
        b_static,
        b_dynamic,
    })
}

impl StiffEncoder {
    pub fn params(&self) -> &StiffParams {
        &self.params
    }

    pub fn sizes(&self) -> ResolvedSizes {
        self.sizes
    }

    pub fn feature_len(&self) -> usize {
        self.sizes.length()
    }

    pub fn b_static(&self) -> &Array2<f64> {
        &self.b_static
    }

    pub fn b_dynamic(&self) -> &Array2<f64> {
        &self.b_dynamic
    }

    /// Encodes `(x, t)` into `out` (length [`Self::feature_len`]), blocks in
    /// order: static cos, static sin, then the four dynamic products
    /// `cos·cos(2πt), cos·sin(2πt), sin·cos(2πt), sin·sin(2πt)`.
    pub fn encode_into(&self, x: [f64; 2], t: f64, out: &mut [f64]) {
        assert_eq!(out.len(), self.feature_len());
        let (ms, md) = (self.sizes.m_static, self.sizes.m_dynamic);
        // Reduce t to [0, 1) first so the encoding is exactly 1-periodic.
        let tr = t - t.floor();
        let (sin_t, cos_t) = (TAU * tr).sin_cos();
        let bs = self.b_static.as_slice().expect("standard layout");
        for i in 0..ms {
            let phase = TAU * (bs[2 * i] * x[0] + bs[2 * i + 1] * x[1]);
            let (s, c) = phase.sin_cos();
            out[i] = c;
            out[ms + i] = s;
        }
        let bd = self.b_dynamic.as_slice().expect("standard layout");
        let base = 2 * ms;
        for i in 0..md {
            let phase = TAU * (bd[2 * i] * x[0] + bd[2 * i + 1] * x[1]);
            let (s, c) = phase.sin_cos();
            out[base + i] = c * cos_t;
            out[base + md + i] = c * sin_t;
            out[base + 2 * md + i] = s * cos_t;
            out[base + 3 * md + i] = s * sin_t;
        }
    }

    pub fn encode(&self, x: [f64; 2], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.feature_len()];
        self.encode_into(x, t, &mut out);
        out
    }
}

/// Plain Gaussian Fourier features `[cos(2πBx); sin(2πBx)]` for a coordinate
/// of any dimension (the spatio-temporal encoding uses `d=2`; `d=3` treats
/// time as a third spatial axis for ablation experiments).
pub fn encode_gff(x: &[f64], b: &Array2<f64>) -> Vec<f64> {
    assert_eq!(
        b.ncols(),
        x.len(),
        "frequency matrix has {} columns for a {}-dim coordinate",
        b.ncols(),
        x.len()
    );
    let m = b.nrows();
    let mut out = vec![0.0; 2 * m];
    for (i, row) in b.rows().into_iter().enumerate() {
        let phase: f64 = TAU * row.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>();
        let (s, c) = phase.sin_cos();
        out[i] = c;
        out[m + i] = s;
    }
    out
}

/// Free-function form of [`StiffEncoder::encode`].
pub fn encode_stiff(x: [f64; 2], t: f64, enc: &StiffEncoder) -> Vec<f64> {
    enc.encode(x, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn resolve_sizes_matches_pinned_cases() {
        let all_static = resolve_sizes(100.0, 800).unwrap();
        assert_eq!((all_static.m_static, all_static.m_dynamic), (400, 0));
        assert_eq!(all_static.effective_static_percent(), 100.0);

        let paper_8 = resolve_sizes(67.0, 800).unwrap();
        assert_eq!((paper_8.m_static, paper_8.m_dynamic), (268, 66));
        assert_eq!(paper_8.effective_static_percent(), 67.0);

        let paper_4 = resolve_sizes(90.0, 600).unwrap();
        assert_eq!((paper_4.m_static, paper_4.m_dynamic), (270, 15));
        assert_eq!(paper_4.effective_static_percent(), 90.0);
    }

    #[test]
    fn resolve_sizes_agrees_with_exhaustive_search() {
        // Brute force: the feasible M_s nearest round(p_s*L/200), ties down.
        for length in [6, 8, 12, 100, 600, 800] {
            for p in 0..=100 {
                let p_s = p as f64;
                let m0 = (p_s * length as f64 / 200.0).round() as i64;
                let best = (0..=(length / 2) as i64)
                    .filter(|m| (length as i64 - 2 * m) % 4 == 0)
                    .min_by_key(|m| (2 * (m - m0).abs(), if *m <= m0 { 0 } else { 1 }))
                    .unwrap();
                let got = resolve_sizes(p_s, length).unwrap();
                assert_eq!(got.m_static as i64, best, "p_s={p_s} L={length}");
                assert_eq!(got.length(), length);
            }
        }
    }

    #[test]
    fn odd_lengths_are_infeasible() {
        assert!(resolve_sizes(50.0, 801).is_err());
        assert!(resolve_sizes(0.0, 7).is_err());
    }

    #[test]
    fn params_validation_catches_bad_ranges() {
        assert!(resolve_sizes(-1.0, 800).is_err());
        assert!(resolve_sizes(101.0, 800).is_err());
        assert!(resolve_sizes(50.0, 4).is_err());
        assert!(build_encoder(StiffParams {
            sigma: -1.0,
            ..StiffParams::default()
        })
        .is_err());
    }

    #[test]
    fn encoder_is_deterministic_per_seed() {
        let p = StiffParams::default();
        let a = build_encoder(p).unwrap();
        let b = build_encoder(p).unwrap();
        assert_eq!(a.b_static, b.b_static);
        assert_eq!(a.b_dynamic, b.b_dynamic);
        let c = build_encoder(StiffParams { seed: 1, ..p }).unwrap();
        assert_ne!(a.b_static, c.b_static);
    }

    #[test]
    fn zero_sigma_gives_zero_matrices() {
        let enc = build_encoder(StiffParams {
            sigma: 0.0,
            ..StiffParams::default()
        })
        .unwrap();
        assert!(enc.b_static.iter().all(|&v| v == 0.0));
        assert!(enc.b_dynamic.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn static_matrix_is_shared_across_dynamic_sizes() {
        // Same seed, same M_s, different M_d: static draws must coincide.
        let a = build_encoder(StiffParams {
            static_percent: 100.0,
            length: 40,
            sigma: 2.0,
            seed: 7,
        })
        .unwrap();
        let b = build_encoder(StiffParams {
            static_percent: 50.0,
            length: 80,
            sigma: 2.0,
            seed: 7,
        })
        .unwrap();
        assert_eq!(a.sizes().m_static, 20);
        assert_eq!(b.sizes().m_static, 20);
        assert_eq!(a.b_static, b.b_static);
    }

    #[test]
    fn paper_scale_draws_have_the_requested_spread() {
        let enc = build_encoder(StiffParams::default()).unwrap();
        let all: Vec<f64> = enc
            .b_static
            .iter()
            .chain(enc.b_dynamic.iter())
            .copied()
            .collect();
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        assert!((sd - 6.5).abs() < 0.65, "sample sd {sd}");
    }

    #[test]
    fn gff_at_origin_is_ones_then_zeros() {
        let b = Array2::from_shape_fn((5, 2), |(i, j)| (i + j) as f64);
        let f = encode_gff(&[0.0, 0.0], &b);
        assert_eq!(&f[..5], &[1.0; 5]);
        assert_eq!(&f[5..], &[0.0; 5]);
    }

    #[test]
    fn gff_handles_three_dimensional_coordinates() {
        let b = Array2::from_shape_fn((4, 3), |(i, j)| 0.1 * (i as f64 + 1.0) * (j as f64 - 1.0));
        let x = [0.3, -0.2, 0.7];
        let f = encode_gff(&x, &b);
        assert_eq!(f.len(), 8);
        for i in 0..4 {
            let phase = TAU * (b[[i, 0]] * x[0] + b[[i, 1]] * x[1] + b[[i, 2]] * x[2]);
            assert!((f[i] - phase.cos()).abs() < 1e-15);
            assert!((f[4 + i] - phase.sin()).abs() < 1e-15);
        }
    }

    fn test_encoder() -> StiffEncoder {
        build_encoder(StiffParams {
            static_percent: 60.0,
            length: 20,
            sigma: 3.0,
            seed: 42,
        })
        .unwrap()
    }

    #[test]
    fn stiff_block_layout_at_quarter_period() {
        let enc = test_encoder();
        let (ms, md) = (enc.sizes().m_static, enc.sizes().m_dynamic);
        let f = enc.encode([0.0, 0.0], 0.25);
        for i in 0..ms {
            assert_eq!(f[i], 1.0);
            assert_eq!(f[ms + i], 0.0);
        }
        let base = 2 * ms;
        for i in 0..md {
            // cos(2πt)=cos(π/2)≈0, sin(2πt)=1 at t=1/4.
            assert!(f[base + i].abs() < 1e-12);
            assert_eq!(f[base + md + i], 1.0);
            assert!(f[base + 2 * md + i].abs() < 1e-12);
            assert_eq!(f[base + 3 * md + i], 0.0);
        }
    }

    #[test]
    fn integer_shifts_of_dyadic_phases_are_bitwise_equal() {
        let enc = test_encoder();
        let x = [0.37, -0.81];
        for t in [0.0, 0.25, 0.5, 0.75] {
            let a = enc.encode(x, t);
            for k in [1.0, 2.0, 7.0, -3.0] {
                assert_eq!(a, enc.encode(x, t + k));
            }
        }
    }

    #[test]
    fn time_constant_when_fully_static() {
        let enc = build_encoder(StiffParams {
            static_percent: 100.0,
            length: 24,
            sigma: 2.0,
            seed: 3,
        })
        .unwrap();
        assert_eq!(enc.sizes().m_dynamic, 0);
        let x = [0.1, 0.9];
        assert_eq!(enc.encode(x, 0.13), enc.encode(x, 0.77));
    }

    proptest! {
        #[test]
        fn periodicity_within_float_tolerance(
            x0 in -2.0f64..2.0, x1 in -2.0f64..2.0,
            t in -3.0f64..3.0, k in -5i32..5,
        ) {
            let enc = test_encoder();
            let a = enc.encode([x0, x1], t);
            let b = enc.encode([x0, x1], t + k as f64);
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }

        #[test]
        fn block_norm_identities(
            x0 in -2.0f64..2.0, x1 in -2.0f64..2.0, t in -1.0f64..2.0,
        ) {
            let enc = test_encoder();
            let (ms, md) = (enc.sizes().m_static, enc.sizes().m_dynamic);
            let f = enc.encode([x0, x1], t);
            for v in &f {
                prop_assert!((-1.0..=1.0).contains(v));
            }
            for i in 0..ms {
                prop_assert!((f[i].powi(2) + f[ms + i].powi(2) - 1.0).abs() < 1e-12);
            }
            let base = 2 * ms;
            for i in 0..md {
                let q = f[base + i].powi(2)
                    + f[base + md + i].powi(2)
                    + f[base + 2 * md + i].powi(2)
                    + f[base + 3 * md + i].powi(2);
                prop_assert!((q - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn gff_entries_bounded_and_normalized(
            x0 in -1.0f64..1.0, x1 in -1.0f64..1.0, seed in 0u64..20,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, 4.0).unwrap();
            let b = Array2::from_shape_fn((6, 2), |_| normal.sample(&mut rng));
            let f = encode_gff(&[x0, x1], &b);
            for i in 0..6 {
                prop_assert!(f[i].abs() <= 1.0 && f[6 + i].abs() <= 1.0);
                prop_assert!((f[i].powi(2) + f[6 + i].powi(2) - 1.0).abs() < 1e-12);
            }
        }
    }
}
