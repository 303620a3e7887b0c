//! The intensity network: a small fully connected ReLU MLP over the frozen
//! Fourier features, producing a complex value (two real channels) at any
//! continuous spatio-temporal coordinate.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::CartesianGrid;
use crate::encoding::StiffEncoder;
use crate::{Error, Result};

/// Output channels: real and imaginary part of the intensity.
pub const OUTPUT_DIM: usize = 2;

/// Shape of the MLP: feature length in, hidden ReLU layers, affine 2-channel out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, hidden: Vec<usize>) -> Result<Self> {
        let arch = Self { input_dim, hidden };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Network("input dimension must be positive".into()));
        }
        if self.hidden.iter().any(|&w| w == 0) {
            return Err(Error::Network("hidden layer widths must be positive".into()));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every affine layer, in order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input_dim;
        for &w in &self.hidden {
            dims.push((prev, w));
            prev = w;
        }
        dims.push((prev, OUTPUT_DIM));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|&(fi, fo)| fi * fo + fo)
            .sum()
    }
}

/// One affine layer; `weight` is `(out, in)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Vec<f64>,
}

/// All trainable parameters of the MLP. Also serves as the container for
/// gradients and optimizer moments, which share the shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    arch: MlpArchitecture,
    layers: Vec<Layer>,
}

impl MlpParams {
    pub fn arch(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn zeros(arch: &MlpArchitecture) -> Result<Self> {
        arch.validate()?;
        let layers = arch
            .layer_dims()
            .iter()
            .map(|&(fi, fo)| Layer {
                weight: Array2::zeros((fo, fi)),
                bias: vec![0.0; fo],
            })
            .collect();
        Ok(Self {
            arch: arch.clone(),
            layers,
        })
    }

    /// Stable parameter ordering: per layer, weight rows then bias.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.arch.param_count());
        for layer in &self.layers {
            out.extend_from_slice(layer.weight.as_slice().expect("standard layout"));
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    pub fn unflatten(arch: &MlpArchitecture, flat: &[f64]) -> Result<Self> {
        if flat.len() != arch.param_count() {
            return Err(Error::Network(format!(
                "parameter vector has {} entries, architecture needs {}",
                flat.len(),
                arch.param_count()
            )));
        }
        let mut params = Self::zeros(arch)?;
        let mut offset = 0;
        for layer in &mut params.layers {
            let w = layer.weight.as_slice_mut().expect("standard layout");
            w.copy_from_slice(&flat[offset..offset + w.len()]);
            offset += w.len();
            let b = layer.bias.len();
            layer.bias.copy_from_slice(&flat[offset..offset + b]);
            offset += b;
        }
        Ok(params)
    }

    /// `self += scale * other`, elementwise over every weight and bias.
    pub fn add_scaled(&mut self, other: &MlpParams, scale: f64) {
        assert_eq!(self.arch, other.arch);
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            let aw = a.weight.as_slice_mut().expect("standard layout");
            let bw = b.weight.as_slice().expect("standard layout");
            for (x, y) in aw.iter_mut().zip(bw) {
                *x += scale * y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += scale * y;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| {
            l.weight
                .as_slice()
                .expect("standard layout")
                .iter()
                .chain(l.bias.iter())
                .copied()
        })
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }
}

/// Glorot-uniform weights (`U(-a, a)`, `a = sqrt(6/(fan_in+fan_out))`), zero
/// biases; deterministic per seed.
pub fn init_params(arch: &MlpArchitecture, seed: u64) -> Result<MlpParams> {
    let mut params = MlpParams::zeros(arch)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut params.layers {
        let (fo, fi) = layer.weight.dim();
        let a = (6.0 / (fi + fo) as f64).sqrt();
        for w in layer.weight.iter_mut() {
            *w = a * (2.0 * rng.random::<f64>() - 1.0);
        }
    }
    Ok(params)
}

fn forward_into(params: &MlpParams, feature: &[f64], scratch: &mut [Vec<f64>]) -> [f64; 2] {
    let n_layers = params.layers.len();
    for (li, layer) in params.layers.iter().enumerate() {
        let (prev, rest) = scratch.split_at_mut(li);
        let input: &[f64] = if li == 0 { feature } else { &prev[li - 1] };
        let last = li == n_layers - 1;
        let w = layer.weight.as_slice().expect("standard layout");
        let fi = layer.weight.ncols();
        for ((o, b), row) in rest[0].iter_mut().zip(&layer.bias).zip(w.chunks_exact(fi)) {
            let mut acc = *b;
            for (wi, xi) in row.iter().zip(input) {
                acc += wi * xi;
            }
            *o = if !last && acc < 0.0 { 0.0 } else { acc };
        }
    }
    let out = &scratch[n_layers - 1];
    [out[0], out[1]]
}

fn make_scratch(params: &MlpParams) -> Vec<Vec<f64>> {
    params
        .layers
        .iter()
        .map(|l| vec![0.0; l.bias.len()])
        .collect()
}

/// Affine/ReLU composition of the MLP on one feature vector.
pub fn mlp_forward(params: &MlpParams, feature: &[f64]) -> Result<[f64; 2]> {
    if feature.len() != params.arch.input_dim {
        return Err(Error::Network(format!(
            "feature vector has {} entries, network expects {}",
            feature.len(),
            params.arch.input_dim
        )));
    }
    let mut scratch = make_scratch(params);
    Ok(forward_into(params, feature, &mut scratch))
}

/// Complex intensity at a continuous coordinate: channel 1 + i·channel 2 of
/// the MLP applied to the encoded `(x, t)`.
pub fn intensity(params: &MlpParams, enc: &StiffEncoder, x: [f64; 2], t: f64) -> Complex64 {
    debug_assert_eq!(params.arch.input_dim, enc.feature_len());
    let feature = enc.encode(x, t);
    let mut scratch = make_scratch(params);
    let out = forward_into(params, &feature, &mut scratch);
    Complex64::new(out[0], out[1])
}

/// Evaluates the network on every pixel center of `grid` at phase `t`.
/// Output is indexed `(i, j)` for center `(x_i, y_j)`.
pub fn eval_frame(
    params: &MlpParams,
    enc: &StiffEncoder,
    grid: CartesianGrid,
    t: f64,
) -> Array2<Complex64> {
    eval_rotated_frame(params, enc, grid, t, 0.0)
}

/// Same as [`eval_frame`] but on the counterclockwise rotation of the grid:
/// entry `(i, j)` is the intensity at `R_angle · (x_i, y_j)`. The network is
/// evaluated directly at the rotated points; nothing is interpolated.
pub fn eval_rotated_frame(
    params: &MlpParams,
    enc: &StiffEncoder,
    grid: CartesianGrid,
    t: f64,
    angle: f64,
) -> Array2<Complex64> {
    debug_assert_eq!(params.arch.input_dim, enc.feature_len());
    let centers = grid.centers_1d();
    let (sin_a, cos_a) = if angle == 0.0 {
        (0.0, 1.0)
    } else {
        angle.sin_cos()
    };
    let mut out = Array2::zeros((grid.n_x(), grid.n_y()));
    let mut feature = vec![0.0; enc.feature_len()];
    let mut scratch = make_scratch(params);
    for (i, &x) in centers.iter().enumerate() {
        for (j, &y) in centers.iter().enumerate() {
            let p = [cos_a * x - sin_a * y, sin_a * x + cos_a * y];
            enc.encode_into(p, t, &mut feature);
            let v = forward_into(params, &feature, &mut scratch);
            out[[i, j]] = Complex64::new(v[0], v[1]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{build_encoder, StiffParams};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn arch(input: usize, hidden: Vec<usize>) -> MlpArchitecture {
        MlpArchitecture::new(input, hidden).unwrap()
    }

    fn small_encoder() -> StiffEncoder {
        build_encoder(StiffParams {
            static_percent: 60.0,
            length: 20,
            sigma: 3.0,
            seed: 42,
        })
        .unwrap()
    }

    #[test]
    fn param_count_for_default_shape() {
        let a = arch(800, vec![250, 250, 250]);
        assert_eq!(a.param_count(), 800 * 250 + 250 + 250 * 250 + 250 + 250 * 250 + 250 + 250 * 2 + 2);
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let a = arch(12, vec![8, 8]);
        let p1 = init_params(&a, 5).unwrap();
        let p2 = init_params(&a, 5).unwrap();
        assert_eq!(p1, p2);
        assert_ne!(p1, init_params(&a, 6).unwrap());
        for l in p1.layers() {
            assert!(l.bias.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn init_respects_the_glorot_bound() {
        let a = arch(800, vec![250]);
        let p = init_params(&a, 0).unwrap();
        let bound = (6.0 / 1050.0_f64).sqrt();
        assert!((bound - 0.0756).abs() < 1e-4);
        let max_w = p.layers()[0]
            .weight
            .iter()
            .fold(0.0f64, |m, &w| m.max(w.abs()));
        assert!(max_w <= bound);
        // The draws should nearly fill the interval too.
        assert!(max_w > 0.95 * bound);
    }

    #[test]
    fn zero_params_map_everything_to_zero() {
        let a = arch(20, vec![7]);
        let p = MlpParams::zeros(&a).unwrap();
        assert_eq!(mlp_forward(&p, &vec![0.3; 20]).unwrap(), [0.0, 0.0]);
        let enc = small_encoder();
        assert_eq!(intensity(&p, &enc, [0.2, -0.4], 0.6), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn single_affine_layer_passes_features_through() {
        let a = arch(2, vec![]);
        let mut p = MlpParams::zeros(&a).unwrap();
        p.layers_mut()[0].weight = Array2::eye(2);
        let out = mlp_forward(&p, &[0.7, -1.3]).unwrap();
        assert_eq!(out, [0.7, -1.3]);
    }

    #[test]
    fn forward_rejects_wrong_feature_length() {
        let a = arch(4, vec![3]);
        let p = MlpParams::zeros(&a).unwrap();
        assert!(mlp_forward(&p, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn positive_nets_are_positively_homogeneous() {
        // All-positive weights, zero biases, nonnegative features: every
        // preactivation is nonnegative, so ReLU acts as identity and the net
        // is linear on this ray.
        let a = arch(6, vec![5, 4]);
        let mut p = init_params(&a, 9).unwrap();
        for l in p.layers_mut() {
            l.weight.mapv_inplace(f64::abs);
        }
        let f: Vec<f64> = (0..6).map(|i| 0.1 + i as f64 * 0.1).collect();
        let f2: Vec<f64> = f.iter().map(|v| 2.0 * v).collect();
        let y1 = mlp_forward(&p, &f).unwrap();
        let y2 = mlp_forward(&p, &f2).unwrap();
        assert!((y2[0] - 2.0 * y1[0]).abs() < 1e-12);
        assert!((y2[1] - 2.0 * y1[1]).abs() < 1e-12);
    }

    #[test]
    fn intensity_is_time_periodic_and_static_when_fully_static() {
        let enc = small_encoder();
        let a = arch(enc.feature_len(), vec![9]);
        let p = init_params(&a, 1).unwrap();
        let x = [0.25, -0.5];
        assert_eq!(intensity(&p, &enc, x, 0.25), intensity(&p, &enc, x, 1.25));

        let static_enc = build_encoder(StiffParams {
            static_percent: 100.0,
            length: 20,
            sigma: 3.0,
            seed: 42,
        })
        .unwrap();
        let ps = init_params(&arch(20, vec![9]), 1).unwrap();
        assert_eq!(
            intensity(&ps, &static_enc, x, 0.11),
            intensity(&ps, &static_enc, x, 0.87)
        );
    }

    #[test]
    fn two_by_two_grid_centers_are_half_units() {
        let g = CartesianGrid::square(2).unwrap();
        assert_eq!(g.centers_1d(), vec![-0.5, 0.5]);
        let enc = small_encoder();
        let p = init_params(&arch(enc.feature_len(), vec![5]), 2).unwrap();
        let frame = eval_frame(&p, &enc, g, 0.5);
        assert_eq!(frame[[0, 1]], intensity(&p, &enc, [-0.5, 0.5], 0.5));
    }

    #[test]
    fn frame_evaluation_matches_pointwise_calls_bitwise() {
        let g = CartesianGrid::square(5).unwrap();
        let enc = small_encoder();
        let p = init_params(&arch(enc.feature_len(), vec![8, 8]), 3).unwrap();
        let frame = eval_frame(&p, &enc, g, 0.3);
        for i in 0..5 {
            for j in 0..5 {
                let c = g.center(i, j);
                assert_eq!(frame[[i, j]], intensity(&p, &enc, c, 0.3));
            }
        }
    }

    #[test]
    fn rotation_by_zero_is_identity() {
        let g = CartesianGrid::square(6).unwrap();
        let enc = small_encoder();
        let p = init_params(&arch(enc.feature_len(), vec![8]), 4).unwrap();
        assert_eq!(
            eval_rotated_frame(&p, &enc, g, 0.4, 0.0),
            eval_frame(&p, &enc, g, 0.4)
        );
    }

    #[test]
    fn rotation_by_pi_negates_coordinates() {
        let g = CartesianGrid::square(6).unwrap();
        let enc = small_encoder();
        let p = init_params(&arch(enc.feature_len(), vec![8]), 4).unwrap();
        let rotated = eval_rotated_frame(&p, &enc, g, 0.4, PI);
        for i in 0..6 {
            for j in 0..6 {
                let [x, y] = g.center(i, j);
                let direct = intensity(&p, &enc, [-x, -y], 0.4);
                assert!((rotated[[i, j]] - direct).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn quarter_rotation_evaluates_at_rotated_points() {
        let g = CartesianGrid::square(4).unwrap();
        let enc = small_encoder();
        let p = init_params(&arch(enc.feature_len(), vec![8]), 4).unwrap();
        let rotated = eval_rotated_frame(&p, &enc, g, 0.1, PI / 2.0);
        let (s, c) = (PI / 2.0).sin_cos();
        for i in 0..4 {
            for j in 0..4 {
                let [x, y] = g.center(i, j);
                let direct = intensity(&p, &enc, [c * x - s * y, s * x + c * y], 0.1);
                assert_eq!(rotated[[i, j]], direct);
            }
        }
    }

    #[test]
    fn rotating_a_radially_symmetric_field_changes_nothing() {
        // A zero-frequency encoder makes the features, hence the network
        // output, independent of position: the simplest rotation-invariant
        // field expressible exactly. Any rotation must then reproduce the
        // frame to the last bit of the evaluation tolerance.
        let enc = build_encoder(StiffParams {
            static_percent: 60.0,
            length: 20,
            sigma: 0.0,
            seed: 1,
        })
        .unwrap();
        let p = init_params(&arch(20, vec![8]), 5).unwrap();
        let g = CartesianGrid::square(8).unwrap();
        let base = eval_frame(&p, &enc, g, 0.7);
        let rot = eval_rotated_frame(&p, &enc, g, 0.7, PI / 2.0);
        for (a, b) in base.iter().zip(rot.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn continuity_probe_at_small_displacement() {
        let enc = small_encoder();
        let p = init_params(&arch(enc.feature_len(), vec![16, 16]), 6).unwrap();
        let x = [0.31, -0.22];
        let d = 1e-6;
        let v0 = intensity(&p, &enc, x, 0.5);
        let v1 = intensity(&p, &enc, [x[0] + d, x[1]], 0.5);
        assert!((v1 - v0).norm() < 1e-2);
    }

    proptest! {
        #[test]
        fn flatten_unflatten_roundtrips(seed in 0u64..50) {
            let a = arch(10, vec![7, 3]);
            let p = init_params(&a, seed).unwrap();
            let flat = p.flatten();
            prop_assert_eq!(flat.len(), a.param_count());
            let q = MlpParams::unflatten(&a, &flat).unwrap();
            prop_assert_eq!(p, q);
        }
    }

    #[test]
    fn unflatten_rejects_wrong_length() {
        let a = arch(4, vec![3]);
        assert!(MlpParams::unflatten(&a, &[0.0; 5]).is_err());
    }
}
