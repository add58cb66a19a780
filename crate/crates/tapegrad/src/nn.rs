use std::collections::BTreeMap;

use rand::Rng;

use crate::store::{Mat32, ParamStore};
use crate::tape::{Mat, Scalar, Tape, Var};

/// Feed-forward net descriptor: SiLU hidden layers, linear output. Parameters
/// live in a [`ParamStore`] under `{prefix}.w{i}` / `{prefix}.b{i}`.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub prefix: String,
    pub sizes: Vec<usize>,
}

impl Mlp {
    pub fn new(prefix: &str, sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "MLP needs at least input and output sizes");
        Mlp { prefix: prefix.to_string(), sizes: sizes.to_vec() }
    }

    pub fn in_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn out_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        for l in 0..self.sizes.len() - 1 {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let last = l == self.sizes.len() - 2;
            // He-uniform on hidden layers, smaller bound on the linear head.
            let bound =
                if last { (1.0 / fan_in as f64).sqrt() } else { (6.0 / fan_in as f64).sqrt() };
            let mut w = Mat32::zeros((fan_in, fan_out));
            for v in w.iter_mut() {
                *v = rng.random_range(-bound..bound) as f32;
            }
            store.insert(&format!("{}.w{l}", self.prefix), w);
            store.insert(&format!("{}.b{l}", self.prefix), Mat32::zeros((1, fan_out)));
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        (0..self.sizes.len() - 1)
            .flat_map(|l| [format!("{}.w{l}", self.prefix), format!("{}.b{l}", self.prefix)])
            .collect()
    }

    pub fn forward<F: Scalar>(
        &self,
        tape: &mut Tape<F>,
        vars: &BTreeMap<String, Var>,
        x: Var,
    ) -> Var {
        assert_eq!(
            tape.value(x).ncols(),
            self.sizes[0],
            "{}: input dim {} expected {}",
            self.prefix,
            tape.value(x).ncols(),
            self.sizes[0]
        );
        let mut h = x;
        for l in 0..self.sizes.len() - 1 {
            let w = vars[&format!("{}.w{l}", self.prefix)];
            let b = vars[&format!("{}.b{l}", self.prefix)];
            let z = tape.matmul(h, w);
            let z = tape.add_bias(z, b);
            h = if l == self.sizes.len() - 2 { z } else { tape.silu(z) };
        }
        h
    }

    /// Forward pass plus the symbolic gradient of the scalar output w.r.t.
    /// the input, expressed as ordinary tape ops so the result can itself be
    /// differentiated w.r.t. the parameters (the gradient-penalty path).
    /// Requires a scalar output head.
    pub fn forward_with_input_grad<F: Scalar>(
        &self,
        tape: &mut Tape<F>,
        vars: &BTreeMap<String, Var>,
        x: Var,
    ) -> (Var, Var) {
        assert_eq!(self.out_dim(), 1, "input gradient needs a scalar head");
        let mut h = x;
        let mut pre: Vec<Var> = Vec::new();
        for l in 0..self.sizes.len() - 1 {
            let w = vars[&format!("{}.w{l}", self.prefix)];
            let b = vars[&format!("{}.b{l}", self.prefix)];
            let z = tape.matmul(h, w);
            let z = tape.add_bias(z, b);
            if l == self.sizes.len() - 2 {
                h = z;
            } else {
                pre.push(z);
                h = tape.silu(z);
            }
        }
        let out = h;

        let batch = tape.value(x).nrows();
        let ones = tape.constant(Mat::from_elem((batch, 1), F::one()));
        let w_last = vars[&format!("{}.w{}", self.prefix, self.sizes.len() - 2)];
        let mut g = tape.matmul_t(ones, w_last);
        for l in (0..self.sizes.len() - 2).rev() {
            let d = tape.silu_prime(pre[l]);
            let gd = tape.mul(g, d);
            let w = vars[&format!("{}.w{l}", self.prefix)];
            g = tape.matmul_t(gd, w);
        }
        (out, g)
    }
}

/// GRU cell with update convention h' = (1-z)·h + z·n, so a zero update gate
/// keeps the previous hidden state. Gate order in the fused matrices: r, z, n.
#[derive(Clone, Debug)]
pub struct GruCell {
    pub prefix: String,
    pub in_dim: usize,
    pub h_dim: usize,
}

impl GruCell {
    pub fn new(prefix: &str, in_dim: usize, h_dim: usize) -> Self {
        GruCell { prefix: prefix.to_string(), in_dim, h_dim }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        let bound_x = (1.0 / self.in_dim as f64).sqrt();
        let bound_h = (1.0 / self.h_dim as f64).sqrt();
        let mut wx = Mat32::zeros((self.in_dim, 3 * self.h_dim));
        for v in wx.iter_mut() {
            *v = rng.random_range(-bound_x..bound_x) as f32;
        }
        let mut wh = Mat32::zeros((self.h_dim, 3 * self.h_dim));
        for v in wh.iter_mut() {
            *v = rng.random_range(-bound_h..bound_h) as f32;
        }
        store.insert(&format!("{}.wx", self.prefix), wx);
        store.insert(&format!("{}.wh", self.prefix), wh);
        store.insert(&format!("{}.b", self.prefix), Mat32::zeros((1, 3 * self.h_dim)));
    }

    pub fn param_names(&self) -> Vec<String> {
        ["wx", "wh", "b"].iter().map(|s| format!("{}.{s}", self.prefix)).collect()
    }

    pub fn forward<F: Scalar>(
        &self,
        tape: &mut Tape<F>,
        vars: &BTreeMap<String, Var>,
        h: Var,
        x: Var,
    ) -> Var {
        let d = self.h_dim;
        assert_eq!(tape.value(x).ncols(), self.in_dim, "{}: gru input dim", self.prefix);
        assert_eq!(tape.value(h).ncols(), d, "{}: gru hidden dim", self.prefix);
        let wx = vars[&format!("{}.wx", self.prefix)];
        let wh = vars[&format!("{}.wh", self.prefix)];
        let b = vars[&format!("{}.b", self.prefix)];
        let gx = tape.matmul(x, wx);
        let gx = tape.add_bias(gx, b);
        let gh = tape.matmul(h, wh);

        let gx_r = tape.slice_cols(gx, 0, d);
        let gh_r = tape.slice_cols(gh, 0, d);
        let r_in = tape.add(gx_r, gh_r);
        let r = tape.sigmoid(r_in);

        let gx_z = tape.slice_cols(gx, d, d);
        let gh_z = tape.slice_cols(gh, d, d);
        let z_in = tape.add(gx_z, gh_z);
        let z = tape.sigmoid(z_in);

        let gx_n = tape.slice_cols(gx, 2 * d, d);
        let gh_n = tape.slice_cols(gh, 2 * d, d);
        let gated = tape.mul(r, gh_n);
        let n_in = tape.add(gx_n, gated);
        let n = tape.tanh(n_in);

        // h' = h + z·(n - h)
        let diff = tape.sub(n, h);
        let upd = tape.mul(z, diff);
        tape.add(h, upd)
    }
}

/// Sinusoidal position/timestep embedding of the given even dimension.
pub fn sinusoidal_embedding(t: f32, dim: usize) -> Vec<f32> {
    assert!(dim % 2 == 0, "embedding dim must be even");
    let half = dim / 2;
    let mut out = Vec::with_capacity(dim);
    for i in 0..half {
        let freq = (10_000.0f64).powf(-(i as f64) / half as f64);
        let arg = t as f64 * freq;
        out.push(arg.sin() as f32);
        out.push(arg.cos() as f32);
    }
    out
}

/// Sample a one-hot per group from grouped per-class probabilities.
pub fn sample_group_one_hot<F: Scalar, R: Rng>(
    probs: &Mat<F>,
    classes: usize,
    rng: &mut R,
) -> Mat<F> {
    assert_eq!(probs.ncols() % classes, 0);
    let mut out = Mat::zeros(probs.raw_dim());
    for i in 0..probs.nrows() {
        for g in 0..probs.ncols() / classes {
            let base = g * classes;
            let u: f64 = rng.random();
            let mut acc = 0.0f64;
            let mut pick = classes - 1;
            for c in 0..classes {
                acc += probs[[i, base + c]].as_f64();
                if u < acc {
                    pick = c;
                    break;
                }
            }
            out[[i, base + pick]] = F::one();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_mlp_maps_to_zero() {
        let mlp = Mlp::new("f", &[3, 4, 2]);
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        mlp.init(&mut store, &mut rng);
        for name in mlp.param_names() {
            let shape = store.value(&name).raw_dim();
            store.set_value(&name, Mat32::zeros(shape));
        }
        let mut tape = Tape::<f32>::no_grad();
        let vars = crate::store::bind_store(&mut tape, &store);
        let x = tape.constant(ndarray::arr2(&[[1.0f32, -2.0, 0.5]]));
        let y = mlp.forward(&mut tape, &vars, x);
        assert!(tape.value(y).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_affine_layer_passes_input_through() {
        let mlp = Mlp::new("f", &[2, 2]);
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        mlp.init(&mut store, &mut rng);
        store.set_value("f.w0", ndarray::arr2(&[[1.0f32, 0.0], [0.0, 1.0]]));
        let mut tape = Tape::<f32>::no_grad();
        let vars = crate::store::bind_store(&mut tape, &store);
        let x = tape.constant(ndarray::arr2(&[[0.7f32, -0.3]]));
        let y = mlp.forward(&mut tape, &vars, x);
        assert_eq!(tape.value(y), &ndarray::arr2(&[[0.7f32, -0.3]]));
    }

    #[test]
    fn two_layer_mlp_matches_hand_computation() {
        // sizes [2,2,1]; W0 = [[1, -1], [2, 0]], b0 = [0.5, -0.5],
        // W1 = [[1], [2]], b1 = [0.25]; x = [1, 2].
        // z0 = [1+4+0.5, -1-0.5] = [5.5, -1.5]; a = silu(z0);
        // y = a0 + 2·a1 + 0.25.
        let mlp = Mlp::new("f", &[2, 2, 1]);
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        mlp.init(&mut store, &mut rng);
        store.set_value("f.w0", ndarray::arr2(&[[1.0f32, -1.0], [2.0, 0.0]]));
        store.set_value("f.b0", ndarray::arr2(&[[0.5f32, -0.5]]));
        store.set_value("f.w1", ndarray::arr2(&[[1.0f32], [2.0]]));
        store.set_value("f.b1", ndarray::arr2(&[[0.25f32]]));
        let mut tape = Tape::<f32>::no_grad();
        let vars = crate::store::bind_store(&mut tape, &store);
        let x = tape.constant(ndarray::arr2(&[[1.0f32, 2.0]]));
        let y = mlp.forward(&mut tape, &vars, x);
        let silu = |v: f64| v / (1.0 + (-v).exp());
        let want = (silu(5.5) + 2.0 * silu(-1.5) + 0.25) as f32;
        assert!((tape.value(y)[[0, 0]] - want).abs() < 1e-6);
    }

    #[test]
    fn gru_zero_weights_halve_hidden_state() {
        let cell = GruCell::new("g", 3, 2);
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        cell.init(&mut store, &mut rng);
        for name in cell.param_names() {
            let shape = store.value(&name).raw_dim();
            store.set_value(&name, Mat32::zeros(shape));
        }
        let mut tape = Tape::<f32>::no_grad();
        let vars = crate::store::bind_store(&mut tape, &store);
        let h = tape.constant(ndarray::arr2(&[[0.8f32, -0.4]]));
        let x = tape.constant(ndarray::arr2(&[[1.0f32, 1.0, 1.0]]));
        let h2 = cell.forward(&mut tape, &vars, h, x);
        assert_eq!(tape.value(h2), &ndarray::arr2(&[[0.4f32, -0.2]]));
    }

    #[test]
    fn gru_saturated_update_gate_keeps_state() {
        let cell = GruCell::new("g", 1, 2);
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        cell.init(&mut store, &mut rng);
        // Saturate the update gate to 0 via a large negative bias.
        let mut b = Mat32::zeros((1, 6));
        b[[0, 2]] = -1e6;
        b[[0, 3]] = -1e6;
        store.set_value("g.b", b);
        let mut tape = Tape::<f32>::no_grad();
        let vars = crate::store::bind_store(&mut tape, &store);
        let h = tape.constant(ndarray::arr2(&[[0.3f32, -0.9]]));
        let x = tape.constant(ndarray::arr2(&[[0.5f32]]));
        let h2 = cell.forward(&mut tape, &vars, h, x);
        assert_eq!(tape.value(h2), &ndarray::arr2(&[[0.3f32, -0.9]]));
    }

    #[test]
    fn saturated_logit_dominates_sampling() {
        let mut tape = Tape::<f32>::no_grad();
        let logits = tape.constant(ndarray::arr2(&[[0.0f32, 1e6, 0.0, 0.0, 0.0, 0.0]]));
        let probs = tape.softmax_groups(logits, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let s = sample_group_one_hot(tape.value(probs), 3, &mut rng);
            assert_eq!(s[[0, 1]], 1.0);
            let g2: f32 = (3..6).map(|c| s[[0, c]]).sum();
            assert_eq!(g2, 1.0);
        }
    }

    #[test]
    fn uniform_logits_sample_near_uniformly() {
        let mut tape = Tape::<f32>::no_grad();
        let logits = tape.constant(Mat32::zeros((1, 10)));
        let probs = tape.softmax_groups(logits, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..n {
            let s = sample_group_one_hot(tape.value(probs), 10, &mut rng);
            for c in 0..10 {
                if s[[0, c] ] == 1.0 {
                    counts[c] += 1;
                }
            }
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((f - 0.1).abs() < 0.01, "frequency {f}");
        }
    }
}
