use ndarray::{Array2, Axis};
use thiserror::Error;

/// Element type of a tape: `f32` for training, `f64` for gradient checks.
pub trait Scalar:
    num_traits::Float + ndarray::LinalgScalar + std::fmt::Debug + std::fmt::Display + 'static
{
    fn from_f32(x: f32) -> Self;
    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f32(x: f32) -> Self {
        x
    }
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f32(x: f32) -> Self {
        x as f64
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
}

pub type Mat<F> = Array2<F>;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

#[derive(Debug, Error)]
pub enum TapeError {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

enum Node<F: Scalar> {
    Leaf,
    Matmul { x: Var, w: Var },
    MatmulT { x: Var, w: Var },
    AddBias { x: Var, b: Var },
    Add { a: Var, b: Var },
    Sub { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Scale { x: Var, c: F },
    AddScalar { x: Var },
    Silu { x: Var },
    SiluPrime { x: Var },
    Sigmoid { x: Var },
    Tanh { x: Var },
    Square { x: Var },
    Sqrt { x: Var },
    MaxScalar { x: Var, c: F },
    SumCols { x: Var },
    WeightedSumRows { x: Var, w: Vec<F> },
    ConcatCols { parts: Vec<Var> },
    ConcatRows { parts: Vec<Var> },
    SliceCols { x: Var, start: usize, len: usize },
    SoftmaxGroups { x: Var, classes: usize },
    StraightThrough { probs: Var },
    KlGroups { p: Var, q: Var, classes: usize, grad_p: bool, grad_q: bool, pp: Mat<F>, qp: Mat<F> },
    BceLogits { x: Var, y: Mat<F> },
}

/// Gradients produced by a reverse sweep, indexed by [`Var`].
pub struct Grads<F: Scalar> {
    slots: Vec<Option<Mat<F>>>,
}

impl<F: Scalar> Grads<F> {
    /// Gradient of the swept loss w.r.t. `v`; zero matrix if the var did not
    /// participate.
    pub fn get(&self, v: Var, like: &Mat<F>) -> Mat<F> {
        match &self.slots[v.0] {
            Some(g) => g.clone(),
            None => Mat::zeros(like.raw_dim()),
        }
    }

    pub fn get_opt(&self, v: Var) -> Option<&Mat<F>> {
        self.slots[v.0].as_ref()
    }
}

/// Records a computation as it runs so a reverse sweep can accumulate
/// gradients. Each node is visited exactly once in the sweep; fan-out
/// gradients accumulate additively.
pub struct Tape<F: Scalar> {
    vals: Vec<Mat<F>>,
    nodes: Vec<Node<F>>,
    recording: bool,
}

fn silu<F: Scalar>(x: F) -> F {
    x / (F::one() + (-x).exp())
}

fn silu_prime<F: Scalar>(x: F) -> F {
    let s = F::one() / (F::one() + (-x).exp());
    s * (F::one() + x * (F::one() - s))
}

fn silu_second<F: Scalar>(x: F) -> F {
    let s = F::one() / (F::one() + (-x).exp());
    let sp = s * (F::one() - s);
    let two = F::from_f32(2.0);
    two * sp + x * sp * (F::one() - two * s)
}

fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// Numerically stable softplus: ln(1 + e^x).
fn softplus<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn softmax_rows_grouped<F: Scalar>(x: &Mat<F>, classes: usize) -> Mat<F> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let d = row.len();
        for g in 0..d / classes {
            let sl = &mut row.as_slice_mut().unwrap()[g * classes..(g + 1) * classes];
            let mx = sl.iter().cloned().fold(F::neg_infinity(), F::max);
            let mut sum = F::zero();
            for v in sl.iter_mut() {
                *v = (*v - mx).exp();
                sum = sum + *v;
            }
            for v in sl.iter_mut() {
                *v = *v / sum;
            }
        }
    }
    out
}

impl<F: Scalar> Tape<F> {
    pub fn new() -> Self {
        Tape { vals: Vec::new(), nodes: Vec::new(), recording: true }
    }

    /// A tape that computes values but records no backward information.
    pub fn no_grad() -> Self {
        Tape { vals: Vec::new(), nodes: Vec::new(), recording: false }
    }

    pub fn is_recording(&self) -> bool {
        self.recording
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn value(&self, v: Var) -> &Mat<F> {
        &self.vals[v.0]
    }

    /// Drop every var recorded after `mark` (as returned by [`Tape::len`]).
    /// Handles issued after the mark become invalid; callers own that.
    pub fn truncate(&mut self, mark: usize) {
        self.vals.truncate(mark);
        self.nodes.truncate(mark);
    }

    /// Scalar value of a (1,1) var.
    pub fn scalar(&self, v: Var) -> F {
        let m = self.value(v);
        assert_eq!(m.dim(), (1, 1), "scalar() on non-scalar var");
        m[[0, 0]]
    }

    fn push(&mut self, val: Mat<F>, node: Node<F>) -> Var {
        self.vals.push(val);
        self.nodes.push(if self.recording { node } else { Node::Leaf });
        Var(self.vals.len() - 1)
    }

    pub fn constant(&mut self, m: Mat<F>) -> Var {
        self.push(m, Node::Leaf)
    }

    pub fn scalar_const(&mut self, x: F) -> Var {
        self.constant(Mat::from_elem((1, 1), x))
    }

    /// y = x · w, with x (b,i) and w (i,o).
    pub fn matmul(&mut self, x: Var, w: Var) -> Var {
        let (xv, wv) = (&self.vals[x.0], &self.vals[w.0]);
        assert_eq!(xv.ncols(), wv.nrows(), "matmul inner dims {} vs {}", xv.ncols(), wv.nrows());
        let y = xv.dot(wv);
        self.push(y, Node::Matmul { x, w })
    }

    /// y = x · wᵀ, with x (b,o) and w (i,o).
    pub fn matmul_t(&mut self, x: Var, w: Var) -> Var {
        let (xv, wv) = (&self.vals[x.0], &self.vals[w.0]);
        assert_eq!(xv.ncols(), wv.ncols(), "matmul_t inner dims {} vs {}", xv.ncols(), wv.ncols());
        let y = xv.dot(&wv.t());
        self.push(y, Node::MatmulT { x, w })
    }

    /// Broadcast-add a (1,d) bias row to every row of x.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Var {
        let (xv, bv) = (&self.vals[x.0], &self.vals[b.0]);
        assert_eq!(bv.nrows(), 1, "bias must be a row vector");
        assert_eq!(xv.ncols(), bv.ncols(), "bias width {} vs {}", bv.ncols(), xv.ncols());
        let y = xv + &bv.row(0);
        self.push(y, Node::AddBias { x, b })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let y = &self.vals[a.0] + &self.vals[b.0];
        self.push(y, Node::Add { a, b })
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let y = &self.vals[a.0] - &self.vals[b.0];
        self.push(y, Node::Sub { a, b })
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let y = &self.vals[a.0] * &self.vals[b.0];
        self.push(y, Node::Mul { a, b })
    }

    pub fn scale(&mut self, x: Var, c: F) -> Var {
        let y = self.vals[x.0].mapv(|v| v * c);
        self.push(y, Node::Scale { x, c })
    }

    pub fn add_scalar(&mut self, x: Var, c: F) -> Var {
        let y = self.vals[x.0].mapv(|v| v + c);
        self.push(y, Node::AddScalar { x })
    }

    pub fn silu(&mut self, x: Var) -> Var {
        let y = self.vals[x.0].mapv(silu);
        self.push(y, Node::Silu { x })
    }

    /// Elementwise derivative of SiLU; differentiable (its backward uses the
    /// closed-form second derivative), which is what lets input-gradient
    /// subgraphs of pure-MLP networks be trained by ordinary reverse mode.
    pub fn silu_prime(&mut self, x: Var) -> Var {
        let y = self.vals[x.0].mapv(silu_prime);
        self.push(y, Node::SiluPrime { x })
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let y = self.vals[x.0].mapv(sigmoid);
        self.push(y, Node::Sigmoid { x })
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let y = self.vals[x.0].mapv(|v| v.tanh());
        self.push(y, Node::Tanh { x })
    }

    pub fn square(&mut self, x: Var) -> Var {
        let y = self.vals[x.0].mapv(|v| v * v);
        self.push(y, Node::Square { x })
    }

    pub fn sqrt(&mut self, x: Var) -> Var {
        let y = self.vals[x.0].mapv(|v| v.sqrt());
        self.push(y, Node::Sqrt { x })
    }

    /// Elementwise max(c, x); used for the free-bits clamp.
    pub fn max_scalar(&mut self, x: Var, c: F) -> Var {
        let y = self.vals[x.0].mapv(|v| v.max(c));
        self.push(y, Node::MaxScalar { x, c })
    }

    /// (b,d) -> (b,1) row sums.
    pub fn sum_cols(&mut self, x: Var) -> Var {
        let xv = &self.vals[x.0];
        let mut y = Mat::zeros((xv.nrows(), 1));
        for (i, row) in xv.rows().into_iter().enumerate() {
            // accumulate in f64 per the numerics policy
            let s: f64 = row.iter().map(|v| v.as_f64()).sum();
            y[[i, 0]] = F::from_f64(s);
        }
        self.push(y, Node::SumCols { x })
    }

    /// Σ_i w_i · x_i over a (b,1) column -> (1,1) scalar.
    pub fn weighted_sum_rows(&mut self, x: Var, w: Vec<F>) -> Var {
        let xv = &self.vals[x.0];
        assert_eq!(xv.ncols(), 1, "weighted_sum_rows expects a column");
        assert_eq!(xv.nrows(), w.len(), "weight count");
        let s: f64 = xv.column(0).iter().zip(&w).map(|(v, wi)| v.as_f64() * wi.as_f64()).sum();
        let y = Mat::from_elem((1, 1), F::from_f64(s));
        self.push(y, Node::WeightedSumRows { x, w })
    }

    /// Mean over all rows of a (b,1) column -> scalar.
    pub fn mean_rows(&mut self, x: Var) -> Var {
        let n = self.vals[x.0].nrows();
        let w = vec![F::from_f64(1.0 / n as f64); n];
        self.weighted_sum_rows(x, w)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let rows = self.vals[parts[0].0].nrows();
        let total: usize = parts.iter().map(|p| self.vals[p.0].ncols()).sum();
        let mut y = Mat::zeros((rows, total));
        let mut at = 0;
        for p in parts {
            let pv = &self.vals[p.0];
            assert_eq!(pv.nrows(), rows, "concat_cols row mismatch");
            y.slice_mut(ndarray::s![.., at..at + pv.ncols()]).assign(pv);
            at += pv.ncols();
        }
        self.push(y, Node::ConcatCols { parts: parts.to_vec() })
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let cols = self.vals[parts[0].0].ncols();
        let total: usize = parts.iter().map(|p| self.vals[p.0].nrows()).sum();
        let mut y = Mat::zeros((total, cols));
        let mut at = 0;
        for p in parts {
            let pv = &self.vals[p.0];
            assert_eq!(pv.ncols(), cols, "concat_rows col mismatch");
            y.slice_mut(ndarray::s![at..at + pv.nrows(), ..]).assign(pv);
            at += pv.nrows();
        }
        self.push(y, Node::ConcatRows { parts: parts.to_vec() })
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let xv = &self.vals[x.0];
        assert!(start + len <= xv.ncols(), "slice_cols out of range");
        let y = xv.slice(ndarray::s![.., start..start + len]).to_owned();
        self.push(y, Node::SliceCols { x, start, len })
    }

    /// Per-group softmax over row chunks of `classes` entries.
    pub fn softmax_groups(&mut self, x: Var, classes: usize) -> Var {
        let xv = &self.vals[x.0];
        assert_eq!(xv.ncols() % classes, 0, "logit width not a multiple of classes");
        let y = softmax_rows_grouped(xv, classes);
        self.push(y, Node::SoftmaxGroups { x, classes })
    }

    /// Forward value is the one-hot `sample`; the backward pass routes
    /// gradients to `probs` unchanged (sample + probs - sg(probs)).
    pub fn straight_through(&mut self, probs: Var, sample: Mat<F>) -> Var {
        assert_eq!(self.vals[probs.0].dim(), sample.dim(), "straight_through shape");
        self.push(sample, Node::StraightThrough { probs })
    }

    /// Σ over groups of KL(softmax(p) ‖ softmax(q)) per row -> (b,1).
    /// `grad_p` / `grad_q` select which side the stop-gradient is on.
    pub fn kl_groups(&mut self, p: Var, q: Var, classes: usize, grad_p: bool, grad_q: bool) -> Var {
        let (pv, qv) = (&self.vals[p.0], &self.vals[q.0]);
        assert_eq!(pv.dim(), qv.dim(), "kl_groups shape");
        assert_eq!(pv.ncols() % classes, 0, "kl_groups width");
        let pp = softmax_rows_grouped(pv, classes);
        let qp = softmax_rows_grouped(qv, classes);
        let eps = F::from_f64(1e-30);
        let mut y = Mat::zeros((pv.nrows(), 1));
        for i in 0..pv.nrows() {
            let mut acc = 0.0f64;
            for c in 0..pv.ncols() {
                let pc = pp[[i, c]].max(eps);
                let qc = qp[[i, c]].max(eps);
                acc += pc.as_f64() * (pc.as_f64().ln() - qc.as_f64().ln());
            }
            y[[i, 0]] = F::from_f64(acc);
        }
        self.push(y, Node::KlGroups { p, q, classes, grad_p, grad_q, pp, qp })
    }

    /// Elementwise binary cross-entropy with logits: softplus(x) - y·x.
    pub fn bce_logits(&mut self, x: Var, y: Mat<F>) -> Var {
        let xv = &self.vals[x.0];
        assert_eq!(xv.dim(), y.dim(), "bce_logits shape");
        let mut out = Mat::zeros(xv.raw_dim());
        ndarray::Zip::from(&mut out).and(xv).and(&y).for_each(|o, &x, &t| {
            *o = softplus(x) - t * x;
        });
        self.push(out, Node::BceLogits { x, y })
    }

    /// Reverse sweep from a (1,1) loss. Visits each node exactly once.
    pub fn backward(&self, loss: Var) -> Grads<F> {
        assert!(self.recording, "backward on a no-grad tape");
        assert_eq!(self.vals[loss.0].dim(), (1, 1), "loss must be scalar");
        let mut slots: Vec<Option<Mat<F>>> = vec![None; self.vals.len()];
        slots[loss.0] = Some(Mat::from_elem((1, 1), F::one()));

        for id in (0..=loss.0).rev() {
            let g = match slots[id].take() {
                Some(g) => g,
                None => continue,
            };
            self.accumulate(id, &g, &mut slots);
            slots[id] = Some(g);
        }
        Grads { slots }
    }

    fn accumulate(&self, id: usize, g: &Mat<F>, slots: &mut [Option<Mat<F>>]) {
        fn acc<F: Scalar>(slots: &mut [Option<Mat<F>>], v: Var, delta: Mat<F>) {
            match &mut slots[v.0] {
                Some(m) => *m = &*m + &delta,
                s @ None => *s = Some(delta),
            }
        }
        match &self.nodes[id] {
            Node::Leaf => {}
            Node::Matmul { x, w } => {
                let (xv, wv) = (&self.vals[x.0], &self.vals[w.0]);
                acc(slots, *x, g.dot(&wv.t()));
                acc(slots, *w, xv.t().dot(g));
            }
            Node::MatmulT { x, w } => {
                let (xv, wv) = (&self.vals[x.0], &self.vals[w.0]);
                acc(slots, *x, g.dot(wv));
                acc(slots, *w, g.t().dot(xv));
            }
            Node::AddBias { x, b } => {
                acc(slots, *x, g.clone());
                let gb = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                acc(slots, *b, gb);
            }
            Node::Add { a, b } => {
                acc(slots, *a, g.clone());
                acc(slots, *b, g.clone());
            }
            Node::Sub { a, b } => {
                acc(slots, *a, g.clone());
                acc(slots, *b, g.mapv(|v| -v));
            }
            Node::Mul { a, b } => {
                acc(slots, *a, g * &self.vals[b.0]);
                acc(slots, *b, g * &self.vals[a.0]);
            }
            Node::Scale { x, c } => acc(slots, *x, g.mapv(|v| v * *c)),
            Node::AddScalar { x } => acc(slots, *x, g.clone()),
            Node::Silu { x } => {
                let d = self.vals[x.0].mapv(silu_prime);
                acc(slots, *x, g * &d);
            }
            Node::SiluPrime { x } => {
                let d = self.vals[x.0].mapv(silu_second);
                acc(slots, *x, g * &d);
            }
            Node::Sigmoid { x } => {
                let y = &self.vals[id];
                let d = y.mapv(|v| v * (F::one() - v));
                acc(slots, *x, g * &d);
            }
            Node::Tanh { x } => {
                let y = &self.vals[id];
                let d = y.mapv(|v| F::one() - v * v);
                acc(slots, *x, g * &d);
            }
            Node::Square { x } => {
                let d = self.vals[x.0].mapv(|v| v + v);
                acc(slots, *x, g * &d);
            }
            Node::Sqrt { x } => {
                let y = &self.vals[id];
                let half = F::from_f32(0.5);
                let d = y.mapv(|v| half / v);
                acc(slots, *x, g * &d);
            }
            Node::MaxScalar { x, c } => {
                let xv = &self.vals[x.0];
                let mut gx = g.clone();
                ndarray::Zip::from(&mut gx).and(xv).for_each(|gi, &v| {
                    if v <= *c {
                        *gi = F::zero();
                    }
                });
                acc(slots, *x, gx);
            }
            Node::SumCols { x } => {
                let xv = &self.vals[x.0];
                let mut gx = Mat::zeros(xv.raw_dim());
                for (i, mut row) in gx.rows_mut().into_iter().enumerate() {
                    row.fill(g[[i, 0]]);
                }
                acc(slots, *x, gx);
            }
            Node::WeightedSumRows { x, w } => {
                let gs = g[[0, 0]];
                let mut gx = Mat::zeros((w.len(), 1));
                for (i, wi) in w.iter().enumerate() {
                    gx[[i, 0]] = gs * *wi;
                }
                acc(slots, *x, gx);
            }
            Node::ConcatCols { parts } => {
                let mut at = 0;
                for p in parts {
                    let d = self.vals[p.0].ncols();
                    let gp = g.slice(ndarray::s![.., at..at + d]).to_owned();
                    acc(slots, *p, gp);
                    at += d;
                }
            }
            Node::ConcatRows { parts } => {
                let mut at = 0;
                for p in parts {
                    let r = self.vals[p.0].nrows();
                    let gp = g.slice(ndarray::s![at..at + r, ..]).to_owned();
                    acc(slots, *p, gp);
                    at += r;
                }
            }
            Node::SliceCols { x, start, len } => {
                let xv = &self.vals[x.0];
                let mut gx = Mat::zeros(xv.raw_dim());
                gx.slice_mut(ndarray::s![.., *start..*start + *len]).assign(g);
                acc(slots, *x, gx);
            }
            Node::SoftmaxGroups { x, classes } => {
                let y = &self.vals[id];
                let mut gx = Mat::zeros(y.raw_dim());
                for i in 0..y.nrows() {
                    for gi in 0..y.ncols() / classes {
                        let base = gi * classes;
                        let mut dot = F::zero();
                        for c in 0..*classes {
                            dot = dot + g[[i, base + c]] * y[[i, base + c]];
                        }
                        for c in 0..*classes {
                            gx[[i, base + c]] = y[[i, base + c]] * (g[[i, base + c]] - dot);
                        }
                    }
                }
                acc(slots, *x, gx);
            }
            Node::StraightThrough { probs } => acc(slots, *probs, g.clone()),
            Node::KlGroups { p, q, classes, grad_p, grad_q, pp, qp } => {
                let eps = F::from_f64(1e-30);
                if *grad_p {
                    // dKL/dlogit_p = p ⊙ (ln p - ln q - KL_group)
                    let mut gp = Mat::zeros(pp.raw_dim());
                    for i in 0..pp.nrows() {
                        for gi in 0..pp.ncols() / classes {
                            let base = gi * classes;
                            let mut klg = F::zero();
                            for c in 0..*classes {
                                let pc = pp[[i, base + c]].max(eps);
                                let qc = qp[[i, base + c]].max(eps);
                                klg = klg + pc * (pc.ln() - qc.ln());
                            }
                            for c in 0..*classes {
                                let pc = pp[[i, base + c]].max(eps);
                                let qc = qp[[i, base + c]].max(eps);
                                gp[[i, base + c]] =
                                    g[[i, 0]] * pc * (pc.ln() - qc.ln() - klg);
                            }
                        }
                    }
                    acc(slots, *p, gp);
                }
                if *grad_q {
                    // dKL/dlogit_q = q - p
                    let mut gq = Mat::zeros(qp.raw_dim());
                    for i in 0..qp.nrows() {
                        for c in 0..qp.ncols() {
                            gq[[i, c]] = g[[i, 0]] * (qp[[i, c]] - pp[[i, c]]);
                        }
                    }
                    acc(slots, *q, gq);
                }
            }
            Node::BceLogits { x, y } => {
                let xv = &self.vals[x.0];
                let mut gx = g.clone();
                ndarray::Zip::from(&mut gx).and(xv).and(y).for_each(|gi, &x, &t| {
                    *gi = *gi * (sigmoid(x) - t);
                });
                acc(slots, *x, gx);
            }
        }
    }
}

impl<F: Scalar> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, data: &[f64]) -> Mat<f64> {
        Mat::from_shape_vec((rows, cols), data.to_vec()).unwrap()
    }

    #[test]
    fn fanout_accumulates_additively() {
        // f(x) = x + x has gradient 2 exactly.
        let mut t = Tape::<f64>::new();
        let x = t.constant(m(1, 1, &[3.0]));
        let y = t.add(x, x);
        let g = t.backward(y);
        assert_eq!(g.get_opt(x).unwrap()[[0, 0]], 2.0);
    }

    #[test]
    fn matmul_grads() {
        let mut t = Tape::<f64>::new();
        let x = t.constant(m(1, 2, &[1.0, 2.0]));
        let w = t.constant(m(2, 1, &[3.0, 4.0]));
        let y = t.matmul(x, w);
        assert_eq!(t.scalar(y), 11.0);
        let g = t.backward(y);
        assert_eq!(g.get_opt(x).unwrap(), &m(1, 2, &[3.0, 4.0]));
        assert_eq!(g.get_opt(w).unwrap(), &m(2, 1, &[1.0, 2.0]));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut t = Tape::<f64>::new();
        let x = t.constant(m(2, 6, &[0.3, -1.0, 2.0, 0.0, 0.5, 1.5, 9.0, 9.0, 9.0, 0.0, 0.0, 0.0]));
        let p = t.softmax_groups(x, 3);
        for row in t.value(p).rows() {
            let s0: f64 = row.iter().take(3).sum();
            let s1: f64 = row.iter().skip(3).sum();
            assert!((s0 - 1.0).abs() < 1e-6 && (s1 - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn kl_of_identical_distributions_is_zero() {
        let mut t = Tape::<f64>::new();
        let x = t.constant(m(1, 4, &[0.2, -0.7, 1.1, 0.0]));
        let kl = t.kl_groups(x, x, 4, true, true);
        assert_eq!(t.value(kl)[[0, 0]], 0.0);
    }

    #[test]
    fn straight_through_passes_gradient_to_probs() {
        let mut t = Tape::<f64>::new();
        let logits = t.constant(m(1, 3, &[0.0, 0.0, 0.0]));
        let probs = t.softmax_groups(logits, 3);
        let sample = m(1, 3, &[0.0, 1.0, 0.0]);
        let st = t.straight_through(probs, sample);
        let s = t.sum_cols(st);
        let loss = t.mean_rows(s);
        let g = t.backward(loss);
        // gradient of mean(output) w.r.t. logits equals gradient of
        // mean(softmax) w.r.t. logits: sum of softmax is constant 1, so zero.
        for &v in g.get_opt(logits).unwrap() {
            assert!(v.abs() < 1e-12);
        }
    }
}
