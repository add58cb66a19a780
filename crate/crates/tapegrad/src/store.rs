use std::collections::BTreeMap;

use crate::tape::{Grads, Mat, Scalar, Tape, TapeError, Var};

pub type Mat32 = Mat<f32>;

/// One named parameter: value, Adam moments, optional EMA shadow copy.
#[derive(Clone, Debug)]
pub struct Param {
    pub value: Mat32,
    pub m: Mat32,
    pub v: Mat32,
    pub ema: Option<Mat32>,
}

impl Param {
    fn new(value: Mat32) -> Self {
        let m = Mat32::zeros(value.raw_dim());
        let v = Mat32::zeros(value.raw_dim());
        Param { value, m, v, ema: None }
    }
}

/// Named parameter collection with per-parameter optimizer moments and an
/// optional EMA shadow. Shapes are fixed at insertion; every update checks
/// finiteness and fails hard on NaN/Inf.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    entries: BTreeMap<String, Param>,
    pub step: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Mat32) {
        let prev = self.entries.insert(name.to_string(), Param::new(value));
        assert!(prev.is_none(), "duplicate parameter {name}");
    }

    pub fn get(&self, name: &str) -> &Param {
        self.entries.get(name).unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Param {
        self.entries.get_mut(name).unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn value(&self, name: &str) -> &Mat32 {
        &self.get(name).value
    }

    pub fn set_value(&mut self, name: &str, value: Mat32) {
        let p = self.get_mut(name);
        assert_eq!(p.value.dim(), value.dim(), "shape change for {name}");
        p.value = value;
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Param)> {
        self.entries.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_scalars(&self) -> usize {
        self.entries.values().map(|p| p.value.len()).sum()
    }

    /// Initialize EMA shadows as copies of the current values.
    pub fn enable_ema(&mut self) {
        for p in self.entries.values_mut() {
            p.ema = Some(p.value.clone());
        }
    }

    pub fn assert_finite(&self) -> Result<(), TapeError> {
        for (name, p) in &self.entries {
            if p.value.iter().any(|v| !v.is_finite()) {
                return Err(TapeError::NonFinite(format!("parameter {name}")));
            }
        }
        Ok(())
    }
}

/// Bind every parameter of a store onto a tape as leaf vars, keyed by name.
pub fn bind_store<F: Scalar>(tape: &mut Tape<F>, store: &ParamStore) -> BTreeMap<String, Var> {
    let mut out = BTreeMap::new();
    for (name, p) in store.iter() {
        let m = p.value.mapv(F::from_f32);
        out.insert(name.to_string(), tape.constant(m));
    }
    out
}

/// Pull per-parameter gradients out of a reverse sweep, keyed by name.
/// Parameters the loss never touched get zero gradients.
pub fn collect_grads<F: Scalar>(
    grads: &Grads<F>,
    vars: &BTreeMap<String, Var>,
    store: &ParamStore,
) -> BTreeMap<String, Mat32> {
    let mut out = BTreeMap::new();
    for (name, var) in vars {
        let g = match grads.get_opt(*var) {
            Some(g) => g.mapv(|v| v.as_f64() as f32),
            None => Mat32::zeros(store.get(name).value.raw_dim()),
        };
        out.insert(name.clone(), g);
    }
    out
}
