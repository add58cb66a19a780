use std::collections::BTreeMap;

use thiserror::Error;

use crate::store::{Mat32, ParamStore};

#[derive(Clone, Copy, Debug)]
pub struct AdamCfg {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    /// Decoupled weight decay; 0 makes this plain Adam.
    pub weight_decay: f32,
    /// Global gradient-norm clip threshold; <= 0 disables clipping.
    pub clip_norm: f32,
}

impl AdamCfg {
    pub fn with_lr(lr: f32) -> Self {
        AdamCfg { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0, clip_norm: 100.0 }
    }
}

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("non-finite gradient for parameter {0}")]
    BadGradient(String),
    #[error("non-finite value in parameter {0} after update")]
    BadUpdate(String),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GradNorms {
    pub pre_clip: f32,
    pub clip_scale: f32,
}

/// One Adam step with bias correction. Gradient-norm clipping (global norm
/// over all supplied gradients) is applied before the update. A NaN/Inf
/// gradient aborts with the offending parameter named.
pub fn adam_step(
    store: &mut ParamStore,
    grads: &BTreeMap<String, Mat32>,
    cfg: &AdamCfg,
) -> Result<GradNorms, OptimError> {
    let mut sq_sum = 0.0f64;
    for (name, g) in grads {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(OptimError::BadGradient(name.clone()));
        }
        sq_sum += g.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>();
    }
    let norm = sq_sum.sqrt() as f32;
    let scale = if cfg.clip_norm > 0.0 && norm > cfg.clip_norm { cfg.clip_norm / norm } else { 1.0 };

    store.step += 1;
    let t = store.step as f64;
    let bc1 = 1.0 - (cfg.beta1 as f64).powf(t);
    let bc2 = 1.0 - (cfg.beta2 as f64).powf(t);

    for (name, g) in grads {
        let p = store.get_mut(name);
        assert_eq!(p.value.dim(), g.dim(), "gradient shape for {name}");
        ndarray::Zip::from(&mut p.m)
            .and(&mut p.v)
            .and(&mut p.value)
            .and(g)
            .for_each(|m, v, w, &gi| {
                let gc = gi * scale;
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * gc;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * gc * gc;
                let mh = (*m as f64 / bc1) as f32;
                let vh = (*v as f64 / bc2) as f32;
                *w -= cfg.lr * (mh / (vh.sqrt() + cfg.eps) + cfg.weight_decay * *w);
            });
        if p.value.iter().any(|v| !v.is_finite()) {
            return Err(OptimError::BadUpdate(name.clone()));
        }
    }
    Ok(GradNorms { pre_clip: norm, clip_scale: scale })
}

/// shadow <- decay·shadow + (1-decay)·primary for every EMA-enabled parameter.
pub fn ema_update(store: &mut ParamStore, decay: f32) {
    assert!((0.0..=1.0).contains(&decay), "EMA decay must be in [0,1]");
    for (_, p) in store.iter_mut() {
        if let Some(ema) = &mut p.ema {
            ndarray::Zip::from(ema).and(&p.value).for_each(|e, &v| {
                *e = decay * *e + (1.0 - decay) * v;
            });
        }
    }
}
