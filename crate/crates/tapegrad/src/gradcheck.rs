use std::collections::BTreeMap;

use crate::store::ParamStore;
use crate::tape::{Mat, Tape, Var};

/// Central finite-difference check of tape gradients for a scalar-valued
/// function of a parameter store. The function is replayed in f64 so the
/// difference quotient is not dominated by single-precision rounding.
/// Returns the max relative error over all parameter entries.
///
/// `build` must construct the loss from the supplied tape and bound vars and
/// be deterministic across calls (pass any sampling in as constants).
pub fn grad_check<B>(store: &ParamStore, build: B) -> f64
where
    B: Fn(&mut Tape<f64>, &BTreeMap<String, Var>) -> Var,
{
    let step = 1e-4;

    // Reference f64 copies of the parameters.
    let mut params: BTreeMap<String, Mat<f64>> = BTreeMap::new();
    for (name, p) in store.iter() {
        params.insert(name.to_string(), p.value.mapv(|v| v as f64));
    }

    let eval = |params: &BTreeMap<String, Mat<f64>>| -> f64 {
        let mut tape = Tape::<f64>::no_grad();
        let vars: BTreeMap<String, Var> =
            params.iter().map(|(n, m)| (n.clone(), tape.constant(m.clone()))).collect();
        let loss = build(&mut tape, &vars);
        let v = tape.scalar(loss);
        assert!(v.is_finite(), "non-finite loss in grad_check");
        v
    };

    // Tape gradients.
    let mut tape = Tape::<f64>::new();
    let vars: BTreeMap<String, Var> =
        params.iter().map(|(n, m)| (n.clone(), tape.constant(m.clone()))).collect();
    let loss = build(&mut tape, &vars);
    assert!(tape.scalar(loss).is_finite(), "non-finite loss in grad_check");
    let grads = tape.backward(loss);

    let mut max_rel = 0.0f64;
    for (name, base) in &params {
        let tape_grad = grads.get(vars[name], base);
        let mut shape = base.clone();
        for idx in 0..base.len() {
            let (r, c) = (idx / base.ncols(), idx % base.ncols());
            let orig = shape[[r, c]];
            shape[[r, c]] = orig + step;
            let mut plus_params = params.clone();
            plus_params.insert(name.clone(), shape.clone());
            let f_plus = eval(&plus_params);
            shape[[r, c]] = orig - step;
            let mut minus_params = params.clone();
            minus_params.insert(name.clone(), shape.clone());
            let f_minus = eval(&minus_params);
            shape[[r, c]] = orig;

            let fd = (f_plus - f_minus) / (2.0 * step);
            let tg = tape_grad[[r, c]];
            let denom = fd.abs().max(tg.abs()).max(1e-8);
            let rel = (fd - tg).abs() / denom;
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    max_rel
}
