use crate::expr::{Expression, Node, N_VARS};

/// Mean absolute error; infinite if any prediction is non-finite.
pub fn mae(e: &Expression, x: &[[f64; N_VARS]], y: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (row, &t) in x.iter().zip(y) {
        let p = e.eval_row(row);
        if !p.is_finite() {
            return f64::INFINITY;
        }
        sum += (p - t).abs();
    }
    if y.is_empty() {
        0.0
    } else {
        sum / y.len() as f64
    }
}

const INITIAL_STEP: f64 = 0.5;
const MAX_STEP: f64 = 1e6;
const MIN_STEP: f64 = 1e-10;

/// Refines every constant of `e` to lower the training MAE.
///
/// Coordinate-wise pattern search: each constant tries `c·(1+s)`, `c/(1+s)`
/// and `−c` (or `±s` when it is zero); a success doubles its step `s`, a
/// failure halves it. At most `max_evals` candidate evaluations are spent,
/// and a candidate is only kept if it strictly lowers the MAE, so the result
/// is never worse than the input.
pub fn fit_constants(e: &Expression, x: &[[f64; N_VARS]], y: &[f64], max_evals: usize) -> Expression {
    let slots: Vec<usize> = e
        .nodes()
        .iter()
        .enumerate()
        .filter_map(|(i, n)| matches!(n, Node::Const(_)).then_some(i))
        .collect();
    let mut best = e.clone();
    if slots.is_empty() || max_evals == 0 {
        return best;
    }
    let mut best_mae = mae(&best, x, y);
    let mut steps = vec![INITIAL_STEP; slots.len()];
    let mut evals = 0;
    let value = |e: &Expression, i: usize| match e.nodes()[i] {
        Node::Const(c) => c,
        _ => unreachable!("constant slot"),
    };
    while evals < max_evals {
        if steps.iter().all(|&s| s < MIN_STEP) {
            break;
        }
        for (k, &slot) in slots.iter().enumerate() {
            if steps[k] < MIN_STEP {
                continue;
            }
            let c = value(&best, slot);
            let s = steps[k];
            let candidates = if c == 0.0 {
                [s, -s, f64::NAN]
            } else {
                [c * (1.0 + s), c / (1.0 + s), -c]
            };
            let mut improved = false;
            for cand in candidates {
                if evals >= max_evals {
                    break;
                }
                if !cand.is_finite() {
                    continue;
                }
                evals += 1;
                let mut trial = best.clone();
                trial.nodes_mut()[slot] = Node::Const(cand);
                let m = mae(&trial, x, y);
                if m < best_mae {
                    best = trial;
                    best_mae = m;
                    improved = true;
                    break;
                }
            }
            steps[k] = if improved { (2.0 * s).min(MAX_STEP) } else { 0.5 * s };
            if evals >= max_evals {
                break;
            }
        }
    }
    best
}
