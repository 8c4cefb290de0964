use rand::Rng;

use super::{dot, ModelParams, TrainConfig};

/// What a single WARP step did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WarpOutcome {
    /// A margin violation was found after `trials` sampled negatives and the
    /// triple was updated with nominal step `step`.
    Updated { negative: usize, trials: usize, step: f64 },
    /// `max_warp_trials` negatives were sampled without a violation.
    NoViolation,
    /// The customer's positives cover the whole catalog.
    NoNegative,
}

/// Rank-estimate weight `ln(floor((n_items - 1) / trials) + 1)`.
pub fn warp_weight(n_items: usize, trials: usize) -> f64 {
    debug_assert!(trials > 0);
    let rank = (n_items.saturating_sub(1)) / trials;
    (rank as f64 + 1.0).ln()
}

/// Per-parameter sums of squared gradients for the AdaGrad schedule.
///
/// Accumulators start at 1, so the first update of every parameter is a
/// plain SGD step of size `learning_rate * weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdagradState {
    customer_factors: Vec<f64>,
    item_factors: Vec<f64>,
    item_bias: Vec<f64>,
}

impl AdagradState {
    pub fn new(m: &ModelParams) -> Self {
        AdagradState {
            customer_factors: vec![1.0; m.customer_factors.len()],
            item_factors: vec![1.0; m.item_factors.len()],
            item_bias: vec![1.0; m.item_bias.len()],
        }
    }
}

/// Two distinct elements of one slice, mutably.
fn pair_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    debug_assert_ne!(a, b);
    if a < b {
        let (left, right) = v.split_at_mut(b);
        (&mut left[a], &mut right[0])
    } else {
        let (left, right) = v.split_at_mut(a);
        (&mut right[0], &mut left[b])
    }
}

/// Applies one descent step `x -= rate * (g + reg * x)` where `rate` is
/// `learning_rate`, or `learning_rate / sqrt(G)` under AdaGrad.
#[inline]
fn descend(x: &mut f64, g: f64, accum: Option<&mut f64>, lr: f64, reg: f64) {
    let rate = match accum {
        Some(acc) => {
            let rate = lr / acc.sqrt();
            *acc += g * g;
            rate
        }
        None => lr,
    };
    *x -= rate * (g + reg * *x);
}

/// One WARP step for `(u, pos)`.
///
/// `positives` are u's positive item indices, sorted. Negatives are drawn
/// uniformly from the remaining items until `raw(u, neg) > raw(u, pos) - 1`
/// or the trial cap is reached. On a violation after `t` trials the hinge
/// `1 - raw(u, pos) + raw(u, neg)` is descended with gradient weight
/// `warp_weight(n_items, t)`; the reported `step` is that weight times the
/// learning rate, which is the exact step size for plain SGD and for the
/// first AdaGrad update of each parameter.
///
/// The customer bias cancels out of `raw(u, pos) - raw(u, neg)` and therefore
/// never moves.
pub fn warp_update<R: Rng + ?Sized>(
    m: &mut ModelParams,
    mut adagrad: Option<&mut AdagradState>,
    u: usize,
    pos: usize,
    positives: &[usize],
    cfg: &TrainConfig,
    rng: &mut R,
) -> WarpOutcome {
    let n_items = m.n_items();
    if positives.len() >= n_items {
        return WarpOutcome::NoNegative;
    }

    let pos_raw = dot(m.customer_row(u), m.item_row(pos)) + m.item_bias[pos];
    let mut found = None;
    for trial in 1..=cfg.max_warp_trials {
        let neg = loop {
            let candidate = rng.random_range(0..n_items);
            if positives.binary_search(&candidate).is_err() {
                break candidate;
            }
        };
        let neg_raw = dot(m.customer_row(u), m.item_row(neg)) + m.item_bias[neg];
        if neg_raw > pos_raw - 1.0 {
            found = Some((neg, trial));
            break;
        }
    }
    let Some((neg, trials)) = found else {
        return WarpOutcome::NoViolation;
    };

    let weight = warp_weight(n_items, trials);
    let step = weight * cfg.learning_rate;
    if step == 0.0 {
        return WarpOutcome::Updated {
            negative: neg,
            trials,
            step,
        };
    }
    let (lr, reg) = (cfg.learning_rate, cfg.regularization);

    let d = m.dim;
    let (cu, cp, cn) = (u * d, pos * d, neg * d);
    for k in 0..d {
        let q = m.customer_factors[cu + k];
        let p_pos = m.item_factors[cp + k];
        let p_neg = m.item_factors[cn + k];
        let (acc_q, acc_pos, acc_neg) = match adagrad.as_deref_mut() {
            Some(a) => {
                let (acc_pos, acc_neg) = pair_mut(&mut a.item_factors, cp + k, cn + k);
                (Some(&mut a.customer_factors[cu + k]), Some(acc_pos), Some(acc_neg))
            }
            None => (None, None, None),
        };
        descend(
            &mut m.customer_factors[cu + k],
            -weight * (p_pos - p_neg),
            acc_q,
            lr,
            reg,
        );
        descend(&mut m.item_factors[cp + k], -weight * q, acc_pos, lr, reg);
        descend(&mut m.item_factors[cn + k], weight * q, acc_neg, lr, reg);
    }
    let (acc_pos, acc_neg) = match adagrad {
        Some(a) => {
            let (p, n) = pair_mut(&mut a.item_bias, pos, neg);
            (Some(p), Some(n))
        }
        None => (None, None),
    };
    descend(&mut m.item_bias[pos], -weight, acc_pos, lr, reg);
    descend(&mut m.item_bias[neg], weight, acc_neg, lr, reg);

    WarpOutcome::Updated {
        negative: neg,
        trials,
        step,
    }
}
