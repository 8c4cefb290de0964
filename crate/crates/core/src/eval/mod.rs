//! Offline evaluation: time split, P@k / R@k / MAP@k, profit at hit, and the
//! `(alpha, beta)` grid sweep.
//!
//! Evaluation runs over the customers who purchased something in the test
//! period. For each of them the baseline scores of every candidate are
//! computed once ([`EvalContext`]); each `(alpha, beta)` cell then only
//! rescales and re-selects, so a full 21 x 21 sweep costs little more than
//! one baseline pass.

mod metrics;
mod split;
mod sweep;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{CustomerId, Dataset, HyperParams};
use crate::error::{Error, Result};
use crate::rerank::{combine, select_top, Recommender};

pub use metrics::{average_precision_at_k, pah_at_k, precision_at_k, recall_at_k, relevant_items, PahMode, PahResult};
pub use split::{time_split, SplitMode, SplitSpec};
pub use sweep::{grid_sweep, GridAxis, SweepReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub k: usize,
    pub pah_mode: PahMode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            k: 10,
            pah_mode: PahMode::PerHitUser,
        }
    }
}

/// One row of results for a single `(alpha, beta)` setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "precision")]
    pub precision_at_k: f64,
    #[serde(rename = "recall")]
    pub recall_at_k: f64,
    #[serde(rename = "map")]
    pub map_at_k: f64,
    #[serde(rename = "pah")]
    pub pah_at_k: f64,
    pub k: usize,
    /// Users with at least one test purchase; the denominator of P, R and MAP.
    #[serde(rename = "n_users")]
    pub n_users_evaluated: usize,
    /// Users with at least one hit; the denominator of PAH.
    pub n_hit_users: usize,
}

#[derive(Debug, Clone)]
struct UserCase {
    customer: CustomerId,
    relevant: Vec<usize>,
    baseline: Vec<(usize, f64)>,
    preference: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct UserOutcome {
    precision: f64,
    recall: f64,
    ap: f64,
    margin_sum: f64,
    hits: usize,
}

/// Cached per-user inputs for evaluating many `(alpha, beta)` cells.
#[derive(Clone)]
pub struct EvalContext<'a> {
    recommender: &'a Recommender<'a>,
    users: Vec<UserCase>,
    margins: Vec<f64>,
    options: EvalOptions,
}

impl<'a> EvalContext<'a> {
    pub fn new(recommender: &'a Recommender<'a>, test: &Dataset, options: EvalOptions) -> Result<Self> {
        if options.k == 0 {
            return Err(Error::validation("k must be positive"));
        }
        let model = recommender.model();
        let mut relevant: BTreeMap<&CustomerId, BTreeSet<usize>> = BTreeMap::new();
        for e in test.purchases() {
            let i = model
                .item_index(&e.item_id)
                .ok_or_else(|| Error::Evaluation(format!("test item '{}' is not in the model catalog", e.item_id)))?;
            relevant.entry(&e.customer_id).or_default().insert(i);
        }
        if relevant.is_empty() {
            return Err(Error::Evaluation("no test customer has a purchase".into()));
        }

        let users = relevant
            .into_par_iter()
            .map(|(customer, items)| {
                let (_, baseline) = recommender.baseline_scores(customer)?;
                Ok(UserCase {
                    customer: customer.clone(),
                    relevant: items.into_iter().collect(),
                    baseline,
                    preference: recommender.preference_brackets(customer),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let margins = (0..recommender.n_items())
            .map(|i| recommender.record(i).margin())
            .collect();

        Ok(EvalContext {
            recommender,
            users,
            margins,
            options,
        })
    }

    pub fn options(&self) -> EvalOptions {
        self.options
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn customers(&self) -> impl Iterator<Item = &CustomerId> {
        self.users.iter().map(|u| &u.customer)
    }

    /// Replaces every baseline score with an independent uniform draw. The
    /// result is a random-ranking reference with the same candidates and
    /// relevant sets.
    pub fn with_random_scores(&self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for user in &mut out.users {
            for (_, score) in &mut user.baseline {
                *score = rng.random::<f64>();
            }
        }
        out
    }

    /// Profit term of every item; it depends on alpha alone, so one cell
    /// computes it once for all users.
    fn profit_terms(&self, alpha: f64) -> Vec<f64> {
        (0..self.margins.len())
            .map(|i| self.recommender.profit_bracket(i).powf(alpha))
            .collect()
    }

    fn ranked(&self, user: &UserCase, profit: &[f64], beta: f64) -> Vec<(usize, f64)> {
        let mut scored: Vec<(usize, f64)> = user
            .baseline
            .iter()
            .map(|&(i, r)| {
                let s = profit[i] + user.preference[i].powf(beta);
                (i, combine(s, r))
            })
            .collect();
        select_top(&mut scored, self.options.k);
        scored
    }

    /// Item indices of the top-k list for the `n`-th evaluated user.
    pub fn top_k(&self, n: usize, hyper: HyperParams) -> Vec<usize> {
        let profit = self.profit_terms(hyper.alpha);
        self.ranked(&self.users[n], &profit, hyper.beta)
            .into_iter()
            .map(|(i, _)| i)
            .collect()
    }

    fn outcome(&self, user: &UserCase, profit: &[f64], beta: f64) -> UserOutcome {
        let k = self.options.k;
        let mut out = UserOutcome::default();
        let mut ap_sum = 0.0;
        for (rank, (item, _)) in self.ranked(user, profit, beta).into_iter().enumerate() {
            if user.relevant.binary_search(&item).is_ok() {
                out.hits += 1;
                ap_sum += out.hits as f64 / (rank + 1) as f64;
                out.margin_sum += self.margins[item];
            }
        }
        out.precision = out.hits as f64 / k as f64;
        out.recall = out.hits as f64 / user.relevant.len() as f64;
        out.ap = ap_sum / user.relevant.len().min(k) as f64;
        out
    }

    /// Metrics for one `(alpha, beta)` cell. Per-user results are reduced in
    /// customer order, so the row does not depend on thread scheduling.
    pub fn evaluate(&self, hyper: HyperParams) -> Result<MetricsRow> {
        let hyper = HyperParams::new(hyper.alpha, hyper.beta)?;
        let profit = self.profit_terms(hyper.alpha);
        let outcomes: Vec<UserOutcome> = self
            .users
            .par_iter()
            .map(|u| self.outcome(u, &profit, hyper.beta))
            .collect();

        let n = outcomes.len() as f64;
        let (mut p, mut r, mut ap) = (0.0, 0.0, 0.0);
        let (mut user_mean_sum, mut n_hit_users, mut pooled_sum, mut pooled_hits) = (0.0, 0usize, 0.0, 0usize);
        for o in &outcomes {
            p += o.precision;
            r += o.recall;
            ap += o.ap;
            if o.hits > 0 {
                user_mean_sum += o.margin_sum / o.hits as f64;
                n_hit_users += 1;
                pooled_sum += o.margin_sum;
                pooled_hits += o.hits;
            }
        }
        let pah = match self.options.pah_mode {
            _ if n_hit_users == 0 => 0.0,
            PahMode::PerHitUser => user_mean_sum / n_hit_users as f64,
            PahMode::Literal => pooled_sum / pooled_hits as f64 / n,
        };
        Ok(MetricsRow {
            alpha: hyper.alpha,
            beta: hyper.beta,
            precision_at_k: p / n,
            recall_at_k: r / n,
            map_at_k: ap / n,
            pah_at_k: pah,
            k: self.options.k,
            n_users_evaluated: outcomes.len(),
            n_hit_users,
        })
    }
}

/// Builds the evaluation context and scores a single setting.
pub fn evaluate(
    recommender: &Recommender<'_>,
    test: &Dataset,
    hyper: HyperParams,
    options: EvalOptions,
) -> Result<MetricsRow> {
    EvalContext::new(recommender, test, options)?.evaluate(hyper)
}

/// Mean MAP@k of the random-ranking reference over `seeds`.
pub fn random_baseline_map(ctx: &EvalContext<'_>, seeds: impl IntoIterator<Item = u64>) -> Result<f64> {
    let maps = seeds
        .into_iter()
        .map(|s| {
            ctx.with_random_scores(s)
                .evaluate(HyperParams::BASELINE)
                .map(|r| r.map_at_k)
        })
        .collect::<Result<Vec<_>>>()?;
    if maps.is_empty() {
        return Err(Error::validation("at least one seed is required"));
    }
    Ok(maps.iter().sum::<f64>() / maps.len() as f64)
}
