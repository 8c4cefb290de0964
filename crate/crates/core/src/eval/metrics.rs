//! Ranked-retrieval metrics over a top-k list and the profit-at-hit metric.

use std::collections::{BTreeSet, HashSet};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::domain::{Catalog, CustomerId, Dataset, ItemId};
use crate::error::{Error, Result};

/// Distinct items `customer` purchased in `test`.
pub fn relevant_items(test: &Dataset, customer: &CustomerId) -> BTreeSet<ItemId> {
    test.purchases()
        .filter(|e| &e.customer_id == customer)
        .map(|e| e.item_id.clone())
        .collect()
}

fn hits<T: Eq + Hash>(recommended: &[T], relevant: &HashSet<T>, k: usize) -> usize {
    recommended.iter().take(k).filter(|i| relevant.contains(i)).count()
}

pub fn precision_at_k<T: Eq + Hash>(recommended: &[T], relevant: &HashSet<T>, k: usize) -> f64 {
    assert!(k > 0, "k must be positive");
    hits(recommended, relevant, k) as f64 / k as f64
}

/// Zero when nothing is relevant; such users are excluded from means upstream.
pub fn recall_at_k<T: Eq + Hash>(recommended: &[T], relevant: &HashSet<T>, k: usize) -> f64 {
    assert!(k > 0, "k must be positive");
    if relevant.is_empty() {
        return 0.0;
    }
    hits(recommended, relevant, k) as f64 / relevant.len() as f64
}

/// Sum of precision@r over hit ranks r <= k, divided by `min(|relevant|, k)`.
pub fn average_precision_at_k<T: Eq + Hash>(recommended: &[T], relevant: &HashSet<T>, k: usize) -> f64 {
    assert!(k > 0, "k must be positive");
    if relevant.is_empty() {
        return 0.0;
    }
    let mut found = 0usize;
    let mut sum = 0.0;
    for (rank, item) in recommended.iter().take(k).enumerate() {
        if relevant.contains(item) {
            found += 1;
            sum += found as f64 / (rank + 1) as f64;
        }
    }
    sum / relevant.len().min(k) as f64
}

/// How profit-at-hit is aggregated across users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PahMode {
    /// Mean margin of each user's hits, averaged over users with at least one hit.
    #[default]
    PerHitUser,
    /// Mean margin over all hits pooled, then divided once more by the number
    /// of evaluated users.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PahResult {
    pub value: f64,
    /// Users with at least one hit in their top-k.
    pub n_hit_users: usize,
}

/// Generic core of [`pah_at_k`]; `margin` maps an item to its relative margin.
pub(crate) fn pah_generic<T: Eq + Hash>(
    per_user: impl IntoIterator<Item = (impl AsRef<[T]>, impl std::ops::Deref<Target = HashSet<T>>)>,
    k: usize,
    mode: PahMode,
    mut margin: impl FnMut(&T) -> Result<f64>,
) -> Result<PahResult> {
    let (mut user_mean_sum, mut n_hit_users, mut n_users) = (0.0, 0usize, 0usize);
    let (mut pooled_sum, mut pooled_hits) = (0.0, 0usize);
    for (recs, relevant) in per_user {
        n_users += 1;
        let mut sum = 0.0;
        let mut count = 0usize;
        for item in recs.as_ref().iter().take(k) {
            if relevant.contains(item) {
                sum += margin(item)?;
                count += 1;
            }
        }
        if count > 0 {
            user_mean_sum += sum / count as f64;
            n_hit_users += 1;
            pooled_sum += sum;
            pooled_hits += count;
        }
    }
    let value = match mode {
        _ if n_hit_users == 0 => 0.0,
        PahMode::PerHitUser => user_mean_sum / n_hit_users as f64,
        PahMode::Literal => pooled_sum / pooled_hits as f64 / n_users as f64,
    };
    Ok(PahResult { value, n_hit_users })
}

/// Profit at hit over per-user top-k lists.
pub fn pah_at_k(
    per_user_recommendations: &[Vec<ItemId>],
    relevant_sets: &[HashSet<ItemId>],
    catalog: &Catalog,
    k: usize,
    mode: PahMode,
) -> Result<PahResult> {
    assert!(k > 0, "k must be positive");
    if per_user_recommendations.len() != relevant_sets.len() {
        return Err(Error::Evaluation(
            "recommendation lists and relevant sets differ in length".into(),
        ));
    }
    pah_generic(
        per_user_recommendations.iter().zip(relevant_sets.iter()),
        k,
        mode,
        |item: &ItemId| {
            catalog
                .get(item)
                .map(|r| r.margin())
                .ok_or_else(|| Error::Evaluation(format!("item '{item}' missing from catalog")))
        },
    )
}
