//! Profit- and price-preference-aware re-ranking of baseline scores.
//!
//! The multiplier is the sum of two damped log brackets,
//!
//! ```text
//! s_ui = [1 + log10(0.1 + 0.9 * retail_i / price_i)]^alpha
//!      + [1 + log10(0.1 + 0.9 * retail_i / avg_retail_u)]^beta
//! ```
//!
//! and the final score is `s_ui * r_ui`. With positive prices both bracket
//! bases exceed zero, so any real exponent is defined. At `alpha = beta = 0`
//! the multiplier is exactly 2 and the baseline ranking is unchanged.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::domain::{Catalog, CustomerId, Dataset, HyperParams, ItemRecord, PriceProfiles, ScoredItem};
use crate::error::{Error, Result};
use crate::mf::MfModel;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} must be positive, got {v}")))
    }
}

fn exponent(name: &str, v: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} = {v} is outside [-1, 1]")))
    }
}

/// `1 + log10(0.1 + 0.9 * numerator / denominator)`; always > 0 for positive
/// inputs.
#[inline]
pub fn bracket(numerator: f64, denominator: f64) -> f64 {
    1.0 + (0.1 + 0.9 * numerator / denominator).log10()
}

pub fn profit_term(retail_price: f64, price: f64, alpha: f64) -> Result<f64> {
    positive("retail_price", retail_price)?;
    positive("price", price)?;
    exponent("alpha", alpha)?;
    Ok(bracket(retail_price, price).powf(alpha))
}

pub fn preference_term(retail_price: f64, avg_retail_price: f64, beta: f64) -> Result<f64> {
    positive("retail_price", retail_price)?;
    positive("avg_retail_price", avg_retail_price)?;
    exponent("beta", beta)?;
    Ok(bracket(retail_price, avg_retail_price).powf(beta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustmentInputs {
    pub retail_price: f64,
    pub price: f64,
    pub avg_retail_price: f64,
    pub hyper: HyperParams,
}

/// The multiplier `s_ui`: profit term plus preference term.
pub fn adjust_score(inputs: &AdjustmentInputs) -> Result<f64> {
    Ok(profit_term(inputs.retail_price, inputs.price, inputs.hyper.alpha)?
        + preference_term(inputs.retail_price, inputs.avg_retail_price, inputs.hyper.beta)?)
}

#[inline]
pub fn combine(multiplier: f64, baseline: f64) -> f64 {
    multiplier * baseline
}

/// Descending final score, ascending item id on ties.
pub fn ranking_order(a: &ScoredItem, b: &ScoredItem) -> Ordering {
    b.final_score
        .total_cmp(&a.final_score)
        .then_with(|| a.item_id.cmp(&b.item_id))
}

pub fn top_n(mut scored: Vec<ScoredItem>, n: usize) -> Vec<ScoredItem> {
    scored.sort_by(ranking_order);
    scored.truncate(n);
    scored
}

/// Selects the best `k` of `(index, score)` pairs: score descending, index
/// ascending on ties. Linear-time selection followed by a sort of the head.
pub(crate) fn select_top(scores: &mut Vec<(usize, f64)>, k: usize) {
    let order = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if k == 0 {
        scores.clear();
        return;
    }
    if scores.len() > k {
        scores.select_nth_unstable_by(k - 1, order);
        scores.truncate(k);
    }
    scores.sort_unstable_by(order);
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    /// The customer has no latent factors; baseline scores are item-bias only.
    pub cold_start: bool,
    pub items: Vec<ScoredItem>,
}

/// Scores and re-ranks catalog items for customers of a trained model.
///
/// Candidates are all model items minus the customer's training purchases.
/// Profit brackets depend only on the item and are computed once.
pub struct Recommender<'a> {
    model: &'a MfModel,
    profiles: &'a PriceProfiles,
    records: Vec<&'a ItemRecord>,
    profit_brackets: Vec<f64>,
    purchased: HashMap<&'a CustomerId, Vec<usize>>,
}

impl<'a> Recommender<'a> {
    pub fn new(
        model: &'a MfModel,
        profiles: &'a PriceProfiles,
        catalog: &'a Catalog,
        train: &'a Dataset,
    ) -> Result<Self> {
        let records = model
            .items
            .ids()
            .iter()
            .map(|id| {
                catalog
                    .get(id)
                    .ok_or_else(|| Error::Lookup(format!("model item '{id}' is missing from the catalog")))
            })
            .collect::<Result<Vec<_>>>()?;
        for r in &records {
            positive("retail_price", r.retail_price)?;
            positive("price", r.price)?;
        }
        let profit_brackets = records.iter().map(|r| bracket(r.retail_price, r.price)).collect();

        let mut purchased: HashMap<&CustomerId, Vec<usize>> = HashMap::new();
        for e in train.purchases() {
            if let Some(i) = model.item_index(&e.item_id) {
                purchased.entry(&e.customer_id).or_default().push(i);
            }
        }
        for v in purchased.values_mut() {
            v.sort_unstable();
            v.dedup();
        }

        Ok(Recommender {
            model,
            profiles,
            records,
            profit_brackets,
            purchased,
        })
    }

    pub fn model(&self) -> &MfModel {
        self.model
    }

    pub fn n_items(&self) -> usize {
        self.records.len()
    }

    pub fn record(&self, item: usize) -> &ItemRecord {
        self.records[item]
    }

    pub fn candidates(&self, customer: &CustomerId) -> Vec<usize> {
        let bought = self.purchased.get(customer).map_or(&[][..], Vec::as_slice);
        (0..self.records.len())
            .filter(|i| bought.binary_search(i).is_err())
            .collect()
    }

    /// Baseline `(item, r_ui)` for every candidate, plus whether the customer
    /// was cold-start.
    pub fn baseline_scores(&self, customer: &CustomerId) -> Result<(bool, Vec<(usize, f64)>)> {
        let u = self.model.customer_index(customer);
        let scores = self.model.score_candidates(u, &self.candidates(customer))?;
        Ok((u.is_none(), scores))
    }

    /// Preference bracket of every item for this customer's price level.
    pub fn preference_brackets(&self, customer: &CustomerId) -> Vec<f64> {
        let avg = self.profiles.get(customer);
        self.records.iter().map(|r| bracket(r.retail_price, avg)).collect()
    }

    pub(crate) fn profit_bracket(&self, item: usize) -> f64 {
        self.profit_brackets[item]
    }

    /// Top `n` items by `s_ui * r_ui`.
    pub fn recommend(&self, customer: &CustomerId, hyper: HyperParams, n: usize) -> Result<Recommendation> {
        exponent("alpha", hyper.alpha)?;
        exponent("beta", hyper.beta)?;
        let (cold_start, baseline) = self.baseline_scores(customer)?;
        let avg = self.profiles.get(customer);
        let scored = baseline
            .into_iter()
            .map(|(i, r)| {
                let rec = self.records[i];
                let s = adjust_score(&AdjustmentInputs {
                    retail_price: rec.retail_price,
                    price: rec.price,
                    avg_retail_price: avg,
                    hyper,
                })?;
                Ok(ScoredItem {
                    item_id: rec.item_id.clone(),
                    baseline_score: r,
                    adjusted_multiplier: s,
                    final_score: combine(s, r),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Recommendation {
            cold_start,
            items: top_n(scored, n),
        })
    }

    /// Top `n` items by the baseline score alone (multiplier reported as 1).
    pub fn recommend_baseline(&self, customer: &CustomerId, n: usize) -> Result<Recommendation> {
        let (cold_start, baseline) = self.baseline_scores(customer)?;
        let scored = baseline
            .into_iter()
            .map(|(i, r)| ScoredItem {
                item_id: self.records[i].item_id.clone(),
                baseline_score: r,
                adjusted_multiplier: 1.0,
                final_score: r,
            })
            .collect();
        Ok(Recommendation {
            cold_start,
            items: top_n(scored, n),
        })
    }
}

/// Free-function form of [`Recommender::recommend`].
pub fn recommend(
    model: &MfModel,
    profiles: &PriceProfiles,
    catalog: &Catalog,
    train: &Dataset,
    customer: &CustomerId,
    hyper: HyperParams,
    n: usize,
) -> Result<Recommendation> {
    Recommender::new(model, profiles, catalog, train)?.recommend(customer, hyper, n)
}
