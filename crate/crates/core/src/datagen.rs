//! Synthetic event logs and catalogs shaped after published e-commerce
//! aggregates, with planted price-preference segments.
//!
//! Every item and every customer belongs to one of `n_segments` price
//! segments. Item retail prices are log-normal around their segment's mean
//! price, and margins are normal, resampled until they exceed -0.9. Item
//! popularity follows a Zipf-like law. A customer's action count is
//! `1 + Poisson(Gamma)` (a heavy-tailed negative binomial with the
//! configured mean). Each action picks an item with probability
//! proportional to
//!
//! ```text
//! popularity_i * affinity(c, i),  affinity = exp(-strength * |ln(retail_i / segment_price_c)|)
//! ```
//!
//! and is a purchase with probability `purchase_rate * (1 + affinity) / 2`.
//! Price-matched items therefore convert at the full `purchase_rate`, and the
//! rest convert at down to half of it. With `price_affinity_strength = 0`
//! item choice and conversion ignore segments entirely.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::domain::{Action, CustomerId, Dataset, Interaction, ItemRecord};
use crate::error::{Error, Result};

/// Observation window for timestamps: 180 days starting 2021-01-01 UTC.
const WINDOW_START: i64 = 1_609_459_200;
const WINDOW_SECONDS: i64 = 180 * 86_400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub n_customers: usize,
    pub n_items: usize,
    pub n_segments: usize,
    pub segment_price_means: Vec<f64>,
    pub margin_mean: f64,
    pub margin_spread: f64,
    pub interactions_per_customer_mean: f64,
    pub purchase_rate: f64,
    pub price_affinity_strength: f64,
    pub seed: u64,
    /// Log-space standard deviation of retail prices within a segment.
    pub price_spread: f64,
    /// Gamma shape of the activity mixture; smaller is heavier-tailed.
    pub activity_dispersion: f64,
    /// Zipf exponent of item popularity; 0 makes every item equally popular.
    pub popularity_exponent: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig::ds1_like(5_000, 1_000, 42)
    }
}

impl GenConfig {
    /// Shaped after the higher-margin, more active store: average margin
    /// 161%, 9.46 actions and 6.00 purchases per customer.
    pub fn ds1_like(n_customers: usize, n_items: usize, seed: u64) -> Self {
        GenConfig {
            n_customers,
            n_items,
            n_segments: 3,
            segment_price_means: vec![25.0, 60.0, 150.0],
            margin_mean: 1.61,
            margin_spread: 0.6,
            interactions_per_customer_mean: 9.46,
            purchase_rate: 0.8,
            price_affinity_strength: 2.0,
            seed,
            price_spread: 0.35,
            activity_dispersion: 0.3,
            popularity_exponent: 0.8,
        }
    }

    /// Shaped after the discount store: average margin 87%, 6.45 actions and
    /// 2.78 purchases per customer.
    pub fn ds2_like(n_customers: usize, n_items: usize, seed: u64) -> Self {
        GenConfig {
            segment_price_means: vec![12.0, 30.0, 70.0],
            margin_mean: 0.87,
            margin_spread: 0.45,
            interactions_per_customer_mean: 6.45,
            purchase_rate: 0.55,
            activity_dispersion: 0.25,
            ..GenConfig::ds1_like(n_customers, n_items, seed)
        }
    }

    pub fn preset(name: &str, n_customers: usize, n_items: usize, seed: u64) -> Result<Self> {
        match name {
            "ds1" => Ok(GenConfig::ds1_like(n_customers, n_items, seed)),
            "ds2" => Ok(GenConfig::ds2_like(n_customers, n_items, seed)),
            other => Err(Error::validation(format!(
                "unknown preset '{other}' (expected ds1 or ds2)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::validation(msg));
        if self.n_customers == 0 {
            return fail("n_customers must be positive".into());
        }
        if self.n_items == 0 {
            return fail("n_items must be positive".into());
        }
        if self.n_segments == 0 {
            return fail("n_segments must be positive".into());
        }
        if self.segment_price_means.len() != self.n_segments {
            return fail(format!(
                "segment_price_means has {} entries for {} segments",
                self.segment_price_means.len(),
                self.n_segments
            ));
        }
        if self.segment_price_means.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return fail("segment price means must be positive".into());
        }
        if !(self.margin_mean > -0.9 && self.margin_mean.is_finite()) {
            return fail(format!("margin_mean must exceed -0.9, got {}", self.margin_mean));
        }
        if !(self.margin_spread > 0.0 && self.margin_spread.is_finite()) {
            return fail("margin_spread must be positive".into());
        }
        if !(self.interactions_per_customer_mean >= 1.0 && self.interactions_per_customer_mean.is_finite()) {
            return fail("interactions_per_customer_mean must be at least 1".into());
        }
        if !(self.purchase_rate > 0.0 && self.purchase_rate < 1.0) {
            return fail(format!("purchase_rate must lie in (0, 1), got {}", self.purchase_rate));
        }
        if !(self.price_affinity_strength >= 0.0 && self.price_affinity_strength.is_finite()) {
            return fail("price_affinity_strength must be non-negative".into());
        }
        if !(self.price_spread >= 0.0 && self.price_spread.is_finite()) {
            return fail("price_spread must be non-negative".into());
        }
        if !(self.activity_dispersion > 0.0 && self.activity_dispersion.is_finite()) {
            return fail("activity_dispersion must be positive".into());
        }
        if !(self.popularity_exponent >= 0.0 && self.popularity_exponent.is_finite()) {
            return fail("popularity_exponent must be non-negative".into());
        }
        Ok(())
    }
}

/// A generated dataset together with the planted segment assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub dataset: Dataset,
    pub customer_segments: BTreeMap<CustomerId, usize>,
    pub item_segments: Vec<usize>,
}

fn cents(x: f64) -> f64 {
    ((x * 100.0).round() / 100.0).max(0.01)
}

pub fn generate(cfg: &GenConfig) -> Result<Dataset> {
    generate_with_segments(cfg).map(|g| g.dataset)
}

pub fn generate_with_segments(cfg: &GenConfig) -> Result<Generated> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let margin_dist = Normal::new(cfg.margin_mean, cfg.margin_spread)
        .map_err(|e| Error::validation(format!("margin distribution: {e}")))?;

    let item_id = |i: usize| format!("i{i:06}");
    let mut item_segments = Vec::with_capacity(cfg.n_items);
    let mut records = Vec::with_capacity(cfg.n_items);
    for i in 0..cfg.n_items {
        let seg = rng.random_range(0..cfg.n_segments);
        let log_price = cfg.segment_price_means[seg].ln() + cfg.price_spread * std_normal.sample(&mut rng);
        let retail = cents(log_price.exp());
        let margin = loop {
            let m: f64 = margin_dist.sample(&mut rng);
            if m > -0.9 {
                break m;
            }
        };
        let price = cents(retail / (1.0 + margin));
        item_segments.push(seg);
        records.push(ItemRecord::new(&item_id(i), retail, price));
    }

    let mut popularity_rank: Vec<usize> = (0..cfg.n_items).collect();
    popularity_rank.shuffle(&mut rng);
    let popularity: Vec<f64> = popularity_rank
        .iter()
        .map(|&r| 1.0 / ((r + 1) as f64).powf(cfg.popularity_exponent))
        .collect();

    // affinity[s][i] and the item-choice distribution for each segment.
    let affinity: Vec<Vec<f64>> = cfg
        .segment_price_means
        .iter()
        .map(|&mean| {
            records
                .iter()
                .map(|r| (-cfg.price_affinity_strength * (r.retail_price / mean).ln().abs()).exp())
                .collect()
        })
        .collect();
    let choosers = affinity
        .iter()
        .map(|a| {
            WeightedIndex::new(a.iter().zip(&popularity).map(|(a, p)| a * p))
                .map_err(|e| Error::validation(format!("item choice weights: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let extra_mean = cfg.interactions_per_customer_mean - 1.0;
    let activity = if extra_mean > 0.0 {
        Some(
            Gamma::new(cfg.activity_dispersion, extra_mean / cfg.activity_dispersion)
                .map_err(|e| Error::validation(format!("activity distribution: {e}")))?,
        )
    } else {
        None
    };

    let mut interactions = Vec::new();
    let mut customer_segments = BTreeMap::new();
    for c in 0..cfg.n_customers {
        let customer = CustomerId(format!("c{c:07}"));
        let seg = rng.random_range(0..cfg.n_segments);
        customer_segments.insert(customer.clone(), seg);

        let extra = match &activity {
            Some(gamma) => {
                let lambda: f64 = gamma.sample(&mut rng);
                if lambda > 0.0 {
                    Poisson::new(lambda).map_or(0.0, |p| p.sample(&mut rng))
                } else {
                    0.0
                }
            }
            None => 0.0,
        };
        let n_actions = 1 + extra as usize;
        for _ in 0..n_actions {
            let item = choosers[seg].sample(&mut rng);
            let convert = cfg.purchase_rate * (1.0 + affinity[seg][item]) / 2.0;
            let action = if rng.random::<f64>() < convert {
                Action::Purchase
            } else {
                Action::View
            };
            interactions.push(Interaction {
                customer_id: customer.clone(),
                item_id: records[item].item_id.clone(),
                action,
                timestamp: WINDOW_START + rng.random_range(0..WINDOW_SECONDS),
            });
        }
    }
    interactions.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.customer_id.cmp(&b.customer_id))
            .then_with(|| a.item_id.cmp(&b.item_id))
    });

    Ok(Generated {
        dataset: Dataset::new(interactions, Dataset::catalog_from_records(records)),
        customer_segments,
        item_segments,
    })
}

/// Descriptive statistics, serialized under the usual row labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    #[serde(rename = "Avg. no. of interactions per customer")]
    pub avg_interactions_per_customer: f64,
    #[serde(rename = "Avg. no. of purchases per customer")]
    pub avg_purchases_per_customer: f64,
    #[serde(rename = "Customers with less than 3 actions")]
    pub share_customers_under_3_actions: f64,
    #[serde(rename = "Avg. profit of products")]
    pub avg_item_margin: f64,
    #[serde(rename = "Median profit of products")]
    pub median_item_margin: f64,
    #[serde(rename = "No. of unique customers")]
    pub n_customers: usize,
    #[serde(rename = "No. of actions")]
    pub n_actions: usize,
    #[serde(rename = "No. of unique products")]
    pub n_items: usize,
    #[serde(rename = "75th percentile of actions")]
    pub p75_actions: f64,
    #[serde(rename = "95th percentile of actions")]
    pub p95_actions: f64,
}

/// Percentile by linear interpolation between order statistics at
/// position `p * (n - 1)`. `sorted` must be ascending and non-empty.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Views and purchases both count as actions. Margins are taken over the
/// catalog; unique products over items that appear in the log.
pub fn describe(d: &Dataset) -> DatasetStats {
    let mut actions: BTreeMap<&CustomerId, (usize, usize)> = BTreeMap::new();
    let mut items = BTreeSet::new();
    for e in &d.interactions {
        let entry = actions.entry(&e.customer_id).or_default();
        entry.0 += 1;
        if e.is_purchase() {
            entry.1 += 1;
        }
        items.insert(&e.item_id);
    }
    let n_customers = actions.len();
    let n_actions = d.interactions.len();
    let n_purchases: usize = actions.values().map(|a| a.1).sum();
    let per_customer = |total: usize| {
        if n_customers == 0 {
            0.0
        } else {
            total as f64 / n_customers as f64
        }
    };

    let mut counts: Vec<f64> = actions.values().map(|a| a.0 as f64).collect();
    counts.sort_by(f64::total_cmp);
    let pct = |p| if counts.is_empty() { 0.0 } else { percentile(&counts, p) };

    let mut margins: Vec<f64> = d.catalog.values().map(ItemRecord::margin).collect();
    margins.sort_by(f64::total_cmp);
    let (avg_margin, median_margin) = if margins.is_empty() {
        (0.0, 0.0)
    } else {
        (
            margins.iter().sum::<f64>() / margins.len() as f64,
            percentile(&margins, 0.5),
        )
    };

    DatasetStats {
        avg_interactions_per_customer: per_customer(n_actions),
        avg_purchases_per_customer: per_customer(n_purchases),
        share_customers_under_3_actions: per_customer(actions.values().filter(|a| a.0 < 3).count()),
        avg_item_margin: avg_margin,
        median_item_margin: median_margin,
        n_customers,
        n_actions,
        n_items: items.len(),
        p75_actions: pct(0.75),
        p95_actions: pct(0.95),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of independence between customer segment and the
/// retail-price tercile of each purchased item. Terciles are cut at the 1/3
/// and 2/3 percentiles of purchased retail prices.
pub fn segment_price_association(
    d: &Dataset,
    customer_segments: &BTreeMap<CustomerId, usize>,
) -> Result<ChiSquareTest> {
    let purchases: Vec<(usize, f64)> = d
        .purchases()
        .map(|e| {
            let seg = *customer_segments
                .get(&e.customer_id)
                .ok_or_else(|| Error::validation(format!("customer '{}' has no segment", e.customer_id)))?;
            let price = d
                .catalog
                .get(&e.item_id)
                .ok_or_else(|| Error::validation(format!("item '{}' missing from catalog", e.item_id)))?
                .retail_price;
            Ok((seg, price))
        })
        .collect::<Result<_>>()?;
    if purchases.is_empty() {
        return Err(Error::validation("no purchases to test"));
    }
    let mut prices: Vec<f64> = purchases.iter().map(|p| p.1).collect();
    prices.sort_by(f64::total_cmp);
    let cuts = [percentile(&prices, 1.0 / 3.0), percentile(&prices, 2.0 / 3.0)];

    let n_segments = customer_segments.values().max().map_or(0, |m| m + 1);
    let mut table = vec![[0.0f64; 3]; n_segments];
    for (seg, price) in purchases {
        let tercile = cuts.iter().filter(|&&c| price > c).count();
        table[seg][tercile] += 1.0;
    }
    table.retain(|row| row.iter().sum::<f64>() > 0.0);
    let col_totals: Vec<f64> = (0..3).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let cols: Vec<usize> = (0..3).filter(|&j| col_totals[j] > 0.0).collect();
    let total: f64 = col_totals.iter().sum();

    let mut statistic = 0.0;
    for row in &table {
        let row_total: f64 = row.iter().sum();
        for &j in &cols {
            let expected = row_total * col_totals[j] / total;
            statistic += (row[j] - expected).powi(2) / expected;
        }
    }
    let dof = table.len().saturating_sub(1) * cols.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .map_err(|e| Error::validation(format!("chi-square: {e}")))?
            .sf(statistic)
    };
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value,
    })
}
