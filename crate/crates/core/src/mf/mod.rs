//! Implicit-feedback matrix factorization with customer/item biases and a
//! sigmoid link, trained with the WARP ranking loss.
//!
//! `r_ui = sigmoid(q_u . p_i + b_u + b_i)`. Only purchases are positives;
//! views are ignored by training.

mod persist;
mod warp;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{CustomerId, Dataset, IdIndex, ItemId};
use crate::error::{Error, Result};

pub use persist::{load_model, read_model, save_model, write_model, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use warp::{warp_update, warp_weight, AdagradState, WarpOutcome};

/// Per-parameter step-size rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearningSchedule {
    /// Constant step `learning_rate * weight`. Diverges at the default rate on
    /// realistic catalogs; kept for small-rate experiments.
    Sgd,
    /// `learning_rate / sqrt(accumulated squared gradients)`, accumulators
    /// starting at 1.
    #[default]
    Adagrad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub latent_dim: usize,
    pub epochs: usize,
    pub max_warp_trials: usize,
    /// L2 decay applied to every parameter touched by an update. Off by default.
    pub regularization: f64,
    pub schedule: LearningSchedule,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            latent_dim: 50,
            epochs: 50,
            max_warp_trials: 100,
            regularization: 0.0,
            schedule: LearningSchedule::Adagrad,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::validation("learning_rate must be a non-negative number"));
        }
        if self.latent_dim == 0 {
            return Err(Error::validation("latent_dim must be positive"));
        }
        if self.max_warp_trials == 0 {
            return Err(Error::validation("max_warp_trials must be positive"));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::validation("regularization must be non-negative"));
        }
        Ok(())
    }
}

/// Latent factors (row-major, one row of `dim` values per customer/item) and
/// biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dim: usize,
    pub customer_factors: Vec<f64>,
    pub item_factors: Vec<f64>,
    pub customer_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl ModelParams {
    pub fn n_customers(&self) -> usize {
        self.customer_bias.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_bias.len()
    }

    pub fn customer_row(&self, u: usize) -> &[f64] {
        &self.customer_factors[u * self.dim..(u + 1) * self.dim]
    }

    pub fn item_row(&self, i: usize) -> &[f64] {
        &self.item_factors[i * self.dim..(i + 1) * self.dim]
    }

    fn check(&self, u: usize, i: usize) -> Result<()> {
        if u >= self.n_customers() {
            return Err(Error::Lookup(format!(
                "customer index {u} out of range ({} customers)",
                self.n_customers()
            )));
        }
        if i >= self.n_items() {
            return Err(Error::Lookup(format!(
                "item index {i} out of range ({} items)",
                self.n_items()
            )));
        }
        Ok(())
    }

    /// Pre-sigmoid score `q_u . p_i + b_u + b_i`; indices must be in range.
    pub(crate) fn raw_unchecked(&self, u: usize, i: usize) -> f64 {
        dot(self.customer_row(u), self.item_row(i)) + self.customer_bias[u] + self.item_bias[i]
    }

    pub fn raw_score(&self, u: usize, i: usize) -> Result<f64> {
        self.check(u, i)?;
        Ok(self.raw_unchecked(u, i))
    }

    /// `r_ui` in (0, 1). Already normalized; no further rescaling is applied.
    pub fn predict_score(&self, u: usize, i: usize) -> Result<f64> {
        self.raw_score(u, i).map(sigmoid)
    }

    /// Cold-start score for a customer the model has never seen.
    pub fn item_bias_score(&self, i: usize) -> Result<f64> {
        self.item_bias
            .get(i)
            .map(|&b| sigmoid(b))
            .ok_or_else(|| Error::Lookup(format!("item index {i} out of range")))
    }

    pub fn is_finite(&self) -> bool {
        self.customer_factors
            .iter()
            .chain(&self.item_factors)
            .chain(&self.customer_bias)
            .chain(&self.item_bias)
            .all(|x| x.is_finite())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Factors i.i.d. uniform in `[-1/sqrt(d), 1/sqrt(d)]`, biases zero.
pub fn init_model(n_customers: usize, n_items: usize, cfg: &TrainConfig) -> Result<ModelParams> {
    if n_customers == 0 || n_items == 0 {
        return Err(Error::validation(format!(
            "cannot initialise a model with {n_customers} customers and {n_items} items"
        )));
    }
    cfg.validate()?;
    let dim = cfg.latent_dim;
    let scale = 1.0 / (dim as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-scale..=scale)).collect() };
    let customer_factors = draw(n_customers * dim);
    let item_factors = draw(n_items * dim);
    Ok(ModelParams {
        dim,
        customer_factors,
        item_factors,
        customer_bias: vec![0.0; n_customers],
        item_bias: vec![0.0; n_items],
    })
}

/// Trained parameters together with the id maps that give them meaning.
///
/// Items are indexed in ascending id order over the whole catalog, so an item
/// index comparison is also an item id comparison. Customers are indexed in
/// ascending id order over those with at least one training purchase; anyone
/// else is cold-start.
#[derive(Debug, Clone, PartialEq)]
pub struct MfModel {
    pub params: ModelParams,
    pub customers: IdIndex<CustomerId>,
    pub items: IdIndex<ItemId>,
    pub config: TrainConfig,
}

impl MfModel {
    pub fn customer_index(&self, id: &CustomerId) -> Option<usize> {
        self.customers.get(id)
    }

    pub fn item_index(&self, id: &ItemId) -> Option<usize> {
        self.items.get(id)
    }

    /// Baseline scores for a candidate list, in input order. Unknown
    /// customers (`None`) get item-bias-only scores.
    pub fn score_candidates(&self, customer: Option<usize>, candidates: &[usize]) -> Result<Vec<(usize, f64)>> {
        match customer {
            Some(u) => score_candidates(&self.params, u, candidates),
            None => candidates
                .iter()
                .map(|&i| Ok((i, self.params.item_bias_score(i)?)))
                .collect(),
        }
    }
}

pub fn score_candidates(m: &ModelParams, u: usize, candidates: &[usize]) -> Result<Vec<(usize, f64)>> {
    candidates.iter().map(|&i| Ok((i, m.predict_score(u, i)?))).collect()
}

/// Positive (customer, item) pairs in the training data, by dense index.
pub(crate) struct Positives {
    /// Sorted item indices per customer.
    pub per_customer: Vec<Vec<usize>>,
    pub pairs: Vec<(usize, usize)>,
}

fn index_training_data(train: &Dataset) -> Result<(IdIndex<CustomerId>, IdIndex<ItemId>, Positives)> {
    let items = IdIndex::from_ids(train.catalog.keys().cloned());
    let purchase_pairs: BTreeSet<(&CustomerId, &ItemId)> =
        train.purchases().map(|e| (&e.customer_id, &e.item_id)).collect();
    if purchase_pairs.is_empty() {
        return Err(Error::Training("training data contains no purchases".into()));
    }
    let customers = IdIndex::from_ids(purchase_pairs.iter().map(|(c, _)| (*c).clone()));
    let mut per_customer = vec![Vec::new(); customers.len()];
    let mut pairs = Vec::with_capacity(purchase_pairs.len());
    for (c, i) in purchase_pairs {
        let u = customers.get(c).expect("indexed above");
        let i = items
            .get(i)
            .ok_or_else(|| Error::Training(format!("purchased item '{i}' is missing from the catalog")))?;
        per_customer[u].push(i);
        pairs.push((u, i));
    }
    // Pairs arrive sorted by (customer id, item id), and both indices are
    // assigned in id order, so every per-customer list is already sorted.
    Ok((customers, items, Positives { per_customer, pairs }))
}

/// Trains the baseline. Each epoch visits every distinct (customer,
/// purchased item) pair once in a freshly shuffled order.
pub fn fit(train: &Dataset, cfg: &TrainConfig) -> Result<MfModel> {
    cfg.validate()?;
    let (customers, items, positives) = index_training_data(train)?;
    let mut params = init_model(customers.len(), items.len(), cfg)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut adagrad = match cfg.schedule {
        LearningSchedule::Adagrad => Some(AdagradState::new(&params)),
        LearningSchedule::Sgd => None,
    };
    let mut order = positives.pairs.clone();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &(u, pos) in &order {
            warp_update(
                &mut params,
                adagrad.as_mut(),
                u,
                pos,
                &positives.per_customer[u],
                cfg,
                &mut rng,
            );
        }
        if !params.is_finite() {
            return Err(Error::Training(format!(
                "non-finite parameters after epoch {}",
                epoch + 1
            )));
        }
    }

    Ok(MfModel {
        params,
        customers,
        items,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Action, Interaction, ItemRecord};

    fn cfg(d: usize) -> TrainConfig {
        TrainConfig {
            latent_dim: d,
            ..TrainConfig::default()
        }
    }

    fn two_dim(q: [f64; 2], p: [f64; 2]) -> ModelParams {
        ModelParams {
            dim: 2,
            customer_factors: q.to_vec(),
            item_factors: p.to_vec(),
            customer_bias: vec![0.0],
            item_bias: vec![0.0],
        }
    }

    #[test]
    fn init_shapes_and_zero_biases() {
        let m = init_model(3, 4, &cfg(2)).unwrap();
        assert_eq!(m.customer_factors.len(), 3 * 2);
        assert_eq!(m.item_factors.len(), 4 * 2);
        assert_eq!(m.customer_bias, vec![0.0; 3]);
        assert_eq!(m.item_bias, vec![0.0; 4]);
        let bound = 1.0 / 2f64.sqrt();
        assert!(m.item_factors.iter().all(|x| x.abs() <= bound));
    }

    #[test]
    fn init_is_seeded() {
        let a = init_model(3, 4, &cfg(2)).unwrap();
        let b = init_model(3, 4, &cfg(2)).unwrap();
        assert_eq!(a, b);
        let c = init_model(3, 4, &TrainConfig { seed: 7, ..cfg(2) }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_rejects_zero_counts() {
        assert!(init_model(0, 4, &cfg(2)).is_err());
        assert!(init_model(3, 0, &cfg(2)).is_err());
    }

    #[test]
    fn zero_model_predicts_one_half() {
        let m = two_dim([0.0, 0.0], [0.0, 0.0]);
        assert_eq!(m.predict_score(0, 0).unwrap(), 0.5);
    }

    #[test]
    fn sigmoid_of_unit_dot_products() {
        // 1 / (1 + e^-1) = 0.731058578630004879251159241822 (mpmath, 30 digits)
        let m = two_dim([1.0, 0.0], [1.0, 0.0]);
        assert!((m.predict_score(0, 0).unwrap() - 0.731_058_578_630_004_9).abs() < 1e-15);
        let m = two_dim([1.0, 0.0], [-1.0, 0.0]);
        let low = m.predict_score(0, 0).unwrap();
        assert!((low - 0.268_941_421_369_995_1).abs() < 1e-15);
        assert!((low - (1.0 - 0.731_058_578_630_004_9)).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_is_lookup_error() {
        let m = two_dim([0.0, 0.0], [0.0, 0.0]);
        assert!(matches!(m.predict_score(1, 0), Err(Error::Lookup(_))));
        assert!(matches!(m.predict_score(0, 5), Err(Error::Lookup(_))));
    }

    #[test]
    fn score_candidates_matches_predict() {
        let m = init_model(2, 5, &cfg(3)).unwrap();
        assert!(score_candidates(&m, 1, &[]).unwrap().is_empty());
        let single = score_candidates(&m, 1, &[2]).unwrap();
        assert_eq!(single, vec![(2, m.predict_score(1, 2).unwrap())]);
        let three = score_candidates(&m, 0, &[4, 0, 3]).unwrap();
        let expect: Vec<_> = [4, 0, 3].iter().map(|&i| (i, m.predict_score(0, i).unwrap())).collect();
        assert_eq!(three, expect);
    }

    fn small_train() -> Dataset {
        let catalog = Dataset::catalog_from_records((0..6).map(|i| ItemRecord::new(&format!("i{i}"), 10.0, 5.0)));
        let mut ev = Vec::new();
        for u in 0..4 {
            for i in 0..3 {
                let item = format!("i{}", (u + i) % 6);
                ev.push(Interaction::new(&format!("u{u}"), &item, Action::Purchase, 1));
            }
            ev.push(Interaction::new(&format!("u{u}"), "i5", Action::View, 2));
        }
        ev.push(Interaction::new("viewer", "i0", Action::View, 3));
        Dataset::new(ev, catalog)
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let c = TrainConfig { epochs: 0, ..cfg(4) };
        let m = fit(&small_train(), &c).unwrap();
        assert_eq!(m.params, init_model(4, 6, &c).unwrap());
        // View-only customers are not part of the model.
        assert_eq!(m.customer_index(&"viewer".into()), None);
    }

    #[test]
    fn fit_is_deterministic_and_finite() {
        let c = TrainConfig { epochs: 5, ..cfg(4) };
        let a = fit(&small_train(), &c).unwrap();
        let b = fit(&small_train(), &c).unwrap();
        assert_eq!(a, b);
        assert!(a.params.is_finite());
    }

    #[test]
    fn fit_without_purchases_fails() {
        let mut d = small_train();
        d.interactions.retain(|e| !e.is_purchase());
        assert!(matches!(fit(&d, &cfg(2)), Err(Error::Training(_))));
    }

    #[test]
    fn cold_start_uses_item_bias() {
        let mut m = fit(&small_train(), &TrainConfig { epochs: 0, ..cfg(2) }).unwrap();
        m.params.item_bias[1] = 1.0;
        let s = m.score_candidates(None, &[0, 1]).unwrap();
        assert_eq!(s, vec![(0, 0.5), (1, sigmoid(1.0))]);
    }
}
