//! Core data model: event logs, catalogs, customer price profiles and scored
//! items.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(
    /// Opaque customer identifier as it appears in the event log.
    CustomerId
);
string_id!(
    /// Opaque item identifier shared by the event log and the catalog.
    ItemId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    View,
    Purchase,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::View => "view",
            Action::Purchase => "purchase",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "view" => Ok(Action::View),
            "purchase" => Ok(Action::Purchase),
            other => Err(Error::validation(format!(
                "unknown action '{other}' (expected 'view' or 'purchase')"
            ))),
        }
    }
}

/// One customer action with its timestamp in seconds since the epoch.
///
/// The timestamp is signed so that malformed logs can be loaded and then
/// reported by [`validate_dataset`] rather than rejected by the parser.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub customer_id: CustomerId,
    pub item_id: ItemId,
    pub action: Action,
    pub timestamp: i64,
}

impl Interaction {
    pub fn new(customer: &str, item: &str, action: Action, timestamp: i64) -> Self {
        Interaction {
            customer_id: customer.into(),
            item_id: item.into(),
            action,
            timestamp,
        }
    }

    pub fn is_purchase(&self) -> bool {
        self.action == Action::Purchase
    }
}

/// Retail (selling) price and purchase (cost) price of a catalog item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub item_id: ItemId,
    pub retail_price: f64,
    pub price: f64,
}

impl ItemRecord {
    pub fn new(item: &str, retail_price: f64, price: f64) -> Self {
        ItemRecord {
            item_id: item.into(),
            retail_price,
            price,
        }
    }

    /// Relative profit margin `(retail - price) / price`. Negative for items
    /// sold below cost.
    pub fn margin(&self) -> f64 {
        (self.retail_price - self.price) / self.price
    }
}

/// Items keyed by id. Ordered, so iteration order is the ascending id order
/// used for tie-breaking everywhere else.
pub type Catalog = BTreeMap<ItemId, ItemRecord>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub interactions: Vec<Interaction>,
    pub catalog: Catalog,
}

impl Dataset {
    pub fn new(interactions: Vec<Interaction>, catalog: Catalog) -> Self {
        Dataset { interactions, catalog }
    }

    pub fn catalog_from_records(records: impl IntoIterator<Item = ItemRecord>) -> Catalog {
        records.into_iter().map(|r| (r.item_id.clone(), r)).collect()
    }

    pub fn purchases(&self) -> impl Iterator<Item = &Interaction> {
        self.interactions.iter().filter(|i| i.is_purchase())
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomerProfile {
    pub customer_id: CustomerId,
    pub avg_purchase_retail_price: f64,
}

/// Per-customer price levels plus the fallback used for customers who have
/// no purchases (or who are absent from the training log altogether).
#[derive(Debug, Clone, PartialEq)]
pub struct PriceProfiles {
    pub profiles: BTreeMap<CustomerId, CustomerProfile>,
    pub fallback: f64,
}

impl PriceProfiles {
    pub fn get(&self, customer: &CustomerId) -> f64 {
        self.profiles
            .get(customer)
            .map_or(self.fallback, |p| p.avg_purchase_retail_price)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Order-independent mean: sums after sorting so the result does not depend
/// on the order events arrived in.
fn stable_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Average retail price of each customer's purchases (one term per purchase
/// event). Customers without purchases get the mean over all purchase events;
/// if there are none at all, the unweighted catalog mean.
pub fn build_customer_profiles(train: &Dataset) -> Result<PriceProfiles> {
    if train.catalog.is_empty() {
        return Err(Error::validation("catalog is empty"));
    }

    let mut per_customer: BTreeMap<&CustomerId, Vec<f64>> = BTreeMap::new();
    let mut all_purchases = Vec::new();
    for event in &train.interactions {
        let bucket = per_customer.entry(&event.customer_id).or_default();
        if event.is_purchase() {
            let record = train
                .catalog
                .get(&event.item_id)
                .ok_or_else(|| Error::validation(format!("item '{}' missing from catalog", event.item_id)))?;
            bucket.push(record.retail_price);
            all_purchases.push(record.retail_price);
        }
    }

    let fallback = if all_purchases.is_empty() {
        let mut retail: Vec<f64> = train.catalog.values().map(|r| r.retail_price).collect();
        stable_mean(&mut retail)
    } else {
        stable_mean(&mut all_purchases)
    };

    let profiles = per_customer
        .into_iter()
        .map(|(customer, mut prices)| {
            let avg = if prices.is_empty() {
                fallback
            } else {
                stable_mean(&mut prices)
            };
            (
                customer.clone(),
                CustomerProfile {
                    customer_id: customer.clone(),
                    avg_purchase_retail_price: avg,
                },
            )
        })
        .collect();

    Ok(PriceProfiles { profiles, fallback })
}

/// Profit and price-preference strengths, both restricted to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub alpha: f64,
    pub beta: f64,
}

impl HyperParams {
    pub const BASELINE: HyperParams = HyperParams { alpha: 0.0, beta: 0.0 };

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::validation(format!("{name} = {v} is outside [-1, 1]")));
            }
        }
        Ok(HyperParams { alpha, beta })
    }
}

/// A candidate after re-ranking: `final_score = adjusted_multiplier * baseline_score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub item_id: ItemId,
    pub baseline_score: f64,
    pub adjusted_multiplier: f64,
    pub final_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MissingCatalogEntry {
        index: usize,
        item_id: ItemId,
    },
    NonPositivePrice {
        item_id: ItemId,
        field: &'static str,
        value: f64,
    },
    NegativeTimestamp {
        index: usize,
        timestamp: i64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingCatalogEntry { index, item_id } => {
                write!(f, "interaction #{index}: item '{item_id}' is not in the catalog")
            }
            Violation::NonPositivePrice { item_id, field, value } => {
                write!(f, "item '{item_id}': {field} must be positive, got {value}")
            }
            Violation::NegativeTimestamp { index, timestamp } => {
                write!(f, "interaction #{index}: negative timestamp {timestamp}")
            }
        }
    }
}

/// Every broken dataset invariant. Empty iff the dataset is well formed.
pub fn validate_dataset(d: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    for record in d.catalog.values() {
        for (field, value) in [("retail_price", record.retail_price), ("price", record.price)] {
            // NaN fails this check too.
            if !(value > 0.0 && value.is_finite()) {
                out.push(Violation::NonPositivePrice {
                    item_id: record.item_id.clone(),
                    field,
                    value,
                });
            }
        }
    }
    for (index, event) in d.interactions.iter().enumerate() {
        if !d.catalog.contains_key(&event.item_id) {
            out.push(Violation::MissingCatalogEntry {
                index,
                item_id: event.item_id.clone(),
            });
        }
        if event.timestamp < 0 {
            out.push(Violation::NegativeTimestamp {
                index,
                timestamp: event.timestamp,
            });
        }
    }
    out
}

/// Dense `id <-> index` mapping. Indices follow insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdIndex<T: Ord + Clone + std::hash::Hash> {
    ids: Vec<T>,
    lookup: HashMap<T, usize>,
}

impl<T: Ord + Clone + std::hash::Hash> IdIndex<T> {
    pub fn from_ids(ids: impl IntoIterator<Item = T>) -> Self {
        let mut index = IdIndex {
            ids: Vec::new(),
            lookup: HashMap::new(),
        };
        for id in ids {
            index.insert(id);
        }
        index
    }

    pub fn insert(&mut self, id: T) -> usize {
        if let Some(&i) = self.lookup.get(&id) {
            return i;
        }
        let i = self.ids.len();
        self.lookup.insert(id.clone(), i);
        self.ids.push(id);
        i
    }

    pub fn get(&self, id: &T) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn id(&self, index: usize) -> Option<&T> {
        self.ids.get(index)
    }

    pub fn ids(&self) -> &[T] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}
