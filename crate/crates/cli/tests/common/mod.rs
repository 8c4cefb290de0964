//! Hand-built 20-customer x 50-item evaluation fixture and a brute-force
//! scorer that shares no code with the library beyond the data types.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use pricepref::domain::IdIndex;
use pricepref::{Action, CustomerId, Dataset, Interaction, ItemId, ItemRecord, MfModel, ModelParams, TrainConfig};

pub const N_USERS: usize = 20;
pub const N_ITEMS: usize = 50;
/// Customers from this index on have no training purchases.
pub const FIRST_COLD: usize = 17;
const DIM: usize = 3;

pub fn item_id(i: usize) -> String {
    format!("i{i:02}")
}

pub fn user_id(u: usize) -> String {
    format!("u{u:02}")
}

fn retail(i: usize) -> f64 {
    10.0 + 7.0 * ((i * 13) % 23) as f64 + 0.5 * i as f64
}

fn margin(i: usize) -> f64 {
    ((i * 7) % 11) as f64 / 5.0 - 0.4
}

fn item_factors(i: usize) -> [f64; DIM] {
    let x = i as f64;
    [
        0.8 * (0.7 * x).sin(),
        0.8 * (1.3 * x).cos(),
        0.8 * (0.37 * x + 1.0).sin(),
    ]
}

fn item_bias(i: usize) -> f64 {
    ((i * 17) % 10) as f64 / 10.0 - 0.5
}

fn user_factors(u: usize) -> [f64; DIM] {
    let x = u as f64;
    [(0.9 * x).cos(), (0.5 * x).sin(), (0.21 * x + 2.0).cos()]
}

fn user_bias(u: usize) -> f64 {
    0.01 * u as f64
}

fn train_items(u: usize) -> Vec<usize> {
    if u >= FIRST_COLD {
        return Vec::new();
    }
    (0..2 + u % 4).map(|j| (u * 3 + j * 7) % N_ITEMS).collect()
}

fn test_items(u: usize) -> Vec<usize> {
    // u05 buys twelve items, more than fit in a top-10 list.
    let n = if u == 5 { 12 } else { 1 + u % 5 };
    (0..n).map(|j| (u * 5 + j * 11 + 1) % N_ITEMS).collect()
}

pub struct Fixture {
    pub train: Dataset,
    pub test: Dataset,
    pub model: MfModel,
}

pub fn fixture() -> Fixture {
    let catalog = Dataset::catalog_from_records(
        (0..N_ITEMS).map(|i| ItemRecord::new(&item_id(i), retail(i), retail(i) / (1.0 + margin(i)))),
    );
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut t = 0;
    for u in 0..N_USERS {
        for i in train_items(u) {
            t += 1;
            train.push(Interaction::new(&user_id(u), &item_id(i), Action::Purchase, t));
            train.push(Interaction::new(
                &user_id(u),
                &item_id((i + 1) % N_ITEMS),
                Action::View,
                t,
            ));
        }
    }
    for u in 0..N_USERS {
        for i in test_items(u) {
            t += 1;
            test.push(Interaction::new(&user_id(u), &item_id(i), Action::Purchase, t));
        }
    }
    let model = MfModel {
        params: ModelParams {
            dim: DIM,
            customer_factors: (0..FIRST_COLD).flat_map(user_factors).collect(),
            item_factors: (0..N_ITEMS).flat_map(item_factors).collect(),
            customer_bias: (0..FIRST_COLD).map(user_bias).collect(),
            item_bias: (0..N_ITEMS).map(item_bias).collect(),
        },
        customers: IdIndex::from_ids((0..FIRST_COLD).map(|u| CustomerId::from(user_id(u)))),
        items: IdIndex::from_ids((0..N_ITEMS).map(|i| ItemId::from(item_id(i)))),
        config: TrainConfig::default(),
    };
    Fixture {
        train: Dataset::new(train, catalog.clone()),
        test: Dataset::new(test, catalog),
        model,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BruteMetrics {
    pub precision: f64,
    pub recall: f64,
    pub map: f64,
    pub pah: f64,
    pub pah_literal: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scores every unseen item for every test customer, sorts the full list and
/// reads the metrics off the first `k` entries.
pub fn brute_force(alpha: f64, beta: f64, k: usize) -> BruteMetrics {
    let train_buys: Vec<Vec<usize>> = (0..N_USERS).map(train_items).collect();
    let all_train: Vec<f64> = train_buys.iter().flatten().map(|&i| retail(i)).collect();
    let global_avg = all_train.iter().sum::<f64>() / all_train.len() as f64;

    let mut relevant: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for u in 0..N_USERS {
        relevant.entry(u).or_default().extend(test_items(u));
    }

    let (mut p, mut r, mut ap) = (0.0, 0.0, 0.0);
    let (mut pah_sum, mut hit_users, mut pooled, mut pooled_hits) = (0.0, 0, 0.0, 0);
    for (&u, rel) in &relevant {
        let bought = &train_buys[u];
        let avg = if bought.is_empty() {
            global_avg
        } else {
            bought.iter().map(|&i| retail(i)).sum::<f64>() / bought.len() as f64
        };
        let mut scored: Vec<(f64, usize)> = (0..N_ITEMS)
            .filter(|i| !bought.contains(i))
            .map(|i| {
                let raw = if u < FIRST_COLD {
                    let q = user_factors(u);
                    let v = item_factors(i);
                    q[0] * v[0] + q[1] * v[1] + q[2] * v[2] + user_bias(u) + item_bias(i)
                } else {
                    item_bias(i)
                };
                let price = retail(i) / (1.0 + margin(i));
                let profit = 1.0 + (0.1 + 0.9 * retail(i) / price).log10();
                let pref = 1.0 + (0.1 + 0.9 * retail(i) / avg).log10();
                (sigmoid(raw) * (profit.powf(alpha) + pref.powf(beta)), i)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut hits = 0;
        let mut precision_sum = 0.0;
        let mut margins = Vec::new();
        for (rank, &(_, i)) in scored.iter().take(k).enumerate() {
            if rel.contains(&i) {
                hits += 1;
                precision_sum += hits as f64 / (rank + 1) as f64;
                margins.push(margin_of(i));
            }
        }
        p += hits as f64 / k as f64;
        r += hits as f64 / rel.len() as f64;
        ap += precision_sum / rel.len().min(k) as f64;
        if hits > 0 {
            pah_sum += margins.iter().sum::<f64>() / hits as f64;
            hit_users += 1;
            pooled += margins.iter().sum::<f64>();
            pooled_hits += hits;
        }
    }
    let n = relevant.len() as f64;
    assert!(hit_users > 0, "fixture must produce hits");
    BruteMetrics {
        precision: p / n,
        recall: r / n,
        map: ap / n,
        pah: pah_sum / hit_users as f64,
        pah_literal: pooled / pooled_hits as f64 / n,
    }
}

/// Margin as the library's catalog sees it: computed back from the stored
/// price rather than taken from the formula.
fn margin_of(i: usize) -> f64 {
    let price = retail(i) / (1.0 + margin(i));
    (retail(i) - price) / price
}
