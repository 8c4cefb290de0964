use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Interaction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// One chronological cut over the whole log.
    #[default]
    Global,
    /// Each customer's own history is cut at the same fraction.
    PerUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    #[serde(default)]
    pub mode: SplitMode,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            mode: SplitMode::Global,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::validation(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// `ceil(fraction * n)`, ignoring float noise such as `0.7 * 10 = 7.000000000000001`.
    pub fn train_len(&self, n: usize) -> usize {
        let x = self.train_fraction * n as f64;
        let nearest = x.round();
        let len = if (x - nearest).abs() <= 1e-9 * x.max(1.0) {
            nearest
        } else {
            x.ceil()
        };
        (len as usize).min(n)
    }
}

fn chronological(events: &mut [Interaction]) {
    // Stable: events equal on all three keys keep their input order.
    events.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.customer_id.cmp(&b.customer_id))
            .then_with(|| a.item_id.cmp(&b.item_id))
    });
}

/// Splits the log by time. Both halves share the full catalog.
pub fn time_split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    if d.interactions.is_empty() {
        return Err(Error::validation("cannot split an empty dataset"));
    }
    let (train, test) = match spec.mode {
        SplitMode::Global => {
            let mut events = d.interactions.clone();
            chronological(&mut events);
            let test = events.split_off(spec.train_len(events.len()));
            (events, test)
        }
        SplitMode::PerUser => {
            let mut per_user: BTreeMap<_, Vec<Interaction>> = BTreeMap::new();
            for e in &d.interactions {
                per_user.entry(e.customer_id.clone()).or_default().push(e.clone());
            }
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for (_, mut events) in per_user {
                chronological(&mut events);
                let tail = events.split_off(spec.train_len(events.len()));
                train.extend(events);
                test.extend(tail);
            }
            chronological(&mut train);
            chronological(&mut test);
            (train, test)
        }
    };
    Ok((
        Dataset::new(train, d.catalog.clone()),
        Dataset::new(test, d.catalog.clone()),
    ))
}
