//! Shared inputs for the criterion benchmarks in `benches/`.

use pricepref::datagen::{generate, GenConfig};
use pricepref::eval::time_split;
use pricepref::mf::fit;
use pricepref::{build_customer_profiles, Dataset, MfModel, PriceProfiles, SplitSpec, TrainConfig};

pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub model: MfModel,
    pub profiles: PriceProfiles,
}

/// Generated DS1-shaped data, split, with a briefly trained model.
pub fn prepare(customers: usize, items: usize, epochs: usize) -> Prepared {
    let data = generate(&GenConfig::ds1_like(customers, items, 42)).expect("generate");
    let (train, test) = time_split(&data, &SplitSpec::default()).expect("split");
    let model = fit(
        &train,
        &TrainConfig {
            epochs,
            ..TrainConfig::default()
        },
    )
    .expect("fit");
    let profiles = build_customer_profiles(&train).expect("profiles");
    Prepared {
        train,
        test,
        model,
        profiles,
    }
}
