//! End-to-end run on a synthetic store: generate, split, train, sweep alpha.
//!
//! `cargo run --release -p pricepref-core --example pipeline -- [customers] [items] [seed]`

use std::time::Instant;

use pricepref::datagen::{describe, generate, GenConfig};
use pricepref::eval::{random_baseline_map, time_split, EvalContext};
use pricepref::{build_customer_profiles, mf, EvalOptions, HyperParams, Recommender, SplitSpec, TrainConfig};

fn main() -> pricepref::Result<()> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let customers = args.first().copied().unwrap_or(5_000) as usize;
    let items = args.get(1).copied().unwrap_or(1_000) as usize;
    let seed = args.get(2).copied().unwrap_or(42);

    let data = generate(&GenConfig::ds1_like(customers, items, seed))?;
    println!("{}", serde_json::to_string_pretty(&describe(&data)).unwrap());

    let (train, test) = time_split(&data, &SplitSpec::default())?;
    let t = Instant::now();
    let model = mf::fit(
        &train,
        &TrainConfig {
            seed,
            ..TrainConfig::default()
        },
    )?;
    println!("trained in {:.1?}", t.elapsed());

    let profiles = build_customer_profiles(&train)?;
    let rec = Recommender::new(&model, &profiles, &data.catalog, &train)?;
    let ctx = EvalContext::new(&rec, &test, EvalOptions::default())?;
    let random = random_baseline_map(&ctx, 0..20)?;
    println!("users evaluated: {}  random MAP@10: {random:.5}", ctx.n_users());
    for alpha in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        for beta in [-1.0, 0.0, 1.0] {
            let row = ctx.evaluate(HyperParams::new(alpha, beta)?)?;
            println!(
                "alpha={alpha:>4} beta={beta:>4}  P={:.5} R={:.5} MAP={:.5} PAH={:.4} hit_users={}",
                row.precision_at_k, row.recall_at_k, row.map_at_k, row.pah_at_k, row.n_hit_users
            );
        }
    }
    Ok(())
}
