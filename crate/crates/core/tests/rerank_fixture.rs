//! Re-ranking a hand-built two-factor model. Expected orders and scores were
//! enumerated offline at 30 significant digits.

use pricepref::domain::IdIndex;
use pricepref::{
    build_customer_profiles, Action, CustomerId, Dataset, HyperParams, Interaction, ItemId, ItemRecord, MfModel,
    ModelParams, Recommender, TrainConfig,
};

struct Fixture {
    model: MfModel,
    train: Dataset,
}

fn fixture() -> Fixture {
    // id, factors, bias, retail, price
    let items: [(&str, [f64; 2], f64, f64, f64); 7] = [
        ("a", [0.3, 0.1], 0.0, 40.0, 30.0),
        ("b", [-0.1, 0.2], 0.1, 80.0, 50.0),
        ("c", [0.5, -0.3], 0.2, 20.0, 18.0),
        ("d", [0.2, 0.4], 0.3, 150.0, 60.0),
        ("e", [-0.4, 0.1], 0.5, 60.0, 20.0),
        ("f", [0.1, -0.5], -0.1, 35.0, 30.0),
        ("g", [0.6, 0.2], -0.2, 95.0, 90.0),
    ];
    let catalog = Dataset::catalog_from_records(items.iter().map(|&(id, _, _, r, p)| ItemRecord::new(id, r, p)));
    // u1 bought a and b, so their price level is 60 and they are not re-recommended.
    let train = Dataset::new(
        vec![
            Interaction::new("u1", "a", Action::Purchase, 1),
            Interaction::new("u1", "b", Action::Purchase, 2),
            Interaction::new("u1", "c", Action::View, 3),
        ],
        catalog,
    );
    let model = MfModel {
        params: ModelParams {
            dim: 2,
            customer_factors: vec![0.4, -0.2],
            item_factors: items.iter().flat_map(|t| t.1).collect(),
            customer_bias: vec![0.1],
            item_bias: items.iter().map(|t| t.2).collect(),
        },
        customers: IdIndex::from_ids([CustomerId::from("u1")]),
        items: IdIndex::from_ids(items.iter().map(|t| ItemId::from(t.0))),
        config: TrainConfig::default(),
    };
    Fixture { model, train }
}

#[test]
fn orders_and_scores_match_enumeration() {
    let fx = fixture();
    let profiles = build_customer_profiles(&fx.train).unwrap();
    assert_eq!(profiles.get(&"u1".into()), 60.0);
    let rec = Recommender::new(&fx.model, &profiles, &fx.train.catalog, &fx.train).unwrap();

    let cases: [(f64, f64, &str, [f64; 5]); 8] = [
        (
            0.0,
            0.0,
            "cedfg",
            [
                1.2729050805631327,
                1.2069664997294526,
                1.197375320224904,
                1.069885890316429,
                1.04995837495788,
            ],
        ),
        (
            1.0,
            0.0,
            "edcfg",
            [
                1.4768188816869682,
                1.4195290704312994,
                1.299_249_560_181_16,
                1.102_355_771_799_933,
                1.0610823159668643,
            ],
        ),
        (
            -1.0,
            0.0,
            "cfgde",
            [
                1.2476077263628535,
                1.0392740796308529,
                1.0390652515975827,
                1.0353455941117803,
                1.020495930439082,
            ],
        ),
        (
            0.0,
            1.0,
            "degcf",
            [
                1.4195290704312994,
                1.2069664997294526,
                1.146_171_228_583_871,
                1.0196351511641458,
                0.960_693_345_628_824_9,
            ],
        ),
        (
            0.0,
            -1.0,
            "cfedg",
            [
                1.6935773275934493,
                1.2070831340064887,
                1.2069664997294526,
                1.0353455941117803,
                0.968_647_375_493_431,
            ],
        ),
        (
            1.0,
            1.0,
            "degcf",
            [
                1.6416828206376948,
                1.4768188816869682,
                1.1572951695928554,
                1.0459796307821732,
                0.993_163_227_112_329_1,
            ],
        ),
        (
            -1.0,
            -1.0,
            "cfegd",
            [
                1.6682799733931701,
                1.1764713233209127,
                1.020495930439082,
                0.957_754_252_133_133_7,
                0.873_315_867_998_656_7,
            ],
        ),
        (
            0.5,
            -0.5,
            "cedfg",
            [
                1.469_741_034_991_342,
                1.3294608151618576,
                1.2123131479880258,
                1.1505691636505598,
                1.0131263048739283,
            ],
        ),
    ];
    for (alpha, beta, order, scores) in cases {
        let out = rec
            .recommend(&"u1".into(), HyperParams::new(alpha, beta).unwrap(), 10)
            .unwrap();
        assert!(!out.cold_start);
        let got: String = out.items.iter().map(|s| s.item_id.as_str()).collect();
        assert_eq!(got, order, "alpha={alpha} beta={beta}");
        for (item, want) in out.items.iter().zip(scores) {
            assert!(
                (item.final_score - want).abs() < 1e-12,
                "{alpha},{beta} {}: {}",
                item.item_id,
                item.final_score
            );
        }
    }
}

#[test]
fn truncation_keeps_the_prefix() {
    let fx = fixture();
    let profiles = build_customer_profiles(&fx.train).unwrap();
    let rec = Recommender::new(&fx.model, &profiles, &fx.train.catalog, &fx.train).unwrap();
    let h = HyperParams::new(1.0, 0.0).unwrap();
    let top2: Vec<_> = rec.recommend(&"u1".into(), h, 2).unwrap().items;
    let all: Vec<_> = rec.recommend(&"u1".into(), h, 100).unwrap().items;
    assert_eq!(all.len(), 5);
    assert_eq!(top2[..], all[..2]);
}

#[test]
fn unknown_customer_uses_item_bias_and_global_price_level() {
    let fx = fixture();
    let profiles = build_customer_profiles(&fx.train).unwrap();
    let rec = Recommender::new(&fx.model, &profiles, &fx.train.catalog, &fx.train).unwrap();
    let out = rec.recommend_baseline(&"stranger".into(), 10).unwrap();
    assert!(out.cold_start);
    // Nothing is excluded, and the order is the item-bias order.
    let got: String = out.items.iter().map(|s| s.item_id.as_str()).collect();
    assert_eq!(got, "edcbafg");
    assert_eq!(profiles.get(&"stranger".into()), 60.0);
}
