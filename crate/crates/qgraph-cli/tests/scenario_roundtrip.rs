use proptest::prelude::*;

use qgraph_cli::scenario::{
    BoundarySpec, CutJson, EdgeJson, GraphSpec, Options, PotentialJson, Scenario, SplitJson, SplitModeJson, Sweep, VertexJson,
};

fn edge() -> impl Strategy<Value = EdgeJson> {
    (0.1f64..5.0, prop::collection::vec(0.01f64..0.99, 0..4), prop::collection::vec(-50.0f64..50.0, 4), any::<bool>())
        .prop_map(|(length, mut fr, vals, sampled)| {
            fr.sort_by(f64::total_cmp);
            fr.dedup();
            let potential = if sampled {
                let mut xs: Vec<f64> = fr.iter().map(|f| f * length).collect();
                xs.insert(0, 0.0);
                xs.push(length);
                PotentialJson::Sampled { points: xs.iter().zip(vals.iter().cycle()).map(|(x, v)| [*x, *v]).collect() }
            } else {
                PotentialJson::Steps { breaks: fr.iter().map(|f| f * length).collect(), values: vals[..=fr.len()].to_vec() }
            };
            EdgeJson { length, potential }
        })
}

fn vertex() -> impl Strategy<Value = VertexJson> {
    prop_oneof![
        Just(VertexJson::plain("dirichlet")),
        Just(VertexJson::plain("neumann")),
        Just(VertexJson::plain("kirchhoff")),
        prop::collection::vec(-3.0f64..3.0, 1..3).prop_map(|theta| VertexJson { kind: "robin".into(), theta }),
    ]
}

fn boundary() -> impl Strategy<Value = BoundarySpec> {
    prop_oneof![
        prop::sample::select(vec!["dirichlet", "neumann", "kirchhoff"])
            .prop_map(|n| BoundarySpec::Preset { name: n.into(), theta: Vec::new() }),
        (vertex(), vertex()).prop_map(|(origin, ends)| BoundarySpec::Composed { origin, ends }),
        prop::collection::vec(-2.0f64..2.0, 4).prop_map(|v| BoundarySpec::Matrices {
            alpha1: vec![vec![[v[0], v[1]]]],
            alpha2: vec![vec![[1.0, 0.0]]],
            beta1: vec![[v[2], 0.0]],
            beta2: vec![[v[3], 0.0]],
        }),
    ]
}

fn scenario() -> impl Strategy<Value = Scenario> {
    (
        prop::option::of("[a-z_]{1,12}"),
        prop::collection::vec(edge(), 1..4),
        boundary(),
        prop::option::of((0.05f64..0.95, 0.05f64..0.95)),
        (-20.0f64..10.0, 10.0f64..100.0, 0usize..5000),
        prop::option::of(1usize..100_000),
        prop::option::of(any::<u64>()),
    )
        .prop_map(|(name, edges, boundary, cut, (lo, hi, samples), grid, seed)| {
            let split = cut.map(|(a, b)| SplitJson {
                mode: if a > b { SplitModeJson::SameWire } else { SplitModeJson::Single },
                cuts: if a > b {
                    vec![CutJson { edge: 0, position: a * edges[0].length }, CutJson { edge: 0, position: b * edges[0].length }]
                } else {
                    vec![CutJson { edge: 0, position: a * edges[0].length }]
                },
            });
            Scenario {
                name,
                graph: GraphSpec { edges },
                boundary,
                split,
                sweep: Sweep { lambda_min: lo, lambda_max: hi, samples },
                options: Options { grid, seed },
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn serialize_parse_serialize_is_identity(s in scenario()) {
        let text = s.to_json();
        let back = Scenario::parse(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_json(), text);
    }
}
