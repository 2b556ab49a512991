use nilmag_cli::scenario::{AlgebraSpec, Checks, ExactSpec, ForceSpec, InitialSpec, SolverChoice, TimeSpec};
use nilmag_cli::Scenario;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, any::<f64>().prop_filter("finite", |x| x.is_finite())]
}

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(finite(), 3)
}

fn scenario() -> impl Strategy<Value = Scenario> {
    let algebra = prop_oneof![
        (1usize..4).prop_map(|n| AlgebraSpec::Preset(format!("heisenberg({n})"))),
        Just(AlgebraSpec::Preset("quaternionic(1)+abelian(2)".into())),
    ];
    let force = prop_oneof![
        Just(None),
        vec3().prop_map(|z| Some(ForceSpec::Exact(ExactSpec { z }))),
        vec3().prop_map(|u| Some(ForceSpec::Type2U(u))),
        prop::collection::vec(vec3(), 3).prop_map(|m| Some(ForceSpec::Matrix(m))),
    ];
    let initial = prop_oneof![
        Just(None),
        vec3().prop_map(|velocity| Some(InitialSpec::Velocity { velocity })),
        (vec3(), vec3()).prop_map(|(x0, z0)| Some(InitialSpec::Split { x0, z0 })),
    ];
    let solver = prop_oneof![
        Just(SolverChoice::Auto),
        Just(SolverChoice::Closedform),
        Just(SolverChoice::H3Type2),
        Just(SolverChoice::Oracle)
    ];
    (
        algebra,
        force,
        finite(),
        initial,
        prop::option::of(vec3()),
        0.0f64..1e3,
        1usize..5000,
        any::<bool>(),
        1e-15f64..1.0,
        solver,
    )
        .prop_map(|(algebra, force, charge, initial, start, t_max, samples, oracle, tolerance, solver)| Scenario {
            algebra,
            force,
            charge,
            initial,
            start,
            time: TimeSpec { t_max, samples },
            checks: Checks { oracle, tolerance },
            solver,
        })
}

proptest! {
    #[test]
    fn canonical_json_round_trips(s in scenario()) {
        let text = s.to_json();
        let back = Scenario::from_json(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_json(), text);
    }
}
