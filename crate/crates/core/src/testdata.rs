//! Fixtures shared by the unit tests: the two shipped example models and
//! the exactly determined three-state ODE.

use crate::model::{parse_model, StructuralModel};

pub(crate) const EQ2_JSON: &str = include_str!("../../../models/eq2.json");
pub(crate) const EQ4_JSON: &str = include_str!("../../../models/eq4.json");

/// Five static equations over two unknowns, faults f1 in e4 and f2 in e5.
pub(crate) fn eq2_model() -> StructuralModel {
    parse_model(EQ2_JSON).expect("eq2.json is valid")
}

/// Six-equation ODE system over three states, faults f1/f2/f3 in e2/e4/e5.
pub(crate) fn eq4_model() -> StructuralModel {
    parse_model(EQ4_JSON).expect("eq4.json is valid")
}

/// Three coupled ODEs with no measurements: exactly determined, no
/// redundancy at all.
pub(crate) fn ode3_model() -> StructuralModel {
    parse_model(
        r#"{
        "name": "ode-three-state",
        "unknowns": ["x1", "x2", "x3"],
        "knowns": [],
        "faults": [],
        "equations": [
            {"id": "e1", "unknowns": [{"var": "x1", "diff": true}, {"var": "x1"}, {"var": "x3"}]},
            {"id": "e2", "unknowns": [{"var": "x2", "diff": true}, {"var": "x2"}, {"var": "x3"}]},
            {"id": "e3", "unknowns": [{"var": "x3", "diff": true}, {"var": "x1"}]}
        ]
    }"#,
    )
    .expect("three-state ODE is valid")
}
