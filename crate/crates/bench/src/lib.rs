//! Synthetic model builders shared by the benchmarks.

use structdiag_core::model::{EquationFile, IncidenceFile, ModelFile};
use structdiag_core::StructuralModel;

/// A chain of integrators with faulty sensors spread along it:
/// `n` state equations coupling each state to its predecessor, plus
/// `sensors` measurement equations (every one carrying a fault) placed at
/// evenly spaced states ending at the last one, so the whole model is
/// overdetermined. Redundancy equals the sensor count.
pub fn ladder(states: usize, sensors: usize) -> StructuralModel {
    assert!(states >= sensors && sensors >= 1);
    let unknowns: Vec<String> = (1..=states).map(|i| format!("x{i:02}")).collect();
    let faults: Vec<String> = (1..=sensors).map(|j| format!("f{j:02}")).collect();
    let knowns: Vec<String> = (1..=sensors).map(|j| format!("y{j:02}")).collect();

    let mut equations = Vec::new();
    for i in 1..=states {
        let mut incidences = vec![
            IncidenceFile {
                var: format!("x{i:02}"),
                diff: true,
            },
            IncidenceFile {
                var: format!("x{i:02}"),
                diff: false,
            },
        ];
        if i > 1 {
            incidences.push(IncidenceFile {
                var: format!("x{:02}", i - 1),
                diff: false,
            });
        }
        equations.push(EquationFile {
            id: format!("e{i:02}"),
            unknowns: incidences,
            knowns: vec![],
            faults: vec![],
        });
    }
    for j in 1..=sensors {
        let target = j * states / sensors;
        equations.push(EquationFile {
            id: format!("m{j:02}"),
            unknowns: vec![IncidenceFile {
                var: format!("x{target:02}"),
                diff: false,
            }],
            knowns: vec![format!("y{j:02}")],
            faults: vec![format!("f{j:02}")],
        });
    }

    StructuralModel::from_file(&ModelFile {
        name: format!("ladder-{states}-{sensors}"),
        unknowns,
        knowns,
        faults,
        equations,
        linear: None,
    })
    .expect("ladder model is valid")
}
