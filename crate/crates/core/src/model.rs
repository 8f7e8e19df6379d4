//! Structural model types and the JSON model file format.
//!
//! A structural model abstracts an equation system to its incidence
//! pattern: which unknown variables occur in which equations (and whether
//! an occurrence is algebraic or differentiated), which known signals feed
//! each equation, and which fault labels are attached where. No functional
//! form is stored; the numeric companion lives in [`crate::linres`].
//!
//! The file format is a UTF-8 JSON document:
//!
//! ```json
//! {
//!   "name": "plant",
//!   "unknowns": ["x1", "x2"],
//!   "knowns": ["u1", "y1"],
//!   "faults": ["f1"],
//!   "equations": [
//!     {"id": "e1",
//!      "unknowns": [{"var": "x1", "diff": true}, {"var": "x2"}],
//!      "knowns": ["u1"],
//!      "faults": []}
//!   ]
//! }
//! ```
//!
//! `diff` defaults to `false`. An optional top-level `"linear"` block
//! carries per-equation coefficient maps and a noise covariance for
//! residual derivation; it is ignored by the structural analyses.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Which registry a variable belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Unknown,
    Known,
    Fault,
}

impl VarKind {
    fn label(self) -> &'static str {
        match self {
            VarKind::Unknown => "unknown",
            VarKind::Known => "known",
            VarKind::Fault => "fault",
        }
    }
}

/// A registered variable: id plus the registry it lives in. Kind is fixed
/// at model construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VariableRef {
    pub id: String,
    pub kind: VarKind,
}

/// How an unknown enters an equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Occurrence {
    Algebraic,
    Differentiated,
}

/// One unknown-variable occurrence inside an equation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incidence {
    pub var: String,
    pub occurrence: Occurrence,
}

/// One equation: its unknown incidences, known signals, and fault labels.
///
/// At most one incidence may be differentiated (semi-explicit form: a
/// differential equation defines exactly one derivative), and a variable
/// appears at most once per occurrence kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    id: String,
    incidences: Vec<Incidence>,
    knowns: Vec<String>,
    faults: Vec<String>,
}

impl Equation {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn incidences(&self) -> &[Incidence] {
        &self.incidences
    }

    pub fn knowns(&self) -> &[String] {
        &self.knowns
    }

    pub fn faults(&self) -> &[String] {
        &self.faults
    }

    /// True if some incidence is differentiated.
    pub fn is_differential(&self) -> bool {
        self.incidences
            .iter()
            .any(|i| i.occurrence == Occurrence::Differentiated)
    }
}

/// A canonical, duplicate-free set of equation ids.
///
/// Members are kept sorted lexicographically, so two sets are equal iff
/// they contain the same ids. The `Ord` instance orders first by size and
/// then lexicographically, which is the display order used everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct EquationSet {
    members: Vec<String>,
}

impl EquationSet {
    pub fn new<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut members: Vec<String> = ids.into_iter().map(Into::into).collect();
        members.sort();
        members.dedup();
        EquationSet { members }
    }

    pub fn empty() -> Self {
        EquationSet::default()
    }

    pub fn members(&self) -> &[String] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.members.binary_search_by(|m| m.as_str().cmp(id)).is_ok()
    }

    pub fn is_subset_of(&self, other: &EquationSet) -> bool {
        self.members.iter().all(|m| other.contains(m))
    }

    /// The set without one equation.
    pub fn without(&self, id: &str) -> EquationSet {
        EquationSet {
            members: self
                .members
                .iter()
                .filter(|m| m.as_str() != id)
                .cloned()
                .collect(),
        }
    }

    pub fn difference(&self, other: &EquationSet) -> EquationSet {
        EquationSet {
            members: self
                .members
                .iter()
                .filter(|m| !other.contains(m))
                .cloned()
                .collect(),
        }
    }

    pub fn union(&self, other: &EquationSet) -> EquationSet {
        EquationSet::new(self.members.iter().chain(other.members.iter()).cloned())
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(String::as_str)
    }
}

impl PartialOrd for EquationSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EquationSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.members.len(), &self.members).cmp(&(other.members.len(), &other.members))
    }
}

impl fmt::Display for EquationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.members.join(","))
    }
}

impl<S: Into<String>> FromIterator<S> for EquationSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        EquationSet::new(iter)
    }
}

/// A canonical, duplicate-free set of fault ids.
///
/// May be empty when produced by [`faults_of`]; nonempty whenever it acts
/// as the fault signature of a testable PSO set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FaultSignature {
    members: Vec<String>,
}

impl FaultSignature {
    pub fn new<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut members: Vec<String> = ids.into_iter().map(Into::into).collect();
        members.sort();
        members.dedup();
        FaultSignature { members }
    }

    pub fn empty() -> Self {
        FaultSignature::default()
    }

    pub fn members(&self) -> &[String] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.members.binary_search_by(|m| m.as_str().cmp(id)).is_ok()
    }

    pub fn is_subset_of(&self, other: &FaultSignature) -> bool {
        self.members.iter().all(|m| other.contains(m))
    }

    pub fn union(&self, other: &FaultSignature) -> FaultSignature {
        FaultSignature::new(self.members.iter().chain(other.members.iter()).cloned())
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(String::as_str)
    }
}

impl PartialOrd for FaultSignature {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FaultSignature {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.members.len(), &self.members).cmp(&(other.members.len(), &other.members))
    }
}

impl fmt::Display for FaultSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.members.join(","))
    }
}

impl<S: Into<String>> FromIterator<S> for FaultSignature {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        FaultSignature::new(iter)
    }
}

// ---------------------------------------------------------------------------
// File format DTOs
// ---------------------------------------------------------------------------

/// One unknown occurrence as written in the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidenceFile {
    pub var: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub diff: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// One equation as written in the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationFile {
    pub id: String,
    #[serde(default)]
    pub unknowns: Vec<IncidenceFile>,
    #[serde(default)]
    pub knowns: Vec<String>,
    #[serde(default)]
    pub faults: Vec<String>,
}

/// Per-equation linear coefficients: maps from variable id to coefficient
/// in the normalized form `0 = a·x + b·z + c·f + d·v`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearEquationFile {
    #[serde(default)]
    pub unknowns: BTreeMap<String, f64>,
    #[serde(default)]
    pub knowns: BTreeMap<String, f64>,
    #[serde(default)]
    pub faults: BTreeMap<String, f64>,
    #[serde(default)]
    pub noise: BTreeMap<String, f64>,
}

/// Optional numeric companion data for a linear static model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFile {
    /// Noise term ids, fixing the row/column order of `noise_cov`.
    pub noise: Vec<String>,
    pub noise_cov: Vec<Vec<f64>>,
    pub equations: BTreeMap<String, LinearEquationFile>,
}

/// The on-disk model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub name: String,
    #[serde(default)]
    pub unknowns: Vec<String>,
    #[serde(default)]
    pub knowns: Vec<String>,
    #[serde(default)]
    pub faults: Vec<String>,
    pub equations: Vec<EquationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearFile>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("model file serializes");
        out.push('\n');
        out
    }
}

// ---------------------------------------------------------------------------
// StructuralModel
// ---------------------------------------------------------------------------

/// A validated structural model. Immutable after construction; all
/// analyses take it by shared reference.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralModel {
    name: String,
    equations: Vec<Equation>,
    unknowns: Vec<String>,
    knowns: Vec<String>,
    faults: Vec<String>,

    // Derived lookups.
    eq_index: BTreeMap<String, usize>,
    unknown_index: BTreeMap<String, usize>,
    fault_index: BTreeMap<String, usize>,
    /// fault index -> index of its home equation.
    fault_home: Vec<usize>,
    /// Per equation: sorted, merged unknown indices (any occurrence kind).
    eq_unknowns: Vec<Vec<usize>>,
    /// Per equation: sorted unknown indices with an algebraic occurrence.
    eq_algebraic: Vec<Vec<usize>>,
    /// Per equation: the differentiated unknown, if any.
    eq_differentiated: Vec<Option<usize>>,
    /// Per equation: sorted fault indices.
    eq_faults: Vec<Vec<usize>>,
    /// Position -> rank of the id in lexicographic order. Canonical vertex
    /// order for the graph algorithms, independent of file order.
    eq_lex_rank: Vec<usize>,
    unknown_lex_rank: Vec<usize>,
}

fn register(kind: VarKind, ids: &[String]) -> Result<BTreeMap<String, usize>, Error> {
    let mut index = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        if id.is_empty() {
            return Err(Error::EmptyId);
        }
        if index.insert(id.clone(), i).is_some() {
            return Err(Error::DuplicateVariable {
                kind: kind.label(),
                id: id.clone(),
            });
        }
    }
    Ok(index)
}

impl StructuralModel {
    /// Validate a parsed model file and build the indexed model.
    pub fn from_file(file: &ModelFile) -> Result<Self, Error> {
        let unknown_index = register(VarKind::Unknown, &file.unknowns)?;
        let known_index = register(VarKind::Known, &file.knowns)?;
        let fault_index = register(VarKind::Fault, &file.faults)?;

        let mut equations = Vec::with_capacity(file.equations.len());
        let mut eq_index = BTreeMap::new();
        let mut eq_unknowns = Vec::new();
        let mut eq_algebraic = Vec::new();
        let mut eq_differentiated = Vec::new();
        let mut eq_faults = Vec::new();
        let mut fault_home: Vec<Option<usize>> = vec![None; file.faults.len()];
        let mut unknown_used = vec![false; file.unknowns.len()];

        for (pos, eq) in file.equations.iter().enumerate() {
            if eq.id.is_empty() {
                return Err(Error::EmptyId);
            }
            if eq_index.insert(eq.id.clone(), pos).is_some() {
                return Err(Error::DuplicateEquation(eq.id.clone()));
            }

            let mut merged = Vec::new();
            let mut algebraic = Vec::new();
            let mut differentiated = None;
            let mut seen: Vec<(usize, Occurrence)> = Vec::new();
            let mut incidences = Vec::with_capacity(eq.unknowns.len());
            for inc in &eq.unknowns {
                let &ix = unknown_index
                    .get(&inc.var)
                    .ok_or_else(|| Error::UndeclaredVariable {
                        equation: eq.id.clone(),
                        kind: "unknown",
                        id: inc.var.clone(),
                    })?;
                let occ = if inc.diff {
                    Occurrence::Differentiated
                } else {
                    Occurrence::Algebraic
                };
                if seen.contains(&(ix, occ)) {
                    return Err(Error::DuplicateIncidence {
                        equation: eq.id.clone(),
                        var: inc.var.clone(),
                    });
                }
                seen.push((ix, occ));
                match occ {
                    Occurrence::Differentiated => {
                        if differentiated.replace(ix).is_some() {
                            return Err(Error::MultipleDifferentiated {
                                equation: eq.id.clone(),
                            });
                        }
                    }
                    Occurrence::Algebraic => algebraic.push(ix),
                }
                merged.push(ix);
                unknown_used[ix] = true;
                incidences.push(Incidence {
                    var: inc.var.clone(),
                    occurrence: occ,
                });
            }
            merged.sort_unstable();
            merged.dedup();
            algebraic.sort_unstable();

            for k in &eq.knowns {
                if !known_index.contains_key(k) {
                    return Err(Error::UndeclaredVariable {
                        equation: eq.id.clone(),
                        kind: "known",
                        id: k.clone(),
                    });
                }
            }

            let mut faults = Vec::new();
            for fid in &eq.faults {
                let &fx = fault_index
                    .get(fid)
                    .ok_or_else(|| Error::UndeclaredVariable {
                        equation: eq.id.clone(),
                        kind: "fault",
                        id: fid.clone(),
                    })?;
                match fault_home[fx] {
                    Some(prev) => {
                        return Err(Error::FaultInMultipleEquations {
                            fault: fid.clone(),
                            first: file.equations[prev].id.clone(),
                            second: eq.id.clone(),
                        })
                    }
                    None => fault_home[fx] = Some(pos),
                }
                faults.push(fx);
            }
            faults.sort_unstable();
            faults.dedup();

            equations.push(Equation {
                id: eq.id.clone(),
                incidences,
                knowns: eq.knowns.clone(),
                faults: eq.faults.clone(),
            });
            eq_unknowns.push(merged);
            eq_algebraic.push(algebraic);
            eq_differentiated.push(differentiated);
            eq_faults.push(faults);
        }

        let fault_home = fault_home
            .into_iter()
            .enumerate()
            .map(|(fx, home)| home.ok_or_else(|| Error::UnplacedFault(file.faults[fx].clone())))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(ix) = unknown_used.iter().position(|u| !u) {
            return Err(Error::UnusedUnknown(file.unknowns[ix].clone()));
        }
        drop(known_index);

        let mut eq_lex_rank = vec![0; equations.len()];
        for (rank, &pos) in eq_index.values().enumerate() {
            eq_lex_rank[pos] = rank;
        }
        let mut unknown_lex_rank = vec![0; file.unknowns.len()];
        for (rank, &pos) in unknown_index.values().enumerate() {
            unknown_lex_rank[pos] = rank;
        }

        Ok(StructuralModel {
            name: file.name.clone(),
            equations,
            unknowns: file.unknowns.clone(),
            knowns: file.knowns.clone(),
            faults: file.faults.clone(),
            eq_index,
            unknown_index,
            fault_index,
            fault_home,
            eq_unknowns,
            eq_algebraic,
            eq_differentiated,
            eq_faults,
            eq_lex_rank,
            unknown_lex_rank,
        })
    }

    /// Rebuild the on-disk representation (without any linear block).
    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            name: self.name.clone(),
            unknowns: self.unknowns.clone(),
            knowns: self.knowns.clone(),
            faults: self.faults.clone(),
            equations: self
                .equations
                .iter()
                .map(|eq| EquationFile {
                    id: eq.id.clone(),
                    unknowns: eq
                        .incidences
                        .iter()
                        .map(|i| IncidenceFile {
                            var: i.var.clone(),
                            diff: i.occurrence == Occurrence::Differentiated,
                        })
                        .collect(),
                    knowns: eq.knowns.clone(),
                    faults: eq.faults.clone(),
                })
                .collect(),
            linear: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Equations in file order.
    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn unknowns(&self) -> &[String] {
        &self.unknowns
    }

    pub fn knowns(&self) -> &[String] {
        &self.knowns
    }

    pub fn faults(&self) -> &[String] {
        &self.faults
    }

    /// The set of all equation ids.
    pub fn all_equations(&self) -> EquationSet {
        EquationSet::new(self.equations.iter().map(|e| e.id.clone()))
    }

    /// All registered variables with their kinds, registry by registry.
    pub fn variables(&self) -> impl Iterator<Item = VariableRef> + '_ {
        let tag = |kind: VarKind| move |id: &String| VariableRef { id: id.clone(), kind };
        self.unknowns
            .iter()
            .map(tag(VarKind::Unknown))
            .chain(self.knowns.iter().map(tag(VarKind::Known)))
            .chain(self.faults.iter().map(tag(VarKind::Fault)))
    }

    /// The home equation of a fault.
    pub fn fault_home(&self, fault: &str) -> Result<&str, Error> {
        let &fx = self
            .fault_index
            .get(fault)
            .ok_or_else(|| Error::UnknownFault(fault.to_string()))?;
        Ok(&self.equations[self.fault_home[fx]].id)
    }

    pub(crate) fn eq_position(&self, id: &str) -> Result<usize, Error> {
        self.eq_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownEquation(id.to_string()))
    }

    pub(crate) fn unknown_id(&self, ix: usize) -> &str {
        &self.unknowns[ix]
    }

    pub(crate) fn equation_id(&self, ix: usize) -> &str {
        &self.equations[ix].id
    }

    pub(crate) fn eq_unknowns_idx(&self, eq: usize) -> &[usize] {
        &self.eq_unknowns[eq]
    }

    pub(crate) fn eq_algebraic_idx(&self, eq: usize) -> &[usize] {
        &self.eq_algebraic[eq]
    }

    pub(crate) fn eq_differentiated_idx(&self, eq: usize) -> Option<usize> {
        self.eq_differentiated[eq]
    }

    pub(crate) fn eq_faults_idx(&self, eq: usize) -> &[usize] {
        &self.eq_faults[eq]
    }

    pub(crate) fn eq_lex_rank(&self, eq: usize) -> usize {
        self.eq_lex_rank[eq]
    }

    /// Resolve a set of equation ids to positions, sorted numerically.
    pub(crate) fn resolve(&self, subset: &EquationSet) -> Result<Vec<usize>, Error> {
        let mut out: Vec<usize> = subset
            .iter()
            .map(|id| self.eq_position(id))
            .collect::<Result<_, _>>()?;
        out.sort_unstable();
        Ok(out)
    }

    pub(crate) fn subset_from_idx<I: IntoIterator<Item = usize>>(&self, idx: I) -> EquationSet {
        EquationSet::new(idx.into_iter().map(|i| self.equations[i].id.clone()))
    }

    /// Unknown positions occurring in the given equations (merged), sorted by id.
    pub(crate) fn unknowns_of_idx(&self, eqs: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.unknowns.len()];
        for &e in eqs {
            for &x in &self.eq_unknowns[e] {
                seen[x] = true;
            }
        }
        let mut out: Vec<usize> = (0..self.unknowns.len()).filter(|&x| seen[x]).collect();
        out.sort_by_key(|&x| self.unknown_lex_rank[x]);
        out
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Parse and validate a model file.
pub fn parse_model(text: &str) -> Result<StructuralModel, Error> {
    StructuralModel::from_file(&ModelFile::from_json(text)?)
}

/// Serialize a model back to the file format.
pub fn serialize_model(model: &StructuralModel) -> String {
    model.to_file().to_json()
}

/// Union of the fault labels over the member equations. May be empty.
pub fn faults_of(model: &StructuralModel, subset: &EquationSet) -> Result<FaultSignature, Error> {
    let eqs = model.resolve(subset)?;
    let mut out = Vec::new();
    for e in eqs {
        out.extend(model.equations[e].faults.iter().cloned());
    }
    Ok(FaultSignature::new(out))
}

/// The home equations of the given faults.
pub fn equations_of_faults(
    model: &StructuralModel,
    modes: &FaultSignature,
) -> Result<EquationSet, Error> {
    modes
        .iter()
        .map(|f| model.fault_home(f).map(str::to_string))
        .collect::<Result<Vec<_>, _>>()
        .map(EquationSet::new)
}

/// Partition of a subset into differential/non-differential equations and
/// of its unknowns into differentiated (X1) and purely algebraic (X2)
/// blocks. The split is relative to the subset: an unknown is in X1 iff
/// some member equation differentiates it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemiExplicitSplit {
    pub differential: EquationSet,
    pub non_differential: EquationSet,
    /// X1: unknowns differentiated by some member equation.
    pub differentiated_unknowns: Vec<String>,
    /// X2: unknowns of the subset with algebraic occurrences only.
    pub algebraic_unknowns: Vec<String>,
}

/// Classify a subset as a semi-explicit DAE relative to its own members.
pub fn classify_semi_explicit(
    model: &StructuralModel,
    subset: &EquationSet,
) -> Result<SemiExplicitSplit, Error> {
    let eqs = model.resolve(subset)?;
    let mut differential = Vec::new();
    let mut non_differential = Vec::new();
    let mut in_x1 = vec![false; model.unknowns.len()];
    for &e in &eqs {
        match model.eq_differentiated[e] {
            Some(x) => {
                in_x1[x] = true;
                differential.push(model.equations[e].id.clone());
            }
            None => non_differential.push(model.equations[e].id.clone()),
        }
    }
    let mut x1 = Vec::new();
    let mut x2 = Vec::new();
    for x in model.unknowns_of_idx(&eqs) {
        if in_x1[x] {
            x1.push(model.unknowns[x].clone());
        } else {
            x2.push(model.unknowns[x].clone());
        }
    }
    Ok(SemiExplicitSplit {
        differential: EquationSet::new(differential),
        non_differential: EquationSet::new(non_differential),
        differentiated_unknowns: x1,
        algebraic_unknowns: x2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata::{eq2_model, eq4_model, EQ2_JSON};

    #[test]
    fn parses_static_example_model() {
        let model = eq2_model();
        assert_eq!(model.equations().len(), 5);
        assert_eq!(model.unknowns(), ["x1", "x2"]);
        assert_eq!(model.faults(), ["f1", "f2"]);
        assert_eq!(model.fault_home("f1").unwrap(), "e4");
        assert_eq!(model.fault_home("f2").unwrap(), "e5");
        assert!(model.equations().iter().all(|e| !e.is_differential()));
        assert_eq!(model.variables().count(), 9);
        assert_eq!(
            model.variables().filter(|v| v.kind == VarKind::Known).count(),
            5
        );
    }

    #[test]
    fn parses_dae_example_model() {
        let model = eq4_model();
        assert_eq!(model.equations().len(), 6);
        assert_eq!(model.unknowns(), ["x1", "x2", "x3"]);
        assert_eq!(model.fault_home("f1").unwrap(), "e2");
        assert_eq!(model.fault_home("f2").unwrap(), "e4");
        assert_eq!(model.fault_home("f3").unwrap(), "e5");
        let diff: Vec<&str> = model
            .equations()
            .iter()
            .filter(|e| e.is_differential())
            .map(|e| e.id())
            .collect();
        assert_eq!(diff, ["e1", "e2", "e3"]);
    }

    #[test]
    fn rejects_fault_in_two_equations() {
        let text = r#"{
            "name": "bad",
            "unknowns": ["x"],
            "knowns": [],
            "faults": ["g"],
            "equations": [
                {"id": "e1", "unknowns": [{"var": "x"}], "faults": ["g"]},
                {"id": "e2", "unknowns": [{"var": "x"}], "faults": ["g"]}
            ]
        }"#;
        match parse_model(text) {
            Err(Error::FaultInMultipleEquations { fault, first, second }) => {
                assert_eq!(fault, "g");
                assert_eq!((first.as_str(), second.as_str()), ("e1", "e2"));
            }
            other => panic!("expected fault placement error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_two_differentiated_unknowns_in_one_equation() {
        let text = r#"{
            "name": "bad",
            "unknowns": ["x", "y"],
            "equations": [
                {"id": "e1", "unknowns": [{"var": "x", "diff": true}, {"var": "y", "diff": true}]}
            ]
        }"#;
        assert!(matches!(
            parse_model(text),
            Err(Error::MultipleDifferentiated { .. })
        ));
    }

    #[test]
    fn rejects_duplicate_ids_and_unused_unknowns() {
        let dup_eq = r#"{"name":"m","unknowns":["x"],"equations":[
            {"id":"e1","unknowns":[{"var":"x"}]},{"id":"e1","unknowns":[{"var":"x"}]}]}"#;
        assert!(matches!(
            parse_model(dup_eq),
            Err(Error::DuplicateEquation(_))
        ));

        let dup_var = r#"{"name":"m","unknowns":["x","x"],"equations":[
            {"id":"e1","unknowns":[{"var":"x"}]}]}"#;
        assert!(matches!(
            parse_model(dup_var),
            Err(Error::DuplicateVariable { .. })
        ));

        let unused = r#"{"name":"m","unknowns":["x","y"],"equations":[
            {"id":"e1","unknowns":[{"var":"x"}]}]}"#;
        assert!(matches!(parse_model(unused), Err(Error::UnusedUnknown(_))));

        let undeclared = r#"{"name":"m","unknowns":["x"],"equations":[
            {"id":"e1","unknowns":[{"var":"z"}]}]}"#;
        assert!(matches!(
            parse_model(undeclared),
            Err(Error::UndeclaredVariable { .. })
        ));
    }

    #[test]
    fn syntax_errors_report_position() {
        match parse_model("{\n  \"name\": ") {
            Err(Error::Syntax { line, .. }) => assert!(line >= 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn allows_same_variable_algebraic_and_differentiated() {
        // A differential equation may reference both the derivative and the
        // value of the same unknown.
        let model = eq4_model();
        let e1 = &model.equations()[0];
        assert_eq!(e1.id(), "e1");
        let x1_occurrences: Vec<Occurrence> = e1
            .incidences()
            .iter()
            .filter(|i| i.var == "x1")
            .map(|i| i.occurrence)
            .collect();
        assert!(x1_occurrences.contains(&Occurrence::Differentiated));
        assert!(x1_occurrences.contains(&Occurrence::Algebraic));
    }

    #[test]
    fn round_trips_through_the_file_format() {
        let model = eq4_model();
        let again = parse_model(&serialize_model(&model)).unwrap();
        assert_eq!(model, again);
    }

    #[test]
    fn faults_of_matches_example_systems() {
        let m2 = eq2_model();
        let sig = faults_of(&m2, &EquationSet::new(["e1", "e2", "e3", "e5"])).unwrap();
        assert_eq!(sig, FaultSignature::new(["f2"]));
        let none = faults_of(&m2, &EquationSet::new(["e1", "e2", "e3"])).unwrap();
        assert!(none.is_empty());

        let m4 = eq4_model();
        let all = faults_of(&m4, &m4.all_equations()).unwrap();
        assert_eq!(all, FaultSignature::new(["f1", "f2", "f3"]));
    }

    #[test]
    fn faults_of_rejects_unknown_equation() {
        let m2 = eq2_model();
        assert!(matches!(
            faults_of(&m2, &EquationSet::new(["e9"])),
            Err(Error::UnknownEquation(_))
        ));
    }

    #[test]
    fn equations_of_faults_examples() {
        let m2 = eq2_model();
        assert_eq!(
            equations_of_faults(&m2, &FaultSignature::new(["f1"])).unwrap(),
            EquationSet::new(["e4"])
        );
        let m4 = eq4_model();
        assert_eq!(
            equations_of_faults(&m4, &FaultSignature::new(["f2", "f3"])).unwrap(),
            EquationSet::new(["e4", "e5"])
        );
        assert_eq!(
            equations_of_faults(&m4, &FaultSignature::empty()).unwrap(),
            EquationSet::empty()
        );
        assert!(matches!(
            equations_of_faults(&m2, &FaultSignature::new(["nope"])),
            Err(Error::UnknownFault(_))
        ));
    }

    #[test]
    fn semi_explicit_split_examples() {
        let m4 = eq4_model();

        let s = classify_semi_explicit(&m4, &EquationSet::new(["e1", "e2", "e3", "e4", "e6"]))
            .unwrap();
        assert_eq!(s.differential, EquationSet::new(["e1", "e2", "e3"]));
        assert_eq!(s.non_differential, EquationSet::new(["e4", "e6"]));
        assert_eq!(s.differentiated_unknowns, ["x1", "x2", "x3"]);
        assert!(s.algebraic_unknowns.is_empty());

        let s = classify_semi_explicit(&m4, &EquationSet::new(["e1", "e3", "e4", "e6"])).unwrap();
        assert_eq!(s.differentiated_unknowns, ["x1", "x3"]);
        assert_eq!(s.algebraic_unknowns, ["x2"]);

        let s = classify_semi_explicit(&m4, &EquationSet::new(["e4", "e5", "e6"])).unwrap();
        assert!(s.differential.is_empty());
        assert!(s.differentiated_unknowns.is_empty());
        assert_eq!(s.algebraic_unknowns, ["x1", "x3"]);

        let s = classify_semi_explicit(&m4, &EquationSet::empty()).unwrap();
        assert!(s.differential.is_empty() && s.non_differential.is_empty());
        assert!(s.differentiated_unknowns.is_empty() && s.algebraic_unknowns.is_empty());
    }

    #[test]
    fn equation_set_is_canonical() {
        let a = EquationSet::new(["e2", "e1", "e2"]);
        let b = EquationSet::new(["e1", "e2"]);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "{e1,e2}");
        // Order: by size first, then lexicographic.
        assert!(EquationSet::new(["e9"]) < EquationSet::new(["e1", "e2"]));
    }

    #[test]
    fn linear_block_survives_file_parsing() {
        let file = ModelFile::from_json(EQ2_JSON).unwrap();
        let lin = file.linear.expect("linear block present");
        assert_eq!(lin.noise.len(), 5);
        assert_eq!(lin.noise_cov.len(), 5);
        assert!(lin.equations.contains_key("e5"));
    }
}
