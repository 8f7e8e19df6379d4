//! Enumeration of redundant submodels and the fault analyses built on
//! them.
//!
//! The central routine is [`find_rg`]: starting from the largest testable
//! PSO subset of the model, it alternately removes one fault-carrying
//! equation and re-takes the largest testable subset, collecting every set
//! reached with a nonempty fault signature. Each result is the unique
//! largest testable PSO set for its signature (a residual generation set),
//! and the signatures obtained are exactly the fault signatures realizable
//! under the chosen operator. With the unrestricted `plus` operator the
//! same recursion enumerates the test equation supports, whose
//! inclusion-minimal elements are the MTESs.
//!
//! Signatures that are not unions of other signatures are join-irreducible
//! in the signature semilattice; [`find_irg`] marks them. Every brute-force
//! counterpart enumerates the full subset lattice and exists to check the
//! recursive algorithms, not to be fast.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Error;
use crate::graph::{is_pso_idx, overdetermined_part, redundancy};
use crate::model::{equations_of_faults, faults_of, EquationSet, FaultSignature, StructuralModel};
use crate::operators::{mstar, TestabilityOperator};

/// A residual generation set: the unique largest testable PSO set carrying
/// its fault signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgResult {
    pub set: EquationSet,
    pub signature: FaultSignature,
    pub redundancy: usize,
    /// True when the signature is not a union of the other signatures in
    /// the collection this result belongs to. Assigned by [`find_irg`].
    pub irreducible: bool,
}

/// All MSO subsets of the overdetermined part of `subset`.
///
/// Recursion: a PSO set with redundancy one is emitted; otherwise each
/// one-equation removal is reduced to its overdetermined part and
/// explored. Results are deduplicated and sorted by (size, ids).
pub fn find_msos(
    model: &StructuralModel,
    subset: &EquationSet,
) -> Result<Vec<EquationSet>, Error> {
    let root = overdetermined_part(model, subset)?;
    let mut out = BTreeSet::new();
    let mut visited = BTreeSet::new();
    if !root.is_empty() {
        mso_recurse(model, root, &mut visited, &mut out)?;
    }
    Ok(out.into_iter().collect())
}

fn mso_recurse(
    model: &StructuralModel,
    m: EquationSet,
    visited: &mut BTreeSet<EquationSet>,
    out: &mut BTreeSet<EquationSet>,
) -> Result<(), Error> {
    if !visited.insert(m.clone()) {
        return Ok(());
    }
    if redundancy(model, &m)? == 1 {
        out.insert(m);
        return Ok(());
    }
    for e in m.iter().map(str::to_string).collect::<Vec<_>>() {
        let reduced = overdetermined_part(model, &m.without(&e))?;
        mso_recurse(model, reduced, visited, out)?;
    }
    Ok(())
}

/// All residual generation sets of the model under the given operator,
/// sorted by (size, ids). The `irreducible` flags are left unset; apply
/// [`find_irg`] to compute them.
pub fn find_rg(
    model: &StructuralModel,
    op: &dyn TestabilityOperator,
) -> Result<Vec<RgResult>, Error> {
    let root = mstar(model, &model.all_equations(), op)?;
    let mut found = BTreeSet::new();
    if !faults_of(model, &root)?.is_empty() {
        found.insert(root.clone());
        rg_recurse(model, op, &root, &mut found)?;
    }
    let mut results = Vec::with_capacity(found.len());
    let mut signatures = BTreeSet::new();
    for set in found {
        let signature = faults_of(model, &set)?;
        if !signatures.insert(signature.clone()) {
            return Err(Error::DuplicateSignature(signature));
        }
        let redundancy = redundancy(model, &set)?;
        results.push(RgResult {
            set,
            signature,
            redundancy,
            irreducible: false,
        });
    }
    Ok(results)
}

fn rg_recurse(
    model: &StructuralModel,
    op: &dyn TestabilityOperator,
    m: &EquationSet,
    found: &mut BTreeSet<EquationSet>,
) -> Result<(), Error> {
    // Candidates for removal are the fault-carrying member equations, in
    // canonical order.
    let fault_eqs: Vec<String> = m
        .iter()
        .filter(|id| {
            let e = model.eq_position(id).expect("member resolves");
            !model.eq_faults_idx(e).is_empty()
        })
        .map(str::to_string)
        .collect();
    for e in fault_eqs {
        let reduced = mstar(model, &m.without(&e), op)?;
        if faults_of(model, &reduced)?.is_empty() {
            continue;
        }
        // Revisits are collapsed here; an already-recorded set has already
        // been expanded.
        if found.insert(reduced.clone()) {
            rg_recurse(model, op, &reduced, found)?;
        }
    }
    Ok(())
}

/// The minimal test equation supports of the model: the residual
/// generation sets of the unrestricted operator, filtered down to the
/// inclusion-minimal ones.
pub fn find_mtes(model: &StructuralModel) -> Result<Vec<EquationSet>, Error> {
    let tes: Vec<EquationSet> = find_rg(model, &crate::operators::Plus)?
        .into_iter()
        .map(|r| r.set)
        .collect();
    Ok(minimal_sets(tes))
}

fn minimal_sets(sets: Vec<EquationSet>) -> Vec<EquationSet> {
    let mut out: Vec<EquationSet> = sets
        .iter()
        .filter(|s| !sets.iter().any(|t| t != *s && t.is_subset_of(s)))
        .cloned()
        .collect();
    out.sort();
    out
}

/// Recompute the irreducibility flags of one result collection.
///
/// A signature is reducible iff it equals the union of the other
/// signatures contained in it. Errors on duplicate signatures, and checks
/// that every signature is covered by the irreducible ones.
pub fn find_irg(results: &[RgResult]) -> Result<Vec<RgResult>, Error> {
    let signatures: Vec<&FaultSignature> = results.iter().map(|r| &r.signature).collect();
    for (i, a) in signatures.iter().enumerate() {
        if signatures[i + 1..].contains(a) {
            return Err(Error::DuplicateSignature((*a).clone()));
        }
    }
    let union_of_contained = |target: &FaultSignature| {
        signatures
            .iter()
            .filter(|&&s| s != target && s.is_subset_of(target))
            .fold(FaultSignature::empty(), |acc, s| acc.union(s))
    };
    let mut out: Vec<RgResult> = results
        .iter()
        .map(|r| RgResult {
            irreducible: union_of_contained(&r.signature) != r.signature,
            ..r.clone()
        })
        .collect();
    out.sort_by(|a, b| a.set.cmp(&b.set));

    // Every signature must be a union of irreducible signatures.
    for r in &out {
        let mut cover = FaultSignature::empty();
        for s in out
            .iter()
            .filter(|s| s.irreducible && s.signature.is_subset_of(&r.signature))
        {
            cover = cover.union(&s.signature);
        }
        if cover != r.signature {
            return Err(Error::SignatureCoverage(r.signature.clone()));
        }
    }
    Ok(out)
}

/// Faults included in the largest testable PSO subset of the model.
pub fn detectable_faults(
    model: &StructuralModel,
    op: &dyn TestabilityOperator,
) -> Result<FaultSignature, Error> {
    let m = mstar(model, &model.all_equations(), op)?;
    faults_of(model, &m)
}

/// Outcome of one isolability query between two fault modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsolabilityVerdict {
    pub from_mode: FaultSignature,
    pub wrt_mode: FaultSignature,
    pub isolable: bool,
    /// Home equation of a `from_mode` fault surviving inside the largest
    /// testable subset once the `wrt_mode` equations are removed.
    pub witness: Option<String>,
}

/// Is `from_mode` isolable from `wrt_mode`? True iff some fault of
/// `from_mode` keeps its home equation inside the largest testable PSO
/// subset of the model with the `wrt_mode` home equations removed.
pub fn isolability(
    model: &StructuralModel,
    op: &dyn TestabilityOperator,
    from_mode: &FaultSignature,
    wrt_mode: &FaultSignature,
) -> Result<IsolabilityVerdict, Error> {
    if from_mode.is_empty() || wrt_mode.is_empty() {
        return Err(Error::EmptyFaultMode);
    }
    let removed = equations_of_faults(model, wrt_mode)?;
    let rest = model.all_equations().difference(&removed);
    let reachable = mstar(model, &rest, op)?;
    let mut witness = None;
    for f in from_mode.iter() {
        let home = model.fault_home(f)?;
        if reachable.contains(home) {
            witness = Some(home.to_string());
            break;
        }
    }
    Ok(IsolabilityVerdict {
        from_mode: from_mode.clone(),
        wrt_mode: wrt_mode.clone(),
        isolable: witness.is_some(),
        witness,
    })
}

/// Single-fault isolability over all ordered pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsolabilityMatrix {
    pub faults: Vec<String>,
    /// `grid[i][j]`: {faults[i]} isolable from {faults[j]}.
    pub grid: Vec<Vec<bool>>,
}

pub fn isolability_matrix(
    model: &StructuralModel,
    op: &dyn TestabilityOperator,
) -> Result<IsolabilityMatrix, Error> {
    let mut faults: Vec<String> = model.faults().to_vec();
    faults.sort();
    let mut grid = Vec::with_capacity(faults.len());
    for fi in &faults {
        let mut row = Vec::with_capacity(faults.len());
        for fj in &faults {
            let verdict = isolability(
                model,
                op,
                &FaultSignature::new([fi.clone()]),
                &FaultSignature::new([fj.clone()]),
            )?;
            row.push(verdict.isolable);
        }
        grid.push(row);
    }
    Ok(IsolabilityMatrix { faults, grid })
}

// ---------------------------------------------------------------------------
// Brute-force oracles
// ---------------------------------------------------------------------------

fn enumerate_subsets(
    model: &StructuralModel,
    subset: &EquationSet,
    bound: usize,
) -> Result<(Vec<usize>, usize), Error> {
    let eqs = model.resolve(subset)?;
    let n = eqs.len();
    if n > bound {
        return Err(Error::OracleBoundExceeded { size: n, bound });
    }
    Ok((eqs, n))
}

fn mask_to_idx(eqs: &[usize], mask: u64) -> Vec<usize> {
    eqs.iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, &e)| e)
        .collect()
}

/// All residual generation sets by exhaustion: group the testable PSO
/// subsets with nonempty signature by signature and take each group's
/// union, verifying that the union stays in its group.
pub fn brute_force_rg(
    model: &StructuralModel,
    op: &dyn TestabilityOperator,
    bound: usize,
) -> Result<Vec<RgResult>, Error> {
    let (eqs, n) = enumerate_subsets(model, &model.all_equations(), bound)?;
    let mut groups: BTreeMap<FaultSignature, u64> = BTreeMap::new();
    for mask in 1u64..(1u64 << n) {
        let sub = mask_to_idx(&eqs, mask);
        if !is_pso_idx(model, &sub) {
            continue;
        }
        let set = model.subset_from_idx(sub.iter().copied());
        if !op.is_testable(model, &set)? {
            continue;
        }
        let signature = faults_of(model, &set)?;
        if signature.is_empty() {
            continue;
        }
        *groups.entry(signature).or_insert(0) |= mask;
    }
    let mut out = Vec::with_capacity(groups.len());
    for (signature, union_mask) in groups {
        let union_idx = mask_to_idx(&eqs, union_mask);
        let set = model.subset_from_idx(union_idx.iter().copied());
        let ok = is_pso_idx(model, &union_idx)
            && op.is_testable(model, &set)?
            && faults_of(model, &set)? == signature;
        if !ok {
            return Err(Error::UnionClosureViolation {
                operator: op.name().to_string(),
                union: set,
            });
        }
        let redundancy = redundancy(model, &set)?;
        out.push(RgResult {
            set,
            signature,
            redundancy,
            irreducible: false,
        });
    }
    out.sort_by(|a, b| a.set.cmp(&b.set));
    Ok(out)
}

/// All MSO subsets by exhaustion: the PSO subsets with no PSO proper
/// subset, checked pairwise on the enumerated collection.
pub fn brute_force_msos(
    model: &StructuralModel,
    subset: &EquationSet,
    bound: usize,
) -> Result<Vec<EquationSet>, Error> {
    let (eqs, n) = enumerate_subsets(model, subset, bound)?;
    let mut pso_masks = Vec::new();
    for mask in 1u64..(1u64 << n) {
        if is_pso_idx(model, &mask_to_idx(&eqs, mask)) {
            pso_masks.push(mask);
        }
    }
    let mut out: Vec<EquationSet> = pso_masks
        .iter()
        .filter(|&&m| {
            !pso_masks
                .iter()
                .any(|&p| p != m && p & m == p)
        })
        .map(|&m| model.subset_from_idx(mask_to_idx(&eqs, m)))
        .collect();
    out.sort();
    Ok(out)
}

/// All test equation supports by exhaustion: PSO subsets with nonempty
/// signature that are maximal within their signature group.
pub fn brute_force_tes(
    model: &StructuralModel,
    bound: usize,
) -> Result<Vec<(EquationSet, FaultSignature)>, Error> {
    let (eqs, n) = enumerate_subsets(model, &model.all_equations(), bound)?;
    let mut groups: BTreeMap<FaultSignature, Vec<u64>> = BTreeMap::new();
    for mask in 1u64..(1u64 << n) {
        let sub = mask_to_idx(&eqs, mask);
        if !is_pso_idx(model, &sub) {
            continue;
        }
        let signature = faults_of(model, &model.subset_from_idx(sub.iter().copied()))?;
        if signature.is_empty() {
            continue;
        }
        groups.entry(signature).or_default().push(mask);
    }
    let mut out = Vec::new();
    for (signature, masks) in groups {
        for &m in &masks {
            if !masks.iter().any(|&p| p != m && p & m == m) {
                out.push((
                    model.subset_from_idx(mask_to_idx(&eqs, m)),
                    signature.clone(),
                ));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Inclusion-minimal elements of [`brute_force_tes`].
pub fn brute_force_mtes(model: &StructuralModel, bound: usize) -> Result<Vec<EquationSet>, Error> {
    let tes = brute_force_tes(model, bound)?
        .into_iter()
        .map(|(s, _)| s)
        .collect();
    Ok(minimal_sets(tes))
}
