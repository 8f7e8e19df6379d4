//! Testability operators: pluggable structural predicates restricting
//! which PSO sets can actually be turned into residuals, and the operator
//! that extracts the largest testable PSO subset of a model.
//!
//! Three operators are built in:
//!
//! * `plus` — every PSO set is testable; the largest testable subset is
//!   just the overdetermined part.
//! * `backsub` — unknowns must be computable by sequential
//!   back-substitution: repeatedly solve an equation that contains exactly
//!   one unknown not computed yet.
//! * `lowindex` — the subset, read as a semi-explicit DAE, must have low
//!   structural differential index: every purely algebraic unknown is
//!   coverable by a matching into non-differential member equations using
//!   algebraic occurrences only.
//!
//! Third-party operators implement [`TestabilityOperator`] and register by
//! name. An operator that cannot name the unknowns blocking testability is
//! evaluated through the subset-enumeration oracle instead.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::Error;
use crate::graph::{self, dm_parts, is_pso_idx, overdetermined_part};
use crate::model::{EquationSet, StructuralModel};

/// Subsets larger than this are rejected by the brute-force oracles.
pub const DEFAULT_ORACLE_BOUND: usize = 16;

/// A structural testability characterization plus, optionally, the
/// blocked-unknown analysis that drives the largest-testable-subset fixed
/// point.
pub trait TestabilityOperator: Send + Sync {
    fn name(&self) -> &str;

    /// The testability predicate. Only called on PSO sets.
    fn is_testable(&self, model: &StructuralModel, subset: &EquationSet) -> Result<bool, Error>;

    /// The unknowns obstructing testability of a PSO set; empty means
    /// testable. Returning `None` opts out of the structural fixed point:
    /// [`mstar`] then falls back to [`brute_force_mstar`].
    fn blocked_unknowns(
        &self,
        _model: &StructuralModel,
        _subset: &EquationSet,
    ) -> Result<Option<Vec<String>>, Error> {
        Ok(None)
    }
}

/// The unrestricted operator: every PSO set is testable.
#[derive(Debug, Clone, Copy, Default)]
pub struct Plus;

impl TestabilityOperator for Plus {
    fn name(&self) -> &str {
        "plus"
    }

    fn is_testable(&self, _model: &StructuralModel, _subset: &EquationSet) -> Result<bool, Error> {
        Ok(true)
    }

    fn blocked_unknowns(
        &self,
        _model: &StructuralModel,
        _subset: &EquationSet,
    ) -> Result<Option<Vec<String>>, Error> {
        Ok(Some(Vec::new()))
    }
}

/// Sequential back-substitution: all unknowns must be reachable by the
/// singleton-propagation closure.
#[derive(Debug, Clone, Copy, Default)]
pub struct BackSubstitution;

impl TestabilityOperator for BackSubstitution {
    fn name(&self) -> &str {
        "backsub"
    }

    fn is_testable(&self, model: &StructuralModel, subset: &EquationSet) -> Result<bool, Error> {
        Ok(backsub_blocked_idx(model, &model.resolve(subset)?).is_empty())
    }

    fn blocked_unknowns(
        &self,
        model: &StructuralModel,
        subset: &EquationSet,
    ) -> Result<Option<Vec<String>>, Error> {
        let blocked = backsub_blocked_idx(model, &model.resolve(subset)?);
        Ok(Some(to_ids(model, &blocked)))
    }
}

/// Low structural differential index for semi-explicit DAE subsets.
#[derive(Debug, Clone, Copy, Default)]
pub struct LowIndex;

impl TestabilityOperator for LowIndex {
    fn name(&self) -> &str {
        "lowindex"
    }

    fn is_testable(&self, model: &StructuralModel, subset: &EquationSet) -> Result<bool, Error> {
        Ok(lowindex_blocked_idx(model, &model.resolve(subset)?).is_empty())
    }

    fn blocked_unknowns(
        &self,
        model: &StructuralModel,
        subset: &EquationSet,
    ) -> Result<Option<Vec<String>>, Error> {
        let blocked = lowindex_blocked_idx(model, &model.resolve(subset)?);
        Ok(Some(to_ids(model, &blocked)))
    }
}

fn to_ids(model: &StructuralModel, unknowns: &[usize]) -> Vec<String> {
    let mut ids: Vec<String> = unknowns
        .iter()
        .map(|&x| model.unknown_id(x).to_string())
        .collect();
    ids.sort();
    ids
}

/// Named operator lookup. Populated once at startup and read-only after.
pub struct OperatorRegistry {
    ops: BTreeMap<String, Arc<dyn TestabilityOperator>>,
}

impl OperatorRegistry {
    /// Registry holding the three built-in operators.
    pub fn builtin() -> Self {
        let mut reg = OperatorRegistry {
            ops: BTreeMap::new(),
        };
        reg.register(Arc::new(Plus));
        reg.register(Arc::new(BackSubstitution));
        reg.register(Arc::new(LowIndex));
        reg
    }

    pub fn register(&mut self, op: Arc<dyn TestabilityOperator>) {
        self.ops.insert(op.name().to_string(), op);
    }

    pub fn get(&self, name: &str) -> Result<&dyn TestabilityOperator, Error> {
        self.ops
            .get(name)
            .map(|op| op.as_ref())
            .ok_or_else(|| Error::UnknownOperator(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.ops.keys().map(String::as_str)
    }
}

/// Evaluate the operator's predicate on a PSO set.
pub fn testable(
    model: &StructuralModel,
    subset: &EquationSet,
    op: &dyn TestabilityOperator,
) -> Result<bool, Error> {
    let eqs = model.resolve(subset)?;
    if !is_pso_idx(model, &eqs) {
        return Err(Error::NotPso(subset.clone()));
    }
    op.is_testable(model, subset)
}

/// A back-substitution schedule: pivot assignments in computation order,
/// plus the equations left over for residual evaluation.
///
/// Each pivot equation contains its pivot unknown and otherwise only
/// unknowns pivoted earlier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComputationOrder {
    pub pivots: Vec<(String, String)>,
    pub residual_equations: EquationSet,
}

/// Greedy back-substitution schedule for a PSO, backsub-testable set.
///
/// When several equations are eligible for the next pivot, the one with
/// the greatest id is taken; the redundant equations left over are then
/// the least ids, matching the usual convention of keeping the leading
/// equations as residuals.
pub fn computation_order(
    model: &StructuralModel,
    subset: &EquationSet,
) -> Result<ComputationOrder, Error> {
    let eqs = model.resolve(subset)?;
    if !is_pso_idx(model, &eqs) {
        return Err(Error::NotPso(subset.clone()));
    }
    let unknowns = model.unknowns_of_idx(&eqs);
    let mut computed = vec![false; model.unknowns().len()];
    let mut pivoted = vec![false; eqs.len()];
    let mut pivots = Vec::new();

    while pivots.len() < unknowns.len() {
        // Highest-id equation with exactly one uncomputed unknown.
        let candidate = eqs
            .iter()
            .enumerate()
            .filter(|&(i, &e)| {
                !pivoted[i]
                    && model
                        .eq_unknowns_idx(e)
                        .iter()
                        .filter(|&&x| !computed[x])
                        .count()
                        == 1
            })
            .max_by_key(|&(_, &e)| model.eq_lex_rank(e));
        let Some((i, &e)) = candidate else {
            let blocked: Vec<String> = unknowns
                .iter()
                .filter(|&&x| !computed[x])
                .map(|&x| model.unknown_id(x).to_string())
                .collect();
            return Err(Error::NotBackSubstitutable {
                subset: subset.clone(),
                blocked,
            });
        };
        let x = *model
            .eq_unknowns_idx(e)
            .iter()
            .find(|&&x| !computed[x])
            .expect("candidate has one uncomputed unknown");
        computed[x] = true;
        pivoted[i] = true;
        pivots.push((
            model.equation_id(e).to_string(),
            model.unknown_id(x).to_string(),
        ));
    }

    let residual_equations = EquationSet::new(
        eqs.iter()
            .zip(&pivoted)
            .filter(|(_, &p)| !p)
            .map(|(&e, _)| model.equation_id(e).to_string()),
    );
    Ok(ComputationOrder {
        pivots,
        residual_equations,
    })
}

/// The largest testable PSO subset of `subset` under the given operator
/// (possibly empty).
///
/// Fixed point: start from the overdetermined part; while the current set
/// is not testable, drop every equation touching a blocked unknown (any
/// occurrence kind) and re-take the overdetermined part. For `plus` this
/// is exactly [`overdetermined_part`]. Operators without a blocked-unknown
/// analysis are evaluated by [`brute_force_mstar`] with the default bound.
pub fn mstar(
    model: &StructuralModel,
    subset: &EquationSet,
    op: &dyn TestabilityOperator,
) -> Result<EquationSet, Error> {
    let mut m = overdetermined_part(model, subset)?;
    loop {
        if m.is_empty() {
            return Ok(m);
        }
        if op.is_testable(model, &m)? {
            return Ok(m);
        }
        let Some(blocked) = op.blocked_unknowns(model, &m)? else {
            return brute_force_mstar(model, subset, op, DEFAULT_ORACLE_BOUND);
        };
        if blocked.is_empty() {
            return Err(Error::OperatorContract {
                operator: op.name().to_string(),
                subset: m,
            });
        }
        let keep = EquationSet::new(m.iter().filter(|id| {
            let e = model.eq_position(id).expect("member id resolves");
            !model
                .eq_unknowns_idx(e)
                .iter()
                .any(|&x| blocked.iter().any(|b| b == model.unknown_id(x)))
        }));
        m = overdetermined_part(model, &keep)?;
    }
}

/// The union of all testable PSO subsets of `subset`, by exhaustive
/// enumeration.
///
/// Also verifies that the union is itself a testable PSO set — the
/// union-closure property every admissible characterization is expected to
/// have — and reports a violation instead of silently returning a
/// non-testable union.
pub fn brute_force_mstar(
    model: &StructuralModel,
    subset: &EquationSet,
    op: &dyn TestabilityOperator,
    bound: usize,
) -> Result<EquationSet, Error> {
    let eqs = model.resolve(subset)?;
    let n = eqs.len();
    if n > bound {
        return Err(Error::OracleBoundExceeded { size: n, bound });
    }
    let mut in_union = vec![false; n];
    let mut sub = Vec::with_capacity(n);
    for mask in 1u64..(1u64 << n) {
        sub.clear();
        for (i, &e) in eqs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sub.push(e);
            }
        }
        if !is_pso_idx(model, &sub) {
            continue;
        }
        if op.is_testable(model, &model.subset_from_idx(sub.iter().copied()))? {
            for (i, _) in eqs.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    in_union[i] = true;
                }
            }
        }
    }
    let union_idx: Vec<usize> = eqs
        .iter()
        .zip(&in_union)
        .filter(|(_, &keep)| keep)
        .map(|(&e, _)| e)
        .collect();
    if union_idx.is_empty() {
        return Ok(EquationSet::empty());
    }
    let union = model.subset_from_idx(union_idx.iter().copied());
    if !is_pso_idx(model, &union_idx) || !op.is_testable(model, &union)? {
        return Err(Error::UnionClosureViolation {
            operator: op.name().to_string(),
            union,
        });
    }
    Ok(union)
}

// ---------------------------------------------------------------------------
// Index-level predicates
// ---------------------------------------------------------------------------

/// Unknowns outside the singleton-propagation closure, sorted by id.
pub(crate) fn backsub_blocked_idx(model: &StructuralModel, eqs: &[usize]) -> Vec<usize> {
    let mut computed = vec![false; model.unknowns().len()];
    let mut remaining: Vec<usize> = eqs
        .iter()
        .map(|&e| model.eq_unknowns_idx(e).len())
        .collect();
    loop {
        let mut progressed = false;
        for (i, &e) in eqs.iter().enumerate() {
            if remaining[i] != 1 {
                continue;
            }
            let &x = model
                .eq_unknowns_idx(e)
                .iter()
                .find(|&&x| !computed[x])
                .expect("one unknown remains");
            computed[x] = true;
            progressed = true;
            for (j, &e2) in eqs.iter().enumerate() {
                if model.eq_unknowns_idx(e2).contains(&x) {
                    remaining[j] -= 1;
                }
            }
        }
        if !progressed {
            break;
        }
    }
    model
        .unknowns_of_idx(eqs)
        .into_iter()
        .filter(|&x| !computed[x])
        .collect()
}

/// Purely algebraic unknowns that fall in the underdetermined part of the
/// matching of X2 against non-differential member equations (algebraic
/// occurrences only), sorted by id.
pub(crate) fn lowindex_blocked_idx(model: &StructuralModel, eqs: &[usize]) -> Vec<usize> {
    let mut in_x1 = vec![false; model.unknowns().len()];
    for &e in eqs {
        if let Some(x) = model.eq_differentiated_idx(e) {
            in_x1[x] = true;
        }
    }
    let x2: Vec<usize> = model
        .unknowns_of_idx(eqs)
        .into_iter()
        .filter(|&x| !in_x1[x])
        .collect();
    if x2.is_empty() {
        return Vec::new();
    }
    let mut col_local = vec![usize::MAX; model.unknowns().len()];
    for (c, &x) in x2.iter().enumerate() {
        col_local[x] = c;
    }
    let mut rows: Vec<usize> = eqs
        .iter()
        .copied()
        .filter(|&e| model.eq_differentiated_idx(e).is_none())
        .collect();
    rows.sort_by_key(|&e| model.eq_lex_rank(e));
    let adj: Vec<Vec<usize>> = rows
        .iter()
        .map(|&e| {
            let mut a: Vec<usize> = model
                .eq_algebraic_idx(e)
                .iter()
                .filter(|&&x| col_local[x] != usize::MAX)
                .map(|&x| col_local[x])
                .collect();
            a.sort_unstable();
            a
        })
        .collect();
    let parts = dm_parts(&adj, x2.len());
    x2.iter()
        .zip(&parts.col_part)
        .filter(|(_, &p)| p == graph::Part::Minus)
        .map(|(&x, _)| x)
        .collect()
}
