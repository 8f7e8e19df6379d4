//! Bipartite structure, maximum matching, and the coarse
//! Dulmage–Mendelsohn decomposition.
//!
//! Equations are rows, unknowns are columns, and an edge connects an
//! equation to every unknown occurring in it; differentiated and algebraic
//! occurrences of the same unknown merge into a single edge. The DM
//! decomposition splits a subset into an overdetermined part M+ (more
//! equations than unknowns), an exactly determined part M0, and an
//! underdetermined part M-. The overdetermined part is where residual
//! generation happens: a set equal to its own M+ is Proper Structurally
//! Overdetermined (PSO), and a PSO set with no PSO proper subset is
//! minimal (MSO).

use std::collections::VecDeque;

use crate::error::Error;
use crate::model::{EquationSet, StructuralModel};

/// A bipartite incidence structure with named rows and columns.
///
/// Rows and columns are kept in the order given at construction; all
/// algorithms iterate them in that order, which makes results
/// deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteStructure {
    rows: Vec<String>,
    cols: Vec<String>,
    /// Row-local -> sorted column-local adjacency.
    adj: Vec<Vec<usize>>,
}

impl BipartiteStructure {
    /// Build a structure from explicit edges. Every edge endpoint must be
    /// listed in `rows`/`cols`.
    pub fn new<R, C>(rows: Vec<String>, cols: Vec<String>, edges: &[(R, C)]) -> Result<Self, Error>
    where
        R: AsRef<str>,
        C: AsRef<str>,
    {
        let row_ix = |id: &str| rows.iter().position(|r| r == id);
        let col_ix = |id: &str| cols.iter().position(|c| c == id);
        let mut adj = vec![Vec::new(); rows.len()];
        for (r, c) in edges {
            let (r, c) = (r.as_ref(), c.as_ref());
            let (ri, ci) = match (row_ix(r), col_ix(c)) {
                (Some(ri), Some(ci)) => (ri, ci),
                _ => {
                    return Err(Error::InvalidEdge {
                        row: r.to_string(),
                        col: c.to_string(),
                    })
                }
            };
            adj[ri].push(ci);
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        Ok(BipartiteStructure { rows, cols, adj })
    }

    /// The incidence structure of a subset of a model's equations over the
    /// unknowns occurring in them. Rows and columns are ordered
    /// lexicographically by id.
    pub fn from_model(model: &StructuralModel, subset: &EquationSet) -> Result<Self, Error> {
        let eqs = model.resolve(subset)?;
        let local = LocalGraph::new(model, &eqs);
        Ok(local.to_structure(model))
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.adj.iter().enumerate().flat_map(move |(r, cols)| {
            cols.iter()
                .map(move |&c| (self.rows[r].as_str(), self.cols[c].as_str()))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// Render the bi-adjacency matrix as a text grid with `X` marks.
    pub fn render_grid(&self) -> String {
        let label_w = self.rows.iter().map(String::len).max().unwrap_or(0);
        let mut out = String::new();
        out.push_str(&" ".repeat(label_w));
        for c in &self.cols {
            out.push_str("  ");
            out.push_str(c);
        }
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            out.push_str(&format!("{row:<label_w$}"));
            for (c, col) in self.cols.iter().enumerate() {
                let mark = if self.adj[r].binary_search(&c).is_ok() {
                    "X"
                } else {
                    ""
                };
                out.push_str(&format!("  {mark:>w$}", w = col.len()));
            }
            // No trailing spaces: trim the row end.
            while out.ends_with(' ') {
                out.pop();
            }
            out.push('\n');
        }
        out
    }
}

/// A maximum matching: vertex-disjoint row/column pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingResult {
    pairs: Vec<(String, String)>,
}

impl MatchingResult {
    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn size(&self) -> usize {
        self.pairs.len()
    }
}

/// Maximum-cardinality matching (Hopcroft–Karp). Deterministic for a fixed
/// row/column order.
pub fn maximum_matching(g: &BipartiteStructure) -> MatchingResult {
    let (row_match, _) = hopcroft_karp(&g.adj, g.cols.len());
    let pairs = row_match
        .iter()
        .enumerate()
        .filter_map(|(r, m)| m.map(|c| (g.rows[r].clone(), g.cols[c].clone())))
        .collect();
    MatchingResult { pairs }
}

/// Coarse DM decomposition of an equation subset.
///
/// The three equation parts partition the subset, the three variable parts
/// partition its unknowns, and `|m_plus| > |x_plus|`, `|m_zero| = |x_zero|`,
/// `|m_minus| < |x_minus|` (empty parts excepted). Equations in `m_plus`
/// touch only `x_plus` unknowns and `x_minus` unknowns touch only `m_minus`
/// equations, which is the block-triangular shape of the permuted
/// bi-adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DmResult {
    pub m_plus: EquationSet,
    pub m_zero: EquationSet,
    pub m_minus: EquationSet,
    pub x_plus: Vec<String>,
    pub x_zero: Vec<String>,
    pub x_minus: Vec<String>,
}

/// DM-decompose an arbitrary bipartite structure. Row names populate the
/// equation parts, column names the variable parts.
pub fn dm_decompose_graph(g: &BipartiteStructure) -> DmResult {
    let parts = dm_parts(&g.adj, g.cols.len());
    let pick_rows = |mask: &[Part], which: Part| {
        g.rows
            .iter()
            .enumerate()
            .filter(|(r, _)| mask[*r] == which)
            .map(|(_, id)| id.clone())
            .collect::<Vec<_>>()
    };
    let pick_cols = |mask: &[Part], which: Part| {
        let mut out: Vec<String> = g
            .cols
            .iter()
            .enumerate()
            .filter(|(c, _)| mask[*c] == which)
            .map(|(_, id)| id.clone())
            .collect();
        out.sort();
        out
    };
    DmResult {
        m_plus: EquationSet::new(pick_rows(&parts.row_part, Part::Plus)),
        m_zero: EquationSet::new(pick_rows(&parts.row_part, Part::Zero)),
        m_minus: EquationSet::new(pick_rows(&parts.row_part, Part::Minus)),
        x_plus: pick_cols(&parts.col_part, Part::Plus),
        x_zero: pick_cols(&parts.col_part, Part::Zero),
        x_minus: pick_cols(&parts.col_part, Part::Minus),
    }
}

/// Coarse DM decomposition of a model subset.
pub fn dm_decompose(model: &StructuralModel, subset: &EquationSet) -> Result<DmResult, Error> {
    BipartiteStructure::from_model(model, subset).map(|g| dm_decompose_graph(&g))
}

/// The overdetermined part of a subset: its largest PSO subset (possibly
/// empty). Idempotent and monotone with respect to inclusion.
pub fn overdetermined_part(
    model: &StructuralModel,
    subset: &EquationSet,
) -> Result<EquationSet, Error> {
    let eqs = model.resolve(subset)?;
    Ok(model.subset_from_idx(m_plus_idx(model, &eqs)))
}

/// Redundancy of a PSO (or empty) set: equations minus unknowns.
pub fn redundancy(model: &StructuralModel, subset: &EquationSet) -> Result<usize, Error> {
    let eqs = model.resolve(subset)?;
    if eqs.is_empty() {
        return Ok(0);
    }
    if !is_pso_idx(model, &eqs) {
        return Err(Error::NotPso(subset.clone()));
    }
    Ok(eqs.len() - model.unknowns_of_idx(&eqs).len())
}

/// PSO / MSO classification of an equation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsoClass {
    NotPso,
    Pso,
    Mso,
}

impl std::fmt::Display for PsoClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PsoClass::NotPso => "not-PSO",
            PsoClass::Pso => "PSO",
            PsoClass::Mso => "MSO",
        })
    }
}

/// Classify a subset. A nonempty set is PSO iff it equals its own
/// overdetermined part, and MSO iff additionally its redundancy is one.
pub fn classify_pso(model: &StructuralModel, subset: &EquationSet) -> Result<PsoClass, Error> {
    let eqs = model.resolve(subset)?;
    if eqs.is_empty() || !is_pso_idx(model, &eqs) {
        return Ok(PsoClass::NotPso);
    }
    if eqs.len() - model.unknowns_of_idx(&eqs).len() == 1 {
        Ok(PsoClass::Mso)
    } else {
        Ok(PsoClass::Pso)
    }
}

/// Minimality check by explicit subset enumeration: PSO with no PSO proper
/// subset. Exponential; serves as the independent counterpart of the
/// redundancy-one criterion in [`classify_pso`].
pub fn is_mso_by_enumeration(
    model: &StructuralModel,
    subset: &EquationSet,
    bound: usize,
) -> Result<bool, Error> {
    let eqs = model.resolve(subset)?;
    if eqs.len() > bound {
        return Err(Error::OracleBoundExceeded {
            size: eqs.len(),
            bound,
        });
    }
    if eqs.is_empty() || !is_pso_idx(model, &eqs) {
        return Ok(false);
    }
    let n = eqs.len();
    let mut sub = Vec::with_capacity(n);
    for mask in 1u64..((1u64 << n) - 1) {
        sub.clear();
        for (i, &e) in eqs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sub.push(e);
            }
        }
        if is_pso_idx(model, &sub) {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Index-level engine
// ---------------------------------------------------------------------------

/// Subset-local bipartite graph over global model indices, with rows and
/// columns in lexicographic id order.
pub(crate) struct LocalGraph {
    /// Row-local -> global equation position.
    pub rows: Vec<usize>,
    /// Column-local -> global unknown position.
    pub cols: Vec<usize>,
    pub adj: Vec<Vec<usize>>,
}

impl LocalGraph {
    pub fn new(model: &StructuralModel, eqs: &[usize]) -> Self {
        let mut rows: Vec<usize> = eqs.to_vec();
        rows.sort_by_key(|&e| model.eq_lex_rank(e));
        let cols = model.unknowns_of_idx(eqs);
        let mut col_local = vec![usize::MAX; model.unknowns().len()];
        for (c, &x) in cols.iter().enumerate() {
            col_local[x] = c;
        }
        let adj = rows
            .iter()
            .map(|&e| {
                let mut a: Vec<usize> = model
                    .eq_unknowns_idx(e)
                    .iter()
                    .map(|&x| col_local[x])
                    .collect();
                a.sort_unstable();
                a
            })
            .collect();
        LocalGraph { rows, cols, adj }
    }

    fn to_structure(&self, model: &StructuralModel) -> BipartiteStructure {
        BipartiteStructure {
            rows: self
                .rows
                .iter()
                .map(|&e| model.equation_id(e).to_string())
                .collect(),
            cols: self
                .cols
                .iter()
                .map(|&x| model.unknown_id(x).to_string())
                .collect(),
            adj: self.adj.clone(),
        }
    }
}

/// Hopcroft–Karp over a row-local adjacency. Returns (row_match, col_match).
pub(crate) fn hopcroft_karp(
    adj: &[Vec<usize>],
    n_cols: usize,
) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let n_rows = adj.len();
    let mut row_match: Vec<Option<usize>> = vec![None; n_rows];
    let mut col_match: Vec<Option<usize>> = vec![None; n_cols];

    loop {
        // BFS layering from free rows.
        let mut dist = vec![usize::MAX; n_rows];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for r in 0..n_rows {
            if row_match[r].is_none() {
                dist[r] = 0;
                queue.push_back(r);
            }
        }
        let mut reaches_free_col = false;
        while let Some(r) = queue.pop_front() {
            for &c in &adj[r] {
                match col_match[c] {
                    None => reaches_free_col = true,
                    Some(r2) => {
                        if dist[r2] == usize::MAX {
                            dist[r2] = dist[r] + 1;
                            queue.push_back(r2);
                        }
                    }
                }
            }
        }
        if !reaches_free_col {
            break;
        }

        fn augment(
            r: usize,
            adj: &[Vec<usize>],
            dist: &mut [usize],
            row_match: &mut [Option<usize>],
            col_match: &mut [Option<usize>],
        ) -> bool {
            for i in 0..adj[r].len() {
                let c = adj[r][i];
                let ok = match col_match[c] {
                    None => true,
                    Some(r2) => {
                        dist[r2] == dist[r].wrapping_add(1)
                            && augment(r2, adj, dist, row_match, col_match)
                    }
                };
                if ok {
                    col_match[c] = Some(r);
                    row_match[r] = Some(c);
                    return true;
                }
            }
            dist[r] = usize::MAX;
            false
        }

        let mut augmented = false;
        for r in 0..n_rows {
            if row_match[r].is_none()
                && dist[r] == 0
                && augment(r, adj, &mut dist, &mut row_match, &mut col_match)
            {
                augmented = true;
            }
        }
        if !augmented {
            break;
        }
    }
    (row_match, col_match)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Part {
    Plus,
    Zero,
    Minus,
}

pub(crate) struct DmParts {
    pub row_part: Vec<Part>,
    pub col_part: Vec<Part>,
}

/// Coarse DM parts of a local adjacency: alternating reachability from
/// free rows marks the overdetermined part, from free columns the
/// underdetermined part, the remainder is exactly determined.
pub(crate) fn dm_parts(adj: &[Vec<usize>], n_cols: usize) -> DmParts {
    let n_rows = adj.len();
    let (row_match, col_match) = hopcroft_karp(adj, n_cols);

    let mut radj = vec![Vec::new(); n_cols];
    for (r, cols) in adj.iter().enumerate() {
        for &c in cols {
            radj[c].push(r);
        }
    }

    // Rows reachable from free rows via row->any col, col->matched row.
    let mut row_plus = vec![false; n_rows];
    let mut col_plus = vec![false; n_cols];
    let mut queue: VecDeque<usize> = (0..n_rows).filter(|&r| row_match[r].is_none()).collect();
    for &r in &queue {
        row_plus[r] = true;
    }
    while let Some(r) = queue.pop_front() {
        for &c in &adj[r] {
            if !col_plus[c] {
                col_plus[c] = true;
                if let Some(r2) = col_match[c] {
                    if !row_plus[r2] {
                        row_plus[r2] = true;
                        queue.push_back(r2);
                    }
                }
            }
        }
    }

    // Columns reachable from free columns via col->any row, row->matched col.
    let mut row_minus = vec![false; n_rows];
    let mut col_minus = vec![false; n_cols];
    let mut queue: VecDeque<usize> = (0..n_cols).filter(|&c| col_match[c].is_none()).collect();
    for &c in &queue {
        col_minus[c] = true;
    }
    while let Some(c) = queue.pop_front() {
        for &r in &radj[c] {
            if !row_minus[r] {
                row_minus[r] = true;
                if let Some(c2) = row_match[r] {
                    if !col_minus[c2] {
                        col_minus[c2] = true;
                        queue.push_back(c2);
                    }
                }
            }
        }
    }

    let row_part = (0..n_rows)
        .map(|r| {
            if row_plus[r] {
                Part::Plus
            } else if row_minus[r] {
                Part::Minus
            } else {
                Part::Zero
            }
        })
        .collect();
    let col_part = (0..n_cols)
        .map(|c| {
            if col_plus[c] {
                Part::Plus
            } else if col_minus[c] {
                Part::Minus
            } else {
                Part::Zero
            }
        })
        .collect();
    DmParts { row_part, col_part }
}

/// Global equation positions of the overdetermined part, sorted numerically.
pub(crate) fn m_plus_idx(model: &StructuralModel, eqs: &[usize]) -> Vec<usize> {
    let g = LocalGraph::new(model, eqs);
    let parts = dm_parts(&g.adj, g.cols.len());
    let mut out: Vec<usize> = g
        .rows
        .iter()
        .zip(&parts.row_part)
        .filter(|(_, &p)| p == Part::Plus)
        .map(|(&e, _)| e)
        .collect();
    out.sort_unstable();
    out
}

/// PSO test: nonempty and equal to its own overdetermined part.
/// `eqs` must be sorted numerically.
pub(crate) fn is_pso_idx(model: &StructuralModel, eqs: &[usize]) -> bool {
    !eqs.is_empty() && m_plus_idx(model, eqs) == eqs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FaultSignature;
    use crate::testdata::{eq2_model, eq4_model, ode3_model};

    /// Brute-force maximum matching size by recursive enumeration.
    fn brute_matching_size(adj: &[Vec<usize>], used: &mut Vec<bool>, row: usize) -> usize {
        if row == adj.len() {
            return 0;
        }
        let mut best = brute_matching_size(adj, used, row + 1);
        for &c in &adj[row] {
            if !used[c] {
                used[c] = true;
                best = best.max(1 + brute_matching_size(adj, used, row + 1));
                used[c] = false;
            }
        }
        best
    }

    fn matching_size_oracle(g: &BipartiteStructure) -> usize {
        let mut used = vec![false; g.cols().len()];
        brute_matching_size(&g.adj, &mut used, 0)
    }

    #[test]
    fn matching_covers_the_three_state_ode() {
        let model = ode3_model();
        let g = BipartiteStructure::from_model(&model, &model.all_equations()).unwrap();
        let m = maximum_matching(&g);
        assert_eq!(m.size(), 3);
        assert_eq!(m.size(), matching_size_oracle(&g));
    }

    #[test]
    fn matching_on_empty_graph_is_empty() {
        let g = BipartiteStructure::new(vec![], vec![], &[] as &[(&str, &str)]).unwrap();
        assert_eq!(maximum_matching(&g).size(), 0);
    }

    #[test]
    fn matching_size_on_static_example() {
        let model = eq2_model();
        let g = BipartiteStructure::from_model(&model, &model.all_equations()).unwrap();
        let m = maximum_matching(&g);
        assert_eq!(m.size(), 2);
        assert_eq!(m.size(), matching_size_oracle(&g));
    }

    #[test]
    fn structure_rejects_dangling_edges() {
        let err = BipartiteStructure::new(
            vec!["e1".into()],
            vec!["x1".into()],
            &[("e1", "x1"), ("e1", "x9")],
        );
        assert!(matches!(err, Err(Error::InvalidEdge { .. })));
    }

    #[test]
    fn dm_of_full_static_example_is_all_overdetermined() {
        let model = eq2_model();
        let dm = dm_decompose(&model, &model.all_equations()).unwrap();
        assert_eq!(dm.m_plus, model.all_equations());
        assert_eq!(dm.x_plus, ["x1", "x2"]);
        assert!(dm.m_zero.is_empty() && dm.m_minus.is_empty());
        assert!(dm.x_zero.is_empty() && dm.x_minus.is_empty());
    }

    #[test]
    fn dm_of_three_state_ode_is_exactly_determined() {
        let model = ode3_model();
        let dm = dm_decompose(&model, &model.all_equations()).unwrap();
        assert_eq!(dm.m_zero, model.all_equations());
        assert!(dm.m_plus.is_empty() && dm.m_minus.is_empty());
        assert_eq!(dm.x_zero, ["x1", "x2", "x3"]);
    }

    #[test]
    fn dm_of_empty_set_is_empty() {
        let model = eq2_model();
        let dm = dm_decompose(&model, &EquationSet::empty()).unwrap();
        assert!(dm.m_plus.is_empty() && dm.m_zero.is_empty() && dm.m_minus.is_empty());
        assert!(dm.x_plus.is_empty() && dm.x_zero.is_empty() && dm.x_minus.is_empty());
    }

    #[test]
    fn overdetermined_part_examples() {
        let m2 = eq2_model();
        let four = EquationSet::new(["e1", "e2", "e3", "e4"]);
        assert_eq!(overdetermined_part(&m2, &four).unwrap(), four);
        assert_eq!(
            overdetermined_part(&m2, &EquationSet::new(["e1", "e2"])).unwrap(),
            EquationSet::empty()
        );
        let m4 = eq4_model();
        assert_eq!(
            overdetermined_part(&m4, &m4.all_equations()).unwrap(),
            m4.all_equations()
        );
    }

    #[test]
    fn redundancy_examples() {
        let m2 = eq2_model();
        assert_eq!(redundancy(&m2, &m2.all_equations()).unwrap(), 3);
        assert_eq!(
            redundancy(&m2, &EquationSet::new(["e1", "e2", "e3", "e5"])).unwrap(),
            2
        );
        assert_eq!(
            redundancy(&m2, &EquationSet::new(["e1", "e2", "e5"])).unwrap(),
            1
        );
        assert_eq!(redundancy(&m2, &EquationSet::empty()).unwrap(), 0);
        assert!(matches!(
            redundancy(&m2, &EquationSet::new(["e1", "e2"])),
            Err(Error::NotPso(_))
        ));
    }

    #[test]
    fn classify_pso_examples() {
        let m2 = eq2_model();
        assert_eq!(
            classify_pso(&m2, &EquationSet::new(["e1", "e2", "e5"])).unwrap(),
            PsoClass::Mso
        );
        assert_eq!(
            classify_pso(&m2, &EquationSet::new(["e1", "e2", "e3", "e5"])).unwrap(),
            PsoClass::Pso
        );
        assert_eq!(
            classify_pso(&m2, &EquationSet::new(["e1", "e2"])).unwrap(),
            PsoClass::NotPso
        );
        assert_eq!(
            classify_pso(&m2, &EquationSet::empty()).unwrap(),
            PsoClass::NotPso
        );
    }

    #[test]
    fn enumeration_minimality_agrees_on_the_examples() {
        let m2 = eq2_model();
        for subset in [
            EquationSet::new(["e1", "e2", "e5"]),
            EquationSet::new(["e1", "e2", "e3", "e5"]),
            EquationSet::new(["e1", "e2"]),
        ] {
            let by_phi = classify_pso(&m2, &subset).unwrap() == PsoClass::Mso;
            let by_enum = is_mso_by_enumeration(&m2, &subset, 16).unwrap();
            assert_eq!(by_phi, by_enum, "disagreement on {subset}");
        }
    }

    #[test]
    fn grid_rendering_matches_incidence() {
        let model = ode3_model();
        let g = BipartiteStructure::from_model(&model, &model.all_equations()).unwrap();
        let grid = g.render_grid();
        let lines: Vec<&str> = grid.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0].trim(), "x1  x2  x3");
        assert_eq!(lines[1], "e1   X       X");
        assert_eq!(lines[2], "e2       X   X");
        assert_eq!(lines[3], "e3   X       X");
    }

    #[test]
    fn fault_signature_display() {
        assert_eq!(FaultSignature::new(["f2", "f1"]).to_string(), "{f1,f2}");
        assert_eq!(FaultSignature::empty().to_string(), "{}");
    }
}
