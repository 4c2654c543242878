//! Structural measures behind the complexity classification: formula graphs,
//! ∃-components, contract graphs and exact treewidth.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use itertools::Itertools;

use crate::error::Result;
use crate::expansion::plus_set;
use crate::formula::EpFormula;
use crate::normalize::normalize_ep;
use crate::pp::PpFormula;
use crate::structure::Structure;

/// Simple undirected graph on named vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaGraph {
    vertices: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
}

impl FormulaGraph {
    pub fn new(vertices: Vec<String>) -> Self {
        Self {
            vertices,
            edges: BTreeSet::new(),
        }
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.edges.insert((a.min(b), a.max(b)));
        }
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Vertex sets of the connected components, in order of least vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertices.len()];
        let mut out = Vec::new();
        for s in 0..self.vertices.len() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut i = 0;
            while i < comp.len() {
                for &n in &adj[comp[i]] {
                    if !seen[n] {
                        seen[n] = true;
                        comp.push(n);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn induced(&self, keep: &[usize]) -> FormulaGraph {
        let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut g = FormulaGraph::new(keep.iter().map(|&v| self.vertices[v].clone()).collect());
        for &(a, b) in &self.edges {
            if let (Some(&x), Some(&y)) = (pos.get(&a), pos.get(&b)) {
                g.add_edge(x, y);
            }
        }
        g
    }
}

impl fmt::Display for FormulaGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| format!("{}-{}", self.vertices[a], self.vertices[b]));
        write!(
            f,
            "{{{}}} [{}]",
            self.vertices.iter().format(","),
            edges.format(" ")
        )
    }
}

fn graph_of_structure(s: &Structure) -> FormulaGraph {
    let mut g = FormulaGraph::new(s.elements().to_vec());
    for (_, tuples) in s.relations() {
        for t in tuples {
            for (a, b) in t.iter().tuple_combinations() {
                g.add_edge(*a, *b);
            }
        }
    }
    g
}

/// Co-occurrence graph of the formula's structure view.
pub fn graph_of(pp: &PpFormula) -> FormulaGraph {
    graph_of_structure(pp.structure())
}

/// Core of the augmented structure.
pub fn core_of_formula(pp: &PpFormula) -> Structure {
    crate::hom::core(&pp.augmented())
}

fn exists_parts(core: &PpFormula) -> (FormulaGraph, Vec<Vec<usize>>) {
    let g = graph_of(core);
    let lib: BTreeSet<usize> = core.lib_indices().into_iter().collect();
    let quantified: Vec<usize> = (0..g.vertices.len()).filter(|v| !lib.contains(v)).collect();
    let sub = g.induced(&quantified);
    let adj = g.adjacency();
    let parts = sub
        .components()
        .into_iter()
        .map(|comp| {
            let inner: Vec<usize> = comp.iter().map(|&i| quantified[i]).collect();
            let mut all: BTreeSet<usize> = inner.iter().copied().collect();
            for &v in &inner {
                all.extend(adj[v].iter().filter(|n| lib.contains(n)));
            }
            all.into_iter().collect()
        })
        .collect();
    (g, parts)
}

/// For each component V of the quantified part of the core's graph, the subgraph
/// induced by V and its liberal neighbours.
pub fn exists_components(pp: &PpFormula) -> Vec<FormulaGraph> {
    let (g, parts) = exists_parts(&pp.core());
    parts.iter().map(|p| g.induced(p)).collect()
}

/// Graph on the liberal variables with the core's edges among them and a clique
/// over the liberal vertices of each ∃-component.
pub fn contract_graph(pp: &PpFormula) -> FormulaGraph {
    let core = pp.core();
    let (g, parts) = exists_parts(&core);
    let lib = core.lib_indices();
    let mut out = g.induced(&lib);
    for part in parts {
        let members: Vec<usize> = part
            .iter()
            .filter_map(|v| lib.iter().position(|l| l == v))
            .collect();
        for (a, b) in members.iter().tuple_combinations() {
            out.add_edge(*a, *b);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Treewidth {
    pub value: usize,
    pub lower: usize,
    pub upper: usize,
    pub exact: bool,
}

/// Vertex count up to which treewidth is computed exactly.
pub const EXACT_TREEWIDTH_LIMIT: usize = 20;

fn degeneracy(adj: &[Vec<usize>], verts: &[usize]) -> usize {
    let mut alive: BTreeSet<usize> = verts.iter().copied().collect();
    let mut best = 0;
    while let Some(&v) = alive
        .iter()
        .min_by_key(|&&v| adj[v].iter().filter(|n| alive.contains(n)).count())
    {
        best = best.max(adj[v].iter().filter(|n| alive.contains(n)).count());
        alive.remove(&v);
    }
    best
}

fn min_fill(adj: &[Vec<usize>], verts: &[usize]) -> usize {
    let mut nb: HashMap<usize, BTreeSet<usize>> = verts
        .iter()
        .map(|&v| (v, adj[v].iter().copied().collect()))
        .collect();
    let mut width = 0;
    while !nb.is_empty() {
        let fill = |v: usize| -> usize {
            nb[&v]
                .iter()
                .tuple_combinations()
                .filter(|(a, b)| !nb[*a].contains(*b))
                .count()
        };
        let v = *nb
            .keys()
            .min_by_key(|&&v| (fill(v), nb[&v].len(), v))
            .unwrap();
        let ns: Vec<usize> = nb.remove(&v).unwrap().into_iter().collect();
        width = width.max(ns.len());
        for &a in &ns {
            let set = nb.get_mut(&a).unwrap();
            set.remove(&v);
            set.extend(ns.iter().filter(|&&b| b != a));
        }
    }
    width
}

struct Exact<'a> {
    adj: &'a [Vec<usize>],
    verts: Vec<usize>,
    best: usize,
    seen: HashMap<u32, usize>,
}

impl Exact<'_> {
    /// Neighbours of local vertex `v` in the graph after eliminating `gone`.
    fn degree(&self, gone: u32, v: usize) -> Vec<usize> {
        let local: HashMap<usize, usize> = self
            .verts
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, i))
            .collect();
        let mut visited = 1u32 << v;
        let mut stack = vec![v];
        let mut out = Vec::new();
        while let Some(u) = stack.pop() {
            for n in &self.adj[self.verts[u]] {
                let i = local[n];
                if visited & (1 << i) != 0 {
                    continue;
                }
                visited |= 1 << i;
                if gone & (1 << i) != 0 {
                    stack.push(i);
                } else {
                    out.push(i);
                }
            }
        }
        out
    }

    fn search(&mut self, gone: u32, width: usize) {
        let n = self.verts.len();
        let left = n - gone.count_ones() as usize;
        if left <= width + 1 {
            self.best = self.best.min(width);
            return;
        }
        let mut options: Vec<(usize, usize, bool)> = (0..n)
            .filter(|&v| gone & (1 << v) == 0)
            .map(|v| {
                let ns = self.degree(gone, v);
                let simplicial = ns
                    .iter()
                    .tuple_combinations()
                    .all(|(&a, &b)| self.degree(gone, a).contains(&b));
                (v, ns.len(), simplicial)
            })
            .collect();
        if let Some(&(v, d, _)) = options.iter().find(|&&(_, _, s)| s) {
            options = vec![(v, d, true)];
        }
        options.sort_by_key(|&(v, d, _)| (d, v));
        for (v, d, _) in options {
            let w = width.max(d);
            if w >= self.best {
                continue;
            }
            let next = gone | (1 << v);
            if self.seen.get(&next).is_some_and(|&seen| seen <= w) {
                continue;
            }
            self.seen.insert(next, w);
            self.search(next, w);
        }
    }
}

/// Treewidth via branch and bound over elimination orderings, per connected
/// component. Components above the exact limit report heuristic bounds.
pub fn treewidth(g: &FormulaGraph) -> Treewidth {
    let adj = g.adjacency();
    let mut result = Treewidth {
        value: 0,
        lower: 0,
        upper: 0,
        exact: true,
    };
    for comp in g.components() {
        let lower = degeneracy(&adj, &comp);
        let upper = min_fill(&adj, &comp);
        let (value, lower, upper, exact) = if lower == upper {
            (upper, lower, upper, true)
        } else if comp.len() <= EXACT_TREEWIDTH_LIMIT {
            let mut e = Exact {
                adj: &adj,
                verts: comp.clone(),
                best: upper,
                seen: HashMap::new(),
            };
            e.search(0, lower);
            (e.best, e.best, e.best, true)
        } else {
            (upper, lower, upper, false)
        };
        result.value = result.value.max(value);
        result.lower = result.lower.max(lower);
        result.upper = result.upper.max(upper);
        result.exact &= exact;
    }
    result
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaReport {
    pub id: String,
    pub formula: String,
    pub tw_core: Treewidth,
    pub tw_contract: Treewidth,
    pub exists_components: usize,
}

/// Measures for every primitive positive formula reached from a finite set of
/// formulas, with the case decided against a fixed width threshold in place of
/// bounded treewidth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuralReport {
    pub rows: Vec<FormulaReport>,
    pub max_tw_core: usize,
    pub max_tw_contract: usize,
    pub width: usize,
    /// 1: both measures within the threshold; 2: only the contract graphs are;
    /// 3: neither.
    pub case: u8,
}

impl StructuralReport {
    pub fn to_table(&self) -> String {
        let show = |t: &Treewidth| {
            if t.exact {
                t.value.to_string()
            } else {
                format!("{}..{}", t.lower, t.upper)
            }
        };
        let id_width = self
            .rows
            .iter()
            .map(|r| r.id.len())
            .max()
            .unwrap_or(0)
            .max(7);
        let mut out = format!(
            "{:<id_width$}  {:>7}  {:>11}  {:>17}  formula\n",
            "id", "tw_core", "tw_contract", "exists_components"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<id_width$}  {:>7}  {:>11}  {:>17}  {}\n",
                r.id,
                show(&r.tw_core),
                show(&r.tw_contract),
                r.exists_components,
                r.formula
            ));
        }
        out.push_str(&format!(
            "{:<id_width$}  {:>7}  {:>11}\n",
            "max", self.max_tw_core, self.max_tw_contract
        ));
        out.push_str(&format!(
            "case {} (width threshold {})\n",
            self.case, self.width
        ));
        out
    }
}

impl fmt::Display for StructuralReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table())
    }
}

pub fn analyze_pp(id: String, pp: &PpFormula) -> FormulaReport {
    let core = pp.core();
    FormulaReport {
        id,
        formula: pp.to_text(),
        tw_core: treewidth(&graph_of(&core)),
        tw_contract: treewidth(&contract_graph(pp)),
        exists_components: exists_components(pp).len(),
    }
}

/// Report over the plus sets of named formulas.
pub fn classify_named(phis: &[(String, EpFormula)], width: usize) -> Result<StructuralReport> {
    let mut rows = Vec::new();
    for (name, phi) in phis {
        let plus = plus_set(&normalize_ep(phi))?;
        for (k, pp) in plus.formulas().into_iter().enumerate() {
            rows.push(analyze_pp(format!("{name}.{}", k + 1), pp));
        }
    }
    let max_tw_core = rows.iter().map(|r| r.tw_core.upper).max().unwrap_or(0);
    let max_tw_contract = rows.iter().map(|r| r.tw_contract.upper).max().unwrap_or(0);
    let case = if max_tw_contract > width {
        3
    } else if max_tw_core > width {
        2
    } else {
        1
    };
    Ok(StructuralReport {
        rows,
        max_tw_core,
        max_tw_contract,
        width,
        case,
    })
}

pub fn classify_set(phis: &[EpFormula], width: usize) -> Result<StructuralReport> {
    let named: Vec<(String, EpFormula)> = phis
        .iter()
        .enumerate()
        .map(|(i, p)| (format!("q{}", i + 1), p.clone()))
        .collect();
    classify_named(&named, width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::pp::{conjoin_pp, to_structure_view};
    use proptest::prelude::*;

    fn pp(src: &str) -> PpFormula {
        to_structure_view(&parse_formula(&format!("sig E/2 F/2 G/2\nquery q {src}")).unwrap())
            .unwrap()
    }

    fn graph(n: usize, edges: &[(usize, usize)]) -> FormulaGraph {
        let mut g = FormulaGraph::new((0..n).map(|i| i.to_string()).collect());
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    fn clique(k: usize) -> FormulaGraph {
        graph(k, &(0..k).tuple_combinations().collect::<Vec<_>>())
    }

    /// Minimum over all elimination orderings.
    fn brute_treewidth(g: &FormulaGraph) -> usize {
        let n = g.vertices().len();
        (0..n)
            .permutations(n)
            .map(|order| {
                let mut nb: Vec<BTreeSet<usize>> = g
                    .adjacency()
                    .into_iter()
                    .map(|v| v.into_iter().collect())
                    .collect();
                let mut w = 0;
                for v in order {
                    let ns: Vec<usize> = nb[v].iter().copied().collect();
                    w = w.max(ns.len());
                    for &a in &ns {
                        nb[a].remove(&v);
                        nb[a].extend(ns.iter().filter(|&&b| b != a));
                    }
                    nb[v].clear();
                }
                w
            })
            .min()
            .unwrap_or(0)
    }

    #[test]
    fn graph_components_of_the_four_component_formula() {
        let g = graph_of(&pp(
            "lib(x,x1,y,z): exists y1,u,v,w. E(x,x1) & E(y,y1) & F(u,v) & G(u,w)",
        ));
        let comps: Vec<Vec<String>> = g
            .components()
            .into_iter()
            .map(|c| c.into_iter().map(|v| g.vertices()[v].clone()).collect())
            .collect();
        assert_eq!(comps.len(), 4);
        assert!(comps.contains(&vec!["z".to_string()]));
        let tri = graph_of(&pp("lib(): exists a,b,c. E(a,b) & E(b,c) & E(c,a)"));
        assert_eq!(tri.edge_count(), 3);
    }

    #[test]
    fn small_treewidths() {
        assert_eq!(treewidth(&graph(4, &[])).value, 0);
        assert_eq!(
            treewidth(&graph(5, &[(0, 1), (1, 2), (1, 3), (3, 4)])).value,
            1
        );
        for k in 2..7 {
            assert_eq!(treewidth(&clique(k)).value, k - 1);
        }
        assert_eq!(
            treewidth(&graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])).value,
            2
        );
    }

    #[test]
    fn four_cycle_conjunction_has_treewidth_two() {
        let p1 = pp("lib(w,x,y,z): E(x,y) & E(y,z)");
        let p2 = pp("lib(w,x,y,z): E(z,w) & E(w,x)");
        let t = treewidth(&graph_of(&conjoin_pp(&[p1, p2]).unwrap()));
        assert_eq!(t.value, 2);
        assert!(t.exact);
    }

    #[test]
    fn star_query() {
        let star = pp("lib(x,y,z): exists m. E(x,m) & E(y,m) & E(z,m)");
        let parts = exists_components(&star);
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].vertices().len(), 4);
        let c = contract_graph(&star);
        assert_eq!(c.vertices(), ["x", "y", "z"]);
        assert_eq!(c.edge_count(), 3);
        let two = pp("lib(x,y): exists a,b. E(x,a) & F(b,y)");
        assert_eq!(exists_components(&two).len(), 2);
        let qf = pp("lib(x,y): E(x,y)");
        assert!(exists_components(&qf).is_empty());
        assert_eq!(contract_graph(&qf), graph_of(&qf));
        assert_eq!(
            contract_graph(&pp("lib(): exists a. E(a,a)"))
                .vertices()
                .len(),
            0
        );
    }

    #[test]
    fn core_retracts_redundant_variable() {
        let p = pp("lib(x,y): exists z. E(x,y) & E(x,z)");
        let core = core_of_formula(&p);
        assert_eq!(core.size(), 2);
        assert!(crate::hom::hom_equivalent(&core, &p.augmented()));
        let qf = pp("lib(x,y): E(x,y) & E(y,x)");
        assert_eq!(core_of_formula(&qf).size(), 2);
    }

    #[test]
    fn classification_of_the_path_disjunction() {
        let phi = parse_formula(
            "sig E/2\nquery phi lib(w,x,y,z): (E(x,y) & E(y,z)) | (E(z,w) & E(w,x)) | (E(w,x) & E(x,y))",
        )
        .unwrap();
        let report = classify_set(&[phi], 1).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.max_tw_core, 1);
        assert_eq!(report.case, 1);
        assert!(report.to_table().ends_with("case 1 (width threshold 1)\n"));
    }

    #[test]
    fn clique_query_is_not_case_one() {
        let phi = parse_formula(
            "sig E/2\nquery k lib(a,b,c,d): E(a,b) & E(a,c) & E(a,d) & E(b,c) & E(b,d) & E(c,d)",
        )
        .unwrap();
        let report = classify_set(&[phi], 2).unwrap();
        assert_eq!(report.max_tw_core, 3);
        assert_ne!(report.case, 1);
        let tree = parse_formula("sig E/2\nquery t lib(a,b,c): E(a,b) & E(a,c)").unwrap();
        assert_eq!(classify_set(&[tree], 1).unwrap().case, 1);
    }

    fn arb_graph() -> impl Strategy<Value = FormulaGraph> {
        (1usize..=7).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..=n * 2).prop_map(move |e| graph(n, &e))
        })
    }

    proptest! {
        #[test]
        fn exact_treewidth_matches_all_orderings(g in arb_graph()) {
            let t = treewidth(&g);
            prop_assert!(t.exact);
            prop_assert!(t.lower <= t.value && t.value <= t.upper);
            prop_assert_eq!(t.value, brute_treewidth(&g));
        }
    }
}
