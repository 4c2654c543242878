//! Homomorphism search between finite structures and cores.
//!
//! The search keeps a bitset domain per source element, enforces generalized arc
//! consistency on every source tuple, and branches on the smallest domain.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;

use crate::structure::Structure;

struct Constraint {
    vars: Vec<usize>,
    /// Target tuples compatible with the equality pattern of `vars`.
    targets: Vec<Vec<usize>>,
}

/// Configurable search for homomorphisms from `a` to `b`.
pub struct HomSearch<'a> {
    a: &'a Structure,
    b: &'a Structure,
    domains: Vec<FixedBitSet>,
    injective: Vec<bool>,
    constraints: Vec<Constraint>,
    by_var: Vec<Vec<usize>>,
}

type Domains = Vec<FixedBitSet>;

impl<'a> HomSearch<'a> {
    pub fn new(a: &'a Structure, b: &'a Structure) -> Self {
        let n = a.size();
        let m = b.size();
        let mut full = FixedBitSet::with_capacity(m);
        full.insert_range(..);
        let mut constraints = Vec::new();
        let mut by_var = vec![Vec::new(); n];
        for (rel, tuples) in a.relations() {
            let target = b.relation(rel);
            for t in tuples {
                let targets = target
                    .iter()
                    .filter(|u| {
                        u.len() == t.len()
                            && (0..t.len())
                                .all(|i| (0..i).all(|j| (t[i] == t[j]) <= (u[i] == u[j])))
                    })
                    .cloned()
                    .collect();
                let id = constraints.len();
                for (i, &v) in t.iter().enumerate() {
                    if !t[..i].contains(&v) {
                        by_var[v].push(id);
                    }
                }
                constraints.push(Constraint {
                    vars: t.clone(),
                    targets,
                });
            }
        }
        HomSearch {
            a,
            b,
            domains: vec![full; n],
            injective: vec![false; n],
            constraints,
            by_var,
        }
    }

    /// Only targets in `allowed` may be used for source element `e`.
    pub fn restrict(&mut self, e: usize, allowed: impl IntoIterator<Item = usize>) -> &mut Self {
        let mut set = FixedBitSet::with_capacity(self.b.size());
        set.extend(allowed.into_iter().filter(|&t| t < self.b.size()));
        self.domains[e].intersect_with(&set);
        self
    }

    /// Target `t` is never used.
    pub fn forbid_target(&mut self, t: usize) -> &mut Self {
        for d in &mut self.domains {
            d.set(t, false);
        }
        self
    }

    pub fn fix(&mut self, e: usize, t: usize) -> &mut Self {
        self.restrict(e, [t])
    }

    /// The listed source elements must receive pairwise distinct targets.
    pub fn injective_on(&mut self, elements: impl IntoIterator<Item = usize>) -> &mut Self {
        for e in elements {
            self.injective[e] = true;
        }
        self
    }

    fn propagate(&self, doms: &mut Domains, mut queue: VecDeque<usize>) -> bool {
        let m = self.b.size();
        let mut queued = vec![false; self.constraints.len()];
        for &c in &queue {
            queued[c] = true;
        }
        while let Some(c) = queue.pop_front() {
            queued[c] = false;
            let con = &self.constraints[c];
            let mut support = vec![FixedBitSet::with_capacity(m); con.vars.len()];
            for u in &con.targets {
                if con.vars.iter().zip(u).all(|(&v, &x)| doms[v].contains(x)) {
                    for (i, &x) in u.iter().enumerate() {
                        support[i].insert(x);
                    }
                }
            }
            for (i, &v) in con.vars.iter().enumerate() {
                let before = doms[v].count_ones(..);
                doms[v].intersect_with(&support[i]);
                let after = doms[v].count_ones(..);
                if after == 0 {
                    return false;
                }
                if after < before {
                    for &d in &self.by_var[v] {
                        if d != c && !queued[d] {
                            queued[d] = true;
                            queue.push_back(d);
                        }
                    }
                }
            }
        }
        true
    }

    fn initial(&self) -> Option<Domains> {
        let mut doms = self.domains.clone();
        if doms.iter().any(|d| d.is_clear()) {
            return None;
        }
        self.propagate(&mut doms, (0..self.constraints.len()).collect())
            .then_some(doms)
    }

    /// Sets `e` to `x` and propagates. Returns `None` on a wipe-out.
    fn assign(&self, doms: &Domains, e: usize, x: usize) -> Option<Domains> {
        let mut next = doms.clone();
        next[e].clear();
        next[e].insert(x);
        let mut queue: VecDeque<usize> = self.by_var[e].iter().copied().collect();
        if self.injective[e] {
            for (f, d) in next.iter_mut().enumerate() {
                if f != e && self.injective[f] && d.contains(x) {
                    d.set(x, false);
                    if d.is_clear() {
                        return None;
                    }
                    queue.extend(self.by_var[f].iter().copied());
                }
            }
        }
        self.propagate(&mut next, queue).then_some(next)
    }

    fn pick(
        doms: &Domains,
        among: impl Iterator<Item = usize>,
        assigned: &[bool],
    ) -> Option<usize> {
        among
            .filter(|&v| !assigned[v])
            .min_by_key(|&v| doms[v].count_ones(..))
    }

    fn solve(&self, doms: Domains, assigned: &mut Vec<bool>) -> Option<Vec<usize>> {
        let var = match Self::pick(&doms, 0..doms.len(), assigned) {
            None => return Some(doms.iter().map(|d| d.ones().next().unwrap()).collect()),
            Some(v) => v,
        };
        assigned[var] = true;
        for x in doms[var].ones() {
            if let Some(next) = self.assign(&doms, var, x) {
                if let Some(map) = self.solve(next, assigned) {
                    assigned[var] = false;
                    return Some(map);
                }
            }
        }
        assigned[var] = false;
        None
    }

    /// Some homomorphism, as a vector indexed by source element.
    pub fn find(&self) -> Option<Vec<usize>> {
        let doms = self.initial()?;
        let map = self.solve(doms, &mut vec![false; self.a.size()])?;
        debug_assert!(is_homomorphism(self.a, self.b, &map));
        Some(map)
    }

    pub fn exists(&self) -> bool {
        self.find().is_some()
    }

    /// Calls `f` once for every distinct restriction of a homomorphism to
    /// `priority` (values listed in the order of `priority`). Stops early when `f`
    /// returns false; the return value tells whether enumeration completed.
    pub fn for_each_projection(
        &self,
        priority: &[usize],
        mut f: impl FnMut(&[usize]) -> bool,
    ) -> bool {
        let Some(doms) = self.initial() else {
            return true;
        };
        let mut assigned = vec![false; self.a.size()];
        self.project(doms, priority, &mut assigned, &mut f)
    }

    fn project(
        &self,
        doms: Domains,
        priority: &[usize],
        assigned: &mut Vec<bool>,
        f: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        match Self::pick(&doms, priority.iter().copied(), assigned) {
            None => {
                let values: Vec<usize> = priority
                    .iter()
                    .map(|&v| doms[v].ones().next().unwrap())
                    .collect();
                if self.solve(doms, assigned).is_some() {
                    return f(&values);
                }
                true
            }
            Some(var) => {
                assigned[var] = true;
                for x in doms[var].ones() {
                    if let Some(next) = self.assign(&doms, var, x) {
                        if !self.project(next, priority, assigned, f) {
                            assigned[var] = false;
                            return false;
                        }
                    }
                }
                assigned[var] = false;
                true
            }
        }
    }

    /// Number of distinct restrictions of homomorphisms to `priority`.
    pub fn count_projections(&self, priority: &[usize]) -> u64 {
        let mut n = 0u64;
        self.for_each_projection(priority, |_| {
            n += 1;
            true
        });
        n
    }
}

pub fn is_homomorphism(a: &Structure, b: &Structure, map: &[usize]) -> bool {
    map.len() == a.size()
        && map.iter().all(|&x| x < b.size())
        && a.relations().all(|(rel, tuples)| {
            let target = b.relation(rel);
            tuples
                .iter()
                .all(|t| target.contains(&t.iter().map(|&e| map[e]).collect::<Vec<_>>()))
        })
}

pub fn find_homomorphism(a: &Structure, b: &Structure) -> Option<Vec<usize>> {
    HomSearch::new(a, b).find()
}

pub fn homomorphic(a: &Structure, b: &Structure) -> bool {
    find_homomorphism(a, b).is_some()
}

pub fn hom_equivalent(a: &Structure, b: &Structure) -> bool {
    homomorphic(a, b) && homomorphic(b, a)
}

/// Core of `a`, as an induced substructure keeping element names.
pub fn core(a: &Structure) -> Structure {
    let mut current = a.clone();
    'shrink: loop {
        for e in (0..current.size()).rev() {
            let mut search = HomSearch::new(&current, &current);
            search.forbid_target(e);
            if let Some(map) = search.find() {
                let mut image: Vec<usize> = map;
                image.sort_unstable();
                image.dedup();
                current = current.induced(&image);
                continue 'shrink;
            }
        }
        return current;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::Signature;
    use proptest::prelude::*;

    fn digraph(n: usize, edges: &[(usize, usize)]) -> Structure {
        let sig = Signature::from_pairs([("E", 2)]).unwrap();
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let mut s = Structure::with_elements(sig, &names).unwrap();
        for &(a, b) in edges {
            s.insert_tuple("E", vec![a, b]).unwrap();
        }
        s
    }

    fn cycle(n: usize) -> Structure {
        digraph(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    fn brute_homs(a: &Structure, b: &Structure) -> Vec<Vec<usize>> {
        let n = a.size();
        let m = b.size();
        let mut out = Vec::new();
        let total = m.pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let map: Vec<usize> = (0..n)
                .map(|_| {
                    let x = c % m;
                    c /= m;
                    x
                })
                .collect();
            if is_homomorphism(a, b, &map) {
                out.push(map);
            }
        }
        out
    }

    #[test]
    fn cycles() {
        assert!(homomorphic(&cycle(6), &cycle(3)));
        assert!(!homomorphic(&cycle(3), &cycle(6)));
        assert!(!homomorphic(&cycle(3), &cycle(2)));
        let loop1 = digraph(1, &[(0, 0)]);
        assert!(homomorphic(&cycle(5), &loop1));
    }

    #[test]
    fn core_of_even_undirected_cycle_is_an_edge() {
        let mut edges = Vec::new();
        for i in 0..6 {
            edges.push((i, (i + 1) % 6));
            edges.push(((i + 1) % 6, i));
        }
        let c = core(&digraph(6, &edges));
        assert_eq!(c.size(), 2);
        assert_eq!(c.tuple_count(), 2);
        assert_eq!(core(&cycle(5)).size(), 5);
    }

    #[test]
    fn injective_search() {
        let a = digraph(3, &[]);
        let b = digraph(2, &[]);
        let mut s = HomSearch::new(&a, &b);
        s.injective_on([0, 1, 2]);
        assert!(s.find().is_none());
        let mut s = HomSearch::new(&a, &b);
        s.injective_on([0, 1]);
        assert_eq!(s.count_projections(&[0, 1, 2]), 4);
    }

    #[test]
    fn projections_of_a_path() {
        let path = digraph(3, &[(0, 1), (1, 2)]);
        let target = digraph(3, &[(0, 1), (1, 2), (2, 2)]);
        // pairs (x,z) joined by a walk of length two
        assert_eq!(HomSearch::new(&path, &target).count_projections(&[0, 2]), 3);
    }

    fn arb_digraph(max: usize) -> impl Strategy<Value = Structure> {
        (1..=max).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..=n * 2)
                .prop_map(move |edges| digraph(n, &edges))
        })
    }

    proptest! {
        #[test]
        fn search_agrees_with_brute_force(a in arb_digraph(4), b in arb_digraph(3)) {
            let all = brute_homs(&a, &b);
            prop_assert_eq!(find_homomorphism(&a, &b).is_some(), !all.is_empty());
            let prio: Vec<usize> = (0..a.size().min(2)).collect();
            let mut distinct: Vec<Vec<usize>> = all.iter().map(|m| prio.iter().map(|&v| m[v]).collect()).collect();
            distinct.sort();
            distinct.dedup();
            prop_assert_eq!(HomSearch::new(&a, &b).count_projections(&prio), distinct.len() as u64);
        }

        #[test]
        fn core_is_equivalent_and_minimal(a in arb_digraph(5)) {
            let c = core(&a);
            prop_assert!(hom_equivalent(&a, &c));
            prop_assert!(c.size() <= a.size());
            prop_assert_eq!(core(&c).size(), c.size());
        }
    }
}
