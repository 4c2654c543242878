//! Answer counting: a reference evaluator and the structural counting paths.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expansion::star_expansion;
use crate::formula::{EpFormula, Node};
use crate::hom::HomSearch;
use crate::normalize::normalize_ep;
use crate::pp::PpFormula;
use crate::signature::Signature;
use crate::structure::Structure;

/// Number of satisfying assignments of the liberal variables.
pub type AnswerCount = BigUint;

pub(crate) fn check_signature(formula: &Signature, b: &Structure) -> Result<()> {
    for (name, arity) in formula.iter() {
        if b.signature().arity(name) != Some(arity) {
            return Err(Error::SignatureMismatch(format!(
                "structure has no relation {name}/{arity}"
            )));
        }
    }
    Ok(())
}

pub(crate) fn pow(base: usize, exp: usize) -> BigUint {
    num_traits::pow(BigUint::from(base), exp)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Truth {
    True,
    False,
    Unknown,
}

enum Op {
    True,
    Atom { rel: usize, args: Vec<usize> },
    And(Vec<usize>),
    Or(Vec<usize>),
    Exists { var: usize, body: usize },
}

struct Arena {
    ops: Vec<Op>,
    free: Vec<Vec<usize>>,
}

fn flatten(
    node: &Node,
    arena: &mut Arena,
    vars: &mut HashMap<String, usize>,
    rels: &[&str],
) -> usize {
    let (op, free): (Op, Vec<usize>) = match node {
        Node::True => (Op::True, vec![]),
        Node::Atom { relation, args } => {
            let args: Vec<usize> = args.iter().map(|a| vars[a]).collect();
            let mut free = args.clone();
            free.sort_unstable();
            free.dedup();
            let rel = rels.iter().position(|r| r == relation).unwrap();
            (Op::Atom { rel, args }, free)
        }
        Node::And(..) | Node::Or(..) => {
            let is_and = matches!(node, Node::And(..));
            let mut parts = Vec::new();
            let mut stack = vec![node];
            while let Some(n) = stack.pop() {
                match n {
                    Node::And(a, b) if is_and => stack.extend([b.as_ref(), a.as_ref()]),
                    Node::Or(a, b) if !is_and => stack.extend([b.as_ref(), a.as_ref()]),
                    other => parts.push(flatten(other, arena, vars, rels)),
                }
            }
            let mut free: Vec<usize> = parts.iter().flat_map(|&p| arena.free[p].clone()).collect();
            free.sort_unstable();
            free.dedup();
            (
                if is_and {
                    Op::And(parts)
                } else {
                    Op::Or(parts)
                },
                free,
            )
        }
        Node::Exists(v, body) => {
            let var = vars.len();
            vars.insert(v.clone(), var);
            let body = flatten(body, arena, vars, rels);
            let free = arena.free[body]
                .iter()
                .copied()
                .filter(|&x| x != var)
                .collect();
            (Op::Exists { var, body }, free)
        }
    };
    arena.ops.push(op);
    arena.free.push(free);
    arena.ops.len() - 1
}

/// Projections of a relation keyed by (relation, bound-position mask).
type ProjectionCache = HashMap<(usize, u64), HashSet<Vec<usize>>>;

struct Evaluator<'a> {
    arena: Arena,
    relations: Vec<&'a std::collections::BTreeSet<Vec<usize>>>,
    size: usize,
    projections: RefCell<ProjectionCache>,
    memo: RefCell<HashMap<(usize, Vec<usize>), bool>>,
}

impl Evaluator<'_> {
    fn eval(&self, id: usize, env: &mut [Option<usize>]) -> Truth {
        match &self.arena.ops[id] {
            Op::True => Truth::True,
            Op::Atom { rel, args } => {
                let values: Vec<Option<usize>> = args.iter().map(|&a| env[a]).collect();
                if values.iter().all(Option::is_some) {
                    let t: Vec<usize> = values.into_iter().map(Option::unwrap).collect();
                    return if self.relations[*rel].contains(&t) {
                        Truth::True
                    } else {
                        Truth::False
                    };
                }
                let mask = values
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.is_some())
                    .fold(0u64, |m, (i, _)| m | (1 << i));
                if mask == 0 {
                    return if self.relations[*rel].is_empty() {
                        Truth::False
                    } else {
                        Truth::Unknown
                    };
                }
                let key: Vec<usize> = values.iter().flatten().copied().collect();
                let mut proj = self.projections.borrow_mut();
                let index = proj.entry((*rel, mask)).or_insert_with(|| {
                    self.relations[*rel]
                        .iter()
                        .map(|t| {
                            t.iter()
                                .enumerate()
                                .filter(|(i, _)| mask & (1 << i) != 0)
                                .map(|(_, &x)| x)
                                .collect()
                        })
                        .collect()
                });
                if index.contains(&key) {
                    Truth::Unknown
                } else {
                    Truth::False
                }
            }
            Op::And(parts) => {
                let mut all = true;
                for &p in parts {
                    match self.eval(p, env) {
                        Truth::False => return Truth::False,
                        Truth::Unknown => all = false,
                        Truth::True => {}
                    }
                }
                if all {
                    Truth::True
                } else {
                    Truth::Unknown
                }
            }
            Op::Or(parts) => {
                let mut none = true;
                for &p in parts {
                    match self.eval(p, env) {
                        Truth::True => return Truth::True,
                        Truth::Unknown => none = false,
                        Truth::False => {}
                    }
                }
                if none {
                    Truth::False
                } else {
                    Truth::Unknown
                }
            }
            &Op::Exists { var, body } => {
                let free = &self.arena.free[id];
                if free.iter().any(|&v| env[v].is_none()) {
                    return match self.eval(body, env) {
                        Truth::False => Truth::False,
                        _ => Truth::Unknown,
                    };
                }
                let key = (
                    id,
                    free.iter().map(|&v| env[v].unwrap()).collect::<Vec<_>>(),
                );
                if let Some(&known) = self.memo.borrow().get(&key) {
                    return if known { Truth::True } else { Truth::False };
                }
                let mut found = false;
                for x in 0..self.size {
                    env[var] = Some(x);
                    let r = self.search_body(body, env);
                    if r {
                        found = true;
                        break;
                    }
                }
                env[var] = None;
                self.memo.borrow_mut().insert(key, found);
                if found {
                    Truth::True
                } else {
                    Truth::False
                }
            }
        }
    }

    /// Decides a node whose free variables are all assigned.
    fn search_body(&self, id: usize, env: &mut [Option<usize>]) -> bool {
        match self.eval(id, env) {
            Truth::True => true,
            Truth::False => false,
            Truth::Unknown => unreachable!("node with assigned free variables is decided"),
        }
    }
}

/// Reference count: backtracks over assignments of the liberal variables in order,
/// evaluating the formula with three-valued partial evaluation to prune.
pub fn brute_force_count(phi: &EpFormula, b: &Structure) -> Result<AnswerCount> {
    check_signature(phi.signature(), b)?;
    let rels: Vec<&str> = phi.signature().names().collect();
    let mut vars: HashMap<String, usize> = phi
        .lib()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), i))
        .collect();
    let mut arena = Arena {
        ops: Vec::new(),
        free: Vec::new(),
    };
    let root = flatten(phi.body(), &mut arena, &mut vars, &rels);
    let ev = Evaluator {
        arena,
        relations: rels.iter().map(|r| b.relation(r)).collect(),
        size: b.size(),
        projections: RefCell::new(HashMap::new()),
        memo: RefCell::new(HashMap::new()),
    };
    let mut env = vec![None; vars.len()];
    let n = phi.lib().len();
    let mut total = BigUint::zero();
    fn walk(
        ev: &Evaluator,
        root: usize,
        env: &mut [Option<usize>],
        depth: usize,
        n: usize,
        total: &mut BigUint,
    ) {
        match ev.eval(root, env) {
            Truth::False => {}
            Truth::True => *total += pow(ev.size, n - depth),
            Truth::Unknown => {
                assert!(
                    depth < n,
                    "formula with all liberal variables assigned is decided"
                );
                for x in 0..ev.size {
                    env[depth] = Some(x);
                    walk(ev, root, env, depth + 1, n, total);
                }
                env[depth] = None;
            }
        }
    }
    walk(&ev, root, &mut env, 0, n, &mut total);
    Ok(total)
}

struct Factor {
    vars: Vec<usize>,
    rows: HashSet<Vec<usize>>,
}

fn join(a: &Factor, b: &Factor) -> Factor {
    let shared: Vec<(usize, usize)> = a
        .vars
        .iter()
        .enumerate()
        .filter_map(|(i, v)| b.vars.iter().position(|w| w == v).map(|j| (i, j)))
        .collect();
    let extra: Vec<usize> = (0..b.vars.len())
        .filter(|j| !shared.iter().any(|&(_, k)| k == *j))
        .collect();
    let mut index: HashMap<Vec<usize>, Vec<&Vec<usize>>> = HashMap::new();
    for row in &b.rows {
        index
            .entry(shared.iter().map(|&(_, j)| row[j]).collect())
            .or_default()
            .push(row);
    }
    let mut rows = HashSet::new();
    for row in &a.rows {
        let key: Vec<usize> = shared.iter().map(|&(i, _)| row[i]).collect();
        if let Some(matches) = index.get(&key) {
            for m in matches {
                let mut r = row.clone();
                r.extend(extra.iter().map(|&j| m[j]));
                rows.insert(r);
            }
        }
    }
    let mut vars = a.vars.clone();
    vars.extend(extra.iter().map(|&j| b.vars[j]));
    Factor { vars, rows }
}

fn project_out(f: &Factor, var: usize) -> Factor {
    let keep: Vec<usize> = (0..f.vars.len()).filter(|&i| f.vars[i] != var).collect();
    Factor {
        vars: keep.iter().map(|&i| f.vars[i]).collect(),
        rows: f
            .rows
            .iter()
            .map(|r| keep.iter().map(|&i| r[i]).collect())
            .collect(),
    }
}

/// Size of the projection onto the liberal elements of the homomorphisms from a
/// connected structure, by join-project with min-degree elimination.
fn join_project(a: &Structure, lib: &[usize], b: &Structure) -> BigUint {
    let mut factors: Vec<Factor> = Vec::new();
    for (rel, tuples) in a.relations() {
        let target = b.relation(rel);
        for t in tuples {
            let mut vars = t.clone();
            vars.sort_unstable();
            vars.dedup();
            let pos: Vec<usize> = vars
                .iter()
                .map(|v| t.iter().position(|x| x == v).unwrap())
                .collect();
            let rows = target
                .iter()
                .filter(|u| {
                    (0..t.len()).all(|i| u[i] == u[pos[vars.binary_search(&t[i]).unwrap()]])
                })
                .map(|u| pos.iter().map(|&p| u[p]).collect())
                .collect();
            factors.push(Factor { vars, rows });
        }
    }
    if factors.iter().any(|f| f.rows.is_empty()) {
        return BigUint::zero();
    }
    let mut pending: Vec<usize> = (0..a.size()).filter(|e| !lib.contains(e)).collect();
    while !pending.is_empty() {
        let degree = |v: usize| -> usize {
            let mut nb: Vec<usize> = factors
                .iter()
                .filter(|f| f.vars.contains(&v))
                .flat_map(|f| f.vars.iter().copied())
                .collect();
            nb.sort_unstable();
            nb.dedup();
            nb.len()
        };
        let (k, &v) = pending
            .iter()
            .enumerate()
            .min_by_key(|&(_, &v)| (degree(v), v))
            .unwrap();
        pending.swap_remove(k);
        let (mut touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = rest;
        touching.sort_by_key(|f| f.rows.len());
        let joined = touching
            .into_iter()
            .reduce(|acc, f| join(&acc, &f))
            .expect("every quantified element of a connected structure occurs in a tuple");
        let projected = project_out(&joined, v);
        if projected.rows.is_empty() {
            return BigUint::zero();
        }
        factors.push(projected);
    }
    factors.sort_by_key(|f| f.rows.len());
    let result = factors.into_iter().reduce(|acc, f| join(&acc, &f)).unwrap();
    BigUint::from(result.rows.len())
}

/// Count of a primitive positive formula as the product over its components.
pub fn count_pp(pp: &PpFormula, b: &Structure) -> Result<AnswerCount> {
    check_signature(pp.signature(), b)?;
    let mut total = BigUint::one();
    for comp in pp.components() {
        let s = comp.structure();
        let factor = if !comp.is_liberal() {
            if HomSearch::new(s, b).exists() {
                BigUint::one()
            } else {
                BigUint::zero()
            }
        } else if s.tuple_count() == 0 {
            pow(b.size(), s.size())
        } else {
            join_project(s, &comp.lib_indices(), b)
        };
        if factor.is_zero() {
            return Ok(factor);
        }
        total *= factor;
    }
    Ok(total)
}

/// Count of an existential positive formula through its normalized form and the
/// inclusion-exclusion expansion of its all-free part.
pub fn count_ep(phi: &EpFormula, b: &Structure) -> Result<AnswerCount> {
    check_signature(phi.signature(), b)?;
    let normal = normalize_ep(phi);
    for theta in normal.sentence_disjuncts() {
        if HomSearch::new(theta.structure(), b).exists() {
            return Ok(pow(b.size(), phi.lib().len()));
        }
    }
    let free: Vec<PpFormula> = normal.free_disjuncts().into_iter().cloned().collect();
    if free.is_empty() {
        return Ok(BigUint::zero());
    }
    let af =
        crate::normalize::DisjunctiveEp::new(phi.signature().clone(), phi.lib().to_vec(), free)?;
    star_expansion(&af)?.evaluate(|psi| count_pp(psi, b))
}
