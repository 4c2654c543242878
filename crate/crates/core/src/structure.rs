//! Finite relational structures and the operations that build new ones from old:
//! products, disjoint unions with copies of a structure, and the one-element
//! structure carrying the all-equal tuple in every relation.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use itertools::Itertools;

use crate::error::{Error, ParseError, Result};
use crate::lexer::Cursor;
use crate::signature::Signature;

pub type Tuple = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    signature: Signature,
    elements: Vec<String>,
    index: HashMap<String, usize>,
    relations: BTreeMap<String, BTreeSet<Tuple>>,
}

/// Integers compare numerically and sort before other names.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

fn is_plain_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Structure {
    /// Structure with an empty universe; elements are added afterwards.
    pub fn new(signature: Signature) -> Self {
        let relations = signature
            .names()
            .map(|n| (n.to_string(), BTreeSet::new()))
            .collect();
        Self {
            signature,
            elements: Vec::new(),
            index: HashMap::new(),
            relations,
        }
    }

    pub fn with_elements<S: AsRef<str>>(
        signature: Signature,
        elements: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let mut s = Self::new(signature);
        for e in elements {
            let e = e.as_ref();
            if s.index.contains_key(e) {
                return Err(Error::InvalidStructure(format!("duplicate element {e}")));
            }
            s.add_element(e);
        }
        Ok(s)
    }

    /// Adds an element (or returns the index of an existing one with that name).
    pub fn add_element(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.elements.len();
        self.elements.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    pub fn insert_tuple(&mut self, relation: &str, tuple: Tuple) -> Result<bool> {
        let arity = self
            .signature
            .arity(relation)
            .ok_or_else(|| Error::InvalidStructure(format!("unknown relation {relation}")))?;
        if tuple.len() != arity {
            return Err(Error::InvalidStructure(format!(
                "relation {relation} has arity {arity}, got a tuple of length {}",
                tuple.len()
            )));
        }
        if let Some(&bad) = tuple.iter().find(|&&e| e >= self.elements.len()) {
            return Err(Error::InvalidStructure(format!(
                "tuple entry {bad} outside the universe"
            )));
        }
        Ok(self.relations.get_mut(relation).unwrap().insert(tuple))
    }

    /// Inserts a tuple given by element names.
    pub fn insert_named<S: AsRef<str>>(&mut self, relation: &str, names: &[S]) -> Result<bool> {
        let tuple = names
            .iter()
            .map(|n| {
                self.index_of(n.as_ref()).ok_or_else(|| {
                    Error::InvalidStructure(format!("element {} not in the universe", n.as_ref()))
                })
            })
            .collect::<Result<Tuple>>()?;
        self.insert_tuple(relation, tuple)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &str {
        &self.elements[i]
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn relation(&self, name: &str) -> &BTreeSet<Tuple> {
        static EMPTY: BTreeSet<Tuple> = BTreeSet::new();
        self.relations.get(name).unwrap_or(&EMPTY)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &BTreeSet<Tuple>)> + '_ {
        self.relations.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn tuple_count(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }

    /// Whether element `e` occurs in some tuple.
    pub fn occurs(&self, e: usize) -> bool {
        self.relations
            .values()
            .any(|ts| ts.iter().any(|t| t.contains(&e)))
    }

    /// Same structure over a larger signature (new relations empty).
    pub fn with_signature(&self, signature: Signature) -> Result<Structure> {
        for (name, arity) in self.signature.iter() {
            if signature.arity(name) != Some(arity) {
                return Err(Error::SignatureMismatch(format!(
                    "{name}/{arity} missing from the target signature"
                )));
            }
        }
        let mut out = Structure::new(signature);
        out.elements = self.elements.clone();
        out.index = self.index.clone();
        for (name, tuples) in &self.relations {
            out.relations.insert(name.clone(), tuples.clone());
        }
        Ok(out)
    }

    /// Induced substructure on `keep` (indices into this structure), in the given order.
    pub fn induced(&self, keep: &[usize]) -> Structure {
        let mut out = Structure::new(self.signature.clone());
        let mut remap = vec![usize::MAX; self.size()];
        for &e in keep {
            remap[e] = out.add_element(&self.elements[e]);
        }
        for (name, tuples) in &self.relations {
            let target = out.relations.get_mut(name).unwrap();
            for t in tuples {
                if t.iter().all(|&e| remap[e] != usize::MAX) {
                    target.insert(t.iter().map(|&e| remap[e]).collect());
                }
            }
        }
        out
    }

    /// Element names mapped through `rename`; must stay injective.
    pub fn renamed(&self, mut rename: impl FnMut(&str) -> String) -> Result<Structure> {
        let names: Vec<String> = self.elements.iter().map(|e| rename(e)).collect();
        let mut out = Structure::with_elements(self.signature.clone(), &names)?;
        out.relations = self.relations.clone();
        Ok(out)
    }

    pub(crate) fn check_same_signature(&self, other: &Structure) -> Result<()> {
        if self.signature != other.signature {
            return Err(Error::SignatureMismatch(format!(
                "[{}] vs [{}]",
                self.signature, other.signature
            )));
        }
        Ok(())
    }

    /// Canonical text: elements in natural order, tuples sorted, empty relations omitted.
    pub fn to_text(&self, name: &str) -> String {
        let order: Vec<usize> = (0..self.size())
            .sorted_by(|&a, &b| natural_cmp(&self.elements[a], &self.elements[b]))
            .collect();
        let mut rank = vec![0; self.size()];
        for (r, &e) in order.iter().enumerate() {
            rank[e] = r;
        }
        let quote = |s: &str| {
            if is_plain_name(s) {
                s.to_string()
            } else {
                format!("\"{s}\"")
            }
        };
        let mut out = format!("structure {}\n", quote(name));
        out.push_str("domain");
        for &e in &order {
            out.push(' ');
            out.push_str(&quote(&self.elements[e]));
        }
        out.push('\n');
        for (rel, tuples) in &self.relations {
            if tuples.is_empty() {
                continue;
            }
            out.push_str(&format!("rel {rel}:"));
            let sorted = tuples
                .iter()
                .sorted_by_key(|t| t.iter().map(|&e| rank[e]).collect::<Vec<_>>());
            for t in sorted {
                let inner = t.iter().map(|&e| quote(&self.elements[e])).join(",");
                out.push_str(&format!(" ({inner})"));
            }
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text("S"))
    }
}

/// The one-element structure whose every relation holds the constant tuple.
pub fn unit_structure(signature: &Signature) -> Structure {
    let mut s = Structure::new(signature.clone());
    s.add_element("a");
    for (name, arity) in signature.iter() {
        s.relations.get_mut(name).unwrap().insert(vec![0; arity]);
    }
    s
}

/// Universe `0..size` with every relation full.
pub fn full_structure(signature: &Signature, size: usize) -> Structure {
    let names: Vec<String> = (0..size).map(|i| i.to_string()).collect();
    let mut s = Structure::with_elements(signature.clone(), &names).unwrap();
    for (name, arity) in signature.iter() {
        let tuples = s.relations.get_mut(name).unwrap();
        for t in (0..arity).map(|_| 0..size).multi_cartesian_product() {
            tuples.insert(t);
        }
    }
    s
}

/// Direct product. Element `(a, b)` is named `(a|b)`.
pub fn product(d1: &Structure, d2: &Structure) -> Result<Structure> {
    d1.check_same_signature(d2)?;
    let n2 = d2.size();
    let mut out = Structure::new(d1.signature.clone());
    out.elements.reserve(d1.size() * n2);
    for a in &d1.elements {
        for b in &d2.elements {
            let name = format!("({a}|{b})");
            let i = out.elements.len();
            out.index.insert(name.clone(), i);
            out.elements.push(name);
        }
    }
    for (name, t1s) in &d1.relations {
        let t2s = &d2.relations[name];
        let target = out.relations.get_mut(name).unwrap();
        for t1 in t1s {
            for t2 in t2s {
                target.insert(t1.iter().zip(t2).map(|(&a, &b)| a * n2 + b).collect());
            }
        }
    }
    Ok(out)
}

/// `d` multiplied with itself `exponent` times; exponent 0 gives the unit structure.
pub fn power(d: &Structure, exponent: usize) -> Result<Structure> {
    let mut out = unit_structure(d.signature());
    for _ in 0..exponent {
        out = product(&out, d)?;
    }
    Ok(out)
}

/// `b` plus `k` disjoint copies of `i`. Copy `c` of element `e` is named `e#c`.
pub fn disjoint_union(b: &Structure, k: usize, i: &Structure) -> Result<Structure> {
    b.check_same_signature(i)?;
    let mut out = b.clone();
    for copy in 1..=k {
        let mut remap = Vec::with_capacity(i.size());
        for e in &i.elements {
            let mut name = format!("{e}#{copy}");
            while out.index.contains_key(&name) {
                name.push('#');
            }
            remap.push(out.add_element(&name));
        }
        for (name, tuples) in &i.relations {
            let target = out.relations.get_mut(name).unwrap();
            for t in tuples {
                target.insert(t.iter().map(|&e| remap[e]).collect());
            }
        }
    }
    Ok(out)
}

/// Disjoint union of a list of structures over one signature.
pub fn disjoint_union_all(parts: &[&Structure]) -> Result<Structure> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Precondition("disjoint union of an empty list".into()))?;
    let mut out = Structure::new(first.signature.clone());
    for (p, part) in parts.iter().enumerate() {
        part.check_same_signature(first)?;
        let remap: Vec<usize> = part
            .elements
            .iter()
            .map(|e| {
                let mut name = format!("{e}#{}", p + 1);
                while out.index.contains_key(&name) {
                    name.push('#');
                }
                out.add_element(&name)
            })
            .collect();
        for (name, tuples) in &part.relations {
            let target = out.relations.get_mut(name).unwrap();
            for t in tuples {
                target.insert(t.iter().map(|&e| remap[e]).collect());
            }
        }
    }
    Ok(out)
}

/// Reads every `structure ... end` block of a structure file.
///
/// `sig` lines in the file are merged with `signature`; relations must be declared
/// by one of the two.
pub fn parse_structures(text: &str, signature: &Signature) -> Result<Vec<(String, Structure)>> {
    let mut cur = Cursor::new(text)?;
    let mut sig = signature.clone();
    let mut out = Vec::new();
    while !cur.at_end() {
        if cur.peek_is_word("sig") {
            cur.next();
            crate::formula::parse_sig_items(&mut cur, &mut sig)?;
            continue;
        }
        cur.expect_keyword("structure")?;
        let (name, _, _) = cur.expect_name("structure name")?;
        out.push((name, parse_structure_body(&mut cur, &sig)?));
    }
    if out.is_empty() {
        return Err(cur.error_here("expected 'structure'").into());
    }
    Ok(out)
}

/// Reads a structure file holding exactly one structure.
pub fn parse_structure(text: &str, signature: &Signature) -> Result<Structure> {
    let mut all = parse_structures(text, signature)?;
    if all.len() != 1 {
        return Err(Error::InvalidStructure(format!(
            "expected one structure, found {}",
            all.len()
        )));
    }
    Ok(all.pop().unwrap().1)
}

fn parse_structure_body(cur: &mut Cursor, sig: &Signature) -> Result<Structure> {
    cur.expect_keyword("domain")?;
    let mut s = Structure::new(sig.clone());
    while let Some(t) = cur.peek() {
        if cur.peek_is_word("rel") || cur.peek_is_word("end") {
            break;
        }
        let (line, column) = (t.line, t.column);
        let (name, _, _) = cur.expect_name("domain element")?;
        if s.index_of(&name).is_some() {
            return Err(ParseError::new(line, column, format!("duplicate element {name}")).into());
        }
        s.add_element(&name);
    }
    if s.is_empty() {
        return Err(cur.error_here("empty domain").into());
    }
    while cur.peek_is_word("rel") {
        cur.next();
        let (rel, line, column) = cur.expect_word("relation name")?;
        let arity = sig
            .arity(&rel)
            .ok_or_else(|| ParseError::new(line, column, format!("unknown relation {rel}")))?;
        cur.expect_sym(':')?;
        while cur.peek_is_sym('(') {
            let (line, column) = {
                let t = cur.peek().unwrap();
                (t.line, t.column)
            };
            cur.next();
            let mut tuple = Vec::new();
            loop {
                let (e, el, ec) = cur.expect_name("tuple entry")?;
                let idx = s.index_of(&e).ok_or_else(|| {
                    ParseError::new(el, ec, format!("element {e} is not in the domain"))
                })?;
                tuple.push(idx);
                if cur.peek_is_sym(',') {
                    cur.next();
                } else {
                    break;
                }
            }
            cur.expect_sym(')')?;
            if tuple.len() != arity {
                return Err(ParseError::new(
                    line,
                    column,
                    format!(
                        "relation {rel} has arity {arity}, tuple has {} entries",
                        tuple.len()
                    ),
                )
                .into());
            }
            s.insert_tuple(&rel, tuple)?;
        }
    }
    cur.expect_keyword("end")?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e2() -> Signature {
        Signature::from_pairs([("E", 2)]).unwrap()
    }

    pub(crate) const PATH_LOOP: &str =
        "structure C\ndomain 1 2 3 4\nrel E: (1,2) (2,3) (3,4) (4,4)\nend\n";

    #[test]
    fn parses_the_four_element_path_with_loop() {
        let c = parse_structure(PATH_LOOP, &e2()).unwrap();
        assert_eq!(c.size(), 4);
        assert_eq!(c.relation("E").len(), 4);
        assert_eq!(c.to_text("C"), PATH_LOOP);
    }

    #[test]
    fn empty_relation_list_and_dedup() {
        let s = parse_structure("structure s domain a b end", &e2()).unwrap();
        assert!(s.relation("E").is_empty());
        let s = parse_structure("structure s domain a b rel E: (a,b) (a,b) end", &e2()).unwrap();
        assert_eq!(s.relation("E").len(), 1);
    }

    #[test]
    fn parse_errors() {
        let arity = parse_structure("structure s domain a b c\nrel E: (a,b,c) end", &e2());
        match arity {
            Err(Error::Parse(p)) => assert_eq!((p.line, p.column), (2, 8)),
            other => panic!("expected arity error, got {other:?}"),
        }
        assert!(parse_structure("structure s domain a rel F: (a) end", &e2()).is_err());
        assert!(parse_structure("structure s domain a rel E: (a,b) end", &e2()).is_err());
        assert!(parse_structure("structure s domain rel E: end", &e2()).is_err());
    }

    #[test]
    fn signature_lines_inside_structure_files() {
        let s = parse_structure("sig F/1\nstructure s domain a rel F: (a) end", &e2()).unwrap();
        assert_eq!(s.signature().len(), 2);
    }

    #[test]
    fn quoted_names_round_trip() {
        let c = parse_structure(PATH_LOOP, &e2()).unwrap();
        let p = product(&c, &c).unwrap();
        let text = p.to_text("P");
        let back = parse_structure(&text, &e2()).unwrap();
        assert_eq!(back.to_text("P"), text);
    }

    #[test]
    fn product_of_full_structures_is_full() {
        let f = full_structure(&e2(), 2);
        let p = product(&f, &f).unwrap();
        assert_eq!(p.size(), 4);
        assert_eq!(p.relation("E").len(), 16);
        let u = unit_structure(&e2());
        let uu = product(&u, &u).unwrap();
        assert_eq!(uu.size(), 1);
        assert_eq!(uu.relation("E").len(), 1);
    }

    #[test]
    fn disjoint_union_with_zero_copies_is_a_copy() {
        let c = parse_structure(PATH_LOOP, &e2()).unwrap();
        let u = unit_structure(&e2());
        assert_eq!(disjoint_union(&c, 0, &u).unwrap(), c);
        let d = disjoint_union(&c, 2, &u).unwrap();
        assert_eq!(d.size(), 6);
        assert_eq!(d.relation("E").len(), 6);
        assert!(d.index_of("a#2").is_some());
    }

    #[test]
    fn natural_order() {
        let mut v = vec!["10", "2", "b", "1", "a"];
        v.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(v, ["1", "2", "10", "a", "b"]);
    }
}
