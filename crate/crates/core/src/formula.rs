//! Existential positive formulas: AST, reader and printer.
//!
//! Bound variables are renamed to fresh `_qN` names when a formula is built, so no
//! variable is both liberal and quantified and no two quantifiers bind the same name.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::error::{Error, ParseError, Result};
use crate::lexer::{Cursor, Token, TokenKind};
use crate::signature::{is_identifier, Signature};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    /// The empty conjunction.
    True,
    Atom {
        relation: String,
        args: Vec<String>,
    },
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Exists(String, Box<Node>),
}

impl Node {
    pub fn atom<S: Into<String>>(relation: &str, args: impl IntoIterator<Item = S>) -> Node {
        Node::Atom {
            relation: relation.to_string(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn and(a: Node, b: Node) -> Node {
        Node::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Node, b: Node) -> Node {
        Node::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(v: &str, body: Node) -> Node {
        Node::Exists(v.to_string(), Box::new(body))
    }

    /// Left-nested conjunction; `True` for an empty list.
    pub fn conjunction(parts: impl IntoIterator<Item = Node>) -> Node {
        parts.into_iter().reduce(Node::and).unwrap_or(Node::True)
    }

    pub fn disjunction(parts: impl IntoIterator<Item = Node>) -> Option<Node> {
        parts.into_iter().reduce(Node::or)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Node::True => {}
            Node::Atom { args, .. } => {
                for a in args {
                    if !bound.contains(a) {
                        out.insert(a.clone());
                    }
                }
            }
            Node::And(a, b) | Node::Or(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Node::Exists(v, body) => {
                bound.push(v.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn contains_or(&self) -> bool {
        match self {
            Node::True | Node::Atom { .. } => false,
            Node::Or(..) => true,
            Node::And(a, b) => a.contains_or() || b.contains_or(),
            Node::Exists(_, b) => b.contains_or(),
        }
    }

    fn check_atoms(&self, sig: &Signature) -> Result<()> {
        match self {
            Node::True => Ok(()),
            Node::Atom { relation, args } => match sig.arity(relation) {
                None => Err(Error::InvalidFormula(format!(
                    "unknown relation {relation}"
                ))),
                Some(a) if a != args.len() => Err(Error::InvalidFormula(format!(
                    "relation {relation} has arity {a}, used with {} arguments",
                    args.len()
                ))),
                Some(_) => Ok(()),
            },
            Node::And(a, b) | Node::Or(a, b) => {
                a.check_atoms(sig)?;
                b.check_atoms(sig)
            }
            Node::Exists(_, b) => b.check_atoms(sig),
        }
    }
}

/// Generator of reserved `_qN` names avoiding a set of taken names.
#[derive(Debug, Clone)]
pub(crate) struct FreshNames {
    taken: HashSet<String>,
    next: usize,
}

impl FreshNames {
    pub fn new(taken: impl IntoIterator<Item = String>) -> Self {
        Self {
            taken: taken.into_iter().collect(),
            next: 0,
        }
    }

    pub fn fresh(&mut self) -> String {
        loop {
            let name = format!("_q{}", self.next);
            self.next += 1;
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }
}

fn rename_bound(node: &Node, env: &mut Vec<(String, String)>, fresh: &mut FreshNames) -> Node {
    match node {
        Node::True => Node::True,
        Node::Atom { relation, args } => Node::Atom {
            relation: relation.clone(),
            args: args
                .iter()
                .map(|a| {
                    env.iter()
                        .rev()
                        .find(|(from, _)| from == a)
                        .map_or_else(|| a.clone(), |(_, to)| to.clone())
                })
                .collect(),
        },
        Node::And(a, b) => Node::and(rename_bound(a, env, fresh), rename_bound(b, env, fresh)),
        Node::Or(a, b) => Node::or(rename_bound(a, env, fresh), rename_bound(b, env, fresh)),
        Node::Exists(v, body) => {
            let name = fresh.fresh();
            env.push((v.clone(), name.clone()));
            let body = rename_bound(body, env, fresh);
            env.pop();
            Node::Exists(name, Box::new(body))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpFormula {
    signature: Signature,
    lib: Vec<String>,
    body: Node,
}

impl EpFormula {
    /// Validates atoms against the signature, checks `free(body) ⊆ lib`, and renames
    /// every bound variable to a fresh reserved name.
    pub fn new(signature: Signature, lib: Vec<String>, body: Node) -> Result<Self> {
        let mut seen = HashSet::new();
        for v in &lib {
            if !is_identifier(v) {
                return Err(Error::InvalidFormula(format!("bad variable name {v:?}")));
            }
            if !seen.insert(v.clone()) {
                return Err(Error::InvalidFormula(format!(
                    "liberal variable {v} repeated"
                )));
            }
        }
        body.check_atoms(&signature)?;
        if let Some(v) = body.free_vars().into_iter().find(|v| !seen.contains(v)) {
            return Err(Error::InvalidFormula(format!(
                "free variable {v} is not among the liberal variables"
            )));
        }
        let mut fresh = FreshNames::new(lib.iter().cloned());
        let body = rename_bound(&body, &mut Vec::new(), &mut fresh);
        Ok(Self {
            signature,
            lib,
            body,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn lib(&self) -> &[String] {
        &self.lib
    }

    pub fn body(&self) -> &Node {
        &self.body
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        self.body.free_vars()
    }

    pub fn is_pp(&self) -> bool {
        !self.body.contains_or()
    }

    /// `lib(x,y): body`
    pub fn to_text(&self) -> String {
        format!("lib({}): {}", self.lib.join(","), self.body)
    }
}

impl fmt::Display for EpFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        #[derive(PartialEq)]
        enum Ctx {
            Top,
            OrOperand,
            AndOperand,
        }
        fn go(n: &Node, ctx: Ctx, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match n {
                Node::True => f.write_str("true"),
                Node::Atom { relation, args } => write!(f, "{relation}({})", args.join(",")),
                Node::And(a, b) => {
                    go(a, Ctx::AndOperand, f)?;
                    f.write_str(" & ")?;
                    go(b, Ctx::AndOperand, f)
                }
                Node::Or(a, b) => {
                    let wrap = ctx == Ctx::AndOperand;
                    if wrap {
                        f.write_str("(")?;
                    }
                    go(a, Ctx::OrOperand, f)?;
                    f.write_str(" | ")?;
                    go(b, Ctx::OrOperand, f)?;
                    if wrap {
                        f.write_str(")")?;
                    }
                    Ok(())
                }
                Node::Exists(..) => {
                    let mut vars = Vec::new();
                    let mut cur = n;
                    while let Node::Exists(v, body) = cur {
                        vars.push(v.as_str());
                        cur = body;
                    }
                    // a quantifier scopes to the closing parenthesis
                    let wrap = ctx != Ctx::Top;
                    if wrap {
                        f.write_str("(")?;
                    }
                    write!(f, "exists {}. ", vars.join(","))?;
                    go(cur, Ctx::Top, f)?;
                    if wrap {
                        f.write_str(")")?;
                    }
                    Ok(())
                }
            }
        }
        go(self, Ctx::Top, f)
    }
}

/// One `query` entry of a formula file.
#[derive(Clone, Debug)]
pub struct NamedQuery {
    pub name: String,
    pub formula: EpFormula,
}

#[derive(Clone, Debug)]
pub struct FormulaFile {
    pub signature: Signature,
    pub queries: Vec<NamedQuery>,
}

pub(crate) fn parse_sig_items(cur: &mut Cursor, sig: &mut Signature) -> Result<(), ParseError> {
    let mut any = false;
    while let (
        Some(Token {
            kind: TokenKind::Word(_),
            ..
        }),
        true,
    ) = (
        cur.peek(),
        matches!(
            cur.peek_nth(1),
            Some(Token {
                kind: TokenKind::Sym('/'),
                ..
            })
        ),
    ) {
        let (name, line, column) = cur.expect_word("relation name")?;
        if !is_identifier(&name) {
            return Err(ParseError::new(
                line,
                column,
                format!("bad relation name {name}"),
            ));
        }
        cur.expect_sym('/')?;
        let (arity, al, ac) = cur.expect_word("arity")?;
        let arity: usize = arity
            .parse()
            .map_err(|_| ParseError::new(al, ac, format!("bad arity {arity}")))?;
        sig.add(&name, arity)
            .map_err(|e| ParseError::new(line, column, e.to_string()))?;
        any = true;
    }
    if !any {
        return Err(cur.error_here("expected a relation declaration Name/arity"));
    }
    Ok(())
}

struct BodyParser<'a> {
    cur: &'a mut Cursor,
    sig: &'a Signature,
    lib: &'a [String],
    bound: Vec<String>,
}

impl BodyParser<'_> {
    fn variable(&mut self) -> Result<(String, usize, usize), ParseError> {
        let (v, line, column) = self.cur.expect_word("variable")?;
        if !is_identifier(&v) || v == "exists" || v == "true" {
            return Err(ParseError::new(
                line,
                column,
                format!("bad variable name {v}"),
            ));
        }
        Ok((v, line, column))
    }

    fn disjunction(&mut self) -> Result<Node, ParseError> {
        let mut node = self.conjunction()?;
        while self.cur.peek_is_sym('|') {
            self.cur.next();
            let rhs = self.conjunction()?;
            node = Node::or(node, rhs);
        }
        Ok(node)
    }

    fn conjunction(&mut self) -> Result<Node, ParseError> {
        let mut node = self.unary()?;
        while self.cur.peek_is_sym('&') {
            self.cur.next();
            let rhs = self.unary()?;
            node = Node::and(node, rhs);
        }
        Ok(node)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.cur.peek_is_sym('(') {
            self.cur.next();
            let node = self.disjunction()?;
            self.cur.expect_sym(')')?;
            return Ok(node);
        }
        if self.cur.peek_is_word("true") {
            self.cur.next();
            return Ok(Node::True);
        }
        if self.cur.peek_is_word("exists") {
            self.cur.next();
            let mut vars = vec![self.variable()?.0];
            while self.cur.peek_is_sym(',') {
                self.cur.next();
                vars.push(self.variable()?.0);
            }
            self.cur.expect_sym('.')?;
            let depth = self.bound.len();
            self.bound.extend(vars.iter().cloned());
            let body = self.disjunction()?;
            self.bound.truncate(depth);
            return Ok(vars.iter().rev().fold(body, |acc, v| Node::exists(v, acc)));
        }
        let (relation, line, column) = self.cur.expect_word("atom, '(', 'true' or 'exists'")?;
        let arity = self
            .sig
            .arity(&relation)
            .ok_or_else(|| ParseError::new(line, column, format!("unknown relation {relation}")))?;
        self.cur.expect_sym('(')?;
        let mut args = Vec::new();
        loop {
            let (v, vl, vc) = self.variable()?;
            if !self.bound.contains(&v) && !self.lib.contains(&v) {
                return Err(ParseError::new(
                    vl,
                    vc,
                    format!("free variable {v} is not declared in lib(...)"),
                ));
            }
            args.push(v);
            if self.cur.peek_is_sym(',') {
                self.cur.next();
            } else {
                break;
            }
        }
        self.cur.expect_sym(')')?;
        if args.len() != arity {
            return Err(ParseError::new(
                line,
                column,
                format!(
                    "relation {relation} has arity {arity}, used with {} arguments",
                    args.len()
                ),
            ));
        }
        Ok(Node::Atom { relation, args })
    }
}

/// Reads a formula file: `sig` declarations followed by `query` entries.
pub fn parse_formula_file(text: &str) -> Result<FormulaFile> {
    parse_formula_file_with(text, &Signature::new())
}

/// As [`parse_formula_file`], starting from an existing signature.
pub fn parse_formula_file_with(text: &str, base: &Signature) -> Result<FormulaFile> {
    let mut cur = Cursor::new(text)?;
    let mut sig = base.clone();
    let mut queries = Vec::new();
    while !cur.at_end() {
        if cur.peek_is_word("sig") {
            cur.next();
            parse_sig_items(&mut cur, &mut sig)?;
            continue;
        }
        cur.expect_keyword("query")?;
        let (name, _, _) = cur.expect_word("query name")?;
        cur.expect_keyword("lib")?;
        cur.expect_sym('(')?;
        let mut lib: Vec<String> = Vec::new();
        if !cur.peek_is_sym(')') {
            loop {
                let (v, line, column) = cur.expect_word("variable")?;
                if !is_identifier(&v) {
                    return Err(
                        ParseError::new(line, column, format!("bad variable name {v}")).into(),
                    );
                }
                if lib.contains(&v) {
                    return Err(
                        ParseError::new(line, column, format!("variable {v} repeated")).into(),
                    );
                }
                lib.push(v);
                if cur.peek_is_sym(',') {
                    cur.next();
                } else {
                    break;
                }
            }
        }
        cur.expect_sym(')')?;
        cur.expect_sym(':')?;
        let body = {
            let mut p = BodyParser {
                cur: &mut cur,
                sig: &sig,
                lib: &lib,
                bound: Vec::new(),
            };
            p.disjunction()?
        };
        if !cur.at_end() && !cur.peek_is_word("query") && !cur.peek_is_word("sig") {
            return Err(cur.error_here("unexpected token after formula").into());
        }
        queries.push(NamedQuery {
            name,
            formula: EpFormula::new(sig.clone(), lib, body)?,
        });
    }
    if queries.is_empty() {
        return Err(cur.error_here("expected at least one 'query'").into());
    }
    // Later sig lines may extend the signature; give every query the final one.
    for q in &mut queries {
        q.formula.signature = sig.clone();
    }
    Ok(FormulaFile {
        signature: sig,
        queries,
    })
}

/// Reads a formula file and returns its first query.
pub fn parse_formula(text: &str) -> Result<EpFormula> {
    Ok(parse_formula_file(text)?.queries.remove(0).formula)
}
