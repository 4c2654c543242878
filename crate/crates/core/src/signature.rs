use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Relation symbols with their arities.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    relations: BTreeMap<String, usize>,
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, usize)>) -> Result<Self> {
        let mut sig = Self::new();
        for (name, arity) in pairs {
            sig.add(name, arity)?;
        }
        Ok(sig)
    }

    /// Adds a relation symbol. Re-declaring a symbol with the same arity is a no-op.
    pub fn add(&mut self, name: &str, arity: usize) -> Result<()> {
        if name.is_empty() {
            return Err(Error::InvalidSignature("empty relation name".into()));
        }
        if arity == 0 {
            return Err(Error::InvalidSignature(format!(
                "relation {name} must have arity at least 1"
            )));
        }
        match self.relations.get(name) {
            Some(&a) if a != arity => Err(Error::InvalidSignature(format!(
                "relation {name} declared with arities {a} and {arity}"
            ))),
            _ => {
                self.relations.insert(name.to_string(), arity);
                Ok(())
            }
        }
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relations.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.relations.iter().map(|(n, a)| (n.as_str(), *a))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.relations.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn max_arity(&self) -> usize {
        self.relations.values().copied().max().unwrap_or(0)
    }

    /// Union of two signatures; fails when a shared symbol has conflicting arities.
    pub fn merged(&self, other: &Signature) -> Result<Signature> {
        let mut out = self.clone();
        for (name, arity) in other.iter() {
            out.add(name, arity)?;
        }
        Ok(out)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, arity) in self.iter() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{name}/{arity}")?;
        }
        Ok(())
    }
}
