//! Exact solution of transposed Vandermonde systems.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type ExactRational = BigRational;

/// Coefficients of Π_k (t - roots_k), lowest degree first.
fn poly_from_roots(roots: &[BigInt]) -> Vec<BigInt> {
    let mut poly = vec![BigInt::one()];
    for r in roots {
        let mut next = vec![BigInt::zero(); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        poly = next;
    }
    poly
}

/// Solves Σ_j nodes_j^l · c_j = rhs_l for l = 0..s-1.
///
/// Each c_j is Σ_l [t^l] L_j(t) · rhs_l where L_j is the Lagrange basis polynomial
/// that is 1 at nodes_j and 0 at the other nodes.
pub fn solve_vandermonde(nodes: &[BigInt], rhs: &[BigInt]) -> Result<Vec<ExactRational>> {
    if nodes.len() != rhs.len() {
        return Err(Error::Precondition(format!(
            "{} nodes but {} right-hand sides",
            nodes.len(),
            rhs.len()
        )));
    }
    for (i, x) in nodes.iter().enumerate() {
        if nodes[..i].contains(x) {
            return Err(Error::Singular(format!("node {x} repeated")));
        }
    }
    Ok((0..nodes.len())
        .map(|j| {
            let others: Vec<BigInt> = nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, x)| x.clone())
                .collect();
            let denom: BigInt = others.iter().map(|x| &nodes[j] - x).product();
            let numer: BigInt = poly_from_roots(&others)
                .iter()
                .zip(rhs)
                .map(|(c, r)| c * r)
                .sum();
            BigRational::new(numer, denom)
        })
        .collect())
}

/// The solution as integers, failing when some entry is fractional.
pub fn solve_vandermonde_integral(nodes: &[BigInt], rhs: &[BigInt]) -> Result<Vec<BigInt>> {
    solve_vandermonde(nodes, rhs)?
        .into_iter()
        .map(|q| {
            if q.is_integer() {
                Ok(q.to_integer())
            } else {
                Err(Error::OracleInconsistency(format!(
                    "non-integral solution {q}"
                )))
            }
        })
        .collect()
}
