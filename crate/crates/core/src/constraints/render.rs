//! Text forms of a constraint: over star probabilities, or expanded into
//! conditional probabilities of observed variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::Constraint;
use crate::graph::{HiddenDag, VarId};
use crate::response::{star_factors, FunctionalSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderMode {
    /// `P*(X=0,Y=1|Z=0)` terms.
    Star,
    /// Products of observed conditionals, summed out within each block of
    /// the conditioning variables where a factor can be marginalized.
    Observable,
}

pub fn render(dag: &HiddenDag, sys: &FunctionalSystem, c: &Constraint, mode: RenderMode) -> String {
    let terms: Vec<(BigInt, String)> = match mode {
        RenderMode::Star => c
            .terms
            .iter()
            .map(|(row, coeff)| (coeff.clone(), star_label(dag, sys, *row)))
            .collect(),
        RenderMode::Observable => observable_terms(dag, sys, c),
    };
    let mut out = String::new();
    for (k, (coeff, label)) in terms.iter().enumerate() {
        let sign = if coeff.is_negative() { "-" } else { "+" };
        if k == 0 {
            if coeff.is_negative() {
                out.push('-');
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        let mag = coeff.abs();
        if !mag.is_one() {
            let _ = write!(out, "{mag}*");
        }
        out.push_str(label);
    }
    if terms.is_empty() {
        out.push('0');
    }
    let _ = write!(out, " {} {}", c.relation.symbol(), c.rhs);
    out
}

fn assignment(dag: &HiddenDag, vars: &[VarId], vals: &[usize]) -> String {
    vars.iter()
        .zip(vals)
        .map(|(&v, x)| format!("{}={x}", dag.name(v)))
        .collect::<Vec<_>>()
        .join(",")
}

fn star_label(dag: &HiddenDag, sys: &FunctionalSystem, row: usize) -> String {
    let (a, b) = sys.row_label(row);
    let lhs = assignment(dag, &sys.w1_order, &a);
    if sys.w2_order.is_empty() {
        format!("P*({lhs})")
    } else {
        format!("P*({lhs}|{})", assignment(dag, &sys.w2_order, &b))
    }
}

/// A product of factors `P(m | given)` for the members still present, in
/// one block of `W2` values. Keys are member positions in `w1_order`.
type Term = (usize, BTreeMap<usize, usize>);

fn observable_terms(dag: &HiddenDag, sys: &FunctionalSystem, c: &Constraint) -> Vec<(BigInt, String)> {
    let factors = star_factors(dag, &sys.district).expect("district of its own graph");
    let pos = |v: VarId| sys.w1_order.iter().position(|&w| w == v);
    // given[k] = conditioning variables of the factor for w1_order[k]
    let given: Vec<Vec<VarId>> = sys
        .w1_order
        .iter()
        .map(|&m| {
            factors
                .iter()
                .find(|(f, _)| *f == m)
                .map(|(_, g)| g.clone())
                .unwrap_or_default()
        })
        .collect();

    let mut terms: BTreeMap<Term, BigInt> = BTreeMap::new();
    for (row, coeff) in &c.terms {
        let (a, _) = sys.row_label(*row);
        let block = row / sys.block_size();
        *terms.entry((block, a.into_iter().enumerate().collect())).or_default() += coeff;
    }

    let order: Vec<usize> = (0..sys.w1_order.len()).rev().collect();
    loop {
        let mut changed = false;
        for &m in &order {
            let card = sys.w1_cards[m];
            let mut groups: BTreeMap<(usize, BTreeMap<usize, usize>, BigInt), BTreeSet<usize>> =
                BTreeMap::new();
            for ((block, assign), coeff) in &terms {
                let Some(&val) = assign.get(&m) else { continue };
                if assign.len() < 2 {
                    continue;
                }
                let needed = assign
                    .keys()
                    .any(|&k| k != m && given[k].iter().any(|&g| pos(g) == Some(m)));
                if needed {
                    continue;
                }
                let mut rest = assign.clone();
                rest.remove(&m);
                groups
                    .entry((*block, rest, coeff.clone()))
                    .or_default()
                    .insert(val);
            }
            for ((block, rest, coeff), vals) in groups {
                if vals.len() != card {
                    continue;
                }
                for v in 0..card {
                    let mut full = rest.clone();
                    full.insert(m, v);
                    terms.remove(&(block, full));
                }
                *terms.entry((block, rest)).or_default() += coeff;
                changed = true;
            }
            terms.retain(|_, c| !c.is_zero());
        }
        if !changed {
            break;
        }
    }

    terms
        .into_iter()
        .map(|((block, assign), coeff)| {
            let w2 = crate::response::values_first_fastest(&sys.w2_cards, block);
            let value = |v: VarId| -> usize {
                match pos(v) {
                    Some(k) => assign[&k],
                    None => w2[sys.w2_order.iter().position(|&w| w == v).expect("in scope")],
                }
            };
            let mut label = String::new();
            for (&k, &x) in &assign {
                let m = sys.w1_order[k];
                let _ = write!(label, "P({}={x}", dag.name(m));
                if !given[k].is_empty() {
                    let vals: Vec<usize> = given[k].iter().map(|&g| value(g)).collect();
                    let _ = write!(label, "|{}", assignment(dag, &given[k], &vals));
                }
                label.push(')');
            }
            (coeff, label)
        })
        .collect()
}
