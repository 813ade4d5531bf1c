//! Joint distributions over the observed variables of a graph.

use std::collections::{BTreeMap, HashMap};

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::graph::{HiddenDag, VarId};
use crate::rational::{self, Rational};

/// A joint distribution over every observed variable. Entries are stored
/// row-major over the canonical variable order (last variable fastest).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointTable {
    vars: Vec<VarId>,
    names: Vec<String>,
    cards: Vec<usize>,
    probs: Vec<Rational>,
    float_sourced: bool,
}

fn dist(msg: impl Into<String>) -> Error {
    Error::Distribution(msg.into())
}

impl JointTable {
    /// Wraps an exact probability vector, which must be nonnegative and sum
    /// to one.
    pub fn new(dag: &HiddenDag, probs: Vec<Rational>) -> Result<Self> {
        let vars = dag.observed();
        let cards: Vec<usize> = vars.iter().map(|&v| dag.cardinality(v)).collect();
        let size: usize = cards.iter().product();
        if probs.len() != size {
            return Err(dist(format!(
                "expected {size} entries, found {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| p.is_negative()) {
            return Err(dist(format!("negative probability {p}")));
        }
        let total: Rational = probs.iter().sum();
        if total != rational::int(1) {
            return Err(dist(format!("probabilities sum to {total}, not 1")));
        }
        Ok(JointTable {
            names: vars.iter().map(|&v| dag.name(v).to_string()).collect(),
            vars,
            cards,
            probs,
            float_sourced: false,
        })
    }

    pub fn from_fn(dag: &HiddenDag, f: impl Fn(&[usize]) -> Rational) -> Result<Self> {
        let cards: Vec<usize> = dag.observed().iter().map(|&v| dag.cardinality(v)).collect();
        let size: usize = cards.iter().product();
        let probs = (0..size).map(|i| f(&decode(&cards, i))).collect();
        JointTable::new(dag, probs)
    }

    /// Parses CSV with one column per observed variable and a `prob` column.
    /// Probabilities are `a/b` or decimals; omitted rows have probability 0.
    /// Tables with decimal entries may miss 1 by at most 1e-9 and are then
    /// renormalized.
    pub fn from_csv(dag: &HiddenDag, text: &str) -> Result<Self> {
        let vars = dag.observed();
        let cards: Vec<usize> = vars.iter().map(|&v| dag.cardinality(v)).collect();
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| dist("empty distribution file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let mut col_of: HashMap<&str, usize> = HashMap::new();
        for (i, c) in cols.iter().enumerate() {
            if col_of.insert(c, i).is_some() {
                return Err(dist(format!("column `{c}` appears twice")));
            }
        }
        let prob_col = *col_of
            .get("prob")
            .ok_or_else(|| dist("missing `prob` column"))?;
        let mut var_cols = Vec::with_capacity(vars.len());
        for &v in &vars {
            let name = dag.name(v);
            var_cols.push(
                *col_of
                    .get(name)
                    .ok_or_else(|| dist(format!("missing column for variable `{name}`")))?,
            );
        }
        if cols.len() != vars.len() + 1 {
            let extra = cols
                .iter()
                .find(|c| **c != "prob" && dag.observed_id(c).is_err())
                .copied()
                .unwrap_or("?");
            return Err(dist(format!("unexpected column `{extra}`")));
        }
        let size: usize = cards.iter().product();
        let mut probs = vec![Rational::zero(); size];
        let mut seen = vec![false; size];
        let mut any_decimal = false;
        for (line, row) in lines {
            let cells: Vec<&str> = row.split(',').map(str::trim).collect();
            if cells.len() != cols.len() {
                return Err(dist(format!(
                    "line {line}: expected {} fields, found {}",
                    cols.len(),
                    cells.len()
                )));
            }
            let mut values = Vec::with_capacity(vars.len());
            for (k, &c) in var_cols.iter().enumerate() {
                let v: usize = cells[c].parse().map_err(|_| {
                    dist(format!("line {line}: bad value `{}` for {}", cells[c], cols[c]))
                })?;
                if v >= cards[k] {
                    return Err(dist(format!(
                        "line {line}: value {v} out of range for {}",
                        cols[c]
                    )));
                }
                values.push(v);
            }
            let (p, decimal) = rational::parse(cells[prob_col]).ok_or_else(|| {
                dist(format!("line {line}: bad probability `{}`", cells[prob_col]))
            })?;
            if p.is_negative() {
                return Err(dist(format!("line {line}: negative probability")));
            }
            any_decimal |= decimal;
            let idx = encode(&cards, &values);
            if seen[idx] {
                return Err(dist(format!("line {line}: duplicate assignment")));
            }
            seen[idx] = true;
            probs[idx] = p;
        }
        let total: Rational = probs.iter().sum();
        let one = rational::int(1);
        if total != one {
            let tol = Rational::new(1.into(), 1_000_000_000.into());
            if !any_decimal || !rational::within(&total, &one, &tol) || total.is_zero() {
                return Err(dist(format!("probabilities sum to {total}, not 1")));
            }
            for p in &mut probs {
                *p = &*p / &total;
            }
        }
        let mut t = JointTable::new(dag, probs)?;
        t.float_sourced = any_decimal;
        Ok(t)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push_str(",prob\n");
        for (i, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let vals: Vec<String> = decode(&self.cards, i).iter().map(ToString::to_string).collect();
            out.push_str(&format!("{},{}\n", vals.join(","), p));
        }
        out
    }

    /// Fails unless the table was built for the same observed variables.
    pub fn check_compatible(&self, dag: &HiddenDag) -> Result<()> {
        let obs = dag.observed();
        let names: Vec<&str> = obs.iter().map(|&v| dag.name(v)).collect();
        let cards: Vec<usize> = obs.iter().map(|&v| dag.cardinality(v)).collect();
        if names != self.names.iter().map(String::as_str).collect::<Vec<_>>() || cards != self.cards
        {
            return Err(dist("table variables do not match the graph"));
        }
        Ok(())
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn is_float_sourced(&self) -> bool {
        self.float_sourced
    }

    /// 0 for exact input, 1e-9 for decimal input.
    pub fn default_tolerance(&self) -> Rational {
        if self.float_sourced {
            Rational::new(1.into(), 1_000_000_000.into())
        } else {
            Rational::zero()
        }
    }

    /// Probability of a full assignment in canonical order.
    pub fn get(&self, values: &[usize]) -> &Rational {
        &self.probs[encode(&self.cards, values)]
    }

    /// Marginal distribution of `subset` (any order; stored as given).
    pub fn marginal(&self, subset: &[VarId]) -> Marginal {
        let pos: Vec<usize> = subset
            .iter()
            .map(|v| {
                self.vars
                    .iter()
                    .position(|w| w == v)
                    .expect("marginal over an observed variable")
            })
            .collect();
        let cards: Vec<usize> = pos.iter().map(|&p| self.cards[p]).collect();
        let mut probs = vec![Rational::zero(); cards.iter().product()];
        for (i, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let full = decode(&self.cards, i);
            let sub: Vec<usize> = pos.iter().map(|&k| full[k]).collect();
            probs[encode(&cards, &sub)] += p;
        }
        Marginal {
            vars: subset.to_vec(),
            cards,
            probs,
        }
    }

    /// Probability of a partial assignment.
    pub fn prob(&self, event: &BTreeMap<VarId, usize>) -> Rational {
        let vars: Vec<VarId> = event.keys().copied().collect();
        let vals: Vec<usize> = event.values().copied().collect();
        self.marginal(&vars).get(&vals).clone()
    }
}

#[derive(Clone, Debug)]
pub struct Marginal {
    pub vars: Vec<VarId>,
    cards: Vec<usize>,
    probs: Vec<Rational>,
}

impl Marginal {
    pub fn get(&self, values: &[usize]) -> &Rational {
        &self.probs[encode(&self.cards, values)]
    }
}

pub(crate) fn encode(cards: &[usize], values: &[usize]) -> usize {
    cards
        .iter()
        .zip(values)
        .fold(0, |acc, (&c, &v)| acc * c + v)
}

pub(crate) fn decode(cards: &[usize], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for k in (0..cards.len()).rev() {
        out[k] = index % cards[k];
        index /= cards[k];
    }
    out
}
