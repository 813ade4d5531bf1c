//! Response-function variables and the per-district linear system
//! `p = B r` relating star probabilities to joint response probabilities.
//!
//! Conventions:
//! - a response level of `W` is a base-`|W|` numeral, most significant digit
//!   first; digit `j` is the output on parent configuration `j`, where parent
//!   configurations run lexicographically over the canonical parent order
//!   with the last parent fastest;
//! - columns of `B` are joint levels, one digit per district member, first
//!   member most significant;
//! - rows are `(w1, w2)` pairs with `w2` outermost; inside each tuple the
//!   first variable varies fastest.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::{District, HiddenDag, VarId};
use crate::rational::Rational;
use crate::table::JointTable;

pub const DEFAULT_COLUMN_LIMIT: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResponseSpec {
    pub variable: VarId,
    pub cardinality: usize,
    pub parent_order: Vec<VarId>,
    pub parent_cards: Vec<usize>,
    /// Number of parent configurations.
    pub configs: usize,
    /// `cardinality ^ configs`, saturating at `u128::MAX`.
    pub level_count: u128,
}

pub fn response_levels(dag: &HiddenDag, w: VarId) -> Result<ResponseSpec> {
    if !dag.is_observed(w) {
        return Err(Error::NotObserved(dag.name(w).to_string()));
    }
    let parent_order: Vec<VarId> = dag
        .parents(w)
        .iter()
        .copied()
        .filter(|&p| dag.is_observed(p))
        .collect();
    let parent_cards: Vec<usize> = parent_order.iter().map(|&p| dag.cardinality(p)).collect();
    let configs: usize = parent_cards.iter().product();
    let cardinality = dag.cardinality(w);
    let level_count = u32::try_from(configs)
        .ok()
        .and_then(|k| (cardinality as u128).checked_pow(k))
        .unwrap_or(u128::MAX);
    Ok(ResponseSpec {
        variable: w,
        cardinality,
        parent_order,
        parent_cards,
        configs,
        level_count,
    })
}

impl ResponseSpec {
    /// Index of a parent configuration, last parent fastest.
    pub fn config_index(&self, parent_values: &[usize]) -> usize {
        self.parent_cards
            .iter()
            .zip(parent_values)
            .fold(0, |acc, (&c, &v)| acc * c + v)
    }

    /// Output of response level `level` on configuration `config`.
    pub fn output(&self, level: u128, config: usize) -> usize {
        let shift = (self.configs - 1 - config) as u32;
        let base = self.cardinality as u128;
        ((level / base.pow(shift)) % base) as usize
    }

    /// The function table of a level, one output per configuration.
    pub fn table(&self, level: u128) -> Vec<usize> {
        (0..self.configs).map(|j| self.output(level, j)).collect()
    }

    /// Inverse of [`ResponseSpec::table`].
    pub fn encode(&self, table: &[usize]) -> u128 {
        table
            .iter()
            .fold(0u128, |acc, &d| acc * self.cardinality as u128 + d as u128)
    }
}

/// Values for some observed variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(pub BTreeMap<VarId, usize>);

impl Configuration {
    pub fn new() -> Self {
        Configuration::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, usize)>) -> Self {
        Configuration(pairs.into_iter().collect())
    }

    pub fn from_values(vars: &[VarId], values: &[usize]) -> Self {
        Configuration::from_pairs(vars.iter().copied().zip(values.iter().copied()))
    }

    pub fn with(mut self, v: VarId, value: usize) -> Self {
        self.0.insert(v, value);
        self
    }

    /// Value of `v`, checked against its cardinality.
    pub fn value(&self, dag: &HiddenDag, v: VarId) -> Result<usize> {
        let x = *self
            .0
            .get(&v)
            .ok_or_else(|| Error::MissingValue(dag.name(v).to_string()))?;
        if x >= dag.cardinality(v) {
            return Err(Error::ValueOutOfRange {
                name: dag.name(v).to_string(),
                value: x,
            });
        }
        Ok(x)
    }

    pub fn values(&self, dag: &HiddenDag, vars: &[VarId]) -> Result<Vec<usize>> {
        vars.iter().map(|&v| self.value(dag, v)).collect()
    }
}

/// Evaluates `f^level` on the parent values found in `parent_config`.
pub fn eval_response(
    dag: &HiddenDag,
    spec: &ResponseSpec,
    level: u128,
    parent_config: &Configuration,
) -> Result<usize> {
    if level >= spec.level_count {
        return Err(Error::LevelOutOfRange {
            level,
            count: spec.level_count,
        });
    }
    let vals = parent_config.values(dag, &spec.parent_order)?;
    Ok(spec.output(level, spec.config_index(&vals)))
}

#[derive(Clone, Copy, Debug)]
enum Source {
    Member(usize),
    External(usize),
}

/// The 0/1 matrix `B` of one district together with its row and column
/// labelling.
#[derive(Clone, Debug)]
pub struct FunctionalSystem {
    pub district: District,
    pub w1_order: Vec<VarId>,
    pub w2_order: Vec<VarId>,
    pub w1_cards: Vec<usize>,
    pub w2_cards: Vec<usize>,
    pub specs: Vec<ResponseSpec>,
    eval_order: Vec<usize>,
    sources: Vec<Vec<Source>>,
    n_cols: usize,
    /// `outcomes[col * n_blocks + block]` is the w1 index reached by column
    /// `col` under external configuration `block`.
    outcomes: Vec<u32>,
}

/// Mixed-radix index with the first position fastest.
pub(crate) fn index_first_fastest(cards: &[usize], values: &[usize]) -> usize {
    cards
        .iter()
        .zip(values)
        .rev()
        .fold(0, |acc, (&c, &v)| acc * c + v)
}

pub(crate) fn values_first_fastest(cards: &[usize], mut index: usize) -> Vec<usize> {
    cards
        .iter()
        .map(|&c| {
            let v = index % c;
            index /= c;
            v
        })
        .collect()
}

fn estimate_columns(specs: &[ResponseSpec]) -> BigUint {
    specs.iter().fold(BigUint::one(), |acc, s| {
        acc * num_traits::pow(BigUint::from(s.cardinality), s.configs)
    })
}

/// Builds `B` for a district of c-degree one.
pub fn build_functional_system(
    dag: &HiddenDag,
    d: &District,
    column_limit: u128,
) -> Result<FunctionalSystem> {
    if !dag.districts().contains(d) {
        return Err(Error::NotADistrict);
    }
    let report = dag.validate_conditions();
    if !report.is_ok() {
        return Err(Error::Conditions(report.summary()));
    }
    if d.c_degree() > 1 {
        return Err(Error::CDegree {
            district: dag.fmt_set(&d.members),
            c_degree: d.c_degree(),
        });
    }
    let w1_order = d.members.clone();
    let member_set: BTreeSet<VarId> = w1_order.iter().copied().collect();
    let w2_order: Vec<VarId> = dag
        .observed_parents(&member_set)?
        .difference(&member_set)
        .copied()
        .collect();
    let specs: Vec<ResponseSpec> = w1_order
        .iter()
        .map(|&w| response_levels(dag, w))
        .collect::<Result<_>>()?;
    let estimate = estimate_columns(&specs);
    if estimate > BigUint::from(column_limit) {
        return Err(Error::CostGuard {
            district: dag.fmt_set(&d.members),
            estimated: estimate.to_string(),
            limit: column_limit,
        });
    }
    let n_cols: usize = specs.iter().map(|s| s.level_count as usize).product();
    let w1_cards: Vec<usize> = w1_order.iter().map(|&v| dag.cardinality(v)).collect();
    let w2_cards: Vec<usize> = w2_order.iter().map(|&v| dag.cardinality(v)).collect();

    let eval_order: Vec<usize> = dag
        .order_within(&w1_order)
        .iter()
        .map(|v| w1_order.iter().position(|w| w == v).expect("member"))
        .collect();
    let sources: Vec<Vec<Source>> = specs
        .iter()
        .map(|s| {
            s.parent_order
                .iter()
                .map(|p| match w1_order.iter().position(|w| w == p) {
                    Some(k) => Source::Member(k),
                    None => Source::External(
                        w2_order.iter().position(|w| w == p).expect("external parent"),
                    ),
                })
                .collect()
        })
        .collect();
    let mut sys = FunctionalSystem {
        district: d.clone(),
        w1_order,
        w2_order,
        w1_cards,
        w2_cards,
        specs,
        eval_order,
        sources,
        n_cols,
        outcomes: Vec::new(),
    };
    let walk = |col: usize| sys.walk(col).0;
    let outcomes: Vec<u32> = if n_cols >= 4096 {
        (0..n_cols).into_par_iter().flat_map_iter(walk).collect()
    } else {
        (0..n_cols).flat_map(walk).collect()
    };
    sys.outcomes = outcomes;
    Ok(sys)
}

impl FunctionalSystem {
    pub fn block_size(&self) -> usize {
        self.w1_cards.iter().product()
    }

    pub fn n_blocks(&self) -> usize {
        self.w2_cards.iter().product()
    }

    pub fn n_rows(&self) -> usize {
        self.block_size() * self.n_blocks()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Block sizes of the simplex product containing every column.
    pub fn block_sizes(&self) -> Vec<usize> {
        vec![self.block_size(); self.n_blocks()]
    }

    /// `(w1 values, w2 values)` of a row, in `w1_order` / `w2_order`.
    pub fn row_label(&self, row: usize) -> (Vec<usize>, Vec<usize>) {
        let n1 = self.block_size();
        (
            values_first_fastest(&self.w1_cards, row % n1),
            values_first_fastest(&self.w2_cards, row / n1),
        )
    }

    pub fn row_configurations(&self, row: usize) -> (Configuration, Configuration) {
        let (a, b) = self.row_label(row);
        (
            Configuration::from_values(&self.w1_order, &a),
            Configuration::from_values(&self.w2_order, &b),
        )
    }

    pub fn row_of(&self, w1: &[usize], w2: &[usize]) -> usize {
        index_first_fastest(&self.w2_cards, w2) * self.block_size()
            + index_first_fastest(&self.w1_cards, w1)
    }

    /// Decodes a column index into the w1 index reached in every block and
    /// each member's response table.
    ///
    /// Blocks are walked in row order and members in topological order.
    /// While member `m` has unassigned table entries it owns one digit slot
    /// per block: the entry evaluated there if it is new, otherwise its
    /// lowest unassigned entry. Entries left after the last block fill a
    /// final group. Earlier groups are more significant; within a group the
    /// first slot is fastest.
    fn walk(&self, col: usize) -> (Vec<u32>, Vec<Vec<usize>>) {
        let nb = self.n_blocks();
        let group = |b: usize| -> Vec<usize> {
            self.eval_order
                .iter()
                .filter(|&&m| b < self.specs[m].configs)
                .copied()
                .collect()
        };
        let leftover: Vec<usize> = self
            .eval_order
            .iter()
            .flat_map(|&m| std::iter::repeat_n(m, self.specs[m].configs.saturating_sub(nb)))
            .collect();
        let radix = |slots: &[usize]| -> usize {
            slots.iter().map(|&m| self.specs[m].cardinality).product()
        };
        let mut weight = self.n_cols / radix(&group(0)).max(1);

        let mut tables: Vec<Vec<Option<usize>>> =
            self.specs.iter().map(|s| vec![None; s.configs]).collect();
        let take_lowest = |t: &mut Vec<Option<usize>>, digit: usize| {
            if let Some(e) = t.iter_mut().find(|e| e.is_none()) {
                *e = Some(digit);
            }
        };
        let mut w1 = vec![0usize; self.w1_order.len()];
        let mut pv = Vec::new();
        let mut reached = Vec::with_capacity(nb);
        for b in 0..nb {
            let slots = group(b);
            let mut g = (col / weight) % radix(&slots).max(1);
            let w2 = values_first_fastest(&self.w2_cards, b);
            for &m in &self.eval_order {
                pv.clear();
                pv.extend(self.sources[m].iter().map(|s| match *s {
                    Source::Member(k) => w1[k],
                    Source::External(j) => w2[j],
                }));
                let spec = &self.specs[m];
                let ci = spec.config_index(&pv);
                if slots.contains(&m) {
                    let digit = g % spec.cardinality;
                    g /= spec.cardinality;
                    if tables[m][ci].is_none() {
                        tables[m][ci] = Some(digit);
                    } else {
                        take_lowest(&mut tables[m], digit);
                    }
                }
                w1[m] = tables[m][ci].expect("evaluated entries are assigned");
            }
            reached.push(index_first_fastest(&self.w1_cards, &w1) as u32);
            if b + 1 < nb {
                weight /= radix(&group(b + 1)).max(1);
            }
        }
        let mut g = col % radix(&leftover).max(1);
        for &m in &leftover {
            let card = self.specs[m].cardinality;
            take_lowest(&mut tables[m], g % card);
            g /= card;
        }
        let tables = tables
            .into_iter()
            .map(|t| t.into_iter().map(|e| e.expect("every entry assigned")).collect())
            .collect();
        (reached, tables)
    }

    /// Per-member response levels of a column.
    pub fn col_label(&self, col: usize) -> Vec<u128> {
        self.walk(col)
            .1
            .iter()
            .zip(&self.specs)
            .map(|(t, spec)| spec.encode(t))
            .collect()
    }

    pub fn entry(&self, row: usize, col: usize) -> bool {
        let n1 = self.block_size();
        self.outcomes[col * self.n_blocks() + row / n1] as usize == row % n1
    }

    /// Row indices where a column has a 1, one per block.
    pub fn column_support(&self, col: usize) -> impl Iterator<Item = usize> + '_ {
        let nb = self.n_blocks();
        let n1 = self.block_size();
        self.outcomes[col * nb..(col + 1) * nb]
            .iter()
            .enumerate()
            .map(move |(b, &o)| b * n1 + o as usize)
    }

    pub fn dense(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.n_cols]; self.n_rows()];
        for c in 0..self.n_cols {
            for r in self.column_support(c) {
                m[r][c] = 1;
            }
        }
        m
    }

    /// Columns as 0/1 vectors, the point set whose hull is the model.
    pub fn columns(&self) -> Vec<Vec<u8>> {
        (0..self.n_cols)
            .map(|c| {
                let mut v = vec![0u8; self.n_rows()];
                for r in self.column_support(c) {
                    v[r] = 1;
                }
                v
            })
            .collect()
    }

    /// Column indices compatible with `(w1, w2)`.
    pub fn compatible(&self, dag: &HiddenDag, w1: &Configuration, w2: &Configuration) -> Result<Vec<usize>> {
        let row = self.row_of(&w1.values(dag, &self.w1_order)?, &w2.values(dag, &self.w2_order)?);
        Ok((0..self.n_cols).filter(|&c| self.entry(row, c)).collect())
    }

    /// `B r`.
    pub fn apply(&self, r: &[Rational]) -> Result<Vec<Rational>> {
        if r.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                found: r.len(),
            });
        }
        let mut p = vec![Rational::zero(); self.n_rows()];
        for (c, rc) in r.iter().enumerate() {
            if rc.is_zero() {
                continue;
            }
            for row in self.column_support(c) {
                p[row] += rc;
            }
        }
        Ok(p)
    }

    pub fn to_json(&self, dag: &HiddenDag) -> Value {
        let rows: Vec<Value> = (0..self.n_rows())
            .map(|r| {
                let (a, b) = self.row_label(r);
                let mut m = serde_json::Map::new();
                for (v, x) in self.w1_order.iter().zip(&a).chain(self.w2_order.iter().zip(&b)) {
                    m.insert(dag.name(*v).to_string(), json!(x));
                }
                Value::Object(m)
            })
            .collect();
        let cols: Vec<Value> = (0..self.n_cols)
            .map(|c| {
                let mut m = serde_json::Map::new();
                for (v, l) in self.w1_order.iter().zip(self.col_label(c)) {
                    m.insert(dag.name(*v).to_string(), json!(l as u64));
                }
                Value::Object(m)
            })
            .collect();
        json!({
            "w1": self.w1_order.iter().map(|&v| dag.name(v)).collect::<Vec<_>>(),
            "w2": self.w2_order.iter().map(|&v| dag.name(v)).collect::<Vec<_>>(),
            "rows": self.n_rows(),
            "columns": self.n_cols,
            "row_labels": rows,
            "col_labels": cols,
            "matrix": self.dense(),
        })
    }
}

/// Columns of `d`'s system compatible with `(w1, w2)`.
pub fn compatible_responses(
    dag: &HiddenDag,
    d: &District,
    w1: &Configuration,
    w2: &Configuration,
) -> Result<Vec<usize>> {
    build_functional_system(dag, d, DEFAULT_COLUMN_LIMIT)?.compatible(dag, w1, w2)
}

/// Conditioning set of the star-probability factor for `member`: with `T`
/// the district of `member` among the observed variables up to it in
/// topological order, this is `(T u Pa(T)) \ {member}`.
pub fn conditioning_set(dag: &HiddenDag, d: &District, member: VarId) -> Result<Vec<VarId>> {
    if !d.contains(member) {
        return Err(Error::NotADistrict);
    }
    let order = dag.order_within(&dag.observed());
    let upto = order.iter().position(|&v| v == member).expect("observed member");
    let before: BTreeSet<VarId> = order[..=upto]
        .iter()
        .copied()
        .filter(|&v| d.contains(v))
        .collect();
    let mut t = BTreeSet::from([member]);
    let mut frontier = vec![member];
    while let Some(v) = frontier.pop() {
        for u in dag.latent_parents(v) {
            for &c in dag.children(u) {
                if before.contains(&c) && t.insert(c) {
                    frontier.push(c);
                }
            }
        }
    }
    let mut scope = dag.observed_parents(&t)?;
    scope.extend(t);
    scope.remove(&member);
    Ok(scope.into_iter().collect())
}

/// One factor `P(member | given)` per district member, in member order.
pub fn star_factors(dag: &HiddenDag, d: &District) -> Result<Vec<(VarId, Vec<VarId>)>> {
    d.members
        .iter()
        .map(|&m| Ok((m, conditioning_set(dag, d, m)?)))
        .collect()
}

/// `P*(W1 = w1 | W2 = w2)` from a joint table; `None` when a conditioning
/// event has probability zero.
pub fn star_probability(
    table: &JointTable,
    dag: &HiddenDag,
    d: &District,
    w1: &Configuration,
    w2: &Configuration,
) -> Result<Option<Rational>> {
    table.check_compatible(dag)?;
    let mut all = w1.clone();
    all.0.extend(w2.0.iter().map(|(&k, &v)| (k, v)));
    let mut out = Rational::one();
    for (m, given) in star_factors(dag, d)? {
        let mut event: BTreeMap<VarId, usize> = BTreeMap::new();
        for &g in &given {
            event.insert(g, all.value(dag, g)?);
        }
        let denom = table.prob(&event);
        if denom.is_zero() {
            return Ok(None);
        }
        event.insert(m, all.value(dag, m)?);
        out *= table.prob(&event) / denom;
    }
    Ok(Some(out))
}

/// Star probabilities for every row of `sys`.
pub fn star_vector(
    table: &JointTable,
    dag: &HiddenDag,
    sys: &FunctionalSystem,
) -> Result<Vec<Option<Rational>>> {
    table.check_compatible(dag)?;
    let factors = star_factors(dag, &sys.district)?;
    let margins: Vec<_> = factors
        .iter()
        .map(|(m, given)| {
            let mut with = given.clone();
            with.push(*m);
            (table.marginal(given), table.marginal(&with))
        })
        .collect();
    let position = |v: VarId, a: &[usize], b: &[usize]| -> usize {
        match sys.w1_order.iter().position(|&w| w == v) {
            Some(k) => a[k],
            None => b[sys.w2_order.iter().position(|&w| w == v).expect("in scope")],
        }
    };
    Ok((0..sys.n_rows())
        .map(|row| {
            let (a, b) = sys.row_label(row);
            let mut out = Rational::one();
            for ((m, given), (den, num)) in factors.iter().zip(&margins) {
                let gv: Vec<usize> = given.iter().map(|&g| position(g, &a, &b)).collect();
                let dp = den.get(&gv);
                if dp.is_zero() {
                    return None;
                }
                let mut nv = gv;
                nv.push(position(*m, &a, &b));
                out *= num.get(&nv) / dp;
            }
            Some(out)
        })
        .collect())
}
