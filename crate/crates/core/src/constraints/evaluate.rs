//! Checking a derivation against an observed joint distribution.

use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use super::{DerivationResult, Relation, RenderMode};
use crate::error::Result;
use crate::rational::{self, Rational};
use crate::response::star_vector;
use crate::table::JointTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Satisfied,
    Violated,
    /// Some star probability conditions on an event of probability zero.
    NotEvaluable,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Satisfied => "satisfied",
            CheckStatus::Violated => "violated",
            CheckStatus::NotEvaluable => "not_evaluable",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintCheck {
    pub district: usize,
    /// Position within the district's constraint list.
    pub index: usize,
    pub status: CheckStatus,
    pub lhs: Option<Rational>,
    /// `lhs - rhs`; positive means violated for an inequality.
    pub margin: Option<Rational>,
    pub text: String,
}

#[derive(Clone, Debug)]
pub struct CiCheck {
    pub text: String,
    pub status: CheckStatus,
    /// Largest `|P(a,b,g)P(g) - P(a,g)P(b,g)|` over all assignments.
    pub deviation: Rational,
}

#[derive(Clone, Debug)]
pub struct ViolationReport {
    pub tolerance: Rational,
    pub constraints: Vec<ConstraintCheck>,
    pub ci: Vec<CiCheck>,
}

impl ViolationReport {
    pub fn falsified(&self) -> bool {
        self.constraints.iter().any(|c| c.status == CheckStatus::Violated)
            || self.ci.iter().any(|c| c.status == CheckStatus::Violated)
    }

    pub fn violated(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.constraints
            .iter()
            .filter(|c| c.status == CheckStatus::Violated)
    }

    pub fn not_evaluable(&self) -> usize {
        self.constraints
            .iter()
            .filter(|c| c.status == CheckStatus::NotEvaluable)
            .count()
    }

    pub fn to_json(&self) -> Value {
        let cons: Vec<Value> = self
            .constraints
            .iter()
            .filter(|c| c.status != CheckStatus::Satisfied)
            .map(|c| {
                json!({
                    "district": c.district,
                    "index": c.index,
                    "status": c.status.as_str(),
                    "lhs": c.lhs.as_ref().map(|x| x.to_string()),
                    "margin": c.margin.as_ref().map(|x| x.to_string()),
                    "margin_approx": c.margin.as_ref().map(rational::to_f64),
                    "text": c.text,
                })
            })
            .collect();
        let ci: Vec<Value> = self
            .ci
            .iter()
            .map(|c| {
                json!({
                    "text": c.text,
                    "status": c.status.as_str(),
                    "deviation": c.deviation.to_string(),
                })
            })
            .collect();
        json!({
            "falsified": self.falsified(),
            "tolerance": self.tolerance.to_string(),
            "checked": self.constraints.len(),
            "violated": self.violated().count(),
            "not_evaluable": self.not_evaluable(),
            "constraints": cons,
            "ci": ci,
        })
    }
}

/// Evaluates every constraint and independence of `result` on `table`.
/// Without an explicit tolerance, exact tables are checked exactly and
/// decimal tables within 1e-9.
pub fn evaluate(
    result: &DerivationResult,
    table: &JointTable,
    tolerance: Option<&Rational>,
) -> Result<ViolationReport> {
    let g = &result.graph;
    // Merging renumbers variables; the canonical observed order is unchanged.
    table.check_compatible(&result.input)?;
    let tol = tolerance.cloned().unwrap_or_else(|| table.default_tolerance());
    let table = JointTable::new(g, table.probs().to_vec())?;

    let mut constraints = Vec::new();
    for (k, d) in result.districts.iter().enumerate() {
        let p = star_vector(&table, g, &d.system)?;
        for (i, c) in d.constraints.iter().enumerate() {
            let lhs = c.terms.iter().try_fold(Rational::zero(), |acc, (row, coeff)| {
                p[*row]
                    .as_ref()
                    .map(|x| acc + x * Rational::from_integer(coeff.clone()))
            });
            let margin = lhs.as_ref().map(|l| l - Rational::from_integer(c.rhs.clone()));
            let status = match (&margin, c.relation) {
                (None, _) => CheckStatus::NotEvaluable,
                (Some(m), Relation::Le) if *m > tol => CheckStatus::Violated,
                (Some(m), Relation::Eq) if m.abs() > tol => CheckStatus::Violated,
                _ => CheckStatus::Satisfied,
            };
            constraints.push(ConstraintCheck {
                district: k,
                index: i,
                status,
                lhs,
                margin,
                text: result.render(c, RenderMode::Star),
            });
        }
    }

    let ci = result
        .ci
        .iter()
        .map(|s| {
            let mut all = s.lhs.clone();
            all.extend(&s.rhs);
            all.extend(&s.given);
            let cards: Vec<usize> = all.iter().map(|&v| g.cardinality(v)).collect();
            let m_all = table.marginal(&all);
            let mut ag = s.lhs.clone();
            ag.extend(&s.given);
            let mut bg = s.rhs.clone();
            bg.extend(&s.given);
            let (m_ag, m_bg, m_g) = (table.marginal(&ag), table.marginal(&bg), table.marginal(&s.given));
            let (na, nb) = (s.lhs.len(), s.rhs.len());
            let mut deviation = Rational::zero();
            for idx in 0..cards.iter().product() {
                let vals = crate::table::decode(&cards, idx);
                let (a, rest) = vals.split_at(na);
                let (b, z) = rest.split_at(nb);
                let av: Vec<usize> = a.iter().chain(z).copied().collect();
                let bv: Vec<usize> = b.iter().chain(z).copied().collect();
                let dev = (m_all.get(&vals) * m_g.get(z) - m_ag.get(&av) * m_bg.get(&bv)).abs();
                if dev > deviation {
                    deviation = dev;
                }
            }
            CiCheck {
                text: s.display(g),
                status: if deviation > tol {
                    CheckStatus::Violated
                } else {
                    CheckStatus::Satisfied
                },
                deviation,
            }
        })
        .collect();

    Ok(ViolationReport {
        tolerance: tol,
        constraints,
        ci,
    })
}
