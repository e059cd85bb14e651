//! (3,B2)-SAT: 3-CNF where every variable occurs exactly twice positively
//! and exactly twice negatively.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A variable (0-based) with a polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, positive: false }
    }

    pub fn holds(&self, assignment: &Assignment) -> bool {
        assignment.value(self.var) == self.positive
    }

    /// DIMACS encoding: `±(var + 1)`.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.positive {
            v
        } else {
            -v
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "x{}", self.var + 1)
        } else {
            write!(f, "~x{}", self.var + 1)
        }
    }
}

/// Where a literal occurrence sits: clause, position in it, and which of
/// the two same-polarity occurrences of its variable it is (0 or 1, in
/// clause order).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub clause: usize,
    pub position: usize,
    pub literal: Literal,
    pub index: usize,
}

#[derive(Deserialize, Serialize)]
struct RawFormula {
    variables: usize,
    clauses: Vec<[Literal; 3]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFormula", into = "RawFormula")]
pub struct B2SatFormula {
    variables: usize,
    clauses: Vec<[Literal; 3]>,
}

impl TryFrom<RawFormula> for B2SatFormula {
    type Error = Error;

    fn try_from(raw: RawFormula) -> Result<Self> {
        B2SatFormula::new(raw.variables, raw.clauses)
    }
}

impl From<B2SatFormula> for RawFormula {
    fn from(f: B2SatFormula) -> Self {
        RawFormula {
            variables: f.variables,
            clauses: f.clauses,
        }
    }
}

impl B2SatFormula {
    pub fn new(variables: usize, clauses: Vec<[Literal; 3]>) -> Result<Self> {
        if variables == 0 {
            return Err(Error::invalid("formula needs at least one variable"));
        }
        let mut counts = vec![[0usize; 2]; variables];
        for clause in &clauses {
            for lit in clause {
                if lit.var >= variables {
                    return Err(Error::invalid(format!(
                        "literal {lit} refers to a variable beyond {variables}"
                    )));
                }
                counts[lit.var][lit.positive as usize] += 1;
            }
        }
        for (v, [neg, pos]) in counts.iter().enumerate() {
            if *pos != 2 || *neg != 2 {
                return Err(Error::NotB2(format!(
                    "variable x{} occurs {pos} times positively and {neg} times negatively; need 2 and 2",
                    v + 1
                )));
            }
        }
        debug_assert_eq!(3 * clauses.len(), 4 * variables);
        Ok(B2SatFormula { variables, clauses })
    }

    /// Parses DIMACS CNF (`p cnf V C`, `c` comments, `0`-terminated
    /// clauses) and checks the (3,B2) shape.
    pub fn from_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current: Vec<i64> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 3 || parts[0] != "cnf" {
                    return Err(Error::invalid(format!("bad DIMACS header: {line}")));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| Error::invalid(format!("bad DIMACS header: {line}")))
                };
                header = Some((parse(parts[1])?, parse(parts[2])?));
                continue;
            }
            let (vars, _) = header.ok_or_else(|| Error::invalid("clause before DIMACS header"))?;
            for tok in line.split_whitespace() {
                let x: i64 = tok
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad DIMACS literal {tok:?}")))?;
                if x == 0 {
                    clauses.push(to_clause(&current, vars)?);
                    current.clear();
                } else {
                    current.push(x);
                }
            }
        }
        let (vars, count) = header.ok_or_else(|| Error::invalid("missing DIMACS header"))?;
        if !current.is_empty() {
            clauses.push(to_clause(&current, vars)?);
        }
        if clauses.len() != count {
            return Err(Error::invalid(format!(
                "header announces {count} clauses, found {}",
                clauses.len()
            )));
        }
        Self::new(vars, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.variables, self.clauses.len());
        for c in &self.clauses {
            out.push_str(&format!(
                "{} {} {} 0\n",
                c[0].to_dimacs(),
                c[1].to_dimacs(),
                c[2].to_dimacs()
            ));
        }
        out
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn clauses(&self) -> &[[Literal; 3]] {
        &self.clauses
    }

    /// All literal occurrences in clause order.
    pub fn occurrences(&self) -> Vec<Occurrence> {
        let mut seen = vec![[0usize; 2]; self.variables];
        let mut out = Vec::with_capacity(3 * self.clauses.len());
        for (j, clause) in self.clauses.iter().enumerate() {
            for (position, &literal) in clause.iter().enumerate() {
                let slot = &mut seen[literal.var][literal.positive as usize];
                out.push(Occurrence {
                    clause: j,
                    position,
                    literal,
                    index: *slot,
                });
                *slot += 1;
            }
        }
        out
    }

    pub fn is_satisfied_by(&self, assignment: &Assignment) -> bool {
        assignment.len() == self.variables && self.clauses.iter().all(|c| c.iter().any(|l| l.holds(assignment)))
    }
}

fn to_clause(lits: &[i64], vars: usize) -> Result<[Literal; 3]> {
    if lits.len() != 3 {
        return Err(Error::NotB2(format!(
            "clause {lits:?} has {} literals; need exactly 3",
            lits.len()
        )));
    }
    let mut out = [Literal::pos(0); 3];
    for (slot, &x) in out.iter_mut().zip(lits) {
        let var = x.unsigned_abs() as usize;
        if var > vars {
            return Err(Error::invalid(format!("literal {x} exceeds {vars} variables")));
        }
        *slot = Literal {
            var: var - 1,
            positive: x > 0,
        };
    }
    Ok(out)
}

/// A total truth assignment.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment(values)
    }

    pub fn value(&self, var: usize) -> bool {
        self.0[var]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }
}

/// A uniformly shuffled (3,B2) formula; `variables` must be a positive
/// multiple of 3.
pub fn random_b2_formula<R: Rng + ?Sized>(variables: usize, rng: &mut R) -> Result<B2SatFormula> {
    if variables == 0 || !variables.is_multiple_of(3) {
        return Err(Error::invalid(format!(
            "(3,B2) formulas need a positive multiple of 3 variables, got {variables}"
        )));
    }
    let mut pool: Vec<Literal> = (0..variables)
        .flat_map(|v| [Literal::pos(v), Literal::pos(v), Literal::neg(v), Literal::neg(v)])
        .collect();
    pool.shuffle(rng);
    let clauses = pool.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    B2SatFormula::new(variables, clauses)
}

pub const BRUTE_FORCE_SAT_LIMIT: usize = 20;

/// Exhaustive search; the first satisfying assignment in binary counting
/// order (variable 0 is the lowest bit, set = true).
pub fn brute_force_sat(f: &B2SatFormula) -> Result<Option<Assignment>> {
    let n = f.variables();
    if n > BRUTE_FORCE_SAT_LIMIT {
        return Err(Error::Capacity {
            what: "brute-force SAT variable count",
            limit: BRUTE_FORCE_SAT_LIMIT,
            got: n,
        });
    }
    let masks: Vec<(u32, u32)> = f
        .clauses()
        .iter()
        .map(|c| {
            c.iter().fold((0, 0), |(p, q), l| {
                if l.positive {
                    (p | 1 << l.var, q)
                } else {
                    (p, q | 1 << l.var)
                }
            })
        })
        .collect();
    for bits in 0u32..1 << n {
        if masks.iter().all(|&(p, q)| bits & p != 0 || !bits & q != 0) {
            return Ok(Some(Assignment((0..n).map(|v| bits >> v & 1 == 1).collect())));
        }
    }
    Ok(None)
}
