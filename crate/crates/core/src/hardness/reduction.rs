//! Reduction from (3,B2)-SAT to finding a path (or forest) consistent with
//! labeled connectivity samples.
//!
//! Player layout for `n_v` variables, `m` clauses and `k = 2 n_v - m + 1`
//! garbage collectors: `s`, then clause players `c_j(1), c_j(2)`, variable
//! players `v_i(1), v_i(2)`, literal players `x_i(1), x_i(2), ~x_i(1),
//! ~x_i(2)`, garbage collectors `g_1..g_k` and finally `t`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::sat::{Assignment, B2SatFormula, Literal};
use crate::error::{Error, Result};
use crate::graph::{Coalition, PlayerId};
use crate::inference::{ConnectivitySample, Label};

/// What a player stands for. Indices are 0-based; `half` and
/// `occurrence` are 0 or 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum Role {
    Source,
    Clause {
        clause: usize,
        half: usize,
    },
    Variable {
        var: usize,
        half: usize,
    },
    Literal {
        var: usize,
        positive: bool,
        occurrence: usize,
    },
    Garbage {
        index: usize,
    },
    Sink,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Role::Source => write!(f, "s"),
            Role::Sink => write!(f, "t"),
            Role::Clause { clause, half } => write!(f, "c{}({})", clause + 1, half + 1),
            Role::Variable { var, half } => write!(f, "v{}({})", var + 1, half + 1),
            Role::Literal {
                var,
                positive,
                occurrence,
            } => {
                let bar = if positive { "" } else { "~" };
                write!(f, "{bar}x{}({})", var + 1, occurrence + 1)
            }
            Role::Garbage { index } => write!(f, "g{}", index + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Path,
    Forest,
}

/// Why a pair is left out of the negative pair family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PairException {
    /// A required connection.
    Positive,
    /// `{v_i(h), x_i(h)}` or `{v_i(h), ~x_i(h)}`.
    VariableLiteral,
    /// `{c_j(h), y}` with `y` a literal occurrence in clause `j`.
    ClauseLiteral,
    /// `{x_i(1), x_i(2)}` or `{~x_i(1), ~x_i(2)}`.
    LiteralPair,
    /// A literal player and a garbage collector.
    LiteralGarbage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Layout {
    vars: usize,
    clauses: usize,
    garbage: usize,
}

impl Layout {
    fn players(&self) -> usize {
        8 * self.vars + self.clauses + 3
    }
    fn source(&self) -> PlayerId {
        0
    }
    fn clause(&self, j: usize, h: usize) -> PlayerId {
        1 + 2 * j + h
    }
    fn variable(&self, i: usize, h: usize) -> PlayerId {
        1 + 2 * self.clauses + 2 * i + h
    }
    fn literal(&self, i: usize, positive: bool, h: usize) -> PlayerId {
        1 + 2 * self.clauses + 2 * self.vars + 4 * i + if positive { 0 } else { 2 } + h
    }
    fn garbage(&self, g: usize) -> PlayerId {
        1 + 2 * self.clauses + 6 * self.vars + g
    }
    fn sink(&self) -> PlayerId {
        self.players() - 1
    }

    fn roles(&self) -> Vec<Role> {
        let mut roles = vec![Role::Source];
        for clause in 0..self.clauses {
            roles.extend((0..2).map(|half| Role::Clause { clause, half }));
        }
        for var in 0..self.vars {
            roles.extend((0..2).map(|half| Role::Variable { var, half }));
        }
        for var in 0..self.vars {
            for positive in [true, false] {
                roles.extend((0..2).map(|occurrence| Role::Literal {
                    var,
                    positive,
                    occurrence,
                }));
            }
        }
        roles.extend((0..self.garbage).map(|index| Role::Garbage { index }));
        roles.push(Role::Sink);
        debug_assert_eq!(roles.len(), self.players());
        roles
    }
}

/// A labeled sample family whose consistent paths encode satisfying
/// assignments of `formula`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionInstance {
    pub target: Target,
    pub formula: B2SatFormula,
    pub players: usize,
    pub garbage_collectors: usize,
    pub roles: Vec<Role>,
    pub samples: Vec<ConnectivitySample>,
}

impl ReductionInstance {
    fn layout(&self) -> Layout {
        Layout {
            vars: self.formula.variables(),
            clauses: self.formula.clauses().len(),
            garbage: self.garbage_collectors,
        }
    }

    pub fn source(&self) -> PlayerId {
        self.layout().source()
    }

    pub fn sink(&self) -> PlayerId {
        self.layout().sink()
    }

    pub fn clause_player(&self, clause: usize, half: usize) -> PlayerId {
        self.layout().clause(clause, half)
    }

    pub fn variable_player(&self, var: usize, half: usize) -> PlayerId {
        self.layout().variable(var, half)
    }

    pub fn literal_player(&self, literal: Literal, occurrence: usize) -> PlayerId {
        self.layout().literal(literal.var, literal.positive, occurrence)
    }

    pub fn garbage_player(&self, index: usize) -> PlayerId {
        self.layout().garbage(index)
    }

    pub fn player_name(&self, p: PlayerId) -> String {
        self.roles[p].to_string()
    }

    fn of_size(&self, size: usize, label: Label) -> impl Iterator<Item = &Coalition> + '_ {
        self.samples
            .iter()
            .filter(move |s| s.vertices().len() == size && s.label() == label)
            .map(ConnectivitySample::vertices)
    }

    pub fn positive_pairs(&self) -> Vec<&Coalition> {
        self.of_size(2, Label::Connected).collect()
    }

    pub fn negative_pairs(&self) -> Vec<&Coalition> {
        self.of_size(2, Label::Disconnected).collect()
    }

    pub fn negative_triples(&self) -> Vec<&Coalition> {
        self.of_size(3, Label::Disconnected).collect()
    }

    /// The size-`(N-1)` samples added in forest mode.
    pub fn leaf_constraints(&self) -> Vec<&ConnectivitySample> {
        self.samples
            .iter()
            .filter(|s| s.vertices().len() == self.players - 1)
            .collect()
    }

    /// Every exception family that `{a, b}` belongs to, judged from the
    /// player roles alone.
    pub fn pair_exceptions(&self, a: PlayerId, b: PlayerId) -> Vec<PairException> {
        let l = self.layout();
        let (ra, rb) = (self.roles[a], self.roles[b]);
        let mut out = Vec::new();
        let pair = (a.min(b), a.max(b));
        if positive_pairs(&l).contains(&pair) {
            out.push(PairException::Positive);
        }
        for (x, y) in [(ra, rb), (rb, ra)] {
            match (x, y) {
                (
                    Role::Variable { var, half },
                    Role::Literal {
                        var: lv, occurrence, ..
                    },
                ) if var == lv && half == occurrence => out.push(PairException::VariableLiteral),
                (
                    Role::Clause { clause, .. },
                    Role::Literal {
                        var,
                        positive,
                        occurrence,
                    },
                ) => {
                    let inside = self.formula.occurrences().iter().any(|o| {
                        o.clause == clause && o.literal == (Literal { var, positive }) && o.index == occurrence
                    });
                    if inside {
                        out.push(PairException::ClauseLiteral);
                    }
                }
                (Role::Literal { .. }, Role::Garbage { .. }) => out.push(PairException::LiteralGarbage),
                _ => {}
            }
        }
        if let (
            Role::Literal {
                var: v1,
                positive: p1,
                occurrence: o1,
            },
            Role::Literal {
                var: v2,
                positive: p2,
                occurrence: o2,
            },
        ) = (ra, rb)
        {
            if v1 == v2 && p1 == p2 && o1 != o2 {
                out.push(PairException::LiteralPair);
            }
        }
        out
    }
}

fn positive_pairs(l: &Layout) -> Vec<(PlayerId, PlayerId)> {
    let mut out = vec![
        (l.source(), l.clause(0, 0)),
        (l.clause(l.clauses - 1, 1), l.variable(0, 0)),
        (l.variable(l.vars - 1, 1), l.garbage(0)),
        (l.garbage(l.garbage - 1), l.sink()),
    ];
    out.extend((0..l.clauses - 1).map(|j| (l.clause(j, 1), l.clause(j + 1, 0))));
    out.extend((0..l.vars - 1).map(|i| (l.variable(i, 1), l.variable(i + 1, 0))));
    out.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect()
}

fn excluded_pairs(f: &B2SatFormula, l: &Layout) -> BTreeSet<(PlayerId, PlayerId)> {
    let mut out: BTreeSet<_> = positive_pairs(l).into_iter().collect();
    let mut add = |a: PlayerId, b: PlayerId| {
        out.insert((a.min(b), a.max(b)));
    };
    for i in 0..l.vars {
        for positive in [true, false] {
            for h in 0..2 {
                add(l.variable(i, h), l.literal(i, positive, h));
                for g in 0..l.garbage {
                    add(l.literal(i, positive, h), l.garbage(g));
                }
            }
            add(l.literal(i, positive, 0), l.literal(i, positive, 1));
        }
    }
    for o in f.occurrences() {
        let y = l.literal(o.literal.var, o.literal.positive, o.index);
        for h in 0..2 {
            add(l.clause(o.clause, h), y);
        }
    }
    out
}

fn negative_triples(l: &Layout) -> BTreeSet<Coalition> {
    let n = l.players();
    let mut out = BTreeSet::new();
    for i in 0..l.vars {
        let previous = if i == 0 {
            l.clause(l.clauses - 1, 1)
        } else {
            l.variable(i - 1, 1)
        };
        for positive in [true, false] {
            let (v1, v2) = (l.variable(i, 0), l.variable(i, 1));
            let (a, b) = (l.literal(i, positive, 0), l.literal(i, positive, 1));
            for y in 0..n {
                if ![v1, a, previous, b].contains(&y) {
                    out.insert(Coalition::from(vec![v1, a, y]));
                }
                if ![a, b, v1, v2].contains(&y) {
                    out.insert(Coalition::from(vec![a, b, y]));
                }
            }
        }
    }
    out
}

fn build(f: &B2SatFormula, target: Target) -> Result<ReductionInstance> {
    let vars = f.variables();
    let clauses = f.clauses().len();
    if 2 * vars < clauses {
        return Err(Error::invalid("needs 2 n_v - m + 1 >= 1 garbage collectors"));
    }
    let l = Layout {
        vars,
        clauses,
        garbage: 2 * vars - clauses + 1,
    };
    let n = l.players();
    let mut samples = Vec::new();
    for (a, b) in positive_pairs(&l) {
        samples.push(ConnectivitySample::connected([a, b])?);
    }
    let excluded = excluded_pairs(f, &l);
    for a in 0..n {
        for b in a + 1..n {
            if !excluded.contains(&(a, b)) {
                samples.push(ConnectivitySample::disconnected([a, b])?);
            }
        }
    }
    for t in negative_triples(&l) {
        samples.push(ConnectivitySample::new(t, Label::Disconnected)?);
    }
    if target == Target::Forest {
        for skip in 0..n {
            let rest = Coalition::new((0..n).filter(|&p| p != skip))?;
            let label = Label::from(skip == l.source() || skip == l.sink());
            samples.push(ConnectivitySample::new(rest, label)?);
        }
    }
    Ok(ReductionInstance {
        target,
        formula: f.clone(),
        players: n,
        garbage_collectors: l.garbage,
        roles: l.roles(),
        samples,
    })
}

pub fn reduce_sat_to_path(f: &B2SatFormula) -> Result<ReductionInstance> {
    build(f, Target::Path)
}

/// Path-mode samples plus: `N \ {s}` and `N \ {t}` connected, every other
/// `(N-1)`-subset disconnected, which leaves paths as the only consistent
/// forests.
pub fn reduce_sat_to_forest(f: &B2SatFormula) -> Result<ReductionInstance> {
    build(f, Target::Forest)
}

/// Builds a consistent path from a satisfying assignment: each clause
/// gadget is bridged by a true literal, each variable gadget by the pair of
/// false literals, and the unused true literals sit between garbage
/// collectors. Clause choices are searched until the leftovers can be laid
/// out with no `{y(1), g, y(2)}` window (such a window would be a connected
/// negative triple). Returns `None` when no choice works.
pub fn witness_path(inst: &ReductionInstance, assignment: &Assignment) -> Result<Option<Vec<PlayerId>>> {
    let f = &inst.formula;
    if !f.is_satisfied_by(assignment) {
        return Err(Error::invalid("assignment does not satisfy the formula"));
    }
    let l = inst.layout();
    let occurrences = f.occurrences();
    let choices: Vec<Vec<PlayerId>> = (0..l.clauses)
        .map(|j| {
            occurrences
                .iter()
                .filter(|o| o.clause == j && o.literal.holds(assignment))
                .map(|o| l.literal(o.literal.var, o.literal.positive, o.index))
                .collect()
        })
        .collect();
    let true_literals: Vec<PlayerId> = (0..l.vars)
        .flat_map(|i| {
            let positive = assignment.value(i);
            [l.literal(i, positive, 0), l.literal(i, positive, 1)]
        })
        .collect();

    let mut picked = Vec::with_capacity(l.clauses);
    let Some(leftovers) = pick_clauses(&choices, &true_literals, &inst.roles, &mut picked) else {
        return Ok(None);
    };

    let mut order = vec![l.source()];
    for (j, &y) in picked.iter().enumerate() {
        order.extend([l.clause(j, 0), y, l.clause(j, 1)]);
    }
    for i in 0..l.vars {
        let bridge = !assignment.value(i);
        order.extend([
            l.variable(i, 0),
            l.literal(i, bridge, 0),
            l.literal(i, bridge, 1),
            l.variable(i, 1),
        ]);
    }
    for g in 0..l.garbage {
        order.push(l.garbage(g));
        if let Some(&y) = leftovers.get(g) {
            order.push(y);
        }
    }
    order.push(l.sink());
    debug_assert_eq!(order.len(), l.players());
    Ok(Some(order))
}

fn pick_clauses(
    choices: &[Vec<PlayerId>],
    true_literals: &[PlayerId],
    roles: &[Role],
    picked: &mut Vec<PlayerId>,
) -> Option<Vec<PlayerId>> {
    if picked.len() == choices.len() {
        let rest: Vec<PlayerId> = true_literals.iter().copied().filter(|y| !picked.contains(y)).collect();
        return arrange_leftovers(&rest, roles);
    }
    for &y in &choices[picked.len()] {
        picked.push(y);
        if let Some(out) = pick_clauses(choices, true_literals, roles, picked) {
            return Some(out);
        }
        picked.pop();
    }
    None
}

/// First ordering (lexicographically) in which no two consecutive players
/// are the two occurrences of the same literal.
fn arrange_leftovers(rest: &[PlayerId], roles: &[Role]) -> Option<Vec<PlayerId>> {
    let same_literal = |a: PlayerId, b: PlayerId| match (roles[a], roles[b]) {
        (
            Role::Literal {
                var: v1, positive: p1, ..
            },
            Role::Literal {
                var: v2, positive: p2, ..
            },
        ) => v1 == v2 && p1 == p2,
        _ => false,
    };
    fn rec(
        rest: &[PlayerId],
        same: &dyn Fn(PlayerId, PlayerId) -> bool,
        used: &mut [bool],
        out: &mut Vec<PlayerId>,
    ) -> bool {
        if out.len() == rest.len() {
            return true;
        }
        for k in 0..rest.len() {
            if used[k] {
                continue;
            }
            if let Some(&last) = out.last() {
                if same(last, rest[k]) {
                    continue;
                }
            }
            used[k] = true;
            out.push(rest[k]);
            if rec(rest, same, used, out) {
                return true;
            }
            out.pop();
            used[k] = false;
        }
        false
    }
    let mut sorted = rest.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::with_capacity(sorted.len());
    rec(&sorted, &same_literal, &mut vec![false; sorted.len()], &mut out).then_some(out)
}

/// Reads the truth assignment off a consistent ordering: `x_i` is true iff
/// `~x_i(1), ~x_i(2)` are the two players between `v_i(1)` and `v_i(2)`.
pub fn extract_assignment(ordering: &[PlayerId], inst: &ReductionInstance) -> Result<Assignment> {
    let n = inst.players;
    if ordering.len() != n {
        return Err(Error::invalid(format!(
            "ordering has {} players, instance has {n}",
            ordering.len()
        )));
    }
    let mut pos = vec![usize::MAX; n];
    for (k, &p) in ordering.iter().enumerate() {
        if p >= n {
            return Err(Error::PlayerOutOfRange { player: p, n });
        }
        if pos[p] != usize::MAX {
            return Err(Error::invalid(format!("player {p} appears twice")));
        }
        pos[p] = k;
    }
    let l = inst.layout();
    let mut values = Vec::with_capacity(l.vars);
    for i in 0..l.vars {
        let (a, b) = (pos[l.variable(i, 0)], pos[l.variable(i, 1)]);
        let (lo, hi) = (a.min(b), a.max(b));
        let inner: BTreeSet<PlayerId> = if hi - lo == 3 {
            ordering[lo + 1..hi].iter().copied().collect()
        } else {
            BTreeSet::new()
        };
        let pair = |positive| BTreeSet::from([l.literal(i, positive, 0), l.literal(i, positive, 1)]);
        if inner == pair(false) {
            values.push(true);
        } else if inner == pair(true) {
            values.push(false);
        } else {
            return Err(Error::Contradiction(format!(
                "variable gadget x{} is not bridged by a literal pair",
                i + 1
            )));
        }
    }
    Ok(Assignment::new(values))
}
