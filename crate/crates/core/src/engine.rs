//! Goal-directed search for partial stable models.
//!
//! A query is proved top-down against the ground program while a consistent
//! hypothesis set (the CHS) of signed atoms is accumulated. Positive calls
//! resolve against rules in textual order, negated calls refute every rule for
//! the atom (dual resolution), recursive calls through an even number of
//! negations succeed coinductively, and after the query succeeds the checks
//! compiled from odd loops and constraints are run under the same CHS.
//!
//! The search is an explicit machine (continuation list plus choice-point
//! stack) so answers are produced lazily by an iterator.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use serde::Serialize;

use crate::grounder::{AtomId, GroundLiteral, GroundProgram, RuleId};
use crate::syntax::{render_set, render_set_sorted, Atom, Literal, Sign, Substitution};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("derivation depth exceeded the limit of {limit} frames")]
    DepthLimitExceeded { limit: usize },
    #[error("negated query literal `{literal}` is not ground")]
    Floundering { literal: String },
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub depth_limit: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { depth_limit: 100_000 }
    }
}

/// A check every answer must pass: the rule's body fails or its head holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NmrGoal {
    pub rule: RuleId,
}

impl NmrGoal {
    /// The alternatives of the check, e.g. `not p` for the constraint `:- p.`
    pub fn describe(&self, gp: &GroundProgram) -> String {
        let rule = gp.rule(self.rule);
        let mut alts: Vec<String> = Vec::new();
        for l in &rule.body {
            let flipped = GroundLiteral { atom: l.atom, positive: !l.positive };
            alts.push(gp.literal(flipped).to_string());
        }
        if let Some(h) = rule.head {
            alts.push(gp.atom(h).to_string());
        }
        let mut seen = HashSet::new();
        alts.retain(|a| seen.insert(a.clone()));
        alts.join(" ; ")
    }
}

#[derive(Clone, Debug, Default)]
pub struct RuleClassification {
    pub olon_rules: BTreeSet<RuleId>,
    pub ordinary_rules: BTreeSet<RuleId>,
    /// Rules on a cycle through negation with an even number of negations.
    pub even_loop_rules: BTreeSet<RuleId>,
    pub nmr_goals: Vec<NmrGoal>,
}

/// Classifies rules by the strongly connected components of the signed
/// dependency graph. A rule is OLON when it closes a cycle inside a component
/// that contains an odd cycle; it is ordinary when it can be left without
/// re-entering its head's component (or is not OLON at all).
pub fn classify_rules(gp: &GroundProgram) -> RuleClassification {
    let n = gp.atom_count();
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for r in gp.rules() {
        if let Some(h) = r.head {
            for l in &r.body {
                adj[h.index()].push((l.atom.index(), !l.positive));
            }
        }
    }
    let comp = strongly_connected(&adj);
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);

    let mut odd = vec![false; ncomp];
    let mut negative = vec![false; ncomp];
    for (v, edges) in adj.iter().enumerate() {
        for &(w, neg) in edges {
            if neg && comp[w] == comp[v] {
                negative[comp[v]] = true;
            }
        }
    }
    let mut colour: Vec<Option<bool>> = vec![None; n];
    for s in 0..n {
        if colour[s].is_some() {
            continue;
        }
        colour[s] = Some(false);
        let mut queue = vec![s];
        while let Some(v) = queue.pop() {
            let cv = colour[v].unwrap();
            for &(w, neg) in &adj[v] {
                if comp[w] != comp[v] {
                    continue;
                }
                match colour[w] {
                    None => {
                        colour[w] = Some(cv ^ neg);
                        queue.push(w);
                    }
                    Some(cw) if cw != cv ^ neg => odd[comp[v]] = true,
                    Some(_) => {}
                }
            }
        }
    }

    let mut out = RuleClassification::default();
    for (i, r) in gp.rules().iter().enumerate() {
        let id = RuleId(i as u32);
        let Some(h) = r.head else {
            out.nmr_goals.push(NmrGoal { rule: id });
            continue;
        };
        let c = comp[h.index()];
        let in_loop = r.body.iter().any(|l| comp[l.atom.index()] == c);
        let olon = odd[c] && in_loop;
        if in_loop && negative[c] && !odd[c] {
            out.even_loop_rules.insert(id);
        }
        if olon {
            out.olon_rules.insert(id);
            out.nmr_goals.push(NmrGoal { rule: id });
        }
        if !olon || r.body.iter().any(|l| comp[l.atom.index()] != c) {
            out.ordinary_rules.insert(id);
        }
    }
    out
}

/// Tarjan's algorithm without recursion; returns a component id per node.
fn strongly_connected(adj: &[Vec<(usize, bool)>]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let (mut index, mut low, mut comp) = (vec![UNSEEN; n], vec![0; n], vec![UNSEEN; n]);
    let mut on_stack = vec![false; n];
    let (mut stack, mut counter, mut ncomp) = (Vec::new(), 0, 0);
    for s in 0..n {
        if index[s] != UNSEEN {
            continue;
        }
        let mut calls = vec![(s, 0usize)];
        index[s] = counter;
        low[s] = counter;
        counter += 1;
        stack.push(s);
        on_stack[s] = true;
        while let Some(&(v, i)) = calls.last() {
            if i < adj[v].len() {
                calls.last_mut().unwrap().1 += 1;
                let w = adj[v][i].0;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(u, _)) = calls.last() {
                low[u] = low[u].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp[w] = ncomp;
                    if w == v {
                        break;
                    }
                }
                ncomp += 1;
            }
        }
    }
    comp
}

/// A partial answer set: signed ground atoms in the order they were derived.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Chs {
    literals: Vec<Literal>,
}

impl Chs {
    pub fn new(literals: Vec<Literal>) -> Self {
        Chs { literals }
    }

    /// Every literal, hidden auxiliaries included.
    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn visible(&self) -> impl Iterator<Item = &Literal> {
        self.literals.iter().filter(|l| !l.atom.is_hidden())
    }

    pub fn positive(&self) -> impl Iterator<Item = &Atom> {
        self.literals.iter().filter(|l| l.is_positive()).map(|l| &l.atom)
    }

    pub fn negative(&self) -> impl Iterator<Item = &Atom> {
        self.literals.iter().filter(|l| !l.is_positive()).map(|l| &l.atom)
    }

    pub fn contains(&self, lit: &Literal) -> bool {
        self.literals.contains(lit)
    }

    pub fn visible_set(&self) -> BTreeSet<Literal> {
        self.visible().cloned().collect()
    }

    /// Drops hidden atoms from the snapshot.
    pub fn without_hidden(&self) -> Chs {
        Chs { literals: self.visible().cloned().collect() }
    }

    /// `{ q, not p }` in derivation order.
    pub fn render(&self) -> String {
        render_set(self.literals.iter().map(|l| (&l.atom, l.sign)))
    }

    /// Positive atoms sorted, then negative atoms sorted.
    pub fn render_sorted(&self) -> String {
        render_set_sorted(self.literals.iter().map(|l| (&l.atom, l.sign)))
    }
}

impl fmt::Display for Chs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Answer {
    pub chs: Chs,
    /// Bindings of the query's variables.
    pub bindings: Substitution,
}

/// A ground program prepared for querying.
pub struct Engine {
    gp: GroundProgram,
    classification: RuleClassification,
    config: EngineConfig,
}

impl Engine {
    pub fn new(gp: GroundProgram) -> Self {
        Engine::with_config(gp, EngineConfig::default())
    }

    pub fn with_config(gp: GroundProgram, config: EngineConfig) -> Self {
        let classification = classify_rules(&gp);
        Engine { gp, classification, config }
    }

    pub fn program(&self) -> &GroundProgram {
        &self.gp
    }

    pub fn classification(&self) -> &RuleClassification {
        &self.classification
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Lazily enumerates answers to the conjunctive query.
    pub fn solve(&self, query: &[Literal]) -> Solutions<'_> {
        Solutions::new(self, query.to_vec())
    }

    /// Drains [`Engine::solve`], suppressing answers whose visible literals repeat.
    pub fn enumerate_all(&self, query: &[Literal]) -> Result<Vec<Answer>, SolveError> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for answer in self.solve(query) {
            let answer = answer?;
            if seen.insert(answer.chs.visible_set()) {
                out.push(answer);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Value {
    Unknown,
    Pos,
    Neg,
}

#[derive(Clone, Debug)]
enum Goal {
    Call { lit: GroundLiteral, depth: u32 },
    Enter { atom: AtomId, rule: RuleId, depth: u32 },
    DualRule { atom: AtomId, next: usize, depth: u32 },
    ExitPos { atom: AtomId, rule: RuleId },
    Query { index: usize, bindings: Rc<Substitution> },
    QueryAt { atom: AtomId, index: usize, bindings: Rc<Substitution> },
    Nmr { index: usize, bindings: Rc<Substitution> },
}

struct Node {
    goal: Goal,
    next: Cont,
    len: usize,
}

type Cont = Option<Rc<Node>>;

fn cons(goal: Goal, next: Cont) -> Cont {
    let len = next.as_ref().map_or(0, |n| n.len) + 1;
    Some(Rc::new(Node { goal, next, len }))
}

struct ChoicePoint {
    trail_len: usize,
    cont: Cont,
    alts: Vec<Goal>,
    next: usize,
}

enum Undo {
    Value(AtomId),
    Frame(AtomId, Option<u32>),
    Support(AtomId, Option<RuleId>),
}

/// Lazy answer stream of one query; owns all mutable search state.
pub struct Solutions<'e> {
    engine: &'e Engine,
    query: Vec<Literal>,
    extra: Vec<Atom>,
    extra_ids: HashMap<Atom, AtomId>,
    value: Vec<Value>,
    frame: Vec<Option<u32>>,
    support: Vec<Option<RuleId>>,
    order: Vec<AtomId>,
    trail: Vec<Undo>,
    cont: Cont,
    choices: Vec<ChoicePoint>,
    failing: bool,
    done: bool,
}

impl<'e> Solutions<'e> {
    fn new(engine: &'e Engine, query: Vec<Literal>) -> Self {
        let n = engine.gp.atom_count();
        Solutions {
            engine,
            query,
            extra: Vec::new(),
            extra_ids: HashMap::new(),
            value: vec![Value::Unknown; n],
            frame: vec![None; n],
            support: vec![None; n],
            order: Vec::new(),
            trail: Vec::new(),
            cont: cons(Goal::Query { index: 0, bindings: Rc::new(Substitution::new()) }, None),
            choices: Vec::new(),
            failing: false,
            done: false,
        }
    }

    fn atom(&self, id: AtomId) -> &Atom {
        let n = self.engine.gp.atom_count();
        if id.index() < n {
            self.engine.gp.atom(id)
        } else {
            &self.extra[id.index() - n]
        }
    }

    fn rules_for(&self, id: AtomId) -> &'e [RuleId] {
        if id.index() < self.engine.gp.atom_count() {
            self.engine.gp.rules_for(id)
        } else {
            &[]
        }
    }

    /// Atoms outside the program get fresh ids with no rules.
    fn atom_id(&mut self, atom: &Atom) -> AtomId {
        if let Some(id) = self.engine.gp.atom_id(atom) {
            return id;
        }
        if let Some(&id) = self.extra_ids.get(atom) {
            return id;
        }
        let id = AtomId((self.engine.gp.atom_count() + self.extra.len()) as u32);
        self.extra.push(atom.clone());
        self.extra_ids.insert(atom.clone(), id);
        self.value.push(Value::Unknown);
        self.frame.push(None);
        self.support.push(None);
        id
    }

    fn assign(&mut self, atom: AtomId, v: Value) {
        self.value[atom.index()] = v;
        self.order.push(atom);
        self.trail.push(Undo::Value(atom));
    }

    fn set_frame(&mut self, atom: AtomId, depth: Option<u32>) {
        let old = std::mem::replace(&mut self.frame[atom.index()], depth);
        self.trail.push(Undo::Frame(atom, old));
    }

    fn set_support(&mut self, atom: AtomId, rule: RuleId) {
        let old = self.support[atom.index()].replace(rule);
        self.trail.push(Undo::Support(atom, old));
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            match self.trail.pop().unwrap() {
                Undo::Value(a) => {
                    self.value[a.index()] = Value::Unknown;
                    self.order.pop();
                }
                Undo::Frame(a, old) => self.frame[a.index()] = old,
                Undo::Support(a, old) => self.support[a.index()] = old,
            }
        }
    }

    fn push(&mut self, goal: Goal) {
        self.cont = cons(goal, self.cont.take());
    }

    fn branch(&mut self, mut alts: Vec<Goal>) {
        match alts.len() {
            0 => self.failing = true,
            1 => self.push(alts.pop().unwrap()),
            _ => {
                let first = alts[0].clone();
                self.choices.push(ChoicePoint { trail_len: self.trail.len(), cont: self.cont.clone(), alts, next: 1 });
                self.push(first);
            }
        }
    }

    fn backtrack(&mut self) -> bool {
        while let Some(cp) = self.choices.last_mut() {
            if cp.next < cp.alts.len() {
                let goal = cp.alts[cp.next].clone();
                cp.next += 1;
                let (len, cont) = (cp.trail_len, cp.cont.clone());
                if cp.next == cp.alts.len() {
                    self.choices.pop();
                }
                self.undo_to(len);
                self.cont = cont;
                self.push(goal);
                self.failing = false;
                return true;
            }
            self.choices.pop();
        }
        false
    }

    fn holds(&self, lit: GroundLiteral) -> bool {
        let v = self.value[lit.atom.index()];
        if lit.positive {
            v == Value::Pos
        } else {
            v == Value::Neg
        }
    }

    fn falsified(&self, lit: GroundLiteral) -> bool {
        let v = self.value[lit.atom.index()];
        if lit.positive {
            v == Value::Neg
        } else {
            v == Value::Pos
        }
    }

    /// The call that makes `lit` false. `depth` is that of the enclosing
    /// negated call, so negative calls stay at odd depth and positive at even.
    fn refute(lit: GroundLiteral, depth: u32) -> Goal {
        if lit.positive {
            Goal::Call { lit: GroundLiteral::neg(lit.atom), depth: depth | 1 }
        } else {
            Goal::Call { lit: GroundLiteral::pos(lit.atom), depth: (depth | 1) + 1 }
        }
    }

    fn body_goal(lit: GroundLiteral, depth: u32) -> Goal {
        Goal::Call { lit, depth: if lit.positive { depth } else { depth + 1 } }
    }

    /// Whether the support graph reaches `target` from the positive body of `rule`.
    fn support_reaches(&self, rule: RuleId, target: AtomId) -> bool {
        let gp = &self.engine.gp;
        let mut seen = HashSet::new();
        let mut stack: Vec<AtomId> = gp.rule(rule).body.iter().filter(|l| l.positive).map(|l| l.atom).collect();
        while let Some(a) = stack.pop() {
            if a == target {
                return true;
            }
            if !seen.insert(a) {
                continue;
            }
            if let Some(r) = self.support[a.index()] {
                stack.extend(gp.rule(r).body.iter().filter(|l| l.positive).map(|l| l.atom));
            }
        }
        false
    }

    fn snapshot(&self, bindings: &Substitution) -> Answer {
        let literals = self
            .order
            .iter()
            .map(|&a| {
                let sign = if self.value[a.index()] == Value::Pos { Sign::Positive } else { Sign::NafNegated };
                Literal { atom: self.atom(a).clone(), sign }
            })
            .collect();
        Answer { chs: Chs { literals }, bindings: bindings.clone() }
    }

    fn run(&mut self) -> Result<Option<Answer>, SolveError> {
        let limit = self.engine.config.depth_limit;
        let gp = &self.engine.gp;
        loop {
            if self.failing && !self.backtrack() {
                return Ok(None);
            }
            let node = self.cont.take().expect("continuation always ends in an answer");
            if node.len > limit {
                return Err(SolveError::DepthLimitExceeded { limit });
            }
            self.cont = node.next.clone();
            match node.goal.clone() {
                Goal::Call { lit, depth } => {
                    let a = lit.atom;
                    match (lit.positive, self.value[a.index()]) {
                        (true, Value::Neg) | (false, Value::Pos) => self.failing = true,
                        (true, Value::Pos) => self.failing = self.frame[a.index()] == Some(depth),
                        (false, Value::Neg) => {}
                        (true, Value::Unknown) => {
                            let alts =
                                self.rules_for(a).iter().map(|&rule| Goal::Enter { atom: a, rule, depth }).collect();
                            self.branch(alts);
                        }
                        (false, Value::Unknown) => {
                            self.assign(a, Value::Neg);
                            self.push(Goal::DualRule { atom: a, next: 0, depth });
                        }
                    }
                }
                Goal::Enter { atom, rule, depth } => {
                    self.assign(atom, Value::Pos);
                    self.set_frame(atom, Some(depth));
                    self.push(Goal::ExitPos { atom, rule });
                    for &l in gp.rule(rule).body.iter().rev() {
                        self.push(Self::body_goal(l, depth));
                    }
                }
                Goal::ExitPos { atom, rule } => {
                    self.set_frame(atom, None);
                    self.set_support(atom, rule);
                    self.failing = self.support_reaches(rule, atom);
                }
                Goal::DualRule { atom, next, depth } => {
                    let rules = self.rules_for(atom);
                    let Some(&rule) = rules.get(next) else { continue };
                    self.push(Goal::DualRule { atom, next: next + 1, depth });
                    let body = &gp.rule(rule).body;
                    if body.iter().any(|&l| self.falsified(l)) {
                        continue;
                    }
                    let alts = body.iter().filter(|&&l| !self.holds(l)).map(|&l| Self::refute(l, depth)).collect();
                    self.branch(alts);
                }
                Goal::Query { index, bindings } => {
                    let Some(lit) = self.query.get(index) else {
                        self.push(Goal::Nmr { index: 0, bindings });
                        continue;
                    };
                    let lit = lit.substitute(&bindings);
                    if lit.atom.is_ground() {
                        let a = self.atom_id(&lit.atom);
                        let depth = if lit.is_positive() { 0 } else { 1 };
                        self.push(Goal::Query { index: index + 1, bindings });
                        self.push(Goal::Call { lit: GroundLiteral { atom: a, positive: lit.is_positive() }, depth });
                    } else if !lit.is_positive() {
                        return Err(SolveError::Floundering { literal: lit.to_string() });
                    } else {
                        let mut alts = Vec::new();
                        for a in gp.atom_ids() {
                            let mut s = (*bindings).clone();
                            if lit.atom.match_ground(gp.atom(a), &mut s) {
                                alts.push(Goal::QueryAt { atom: a, index, bindings: Rc::new(s) });
                            }
                        }
                        self.branch(alts);
                    }
                }
                Goal::QueryAt { atom, index, bindings } => {
                    self.push(Goal::Query { index: index + 1, bindings });
                    self.push(Goal::Call { lit: GroundLiteral::pos(atom), depth: 0 });
                }
                Goal::Nmr { index, bindings } => {
                    let Some(check) = self.engine.classification.nmr_goals.get(index) else {
                        self.failing = true;
                        return Ok(Some(self.snapshot(&bindings)));
                    };
                    let rule = gp.rule(check.rule);
                    self.push(Goal::Nmr { index: index + 1, bindings });
                    let head_holds = rule.head.is_some_and(|h| self.value[h.index()] == Value::Pos);
                    if head_holds || rule.body.iter().any(|&l| self.falsified(l)) {
                        continue;
                    }
                    let mut alts: Vec<Goal> =
                        rule.body.iter().filter(|&&l| !self.holds(l)).map(|&l| Self::refute(l, 0)).collect();
                    if let Some(h) = rule.head {
                        alts.push(Goal::Call { lit: GroundLiteral::pos(h), depth: 0 });
                    }
                    self.branch(alts);
                }
            }
        }
    }
}

impl Iterator for Solutions<'_> {
    type Item = Result<Answer, SolveError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.run() {
            Ok(Some(a)) => Some(Ok(a)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounder::ground;
    use crate::syntax::{parse_program, parse_query};

    const EVEN_LOOPS: &str = "p :- not q.\nq :- not p.\nr :- not s.\ns :- not r.";

    fn engine(src: &str) -> Engine {
        Engine::new(ground(&parse_program(src).unwrap()).unwrap())
    }

    fn answers(src: &str, query: &str) -> Vec<String> {
        let e = engine(src);
        e.enumerate_all(&parse_query(query).unwrap()).unwrap().into_iter().map(|a| a.chs.render()).collect()
    }

    #[test]
    fn even_loop_queries() {
        assert_eq!(answers(EVEN_LOOPS, "q"), vec!["{ q, not p }"]);
        assert_eq!(answers(EVEN_LOOPS, "q, s"), vec!["{ q, not p, s, not r }"]);
        assert_eq!(answers("p :- not q. q :- not p.", "p"), vec!["{ p, not q }"]);
    }

    #[test]
    fn first_answer_leaves_unrelated_atoms_untouched() {
        let e = engine(EVEN_LOOPS);
        let first = e.solve(&parse_query("q").unwrap()).next().unwrap().unwrap();
        assert!(!first.chs.literals().iter().any(|l| l.atom.predicate == "r" || l.atom.predicate == "s"));
    }

    #[test]
    fn odd_loop_has_no_answers() {
        assert!(answers("p :- not p.", "p").is_empty());
        assert!(answers("p :- not p. q.", "q").is_empty());
        assert_eq!(answers("p :- not p. p :- q. q.", "q"), vec!["{ q, p }"]);
    }

    #[test]
    fn definite_programs() {
        assert_eq!(answers("a. b :- a.", "b"), vec!["{ b, a }"]);
        assert!(answers("p :- p.", "p").is_empty());
        assert_eq!(answers("p :- p.", "not p"), vec!["{ not p }"]);
    }

    #[test]
    fn unknown_atoms() {
        assert!(answers("a.", "zzz").is_empty());
        assert_eq!(answers("a.", "not zzz"), vec!["{ not zzz }"]);
    }

    #[test]
    fn constraints_prune() {
        assert_eq!(answers("p :- not q. q :- not p. :- p.", "not q"), Vec::<String>::new());
        assert_eq!(answers("p :- not q. q :- not p. :- p.", "q"), vec!["{ q, not p }"]);
    }

    #[test]
    fn positive_support_must_be_acyclic() {
        // p would only be supported through x, which depends on p
        assert!(answers("p :- not z, x. z :- not x. x :- p.", "p").is_empty());
    }

    #[test]
    fn query_variables_bind() {
        let e = engine("q(a). q(b). p(X) :- q(X), not r(X). r(b).");
        let out = e.enumerate_all(&parse_query("p(X)").unwrap()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].bindings["X"].to_string(), "a");
        let err = e.enumerate_all(&parse_query("not p(X)").unwrap()).unwrap_err();
        assert!(matches!(err, SolveError::Floundering { .. }));
    }

    #[test]
    fn depth_limit_is_an_error() {
        let mut src = String::from("a0.\n");
        for i in 1..50 {
            src.push_str(&format!("a{i} :- a{}.\n", i - 1));
        }
        let gp = ground(&parse_program(&src).unwrap()).unwrap();
        let e = Engine::with_config(gp, EngineConfig { depth_limit: 10 });
        let err = e.enumerate_all(&parse_query("a49").unwrap()).unwrap_err();
        assert_eq!(err, SolveError::DepthLimitExceeded { limit: 10 });
    }

    #[test]
    fn classification() {
        let e = engine("p :- not p.");
        let c = e.classification();
        assert_eq!(c.olon_rules.len(), 1);
        assert!(c.ordinary_rules.is_empty());
        assert_eq!(c.nmr_goals.len(), 1);
        assert_eq!(c.nmr_goals[0].describe(e.program()), "p");

        let e = engine(EVEN_LOOPS);
        assert!(e.classification().olon_rules.is_empty());
        assert_eq!(e.classification().ordinary_rules.len(), 4);
        assert_eq!(e.classification().even_loop_rules.len(), 4);
        assert!(engine("p :- not p.").classification().even_loop_rules.is_empty());
        assert!(engine("p :- q. q :- p.").classification().even_loop_rules.is_empty());

        let e = engine("p :- not q. q :- not p. :- p.");
        assert!(e.classification().olon_rules.is_empty());
        assert_eq!(e.classification().nmr_goals.len(), 1);
        assert_eq!(e.classification().nmr_goals[0].describe(e.program()), "not p");

        // a rule both ordinary and OLON
        let e = engine("p :- not p, not q. q :- not r. r.");
        let c = e.classification();
        assert!(c.olon_rules.contains(&RuleId(0)) && c.ordinary_rules.contains(&RuleId(0)));
    }

    #[test]
    fn lazy_enumeration_yields_each_model_fragment() {
        let e = engine("a :- not b. b :- not a. c :- a. c :- b.");
        let all = e.enumerate_all(&parse_query("c").unwrap()).unwrap();
        let rendered: Vec<String> = all.iter().map(|a| a.chs.render()).collect();
        assert_eq!(rendered, vec!["{ c, a, not b }", "{ c, b, not a }"]);
    }
}
