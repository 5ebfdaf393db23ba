//! Bottom-up instantiation of safe programs over their finite Herbrand universe.
//!
//! Rules are instantiated by joining their positive body literals against the
//! atoms that may possibly become true, iterating to a fixpoint. Builtin
//! comparisons are evaluated once their variables are bound: a true comparison
//! is deleted from the instance, a false one drops the instance.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use indexmap::IndexSet;

use crate::syntax::{Atom, BodyElem, Literal, PredicateKey, Program, Rule, Sign, Substitution, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub u32);

impl AtomId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundLiteral {
    pub atom: AtomId,
    pub positive: bool,
}

impl GroundLiteral {
    pub fn pos(atom: AtomId) -> Self {
        GroundLiteral { atom, positive: true }
    }

    pub fn neg(atom: AtomId) -> Self {
        GroundLiteral { atom, positive: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroundRule {
    pub head: Option<AtomId>,
    pub body: Vec<GroundLiteral>,
    /// Index of the source rule this is an instance of.
    pub source: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId(pub u32);

impl RuleId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroundError {
    #[error("grounding produced more than {limit} rule instances")]
    GroundingExplosion { limit: usize },
}

#[derive(Clone, Debug)]
pub struct GroundConfig {
    pub max_instances: usize,
}

impl Default for GroundConfig {
    fn default() -> Self {
        GroundConfig { max_instances: 1_000_000 }
    }
}

/// A variable-free program with an atom table and a head index.
#[derive(Clone, Debug, Default)]
pub struct GroundProgram {
    atoms: IndexSet<Atom>,
    rules: Vec<GroundRule>,
    by_head: Vec<Vec<RuleId>>,
}

impl GroundProgram {
    /// Builds a ground program directly from ground rules (used by tests and the oracle).
    pub fn from_ground_rules(rules: &[Rule]) -> Self {
        let mut gp = GroundProgram::default();
        for (i, r) in rules.iter().enumerate() {
            assert!(r.is_ground() && r.builtins().next().is_none(), "rule `{r}` is not ground");
            let head = r.head.as_ref().map(|h| gp.intern(h));
            let body = r.literals().map(|l| gp.ground_literal(l)).collect();
            gp.rules.push(GroundRule { head, body, source: i });
        }
        gp.reindex();
        gp
    }

    pub fn intern(&mut self, atom: &Atom) -> AtomId {
        if let Some(i) = self.atoms.get_index_of(atom) {
            return AtomId(i as u32);
        }
        let (i, _) = self.atoms.insert_full(atom.clone());
        self.by_head.push(Vec::new());
        AtomId(i as u32)
    }

    fn ground_literal(&mut self, lit: &Literal) -> GroundLiteral {
        GroundLiteral { atom: self.intern(&lit.atom), positive: lit.is_positive() }
    }

    fn reindex(&mut self) {
        self.by_head = vec![Vec::new(); self.atoms.len()];
        for (i, r) in self.rules.iter().enumerate() {
            if let Some(h) = r.head {
                self.by_head[h.index()].push(RuleId(i as u32));
            }
        }
    }

    pub fn atom(&self, id: AtomId) -> &Atom {
        &self.atoms[id.index()]
    }

    pub fn atom_id(&self, atom: &Atom) -> Option<AtomId> {
        self.atoms.get_index_of(atom).map(|i| AtomId(i as u32))
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_ids(&self) -> impl Iterator<Item = AtomId> {
        (0..self.atoms.len() as u32).map(AtomId)
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub fn rules(&self) -> &[GroundRule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &GroundRule {
        &self.rules[id.index()]
    }

    pub fn rules_for(&self, atom: AtomId) -> &[RuleId] {
        &self.by_head[atom.index()]
    }

    pub fn constraints(&self) -> impl Iterator<Item = RuleId> + '_ {
        self.rules.iter().enumerate().filter(|(_, r)| r.head.is_none()).map(|(i, _)| RuleId(i as u32))
    }

    pub fn literal(&self, lit: GroundLiteral) -> Literal {
        Literal {
            atom: self.atom(lit.atom).clone(),
            sign: if lit.positive { Sign::Positive } else { Sign::NafNegated },
        }
    }

    /// The rule as source syntax.
    pub fn to_rule(&self, rule: &GroundRule) -> Rule {
        Rule {
            head: rule.head.map(|h| self.atom(h).clone()),
            body: rule.body.iter().map(|l| BodyElem::Literal(self.literal(*l))).collect(),
        }
    }

    pub fn to_program(&self) -> Program {
        Program::from_rules(self.rules.iter().map(|r| self.to_rule(r)).collect())
    }
}

impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{}", self.to_rule(r))?;
        }
        Ok(())
    }
}

/// Constants and numbers occurring anywhere in the program text.
pub fn herbrand_universe(program: &Program) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    let add_atom = |a: &Atom, out: &mut BTreeSet<Term>| out.extend(a.args.iter().filter(|t| t.is_ground()).cloned());
    for r in &program.rules {
        if let Some(h) = &r.head {
            add_atom(h, &mut out);
        }
        for b in &r.body {
            match b {
                BodyElem::Literal(l) => add_atom(&l.atom, &mut out),
                BodyElem::Builtin(c) => {
                    out.extend([&c.left, &c.right].into_iter().filter(|t| t.is_ground()).cloned());
                }
            }
        }
    }
    for a in &program.abducibles {
        add_atom(a, &mut out);
    }
    for l in program.queries.iter().flatten() {
        add_atom(&l.atom, &mut out);
    }
    out
}

pub fn ground(program: &Program) -> Result<GroundProgram, GroundError> {
    ground_with(program, &GroundConfig::default())
}

pub fn ground_with(program: &Program, config: &GroundConfig) -> Result<GroundProgram, GroundError> {
    // Variables not bound by a positive literal only occur in rules produced by abducible
    // expansion; those range over the symbolic constants.
    let constants: Vec<Term> =
        herbrand_universe(program).into_iter().filter(|t| matches!(t, Term::Constant(_))).collect();

    let mut gp = GroundProgram::default();
    let mut possible: HashMap<PredicateKey, Vec<AtomId>> = HashMap::new();
    let mut is_possible: Vec<bool> = Vec::new();
    let mut seen: HashSet<(Option<AtomId>, Vec<GroundLiteral>)> = HashSet::new();
    let mut found: Vec<GroundRule> = Vec::new();

    loop {
        let mut changed = false;
        for (ri, rule) in program.rules.iter().enumerate() {
            let positives: Vec<&Atom> = rule.literals().filter(|l| l.is_positive()).map(|l| &l.atom).collect();
            let mut substs = Vec::new();
            join(&positives, 0, &mut Substitution::new(), &gp, &possible, &mut substs);

            for subst in substs {
                for subst in complete(rule, subst, &constants) {
                    let Some(instance) = instantiate(rule, &subst) else { continue };
                    let head = instance.head.as_ref().map(|h| gp.intern(h));
                    let body: Vec<GroundLiteral> = instance.literals().map(|l| gp.ground_literal(l)).collect();
                    if !seen.insert((head, body.clone())) {
                        continue;
                    }
                    if seen.len() > config.max_instances {
                        return Err(GroundError::GroundingExplosion { limit: config.max_instances });
                    }
                    changed = true;
                    found.push(GroundRule { head, body, source: ri });
                    if let Some(h) = head {
                        is_possible.resize(gp.atom_count(), false);
                        if !is_possible[h.index()] {
                            is_possible[h.index()] = true;
                            possible.entry(gp.atom(h).key()).or_default().push(h);
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    // textual rule order first, discovery order within a source rule
    found.sort_by_key(|r| r.source);
    gp.rules = found;
    gp.reindex();
    Ok(gp)
}

fn join(
    positives: &[&Atom],
    at: usize,
    subst: &mut Substitution,
    gp: &GroundProgram,
    possible: &HashMap<PredicateKey, Vec<AtomId>>,
    out: &mut Vec<Substitution>,
) {
    let Some(pattern) = positives.get(at) else {
        out.push(subst.clone());
        return;
    };
    let Some(candidates) = possible.get(&pattern.key()) else { return };
    for &c in candidates {
        let mut next = subst.clone();
        if pattern.match_ground(gp.atom(c), &mut next) {
            join(positives, at + 1, &mut next, gp, possible, out);
        }
    }
}

/// Extends a substitution over variables the positive body left unbound.
fn complete(rule: &Rule, subst: Substitution, constants: &[Term]) -> Vec<Substitution> {
    let mut free: Vec<&str> = Vec::new();
    let all_vars = rule
        .head
        .iter()
        .flat_map(|h| h.variables())
        .chain(rule.literals().flat_map(|l| l.atom.variables()))
        .chain(rule.builtins().flat_map(|b| b.variables()));
    for v in all_vars {
        if !subst.contains_key(v) && !free.contains(&v) {
            free.push(v);
        }
    }
    let mut out = vec![subst];
    for v in free {
        out = out
            .into_iter()
            .flat_map(|s| {
                constants.iter().map(move |c| {
                    let mut s = s.clone();
                    s.insert(v.to_string(), c.clone());
                    s
                })
            })
            .collect();
    }
    out
}

/// Applies a complete substitution; `None` when a builtin comparison is false.
fn instantiate(rule: &Rule, subst: &Substitution) -> Option<Rule> {
    let mut body = Vec::with_capacity(rule.body.len());
    for b in &rule.body {
        match b {
            BodyElem::Literal(l) => body.push(BodyElem::Literal(l.substitute(subst))),
            BodyElem::Builtin(c) => {
                if !c.substitute(subst).evaluate()? {
                    return None;
                }
            }
        }
    }
    Some(Rule { head: rule.head.as_ref().map(|h| h.substitute(subst)), body })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, Decimal};

    const EVEN_LOOPS: &str = "p :- not q.\nq :- not p.\nr :- not s.\ns :- not r.";

    fn ground_text(src: &str) -> Vec<String> {
        let gp = ground(&parse_program(src).unwrap()).unwrap();
        gp.rules().iter().map(|r| gp.to_rule(r).to_string()).collect()
    }

    #[test]
    fn propositional_program_is_unchanged() {
        assert_eq!(ground_text(EVEN_LOOPS), vec!["p :- not q.", "q :- not p.", "r :- not s.", "s :- not r."]);
    }

    #[test]
    fn threshold_rule_instantiates_when_true() {
        let rule = "lvef_less_than_30 :- measurement(lvef, Data), Data =< 30.\n";
        assert_eq!(
            ground_text(&format!("{rule}measurement(lvef, 16).")),
            vec!["lvef_less_than_30 :- measurement(lvef,16).", "measurement(lvef,16)."]
        );
        assert_eq!(ground_text(&format!("{rule}measurement(lvef, 45).")), vec!["measurement(lvef,45)."]);
    }

    #[test]
    fn facts_survive_unchanged() {
        let src = "evidence(age, 60).\nmeasurement(potassium, 3.0).\nold :- evidence(age, A), A >= 65.";
        let rules = ground_text(src);
        assert!(rules.contains(&"measurement(potassium,3.0).".to_string()));
        assert!(rules.contains(&"evidence(age,60).".to_string()));
        assert_eq!(rules.len(), 2);
    }

    #[test]
    fn joins_through_derived_atoms() {
        let src = "edge(a, b). edge(b, c).\npath(X, Y) :- edge(X, Y).\npath(X, Z) :- edge(X, Y), path(Y, Z).\nunreached(X) :- edge(X, Y), not path(Y, X).";
        let gp = ground(&parse_program(src).unwrap()).unwrap();
        let ac = gp.atom_id(&Atom::with_constants("path", &["a", "c"])).unwrap();
        assert_eq!(gp.rules_for(ac).len(), 1);
        assert_eq!(gp.rules().iter().filter(|r| gp.atom(r.head.unwrap()).predicate == "unreached").count(), 2);
    }

    #[test]
    fn universe() {
        let u = herbrand_universe(&parse_program("p(a). q(X) :- p(X).").unwrap());
        assert_eq!(u.into_iter().collect::<Vec<_>>(), vec![Term::constant("a")]);
        assert!(herbrand_universe(&Program::default()).is_empty());
        let u = herbrand_universe(
            &parse_program("evidence(accf_stage_c). measurement(lvef, 16). measurement(potassium, 3.0).").unwrap(),
        );
        assert!(u.contains(&Term::constant("accf_stage_c")));
        assert!(u.contains(&Term::constant("lvef")));
        assert!(u.contains(&Term::Number(Decimal::from_int(16))));
        assert!(u.contains(&Term::Number("3.0".parse().unwrap())));
    }

    #[test]
    fn unbound_variables_range_over_constants() {
        let mut p = parse_program("p(a). p(b).").unwrap();
        p.push_rule(Rule::new(
            Atom::new("_neg_q", vec![Term::variable("X")]),
            vec![Literal::neg(Atom::new("q", vec![Term::variable("X")]))],
        ));
        let gp = ground(&p).unwrap();
        assert_eq!(gp.rules().len(), 4);
    }

    #[test]
    fn explosion_is_reported() {
        let src = "n(1). n(2). n(3). n(4). n(5). t(A, B, C) :- n(A), n(B), n(C).";
        let err = ground_with(&parse_program(src).unwrap(), &GroundConfig { max_instances: 50 }).unwrap_err();
        assert_eq!(err, GroundError::GroundingExplosion { limit: 50 });
    }

    #[test]
    fn deterministic() {
        let src = "q(b). q(a). p(X) :- q(X), not r(X). r(X) :- q(X), not p(X).";
        assert_eq!(ground_text(src), ground_text(src));
    }
}
