//! Abductive reasoning: declared abducibles become even loops the solver may
//! resolve either way, and the abducible part of each answer is the explanation.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::engine::{Chs, Engine, EngineConfig, SolveError};
use crate::grounder::{ground, GroundError};
use crate::syntax::{render_set, Atom, Literal, Program, Rule, Sign};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AbductionError {
    #[error("abducible `{abducible}` unifies with the head of rule `{rule}`")]
    AbducibleConflict { abducible: String, rule: String },
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Signed abducible atoms assumed by one answer.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Explanation {
    pub assumed_true: Vec<Atom>,
    pub assumed_false: Vec<Atom>,
}

impl Explanation {
    pub fn is_empty(&self) -> bool {
        self.assumed_true.is_empty() && self.assumed_false.is_empty()
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        self.assumed_true
            .iter()
            .map(|a| Literal::pos(a.clone()))
            .chain(self.assumed_false.iter().map(|a| Literal::neg(a.clone())))
    }

    fn as_sets(&self) -> (BTreeSet<&Atom>, BTreeSet<&Atom>) {
        (self.assumed_true.iter().collect(), self.assumed_false.iter().collect())
    }

    /// Whether every literal of `self` also occurs in `other`.
    pub fn is_subset_of(&self, other: &Explanation) -> bool {
        let (t, f) = other.as_sets();
        self.assumed_true.iter().all(|a| t.contains(a)) && self.assumed_false.iter().all(|a| f.contains(a))
    }

    /// `{ a, not b }`: assumed-true atoms then assumed-false, each in derivation order.
    pub fn render(&self) -> String {
        render_set(
            self.assumed_true
                .iter()
                .map(|a| (a, Sign::Positive))
                .chain(self.assumed_false.iter().map(|a| (a, Sign::NafNegated))),
        )
    }
}

impl PartialEq for Explanation {
    fn eq(&self, other: &Self) -> bool {
        self.as_sets() == other.as_sets()
    }
}

impl Eq for Explanation {}

#[derive(Clone, Debug)]
pub struct AbductionProblem {
    theory: Program,
    observation: Vec<Literal>,
    abducibles: Vec<Atom>,
}

impl AbductionProblem {
    /// Rejects abducibles that unify with a rule head of the theory.
    pub fn new(theory: Program, observation: Vec<Literal>, abducibles: Vec<Atom>) -> Result<Self, AbductionError> {
        check_conflicts(&theory.rules, &abducibles)?;
        Ok(AbductionProblem { theory, observation, abducibles })
    }

    /// Takes the abducibles from the program's own `#abducible` directives.
    pub fn from_program(mut program: Program, observation: Vec<Literal>) -> Result<Self, AbductionError> {
        let abducibles = std::mem::take(&mut program.abducibles);
        AbductionProblem::new(program, observation, abducibles)
    }

    pub fn theory(&self) -> &Program {
        &self.theory
    }

    pub fn observation(&self) -> &[Literal] {
        &self.observation
    }

    pub fn abducibles(&self) -> &[Atom] {
        &self.abducibles
    }

    pub fn is_abducible(&self, atom: &Atom) -> bool {
        !atom.is_hidden() && self.abducibles.iter().any(|p| p.match_ground(atom, &mut Default::default()))
    }

    fn expanded(&self) -> Program {
        let mut p = self.theory.clone();
        p.abducibles.clear();
        for g in &self.abducibles {
            p.rules.extend(expansion_rules(g));
        }
        p
    }

    /// Splits a solver answer into the visible CHS and its explanation.
    pub fn explain(&self, chs: &Chs) -> AbductiveAnswer {
        let chs = chs.without_hidden();
        let mut explanation = Explanation::default();
        for l in chs.literals() {
            if self.is_abducible(&l.atom) {
                match l.sign {
                    Sign::Positive => explanation.assumed_true.push(l.atom.clone()),
                    Sign::NafNegated => explanation.assumed_false.push(l.atom.clone()),
                }
            }
        }
        let derived = chs.literals().iter().filter(|l| !self.is_abducible(&l.atom)).cloned().collect();
        AbductiveAnswer { chs, derived, explanation }
    }
}

fn check_conflicts(rules: &[Rule], abducibles: &[Atom]) -> Result<(), AbductionError> {
    for g in abducibles {
        if let Some(rule) = rules.iter().find(|r| r.head.as_ref().is_some_and(|h| h.unifies_with(g))) {
            return Err(AbductionError::AbducibleConflict { abducible: g.to_string(), rule: rule.to_string() });
        }
    }
    Ok(())
}

fn aux(prefix: &str, g: &Atom) -> Atom {
    Atom { predicate: format!("{prefix}{}", g.predicate), args: g.args.clone() }
}

/// The four rules that make `g` freely assumable either way.
fn expansion_rules(g: &Atom) -> [Rule; 4] {
    let (neg, abd, negabd) = (aux("_neg_", g), aux("_abd_", g), aux("_negabd_", g));
    [
        Rule::new(g.clone(), vec![Literal::neg(neg.clone()), Literal::pos(abd.clone())]),
        Rule::new(neg, vec![Literal::neg(g.clone())]),
        Rule::new(abd.clone(), vec![Literal::neg(negabd.clone())]),
        Rule::new(negabd, vec![Literal::neg(abd)]),
    ]
}

/// Appends the abducible expansion after every rule of the program and drops the directives.
pub fn expand_abducibles(program: &Program) -> Result<Program, AbductionError> {
    let problem = AbductionProblem::new(program.clone(), Vec::new(), program.abducibles.clone())?;
    Ok(problem.expanded())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbductiveAnswer {
    /// The answer without auxiliary atoms, in derivation order.
    pub chs: Chs,
    /// Non-abducible literals of `chs`.
    #[serde(skip)]
    derived: Vec<Literal>,
    pub explanation: Explanation,
}

impl AbductiveAnswer {
    /// Derived literals first, then the abduced ones.
    pub fn render(&self) -> String {
        render_set(
            self.derived
                .iter()
                .map(|l| (&l.atom, l.sign))
                .chain(self.explanation.assumed_true.iter().map(|a| (a, Sign::Positive)))
                .chain(self.explanation.assumed_false.iter().map(|a| (a, Sign::NafNegated))),
        )
    }
}

/// A problem grounded and ready for querying.
pub struct Abducer {
    problem: AbductionProblem,
    engine: Engine,
}

impl Abducer {
    pub fn new(problem: AbductionProblem) -> Result<Self, AbductionError> {
        Abducer::with_config(problem, EngineConfig::default())
    }

    pub fn with_config(problem: AbductionProblem, config: EngineConfig) -> Result<Self, AbductionError> {
        let gp = ground(&problem.expanded())?;
        Ok(Abducer { engine: Engine::with_config(gp, config), problem })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn problem(&self) -> &AbductionProblem {
        &self.problem
    }

    /// Lazily enumerates answers with their explanations.
    pub fn abduce(&self) -> impl Iterator<Item = Result<AbductiveAnswer, SolveError>> + '_ {
        self.abduce_for(&self.problem.observation)
    }

    /// Like [`Abducer::abduce`] for another observation over the same theory.
    pub fn abduce_for<'a>(
        &'a self,
        observation: &[Literal],
    ) -> impl Iterator<Item = Result<AbductiveAnswer, SolveError>> + 'a {
        self.engine.solve(observation).map(|r| r.map(|a| self.problem.explain(&a.chs)))
    }

    /// Drains [`Abducer::abduce`] without duplicate answers, stopping after `cap` distinct ones.
    pub fn abduce_all(&self, cap: Option<usize>) -> Result<Vec<AbductiveAnswer>, SolveError> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for a in self.abduce() {
            if cap.is_some_and(|c| out.len() >= c) {
                break;
            }
            let a = a?;
            if seen.insert(a.chs.visible_set()) {
                out.push(a);
            }
        }
        Ok(out)
    }
}

/// Convenience: ground, solve and drain.
pub fn abduce(problem: AbductionProblem) -> Result<Vec<AbductiveAnswer>, AbductionError> {
    Ok(Abducer::new(problem)?.abduce_all(None)?)
}

/// Distinct explanations of the answers, in first-seen order.
pub fn distinct_explanations(answers: &[AbductiveAnswer]) -> Vec<Explanation> {
    let mut out: Vec<Explanation> = Vec::new();
    for a in answers {
        if !out.contains(&a.explanation) {
            out.push(a.explanation.clone());
        }
    }
    out
}

/// Keeps explanations no other explanation is a strict subset of.
pub fn minimal_explanations(explanations: &[Explanation]) -> Vec<Explanation> {
    explanations
        .iter()
        .filter(|e| !explanations.iter().any(|o| o.is_subset_of(e) && !e.is_subset_of(o)))
        .cloned()
        .collect()
}

/// One abducible per vocabulary atom not in `excluded` (facts, known absences and the like).
pub fn generate_abducible_declarations(vocabulary: &[Atom], excluded: &BTreeSet<Atom>) -> Vec<Atom> {
    let mut seen = HashSet::new();
    vocabulary.iter().filter(|a| !excluded.contains(a) && seen.insert(*a)).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_atom, parse_program, parse_query};

    const ABC: &str = "p :- a, not q.\nq :- a, b.\nq :- c.\n#abducible a.\n#abducible b.\n#abducible c.";

    fn problem(src: &str, query: &str) -> AbductionProblem {
        AbductionProblem::from_program(parse_program(src).unwrap(), parse_query(query).unwrap()).unwrap()
    }

    #[test]
    fn worked_example() {
        let answers = abduce(problem(ABC, "p")).unwrap();
        assert_eq!(answers.len(), 1);
        assert_eq!(answers[0].render(), "{ p, not q, a, not b, not c }");
        assert_eq!(answers[0].explanation.render(), "{ a, not b, not c }");
        let atoms = |xs: &[&str]| xs.iter().map(|x| parse_atom(x).unwrap()).collect::<Vec<_>>();
        assert_eq!(
            answers[0].explanation,
            Explanation { assumed_true: atoms(&["a"]), assumed_false: atoms(&["b", "c"]) }
        );
    }

    #[test]
    fn irrelevant_abducible_is_not_assumed() {
        let answers = abduce(problem(&format!("{ABC}\n#abducible d."), "p")).unwrap();
        assert_eq!(answers.len(), 1);
        assert_eq!(answers[0].explanation.render(), "{ a, not b, not c }");
        assert!(!answers[0].chs.literals().iter().any(|l| l.atom.predicate.contains('d')));
    }

    #[test]
    fn entailed_observation_needs_nothing() {
        let answers = abduce(problem("p.\n#abducible a.", "p")).unwrap();
        assert_eq!(answers.len(), 1);
        assert!(answers[0].explanation.is_empty());
    }

    #[test]
    fn unexplainable_observation() {
        assert!(abduce(problem("p :- a, not a.\n#abducible a.", "p")).unwrap().is_empty());
    }

    #[test]
    fn expansion_shape() {
        let p = expand_abducibles(&parse_program("p :- a.\n#abducible a.").unwrap()).unwrap();
        let text: Vec<String> = p.rules.iter().map(|r| r.to_string()).collect();
        assert_eq!(
            text,
            vec![
                "p :- a.",
                "a :- not _neg_a, _abd_a.",
                "_neg_a :- not a.",
                "_abd_a :- not _negabd_a.",
                "_negabd_a :- not _abd_a."
            ]
        );
        assert!(p.abducibles.is_empty());

        let p = expand_abducibles(&parse_program("#abducible goal(X).").unwrap()).unwrap();
        assert_eq!(p.rules[0].to_string(), "goal(X) :- not _neg_goal(X), _abd_goal(X).");
    }

    #[test]
    fn conflicts_are_rejected() {
        let err = expand_abducibles(&parse_program("p :- q.\n#abducible p.").unwrap()).unwrap_err();
        assert!(matches!(err, AbductionError::AbducibleConflict { .. }));
        let err = expand_abducibles(&parse_program("g(a).\n#abducible g(X).").unwrap()).unwrap_err();
        assert!(matches!(err, AbductionError::AbducibleConflict { .. }));
        assert!(expand_abducibles(&parse_program("g(a).\n#abducible g(b).").unwrap()).is_ok());
    }

    #[test]
    fn non_ground_patterns_range_over_constants() {
        let answers =
            abduce(problem("ok(X) :- item(X), good(X).\nitem(x1). item(x2).\n#abducible good(X).", "ok(x2)")).unwrap();
        assert_eq!(answers.len(), 1);
        assert_eq!(answers[0].explanation.render(), "{ good(x2) }");
    }

    #[test]
    fn minimality_filter() {
        let answers = abduce(problem("p :- a.\np :- a, b.\n#abducible a.\n#abducible b.", "p")).unwrap();
        let all = distinct_explanations(&answers);
        let min = minimal_explanations(&all);
        assert!(min.iter().all(|e| e.assumed_true.len() == 1));
    }

    #[test]
    fn declarations_skip_excluded_atoms() {
        let vocab =
            vec![parse_atom("history(angioedema)").unwrap(), parse_atom("contraindication(ace_inhibitors)").unwrap()];
        let excluded = BTreeSet::from([parse_atom("contraindication(ace_inhibitors)").unwrap()]);
        assert_eq!(generate_abducible_declarations(&vocab, &excluded), vec![vocab[0].clone()]);
    }
}
