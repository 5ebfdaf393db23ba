//! Brute-force stable models: try every candidate set and keep those equal
//! to the least model of their Gelfond–Lifschitz reduct. Slow on purpose and
//! independent of the goal-directed engine, which it is used to check.

use std::collections::BTreeSet;

use rand::Rng;

use crate::abduction::Explanation;
use crate::grounder::{ground, GroundError, GroundProgram};
use crate::syntax::{Atom, Literal, Program, Rule};

pub const DEFAULT_BASE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("Herbrand base has {size} atoms, above the limit of {limit}")]
    BaseTooLarge { size: usize, limit: usize },
    #[error(transparent)]
    Ground(#[from] GroundError),
}

/// Stable models, each sorted, listed in sorted order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StableModelSet {
    pub models: Vec<BTreeSet<Atom>>,
}

impl StableModelSet {
    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    /// Whether some model agrees with every literal.
    pub fn some_model_satisfies<'a>(&self, literals: impl IntoIterator<Item = &'a Literal> + Clone) -> bool {
        self.models.iter().any(|m| literals.clone().into_iter().all(|l| m.contains(&l.atom) == l.is_positive()))
    }
}

pub fn enumerate_stable_models(gp: &GroundProgram) -> Result<StableModelSet, OracleError> {
    enumerate_stable_models_with_limit(gp, DEFAULT_BASE_LIMIT)
}

pub fn enumerate_stable_models_with_limit(gp: &GroundProgram, limit: usize) -> Result<StableModelSet, OracleError> {
    let n = gp.atom_count();
    if n > limit {
        return Err(OracleError::BaseTooLarge { size: n, limit });
    }
    // atoms without rules are false in every stable model, so only heads are varied
    let heads: Vec<usize> = gp.atom_ids().filter(|&a| !gp.rules_for(a).is_empty()).map(|a| a.index()).collect();
    let mut models = Vec::new();
    let mut candidate = vec![false; n];
    for mask in 0u64..(1u64 << heads.len()) {
        for (bit, &a) in heads.iter().enumerate() {
            candidate[a] = mask >> bit & 1 == 1;
        }
        if is_stable(gp, &candidate) {
            let model = gp.atom_ids().filter(|a| candidate[a.index()]).map(|a| gp.atom(a).clone()).collect();
            models.push(model);
        }
    }
    models.sort();
    Ok(StableModelSet { models })
}

fn is_stable(gp: &GroundProgram, m: &[bool]) -> bool {
    // least model of the reduct
    let mut least = vec![false; m.len()];
    let mut changed = true;
    while changed {
        changed = false;
        for r in gp.rules() {
            let Some(h) = r.head else { continue };
            if least[h.index()] {
                continue;
            }
            let fires = r.body.iter().all(|l| if l.positive { least[l.atom.index()] } else { !m[l.atom.index()] });
            if fires {
                least[h.index()] = true;
                changed = true;
            }
        }
    }
    if least != m {
        return false;
    }
    // constraints: no body may hold in the model
    gp.rules().iter().filter(|r| r.head.is_none()).all(|r| !r.body.iter().all(|l| m[l.atom.index()] == l.positive))
}

/// Grounds and enumerates a non-ground program.
pub fn stable_models_of(program: &Program) -> Result<StableModelSet, OracleError> {
    enumerate_stable_models(&ground(program)?)
}

/// Whether the theory with `assumed_true` added as facts has a stable model
/// agreeing with the observation and containing none of `assumed_false`.
pub fn verify_explanation(theory: &Program, e: &Explanation, observation: &[Literal]) -> Result<bool, OracleError> {
    let mut program = theory.clone();
    program.abducibles.clear();
    for a in &e.assumed_true {
        program.push_rule(Rule::fact(a.clone()));
    }
    let models = stable_models_of(&program)?;
    let required: Vec<Literal> =
        observation.iter().cloned().chain(e.assumed_false.iter().map(|a| Literal::neg(a.clone()))).collect();
    Ok(models.some_model_satisfies(&required))
}

/// Shape of the random propositional programs used for cross-checking.
#[derive(Clone, Debug)]
pub struct RandomProgramConfig {
    pub max_atoms: usize,
    pub max_rules: usize,
    pub max_body: usize,
    /// Probability that a body literal is negated.
    pub negation_density: f64,
    /// Probability that a rule is a constraint.
    pub constraint_rate: f64,
}

impl Default for RandomProgramConfig {
    fn default() -> Self {
        RandomProgramConfig { max_atoms: 8, max_rules: 12, max_body: 3, negation_density: 0.3, constraint_rate: 0.05 }
    }
}

/// A random propositional program over atoms `a0`, `a1`, ...; also returns the atoms.
pub fn random_program<R: Rng>(rng: &mut R, cfg: &RandomProgramConfig) -> (Program, Vec<Atom>) {
    let atoms: Vec<Atom> = (0..rng.gen_range(1..=cfg.max_atoms)).map(|i| Atom::prop(&format!("a{i}"))).collect();
    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(1..=cfg.max_rules) {
        let body: Vec<Literal> = (0..rng.gen_range(0..=cfg.max_body))
            .map(|_| {
                let a = atoms[rng.gen_range(0..atoms.len())].clone();
                if rng.gen_bool(cfg.negation_density) {
                    Literal::neg(a)
                } else {
                    Literal::pos(a)
                }
            })
            .collect();
        if !body.is_empty() && rng.gen_bool(cfg.constraint_rate) {
            rules.push(Rule::constraint(body));
        } else {
            rules.push(Rule::new(atoms[rng.gen_range(0..atoms.len())].clone(), body));
        }
    }
    (Program::from_rules(rules), atoms)
}
