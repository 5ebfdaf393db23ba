//! Guideline adherence: which recommendations a profile supports, and what
//! missing evidence would make a physician's proposal compliant.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::abduction::{minimal_explanations, Abducer, AbductionError, AbductionProblem, AbductiveAnswer, Explanation};
use crate::engine::{Engine, EngineConfig, SolveError};
use crate::grounder::{ground, GroundError};
use crate::hf_kb::{in_vocabulary, treatments, KnowledgeBase, PatientProfile, COR_CLASSES};
use crate::syntax::{Atom, Literal, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComplianceError {
    #[error("unknown treatment `{0}`")]
    UnknownTreatment(String),
    #[error("unknown class of recommendation `{0}`")]
    UnknownClass(String),
    #[error("`{0}` is not in the clinical vocabulary")]
    UnknownAtom(String),
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Abduction(#[from] AbductionError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CorClass {
    #[serde(rename = "class_1")]
    Class1,
    #[serde(rename = "class_2a")]
    Class2a,
    #[serde(rename = "class_2b")]
    Class2b,
    #[serde(rename = "class_3")]
    Class3,
}

impl CorClass {
    pub const ALL: [CorClass; 4] = [CorClass::Class1, CorClass::Class2a, CorClass::Class2b, CorClass::Class3];

    pub fn as_str(self) -> &'static str {
        COR_CLASSES[self as usize]
    }
}

impl fmt::Display for CorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorClass {
    type Err = ComplianceError;

    /// Accepts `class_2a`, `2a`, `IIa` and the like.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_prefix("class_").or_else(|| key.strip_prefix("class ")).unwrap_or(&key);
        match key {
            "1" | "i" => Ok(CorClass::Class1),
            "2a" | "iia" => Ok(CorClass::Class2a),
            "2b" | "iib" => Ok(CorClass::Class2b),
            "3" | "iii" => Ok(CorClass::Class3),
            _ => Err(ComplianceError::UnknownClass(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Recommendation {
    pub treatment: String,
    pub cor_class: CorClass,
}

impl Recommendation {
    /// Validates the treatment against the KB.
    pub fn new(treatment: &str, cor_class: CorClass) -> Result<Self, ComplianceError> {
        if !treatments().iter().any(|t| t == treatment) {
            return Err(ComplianceError::UnknownTreatment(treatment.to_string()));
        }
        Ok(Recommendation { treatment: treatment.to_string(), cor_class })
    }

    /// `recommendation(treatment, class)`
    pub fn atom(&self) -> Atom {
        Atom::new("recommendation", vec![Term::constant(&self.treatment), Term::constant(self.cor_class.as_str())])
    }
}

impl fmt::Display for Recommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.atom())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compliant,
    RepairableWithEvidence,
    Rejected,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Compliant => "compliant",
            Verdict::RepairableWithEvidence => "repairable with evidence",
            Verdict::Rejected => "rejected",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub grounding: f64,
    pub enumeration: f64,
    pub abduction: f64,
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplianceReport {
    pub proposed: Recommendation,
    pub verdict: Verdict,
    /// Non-empty exactly when the verdict is repairable.
    pub explanations: Vec<Explanation>,
    pub compliant_set: Vec<Recommendation>,
    pub timings_ms: Timings,
    /// One answer per explanation, for display.
    #[serde(skip)]
    pub answers: Vec<AbductiveAnswer>,
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub max_explanations: usize,
    /// Keep only subset-minimal explanations.
    pub minimal_only: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { max_explanations: 32, minimal_only: false }
    }
}

/// A profile with its deductive and abductive programs grounded.
pub struct Advisor {
    profile: PatientProfile,
    treatments: Vec<String>,
    deductive: Engine,
    abductive: Abducer,
    grounding: Duration,
}

impl Advisor {
    pub fn new(profile: PatientProfile) -> Result<Self, ComplianceError> {
        Advisor::with_config(profile, EngineConfig::default())
    }

    pub fn with_config(profile: PatientProfile, config: EngineConfig) -> Result<Self, ComplianceError> {
        Advisor::with_kb(KnowledgeBase::builtin(), profile, config)
    }

    pub fn with_kb(kb: &KnowledgeBase, profile: PatientProfile, config: EngineConfig) -> Result<Self, ComplianceError> {
        let start = Instant::now();
        let deductive = Engine::with_config(ground(&kb.patient_program(&profile))?, config.clone());
        let (theory, abducibles) = kb.abduction_setup(&profile);
        let problem = AbductionProblem::new(theory, Vec::new(), abducibles)?;
        let abductive = Abducer::with_config(problem, config)?;
        Ok(Advisor { profile, treatments: kb.treatments(), deductive, abductive, grounding: start.elapsed() })
    }

    pub fn profile(&self) -> &PatientProfile {
        &self.profile
    }

    pub fn treatments(&self) -> &[String] {
        &self.treatments
    }

    pub fn abducibles(&self) -> &[Atom] {
        self.abductive.problem().abducibles()
    }

    /// Whether the recommendation follows from the profile without assumptions.
    pub fn supports(&self, r: &Recommendation) -> Result<bool, ComplianceError> {
        Ok(self.deductive.solve(&[Literal::pos(r.atom())]).next().transpose()?.is_some())
    }

    /// Every supported (treatment, class) pair, treatments in KB order.
    pub fn recommendations(&self) -> Result<Vec<Recommendation>, ComplianceError> {
        let mut out = Vec::new();
        for t in &self.treatments {
            for c in CorClass::ALL {
                let r = Recommendation { treatment: t.clone(), cor_class: c };
                if self.supports(&r)? {
                    out.push(r);
                }
            }
        }
        Ok(out)
    }

    pub fn check(&self, proposed: &Recommendation, opts: &CheckOptions) -> Result<ComplianceReport, ComplianceError> {
        if !self.treatments.contains(&proposed.treatment) {
            return Err(ComplianceError::UnknownTreatment(proposed.treatment.clone()));
        }
        let start = Instant::now();
        let compliant_set = self.recommendations()?;
        let enumeration = start.elapsed();

        let start = Instant::now();
        let mut answers: Vec<AbductiveAnswer> = Vec::new();
        if !compliant_set.contains(proposed) {
            for a in self.abductive.abduce_for(&[Literal::pos(proposed.atom())]) {
                if answers.len() >= opts.max_explanations {
                    break;
                }
                let a = a?;
                if !answers.iter().any(|b| b.explanation == a.explanation) {
                    answers.push(a);
                }
            }
        }
        if opts.minimal_only {
            let all: Vec<Explanation> = answers.iter().map(|a| a.explanation.clone()).collect();
            let keep = minimal_explanations(&all);
            answers.retain(|a| keep.contains(&a.explanation));
        }
        let abduction = start.elapsed();

        let verdict = if compliant_set.contains(proposed) {
            Verdict::Compliant
        } else if answers.is_empty() {
            Verdict::Rejected
        } else {
            Verdict::RepairableWithEvidence
        };
        Ok(ComplianceReport {
            proposed: proposed.clone(),
            verdict,
            explanations: answers.iter().map(|a| a.explanation.clone()).collect(),
            compliant_set,
            timings_ms: Timings {
                grounding: millis(self.grounding),
                enumeration: millis(enumeration),
                abduction: millis(abduction),
            },
            answers,
        })
    }
}

/// The compliant set for a profile under the shipped KB, without abduction.
pub fn enumerate_recommendations(profile: &PatientProfile) -> Result<Vec<Recommendation>, ComplianceError> {
    let engine = Engine::new(ground(&KnowledgeBase::builtin().patient_program(profile))?);
    let mut out = Vec::new();
    for t in treatments() {
        for c in CorClass::ALL {
            let r = Recommendation { treatment: t.clone(), cor_class: c };
            if engine.solve(&[Literal::pos(r.atom())]).next().transpose()?.is_some() {
                out.push(r);
            }
        }
    }
    Ok(out)
}

pub fn check_compliance(
    profile: &PatientProfile,
    proposed: &Recommendation,
) -> Result<ComplianceReport, ComplianceError> {
    Advisor::new(profile.clone())?.check(proposed, &CheckOptions::default())
}

/// Adds vocabulary atoms to the profile as facts.
pub fn confirm_evidence(profile: &PatientProfile, atoms: &BTreeSet<Atom>) -> Result<PatientProfile, ComplianceError> {
    if let Some(a) = atoms.iter().find(|a| !in_vocabulary(a)) {
        return Err(ComplianceError::UnknownAtom(a.to_string()));
    }
    let mut p = profile.clone();
    for a in atoms {
        p.add_fact(a.clone()).map_err(|_| ComplianceError::UnknownAtom(a.to_string()))?;
    }
    Ok(p)
}
