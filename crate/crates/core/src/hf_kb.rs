//! The heart-failure knowledge base, its clinical vocabulary and patient profiles.
//!
//! Profiles use the same fact syntax as programs, one or more facts per line,
//! plus `% known_absent: <atom>` lines for findings the record rules out:
//!
//! ```text
//! evidence(accf_stage_c).   evidence(nyha_class_3).
//! measurement(lvef, 0.16).
//! % known_absent: diagnosis(atrial_fibrillation)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::abduction::generate_abducible_declarations;
use crate::syntax::{
    parse_atom, parse_program, Atom, BodyElem, BuiltinComparison, CmpOp, Decimal, Literal, ParseError, Program, Rule,
    Term,
};

pub const KB_SOURCE: &str = include_str!("../kb/hf_guideline.asp");
pub const VOCABULARY_SOURCE: &str = include_str!("../kb/hf_vocabulary.txt");

pub const COR_CLASSES: [&str; 4] = ["class_1", "class_2a", "class_2b", "class_3"];

const STAGES: [&str; 4] = ["accf_stage_a", "accf_stage_b", "accf_stage_c", "accf_stage_d"];
const NYHA: [&str; 4] = ["nyha_class_1", "nyha_class_2", "nyha_class_3", "nyha_class_4"];

/// A proposition that holds when a measurement passes a bound, e.g.
/// `lvef_less_than_30 :- measurement(lvef, Data), Data =< 30.`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdRule {
    pub proposition: &'static str,
    pub measurement: &'static str,
    pub op: CmpOp,
    pub bound: &'static str,
}

impl ThresholdRule {
    pub fn atom(&self) -> Atom {
        Atom::prop(self.proposition)
    }

    pub fn bound(&self) -> Decimal {
        self.bound.parse().expect("threshold bounds are valid decimals")
    }

    pub fn rule(&self) -> Rule {
        let data = Term::variable("Data");
        Rule {
            head: Some(self.atom()),
            body: vec![
                BodyElem::Literal(Literal::pos(Atom::new(
                    "measurement",
                    vec![Term::constant(self.measurement), data.clone()],
                ))),
                BodyElem::Builtin(BuiltinComparison { left: data, op: self.op, right: Term::Number(self.bound()) }),
            ],
        }
    }
}

pub const THRESHOLDS: [ThresholdRule; 7] = [
    ThresholdRule { proposition: "lvef_less_than_30", measurement: "lvef", op: CmpOp::Le, bound: "30" },
    ThresholdRule { proposition: "lvef_less_than_or_equal_35", measurement: "lvef", op: CmpOp::Le, bound: "35" },
    ThresholdRule { proposition: "lvef_less_than_or_equal_40", measurement: "lvef", op: CmpOp::Le, bound: "40" },
    ThresholdRule { proposition: "potassium_greater_than_5", measurement: "potassium", op: CmpOp::Gt, bound: "5.0" },
    ThresholdRule { proposition: "mi_post_40_days", measurement: "mi", op: CmpOp::Ge, bound: "40" },
    ThresholdRule {
        proposition: "gfr_less_than_30",
        measurement: "glomerular_filtration_rate",
        op: CmpOp::Lt,
        bound: "30",
    },
    ThresholdRule {
        proposition: "non_lbbb_qrs_greater_than_or_equal_150",
        measurement: "non_lbbb",
        op: CmpOp::Ge,
        bound: "150",
    },
];

/// Guideline rules; threshold rules are appended when a patient program is built.
#[derive(Clone, Debug)]
pub struct KnowledgeBase {
    guideline: Program,
}

impl KnowledgeBase {
    /// The shipped heart-failure guideline.
    pub fn builtin() -> &'static KnowledgeBase {
        static KB: OnceLock<KnowledgeBase> = OnceLock::new();
        KB.get_or_init(|| KnowledgeBase::from_source(KB_SOURCE).expect("shipped knowledge base parses"))
    }

    pub fn from_source(source: &str) -> Result<Self, ParseError> {
        Ok(KnowledgeBase { guideline: parse_program(source)? })
    }

    /// Guideline rules followed by the compiled threshold rules.
    pub fn rules(&self) -> Program {
        let mut p = self.guideline.clone();
        for t in &THRESHOLDS {
            p.push_rule(t.rule());
        }
        p
    }

    /// Treatments declared by `therapy/1` facts, in KB order.
    pub fn treatments(&self) -> Vec<String> {
        self.guideline
            .rules
            .iter()
            .filter(|r| r.is_fact())
            .filter_map(|r| r.head.as_ref())
            .filter(|h| h.predicate == "therapy" && h.arity() == 1)
            .map(|h| h.args[0].to_string())
            .collect()
    }

    /// KB plus the profile's facts: the theory for deductive queries.
    pub fn patient_program(&self, p: &PatientProfile) -> Program {
        let mut program = self.rules();
        for f in profile_to_facts(p) {
            program.push_rule(f);
        }
        program
    }

    /// The abductive theory and abducibles for a profile.
    ///
    /// A threshold proposition whose measurement is on record is decided by its
    /// rule; one whose measurement is missing becomes abducible and its rule is
    /// left out. Vocabulary atoms that are facts, derivable, ruled out, or
    /// excluded by a recorded stage or NYHA class are not abducible.
    pub fn abduction_setup(&self, p: &PatientProfile) -> (Program, Vec<Atom>) {
        let open: BTreeSet<Atom> =
            THRESHOLDS.iter().filter(|t| p.measurement(t.measurement).is_none()).map(ThresholdRule::atom).collect();
        let mut theory = self.patient_program(p);
        theory.rules.retain(|r| r.is_fact() || r.head.as_ref().is_none_or(|h| !open.contains(h)));

        let mut excluded: BTreeSet<Atom> = p.known_absent.clone();
        excluded.extend(exclusive_siblings(p));
        excluded.extend(vocabulary().iter().filter(|v| theory.heads().any(|h| h.unifies_with(v))).cloned());
        (theory, generate_abducible_declarations(vocabulary(), &excluded))
    }
}

/// Rules of the shipped KB.
pub fn kb_rules() -> Program {
    KnowledgeBase::builtin().rules()
}

/// Clinical atoms the KB refers to, threshold propositions last.
pub fn vocabulary() -> &'static [Atom] {
    static VOCAB: OnceLock<Vec<Atom>> = OnceLock::new();
    VOCAB.get_or_init(|| {
        let mut out: Vec<Atom> = VOCABULARY_SOURCE
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('%'))
            .map(|l| parse_atom(l).expect("vocabulary atoms parse"))
            .collect();
        out.extend(THRESHOLDS.iter().map(ThresholdRule::atom));
        out
    })
}

pub fn in_vocabulary(atom: &Atom) -> bool {
    vocabulary().contains(atom)
}

/// Treatments of the shipped KB.
pub fn treatments() -> Vec<String> {
    KnowledgeBase::builtin().treatments()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProfileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: malformed known_absent annotation: {source}")]
    KnownAbsent { line: usize, source: ParseError },
    #[error("profile entries must be facts, found `{0}`")]
    NotAFact(String),
    #[error("unsupported profile fact `{0}`")]
    Unsupported(String),
    #[error("profile has more than one {category}: `{first}` and `{second}`")]
    Conflicting { category: &'static str, first: String, second: String },
    #[error("measurement `{0}` is given twice")]
    DuplicateMeasurement(String),
    #[error("measurement `{name}` has a negative or non-numeric value")]
    BadMeasurement { name: String },
    #[error("lvef of {0} is outside 0..100 percent")]
    LvefOutOfRange(Decimal),
}

/// A patient's record, by category.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct PatientProfile {
    /// `evidence/1` and `evidence/2` atoms: stage, NYHA class, sex, age, symptoms.
    pub evidence: BTreeSet<Atom>,
    pub diagnosis: BTreeSet<Atom>,
    pub history: BTreeSet<Atom>,
    pub measurements: BTreeMap<String, Decimal>,
    pub contraindications: BTreeSet<Atom>,
    /// Bare propositions confirmed for the patient, e.g. `survival_year_greater_than_1`.
    pub confirmed: BTreeSet<Atom>,
    /// Findings the record explicitly rules out; never facts, never abduced.
    pub known_absent: BTreeSet<Atom>,
    /// What normalization changed.
    pub notes: Vec<String>,
}

impl PatientProfile {
    /// Reads a profile without normalizing it.
    pub fn parse(text: &str) -> Result<Self, ProfileError> {
        let mut profile = PatientProfile::default();
        for (i, line) in text.lines().enumerate() {
            let Some(rest) = line.trim().strip_prefix('%') else { continue };
            let Some(atom) = rest.trim().strip_prefix("known_absent:") else { continue };
            let atom = parse_atom(atom.trim().trim_end_matches('.'))
                .map_err(|source| ProfileError::KnownAbsent { line: i + 1, source })?;
            profile.known_absent.insert(atom);
        }
        let program = parse_program(text)?;
        for rule in &program.rules {
            match (&rule.head, rule.is_fact()) {
                (Some(h), true) => profile.add_fact(h.clone())?,
                _ => return Err(ProfileError::NotAFact(rule.to_string())),
            }
        }
        if let Some(a) = program.abducibles.first() {
            return Err(ProfileError::NotAFact(format!("#abducible {a}.")));
        }
        Ok(profile)
    }

    /// Files a fact under its category, enforcing one stage and one NYHA class.
    pub fn add_fact(&mut self, atom: Atom) -> Result<(), ProfileError> {
        self.known_absent.remove(&atom);
        let unary_constant = atom.arity() == 1 && matches!(atom.args[0], Term::Constant(_));
        match (atom.predicate.as_str(), atom.arity()) {
            ("evidence", 1) if unary_constant => {
                let name = atom.args[0].to_string();
                for (category, group) in [("ACCF/AHA stage", &STAGES), ("NYHA class", &NYHA)] {
                    if !group.contains(&name.as_str()) {
                        continue;
                    }
                    if let Some(other) =
                        self.evidence.iter().find(|e| e.arity() == 1 && group.contains(&e.args[0].to_string().as_str()))
                    {
                        if *other != atom {
                            return Err(ProfileError::Conflicting {
                                category,
                                first: other.to_string(),
                                second: atom.to_string(),
                            });
                        }
                    }
                }
                self.evidence.insert(atom);
            }
            ("evidence", 2) if atom.is_ground() => {
                self.evidence.insert(atom);
            }
            ("diagnosis", 1) if unary_constant => {
                self.diagnosis.insert(atom);
            }
            ("history", 1) if unary_constant => {
                self.history.insert(atom);
            }
            ("contraindication", 1) if unary_constant => {
                self.contraindications.insert(atom);
            }
            ("measurement", 2) => {
                let (Term::Constant(name), Some(v)) = (&atom.args[0], atom.args[1].as_number()) else {
                    return Err(ProfileError::Unsupported(atom.to_string()));
                };
                if v.is_negative() {
                    return Err(ProfileError::BadMeasurement { name: name.clone() });
                }
                if self.measurements.insert(name.clone(), v).is_some() {
                    return Err(ProfileError::DuplicateMeasurement(name.clone()));
                }
            }
            (_, 0) if in_vocabulary(&atom) => {
                self.confirmed.insert(atom);
            }
            _ => return Err(ProfileError::Unsupported(atom.to_string())),
        }
        Ok(())
    }

    /// Every fact of the profile, category by category.
    pub fn facts(&self) -> Vec<Atom> {
        let mut out: Vec<Atom> = self.evidence.iter().chain(&self.diagnosis).chain(&self.history).cloned().collect();
        out.extend(
            self.measurements
                .iter()
                .map(|(name, v)| Atom::new("measurement", vec![Term::constant(name), Term::Number(*v)])),
        );
        out.extend(self.contraindications.iter().cloned());
        out.extend(self.confirmed.iter().cloned());
        out
    }

    pub fn has_fact(&self, atom: &Atom) -> bool {
        self.facts().contains(atom)
    }

    pub fn measurement(&self, name: &str) -> Option<Decimal> {
        self.measurements.get(name).copied()
    }

    /// The profile in its file syntax.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in self.facts() {
            let _ = writeln!(out, "{f}.");
        }
        for a in &self.known_absent {
            let _ = writeln!(out, "% known_absent: {a}");
        }
        out
    }
}

/// LVEF values below 1 are fractions and are rescaled to percent.
pub fn normalize_profile(raw: PatientProfile) -> PatientProfile {
    let mut p = raw;
    if let Some(v) = p.measurements.get("lvef").copied() {
        if v < Decimal::from_int(1) {
            let pct = v.mul_int(100).normalized();
            p.notes.push(format!("lvef {v} read as a fraction and rescaled to {pct} percent"));
            p.measurements.insert("lvef".into(), pct);
        }
    }
    p
}

/// Parses, normalizes and validates a profile.
pub fn load_profile(text: &str) -> Result<PatientProfile, ProfileError> {
    let p = normalize_profile(PatientProfile::parse(text)?);
    if let Some(v) = p.measurement("lvef") {
        if v > Decimal::from_int(100) {
            return Err(ProfileError::LvefOutOfRange(v));
        }
    }
    Ok(p)
}

pub fn profile_to_facts(p: &PatientProfile) -> Vec<Rule> {
    p.facts().into_iter().map(Rule::fact).collect()
}

/// The shipped KB plus the profile's facts.
pub fn patient_program(p: &PatientProfile) -> Program {
    KnowledgeBase::builtin().patient_program(p)
}

fn exclusive_siblings(p: &PatientProfile) -> BTreeSet<Atom> {
    let mut out = BTreeSet::new();
    for group in [&STAGES, &NYHA] {
        let present = group.iter().any(|g| p.evidence.contains(&Atom::with_constants("evidence", &[g])));
        if present {
            out.extend(group.iter().map(|g| Atom::with_constants("evidence", &[g])));
        }
    }
    out
}

/// Abduction setup against the shipped KB.
pub fn abduction_setup(p: &PatientProfile) -> (Program, Vec<Atom>) {
    KnowledgeBase::builtin().abduction_setup(p)
}
