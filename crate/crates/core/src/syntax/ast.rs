use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::decimal::Decimal;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Number(Decimal),
    Constant(String),
    Variable(String),
}

impl Term {
    pub fn constant(name: &str) -> Self {
        Term::Constant(name.to_string())
    }

    pub fn variable(name: &str) -> Self {
        Term::Variable(name.to_string())
    }

    pub fn int(value: i64) -> Self {
        Term::Number(Decimal::from_int(value))
    }

    pub fn is_ground(&self) -> bool {
        !matches!(self, Term::Variable(_))
    }

    pub fn as_variable(&self) -> Option<&str> {
        match self {
            Term::Variable(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<Decimal> {
        match self {
            Term::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn substitute(&self, subst: &Substitution) -> Term {
        match self {
            Term::Variable(v) => subst.get(v).cloned().unwrap_or_else(|| self.clone()),
            _ => self.clone(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Number(n) => write!(f, "{n}"),
            Term::Constant(c) => f.write_str(c),
            Term::Variable(v) => f.write_str(v),
        }
    }
}

/// Variable bindings produced by matching and grounding.
pub type Substitution = BTreeMap<String, Term>;

/// `(name, arity)`; `p/0` and `p/1` are distinct predicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateKey {
    pub name: String,
    pub arity: usize,
}

impl fmt::Display for PredicateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// Serialized as its source text, e.g. `"history(angioedema)"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.to_string(), args }
    }

    pub fn prop(predicate: &str) -> Self {
        Atom::new(predicate, Vec::new())
    }

    /// Shorthand for an atom whose arguments are all constants.
    pub fn with_constants(predicate: &str, args: &[&str]) -> Self {
        Atom::new(predicate, args.iter().map(|a| Term::constant(a)).collect())
    }

    pub fn key(&self) -> PredicateKey {
        PredicateKey { name: self.predicate.clone(), arity: self.args.len() }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// Auxiliary atoms (predicate starts with `_`) are omitted from rendered answers.
    pub fn is_hidden(&self) -> bool {
        self.predicate.starts_with('_')
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_variable)
    }

    pub fn substitute(&self, subst: &Substitution) -> Atom {
        Atom { predicate: self.predicate.clone(), args: self.args.iter().map(|t| t.substitute(subst)).collect() }
    }

    /// One-way matching of `self` (a pattern, may hold variables) against a ground atom,
    /// extending `subst`. Returns `false` and leaves `subst` unspecified on mismatch.
    pub fn match_ground(&self, ground: &Atom, subst: &mut Substitution) -> bool {
        if self.predicate != ground.predicate || self.args.len() != ground.args.len() {
            return false;
        }
        for (p, g) in self.args.iter().zip(&ground.args) {
            match p {
                Term::Variable(v) => match subst.get(v) {
                    Some(bound) if bound != g => return false,
                    Some(_) => {}
                    None => {
                        subst.insert(v.clone(), g.clone());
                    }
                },
                _ if p != g => return false,
                _ => {}
            }
        }
        true
    }

    /// Whether two atoms (variables of each renamed apart) have a common instance.
    pub fn unifies_with<'a>(&'a self, other: &'a Atom) -> bool {
        if self.predicate != other.predicate || self.args.len() != other.args.len() {
            return false;
        }
        // union-find over the variables of both sides; each class may carry one ground value
        let mut ids: BTreeMap<(bool, &'a str), usize> = BTreeMap::new();
        let mut parent: Vec<usize> = Vec::new();
        let mut value: Vec<Option<&'a Term>> = Vec::new();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut class_of = |side: bool, t: &'a Term| -> Option<usize> {
            let Term::Variable(v) = t else { return None };
            Some(*ids.entry((side, v.as_str())).or_insert_with(|| {
                parent.push(parent.len());
                value.push(None);
                parent.len() - 1
            }))
        };
        let classes: Vec<_> =
            self.args.iter().zip(&other.args).map(|(a, b)| (class_of(false, a), class_of(true, b))).collect();
        for ((a, b), (ca, cb)) in self.args.iter().zip(&other.args).zip(classes) {
            match (ca, cb) {
                (None, None) => {
                    if a != b {
                        return false;
                    }
                }
                (Some(x), None) | (None, Some(x)) => {
                    let ground = if ca.is_some() { b } else { a };
                    let r = find(&mut parent, x);
                    match value[r] {
                        Some(existing) if existing != ground => return false,
                        _ => value[r] = Some(ground),
                    }
                }
                (Some(x), Some(y)) => {
                    let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                    if rx != ry {
                        match (value[rx], value[ry]) {
                            (Some(u), Some(w)) if u != w => return false,
                            (None, Some(w)) => value[rx] = Some(w),
                            _ => {}
                        }
                        parent[ry] = rx;
                    }
                }
            }
        }
        true
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    NafNegated,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::NafNegated,
            Sign::NafNegated => Sign::Positive,
        }
    }
}

/// Serialized as its source text, e.g. `"not p"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Literal {
    pub atom: Atom,
    pub sign: Sign,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, sign: Sign::Positive }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, sign: Sign::NafNegated }
    }

    pub fn is_positive(&self) -> bool {
        self.sign == Sign::Positive
    }

    pub fn substitute(&self, subst: &Substitution) -> Literal {
        Literal { atom: self.atom.substitute(subst), sign: self.sign }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Positive => write!(f, "{}", self.atom),
            Sign::NafNegated => write!(f, "not {}", self.atom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "=<",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Eq => "=",
            CmpOp::Ne => "\\=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BuiltinComparison {
    pub left: Term,
    pub op: CmpOp,
    pub right: Term,
}

impl BuiltinComparison {
    /// Evaluates a ground comparison. `None` while either side is still a variable.
    ///
    /// Ordering operators compare numbers only; between anything else they are false.
    pub fn evaluate(&self) -> Option<bool> {
        if !self.left.is_ground() || !self.right.is_ground() {
            return None;
        }
        let result = match self.op {
            CmpOp::Eq => self.left == self.right,
            CmpOp::Ne => self.left != self.right,
            op => match (self.left.as_number(), self.right.as_number()) {
                (Some(l), Some(r)) => match op {
                    CmpOp::Le => l <= r,
                    CmpOp::Ge => l >= r,
                    CmpOp::Lt => l < r,
                    CmpOp::Gt => l > r,
                    CmpOp::Eq | CmpOp::Ne => unreachable!(),
                },
                _ => false,
            },
        };
        Some(result)
    }

    pub fn substitute(&self, subst: &Substitution) -> Self {
        BuiltinComparison { left: self.left.substitute(subst), op: self.op, right: self.right.substitute(subst) }
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        [&self.left, &self.right].into_iter().filter_map(|t| t.as_variable())
    }
}

impl fmt::Display for BuiltinComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op.symbol(), self.right)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BodyElem {
    Literal(Literal),
    Builtin(BuiltinComparison),
}

impl BodyElem {
    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            BodyElem::Literal(l) => Some(l),
            BodyElem::Builtin(_) => None,
        }
    }
}

impl fmt::Display for BodyElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyElem::Literal(l) => write!(f, "{l}"),
            BodyElem::Builtin(b) => write!(f, "{b}"),
        }
    }
}

/// A normal rule; `head == None` is a constraint, an empty body is a fact.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rule {
    pub head: Option<Atom>,
    pub body: Vec<BodyElem>,
}

impl Rule {
    pub fn fact(atom: Atom) -> Self {
        Rule { head: Some(atom), body: Vec::new() }
    }

    pub fn new(head: Atom, body: Vec<Literal>) -> Self {
        Rule { head: Some(head), body: body.into_iter().map(BodyElem::Literal).collect() }
    }

    pub fn constraint(body: Vec<Literal>) -> Self {
        Rule { head: None, body: body.into_iter().map(BodyElem::Literal).collect() }
    }

    pub fn is_fact(&self) -> bool {
        self.head.is_some() && self.body.is_empty()
    }

    pub fn is_constraint(&self) -> bool {
        self.head.is_none()
    }

    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.body.iter().filter_map(BodyElem::as_literal)
    }

    pub fn builtins(&self) -> impl Iterator<Item = &BuiltinComparison> {
        self.body.iter().filter_map(|b| match b {
            BodyElem::Builtin(c) => Some(c),
            BodyElem::Literal(_) => None,
        })
    }

    /// Variables bound by positive body literals.
    pub fn bound_variables(&self) -> BTreeSet<&str> {
        self.literals().filter(|l| l.is_positive()).flat_map(|l| l.atom.variables()).collect()
    }

    /// First variable (in head, negated literal or builtin order) not bound by a positive
    /// body literal.
    pub fn unsafe_variable(&self) -> Option<&str> {
        let bound = self.bound_variables();
        let head_vars = self.head.iter().flat_map(|h| h.variables());
        let neg_vars = self.literals().filter(|l| !l.is_positive()).flat_map(|l| l.atom.variables());
        let builtin_vars = self.builtins().flat_map(|b| b.variables());
        head_vars.chain(neg_vars).chain(builtin_vars).find(|v| !bound.contains(v))
    }

    pub fn is_ground(&self) -> bool {
        self.head.as_ref().is_none_or(Atom::is_ground)
            && self.body.iter().all(|b| match b {
                BodyElem::Literal(l) => l.atom.is_ground(),
                BodyElem::Builtin(c) => c.left.is_ground() && c.right.is_ground(),
            })
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(h) = &self.head {
            write!(f, "{h}")?;
            if self.body.is_empty() {
                return f.write_str(".");
            }
            f.write_str(" ")?;
        }
        f.write_str(":- ")?;
        for (i, b) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str(".")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// A parsed program. Equality ignores source positions.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub abducibles: Vec<Atom>,
    pub queries: Vec<Vec<Literal>>,
    #[serde(skip)]
    pub rule_positions: Vec<Position>,
}

impl Program {
    pub fn from_rules(rules: Vec<Rule>) -> Self {
        Program { rules, ..Program::default() }
    }

    pub fn push_rule(&mut self, rule: Rule) {
        self.rules.push(rule);
        self.rule_positions.push(Position::default());
    }

    pub fn extend(&mut self, other: Program) {
        let mut positions = other.rule_positions;
        positions.resize(other.rules.len(), Position::default());
        self.rule_positions.resize(self.rules.len(), Position::default());
        self.rules.extend(other.rules);
        self.rule_positions.extend(positions);
        self.abducibles.extend(other.abducibles);
        self.queries.extend(other.queries);
    }

    pub fn position_of(&self, rule_index: usize) -> Position {
        self.rule_positions.get(rule_index).copied().unwrap_or_default()
    }

    /// Heads of all rules (facts included), in textual order.
    pub fn heads(&self) -> impl Iterator<Item = &Atom> {
        self.rules.iter().filter_map(|r| r.head.as_ref())
    }
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules && self.abducibles == other.abducibles && self.queries == other.queries
    }
}

impl Eq for Program {}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        for a in &self.abducibles {
            writeln!(f, "#abducible {a}.")?;
        }
        for q in &self.queries {
            f.write_str("?- ")?;
            for (i, l) in q.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{l}")?;
            }
            writeln!(f, ".")?;
        }
        Ok(())
    }
}

impl TryFrom<String> for Atom {
    type Error = super::ParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        super::parse_atom(&s)
    }
}

impl From<Atom> for String {
    fn from(a: Atom) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for Literal {
    type Error = super::ParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        let mut lits = super::parse_query(&s)?;
        if lits.len() != 1 {
            return Err(super::ParseError::syntax(Position::default(), "expected a single literal"));
        }
        Ok(lits.remove(0))
    }
}

impl From<Literal> for String {
    fn from(l: Literal) -> String {
        l.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_uses_source_text() {
        let a = super::super::parse_atom("measurement(lvef, 0.16)").unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, "\"measurement(lvef,0.16)\"");
        assert_eq!(serde_json::from_str::<Atom>(&json).unwrap(), a);
        let l = Literal::neg(Atom::new("p", vec![Term::variable("X")]));
        let json = serde_json::to_string(&l).unwrap();
        assert_eq!(json, "\"not p(X)\"");
        assert_eq!(serde_json::from_str::<Literal>(&json).unwrap(), l);
        assert!(serde_json::from_str::<Atom>("\"p(\"").is_err());
        assert!(serde_json::from_str::<Literal>("\"p, q\"").is_err());
    }

    #[test]
    fn arity_distinguishes_predicates() {
        assert_ne!(Atom::prop("p").key(), Atom::with_constants("p", &["a"]).key());
    }

    #[test]
    fn unification_of_patterns() {
        let goal_x = Atom::new("goal", vec![Term::variable("X")]);
        let goal_a = Atom::with_constants("goal", &["a"]);
        let pair_xx = Atom::new("p", vec![Term::variable("X"), Term::variable("X")]);
        let pair_ab = Atom::with_constants("p", &["a", "b"]);
        let pair_yb = Atom::new("p", vec![Term::variable("Y"), Term::constant("b")]);
        assert!(goal_x.unifies_with(&goal_a));
        assert!(!goal_a.unifies_with(&Atom::with_constants("goal", &["b"])));
        assert!(!pair_xx.unifies_with(&pair_ab));
        assert!(pair_xx.unifies_with(&pair_yb));
        assert!(!goal_x.unifies_with(&pair_ab));
    }

    #[test]
    fn comparison_evaluation() {
        let cmp = |l: Term, op, r: Term| BuiltinComparison { left: l, op, right: r }.evaluate();
        assert_eq!(cmp(Term::int(16), CmpOp::Le, Term::int(30)), Some(true));
        assert_eq!(cmp(Term::int(45), CmpOp::Le, Term::int(30)), Some(false));
        assert_eq!(cmp(Term::constant("a"), CmpOp::Ne, Term::constant("b")), Some(true));
        assert_eq!(cmp(Term::constant("a"), CmpOp::Lt, Term::constant("b")), Some(false));
        assert_eq!(cmp(Term::variable("X"), CmpOp::Lt, Term::int(1)), None);
    }

    #[test]
    fn unsafe_variable_detection() {
        let r = Rule::new(
            Atom::new("r", vec![Term::variable("X")]),
            vec![Literal::neg(Atom::new("s", vec![Term::variable("X")]))],
        );
        assert_eq!(r.unsafe_variable(), Some("X"));
    }
}
