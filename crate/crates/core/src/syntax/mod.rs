//! Rule language: AST, parser and canonical rendering.

mod ast;
mod decimal;
mod parser;

pub use ast::*;
pub use decimal::{Decimal, DecimalError};
pub use parser::{parse_atom, parse_program, parse_query, RESERVED_PREFIXES};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: Position, message: String },
    #[error("unsafe variable `{variable}` in rule `{rule}` at {position}")]
    Safety { variable: String, rule: String, position: Position },
}

impl ParseError {
    pub(crate) fn syntax(position: Position, message: impl Into<String>) -> Self {
        ParseError::Syntax { position, message: message.into() }
    }
}

/// Renders a literal: `p(a)` or `not p(a)`.
pub fn render_literal(lit: &Literal) -> String {
    lit.to_string()
}

/// Renders signed atoms as `{ a, not b }` in the order given, skipping hidden atoms.
pub fn render_set<'a>(items: impl IntoIterator<Item = (&'a Atom, Sign)>) -> String {
    let parts: Vec<String> = items
        .into_iter()
        .filter(|(a, _)| !a.is_hidden())
        .map(|(a, s)| match s {
            Sign::Positive => a.to_string(),
            Sign::NafNegated => format!("not {a}"),
        })
        .collect();
    if parts.is_empty() {
        "{ }".to_string()
    } else {
        format!("{{ {} }}", parts.join(", "))
    }
}

/// Like [`render_set`] but in canonical order: positive atoms sorted, then negative atoms sorted.
pub fn render_set_sorted<'a>(items: impl IntoIterator<Item = (&'a Atom, Sign)>) -> String {
    let mut items: Vec<_> = items.into_iter().collect();
    items.sort_by(|(a, s), (b, t)| s.cmp(t).then_with(|| a.cmp(b)));
    render_set(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn literal_rendering() {
        assert_eq!(render_literal(&Literal::neg(Atom::prop("p"))), "not p");
    }

    #[test]
    fn set_rendering() {
        let (q, p, hidden) = (Atom::prop("q"), Atom::prop("p"), Atom::prop("_not_a"));
        assert_eq!(render_set([(&q, Sign::Positive), (&p, Sign::NafNegated)]), "{ q, not p }");
        assert_eq!(render_set([(&q, Sign::Positive), (&hidden, Sign::Positive)]), "{ q }");
        assert_eq!(
            render_set_sorted([(&p, Sign::NafNegated), (&q, Sign::Positive), (&p, Sign::Positive)]),
            "{ p, q, not p }"
        );
        assert_eq!(render_set(std::iter::empty()), "{ }");
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        prop_oneof![
            "[a-e][a-z0-9_]{0,3}".prop_map(Term::Constant),
            "[A-D][a-z0-9]{0,2}".prop_map(Term::Variable),
            (-500i64..500, 0u32..3).prop_map(|(u, s)| Term::Number(Decimal::new(u as i128, s))),
        ]
    }

    fn arb_atom() -> impl Strategy<Value = Atom> {
        ("[a-e][a-z0-9_]{0,4}", prop::collection::vec(arb_term(), 0..3))
            .prop_filter("not is reserved", |(p, _)| p != "not")
            .prop_map(|(p, args)| Atom { predicate: p, args })
    }

    fn arb_elem() -> impl Strategy<Value = BodyElem> {
        prop_oneof![
            3 => (arb_atom(), any::<bool>()).prop_map(|(a, pos)| BodyElem::Literal(if pos { Literal::pos(a) } else { Literal::neg(a) })),
            1 => (arb_term(), 0usize..6, arb_term()).prop_map(|(l, op, r)| {
                let op = [CmpOp::Le, CmpOp::Ge, CmpOp::Lt, CmpOp::Gt, CmpOp::Eq, CmpOp::Ne][op];
                BodyElem::Builtin(BuiltinComparison { left: l, op, right: r })
            }),
        ]
    }

    fn arb_rule() -> impl Strategy<Value = Rule> {
        (prop::option::weighted(0.9, arb_atom()), prop::collection::vec(arb_elem(), 0..4))
            .prop_filter("constraints need a body", |(h, b)| h.is_some() || !b.is_empty())
            .prop_map(|(head, body)| Rule { head, body })
            .prop_filter("parser only accepts safe rules", |r| r.unsafe_variable().is_none())
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(rules in prop::collection::vec(arb_rule(), 0..6), abd in prop::collection::vec(arb_atom(), 0..2)) {
            let program = Program { rules, abducibles: abd, ..Program::default() };
            let text = program.to_string();
            let parsed = parse_program(&text).unwrap();
            prop_assert_eq!(&parsed, &program);
            prop_assert_eq!(parse_program(&parsed.to_string()).unwrap(), parsed);
        }
    }
}
