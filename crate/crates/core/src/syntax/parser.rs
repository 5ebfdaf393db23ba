//! Hand-written lexer and recursive-descent parser for the rule language.
//!
//! ```text
//! program   := statement*
//! statement := "#abducible" atom "."
//!            | "?-" literals "."
//!            | ":-" body "."
//!            | atom [":-" body] "."
//! body      := elem ("," elem)*
//! elem      := "not" atom | atom | term cmp term
//! cmp       := "=<" | ">=" | "<" | ">" | "=" | "\="
//! ```
//!
//! Identifiers starting with `_` name hidden predicates in atom position and
//! variables in argument position.

use super::ast::*;
use super::decimal::Decimal;
use super::ParseError;

/// Predicate prefixes generated by abducible expansion; user programs may not define them.
pub const RESERVED_PREFIXES: [&str; 3] = ["_negabd_", "_neg_", "_abd_"];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Lower(String),
    Upper(String),
    Under(String),
    Number(Decimal),
    LParen,
    RParen,
    Comma,
    Dot,
    If,
    Query,
    Directive(String),
    Cmp(CmpOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Lower(s) | Tok::Upper(s) | Tok::Under(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::If => "`:-`".into(),
            Tok::Query => "`?-`".into(),
            Tok::Directive(d) => format!("`#{d}`"),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Position)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let is_ident = |c: char| c.is_ascii_alphanumeric() || c == '_';

    while i < chars.len() {
        let c = chars[i];
        let pos = Position { line, column: col };
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                out.push((Tok::LParen, pos));
                advance(1, &mut i, &mut col);
            }
            ')' => {
                out.push((Tok::RParen, pos));
                advance(1, &mut i, &mut col);
            }
            ',' => {
                out.push((Tok::Comma, pos));
                advance(1, &mut i, &mut col);
            }
            '.' => {
                out.push((Tok::Dot, pos));
                advance(1, &mut i, &mut col);
            }
            ':' if chars.get(i + 1) == Some(&'-') => {
                out.push((Tok::If, pos));
                advance(2, &mut i, &mut col);
            }
            '?' if chars.get(i + 1) == Some(&'-') => {
                out.push((Tok::Query, pos));
                advance(2, &mut i, &mut col);
            }
            '=' if chars.get(i + 1) == Some(&'<') => {
                out.push((Tok::Cmp(CmpOp::Le), pos));
                advance(2, &mut i, &mut col);
            }
            '>' if chars.get(i + 1) == Some(&'=') => {
                out.push((Tok::Cmp(CmpOp::Ge), pos));
                advance(2, &mut i, &mut col);
            }
            '\\' if chars.get(i + 1) == Some(&'=') => {
                out.push((Tok::Cmp(CmpOp::Ne), pos));
                advance(2, &mut i, &mut col);
            }
            '<' => {
                out.push((Tok::Cmp(CmpOp::Lt), pos));
                advance(1, &mut i, &mut col);
            }
            '>' => {
                out.push((Tok::Cmp(CmpOp::Gt), pos));
                advance(1, &mut i, &mut col);
            }
            '=' => {
                out.push((Tok::Cmp(CmpOp::Eq), pos));
                advance(1, &mut i, &mut col);
            }
            '#' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && is_ident(chars[j]) {
                    j += 1;
                }
                let name: String = chars[start..j].iter().collect();
                if name.is_empty() {
                    return Err(ParseError::syntax(pos, "expected directive name after `#`"));
                }
                out.push((Tok::Directive(name), pos));
                advance(j - i, &mut i, &mut col);
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let n = s.parse::<Decimal>().map_err(|e| ParseError::syntax(pos, e.to_string()))?;
                out.push((Tok::Number(n), pos));
                advance(j - i, &mut i, &mut col);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && is_ident(chars[j]) {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let tok = if c == '_' {
                    Tok::Under(s)
                } else if c.is_ascii_uppercase() {
                    Tok::Upper(s)
                } else {
                    Tok::Lower(s)
                };
                out.push((tok, pos));
                advance(j - i, &mut i, &mut col);
            }
            '-' => return Err(ParseError::syntax(pos, "classical negation `-` is not supported")),
            other => return Err(ParseError::syntax(pos, format!("unexpected character `{other}`"))),
        }
    }
    out.push((Tok::Eof, Position { line, column: col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Position)>,
    at: usize,
    anon: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, at: 0, anon: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.at + offset).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn pos(&self) -> Position {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected {}", want.describe())))
        }
    }

    fn unexpected(&self, what: &str) -> ParseError {
        ParseError::syntax(self.pos(), format!("{what}, found {}", self.peek().describe()))
    }

    fn predicate_name(&mut self) -> Result<String, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Lower(s) if s == "not" => Err(ParseError::syntax(pos, "`not` cannot be used as a predicate name")),
            Tok::Lower(s) => Ok(s),
            Tok::Under(s) => {
                if RESERVED_PREFIXES.iter().any(|p| s.starts_with(p)) {
                    Err(ParseError::syntax(pos, format!("predicate `{s}` uses a reserved auxiliary prefix")))
                } else if s == "_" {
                    Err(ParseError::syntax(pos, "`_` is not a predicate name"))
                } else {
                    Ok(s)
                }
            }
            other => Err(ParseError::syntax(pos, format!("expected predicate name, found {}", other.describe()))),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Lower(s) => Ok(Term::Constant(s)),
            Tok::Upper(s) => Ok(Term::Variable(s)),
            Tok::Under(s) if s == "_" => {
                self.anon += 1;
                Ok(Term::Variable(format!("_{}", self.anon)))
            }
            Tok::Under(s) => Ok(Term::Variable(s)),
            Tok::Number(n) => Ok(Term::Number(n)),
            other => Err(ParseError::syntax(pos, format!("expected a term, found {}", other.describe()))),
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let predicate = self.predicate_name()?;
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                args.push(self.term()?);
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RParen => {
                        self.bump();
                        break;
                    }
                    _ => return Err(self.unexpected("expected `,` or `)` in argument list")),
                }
            }
        }
        Ok(Atom { predicate, args })
    }

    fn comparison_rest(&mut self, left: Term) -> Result<BodyElem, ParseError> {
        let op = match self.bump() {
            Tok::Cmp(op) => op,
            other => {
                self.at -= 1;
                return Err(
                    self.unexpected(&format!("expected comparison operator after term (got {})", other.describe()))
                );
            }
        };
        let right = self.term()?;
        Ok(BodyElem::Builtin(BuiltinComparison { left, op, right }))
    }

    fn body_elem(&mut self) -> Result<BodyElem, ParseError> {
        match self.peek().clone() {
            Tok::Lower(s) if s == "not" && !matches!(self.peek_at(1), Tok::Cmp(_)) => {
                self.bump();
                Ok(BodyElem::Literal(Literal::neg(self.atom()?)))
            }
            Tok::Upper(_) | Tok::Number(_) => {
                let left = self.term()?;
                self.comparison_rest(left)
            }
            Tok::Under(_) if matches!(self.peek_at(1), Tok::Cmp(_)) => {
                let left = self.term()?;
                self.comparison_rest(left)
            }
            Tok::Lower(_) | Tok::Under(_) => {
                if let (Tok::Lower(name), Tok::Cmp(_)) = (self.peek().clone(), self.peek_at(1)) {
                    self.bump();
                    return self.comparison_rest(Term::Constant(name));
                }
                Ok(BodyElem::Literal(Literal::pos(self.atom()?)))
            }
            _ => Err(self.unexpected("expected a body literal")),
        }
    }

    fn body(&mut self) -> Result<Vec<BodyElem>, ParseError> {
        let mut body = vec![self.body_elem()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            body.push(self.body_elem()?);
        }
        Ok(body)
    }

    fn literals(&mut self) -> Result<Vec<Literal>, ParseError> {
        let pos = self.pos();
        self.body()?
            .into_iter()
            .map(|e| match e {
                BodyElem::Literal(l) => Ok(l),
                BodyElem::Builtin(_) => Err(ParseError::syntax(pos, "comparisons are not allowed in queries")),
            })
            .collect()
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut program = Program::default();
        loop {
            let pos = self.pos();
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Directive(name) => {
                    if name != "abducible" {
                        return Err(ParseError::syntax(pos, format!("unknown directive `#{name}`")));
                    }
                    self.bump();
                    let atom = self.atom()?;
                    self.expect(Tok::Dot)?;
                    program.abducibles.push(atom);
                }
                Tok::Query => {
                    self.bump();
                    let q = self.literals()?;
                    self.expect(Tok::Dot)?;
                    program.queries.push(q);
                }
                Tok::If => {
                    self.bump();
                    let body = self.body()?;
                    self.expect(Tok::Dot)?;
                    push_checked(&mut program, Rule { head: None, body }, pos)?;
                }
                _ => {
                    let head = self.atom()?;
                    let body = if *self.peek() == Tok::If {
                        self.bump();
                        self.body()?
                    } else {
                        Vec::new()
                    };
                    self.expect(Tok::Dot)?;
                    push_checked(&mut program, Rule { head: Some(head), body }, pos)?;
                }
            }
        }
        Ok(program)
    }
}

fn push_checked(program: &mut Program, rule: Rule, position: Position) -> Result<(), ParseError> {
    if let Some(v) = rule.unsafe_variable() {
        return Err(ParseError::Safety { variable: v.to_string(), rule: rule.to_string(), position });
    }
    program.rules.push(rule);
    program.rule_positions.push(position);
    Ok(())
}

/// Parses a complete program. Every rule is safety-checked.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    Parser::new(text)?.program()
}

/// Parses a query: a comma-separated literal list with optional leading `?-` (or `:-`)
/// and optional trailing `.`.
pub fn parse_query(text: &str) -> Result<Vec<Literal>, ParseError> {
    let mut p = Parser::new(text)?;
    if matches!(p.peek(), Tok::Query | Tok::If) {
        p.bump();
    }
    let lits = p.literals()?;
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("expected end of query"));
    }
    Ok(lits)
}

/// Parses a single atom such as `history(angioedema)`; a trailing `.` is allowed.
pub fn parse_atom(text: &str) -> Result<Atom, ParseError> {
    let mut p = Parser::new(text)?;
    let atom = p.atom()?;
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("expected end of atom"));
    }
    Ok(atom)
}
