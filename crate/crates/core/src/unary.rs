//! Unary tests: the single-input conditions found in decision table cells.
//!
//! Supported forms:
//!
//! | text                     | test                         |
//! |--------------------------|------------------------------|
//! | `-`                      | irrelevant (always matches)   |
//! | `true`, `false`          | boolean equality              |
//! | `12`, `-0.5`             | number equality               |
//! | `"text"`                 | string equality               |
//! | `null`                   | is null                       |
//! | `not(null)`              | is not null                   |
//! | `not(<test>)`            | negation                      |
//! | `< n`, `<= n`, `> n`, `>= n` | numeric comparison        |
//! | `contains("s")`, `contains(?, "s")` | substring          |

use std::fmt;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::value::{quote, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    fn holds(self, lhs: &Decimal, rhs: &Decimal) -> bool {
        match self {
            CompareOp::Lt => lhs < rhs,
            CompareOp::Le => lhs <= rhs,
            CompareOp::Gt => lhs > rhs,
            CompareOp::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum UnaryTest {
    Irrelevant,
    EqualsLiteral(Value),
    IsNull,
    NotNull,
    Compare(CompareOp, Decimal),
    Contains(String),
    Not(Box<UnaryTest>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unary test syntax error at byte {offset}: {message}")]
pub struct UnaryParseError {
    pub offset: usize,
    pub message: String,
}

impl UnaryTest {
    /// Negates `inner`, folding `not(null)` into [`UnaryTest::NotNull`].
    pub fn negate(inner: UnaryTest) -> Result<UnaryTest, UnaryParseError> {
        match inner {
            UnaryTest::Irrelevant => Err(UnaryParseError {
                offset: 0,
                message: "not(-) is not a valid test".to_owned(),
            }),
            UnaryTest::IsNull => Ok(UnaryTest::NotNull),
            other => Ok(UnaryTest::Not(Box::new(other))),
        }
    }

    /// Builds an equality test; lists are not literals.
    pub fn equals(value: Value) -> Option<UnaryTest> {
        match value {
            Value::List(_) => None,
            Value::Null => Some(UnaryTest::IsNull),
            v => Some(UnaryTest::EqualsLiteral(v)),
        }
    }

    pub fn parse(text: &str) -> Result<UnaryTest, UnaryParseError> {
        parse_unary_test(text)
    }

    pub fn render(&self) -> String {
        match self {
            UnaryTest::Irrelevant => "-".to_owned(),
            UnaryTest::EqualsLiteral(v) => v.render(),
            UnaryTest::IsNull => "null".to_owned(),
            UnaryTest::NotNull => "not(null)".to_owned(),
            UnaryTest::Compare(op, n) => format!("{} {}", op.symbol(), n.normalize()),
            UnaryTest::Contains(s) => format!("contains({})", quote(s)),
            UnaryTest::Not(inner) => format!("not({})", inner.render()),
        }
    }

    pub fn is_irrelevant(&self) -> bool {
        matches!(self, UnaryTest::Irrelevant)
    }

    /// Evaluates the test against `value`. Total: every combination yields a
    /// boolean. Equality and containment against a list are existential.
    pub fn eval(&self, value: &Value) -> bool {
        match self {
            UnaryTest::Irrelevant => true,
            UnaryTest::IsNull => value.is_null(),
            UnaryTest::NotNull => !value.is_null(),
            UnaryTest::EqualsLiteral(lit) => match value {
                Value::List(items) => items.iter().any(|item| item == lit),
                v => v == lit,
            },
            UnaryTest::Contains(needle) => match value {
                Value::Text(t) => t.contains(needle.as_str()),
                Value::List(items) => items
                    .iter()
                    .any(|item| matches!(item, Value::Text(t) if t.contains(needle.as_str()))),
                _ => false,
            },
            UnaryTest::Compare(op, rhs) => match value {
                Value::Number(lhs) => op.holds(lhs, rhs),
                _ => false,
            },
            UnaryTest::Not(inner) => !inner.eval(value),
        }
    }
}

impl fmt::Display for UnaryTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Serialize for UnaryTest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for UnaryTest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_unary_test(&text).map_err(serde::de::Error::custom)
    }
}

/// Evaluates `test` on `value`.
pub fn eval_unary_test(test: &UnaryTest, value: &Value) -> bool {
    test.eval(value)
}

/// Parses the text of a decision table input cell.
pub fn parse_unary_test(text: &str) -> Result<UnaryTest, UnaryParseError> {
    let mut p = Parser { src: text, pos: 0 };
    p.skip_ws();
    if p.pos == text.len() {
        return Err(p.error("empty unary test"));
    }
    let test = p.test()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(test)
}

/// Parses a literal output cell (`null`, `true`, `false`, a number or a
/// quoted string). `-` reads as null.
pub fn parse_literal(text: &str) -> Result<Value, UnaryParseError> {
    let mut p = Parser { src: text, pos: 0 };
    p.skip_ws();
    if p.pos == text.len() {
        return Err(p.error("empty literal"));
    }
    let rest = p.rest();
    if rest.trim_end() == "-" {
        return Ok(Value::Null);
    }
    let value = if rest.starts_with('"') {
        Value::Text(p.string()?)
    } else if p.eat_keyword("null") {
        Value::Null
    } else if p.eat_keyword("true") {
        Value::Boolean(true)
    } else if p.eat_keyword("false") {
        Value::Boolean(false)
    } else {
        Value::Number(p.number()?)
    };
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("output is not a literal"));
    }
    Ok(value)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> UnaryParseError {
        UnaryParseError {
            offset: self.pos,
            message: message.to_owned(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), UnaryParseError> {
        self.skip_ws();
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{token}`")))
        }
    }

    /// Consumes `word` only when it is not followed by an identifier character.
    fn eat_keyword(&mut self, word: &str) -> bool {
        let rest = self.rest();
        if !rest.starts_with(word) {
            return false;
        }
        let next = rest[word.len()..].chars().next();
        if next.is_some_and(|c| c.is_alphanumeric() || c == '_') {
            return false;
        }
        self.pos += word.len();
        true
    }

    fn test(&mut self) -> Result<UnaryTest, UnaryParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = self.rest();

        if rest.starts_with('-') && !rest[1..].starts_with(|c: char| c.is_ascii_digit() || c == '.') {
            self.pos += 1;
            return Ok(UnaryTest::Irrelevant);
        }
        if rest.starts_with('"') {
            return Ok(UnaryTest::EqualsLiteral(Value::Text(self.string()?)));
        }
        for (token, op) in [
            ("<=", CompareOp::Le),
            (">=", CompareOp::Ge),
            ("<", CompareOp::Lt),
            (">", CompareOp::Gt),
        ] {
            if self.eat(token) {
                self.skip_ws();
                return Ok(UnaryTest::Compare(op, self.number()?));
            }
        }
        if self.eat_keyword("null") {
            return Ok(UnaryTest::IsNull);
        }
        if self.eat_keyword("true") {
            return Ok(UnaryTest::EqualsLiteral(Value::Boolean(true)));
        }
        if self.eat_keyword("false") {
            return Ok(UnaryTest::EqualsLiteral(Value::Boolean(false)));
        }
        if self.eat_keyword("not") {
            self.expect("(")?;
            let inner_start = self.pos;
            let inner = self.test()?;
            self.expect(")")?;
            return UnaryTest::negate(inner).map_err(|mut e| {
                e.offset = inner_start;
                e
            });
        }
        if self.eat_keyword("contains") {
            self.expect("(")?;
            self.skip_ws();
            if self.eat("?") {
                self.expect(",")?;
                self.skip_ws();
            }
            if !self.rest().starts_with('"') {
                return Err(self.error("contains() expects a string literal"));
            }
            let needle = self.string()?;
            self.expect(")")?;
            return Ok(UnaryTest::Contains(needle));
        }
        if rest.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '.') {
            return Ok(UnaryTest::EqualsLiteral(Value::Number(self.number()?)));
        }
        self.pos = start;
        Err(self.error("unrecognized unary test"))
    }

    fn number(&mut self) -> Result<Decimal, UnaryParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = self.pos;
        if end < bytes.len() && bytes[end] == b'-' {
            end += 1;
        }
        let digits_start = end;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end == digits_start {
            return Err(self.error("expected a number"));
        }
        let literal = &self.src[start..end];
        let value = literal.parse::<Decimal>().map_err(|_| UnaryParseError {
            offset: start,
            message: format!("invalid number `{literal}`"),
        })?;
        self.pos = end;
        Ok(value)
    }

    fn string(&mut self) -> Result<String, UnaryParseError> {
        let start = self.pos;
        if !self.eat("\"") {
            return Err(self.error("expected a string literal"));
        }
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, 'r')) => out.push('\r'),
                    Some((_, other)) => out.push(other),
                    None => break,
                },
                c => out.push(c),
            }
        }
        Err(UnaryParseError {
            offset: start,
            message: "unterminated string literal".to_owned(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dec(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn parses_documented_forms() {
        assert_eq!(
            parse_unary_test("contains(\"Start a new activity\")").unwrap(),
            UnaryTest::Contains("Start a new activity".into())
        );
        assert_eq!(
            parse_unary_test("contains(?, \"Change or expand\")").unwrap(),
            UnaryTest::Contains("Change or expand".into())
        );
        assert_eq!(parse_unary_test("-").unwrap(), UnaryTest::Irrelevant);
        assert_eq!(parse_unary_test("not(null)").unwrap(), UnaryTest::NotNull);
        assert_eq!(parse_unary_test(" null ").unwrap(), UnaryTest::IsNull);
        assert_eq!(
            parse_unary_test("true").unwrap(),
            UnaryTest::EqualsLiteral(Value::Boolean(true))
        );
        assert_eq!(
            parse_unary_test("-2.5").unwrap(),
            UnaryTest::EqualsLiteral(Value::Number(dec("-2.5")))
        );
        assert_eq!(
            parse_unary_test(">= 600").unwrap(),
            UnaryTest::Compare(CompareOp::Ge, dec("600"))
        );
        assert_eq!(
            parse_unary_test("not(\"Ja\")").unwrap(),
            UnaryTest::Not(Box::new(UnaryTest::EqualsLiteral(Value::text("Ja"))))
        );
        assert_eq!(
            parse_unary_test("not(not(null))").unwrap(),
            UnaryTest::Not(Box::new(UnaryTest::NotNull))
        );
    }

    #[test]
    fn reports_offsets() {
        let err = parse_unary_test("[1..2]").unwrap_err();
        assert_eq!(err.offset, 0);
        let err = parse_unary_test("true false").unwrap_err();
        assert_eq!(err.offset, 5);
        let err = parse_unary_test("not(-)").unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(parse_unary_test("   ").is_err());
        assert!(parse_unary_test("contains(\"open").is_err());
        assert!(parse_unary_test("nullish").is_err());
    }

    #[test]
    fn eval_examples() {
        assert!(UnaryTest::NotNull.eval(&Value::Boolean(false)));
        assert!(UnaryTest::Contains("600 m3".into()).eval(&Value::text("Not over 600 m3")));
        assert!(!UnaryTest::Compare(CompareOp::Gt, dec("2")).eval(&Value::Null));
        assert!(!UnaryTest::Contains("x".into()).eval(&Value::Null));
        assert!(UnaryTest::Compare(CompareOp::Gt, dec("2")).eval(&Value::number(3)));
        assert!(!UnaryTest::Compare(CompareOp::Gt, dec("2")).eval(&Value::text("3")));
    }

    #[test]
    fn list_semantics_are_existential() {
        let list = Value::List(vec![Value::text("a"), Value::text("bc")]);
        assert!(UnaryTest::EqualsLiteral(Value::text("bc")).eval(&list));
        assert!(!UnaryTest::EqualsLiteral(Value::text("b")).eval(&list));
        assert!(UnaryTest::Contains("b".into()).eval(&list));
        assert!(UnaryTest::NotNull.eval(&Value::List(vec![])));
        assert!(!UnaryTest::EqualsLiteral(Value::text("a")).eval(&Value::List(vec![])));
    }

    #[test]
    fn literals() {
        assert_eq!(parse_literal("\"A\"").unwrap(), Value::text("A"));
        assert_eq!(parse_literal("-").unwrap(), Value::Null);
        assert_eq!(parse_literal("3.0").unwrap(), Value::Number(dec("3")));
        assert!(parse_literal("x + 1").is_err());
    }

    fn arb_value() -> impl Strategy<Value = Value> {
        prop_oneof![
            Just(Value::Null),
            any::<bool>().prop_map(Value::Boolean),
            (-100_000i64..100_000, 0u32..4).prop_map(|(m, s)| Value::Number(Decimal::new(m, s))),
            "[a-zA-Z0-9 \"\\\\]{0,12}".prop_map(Value::Text),
        ]
    }

    fn arb_test() -> impl Strategy<Value = UnaryTest> {
        let leaf = prop_oneof![
            Just(UnaryTest::Irrelevant),
            Just(UnaryTest::IsNull),
            Just(UnaryTest::NotNull),
            arb_value().prop_filter_map("null is IsNull", UnaryTest::equals),
            (
                prop_oneof![
                    Just(CompareOp::Lt),
                    Just(CompareOp::Le),
                    Just(CompareOp::Gt),
                    Just(CompareOp::Ge)
                ],
                -10_000i64..10_000,
                0u32..3
            )
                .prop_map(|(op, m, s)| UnaryTest::Compare(op, Decimal::new(m, s))),
            "[a-z \"]{0,8}".prop_map(UnaryTest::Contains),
        ];
        leaf.prop_recursive(3, 8, 1, |inner| {
            inner.prop_filter_map("not(-) is invalid", |t| UnaryTest::negate(t).ok())
        })
    }

    fn same_test(a: &UnaryTest, b: &UnaryTest) -> bool {
        // Decimal equality ignores scale, so structural equality is enough.
        a == b
    }

    proptest! {
        #[test]
        fn parse_inverts_render(t in arb_test()) {
            let parsed = parse_unary_test(&t.render()).unwrap();
            prop_assert!(same_test(&parsed, &t), "{} -> {:?}", t.render(), parsed);
        }

        #[test]
        fn irrelevant_always_matches(v in arb_value()) {
            prop_assert!(UnaryTest::Irrelevant.eval(&v));
        }

        #[test]
        fn negation_flips(t in arb_test(), v in arb_value()) {
            let negated = UnaryTest::Not(Box::new(t.clone()));
            prop_assert_eq!(negated.eval(&v), !t.eval(&v));
        }
    }
}
