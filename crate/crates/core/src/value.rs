//! Runtime values flowing through decision graphs.

use std::fmt;

use rust_decimal::Decimal;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

/// The type declared for an input variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Boolean,
    String,
    Number,
}

impl ValueType {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueType::Boolean => "boolean",
            ValueType::String => "string",
            ValueType::Number => "number",
        }
    }

    /// Maps a DMN/FEEL `typeRef` onto one of the supported kinds.
    pub fn from_type_ref(type_ref: &str) -> Option<ValueType> {
        let bare = type_ref.rsplit(':').next().unwrap_or(type_ref).trim();
        match bare.to_ascii_lowercase().as_str() {
            "boolean" | "bool" => Some(ValueType::Boolean),
            "string" | "text" => Some(ValueType::String),
            "number" | "integer" | "int" | "long" | "double" | "decimal" => Some(ValueType::Number),
            _ => None,
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A value produced by an input assignment or a decision table.
///
/// Numbers are exact decimals. A `List` only ever holds scalars; it is the
/// result of a `COLLECT` table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum Value {
    #[default]
    Null,
    Boolean(bool),
    Number(Decimal),
    Text(String),
    List(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("lists cannot contain lists")]
pub struct NestedListError;

impl Value {
    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    pub fn number(n: impl Into<Decimal>) -> Value {
        Value::Number(n.into())
    }

    /// Builds a list, rejecting nested lists.
    pub fn list(items: Vec<Value>) -> Result<Value, NestedListError> {
        if items.iter().any(|v| matches!(v, Value::List(_))) {
            return Err(NestedListError);
        }
        Ok(Value::List(items))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Boolean(_) => "boolean",
            Value::Number(_) => "number",
            Value::Text(_) => "string",
            Value::List(_) => "list",
        }
    }

    /// Canonical literal text, as used in decision table cells. Lists render
    /// as a bracketed sequence, which is not a valid cell literal.
    pub fn render(&self) -> String {
        match self {
            Value::Null => "null".to_owned(),
            Value::Boolean(b) => b.to_string(),
            Value::Number(n) => n.normalize().to_string(),
            Value::Text(s) => quote(s),
            Value::List(items) => {
                let inner: Vec<String> = items.iter().map(Value::render).collect();
                format!("[{}]", inner.join(", "))
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Boolean(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

/// Double-quotes `s`, escaping backslashes, quotes and control characters.
pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub(crate) fn decimal_to_json(n: &Decimal) -> serde_json::Number {
    let normalized = n.normalize();
    if normalized.scale() == 0 {
        if let Ok(i) = i64::try_from(normalized.mantissa()) {
            return serde_json::Number::from(i);
        }
    }
    let f: f64 = normalized.to_string().parse().unwrap_or(0.0);
    serde_json::Number::from_f64(f).unwrap_or_else(|| serde_json::Number::from(0))
}

pub(crate) fn decimal_from_json(n: &serde_json::Number) -> Option<Decimal> {
    let text = n.to_string();
    text.parse::<Decimal>()
        .ok()
        .or_else(|| Decimal::from_scientific(&text).ok())
}

impl Value {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Boolean(b) => serde_json::Value::Bool(*b),
            Value::Number(n) => serde_json::Value::Number(decimal_to_json(n)),
            Value::Text(s) => serde_json::Value::String(s.clone()),
            Value::List(items) => serde_json::Value::Array(items.iter().map(Value::to_json).collect()),
        }
    }

    pub fn from_json(json: &serde_json::Value) -> Result<Value, String> {
        Ok(match json {
            serde_json::Value::Null => Value::Null,
            serde_json::Value::Bool(b) => Value::Boolean(*b),
            serde_json::Value::Number(n) => {
                Value::Number(decimal_from_json(n).ok_or_else(|| format!("number {n} out of range"))?)
            }
            serde_json::Value::String(s) => Value::Text(s.clone()),
            serde_json::Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    if item.is_array() {
                        return Err("lists cannot contain lists".to_owned());
                    }
                    out.push(Value::from_json(item)?);
                }
                Value::List(out)
            }
            serde_json::Value::Object(_) => return Err("objects are not values".to_owned()),
        })
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Null => serializer.serialize_none(),
            Value::Boolean(b) => serializer.serialize_bool(*b),
            Value::Number(n) => decimal_to_json(n).serialize(serializer),
            Value::Text(s) => serializer.serialize_str(s),
            Value::List(items) => {
                let mut seq = serializer.serialize_seq(Some(items.len()))?;
                for item in items {
                    seq.serialize_element(item)?;
                }
                seq.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ValueVisitor {
            nested: bool,
        }

        impl<'de> Visitor<'de> for ValueVisitor {
            type Value = Value;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("null, boolean, number, string or a flat list of those")
            }

            fn visit_unit<E>(self) -> Result<Value, E> {
                Ok(Value::Null)
            }

            fn visit_none<E>(self) -> Result<Value, E> {
                Ok(Value::Null)
            }

            fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<Value, D::Error> {
                d.deserialize_any(self)
            }

            fn visit_bool<E>(self, v: bool) -> Result<Value, E> {
                Ok(Value::Boolean(v))
            }

            fn visit_i64<E>(self, v: i64) -> Result<Value, E> {
                Ok(Value::Number(Decimal::from(v)))
            }

            fn visit_u64<E>(self, v: u64) -> Result<Value, E> {
                Ok(Value::Number(Decimal::from(v)))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Value, E> {
                let number = serde_json::Number::from_f64(v).ok_or_else(|| E::custom("non-finite number"))?;
                decimal_from_json(&number)
                    .map(Value::Number)
                    .ok_or_else(|| E::custom("number out of decimal range"))
            }

            fn visit_str<E>(self, v: &str) -> Result<Value, E> {
                Ok(Value::Text(v.to_owned()))
            }

            fn visit_string<E>(self, v: String) -> Result<Value, E> {
                Ok(Value::Text(v))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Value, A::Error> {
                if self.nested {
                    return Err(de::Error::custom("lists cannot contain lists"));
                }
                let mut items = Vec::new();
                while let Some(item) = seq.next_element_seed(NestedSeed)? {
                    items.push(item);
                }
                Ok(Value::List(items))
            }
        }

        struct NestedSeed;

        impl<'de> de::DeserializeSeed<'de> for NestedSeed {
            type Value = Value;

            fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<Value, D::Error> {
                d.deserialize_any(ValueVisitor { nested: true })
            }
        }

        deserializer.deserialize_any(ValueVisitor { nested: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_compare_exactly() {
        let a: Decimal = "600.0".parse().unwrap();
        let b: Decimal = "600".parse().unwrap();
        assert_eq!(Value::Number(a), Value::Number(b));
        let c: Decimal = "0.1".parse().unwrap();
        let d: Decimal = "0.2".parse().unwrap();
        let e: Decimal = "0.3".parse().unwrap();
        assert_eq!(c + d, e);
    }

    #[test]
    fn nested_lists_are_rejected() {
        assert!(Value::list(vec![Value::List(vec![])]).is_err());
        assert!(serde_json::from_str::<Value>("[[1]]").is_err());
        assert_eq!(
            serde_json::from_str::<Value>("[1, \"a\", null]").unwrap(),
            Value::List(vec![Value::number(1), Value::text("a"), Value::Null])
        );
    }

    #[test]
    fn json_numbers_keep_their_literal() {
        let v: Value = serde_json::from_str("2.5").unwrap();
        assert_eq!(v, Value::Number("2.5".parse().unwrap()));
        assert_eq!(serde_json::to_string(&v).unwrap(), "2.5");
        assert_eq!(serde_json::to_string(&Value::number(3)).unwrap(), "3");
    }

    #[test]
    fn render_escapes_quotes() {
        assert_eq!(Value::text("a \"b\"").render(), r#""a \"b\"""#);
        assert_eq!(Value::Number("2.50".parse().unwrap()).render(), "2.5");
    }

    #[test]
    fn type_refs() {
        assert_eq!(ValueType::from_type_ref("feel:boolean"), Some(ValueType::Boolean));
        assert_eq!(ValueType::from_type_ref("integer"), Some(ValueType::Number));
        assert_eq!(ValueType::from_type_ref("date"), None);
    }
}
