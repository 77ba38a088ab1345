//! Condition and action expressions.
//!
//! Expressions are stored in files as prefix-notation arrays:
//!
//! ```text
//! 3                                   integer literal
//! true                                boolean literal
//! "left_guards"                       slot reference
//! ["enum", "left"]                    enum symbol literal
//! ["+", a, b]   ["-", a, b]           arithmetic
//! ["=", a, b]   ["!=", a, b]  ["<", a, b]  ["<=", a, b]  [">", a, b]  [">=", a, b]
//! ["and", a, b, ...]  ["or", a, b, ...]  ["not", a]
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value as Json;

use super::model::{ParameterSpec, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "=" | "==" => CmpOp::Eq,
            "!=" | "≠" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" | "≤" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" | "≥" => CmpOp::Ge,
            _ => return None,
        })
    }

    /// Only `=` and `!=` accept non-integer operands.
    pub fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expression {
    Int(i64),
    Bool(bool),
    Enum(String),
    Slot(String),
    Arith(ArithOp, Box<Expression>, Box<Expression>),
    Cmp(CmpOp, Box<Expression>, Box<Expression>),
    And(Vec<Expression>),
    Or(Vec<Expression>),
    Not(Box<Expression>),
}

impl Expression {
    pub fn slot(name: impl Into<String>) -> Self {
        Expression::Slot(name.into())
    }

    pub fn cmp(op: CmpOp, lhs: Expression, rhs: Expression) -> Self {
        Expression::Cmp(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn arith(op: ArithOp, lhs: Expression, rhs: Expression) -> Self {
        Expression::Arith(op, Box::new(lhs), Box::new(rhs))
    }

    /// Every slot name referenced anywhere in the tree, in first-occurrence order.
    pub fn slots(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_slots(&mut out);
        out
    }

    fn collect_slots<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expression::Slot(s) => {
                if !out.contains(&s.as_str()) {
                    out.push(s);
                }
            }
            Expression::Int(_) | Expression::Bool(_) | Expression::Enum(_) => {}
            Expression::Arith(_, a, b) | Expression::Cmp(_, a, b) => {
                a.collect_slots(out);
                b.collect_slots(out);
            }
            Expression::And(xs) | Expression::Or(xs) => xs.iter().for_each(|x| x.collect_slots(out)),
            Expression::Not(x) => x.collect_slots(out),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expression::Int(_) | Expression::Bool(_) | Expression::Enum(_) | Expression::Slot(_) => 1,
            Expression::Arith(_, a, b) | Expression::Cmp(_, a, b) => 1 + a.depth().max(b.depth()),
            Expression::And(xs) | Expression::Or(xs) => 1 + xs.iter().map(Self::depth).max().unwrap_or(0),
            Expression::Not(x) => 1 + x.depth(),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Expression::Int(n) => Json::from(*n),
            Expression::Bool(b) => Json::Bool(*b),
            Expression::Enum(s) => Json::Array(vec!["enum".into(), s.as_str().into()]),
            Expression::Slot(s) => Json::String(s.clone()),
            Expression::Arith(op, a, b) => Json::Array(vec![op.symbol().into(), a.to_json(), b.to_json()]),
            Expression::Cmp(op, a, b) => Json::Array(vec![op.symbol().into(), a.to_json(), b.to_json()]),
            Expression::And(xs) => connective("and", xs),
            Expression::Or(xs) => connective("or", xs),
            Expression::Not(x) => Json::Array(vec!["not".into(), x.to_json()]),
        }
    }

    pub fn from_json(value: &Json) -> Result<Self, ExprSyntaxError> {
        match value {
            Json::Bool(b) => Ok(Expression::Bool(*b)),
            Json::Number(n) => {
                n.as_i64().map(Expression::Int).ok_or_else(|| ExprSyntaxError(format!("{n} is not a 64-bit integer")))
            }
            Json::String(s) if s.is_empty() => Err(ExprSyntaxError("empty slot name".into())),
            Json::String(s) => Ok(Expression::Slot(s.clone())),
            Json::Array(items) => {
                let (head, args) =
                    items.split_first().ok_or_else(|| ExprSyntaxError("empty expression array".into()))?;
                let op =
                    head.as_str().ok_or_else(|| ExprSyntaxError(format!("operator must be a string, got {head}")))?;
                parse_compound(op, args)
            }
            Json::Null | Json::Object(_) => Err(ExprSyntaxError(format!("unsupported expression node {value}"))),
        }
    }
}

fn connective(name: &str, xs: &[Expression]) -> Json {
    let mut v = Vec::with_capacity(xs.len() + 1);
    v.push(Json::from(name));
    v.extend(xs.iter().map(Expression::to_json));
    Json::Array(v)
}

fn parse_compound(op: &str, args: &[Json]) -> Result<Expression, ExprSyntaxError> {
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(ExprSyntaxError(format!("`{op}` takes {n} operand(s), got {}", args.len())))
        }
    };
    match op {
        "enum" => {
            arity(1)?;
            match &args[0] {
                Json::String(s) if !s.is_empty() => Ok(Expression::Enum(s.clone())),
                other => Err(ExprSyntaxError(format!("enum literal must be a non-empty string, got {other}"))),
            }
        }
        "+" | "-" => {
            arity(2)?;
            let op = if op == "+" { ArithOp::Add } else { ArithOp::Sub };
            Ok(Expression::arith(op, Expression::from_json(&args[0])?, Expression::from_json(&args[1])?))
        }
        "and" | "or" => {
            if args.is_empty() {
                return Err(ExprSyntaxError(format!("`{op}` needs at least one operand")));
            }
            let xs = args.iter().map(Expression::from_json).collect::<Result<Vec<_>, _>>()?;
            Ok(if op == "and" { Expression::And(xs) } else { Expression::Or(xs) })
        }
        "not" => {
            arity(1)?;
            Ok(Expression::Not(Box::new(Expression::from_json(&args[0])?)))
        }
        _ => match CmpOp::from_symbol(op) {
            Some(cmp) => {
                arity(2)?;
                Ok(Expression::cmp(cmp, Expression::from_json(&args[0])?, Expression::from_json(&args[1])?))
            }
            None => Err(ExprSyntaxError(format!("unknown operator `{op}`"))),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed expression: {0}")]
pub struct ExprSyntaxError(pub String);

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let json = Json::deserialize(deserializer)?;
        Expression::from_json(&json).map_err(D::Error::custom)
    }
}

/// Infix rendering used in documents, prompts and trace summaries.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(f: &mut fmt::Formatter<'_>, e: &Expression) -> fmt::Result {
            match e {
                Expression::Arith(..) | Expression::Cmp(..) | Expression::And(_) | Expression::Or(_) => {
                    write!(f, "({e})")
                }
                _ => write!(f, "{e}"),
            }
        }
        match self {
            Expression::Int(n) => write!(f, "{n}"),
            Expression::Bool(b) => write!(f, "{b}"),
            Expression::Enum(s) => write!(f, "{s}"),
            Expression::Slot(s) => write!(f, "{s}"),
            Expression::Arith(op, a, b) => {
                operand(f, a)?;
                write!(f, " {} ", op.symbol())?;
                operand(f, b)
            }
            Expression::Cmp(op, a, b) => {
                operand(f, a)?;
                write!(f, " {} ", op.symbol())?;
                operand(f, b)
            }
            Expression::And(xs) | Expression::Or(xs) => {
                let word = if matches!(self, Expression::And(_)) { " and " } else { " or " };
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(word)?;
                    }
                    operand(f, x)?;
                }
                Ok(())
            }
            Expression::Not(x) => {
                f.write_str("not ")?;
                operand(f, x)
            }
        }
    }
}

/// Static type of an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprType {
    Integer,
    Boolean,
    /// A declared enum slot, carrying its allowed values.
    Enum(Vec<String>),
    /// A bare enum symbol whose enum is decided by the other operand.
    Symbol(String),
}

impl fmt::Display for ExprType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprType::Integer => f.write_str("integer"),
            ExprType::Boolean => f.write_str("boolean"),
            ExprType::Enum(vals) => write!(f, "enum {{{}}}", vals.join(", ")),
            ExprType::Symbol(s) => write!(f, "enum symbol `{s}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("undeclared slot `{0}`")]
    UndeclaredSlot(String),
    #[error("`{op}` expects {expected} operands, found {found}")]
    Operand { op: String, expected: String, found: String },
    #[error("enum symbol `{symbol}` is not one of {{{allowed}}}")]
    UnknownSymbol { symbol: String, allowed: String },
    #[error("cannot compare {lhs} with {rhs}")]
    Incomparable { lhs: String, rhs: String },
}

/// Slot declarations an expression is checked against.
pub type SlotTypes = BTreeMap<String, ExprType>;

pub fn slot_types<'a>(params: impl IntoIterator<Item = &'a ParameterSpec>) -> SlotTypes {
    params
        .into_iter()
        .map(|p| {
            let ty = match p.value_kind {
                ValueKind::Integer => ExprType::Integer,
                ValueKind::Boolean => ExprType::Boolean,
                ValueKind::Enum => ExprType::Enum(p.enum_values.clone().unwrap_or_default()),
            };
            (p.name.clone(), ty)
        })
        .collect()
}

pub fn type_of(expr: &Expression, slots: &SlotTypes) -> Result<ExprType, TypeError> {
    let operand_err = |op: &str, expected: &str, found: &ExprType| TypeError::Operand {
        op: op.to_string(),
        expected: expected.to_string(),
        found: found.to_string(),
    };
    match expr {
        Expression::Int(_) => Ok(ExprType::Integer),
        Expression::Bool(_) => Ok(ExprType::Boolean),
        Expression::Enum(s) => Ok(ExprType::Symbol(s.clone())),
        Expression::Slot(s) => slots.get(s).cloned().ok_or_else(|| TypeError::UndeclaredSlot(s.clone())),
        Expression::Arith(op, a, b) => {
            for side in [a, b] {
                let t = type_of(side, slots)?;
                if t != ExprType::Integer {
                    return Err(operand_err(op.symbol(), "integer", &t));
                }
            }
            Ok(ExprType::Integer)
        }
        Expression::Cmp(op, a, b) => {
            let (ta, tb) = (type_of(a, slots)?, type_of(b, slots)?);
            if !op.is_equality() {
                for t in [&ta, &tb] {
                    if *t != ExprType::Integer {
                        return Err(operand_err(op.symbol(), "integer", t));
                    }
                }
                return Ok(ExprType::Boolean);
            }
            unify(&ta, &tb)?;
            Ok(ExprType::Boolean)
        }
        Expression::And(xs) | Expression::Or(xs) => {
            let name = if matches!(expr, Expression::And(_)) { "and" } else { "or" };
            for x in xs {
                let t = type_of(x, slots)?;
                if t != ExprType::Boolean {
                    return Err(operand_err(name, "boolean", &t));
                }
            }
            Ok(ExprType::Boolean)
        }
        Expression::Not(x) => {
            let t = type_of(x, slots)?;
            if t != ExprType::Boolean {
                return Err(operand_err("not", "boolean", &t));
            }
            Ok(ExprType::Boolean)
        }
    }
}

/// Checks that a value of type `value` may be stored in / compared with `target`.
pub fn unify(target: &ExprType, value: &ExprType) -> Result<(), TypeError> {
    let symbol_in = |s: &str, allowed: &[String]| {
        if allowed.iter().any(|a| a == s) {
            Ok(())
        } else {
            Err(TypeError::UnknownSymbol { symbol: s.to_string(), allowed: allowed.join(", ") })
        }
    };
    match (target, value) {
        (ExprType::Integer, ExprType::Integer) | (ExprType::Boolean, ExprType::Boolean) => Ok(()),
        (ExprType::Enum(allowed), ExprType::Symbol(s)) | (ExprType::Symbol(s), ExprType::Enum(allowed)) => {
            symbol_in(s, allowed)
        }
        (ExprType::Enum(a), ExprType::Enum(b)) if a == b => Ok(()),
        (ExprType::Symbol(_), ExprType::Symbol(_)) => Ok(()),
        (l, r) => Err(TypeError::Incomparable { lhs: l.to_string(), rhs: r.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn parses_prefix_arrays() {
        let e = Expression::from_json(&json!(["or", ["=", "left_guards", 0], [">=", "left_guards", "left_prisoners"]]))
            .unwrap();
        assert_eq!(e.to_string(), "(left_guards = 0) or (left_guards >= left_prisoners)");
        assert_eq!(e.slots(), vec!["left_guards", "left_prisoners"]);
        assert_eq!(e.depth(), 3);
    }

    #[test]
    fn unicode_operators_normalize() {
        let e = Expression::from_json(&json!(["≠", "a", 1])).unwrap();
        assert_eq!(e.to_json(), json!(["!=", "a", 1]));
    }

    #[test]
    fn rejects_malformed_nodes() {
        for bad in [json!([]), json!(["+", 1]), json!(["xor", true, false]), json!(null), json!(1.5), json!(["and"])] {
            assert!(Expression::from_json(&bad).is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn type_checks_enum_comparison() {
        let mut slots = SlotTypes::new();
        slots.insert("boat".into(), ExprType::Enum(vec!["left".into(), "right".into()]));
        slots.insert("n".into(), ExprType::Integer);
        let ok = Expression::from_json(&json!(["=", "boat", ["enum", "left"]])).unwrap();
        assert_eq!(type_of(&ok, &slots), Ok(ExprType::Boolean));
        let bad_sym = Expression::from_json(&json!(["=", "boat", ["enum", "middle"]])).unwrap();
        assert!(matches!(type_of(&bad_sym, &slots), Err(TypeError::UnknownSymbol { .. })));
        let bad_cmp = Expression::from_json(&json!(["<", "boat", 1])).unwrap();
        assert!(matches!(type_of(&bad_cmp, &slots), Err(TypeError::Operand { .. })));
        let undeclared = Expression::from_json(&json!(["+", "n", "m"])).unwrap();
        assert_eq!(type_of(&undeclared, &slots), Err(TypeError::UndeclaredSlot("m".into())));
    }
}
