use crate::tmk::{Action, ArithOp, CmpOp, Expression, Value, WorldState};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("slot `{0}` is missing from the world state")]
    MissingSlot(String),
    #[error("type mismatch in `{op}`: expected {expected}, found {found}")]
    TypeMismatch { op: String, expected: &'static str, found: String },
    #[error("integer overflow evaluating `{0}`")]
    Overflow(String),
}

fn describe(v: &Value) -> String {
    match v {
        Value::Int(n) => format!("integer {n}"),
        Value::Bool(b) => format!("boolean {b}"),
        Value::Sym(s) => format!("enum symbol {s}"),
    }
}

fn int(op: &str, v: Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(n) => Ok(n),
        other => Err(EvalError::TypeMismatch { op: op.into(), expected: "integer", found: describe(&other) }),
    }
}

fn boolean(op: &str, v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::TypeMismatch { op: op.into(), expected: "boolean", found: describe(&other) }),
    }
}

/// Evaluates `expr` against `ws`. `and`/`or` short-circuit left to right.
pub fn eval_expression(expr: &Expression, ws: &WorldState) -> Result<Value, EvalError> {
    match expr {
        Expression::Int(n) => Ok(Value::Int(*n)),
        Expression::Bool(b) => Ok(Value::Bool(*b)),
        Expression::Enum(s) => Ok(Value::Sym(s.clone())),
        Expression::Slot(s) => ws.get(s).cloned().ok_or_else(|| EvalError::MissingSlot(s.clone())),
        Expression::Arith(op, a, b) => {
            let x = int(op.symbol(), eval_expression(a, ws)?)?;
            let y = int(op.symbol(), eval_expression(b, ws)?)?;
            let r = match op {
                ArithOp::Add => x.checked_add(y),
                ArithOp::Sub => x.checked_sub(y),
            };
            r.map(Value::Int).ok_or_else(|| EvalError::Overflow(expr.to_string()))
        }
        Expression::Cmp(op, a, b) => {
            let (x, y) = (eval_expression(a, ws)?, eval_expression(b, ws)?);
            let holds = if op.is_equality() {
                if x.kind() != y.kind() {
                    return Err(EvalError::TypeMismatch {
                        op: op.symbol().into(),
                        expected: "operands of the same kind",
                        found: format!("{} and {}", describe(&x), describe(&y)),
                    });
                }
                (x == y) == (*op == CmpOp::Eq)
            } else {
                let (x, y) = (int(op.symbol(), x)?, int(op.symbol(), y)?);
                match op {
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                    CmpOp::Eq | CmpOp::Ne => unreachable!(),
                }
            };
            Ok(Value::Bool(holds))
        }
        Expression::And(xs) => {
            for x in xs {
                if !boolean("and", eval_expression(x, ws)?)? {
                    return Ok(Value::Bool(false));
                }
            }
            Ok(Value::Bool(true))
        }
        Expression::Or(xs) => {
            for x in xs {
                if boolean("or", eval_expression(x, ws)?)? {
                    return Ok(Value::Bool(true));
                }
            }
            Ok(Value::Bool(false))
        }
        Expression::Not(x) => Ok(Value::Bool(!boolean("not", eval_expression(x, ws)?)?)),
    }
}

/// Evaluates `expr` and requires a boolean result.
pub fn eval_condition(expr: &Expression, ws: &WorldState) -> Result<bool, EvalError> {
    boolean("condition", eval_expression(expr, ws)?)
}

/// Simultaneous assignment: every right-hand side sees the original `ws`.
pub fn apply_actions(actions: &[Action], ws: &WorldState) -> Result<WorldState, EvalError> {
    let values = actions
        .iter()
        .map(|a| eval_expression(&a.expression, ws).map(|v| (a.slot.clone(), v)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut next = ws.clone();
    for (slot, v) in values {
        next.insert(slot, v);
    }
    Ok(next)
}
