use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::actor::PortStatus;
use super::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryOp {
    And,
    Or,
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
        }
    }
}

/// Guard and action expressions of FSM transitions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expression {
    Lit(Value),
    Var(String),
    IsPresent(String),
    PortValue(String),
    Unary(UnaryOp, Box<Expression>),
    Binary(BinaryOp, Box<Expression>, Box<Expression>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound identifier `{0}`")]
    UnboundIdentifier(String),
    #[error("type mismatch: `{op}` cannot be applied to {operands}")]
    TypeMismatch { op: String, operands: String },
    #[error("read of value on absent port `{0}`")]
    AbsentPortRead(String),
    #[error("read of unknown port `{0}` (guard was not evaluable)")]
    UnknownPortRead(String),
    #[error("no such port `{0}`")]
    NoSuchPort(String),
}

/// Read-only evaluation environment.
pub struct Env<'a> {
    pub vars: &'a BTreeMap<String, Value>,
    pub params: &'a BTreeMap<String, Value>,
    pub ports: &'a BTreeMap<String, PortStatus>,
}

impl Expression {
    pub fn lit(v: impl Into<Value>) -> Self {
        Expression::Lit(v.into())
    }

    pub fn var(name: &str) -> Self {
        Expression::Var(name.to_string())
    }

    pub fn is_present(port: &str) -> Self {
        Expression::IsPresent(port.to_string())
    }

    pub fn port_value(port: &str) -> Self {
        Expression::PortValue(port.to_string())
    }

    pub fn bin(op: BinaryOp, l: Expression, r: Expression) -> Self {
        Expression::Binary(op, Box::new(l), Box::new(r))
    }

    /// Port names read through `isPresent` or `value`.
    pub fn referenced_ports(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_ports(&mut out);
        out
    }

    fn collect_ports<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expression::IsPresent(p) | Expression::PortValue(p) => {
                out.insert(p.as_str());
            }
            Expression::Unary(_, e) => e.collect_ports(out),
            Expression::Binary(_, l, r) => {
                l.collect_ports(out);
                r.collect_ports(out);
            }
            Expression::Lit(_) | Expression::Var(_) => {}
        }
    }

    pub fn referenced_vars(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expression::Var(v) => {
                out.insert(v.as_str());
            }
            Expression::Unary(_, e) => e.collect_vars(out),
            Expression::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            _ => {}
        }
    }

    /// Strict evaluation; variables shadow parameters.
    pub fn eval(&self, env: &Env<'_>) -> Result<Value, EvalError> {
        match self {
            Expression::Lit(v) => Ok(v.clone()),
            Expression::Var(name) => env
                .vars
                .get(name)
                .or_else(|| env.params.get(name))
                .cloned()
                .ok_or_else(|| EvalError::UnboundIdentifier(name.clone())),
            Expression::IsPresent(p) => match env.ports.get(p) {
                None => Err(EvalError::NoSuchPort(p.clone())),
                Some(PortStatus::Unknown) => Err(EvalError::UnknownPortRead(p.clone())),
                Some(s) => Ok(Value::Bool(s.is_present())),
            },
            Expression::PortValue(p) => match env.ports.get(p) {
                None => Err(EvalError::NoSuchPort(p.clone())),
                Some(PortStatus::Unknown) => Err(EvalError::UnknownPortRead(p.clone())),
                Some(PortStatus::Absent) => Err(EvalError::AbsentPortRead(p.clone())),
                Some(PortStatus::Present(v)) => Ok(v.clone()),
            },
            Expression::Unary(op, e) => {
                let v = e.eval(env)?;
                match (op, v) {
                    (UnaryOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    (UnaryOp::Neg, Value::Int(i)) => Ok(Value::Int(-i)),
                    (op, v) => Err(EvalError::TypeMismatch {
                        op: format!("{op:?}"),
                        operands: v.type_name().to_string(),
                    }),
                }
            }
            Expression::Binary(op, l, r) => {
                let lv = l.eval(env)?;
                let rv = r.eval(env)?;
                apply_binary(*op, lv, rv)
            }
        }
    }
}

fn apply_binary(op: BinaryOp, l: Value, r: Value) -> Result<Value, EvalError> {
    use BinaryOp::*;
    let mismatch = |l: &Value, r: &Value| EvalError::TypeMismatch {
        op: op.symbol().to_string(),
        operands: format!("{} and {}", l.type_name(), r.type_name()),
    };
    let v = match (op, &l, &r) {
        (And, Value::Bool(a), Value::Bool(b)) => Value::Bool(*a && *b),
        (Or, Value::Bool(a), Value::Bool(b)) => Value::Bool(*a || *b),
        (Add, Value::Int(a), Value::Int(b)) => Value::Int(a + b),
        (Sub, Value::Int(a), Value::Int(b)) => Value::Int(a - b),
        (Mul, Value::Int(a), Value::Int(b)) => Value::Int(a * b),
        (Add, Value::Time(a), Value::Time(b)) => Value::Time(a + b),
        (Lt | Le | Gt | Ge, Value::Int(_), Value::Int(_))
        | (Lt | Le | Gt | Ge, Value::Time(_), Value::Time(_)) => {
            let ord = l.cmp(&r);
            Value::Bool(match op {
                Lt => ord.is_lt(),
                Le => ord.is_le(),
                Gt => ord.is_gt(),
                _ => ord.is_ge(),
            })
        }
        (Eq | Ne, _, _) if std::mem::discriminant(&l) == std::mem::discriminant(&r) => {
            Value::Bool((l == r) == (op == Eq))
        }
        _ => return Err(mismatch(&l, &r)),
    };
    Ok(v)
}

/// True iff every port referenced by `expr` has known status.
pub fn guard_evaluable(expr: &Expression, ports: &BTreeMap<String, PortStatus>) -> bool {
    expr.referenced_ports()
        .into_iter()
        .all(|p| ports.get(p).is_some_and(|s| s.is_known()))
}

fn precedence(e: &Expression) -> u8 {
    match e {
        Expression::Binary(op, _, _) => match op {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Gt
            | BinaryOp::Ge
            | BinaryOp::Eq
            | BinaryOp::Ne => 3,
            BinaryOp::Add | BinaryOp::Sub => 4,
            BinaryOp::Mul => 5,
        },
        _ => 9,
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Lit(v) => write!(f, "{v}"),
            Expression::Var(v) => write!(f, "{v}"),
            Expression::IsPresent(p) => write!(f, "isPresent({p})"),
            Expression::PortValue(p) => write!(f, "value({p})"),
            Expression::Unary(UnaryOp::Not, e) => {
                if precedence(e) < 9 {
                    write!(f, "!({e})")
                } else {
                    write!(f, "!{e}")
                }
            }
            Expression::Unary(UnaryOp::Neg, e) => {
                if precedence(e) < 9 {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            Expression::Binary(op, l, r) => {
                let wrap = |e: &Expression, f: &mut fmt::Formatter<'_>| {
                    if precedence(e) < 9 {
                        write!(f, "({e})")
                    } else {
                        write!(f, "{e}")
                    }
                };
                wrap(l, f)?;
                write!(f, " {} ", op.symbol())?;
                wrap(r, f)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ports(entries: &[(&str, PortStatus)]) -> BTreeMap<String, PortStatus> {
        entries
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    fn vars(entries: &[(&str, i64)]) -> BTreeMap<String, Value> {
        entries
            .iter()
            .map(|(k, v)| (k.to_string(), Value::int(*v)))
            .collect()
    }

    fn car_light_guard() -> Expression {
        Expression::bin(
            BinaryOp::And,
            Expression::is_present("Sec"),
            Expression::bin(BinaryOp::Lt, Expression::var("count"), Expression::lit(2)),
        )
    }

    #[test]
    fn car_light_guard_holds() {
        let p = ports(&[("Sec", PortStatus::Present(Value::int(1)))]);
        let v = vars(&[("count", 1)]);
        let empty = BTreeMap::new();
        let env = Env {
            vars: &v,
            params: &empty,
            ports: &p,
        };
        assert_eq!(car_light_guard().eval(&env), Ok(Value::Bool(true)));
    }

    #[test]
    fn literal_and_increment() {
        let empty_p = BTreeMap::new();
        let v = vars(&[("count", 1)]);
        let empty = BTreeMap::new();
        let env = Env {
            vars: &v,
            params: &empty,
            ports: &empty_p,
        };
        assert_eq!(Expression::lit(0).eval(&env), Ok(Value::int(0)));
        let inc = Expression::bin(BinaryOp::Add, Expression::var("count"), Expression::lit(1));
        assert_eq!(inc.eval(&env), Ok(Value::int(2)));
    }

    #[test]
    fn vars_shadow_params() {
        let v = vars(&[("x", 1)]);
        let p = vars(&[("x", 7), ("y", 3)]);
        let no_ports = BTreeMap::new();
        let env = Env {
            vars: &v,
            params: &p,
            ports: &no_ports,
        };
        assert_eq!(Expression::var("x").eval(&env), Ok(Value::int(1)));
        assert_eq!(Expression::var("y").eval(&env), Ok(Value::int(3)));
        assert_eq!(
            Expression::var("z").eval(&env),
            Err(EvalError::UnboundIdentifier("z".into()))
        );
    }

    #[test]
    fn error_cases() {
        let p = ports(&[("a", PortStatus::Absent), ("u", PortStatus::Unknown)]);
        let empty = BTreeMap::new();
        let env = Env {
            vars: &empty,
            params: &empty,
            ports: &p,
        };
        assert_eq!(
            Expression::port_value("a").eval(&env),
            Err(EvalError::AbsentPortRead("a".into()))
        );
        assert_eq!(
            Expression::is_present("u").eval(&env),
            Err(EvalError::UnknownPortRead("u".into()))
        );
        let bad = Expression::bin(BinaryOp::And, Expression::lit(1), Expression::lit(true));
        assert!(matches!(
            bad.eval(&env),
            Err(EvalError::TypeMismatch { .. })
        ));
        // strict: the right operand's error surfaces even though the left is false
        let strict = Expression::bin(
            BinaryOp::And,
            Expression::lit(false),
            Expression::is_present("u"),
        );
        assert!(strict.eval(&env).is_err());
    }

    #[test]
    fn guard_evaluable_cases() {
        let unknown = ports(&[("Sec", PortStatus::Unknown)]);
        assert!(!guard_evaluable(&Expression::is_present("Sec"), &unknown));
        assert!(guard_evaluable(&Expression::lit(true), &unknown));
        let p = ports(&[
            ("Pgo", PortStatus::Absent),
            ("Pstop", PortStatus::Present(Value::int(1))),
        ]);
        let e = Expression::bin(
            BinaryOp::Or,
            Expression::is_present("Pgo"),
            Expression::is_present("Pstop"),
        );
        assert!(guard_evaluable(&e, &p));
        // oracle: brute-force reference collector over the AST
        fn collect(e: &Expression, out: &mut Vec<String>) {
            match e {
                Expression::IsPresent(p) | Expression::PortValue(p) => out.push(p.clone()),
                Expression::Unary(_, e) => collect(e, out),
                Expression::Binary(_, l, r) => {
                    collect(l, out);
                    collect(r, out);
                }
                _ => {}
            }
        }
        let mut refs = Vec::new();
        collect(&e, &mut refs);
        let oracle = refs
            .iter()
            .all(|r| p.get(r).is_some_and(|s| *s != PortStatus::Unknown));
        assert_eq!(oracle, guard_evaluable(&e, &p));
    }

    #[test]
    fn display_parenthesizes_nested() {
        assert_eq!(
            car_light_guard().to_string(),
            "isPresent(Sec) && (count < 2)"
        );
    }
}
