use std::collections::BTreeSet;
use std::fmt;

use super::prop::Proposition;
use crate::model::ActorPath;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Prop(Proposition),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Always(Box<Formula>),
    Eventually(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    /// Propositions inside are relative to the actor.
    Scope(ActorPath, Box<Formula>),
}

impl Formula {
    pub fn prop(p: Proposition) -> Self {
        Formula::Prop(p)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn always(f: Formula) -> Self {
        Formula::Always(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn scope(actor: ActorPath, f: Formula) -> Self {
        Formula::Scope(actor, Box::new(f))
    }

    /// Distinct propositions, in order.
    pub fn propositions(&self) -> BTreeSet<&Proposition> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Prop(p) = f {
                out.insert(p);
            }
        });
        out
    }

    pub fn has_scope(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, Formula::Scope(..)));
        found
    }

    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => {}
            Formula::Not(a)
            | Formula::Always(a)
            | Formula::Eventually(a)
            | Formula::Scope(_, a) => a.visit(f),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }
}

/// Removes every scope by prefixing the scoped actor path onto the
/// propositions below it.
pub fn desugar_scope(f: &Formula) -> Formula {
    desugar(f, None)
}

fn desugar(f: &Formula, prefix: Option<&ActorPath>) -> Formula {
    let d = |g: &Formula| Box::new(desugar(g, prefix));
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Prop(p) => Formula::Prop(match prefix {
            Some(pre) => p.with_prefix(pre),
            None => p.clone(),
        }),
        Formula::Not(a) => Formula::Not(d(a)),
        Formula::And(a, b) => Formula::And(d(a), d(b)),
        Formula::Or(a, b) => Formula::Or(d(a), d(b)),
        Formula::Implies(a, b) => Formula::Implies(d(a), d(b)),
        Formula::Always(a) => Formula::Always(d(a)),
        Formula::Eventually(a) => Formula::Eventually(d(a)),
        Formula::Until(a, b) => Formula::Until(d(a), d(b)),
        Formula::Scope(actor, a) => {
            let inner = match prefix {
                Some(pre) => pre.join(actor),
                None => actor.clone(),
            };
            desugar(a, Some(&inner))
        }
    }
}

/// Fully parenthesized rendering in the input syntax.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("True"),
            Formula::False => f.write_str("False"),
            Formula::Prop(p) => write!(f, "({p})"),
            Formula::Not(a) => write!(f, "~ {a}"),
            Formula::And(a, b) => write!(f, "({a} /\\ {b})"),
            Formula::Or(a, b) => write!(f, "({a} \\/ {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Always(a) => write!(f, "[] {a}"),
            Formula::Eventually(a) => write!(f, "<> {a}"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::Scope(p, a) => write!(f, "{p} : ({a})"),
        }
    }
}
