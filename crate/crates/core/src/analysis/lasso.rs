//! Direct evaluation of LTL on ultimately periodic words.
//!
//! Each subformula is evaluated at every position of the lasso; temporal
//! operators are computed as fixed points over the successor function, which
//! wraps from the last position back to the loop start. This is independent
//! of the automaton construction and serves as a cross-check for it.

use super::buchi::PropTable;
use super::formula::{desugar_scope, Formula};

/// Truth of `f` at position 0 of `word[..loop_start] (word[loop_start..])^ω`.
/// Letters are indexed by `table`; propositions missing from it are false.
pub fn eval_lasso(f: &Formula, table: &PropTable, word: &[Vec<bool>], loop_start: usize) -> bool {
    assert!(loop_start < word.len(), "loop start outside the word");
    let f = desugar_scope(f);
    eval(&f, table, word, loop_start)[0]
}

fn eval(f: &Formula, t: &PropTable, w: &[Vec<bool>], ls: usize) -> Vec<bool> {
    let n = w.len();
    let next = |i: usize| if i + 1 < n { i + 1 } else { ls };
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Prop(p) => match t.props.iter().position(|q| q == p) {
            Some(k) => w.iter().map(|l| l[k]).collect(),
            None => vec![false; n],
        },
        Formula::Not(a) => eval(a, t, w, ls).into_iter().map(|x| !x).collect(),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            let (x, y) = (eval(a, t, w, ls), eval(b, t, w, ls));
            (0..n)
                .map(|i| match f {
                    Formula::And(..) => x[i] && y[i],
                    Formula::Or(..) => x[i] || y[i],
                    _ => !x[i] || y[i],
                })
                .collect()
        }
        Formula::Always(a) => {
            let x = eval(a, t, w, ls);
            fixpoint(n, true, |v, i| x[i] && v[next(i)])
        }
        Formula::Eventually(a) => {
            let x = eval(a, t, w, ls);
            fixpoint(n, false, |v, i| x[i] || v[next(i)])
        }
        Formula::Until(a, b) => {
            let (x, y) = (eval(a, t, w, ls), eval(b, t, w, ls));
            fixpoint(n, false, |v, i| y[i] || (x[i] && v[next(i)]))
        }
        Formula::Scope(..) => unreachable!("scopes are desugared first"),
    }
}

/// Greatest (`init = true`) or least (`init = false`) fixed point of the
/// position-wise update `step`.
fn fixpoint(n: usize, init: bool, step: impl Fn(&[bool], usize) -> bool) -> Vec<bool> {
    let mut v = vec![init; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let x = step(&v, i);
            if x != v[i] {
                v[i] = x;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::prop::Proposition;
    use crate::model::ActorPath;

    fn setup() -> (PropTable, Formula, Formula) {
        let mk = |l: &str| Proposition::Loc {
            actor: ActorPath::root("A"),
            location: l.into(),
        };
        let mut t = PropTable::default();
        t.index(&mk("p"));
        t.index(&mk("q"));
        (t, Formula::Prop(mk("p")), Formula::Prop(mk("q")))
    }

    #[test]
    fn basic_operators() {
        let (t, p, q) = setup();
        let w = vec![vec![true, false], vec![false, true], vec![false, false]];
        assert!(eval_lasso(&p, &t, &w, 2));
        assert!(!eval_lasso(&q, &t, &w, 2));
        assert!(eval_lasso(&Formula::until(p.clone(), q.clone()), &t, &w, 2));
        assert!(eval_lasso(
            &Formula::eventually(Formula::always(Formula::not(q.clone()))),
            &t,
            &w,
            2
        ));
        assert!(!eval_lasso(
            &Formula::always(Formula::eventually(q.clone())),
            &t,
            &w,
            2
        ));
        assert!(eval_lasso(
            &Formula::always(Formula::eventually(q)),
            &t,
            &w,
            0
        ));
        assert!(!eval_lasso(&Formula::always(p), &t, &w, 0));
    }
}
