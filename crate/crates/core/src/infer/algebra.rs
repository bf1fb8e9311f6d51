//! Potential algebra: product, sum-out and evidence restriction.
//!
//! None of these assume nonnegative entries, so generalized potentials with
//! negative values cancel correctly under marginalization.

use crate::model::{advance, strides, table_len, Factor, VarId};

use super::InferError;

/// Scope and domain sizes of the product of `a` and `b`: `a`'s variables
/// first, then those of `b` not already present.
pub fn product_scope(a: &Factor, b: &Factor) -> Result<(Vec<VarId>, Vec<usize>), InferError> {
    let mut scope = a.scope().to_vec();
    let mut cards = a.cards().to_vec();
    for (&v, &c) in b.scope().iter().zip(b.cards()) {
        match a.card_of(v) {
            Some(ca) if ca != c => {
                return Err(InferError::DomainMismatch { variable: v, left: ca, right: c });
            }
            Some(_) => {}
            None => {
                scope.push(v);
                cards.push(c);
            }
        }
    }
    Ok((scope, cards))
}

/// Pointwise product over the union of both scopes.
///
/// Costs one scalar multiplication per output entry.
pub fn multiply(a: &Factor, b: &Factor) -> Result<Factor, InferError> {
    let (scope, cards) = product_scope(a, b)?;
    let len = table_len(&cards)?;
    let sa = embedded_strides(a, &scope);
    let sb = embedded_strides(b, &scope);

    let mut values = Vec::with_capacity(len);
    let mut asg = vec![0usize; cards.len()];
    let (mut ia, mut ib) = (0usize, 0usize);
    let (av, bv) = (a.values(), b.values());
    for _ in 0..len {
        values.push(av[ia] * bv[ib]);
        // odometer step with incremental offsets
        for k in (0..asg.len()).rev() {
            asg[k] += 1;
            ia += sa[k];
            ib += sb[k];
            if asg[k] < cards[k] {
                break;
            }
            ia -= sa[k] * cards[k];
            ib -= sb[k] * cards[k];
            asg[k] = 0;
        }
    }
    Ok(Factor::new(scope, cards, values)?)
}

/// Sums `v` out of `f`.
pub fn marginalize(f: &Factor, v: VarId) -> Result<Factor, InferError> {
    let axis = f.axis_of(v).ok_or(InferError::NotInScope(v))?;
    let mut scope = f.scope().to_vec();
    let mut cards = f.cards().to_vec();
    scope.remove(axis);
    cards.remove(axis);

    let src = strides(f.cards());
    let card = f.cards()[axis];
    let step = src[axis];
    let mut out_strides_in_src: Vec<usize> = src.clone();
    out_strides_in_src.remove(axis);

    let len = table_len(&cards)?;
    let mut values = Vec::with_capacity(len);
    let mut asg = vec![0usize; cards.len()];
    let fv = f.values();
    for _ in 0..len {
        let base: usize = asg.iter().zip(&out_strides_in_src).map(|(s, st)| s * st).sum();
        let mut acc = 0.0;
        for k in 0..card {
            acc += fv[base + k * step];
        }
        values.push(acc);
        advance(&mut asg, &cards);
    }
    Ok(Factor::new(scope, cards, values)?)
}

/// The slice of `f` where `v` takes `state`; `v` leaves the scope.
pub fn restrict(f: &Factor, v: VarId, state: usize) -> Result<Factor, InferError> {
    let axis = f.axis_of(v).ok_or(InferError::NotInScope(v))?;
    let card = f.cards()[axis];
    if state >= card {
        return Err(InferError::InvalidState { variable: v, state, card });
    }
    let mut scope = f.scope().to_vec();
    let mut cards = f.cards().to_vec();
    scope.remove(axis);
    cards.remove(axis);
    let mut src = strides(f.cards());
    let offset = state * src[axis];
    src.remove(axis);
    let fv = f.values();
    Ok(Factor::from_fn(scope, cards, |asg| {
        let off: usize = asg.iter().zip(&src).map(|(s, st)| s * st).sum();
        fv[offset + off]
    })?)
}

/// Strides of `f`'s layout expressed along the axes of `scope`; zero for
/// axes `f` does not mention.
fn embedded_strides(f: &Factor, scope: &[VarId]) -> Vec<usize> {
    let own = strides(f.cards());
    scope.iter().map(|v| f.axis_of(*v).map_or(0, |a| own[a])).collect()
}
