use serde::{Deserialize, Serialize};

use super::{ModelError, VarId};

/// Row-major offset of `assignment` in a table with the given per-axis sizes.
///
/// The last axis varies fastest, so `[2, 3]` with `[1, 0]` lands at 3.
pub fn factor_index(scope_sizes: &[usize], assignment: &[usize]) -> Result<usize, ModelError> {
    if scope_sizes.len() != assignment.len() {
        return Err(ModelError::Assignment(format!(
            "assignment has {} entries for a scope of {}",
            assignment.len(),
            scope_sizes.len()
        )));
    }
    let mut offset = 0usize;
    for (axis, (&size, &state)) in scope_sizes.iter().zip(assignment).enumerate() {
        if state >= size {
            return Err(ModelError::Assignment(format!(
                "state {state} out of range for axis {axis} of size {size}"
            )));
        }
        offset = offset * size + state;
    }
    Ok(offset)
}

/// Per-axis strides for the row-major, last-fastest layout.
pub fn strides(cards: &[usize]) -> Vec<usize> {
    let mut out = vec![1usize; cards.len()];
    for k in (0..cards.len().saturating_sub(1)).rev() {
        out[k] = out[k + 1] * cards[k + 1];
    }
    out
}

/// A real-valued table over an ordered scope of variables.
///
/// Entries may be negative or exceed one; nothing here assumes a
/// normalized distribution. `cards[k]` is the domain size of `scope[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<VarId>, cards: Vec<usize>, values: Vec<f64>) -> Result<Self, ModelError> {
        if scope.len() != cards.len() {
            return Err(ModelError::Structure(format!(
                "factor scope has {} variables but {} domain sizes",
                scope.len(),
                cards.len()
            )));
        }
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].contains(v) {
                return Err(ModelError::Structure(format!("variable {v} repeated in factor scope")));
            }
        }
        if cards.contains(&0) {
            return Err(ModelError::Structure("factor axis with empty domain".into()));
        }
        let expected = table_len(&cards)?;
        if values.len() != expected {
            return Err(ModelError::Structure(format!(
                "factor over {} entries given {} values",
                expected,
                values.len()
            )));
        }
        Ok(Factor { scope, cards, values })
    }

    /// A scope-free constant.
    pub fn scalar(value: f64) -> Self {
        Factor { scope: Vec::new(), cards: Vec::new(), values: vec![value] }
    }

    /// A factor filled with a single value.
    pub fn constant(scope: Vec<VarId>, cards: Vec<usize>, value: f64) -> Result<Self, ModelError> {
        let len = table_len(&cards)?;
        Factor::new(scope, cards, vec![value; len])
    }

    /// Builds a factor by evaluating `f` at every assignment, in layout order.
    pub fn from_fn(
        scope: Vec<VarId>,
        cards: Vec<usize>,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self, ModelError> {
        let len = table_len(&cards)?;
        let mut values = Vec::with_capacity(len);
        let mut assignment = vec![0usize; cards.len()];
        for _ in 0..len {
            values.push(f(&assignment));
            advance(&mut assignment, &cards);
        }
        Factor::new(scope, cards, values)
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.scope.contains(&v)
    }

    pub fn axis_of(&self, v: VarId) -> Option<usize> {
        self.scope.iter().position(|&s| s == v)
    }

    pub fn card_of(&self, v: VarId) -> Option<usize> {
        self.axis_of(v).map(|a| self.cards[a])
    }

    pub fn get(&self, assignment: &[usize]) -> Result<f64, ModelError> {
        Ok(self.values[factor_index(&self.cards, assignment)?])
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The same table with its axes permuted into `order`.
    pub fn reorder(&self, order: &[VarId]) -> Result<Factor, ModelError> {
        if order.len() != self.scope.len() || order.iter().any(|v| !self.contains(*v)) {
            return Err(ModelError::Structure(format!(
                "cannot reorder scope {:?} into {:?}",
                self.scope, order
            )));
        }
        let src_strides = strides(&self.cards);
        let axes: Vec<usize> = order.iter().map(|v| self.axis_of(*v).unwrap()).collect();
        let cards: Vec<usize> = axes.iter().map(|&a| self.cards[a]).collect();
        let mapped: Vec<usize> = axes.iter().map(|&a| src_strides[a]).collect();
        Factor::from_fn(order.to_vec(), cards, |asg| {
            let off: usize = asg.iter().zip(&mapped).map(|(s, st)| s * st).sum();
            self.values[off]
        })
    }

    /// Largest absolute entry-wise difference; `None` when scopes differ.
    pub fn max_abs_diff(&self, other: &Factor) -> Option<f64> {
        let other = if self.scope == other.scope {
            std::borrow::Cow::Borrowed(other)
        } else {
            std::borrow::Cow::Owned(other.reorder(&self.scope).ok()?)
        };
        if self.cards != other.cards {
            return None;
        }
        Some(
            self.values
                .iter()
                .zip(other.values.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
        )
    }
}

/// Product of domain sizes, refusing to overflow.
pub fn table_len(cards: &[usize]) -> Result<usize, ModelError> {
    cards.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c)).ok_or_else(|| {
        ModelError::Structure(format!("table over domains {cards:?} overflows the address space"))
    })
}

/// Odometer step in layout order (last axis fastest). Wraps to all zeros.
pub fn advance(assignment: &mut [usize], cards: &[usize]) {
    for k in (0..assignment.len()).rev() {
        assignment[k] += 1;
        if assignment[k] < cards[k] {
            return;
        }
        assignment[k] = 0;
    }
}
