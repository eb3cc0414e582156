//! Class / sub-class layout of the augmented points.
//!
//! Points are ordered sub-class-contiguously: the first `sizes[0]` points
//! belong to sub-class 0, the next `sizes[1]` to sub-class 1, and so on.

use std::ops::Range;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubclassStructure {
    classes: usize,
    sizes: Vec<usize>,
    class_of: Vec<usize>,
    offsets: Vec<usize>,
}

impl SubclassStructure {
    pub fn new(classes: usize, sizes: Vec<usize>, class_of: Vec<usize>) -> Result<Self> {
        let k_bar = sizes.len();
        if classes < 2 {
            return Err(Error::InvalidStructure(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        if k_bar < classes {
            return Err(Error::InvalidStructure(format!(
                "sub-class count {k_bar} is below class count {classes}"
            )));
        }
        if class_of.len() != k_bar {
            return Err(Error::DimensionMismatch {
                what: "class_of length vs sub-class count",
                expected: k_bar,
                got: class_of.len(),
            });
        }
        if let Some((s, &size)) = sizes.iter().enumerate().find(|(_, &s)| s < 2) {
            return Err(Error::InvalidStructure(format!(
                "sub-class {s} has size {size}; every sub-class needs at least 2 points"
            )));
        }
        let mut owned = vec![false; classes];
        for (s, &c) in class_of.iter().enumerate() {
            if c >= classes {
                return Err(Error::InvalidStructure(format!(
                    "sub-class {s} maps to class {c}, but there are only {classes} classes"
                )));
            }
            owned[c] = true;
        }
        if let Some(c) = owned.iter().position(|&o| !o) {
            return Err(Error::InvalidStructure(format!(
                "class {c} owns no sub-class"
            )));
        }
        let mut offsets = Vec::with_capacity(k_bar + 1);
        let mut acc = 0;
        offsets.push(0);
        for &s in &sizes {
            acc += s;
            offsets.push(acc);
        }
        Ok(Self {
            classes,
            sizes,
            class_of,
            offsets,
        })
    }

    /// `k_bar` sub-classes of `per_subclass` points each; sub-class `s` belongs
    /// to class `s % classes`.
    pub fn balanced(classes: usize, k_bar: usize, per_subclass: usize) -> Result<Self> {
        Self::new(
            classes,
            vec![per_subclass; k_bar],
            (0..k_bar).map(|s| s % classes).collect(),
        )
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn subclasses(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn class_of(&self) -> &[usize] {
        &self.class_of
    }

    pub fn n(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn n_min(&self) -> usize {
        *self.sizes.iter().min().unwrap()
    }

    pub fn n_max(&self) -> usize {
        *self.sizes.iter().max().unwrap()
    }

    pub fn is_balanced(&self) -> bool {
        self.n_min() == self.n_max()
    }

    /// Index range of the points in sub-class `s`.
    pub fn block(&self, s: usize) -> Range<usize> {
        self.offsets[s]..self.offsets[s + 1]
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.subclasses()).map(move |s| self.block(s))
    }

    /// Sub-class of each point, in point order.
    pub fn point_subclasses(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n());
        for (s, &size) in self.sizes.iter().enumerate() {
            out.extend(std::iter::repeat(s).take(size));
        }
        out
    }

    /// Class of each point, in point order.
    pub fn point_classes(&self) -> Vec<usize> {
        self.point_subclasses()
            .into_iter()
            .map(|s| self.class_of[s])
            .collect()
    }

    /// Sub-classes owned by class `k` (the set Z_k).
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.subclasses())
            .filter(|&s| self.class_of[s] == k)
            .collect()
    }

    pub(crate) fn require_balanced(&self, what: &str) -> Result<()> {
        if self.is_balanced() {
            Ok(())
        } else {
            Err(Error::InvalidStructure(format!(
                "{what} requires balanced sub-classes, got sizes between {} and {}",
                self.n_min(),
                self.n_max()
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_and_blocks() {
        let s = SubclassStructure::new(2, vec![2, 3, 4], vec![0, 1, 0]).unwrap();
        assert_eq!(s.n(), 9);
        assert_eq!(s.block(1), 2..5);
        assert_eq!(s.point_subclasses(), vec![0, 0, 1, 1, 1, 2, 2, 2, 2]);
        assert_eq!(s.point_classes(), vec![0, 0, 1, 1, 1, 0, 0, 0, 0]);
        assert_eq!(s.members(0), vec![0, 2]);
        assert_eq!((s.n_min(), s.n_max()), (2, 4));
    }

    #[test]
    fn rejects_invalid() {
        assert!(SubclassStructure::new(1, vec![2, 2], vec![0, 0]).is_err());
        assert!(SubclassStructure::new(3, vec![2, 2], vec![0, 1]).is_err());
        assert!(SubclassStructure::new(2, vec![2, 1], vec![0, 1]).is_err());
        assert!(SubclassStructure::new(2, vec![2, 2, 2], vec![0, 0, 0]).is_err());
        assert!(SubclassStructure::new(2, vec![2, 2], vec![0, 2]).is_err());
        assert!(SubclassStructure::new(2, vec![2, 2], vec![0]).is_err());
    }
}
