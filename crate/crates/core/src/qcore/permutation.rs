use serde::{Deserialize, Serialize};

use super::{QcoreError, Result};

/// Bijection on `0..size`. Element `i` of a sequence moves to position `map[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return Err(QcoreError::NotBijection(n));
            }
        }
        Ok(Self { map })
    }

    pub fn identity(size: usize) -> Self {
        Self { map: (0..size).collect() }
    }

    pub fn size(&self) -> usize {
        self.map.len()
    }

    /// Destination position of element `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        Self { map: inv }
    }

    /// `self` after `first`: element i goes to `self.apply(first.apply(i))`.
    pub fn after(&self, first: &Self) -> Self {
        Self { map: first.map.iter().map(|&m| self.map[m]).collect() }
    }

    /// Reorders a sequence: `out[map[i]] = items[i]`.
    pub fn apply_to<T: Clone>(&self, items: &[T]) -> Vec<T> {
        assert_eq!(items.len(), self.map.len(), "permutation size mismatch");
        let mut out: Vec<Option<T>> = vec![None; items.len()];
        for (i, item) in items.iter().enumerate() {
            out[self.map[i]] = Some(item.clone());
        }
        out.into_iter().map(|x| x.expect("bijection fills every slot")).collect()
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = QcoreError;
    fn try_from(map: Vec<usize>) -> Result<Self> {
        Self::new(map)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.map
    }
}
