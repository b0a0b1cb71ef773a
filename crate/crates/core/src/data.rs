use crate::error::{Error, Result};

/// A directed binary interaction table over `n` entities (self-interactions
/// included), an observation mask and a held-out test set disjoint from it.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationData {
    n: usize,
    cells: Vec<u8>,
    observed: Vec<bool>,
    test_cells: Vec<(usize, usize)>,
}

impl RelationData {
    /// Fully defined table with nothing observed yet. `cells` is row-major.
    pub fn new(n: usize, cells: Vec<u8>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("entity count must be positive".into()));
        }
        if n.checked_mul(n) != Some(cells.len()) {
            return Err(Error::Dimension(format!(
                "{} cells supplied for {n} entities",
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|&&c| c > 1) {
            return Err(Error::Argument(format!("cell value {bad} is not binary")));
        }
        Ok(RelationData {
            n,
            cells,
            observed: vec![false; n * n],
            test_cells: Vec::new(),
        })
    }

    /// Replaces the mask and test set. Indices are flat row-major cell ids.
    pub fn with_split(mut self, observed_idx: &[usize], test_idx: &[usize]) -> Result<Self> {
        let total = self.n * self.n;
        let mut observed = vec![false; total];
        for &idx in observed_idx {
            if idx >= total {
                return Err(Error::Dimension(format!("observed index {idx} out of range")));
            }
            observed[idx] = true;
        }
        let mut seen = vec![false; total];
        let mut test_cells = Vec::with_capacity(test_idx.len());
        for &idx in test_idx {
            if idx >= total {
                return Err(Error::Dimension(format!("test index {idx} out of range")));
            }
            if observed[idx] {
                return Err(Error::Split(format!("cell {idx} is both observed and held out")));
            }
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::Split(format!("cell {idx} listed twice in the test set")));
            }
            test_cells.push((idx / self.n, idx % self.n));
        }
        self.observed = observed;
        self.test_cells = test_cells;
        Ok(self)
    }

    /// Replaces the mask only, keeping no test cells.
    pub fn with_mask(self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.n * self.n {
            return Err(Error::Dimension("mask length differs from n^2".into()));
        }
        let idx: Vec<usize> = (0..mask.len()).filter(|&k| mask[k]).collect();
        self.with_split(&idx, &[])
    }

    pub fn n_entities(&self) -> usize {
        self.n
    }

    pub fn value(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.n + col]
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.observed[row * self.n + col]
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn observed_mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// Observed cells as `(row, col, value)`, row-major.
    pub fn observed_cells(&self) -> impl Iterator<Item = (usize, usize, u8)> + '_ {
        let n = self.n;
        self.observed
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(move |(k, _)| (k / n, k % n, self.cells[k]))
    }

    pub fn observed_indices(&self) -> Vec<usize> {
        (0..self.observed.len()).filter(|&k| self.observed[k]).collect()
    }

    pub fn test_cells(&self) -> &[(usize, usize)] {
        &self.test_cells
    }

    pub fn test_indices(&self) -> Vec<usize> {
        self.test_cells.iter().map(|&(r, c)| r * self.n + c).collect()
    }

    /// True values of the held-out cells, in test-set order.
    pub fn test_values(&self) -> Vec<u8> {
        self.test_cells.iter().map(|&(r, c)| self.value(r, c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(RelationData::new(0, vec![]).is_err());
        assert!(RelationData::new(2, vec![0, 1, 1]).is_err());
        assert!(RelationData::new(1, vec![2]).is_err());
    }

    #[test]
    fn split_must_be_disjoint() {
        let data = RelationData::new(2, vec![0, 1, 1, 0]).unwrap();
        assert!(matches!(
            data.clone().with_split(&[0, 1], &[1]),
            Err(Error::Split(_))
        ));
        assert!(data.clone().with_split(&[0], &[4]).is_err());
        let split = data.with_split(&[0, 3], &[2]).unwrap();
        assert_eq!(split.observed_count(), 2);
        assert_eq!(split.test_cells(), &[(1, 0)]);
        assert_eq!(split.test_values(), vec![1]);
        let obs: Vec<_> = split.observed_cells().collect();
        assert_eq!(obs, vec![(0, 0, 0), (1, 1, 0)]);
    }
}
