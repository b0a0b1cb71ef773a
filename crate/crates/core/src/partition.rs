use serde::{Deserialize, Serialize};

/// An assignment of entities to latent classes.
///
/// Always stored in canonical form: class ids are dense `0..n_classes` and
/// numbered in order of each class's lowest member index, so two partitions
/// that group entities identically compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    assignments: Vec<usize>,
    counts: Vec<usize>,
}

impl Partition {
    /// Canonicalizes an arbitrary labelling.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap: Vec<Option<usize>> = Vec::new();
        let mut counts = Vec::new();
        let mut assignments = Vec::with_capacity(labels.len());
        for &label in labels {
            if label >= remap.len() {
                remap.resize(label + 1, None);
            }
            let id = *remap[label].get_or_insert_with(|| {
                counts.push(0);
                counts.len() - 1
            });
            counts[id] += 1;
            assignments.push(id);
        }
        Partition {
            assignments,
            counts,
        }
    }

    pub fn single_class(n: usize) -> Self {
        Self::from_labels(&vec![0; n])
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Occupancy of each class, indexed by class id.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn class_of(&self, entity: usize) -> usize {
        self.assignments[entity]
    }

    /// Relabels entities: entity `perm[i]` of the result takes the class of
    /// entity `i` here.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.len());
        let mut labels = vec![0; self.len()];
        for (i, &target) in perm.iter().enumerate() {
            labels[target] = self.assignments[i];
        }
        Self::from_labels(&labels)
    }
}
