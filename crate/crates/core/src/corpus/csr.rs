use serde::{Deserialize, Serialize};

/// Compressed sparse row adjacency over dense `u32` node ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Csr {
    /// Builds from `(source, target)` pairs that are already sorted and deduplicated.
    pub fn from_sorted_pairs(num_nodes: usize, pairs: &[(u32, u32)]) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0] < w[1]));
        let mut offsets = vec![0usize; num_nodes + 1];
        for &(s, _) in pairs {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..num_nodes {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.iter().map(|&(_, t)| t).collect();
        Csr { offsets, targets }
    }

    /// Counting-sort transpose. Rows of the result are sorted because sources
    /// are visited in increasing order.
    pub fn transpose(&self) -> Self {
        let n = self.num_nodes();
        let mut offsets = vec![0usize; n + 1];
        for &t in &self.targets {
            offsets[t as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0u32; self.targets.len()];
        for s in 0..n {
            for &t in self.neighbors(s as u32) {
                targets[cursor[t as usize]] = s as u32;
                cursor[t as usize] += 1;
            }
        }
        Csr { offsets, targets }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn num_edges(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn neighbors(&self, node: u32) -> &[u32] {
        let i = node as usize;
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, node: u32) -> usize {
        let i = node as usize;
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn iter_edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.num_nodes() as u32)
            .flat_map(move |s| self.neighbors(s).iter().map(move |&t| (s, t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_of_small_graph() {
        let g = Csr::from_sorted_pairs(4, &[(0, 1), (0, 2), (1, 2), (3, 0)]);
        let t = g.transpose();
        assert_eq!(t.neighbors(0), &[3]);
        assert_eq!(t.neighbors(1), &[0]);
        assert_eq!(t.neighbors(2), &[0, 1]);
        assert!(t.neighbors(3).is_empty());
        assert_eq!(t.transpose(), g);
    }

    #[test]
    fn empty_graph() {
        let g = Csr::from_sorted_pairs(0, &[]);
        assert_eq!(g.num_nodes(), 0);
        assert_eq!(g.num_edges(), 0);
        assert_eq!(g.transpose(), g);
    }
}
