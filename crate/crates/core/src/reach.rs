//! Dense reachability matrices over small node sets.

/// Row-major bit matrix; row `u` holds the successors of `u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct BitMatrix {
    size: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn new(size: usize) -> Self {
        let words = size.div_ceil(64).max(1);
        BitMatrix {
            size,
            words,
            bits: vec![0; size * words],
        }
    }

    pub fn set(&mut self, u: usize, v: usize) {
        self.bits[u * self.words + v / 64] |= 1 << (v % 64);
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.words + v / 64] & (1 << (v % 64)) != 0
    }

    /// `row[dst] |= row[src]`
    fn or_row(&mut self, dst: usize, src: usize) {
        let (w, d, s) = (self.words, dst * self.words, src * self.words);
        for k in 0..w {
            let bits = self.bits[s + k];
            self.bits[d + k] |= bits;
        }
    }

    pub fn row(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(move |&v| self.get(u, v))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.size).flat_map(move |u| self.row(u).map(move |v| (u, v)))
    }

    /// Kahn's algorithm. `None` when the relation has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree = vec![0usize; self.size];
        for (_, v) in self.pairs() {
            indegree[v] += 1;
        }
        let mut ready: Vec<usize> = (0..self.size).rev().filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.size);
        while let Some(u) = ready.pop() {
            order.push(u);
            for v in self.row(u).collect::<Vec<_>>() {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    ready.push(v);
                }
            }
        }
        (order.len() == self.size).then_some(order)
    }

    /// Irreflexive transitive closure of an acyclic relation, or `None` if the
    /// relation has a cycle.
    pub fn closure(&self) -> Option<BitMatrix> {
        let order = self.topological_order()?;
        let mut out = self.clone();
        for &u in order.iter().rev() {
            for v in self.row(u).collect::<Vec<_>>() {
                out.or_row(u, v);
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_closure_adds_shortcut() {
        let mut m = BitMatrix::new(3);
        m.set(0, 1);
        m.set(1, 2);
        let c = m.closure().unwrap();
        assert_eq!(c.pairs().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn cycle_has_no_closure() {
        let mut m = BitMatrix::new(2);
        m.set(0, 1);
        m.set(1, 0);
        assert!(m.closure().is_none());
    }

    #[test]
    fn wide_matrices_span_words() {
        let mut m = BitMatrix::new(130);
        for u in 0..129 {
            m.set(u, u + 1);
        }
        let c = m.closure().unwrap();
        assert!(c.get(0, 129));
        assert!(!c.get(129, 0));
        assert_eq!(c.pairs().count(), 130 * 129 / 2);
    }
}
