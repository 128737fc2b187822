/// Union–find with path compression and union by rank.
#[derive(Debug, Clone)]
pub struct DisjointSetForest {
    parent: Vec<usize>,
    rank: Vec<u8>,
    components: usize,
}

impl DisjointSetForest {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Root lookup without compression, for shared borrows.
    pub fn root(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Merges the sets of `a` and `b`; `false` if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.rank[ra] < self.rank[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        if self.rank[ra] == self.rank[rb] {
            self.rank[ra] += 1;
        }
        self.components -= 1;
        true
    }

    /// Members of every set, each ascending, ordered by smallest member.
    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let r = self.find(x);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(x);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_merges() {
        let mut d = DisjointSetForest::new(4);
        assert!(d.union(0, 1));
        assert!(!d.union(1, 0));
        assert!(d.same(0, 1));
        assert!(!d.same(0, 2));
        assert_eq!(d.components(), 3);
        assert_eq!(d.groups(), vec![vec![0, 1], vec![2], vec![3]]);
    }

    /// Label-propagation components, independent of the forest.
    fn naive_components(n: usize, unions: &[(usize, usize)]) -> Vec<usize> {
        let mut label: Vec<usize> = (0..n).collect();
        for &(a, b) in unions {
            let (la, lb) = (label[a], label[b]);
            if la != lb {
                for l in label.iter_mut() {
                    if *l == lb {
                        *l = la;
                    }
                }
            }
        }
        label
    }

    proptest! {
        #[test]
        fn agrees_with_naive_components(
            n in 1usize..30,
            raw in prop::collection::vec((0usize..30, 0usize..30), 0..60),
        ) {
            let unions: Vec<_> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            let mut d = DisjointSetForest::new(n);
            let mut expected_components = n;
            for &(a, b) in &unions {
                let before = d.components();
                let merged = d.union(a, b);
                prop_assert_eq!(d.components(), if merged { before - 1 } else { before });
                if merged { expected_components -= 1; }
            }
            let labels = naive_components(n, &unions);
            for a in 0..n {
                let r = d.find(a);
                prop_assert_eq!(d.find(a), r);
                for b in 0..n {
                    prop_assert_eq!(d.same(a, b), labels[a] == labels[b]);
                }
            }
            prop_assert_eq!(d.components(), expected_components);
        }
    }
}
