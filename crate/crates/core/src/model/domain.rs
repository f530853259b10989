use super::{Problem, Value, VarId};

/// Reversible current domains.
///
/// Each variable keeps a permutation of its initial value indices; the first
/// `size` entries are the live values. Removing a value swaps it behind the
/// live prefix and records the position on the trail, so undoing the swap in
/// reverse order restores the exact prior order.
#[derive(Clone, Debug)]
pub struct DomainStore {
    dense: Vec<Vec<u32>>,
    pos: Vec<Vec<u32>>,
    size: Vec<usize>,
    trail: Vec<(u32, u32)>,
    marks: Vec<usize>,
}

impl DomainStore {
    pub fn new(p: &Problem) -> Self {
        let n = p.num_variables();
        let mut dense = Vec::with_capacity(n);
        let mut pos = Vec::with_capacity(n);
        let mut size = Vec::with_capacity(n);
        for x in p.variables() {
            let d = p.initial_domain(x).len() as u32;
            dense.push((0..d).collect());
            pos.push((0..d).collect());
            size.push(d as usize);
        }
        DomainStore {
            dense,
            pos,
            size,
            trail: Vec::new(),
            marks: Vec::new(),
        }
    }

    #[inline]
    pub fn len(&self, x: VarId) -> usize {
        self.size[x.0]
    }

    #[inline]
    pub fn is_empty(&self, x: VarId) -> bool {
        self.size[x.0] == 0
    }

    pub fn sizes(&self) -> &[usize] {
        &self.size
    }

    /// Index (into the initial domain) of the `k`-th live value.
    #[inline]
    pub fn at(&self, x: VarId, k: usize) -> usize {
        debug_assert!(k < self.size[x.0]);
        self.dense[x.0][k] as usize
    }

    /// Live value indices in current order.
    #[inline]
    pub fn iter(&self, x: VarId) -> impl Iterator<Item = usize> + '_ {
        self.dense[x.0][..self.size[x.0]].iter().map(|&i| i as usize)
    }

    pub fn values<'a>(&'a self, p: &'a Problem, x: VarId) -> impl Iterator<Item = Value> + 'a {
        self.iter(x).map(move |i| p.value(x, i))
    }

    #[inline]
    pub fn contains(&self, x: VarId, index: usize) -> bool {
        (self.pos[x.0][index] as usize) < self.size[x.0]
    }

    pub fn contains_value(&self, p: &Problem, x: VarId, v: Value) -> bool {
        p.value_index(x, v).is_some_and(|i| self.contains(x, i))
    }

    /// The single live value index, if the domain is a singleton.
    pub fn singleton(&self, x: VarId) -> Option<usize> {
        (self.size[x.0] == 1).then(|| self.dense[x.0][0] as usize)
    }

    /// Removes a live value. Returns false if it was already gone.
    pub fn remove(&mut self, x: VarId, index: usize) -> bool {
        let v = x.0;
        let p = self.pos[v][index] as usize;
        let s = self.size[v];
        if p >= s {
            return false;
        }
        let last = s - 1;
        self.swap(v, p, last);
        self.size[v] = last;
        self.trail.push((v as u32, p as u32));
        true
    }

    /// Reduces the domain of `x` to the value at `index`; returns how many
    /// values were removed.
    pub fn assign(&mut self, x: VarId, index: usize) -> usize {
        debug_assert!(self.contains(x, index));
        let before = self.size[x.0];
        // remove from the back so the kept value's neighbors never shuffle it
        let mut k = before;
        while k > 0 {
            k -= 1;
            let i = self.dense[x.0][k] as usize;
            if i != index {
                self.remove(x, i);
            }
        }
        before - self.size[x.0]
    }

    pub fn depth(&self) -> usize {
        self.marks.len()
    }

    pub fn push_level(&mut self) {
        self.marks.push(self.trail.len());
    }

    pub fn pop_level(&mut self) {
        let mark = self.marks.pop().expect("pop_level at depth 0");
        self.undo_to(mark);
    }

    /// Restores the state that held when depth `depth` was entered.
    pub fn restore_to(&mut self, depth: usize) {
        while self.marks.len() > depth {
            self.pop_level();
        }
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (v, p) = self.trail.pop().unwrap();
            let v = v as usize;
            let last = self.size[v];
            self.size[v] = last + 1;
            self.swap(v, p as usize, last);
        }
    }

    #[inline]
    fn swap(&mut self, v: usize, a: usize, b: usize) {
        if a == b {
            return;
        }
        let dense = &mut self.dense[v];
        dense.swap(a, b);
        let (ia, ib) = (dense[a] as usize, dense[b] as usize);
        self.pos[v][ia] = a as u32;
        self.pos[v][ib] = b as u32;
    }

    /// Live value indices of every variable in current order.
    pub fn snapshot(&self) -> Vec<Vec<usize>> {
        (0..self.size.len()).map(|v| self.iter(VarId(v)).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProblemBuilder;
    use proptest::prelude::*;

    fn problem(sizes: &[usize]) -> Problem {
        let mut b = ProblemBuilder::new("d");
        for (i, &s) in sizes.iter().enumerate() {
            b.variable(format!("x{i}"), (0..s as Value).collect());
        }
        b.build().unwrap()
    }

    #[test]
    fn removal_moves_value_to_tail() {
        let p = problem(&[4]);
        let mut d = DomainStore::new(&p);
        assert!(d.remove(VarId(0), 1));
        assert!(!d.remove(VarId(0), 1));
        assert_eq!(d.iter(VarId(0)).collect::<Vec<_>>(), vec![0, 3, 2]);
        assert!(!d.contains(VarId(0), 1));
    }

    #[test]
    fn assign_keeps_single_value() {
        let p = problem(&[5]);
        let mut d = DomainStore::new(&p);
        d.push_level();
        assert_eq!(d.assign(VarId(0), 3), 4);
        assert_eq!(d.singleton(VarId(0)), Some(3));
        d.pop_level();
        assert_eq!(d.iter(VarId(0)).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    }

    proptest! {
        #[test]
        fn restore_is_order_exact(
            ops in prop::collection::vec((0usize..3, 0usize..6, prop::bool::ANY), 0..60)
        ) {
            let p = problem(&[6, 6, 6]);
            let mut d = DomainStore::new(&p);
            let mut saved = vec![d.snapshot()];
            for (v, i, push) in ops.iter().copied() {
                if push {
                    d.push_level();
                    saved.push(d.snapshot());
                }
                d.remove(VarId(v), i);
            }
            // replay: restoring every level recovers the snapshot taken on entry
            while d.depth() > 0 {
                let expected = saved.pop().unwrap();
                d.pop_level();
                prop_assert_eq!(d.snapshot(), expected);
            }
        }

        #[test]
        fn restore_then_reapply_is_identical(
            ops in prop::collection::vec((0usize..3, 0usize..6), 0..40)
        ) {
            let p = problem(&[6, 6, 6]);
            let mut d = DomainStore::new(&p);
            d.push_level();
            for &(v, i) in &ops { d.remove(VarId(v), i); }
            let after = d.snapshot();
            d.restore_to(0);
            d.push_level();
            for &(v, i) in &ops { d.remove(VarId(v), i); }
            prop_assert_eq!(d.snapshot(), after);
        }
    }
}
