//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use csp_core::model::{DomainStore, Problem, Value, VarId};

/// Arc consistency by plain iteration: every constraint and scope position
/// is filtered against the full Cartesian product of the other domains until
/// nothing changes. `None` when some domain empties.
pub fn ac_fixpoint(p: &Problem) -> Option<Vec<Vec<Value>>> {
    let doms: Vec<Vec<Value>> = p.variables().map(|x| p.initial_domain(x).to_vec()).collect();
    ac_fixpoint_from(p, doms)
}

pub fn ac_fixpoint_from(p: &Problem, mut doms: Vec<Vec<Value>>) -> Option<Vec<Vec<Value>>> {
    loop {
        let mut changed = false;
        for c in p.constraints() {
            for pos in 0..c.arity() {
                let x = c.scope[pos].index();
                let keep: Vec<Value> = doms[x]
                    .iter()
                    .copied()
                    .filter(|&a| {
                        let lists: Vec<Vec<Value>> = c
                            .scope
                            .iter()
                            .enumerate()
                            .map(|(i, y)| if i == pos { vec![a] } else { doms[y.index()].clone() })
                            .collect();
                        product_any(&lists, |t| c.satisfies(t))
                    })
                    .collect();
                if keep.len() != doms[x].len() {
                    changed = true;
                    doms[x] = keep;
                    if doms[x].is_empty() {
                        return None;
                    }
                }
            }
        }
        if !changed {
            for d in &mut doms {
                d.sort_unstable();
            }
            return Some(doms);
        }
    }
}

fn product_any(lists: &[Vec<Value>], mut f: impl FnMut(&[Value]) -> bool) -> bool {
    if lists.iter().any(Vec::is_empty) {
        return false;
    }
    let mut idx = vec![0; lists.len()];
    let mut t: Vec<Value> = lists.iter().map(|l| l[0]).collect();
    loop {
        if f(&t) {
            return true;
        }
        let mut k = lists.len();
        loop {
            if k == 0 {
                return false;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < lists[k].len() {
                t[k] = lists[k][idx[k]];
                break;
            }
            idx[k] = 0;
            t[k] = lists[k][0];
        }
    }
}

/// Solution count by chronological backtracking in variable order, each
/// constraint checked once its last variable is set. Stops at `limit`.
pub fn count_solutions(p: &Problem, limit: usize) -> usize {
    let n = p.num_variables();
    let mut due: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, c) in p.constraints().iter().enumerate() {
        let last = c.scope.iter().map(|v| v.index()).max().unwrap();
        due[last].push(k);
    }
    let mut assignment = vec![0; n];
    let mut count = 0;
    backtrack(p, &due, 0, &mut assignment, &mut count, limit);
    count
}

fn backtrack(p: &Problem, due: &[Vec<usize>], i: usize, a: &mut Vec<Value>, count: &mut usize, limit: usize) {
    if *count >= limit {
        return;
    }
    if i == a.len() {
        *count += 1;
        return;
    }
    for &v in p.initial_domain(VarId(i)) {
        a[i] = v;
        let ok = due[i].iter().all(|&k| {
            let c = &p.constraints()[k];
            let t: Vec<Value> = c.scope.iter().map(|y| a[y.index()]).collect();
            c.satisfies(&t)
        });
        if ok {
            backtrack(p, due, i + 1, a, count, limit);
            if *count >= limit {
                return;
            }
        }
    }
}

pub fn satisfiable(p: &Problem) -> bool {
    count_solutions(p, 1) > 0
}

/// Live values of every variable, sorted.
pub fn sorted_domains(p: &Problem, d: &DomainStore) -> Vec<Vec<Value>> {
    p.variables()
        .map(|x| {
            let mut v: Vec<Value> = d.values(p, x).collect();
            v.sort_unstable();
            v
        })
        .collect()
}

/// Langford sequences L(k, n) counted directly on the sequence: each number
/// `v` in 1..=n is placed `k` times with gaps of `v + 1`.
pub fn langford_sequences(k: usize, n: usize) -> usize {
    fn place(seq: &mut Vec<usize>, v: usize, k: usize) -> usize {
        if v == 0 {
            return 1;
        }
        let span = (k - 1) * (v + 1);
        let mut total = 0;
        for start in 0..seq.len().saturating_sub(span) {
            let slots: Vec<usize> = (0..k).map(|j| start + j * (v + 1)).collect();
            if slots.iter().all(|&s| seq[s] == 0) {
                for &s in &slots {
                    seq[s] = v;
                }
                total += place(seq, v - 1, k);
                for &s in &slots {
                    seq[s] = 0;
                }
            }
        }
        total
    }
    let mut seq = vec![0; k * n];
    place(&mut seq, n, k)
}

/// n-queens solutions by enumerating permutations.
pub fn queens_solutions(n: usize) -> usize {
    fn go(n: usize, row: usize, cols: &mut Vec<usize>) -> usize {
        if row == n {
            return 1;
        }
        let mut total = 0;
        for c in 0..n {
            if cols.iter().enumerate().all(|(r, &q)| q != c && q.abs_diff(c) != row - r) {
                cols.push(c);
                total += go(n, row + 1, cols);
                cols.pop();
            }
        }
        total
    }
    go(n, 0, &mut Vec::new())
}
