use std::collections::{HashSet, VecDeque};

use super::{Method, SuiteMeta, TestSuite, TestgenError};
use crate::abstraction::minimize;
use crate::fsm::Fsm;

/// Candidate suffixes examined per undistinguished pair.
const MAX_SUFFIX_CANDIDATES: usize = 64;
const NONE: u32 = u32::MAX;

/// Prefix tree of input sequences, annotated with the reference state
/// reached at each node.
struct Trie<'a> {
    fsm: &'a Fsm,
    children: Vec<Vec<u32>>,
    state: Vec<usize>,
}

impl<'a> Trie<'a> {
    fn new(fsm: &'a Fsm) -> Self {
        Trie {
            fsm,
            children: vec![vec![NONE; fsm.inputs.len()]],
            state: vec![fsm.initial],
        }
    }

    fn insert(&mut self, seq: &[usize]) -> usize {
        let mut node = 0;
        for &x in seq {
            let child = self.children[node][x];
            node = if child == NONE {
                let id = self.children.len();
                let next = self.fsm.step(self.state[node], x).1;
                self.children.push(vec![NONE; self.fsm.inputs.len()]);
                self.state.push(next);
                self.children[node][x] = id as u32;
                id
            } else {
                child as usize
            };
        }
        node
    }

    /// Length of the longest prefix of `seq` already present.
    fn present_prefix(&self, seq: &[usize]) -> usize {
        let mut node = 0;
        for (depth, &x) in seq.iter().enumerate() {
            let child = self.children[node][x];
            if child == NONE {
                return depth;
            }
            node = child as usize;
        }
        seq.len()
    }

    /// Whether some common extension of nodes `a` and `b` produces different
    /// outputs from their reference states.
    fn distinguished(&self, a: usize, b: usize) -> bool {
        let mut stack = vec![(a, b)];
        while let Some((a, b)) = stack.pop() {
            let (sa, sb) = (self.state[a], self.state[b]);
            if sa == sb {
                continue;
            }
            for x in 0..self.fsm.inputs.len() {
                let (ca, cb) = (self.children[a][x], self.children[b][x]);
                if ca == NONE || cb == NONE {
                    continue;
                }
                if self.fsm.step(sa, x).0 != self.fsm.step(sb, x).0 {
                    return true;
                }
                stack.push((ca as usize, cb as usize));
            }
        }
        false
    }

    /// Maximal sequences, in lexicographic order.
    fn leaves(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect(0, &mut path, &mut out);
        out
    }

    fn collect(&self, node: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let mut leaf = true;
        for (x, &child) in self.children[node].iter().enumerate() {
            if child != NONE {
                leaf = false;
                path.push(x);
                self.collect(child as usize, path, out);
                path.pop();
            }
        }
        if leaf && node != 0 {
            out.push(path.clone());
        }
    }
}

/// Shortest access sequence of every state, breadth-first with inputs in
/// declaration order. Indexed by state.
pub fn state_cover(m: &Fsm) -> Vec<Option<Vec<usize>>> {
    let mut cover: Vec<Option<Vec<usize>>> = vec![None; m.n()];
    cover[m.initial] = Some(Vec::new());
    let mut queue = VecDeque::from([m.initial]);
    while let Some(s) = queue.pop_front() {
        for x in 0..m.inputs.len() {
            let next = m.step(s, x).1;
            if cover[next].is_none() {
                let mut seq = cover[s].clone().expect("queued states are covered");
                seq.push(x);
                cover[next] = Some(seq);
                queue.push_back(next);
            }
        }
    }
    cover
}

/// `d[s][t]` is the length of a shortest sequence distinguishing `s` and
/// `t`, or 0 when they are equivalent.
pub fn distinguishing_lengths(m: &Fsm) -> Vec<Vec<usize>> {
    let n = m.n();
    let k = m.inputs.len();
    let mut d = vec![vec![0usize; n]; n];
    for (s, row) in d.iter_mut().enumerate() {
        for (t, cell) in row.iter_mut().enumerate() {
            if (0..k).any(|x| m.step(s, x).0 != m.step(t, x).0) {
                *cell = 1;
            }
        }
    }
    let mut len = 1;
    loop {
        let mut changed = false;
        let snapshot = d.clone();
        for s in 0..n {
            for t in 0..n {
                if snapshot[s][t] != 0 {
                    continue;
                }
                if (0..k).any(|x| snapshot[m.step(s, x).1][m.step(t, x).1] == len) {
                    d[s][t] = len + 1;
                    changed = true;
                }
            }
        }
        if !changed {
            return d;
        }
        len += 1;
    }
}

/// Shortest sequences distinguishing `s` from `t`, lexicographically
/// ordered, at most `cap` of them.
fn shortest_suffixes(m: &Fsm, d: &[Vec<usize>], s: usize, t: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    extend_suffixes(m, d, s, t, d[s][t], &mut path, &mut out, cap);
    out
}

#[allow(clippy::too_many_arguments)]
fn extend_suffixes(
    m: &Fsm,
    d: &[Vec<usize>],
    s: usize,
    t: usize,
    remaining: usize,
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    cap: usize,
) {
    for x in 0..m.inputs.len() {
        if out.len() >= cap {
            return;
        }
        let ((os, ns), (ot, nt)) = (m.step(s, x), m.step(t, x));
        if remaining == 1 {
            if os != ot {
                path.push(x);
                out.push(path.clone());
                path.pop();
            }
        } else if os == ot && d[ns][nt] == remaining - 1 {
            path.push(x);
            extend_suffixes(m, d, ns, nt, remaining - 1, path, out, cap);
            path.pop();
        }
    }
}

/// All sequences of length `0..=k`, shortest first, then lexicographic.
fn words_up_to(alphabet: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(layer.len() * alphabet);
        for w in &layer {
            for x in 0..alphabet {
                let mut v = w.clone();
                v.push(x);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn check_reference(m: &Fsm, bound: usize) -> Result<Vec<Vec<usize>>, TestgenError> {
    let n = m.n();
    if bound < n {
        return Err(TestgenError::MBelowN { m: bound, n });
    }
    let cover = state_cover(m);
    if let Some(s) = cover.iter().position(Option::is_none) {
        return Err(TestgenError::NotMinimal(format!(
            "state `{}` is unreachable",
            m.states[s]
        )));
    }
    if minimize(m).n() != n {
        return Err(TestgenError::NotMinimal("some states are equivalent".into()));
    }
    let mut v: Vec<Vec<usize>> = cover.into_iter().map(Option::unwrap).collect();
    v.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(v)
}

/// V · Σ^{≤k}, deduplicated, in (access order, extension order).
fn traversal_set(m: &Fsm, cover: &[Vec<usize>], k: usize) -> Vec<Vec<usize>> {
    let words = words_up_to(m.inputs.len(), k);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for v in cover {
        for w in &words {
            let mut seq = v.clone();
            seq.extend(w);
            if seen.insert(seq.clone()) {
                out.push(seq);
            }
        }
    }
    out
}

fn suite(m: &Fsm, trie: &Trie<'_>, method: Method, bound: usize) -> TestSuite {
    TestSuite {
        alphabet: m.inputs.clone(),
        cases: trie.leaves(),
        meta: SuiteMeta {
            method,
            m: bound,
            n: m.n(),
            reference_hash: None,
        },
    }
}

/// H-Method suite for a minimal, complete reference and state bound `bound`.
///
/// Every pair of V ∪ V·Σ^{≤bound−n+1} reaching distinct states is
/// distinguished by a common extension in the suite. Missing distinctions
/// get a shortest distinguishing suffix, preferring the one that adds the
/// fewest new sequence prefixes.
pub fn generate_h(m: &Fsm, bound: usize) -> Result<TestSuite, TestgenError> {
    let cover = check_reference(m, bound)?;
    let k = bound - m.n() + 1;
    let set = traversal_set(m, &cover, k);
    let mut trie = Trie::new(m);
    let nodes: Vec<usize> = set.iter().map(|seq| trie.insert(seq)).collect();
    let d = distinguishing_lengths(m);

    for i in 0..set.len() {
        for j in i + 1..set.len() {
            let (a, b) = (nodes[i], nodes[j]);
            let (sa, sb) = (trie.state[a], trie.state[b]);
            if sa == sb || trie.distinguished(a, b) {
                continue;
            }
            let mut best: Option<(usize, Vec<usize>)> = None;
            for gamma in shortest_suffixes(m, &d, sa, sb, MAX_SUFFIX_CANDIDATES) {
                let mut alpha = set[i].clone();
                alpha.extend(&gamma);
                let mut beta = set[j].clone();
                beta.extend(&gamma);
                let shared = alpha.iter().zip(&beta).take_while(|(x, y)| x == y).count();
                let cost =
                    (alpha.len() - trie.present_prefix(&alpha)) + (beta.len() - trie.present_prefix(&beta).max(shared));
                if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                    best = Some((cost, gamma));
                }
            }
            let (_, gamma) = best.expect("distinct states of a minimal machine are distinguishable");
            for base in [&set[i], &set[j]] {
                let mut seq = base.clone();
                seq.extend(&gamma);
                trie.insert(&seq);
            }
        }
    }
    Ok(suite(m, &trie, Method::H, bound))
}

/// One shortest, lexicographically least distinguishing sequence per pair
/// of distinct states, deduplicated. `{ε}` for a single-state machine.
pub fn characterization_set(m: &Fsm) -> Vec<Vec<usize>> {
    let d = distinguishing_lengths(m);
    let mut w: Vec<Vec<usize>> = Vec::new();
    for s in 0..m.n() {
        for t in s + 1..m.n() {
            if d[s][t] == 0 {
                continue;
            }
            let seq = shortest_suffixes(m, &d, s, t, 1).remove(0);
            if !w.contains(&seq) {
                w.push(seq);
            }
        }
    }
    if w.is_empty() {
        w.push(Vec::new());
    }
    w
}

/// W-Method suite V · Σ^{≤bound−n+1} · W.
pub fn generate_w(m: &Fsm, bound: usize) -> Result<TestSuite, TestgenError> {
    let cover = check_reference(m, bound)?;
    let k = bound - m.n() + 1;
    let w = characterization_set(m);
    let mut trie = Trie::new(m);
    for p in traversal_set(m, &cover, k) {
        for suffix in &w {
            let mut seq = p.clone();
            seq.extend(suffix);
            trie.insert(&seq);
        }
    }
    Ok(suite(m, &trie, Method::W, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::tests::toggle;

    #[test]
    fn cover_is_breadth_first() {
        assert_eq!(state_cover(&toggle()), [Some(vec![]), Some(vec![1])]);
    }

    #[test]
    fn words_are_shortlex() {
        assert_eq!(
            words_up_to(2, 2),
            [vec![], vec![0], vec![1], vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
    }

    #[test]
    fn toggle_distinguishing_lengths() {
        assert_eq!(distinguishing_lengths(&toggle()), [[0, 1], [1, 0]]);
        assert_eq!(characterization_set(&toggle()), [vec![0]]);
    }

    #[test]
    fn redundant_reference_rejected() {
        let mut m = toggle();
        m.states.push("s2".into());
        m.table.push(m.table[0].clone());
        m.table[1][1] = (0, 2);
        assert!(matches!(generate_h(&m, 3), Err(TestgenError::NotMinimal(_))));
    }
}
