//! Pattern-avoidance automaton for a cylinder-union hole.
//!
//! States are nodes of the trie of hole words with Aho-Corasick failure
//! transitions, plus one root state per last-read symbol (the Markov
//! transition out of a state needs the last symbol). Reading a symbol that
//! completes a hole word is a *hit*. Only states reachable from the start are
//! kept, so the state count is bounded by `m + (trie nodes)` rather than the
//! number of length-`(n-1)` histories.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::cylinder::CylinderUnion;
use crate::error::{Error, Result};
use crate::markov::MarkovMeasure;

/// Default cap on automaton states.
pub const DEFAULT_STATE_BUDGET: usize = 2_000_000;

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub(crate) struct HoleAutomaton {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    probs: Vec<f64>,
    hits: Vec<bool>,
    leaf: Vec<bool>,
    /// Law of the state after reading `x_0 … x_{n-1}` from the stationary
    /// chain, without removing mass for `x ∈ U`.
    start: Vec<f64>,
}

impl HoleAutomaton {
    pub(crate) fn new(mu: &MarkovMeasure, hole: &CylinderUnion, budget: usize) -> Result<Self> {
        let m = mu.alphabet_size();
        let n = hole.depth();

        // Trie over hole words; node 0 is the root.
        let mut child: Vec<u32> = vec![NONE; m];
        let mut node_last: Vec<u8> = vec![0];
        let mut node_depth: Vec<usize> = vec![0];
        for w in hole.words() {
            let mut u = 0usize;
            for &b in w.symbols() {
                let slot = u * m + b as usize;
                if child[slot] == NONE {
                    let id = node_last.len();
                    if id + m > budget {
                        return Err(Error::BudgetExceeded { needed: id + m, budget });
                    }
                    child[slot] = id as u32;
                    child.extend(core::iter::repeat_n(NONE, m));
                    node_last.push(b);
                    node_depth.push(node_depth[u] + 1);
                }
                u = child[slot] as usize;
            }
        }
        let nodes = node_last.len();

        // Complete the goto function with failure links, breadth first.
        let mut delta = vec![0u32; nodes * m];
        let mut fail = vec![0u32; nodes];
        let mut queue = VecDeque::new();
        for b in 0..m {
            let c = child[b];
            if c == NONE {
                delta[b] = 0;
            } else {
                delta[b] = c;
                queue.push_back(c as usize);
            }
        }
        while let Some(u) = queue.pop_front() {
            let f = fail[u] as usize;
            for b in 0..m {
                let c = child[u * m + b];
                if c == NONE {
                    delta[u * m + b] = delta[f * m + b];
                } else {
                    fail[c as usize] = delta[f * m + b];
                    delta[u * m + b] = c;
                    queue.push_back(c as usize);
                }
            }
        }

        // Full state space: root states 0..m, node states m + node - 1.
        let total = m + nodes - 1;
        let state_of = |node: usize, last: usize| if node == 0 { last } else { m + node - 1 };
        let node_of = |s: usize| if s < m { 0 } else { s - m + 1 };
        let last_of = |s: usize| if s < m { s } else { node_last[s - m + 1] as usize };

        let mut start = vec![0.0; total];
        for (a, &p) in mu.stationary().iter().enumerate() {
            if p > 0.0 {
                start[state_of(delta[a] as usize, a)] += p;
            }
        }
        let mut scratch = vec![0.0; total];
        for _ in 1..n {
            scratch.iter_mut().for_each(|x| *x = 0.0);
            for (s, &x) in start.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let (u, a) = (node_of(s), last_of(s));
                for (b, &p) in mu.row(a as u8).iter().enumerate() {
                    if p > 0.0 {
                        scratch[state_of(delta[u * m + b] as usize, b)] += x * p;
                    }
                }
            }
            core::mem::swap(&mut start, &mut scratch);
        }

        // Keep states reachable from the start support.
        let mut index = vec![NONE; total];
        let mut order = Vec::new();
        for (s, &x) in start.iter().enumerate() {
            if x > 0.0 {
                index[s] = order.len() as u32;
                order.push(s);
            }
        }
        let mut head = 0;
        while head < order.len() {
            let s = order[head];
            head += 1;
            let (u, a) = (node_of(s), last_of(s));
            for b in 0..m {
                if mu.allowed(a as u8, b as u8) {
                    let t = state_of(delta[u * m + b] as usize, b);
                    if index[t] == NONE {
                        index[t] = order.len() as u32;
                        order.push(t);
                    }
                }
            }
        }

        let mut offsets = Vec::with_capacity(order.len() + 1);
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        let mut hits = Vec::new();
        let mut leaf = Vec::with_capacity(order.len());
        offsets.push(0);
        for &s in &order {
            let (u, a) = (node_of(s), last_of(s));
            leaf.push(node_depth[u] == n);
            for (b, &p) in mu.row(a as u8).iter().enumerate() {
                if p > 0.0 {
                    let node = delta[u * m + b] as usize;
                    targets.push(index[state_of(node, b)]);
                    probs.push(p);
                    hits.push(node_depth[node] == n);
                }
            }
            offsets.push(targets.len());
        }
        let start = order.iter().map(|&s| start[s]).collect();
        Ok(HoleAutomaton { offsets, targets, probs, hits, leaf, start })
    }

    pub(crate) fn state_count(&self) -> usize {
        self.leaf.len()
    }

    pub(crate) fn unconditional_start(&self) -> Vec<f64> {
        self.start.clone()
    }

    /// `μ(w)/μ(U)` on the leaf of each hole word.
    pub(crate) fn conditional_start(&self) -> Vec<f64> {
        let total: f64 = self.start.iter().zip(&self.leaf).filter(|(_, &l)| l).map(|(x, _)| x).sum();
        self.start.iter().zip(&self.leaf).map(|(&x, &l)| if l && total > 0.0 { x / total } else { 0.0 }).collect()
    }

    /// Outgoing edges of `s` as `(target, probability, hit)`.
    #[inline]
    pub(crate) fn edges(&self, s: usize) -> impl Iterator<Item = (usize, f64, bool)> + '_ {
        let r = self.offsets[s]..self.offsets[s + 1];
        self.targets[r.clone()].iter().zip(&self.probs[r.clone()]).zip(&self.hits[r]).map(|((&t, &p), &h)| (t as usize, p, h))
    }

    /// One step of the killed chain: `out = v·A` over non-hit edges. Returns
    /// the mass that hit the hole.
    pub(crate) fn step_survive(&self, v: &[f64], out: &mut [f64]) -> f64 {
        out.iter_mut().for_each(|x| *x = 0.0);
        let mut escaped = 0.0;
        for (s, &x) in v.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for e in self.offsets[s]..self.offsets[s + 1] {
                let y = x * self.probs[e];
                if self.hits[e] {
                    escaped += y;
                } else {
                    out[self.targets[e] as usize] += y;
                }
            }
        }
        escaped
    }

    /// True when every path from the support of `v` hits the hole within
    /// finitely many steps (the killed chain is nilpotent there).
    pub(crate) fn is_nilpotent_from(&self, v: &[f64]) -> bool {
        let k = self.state_count();
        let mut seen = vec![false; k];
        let mut stack: Vec<usize> = (0..k).filter(|&s| v[s] > 0.0).collect();
        for &s in &stack {
            seen[s] = true;
        }
        let mut members = Vec::new();
        while let Some(s) = stack.pop() {
            members.push(s);
            for (t, _, hit) in self.edges(s) {
                if !hit && !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        let mut indegree = vec![0usize; k];
        for &s in &members {
            for (t, _, hit) in self.edges(s) {
                if !hit {
                    indegree[t] += 1;
                }
            }
        }
        let mut ready: Vec<usize> = members.iter().copied().filter(|&s| indegree[s] == 0).collect();
        let mut removed = 0;
        while let Some(s) = ready.pop() {
            removed += 1;
            for (t, _, hit) in self.edges(s) {
                if !hit {
                    indegree[t] -= 1;
                    if indegree[t] == 0 {
                        ready.push(t);
                    }
                }
            }
        }
        removed == members.len()
    }
}
