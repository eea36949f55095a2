//! Directed-graph helpers over dense `u32` vertex ids.
//!
//! Vertex ids are assigned in lexicographic order of the concept symbols they
//! stand for, so "smallest id" doubles as the lexicographic tie-break.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

/// Adjacency lists with sorted, deduplicated successors.
#[derive(Debug, Clone)]
pub struct Digraph {
    succ: Vec<Vec<u32>>,
}

impl Digraph {
    pub fn new(vertices: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut succ = vec![Vec::new(); vertices];
        for (a, b) in edges {
            succ[a as usize].push(b);
        }
        for list in &mut succ {
            list.sort_unstable();
            list.dedup();
        }
        Digraph { succ }
    }

    pub fn successors(&self, v: u32) -> &[u32] {
        &self.succ[v as usize]
    }

    /// Strongly connected components (Tarjan, iterative). Each component is sorted.
    pub fn components(&self) -> Vec<Vec<u32>> {
        const UNVISITED: u32 = u32::MAX;
        let n = self.succ.len();
        let mut index = vec![UNVISITED; n];
        let mut low = vec![0u32; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut out = Vec::new();
        let mut next = 0u32;

        for root in 0..n as u32 {
            if index[root as usize] != UNVISITED {
                continue;
            }
            let mut frames: Vec<(u32, usize)> = vec![(root, 0)];
            index[root as usize] = next;
            low[root as usize] = next;
            next += 1;
            stack.push(root);
            on_stack[root as usize] = true;

            while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
                let succ = &self.succ[v as usize];
                if *pos < succ.len() {
                    let w = succ[*pos];
                    *pos += 1;
                    if index[w as usize] == UNVISITED {
                        index[w as usize] = next;
                        low[w as usize] = next;
                        next += 1;
                        stack.push(w);
                        on_stack[w as usize] = true;
                        frames.push((w, 0));
                    } else if on_stack[w as usize] {
                        low[v as usize] = low[v as usize].min(index[w as usize]);
                    }
                    continue;
                }
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent as usize] = low[parent as usize].min(low[v as usize]);
                }
                if low[v as usize] == index[v as usize] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w as usize] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    component.sort_unstable();
                    out.push(component);
                }
            }
        }
        out
    }

    /// One shortest cycle per strongly connected component with more than one
    /// vertex, starting at the component's smallest vertex. Self-loops are not
    /// reported here.
    pub fn cycles(&self) -> Vec<Vec<u32>> {
        let mut in_component = vec![usize::MAX; self.succ.len()];
        let components: Vec<_> = self
            .components()
            .into_iter()
            .filter(|c| c.len() > 1)
            .collect();
        for (i, c) in components.iter().enumerate() {
            for &v in c {
                in_component[v as usize] = i;
            }
        }
        let mut cycles: Vec<_> = components
            .iter()
            .enumerate()
            .map(|(i, c)| self.shortest_cycle_through(c[0], |w| in_component[w as usize] == i))
            .collect();
        cycles.sort();
        cycles
    }

    fn shortest_cycle_through(&self, start: u32, inside: impl Fn(u32) -> bool) -> Vec<u32> {
        let mut parent = vec![u32::MAX; self.succ.len()];
        let mut queue = VecDeque::from([start]);
        parent[start as usize] = start;
        while let Some(v) = queue.pop_front() {
            for &w in self.successors(v) {
                if w == start {
                    let mut path = vec![v];
                    let mut cur = v;
                    while cur != start {
                        cur = parent[cur as usize];
                        path.push(cur);
                    }
                    path.reverse();
                    return path;
                }
                if inside(w) && parent[w as usize] == u32::MAX {
                    parent[w as usize] = v;
                    queue.push_back(w);
                }
            }
        }
        unreachable!("vertex of a non-trivial component lies on a cycle")
    }

    /// Vertices reachable from `from` by one or more edges.
    pub fn reachable_from(&self, from: u32) -> Vec<u32> {
        let mut seen = vec![false; self.succ.len()];
        let mut stack: Vec<u32> = self.successors(from).to_vec();
        let mut out = Vec::new();
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v as usize], true) {
                continue;
            }
            out.push(v);
            stack.extend_from_slice(self.successors(v));
        }
        out.sort_unstable();
        out
    }

    /// Kahn's algorithm restricted to `subset`, emitting an edge's target
    /// before its source (dependencies first). Ties go to the smallest id.
    /// Returns the vertices left on a cycle as `Err`.
    pub fn dependency_order(&self, subset: &[u32]) -> Result<Vec<u32>, Vec<u32>> {
        let mut member = vec![false; self.succ.len()];
        for &v in subset {
            member[v as usize] = true;
        }
        // An edge a -> b means a depends on b.
        let mut pending = vec![0usize; self.succ.len()];
        let mut dependents = vec![Vec::new(); self.succ.len()];
        for &a in subset {
            for &b in self.successors(a) {
                if member[b as usize] {
                    pending[a as usize] += 1;
                    dependents[b as usize].push(a);
                }
            }
        }
        let mut ready: BinaryHeap<Reverse<u32>> = subset
            .iter()
            .copied()
            .filter(|&v| pending[v as usize] == 0)
            .map(Reverse)
            .collect();
        let mut order = Vec::with_capacity(subset.len());
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for &a in &dependents[v as usize] {
                pending[a as usize] -= 1;
                if pending[a as usize] == 0 {
                    ready.push(Reverse(a));
                }
            }
        }
        if order.len() == subset.len() {
            Ok(order)
        } else {
            let mut stuck: Vec<u32> = subset
                .iter()
                .copied()
                .filter(|&v| pending[v as usize] > 0)
                .collect();
            stuck.sort_unstable();
            Err(stuck)
        }
    }
}
