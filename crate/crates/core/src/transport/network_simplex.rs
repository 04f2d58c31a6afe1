//! Primal network simplex for uncapacitated min-cost flow with integer
//! supplies and real costs. Spanning-tree bookkeeping (thread, reverse
//! thread, successor counts, last successor) follows LEMON's
//! `NetworkSimplex`, with block-search pivoting.
//!
//! Node `n` is the artificial root; artificial arcs occupy indices `0..n`
//! and real arcs follow, so arcs can be appended between solves (column
//! generation) while the current basis stays feasible.

const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;
const DIR_UP: i8 = 1;
const DIR_DOWN: i8 = -1;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Unbounded,
}

pub struct NetworkSimplex {
    node_num: usize,
    root: usize,
    source: Vec<u32>,
    target: Vec<u32>,
    cost: Vec<f64>,
    flow: Vec<i64>,
    state: Vec<i8>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pred_dir: Vec<i8>,
    pi: Vec<f64>,
    dirty_revs: Vec<usize>,
    next_arc: usize,
    eps: f64,
    pub pivots: u64,
    // pivot working state
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: i64,
}

impl NetworkSimplex {
    /// `supply[u] > 0` for sources, `< 0` for sinks; supplies must sum to zero.
    /// `art_cost` must exceed the cost of any path the artificial arcs could
    /// replace; for bipartite transport any value above the largest arc cost works.
    pub fn new(supply: &[i64], art_cost: f64) -> Self {
        let n = supply.len();
        let root = n;
        let mut ns = Self {
            node_num: n,
            root,
            source: vec![0; n],
            target: vec![0; n],
            cost: vec![0.0; n],
            flow: vec![0; n],
            state: vec![STATE_TREE; n],
            parent: vec![NONE; n + 1],
            pred: vec![NONE; n + 1],
            thread: vec![0; n + 1],
            rev_thread: vec![0; n + 1],
            succ_num: vec![0; n + 1],
            last_succ: vec![0; n + 1],
            pred_dir: vec![0; n + 1],
            pi: vec![0.0; n + 1],
            dirty_revs: Vec::new(),
            next_arc: n,
            eps: 1e-12 * art_cost.max(1e-300),
            pivots: 0,
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0,
        };
        ns.parent[root] = NONE;
        ns.pred[root] = NONE;
        ns.thread[root] = 0;
        ns.rev_thread[0] = root;
        ns.succ_num[root] = n + 1;
        ns.last_succ[root] = if n == 0 { root } else { root - 1 };
        ns.pi[root] = 0.0;
        if n == 0 {
            ns.thread[root] = root;
            ns.rev_thread[root] = root;
        }
        for u in 0..n {
            let e = u;
            ns.parent[u] = root;
            ns.pred[u] = e;
            ns.thread[u] = u + 1;
            ns.rev_thread[u + 1] = u;
            ns.succ_num[u] = 1;
            ns.last_succ[u] = u;
            ns.state[e] = STATE_TREE;
            if supply[u] >= 0 {
                ns.pred_dir[u] = DIR_UP;
                ns.pi[u] = 0.0;
                ns.source[e] = u as u32;
                ns.target[e] = root as u32;
                ns.flow[e] = supply[u];
                ns.cost[e] = 0.0;
            } else {
                ns.pred_dir[u] = DIR_DOWN;
                ns.pi[u] = art_cost;
                ns.source[e] = root as u32;
                ns.target[e] = u as u32;
                ns.flow[e] = -supply[u];
                ns.cost[e] = art_cost;
            }
        }
        if n > 0 {
            ns.thread[n - 1] = root;
            ns.rev_thread[root] = n - 1;
        }
        ns
    }

    pub fn node_count(&self) -> usize {
        self.node_num
    }

    pub fn arc_count(&self) -> usize {
        self.source.len() - self.node_num
    }

    pub fn reserve_arcs(&mut self, extra: usize) {
        self.source.reserve(extra);
        self.target.reserve(extra);
        self.cost.reserve(extra);
        self.flow.reserve(extra);
        self.state.reserve(extra);
    }

    /// Adds a real arc `u → v`; returns its arc id.
    pub fn add_arc(&mut self, u: usize, v: usize, cost: f64) -> usize {
        debug_assert!(u < self.node_num && v < self.node_num);
        self.source.push(u as u32);
        self.target.push(v as u32);
        self.cost.push(cost);
        self.flow.push(0);
        self.state.push(STATE_LOWER);
        self.source.len() - 1
    }

    /// Arc ids of real arcs are offset by the node count.
    pub fn real_arc_ids(&self) -> std::ops::Range<usize> {
        self.node_num..self.source.len()
    }

    pub fn arc_endpoints(&self, e: usize) -> (usize, usize) {
        (self.source[e] as usize, self.target[e] as usize)
    }

    pub fn arc_cost(&self, e: usize) -> f64 {
        self.cost[e]
    }

    pub fn flow(&self, e: usize) -> i64 {
        self.flow[e]
    }

    pub fn potential(&self, u: usize) -> f64 {
        self.pi[u]
    }

    /// Total flow left on artificial arcs (zero iff the real arcs carry a feasible flow).
    pub fn artificial_flow(&self) -> i64 {
        self.flow[..self.node_num].iter().sum()
    }

    pub fn set_tolerance(&mut self, eps: f64) {
        self.eps = eps;
    }

    pub fn tolerance(&self) -> f64 {
        self.eps
    }

    pub fn solve(&mut self) -> SolveStatus {
        let real = self.arc_count();
        let block = ((real as f64).sqrt().ceil() as usize).max(10);
        if self.next_arc < self.node_num || self.next_arc >= self.source.len() {
            self.next_arc = self.node_num;
        }
        while self.find_entering_arc(block) {
            self.find_join_node();
            let change = self.find_leaving_arc();
            if self.delta == i64::MAX {
                return SolveStatus::Unbounded;
            }
            self.change_flow(change);
            if change {
                self.update_tree_structure();
                self.update_potential();
            }
            self.pivots += 1;
        }
        SolveStatus::Optimal
    }

    /// Recomputes potentials from the tree (root potential 0) to shed drift
    /// accumulated by incremental updates.
    pub fn refresh_potentials(&mut self) {
        self.pi[self.root] = 0.0;
        let mut u = self.thread[self.root];
        while u != self.root {
            let e = self.pred[u];
            let p = self.parent[u];
            self.pi[u] = if self.pred_dir[u] == DIR_UP {
                // arc u -> p with zero reduced cost: c + pi[u] - pi[p] = 0
                self.pi[p] - self.cost[e]
            } else {
                self.pi[p] + self.cost[e]
            };
            u = self.thread[u];
        }
    }

    #[inline]
    fn reduced_cost(&self, e: usize) -> f64 {
        self.cost[e] + self.pi[self.source[e] as usize] - self.pi[self.target[e] as usize]
    }

    fn find_entering_arc(&mut self, block: usize) -> bool {
        let total = self.source.len();
        let start = self.next_arc;
        let mut min = -self.eps;
        let mut found = NONE;
        let mut cnt = block;
        let mut e = start;
        let span = total - self.node_num;
        for _ in 0..span {
            let s = self.state[e];
            if s != STATE_TREE {
                let c = s as f64 * self.reduced_cost(e);
                if c < min {
                    min = c;
                    found = e;
                }
            }
            e += 1;
            if e == total {
                e = self.node_num;
            }
            cnt -= 1;
            if cnt == 0 {
                if found != NONE {
                    self.in_arc = found;
                    self.next_arc = e;
                    return true;
                }
                cnt = block;
            }
        }
        if found != NONE {
            self.in_arc = found;
            self.next_arc = e;
            return true;
        }
        false
    }

    fn find_join_node(&mut self) {
        let mut u = self.source[self.in_arc] as usize;
        let mut v = self.target[self.in_arc] as usize;
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    fn find_leaving_arc(&mut self) -> bool {
        let (first, second) = if self.state[self.in_arc] == STATE_LOWER {
            (
                self.source[self.in_arc] as usize,
                self.target[self.in_arc] as usize,
            )
        } else {
            (
                self.target[self.in_arc] as usize,
                self.source[self.in_arc] as usize,
            )
        };
        let mut delta = i64::MAX;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            let e = self.pred[u];
            let d = if self.pred_dir[u] == DIR_DOWN {
                i64::MAX
            } else {
                self.flow[e]
            };
            if d < delta {
                delta = d;
                self.u_out = u;
                result = 1;
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            let e = self.pred[u];
            let d = if self.pred_dir[u] == DIR_UP {
                i64::MAX
            } else {
                self.flow[e]
            };
            if d <= delta {
                delta = d;
                self.u_out = u;
                result = 2;
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        self.delta = delta;
        result != 0
    }

    fn change_flow(&mut self, change: bool) {
        if self.delta > 0 {
            let val = self.state[self.in_arc] as i64 * self.delta;
            self.flow[self.in_arc] += val;
            let mut u = self.source[self.in_arc] as usize;
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] -= self.pred_dir[u] as i64 * val;
                u = self.parent[u];
            }
            let mut u = self.target[self.in_arc] as usize;
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += self.pred_dir[u] as i64 * val;
                u = self.parent[u];
            }
        }
        if change {
            self.state[self.in_arc] = STATE_TREE;
            let out = self.pred[self.u_out];
            // uncapacitated: a leaving arc always drops to its lower bound
            debug_assert_eq!(self.flow[out], 0);
            self.state[out] = STATE_LOWER;
        } else {
            self.state[self.in_arc] = -self.state[self.in_arc];
        }
    }

    fn update_tree_structure(&mut self) {
        let u_in = self.u_in;
        let v_in = self.v_in;
        let u_out = self.u_out;
        let in_arc = self.in_arc;
        let join = self.join;

        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = if u_in == self.source[in_arc] as usize {
                DIR_UP
            } else {
                DIR_DOWN
            };

            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };

            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);

                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;

                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;

                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;

            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }

            for i in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[i];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }

            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            let mut p = self.parent[u];
            while u != u_in {
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc = tmp_sc + self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
                p = self.parent[u];
            }
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = if u_in == self.source[in_arc] as usize {
                DIR_UP
            } else {
                DIR_DOWN
            };
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in {
            join
        } else {
            NONE
        };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }

        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }

        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let u_in = self.u_in;
        let c = self.cost[self.in_arc];
        let sigma =
            self.pi[self.v_in] - self.pi[u_in] - if self.pred_dir[u_in] == DIR_UP { c } else { -c };
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }
}
