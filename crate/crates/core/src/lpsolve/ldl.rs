//! Sparse LDLᵀ factorization for symmetric quasi-definite matrices.
//!
//! The pattern is fixed at construction (reverse Cuthill–McKee ordering,
//! elimination tree, column counts); only the diagonal changes between
//! numeric factorizations. Pivots whose sign disagrees with the expected
//! inertia are replaced by a small signed value (dynamic regularization).

const NONE: usize = usize::MAX;
const DYN_REG_EPS: f64 = 1e-13;
const DYN_REG_DELTA: f64 = 2e-7;

#[derive(Debug, Clone)]
pub struct QuasiDefiniteLdl {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    // upper triangle of the permuted matrix, CSC
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<f64>,
    diag_slot: Vec<usize>,
    // expected pivot sign per permuted index
    sign: Vec<f64>,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    pub regularized_pivots: usize,
}

impl QuasiDefiniteLdl {
    /// `offdiag` holds `(i, j, v)` with `i != j`, each unordered pair at most
    /// once; `signs[i]` is `+1` for the positive block and `-1` for the
    /// negative block.
    pub fn new(n: usize, offdiag: &[(usize, usize, f64)], signs: &[f64]) -> Self {
        assert_eq!(signs.len(), n);
        let perm = rcm_order(n, offdiag);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // column lists of the permuted upper triangle: (row, source slot)
        let mut cols: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (k, &(i, j, _)) in offdiag.iter().enumerate() {
            debug_assert!(i != j);
            let (pi, pj) = (iperm[i], iperm[j]);
            let (r, c) = if pi < pj { (pi, pj) } else { (pj, pi) };
            cols[c].push((r, k));
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowind = Vec::with_capacity(offdiag.len() + n);
        let mut values = Vec::with_capacity(offdiag.len() + n);
        let mut diag_slot = vec![0; n];
        colptr.push(0);
        for (c, col) in cols.iter_mut().enumerate() {
            col.sort_by_key(|e| e.0);
            for &(r, k) in col.iter() {
                rowind.push(r);
                values.push(offdiag[k].2);
            }
            diag_slot[c] = rowind.len();
            rowind.push(c);
            values.push(0.0);
            colptr.push(rowind.len());
        }

        // elimination tree and column counts of L
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for p in colptr[j]..colptr[j + 1] {
                let mut i = rowind[p];
                if i == j {
                    continue;
                }
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];
        let sign = perm.iter().map(|&old| signs[old]).collect();
        Self {
            n,
            perm,
            iperm,
            colptr,
            rowind,
            values,
            diag_slot,
            sign,
            etree,
            lp,
            li: vec![0; total],
            lx: vec![0.0; total],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            regularized_pivots: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// Set the diagonal (original ordering) and refactor.
    pub fn factor(&mut self, diag: &[f64]) -> Result<(), String> {
        assert_eq!(diag.len(), self.n);
        for (old, &v) in diag.iter().enumerate() {
            let slot = self.diag_slot[self.iperm[old]];
            self.values[slot] = v;
        }
        self.numeric()
    }

    fn numeric(&mut self) -> Result<(), String> {
        let n = self.n;
        let mut y_vals = vec![0.0; n];
        let mut y_used = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_space: Vec<usize> = self.lp[..n].to_vec();
        self.regularized_pivots = 0;

        for k in 0..n {
            let mut nnz_y = 0;
            let mut dk = 0.0;
            for p in self.colptr[k]..self.colptr[k + 1] {
                let bidx = self.rowind[p];
                if bidx == k {
                    dk = self.values[p];
                    continue;
                }
                y_vals[bidx] = self.values[p];
                if !y_used[bidx] {
                    y_used[bidx] = true;
                    elim[0] = bidx;
                    let mut n_e = 1;
                    let mut next = self.etree[bidx];
                    while next != NONE && next < k {
                        if y_used[next] {
                            break;
                        }
                        y_used[next] = true;
                        elim[n_e] = next;
                        n_e += 1;
                        next = self.etree[next];
                    }
                    while n_e > 0 {
                        n_e -= 1;
                        y_idx[nnz_y] = elim[n_e];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let tmp = next_space[c];
                let yc = y_vals[c];
                for j in self.lp[c]..tmp {
                    y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[tmp] = k;
                let l = yc * self.dinv[c];
                self.lx[tmp] = l;
                dk -= yc * l;
                next_space[c] += 1;
                y_vals[c] = 0.0;
                y_used[c] = false;
            }
            if !dk.is_finite() {
                return Err(format!("non-finite pivot at {k}"));
            }
            if self.sign[k] * dk <= DYN_REG_EPS {
                dk = self.sign[k] * DYN_REG_DELTA;
                self.regularized_pivots += 1;
            }
            self.d[k] = dk;
            self.dinv[k] = 1.0 / dk;
        }
        Ok(())
    }

    /// Solve in place (original ordering).
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let xi = x[i];
            if xi != 0.0 {
                for j in self.lp[i]..self.lp[i + 1] {
                    x[self.li[j]] -= self.lx[j] * xi;
                }
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[j] * x[self.li[j]];
            }
            x[i] = acc;
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = x[new];
        }
    }
}

/// Reverse Cuthill–McKee ordering of the symmetric pattern; returns `perm[new] = old`.
fn rcm_order(n: usize, offdiag: &[(usize, usize, f64)]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j, _) in offdiag {
        adj[i].push(j);
        adj[j].push(i);
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));

    let mut level = vec![usize::MAX; n];
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree, &visited, &mut level);
        let head = order.len();
        visited[start] = true;
        order.push(start);
        let mut q = head;
        while q < order.len() {
            let v = order[q];
            q += 1;
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (degree[w], w));
            for w in nb {
                visited[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(
    seed: usize,
    adj: &[Vec<usize>],
    degree: &[usize],
    visited: &[bool],
    level: &mut [usize],
) -> usize {
    let mut start = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let (last, depth) = bfs_last_level(start, adj, degree, visited, level);
        if depth <= ecc {
            break;
        }
        ecc = depth;
        start = last;
    }
    start
}

fn bfs_last_level(
    start: usize,
    adj: &[Vec<usize>],
    degree: &[usize],
    visited: &[bool],
    level: &mut [usize],
) -> (usize, usize) {
    let mut queue = vec![start];
    level[start] = 0;
    let mut q = 0;
    while q < queue.len() {
        let v = queue[q];
        q += 1;
        for &w in &adj[v] {
            if !visited[w] && level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push(w);
            }
        }
    }
    let depth = queue.iter().map(|&v| level[v]).max().unwrap_or(0);
    let last = queue
        .iter()
        .copied()
        .filter(|&v| level[v] == depth)
        .min_by_key(|&v| (degree[v], v))
        .unwrap_or(start);
    for &v in &queue {
        level[v] = usize::MAX;
    }
    (last, depth)
}
