use crate::scalar::Scalar;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

const NONE: usize = usize::MAX;

/// Sparse LU factors of a basis matrix plus a product-form eta file.
///
/// Step `k` pivots basis position `col_pos[k]` on row `pivot_row[k]`.
pub(crate) struct Factor<T> {
    m: usize,
    pivot_row: Vec<usize>,
    col_pos: Vec<usize>,
    l_cols: Vec<Vec<(usize, T)>>,
    u_cols: Vec<Vec<(usize, T)>>,
    u_diag: Vec<T>,
    etas: Vec<(usize, T, Vec<(usize, T)>)>,
    lu_nnz: usize,
    eta_nnz: usize,
}

/// Basis positions that could not be pivoted and the rows left uncovered.
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

impl<T: Scalar> Factor<T> {
    pub fn factorize(m: usize, cols: &[&[(usize, T)]]) -> Result<Self, Singular> {
        assert_eq!(cols.len(), m);
        let drop = T::of(1e-14);
        let sing = T::of(1e-11);
        let mut row_count = vec![0usize; m];
        for c in cols {
            for &(i, _) in c.iter() {
                row_count[i] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (cols[p].len(), p));

        let mut f = Factor {
            m,
            pivot_row: Vec::with_capacity(m),
            col_pos: Vec::with_capacity(m),
            l_cols: Vec::with_capacity(m),
            u_cols: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
            etas: Vec::new(),
            lu_nnz: 0,
            eta_nnz: 0,
        };
        let mut step_of_row = vec![NONE; m];
        let mut x = vec![T::zero(); m];
        let mut touched: Vec<usize> = Vec::new();
        let mut is_touched = vec![false; m];
        let mut queued = vec![false; m];
        let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
        let mut bad = Vec::new();

        for &pos in &order {
            for &(i, v) in cols[pos] {
                x[i] = v;
                if !is_touched[i] {
                    is_touched[i] = true;
                    touched.push(i);
                }
                let s = step_of_row[i];
                if s != NONE && !queued[s] {
                    queued[s] = true;
                    heap.push(Reverse(s));
                }
            }
            while let Some(Reverse(j)) = heap.pop() {
                queued[j] = false;
                let v = x[f.pivot_row[j]];
                if v == T::zero() {
                    continue;
                }
                for &(i, l) in &f.l_cols[j] {
                    if !is_touched[i] {
                        is_touched[i] = true;
                        touched.push(i);
                    }
                    x[i] = x[i] - l * v;
                    let s = step_of_row[i];
                    if s != NONE && !queued[s] {
                        queued[s] = true;
                        heap.push(Reverse(s));
                    }
                }
            }
            let mut ucol = Vec::new();
            let mut best = T::zero();
            for &i in &touched {
                if step_of_row[i] != NONE {
                    if x[i].abs() > drop {
                        ucol.push((step_of_row[i], x[i]));
                    }
                } else if x[i].abs() > best {
                    best = x[i].abs();
                }
            }
            if best < sing {
                bad.push(pos);
            } else {
                let thresh = best * T::of(0.1);
                let mut piv = NONE;
                for &i in &touched {
                    if step_of_row[i] == NONE && x[i].abs() >= thresh {
                        if piv == NONE || (row_count[i], i) < (row_count[piv], piv) {
                            piv = i;
                        }
                    }
                }
                let d = x[piv];
                let mut lcol = Vec::new();
                for &i in &touched {
                    if i != piv && step_of_row[i] == NONE && x[i].abs() > drop {
                        lcol.push((i, x[i] / d));
                    }
                }
                let k = f.pivot_row.len();
                step_of_row[piv] = k;
                f.pivot_row.push(piv);
                f.col_pos.push(pos);
                f.l_cols.push(lcol);
                f.u_cols.push(ucol);
                f.u_diag.push(d);
                f.lu_nnz += f.l_cols[k].len() + f.u_cols[k].len() + 1;
            }
            for &i in &touched {
                x[i] = T::zero();
                is_touched[i] = false;
            }
            touched.clear();
        }
        if bad.is_empty() {
            Ok(f)
        } else {
            let rows = (0..m).filter(|&i| step_of_row[i] == NONE).collect();
            Err(Singular { positions: bad, rows })
        }
    }

    /// True once the eta file has grown enough that refactoring pays off.
    pub fn stale(&self, max_etas: usize) -> bool {
        self.etas.len() >= max_etas || self.eta_nnz > 2 * self.lu_nnz + 4 * self.m
    }


    /// Solves `B x = a`; `a` is indexed by row and consumed, result by basis position.
    pub fn ftran(&self, a: &mut [T], out: &mut [T]) {
        let m = self.m;
        let mut w = vec![T::zero(); m];
        for k in 0..m {
            let wk = a[self.pivot_row[k]];
            if wk != T::zero() {
                for &(i, l) in &self.l_cols[k] {
                    a[i] = a[i] - l * wk;
                }
            }
            w[k] = wk;
        }
        for k in (0..m).rev() {
            let z = w[k] / self.u_diag[k];
            if z != T::zero() {
                for &(j, u) in &self.u_cols[k] {
                    w[j] = w[j] - u * z;
                }
            }
            out[self.col_pos[k]] = z;
        }
        for (r, ar, entries) in &self.etas {
            let xr = out[*r] / *ar;
            out[*r] = xr;
            if xr != T::zero() {
                for &(i, a) in entries {
                    out[i] = out[i] - a * xr;
                }
            }
        }
    }

    /// Solves `yᵀ B = cᵀ`; `c` is indexed by basis position and consumed, result by row.
    pub fn btran(&self, c: &mut [T], y: &mut [T]) {
        let m = self.m;
        for (r, ar, entries) in self.etas.iter().rev() {
            let mut s = c[*r];
            for &(i, a) in entries {
                s = s - a * c[i];
            }
            c[*r] = s / *ar;
        }
        let mut s = vec![T::zero(); m];
        for k in 0..m {
            let mut v = c[self.col_pos[k]];
            for &(j, u) in &self.u_cols[k] {
                v = v - u * s[j];
            }
            s[k] = v / self.u_diag[k];
        }
        for k in (0..m).rev() {
            let mut v = s[k];
            for &(i, l) in &self.l_cols[k] {
                v = v - l * y[i];
            }
            y[self.pivot_row[k]] = v;
        }
    }

    /// Records the replacement of basis position `r` by a column whose
    /// transformed representation is `alpha` (indexed by basis position).
    pub fn push_eta(&mut self, r: usize, alpha: &[T]) {
        let drop = T::of(1e-14);
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, a)| i != r && a.abs() > drop)
            .map(|(i, &a)| (i, a))
            .collect::<Vec<_>>();
        self.eta_nnz += entries.len();
        self.etas.push((r, alpha[r], entries));
    }
}
