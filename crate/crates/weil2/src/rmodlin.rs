//! Linear algebra over the local ring R = W2(F_q) (echelon and diagonal
//! normal forms, kernels, solving, determinants), plain linear algebra over
//! the residue field, and finitely generated R-modules presented by
//! generators and relations, optionally carrying a symmetric Gram matrix.
//!
//! R is a chain ring: every ideal is 0, 2R or R, units are the elements with
//! nonzero residue, and 2R squares to zero. Every matrix is equivalent to a
//! diagonal matrix with entries 1, 2, 0, which is what `snf` computes with
//! invertible transforms on both sides.

use crate::witt::{check_size_guard, Field, Gf2m, Witt2};

// ---------------------------------------------------------------------------
// residue-field matrices

/// A dense matrix over F_{2^m}.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct KMatrix {
    pub rows: usize,
    pub cols: usize,
    pub field: Field,
    pub entries: Vec<Gf2m>,
}

impl KMatrix {
    pub fn zero(field: Field, rows: usize, cols: usize) -> KMatrix {
        KMatrix { rows, cols, field, entries: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: Field, n: usize) -> KMatrix {
        let mut m = KMatrix::zero(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_rows(field: Field, rows: Vec<Vec<Gf2m>>) -> KMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            entries.extend(row);
        }
        for e in &entries {
            assert_eq!(e.field, field, "field context mismatch");
        }
        KMatrix { rows: r, cols: c, field, entries }
    }

    pub fn get(&self, i: usize, j: usize) -> Gf2m {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Gf2m) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Gf2m] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> KMatrix {
        let mut t = KMatrix::zero(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &KMatrix) -> KMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = KMatrix::zero(self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.set(i, j, out.get(i, j) + a.mul(other.get(k, j)));
                }
            }
        }
        out
    }

    pub fn add(&self, other: &KMatrix) -> KMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a = *a + *b;
        }
        out
    }

    pub fn mul_vec(&self, x: &[Gf2m]) -> Vec<Gf2m> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = self.field.zero();
                for j in 0..self.cols {
                    acc = acc + self.get(i, j).mul(x[j]);
                }
                acc
            })
            .collect()
    }

    pub fn vec_mul(&self, x: &[Gf2m]) -> Vec<Gf2m> {
        assert_eq!(self.rows, x.len());
        (0..self.cols)
            .map(|j| {
                let mut acc = self.field.zero();
                for i in 0..self.rows {
                    acc = acc + x[i].mul(self.get(i, j));
                }
                acc
            })
            .collect()
    }

    /// Reduced row echelon form with the list of pivot columns.
    pub fn rref(&self) -> (KMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0usize;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m.get(r, c).inv();
            for j in 0..m.cols {
                m.set(r, j, m.get(r, j).mul(inv));
            }
            for i in 0..m.rows {
                if i != r && !m.get(i, c).is_zero() {
                    let f = m.get(i, c);
                    for j in 0..m.cols {
                        let v = m.get(i, j) + f.mul(m.get(r, j));
                        m.set(i, j, v);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let (x, y) = (self.get(a, j), self.get(b, j));
            self.set(a, j, y);
            self.set(b, j, x);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Rows spanning {x : self * x^T = 0}.
    pub fn right_kernel(&self) -> KMatrix {
        let (e, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut rows = Vec::new();
        for &fc in &free {
            let mut v = vec![self.field.zero(); self.cols];
            v[fc] = self.field.one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = e.get(r, fc);
            }
            rows.push(v);
        }
        KMatrix::from_rows_or_empty(self.field, self.cols, rows)
    }

    pub fn left_kernel(&self) -> KMatrix {
        self.transpose().right_kernel()
    }

    pub fn from_rows_or_empty(field: Field, cols: usize, rows: Vec<Vec<Gf2m>>) -> KMatrix {
        if rows.is_empty() {
            KMatrix::zero(field, 0, cols)
        } else {
            KMatrix::from_rows(field, rows)
        }
    }

    /// Some x with self * x = b, if solvable.
    pub fn solve(&self, b: &[Gf2m]) -> Option<Vec<Gf2m>> {
        assert_eq!(self.rows, b.len());
        let mut aug = KMatrix::zero(self.field, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, self.cols, b[i]);
        }
        let (e, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![self.field.zero(); self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = e.get(r, self.cols);
        }
        Some(x)
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.rank() == self.rows
    }

    pub fn inverse(&self) -> Option<KMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = KMatrix::zero(self.field, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, n + i, self.field.one());
        }
        let (e, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = KMatrix::zero(self.field, n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, e.get(i, n + j));
            }
        }
        Some(inv)
    }

    pub fn det(&self) -> Gf2m {
        assert_eq!(self.rows, self.cols, "det needs a square matrix");
        let mut m = self.clone();
        let mut det = self.field.one();
        for c in 0..m.cols {
            let Some(p) = (c..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                return self.field.zero();
            };
            m.swap_rows(c, p);
            let piv = m.get(c, c);
            det = det.mul(piv);
            let inv = piv.inv();
            for i in c + 1..m.rows {
                let f = m.get(i, c).mul(inv);
                if f.is_zero() {
                    continue;
                }
                for j in c..m.cols {
                    let v = m.get(i, j) + f.mul(m.get(c, j));
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    /// Is v in the row span?
    pub fn row_space_contains(&self, v: &[Gf2m]) -> bool {
        self.transpose().solve(v).is_some()
    }

    pub fn lift_teich(&self) -> RMatrix {
        RMatrix {
            rows: self.rows,
            cols: self.cols,
            field: self.field,
            entries: self.entries.iter().map(|&e| Witt2::teich(e)).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// matrices over R

/// A dense matrix over R = W2(F_q), row major.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RMatrix {
    pub rows: usize,
    pub cols: usize,
    pub field: Field,
    pub entries: Vec<Witt2>,
}

/// A pivot found by `rref`: position plus whether the pivot is a unit
/// (normalized to 1) or lies in the maximal ideal (normalized to 2).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Pivot {
    pub row: usize,
    pub col: usize,
    pub unit: bool,
}

impl RMatrix {
    pub fn zero(field: Field, rows: usize, cols: usize) -> RMatrix {
        RMatrix { rows, cols, field, entries: vec![Witt2::zero(field); rows * cols] }
    }

    pub fn identity(field: Field, n: usize) -> RMatrix {
        let mut m = RMatrix::zero(field, n, n);
        for i in 0..n {
            m.set(i, i, Witt2::one(field));
        }
        m
    }

    pub fn from_rows(field: Field, rows: Vec<Vec<Witt2>>) -> RMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            entries.extend(row);
        }
        for e in &entries {
            assert_eq!(e.field(), field, "field context mismatch");
        }
        RMatrix { rows: r, cols: c, field, entries }
    }

    pub fn from_rows_or_empty(field: Field, cols: usize, rows: Vec<Vec<Witt2>>) -> RMatrix {
        if rows.is_empty() {
            RMatrix::zero(field, 0, cols)
        } else {
            RMatrix::from_rows(field, rows)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Witt2 {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Witt2) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Witt2] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn transpose(&self) -> RMatrix {
        let mut t = RMatrix::zero(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &RMatrix) -> RMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = RMatrix::zero(self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.set(i, j, out.get(i, j) + a * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn add(&self, other: &RMatrix) -> RMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a = *a + *b;
        }
        out
    }

    pub fn neg(&self) -> RMatrix {
        let mut out = self.clone();
        for a in out.entries.iter_mut() {
            *a = -*a;
        }
        out
    }

    pub fn sub(&self, other: &RMatrix) -> RMatrix {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: Witt2) -> RMatrix {
        let mut out = self.clone();
        for a in out.entries.iter_mut() {
            *a = *a * s;
        }
        out
    }

    pub fn mul_vec(&self, x: &[Witt2]) -> Vec<Witt2> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Witt2::zero(self.field);
                for j in 0..self.cols {
                    acc = acc + self.get(i, j) * x[j];
                }
                acc
            })
            .collect()
    }

    pub fn vec_mul(&self, x: &[Witt2]) -> Vec<Witt2> {
        assert_eq!(self.rows, x.len());
        (0..self.cols)
            .map(|j| {
                let mut acc = Witt2::zero(self.field);
                for i in 0..self.rows {
                    acc = acc + x[i] * self.get(i, j);
                }
                acc
            })
            .collect()
    }

    pub fn vstack(&self, other: &RMatrix) -> RMatrix {
        assert_eq!(self.cols, other.cols);
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        RMatrix { rows: self.rows + other.rows, cols: self.cols, field: self.field, entries }
    }

    /// Residue matrix mod 2R.
    pub fn residue(&self) -> KMatrix {
        KMatrix {
            rows: self.rows,
            cols: self.cols,
            field: self.field,
            entries: self.entries.iter().map(|e| e.residue()).collect(),
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let (x, y) = (self.get(a, j), self.get(b, j));
            self.set(a, j, y);
            self.set(b, j, x);
        }
    }

    fn scale_row(&mut self, r: usize, s: Witt2) {
        for j in 0..self.cols {
            self.set(r, j, self.get(r, j) * s);
        }
    }

    /// row a += s * row b
    fn add_row(&mut self, a: usize, b: usize, s: Witt2) {
        for j in 0..self.cols {
            let v = self.get(a, j) + s * self.get(b, j);
            self.set(a, j, v);
        }
    }

    /// Row-reduced echelon form over R with pivots normalized to 1 or 2.
    ///
    /// Unit pivots are exhausted first (re-sweeping, since eliminations can
    /// surface new units), each with its column cleared everywhere; the rows
    /// left over lie entirely in 2R and get 2-pivots, which clear the ideal
    /// part of the remaining entries in their column.
    pub fn rref(&self) -> (RMatrix, Vec<Pivot>) {
        let mut m = self.clone();
        let mut pivot_cols: Vec<usize> = Vec::new();
        let mut r = 0usize;
        loop {
            let mut progressed = false;
            for c in 0..m.cols {
                if r == m.rows || pivot_cols.contains(&c) {
                    continue;
                }
                let Some(p) = (r..m.rows).find(|&i| m.get(i, c).is_unit()) else {
                    continue;
                };
                m.swap_rows(r, p);
                m.scale_row(r, m.get(r, c).inv());
                for i in 0..m.rows {
                    if i != r && !m.get(i, c).is_zero() {
                        let f = -m.get(i, c);
                        m.add_row(i, r, f);
                    }
                }
                pivot_cols.push(c);
                r += 1;
                progressed = true;
            }
            if !progressed {
                break;
            }
        }
        // order the unit pivot rows by column
        let mut order: Vec<usize> = (0..pivot_cols.len()).collect();
        order.sort_by_key(|&i| pivot_cols[i]);
        let sorted: Vec<Vec<Witt2>> = order.iter().map(|&i| m.row(i).to_vec()).collect();
        for (i, row) in sorted.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        pivot_cols.sort();
        let mut pivots: Vec<Pivot> = pivot_cols
            .iter()
            .enumerate()
            .map(|(row, &col)| Pivot { row, col, unit: true })
            .collect();
        // remaining rows lie in 2R
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            debug_assert!(!m.get(p, c).is_unit());
            m.swap_rows(r, p);
            // entry is (0, d); scale by the Teichmueller unit with square
            // 1/d to make the pivot exactly 2
            let d = m.get(r, c).a1;
            m.scale_row(r, Witt2::teich(d.inv().sqrt()));
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let e = m.get(i, c);
                if !e.a1.is_zero() {
                    m.add_row(i, r, -Witt2::teich(e.a1.sqrt()));
                }
            }
            pivots.push(Pivot { row: r, col: c, unit: false });
            r += 1;
        }
        (m, pivots)
    }

    /// The unique basis in reduced form of a row span that is a free direct
    /// summand (full unit rank): row i has exact value 1 at the i-th residue
    /// pivot column, exact 0 at the others, and entries in 2R left of its
    /// pivot. Depends only on the span, not the presenting basis.
    pub fn canonical_free_basis(&self) -> Option<RMatrix> {
        let (_, pivots) = self.residue().rref();
        if pivots.len() != self.rows {
            return None;
        }
        // invert the restriction to pivot columns
        let mut c = RMatrix::zero(self.field, self.rows, self.rows);
        for i in 0..self.rows {
            for (j, &pc) in pivots.iter().enumerate() {
                c.set(i, j, self.get(i, pc));
            }
        }
        let cinv = c.inverse()?;
        Some(cinv.mul(self))
    }

    /// Number of unit pivots of the echelon form.
    pub fn unit_rank(&self) -> usize {
        self.residue().rank()
    }

    /// Diagonal normal form D = U * self * V with invertible U, V and
    /// diagonal entries 1, 2, 0 in that order.
    pub fn snf(&self) -> Snf {
        let mut a = self.clone();
        let f = self.field;
        let (r, c) = (a.rows, a.cols);
        let mut u = RMatrix::identity(f, r);
        let mut u_inv = RMatrix::identity(f, r);
        let mut v = RMatrix::identity(f, c);
        let mut v_inv = RMatrix::identity(f, c);
        let mut det_u = Witt2::one(f);
        let mut det_v = Witt2::one(f);
        let minus_one = -Witt2::one(f);

        // row op helpers keep U * orig * V = A and inverses in sync
        macro_rules! rswap {
            ($x:expr, $y:expr) => {
                if $x != $y {
                    a.swap_rows($x, $y);
                    u.swap_rows($x, $y);
                    u_inv.swap_cols($x, $y);
                    det_u = det_u * minus_one;
                }
            };
        }
        macro_rules! cswap {
            ($x:expr, $y:expr) => {
                if $x != $y {
                    a.swap_cols($x, $y);
                    v.swap_cols($x, $y);
                    v_inv.swap_rows($x, $y);
                    det_v = det_v * minus_one;
                }
            };
        }
        macro_rules! rscale {
            ($i:expr, $s:expr) => {{
                let s: Witt2 = $s;
                a.scale_row($i, s);
                u.scale_row($i, s);
                u_inv.scale_col($i, s.inv());
                det_u = det_u * s;
            }};
        }
        macro_rules! radd {
            ($i:expr, $j:expr, $s:expr) => {{
                let s: Witt2 = $s;
                a.add_row($i, $j, s);
                u.add_row($i, $j, s);
                u_inv.add_col($j, $i, -s);
            }};
        }
        macro_rules! cadd {
            // col j += s * col i
            ($j:expr, $i:expr, $s:expr) => {{
                let s: Witt2 = $s;
                a.add_col($j, $i, s);
                v.add_col($j, $i, s);
                v_inv.add_row($i, $j, -s);
            }};
        }

        let steps = r.min(c);
        let mut t = 0usize;
        // unit pivots first
        while t < steps {
            let mut found = None;
            'search: for i in t..r {
                for j in t..c {
                    if a.get(i, j).is_unit() {
                        found = Some((i, j));
                        break 'search;
                    }
                }
            }
            let Some((pi, pj)) = found else { break };
            rswap!(t, pi);
            cswap!(t, pj);
            rscale!(t, a.get(t, t).inv());
            for i in 0..r {
                if i != t && !a.get(i, t).is_zero() {
                    radd!(i, t, -a.get(i, t));
                }
            }
            for j in 0..c {
                if j != t && !a.get(t, j).is_zero() {
                    cadd!(j, t, -a.get(t, j));
                }
            }
            t += 1;
        }
        // remaining entries all lie in 2R
        while t < steps {
            let mut found = None;
            'search2: for i in t..r {
                for j in t..c {
                    if !a.get(i, j).is_zero() {
                        found = Some((i, j));
                        break 'search2;
                    }
                }
            }
            let Some((pi, pj)) = found else { break };
            rswap!(t, pi);
            cswap!(t, pj);
            rscale!(t, Witt2::teich(a.get(t, t).a1.inv().sqrt()));
            for i in 0..r {
                if i != t && !a.get(i, t).a1.is_zero() {
                    radd!(i, t, -Witt2::teich(a.get(i, t).a1.sqrt()));
                }
            }
            for j in 0..c {
                if j != t && !a.get(t, j).a1.is_zero() {
                    cadd!(j, t, -Witt2::teich(a.get(t, j).a1.sqrt()));
                }
            }
            t += 1;
        }

        let mut diag = Vec::with_capacity(steps);
        for i in 0..steps {
            let e = a.get(i, i);
            diag.push(if e.is_zero() {
                DiagEntry::Zero
            } else if e.is_unit() {
                DiagEntry::One
            } else {
                DiagEntry::Two
            });
        }
        Snf { d: a, u, u_inv, v, v_inv, det_u, det_v, diag }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            let (x, y) = (self.get(i, a), self.get(i, b));
            self.set(i, a, y);
            self.set(i, b, x);
        }
    }

    fn scale_col(&mut self, c: usize, s: Witt2) {
        for i in 0..self.rows {
            self.set(i, c, self.get(i, c) * s);
        }
    }

    /// col a += s * col b
    fn add_col(&mut self, a: usize, b: usize, s: Witt2) {
        for i in 0..self.rows {
            let v = self.get(i, a) + s * self.get(i, b);
            self.set(i, a, v);
        }
    }

    pub fn det(&self) -> Witt2 {
        assert_eq!(self.rows, self.cols, "det needs a square matrix");
        let snf = self.snf();
        let mut d = Witt2::one(self.field);
        for i in 0..self.rows {
            d = d * snf.d.get(i, i);
        }
        d * (snf.det_u * snf.det_v).inv()
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.det().is_unit()
    }

    pub fn inverse(&self) -> Option<RMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let snf = self.snf();
        if !(0..self.rows).all(|i| snf.d.get(i, i).is_unit()) {
            return None;
        }
        // self = Uinv D Vinv with D = I, so inverse = V U
        Some(snf.v.mul(&snf.u))
    }

    /// Rows spanning {x : self * x^T = 0}, free generators first, then
    /// generators of the 2-torsion part.
    pub fn right_kernel_gens(&self) -> KernelGens {
        let snf = self.snf();
        let steps = self.rows.min(self.cols);
        let mut free = Vec::new();
        let mut torsion = Vec::new();
        for j in 0..self.cols {
            let class = if j < steps { snf.diag[j] } else { DiagEntry::Zero };
            match class {
                DiagEntry::One => {}
                DiagEntry::Zero => {
                    free.push((0..self.cols).map(|i| snf.v.get(i, j)).collect::<Vec<_>>())
                }
                DiagEntry::Two => torsion.push(
                    (0..self.cols).map(|i| snf.v.get(i, j).double()).collect::<Vec<_>>(),
                ),
            }
        }
        KernelGens { free, torsion, cols: self.cols, field: self.field }
    }

    pub fn left_kernel_gens(&self) -> KernelGens {
        self.transpose().right_kernel_gens()
    }

    /// Some x with self * x = b, if solvable.
    pub fn solve(&self, b: &[Witt2]) -> Option<Vec<Witt2>> {
        assert_eq!(self.rows, b.len());
        let snf = self.snf();
        let c = {
            let mut v = vec![Witt2::zero(self.field); self.rows];
            for i in 0..self.rows {
                for k in 0..self.rows {
                    v[i] = v[i] + snf.u.get(i, k) * b[k];
                }
            }
            v
        };
        let steps = self.rows.min(self.cols);
        let mut y = vec![Witt2::zero(self.field); self.cols];
        for i in 0..self.rows {
            let class = if i < steps { snf.diag[i] } else { DiagEntry::Zero };
            match class {
                DiagEntry::One => {
                    if i < self.cols {
                        y[i] = c[i];
                    }
                }
                DiagEntry::Two => {
                    if !c[i].in_ideal() {
                        return None;
                    }
                    y[i] = Witt2::teich(c[i].a1.sqrt());
                }
                DiagEntry::Zero => {
                    if !c[i].is_zero() {
                        return None;
                    }
                }
            }
        }
        let mut x = vec![Witt2::zero(self.field); self.cols];
        for i in 0..self.cols {
            for k in 0..self.cols {
                x[i] = x[i] + snf.v.get(i, k) * y[k];
            }
        }
        Some(x)
    }

    /// Is v in the row span of self?
    pub fn row_space_contains(&self, v: &[Witt2]) -> bool {
        self.transpose().solve(v).is_some()
    }

    pub fn lex_key(&self) -> Vec<(u32, u32)> {
        self.entries.iter().map(|e| (e.a0.bits, e.a1.bits)).collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DiagEntry {
    One,
    Two,
    Zero,
}

/// Result of `RMatrix::snf`: d = u * orig * v, orig = u_inv * d * v_inv.
pub struct Snf {
    pub d: RMatrix,
    pub u: RMatrix,
    pub u_inv: RMatrix,
    pub v: RMatrix,
    pub v_inv: RMatrix,
    pub det_u: Witt2,
    pub det_v: Witt2,
    pub diag: Vec<DiagEntry>,
}

/// Generators of a kernel submodule of R^cols.
pub struct KernelGens {
    pub free: Vec<Vec<Witt2>>,
    pub torsion: Vec<Vec<Witt2>>,
    pub cols: usize,
    pub field: Field,
}

impl KernelGens {
    pub fn all(&self) -> Vec<Vec<Witt2>> {
        let mut v = self.free.clone();
        v.extend(self.torsion.iter().cloned());
        v
    }

    /// The kernel as an abstract module: its generators satisfy exactly the
    /// relations 2 * (torsion generator) = 0.
    pub fn as_module(&self) -> FgRModule {
        let g = self.free.len() + self.torsion.len();
        let two = Witt2::two(self.field);
        let rel_rows: Vec<Vec<Witt2>> = (0..self.torsion.len())
            .map(|t| {
                let mut row = vec![Witt2::zero(self.field); g];
                row[self.free.len() + t] = two;
                row
            })
            .collect();
        FgRModule::new(self.field, g, RMatrix::from_rows_or_empty(self.field, g, rel_rows), None)
    }
}

// ---------------------------------------------------------------------------
// finitely generated R-modules

/// A finitely generated R-module presented by generators and relations,
/// optionally with a symmetric Gram matrix on the generators.
///
/// Equality of presentations is never used; modules are compared through
/// their structure invariants or explicit isometries.
#[derive(Clone, Debug)]
pub struct FgRModule {
    pub gens: usize,
    pub relations: RMatrix,
    pub gram: Option<RMatrix>,
    field: Field,
    /// change of basis: coords in the diagonalizing basis are v * basis_to
    basis_to: RMatrix,
    /// rows of basis_from are the diagonalizing basis of R^gens
    basis_from: RMatrix,
    /// annihilator class of each diagonal coordinate
    diag: Vec<DiagEntry>,
}

impl FgRModule {
    pub fn new(field: Field, gens: usize, relations: RMatrix, gram: Option<RMatrix>) -> FgRModule {
        assert_eq!(relations.cols, gens, "relation width must match generators");
        if let Some(g) = &gram {
            assert_eq!((g.rows, g.cols), (gens, gens), "gram must be gens x gens");
            assert_eq!(g, &g.transpose(), "gram must be symmetric");
            let prod = relations.mul(g);
            assert!(prod.is_zero(), "gram does not descend to the quotient");
        }
        let snf = relations.snf();
        let steps = relations.rows.min(gens);
        let mut diag = vec![DiagEntry::Zero; gens];
        for j in 0..steps {
            diag[j] = snf.diag[j];
        }
        FgRModule {
            gens,
            relations,
            gram,
            field,
            basis_to: snf.v.clone(),
            basis_from: snf.v_inv.clone(),
            diag,
        }
    }

    pub fn free(field: Field, gens: usize, gram: Option<RMatrix>) -> FgRModule {
        FgRModule::new(field, gens, RMatrix::zero(field, 0, gens), gram)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Invariants (a, b) of the decomposition R^a + k^b.
    pub fn structure(&self) -> (usize, usize) {
        let a = self.diag.iter().filter(|d| **d == DiagEntry::Zero).count();
        let b = self.diag.iter().filter(|d| **d == DiagEntry::Two).count();
        (a, b)
    }

    pub fn size(&self) -> u64 {
        let (a, b) = self.structure();
        let q = self.field.q();
        q.pow(2 * a as u32 + b as u32)
    }

    /// Canonical representative of the coset of v in the quotient.
    pub fn canonical_rep(&self, v: &[Witt2]) -> Vec<Witt2> {
        assert_eq!(v.len(), self.gens);
        let mut y = self.basis_to.vec_mul(v);
        for (i, d) in self.diag.iter().enumerate() {
            match d {
                DiagEntry::One => y[i] = Witt2::zero(self.field),
                DiagEntry::Two => y[i] = Witt2::teich(y[i].a0),
                DiagEntry::Zero => {}
            }
        }
        self.basis_from.vec_mul(&y)
    }

    pub fn is_zero_element(&self, v: &[Witt2]) -> bool {
        self.canonical_rep(v).iter().all(|e| e.is_zero())
    }

    /// All canonical coset representatives (guarded enumeration).
    pub fn elements(&self) -> Vec<Vec<Witt2>> {
        check_size_guard(self.size()).expect("module too large to enumerate");
        let f = self.field;
        let mut coords: Vec<Vec<Witt2>> = vec![vec![]];
        for d in &self.diag {
            let choices: Vec<Witt2> = match d {
                DiagEntry::One => vec![Witt2::zero(f)],
                DiagEntry::Two => f.elements().map(Witt2::teich).collect(),
                DiagEntry::Zero => f.witt_elements().collect(),
            };
            let mut next = Vec::with_capacity(coords.len() * choices.len());
            for base in &coords {
                for &c in &choices {
                    let mut b = base.clone();
                    b.push(c);
                    next.push(b);
                }
            }
            coords = next;
        }
        coords.into_iter().map(|y| self.basis_from.vec_mul(&y)).collect()
    }

    /// Gram pairing of two coefficient vectors.
    pub fn pair(&self, x: &[Witt2], y: &[Witt2]) -> Witt2 {
        let g = self.gram.as_ref().expect("module carries no gram");
        let gy = g.mul_vec(y);
        let mut acc = Witt2::zero(self.field);
        for i in 0..self.gens {
            acc = acc + x[i] * gy[i];
        }
        acc
    }

    /// Number of elements pairing to zero with every generator.
    pub fn radical_size(&self) -> u64 {
        let g = self.gram.as_ref().expect("module carries no gram");
        let mut count = 0u64;
        for y in self.elements() {
            let gy = g.mul_vec(&y);
            if gy.iter().all(|e| e.is_zero()) {
                count += 1;
            }
        }
        count
    }
}

/// Check that the generator map f (rows: images of A's generators as
/// coefficient vectors in B's generators) is a well-defined bijective map
/// A -> B compatible with the Gram forms when both are present.
pub fn is_isometry(f: &RMatrix, a: &FgRModule, b: &FgRModule) -> bool {
    if f.rows != a.gens || f.cols != b.gens {
        return false;
    }
    // well-defined on relations
    for r in 0..a.relations.rows {
        let img = f.vec_mul(a.relations.row(r));
        if !b.is_zero_element(&img) {
            return false;
        }
    }
    // same size and surjective, hence bijective
    if a.size() != b.size() {
        return false;
    }
    let quot_rel = b.relations.vstack(f);
    let quot = FgRModule::new(b.field, b.gens, quot_rel, None);
    if quot.size() != 1 {
        return false;
    }
    // gram compatibility
    match (&a.gram, &b.gram) {
        (Some(ga), Some(gb)) => {
            let lhs = f.mul(gb).mul(&f.transpose());
            &lhs == ga
        }
        (None, None) => true,
        _ => false,
    }
}
