//! Intertwiners between lagrangian models: the averaging operator, its
//! shifted form for overlapping lagrangians, the composition constant as a
//! Gauss sum, canonical kernel functions attached to pairs of lagrangian
//! lifts, and the projective cocycle of the lifted symplectic action.

use crate::heisenberg::{
    asp_act_enh, asp_mul, epsilon, transport, AspElement, EnhLagrangian, HeisCtx, HeisElem, Model,
};
use crate::qforms::{k_vectors, QFormR};
use crate::rmodlin::{KMatrix, RMatrix};
use crate::witt::{psi_tr, CycInt, Gf2m, Witt2};

/// Value of the splitting at an ambient vector of the lagrangian.
pub fn tau_at(ctx: &HeisCtx, enh: &EnhLagrangian, x: &[Gf2m]) -> HeisElem {
    HeisElem {
        v: x.to_vec(),
        z: enh.alpha_at(ctx, x),
    }
}

/// Basis of L_1 ∩ L_2 as ambient row vectors.
pub fn intersection_basis(l1: &KMatrix, l2: &KMatrix) -> Vec<Vec<Gf2m>> {
    let field = l1.field;
    let mut rows = Vec::new();
    for i in 0..l1.rows {
        rows.push(l1.row(i).to_vec());
    }
    for i in 0..l2.rows {
        rows.push(l2.row(i).to_vec());
    }
    let stacked = KMatrix::from_rows_or_empty(field, l1.cols, rows);
    let lk = stacked.left_kernel();
    let mut out = Vec::new();
    for i in 0..lk.rows {
        let a = &lk.row(i)[..l1.rows];
        out.push(l1.vec_mul(a));
    }
    out
}

/// (F f)(h) = sum over m in L_1 of f(tau_1(m) h); lands in the L_1 model.
pub fn op_f_apply(ctx: &HeisCtx, l1: &EnhLagrangian, f: &[CycInt]) -> Vec<CycInt> {
    assert_eq!(f.len(), ctx.group_size() as usize);
    let coeffs = k_vectors(ctx.field, l1.l.rows);
    let taus: Vec<HeisElem> = coeffs.iter().map(|c| l1.tau_coeffs(ctx, c)).collect();
    let mut out = Vec::with_capacity(f.len());
    for h in ctx.elements() {
        let mut acc = CycInt::zero();
        for t in &taus {
            acc = &acc + &f[ctx.index(&ctx.mul(t, &h))];
        }
        out.push(acc);
    }
    out
}

/// Matrix of the averaging operator from the L_2 model to the L_1 model.
pub fn op_f(m1: &Model, m2: &Model) -> Vec<Vec<CycInt>> {
    let ctx = &m1.ctx;
    let mut cols = Vec::new();
    for b in &m2.basis {
        cols.push(m1.coords(&op_f_apply(ctx, &m1.enh, b)));
    }
    let d1 = m1.dim();
    let d2 = m2.dim();
    let mut mat = vec![vec![CycInt::zero(); d2]; d1];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..d1 {
            mat[i][j] = col[i].clone();
        }
    }
    mat
}

/// Shift vector for the general intertwiner: the lexicographically least w
/// with alpha_2(x) - alpha_1(x) = Fr(omega(x, w)) for all x in L_1 ∩ L_2.
pub fn solve_w(ctx: &HeisCtx, l1: &EnhLagrangian, l2: &EnhLagrangian) -> Option<Vec<Gf2m>> {
    let field = ctx.field;
    let dim = 2 * ctx.n;
    let om_bar = ctx.btilde.sub(&ctx.btilde.transpose()).residue();
    let dbasis = intersection_basis(&l1.l, &l2.l);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for x in &dbasis {
        let diff = l2.alpha_at(ctx, x) - l1.alpha_at(ctx, x);
        assert!(diff.in_ideal(), "enhancements differ by a unit on the intersection");
        rows.push(om_bar.mul_vec(x));
        rhs.push(diff.a1.sqrt().sqrt());
    }
    let a = KMatrix::from_rows_or_empty(field, dim, rows);
    let w0 = if dbasis.is_empty() {
        vec![field.zero(); dim]
    } else {
        a.solve(&rhs)?
    };
    let ker = a.right_kernel();
    let mut best: Option<Vec<Gf2m>> = None;
    for c in k_vectors(field, ker.rows) {
        let mut w = w0.clone();
        for (i, ci) in c.iter().enumerate() {
            for j in 0..dim {
                w[j] = w[j] + *ci * ker.get(i, j);
            }
        }
        let better = match &best {
            None => true,
            Some(b) => {
                let kb: Vec<u32> = b.iter().map(|g| g.bits).collect();
                let kw: Vec<u32> = w.iter().map(|g| g.bits).collect();
                kw < kb
            }
        };
        if better {
            best = Some(w);
        }
    }
    best
}

/// General intertwiner: sums f((w,0) tau_1(s) h) over a complement of
/// L_1 ∩ L_2 inside L_1.
pub fn op_f_flat_apply(
    ctx: &HeisCtx,
    l1: &EnhLagrangian,
    l2: &EnhLagrangian,
    w: &[Gf2m],
    f: &[CycInt],
) -> Vec<CycInt> {
    assert_eq!(f.len(), ctx.group_size() as usize);
    let field = ctx.field;
    let n1 = l1.l.rows;
    // coefficient rows of the intersection inside L_1
    let mut span_rows = Vec::new();
    for x in intersection_basis(&l1.l, &l2.l) {
        span_rows.push(l1.l.transpose().solve(&x).expect("intersection lies in L_1"));
    }
    let mut comp = Vec::new();
    for i in 0..n1 {
        let mut e = vec![field.zero(); n1];
        e[i] = field.one();
        let trial = KMatrix::from_rows_or_empty(field, n1, span_rows.clone());
        if !trial.row_space_contains(&e) {
            span_rows.push(e.clone());
            comp.push(e);
        }
    }
    let welem = HeisElem {
        v: w.to_vec(),
        z: Witt2::zero(field),
    };
    let mut shifts = Vec::new();
    for c in k_vectors(field, comp.len()) {
        let mut s = vec![field.zero(); n1];
        for (i, ci) in c.iter().enumerate() {
            for j in 0..n1 {
                s[j] = s[j] + *ci * comp[i][j];
            }
        }
        shifts.push(ctx.mul(&welem, &l1.tau_coeffs(ctx, &s)));
    }
    let mut out = Vec::with_capacity(f.len());
    for h in ctx.elements() {
        let mut acc = CycInt::zero();
        for s in &shifts {
            acc = &acc + &f[ctx.index(&ctx.mul(s, &h))];
        }
        out.push(acc);
    }
    out
}

/// Matrix of the general intertwiner together with the shift vector used.
pub fn op_f_flat(m1: &Model, m2: &Model) -> (Vec<Vec<CycInt>>, Vec<Gf2m>) {
    let ctx = &m1.ctx;
    let w = solve_w(ctx, &m1.enh, &m2.enh).expect("shift vector exists");
    let d1 = m1.dim();
    let d2 = m2.dim();
    let mut mat = vec![vec![CycInt::zero(); d2]; d1];
    for j in 0..d2 {
        let col = m1.coords(&op_f_flat_apply(ctx, &m1.enh, &m2.enh, &w, &m2.basis[j]));
        for i in 0..d1 {
            mat[i][j] = col[i].clone();
        }
    }
    (mat, w)
}

/// Coefficient matrix of the map r: L_2 → L_1 with L_3 = { r(x) - x }.
pub fn transfer_map(l1: &KMatrix, l2: &KMatrix, l3: &KMatrix) -> KMatrix {
    let field = l1.field;
    let n1 = l1.rows;
    let mut rows = Vec::new();
    for i in 0..l1.rows {
        rows.push(l1.row(i).to_vec());
    }
    for i in 0..l3.rows {
        rows.push(l3.row(i).to_vec());
    }
    let stacked = KMatrix::from_rows_or_empty(field, l1.cols, rows).transpose();
    let mut out = Vec::new();
    for i in 0..l2.rows {
        let sol = stacked.solve(l2.row(i)).expect("L_1 + L_3 spans everything");
        out.push(sol[..n1].to_vec());
    }
    KMatrix::from_rows_or_empty(field, n1, out)
}

/// The composition form on L_2 defined by
/// tau_3(r(m)-m) tau_2(m) tau_1(-r(m)) = (0, Q(m)), in basis coordinates.
pub fn q123(
    ctx: &HeisCtx,
    l1: &EnhLagrangian,
    l2: &EnhLagrangian,
    l3: &EnhLagrangian,
) -> QFormR {
    let field = ctx.field;
    let n2 = l2.l.rows;
    assert!(intersection_basis(&l1.l, &l2.l).is_empty());
    assert!(intersection_basis(&l1.l, &l3.l).is_empty());
    let rmat = transfer_map(&l1.l, &l2.l, &l3.l);
    let qval = |m: &[Gf2m]| -> Witt2 {
        let rcoef = rmat.vec_mul(&l2.l.transpose().solve(m).expect("m lies in L_2"));
        let rm = l1.l.vec_mul(&rcoef);
        let sum: Vec<Gf2m> = m.iter().zip(rm.iter()).map(|(a, b)| *a + *b).collect();
        l2.alpha_at(ctx, m) + l1.alpha_at(ctx, &rm) - l3.alpha_at(ctx, &sum)
            + ctx.beta(m, &rm)
    };
    let mut b = RMatrix::zero(field, n2, n2);
    for i in 0..n2 {
        b.set(i, i, qval(l2.l.row(i)));
    }
    for i in 0..n2 {
        let rm = l1.l.vec_mul(rmat.row(i));
        for j in 0..n2 {
            if i != j {
                let pol = ctx.omega(&rm, l2.l.row(j));
                b.set(i, j, Witt2::teich(pol.a1.sqrt()));
            }
        }
    }
    QFormR::new(b)
}

/// Composition constant: Gauss sum of the composition form over L_2.
pub fn c123(
    ctx: &HeisCtx,
    l1: &EnhLagrangian,
    l2: &EnhLagrangian,
    l3: &EnhLagrangian,
) -> CycInt {
    q123(ctx, l1, l2, l3).gauss_sum()
}

/// Canonical kernel function attached to a pair of disjoint lagrangian lifts:
/// the unique function with value psi(tr z) at tau_L(a) tau_M(b) (0, z).
pub fn f0_function(ctx: &HeisCtx, lt: &RMatrix, mt: &RMatrix) -> Vec<CycInt> {
    let field = ctx.field;
    let le = epsilon(ctx, lt);
    let me = epsilon(ctx, mt);
    let size = ctx.group_size() as usize;
    let mut out = vec![CycInt::zero(); size];
    let mut seen = vec![false; size];
    for a in k_vectors(field, le.l.rows) {
        let ta = le.tau_coeffs(ctx, &a);
        for b in k_vectors(field, me.l.rows) {
            let tab = ctx.mul(&ta, &me.tau_coeffs(ctx, &b));
            for z in field.witt_elements() {
                let h = ctx.mul(&tab, &ctx.central(z));
                let idx = ctx.index(&h);
                assert!(!seen[idx], "lagrangian lifts are not disjoint");
                seen[idx] = true;
                out[idx] = psi_tr(z);
            }
        }
    }
    assert!(seen.iter().all(|&s| s), "kernel function does not cover the group");
    out
}

/// Group-algebra convolution (f * g)(h) = sum over h_1 of f(h h_1^{-1}) g(h_1).
pub fn convolve(ctx: &HeisCtx, f: &[CycInt], g: &[CycInt]) -> Vec<CycInt> {
    let elems = ctx.elements();
    let invs: Vec<HeisElem> = elems.iter().map(|h| ctx.inv(h)).collect();
    let mut out = vec![CycInt::zero(); elems.len()];
    for (hi, h) in elems.iter().enumerate() {
        let mut acc = CycInt::zero();
        for (ki, _) in elems.iter().enumerate() {
            if g[ki].is_zero() {
                continue;
            }
            let left = ctx.mul(h, &invs[ki]);
            let fv = &f[ctx.index(&left)];
            if fv.is_zero() {
                continue;
            }
            acc = &acc + &(fv * &g[ki]);
        }
        out[hi] = acc;
    }
    out
}

/// Lift of a symplectic-affine element to an operator on the base model:
/// transport to the moved model followed by the general intertwiner back.
pub fn metaplectic_op(ctx: &HeisCtx, base: &Model, g: &AspElement) -> Vec<Vec<CycInt>> {
    let genh = asp_act_enh(ctx, g, &base.enh);
    let w = solve_w(ctx, &base.enh, &genh).expect("shift vector exists");
    let d = base.dim();
    let mut mat = vec![vec![CycInt::zero(); d]; d];
    for j in 0..d {
        let moved = transport(ctx, g, base, &base.basis[j]);
        let back = op_f_flat_apply(ctx, &base.enh, &genh, &w, &moved);
        let col = base.coords(&back);
        for i in 0..d {
            mat[i][j] = col[i].clone();
        }
    }
    mat
}

/// Scalar defect of the lift: M[g] M[h] = (num/den) M[h then g], as an exact
/// fraction of Gaussian integers read off the first nonzero entry.
pub fn metaplectic_cocycle(
    ctx: &HeisCtx,
    base: &Model,
    g: &AspElement,
    h: &AspElement,
) -> (CycInt, CycInt) {
    let prod = mat_mul(&metaplectic_op(ctx, base, g), &metaplectic_op(ctx, base, h));
    let single = metaplectic_op(ctx, base, &asp_mul(ctx, h, g));
    proportional(&prod, &single).expect("lifted operators are proportional")
}

pub fn mat_mul(a: &[Vec<CycInt>], b: &[Vec<CycInt>]) -> Vec<Vec<CycInt>> {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut out = vec![vec![CycInt::zero(); m]; n];
    for i in 0..n {
        assert_eq!(a[i].len(), k);
        for t in 0..k {
            if a[i][t].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] = &out[i][j] + &(&a[i][t] * &b[t][j]);
            }
        }
    }
    out
}

pub fn mat_identity(d: usize) -> Vec<Vec<CycInt>> {
    let mut out = vec![vec![CycInt::zero(); d]; d];
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = CycInt::one();
    }
    out
}

pub fn mat_scale(a: &[Vec<CycInt>], c: &CycInt) -> Vec<Vec<CycInt>> {
    a.iter()
        .map(|row| row.iter().map(|x| x * c).collect())
        .collect()
}

pub fn mat_is_zero(a: &[Vec<CycInt>]) -> bool {
    a.iter().all(|row| row.iter().all(|x| x.is_zero()))
}

/// a = (num/den) b entrywise, certified by cross-multiplication; None if b is
/// zero or no such exact ratio exists.
pub fn proportional(a: &[Vec<CycInt>], b: &[Vec<CycInt>]) -> Option<(CycInt, CycInt)> {
    let mut pivot = None;
    'outer: for i in 0..b.len() {
        for j in 0..b[i].len() {
            if !b[i][j].is_zero() {
                pivot = Some((i, j));
                break 'outer;
            }
        }
    }
    let (pi, pj) = pivot?;
    let num = a[pi][pj].clone();
    let den = b[pi][pj].clone();
    for i in 0..a.len() {
        for j in 0..a[i].len() {
            if &a[i][j] * &den != &b[i][j] * &num {
                return None;
            }
        }
    }
    Some((num, den))
}

/// Exponent t with |num/den|^2 = q^t, if the norm ratio is an exact power.
pub fn norm_ratio_power_of_q(num: &CycInt, den: &CycInt, q: u64) -> Option<i64> {
    use num_bigint::BigInt;
    let a = num.norm_sqr();
    let b = den.norm_sqr();
    if a == BigInt::from(0) || b == BigInt::from(0) {
        return None;
    }
    let qb = BigInt::from(q);
    let mut x = b.clone();
    for t in 0..=64i64 {
        if x == a {
            return Some(t);
        }
        x *= &qb;
    }
    let mut x = a;
    for t in 1..=64i64 {
        x *= &qb;
        if x == b {
            return Some(-t);
        }
    }
    None
}
