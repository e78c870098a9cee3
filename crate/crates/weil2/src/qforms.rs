//! R-valued quadratic forms on k^n, their Gauss sums and invariants
//! (discriminant, strata, even normal form, multiplicative lines), k-valued
//! quadratic forms with Arf invariant and Clifford algebras, and a finite
//! Fourier transform against the character psi(tr(.)).

use crate::rmodlin::{FgRModule, KMatrix, RMatrix};
use crate::witt::{check_size_guard, psi_tr, CycInt, Field, Gf2m, Witt2};
use rand::Rng;
use std::collections::HashSet;

// ---------------------------------------------------------------------------
// R-valued quadratic forms

/// A quadratic form q(x) = lift(x) * B * lift(x)^T on k^n with values in R,
/// stored in the canonical shape: full diagonal, off-diagonal entries with
/// ideal part zero. Two symmetric matrices define the same form exactly when
/// they differ by a zero-diagonal symmetric matrix over 2R, which the
/// canonicalization quotients out.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QFormR {
    pub n: usize,
    pub b: RMatrix,
}

impl QFormR {
    pub fn new(b: RMatrix) -> QFormR {
        assert_eq!(b.rows, b.cols, "form matrix must be square");
        assert_eq!(b, b.transpose(), "form matrix must be symmetric");
        let mut c = b.clone();
        for i in 0..b.rows {
            for j in 0..b.cols {
                if i != j {
                    let e = c.get(i, j);
                    c.set(i, j, Witt2::teich(e.a0));
                }
            }
        }
        QFormR { n: b.rows, b: c }
    }

    pub fn field(&self) -> Field {
        self.b.field
    }

    pub fn zero(field: Field, n: usize) -> QFormR {
        QFormR::new(RMatrix::zero(field, n, n))
    }

    pub fn eval_lift(&self, xt: &[Witt2]) -> Witt2 {
        assert_eq!(xt.len(), self.n);
        let bx = self.b.mul_vec(xt);
        let mut acc = Witt2::zero(self.field());
        for i in 0..self.n {
            acc = acc + xt[i] * bx[i];
        }
        acc
    }

    pub fn eval(&self, x: &[Gf2m]) -> Witt2 {
        let lift: Vec<Witt2> = x.iter().map(|&c| Witt2::teich(c)).collect();
        self.eval_lift(&lift)
    }

    /// The residue bilinear form, diagonal included.
    pub fn polar(&self) -> KMatrix {
        self.b.residue()
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.b.det().is_unit()
    }

    /// The additive part: q(x) has residue <x, ystar>^2.
    pub fn qa_part(&self) -> QaForm {
        QaForm {
            ystar: (0..self.n).map(|i| self.b.get(i, i).a0.sqrt()).collect(),
            field: self.field(),
        }
    }

    /// Nondegenerate with nonvanishing additive part.
    pub fn in_u(&self) -> bool {
        self.is_nondegenerate() && self.qa_part().ystar.iter().any(|c| !c.is_zero())
    }

    /// In u with discriminant away from the critical value (n even).
    pub fn in_u0(&self) -> bool {
        if self.n % 2 != 0 || !self.in_u() {
            return false;
        }
        let crit = critical_disc(self.field(), self.n);
        self.discriminant() != Some(crit)
    }

    pub fn gauss_sum(&self) -> CycInt {
        let q = self.field().q();
        let total = q.checked_pow(self.n as u32).expect("domain too large");
        check_size_guard(total).expect("gauss sum domain too large");
        let mut acc = CycInt::zero();
        let mut x = vec![self.field().zero(); self.n];
        loop {
            acc = &acc + &psi_tr(self.eval(&x));
            let mut i = 0;
            loop {
                if i == self.n {
                    return acc;
                }
                let next = x[i].bits + 1;
                if next < q as u32 {
                    x[i] = self.field().elem(next);
                    break;
                }
                x[i] = self.field().zero();
                i += 1;
            }
        }
    }

    /// disc = d1/d0^2 for det B = (d0, d1); None when degenerate.
    pub fn discriminant(&self) -> Option<Gf2m> {
        let d = self.b.det();
        if !d.is_unit() {
            return None;
        }
        Some(d.a1.mul(d.a0.square().inv()))
    }

    /// (kernel dimension of the polar form, whether q vanishes on that
    /// kernel, the induced nondegenerate-polar form on the quotient).
    pub fn stratum(&self) -> (usize, bool, Option<QFormR>) {
        let ker = self.polar().right_kernel();
        let i = ker.rows;
        let vanishes = (0..i).all(|r| self.eval(ker.row(r)).is_zero());
        if !vanishes {
            return (i, false, None);
        }
        let (_, pivots) = ker.rref();
        let coords: Vec<usize> = (0..self.n).filter(|c| !pivots.contains(c)).collect();
        let mut sub = RMatrix::zero(self.field(), coords.len(), coords.len());
        for (a, &ca) in coords.iter().enumerate() {
            for (b, &cb) in coords.iter().enumerate() {
                sub.set(a, b, self.b.get(ca, cb));
            }
        }
        (i, true, Some(QFormR::new(sub)))
    }

    pub fn direct_sum(&self, other: &QFormR) -> QFormR {
        let n = self.n + other.n;
        let mut b = RMatrix::zero(self.field(), n, n);
        for i in 0..self.n {
            for j in 0..self.n {
                b.set(i, j, self.b.get(i, j));
            }
        }
        for i in 0..other.n {
            for j in 0..other.n {
                b.set(self.n + i, self.n + j, other.b.get(i, j));
            }
        }
        QFormR::new(b)
    }
}

/// An additive form q(x) = (0, <x, ystar>^2).
pub struct QaForm {
    pub ystar: Vec<Gf2m>,
    pub field: Field,
}

impl QaForm {
    pub fn eval(&self, x: &[Gf2m]) -> Witt2 {
        let mut acc = self.field.zero();
        for (a, b) in x.iter().zip(&self.ystar) {
            acc = acc + a.mul(*b);
        }
        Witt2::from_ideal(acc.square())
    }
}

/// The discriminant value at which the even normal form degenerates on the
/// radical line.
pub fn critical_disc(field: Field, n: usize) -> Gf2m {
    assert_eq!(n % 2, 0);
    if n % 4 == 0 {
        field.zero()
    } else {
        field.one()
    }
}

/// The Gauss sum of x -> lift(x)^2 in one variable; the base unit whose
/// powers control all fourth powers of nondegenerate Gauss sums.
pub fn gauss_scalar_base(field: Field) -> CycInt {
    QFormR::new(RMatrix::from_rows(field, vec![vec![Witt2::one(field)]])).gauss_sum()
}

/// The matrix of the even normal form
/// (0,eps) y2~^2 + 2 y~ y2~ + y~^2 + 2 sum_i xi~ x-i~
/// in variables ordered y, y2, x_1..x_r, x_{-1}..x_{-r}.
pub fn normal_form_matrix(field: Field, n: usize, eps: Gf2m) -> QFormR {
    assert!(n >= 2 && n % 2 == 0);
    let r = (n - 2) / 2;
    let mut b = RMatrix::zero(field, n, n);
    b.set(0, 0, Witt2::one(field));
    b.set(0, 1, Witt2::one(field));
    b.set(1, 0, Witt2::one(field));
    b.set(1, 1, Witt2::from_ideal(eps));
    for i in 0..r {
        b.set(2 + i, 2 + r + i, Witt2::one(field));
        b.set(2 + r + i, 2 + i, Witt2::one(field));
    }
    QFormR::new(b)
}

/// Bring an even-dimensional form with nondegenerate polar part and nonzero
/// additive part to the normal form above. Returns the parameter eps and the
/// new basis (rows, over R, lifting a k-basis). Over a finite field the
/// hyperbolic splitting can fail (odd Arf class); that is reported as None,
/// as is a missing exact unit vector.
pub fn normal_form_even(q: &QFormR) -> Option<(Gf2m, RMatrix)> {
    let n = q.n;
    let f = q.field();
    if n % 2 != 0 || !q.in_u() {
        return None;
    }
    let ystar = q.qa_part().ystar;

    // an exact unit value: q(l) = 1
    let one = Witt2::one(f);
    let l = k_vectors(f, n).into_iter().find(|v| {
        let dot = v.iter().zip(&ystar).fold(f.zero(), |a, (x, y)| a + x.mul(*y));
        !dot.is_zero() && q.eval(v) == one
    })?;
    let lt: Vec<Witt2> = l.iter().map(|&c| Witt2::teich(c)).collect();

    // the radical line of the polar form restricted to the kernel of ystar
    let polar = q.polar();
    let mut rows = vec![ystar.clone()];
    for i in 0..n {
        rows.push(polar.row(i).to_vec());
    }
    // L2 = kernel of ystar intersected with perp of that kernel; compute as
    // the kernel of the pairing against a basis of ker(ystar)
    let l1 = KMatrix::from_rows(f, vec![ystar.clone()]).right_kernel();
    let l2 = l1.mul(&polar).right_kernel();
    let l2_in_l1: Vec<Vec<Gf2m>> = (0..l2.rows)
        .map(|r| l2.row(r).to_vec())
        .filter(|v| {
            v.iter().zip(&ystar).fold(f.zero(), |a, (x, y)| a + x.mul(*y)).is_zero()
        })
        .collect();
    if l2_in_l1.len() != 1 {
        return None;
    }
    let mut l2v = l2_in_l1[0].clone();
    // normalize the pairing with l to 1
    let c = l2v
        .iter()
        .zip(polar.mul_vec(&l).iter())
        .fold(f.zero(), |a, (x, y)| a + x.mul(*y));
    if c.is_zero() {
        return None;
    }
    let cinv = c.inv();
    for e in l2v.iter_mut() {
        *e = e.mul(cinv);
    }
    let l2t: Vec<Witt2> = l2v.iter().map(|&c| Witt2::teich(c)).collect();
    let eps = {
        let v = q.eval(&l2v);
        debug_assert!(v.in_ideal());
        v.a1
    };

    // orthogonal complement of span(l2, l) over R
    let pair_rows = RMatrix::from_rows(
        f,
        vec![q.b.mul_vec(&l2t), q.b.mul_vec(&lt)],
    );
    let w = pair_rows.right_kernel_gens();
    if !w.torsion.is_empty() || w.free.len() != n - 2 {
        return None;
    }
    let w_res: Vec<Vec<Gf2m>> = w.free.iter().map(|v| v.iter().map(|e| e.residue()).collect()).collect();

    // split the k-valued form on the complement into hyperbolic pairs; the
    // square root turns the ideal-valued restriction into a k-quadratic form
    // with bilinear polarization
    let qw = |cvec: &[Gf2m]| -> Gf2m {
        let mut x = vec![f.zero(); n];
        for (c, row) in cvec.iter().zip(&w_res) {
            for j in 0..n {
                x[j] = x[j] + c.mul(row[j]);
            }
        }
        let v = q.eval(&x);
        debug_assert!(v.in_ideal());
        v.a1.sqrt()
    };
    let pairs = split_hyperbolic(f, n - 2, &qw)?;

    // assemble the new basis: l, l2, then the v's, then the u's
    let mut basis: Vec<Vec<Witt2>> = vec![lt, l2t];
    let r = (n - 2) / 2;
    let in_l = |cvec: &[Gf2m]| -> Vec<Witt2> {
        let mut x = vec![Witt2::zero(f); n];
        for (c, row) in cvec.iter().zip(&w.free) {
            for j in 0..n {
                x[j] = x[j] + Witt2::teich(*c) * row[j];
            }
        }
        x
    };
    for i in 0..r {
        basis.push(in_l(&pairs[i].0));
    }
    for i in 0..r {
        basis.push(in_l(&pairs[i].1));
    }
    let cmat = RMatrix::from_rows(f, basis);
    Some((eps, cmat))
}

/// Split a nondegenerate k-valued quadratic form on k^dim (given through its
/// evaluation closure) into pairs (v, u) with Q(v) = Q(u) = 0, b(v, u) = 1.
/// Fails exactly when the form has no nonzero isotropic vector left.
fn split_hyperbolic(
    f: Field,
    dim: usize,
    q: &dyn Fn(&[Gf2m]) -> Gf2m,
) -> Option<Vec<(Vec<Gf2m>, Vec<Gf2m>)>> {
    if dim == 0 {
        return Some(vec![]);
    }
    // current coordinates: a basis of the remaining subspace, as vectors in
    // the original coordinate space
    let mut space: Vec<Vec<Gf2m>> = (0..dim)
        .map(|i| {
            let mut v = vec![f.zero(); dim];
            v[i] = f.one();
            v
        })
        .collect();
    let add = |a: &[Gf2m], b: &[Gf2m]| -> Vec<Gf2m> {
        a.iter().zip(b).map(|(x, y)| *x + *y).collect()
    };
    let scale = |a: &[Gf2m], c: Gf2m| -> Vec<Gf2m> { a.iter().map(|x| x.mul(c)).collect() };
    let bq = |x: &[Gf2m], y: &[Gf2m]| -> Gf2m { q(&add(x, y)) + q(x) + q(y) };
    let mut pairs = Vec::new();
    while !space.is_empty() {
        let d = space.len();
        // find a nonzero isotropic vector in the span
        let mut found: Option<Vec<Gf2m>> = None;
        let mut coef = vec![f.zero(); d];
        'outer: loop {
            // advance odometer, skipping zero
            let mut i = 0;
            loop {
                if i == d {
                    break 'outer;
                }
                let next = coef[i].bits + 1;
                if next < f.q() as u32 {
                    coef[i] = f.elem(next);
                    break;
                }
                coef[i] = f.zero();
                i += 1;
            }
            let mut v = vec![f.zero(); space[0].len()];
            for (c, row) in coef.iter().zip(&space) {
                v = add(&v, &scale(row, *c));
            }
            if q(&v).is_zero() {
                found = Some(v);
                break;
            }
        }
        let v = found?;
        // a partner with b(v, u) = 1
        let u0 = space.iter().find(|u| !bq(&v, u).is_zero())?.clone();
        let u1 = scale(&u0, bq(&v, &u0).inv());
        let u = add(&u1, &scale(&v, q(&u1)));
        debug_assert!(q(&u).is_zero());
        debug_assert_eq!(bq(&v, &u), f.one());
        // project the rest onto the perp of the pair
        let mut next_space = Vec::new();
        for x in &space {
            let y = add(&add(x, &scale(&v, bq(x, &u))), &scale(&u, bq(x, &v)));
            if y.iter().any(|c| !c.is_zero()) {
                next_space.push(y);
            }
        }
        // keep an independent subset
        let mut kept: Vec<Vec<Gf2m>> = Vec::new();
        for y in next_space {
            let mut trial = kept.clone();
            trial.push(y.clone());
            let m = KMatrix::from_rows(f, trial);
            if m.rank() == kept.len() + 1 {
                kept.push(y);
            }
        }
        debug_assert_eq!(kept.len(), d - 2);
        space = kept;
        pairs.push((v, u));
    }
    Some(pairs)
}

/// All k-vectors of length n in lexicographic odometer order.
pub fn k_vectors(field: Field, n: usize) -> Vec<Vec<Gf2m>> {
    let q = field.q();
    let total = q.checked_pow(n as u32).expect("domain too large");
    check_size_guard(total).expect("vector enumeration too large");
    let mut out = Vec::with_capacity(total as usize);
    let mut x = vec![field.zero(); n];
    loop {
        out.push(x.clone());
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            let next = x[i].bits + 1;
            if next < q as u32 {
                x[i] = field.elem(next);
                break;
            }
            x[i] = field.zero();
            i += 1;
        }
    }
}

/// Normalized representatives (first nonzero coordinate 1) of all lines in
/// k^n, in lexicographic order.
pub fn k_lines(field: Field, n: usize) -> Vec<Vec<Gf2m>> {
    let mut out = Vec::new();
    for lead in 0..n {
        // entries before lead are zero, entry at lead is one, rest free
        for tail in k_vectors(field, n - lead - 1) {
            let mut v = vec![field.zero(); n];
            v[lead] = field.one();
            v[lead + 1..].copy_from_slice(&tail);
            out.push(v);
        }
    }
    out
}

/// Lines on which the form takes only Teichmueller values (a, 0).
pub fn multiplicative_subspaces(q: &QFormR) -> Vec<Vec<Gf2m>> {
    k_lines(q.field(), q.n)
        .into_iter()
        .filter(|v| q.eval(v).a1.is_zero())
        .collect()
}

// ---------------------------------------------------------------------------
// k-valued quadratic forms, Arf, Clifford

/// A quadratic form on k^dim with values in k; coeffs is upper triangular,
/// Q(x) = sum_{i<=j} coeffs[i][j] x_i x_j.
#[derive(Clone, Debug)]
pub struct KQuadForm {
    pub dim: usize,
    pub field: Field,
    pub coeffs: KMatrix,
}

impl KQuadForm {
    pub fn new(coeffs: KMatrix) -> KQuadForm {
        assert_eq!(coeffs.rows, coeffs.cols);
        for i in 0..coeffs.rows {
            for j in 0..i {
                assert!(coeffs.get(i, j).is_zero(), "coeffs must be upper triangular");
            }
        }
        KQuadForm { dim: coeffs.rows, field: coeffs.field, coeffs }
    }

    pub fn eval(&self, x: &[Gf2m]) -> Gf2m {
        let mut acc = self.field.zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                acc = acc + self.coeffs.get(i, j).mul(x[i]).mul(x[j]);
            }
        }
        acc
    }

    pub fn bilinear(&self, x: &[Gf2m], y: &[Gf2m]) -> Gf2m {
        let s: Vec<Gf2m> = x.iter().zip(y).map(|(a, b)| *a + *b).collect();
        self.eval(&s) + self.eval(x) + self.eval(y)
    }

    /// The polarization matrix (alternating in characteristic two).
    pub fn polar(&self) -> KMatrix {
        self.coeffs.add(&self.coeffs.transpose())
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.polar().rank() == self.dim
    }

    pub fn zero_count(&self) -> u64 {
        k_vectors(self.field, self.dim)
            .iter()
            .filter(|v| self.eval(v).is_zero())
            .count() as u64
    }

    /// A basis e_1..e_n, e_{-1}..e_{-n} with b(e_i, e_{-j}) = delta_ij and
    /// all other pairings zero, as rows.
    pub fn symplectic_basis(&self) -> Vec<(Vec<Gf2m>, Vec<Gf2m>)> {
        assert!(self.is_nondegenerate(), "polar form must be nondegenerate");
        let f = self.field;
        let mut space: Vec<Vec<Gf2m>> = (0..self.dim)
            .map(|i| {
                let mut v = vec![f.zero(); self.dim];
                v[i] = f.one();
                v
            })
            .collect();
        let mut pairs = Vec::new();
        while !space.is_empty() {
            let v = space[0].clone();
            let u0 = space
                .iter()
                .find(|u| !self.bilinear(&v, u).is_zero())
                .expect("nondegenerate on the remaining span")
                .clone();
            let c = self.bilinear(&v, &u0).inv();
            let u: Vec<Gf2m> = u0.iter().map(|x| x.mul(c)).collect();
            let mut next = Vec::new();
            for x in &space {
                let a = self.bilinear(x, &u);
                let b = self.bilinear(x, &v);
                let y: Vec<Gf2m> = (0..self.dim)
                    .map(|j| x[j] + a.mul(v[j]) + b.mul(u[j]))
                    .collect();
                if y.iter().any(|c| !c.is_zero()) {
                    next.push(y);
                }
            }
            let mut kept: Vec<Vec<Gf2m>> = Vec::new();
            for y in next {
                let mut trial = kept.clone();
                trial.push(y.clone());
                if KMatrix::from_rows(f, trial).rank() == kept.len() + 1 {
                    kept.push(y);
                }
            }
            space = kept;
            pairs.push((v, u));
        }
        pairs
    }
}

/// Arf invariant as a canonical representative in k: zero, or the least
/// element with absolute trace one.
pub fn arf(q: &KQuadForm) -> Gf2m {
    let pairs = q.symplectic_basis();
    let mut s = q.field.zero();
    for (v, u) in &pairs {
        s = s + q.eval(v).mul(q.eval(u));
    }
    arf_rep(q.field, s)
}

/// Canonical representative of s modulo {x^2 + x}.
pub fn arf_rep(field: Field, s: Gf2m) -> Gf2m {
    if s.trace_f2().is_zero() {
        field.zero()
    } else {
        (0..field.q() as u32)
            .map(|b| field.elem(b))
            .find(|x| !x.trace_f2().is_zero())
            .unwrap()
    }
}

/// The Clifford algebra of a k-valued quadratic form, with basis indexed by
/// subsets of the generators (bitmask, ascending product order).
pub struct CliffordAlg {
    pub form: KQuadForm,
}

pub type CElem = Vec<Gf2m>;

impl CliffordAlg {
    pub fn new(form: KQuadForm) -> CliffordAlg {
        assert!(form.dim <= 8, "algebra dimension guard");
        CliffordAlg { form }
    }

    fn f(&self) -> Field {
        self.form.field
    }

    pub fn dim(&self) -> usize {
        1 << self.form.dim
    }

    pub fn zero_elem(&self) -> CElem {
        vec![self.f().zero(); self.dim()]
    }

    pub fn one_elem(&self) -> CElem {
        let mut e = self.zero_elem();
        e[0] = self.f().one();
        e
    }

    pub fn basis_elem(&self, mask: usize) -> CElem {
        let mut e = self.zero_elem();
        e[mask] = self.f().one();
        e
    }

    fn gen_vec(&self, i: usize) -> Vec<Gf2m> {
        let mut v = vec![self.f().zero(); self.form.dim];
        v[i] = self.f().one();
        v
    }

    /// e_S * e_j as a combination of basis monomials.
    fn push_gen(&self, s: usize, j: usize) -> Vec<(usize, Gf2m)> {
        if s == 0 {
            return vec![(1 << j, self.f().one())];
        }
        let i = (usize::BITS - 1 - s.leading_zeros()) as usize;
        let s1 = s & !(1 << i);
        if i < j {
            return vec![(s | (1 << j), self.f().one())];
        }
        if i == j {
            let qv = self.form.eval(&self.gen_vec(i));
            return if qv.is_zero() { vec![] } else { vec![(s1, qv)] };
        }
        // move e_j past e_i
        let b = self.form.bilinear(&self.gen_vec(i), &self.gen_vec(j));
        let mut out: Vec<(usize, Gf2m)> = self
            .push_gen(s1, j)
            .into_iter()
            .map(|(m, c)| {
                debug_assert!(m & (1 << i) == 0);
                (m | (1 << i), c)
            })
            .collect();
        if !b.is_zero() {
            out.push((s1, b));
        }
        out
    }

    pub fn mul(&self, a: &CElem, b: &CElem) -> CElem {
        let mut out = self.zero_elem();
        for t in 0..self.dim() {
            if b[t].is_zero() {
                continue;
            }
            // a * e_T, generator by generator
            let mut acc = a.clone();
            for j in 0..self.form.dim {
                if t & (1 << j) == 0 {
                    continue;
                }
                let mut next = self.zero_elem();
                for s in 0..self.dim() {
                    if acc[s].is_zero() {
                        continue;
                    }
                    for (m, c) in self.push_gen(s, j) {
                        next[m] = next[m] + acc[s].mul(c);
                    }
                }
                acc = next;
            }
            for m in 0..self.dim() {
                out[m] = out[m] + acc[m].mul(b[t]);
            }
        }
        out
    }

    /// The center of the even part: the canonical non-scalar generator z
    /// (normalized so that z^2 + z is a scalar) and that scalar.
    pub fn center_even(&self) -> (CElem, Gf2m) {
        let f = self.f();
        let even: Vec<usize> = (0..self.dim()).filter(|m| m.count_ones() % 2 == 0).collect();
        // commutation constraints against the degree-two generators
        let mut rows: Vec<Vec<Gf2m>> = Vec::new();
        let gens: Vec<usize> = {
            let mut v = Vec::new();
            for i in 0..self.form.dim {
                for j in i + 1..self.form.dim {
                    v.push((1 << i) | (1 << j));
                }
            }
            v
        };
        for &g in &gens {
            let ge = self.basis_elem(g);
            // for each unknown basis monomial, the commutator column
            let mut cols: Vec<CElem> = Vec::new();
            for &m in &even {
                let me = self.basis_elem(m);
                let comm: CElem = self
                    .mul(&me, &ge)
                    .iter()
                    .zip(self.mul(&ge, &me).iter())
                    .map(|(x, y)| *x + *y)
                    .collect();
                cols.push(comm);
            }
            for out_idx in 0..self.dim() {
                rows.push(cols.iter().map(|c| c[out_idx]).collect());
            }
        }
        let sys = KMatrix::from_rows(f, rows);
        let ker = sys.right_kernel();
        assert_eq!(ker.rows, 2, "even center must be two-dimensional");
        // pick the solution independent of 1 (coefficient index of mask 0)
        let zero_pos = even.iter().position(|&m| m == 0).unwrap();
        let mut zc: Option<Vec<Gf2m>> = None;
        for r in 0..ker.rows {
            let row = ker.row(r).to_vec();
            if (0..row.len()).any(|i| i != zero_pos && !row[i].is_zero()) {
                zc = Some(row);
                break;
            }
        }
        let mut zc = zc.expect("center has a non-scalar element");
        zc[zero_pos] = f.zero();
        let mut z = self.zero_elem();
        for (&m, &c) in even.iter().zip(&zc) {
            z[m] = c;
        }
        // normalize: z_raw^2 = alpha z_raw + beta, set z = z_raw / alpha
        let z2 = self.mul(&z, &z);
        let pos = (1..self.dim()).find(|&m| !z[m].is_zero()).unwrap();
        let alpha = z2[pos].mul(z[pos].inv());
        let beta = {
            let mut t = z2.clone();
            for m in 1..self.dim() {
                t[m] = t[m] + alpha.mul(z[m]);
            }
            for m in 1..self.dim() {
                assert!(t[m].is_zero(), "z^2 must lie in the span of 1 and z");
            }
            t[0]
        };
        assert!(!alpha.is_zero(), "even center must be separable");
        let ainv = alpha.inv();
        let z_norm: CElem = z.iter().map(|c| c.mul(ainv)).collect();
        let delta = beta.mul(ainv.square());
        (z_norm, delta)
    }

    /// Image of an element under the algebra map induced by a linear map
    /// preserving the form (rows of g are generator images).
    pub fn apply_linear(&self, g: &KMatrix, x: &CElem) -> CElem {
        let images: Vec<CElem> = (0..self.form.dim)
            .map(|i| {
                let mut e = self.zero_elem();
                for j in 0..self.form.dim {
                    e[1 << j] = g.get(i, j);
                }
                e
            })
            .collect();
        let mut out = self.zero_elem();
        for m in 0..self.dim() {
            if x[m].is_zero() {
                continue;
            }
            let mut acc = self.one_elem();
            for i in 0..self.form.dim {
                if m & (1 << i) != 0 {
                    acc = self.mul(&acc, &images[i]);
                }
            }
            for t in 0..self.dim() {
                out[t] = out[t] + acc[t].mul(x[m]);
            }
        }
        out
    }
}

/// Brute-force orthogonal group of a k-valued quadratic form over F_2,
/// dim <= 4.
pub fn orthogonal_group_f2(q: &KQuadForm) -> Vec<KMatrix> {
    assert_eq!(q.field.q(), 2);
    assert!(q.dim <= 4, "orthogonal group enumeration guard");
    let f = q.field;
    let d = q.dim;
    let vectors = k_vectors(f, d);
    let mut out = Vec::new();
    for bits in 0..(1u32 << (d * d)) {
        let g = KMatrix::from_rows(
            f,
            (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| f.elem((bits >> (i * d + j)) & 1))
                        .collect()
                })
                .collect(),
        );
        if g.rank() != d {
            continue;
        }
        if vectors.iter().all(|v| q.eval(&g.vec_mul(v)) == q.eval(v)) {
            out.push(g);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// finite Fourier transform

/// Finite Fourier transform against psi(tr(pairing)): maps a function on the
/// domain to a function on the dual. Checks that the pairing separates dual
/// points (with equal sizes this is perfection).
pub fn fourier_w2<T, U>(
    domain: &[T],
    dual: &[U],
    pairing: impl Fn(&T, &U) -> Witt2,
    f: &[CycInt],
    inverse: bool,
) -> Vec<CycInt> {
    assert_eq!(domain.len(), f.len(), "function must match the domain");
    assert_eq!(domain.len(), dual.len(), "dual pair must have equal sizes");
    let mut seen: HashSet<Vec<(u32, u32)>> = HashSet::new();
    for u in dual {
        let col: Vec<(u32, u32)> = domain.iter().map(|t| pairing(t, u).lex_key()).collect();
        assert!(seen.insert(col), "pairing does not separate dual points");
    }
    dual.iter()
        .map(|u| {
            let mut acc = CycInt::zero();
            for (t, ft) in domain.iter().zip(f) {
                if ft.is_zero() {
                    continue;
                }
                let mut ch = psi_tr(pairing(t, u));
                if inverse {
                    ch = ch.conj();
                }
                acc = &acc + &(&ch * ft);
            }
            acc
        })
        .collect()
}

// ---------------------------------------------------------------------------
// the dual pair carrying Gauss sums

/// An element of the dual of the space of canonical forms: a full R-vector
/// for the diagonal and a k-vector for the strict upper triangle.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QStarElem {
    pub diag: Vec<Witt2>,
    pub off: Vec<Gf2m>,
}

pub fn off_index(n: usize, i: usize, j: usize) -> usize {
    assert!(i < j && j < n);
    // row-major over the strict upper triangle
    let before: usize = (0..i).map(|r| n - r - 1).sum();
    before + (j - i - 1)
}

pub fn qstar_elements(field: Field, n: usize) -> Vec<QStarElem> {
    let offs = n * (n - 1) / 2;
    let q = field.q();
    let total = q
        .checked_pow(2 * n as u32 + offs as u32)
        .expect("dual enumeration too large");
    check_size_guard(total).expect("dual enumeration too large");
    let mut out = Vec::with_capacity(total as usize);
    let diags: Vec<Vec<Witt2>> = {
        let mut v: Vec<Vec<Witt2>> = vec![vec![]];
        for _ in 0..n {
            let mut next = Vec::new();
            for base in &v {
                for w in field.witt_elements() {
                    let mut b = base.clone();
                    b.push(w);
                    next.push(b);
                }
            }
            v = next;
        }
        v
    };
    for d in &diags {
        for off in k_vectors(field, offs) {
            out.push(QStarElem { diag: d.clone(), off });
        }
    }
    out
}

/// All canonical forms in n variables.
pub fn qbang_elements(field: Field, n: usize) -> Vec<QFormR> {
    qstar_elements(field, n)
        .into_iter()
        .map(|e| {
            let mut b = RMatrix::zero(field, n, n);
            for i in 0..n {
                b.set(i, i, e.diag[i]);
            }
            for i in 0..n {
                for j in i + 1..n {
                    let t = Witt2::teich(e.off[off_index(n, i, j)]);
                    b.set(i, j, t);
                    b.set(j, i, t);
                }
            }
            QFormR::new(b)
        })
        .collect()
}

/// The evaluation pairing between a dual element and a canonical form.
pub fn qstar_pairing(a: &QStarElem, q: &QFormR) -> Witt2 {
    let f = q.field();
    let mut acc = Witt2::zero(f);
    for i in 0..q.n {
        acc = acc + a.diag[i] * q.b.get(i, i);
    }
    for i in 0..q.n {
        for j in i + 1..q.n {
            let prod = a.off[off_index(q.n, i, j)].mul(q.b.get(i, j).a0);
            acc = acc + Witt2::from_ideal(prod.square());
        }
    }
    acc
}

/// The image of a point of k^n in the dual: evaluation of forms at that
/// point.
pub fn pi_q(field: Field, l: &[Gf2m]) -> QStarElem {
    let n = l.len();
    let mut off = vec![field.zero(); n * (n - 1) / 2];
    for i in 0..n {
        for j in i + 1..n {
            off[off_index(n, i, j)] = l[i].mul(l[j]);
        }
    }
    QStarElem { diag: l.iter().map(|&c| Witt2::teich(c.square())).collect(), off }
}

// ---------------------------------------------------------------------------
// power identities and module Gauss sums

pub struct PowerReport {
    pub gamma: CycInt,
    pub fourth_power_matches: bool,
    pub norm_is_q_pow_n: bool,
    pub disc: Option<Gf2m>,
}

pub fn power_identities(q: &QFormR) -> PowerReport {
    assert!(q.is_nondegenerate(), "power identities need a nondegenerate form");
    let gamma = q.gauss_sum();
    let base = gauss_scalar_base(q.field());
    let fourth_power_matches = gamma.pow(4) == base.pow(4 * q.n as u32);
    let qn = CycInt::from_ints(q.field().q().pow(q.n as u32) as i64, 0);
    let norm_is_q_pow_n = &gamma * &gamma.conj() == qn;
    PowerReport { gamma, fourth_power_matches, norm_is_q_pow_n, disc: q.discriminant() }
}

/// Whether two squared Gauss sums agree, given through the sign of
/// gamma^2 / gamma'^2 (both have the same absolute value).
pub fn squared_gauss_sign(g1: &CycInt, g2: &CycInt, qn: u64) -> Option<bool> {
    let lhs = &g1.pow(2) * &g2.pow(2).conj();
    let plus = CycInt::from_ints((qn * qn) as i64, 0);
    if lhs == plus {
        Some(true)
    } else if lhs == plus.scale_int(-1) {
        Some(false)
    } else {
        None
    }
}

/// Gauss sum of a finitely generated module carrying a Gram form: the sum of
/// psi(tr(x G x^T)) over all elements.
pub fn module_gauss_sum(m: &FgRModule) -> CycInt {
    let mut acc = CycInt::zero();
    for x in m.elements() {
        acc = &acc + &psi_tr(m.pair(&x, &x));
    }
    acc
}

pub fn random_qform(field: Field, n: usize, rng: &mut impl Rng) -> QFormR {
    let q = field.q() as u32;
    let mut b = RMatrix::zero(field, n, n);
    for i in 0..n {
        for j in i..n {
            let w = if i == j {
                Witt2::of_bits(field, rng.gen_range(0..q), rng.gen_range(0..q))
            } else {
                Witt2::teich(field.elem(rng.gen_range(0..q)))
            };
            b.set(i, j, w);
            b.set(j, i, w);
        }
    }
    QFormR::new(b)
}
