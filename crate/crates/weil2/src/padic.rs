//! Finite shadow of the dyadic lattice picture.
//!
//! A self-dual lattice with its half-integral pairing only ever enters the
//! finite computations through quotients of exponent eight, so everything
//! here is done in the unramified extension of Z/8 (a Galois ring) and in
//! the length-two Witt vectors R of the residue field.  The module provides:
//! the lattice datum (a residue quadratic form polarizing the symplectic
//! form), the invariant vectors of intermediate lattices in the character
//! model, the reduction of the lattice model to the finite Heisenberg group
//! of a chain quotient, the splitting of the pushed-out central extension,
//! and the action of congruence-level symplectic matrices on the quotient.

use std::collections::HashMap;

use crate::heisenberg::{bareiss_rank, EnhLagrangian, HeisElem};
use crate::qforms::{k_vectors, KQuadForm};
use crate::rmodlin::{KMatrix, RMatrix};
use crate::symplectic::{beta_tilde_default, is_symplectic, omega_tilde, opposite_lagrangian, pair};
use crate::witt::{check_size_guard, psi, CycInt, Field, Gf2m, Witt2, Zmod4};

/// x * b * y^T for row vectors over the residue field.
pub fn kform(b: &KMatrix, x: &[Gf2m], y: &[Gf2m]) -> Gf2m {
    let xb = b.vec_mul(x);
    let mut acc = b.field.zero();
    for i in 0..y.len() {
        acc = acc + xb[i].mul(y[i]);
    }
    acc
}

fn teich_vec(t: &[Gf2m]) -> Vec<Witt2> {
    t.iter().map(|&c| Witt2::teich(c)).collect()
}

// ---------------------------------------------------------------------------
// Galois ring: the unramified extension of Z/8 with the same residue field.

/// Element of Z/8[x] modulo the 0/1-coefficient lift of the field modulus.
/// Coefficients sit in the first `m` slots; the rest stay zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Gr8 {
    pub c: [u8; 16],
}

#[derive(Clone, Copy, Debug)]
pub struct Gr8Ring {
    pub field: Field,
}

impl Gr8Ring {
    pub fn new(field: Field) -> Gr8Ring {
        assert!(field.m as usize <= 16, "Galois ring limited to degree 16");
        Gr8Ring { field }
    }

    pub fn m(&self) -> usize {
        self.field.m as usize
    }

    pub fn zero(&self) -> Gr8 {
        Gr8 { c: [0; 16] }
    }

    pub fn from_coeffs(&self, coeffs: &[u8]) -> Gr8 {
        let mut c = [0u8; 16];
        for (i, &v) in coeffs.iter().enumerate() {
            c[i] = v & 7;
        }
        Gr8 { c }
    }

    /// The 0/1-coefficient lift of a residue element.
    pub fn lift(&self, x: Gf2m) -> Gr8 {
        let mut c = [0u8; 16];
        for j in 0..self.m() {
            c[j] = ((x.bits >> j) & 1) as u8;
        }
        Gr8 { c }
    }

    pub fn residue(&self, x: Gr8) -> Gf2m {
        let mut bits = 0u32;
        for j in 0..self.m() {
            bits |= ((x.c[j] & 1) as u32) << j;
        }
        self.field.elem(bits)
    }

    pub fn add(&self, a: Gr8, b: Gr8) -> Gr8 {
        let mut c = [0u8; 16];
        for j in 0..self.m() {
            c[j] = (a.c[j] + b.c[j]) & 7;
        }
        Gr8 { c }
    }

    pub fn neg(&self, a: Gr8) -> Gr8 {
        let mut c = [0u8; 16];
        for j in 0..self.m() {
            c[j] = (8 - a.c[j]) & 7;
        }
        Gr8 { c }
    }

    pub fn sub(&self, a: Gr8, b: Gr8) -> Gr8 {
        self.add(a, self.neg(b))
    }

    pub fn scale(&self, a: Gr8, k: u8) -> Gr8 {
        let mut c = [0u8; 16];
        for j in 0..self.m() {
            c[j] = (a.c[j] * (k & 7)) & 7;
        }
        Gr8 { c }
    }

    pub fn mul(&self, a: Gr8, b: Gr8) -> Gr8 {
        let m = self.m();
        let mut t = [0u32; 32];
        for i in 0..m {
            if a.c[i] == 0 {
                continue;
            }
            for j in 0..m {
                t[i + j] += (a.c[i] as u32) * (b.c[j] as u32);
            }
        }
        for v in t.iter_mut() {
            *v &= 7;
        }
        if m > 0 {
            for d in (m..=2 * m - 2).rev() {
                let cd = t[d] as u8;
                if cd == 0 {
                    continue;
                }
                t[d] = 0;
                for j in 0..m {
                    if (self.field.modulus >> j) & 1 == 1 {
                        t[d - m + j] = (t[d - m + j] + (8 - cd) as u32) & 7;
                    }
                }
            }
        }
        let mut c = [0u8; 16];
        for j in 0..m {
            c[j] = t[j] as u8;
        }
        Gr8 { c }
    }

    /// The multiplicative representative of a residue element: the limit of
    /// repeated q-th powers of any lift, exact mod 8 after three rounds.
    pub fn teich(&self, x: Gf2m) -> Gr8 {
        let mut z = self.lift(x);
        for _ in 0..3 * self.m() {
            z = self.mul(z, z);
        }
        z
    }

    /// The class of x mod 4 as a Witt vector, through the canonical
    /// isomorphism of the mod-4 quotient with R.
    pub fn to_witt2(&self, x: Gr8) -> Witt2 {
        let a0 = self.residue(x);
        let d = self.sub(x, self.teich(a0));
        let mut bits = 0u32;
        for j in 0..self.m() {
            debug_assert_eq!(d.c[j] & 1, 0);
            bits |= (((d.c[j] >> 1) & 1) as u32) << j;
        }
        let b = self.field.elem(bits);
        Witt2::teich(a0) + Witt2::from_ideal(b.square())
    }

    /// All 8^m elements, coefficient-odometer order.
    pub fn elements(&self) -> Vec<Gr8> {
        let m = self.m();
        let total = 8u64.pow(m as u32);
        check_size_guard(total).expect("Galois ring too large to enumerate");
        let mut out = Vec::with_capacity(total as usize);
        for flat in 0..total {
            let mut rest = flat;
            let mut c = [0u8; 16];
            for slot in c.iter_mut().take(m) {
                *slot = (rest % 8) as u8;
                rest /= 8;
            }
            out.push(Gr8 { c });
        }
        out
    }
}

/// The standard symplectic pairing of Galois-ring row vectors of width 2n.
pub fn om8(ring: &Gr8Ring, n: usize, x: &[Gr8], y: &[Gr8]) -> Gr8 {
    let mut acc = ring.zero();
    for i in 0..n {
        acc = ring.add(acc, ring.mul(x[i], y[n + i]));
        acc = ring.sub(acc, ring.mul(x[n + i], y[i]));
    }
    acc
}

// ---------------------------------------------------------------------------
// The lattice datum.

/// A self-dual lattice of rank 2n presented by its residue data: the residue
/// field and a quadratic form on the mod-2 quotient whose polarization is
/// the standard residue symplectic form.
#[derive(Clone, Debug)]
pub struct LatticeModel {
    pub field: Field,
    pub n: usize,
    pub phi: KQuadForm,
}

impl LatticeModel {
    pub fn new(field: Field, n: usize, phi: KQuadForm) -> LatticeModel {
        assert_eq!(phi.dim, 2 * n);
        let omk = omega_tilde(field, n).residue();
        assert_eq!(phi.polar(), omk, "form must polarize the residue symplectic form");
        LatticeModel { field, n, phi }
    }

    pub fn standard(field: Field, n: usize) -> LatticeModel {
        LatticeModel::new(field, n, split_polar_form(field, n))
    }

    pub fn q(&self) -> u64 {
        self.field.q()
    }
}

/// The split form x_1 x_{n+1} + .. + x_n x_{2n}.
pub fn split_polar_form(field: Field, n: usize) -> KQuadForm {
    let mut c = KMatrix::zero(field, 2 * n, 2 * n);
    for i in 0..n {
        c.set(i, n + i, field.one());
    }
    KQuadForm::new(c)
}

/// All quadratic forms polarizing the residue symplectic form: the split one
/// shifted by an arbitrary diagonal (the square of a linear functional).
pub fn polar_forms(field: Field, n: usize) -> Vec<KQuadForm> {
    let mut out = Vec::new();
    for d in k_vectors(field, 2 * n) {
        let mut c = split_polar_form(field, n).coeffs;
        for (i, &di) in d.iter().enumerate() {
            c.set(i, i, di);
        }
        out.push(KQuadForm::new(c));
    }
    out
}

/// All lagrangian subspaces of the residue symplectic space, as canonical
/// row bases.
pub fn k_lagrangians(field: Field, n: usize) -> Vec<KMatrix> {
    let mut seen = Vec::new();
    for l in crate::symplectic::enumerate_lagrangians(field, n) {
        let (r, _) = l.residue().rref();
        if !seen.contains(&r) {
            seen.push(r);
        }
    }
    seen
}

/// A lagrangian of the residue space on which the given polarizing form
/// vanishes, if one exists.  Vanishing on a basis suffices because the form
/// restricts quadratically with zero polarization.  Over a finite residue
/// field this succeeds exactly when the form has trivial Arf invariant: a
/// totally singular subspace of a minus-type form stays one short of
/// lagrangian rank.
pub fn find_isotropic_lagrangian(lm: &LatticeModel) -> Option<KMatrix> {
    for l in k_lagrangians(lm.field, lm.n) {
        if (0..l.rows).all(|i| lm.phi.eval(l.row(i)).is_zero()) {
            return Some(l);
        }
    }
    None
}

/// Extends a lagrangian row basis to a full symplectic basis of the residue
/// space: the output has the input as its first n rows and standard Gram
/// matrix.
pub fn complete_isotropic_basis(l: &KMatrix) -> KMatrix {
    let field = l.field;
    let n = l.rows;
    assert_eq!(l.cols, 2 * n);
    assert_eq!(l.rank(), n, "rows must be independent");
    let omk = omega_tilde(field, n).residue();
    let mut rows: Vec<Vec<Gf2m>> = (0..n).map(|i| l.row(i).to_vec()).collect();
    for i in 0..n {
        for j in 0..i {
            assert!(kform(&omk, &rows[i], &rows[j]).is_zero(), "rows must be isotropic");
        }
    }
    for i in 0..n {
        // One dual vector at a time: it pairs to 1 with row i and to 0 with
        // every other basis vector built so far.
        let mut cond = Vec::new();
        let mut rhs = Vec::new();
        for (j, r) in rows.iter().enumerate() {
            cond.push(omk.vec_mul(r));
            rhs.push(if j == i { field.one() } else { field.zero() });
        }
        let a = KMatrix::from_rows(field, cond);
        let v = a.solve(&rhs).expect("dual vector must exist");
        rows.push(v);
    }
    let b = KMatrix::from_rows(field, rows);
    assert_eq!(b.mul(&omk).mul(&b.transpose()), omk);
    b
}

// ---------------------------------------------------------------------------
// The quotient Heisenberg group of a chain.

/// The Heisenberg group of the quotient of a chain lattice pair, with
/// R-valued center.  Elements are held in canonical form: multiplicative
/// coordinate representatives plus a central part.  The quadratic form is
/// stored in coordinates adapted to the chain (it vanishes on the first
/// half), and `basis_change` records the residue basis that got us there.
#[derive(Clone, Debug)]
pub struct RedHeis {
    pub field: Field,
    pub n: usize,
    pub phi: KQuadForm,
    pub basis_change: KMatrix,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RedElem {
    pub t: Vec<Gf2m>,
    pub u: Witt2,
}

impl RedHeis {
    /// Reduce a lattice datum along a chain: the rows of `chain` span a
    /// residue lagrangian on which the form vanishes.
    pub fn new(lm: &LatticeModel, chain: &KMatrix) -> RedHeis {
        assert_eq!(chain.rows, lm.n);
        assert_eq!(chain.cols, 2 * lm.n);
        for i in 0..chain.rows {
            assert!(lm.phi.eval(chain.row(i)).is_zero(), "form must vanish on the chain");
        }
        let g0 = complete_isotropic_basis(chain);
        let mut c = KMatrix::zero(lm.field, 2 * lm.n, 2 * lm.n);
        for i in 0..2 * lm.n {
            c.set(i, i, lm.phi.eval(g0.row(i)));
            for j in i + 1..2 * lm.n {
                c.set(i, j, lm.phi.bilinear(g0.row(i), g0.row(j)));
            }
        }
        RedHeis::from_adapted(lm.field, lm.n, KQuadForm::new(c), g0)
    }

    /// Build directly from a form already adapted to the standard chain.
    pub fn from_adapted(field: Field, n: usize, phi: KQuadForm, basis_change: KMatrix) -> RedHeis {
        assert_eq!(phi.dim, 2 * n);
        let omk = omega_tilde(field, n).residue();
        assert_eq!(phi.polar(), omk);
        for i in 0..n {
            let mut e = vec![field.zero(); 2 * n];
            e[i] = field.one();
            assert!(phi.eval(&e).is_zero(), "form must vanish on the standard chain");
        }
        RedHeis { field, n, phi, basis_change }
    }

    pub fn standard(field: Field, n: usize) -> RedHeis {
        RedHeis::from_adapted(field, n, split_polar_form(field, n), KMatrix::identity(field, 2 * n))
    }

    /// Canonical form of the class of an arbitrary coordinate representative.
    pub fn class(&self, traw: &[Witt2], u: Witt2) -> RedElem {
        assert_eq!(traw.len(), 2 * self.n);
        let tbar: Vec<Gf2m> = traw.iter().map(|x| x.residue()).collect();
        let tcan = teich_vec(&tbar);
        let delta: Vec<Witt2> = traw.iter().zip(&tcan).map(|(&a, &b)| a - b).collect();
        debug_assert!(delta.iter().all(|d| d.in_ideal()));
        let om = omega_tilde(self.field, self.n);
        let u_can = u - pair(&om, &tcan, &delta);
        RedElem { t: tbar, u: u_can }
    }

    pub fn identity_elem(&self) -> RedElem {
        RedElem { t: vec![self.field.zero(); 2 * self.n], u: Witt2::zero(self.field) }
    }

    pub fn central(&self, u: Witt2) -> RedElem {
        RedElem { t: vec![self.field.zero(); 2 * self.n], u }
    }

    pub fn is_central(&self, x: &RedElem) -> bool {
        x.t.iter().all(|c| c.is_zero())
    }

    pub fn mul(&self, a: &RedElem, b: &RedElem) -> RedElem {
        let ta = teich_vec(&a.t);
        let tb = teich_vec(&b.t);
        let traw: Vec<Witt2> = ta.iter().zip(&tb).map(|(&x, &y)| x + y).collect();
        let om = omega_tilde(self.field, self.n);
        let u = a.u + b.u + pair(&om, &ta, &tb);
        self.class(&traw, u)
    }

    pub fn inv(&self, a: &RedElem) -> RedElem {
        let tneg: Vec<Witt2> = a.t.iter().map(|&c| -Witt2::teich(c)).collect();
        self.class(&tneg, -a.u)
    }

    pub fn group_size(&self) -> u64 {
        let q = self.field.q();
        q.pow(2 * self.n as u32) * q * q
    }

    pub fn index(&self, x: &RedElem) -> usize {
        let q = self.field.q() as usize;
        let mut t_idx = 0usize;
        for i in (0..2 * self.n).rev() {
            t_idx = t_idx * q + x.t[i].bits as usize;
        }
        let u_idx = x.u.a0.bits as usize * q + x.u.a1.bits as usize;
        t_idx * q * q + u_idx
    }

    pub fn elements(&self) -> Vec<RedElem> {
        check_size_guard(self.group_size()).expect("quotient group too large");
        let q = self.field.q() as usize;
        let mut out = Vec::with_capacity(self.group_size() as usize);
        for flat in 0..q.pow(2 * self.n as u32) {
            let mut rest = flat;
            let mut t = Vec::with_capacity(2 * self.n);
            for _ in 0..2 * self.n {
                t.push(self.field.elem((rest % q) as u32));
                rest /= q;
            }
            for b0 in 0..q {
                for b1 in 0..q {
                    let u = Witt2::of_bits(self.field, b0 as u32, b1 as u32);
                    out.push(RedElem { t: t.clone(), u });
                }
            }
        }
        out
    }

    /// Membership in the distinguished maximal abelian subgroup: classes
    /// whose coordinate part lies over the second half.
    pub fn in_mbar(&self, x: &RedElem) -> bool {
        x.t[..self.n].iter().all(|c| c.is_zero())
    }

    /// The character of the maximal abelian subgroup determined by the form.
    pub fn chi(&self, x: &RedElem) -> CycInt {
        assert!(self.in_mbar(x));
        let arg = x.u + Witt2::from_ideal(self.phi.eval(&x.t).square());
        crate::witt::psi_tr(arg)
    }

    /// The canonical base-point section over the second-half coordinates.
    pub fn tau(&self, x2: &[Gf2m]) -> RedElem {
        assert_eq!(x2.len(), self.n);
        let mut t = vec![self.field.zero(); 2 * self.n];
        t[self.n..].copy_from_slice(x2);
        let u = Witt2::from_ideal(self.phi.eval(&t).square());
        RedElem { t, u }
    }

    /// The isomorphism onto the Heisenberg group of the residue space with
    /// the standard polarized form.
    pub fn to_heisenberg(&self, x: &RedElem) -> HeisElem {
        let bt = beta_tilde_default(self.field, self.n);
        let bk = bt.residue();
        let tcan = teich_vec(&x.t);
        let z = x.u - pair(&bt, &tcan, &tcan)
            + Witt2::from_ideal(kform(&bk, &x.t, &x.t).square());
        HeisElem { v: x.t.clone(), z }
    }

    /// The enhanced lagrangian structure the reduction induces on the
    /// second-half residue lagrangian.
    pub fn enhancement(&self) -> EnhLagrangian {
        let l = opposite_lagrangian(self.field, self.n).residue();
        let mut alpha = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut e = vec![self.field.zero(); self.n];
            e[i] = self.field.one();
            alpha.push(self.to_heisenberg(&self.tau(&e)).z);
        }
        EnhLagrangian { l, alpha }
    }
}

// ---------------------------------------------------------------------------
// The model of the quotient group induced from the abelian character.

pub struct RedModel {
    pub ctx: RedHeis,
    pub elems: Vec<RedElem>,
    pub reps: Vec<usize>,
    pub basis: Vec<Vec<CycInt>>,
}

/// Functions transforming by the character under left translation by the
/// maximal abelian subgroup, built by covering the group with its cosets.
pub fn red_model_build(ctx: &RedHeis) -> RedModel {
    let elems = ctx.elements();
    let size = elems.len();
    let mut covered = vec![false; size];
    let mut reps = Vec::new();
    let mut basis = Vec::new();
    let coeffs = k_vectors(ctx.field, ctx.n);
    for h0 in 0..size {
        if covered[h0] {
            continue;
        }
        let mut f = vec![CycInt::zero(); size];
        for c in &coeffs {
            for u in ctx.field.witt_elements() {
                let w = ctx.mul(&ctx.central(u), &ctx.tau(c));
                let p = ctx.index(&ctx.mul(&w, &elems[h0]));
                assert!(!covered[p], "cosets must tile the group once");
                covered[p] = true;
                f[p] = ctx.chi(&w);
            }
        }
        reps.push(h0);
        basis.push(f);
    }
    RedModel { ctx: ctx.clone(), elems, reps, basis }
}

impl RedModel {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn in_space(&self, f: &[CycInt]) -> bool {
        let coeffs = k_vectors(self.ctx.field, self.ctx.n);
        for x in &self.elems {
            for c in &coeffs {
                for u in self.ctx.field.witt_elements() {
                    let w = self.ctx.mul(&self.ctx.central(u), &self.ctx.tau(c));
                    let wx = self.ctx.index(&self.ctx.mul(&w, x));
                    let lhs = f[wx].clone();
                    let rhs = self.ctx.chi(&w) * f[self.ctx.index(x)].clone();
                    if lhs != rhs {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn rho(&self, h: &RedElem, f: &[CycInt]) -> Vec<CycInt> {
        self.elems
            .iter()
            .map(|x| f[self.ctx.index(&self.ctx.mul(x, h))].clone())
            .collect()
    }

    pub fn coords(&self, f: &[CycInt]) -> Vec<CycInt> {
        self.reps.iter().map(|&r| f[r].clone()).collect()
    }
}

/// Transport a function on the quotient group to one on the Heisenberg group
/// along the canonical isomorphism.
pub fn lift_function(ctx: &RedHeis, hctx: &crate::heisenberg::HeisCtx, f: &[CycInt]) -> Vec<CycInt> {
    let mut out = vec![CycInt::zero(); f.len()];
    for x in ctx.elements() {
        out[hctx.index(&ctx.to_heisenberg(&x))] = f[ctx.index(&x)].clone();
    }
    out
}

/// Dimension of the joint fixed space of right translation by a set of
/// elements inside the model.
pub fn invariant_dim(model: &RedModel, set: &[RedElem]) -> usize {
    let d = model.dim();
    let mut rows = Vec::new();
    for g in set {
        let cols: Vec<Vec<CycInt>> =
            model.basis.iter().map(|b| model.coords(&model.rho(g, b))).collect();
        for i in 0..d {
            let mut row = Vec::with_capacity(d);
            for (j, col) in cols.iter().enumerate() {
                let mut e = col[i].clone();
                if i == j {
                    e = e - CycInt::one();
                }
                row.push(e);
            }
            rows.push(row);
        }
    }
    d - bareiss_rank(rows)
}

/// Canonical classes of the image of the full lattice in the quotient group.
pub fn full_lattice_image(ctx: &RedHeis) -> Vec<RedElem> {
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    let q2 = (ctx.field.q() * ctx.field.q()) as usize;
    for abar in k_vectors(ctx.field, ctx.n) {
        let mut cflat = vec![0usize; ctx.n];
        'coeffs: loop {
            let mut traw = Vec::with_capacity(2 * ctx.n);
            for &a in &abar {
                traw.push(Witt2::from_ideal(a.square()));
            }
            for &cf in &cflat {
                let q = ctx.field.q() as usize;
                traw.push(Witt2::of_bits(ctx.field, (cf / q) as u32, (cf % q) as u32));
            }
            let x = ctx.class(&traw, Witt2::zero(ctx.field));
            let idx = ctx.index(&x);
            if seen.insert(idx, ()).is_none() {
                out.push(x);
            }
            let mut i = 0;
            loop {
                if i == ctx.n {
                    break 'coeffs;
                }
                cflat[i] += 1;
                if cflat[i] < q2 {
                    break;
                }
                cflat[i] = 0;
                i += 1;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Pushing the center to the residue field.

/// Product in the pushout of the quotient group along R -> k: the center
/// collapses to the residue field and the extension becomes abelian.
pub fn pushed_product(
    field: Field,
    n: usize,
    a: &(Vec<Gf2m>, Gf2m),
    b: &(Vec<Gf2m>, Gf2m),
) -> (Vec<Gf2m>, Gf2m) {
    let omk = omega_tilde(field, n).residue();
    let v: Vec<Gf2m> = a.0.iter().zip(&b.0).map(|(&x, &y)| x + y).collect();
    let c = a.1 + b.1 + kform(&omk, &a.0, &b.0);
    (v, c)
}

/// Push an element of the quotient group to the pushout.
pub fn push_center(x: &RedElem) -> (Vec<Gf2m>, Gf2m) {
    (x.t.clone(), x.u.a0)
}

/// The splitting of the pushout supplied by the polarizing form.
pub fn split_section(ctx: &RedHeis, v: &[Gf2m]) -> (Vec<Gf2m>, Gf2m) {
    (v.to_vec(), ctx.phi.eval(v))
}

// ---------------------------------------------------------------------------
// Congruence-level symplectic action on the quotient group.

/// A symplectic matrix over R acts on the quotient group through its action
/// on coordinate representatives, fixing the center pointwise.
pub fn congruence_action(ctx: &RedHeis, g: &RMatrix, x: &RedElem) -> RedElem {
    assert!(is_symplectic(g));
    assert_eq!(g.rows, 2 * ctx.n);
    let traw = g.vec_mul(&teich_vec(&x.t));
    ctx.class(&traw, x.u)
}

// ---------------------------------------------------------------------------
// Fixed vectors of intermediate lattices in the character model.

/// The invariant space of an intermediate lattice, realized as functions on
/// the mod-8 points perpendicular to it that transform under translation by
/// the full lattice.  `pts` lists the admissible points; `basis` holds one
/// unit-valued function per consistent translation orbit.
pub struct FixedSpace {
    pub dim: usize,
    pub pts: Vec<Vec<Gr8>>,
    pub basis: Vec<Vec<CycInt>>,
    positions: HashMap<Vec<Gr8>, usize>,
}

impl FixedSpace {
    pub fn position(&self, s: &[Gr8]) -> Option<usize> {
        self.positions.get(s).copied()
    }
}

/// The translation coefficient: the character value tying the function's
/// value at s + 2w to its value at s.
pub fn shift_exponent(lm: &LatticeModel, ring: &Gr8Ring, s: &[Gr8], w: &[Gr8]) -> u8 {
    let wbar: Vec<Gf2m> = w.iter().map(|&x| ring.residue(x)).collect();
    let arg = Witt2::from_ideal(lm.phi.eval(&wbar).square())
        + ring.to_witt2(om8(ring, lm.n, s, w));
    arg.trace().0
}

/// Fixed vectors of the intermediate lattice spanned over the doubled
/// lattice by the rows of `s_basis` (a subspace of the mod-2 quotient).
/// The description as a translation-equivariant function space requires the
/// form to vanish on the subspace; the whole lattice itself fixes nothing,
/// which is a separate computation (see `invariant_dim`).
pub fn fixed_space(lm: &LatticeModel, s_basis: &KMatrix) -> FixedSpace {
    let field = lm.field;
    let n = lm.n;
    let ring = Gr8Ring::new(field);
    let m = ring.m();
    assert_eq!(s_basis.cols, 2 * n);
    assert_eq!(s_basis.rank(), s_basis.rows, "subspace rows must be independent");
    let omk = omega_tilde(field, n).residue();
    for i in 0..s_basis.rows {
        assert!(lm.phi.eval(s_basis.row(i)).is_zero(), "form must vanish on the subspace");
        for j in 0..i {
            assert!(
                kform(&omk, s_basis.row(i), s_basis.row(j)).is_zero(),
                "form must vanish on the subspace"
            );
        }
    }

    let c8 = 8u64.pow(m as u32);
    let full = c8.checked_pow(2 * n as u32).expect("domain too large");
    check_size_guard(full).expect("mod-8 domain too large");
    let coord8 = ring.elements();

    // Domain: mod-8 vectors whose residue is perpendicular to the subspace.
    let mut pts = Vec::new();
    let mut pos_of_flat = vec![usize::MAX; full as usize];
    let mut positions = HashMap::new();
    for flat in 0..full {
        let mut rest = flat;
        let mut s = Vec::with_capacity(2 * n);
        for _ in 0..2 * n {
            s.push(coord8[(rest % c8) as usize]);
            rest /= c8;
        }
        let sbar: Vec<Gf2m> = s.iter().map(|&x| ring.residue(x)).collect();
        let perp = (0..s_basis.rows).all(|i| kform(&omk, s_basis.row(i), &sbar).is_zero());
        if perp {
            pos_of_flat[flat as usize] = pts.len();
            positions.insert(s.clone(), pts.len());
            pts.push(s);
        }
    }
    let flat_of = |s: &[Gr8]| -> u64 {
        let mut acc = 0u64;
        for x in s.iter().rev() {
            let mut ci = 0u64;
            for j in (0..m).rev() {
                ci = ci * 8 + x.c[j] as u64;
            }
            acc = acc * c8 + ci;
        }
        acc
    };

    // Acting set: mod-4 coordinate vectors of the full lattice, with the
    // doubled shift and the character exponent precomputed.
    let c4 = 4u64.pow(m as u32);
    let acting_total = c4.pow(2 * n as u32);
    let mut acting = Vec::with_capacity(acting_total as usize);
    for flat in 0..acting_total {
        let mut rest = flat;
        let mut w = Vec::with_capacity(2 * n);
        for _ in 0..2 * n {
            let mut ci = rest % c4;
            rest /= c4;
            let mut c = [0u8; 16];
            for slot in c.iter_mut().take(m) {
                *slot = (ci % 4) as u8;
                ci /= 4;
            }
            w.push(Gr8 { c });
        }
        let shift: Vec<Gr8> = w.iter().map(|&x| ring.scale(x, 2)).collect();
        acting.push((w, shift));
    }

    // Orbit propagation with exponents mod 4; an orbit whose relations
    // disagree carries no fixed vectors.
    let mut val: Vec<Option<u8>> = vec![None; pts.len()];
    let mut dim = 0;
    let mut basis = Vec::new();
    for start in 0..pts.len() {
        if val[start].is_some() {
            continue;
        }
        val[start] = Some(0);
        let mut orbit = vec![start];
        let mut stack = vec![start];
        let mut alive = true;
        while let Some(p) = stack.pop() {
            let vp = val[p].unwrap();
            for (w, shift) in &acting {
                let s2: Vec<Gr8> =
                    pts[p].iter().zip(shift).map(|(&a, &b)| ring.add(a, b)).collect();
                let p2 = pos_of_flat[flat_of(&s2) as usize];
                assert_ne!(p2, usize::MAX, "translation must preserve the domain");
                let e = (vp + shift_exponent(lm, &ring, &pts[p], w)) & 3;
                match val[p2] {
                    None => {
                        val[p2] = Some(e);
                        orbit.push(p2);
                        stack.push(p2);
                    }
                    Some(old) => {
                        if old != e {
                            alive = false;
                        }
                    }
                }
            }
        }
        if alive {
            let mut f = vec![CycInt::zero(); pts.len()];
            for &p in &orbit {
                f[p] = psi(Zmod4::new(val[p].unwrap()));
            }
            basis.push(f);
            dim += 1;
        }
    }
    FixedSpace { dim, pts, basis, positions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::{model_build, HeisCtx};
    use crate::intertwine::tau_at;
    use crate::symplectic::random_symplectic;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fields_small() -> Vec<(Field, usize)> {
        vec![
            (Field::of_order(2).unwrap(), 1),
            (Field::of_order(2).unwrap(), 2),
            (Field::of_order(4).unwrap(), 1),
        ]
    }

    #[test]
    fn galois_ring_matches_witt_arithmetic_mod_four() {
        for q in [2u64, 4] {
            let f = Field::of_order(q).unwrap();
            let ring = Gr8Ring::new(f);
            let els = ring.elements();
            assert_eq!(els.len(), (q * q * q) as usize);
            let four = ring.scale(ring.lift(f.one()), 4);
            for &a in &els {
                // mod-4 classes agree after adding any multiple of four
                let a4 = ring.add(a, ring.mul(four, a));
                assert_eq!(ring.to_witt2(a), ring.to_witt2(a4));
                for &b in &els {
                    assert_eq!(
                        ring.to_witt2(ring.add(a, b)),
                        ring.to_witt2(a) + ring.to_witt2(b)
                    );
                    assert_eq!(
                        ring.to_witt2(ring.mul(a, b)),
                        ring.to_witt2(a) * ring.to_witt2(b)
                    );
                }
            }
            for x in f.elements() {
                let t = ring.teich(x);
                assert_eq!(ring.residue(t), x);
                assert_eq!(ring.to_witt2(t), Witt2::teich(x));
                for y in f.elements() {
                    assert_eq!(ring.mul(ring.teich(x), ring.teich(y)), ring.teich(x.mul(y)));
                }
            }
        }
    }

    #[test]
    fn quotient_group_axioms_and_center() {
        let f = Field::binary();
        let ctx = RedHeis::standard(f, 1);
        let els = ctx.elements();
        assert_eq!(els.len() as u64, ctx.group_size());
        for (i, x) in els.iter().enumerate() {
            assert_eq!(ctx.index(x), i);
            assert_eq!(ctx.mul(x, &ctx.identity_elem()), *x);
            assert_eq!(ctx.mul(&ctx.inv(x), x), ctx.identity_elem());
            for y in &els {
                let xy = ctx.mul(x, y);
                for z in &els {
                    assert_eq!(ctx.mul(&xy, z), ctx.mul(x, &ctx.mul(y, z)));
                }
            }
        }
        for u in f.witt_elements() {
            let c = ctx.central(u);
            assert!(ctx.is_central(&c));
            for x in &els {
                assert_eq!(ctx.mul(&c, x), ctx.mul(x, &c));
            }
        }
    }

    #[test]
    fn quotient_matches_the_heisenberg_group() {
        for (f, n) in fields_small() {
            let ctx = RedHeis::standard(f, n);
            let hctx = HeisCtx::new(f, n);
            let els = ctx.elements();
            let mut seen = vec![false; els.len()];
            for x in &els {
                let hx = ctx.to_heisenberg(x);
                assert_eq!(hx.v, x.t);
                let i = hctx.index(&hx);
                assert!(!seen[i]);
                seen[i] = true;
            }
            assert!(seen.iter().all(|&b| b));
            for u in f.witt_elements() {
                assert_eq!(ctx.to_heisenberg(&ctx.central(u)), hctx.central(u));
            }
            for x in &els {
                for y in &els {
                    assert_eq!(
                        ctx.to_heisenberg(&ctx.mul(x, y)),
                        hctx.mul(&ctx.to_heisenberg(x), &ctx.to_heisenberg(y))
                    );
                }
            }
        }
    }

    #[test]
    fn base_point_map_is_well_defined_and_enhances_the_opposite_lagrangian() {
        for (f, n) in fields_small() {
            let q = f.q() as usize;
            let mut reduced = 0;
            for phi in polar_forms(f, n) {
                let lm = LatticeModel::new(f, n, phi);
                let Some(chain) = find_isotropic_lagrangian(&lm) else {
                    continue;
                };
                reduced += 1;
                let ctx = RedHeis::new(&lm, &chain);
                // any coordinate representative of a base point gives the
                // same class: vary the even first half and the mod-4 lift
                // of the second half
                for x2 in k_vectors(f, n) {
                    let base = ctx.tau(&x2);
                    for aflat in 0..q.pow(n as u32) {
                        let mut rest = aflat;
                        let abar: Vec<Gf2m> =
                            (0..n).map(|_| { let b = rest % q; rest /= q; f.elem(b as u32) }).collect();
                        for bflat in 0..q.pow(n as u32) {
                            let mut rest = bflat;
                            let bvec: Vec<Gf2m> =
                                (0..n).map(|_| { let b = rest % q; rest /= q; f.elem(b as u32) }).collect();
                            let mut traw = Vec::with_capacity(2 * n);
                            for &a in &abar {
                                traw.push(Witt2::from_ideal(a.square()));
                            }
                            for i in 0..n {
                                traw.push(Witt2::new(x2[i], bvec[i]));
                            }
                            let mut mbar = abar.clone();
                            mbar.extend_from_slice(&x2);
                            let u = Witt2::from_ideal(ctx.phi.eval(&mbar).square());
                            assert_eq!(ctx.class(&traw, u), base);
                        }
                    }
                }
                // the section is a homomorphism with character one
                for x in k_vectors(f, n) {
                    assert!((ctx.chi(&ctx.tau(&x)) - CycInt::one()).is_zero());
                    for y in k_vectors(f, n) {
                        let s: Vec<Gf2m> = x.iter().zip(&y).map(|(&a, &b)| a + b).collect();
                        assert_eq!(ctx.mul(&ctx.tau(&x), &ctx.tau(&y)), ctx.tau(&s));
                    }
                }
                // the abelian character is multiplicative
                let mbar: Vec<RedElem> = k_vectors(f, n)
                    .iter()
                    .flat_map(|c| {
                        f.witt_elements()
                            .map(|u| ctx.mul(&ctx.central(u), &ctx.tau(c)))
                            .collect::<Vec<_>>()
                    })
                    .collect();
                for x in &mbar {
                    assert!(ctx.in_mbar(x));
                    for y in &mbar {
                        assert_eq!(ctx.chi(&ctx.mul(x, y)), ctx.chi(x) * ctx.chi(y));
                    }
                }
                // the induced enhancement is valid and matches the section
                let hctx = HeisCtx::new(f, n);
                let enh = ctx.enhancement();
                assert!(enh.validate(&hctx));
                for x2 in k_vectors(f, n) {
                    let mut v = vec![f.zero(); 2 * n];
                    v[n..].copy_from_slice(&x2);
                    assert_eq!(ctx.to_heisenberg(&ctx.tau(&x2)), tau_at(&hctx, &enh, &v));
                }
                if reduced > 1 && n > 1 {
                    break; // two chains suffice at the larger size
                }
            }
            assert!(reduced > 1, "several forms must reduce");
        }
    }

    #[test]
    fn reduced_model_matches_the_lagrangian_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(414);
        for (f, n) in fields_small() {
            let q = f.q() as usize;
            let lm = LatticeModel::standard(f, n);
            let chain = find_isotropic_lagrangian(&lm).unwrap();
            let ctx = RedHeis::new(&lm, &chain);
            let rm = red_model_build(&ctx);
            assert_eq!(rm.dim(), q.pow(n as u32));
            for b in &rm.basis {
                assert!(rm.in_space(b));
            }
            let hctx = HeisCtx::new(f, n);
            let enh = ctx.enhancement();
            let hm = model_build(&hctx, &enh);
            assert_eq!(hm.dim(), rm.dim());
            // the transported basis lies in the model and stays independent
            let mut cols = Vec::new();
            for b in &rm.basis {
                let g = lift_function(&ctx, &hctx, b);
                assert!(hm.in_space(&g));
                cols.push(hm.coords(&g));
            }
            assert_eq!(bareiss_rank(cols), rm.dim());
            // transport intertwines the right translations
            let els = ctx.elements();
            for _ in 0..24 {
                let h = &els[rng.gen_range(0..els.len())];
                let hh = ctx.to_heisenberg(h);
                for b in &rm.basis {
                    let lhs = lift_function(&ctx, &hctx, &rm.rho(h, b));
                    let rhs = hm.rho(&hh, &lift_function(&ctx, &hctx, b));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn invariant_vectors_die_on_the_full_lattice() {
        for (f, n) in fields_small() {
            let lm = LatticeModel::standard(f, n);
            let chain = find_isotropic_lagrangian(&lm).unwrap();
            let ctx = RedHeis::new(&lm, &chain);
            let rm = red_model_build(&ctx);
            let image = full_lattice_image(&ctx);
            // a class only remembers the residue of the second half and a
            // central square, so the image is small
            let q = f.q();
            let qn = q.pow(n as u32);
            assert_eq!(image.len() as u64, (qn - 1) * q + 1);
            assert_eq!(invariant_dim(&rm, &image), 0);
            // controls: the identity fixes everything, the doubled lattice
            // maps to the identity class
            assert_eq!(invariant_dim(&rm, &[ctx.identity_elem()]), rm.dim());
            let two = Witt2::two(f);
            let dbl = ctx.class(&vec![two; 2 * n], Witt2::zero(f));
            assert_eq!(dbl, ctx.identity_elem());
        }
    }

    #[test]
    fn fixed_spaces_have_the_predicted_dimensions() {
        for (f, n) in fields_small() {
            let q = f.q() as usize;
            for (fi, phi) in polar_forms(f, n).into_iter().enumerate() {
                let lm = LatticeModel::new(f, n, phi);
                // doubled lattice: the rank of the whole character model
                let none = KMatrix::from_rows_or_empty(f, 2 * n, vec![]);
                assert_eq!(fixed_space(&lm, &none).dim, q.pow(2 * n as u32));
                // a chain: matches the dimension of the reduced model
                if let Some(chain) = find_isotropic_lagrangian(&lm) {
                    let fs = fixed_space(&lm, &chain);
                    assert_eq!(fs.dim, q.pow(n as u32));
                    let rm = red_model_build(&RedHeis::new(&lm, &chain));
                    assert_eq!(fs.dim, rm.dim());
                }
                if fi >= 3 {
                    break;
                }
            }
            // an isotropic line on which the form vanishes: one halving step
            if n == 2 {
                let lm = LatticeModel::standard(f, n);
                let e1 = KMatrix::from_rows(f, vec![{
                    let mut v = vec![f.zero(); 2 * n];
                    v[0] = f.one();
                    v
                }]);
                assert_eq!(fixed_space(&lm, &e1).dim, q.pow(2 * n as u32 - 1));
            }
        }
    }

    #[test]
    fn fixed_space_functions_transform_correctly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1231);
        for (f, n) in fields_small() {
            let ring = Gr8Ring::new(f);
            let lm = LatticeModel::standard(f, n);
            let chain = find_isotropic_lagrangian(&lm).unwrap();
            for (si, sb) in [chain, KMatrix::from_rows_or_empty(f, 2 * n, vec![])]
                .into_iter()
                .enumerate()
            {
                let fs = fixed_space(&lm, &sb);
                assert!(fs.dim > 0);
                let els = ring.elements();
                for _ in 0..40 {
                    let b = rng.gen_range(0..fs.basis.len());
                    let p = rng.gen_range(0..fs.pts.len());
                    // a mod-4 lattice vector
                    let w: Vec<Gr8> = (0..2 * n)
                        .map(|_| {
                            let mut x = els[rng.gen_range(0..els.len())];
                            for c in x.c.iter_mut() {
                                *c &= 3;
                            }
                            x
                        })
                        .collect();
                    let s2: Vec<Gr8> = fs.pts[p]
                        .iter()
                        .zip(&w)
                        .map(|(&a, &b)| ring.add(a, ring.scale(b, 2)))
                        .collect();
                    let p2 = fs.position(&s2).expect("translate stays in the domain");
                    let coef = psi(Zmod4::new(shift_exponent(&lm, &ring, &fs.pts[p], &w)));
                    assert_eq!(fs.basis[b][p2], coef * fs.basis[b][p].clone());
                }
                let _ = si;
            }
        }
    }

    #[test]
    fn pushing_the_center_splits_the_extension() {
        for (f, n) in fields_small() {
            let lm = LatticeModel::standard(f, n);
            let chain = find_isotropic_lagrangian(&lm).unwrap();
            let ctx = RedHeis::new(&lm, &chain);
            let pts = k_vectors(f, 2 * n);
            // pushing is compatible with the product and the section splits
            let els = ctx.elements();
            for x in &els {
                for y in &els {
                    let lhs = push_center(&ctx.mul(x, y));
                    let rhs = pushed_product(f, n, &push_center(x), &push_center(y));
                    assert_eq!(lhs, rhs);
                }
            }
            for v in &pts {
                for w in &pts {
                    let s: Vec<Gf2m> = v.iter().zip(w).map(|(&a, &b)| a + b).collect();
                    assert_eq!(
                        pushed_product(f, n, &split_section(&ctx, v), &split_section(&ctx, w)),
                        split_section(&ctx, &s)
                    );
                }
            }
        }
        // before pushing no section splits: exhaustive over all sections
        let f = Field::binary();
        let ctx = RedHeis::standard(f, 1);
        let pts = k_vectors(f, 2);
        let witt: Vec<Witt2> = f.witt_elements().collect();
        let mut found = false;
        for assign in 0..witt.len().pow(pts.len() as u32) {
            let mut rest = assign;
            let section: Vec<RedElem> = pts
                .iter()
                .map(|v| {
                    let u = witt[rest % witt.len()];
                    rest /= witt.len();
                    ctx.class(&teich_vec(v), u)
                })
                .collect();
            let ok = (0..pts.len()).all(|i| {
                (0..pts.len()).all(|j| {
                    let s: Vec<Gf2m> = pts[i].iter().zip(&pts[j]).map(|(&a, &b)| a + b).collect();
                    let k = pts.iter().position(|p| *p == s).unwrap();
                    ctx.mul(&section[i], &section[j]) == section[k]
                })
            });
            if ok {
                found = true;
            }
        }
        assert!(!found, "the unpushed extension admits no splitting");
        // rank zero: the degenerate quotient is just the center
        let ctx0 = RedHeis::standard(f, 0);
        assert_eq!(ctx0.group_size(), 4);
        assert_eq!(split_section(&ctx0, &[]).1, f.zero());
    }

    #[test]
    fn congruence_level_action_twists_the_center() {
        let f = Field::binary();
        let ctx = RedHeis::standard(f, 1);
        let els = ctx.elements();
        let mut rng = ChaCha8Rng::seed_from_u64(2717);
        let mut gens = vec![RMatrix::identity(f, 2)];
        for _ in 0..4 {
            gens.push(random_symplectic(f, 1, &mut rng, 6));
        }
        // the frozen congruence-level matrix: trivial on residues, central
        // twist on the fiber
        let two = Witt2::two(f);
        let one = Witt2::one(f);
        let frozen = RMatrix::from_rows(f, vec![vec![one, two], vec![two, one]]);
        assert!(is_symplectic(&frozen));
        gens.push(frozen.clone());
        for g in &gens {
            for x in &els {
                let gx = congruence_action(&ctx, g, x);
                for y in &els {
                    assert_eq!(
                        congruence_action(&ctx, g, &ctx.mul(x, y)),
                        ctx.mul(&gx, &congruence_action(&ctx, g, y))
                    );
                }
            }
            for u in f.witt_elements() {
                assert_eq!(congruence_action(&ctx, g, &ctx.central(u)), ctx.central(u));
            }
        }
        // identity at this level acts trivially
        for x in &els {
            assert_eq!(congruence_action(&ctx, &RMatrix::identity(f, 2), x), *x);
        }
        // the frozen matrix shifts the fiber over (1, 0) by the nontrivial
        // central element
        let e1 = ctx.class(&[one, Witt2::zero(f)], Witt2::zero(f));
        let moved = congruence_action(&ctx, &frozen, &e1);
        assert_eq!(moved.t, e1.t);
        assert_eq!(moved.u, two);
        // a congruence-level matrix with trivial diagonal obstruction acts
        // trivially even though it is not the identity
        let three = one + two;
        let diag = RMatrix::from_rows(
            f,
            vec![vec![three, Witt2::zero(f)], vec![Witt2::zero(f), three]],
        );
        assert!(is_symplectic(&diag));
        for x in &els {
            assert_eq!(congruence_action(&ctx, &diag, x), *x);
        }
    }

    #[test]
    fn chains_exist_exactly_for_split_type_forms() {
        assert_eq!(k_lagrangians(Field::binary(), 1).len(), 3);
        assert_eq!(k_lagrangians(Field::binary(), 2).len(), 15);
        assert_eq!(k_lagrangians(Field::of_order(4).unwrap(), 1).len(), 5);
        for (f, n) in fields_small() {
            for l in k_lagrangians(f, n) {
                let b = complete_isotropic_basis(&l);
                for i in 0..n {
                    assert_eq!(b.row(i), l.row(i));
                }
            }
            let (mut split, mut nonsplit) = (0, 0);
            for phi in polar_forms(f, n) {
                let plus = crate::qforms::arf(&phi).is_zero();
                let lm = LatticeModel::new(f, n, phi);
                match find_isotropic_lagrangian(&lm) {
                    Some(chain) => {
                        assert!(plus, "a chain forces trivial Arf invariant");
                        split += 1;
                        let ctx = RedHeis::new(&lm, &chain);
                        // the adapted form is the transport of the original
                        for x in k_vectors(f, 2 * n) {
                            assert_eq!(
                                ctx.phi.eval(&x),
                                lm.phi.eval(&ctx.basis_change.vec_mul(&x))
                            );
                        }
                    }
                    None => {
                        assert!(!plus, "trivial Arf invariant forces a chain");
                        nonsplit += 1;
                    }
                }
            }
            // both types occur, with the classical counts
            assert!(split > 0 && nonsplit > 0);
            let q = f.q();
            let qn = q.pow(n as u32);
            assert_eq!((split + nonsplit) as u64, qn * qn);
            assert_eq!(split as u64, (qn * qn + qn) / 2);
        }
    }
}
