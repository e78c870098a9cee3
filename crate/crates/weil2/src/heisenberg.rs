//! The Heisenberg group H(V) = V × R over k with R-valued center, enhanced
//! lagrangians, the affine symplectic group, and the induced models on which
//! H(V) acts by right translations.
//!
//! Throughout, vectors are rows and matrices act on the right; products of
//! automorphisms apply the left factor first.

use crate::rmodlin::{KMatrix, RMatrix};
use crate::symplectic::{
    beta_tilde_default, is_lagrangian, is_symplectic, omega_tilde, pair, random_symplectic,
};
use crate::witt::{check_size_guard, psi_tr, CycInt, Field, Gf2m, Witt2};
use rand::Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeisElem {
    pub v: Vec<Gf2m>,
    pub z: Witt2,
}

/// Ambient data: the residue space k^{2n} with the fixed bilinear lift β̃ of
/// the symplectic form (β̃ − β̃ᵀ = ω̃) and the induced β(x, y) = 2 β̃(x̃, ỹ).
#[derive(Clone)]
pub struct HeisCtx {
    pub field: Field,
    pub n: usize,
    pub btilde: RMatrix,
}

fn lift(v: &[Gf2m]) -> Vec<Witt2> {
    v.iter().map(|x| Witt2::teich(*x)).collect()
}

impl HeisCtx {
    /// Default β̃: the strictly upper-triangular half of ω̃.
    pub fn new(field: Field, n: usize) -> HeisCtx {
        HeisCtx::with_btilde(field, n, beta_tilde_default(field, n))
    }

    pub fn with_btilde(field: Field, n: usize, btilde: RMatrix) -> HeisCtx {
        let om = omega_tilde(field, n);
        let diff = btilde.sub(&btilde.transpose());
        assert_eq!(diff.lex_key(), om.lex_key(), "β̃ − β̃ᵀ must equal ω̃");
        HeisCtx { field, n, btilde }
    }

    pub fn beta_tilde(&self, xt: &[Witt2], yt: &[Witt2]) -> Witt2 {
        pair(&self.btilde, xt, yt)
    }

    /// β(x, y) = 2 β̃(x̃, ỹ); lands in the ideal 2R and is lift-independent.
    pub fn beta(&self, x: &[Gf2m], y: &[Gf2m]) -> Witt2 {
        self.beta_tilde(&lift(x), &lift(y)).double()
    }

    /// ω(x, y) = 2 ω̃(x̃, ỹ).
    pub fn omega(&self, x: &[Gf2m], y: &[Gf2m]) -> Witt2 {
        let om = omega_tilde(self.field, self.n);
        pair(&om, &lift(x), &lift(y)).double()
    }

    pub fn identity_elem(&self) -> HeisElem {
        HeisElem {
            v: vec![self.field.zero(); 2 * self.n],
            z: Witt2::zero(self.field),
        }
    }

    pub fn central(&self, z: Witt2) -> HeisElem {
        HeisElem {
            v: vec![self.field.zero(); 2 * self.n],
            z,
        }
    }

    pub fn mul(&self, a: &HeisElem, b: &HeisElem) -> HeisElem {
        let v: Vec<Gf2m> = a.v.iter().zip(b.v.iter()).map(|(x, y)| *x + *y).collect();
        let z = a.z + b.z + self.beta(&a.v, &b.v);
        HeisElem { v, z }
    }

    pub fn inv(&self, a: &HeisElem) -> HeisElem {
        HeisElem {
            v: a.v.clone(),
            z: -a.z - self.beta(&a.v, &a.v),
        }
    }

    pub fn is_central(&self, a: &HeisElem) -> bool {
        a.v.iter().all(|c| c.is_zero())
    }

    pub fn group_size(&self) -> u64 {
        let q = self.field.q();
        q.pow(2 * self.n as u32 + 2)
    }

    /// Index of a group element in the enumeration order of `elements`.
    pub fn index(&self, h: &HeisElem) -> usize {
        let q = self.field.q() as usize;
        let mut v_idx = 0usize;
        for i in (0..2 * self.n).rev() {
            v_idx = v_idx * q + h.v[i].bits as usize;
        }
        let z_idx = h.z.a0.bits as usize * q + h.z.a1.bits as usize;
        v_idx * q * q + z_idx
    }

    pub fn elements(&self) -> Vec<HeisElem> {
        check_size_guard(self.group_size()).expect("Heisenberg group too large");
        let q = self.field.q() as usize;
        let mut out = Vec::with_capacity(self.group_size() as usize);
        for flat in 0..q.pow(2 * self.n as u32) {
            let mut rest = flat;
            let mut v = Vec::with_capacity(2 * self.n);
            for _ in 0..2 * self.n {
                v.push(self.field.elem((rest % q) as u32));
                rest /= q;
            }
            for b0 in 0..q {
                for b1 in 0..q {
                    out.push(HeisElem {
                        v: v.clone(),
                        z: Witt2::of_bits(self.field, b0 as u32, b1 as u32),
                    });
                }
            }
        }
        out
    }
}

/// A lagrangian L ⊂ V with a compatible enhancement α: L → R, stored by its
/// values on the basis rows.  The pair (x, α(x)) is a homomorphism L → H(V).
#[derive(Clone, Debug)]
pub struct EnhLagrangian {
    pub l: KMatrix,
    pub alpha: Vec<Witt2>,
}

impl EnhLagrangian {
    pub fn n(&self) -> usize {
        self.l.rows
    }

    fn scaled_row(&self, i: usize, c: Gf2m) -> Vec<Gf2m> {
        self.l.row(i).iter().map(|x| x.mul(c)).collect()
    }

    /// α on the element with coordinates `c` in the basis rows:
    /// α(Σ cᵢ bᵢ) = Σ c̃ᵢ² α(bᵢ) + Σ_{i<j} β(cᵢbᵢ, cⱼbⱼ).
    pub fn alpha_coeffs(&self, ctx: &HeisCtx, c: &[Gf2m]) -> Witt2 {
        let mut acc = Witt2::zero(ctx.field);
        for i in 0..self.n() {
            let sq = Witt2::teich(c[i].square());
            acc = acc + sq * self.alpha[i];
        }
        for i in 0..self.n() {
            if c[i].is_zero() {
                continue;
            }
            let ri = self.scaled_row(i, c[i]);
            for j in i + 1..self.n() {
                if c[j].is_zero() {
                    continue;
                }
                acc = acc + ctx.beta(&ri, &self.scaled_row(j, c[j]));
            }
        }
        acc
    }

    /// α at an ambient vector known to lie on L.
    pub fn alpha_at(&self, ctx: &HeisCtx, v: &[Gf2m]) -> Witt2 {
        let c = self
            .l
            .transpose()
            .solve(v)
            .expect("vector not on the lagrangian");
        self.alpha_coeffs(ctx, &c)
    }

    pub fn tau_coeffs(&self, ctx: &HeisCtx, c: &[Gf2m]) -> HeisElem {
        HeisElem {
            v: self.l.vec_mul(c),
            z: self.alpha_coeffs(ctx, c),
        }
    }

    pub fn contains(&self, v: &[Gf2m]) -> bool {
        self.l.transpose().solve(v).is_some()
    }

    /// Exhaustive check of the enhancement conditions and that τ is a group
    /// homomorphism into H(V).
    pub fn validate(&self, ctx: &HeisCtx) -> bool {
        let pts = crate::qforms::k_vectors(ctx.field, self.n());
        for c in &pts {
            for d in &pts {
                let sum: Vec<Gf2m> = c.iter().zip(d.iter()).map(|(a, b)| *a + *b).collect();
                let lhs = self.alpha_coeffs(ctx, &sum)
                    - self.alpha_coeffs(ctx, c)
                    - self.alpha_coeffs(ctx, d);
                let vc = self.l.vec_mul(c);
                let vd = self.l.vec_mul(d);
                if lhs != ctx.beta(&vc, &vd) {
                    return false;
                }
                let prod = ctx.mul(&self.tau_coeffs(ctx, c), &self.tau_coeffs(ctx, d));
                if prod != self.tau_coeffs(ctx, &sum) {
                    return false;
                }
            }
            for a in ctx.field.elements() {
                let scaled: Vec<Gf2m> = c.iter().map(|x| x.mul(a)).collect();
                let want = Witt2::teich(a.square()) * self.alpha_coeffs(ctx, c);
                if self.alpha_coeffs(ctx, &scaled) != want {
                    return false;
                }
            }
        }
        true
    }

    /// Same lagrangian with the same enhancement function (bases may differ).
    pub fn same_enhancement(&self, ctx: &HeisCtx, other: &EnhLagrangian) -> bool {
        if self.n() != other.n() {
            return false;
        }
        for c in crate::qforms::k_vectors(ctx.field, self.n()) {
            let v = self.l.vec_mul(&c);
            match other.l.transpose().solve(&v) {
                None => return false,
                Some(d) => {
                    if self.alpha_coeffs(ctx, &c) != other.alpha_coeffs(ctx, &d) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Canonical enhancement of (the residue of) a free lagrangian R-submodule:
/// α(x) = β̃(x̃, x̃) for x̃ on the module over x.
pub fn epsilon(ctx: &HeisCtx, ltilde: &RMatrix) -> EnhLagrangian {
    assert!(is_lagrangian(ltilde));
    let l = ltilde.residue();
    let alpha = (0..ltilde.rows)
        .map(|i| ctx.beta_tilde(ltilde.row(i), ltilde.row(i)))
        .collect();
    EnhLagrangian { l, alpha }
}

/// Element (g, α) of the affine symplectic group: g preserves the residue
/// symplectic form and α: V → R satisfies
/// α(v+w) − α(v) − α(w) = β(vg, wg) − β(v, w) plus the quartic scaling rule.
/// α is stored by its values on the standard basis.
#[derive(Clone, Debug, PartialEq)]
pub struct AspElement {
    pub g: KMatrix,
    pub alpha_basis: Vec<Witt2>,
}

impl AspElement {
    pub fn identity(ctx: &HeisCtx) -> AspElement {
        AspElement {
            g: KMatrix::identity(ctx.field, 2 * ctx.n),
            alpha_basis: vec![Witt2::zero(ctx.field); 2 * ctx.n],
        }
    }

    fn basis_vec(ctx: &HeisCtx, i: usize, c: Gf2m) -> Vec<Gf2m> {
        let mut v = vec![ctx.field.zero(); 2 * ctx.n];
        v[i] = c;
        v
    }

    fn cross(&self, ctx: &HeisCtx, u: &[Gf2m], w: &[Gf2m]) -> Witt2 {
        let gu = self.g.vec_mul(u);
        let gw = self.g.vec_mul(w);
        ctx.beta(&gu, &gw) - ctx.beta(u, w)
    }

    /// α at an arbitrary vector via the cocycle expansion over the basis.
    pub fn alpha(&self, ctx: &HeisCtx, v: &[Gf2m]) -> Witt2 {
        let mut acc = Witt2::zero(ctx.field);
        for i in 0..2 * ctx.n {
            let sq = Witt2::teich(v[i].square());
            acc = acc + sq * self.alpha_basis[i];
        }
        for i in 0..2 * ctx.n {
            if v[i].is_zero() {
                continue;
            }
            let ei = AspElement::basis_vec(ctx, i, v[i]);
            for j in i + 1..2 * ctx.n {
                if v[j].is_zero() {
                    continue;
                }
                acc = acc + self.cross(ctx, &ei, &AspElement::basis_vec(ctx, j, v[j]));
            }
        }
        acc
    }

    /// Structural validity: g symplectic and 2·α(eᵢ) matching the diagonal of
    /// the coboundary (forced by v + v = 0).
    pub fn is_valid(&self, ctx: &HeisCtx) -> bool {
        let omr = omega_tilde(ctx.field, ctx.n).residue();
        let got = self.g.mul(&omr).mul(&self.g.transpose());
        if !(0..2 * ctx.n).all(|i| (0..2 * ctx.n).all(|j| got.get(i, j) == omr.get(i, j))) {
            return false;
        }
        for i in 0..2 * ctx.n {
            let ei = AspElement::basis_vec(ctx, i, ctx.field.one());
            if self.alpha_basis[i].double() != self.cross(ctx, &ei, &ei) {
                return false;
            }
        }
        true
    }

    /// The automorphism of H(V): (v, z) ↦ (v g, z + α(v)).
    pub fn apply(&self, ctx: &HeisCtx, h: &HeisElem) -> HeisElem {
        HeisElem {
            v: self.g.vec_mul(&h.v),
            z: h.z + self.alpha(ctx, &h.v),
        }
    }

    pub fn inverse(&self, ctx: &HeisCtx) -> AspElement {
        let ginv = self.g.inverse().expect("symplectic matrices are invertible");
        let alpha_basis = (0..2 * ctx.n)
            .map(|i| {
                let pre = ginv.vec_mul(&AspElement::basis_vec(ctx, i, ctx.field.one()));
                -self.alpha(ctx, &pre)
            })
            .collect();
        AspElement { g: ginv, alpha_basis }
    }
}

/// Product applying `a` first, then `b`.
pub fn asp_mul(ctx: &HeisCtx, a: &AspElement, b: &AspElement) -> AspElement {
    let g = a.g.mul(&b.g);
    let alpha_basis = (0..2 * ctx.n)
        .map(|i| {
            let ei = AspElement::basis_vec(ctx, i, ctx.field.one());
            a.alpha(ctx, &ei) + b.alpha(ctx, &a.g.vec_mul(&ei))
        })
        .collect();
    AspElement { g, alpha_basis }
}

/// ξ(g̃) = (g, α) with α(v) = β̃(ṽ g̃, ṽ g̃) − β̃(ṽ, ṽ); a surjection from the
/// R-symplectic group onto the affine symplectic group.
pub fn xi(ctx: &HeisCtx, gtilde: &RMatrix) -> AspElement {
    assert!(is_symplectic(gtilde));
    let g = gtilde.residue();
    let alpha_basis = (0..2 * ctx.n)
        .map(|i| {
            let mut e = vec![Witt2::zero(ctx.field); 2 * ctx.n];
            e[i] = Witt2::one(ctx.field);
            let ge = gtilde.vec_mul(&e);
            ctx.beta_tilde(&ge, &ge) - ctx.beta_tilde(&e, &e)
        })
        .collect();
    AspElement { g, alpha_basis }
}

/// An element (id, α) with α ∈ FQ_a(V*): basis values in the ideal 2R.
pub fn fqa_element(ctx: &HeisCtx, vals: &[Gf2m]) -> AspElement {
    assert_eq!(vals.len(), 2 * ctx.n);
    AspElement {
        g: KMatrix::identity(ctx.field, 2 * ctx.n),
        alpha_basis: vals.iter().map(|x| Witt2::from_ideal(*x)).collect(),
    }
}

/// Action on enhanced lagrangians: the transported basis rows are bᵢ g with
/// α'(bᵢ g) = α(bᵢ) + α_g(bᵢ).
pub fn asp_act_enh(ctx: &HeisCtx, g: &AspElement, l: &EnhLagrangian) -> EnhLagrangian {
    let rows = l.l.mul(&g.g);
    let alpha = (0..l.n())
        .map(|i| l.alpha[i] + g.alpha(ctx, l.l.row(i)))
        .collect();
    EnhLagrangian { l: rows, alpha }
}

/// The induced model: functions f on H(V) with f(z τ(x) h) = ψ(tr z) f(h),
/// stored densely over the whole group.
pub struct Model {
    pub ctx: HeisCtx,
    pub enh: EnhLagrangian,
    pub elems: Vec<HeisElem>,
    /// index of the defining point of each basis function
    pub reps: Vec<usize>,
    pub basis: Vec<Vec<CycInt>>,
}

pub fn model_build(ctx: &HeisCtx, enh: &EnhLagrangian) -> Model {
    let elems = ctx.elements();
    let size = elems.len();
    let mut covered = vec![false; size];
    let mut reps = Vec::new();
    let mut basis = Vec::new();
    let coeffs = crate::qforms::k_vectors(ctx.field, enh.n());
    for h0 in 0..size {
        if covered[h0] {
            continue;
        }
        let mut f = vec![CycInt::zero(); size];
        for c in &coeffs {
            let t = enh.tau_coeffs(ctx, c);
            for z in ctx.field.witt_elements() {
                let pt = ctx.mul(&ctx.mul(&ctx.central(z), &t), &elems[h0]);
                let idx = ctx.index(&pt);
                assert!(!covered[idx]);
                covered[idx] = true;
                f[idx] = psi_tr(z);
            }
        }
        reps.push(h0);
        basis.push(f);
    }
    Model {
        ctx: ctx.clone(),
        enh: enh.clone(),
        elems,
        reps,
        basis,
    }
}

impl Model {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn in_space(&self, f: &[CycInt]) -> bool {
        let coeffs = crate::qforms::k_vectors(self.ctx.field, self.enh.n());
        for (hi, h) in self.elems.iter().enumerate() {
            for c in &coeffs {
                let t = self.enh.tau_coeffs(&self.ctx, c);
                for z in self.ctx.field.witt_elements() {
                    let pt = self.ctx.mul(&self.ctx.mul(&self.ctx.central(z), &t), h);
                    let want = &psi_tr(z) * &f[hi];
                    if f[self.ctx.index(&pt)] != want {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Right translation ρ(h): (ρ(h) f)(x) = f(x h).
    pub fn rho(&self, h: &HeisElem, f: &[CycInt]) -> Vec<CycInt> {
        self.elems
            .iter()
            .map(|x| f[self.ctx.index(&self.ctx.mul(x, h))].clone())
            .collect()
    }

    /// Matrix of ρ(h) on the model basis (columns act on coordinates).
    pub fn rho_matrix(&self, h: &HeisElem) -> Vec<Vec<CycInt>> {
        let d = self.dim();
        let mut m = vec![vec![CycInt::zero(); d]; d];
        for j in 0..d {
            for i in 0..d {
                let pt = self.ctx.mul(&self.elems[self.reps[i]], h);
                m[i][j] = self.basis[j][self.ctx.index(&pt)].clone();
            }
        }
        m
    }

    pub fn character(&self, h: &HeisElem) -> CycInt {
        let mut acc = CycInt::zero();
        for i in 0..self.dim() {
            let pt = self.ctx.mul(&self.elems[self.reps[i]], h);
            acc = &acc + &self.basis[i][self.ctx.index(&pt)];
        }
        acc
    }

    /// Coordinates of a model vector on the basis (supports are disjoint).
    pub fn coords(&self, f: &[CycInt]) -> Vec<CycInt> {
        self.reps.iter().map(|&r| f[r].clone()).collect()
    }
}

/// Seeded vector over k.
pub fn random_vec(field: Field, len: usize, rng: &mut impl Rng) -> Vec<Gf2m> {
    (0..len)
        .map(|_| field.elem(rng.gen_range(0..field.q() as u32)))
        .collect()
}

/// Seeded group element.
pub fn random_heis(ctx: &HeisCtx, rng: &mut impl Rng) -> HeisElem {
    HeisElem {
        v: random_vec(ctx.field, 2 * ctx.n, rng),
        z: Witt2::of_bits(
            ctx.field,
            rng.gen_range(0..ctx.field.q() as u32),
            rng.gen_range(0..ctx.field.q() as u32),
        ),
    }
}

/// Seeded affine-symplectic element: a symplectic word times a quartic twist.
pub fn random_asp(ctx: &HeisCtx, rng: &mut impl Rng) -> AspElement {
    let g = xi(ctx, &random_symplectic(ctx.field, ctx.n, rng, 6));
    let t = fqa_element(ctx, &random_vec(ctx.field, 2 * ctx.n, rng));
    asp_mul(ctx, &g, &t)
}

/// Seeded enhancement of the lagrangian lift: the canonical one twisted by a
/// random additive-quartic element.
pub fn random_enh(ctx: &HeisCtx, lt: &RMatrix, rng: &mut impl Rng) -> EnhLagrangian {
    let twist = fqa_element(ctx, &random_vec(ctx.field, 2 * ctx.n, rng));
    asp_act_enh(ctx, &twist, &epsilon(ctx, lt))
}

/// Transport H_L → H_{gL}: (g f)(h) = f(g⁻¹ h) for the automorphism attached
/// to g.
pub fn transport(ctx: &HeisCtx, g: &AspElement, src: &Model, f: &[CycInt]) -> Vec<CycInt> {
    let ginv = g.inverse(ctx);
    src.elems
        .iter()
        .map(|h| f[ctx.index(&ginv.apply(ctx, h))].clone())
        .collect()
}

/// Rank of a matrix over Z[i] by fraction-free elimination.
pub fn bareiss_rank(mut m: Vec<Vec<CycInt>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev = CycInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r >= rows {
            break;
        }
        let piv = (r..rows).find(|&i| !m[i][c].is_zero());
        let piv = match piv {
            None => continue,
            Some(p) => p,
        };
        m.swap(r, piv);
        for i in 0..rows {
            if i == r {
                continue;
            }
            for j in 0..cols {
                if j == c {
                    continue;
                }
                let num = &(&m[r][c] * &m[i][j]) - &(&m[i][c] * &m[r][j]);
                m[i][j] = num.exact_div(&prev).expect("bareiss division is exact");
            }
            m[i][c] = CycInt::zero();
        }
        prev = m[r][c].clone();
        r += 1;
        rank += 1;
    }
    rank
}

/// Dimension of the algebra of model endomorphisms commuting with ρ of the
/// given group elements.
pub fn commutant_dim(model: &Model, gens: &[HeisElem]) -> usize {
    let d = model.dim();
    let mut rows = Vec::new();
    for h in gens {
        let a = model.rho_matrix(h);
        // equations (T A - A T)_{ij} = 0 in the d*d unknowns T_{uv}
        for i in 0..d {
            for j in 0..d {
                let mut row = vec![CycInt::zero(); d * d];
                for v in 0..d {
                    row[i * d + v] = &row[i * d + v] + &a[v][j];
                }
                for u in 0..d {
                    row[u * d + j] = &row[u * d + j] - &a[i][u];
                }
                rows.push(row);
            }
        }
    }
    d * d - bareiss_rank(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qforms::k_vectors;
    use crate::symplectic::{
        random_lagrangian, random_symmetric, random_symplectic, standard_lagrangian, sym_gl,
        sym_lower,
    };
    use crate::witt::{psi, Zmod4};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2() -> Field {
        Field::binary()
    }

    #[test]
    fn beta_default_values_and_lift_independence() {
        let ctx = HeisCtx::new(f2(), 1);
        let e1 = vec![f2().one(), f2().zero()];
        let e2 = vec![f2().zero(), f2().one()];
        assert_eq!(ctx.beta(&e1, &e2), Witt2::two(f2()));
        assert_eq!(ctx.beta(&e2, &e1), Witt2::zero(f2()));
        // any lifts give the same doubled value
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(q, n) in &[(2u32, 1usize), (4, 1), (2, 2)] {
            let f = Field::of_order(q.into()).unwrap();
            let ctx = HeisCtx::new(f, n);
            for _ in 0..50 {
                let x = random_vec(f, 2 * n, &mut rng);
                let y = random_vec(f, 2 * n, &mut rng);
                let mut xt = lift(&x);
                let mut yt = lift(&y);
                for i in 0..2 * n {
                    if rng.gen_bool(0.5) {
                        xt[i] = xt[i] + Witt2::from_ideal(f.elem(rng.gen_range(0..q)));
                    }
                    if rng.gen_bool(0.5) {
                        yt[i] = yt[i] + Witt2::from_ideal(f.elem(rng.gen_range(0..q)));
                    }
                }
                assert_eq!(ctx.beta_tilde(&xt, &yt).double(), ctx.beta(&x, &y));
                // β(x,y) − β(y,x) = ω(x,y)
                assert_eq!(ctx.beta(&x, &y) - ctx.beta(&y, &x), ctx.omega(&x, &y));
            }
        }
    }

    #[test]
    fn heisenberg_group_axioms_exhaustive() {
        let ctx = HeisCtx::new(f2(), 1);
        let els = ctx.elements();
        assert_eq!(els.len() as u64, ctx.group_size());
        assert_eq!(ctx.group_size(), 16);
        // index round trip
        for (i, h) in els.iter().enumerate() {
            assert_eq!(ctx.index(h), i);
        }
        for a in &els {
            let ia = ctx.inv(a);
            assert_eq!(ctx.mul(a, &ia), ctx.identity_elem());
            assert_eq!(ctx.mul(&ia, a), ctx.identity_elem());
            for b in &els {
                for c in &els {
                    assert_eq!(
                        ctx.mul(&ctx.mul(a, b), c),
                        ctx.mul(a, &ctx.mul(b, c))
                    );
                }
            }
        }
        // center is exactly {(0, z)} and is a copy of (R, +)
        for a in &els {
            let central = els.iter().all(|b| ctx.mul(a, b) == ctx.mul(b, a));
            assert_eq!(central, ctx.is_central(a));
        }
        for z1 in f2().witt_elements() {
            for z2 in f2().witt_elements() {
                assert_eq!(
                    ctx.mul(&ctx.central(z1), &ctx.central(z2)),
                    ctx.central(z1 + z2)
                );
            }
        }
        // inverse of (v, 0) and the commutator identity
        for a in &els {
            let v0 = HeisElem { v: a.v.clone(), z: Witt2::zero(f2()) };
            let inv = ctx.inv(&v0);
            assert_eq!(inv.v, v0.v);
            assert_eq!(inv.z, ctx.beta(&a.v, &a.v));
            for b in &els {
                let w0 = HeisElem { v: b.v.clone(), z: Witt2::zero(f2()) };
                let comm = ctx.mul(
                    &ctx.mul(&v0, &w0),
                    &ctx.mul(&ctx.inv(&v0), &ctx.inv(&w0)),
                );
                assert!(ctx.is_central(&comm));
                assert_eq!(comm.z, ctx.omega(&v0.v, &w0.v));
            }
        }
    }

    #[test]
    fn alternate_beta_choice_gives_isomorphic_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(q, n) in &[(2u32, 1usize), (4, 1)] {
            let f = Field::of_order(q.into()).unwrap();
            let ctx = HeisCtx::new(f, n);
            for _ in 0..10 {
                let s = random_symmetric(f, 2 * n, &mut rng);
                let ctx2 = HeisCtx::with_btilde(f, n, ctx.btilde.add(&s));
                // σ(v) = S(ṽ, ṽ) is lift-independent for symmetric S, and
                // (v, z) ↦ (v, z + σ(v)) is an isomorphism onto the new group
                let sigma = |v: &[Gf2m]| pair(&s, &lift(v), &lift(v));
                for a in ctx.elements() {
                    for b in ctx.elements() {
                        let img = |h: &HeisElem| HeisElem {
                            v: h.v.clone(),
                            z: h.z + sigma(&h.v),
                        };
                        assert_eq!(img(&ctx.mul(&a, &b)), ctx2.mul(&img(&a), &img(&b)));
                    }
                }
            }
        }
    }

    #[test]
    fn epsilon_enhances_and_tau_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = f2();
        let ctx = HeisCtx::new(f, 1);
        let std = standard_lagrangian(f, 1);
        let enh = epsilon(&ctx, &std);
        assert!(enh.alpha.iter().all(|a| a.is_zero()));
        assert!(enh.validate(&ctx));
        for &(q, n) in &[(2u32, 1usize), (2, 2), (4, 1)] {
            let field = Field::of_order(q.into()).unwrap();
            let c = HeisCtx::new(field, n);
            for _ in 0..35 {
                let lt = random_lagrangian(field, n, &mut rng);
                assert!(epsilon(&c, &lt).validate(&c));
            }
        }
    }

    #[test]
    fn enhancements_form_a_torsor_and_splittings_are_counted() {
        let f = f2();
        let ctx = HeisCtx::new(f, 1);
        // two enhancements of the same lagrangian differ by an additive
        // quartic functional (values in 2R)
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let lt = random_lagrangian(f, 1, &mut rng);
            let e1 = epsilon(&ctx, &lt);
            for extra in f.elements() {
                let mut e2 = e1.clone();
                e2.alpha[0] = e2.alpha[0] + Witt2::from_ideal(extra);
                assert!(e2.validate(&ctx));
                // difference is additive on all of L
                for c in k_vectors(f, 1) {
                    for d in k_vectors(f, 1) {
                        let s: Vec<Gf2m> =
                            c.iter().zip(d.iter()).map(|(a, b)| *a + *b).collect();
                        let diff = |x: &[Gf2m]| {
                            e2.alpha_coeffs(&ctx, x) - e1.alpha_coeffs(&ctx, x)
                        };
                        assert_eq!(diff(&s), diff(&c) + diff(&d));
                    }
                }
            }
        }
        // group-homomorphism splittings of L̄ = τ(L)·Z over the standard L:
        // exactly q^n of them
        let std = standard_lagrangian(f, 1);
        let enh = epsilon(&ctx, &std);
        let x0 = enh.l.row(0).to_vec();
        let mut count = 0;
        for g in f.witt_elements() {
            // candidate section x0 ↦ (x0, g); must square to the identity
            let cand = HeisElem { v: x0.clone(), z: g };
            if ctx.mul(&cand, &cand) == ctx.identity_elem() {
                count += 1;
            }
        }
        assert_eq!(count, 2);
    }

    #[test]
    fn asp_composition_and_xi_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &(q, n) in &[(2u32, 1usize), (2, 2), (4, 1)] {
            let f = Field::of_order(q.into()).unwrap();
            let ctx = HeisCtx::new(f, n);
            let id = AspElement::identity(&ctx);
            assert_eq!(xi(&ctx, &RMatrix::identity(f, 2 * n)), id);
            for _ in 0..170 {
                let gt = random_symplectic(f, n, &mut rng, 5);
                let ht = random_symplectic(f, n, &mut rng, 5);
                let a = xi(&ctx, &gt);
                let b = xi(&ctx, &ht);
                assert!(a.is_valid(&ctx));
                // ξ respects products (left factor applied first)
                assert_eq!(xi(&ctx, &gt.mul(&ht)), asp_mul(&ctx, &a, &b));
                // automorphism property on random elements
                let h1 = random_heis(&ctx, &mut rng);
                let h2 = random_heis(&ctx, &mut rng);
                assert_eq!(
                    a.apply(&ctx, &ctx.mul(&h1, &h2)),
                    ctx.mul(&a.apply(&ctx, &h1), &a.apply(&ctx, &h2))
                );
                // inverses
                let ainv = a.inverse(&ctx);
                assert_eq!(asp_mul(&ctx, &a, &ainv), id);
                // associativity with a third element
                let c = xi(&ctx, &random_symplectic(f, n, &mut rng, 5));
                assert_eq!(
                    asp_mul(&ctx, &asp_mul(&ctx, &a, &b), &c),
                    asp_mul(&ctx, &a, &asp_mul(&ctx, &b, &c))
                );
            }
        }
    }

    #[test]
    fn xi_kernel_lands_in_additive_quartics() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for &(q, n) in &[(2u32, 1usize), (4, 1)] {
            let f = Field::of_order(q.into()).unwrap();
            let ctx = HeisCtx::new(f, n);
            for _ in 0..20 {
                // elements of G congruent to the identity: upper and lower
                // elementary factors with entries in 2R
                let s1 = random_symmetric(f, n, &mut rng);
                let s2 = random_symmetric(f, n, &mut rng);
                let double = |m: &RMatrix| {
                    let mut out = RMatrix::zero(f, n, n);
                    for i in 0..n {
                        for j in 0..n {
                            out.set(i, j, m.get(i, j).double());
                        }
                    }
                    out
                };
                let gt = crate::symplectic::sym_upper(&double(&s1))
                    .mul(&crate::symplectic::sym_lower(&double(&s2)));
                let a = xi(&ctx, &gt);
                assert_eq!(a.g, KMatrix::identity(f, 2 * n));
                // α is additive with values in 2R and quartic scaling
                let pts = k_vectors(f, 2 * n);
                for v in &pts {
                    let av = a.alpha(&ctx, v);
                    assert!(av.a0.is_zero());
                    for w in &pts {
                        let s: Vec<Gf2m> =
                            v.iter().zip(w.iter()).map(|(x, y)| *x + *y).collect();
                        assert_eq!(a.alpha(&ctx, &s), av + a.alpha(&ctx, w));
                    }
                    for t in f.elements() {
                        let scaled: Vec<Gf2m> = v.iter().map(|x| x.mul(t)).collect();
                        assert_eq!(
                            a.alpha(&ctx, &scaled),
                            Witt2::teich(t.square()) * av
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn epsilon_is_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for &(q, n) in &[(2u32, 1usize), (2, 2), (4, 1)] {
            let f = Field::of_order(q.into()).unwrap();
            let ctx = HeisCtx::new(f, n);
            for _ in 0..35 {
                let lt = random_lagrangian(f, n, &mut rng);
                let gt = random_symplectic(f, n, &mut rng, 5);
                let left = epsilon(&ctx, &crate::symplectic::apply(&lt, &gt));
                let right = asp_act_enh(&ctx, &xi(&ctx, &gt), &epsilon(&ctx, &lt));
                assert!(right.validate(&ctx));
                assert!(left.same_enhancement(&ctx, &right));
            }
        }
    }

    #[test]
    fn model_dimension_and_central_character() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for &(q, n) in &[(2u32, 1usize), (2, 2), (4, 1)] {
            let f = Field::of_order(q.into()).unwrap();
            let ctx = HeisCtx::new(f, n);
            let lt = random_lagrangian(f, n, &mut rng);
            let model = model_build(&ctx, &epsilon(&ctx, &lt));
            assert_eq!(model.dim() as u64, f.q().pow(n as u32));
            for b in &model.basis {
                assert!(model.in_space(b));
            }
            // ρ((0, z)) is the scalar ψ(tr z)
            for z in f.witt_elements() {
                let m = model.rho_matrix(&ctx.central(z));
                let scalar = psi_tr(z);
                for i in 0..model.dim() {
                    for j in 0..model.dim() {
                        let want = if i == j { scalar.clone() } else { CycInt::zero() };
                        assert_eq!(m[i][j], want);
                    }
                }
            }
            // ψ itself is faithful on Z/4
            assert_eq!(psi(Zmod4::new(1)), CycInt::from_ints(0, 1));
        }
    }

    fn mat_mul(a: &[Vec<CycInt>], b: &[Vec<CycInt>]) -> Vec<Vec<CycInt>> {
        let n = a.len();
        let mut out = vec![vec![CycInt::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = CycInt::zero();
                for t in 0..n {
                    acc = &acc + &(&a[i][t] * &b[t][j]);
                }
                out[i][j] = acc;
            }
        }
        out
    }

    #[test]
    fn rho_is_a_representation() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for &(q, n) in &[(2u32, 1usize), (2, 2), (4, 1)] {
            let f = Field::of_order(q.into()).unwrap();
            let ctx = HeisCtx::new(f, n);
            let lt = random_lagrangian(f, n, &mut rng);
            let model = model_build(&ctx, &epsilon(&ctx, &lt));
            for _ in 0..25 {
                let h1 = random_heis(&ctx, &mut rng);
                let h2 = random_heis(&ctx, &mut rng);
                let m1 = model.rho_matrix(&h1);
                let m2 = model.rho_matrix(&h2);
                let m12 = model.rho_matrix(&ctx.mul(&h1, &h2));
                assert_eq!(mat_mul(&m1, &m2), m12);
                // function-level action agrees with the matrix action
                let fvec = model.basis[0].clone();
                let moved = model.rho(&h1, &fvec);
                assert!(model.in_space(&moved));
                let coords = model.coords(&moved);
                for i in 0..model.dim() {
                    assert_eq!(coords[i], m1[i][0]);
                }
            }
        }
    }

    #[test]
    fn stone_von_neumann_at_desk_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for &(q, n) in &[(2u32, 1usize), (2, 2), (4, 1)] {
            let f = Field::of_order(q.into()).unwrap();
            let ctx = HeisCtx::new(f, n);
            let lt = random_lagrangian(f, n, &mut rng);
            let model = model_build(&ctx, &epsilon(&ctx, &lt));
            // the sum of |character|² over the group equals the group order
            let mut total = num_bigint::BigInt::from(0);
            for h in &model.elems {
                total += model.character(h).norm_sqr();
            }
            assert_eq!(total, num_bigint::BigInt::from(ctx.group_size()));
            // commutant of ρ on generators of H modulo center is scalars only
            let mut gens = Vec::new();
            for i in 0..2 * n {
                for c in f.elements() {
                    if c.is_zero() {
                        continue;
                    }
                    let mut v = vec![f.zero(); 2 * n];
                    v[i] = c;
                    gens.push(HeisElem { v, z: Witt2::zero(f) });
                }
            }
            assert_eq!(commutant_dim(&model, &gens), 1);
        }
    }

    #[test]
    fn transport_intertwines_and_splits_over_stabilizers() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for &(q, n) in &[(2u32, 1usize), (2, 2)] {
            let f = Field::of_order(q.into()).unwrap();
            let ctx = HeisCtx::new(f, n);
            let lt = standard_lagrangian(f, n);
            let enh = epsilon(&ctx, &lt);
            let model = model_build(&ctx, &enh);
            // identity transports trivially
            let idt = transport(&ctx, &AspElement::identity(&ctx), &model, &model.basis[0]);
            assert_eq!(idt, model.basis[0]);
            for _ in 0..12 {
                let gt = random_symplectic(f, n, &mut rng, 5);
                let g = xi(&ctx, &gt);
                let enh2 = asp_act_enh(&ctx, &g, &enh);
                let model2 = model_build(&ctx, &enh2);
                let f0 = model.basis[0].clone();
                let tf = transport(&ctx, &g, &model, &f0);
                assert!(model2.in_space(&tf));
                // ρ(g·h) ∘ T = T ∘ ρ(h)
                let h = random_heis(&ctx, &mut rng);
                let lhs = model2.rho(&g.apply(&ctx, &h), &tf);
                let rhs = transport(&ctx, &g, &model, &model.rho(&h, &f0));
                assert_eq!(lhs, rhs);
            }
            // splitting over the enhanced stabilizer: sampled products of
            // parabolic images and quartics vanishing on L
            let mut stab = Vec::new();
            for _ in 0..6 {
                let a = crate::symplectic::random_gl(f, n, &mut rng);
                stab.push(xi(&ctx, &sym_gl(&a)));
                let s = random_symmetric(f, n, &mut rng);
                stab.push(xi(&ctx, &sym_lower(&s)));
                let mut vals = vec![f.zero(); 2 * n];
                for i in n..2 * n {
                    vals[i] = f.elem(rng.gen_range(0..f.q() as u32));
                }
                stab.push(fqa_element(&ctx, &vals));
            }
            let dim = model.dim();
            let op_matrix = |g: &AspElement| -> Vec<Vec<CycInt>> {
                let mut cols = Vec::new();
                for b in &model.basis {
                    let tb = transport(&ctx, g, &model, b);
                    cols.push(model.coords(&tb));
                }
                let mut m = vec![vec![CycInt::zero(); dim]; dim];
                for j in 0..dim {
                    for i in 0..dim {
                        m[i][j] = cols[j][i].clone();
                    }
                }
                m
            };
            for g in &stab {
                assert!(asp_act_enh(&ctx, g, &enh).same_enhancement(&ctx, &enh));
            }
            for _ in 0..40 {
                let a = &stab[rng.gen_range(0..stab.len())];
                let b = &stab[rng.gen_range(0..stab.len())];
                let ab = asp_mul(&ctx, a, b);
                assert!(asp_act_enh(&ctx, &ab, &enh).same_enhancement(&ctx, &enh));
                // product applies a first, so operators compose as M(b)·M(a)
                assert_eq!(op_matrix(&ab), mat_mul(&op_matrix(b), &op_matrix(a)));
            }
        }
        // elements moving the lagrangian do not fix the enhancement
        let f = f2();
        let ctx = HeisCtx::new(f, 1);
        let enh = epsilon(&ctx, &standard_lagrangian(f, 1));
        let mut su = RMatrix::zero(f, 1, 1);
        su.set(0, 0, Witt2::one(f));
        let moved = asp_act_enh(&ctx, &xi(&ctx, &crate::symplectic::sym_upper(&su)), &enh);
        assert!(moved.validate(&ctx));
        assert!(!moved.same_enhancement(&ctx, &enh));
        let mvd2 = asp_act_enh(&ctx, &xi(&ctx, &crate::symplectic::sym_j(f, 1)), &enh);
        assert!(mvd2.validate(&ctx));
        assert!(!mvd2.same_enhancement(&ctx, &enh));
    }
}
