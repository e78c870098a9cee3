//! The free symplectic R-module of rank 2n with its standard antisymmetric
//! form, lagrangian submodules (free rank-n direct summands that are
//! self-perpendicular), and the symplectic group acting on row vectors from
//! the right.
//!
//! Basis order is e_1 .. e_n, e_{-1} .. e_{-n}; the standard form pairs
//! e_i with e_{-i}.

use crate::rmodlin::{FgRModule, KernelGens, RMatrix};
use crate::witt::{check_size_guard, Field, Witt2};
use rand::Rng;

/// The standard antisymmetric Gram matrix [[0, I], [-I, 0]].
pub fn omega_tilde(field: Field, n: usize) -> RMatrix {
    let mut m = RMatrix::zero(field, 2 * n, 2 * n);
    let one = Witt2::one(field);
    for i in 0..n {
        m.set(i, n + i, one);
        m.set(n + i, i, -one);
    }
    m
}

/// The standard bilinear form [[0, I], [0, 0]] with beta - beta^T = omega.
pub fn beta_tilde_default(field: Field, n: usize) -> RMatrix {
    let mut m = RMatrix::zero(field, 2 * n, 2 * n);
    for i in 0..n {
        m.set(i, n + i, Witt2::one(field));
    }
    m
}

/// x * form * y^T for row vectors.
pub fn pair(form: &RMatrix, x: &[Witt2], y: &[Witt2]) -> Witt2 {
    let fy = form.mul_vec(y);
    let mut acc = Witt2::zero(form.field);
    for i in 0..x.len() {
        acc = acc + x[i] * fy[i];
    }
    acc
}

pub fn is_symplectic(g: &RMatrix) -> bool {
    if g.rows != g.cols || g.rows % 2 != 0 {
        return false;
    }
    let om = omega_tilde(g.field, g.rows / 2);
    g.mul(&om).mul(&g.transpose()) == om
}

/// Rows span a lagrangian: a free direct summand of rank n on which the
/// standard form vanishes.
pub fn is_lagrangian(l: &RMatrix) -> bool {
    if l.cols != 2 * l.rows {
        return false;
    }
    if l.residue().rank() != l.rows {
        return false;
    }
    let om = omega_tilde(l.field, l.rows);
    l.mul(&om).mul(&l.transpose()).is_zero()
}

/// Rows e_1 .. e_n.
pub fn standard_lagrangian(field: Field, n: usize) -> RMatrix {
    let mut m = RMatrix::zero(field, n, 2 * n);
    for i in 0..n {
        m.set(i, i, Witt2::one(field));
    }
    m
}

/// Rows e_{-1} .. e_{-n}.
pub fn opposite_lagrangian(field: Field, n: usize) -> RMatrix {
    let mut m = RMatrix::zero(field, n, 2 * n);
    for i in 0..n {
        m.set(i, n + i, Witt2::one(field));
    }
    m
}

/// Canonical basis of the span of g applied to l (rows act from the right).
pub fn apply(l: &RMatrix, g: &RMatrix) -> RMatrix {
    l.mul(g).canonical_free_basis().expect("image of a lagrangian must stay free")
}

pub fn transverse(l1: &RMatrix, l2: &RMatrix) -> bool {
    l1.vstack(l2).residue().rank() == l1.cols
}

/// The intersection of two lagrangian spans: generators inside R^{2n}
/// (free ones first, then generators of the 2-torsion part) together with
/// the abstract module they generate.
pub struct Intersection {
    pub free: Vec<Vec<Witt2>>,
    pub torsion: Vec<Vec<Witt2>>,
    pub module: FgRModule,
    /// width of the ambient row vectors
    pub cols: usize,
}

impl Intersection {
    pub fn size(&self) -> u64 {
        self.module.size()
    }

    pub fn all_gens(&self) -> Vec<Vec<Witt2>> {
        let mut v = self.free.clone();
        v.extend(self.torsion.iter().cloned());
        v
    }

    /// Every element of the intersection, as vectors in R^{2n}.
    pub fn elements(&self) -> Vec<Vec<Witt2>> {
        let gens = self.all_gens();
        let field = self.module.field();
        let width = self.cols;
        self.module
            .elements()
            .into_iter()
            .map(|coef| {
                let mut v = vec![Witt2::zero(field); width];
                for (c, g) in coef.iter().zip(&gens) {
                    for j in 0..width {
                        v[j] = v[j] + *c * g[j];
                    }
                }
                v
            })
            .collect()
    }
}

pub fn intersect(l1: &RMatrix, l2: &RMatrix) -> Intersection {
    let stacked = l1.vstack(&l2.neg());
    // pairs (x, y) with x*l1 = y*l2
    let k: KernelGens = stacked.left_kernel_gens();
    let to_vec = |pair: &Vec<Witt2>| -> Vec<Witt2> {
        let x = &pair[..l1.rows];
        let mut v = vec![Witt2::zero(l1.field); l1.cols];
        for (i, xi) in x.iter().enumerate() {
            for j in 0..l1.cols {
                v[j] = v[j] + *xi * l1.get(i, j);
            }
        }
        v
    };
    let free: Vec<Vec<Witt2>> = k.free.iter().map(to_vec).collect();
    let torsion: Vec<Vec<Witt2>> = k.torsion.iter().map(to_vec).collect();
    Intersection { free, torsion, module: k.as_module(), cols: l1.cols }
}

/// The perpendicular of a span under the standard form, as kernel generators.
pub fn perp(l: &RMatrix) -> KernelGens {
    let om = omega_tilde(l.field, l.cols / 2);
    l.mul(&om).right_kernel_gens()
}

/// All lagrangians for small parameters, as canonical bases in
/// lexicographic order. Every lagrangian has a unique canonical basis whose
/// residue pivot pattern determines the shape: exact 1 at own pivot, exact 0
/// at other pivots, entries in 2R left of the own pivot, free entries right
/// of it.
pub fn enumerate_lagrangians(field: Field, n: usize) -> Vec<RMatrix> {
    let cols = 2 * n;
    let q = field.q();
    let mut out = Vec::new();
    // iterate over pivot subsets
    let mut pivots: Vec<usize> = (0..n).collect();
    loop {
        // count fillings for the guard
        let mut cells_full = 0u32;
        let mut cells_ideal = 0u32;
        for (i, &p) in pivots.iter().enumerate() {
            for c in 0..cols {
                if pivots.contains(&c) {
                    continue;
                }
                if c > p {
                    cells_full += 1;
                } else {
                    cells_ideal += 1;
                }
                let _ = i;
            }
        }
        let total = q
            .checked_pow(2 * cells_full + cells_ideal)
            .expect("shape too large");
        check_size_guard(total).expect("lagrangian enumeration too large");

        // positions of variable cells per row
        let mut slots: Vec<(usize, usize, bool)> = Vec::new(); // (row, col, full range)
        for (i, &p) in pivots.iter().enumerate() {
            for c in 0..cols {
                if !pivots.contains(&c) {
                    slots.push((i, c, c > p));
                }
            }
        }
        let mut counters = vec![0u64; slots.len()];
        'fill: loop {
            let mut m = RMatrix::zero(field, n, cols);
            for (i, &p) in pivots.iter().enumerate() {
                m.set(i, p, Witt2::one(field));
            }
            for (s, &(i, c, full)) in slots.iter().enumerate() {
                let v = counters[s];
                let w = if full {
                    Witt2::of_bits(field, (v % q) as u32, (v / q) as u32)
                } else {
                    Witt2::from_ideal(field.elem(v as u32))
                };
                m.set(i, c, w);
            }
            if is_lagrangian(&m) {
                out.push(m);
            }
            // odometer
            for s in 0..slots.len() {
                let cap = if slots[s].2 { q * q } else { q };
                counters[s] += 1;
                if counters[s] < cap {
                    continue 'fill;
                }
                counters[s] = 0;
            }
            break;
        }

        // next pivot subset in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                pivots.clear();
                break;
            }
            i -= 1;
            if pivots[i] < cols - (n - i) {
                pivots[i] += 1;
                for j in i + 1..n {
                    pivots[j] = pivots[i] + (j - i);
                }
                break;
            }
        }
        if pivots.is_empty() {
            break;
        }
    }
    out.sort_by_key(|m| m.lex_key());
    out
}

// ---------------------------------------------------------------------------
// group elements

/// [[I, S], [0, I]] for symmetric S.
pub fn sym_upper(s: &RMatrix) -> RMatrix {
    assert_eq!(s, &s.transpose(), "S must be symmetric");
    let n = s.rows;
    let mut g = RMatrix::identity(s.field, 2 * n);
    for i in 0..n {
        for j in 0..n {
            g.set(i, n + j, s.get(i, j));
        }
    }
    g
}

/// [[I, 0], [S, I]] for symmetric S.
pub fn sym_lower(s: &RMatrix) -> RMatrix {
    assert_eq!(s, &s.transpose(), "S must be symmetric");
    let n = s.rows;
    let mut g = RMatrix::identity(s.field, 2 * n);
    for i in 0..n {
        for j in 0..n {
            g.set(n + i, j, s.get(i, j));
        }
    }
    g
}

/// [[A, 0], [0, (A^T)^{-1}]] for invertible A.
pub fn sym_gl(a: &RMatrix) -> RMatrix {
    let n = a.rows;
    let d = a.transpose().inverse().expect("A must be invertible");
    let mut g = RMatrix::zero(a.field, 2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            g.set(i, j, a.get(i, j));
            g.set(n + i, n + j, d.get(i, j));
        }
    }
    g
}

/// The standard form itself as a group element, swapping the two halves.
pub fn sym_j(field: Field, n: usize) -> RMatrix {
    omega_tilde(field, n)
}

pub fn random_symmetric(field: Field, n: usize, rng: &mut impl Rng) -> RMatrix {
    let q = field.q() as u32;
    let mut s = RMatrix::zero(field, n, n);
    for i in 0..n {
        for j in i..n {
            let w = Witt2::of_bits(field, rng.gen_range(0..q), rng.gen_range(0..q));
            s.set(i, j, w);
            s.set(j, i, w);
        }
    }
    s
}

pub fn random_gl(field: Field, n: usize, rng: &mut impl Rng) -> RMatrix {
    let q = field.q() as u32;
    loop {
        let m = RMatrix::from_rows(
            field,
            (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| Witt2::of_bits(field, rng.gen_range(0..q), rng.gen_range(0..q)))
                        .collect()
                })
                .collect(),
        );
        if m.is_invertible() {
            return m;
        }
    }
}

/// A pseudorandom symplectic matrix as a word in the elementary generators.
pub fn random_symplectic(field: Field, n: usize, rng: &mut impl Rng, words: usize) -> RMatrix {
    let mut g = RMatrix::identity(field, 2 * n);
    for _ in 0..words {
        let h = match rng.gen_range(0..4u8) {
            0 => sym_upper(&random_symmetric(field, n, rng)),
            1 => sym_lower(&random_symmetric(field, n, rng)),
            2 => sym_gl(&random_gl(field, n, rng)),
            _ => sym_j(field, n),
        };
        g = g.mul(&h);
    }
    g
}

pub fn random_lagrangian(field: Field, n: usize, rng: &mut impl Rng) -> RMatrix {
    let g = random_symplectic(field, n, rng, 8);
    apply(&standard_lagrangian(field, n), &g)
}

/// Extend a lagrangian basis to a symplectic basis: returns the 2n x 2n
/// symplectic matrix whose first n rows are l.
pub fn symplectic_complete(l: &RMatrix) -> RMatrix {
    let n = l.rows;
    let field = l.field;
    let om = omega_tilde(field, n);
    let lom = l.mul(&om); // n x 2n
    // rows g_j with pair(l_i, g_j) = delta_ij
    let mut g_rows: Vec<Vec<Witt2>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![Witt2::zero(field); n];
        e[j] = Witt2::one(field);
        let x = lom.solve(&e).expect("lagrangian pairs perfectly with R^{2n}");
        g_rows.push(x);
    }
    // correct to make the new rows isotropic
    let mut f_rows = g_rows.clone();
    for j in 0..n {
        for k in 0..j {
            let c = -pair(&om, &g_rows[j], &f_rows[k]);
            let l_k: Vec<Witt2> = l.row(k).to_vec();
            for t in 0..2 * n {
                f_rows[j][t] = f_rows[j][t] + c * l_k[t];
            }
        }
    }
    let h = l.vstack(&RMatrix::from_rows(field, f_rows));
    debug_assert!(is_symplectic(&h));
    h
}

/// Factor an element of the stabilizer of the standard lagrangian as
/// sym_gl(A) * sym_upper(S); returns None if g does not stabilize it.
pub fn p_stabilizer_factor(g: &RMatrix) -> Option<(RMatrix, RMatrix)> {
    let n = g.rows / 2;
    if !is_symplectic(g) {
        return None;
    }
    for i in n..2 * n {
        for j in 0..n {
            if !g.get(i, j).is_zero() {
                return None;
            }
        }
    }
    let mut a = RMatrix::zero(g.field, n, n);
    let mut b = RMatrix::zero(g.field, n, n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, g.get(i, j));
            b.set(i, j, g.get(i, n + j));
        }
    }
    let s = a.inverse()?.mul(&b);
    debug_assert_eq!(s, s.transpose());
    Some((a, s))
}
