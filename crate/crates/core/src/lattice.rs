//! Exact integer and rational linear algebra, and single-cone primitives.
//!
//! Cones live in a lattice `Z^rank`. Their rays are primitive and kept in a
//! canonical order, so two equal cones always compare equal.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::num::{rat, LatticeInt, Scalar};
use crate::{Error, Rational, Result};

// ---------------------------------------------------------------------------
// Integer matrices and normal forms

/// Dense row-major integer matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix<I> {
    rows: usize,
    cols: usize,
    data: Vec<I>,
}

impl<I: LatticeInt> IntMatrix<I> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![I::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, I::one());
        }
        m
    }

    /// Builds from row vectors; all rows must have length `cols`.
    pub fn from_rows(rows: Vec<Vec<I>>, cols: usize) -> Self {
        let r = rows.len();
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix");
            data.extend(row);
        }
        IntMatrix { rows: r, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &I {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: I) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> Vec<I> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn to_rows(&self) -> Vec<Vec<I>> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let v = out.get(r, c).clone() + a.clone() * other.get(k, c).clone();
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + a, r * self.cols + b);
            }
        }
    }

    /// row[dst] += k * row[src]
    fn add_row(&mut self, dst: usize, src: usize, k: &I) {
        for c in 0..self.cols {
            let v = self.get(dst, c).clone() + k.clone() * self.get(src, c).clone();
            self.set(dst, c, v);
        }
    }

    fn add_col(&mut self, dst: usize, src: usize, k: &I) {
        for r in 0..self.rows {
            let v = self.get(r, dst).clone() + k.clone() * self.get(r, src).clone();
            self.set(r, dst, v);
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -self.get(r, c).clone();
            self.set(r, c, v);
        }
    }

    /// Replaces rows (a, b) by (p*a + q*b, r*a + s*b).
    fn combine_rows(&mut self, a: usize, b: usize, coef: [&I; 4]) {
        for c in 0..self.cols {
            let x = self.get(a, c).clone();
            let y = self.get(b, c).clone();
            self.set(a, c, coef[0].clone() * x.clone() + coef[1].clone() * y.clone());
            self.set(b, c, coef[2].clone() * x + coef[3].clone() * y);
        }
    }

    /// Determinant by fraction-free elimination. Square matrices only.
    pub fn determinant(&self) -> I {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return I::one();
        }
        let mut m = self.clone();
        let mut sign = I::one();
        let mut prev = I::one();
        for k in 0..n {
            let Some(p) = (k..n).find(|&r| !m.get(r, k).is_zero()) else {
                return I::zero();
            };
            if p != k {
                m.swap_rows(p, k);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (m.get(i, j).clone() * m.get(k, k).clone()
                        - m.get(i, k).clone() * m.get(k, j).clone())
                        / prev.clone();
                    m.set(i, j, v);
                }
            }
            prev = m.get(k, k).clone();
        }
        sign * m.get(n - 1, n - 1).clone()
    }
}

impl<I: fmt::Display> fmt::Display for IntMatrix<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.data[r * self.cols + c])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Row-style Hermite normal form: `u * input = h`, `u` unimodular, `h` in
/// row echelon form with positive pivots and entries above each pivot reduced
/// into `[0, pivot)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HermiteForm<I> {
    pub h: IntMatrix<I>,
    pub u: IntMatrix<I>,
    pub pivots: Vec<usize>,
}

/// Smith normal form: `u * input * v = d` with `d` diagonal and each invariant
/// factor dividing the next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm<I> {
    pub d: IntMatrix<I>,
    pub u: IntMatrix<I>,
    pub v: IntMatrix<I>,
    pub invariants: Vec<I>,
}

pub fn hermite_form<I: LatticeInt>(a: &IntMatrix<I>) -> HermiteForm<I> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut h = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        // Fold every lower entry of this column into row r via extended gcd.
        for i in r + 1..m {
            if h.get(i, c).is_zero() {
                continue;
            }
            let x = h.get(r, c).clone();
            let y = h.get(i, c).clone();
            let eg = x.extended_gcd(&y);
            let (g, p, q) = (eg.gcd, eg.x, eg.y);
            let s = -(y / g.clone());
            let t = x / g;
            h.combine_rows(r, i, [&p, &q, &s, &t]);
            u.combine_rows(r, i, [&p, &q, &s, &t]);
        }
        if h.get(r, c).is_zero() {
            continue;
        }
        if h.get(r, c).is_negative() {
            h.negate_row(r);
            u.negate_row(r);
        }
        let piv = h.get(r, c).clone();
        for i in 0..r {
            let q = h.get(i, c).div_floor(&piv);
            if !q.is_zero() {
                let k = -q;
                h.add_row(i, r, &k);
                u.add_row(i, r, &k);
            }
        }
        pivots.push(c);
        r += 1;
    }
    HermiteForm { h, u, pivots }
}

pub fn smith_form<I: LatticeInt>(a: &IntMatrix<I>) -> SmithForm<I> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut d = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut v = IntMatrix::identity(n);
    let mut t = 0;
    while t < m.min(n) {
        // Pivot: entry of least absolute value in the trailing block.
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                let e = d.get(i, j);
                if e.is_zero() {
                    continue;
                }
                if best.map_or(true, |(bi, bj)| e.abs() < d.get(bi, bj).abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else {
            break;
        };
        d.swap_rows(t, bi);
        u.swap_rows(t, bi);
        d.swap_cols(t, bj);
        v.swap_cols(t, bj);

        let mut done = true;
        for i in t + 1..m {
            let q = d.get(i, t).div_floor(d.get(t, t));
            if !q.is_zero() {
                let k = -q;
                d.add_row(i, t, &k);
                u.add_row(i, t, &k);
            }
            if !d.get(i, t).is_zero() {
                done = false;
            }
        }
        for j in t + 1..n {
            let q = d.get(t, j).div_floor(d.get(t, t));
            if !q.is_zero() {
                let k = -q;
                d.add_col(j, t, &k);
                v.add_col(j, t, &k);
            }
            if !d.get(t, j).is_zero() {
                done = false;
            }
        }
        if !done {
            continue;
        }
        // Divisibility: fold a non-divisible trailing row into row t.
        let piv = d.get(t, t).clone();
        let bad = (t + 1..m).find(|&i| (t + 1..n).any(|j| !d.get(i, j).is_multiple_of(&piv)));
        if let Some(i) = bad {
            let one = I::one();
            d.add_row(t, i, &one);
            u.add_row(t, i, &one);
            continue;
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
        t += 1;
    }
    let invariants = (0..m.min(n))
        .map(|i| d.get(i, i).clone())
        .filter(|x| !x.is_zero())
        .collect();
    SmithForm { d, u, v, invariants }
}

/// Both canonical forms with their unimodular witnesses.
pub fn hermite_smith_forms<I: LatticeInt>(a: &IntMatrix<I>) -> (HermiteForm<I>, SmithForm<I>) {
    (hermite_form(a), smith_form(a))
}

// ---------------------------------------------------------------------------
// Rational linear algebra

/// Reduces `m` to reduced row echelon form in place; returns pivot columns.
pub fn rref<F: Scalar>(m: &mut Vec<Vec<F>>) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pv = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() / pv.clone();
        }
        let prow = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, p) in row.iter_mut().zip(&prow) {
                    *x = x.clone() - f.clone() * p.clone();
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

fn to_rational_rows(vs: &[LatticeVector]) -> Vec<Vec<Rational>> {
    vs.iter().map(|v| v.0.iter().map(|&x| rat(x)).collect()).collect()
}

/// Rank of a list of integer vectors.
pub fn rank(vs: &[LatticeVector]) -> usize {
    if vs.is_empty() {
        return 0;
    }
    let mut m = to_rational_rows(vs);
    rref(&mut m).len()
}

/// Coefficients `c` with `sum c_i * basis_i = v`, if `v` is in the span.
/// Requires the basis vectors to be linearly independent for uniqueness.
pub fn solve_combination(basis: &[LatticeVector], v: &LatticeVector) -> Option<Vec<Rational>> {
    let k = basis.len();
    let n = v.dim();
    // Columns are basis vectors; augmented with v.
    let mut m: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rational> = basis.iter().map(|b| rat(b.0[i])).collect();
            row.push(rat(v.0[i]));
            row
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.contains(&k) {
        return None;
    }
    let mut out = vec![Rational::zero(); k];
    for (r, &c) in pivots.iter().enumerate() {
        out[c] = m[r][k].clone();
    }
    Some(out)
}

/// Primitive integral basis of the rational null space of the rows.
pub fn nullspace(rows: &[LatticeVector], dim: usize) -> Vec<LatticeVector> {
    let mut m = to_rational_rows(rows);
    let pivots = if m.is_empty() { Vec::new() } else { rref(&mut m) };
    let free: Vec<usize> = (0..dim).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); dim];
            v[f] = Rational::one();
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = -m[r][f].clone();
            }
            integralize(&v)
        })
        .collect()
}

/// Scales a rational vector to a primitive integer vector with the same direction.
pub fn integralize(v: &[Rational]) -> LatticeVector {
    let mut l = BigInt::one();
    for x in v {
        l = l.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Rational::from_integer(l.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return LatticeVector(vec![0; v.len()]);
    }
    LatticeVector(ints.iter().map(|x| crate::num::big_to_i64(&(x / &g))).collect())
}

// ---------------------------------------------------------------------------
// Vectors and functionals

/// A point of the lattice `N`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct LatticeVector(pub Vec<i64>);

/// An element of the dual lattice `M`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Functional(pub Vec<i64>);

impl LatticeVector {
    pub fn new(coords: Vec<i64>) -> Self {
        LatticeVector(coords)
    }

    pub fn zero(dim: usize) -> Self {
        LatticeVector(vec![0; dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![0; dim];
        v[i] = 1;
        LatticeVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn content(&self) -> i64 {
        self.0.iter().fold(0i64, |g, &x| g.gcd(&x))
    }

    pub fn is_primitive(&self) -> bool {
        self.content() == 1
    }

    pub fn primitive(&self) -> LatticeVector {
        let g = self.content();
        if g == 0 {
            return self.clone();
        }
        LatticeVector(self.0.iter().map(|x| x / g).collect())
    }

    pub fn add(&self, o: &LatticeVector) -> LatticeVector {
        assert_eq!(self.dim(), o.dim());
        LatticeVector(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &LatticeVector) -> LatticeVector {
        assert_eq!(self.dim(), o.dim());
        LatticeVector(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, k: i64) -> LatticeVector {
        LatticeVector(self.0.iter().map(|a| a * k).collect())
    }

    pub fn norm2(&self) -> i64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().map(|x| x.abs()).sum()
    }
}

impl Functional {
    pub fn new(coeffs: Vec<i64>) -> Self {
        Functional(coeffs)
    }

    pub fn zero(dim: usize) -> Self {
        Functional(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn pair(&self, v: &LatticeVector) -> i64 {
        assert_eq!(self.dim(), v.dim(), "pairing dimension mismatch");
        self.0.iter().zip(&v.0).map(|(a, b)| a * b).sum()
    }

    pub fn pair_rational(&self, v: &[Rational]) -> Rational {
        self.0.iter().zip(v).fold(Rational::zero(), |acc, (a, b)| acc + rat(*a) * b)
    }

    pub fn add(&self, o: &Functional) -> Functional {
        Functional(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &Functional) -> Functional {
        Functional(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, k: i64) -> Functional {
        Functional(self.0.iter().map(|a| a * k).collect())
    }

    pub fn as_vector(&self) -> LatticeVector {
        LatticeVector(self.0.clone())
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.as_vector().fmt(f)
    }
}

/// Integer matrix with the given vectors as columns.
pub fn columns_matrix(vs: &[LatticeVector], dim: usize) -> IntMatrix<i64> {
    let mut m = IntMatrix::zeros(dim, vs.len());
    for (j, v) in vs.iter().enumerate() {
        for i in 0..dim {
            m.set(i, j, v.0[i]);
        }
    }
    m
}

/// Applies an integer matrix (rows x cols) to a vector of length cols.
pub fn apply(m: &IntMatrix<i64>, v: &LatticeVector) -> LatticeVector {
    assert_eq!(m.ncols(), v.dim(), "matrix does not act on this vector");
    LatticeVector(
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| m.get(r, c) * v.0[c]).sum())
            .collect(),
    )
}

/// Pulls a functional back along `m`: `(m^T l)(v) = l(m v)`.
pub fn pull_functional(m: &IntMatrix<i64>, l: &Functional) -> Functional {
    assert_eq!(m.nrows(), l.dim());
    Functional(
        (0..m.ncols())
            .map(|c| (0..m.nrows()).map(|r| m.get(r, c) * l.0[r]).sum())
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Cones

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strictness {
    Boundary,
    Interior,
}

/// A strongly convex rational polyhedral cone in `Z^rank` given by its
/// primitive extremal rays in decreasing lexicographic order, so the
/// standard orthant lists `e_1, e_2, ...` in that order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Cone {
    rank: usize,
    rays: Vec<LatticeVector>,
}

impl Cone {
    /// Validates and canonicalizes. Rays are reduced to primitive vectors.
    pub fn new(rank: usize, rays: Vec<LatticeVector>) -> Result<Cone> {
        let mut prim = Vec::with_capacity(rays.len());
        for r in rays {
            if r.dim() != rank {
                return Err(Error::DimensionMismatch { expected: rank, found: r.dim() });
            }
            if r.is_zero() {
                return Err(Error::InvalidCone("zero vector listed as a ray".into()));
            }
            prim.push(r.primitive());
        }
        canonical_order(&mut prim);
        let cone = Cone { rank, rays: prim };
        if rank_of(&cone.rays) == cone.rays.len() {
            return Ok(cone);
        }
        // Non-simplicial: strong convexity and extremality by LP.
        if !strictly_positive_functional_exists(&cone.rays) {
            return Err(Error::InvalidCone("cone contains a line".into()));
        }
        for (i, r) in cone.rays.iter().enumerate() {
            let others: Vec<LatticeVector> =
                cone.rays.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v.clone()).collect();
            if in_cone_lp(&others, r, Strictness::Boundary) {
                return Err(Error::InvalidCone(format!("ray {r} is not extremal")));
            }
        }
        Ok(cone)
    }

    /// Cone generated by arbitrary vectors: zero vectors and generators
    /// in the cone of the others are dropped.
    pub fn hull(rank: usize, gens: Vec<LatticeVector>) -> Result<Cone> {
        let mut gs: Vec<LatticeVector> = gens.into_iter().filter(|g| !g.is_zero()).map(|g| g.primitive()).collect();
        canonical_order(&mut gs);
        let mut i = 0;
        while i < gs.len() {
            let others: Vec<LatticeVector> =
                gs.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v.clone()).collect();
            if !others.is_empty() && in_cone_lp(&others, &gs[i], Strictness::Boundary) {
                gs.remove(i);
            } else {
                i += 1;
            }
        }
        Cone::new(rank, gs)
    }

    /// Simplicial cone from linearly independent vectors.
    pub fn simplicial(rank: usize, rays: Vec<LatticeVector>) -> Result<Cone> {
        let c = Cone::new(rank, rays)?;
        if !c.is_simplicial() {
            return Err(Error::InvalidCone("rays are not linearly independent".into()));
        }
        Ok(c)
    }

    pub fn zero(rank: usize) -> Cone {
        Cone { rank, rays: Vec::new() }
    }

    /// The positive orthant of `Z^k`.
    pub fn orthant(k: usize) -> Cone {
        let rays: Vec<LatticeVector> = (0..k).map(|i| LatticeVector::unit(k, i)).collect();
        Cone { rank: k, rays }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rays(&self) -> &[LatticeVector] {
        &self.rays
    }

    pub fn dim(&self) -> usize {
        rank_of(&self.rays)
    }

    pub fn is_simplicial(&self) -> bool {
        self.dim() == self.rays.len()
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.dim() == self.rank
    }

    pub fn has_ray(&self, r: &LatticeVector) -> bool {
        self.rays.binary_search_by(|x| r.cmp(x)).is_ok()
    }

    /// Cone spanned by a subset of this cone's rays (no validation beyond sorting).
    pub fn sub_cone(&self, rays: Vec<LatticeVector>) -> Cone {
        let mut rays = rays;
        canonical_order(&mut rays);
        Cone { rank: self.rank, rays }
    }

    /// Smoothness via the Smith form of the ray matrix.
    pub fn is_smooth(&self) -> bool {
        is_smooth(self)
    }

    pub fn faces(&self) -> Vec<Cone> {
        faces(self)
    }

    pub fn contains(&self, v: &LatticeVector, strictness: Strictness) -> bool {
        contains(self, v, strictness)
    }

    /// Whether every ray of `other` lies in this cone.
    pub fn contains_cone(&self, other: &Cone) -> bool {
        other.rays.iter().all(|r| self.contains(r, Strictness::Boundary))
    }

    pub fn is_face_of(&self, other: &Cone) -> bool {
        self.rays.iter().all(|r| other.has_ray(r)) && other.faces().contains(self)
    }

    /// Inward facet normals of a full-dimensional cone, primitive and sorted.
    pub fn facet_normals(&self) -> Vec<Functional> {
        assert!(self.is_full_dimensional(), "facet normals need a full-dimensional cone");
        let n = self.rank;
        if n == 0 {
            return Vec::new();
        }
        let mut out: Vec<Functional> = Vec::new();
        for subset in subsets_of_size(self.rays.len(), n - 1) {
            let sub: Vec<LatticeVector> = subset.iter().map(|&i| self.rays[i].clone()).collect();
            if rank_of(&sub) != n - 1 {
                continue;
            }
            let ker = nullspace(&sub, n);
            let mut normal = Functional(ker[0].0.clone());
            let signs: Vec<i64> = self.rays.iter().map(|r| normal.pair(r).signum()).collect();
            if signs.iter().any(|&s| s < 0) {
                if signs.iter().any(|&s| s > 0) {
                    continue;
                }
                normal = normal.scale(-1);
            }
            out.push(normal);
        }
        out.sort();
        out.dedup();
        out
    }

    /// Nonzero lattice points `sum l_i r_i` with every `l_i` in `[0, 1)`.
    /// Empty exactly when the (simplicial) cone is smooth.
    pub fn parallelepiped_points(&self) -> Vec<LatticeVector> {
        assert!(self.is_simplicial(), "parallelepiped of a non-simplicial cone");
        let k = self.rays.len();
        if k == 0 {
            return Vec::new();
        }
        // Basis of the saturated lattice Z^n ∩ span from the Smith form.
        let a = IntMatrix::from_rows(self.rays.iter().map(|r| r.0.clone()).collect(), self.rank);
        let snf = smith_form(&a);
        let vinv = invert_unimodular(&snf.v);
        let basis: Vec<LatticeVector> = (0..k).map(|i| LatticeVector(vinv.row(i))).collect();
        // Coordinates of each ray in that basis.
        let coords: Vec<Vec<i64>> = self
            .rays
            .iter()
            .map(|r| {
                solve_combination(&basis, r)
                    .expect("ray outside its own span")
                    .iter()
                    .map(crate::num::rat_to_i64)
                    .collect()
            })
            .collect();
        let lo: Vec<i64> = (0..k).map(|j| coords.iter().map(|c| c[j].min(0)).sum()).collect();
        let hi: Vec<i64> = (0..k).map(|j| coords.iter().map(|c| c[j].max(0)).sum()).collect();
        let coord_basis: Vec<LatticeVector> = coords.iter().map(|c| LatticeVector(c.clone())).collect();
        let mut out = Vec::new();
        let mut y = lo.clone();
        loop {
            let yv = LatticeVector(y.clone());
            if !yv.is_zero() {
                if let Some(l) = solve_combination(&coord_basis, &yv) {
                    if l.iter().all(|x| !x.is_negative() && *x < Rational::one()) {
                        let p = basis.iter().zip(&y).fold(LatticeVector::zero(self.rank), |acc, (b, &c)| {
                            acc.add(&b.scale(c))
                        });
                        out.push(p);
                    }
                }
            }
            // odometer
            let mut i = 0;
            loop {
                if i == k {
                    out.sort_by(|a, b| a.norm2().cmp(&b.norm2()).then(a.cmp(b)));
                    return out;
                }
                if y[i] < hi[i] {
                    y[i] += 1;
                    break;
                }
                y[i] = lo[i];
                i += 1;
            }
        }
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, r) in self.rays.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, ">")
    }
}

fn canonical_order(rays: &mut Vec<LatticeVector>) {
    rays.sort_by(|a, b| b.cmp(a));
    rays.dedup();
}

fn rank_of(vs: &[LatticeVector]) -> usize {
    rank(vs)
}

pub(crate) fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Inverse of a unimodular integer matrix.
pub fn invert_unimodular(m: &IntMatrix<i64>) -> IntMatrix<i64> {
    let n = m.nrows();
    let mut aug: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rational> = (0..n).map(|j| rat(*m.get(i, j))).collect();
            row.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            row
        })
        .collect();
    rref(&mut aug);
    let rows = aug
        .iter()
        .map(|row| row[n..].iter().map(crate::num::rat_to_i64).collect())
        .collect();
    IntMatrix::from_rows(rows, n)
}

fn strictly_positive_functional_exists(rays: &[LatticeVector]) -> bool {
    let n = rays[0].dim();
    let mut lp = LinearProgram::<Rational>::new(n, Sense::Minimize);
    for j in 0..n {
        lp.set_free(j);
    }
    for r in rays {
        lp.add(r.0.iter().map(|&x| rat(x)).collect(), Relation::Ge, rat(1));
    }
    lp.solve().is_feasible()
}

fn in_cone_lp(rays: &[LatticeVector], v: &LatticeVector, strictness: Strictness) -> bool {
    let k = rays.len();
    if k == 0 {
        return v.is_zero();
    }
    // Variables: lambda_1..lambda_k, t. Maximize t with lambda_i >= t, t <= 1.
    let mut lp = LinearProgram::<Rational>::new(k + 1, Sense::Maximize);
    lp.set_free(k);
    let mut obj = vec![Rational::zero(); k + 1];
    obj[k] = Rational::one();
    lp.set_objective(obj);
    for i in 0..v.dim() {
        let mut row: Vec<Rational> = rays.iter().map(|r| rat(r.0[i])).collect();
        row.push(Rational::zero());
        lp.add(row, Relation::Eq, rat(v.0[i]));
    }
    for i in 0..k {
        let mut row = vec![Rational::zero(); k + 1];
        row[i] = Rational::one();
        row[k] = -Rational::one();
        lp.add(row, Relation::Ge, Rational::zero());
    }
    let mut row = vec![Rational::zero(); k + 1];
    row[k] = Rational::one();
    lp.add(row, Relation::Le, Rational::one());
    match lp.solve() {
        LpOutcome::Optimal { value, .. } => match strictness {
            Strictness::Boundary => true,
            Strictness::Interior => value.is_positive(),
        },
        _ => false,
    }
}

/// Smoothness: the rays extend to a basis of `Z^rank`, i.e. every invariant
/// factor of the ray matrix equals one and the rays are independent.
pub fn is_smooth(cone: &Cone) -> bool {
    let k = cone.rays.len();
    if k == 0 {
        return true;
    }
    let a = IntMatrix::from_rows(cone.rays.iter().map(|r| r.0.clone()).collect(), cone.rank);
    let snf = smith_form(&a);
    snf.invariants.len() == k && snf.invariants.iter().all(|d| *d == 1)
}

/// Second smoothness test: rays independent and the gcd of all maximal minors is one.
pub fn is_smooth_by_minors(cone: &Cone) -> bool {
    let k = cone.rays.len();
    if k == 0 {
        return true;
    }
    let mut g = BigInt::zero();
    for cols in subsets_of_size(cone.rank, k) {
        let rows: Vec<Vec<BigInt>> = cone
            .rays
            .iter()
            .map(|r| cols.iter().map(|&c| BigInt::from(r.0[c])).collect())
            .collect();
        g = g.gcd(&IntMatrix::from_rows(rows, k).determinant());
    }
    g.is_one()
}

/// All faces, from the zero cone to the cone itself, sorted by dimension and
/// then by ray list.
pub fn faces(cone: &Cone) -> Vec<Cone> {
    let k = cone.rays.len();
    let simplicial = cone.is_simplicial();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << k) {
        let chosen: Vec<LatticeVector> =
            (0..k).filter(|i| mask & (1 << i) != 0).map(|i| cone.rays[i].clone()).collect();
        if simplicial || is_face_subset(cone, mask) {
            out.push(Cone { rank: cone.rank, rays: chosen });
        }
    }
    out.sort_by(|a, b| a.dim().cmp(&b.dim()).then_with(|| a.rays.cmp(&b.rays)));
    out
}

/// LP test: some functional vanishes exactly on the chosen rays and is at
/// least one on the others.
fn is_face_subset(cone: &Cone, mask: u64) -> bool {
    let n = cone.rank;
    let mut lp = LinearProgram::<Rational>::new(n, Sense::Minimize);
    for j in 0..n {
        lp.set_free(j);
    }
    for (i, r) in cone.rays.iter().enumerate() {
        let row: Vec<Rational> = r.0.iter().map(|&x| rat(x)).collect();
        if mask & (1 << i) != 0 {
            lp.add(row, Relation::Eq, Rational::zero());
        } else {
            lp.add(row, Relation::Ge, Rational::one());
        }
    }
    lp.solve().is_feasible()
}

/// Sum of the primitive ray generators, made primitive.
pub fn barycenter(cone: &Cone) -> Result<LatticeVector> {
    if cone.rays.is_empty() {
        return Err(Error::NoBarycenter);
    }
    let s = cone.rays.iter().fold(LatticeVector::zero(cone.rank), |acc, r| acc.add(r));
    Ok(s.primitive())
}

/// Exact membership in the cone or in its relative interior.
pub fn contains(cone: &Cone, v: &LatticeVector, strictness: Strictness) -> bool {
    assert_eq!(v.dim(), cone.rank, "membership test dimension mismatch");
    if cone.rays.is_empty() {
        return v.is_zero();
    }
    if cone.is_simplicial() {
        return match solve_combination(&cone.rays, v) {
            None => false,
            Some(c) => match strictness {
                Strictness::Boundary => c.iter().all(|x| !x.is_negative()),
                Strictness::Interior => c.iter().all(|x| x.is_positive()),
            },
        };
    }
    in_cone_lp(&cone.rays, v, strictness)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[i64]) -> LatticeVector {
        LatticeVector(c.to_vec())
    }

    fn m(rows: &[&[i64]]) -> IntMatrix<i64> {
        let cols = rows.first().map_or(0, |r| r.len());
        IntMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect(), cols)
    }

    #[test]
    fn identity_forms() {
        let a = m(&[&[1, 0], &[0, 1]]);
        let (h, s) = hermite_smith_forms(&a);
        assert_eq!(h.h, a);
        assert_eq!(h.u, IntMatrix::identity(2));
        assert_eq!(s.d, a);
        assert_eq!(s.invariants, vec![1, 1]);
        assert_eq!(s.u, IntMatrix::identity(2));
        assert_eq!(s.v, IntMatrix::identity(2));
    }

    #[test]
    fn smith_of_diag_2_3() {
        let a = m(&[&[2, 0], &[0, 3]]);
        let s = smith_form(&a);
        assert_eq!(s.invariants, vec![1, 6]);
        assert_eq!(s.u.mul(&a).mul(&s.v), s.d);
    }

    #[test]
    fn hermite_and_smith_of_upper_triangular() {
        let a = m(&[&[1, 1], &[0, 2]]);
        let (h, s) = hermite_smith_forms(&a);
        assert_eq!(h.h, a);
        assert_eq!(h.u.mul(&a), h.h);
        assert_eq!(s.invariants, vec![1, 2]);
    }

    #[test]
    fn empty_matrix_forms() {
        let a: IntMatrix<i64> = IntMatrix::zeros(0, 0);
        let (h, s) = hermite_smith_forms(&a);
        assert_eq!(h.h.nrows(), 0);
        assert!(s.invariants.is_empty());
    }

    #[test]
    fn smith_generic_over_bigint() {
        let a = IntMatrix::from_rows(
            vec![
                vec![BigInt::from(4), BigInt::from(6)],
                vec![BigInt::from(6), BigInt::from(4)],
            ],
            2,
        );
        let s = smith_form(&a);
        assert_eq!(s.invariants, vec![BigInt::from(2), BigInt::from(10)]);
        assert_eq!(s.u.mul(&a).mul(&s.v), s.d);
    }

    #[test]
    fn smoothness_examples() {
        let std = Cone::new(2, vec![v(&[1, 0]), v(&[0, 1])]).unwrap();
        assert!(std.is_smooth());
        let sing = Cone::new(2, vec![v(&[1, 0]), v(&[1, 2])]).unwrap();
        assert!(!sing.is_smooth());
        assert!(Cone::zero(3).is_smooth());
    }

    #[test]
    fn face_lists() {
        let c = Cone::new(2, vec![v(&[1, 0]), v(&[0, 1])]).unwrap();
        let f = c.faces();
        assert_eq!(f.len(), 4);
        assert_eq!(f[0], Cone::zero(2));
        assert_eq!(f[3], c);
        let ray = Cone::new(2, vec![v(&[1, 0])]).unwrap();
        assert_eq!(ray.faces(), vec![Cone::zero(2), ray.clone()]);
        assert_eq!(Cone::orthant(3).faces().len(), 8);
    }

    #[test]
    fn non_simplicial_faces_by_lp() {
        // Cone over a square: 4 rays, 4 facets, 4 edges.
        let c = Cone::new(3, vec![v(&[1, 0, 1]), v(&[0, 1, 1]), v(&[-1, 0, 1]), v(&[0, -1, 1])]).unwrap();
        assert!(!c.is_simplicial());
        let f = c.faces();
        assert_eq!(f.len(), 1 + 4 + 4 + 1);
        assert_eq!(c.facet_normals().len(), 4);
        assert!(Cone::new(2, vec![v(&[1, 0]), v(&[-1, 0])]).is_err());
        assert!(Cone::new(2, vec![v(&[1, 0]), v(&[0, 1]), v(&[1, 1])]).is_err());
    }

    #[test]
    fn barycenters() {
        let c = Cone::new(2, vec![v(&[1, 0]), v(&[0, 1])]).unwrap();
        assert_eq!(barycenter(&c).unwrap(), v(&[1, 1]));
        let r = Cone::new(2, vec![v(&[1, 0])]).unwrap();
        assert_eq!(barycenter(&r).unwrap(), v(&[1, 0]));
        let s = Cone::new(2, vec![v(&[1, 0]), v(&[1, 2])]).unwrap();
        assert_eq!(barycenter(&s).unwrap(), v(&[1, 1]));
        assert!(matches!(barycenter(&Cone::zero(2)), Err(Error::NoBarycenter)));
    }

    #[test]
    fn membership() {
        let c = Cone::new(2, vec![v(&[1, 0]), v(&[0, 1])]).unwrap();
        assert!(c.contains(&v(&[2, 3]), Strictness::Interior));
        assert!(!c.contains(&v(&[1, 0]), Strictness::Interior));
        assert!(c.contains(&v(&[1, 0]), Strictness::Boundary));
        let s = Cone::new(2, vec![v(&[1, 0]), v(&[1, 2])]).unwrap();
        assert!(s.contains(&v(&[1, 1]), Strictness::Interior));
        let sq = Cone::new(3, vec![v(&[1, 0, 1]), v(&[0, 1, 1]), v(&[-1, 0, 1]), v(&[0, -1, 1])]).unwrap();
        assert!(sq.contains(&v(&[0, 0, 1]), Strictness::Interior));
        assert!(!sq.contains(&v(&[1, 1, 1]), Strictness::Boundary));
        assert!(sq.contains(&v(&[1, 0, 2]), Strictness::Boundary));
        assert!(!sq.contains(&v(&[1, 0, 1]), Strictness::Interior));
    }

    #[test]
    fn parallelepiped() {
        let s = Cone::new(2, vec![v(&[1, 0]), v(&[1, 2])]).unwrap();
        assert_eq!(s.parallelepiped_points(), vec![v(&[1, 1])]);
        assert!(Cone::orthant(3).parallelepiped_points().is_empty());
        // Lower-dimensional cone in Z^3 of index 2.
        let t = Cone::new(3, vec![v(&[1, 0, 0]), v(&[1, 2, 2])]).unwrap();
        assert_eq!(t.parallelepiped_points(), vec![v(&[1, 1, 1])]);
    }

    #[test]
    fn determinant_and_nullspace() {
        let a = m(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        assert_eq!(a.determinant(), 18);
        let ker = nullspace(&[v(&[1, 1, 0]), v(&[0, 1, 1])], 3);
        assert_eq!(ker.len(), 1);
        assert_eq!(ker[0], v(&[1, -1, 1]));
    }
}
