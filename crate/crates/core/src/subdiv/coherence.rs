//! Projectivity certificates by exact linear programming.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{clear_denominators, interpolate, Fan, Subdivision};
use crate::complex::{ConeId, GeneralizedConeComplex, PLDatum};
use crate::lattice::{solve_combination, Cone, Functional, LatticeVector};
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::num::rat;
use crate::{Error, Rational, Result};

/// Bound on the blowup multiplicities found by [`compose_blowups`].
pub const MAX_WEIGHT: i64 = 1_000_000;

/// One integral functional per maximal cone of the fine subdivision, by base
/// cone. The functionals glue to a continuous function that is a strict
/// minimum of its pieces inside each cone of the coarse subdivision.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoherenceCertificate {
    pub functionals: Vec<Vec<Functional>>,
}

impl CoherenceCertificate {
    /// The conewise minimum on the base. Meaningful for absolute certificates.
    pub fn to_pl(&self, base: &GeneralizedConeComplex) -> Result<PLDatum> {
        PLDatum::new(base, self.functionals.clone())
    }

    /// Value at a point of base cone `id`.
    pub fn eval(&self, fine: &Subdivision, id: ConeId, v: &LatticeVector) -> i64 {
        let fan = fine.piece(id);
        let k = fan
            .cones()
            .iter()
            .position(|c| c.contains(v, crate::lattice::Strictness::Boundary))
            .expect("point outside the base cone");
        self.functionals[id][k].pair(v)
    }

    pub fn scale(&self, k: i64) -> CoherenceCertificate {
        CoherenceCertificate {
            functionals: self.functionals.iter().map(|fs| fs.iter().map(|f| f.scale(k)).collect()).collect(),
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Two maximal cones of a fan sharing a facet: `(left, right, left-only ray, right-only ray)`.
pub(crate) fn interior_walls(fan: &Fan) -> Vec<(usize, usize, LatticeVector, LatticeVector)> {
    let cones = fan.cones();
    let mut out = Vec::new();
    for (a, ca) in cones.iter().enumerate() {
        for (b, cb) in cones.iter().enumerate().skip(a + 1) {
            let shared = ca.rays().iter().filter(|r| cb.has_ray(r)).count();
            if ca.rays().len() == cb.rays().len() && shared + 1 == ca.rays().len() {
                let ra = ca.rays().iter().find(|r| !cb.has_ray(r)).unwrap().clone();
                let rb = cb.rays().iter().find(|r| !ca.has_ray(r)).unwrap().clone();
                out.push((a, b, ra, rb));
            }
        }
    }
    out
}

/// Index of a cone of `coarse` containing `c`.
fn coarse_cell(coarse: &Fan, c: &Cone) -> Option<usize> {
    coarse.cones().iter().position(|d| d.contains_cone(c))
}

/// Certificate that `fine` is a projective subdivision of `coarse` (both over
/// the same base). The unknowns are the values at ray classes; coarse rays
/// are pinned to zero when every coarse piece is simplicial. Returns `None`
/// when no certificate exists.
pub fn certify_relative(coarse: &Subdivision, fine: &Subdivision) -> Result<Option<CoherenceCertificate>> {
    let base = fine.base();
    if coarse.base() != base {
        return Err(Error::Malformed("subdivisions have different bases".into()));
    }
    if !fine.refines(coarse) {
        return Err(Error::Malformed("fine subdivision does not refine the coarse one".into()));
    }
    if let Some(bad) = fine.pieces().iter().flat_map(|f| f.cones().iter()).find(|c| !c.is_simplicial()) {
        return Err(Error::Malformed(format!("fine cone {bad} is not simplicial")));
    }
    // Ray classes.
    let mut slots: Vec<(ConeId, LatticeVector)> = Vec::new();
    let mut slot_of: HashMap<(ConeId, LatticeVector), usize> = HashMap::new();
    for (i, fan) in fine.pieces().iter().enumerate() {
        for r in fan.rays() {
            slot_of.insert((i, r.clone()), slots.len());
            slots.push((i, r));
        }
    }
    let mut uf = UnionFind::new(slots.len());
    for nu in base.generators() {
        for r in fine.piece(nu.source).rays() {
            let img = crate::lattice::apply(&nu.matrix, &r);
            let a = slot_of[&(nu.source, r)];
            let b = *slot_of
                .get(&(nu.target, img.clone()))
                .ok_or_else(|| Error::Malformed(format!("ray {img} missing from fan on cone {}", nu.target)))?;
            uf.union(a, b);
        }
    }
    let pin = coarse.pieces().iter().all(Fan::is_simplicial);
    let mut pinned = vec![false; slots.len()];
    if pin {
        for (s, (i, r)) in slots.iter().enumerate() {
            if coarse.piece(*i).rays().contains(r) {
                let root = uf.find(s);
                pinned[root] = true;
            }
        }
    }
    let mut var_of: HashMap<usize, usize> = HashMap::new();
    for s in 0..slots.len() {
        let root = uf.find(s);
        if !pinned[root] && !var_of.contains_key(&root) {
            let next = var_of.len();
            var_of.insert(root, next);
        }
    }
    let nvars = var_of.len();
    // Linear form in the unknowns for the value at a ray.
    let mut value_of = |i: ConeId, r: &LatticeVector| -> Option<usize> {
        let root = uf.find(slot_of[&(i, r.clone())]);
        var_of.get(&root).copied()
    };
    // Wall constraints: sum coeff * g >= margin.
    let mut walls: Vec<Vec<Rational>> = Vec::new();
    for (j, fan) in fine.pieces().iter().enumerate() {
        let cpiece = coarse.piece(j);
        for (a, b, ra, rb) in interior_walls(fan) {
            let (ca, cb) = (&fan.cones()[a], &fan.cones()[b]);
            if coarse_cell(cpiece, ca) != coarse_cell(cpiece, cb) || coarse_cell(cpiece, ca).is_none() {
                continue;
            }
            for (from, other_ray) in [(ca, &rb), (cb, &ra)] {
                let lambda = solve_combination(from.rays(), other_ray).expect("full-dimensional simplicial cone");
                let mut row = vec![Rational::zero(); nvars];
                for (r, l) in from.rays().iter().zip(&lambda) {
                    if let Some(k) = value_of(j, r) {
                        row[k] += l.clone();
                    }
                }
                if let Some(k) = value_of(j, other_ray) {
                    row[k] -= Rational::one();
                }
                walls.push(row);
            }
        }
    }
    let values: Vec<Rational> = if walls.is_empty() {
        vec![Rational::zero(); nvars]
    } else {
        // Maximize the margin on its own first.
        let mut lp = LinearProgram::<Rational>::new(nvars + 1, Sense::Maximize);
        let mut obj = vec![Rational::zero(); nvars + 1];
        obj[nvars] = Rational::one();
        lp.set_objective(obj);
        for w in &walls {
            let mut row = w.clone();
            row.push(-Rational::one());
            lp.add(row, Relation::Ge, Rational::zero());
        }
        let mut cap = vec![Rational::zero(); nvars + 1];
        cap[nvars] = Rational::one();
        lp.add(cap, Relation::Le, Rational::one());
        match lp.solve() {
            LpOutcome::Optimal { value, .. } if value.is_positive() => {}
            _ => return Ok(None),
        }
        let mut lp = LinearProgram::<Rational>::new(nvars, Sense::Minimize);
        lp.set_objective(vec![Rational::one(); nvars]);
        for w in &walls {
            lp.add(w.clone(), Relation::Ge, Rational::one());
        }
        match lp.solve() {
            LpOutcome::Optimal { x, .. } => x,
            _ => return Ok(None),
        }
    };
    let mut rational: Vec<Vec<Rational>> = Vec::new();
    let mut shape: Vec<usize> = Vec::new();
    for (j, fan) in fine.pieces().iter().enumerate() {
        shape.push(fan.cones().len());
        for c in fan.cones() {
            let vals: Vec<Rational> =
                c.rays().iter().map(|r| value_of(j, r).map_or(Rational::zero(), |k| values[k].clone())).collect();
            rational.push(interpolate(c, &vals));
        }
    }
    let (ints, _) = clear_denominators(&rational);
    let mut it = ints.into_iter();
    let functionals = shape.iter().map(|&n| it.by_ref().take(n).collect()).collect();
    Ok(Some(CoherenceCertificate { functionals }))
}

/// Certificate that the subdivision is projective over its base.
pub fn certify_coherence(sub: &Subdivision) -> Result<Option<CoherenceCertificate>> {
    certify_relative(&Subdivision::trivial(sub.base()), sub)
}

/// Output of [`compose_blowups`].
#[derive(Clone, Debug)]
pub struct ComposedBlowup {
    pub weights: Vec<i64>,
    pub datum: PLDatum,
    pub certificate: CoherenceCertificate,
}

/// Combines a chain of relative certificates into a single one over the
/// base, `sum N_k f_k`, with positive integer weights minimizing `sum N_k`.
/// `stages[k]` refines `stages[k-1]`; `certs[k]` certifies it over its
/// predecessor (the trivial subdivision for `k = 0`).
pub fn compose_blowups(stages: &[Subdivision], certs: &[CoherenceCertificate]) -> Result<ComposedBlowup> {
    if stages.is_empty() || stages.len() != certs.len() {
        return Err(Error::Malformed("chain needs one certificate per stage".into()));
    }
    let last = stages.last().unwrap();
    let base = last.base();
    let m = stages.len();
    // Per stage: value at a point and the functional of the stage cone containing a cone.
    let piece_functional = |k: usize, j: ConeId, c: &Cone| -> &Functional {
        let idx = stages[k].piece(j).cones().iter().position(|d| d.contains_cone(c)).expect("chain does not refine");
        &certs[k].functionals[j][idx]
    };
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for (j, fan) in last.pieces().iter().enumerate() {
        for (a, b, ra, rb) in interior_walls(fan) {
            let (ca, cb) = (&fan.cones()[a], &fan.cones()[b]);
            for (from, to, other_ray) in [(ca, cb, &rb), (cb, ca, &ra)] {
                let row: Vec<Rational> = (0..m)
                    .map(|k| rat(piece_functional(k, j, from).pair(other_ray) - piece_functional(k, j, to).pair(other_ray)))
                    .collect();
                rows.push(row);
            }
        }
    }
    let weights: Vec<i64> = if rows.is_empty() {
        vec![1; m]
    } else {
        let mut lp = LinearProgram::<Rational>::new(m, Sense::Minimize);
        lp.set_objective(vec![Rational::one(); m]);
        for k in 0..m {
            let mut row = vec![Rational::zero(); m];
            row[k] = Rational::one();
            lp.add(row, Relation::Ge, Rational::one());
        }
        for r in &rows {
            lp.add(r.clone(), Relation::Ge, Rational::one());
        }
        let x = match lp.solve() {
            LpOutcome::Optimal { x, .. } => x,
            _ => return Err(Error::Infeasible("no positive weights make the composite projective".into())),
        };
        let mut l = BigInt::one();
        for v in &x {
            l = num_integer::Integer::lcm(&l, v.denom());
        }
        let scaled: Vec<BigInt> = x.iter().map(|v| (v * Rational::from_integer(l.clone())).to_integer()).collect();
        let mut out = Vec::with_capacity(m);
        for s in scaled {
            match s.to_i64() {
                Some(w) if w <= MAX_WEIGHT => out.push(w),
                _ => return Err(Error::BoundExceeded(format!("blowup weight {s} exceeds {MAX_WEIGHT}"))),
            }
        }
        out
    };
    let functionals: Vec<Vec<Functional>> = last
        .pieces()
        .iter()
        .enumerate()
        .map(|(j, fan)| {
            fan.cones()
                .iter()
                .map(|c| {
                    (0..m).fold(Functional::zero(c.rank()), |acc, k| acc.add(&piece_functional(k, j, c).scale(weights[k])))
                })
                .collect()
        })
        .collect();
    let certificate = CoherenceCertificate { functionals };
    let datum = certificate.to_pl(base)?;
    Ok(ComposedBlowup { weights, datum, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subdiv::{star_at, Center};

    fn v(c: &[i64]) -> LatticeVector {
        LatticeVector(c.to_vec())
    }

    fn quadrant() -> (GeneralizedConeComplex, ConeId) {
        let (cx, _, _) = GeneralizedConeComplex::from_embedded(2, &[Cone::orthant(2)]).unwrap();
        let top = cx.len() - 1;
        (cx, top)
    }

    #[test]
    fn star_is_certified_by_min() {
        let (cx, top) = quadrant();
        let s = star_at(&Subdivision::trivial(&cx), &[Center::of_point(&cx, top, v(&[1, 1]))], true).unwrap();
        let cert = certify_coherence(&s).unwrap().unwrap();
        let f = cert.to_pl(&cx).unwrap();
        assert_eq!(f.on(top), &[Functional(vec![0, 1]), Functional(vec![1, 0])]);
    }

    #[test]
    fn trivial_subdivision_gets_zero() {
        let (cx, top) = quadrant();
        let cert = certify_coherence(&Subdivision::trivial(&cx)).unwrap().unwrap();
        assert_eq!(cert.functionals[top], vec![Functional(vec![0, 0])]);
    }

    #[test]
    fn two_stars_compose_with_weights_two_and_one() {
        let (cx, top) = quadrant();
        let s1 = star_at(&Subdivision::trivial(&cx), &[Center::of_point(&cx, top, v(&[1, 1]))], true).unwrap();
        let s2 = star_at(&s1, &[Center::of_point(&cx, top, v(&[2, 1]))], true).unwrap();
        let c1 = certify_coherence(&s1).unwrap().unwrap();
        let c2 = certify_relative(&s1, &s2).unwrap().unwrap();
        let out = compose_blowups(&[s1, s2.clone()], &[c1, c2]).unwrap();
        assert_eq!(out.weights, vec![2, 1]);
        let again = crate::subdiv::subdivision_from_pl(&cx, &out.datum).unwrap();
        assert_eq!(again.piece(top), s2.piece(top));
    }
}
