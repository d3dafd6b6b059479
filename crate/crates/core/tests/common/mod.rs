#![allow(dead_code)]

use std::collections::BTreeSet;

use torfact::complex::{ComplexMorphism, GeneralizedConeComplex, PLDatum};
use torfact::lattice::{Cone, Functional, LatticeVector};
use torfact::subdiv::{certify_coherence, embedded_subdivision, Fan, MonomialIdeal, Subdivision};
use torfact::Matrix;

pub fn v(c: &[i64]) -> LatticeVector {
    LatticeVector(c.to_vec())
}

pub fn ideal(n: usize, gens: &[&[i64]]) -> MonomialIdeal {
    MonomialIdeal::new(Cone::orthant(n), gens.iter().map(|g| Functional(g.to_vec())).collect()).unwrap()
}

/// Non-unit monomial ideals with a hand-checkable cobordism.
pub fn ideal_corpus() -> Vec<(&'static str, MonomialIdeal)> {
    vec![
        ("(x)", ideal(1, &[&[1]])),
        ("(x,y)", ideal(2, &[&[1, 0], &[0, 1]])),
        ("(x^2,y)", ideal(2, &[&[2, 0], &[0, 1]])),
        ("(x,y^2)", ideal(2, &[&[1, 0], &[0, 2]])),
        ("(x,y,z)", ideal(3, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]])),
    ]
}

/// Smooth subdivision of the positive quadrant with the given rays between
/// e1 and e2, listed in angular order.
pub fn quadrant_subdivision(rays: &[LatticeVector]) -> Subdivision {
    let cones: Vec<Cone> =
        rays.windows(2).map(|w| Cone::new(2, vec![w[0].clone(), w[1].clone()]).unwrap()).collect();
    let fine = Fan::new(2, cones).unwrap();
    embedded_subdivision(2, &[Cone::orthant(2)], &fine).unwrap().0
}

/// Every smooth subdivision of the positive quadrant with at most `k`
/// inserted rays, as angular ray sequences.
pub fn all_quadrant_subdivisions(k: usize) -> Vec<Vec<LatticeVector>> {
    let mut seen: BTreeSet<Vec<LatticeVector>> = BTreeSet::new();
    let mut frontier = vec![vec![v(&[1, 0]), v(&[0, 1])]];
    seen.insert(frontier[0].clone());
    for _ in 0..k {
        let mut next = Vec::new();
        for seq in &frontier {
            for i in 0..seq.len() - 1 {
                let mut s = seq.clone();
                s.insert(i + 1, seq[i].add(&seq[i + 1]));
                if seen.insert(s.clone()) {
                    next.push(s);
                }
            }
        }
        frontier = next;
    }
    seen.into_iter().collect()
}

/// Random smooth subdivision of the quadrant by `k` random ray insertions.
pub fn random_quadrant_rays(rng: &mut impl rand::Rng, k: usize) -> Vec<LatticeVector> {
    let mut seq = vec![v(&[1, 0]), v(&[0, 1])];
    for _ in 0..k {
        let i = rng.gen_range(0..seq.len() - 1);
        let r = seq[i].add(&seq[i + 1]);
        seq.insert(i + 1, r);
    }
    seq
}

/// A PL datum on the quadrant whose domains of linearity are `s`.
pub fn datum_for(s: &Subdivision) -> PLDatum {
    certify_coherence(s).unwrap().expect("quadrant subdivisions are coherent").to_pl(s.base()).unwrap()
}

/// Face map between complexes of embedded simplicial cones, given by a
/// labelling of source rays by target rays.
pub fn labelled_map(
    source: &[Cone],
    target: &[Cone],
    label: impl Fn(&LatticeVector) -> LatticeVector,
) -> ComplexMorphism {
    let components = source
        .iter()
        .map(|c| {
            let img: Vec<LatticeVector> = c.rays().iter().map(&label).collect();
            let (j, t) = target
                .iter()
                .enumerate()
                .find(|(_, t)| t.dim() == img.len() && img.iter().all(|r| t.has_ray(r)))
                .expect("labelled cone missing from target");
            let mut m = Matrix::zeros(t.dim(), c.dim());
            for (col, r) in img.iter().enumerate() {
                let row = t.rays().iter().position(|x| x == r).unwrap();
                m.set(row, col, 1);
            }
            (j, m)
        })
        .collect();
    ComplexMorphism { components }
}

/// Complex of the positive quadrant and its faces.
pub fn quadrant() -> (GeneralizedConeComplex, Vec<Cone>) {
    let (cx, all, _) = GeneralizedConeComplex::from_embedded(2, &[Cone::orthant(2)]).unwrap();
    (cx, all)
}

/// Sources of surjective face maps onto the quadrant, with their ray labels.
pub fn quadrant_covers() -> Vec<(&'static str, usize, Vec<Cone>, fn(&LatticeVector) -> LatticeVector)> {
    let c = |n: usize, rays: &[&[i64]]| Cone::new(n, rays.iter().map(|r| v(r)).collect()).unwrap();
    vec![
        ("identity", 2, vec![c(2, &[&[1, 0], &[0, 1]])], |r| r.clone()),
        ("swap", 2, vec![c(2, &[&[1, 0], &[0, 1]])], |r| v(&[r.0[1], r.0[0]])),
        ("fold of two quadrants", 2, vec![c(2, &[&[1, 0], &[0, 1]]), c(2, &[&[-1, 0], &[0, 1]])], |r| {
            v(&[r.0[0].abs(), r.0[1]])
        }),
        ("four quadrants", 2, vec![
            c(2, &[&[1, 0], &[0, 1]]),
            c(2, &[&[-1, 0], &[0, 1]]),
            c(2, &[&[-1, 0], &[0, -1]]),
            c(2, &[&[1, 0], &[0, -1]]),
        ], |r| v(&[r.0[0].abs(), r.0[1].abs()])),
        ("wedge of two quadrants", 4, vec![c(4, &[&[1, 0, 0, 0], &[0, 1, 0, 0]]), c(4, &[&[0, 0, 1, 0], &[0, 0, 0, 1]])], |r| {
            v(&[r.0[0] + r.0[2], r.0[1] + r.0[3]])
        }),
        ("wedge with a twist", 4, vec![c(4, &[&[1, 0, 0, 0], &[0, 1, 0, 0]]), c(4, &[&[0, 0, 1, 0], &[0, 0, 0, 1]])], |r| {
            v(&[r.0[0] + r.0[3], r.0[1] + r.0[2]])
        }),
    ]
}
