mod common;

use num_bigint::BigInt;
use proptest::prelude::*;

use common::*;
use torfact::cobordism::build_cobordism;
use torfact::doc::{ideal_json, read_ideal, Document, Kind};
use torfact::engine::factor_2d;
use torfact::lattice::{hermite_form, smith_form, Cone, Functional, IntMatrix, LatticeVector};
use torfact::subdiv::{pl_from_ideal, subdivision_from_pl, veronese_ideal, Fan, MonomialIdeal};
use torfact::verify::check_weak_factorization;

fn matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..4, 1usize..4).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-6i64..7, c), r))
}

fn is_diagonal_chain(d: &IntMatrix<i64>) -> bool {
    let k = d.nrows().min(d.ncols());
    let off = (0..d.nrows()).all(|i| (0..d.ncols()).all(|j| i == j || *d.get(i, j) == 0));
    let chain = (1..k).all(|i| {
        let (a, b) = (*d.get(i - 1, i - 1), *d.get(i, i));
        (a == 0 && b == 0) || (a != 0 && b % a == 0)
    });
    off && chain && (0..k).all(|i| *d.get(i, i) >= 0)
}

fn ideal_strategy() -> impl Strategy<Value = MonomialIdeal> {
    prop::collection::vec(prop::collection::vec(0i64..4, 2), 1..4)
        .prop_map(|gs| MonomialIdeal::new(Cone::orthant(2), gs.into_iter().map(Functional).collect()).unwrap())
        .prop_filter("non-unit", |i| !i.is_unit())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn smith_form_diagonalizes(rows in matrix()) {
        let cols = rows[0].len();
        let a = IntMatrix::from_rows(rows, cols);
        let s = smith_form(&a);
        prop_assert_eq!(s.u.mul(&a).mul(&s.v), s.d.clone());
        prop_assert!(s.u.determinant().abs() == 1 && s.v.determinant().abs() == 1);
        prop_assert!(is_diagonal_chain(&s.d));
    }

    #[test]
    fn hermite_form_agrees_over_big_integers(rows in matrix()) {
        let cols = rows[0].len();
        let a = IntMatrix::from_rows(rows.clone(), cols);
        let big = IntMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect(), cols);
        let h = hermite_form(&a);
        let hb = hermite_form(&big);
        prop_assert_eq!(h.u.mul(&a), h.h.clone());
        prop_assert_eq!(&h.pivots, &hb.pivots);
        let narrowed: Vec<Vec<BigInt>> = h.h.to_rows().iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        prop_assert_eq!(narrowed, hb.h.to_rows());
    }

    #[test]
    fn smooth_star_stays_smooth(a in -3i64..4, b in -3i64..4) {
        // Unimodular by construction: determinant 1.
        let fan = Fan::single(Cone::new(2, vec![LatticeVector(vec![1, b]), LatticeVector(vec![a, a * b + 1])]).unwrap());
        let star = fan.star(&LatticeVector(vec![1 + a, a * b + b + 1])).unwrap();
        prop_assert!(star.is_smooth() && star.is_fan() && star.refines(&fan));
        prop_assert_eq!(star.cones().len(), 2);
    }

    #[test]
    fn planar_factorizations_verify(seed in any::<u64>(), k in 0usize..7) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let s = quadrant_subdivision(&random_quadrant_rays(&mut rng, k));
        let cert = factor_2d(&s, 100).unwrap();
        prop_assert_eq!(cert.steps.len(), k);
        prop_assert!(cert.is_forward_only());
        prop_assert!(check_weak_factorization(&cert).pass);
    }

    #[test]
    fn veronese_keeps_the_blowup(i in ideal_strategy(), k in 2u32..4) {
        let (cx, f) = pl_from_ideal(&i).unwrap();
        let (vcx, vf) = pl_from_ideal(&veronese_ideal(&i, k).unwrap()).unwrap();
        prop_assert_eq!(subdivision_from_pl(&vcx, &vf).unwrap(), subdivision_from_pl(&cx, &f).unwrap());
    }

    #[test]
    fn ideal_documents_round_trip(i in ideal_strategy()) {
        let text = Document::new(Kind::Ideal, ideal_json(&i)).to_text();
        let doc = Document::parse(&text).unwrap();
        prop_assert_eq!(read_ideal(doc.expect(Kind::Ideal).unwrap(), "payload").unwrap(), i);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn semistable_exactly_on_the_range(i in ideal_strategy(), double in any::<bool>()) {
        let b = build_cobordism(&i, double).unwrap();
        let (lo, hi) = b.weight_range();
        prop_assert_eq!(lo, 0);
        prop_assert_eq!(hi, 2 * b.d);
        for a in lo - 2..=hi + 2 {
            prop_assert_eq!(!b.semistable_subfan(a).is_empty(), lo <= a && a <= hi);
        }
        let w = b.walls().unwrap();
        prop_assert!(w.walls.first() == Some(&lo) && w.walls.last() == Some(&hi));
    }
}
