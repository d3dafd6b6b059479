//! One line per acceptance criterion. Run with `cargo test --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use torfact::cobordism::build_cobordism;
use torfact::complex::{is_cone_complex, reduce, FaceMap, GeneralizedConeComplex, PLDatum};
use torfact::doc::*;
use torfact::engine::{factor_2d, factor_ideal, functorial_factorization, pullback_certificate, EngineOptions};
use torfact::lattice::{Cone, Functional};
use torfact::subdiv::{
    barycentric_by_flags, barycentric_subdivision, embed_barycentric_as_fan, ideal_from_pl, pl_from_ideal, star_at,
    subdivision_from_pl, veronese, veronese_ideal, Fan, MonomialIdeal, Subdivision,
};
use torfact::verify::{check_functoriality, check_weak_factorization, is_contiguous, mutate, oracle_factor_2d, oracle_weights, Mutation};
use torfact::Matrix;

type Outcome = Result<String, String>;

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn endpoints() -> Outcome {
    let start = Instant::now();
    let b = build_cobordism(&ideal(2, &[&[1, 0], &[0, 1]]), true).map_err(|e| e.to_string())?;
    let (lo, hi) = b.weight_range();
    let bottom = b.git_quotient(lo + 1).map_err(|e| e.to_string())?;
    let top = b.git_quotient(hi - 1).map_err(|e| e.to_string())?;
    let blowup = Fan::single(Cone::orthant(2)).star(&v(&[1, 1])).unwrap();
    ensure(bottom == blowup, || format!("first chamber gives {:?}", bottom.cones()))?;
    ensure(top == Fan::single(Cone::orthant(2)), || format!("last chamber gives {:?}", top.cones()))?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(5), || format!("took {t:?}"))?;
    Ok(format!("(x,y): first chamber is the blowup, last is the plane, {t:.2?}"))
}

fn weight_range() -> Outcome {
    let mut seen = Vec::new();
    for (name, i) in ideal_corpus().into_iter().skip(1) {
        let b = build_cobordism(&i, true).map_err(|e| format!("{name}: {e}"))?;
        let (lo, hi) = b.weight_range();
        ensure(lo == 0 && hi == 2 * b.d, || format!("{name}: range [{lo},{hi}] with d = {}", b.d))?;
        seen.push(format!("{name} [0,{hi}]"));
    }
    Ok(seen.join(", "))
}

fn random_ideal(rng: &mut ChaCha8Rng) -> MonomialIdeal {
    loop {
        let n = if rng.gen_bool(0.8) { 2 } else { 3 };
        let k = rng.gen_range(1..=3);
        let gens: Vec<Functional> = (0..k).map(|_| Functional((0..n).map(|_| rng.gen_range(0..=3)).collect())).collect();
        let i = MonomialIdeal::new(Cone::orthant(n), gens).unwrap();
        if !i.is_unit() {
            return i;
        }
    }
}

fn semistable_range() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut built = 0;
    let mut probes = 0;
    while built < 100 {
        let i = random_ideal(&mut rng);
        let b = build_cobordism(&i, rng.gen_bool(0.5)).map_err(|e| format!("{:?}: {e}", i.generators()))?;
        let (lo, hi) = b.weight_range();
        for a in lo - 3..=hi + 3 {
            let nonempty = !b.semistable_subfan(a).is_empty();
            ensure(nonempty == (lo <= a && a <= hi), || format!("{:?} at a = {a}: range [{lo},{hi}]", i.generators()))?;
            probes += 1;
        }
        built += 1;
    }
    Ok(format!("{built} random cobordisms, {probes} weights probed"))
}

fn oracle_agreement() -> Outcome {
    let mut cones = 0;
    for (name, i) in ideal_corpus() {
        for double in [false, true] {
            let b = build_cobordism(&i, double).map_err(|e| format!("{name}: {e}"))?;
            for (c, iv) in b.weight_intervals() {
                let s = oracle_weights(&b, &c).ok_or_else(|| format!("{name}: oracle over budget on {c}"))?;
                let hull = (s.first().copied(), s.last().copied());
                ensure(hull == (Some(iv.min), Some(iv.max)), || format!("{name} {c}: [{}, {}] against {s:?}", iv.min, iv.max))?;
                ensure(is_contiguous(&s), || format!("{name} {c}: weights {s:?} have a gap"))?;
                cones += 1;
            }
        }
    }
    Ok(format!("{cones} cones over {} ideals", ideal_corpus().len()))
}

fn planar_completeness() -> Outcome {
    let start = Instant::now();
    let all = all_quadrant_subdivisions(6);
    for rays in &all {
        let s = quadrant_subdivision(rays);
        let cert = factor_2d(&s, 100).map_err(|e| format!("{rays:?}: {e}"))?;
        let report = check_weak_factorization(&cert);
        ensure(report.pass, || format!("{rays:?}: {}", report.first_failure().unwrap_or_default()))?;
        ensure(cert.steps.last().map(|st| &st.result).unwrap_or(&cert.stage(0)) == &s, || format!("{rays:?}: wrong end"))?;
        let shortest = oracle_factor_2d(&s, 8).ok_or_else(|| format!("{rays:?}: oracle found nothing"))?;
        ensure(shortest.len() == cert.steps.len(), || {
            format!("{rays:?}: {} steps, oracle {}", cert.steps.len(), shortest.len())
        })?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(120), || format!("took {t:?}"))?;
    Ok(format!("{} subdivisions, {t:.2?}", all.len()))
}

fn glued(cones: Vec<Cone>, gens: Vec<(usize, usize, Vec<Vec<i64>>)>) -> GeneralizedConeComplex {
    let gens = gens
        .into_iter()
        .map(|(s, t, rows)| {
            let cols = cones[s].rank();
            FaceMap::new(s, t, Matrix::from_rows(rows, cols))
        })
        .collect();
    GeneralizedConeComplex::new(cones, gens).unwrap()
}

fn barycentric_corpus() -> Vec<(&'static str, GeneralizedConeComplex)> {
    let emb = |n: usize, cones: Vec<Cone>| GeneralizedConeComplex::from_embedded(n, &cones).unwrap().0;
    let c = |n: usize, rays: &[&[i64]]| Cone::new(n, rays.iter().map(|r| v(r)).collect()).unwrap();
    let point = || Cone::zero(0);
    vec![
        ("ray", emb(1, vec![Cone::orthant(1)])),
        ("quadrant", emb(2, vec![Cone::orthant(2)])),
        ("octant", emb(3, vec![Cone::orthant(3)])),
        ("projective plane", emb(2, vec![c(2, &[&[1, 0], &[0, 1]]), c(2, &[&[0, 1], &[-1, -1]]), c(2, &[&[1, 0], &[-1, -1]])])),
        ("line", emb(1, vec![c(1, &[&[1]]), c(1, &[&[-1]])])),
        ("singular plane cone", emb(2, vec![c(2, &[&[1, 0], &[1, 2]])])),
        ("singular space cone", emb(3, vec![c(3, &[&[1, 0, 0], &[0, 1, 0], &[1, 1, 2]])])),
        ("two octants", emb(3, vec![Cone::orthant(3), c(3, &[&[-1, 0, 0], &[0, 1, 0], &[0, 0, 1]])])),
        (
            "quadrant with its rays glued",
            glued(
                vec![point(), Cone::orthant(1), Cone::orthant(2)],
                vec![(0, 1, vec![vec![]]), (1, 2, vec![vec![1], vec![0]]), (1, 2, vec![vec![0], vec![1]])],
            ),
        ),
        (
            "octant with all faces glued",
            glued(
                vec![point(), Cone::orthant(1), Cone::orthant(2), Cone::orthant(3)],
                vec![
                    (0, 1, vec![vec![]]),
                    (1, 2, vec![vec![1], vec![0]]),
                    (1, 2, vec![vec![0], vec![1]]),
                    (2, 3, vec![vec![1, 0], vec![0, 1], vec![0, 0]]),
                    (2, 3, vec![vec![0, 0], vec![1, 0], vec![0, 1]]),
                    (2, 3, vec![vec![1, 0], vec![0, 0], vec![0, 1]]),
                ],
            ),
        ),
    ]
}

fn barycentric_laws() -> Outcome {
    let corpus = barycentric_corpus();
    let mut small = 0;
    for (name, cx) in &corpus {
        let classes = reduce(cx).complex.len();
        let dim = cx.cones().iter().map(|c| c.rank()).max().unwrap_or(0);
        ensure(dim <= 3, || format!("{name}: outside the corpus bounds"))?;
        small += usize::from(classes <= 6);
        let (b, steps) = barycentric_subdivision(cx).map_err(|e| format!("{name}: {e}"))?;
        let flags = barycentric_by_flags(cx).map_err(|e| format!("{name}: {e}"))?;
        ensure(b == flags, || format!("{name}: stars and flags disagree"))?;
        let mut cur = Subdivision::trivial(cx);
        for st in &steps {
            cur = star_at(&cur, &st.centers, false).map_err(|e| format!("{name}: {e}"))?;
            ensure(cur == st.result, || format!("{name}: witness does not recompose in dimension {}", st.dimension))?;
        }
        ensure(cur == b, || format!("{name}: witness ends elsewhere"))?;
        ensure(!cx.is_nonsingular() || b.is_smooth(), || format!("{name}: smoothness lost"))?;
        for (id, c) in cx.cones().iter().enumerate() {
            let simplicial_maximal = (1..=c.rank()).product::<usize>();
            let got = b.piece(id).cones().iter().filter(|x| x.dim() == c.rank()).count();
            ensure(!c.is_simplicial() || got == simplicial_maximal, || format!("{name}: cone {id} has {got} chambers"))?;
        }
        let total = b.total_complex().map_err(|e| format!("{name}: {e}"))?.complex;
        ensure(is_cone_complex(&total), || format!("{name}: barycentric total complex is not a cone complex"))?;
        let tb = barycentric_by_flags(&total).map_err(|e| format!("{name}: {e}"))?;
        let (fan, _) = embed_barycentric_as_fan(&total, &tb).map_err(|e| format!("{name}: {e}"))?;
        ensure(fan.is_fan() && fan.is_smooth(), || format!("{name}: embedding is not a smooth fan"))?;
    }
    ensure(small >= 6, || format!("only {small} complexes with at most 6 cone classes"))?;
    Ok(format!("{} complexes up to dimension 3, {small} of them with at most 6 cone classes", corpus.len()))
}

fn functoriality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = EngineOptions::default();
    let (base, base_all) = quadrant();
    let mut cases = 0;
    for round in 0..9 {
        let k = 1 + round % 4 + rng.gen_range(0..2);
        let s = quadrant_subdivision(&random_quadrant_rays(&mut rng, k));
        let f = datum_for(&s);
        let target_cert = functorial_factorization(&base, &f, &opts).map_err(|e| e.to_string())?;
        for (name, n, cones, label) in quadrant_covers() {
            let (src, src_all, _) = GeneralizedConeComplex::from_embedded(n, &cones).unwrap();
            let phi = common::labelled_map(&src_all, &base_all, label);
            ensure(phi.is_surjective(&src, &base), || format!("{name}: not surjective"))?;
            let pulled_f = f.pullback(&phi, &src, &base).map_err(|e| format!("{name}: {e}"))?;
            let source_cert = functorial_factorization(&src, &pulled_f, &opts).map_err(|e| format!("{name}: {e}"))?;
            let (ok, why) = check_functoriality(&phi, &target_cert, &source_cert);
            ensure(ok, || format!("{name}, round {round}: {}", why.unwrap_or_default()))?;
            let pulled = pullback_certificate(&target_cert, &phi, &src).map_err(|e| format!("{name}: {e}"))?;
            for (k, (p, q)) in pulled.steps.iter().zip(&source_cert.steps).enumerate() {
                ensure(p.result == q.result && p.centers == q.centers && p.direction == q.direction, || {
                    format!("{name}, round {round}: step {k} differs")
                })?;
                ensure(p.j_certificate == q.j_certificate, || format!("{name}, round {round}: J at step {k} differs"))?;
            }
            ensure(pulled == source_cert, || format!("{name}, round {round}: certificates differ outside the steps"))?;
            ensure(check_weak_factorization(&source_cert).pass, || format!("{name}, round {round}: source certificate fails"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} surjective face maps"))
}

fn golden_certificates() -> Vec<(&'static str, torfact::engine::FactorizationCertificate)> {
    let opts = EngineOptions::default();
    let xy = ideal(2, &[&[1, 0], &[0, 1]]);
    let (cx, f) = pl_from_ideal(&xy).unwrap();
    let functorial = functorial_factorization(&cx, &f, &opts).unwrap();
    let (fold_src, fold_all, _) = GeneralizedConeComplex::from_embedded(
        2,
        &[Cone::orthant(2), Cone::new(2, vec![v(&[-1, 0]), v(&[0, 1])]).unwrap()],
    )
    .unwrap();
    let phi = labelled_map(&fold_all, &quadrant().1, |r| v(&[r.0[0].abs(), r.0[1]]));
    vec![
        ("(x,y)", factor_ideal(&xy, &opts).unwrap()),
        ("(x,y) functorial", functorial.clone()),
        ("(x,y) pulled to two quadrants", pullback_certificate(&functorial, &phi, &fold_src).unwrap()),
        ("(x^2,xy,y^2)", factor_ideal(&ideal(2, &[&[2, 0], &[1, 1], &[0, 2]]), &opts).unwrap()),
        ("three planar stars", factor_2d(&quadrant_subdivision(&[v(&[1, 0]), v(&[2, 1]), v(&[1, 1]), v(&[1, 2]), v(&[0, 1])]), 100).unwrap()),
    ]
}

fn mutations_rejected() -> Outcome {
    let mut applied = 0;
    for (name, cert) in golden_certificates() {
        let report = check_weak_factorization(&cert);
        ensure(report.pass, || format!("{name}: golden certificate fails: {}", report.first_failure().unwrap_or_default()))?;
        for m in Mutation::ALL {
            for k in 0..cert.steps.len().max(1) {
                let Some(bad) = mutate(&cert, m, k) else { continue };
                let r = check_weak_factorization(&bad);
                ensure(!r.pass, || format!("{name}: {} at {k} accepted", m.name()))?;
                ensure(r.first_failure().is_some(), || format!("{name}: {} at {k} rejected without a witness", m.name()))?;
                applied += 1;
            }
        }
    }
    Ok(format!("{applied} mutated certificates, all rejected with a witness"))
}

fn round_trips() -> Outcome {
    let text_round_trip = |d: Document| -> Result<Document, String> {
        let text = d.to_text();
        let back = Document::parse(&text).map_err(|e| e.to_string())?;
        ensure(back.to_text() == text, || format!("{} document changed on re-serialization", d.kind.as_str()))?;
        Ok(back)
    };
    let mut checked = 0;
    for (name, i) in ideal_corpus() {
        let (cx, f) = pl_from_ideal(&i).map_err(|e| e.to_string())?;
        let (back, _) = ideal_from_pl(i.base(), &f, false).map_err(|e| e.to_string())?;
        ensure(back == i, || format!("{name}: ideal to PL and back gives {:?}", back.generators()))?;
        let (normal, base_shift) = ideal_from_pl(i.base(), &f, true).map_err(|e| e.to_string())?;
        let n = i.base().rank();
        let lin = Functional((0..n as i64).map(|x| x + 2).collect());
        let top = cx.len() - 1;
        let shifted: Vec<Functional> = f.on(top).iter().map(|l| l.add(&lin)).collect();
        let g = PLDatum::from_maximal(&cx, &[(top, shifted)]).map_err(|e| e.to_string())?;
        let (back, shift) = ideal_from_pl(i.base(), &g, true).map_err(|e| e.to_string())?;
        ensure(back == normal && shift == base_shift.add(&lin), || {
            format!("{name}: normalization gives {:?} and {shift:?}", back.generators())
        })?;
        for k in [2, 3] {
            let vf = veronese(&f, &cx, k).map_err(|e| e.to_string())?;
            ensure(subdivision_from_pl(&cx, &vf).unwrap() == subdivision_from_pl(&cx, &f).unwrap(), || {
                format!("{name}: Veronese {k} changes the blowup")
            })?;
            let vi = veronese_ideal(&i, k as u32).map_err(|e| e.to_string())?;
            let (vcx, vif) = pl_from_ideal(&vi).map_err(|e| e.to_string())?;
            ensure(subdivision_from_pl(&vcx, &vif).unwrap() == subdivision_from_pl(&cx, &f).unwrap(), || {
                format!("{name}: I^{k} has a different blowup")
            })?;
        }
        let d = text_round_trip(Document::new(Kind::Ideal, ideal_json(&i)))?;
        ensure(read_ideal(d.expect(Kind::Ideal).unwrap(), "payload").map_err(|e| e.to_string())? == i, || format!("{name}: ideal"))?;
        let d = text_round_trip(Document::new(Kind::Pl, pl_json(&cx, &f)))?;
        let (cx2, f2) = read_pl(d.expect(Kind::Pl).unwrap(), "payload").map_err(|e| e.to_string())?;
        ensure(cx2 == cx && f2 == f, || format!("{name}: pl"))?;
        let s = subdivision_from_pl(&cx, &f).map_err(|e| e.to_string())?;
        let d = text_round_trip(Document::new(Kind::Subdivision, subdivision_json(&s)))?;
        ensure(read_subdivision(d.expect(Kind::Subdivision).unwrap(), "payload").map_err(|e| e.to_string())? == s, || format!("{name}: subdivision"))?;
        checked += 1;
    }
    for (name, cert) in golden_certificates() {
        let d = text_round_trip(Document::new(Kind::Certificate, certificate_json(&cert)))?;
        let back = read_certificate(d.expect(Kind::Certificate).unwrap(), "payload").map_err(|e| e.to_string())?;
        ensure(back == cert, || format!("{name}: certificate changed on parse"))?;
        checked += 1;
    }
    Ok(format!("{checked} objects through ideal/PL, Veronese and documents"))
}

fn reproducibility_note() -> Outcome {
    Ok("note: weak factorization for general schemes, stacks and analytic spaces is not checkable at desk \
        scale; only the toroidal core is implemented, and it stands in through criteria 5 to 8"
        .into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("cobordism endpoints", endpoints),
        ("weight range", weight_range),
        ("semistable locus", semistable_range),
        ("weight oracle", oracle_agreement),
        ("planar completeness", planar_completeness),
        ("barycentric laws", barycentric_laws),
        ("functoriality", functoriality),
        ("mutations", mutations_rejected),
        ("round trips", round_trips),
        ("reproducibility", reproducibility_note),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let t = start.elapsed();
        match outcome {
            Ok(d) => println!("criterion {:>2} {name}: PASS ({d}) [{t:.1?}]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({d}) [{t:.1?}]", i + 1)
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
