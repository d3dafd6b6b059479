//! Weak factorization of toroidal blowups into smooth star subdivisions and
//! their inverses, with the ideal certificates for every intermediate stage.
//!
//! A factorization is a chain of subdivisions of the base complex `X₂`,
//! starting at the trivial subdivision and ending at the input subdivision
//! `X₁`. A forward step stars the previous stage; an inverse step is a stage
//! whose star gives the previous one.

use std::collections::BTreeSet;

use crate::complex::{final_object, ComplexMorphism, ConeId, GeneralizedConeComplex, PLDatum};
use crate::lattice::{apply, pull_functional, solve_combination, Cone, LatticeVector, Strictness};
use crate::subdiv::{
    certify_coherence, desingularize, pl_from_ideal, star_at, subdivision_from_pl, Center, CoherenceCertificate,
    MonomialIdeal, Subdivision,
};
use crate::{Error, Result};

pub const DEFAULT_MAX_STEPS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Inverse => "inverse",
        }
    }
}

/// One blowup or blowdown. Centers live in the previous stage for a forward
/// step and in `result` for an inverse one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorizationStep {
    pub direction: Direction,
    pub centers: Vec<Center>,
    pub result: Subdivision,
    /// Ideal on `X₂` whose blowup is `result`.
    pub j_certificate: CoherenceCertificate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorizationCertificate {
    pub base: GeneralizedConeComplex,
    /// Cones over which every stage is an isomorphism.
    pub unit_locus: Vec<ConeId>,
    /// Ray cones of the base in the boundary divisor.
    pub boundary: Vec<ConeId>,
    pub datum: Option<PLDatum>,
    /// The subdivision being factored.
    pub source: Subdivision,
    pub steps: Vec<FactorizationStep>,
}

impl FactorizationCertificate {
    /// The stage after `k` steps; stage 0 is the trivial subdivision.
    pub fn stage(&self, k: usize) -> Subdivision {
        if k == 0 {
            Subdivision::trivial(&self.base)
        } else {
            self.steps[k - 1].result.clone()
        }
    }

    /// No inverse steps: a strong factorization.
    pub fn is_forward_only(&self) -> bool {
        self.steps.iter().all(|s| s.direction == Direction::Forward)
    }
}

/// A star step without its ideal certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarStep {
    pub direction: Direction,
    pub centers: Vec<Center>,
    pub result: Subdivision,
}

/// Residual of the barycentric reduction: `fine` refines `coarse` and both
/// are smooth and projective over the base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Residual {
    pub coarse: Subdivision,
    pub fine: Subdivision,
}

/// Extension point for the core factorization in dimension three and up.
/// The returned steps must lead from `coarse` to `fine`; the engine verifies
/// the assembled certificate before accepting them.
pub trait PiDesingularizer: Sync {
    fn name(&self) -> &str;
    fn factor(&self, residual: &Residual) -> Result<Vec<StarStep>>;
}

#[derive(Clone, Copy)]
pub struct EngineOptions<'a> {
    pub max_steps: usize,
    pub plugin: Option<&'a dyn PiDesingularizer>,
}

impl Default for EngineOptions<'_> {
    fn default() -> Self {
        EngineOptions { max_steps: DEFAULT_MAX_STEPS, plugin: None }
    }
}

/// Cones where the datum vanishes and no boundary ray meets.
pub fn unit_locus(base: &GeneralizedConeComplex, f: &PLDatum, boundary: &[ConeId]) -> Vec<ConeId> {
    (0..base.len())
        .filter(|&i| f.is_zero_on(i) && !base.maps_into(i).any(|m| boundary.contains(&m.source)))
        .collect()
}

fn touches(center: &Center, in_u: &[bool]) -> bool {
    center.realizations.iter().any(|(j, _)| in_u[*j])
}

fn top_dimension(base: &GeneralizedConeComplex) -> usize {
    base.cones().iter().map(Cone::rank).max().unwrap_or(0)
}

/// One barycentric round relative to `U`: stars at the barycenters of the
/// cells of `sub` outside `U`, by decreasing dimension. Ray stars are skipped.
pub fn relative_barycentric(sub: &Subdivision, in_u: &[bool]) -> Result<Vec<StarStep>> {
    let base = sub.base();
    let cells: Vec<Vec<Cone>> = sub.pieces().iter().map(|f| f.all_cones()).collect();
    let mut cur = sub.clone();
    let mut steps = Vec::new();
    for d in (2..=top_dimension(base)).rev() {
        let mut centers: BTreeSet<Center> = BTreeSet::new();
        for (i, cs) in cells.iter().enumerate() {
            for c in cs.iter().filter(|c| c.dim() == d) {
                let center = Center::barycenter_of(base, i, c)?;
                if !touches(&center, in_u) {
                    centers.insert(center);
                }
            }
        }
        if centers.is_empty() {
            continue;
        }
        let centers: Vec<Center> = centers.into_iter().collect();
        cur = star_at(&cur, &centers, true)?;
        steps.push(StarStep { direction: Direction::Forward, centers, result: cur.clone() });
    }
    Ok(steps)
}

fn last_or<'a>(steps: &'a [StarStep], start: &'a Subdivision) -> &'a Subdivision {
    steps.last().map_or(start, |s| &s.result)
}

/// Forward stars from `start` to a smooth refinement `target` in dimension
/// at most two: repeatedly star the cone `<a, b>` missing from the target
/// with the smallest `a + b` (by coordinate sum, then largest first).
pub fn factor_2d_between(start: &Subdivision, target: &Subdivision, max_steps: usize) -> Result<Vec<StarStep>> {
    let base = start.base();
    if top_dimension(base) > 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: top_dimension(base) });
    }
    if !start.is_smooth() || !target.is_smooth() {
        return Err(Error::NotNonsingular("2D factorization needs smooth subdivisions".into()));
    }
    if !target.refines(start) {
        return Err(Error::Malformed("target does not refine the start".into()));
    }
    let mut cur = start.clone();
    let mut steps = Vec::new();
    loop {
        let mut best: Option<((i64, std::cmp::Reverse<LatticeVector>, ConeId), LatticeVector)> = None;
        for (i, fan) in cur.pieces().iter().enumerate() {
            if fan.ambient() != 2 {
                continue;
            }
            let goal = target.piece(i);
            for c in fan.cones().iter().filter(|c| !goal.cones().contains(c)) {
                let p = c.rays()[0].add(&c.rays()[1]);
                let key = (p.l1(), std::cmp::Reverse(p.clone()), i);
                if best.as_ref().map_or(true, |(k, _)| key < *k) {
                    best = Some((key, p));
                }
            }
        }
        let Some(((_, _, i), p)) = best else {
            break;
        };
        if !target.piece(i).rays().contains(&p) {
            return Err(Error::NotNonsingular(format!("target misses the ray {p} forced in base cone {i}")));
        }
        if steps.len() >= max_steps {
            return Err(Error::BoundExceeded(format!("2D factorization needs more than {max_steps} stars")));
        }
        let center = Center::of_point(base, i, p);
        cur = star_at(&cur, std::slice::from_ref(&center), true)?;
        steps.push(StarStep { direction: Direction::Forward, centers: vec![center], result: cur.clone() });
    }
    if cur != *target {
        return Err(Error::Malformed("2D factorization did not reach the target".into()));
    }
    Ok(steps)
}

fn with_certificates(steps: Vec<StarStep>) -> Result<Vec<FactorizationStep>> {
    steps
        .into_iter()
        .map(|s| {
            let j = certify_coherence(&s.result)?
                .ok_or_else(|| Error::Infeasible("intermediate stage is not projective over the base".into()))?;
            Ok(FactorizationStep { direction: s.direction, centers: s.centers, result: s.result, j_certificate: j })
        })
        .collect()
}

/// Strong factorization of a smooth subdivision of a complex of dimension at
/// most two. The unit locus is the set of cones left unsubdivided.
pub fn factor_2d(s: &Subdivision, max_steps: usize) -> Result<FactorizationCertificate> {
    let base = s.base();
    if !base.is_nonsingular() {
        return Err(Error::NotNonsingular("2D factorization needs a nonsingular base".into()));
    }
    let steps = factor_2d_between(&Subdivision::trivial(base), s, max_steps)?;
    Ok(FactorizationCertificate {
        base: base.clone(),
        unit_locus: (0..base.len()).filter(|&i| s.is_trivial_on(i)).collect(),
        boundary: Vec::new(),
        datum: None,
        source: s.clone(),
        steps: with_certificates(steps)?,
    })
}

/// Output of the barycentric reduction.
#[derive(Clone, Debug)]
pub struct BarycentricReduction {
    /// Stars from the trivial subdivision to `residual.coarse`.
    pub front: Vec<StarStep>,
    pub residual: Residual,
    /// Stars from the input subdivision to `residual.fine`.
    pub back: Vec<StarStep>,
}

/// Second barycentric subdivisions of both sides and a smooth common
/// refinement reached from the fine side by stars.
pub fn barycentric_reduction(s: &Subdivision, in_u: &[bool], max_steps: usize) -> Result<BarycentricReduction> {
    let base = s.base();
    let trivial = Subdivision::trivial(base);
    let mut front = relative_barycentric(&trivial, in_u)?;
    front.extend(relative_barycentric(last_or(&front, &trivial), in_u)?);
    let coarse = last_or(&front, &trivial).clone();
    let mut back = relative_barycentric(s, in_u)?;
    back.extend(relative_barycentric(last_or(&back, s), in_u)?);
    let bb = last_or(&back, s).clone();
    let fine = if bb.refines(&coarse) {
        bb.clone()
    } else if top_dimension(base) <= 2 {
        // In 2D the union of the rays, made smooth, is reached by stars.
        let mut cur = bb.clone();
        for (i, fan) in coarse.pieces().iter().enumerate() {
            for r in fan.rays() {
                if !cur.piece(i).rays().contains(&r) {
                    cur = star_at(&cur, &[Center::of_point(base, i, r)], false)?;
                }
            }
        }
        let smooth = desingularize(&cur, max_steps)?;
        let common = smooth.last().map_or(cur, |st| st.result.clone());
        back.extend(factor_2d_between(&bb, &common, max_steps)?);
        common
    } else {
        return Err(Error::NotImplemented(
            "barycentric_reduction: common refinement search in dimension 3 and up".into(),
        ));
    };
    if back.len() > max_steps || front.len() > max_steps {
        return Err(Error::BoundExceeded(format!("reduction needs more than {max_steps} steps")));
    }
    Ok(BarycentricReduction { front, residual: Residual { coarse, fine }, back })
}

/// Core factorization of the residual: forward stars in 2D, empty for the
/// identity, the plugin otherwise.
pub fn pi_desingularize(residual: &Residual, opts: &EngineOptions) -> Result<Vec<StarStep>> {
    if residual.coarse == residual.fine {
        return Ok(Vec::new());
    }
    if top_dimension(residual.coarse.base()) <= 2 {
        return factor_2d_between(&residual.coarse, &residual.fine, opts.max_steps);
    }
    match opts.plugin {
        Some(p) => p.factor(residual),
        None => Err(Error::NotImplemented(
            "pi_desingularize: non-identity residual in dimension 3 and up needs a plugin".into(),
        )),
    }
}

/// Checks that a step list walks from `start` to `end`, step by step.
fn check_chain(start: &Subdivision, steps: &[StarStep], end: &Subdivision) -> Result<()> {
    let mut prev = start.clone();
    for (k, st) in steps.iter().enumerate() {
        let ok = match st.direction {
            Direction::Forward => star_at(&prev, &st.centers, true).ok().as_ref() == Some(&st.result),
            Direction::Inverse => star_at(&st.result, &st.centers, true).ok().as_ref() == Some(&prev),
        };
        if !ok {
            return Err(Error::Malformed(format!("plugin step {k} is not a smooth star or inverse star")));
        }
        prev = st.result.clone();
    }
    if prev != *end {
        return Err(Error::Malformed("plugin steps do not end at the fine residual".into()));
    }
    Ok(())
}

/// The factorization of `subdivision_from_pl(base, f)`.
pub fn weak_factorization(
    base: &GeneralizedConeComplex,
    f: &PLDatum,
    boundary: &[ConeId],
    opts: &EngineOptions,
) -> Result<FactorizationCertificate> {
    if !base.is_nonsingular() {
        return Err(Error::NotNonsingular("base complex must be nonsingular".into()));
    }
    let s = subdivision_from_pl(base, f)?;
    if !s.is_smooth() {
        return Err(Error::NotNonsingular("the blowup of the datum is singular".into()));
    }
    let unit = unit_locus(base, f, boundary);
    let mut in_u = vec![false; base.len()];
    for &i in &unit {
        in_u[i] = true;
    }
    let mut raw: Vec<StarStep> = Vec::new();
    if !s.is_trivial() {
        let red = barycentric_reduction(&s, &in_u, opts.max_steps)?;
        let core = pi_desingularize(&red.residual, opts)?;
        if opts.plugin.is_some() {
            check_chain(&red.residual.coarse, &core, &red.residual.fine)?;
        }
        raw.extend(red.front);
        raw.extend(core);
        // Walk the fine side back down to the input.
        let mut chain: Vec<&Subdivision> = vec![&s];
        chain.extend(red.back.iter().map(|st| &st.result));
        for k in (0..red.back.len()).rev() {
            raw.push(StarStep {
                direction: Direction::Inverse,
                centers: red.back[k].centers.clone(),
                result: chain[k].clone(),
            });
        }
    }
    let cert = FactorizationCertificate {
        base: base.clone(),
        unit_locus: unit,
        boundary: boundary.to_vec(),
        datum: Some(f.clone()),
        source: s,
        steps: with_certificates(raw)?,
    };
    if opts.plugin.is_some() {
        let report = crate::verify::check_weak_factorization(&cert);
        if let Some(w) = report.first_failure() {
            return Err(Error::Malformed(format!("plugin result rejected: {w}")));
        }
    }
    Ok(cert)
}

/// The factorization of the blowup of a monomial ideal on its chart.
pub fn factor_ideal(ideal: &MonomialIdeal, opts: &EngineOptions) -> Result<FactorizationCertificate> {
    let (cx, f) = pl_from_ideal(ideal)?;
    weak_factorization(&cx, &f, &[], opts)
}

/// The factorization computed on the final object and pulled back, so that
/// it commutes with pullback along surjective face maps.
pub fn functorial_factorization(
    cx: &GeneralizedConeComplex,
    f: &PLDatum,
    opts: &EngineOptions,
) -> Result<FactorizationCertificate> {
    let fo = final_object(cx, f)?;
    let on_final = weak_factorization(&fo.complex, &fo.datum, &[], opts)?;
    let mut out = pullback_certificate(&on_final, &fo.g, cx)?;
    out.datum = Some(f.clone());
    Ok(out)
}

/// Points of cone `i` of `source` mapping to the center under `m`.
fn pull_center(center: &Center, j: ConeId, m: &crate::Matrix, cone: &Cone, out: &mut BTreeSet<(ConeId, LatticeVector)>, i: ConeId) {
    let basis: Vec<LatticeVector> =
        (0..m.ncols()).map(|c| LatticeVector((0..m.nrows()).map(|r| *m.get(r, c)).collect())).collect();
    for p in center.in_cone(j) {
        let Some(co) = solve_combination(&basis, p) else { continue };
        if co.iter().any(|x| !x.is_integer()) {
            continue;
        }
        let q = LatticeVector(co.iter().map(crate::num::rat_to_i64).collect());
        if apply(m, &q) == *p && cone.contains(&q, Strictness::Boundary) {
            out.insert((i, q));
        }
    }
}

/// Pullback of every stage, center and certificate along a face map
/// `phi: source -> cert.base`.
pub fn pullback_certificate(
    cert: &FactorizationCertificate,
    phi: &ComplexMorphism,
    source: &GeneralizedConeComplex,
) -> Result<FactorizationCertificate> {
    let target = &cert.base;
    phi.validate(source, target)?;
    let datum = match &cert.datum {
        Some(f) => Some(f.pullback(phi, source, target)?),
        None => None,
    };
    let boundary: Vec<ConeId> = (0..source.len())
        .filter(|&i| source.cone(i).rank() == 1 && cert.boundary.contains(&phi.components[i].0))
        .collect();
    let in_unit = |i: ConeId| cert.unit_locus.contains(&phi.components[i].0);
    let unit_locus = (0..source.len()).filter(|&i| in_unit(i)).collect();
    let mut steps = Vec::with_capacity(cert.steps.len());
    for st in &cert.steps {
        let result = st.result.pullback(phi, source)?;
        let mut centers = Vec::with_capacity(st.centers.len());
        for c in &st.centers {
            let mut set = BTreeSet::new();
            for (i, (j, m)) in phi.components.iter().enumerate() {
                pull_center(c, *j, m, source.cone(i), &mut set, i);
            }
            if !set.is_empty() {
                centers.push(Center { realizations: set.into_iter().collect() });
            }
        }
        centers.sort();
        centers.dedup();
        let mut functionals = Vec::with_capacity(source.len());
        for (i, (j, m)) in phi.components.iter().enumerate() {
            let coarse = st.result.piece(*j);
            let fs = result
                .piece(i)
                .cones()
                .iter()
                .map(|c| {
                    let img: Vec<LatticeVector> = c.rays().iter().map(|r| apply(m, r)).collect();
                    let k = coarse
                        .cones()
                        .iter()
                        .position(|d| img.iter().all(|r| d.contains(r, Strictness::Boundary)))
                        .ok_or_else(|| Error::Malformed("pulled cone lies in no cone".into()))?;
                    Ok(pull_functional(m, &st.j_certificate.functionals[*j][k]))
                })
                .collect::<Result<Vec<_>>>()?;
            functionals.push(fs);
        }
        steps.push(FactorizationStep {
            direction: st.direction,
            centers,
            result,
            j_certificate: CoherenceCertificate { functionals },
        });
    }
    Ok(FactorizationCertificate {
        base: source.clone(),
        unit_locus,
        boundary,
        datum,
        source: cert.source.pullback(phi, source)?,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Functional;
    use crate::subdiv::Fan;

    fn v(c: &[i64]) -> LatticeVector {
        LatticeVector(c.to_vec())
    }

    fn quadrant() -> GeneralizedConeComplex {
        GeneralizedConeComplex::from_embedded(2, &[Cone::orthant(2)]).unwrap().0
    }

    fn with_rays(rays: &[&[i64]]) -> Subdivision {
        let cx = quadrant();
        let top = cx.len() - 1;
        let mut fan = Fan::single(Cone::orthant(2));
        for r in rays {
            fan = fan.star(&v(r)).unwrap();
        }
        let mut pieces: Vec<Fan> = cx.cones().iter().map(|c| Fan::single(c.clone())).collect();
        pieces[top] = fan;
        Subdivision::new(cx, pieces).unwrap()
    }

    fn inserted(cert: &FactorizationCertificate) -> Vec<LatticeVector> {
        cert.steps.iter().map(|s| s.centers[0].primary(&cert.base).1).collect()
    }

    #[test]
    fn single_star_is_one_step() {
        let c = factor_2d(&with_rays(&[&[1, 1]]), 100).unwrap();
        assert_eq!(inserted(&c), vec![v(&[1, 1])]);
        assert!(c.is_forward_only());
    }

    #[test]
    fn three_rays_in_length_order() {
        let s = with_rays(&[&[1, 1], &[1, 2], &[2, 1]]);
        let c = factor_2d(&s, 100).unwrap();
        assert_eq!(inserted(&c), vec![v(&[1, 1]), v(&[2, 1]), v(&[1, 2])]);
        assert_eq!(c.steps.last().unwrap().result, s);
    }

    #[test]
    fn trivial_has_no_steps() {
        let c = factor_2d(&Subdivision::trivial(&quadrant()), 100).unwrap();
        assert!(c.steps.is_empty());
    }

    fn xy() -> MonomialIdeal {
        MonomialIdeal::new(Cone::orthant(2), vec![Functional(vec![1, 0]), Functional(vec![0, 1])]).unwrap()
    }

    #[test]
    fn maximal_ideal_pipeline() {
        let c = factor_ideal(&xy(), &EngineOptions::default()).unwrap();
        let dirs: Vec<Direction> = c.steps.iter().map(|s| s.direction).collect();
        use Direction::*;
        assert_eq!(dirs, vec![Forward, Forward, Forward, Forward, Forward, Forward, Inverse, Inverse]);
        assert_eq!(c.steps.last().unwrap().result, c.source);
        assert_eq!(c.source, with_rays(&[&[1, 1]]));
        assert!(crate::verify::check_weak_factorization(&c).pass);
    }

    #[test]
    fn veronese_gives_same_steps() {
        let a = factor_ideal(&xy(), &EngineOptions::default()).unwrap();
        let b = factor_ideal(&xy().power(2).unwrap(), &EngineOptions::default()).unwrap();
        assert_eq!(a.steps, b.steps);
    }

    #[test]
    fn unit_ideal_is_empty() {
        let c = factor_ideal(&MonomialIdeal::unit(Cone::orthant(3)).unwrap(), &EngineOptions::default()).unwrap();
        assert!(c.steps.is_empty());
    }

    #[test]
    fn three_dimensional_residual_needs_plugin() {
        let i = MonomialIdeal::new(
            Cone::orthant(3),
            vec![Functional(vec![1, 0, 0]), Functional(vec![0, 1, 0]), Functional(vec![0, 0, 1])],
        )
        .unwrap();
        assert!(matches!(factor_ideal(&i, &EngineOptions::default()), Err(Error::NotImplemented(_))));
    }

    #[test]
    fn final_input_is_unchanged() {
        let (cx, f) = pl_from_ideal(&xy()).unwrap();
        let fo = final_object(&cx, &f).unwrap();
        let direct = weak_factorization(&fo.complex, &fo.datum, &[], &EngineOptions::default()).unwrap();
        let func = functorial_factorization(&fo.complex, &fo.datum, &EngineOptions::default()).unwrap();
        assert_eq!(direct.steps, func.steps);
    }
}
