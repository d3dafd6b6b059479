//! Independent checks of factorization certificates and brute-force oracles.
//!
//! Everything here is re-derived from the lattice layer and the plain data
//! in the certificate: stars, walls and pullbacks are recomputed locally and
//! ideal certificates are checked by substitution, never by solving.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use crate::cobordism::CobordismFan;
use crate::complex::{ComplexMorphism, ConeId, GeneralizedConeComplex};
use crate::engine::{Direction, FactorizationCertificate};
use crate::lattice::{apply, pull_functional, solve_combination, Cone, Functional, LatticeVector, Strictness};
use crate::subdiv::{star_at, Center, Subdivision};
use crate::Matrix;

/// The five conditions on a factorization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Composite,
    UnitLocus,
    Centers,
    Boundary,
    Ideals,
}

impl Condition {
    pub const ALL: [Condition; 5] =
        [Condition::Composite, Condition::UnitLocus, Condition::Centers, Condition::Boundary, Condition::Ideals];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Condition::Composite => "composite",
            Condition::UnitLocus => "unit-locus",
            Condition::Centers => "centers",
            Condition::Boundary => "boundary",
            Condition::Ideals => "ideals",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionResult {
    pub condition: Condition,
    /// First violation in canonical order.
    pub witness: Option<String>,
}

impl ConditionResult {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub conditions: Vec<ConditionResult>,
    pub pass: bool,
}

impl VerificationReport {
    fn from_conditions(conditions: Vec<ConditionResult>) -> Self {
        let pass = conditions.iter().all(ConditionResult::passed);
        VerificationReport { conditions, pass }
    }

    pub fn result(&self, c: Condition) -> &ConditionResult {
        self.conditions.iter().find(|r| r.condition == c).expect("every condition is reported")
    }

    pub fn first_failure(&self) -> Option<String> {
        self.conditions
            .iter()
            .find_map(|r| r.witness.as_ref().map(|w| format!("condition {} ({}): {w}", r.condition.number(), r.condition.name())))
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.conditions {
            match &r.witness {
                None => writeln!(f, "({}) {}: pass", r.condition.number(), r.condition.name())?,
                Some(w) => writeln!(f, "({}) {}: FAIL {w}", r.condition.number(), r.condition.name())?,
            }
        }
        write!(f, "overall: {}", if self.pass { "pass" } else { "FAIL" })
    }
}

// ---------------------------------------------------------------------------
// Local geometry

fn columns(m: &Matrix) -> Vec<LatticeVector> {
    (0..m.ncols()).map(|c| LatticeVector((0..m.nrows()).map(|r| *m.get(r, c)).collect())).collect()
}

fn integral_preimage(m: &Matrix, p: &LatticeVector) -> Option<LatticeVector> {
    let co = solve_combination(&columns(m), p)?;
    if co.iter().any(|x| !x.is_integer()) {
        return None;
    }
    let q = LatticeVector(co.iter().map(crate::num::rat_to_i64).collect());
    (apply(m, &q) == *p).then_some(q)
}

/// Rays of `c` with a positive coefficient for `p`, if `p` lies in `c`.
fn support_in(c: &Cone, p: &LatticeVector) -> Option<Vec<LatticeVector>> {
    if p.is_zero() {
        return Some(Vec::new());
    }
    let co = solve_combination(c.rays(), p)?;
    if co.iter().any(|x| x < &num_traits::Zero::zero()) {
        return None;
    }
    Some(c.rays().iter().zip(&co).filter(|(_, x)| x > &&num_traits::Zero::zero()).map(|(r, _)| r.clone()).collect())
}

/// Star of a list of simplicial cones at `p`.
fn local_star(cones: &[Cone], p: &LatticeVector) -> Option<Vec<Cone>> {
    let mut out = Vec::new();
    for c in cones {
        if c.has_ray(p) {
            out.push(c.clone());
            continue;
        }
        match support_in(c, p) {
            None => out.push(c.clone()),
            Some(face) => {
                for r in &face {
                    let rays: Vec<LatticeVector> =
                        c.rays().iter().map(|x| if x == r { p.clone() } else { x.clone() }).collect();
                    out.push(Cone::new(c.rank(), rays).ok()?);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Some(out)
}

/// Maximal cones sharing a facet: `(a, b, ray only in a, ray only in b)`.
fn local_walls(cones: &[Cone]) -> Vec<(usize, usize, LatticeVector, LatticeVector)> {
    let mut out = Vec::new();
    for a in 0..cones.len() {
        for b in a + 1..cones.len() {
            let (ca, cb) = (&cones[a], &cones[b]);
            let only_a: Vec<&LatticeVector> = ca.rays().iter().filter(|r| !cb.has_ray(r)).collect();
            let only_b: Vec<&LatticeVector> = cb.rays().iter().filter(|r| !ca.has_ray(r)).collect();
            if only_a.len() == 1 && only_b.len() == 1 && ca.rays().len() == cb.rays().len() {
                out.push((a, b, only_a[0].clone(), only_b[0].clone()));
            }
        }
    }
    out
}

type Pieces = Vec<Vec<Cone>>;

fn pieces_of(sub: &Subdivision) -> Pieces {
    sub.pieces().iter().map(|f| f.cones().to_vec()).collect()
}

fn points_by_piece(centers: &[Center], n: usize) -> Vec<Vec<LatticeVector>> {
    let mut out = vec![BTreeSet::new(); n];
    for c in centers {
        for (j, p) in &c.realizations {
            if *j < n {
                out[*j].insert(p.clone());
            }
        }
    }
    out.into_iter().map(|s| s.into_iter().collect()).collect()
}

fn star_pieces(pieces: &Pieces, centers: &[Center]) -> Option<Pieces> {
    let pts = points_by_piece(centers, pieces.len());
    pieces
        .iter()
        .zip(&pts)
        .map(|(cones, ps)| ps.iter().try_fold(cones.clone(), |acc, p| local_star(&acc, p)))
        .collect()
}

fn first_difference(a: &Pieces, b: &Pieces) -> Option<usize> {
    (0..a.len().max(b.len())).find(|&i| a.get(i) != b.get(i))
}

// ---------------------------------------------------------------------------
// Conditions

fn check_composite(c: &FactorizationCertificate) -> Option<String> {
    let n = c.base.len();
    let mut prev: Pieces = c.base.cones().iter().map(|k| vec![k.clone()]).collect();
    for (k, st) in c.steps.iter().enumerate() {
        let result = pieces_of(&st.result);
        if result.len() != n {
            return Some(format!("step {k}: result has {} pieces for {n} base cones", result.len()));
        }
        let (from, to) = match st.direction {
            Direction::Forward => (&prev, &result),
            Direction::Inverse => (&result, &prev),
        };
        match star_pieces(from, &st.centers) {
            None => return Some(format!("step {k}: star is undefined")),
            Some(starred) => {
                if let Some(i) = first_difference(&starred, to) {
                    return Some(format!(
                        "step {k} ({}): star at the centers differs on base cone {i}",
                        st.direction.as_str()
                    ));
                }
            }
        }
        prev = result;
    }
    if let Some(i) = first_difference(&prev, &pieces_of(&c.source)) {
        return Some(format!("last stage differs from the source on base cone {i}"));
    }
    if let Some(f) = &c.datum {
        if f.pieces().len() != n {
            return Some("datum does not match the base".into());
        }
        for (i, cones) in pieces_of(&c.source).iter().enumerate() {
            let fs = f.on(i);
            let value = |r: &LatticeVector| fs.iter().map(|l| l.pair(r)).min().unwrap_or(0);
            let linear_on = |cone: &Cone| -> Vec<&Functional> {
                fs.iter().filter(|l| cone.rays().iter().all(|r| l.pair(r) == value(r))).collect()
            };
            for (ci, cone) in cones.iter().enumerate() {
                if linear_on(cone).is_empty() {
                    return Some(format!("datum is not linear on cone {ci} of base cone {i}"));
                }
            }
            for (a, b, _, _) in local_walls(cones) {
                let la = linear_on(&cones[a]);
                if linear_on(&cones[b]).iter().any(|l| la.contains(l)) {
                    return Some(format!("datum is linear across the wall between cones {a} and {b} of base cone {i}"));
                }
            }
        }
    }
    None
}

fn check_unit_locus(c: &FactorizationCertificate) -> Option<String> {
    let base = &c.base;
    for &i in &c.unit_locus {
        if i >= base.len() {
            return Some(format!("unit cone {i} out of range"));
        }
        if let Some(nu) = base.maps_into(i).find(|m| !c.unit_locus.contains(&m.source)) {
            return Some(format!("unit locus not closed under faces: {} -> {i}", nu.source));
        }
        if let Some(f) = &c.datum {
            if f.on(i).iter().any(|l| l.0.iter().any(|&x| x != 0)) {
                return Some(format!("datum is nonzero on unit cone {i}"));
            }
        }
        if base.maps_into(i).any(|m| c.boundary.contains(&m.source)) {
            return Some(format!("unit cone {i} meets the boundary"));
        }
    }
    for (k, st) in c.steps.iter().enumerate() {
        for &i in &c.unit_locus {
            if st.result.piece(i).cones() != [base.cone(i).clone()] {
                return Some(format!("stage {} subdivides unit cone {i}", k + 1));
            }
        }
    }
    None
}

fn center_closed(base: &GeneralizedConeComplex, center: &Center) -> Option<String> {
    let set: HashSet<&(ConeId, LatticeVector)> = center.realizations.iter().collect();
    for nu in base.generators() {
        for (j, p) in &center.realizations {
            if *j == nu.source {
                let img = (nu.target, apply(&nu.matrix, p));
                if !set.contains(&img) {
                    return Some(format!("realization {p} in cone {j} has no image in cone {}", nu.target));
                }
            }
            if *j == nu.target {
                if let Some(q) = integral_preimage(&nu.matrix, p) {
                    if base.cone(nu.source).contains(&q, Strictness::Boundary) && !set.contains(&(nu.source, q.clone())) {
                        return Some(format!("realization {p} in cone {j} has no preimage in cone {}", nu.source));
                    }
                }
            }
        }
    }
    None
}

fn check_centers(c: &FactorizationCertificate) -> Option<String> {
    let base = &c.base;
    let n = base.len();
    for (k, st) in std::iter::once(&c.source).chain(c.steps.iter().map(|s| &s.result)).enumerate() {
        if let Some((i, bad)) =
            st.pieces().iter().enumerate().find_map(|(i, f)| f.cones().iter().find(|x| !x.is_smooth()).map(|x| (i, x)))
        {
            let which = if k == 0 { "source".to_string() } else { format!("stage {k}") };
            return Some(format!("{which} has the singular cone {bad} in base cone {i}"));
        }
    }
    for (k, st) in c.steps.iter().enumerate() {
        let blown_up = match st.direction {
            Direction::Forward => pieces_of(&c.stage(k)),
            Direction::Inverse => pieces_of(&st.result),
        };
        if st.centers.is_empty() {
            return Some(format!("step {k} has no centers"));
        }
        for (ci, center) in st.centers.iter().enumerate() {
            if center.realizations.is_empty() {
                return Some(format!("step {k}: center {ci} is empty"));
            }
            if let Some((j, p)) = center.realizations.iter().find(|(j, _)| *j >= n || c.unit_locus.contains(j)) {
                return Some(format!("step {k}: center {ci} meets the unit locus at {p} in cone {j}"));
            }
            if let Some(w) = center_closed(base, center) {
                return Some(format!("step {k}: center {ci}: {w}"));
            }
            for (j, p) in &center.realizations {
                let Some(face) = blown_up[*j].iter().find_map(|cone| support_in(cone, p)) else {
                    return Some(format!("step {k}: {p} is outside base cone {j}"));
                };
                let sum = face.iter().fold(LatticeVector::zero(p.dim()), |a, r| a.add(r));
                if face.len() < 2 || sum != *p {
                    return Some(format!("step {k}: {p} is not the barycenter of a smooth cone of dimension two or more"));
                }
            }
        }
        // Distinct centers are disjoint: no cone holds points of two of them.
        let owner: Vec<Vec<(LatticeVector, usize)>> = (0..n)
            .map(|j| {
                st.centers
                    .iter()
                    .enumerate()
                    .flat_map(|(ci, cen)| cen.in_cone(j).map(move |p| (p.clone(), ci)))
                    .collect()
            })
            .collect();
        for (j, cones) in blown_up.iter().enumerate() {
            for cone in cones {
                let hit: BTreeSet<usize> = owner[j]
                    .iter()
                    .filter(|(p, _)| cone.contains(p, Strictness::Boundary))
                    .map(|(_, ci)| *ci)
                    .collect();
                if hit.len() > 1 {
                    return Some(format!("step {k}: centers {hit:?} meet in cone {cone} of base cone {j}"));
                }
            }
        }
    }
    None
}

fn check_boundary(c: &FactorizationCertificate) -> Option<String> {
    // Stars at barycenters of cones are toroidal, so normal crossings with the
    // boundary are automatic once the boundary consists of base rays.
    c.boundary
        .iter()
        .find(|&&b| b >= c.base.len() || c.base.cone(b).rank() != 1)
        .map(|b| format!("boundary entry {b} is not a ray of the base"))
}

fn check_ideal(base: &GeneralizedConeComplex, unit: &[ConeId], sub: &Subdivision, fs: &[Vec<Functional>]) -> Option<String> {
    let n = base.len();
    if fs.len() != n {
        return Some(format!("{} pieces for {n} base cones", fs.len()));
    }
    for i in 0..n {
        let cones = sub.piece(i).cones();
        if fs[i].len() != cones.len() {
            return Some(format!("{} functionals for {} cones in base cone {i}", fs[i].len(), cones.len()));
        }
        if let Some(l) = fs[i].iter().find(|l| l.dim() != base.cone(i).rank()) {
            return Some(format!("functional {l} has the wrong rank in base cone {i}"));
        }
        // Continuous and nonnegative at every ray.
        let mut at: BTreeMap<&LatticeVector, i64> = BTreeMap::new();
        for (cone, l) in cones.iter().zip(&fs[i]) {
            for r in cone.rays() {
                let val = l.pair(r);
                if val < 0 {
                    return Some(format!("negative value at ray {r} of base cone {i}"));
                }
                if let Some(&old) = at.get(r) {
                    if old != val {
                        return Some(format!("discontinuous at ray {r} of base cone {i}"));
                    }
                }
                at.insert(r, val);
            }
        }
        for (a, b, ra, rb) in local_walls(cones) {
            if fs[i][a].pair(&rb) <= fs[i][b].pair(&rb) || fs[i][b].pair(&ra) <= fs[i][a].pair(&ra) {
                return Some(format!("not strictly concave across the wall between cones {a} and {b} of base cone {i}"));
            }
        }
        if unit.contains(&i) && fs[i].iter().any(|l| l.0.iter().any(|&x| x != 0)) {
            return Some(format!("nonzero on unit cone {i}"));
        }
    }
    for nu in base.generators() {
        let target = sub.piece(nu.target).cones();
        for (cone, l) in sub.piece(nu.source).cones().iter().zip(&fs[nu.source]) {
            let img: Vec<LatticeVector> = cone.rays().iter().map(|r| apply(&nu.matrix, r)).collect();
            let Some(t) = target.iter().position(|d| img.iter().all(|r| d.contains(r, Strictness::Boundary))) else {
                return Some(format!("cone {cone} of base cone {} has no image in {}", nu.source, nu.target));
            };
            let pulled = pull_functional(&nu.matrix, &fs[nu.target][t]);
            if cone.rays().iter().any(|r| pulled.pair(r) != l.pair(r)) {
                return Some(format!("disagrees along the face map {} -> {}", nu.source, nu.target));
            }
        }
    }
    None
}

fn check_ideals(c: &FactorizationCertificate) -> Option<String> {
    for (k, st) in c.steps.iter().enumerate() {
        if let Some(w) = check_ideal(&c.base, &c.unit_locus, &st.result, &st.j_certificate.functionals) {
            return Some(format!("J_{}: {w}", k + 1));
        }
    }
    None
}

/// Re-derives every condition from the certificate data.
pub fn check_weak_factorization(c: &FactorizationCertificate) -> VerificationReport {
    let conditions = Condition::ALL
        .iter()
        .map(|&cond| {
            let witness = match cond {
                Condition::Composite => check_composite(c),
                Condition::UnitLocus => check_unit_locus(c),
                Condition::Centers => check_centers(c),
                Condition::Boundary => check_boundary(c),
                Condition::Ideals => check_ideals(c),
            };
            ConditionResult { condition: cond, witness }
        })
        .collect();
    VerificationReport::from_conditions(conditions)
}

// ---------------------------------------------------------------------------
// Functoriality

fn pull_pieces(phi: &ComplexMorphism, source: &GeneralizedConeComplex, sub: &Subdivision) -> Option<Pieces> {
    let mut out = Vec::with_capacity(source.len());
    for (i, (j, m)) in phi.components.iter().enumerate() {
        let k = source.cone(i).rank();
        let mut cones = BTreeSet::new();
        for big in sub.piece(*j).cones() {
            for d in big.faces().into_iter().filter(|d| d.dim() == k) {
                let pre: Option<Vec<LatticeVector>> = d.rays().iter().map(|r| integral_preimage(m, r)).collect();
                if let Some(rays) = pre {
                    if rays.iter().all(|q| source.cone(i).contains(q, Strictness::Boundary)) {
                        cones.insert(Cone::new(k, rays).ok()?);
                    }
                }
            }
        }
        if k == 0 {
            cones.insert(Cone::zero(0));
        }
        out.push(cones.into_iter().collect());
    }
    Some(out)
}

/// Whether `source_cert` is the pullback of `target_cert` along `phi`, step
/// by step; the witness names the first difference.
pub fn check_functoriality(
    phi: &ComplexMorphism,
    target_cert: &FactorizationCertificate,
    source_cert: &FactorizationCertificate,
) -> (bool, Option<String>) {
    let source = &source_cert.base;
    let fail = |w: String| (false, Some(w));
    if phi.components.len() != source.len() {
        return fail("face map does not match the source complex".into());
    }
    if target_cert.steps.len() != source_cert.steps.len() {
        return fail(format!("{} steps against {}", target_cert.steps.len(), source_cert.steps.len()));
    }
    match pull_pieces(phi, source, &target_cert.source) {
        Some(p) if p == pieces_of(&source_cert.source) => {}
        _ => return fail("sources differ".into()),
    }
    for (k, (t, s)) in target_cert.steps.iter().zip(&source_cert.steps).enumerate() {
        if t.direction != s.direction {
            return fail(format!("step {k}: directions differ"));
        }
        let Some(pulled) = pull_pieces(phi, source, &t.result) else {
            return fail(format!("step {k}: pullback undefined"));
        };
        if pulled != pieces_of(&s.result) {
            return fail(format!("step {k}: stages differ"));
        }
        let mut pulled_centers: Vec<Vec<(ConeId, LatticeVector)>> = Vec::new();
        for c in &t.centers {
            let mut set = BTreeSet::new();
            for (i, (j, m)) in phi.components.iter().enumerate() {
                for p in c.in_cone(*j) {
                    if let Some(q) = integral_preimage(m, p) {
                        if source.cone(i).contains(&q, Strictness::Boundary) {
                            set.insert((i, q));
                        }
                    }
                }
            }
            if !set.is_empty() {
                pulled_centers.push(set.into_iter().collect());
            }
        }
        pulled_centers.sort();
        pulled_centers.dedup();
        let actual: Vec<Vec<(ConeId, LatticeVector)>> = s.centers.iter().map(|c| c.realizations.clone()).collect();
        if pulled_centers != actual {
            return fail(format!("step {k}: centers differ"));
        }
        for (i, (j, m)) in phi.components.iter().enumerate() {
            let coarse = t.result.piece(*j).cones();
            for (ci, cone) in s.result.piece(i).cones().iter().enumerate() {
                let img: Vec<LatticeVector> = cone.rays().iter().map(|r| apply(m, r)).collect();
                let Some(d) = coarse.iter().position(|x| img.iter().all(|r| x.contains(r, Strictness::Boundary))) else {
                    return fail(format!("step {k}: cone {ci} of source cone {i} has no image"));
                };
                let want = pull_functional(m, &t.j_certificate.functionals[*j][d]);
                if s.j_certificate.functionals.get(i).and_then(|fs| fs.get(ci)) != Some(&want) {
                    return fail(format!("step {k}: J differs on cone {ci} of source cone {i}"));
                }
            }
        }
    }
    (true, None)
}

// ---------------------------------------------------------------------------
// Mutations

/// Single-field corruptions that every verifier run must reject.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    PerturbIdeal,
    CenterIntoUnitLocus,
    DropStep,
    FlipDirection,
    ExtraRayInStage,
    SingularStage,
    WrongSource,
    DropRealization,
}

impl Mutation {
    pub const ALL: [Mutation; 8] = [
        Mutation::PerturbIdeal,
        Mutation::CenterIntoUnitLocus,
        Mutation::DropStep,
        Mutation::FlipDirection,
        Mutation::ExtraRayInStage,
        Mutation::SingularStage,
        Mutation::WrongSource,
        Mutation::DropRealization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::PerturbIdeal => "perturb-ideal",
            Mutation::CenterIntoUnitLocus => "center-into-unit-locus",
            Mutation::DropStep => "drop-step",
            Mutation::FlipDirection => "flip-direction",
            Mutation::ExtraRayInStage => "extra-ray-in-stage",
            Mutation::SingularStage => "singular-stage",
            Mutation::WrongSource => "wrong-source",
            Mutation::DropRealization => "drop-realization",
        }
    }
}

fn top_piece(sub: &Subdivision) -> Option<ConeId> {
    (0..sub.base().len()).filter(|&i| sub.base().cone(i).rank() >= 2).max_by_key(|&i| sub.base().cone(i).rank())
}

/// Applies a mutation to step `k` (or the nearest applicable field). Returns
/// `None` when the mutation does not apply to this certificate.
pub fn mutate(cert: &FactorizationCertificate, m: Mutation, k: usize) -> Option<FactorizationCertificate> {
    let mut c = cert.clone();
    if c.steps.is_empty() && m != Mutation::WrongSource {
        return None;
    }
    let k = k.min(c.steps.len().saturating_sub(1));
    match m {
        Mutation::PerturbIdeal => {
            let fs = c.steps[k].j_certificate.functionals.iter_mut().rev().find(|fs| !fs.is_empty())?;
            fs[0].0[0] += 1;
        }
        Mutation::CenterIntoUnitLocus => {
            let u = *c.unit_locus.iter().find(|&&i| c.base.cone(i).rank() >= 1)?;
            let p = c.base.cone(u).rays()[0].clone();
            c.steps[k].centers[0] = Center::of_point(&c.base, u, p);
        }
        Mutation::DropStep => {
            c.steps.remove(k);
        }
        Mutation::FlipDirection => {
            let d = &mut c.steps[k].direction;
            *d = if *d == Direction::Forward { Direction::Inverse } else { Direction::Forward };
        }
        Mutation::ExtraRayInStage => {
            let sub = &c.steps[k].result;
            let i = top_piece(sub)?;
            let cone = &sub.piece(i).cones()[0];
            let p = cone.rays().iter().fold(LatticeVector::zero(cone.rank()), |a, r| a.add(r));
            c.steps[k].result = star_at(sub, &[Center::of_point(sub.base(), i, p)], false).ok()?;
        }
        Mutation::SingularStage => {
            let sub = &c.steps[k].result;
            let i = top_piece(sub)?;
            let cone = &sub.piece(i).cones()[0];
            let p = cone.rays()[0].scale(2).add(&cone.rays()[1]);
            let singular = star_at(sub, &[Center::of_point(sub.base(), i, p)], false).ok()?;
            c.steps[k].result = singular;
        }
        Mutation::WrongSource => {
            let i = top_piece(&c.source)?;
            let cone = c.base.cone(i).clone();
            let p = cone.rays().iter().fold(LatticeVector::zero(cone.rank()), |a, r| a.add(r));
            let sub = &c.source;
            c.source = if sub.is_trivial() {
                star_at(sub, &[Center::of_point(sub.base(), i, p)], true).ok()?
            } else {
                Subdivision::trivial(&c.base)
            };
        }
        Mutation::DropRealization => {
            c.steps[k].centers[0].realizations.pop();
        }
    }
    (c != *cert).then_some(c)
}

// ---------------------------------------------------------------------------
// Oracles

fn angular_cones(base: &Cone, rays: &BTreeSet<LatticeVector>) -> Vec<(LatticeVector, LatticeVector)> {
    let cross = |a: &LatticeVector, b: &LatticeVector| a.0[0] * b.0[1] - a.0[1] * b.0[0];
    let orient = cross(&base.rays()[0], &base.rays()[1]).signum();
    // Inside a strictly convex 2-cone the turn direction is a total order.
    let mut v: Vec<&LatticeVector> = rays.iter().collect();
    v.sort_by(|a, b| 0.cmp(&(orient * cross(a, b))));
    v.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
}

/// Shortest sequence of forward stars `(base cone, point)` from the trivial
/// subdivision to `s`, by breadth-first search over ray sets. 2D only; `None`
/// when more than `max_len` rays are inserted or no sequence exists.
pub fn oracle_factor_2d(s: &Subdivision, max_len: usize) -> Option<Vec<(ConeId, LatticeVector)>> {
    let base = s.base();
    let tops: Vec<ConeId> = (0..base.len()).filter(|&i| base.cone(i).rank() == 2).collect();
    if base.cones().iter().any(|c| c.rank() > 2) {
        return None;
    }
    let target: Vec<BTreeSet<LatticeVector>> = tops.iter().map(|&i| s.piece(i).rays().into_iter().collect()).collect();
    let start: Vec<BTreeSet<LatticeVector>> =
        tops.iter().map(|&i| base.cone(i).rays().iter().cloned().collect()).collect();
    let inserted: usize = target.iter().zip(&start).map(|(t, s0)| t.len() - s0.len()).sum();
    if inserted > max_len.min(8) {
        return None;
    }
    let isos: Vec<(usize, usize, Matrix)> = base
        .maps()
        .iter()
        .filter(|m| base.cone(m.source).rank() == 2 && base.cone(m.target).rank() == 2)
        .filter_map(|m| {
            let a = tops.iter().position(|&t| t == m.source)?;
            let b = tops.iter().position(|&t| t == m.target)?;
            Some((a, b, m.matrix.clone()))
        })
        .collect();
    let mut seen: HashSet<Vec<BTreeSet<LatticeVector>>> = HashSet::new();
    let mut queue: VecDeque<(Vec<BTreeSet<LatticeVector>>, Vec<(ConeId, LatticeVector)>)> = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back((start, Vec::new()));
    while let Some((state, path)) = queue.pop_front() {
        if state == target {
            return Some(path);
        }
        if path.len() >= max_len {
            continue;
        }
        for (a, &ti) in tops.iter().enumerate() {
            for (x, y) in angular_cones(base.cone(ti), &state[a]) {
                let p = x.add(&y);
                if !target[a].contains(&p) {
                    continue;
                }
                let mut next = state.clone();
                next[a].insert(p.clone());
                for (s0, t0, m) in &isos {
                    if *s0 == a {
                        next[*t0].insert(apply(m, &p));
                    }
                    if *t0 == a {
                        if let Some(q) = integral_preimage(m, &p) {
                            next[*s0].insert(q);
                        }
                    }
                }
                if seen.insert(next.clone()) {
                    let mut np = path.clone();
                    np.push((ti, p));
                    queue.push_back((next, np));
                }
            }
        }
    }
    None
}

/// Bound on lattice points examined by [`oracle_weights`].
pub const ORACLE_BUDGET: u64 = 2_000_000;

/// Weights `<m, u>` of the lattice functionals `m` with `m >= h` on the whole
/// cobordism and `m = h` on `cone`, where `h` is the weight certificate.
/// Enumerates a box in the coordinates dual to the rays of the chart and `u`.
/// `None` when the box exceeds [`ORACLE_BUDGET`].
pub fn oracle_weights(cob: &CobordismFan, cone: &Cone) -> Option<BTreeSet<i64>> {
    let n = cob.rank;
    let lifted: Vec<LatticeVector> = cob
        .ideal
        .base()
        .rays()
        .iter()
        .map(|r| {
            let mut c = r.0.clone();
            c.push(0);
            LatticeVector(c)
        })
        .chain([LatticeVector::unit(n + 1, n)])
        .collect();
    let taus = cob.total.cones();
    let h = &cob.certificate;
    let value = |v: &LatticeVector| h.iter().map(|l| l.pair(v)).min().unwrap();
    let minus_u = LatticeVector::unit(n + 1, n).scale(-1);
    let mut lo: Vec<i64> = Vec::with_capacity(n + 1);
    let mut hi: Vec<i64> = Vec::with_capacity(n + 1);
    for r in &lifted[..n] {
        let vals: Vec<i64> = h.iter().map(|l| l.pair(r)).collect();
        lo.push(value(r));
        hi.push(*vals.iter().max().unwrap());
    }
    lo.push(value(&lifted[n]));
    hi.push(-value(&minus_u));
    let size: u64 = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1).max(0) as u64).product();
    if size > ORACLE_BUDGET {
        return None;
    }
    // Functional with the given values on the basis `lifted`.
    let basis_inverse = crate::lattice::invert_unimodular(&crate::lattice::columns_matrix(&lifted, n + 1));
    let mut out = BTreeSet::new();
    let mut coords = lo.clone();
    loop {
        let m = pull_functional(&basis_inverse, &Functional(coords.clone()));
        let ok = taus.iter().zip(h).all(|(tau, l)| tau.rays().iter().all(|r| m.pair(r) >= l.pair(r)))
            && cone.rays().iter().all(|r| m.pair(r) == value(r));
        if ok {
            out.insert(coords[n]);
        }
        let mut i = 0;
        loop {
            if i > n {
                return Some(out);
            }
            if coords[i] < hi[i] {
                coords[i] += 1;
                break;
            }
            coords[i] = lo[i];
            i += 1;
        }
    }
}

/// Whether a set of integers has no gaps.
pub fn is_contiguous(s: &BTreeSet<i64>) -> bool {
    match (s.first(), s.last()) {
        (Some(a), Some(b)) => (b - a + 1) as usize == s.len(),
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{factor_ideal, EngineOptions};
    use crate::subdiv::{Fan, MonomialIdeal};

    fn xy_cert() -> FactorizationCertificate {
        let i = MonomialIdeal::new(Cone::orthant(2), vec![Functional(vec![1, 0]), Functional(vec![0, 1])]).unwrap();
        factor_ideal(&i, &EngineOptions::default()).unwrap()
    }

    #[test]
    fn engine_output_passes() {
        let r = check_weak_factorization(&xy_cert());
        assert!(r.pass, "{r}");
    }

    #[test]
    fn perturbed_ideal_fails_condition_five() {
        let m = mutate(&xy_cert(), Mutation::PerturbIdeal, 3).unwrap();
        let r = check_weak_factorization(&m);
        assert!(!r.result(Condition::Ideals).passed());
    }

    #[test]
    fn center_in_unit_locus_fails_condition_three() {
        let m = mutate(&xy_cert(), Mutation::CenterIntoUnitLocus, 0).unwrap();
        assert!(!check_weak_factorization(&m).result(Condition::Centers).passed());
    }

    #[test]
    fn every_mutation_is_rejected() {
        let c = xy_cert();
        for m in Mutation::ALL {
            for k in [0, 3, 7] {
                let bad = mutate(&c, m, k).unwrap();
                assert!(!check_weak_factorization(&bad).pass, "{} at {k}", m.name());
            }
        }
    }

    #[test]
    fn identity_is_functorial() {
        let c = xy_cert();
        let id = ComplexMorphism::identity(&c.base);
        assert_eq!(check_functoriality(&id, &c, &c), (true, None));
    }

    #[test]
    fn oracle_two_rays_needs_three() {
        let cx = GeneralizedConeComplex::from_embedded(2, &[Cone::orthant(2)]).unwrap().0;
        let top = cx.len() - 1;
        let mut pieces: Vec<Fan> = cx.cones().iter().map(|c| Fan::single(c.clone())).collect();
        pieces[top] = Fan::single(Cone::orthant(2))
            .star(&LatticeVector(vec![1, 1]))
            .unwrap()
            .star(&LatticeVector(vec![2, 1]))
            .unwrap()
            .star(&LatticeVector(vec![1, 2]))
            .unwrap();
        let s = Subdivision::new(cx.clone(), pieces).unwrap();
        assert_eq!(oracle_factor_2d(&s, 8).unwrap().len(), 3);
        assert_eq!(oracle_factor_2d(&Subdivision::trivial(&cx), 8).unwrap().len(), 0);
    }
}
