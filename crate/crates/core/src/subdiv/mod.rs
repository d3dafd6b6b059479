//! Subdivisions of generalized cone complexes, star subdivisions and
//! desingularization.
//!
//! A [`Subdivision`] stores, for every base cone, a fan in that cone's own
//! lattice whose support is the cone. The fans must agree along face maps.

mod coherence;
mod ideal;

pub use coherence::{certify_coherence, certify_relative, compose_blowups, CoherenceCertificate, ComposedBlowup};
pub use ideal::{ideal_from_pl, pl_from_ideal, veronese, veronese_ideal, MonomialIdeal};

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};

use crate::complex::{
    intrinsic_cone, left_divide, ComplexMorphism, ConeId, FaceMap, GeneralizedConeComplex,
    PLDatum,
};
use crate::lattice::{apply, barycenter, solve_combination, Cone, Functional, LatticeVector, Strictness};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::num::rat;
use crate::{Error, Matrix, Rational, Result};

// ---------------------------------------------------------------------------
// Fans

/// A fan in `Z^ambient`, stored by its maximal cones in sorted order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fan {
    ambient: usize,
    cones: Vec<Cone>,
}

impl Fan {
    /// Keeps only the maximal cones; does not check the fan axioms.
    pub fn new(ambient: usize, cones: Vec<Cone>) -> Result<Fan> {
        for c in &cones {
            if c.rank() != ambient {
                return Err(Error::DimensionMismatch { expected: ambient, found: c.rank() });
            }
        }
        let mut cs = cones;
        cs.sort();
        cs.dedup();
        let maximal: Vec<Cone> = cs
            .iter()
            .filter(|c| !cs.iter().any(|o| o != *c && c.rays().iter().all(|r| o.has_ray(r))))
            .cloned()
            .collect();
        Ok(Fan { ambient, cones: maximal })
    }

    pub fn single(cone: Cone) -> Fan {
        Fan { ambient: cone.rank(), cones: vec![cone] }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Maximal cones.
    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    /// Every cone, faces included, in canonical order.
    pub fn all_cones(&self) -> Vec<Cone> {
        let mut all: BTreeSet<Cone> = BTreeSet::new();
        for c in &self.cones {
            all.extend(c.faces());
        }
        let mut v: Vec<Cone> = all.into_iter().collect();
        v.sort_by(|a, b| a.dim().cmp(&b.dim()).then_with(|| a.rays().cmp(b.rays())));
        v
    }

    pub fn rays(&self) -> Vec<LatticeVector> {
        let mut rs: Vec<LatticeVector> = self.cones.iter().flat_map(|c| c.rays().iter().cloned()).collect();
        rs.sort();
        rs.dedup();
        rs
    }

    pub fn is_smooth(&self) -> bool {
        self.cones.iter().all(Cone::is_smooth)
    }

    pub fn is_simplicial(&self) -> bool {
        self.cones.iter().all(Cone::is_simplicial)
    }

    /// Star subdivision at a primitive vector.
    pub fn star(&self, v: &LatticeVector) -> Result<Fan> {
        let mut out = Vec::new();
        for c in &self.cones {
            if c.has_ray(v) || !c.contains(v, Strictness::Boundary) {
                out.push(c.clone());
                continue;
            }
            let d = c.dim();
            for g in c.faces().into_iter().filter(|g| g.dim() + 1 == d) {
                if g.contains(v, Strictness::Boundary) {
                    continue;
                }
                let mut rays = g.rays().to_vec();
                rays.push(v.clone());
                out.push(Cone::new(self.ambient, rays)?);
            }
        }
        Fan::new(self.ambient, out)
    }

    /// The honest fan axiom: pairwise intersections are common faces.
    pub fn is_fan(&self) -> bool {
        for (i, a) in self.cones.iter().enumerate() {
            for b in &self.cones[i + 1..] {
                if !meet_in_common_face(a, b) {
                    return false;
                }
            }
        }
        true
    }

    /// Whether every cone lies in some cone of `coarse`.
    pub fn refines(&self, coarse: &Fan) -> bool {
        self.cones.iter().all(|c| coarse.cones.iter().any(|d| d.contains_cone(c)))
    }

    /// A maximal cone containing the point, preferring ones with it inside.
    pub fn cone_containing(&self, v: &LatticeVector) -> Option<&Cone> {
        self.cones
            .iter()
            .find(|c| c.contains(v, Strictness::Interior))
            .or_else(|| self.cones.iter().find(|c| c.contains(v, Strictness::Boundary)))
    }

    /// Image under an injective linear map (assumed to keep cones strongly convex).
    pub fn map(&self, m: &Matrix) -> Result<Fan> {
        let cones = self
            .cones
            .iter()
            .map(|c| Cone::new(m.nrows(), c.rays().iter().map(|r| apply(m, r)).collect()))
            .collect::<Result<Vec<_>>>()?;
        Fan::new(m.nrows(), cones)
    }
}

fn meet_in_common_face(a: &Cone, b: &Cone) -> bool {
    let n = a.rank();
    let mut lp = LinearProgram::<Rational>::new(n, Sense::Minimize);
    for j in 0..n {
        lp.set_free(j);
    }
    for r in a.rays() {
        let row: Vec<Rational> = r.0.iter().map(|&x| rat(x)).collect();
        if b.has_ray(r) {
            lp.add(row, Relation::Eq, Rational::zero());
        } else {
            lp.add(row, Relation::Ge, Rational::one());
        }
    }
    for r in b.rays().iter().filter(|r| !a.has_ray(r)) {
        lp.add(r.0.iter().map(|&x| rat(x)).collect(), Relation::Le, -Rational::one());
    }
    lp.solve().is_feasible()
}

/// Checks that the maximal cones of `fan` tile `cone` (a full-dimensional cone).
pub fn fan_tiles_cone(fan: &Fan, cone: &Cone) -> Result<()> {
    let d = cone.rank();
    if fan.cones.is_empty() {
        return Err(Error::Malformed("empty fan".into()));
    }
    if d == 0 {
        return Ok(());
    }
    let normals = cone.facet_normals();
    for c in &fan.cones {
        if !c.is_full_dimensional() {
            return Err(Error::Malformed(format!("piece {c} is not full-dimensional")));
        }
        if !cone.contains_cone(c) {
            return Err(Error::Malformed(format!("piece {c} leaves its base cone {cone}")));
        }
    }
    // Pseudomanifold condition on walls.
    let mut walls: HashMap<Cone, Vec<&Cone>> = HashMap::new();
    for c in &fan.cones {
        for g in c.faces().into_iter().filter(|g| g.dim() + 1 == d) {
            walls.entry(g).or_default().push(c);
        }
    }
    for (w, adj) in &walls {
        let on_boundary = normals.iter().any(|n| w.rays().iter().all(|r| n.pair(r) == 0));
        let expected = if on_boundary { 1 } else { 2 };
        if adj.len() != expected {
            return Err(Error::Malformed(format!("wall {w} borders {} pieces, expected {expected}", adj.len())));
        }
        if adj.len() == 2 {
            let normal = crate::lattice::nullspace(w.rays(), d)[0].clone();
            let side = |c: &Cone| {
                c.rays().iter().map(|r| Functional(normal.0.clone()).pair(r).signum()).find(|&s| s != 0).unwrap_or(0)
            };
            if side(adj[0]) * side(adj[1]) >= 0 {
                return Err(Error::Malformed(format!("pieces overlap across wall {w}")));
            }
        }
    }
    // Degree one at a generic interior point.
    for attempt in 0..12i64 {
        let p = cone
            .rays()
            .iter()
            .enumerate()
            .fold(LatticeVector::zero(d), |acc, (j, r)| acc.add(&r.scale(97 + (j as i64 + 1) * (13 + 7 * attempt) + (j as i64).pow(2) * (attempt + 3))));
        if fan.cones.iter().any(|c| c.contains(&p, Strictness::Boundary) && !c.contains(&p, Strictness::Interior)) {
            continue;
        }
        let hits = fan.cones.iter().filter(|c| c.contains(&p, Strictness::Interior)).count();
        if hits != 1 {
            return Err(Error::Malformed(format!("generic point covered {hits} times")));
        }
        return Ok(());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Subdivisions

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subdivision {
    base: GeneralizedConeComplex,
    pieces: Vec<Fan>,
}

/// Fan on the face of `target` hit by `map`, pulled back to the source lattice.
pub fn restrict_fan(fan: &Fan, source: &Cone, target: &Cone, map: &Matrix) -> Result<Fan> {
    let face = target.sub_cone(source.rays().iter().map(|r| apply(map, r)).collect());
    let k = source.rank();
    let inside: Vec<Cone> = fan
        .all_cones()
        .into_iter()
        .filter(|c| c.dim() == k && c.rays().iter().all(|r| face.contains(r, Strictness::Boundary)))
        .collect();
    let basis: Vec<LatticeVector> =
        (0..map.ncols()).map(|j| LatticeVector((0..map.nrows()).map(|i| *map.get(i, j)).collect())).collect();
    let mut out = Vec::with_capacity(inside.len());
    for c in inside {
        let rays = c
            .rays()
            .iter()
            .map(|r| {
                let coeffs = solve_combination(&basis, r).ok_or_else(|| Error::Malformed("ray outside face".into()))?;
                if coeffs.iter().any(|x| !x.is_integer()) {
                    return Err(Error::Malformed("face map lattice is not saturated".into()));
                }
                Ok(LatticeVector(coeffs.iter().map(crate::num::rat_to_i64).collect()))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(Cone::new(k, rays)?);
    }
    if k == 0 {
        out = vec![Cone::zero(0)];
    }
    Fan::new(k, out)
}

impl Subdivision {
    pub fn new(base: GeneralizedConeComplex, pieces: Vec<Fan>) -> Result<Subdivision> {
        if pieces.len() != base.len() {
            return Err(Error::Malformed(format!("{} fans for {} base cones", pieces.len(), base.len())));
        }
        for (i, (fan, cone)) in pieces.iter().zip(base.cones()).enumerate() {
            if fan.ambient() != cone.rank() {
                return Err(Error::DimensionMismatch { expected: cone.rank(), found: fan.ambient() });
            }
            fan_tiles_cone(fan, cone).map_err(|e| Error::Malformed(format!("base cone {i}: {e}")))?;
        }
        let s = Subdivision { base, pieces };
        s.check_compatible()?;
        Ok(s)
    }

    fn check_compatible(&self) -> Result<()> {
        for nu in self.base.generators() {
            let restricted =
                restrict_fan(&self.pieces[nu.target], self.base.cone(nu.source), self.base.cone(nu.target), &nu.matrix)?;
            if restricted != self.pieces[nu.source] {
                return Err(Error::Malformed(format!(
                    "fan on cone {} does not match cone {} along a face map",
                    nu.source, nu.target
                )));
            }
        }
        Ok(())
    }

    /// No tiling or compatibility checks. For data about to be verified,
    /// such as parsed certificates.
    pub fn from_parts_unchecked(base: GeneralizedConeComplex, pieces: Vec<Fan>) -> Subdivision {
        Subdivision { base, pieces }
    }

    pub fn trivial(base: &GeneralizedConeComplex) -> Subdivision {
        let pieces = base.cones().iter().map(|c| Fan::single(c.clone())).collect();
        Subdivision { base: base.clone(), pieces }
    }

    pub fn base(&self) -> &GeneralizedConeComplex {
        &self.base
    }

    pub fn pieces(&self) -> &[Fan] {
        &self.pieces
    }

    pub fn piece(&self, id: ConeId) -> &Fan {
        &self.pieces[id]
    }

    pub fn is_trivial(&self) -> bool {
        self.pieces.iter().zip(self.base.cones()).all(|(f, c)| f.cones.len() == 1 && f.cones[0] == *c)
    }

    pub fn is_trivial_on(&self, id: ConeId) -> bool {
        self.pieces[id].cones == vec![self.base.cone(id).clone()]
    }

    pub fn is_smooth(&self) -> bool {
        self.pieces.iter().all(Fan::is_smooth)
    }

    pub fn refines(&self, coarse: &Subdivision) -> bool {
        self.pieces.iter().zip(&coarse.pieces).all(|(f, c)| f.refines(c))
    }

    /// Rays of all pieces, by base cone.
    pub fn ray_count(&self) -> usize {
        self.pieces.iter().map(|f| f.rays().len()).sum()
    }

    /// Pullback along a face map of complexes `phi: source -> self.base()`.
    pub fn pullback(&self, phi: &ComplexMorphism, source: &GeneralizedConeComplex) -> Result<Subdivision> {
        if !phi.is_face_map(source, &self.base) {
            return Err(Error::InvalidFaceMap("pullback needs a face map".into()));
        }
        let pieces = phi
            .components
            .iter()
            .enumerate()
            .map(|(i, (j, m))| restrict_fan(&self.pieces[*j], source.cone(i), self.base.cone(*j), m))
            .collect::<Result<Vec<_>>>()?;
        Subdivision::new(source.clone(), pieces)
    }

    /// Base cones whose fan is not just the cone itself.
    pub fn support_of_change(&self) -> Vec<ConeId> {
        (0..self.base.len()).filter(|&i| !self.is_trivial_on(i)).collect()
    }

    /// The cone complex glued from the cones of all pieces that are interior
    /// to their base cone.
    pub fn total_complex(&self) -> Result<TotalComplex> {
        let mut cells: Vec<(ConeId, Cone)> = Vec::new();
        for (i, fan) in self.pieces.iter().enumerate() {
            let base = self.base.cone(i);
            let normals = if base.rank() == 0 { Vec::new() } else { base.facet_normals() };
            for c in fan.all_cones() {
                if normals.iter().all(|n| c.rays().iter().any(|r| n.pair(r) > 0)) {
                    cells.push((i, c));
                }
            }
        }
        let index: HashMap<(ConeId, Cone), usize> = cells.iter().cloned().enumerate().map(|(k, c)| (c, k)).collect();
        let mut intrinsic = Vec::with_capacity(cells.len());
        let mut embeddings = Vec::with_capacity(cells.len());
        for (_, c) in &cells {
            let (ic, e) = intrinsic_cone(c);
            intrinsic.push(ic);
            embeddings.push(e);
        }
        let mut gens = Vec::new();
        for (t, (j, d)) in cells.iter().enumerate() {
            let base = self.base.cone(*j);
            let normals = if base.rank() == 0 { Vec::new() } else { base.facet_normals() };
            for e in d.faces() {
                let tight: Vec<&Functional> =
                    normals.iter().filter(|n| e.rays().iter().all(|r| n.pair(r) == 0)).collect();
                let face = base.sub_cone(
                    base.rays().iter().filter(|b| tight.iter().all(|n| n.pair(b) == 0)).cloned().collect(),
                );
                for nu in self.base.maps_into(*j).filter(|m| self.base.image_face(m) == face) {
                    let src_cone = self.base.cone(nu.source);
                    let pre = restrict_cone(&e, src_cone, &nu.matrix)?;
                    let Some(&s) = index.get(&(nu.source, pre.clone())) else {
                        return Err(Error::Malformed(format!("cone {pre} missing from fan on base cone {}", nu.source)));
                    };
                    let m = left_divide(&embeddings[t], &nu.matrix.mul(&embeddings[s]))
                        .ok_or_else(|| Error::Malformed("non-integral cell inclusion".into()))?;
                    gens.push(FaceMap::new(s, t, m));
                }
            }
        }
        gens.sort_by(|a, b| (a.source, a.target).cmp(&(b.source, b.target)));
        gens.dedup();
        let complex = GeneralizedConeComplex::new(intrinsic, gens)?;
        Ok(TotalComplex { complex, cells, embeddings })
    }
}

/// Preimage of a cone lying in the image face of `map`.
fn restrict_cone(c: &Cone, source: &Cone, map: &Matrix) -> Result<Cone> {
    let basis: Vec<LatticeVector> =
        (0..map.ncols()).map(|j| LatticeVector((0..map.nrows()).map(|i| *map.get(i, j)).collect())).collect();
    let rays = c
        .rays()
        .iter()
        .map(|r| {
            let co = solve_combination(&basis, r).ok_or_else(|| Error::Malformed("cone outside face".into()))?;
            Ok(LatticeVector(co.iter().map(crate::num::rat_to_i64).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    Cone::new(source.rank(), rays)
}

/// Cells of a subdivision glued into a complex.
#[derive(Clone, Debug)]
pub struct TotalComplex {
    pub complex: GeneralizedConeComplex,
    /// Base cone and the cell in that base cone's coordinates.
    pub cells: Vec<(ConeId, Cone)>,
    pub embeddings: Vec<Matrix>,
}

// ---------------------------------------------------------------------------
// Centers and star subdivisions

/// A point of the base complex given by all of its realizations in base
/// cone coordinates, closed under face maps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Center {
    pub realizations: Vec<(ConeId, LatticeVector)>,
}

impl Center {
    /// Closes a single realization under all face maps.
    pub fn of_point(base: &GeneralizedConeComplex, cone: ConeId, point: LatticeVector) -> Center {
        let mut set: BTreeSet<(ConeId, LatticeVector)> = BTreeSet::new();
        let mut stack = vec![(cone, point.primitive())];
        while let Some((j, q)) = stack.pop() {
            if !set.insert((j, q.clone())) {
                continue;
            }
            for nu in base.maps_from(j) {
                stack.push((nu.target, apply(&nu.matrix, &q)));
            }
            for nu in base.maps_into(j) {
                let face = base.image_face(nu);
                if face.contains(&q, Strictness::Boundary) {
                    let basis: Vec<LatticeVector> = (0..nu.matrix.ncols())
                        .map(|c| LatticeVector((0..nu.matrix.nrows()).map(|r| *nu.matrix.get(r, c)).collect()))
                        .collect();
                    if let Some(co) = solve_combination(&basis, &q) {
                        if co.iter().all(|x| x.is_integer()) {
                            stack.push((nu.source, LatticeVector(co.iter().map(crate::num::rat_to_i64).collect())));
                        }
                    }
                }
            }
        }
        Center { realizations: set.into_iter().collect() }
    }

    /// Barycenter of a cone of the subdivision of base cone `cone`.
    pub fn barycenter_of(base: &GeneralizedConeComplex, cone: ConeId, c: &Cone) -> Result<Center> {
        Ok(Center::of_point(base, cone, barycenter(c)?))
    }

    /// The realization in the lowest-dimensional base cone, with the
    /// smallest id among those.
    pub fn primary(&self, base: &GeneralizedConeComplex) -> (ConeId, LatticeVector) {
        self.realizations
            .iter()
            .min_by(|a, b| base.cone(a.0).rank().cmp(&base.cone(b.0).rank()).then(a.cmp(b)))
            .cloned()
            .expect("center with no realization")
    }

    pub fn in_cone(&self, id: ConeId) -> impl Iterator<Item = &LatticeVector> {
        self.realizations.iter().filter(move |(j, _)| *j == id).map(|(_, v)| v)
    }
}

/// Star subdivision of every piece at every realization of the centers, in
/// canonical order. Centers must not share a cone of the current pieces for
/// the result to be independent of that order.
pub fn star_at(sub: &Subdivision, centers: &[Center], require_smooth: bool) -> Result<Subdivision> {
    let mut pieces = sub.pieces.clone();
    for (i, fan) in pieces.iter_mut().enumerate() {
        let mut pts: Vec<&LatticeVector> = centers.iter().flat_map(|c| c.in_cone(i)).collect();
        pts.sort();
        pts.dedup();
        for p in pts {
            *fan = fan.star(p)?;
        }
        if require_smooth {
            if let Some(bad) = fan.cones.iter().find(|c| !c.is_smooth()) {
                return Err(Error::NonSmoothStar { cone: format!("{bad} in base cone {i}") });
            }
        }
    }
    Subdivision::new(sub.base.clone(), pieces)
}

/// Simultaneous star subdivision at the barycenters of the given cones, each
/// named by a base cone and a cone of its fan.
pub fn star_subdivide(sub: &Subdivision, centers: &[(ConeId, Cone)]) -> Result<(Subdivision, Vec<Center>)> {
    if let Some(bad) = sub.pieces.iter().flat_map(|f| f.cones.iter()).find(|c| !c.is_smooth()) {
        return Err(Error::NotNonsingular(format!("cone {bad}")));
    }
    let cs: Vec<Center> = centers
        .iter()
        .map(|(i, c)| Center::barycenter_of(&sub.base, *i, c))
        .collect::<Result<Vec<_>>>()?;
    let mut cs_sorted = cs;
    cs_sorted.sort();
    cs_sorted.dedup();
    Ok((star_at(sub, &cs_sorted, true)?, cs_sorted))
}

/// Whether two distinct realizations of the centers lie in one cone.
pub fn centers_share_a_cone(sub: &Subdivision, centers: &[Center]) -> bool {
    for (i, fan) in sub.pieces.iter().enumerate() {
        let pts: BTreeSet<&LatticeVector> = centers.iter().flat_map(|c| c.in_cone(i)).collect();
        let pts: Vec<&LatticeVector> = pts.into_iter().collect();
        for c in &fan.cones {
            let inside = pts.iter().filter(|p| c.contains(p, Strictness::Boundary)).count();
            if inside > 1 {
                return true;
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Embedded fans as subdivisions

/// Subdivision of the complex of faces of `base_cones` given by a fan in the
/// same lattice refining them.
pub fn embedded_subdivision(ambient: usize, base_cones: &[Cone], fine: &Fan) -> Result<(Subdivision, Vec<Cone>, Vec<Matrix>)> {
    let (cx, all, emb) = GeneralizedConeComplex::from_embedded(ambient, base_cones)?;
    let fine_all = fine.all_cones();
    let mut pieces = Vec::with_capacity(all.len());
    for (c, e) in all.iter().zip(&emb) {
        let inside: Vec<&Cone> = fine_all
            .iter()
            .filter(|f| f.dim() == c.dim() && c.contains_cone(f))
            .collect();
        let basis: Vec<LatticeVector> =
            (0..e.ncols()).map(|j| LatticeVector((0..e.nrows()).map(|i| *e.get(i, j)).collect())).collect();
        let mut cones = Vec::with_capacity(inside.len());
        for f in inside {
            let rays = f
                .rays()
                .iter()
                .map(|r| {
                    let co = solve_combination(&basis, r).ok_or_else(|| Error::Malformed(format!("{r} outside {c}")))?;
                    if co.iter().any(|x| !x.is_integer()) {
                        return Err(Error::Malformed(format!("{r} is not in the lattice of {c}")));
                    }
                    Ok(LatticeVector(co.iter().map(crate::num::rat_to_i64).collect()))
                })
                .collect::<Result<Vec<_>>>()?;
            cones.push(Cone::new(c.dim(), rays)?);
        }
        if c.dim() == 0 {
            cones = vec![Cone::zero(0)];
        }
        pieces.push(Fan::new(c.dim(), cones)?);
    }
    Ok((Subdivision::new(cx, pieces)?, all, emb))
}

/// Relative certificate of `fine` over `coarse`, both fans refining the
/// `base_cones`, as one ambient functional per maximal cone of `fine`
/// (aligned with `fine.cones()`). Maximal cones must be full-dimensional.
pub fn certify_fan_refinement(
    ambient: usize,
    base_cones: &[Cone],
    coarse: &Fan,
    fine: &Fan,
) -> Result<Option<Vec<Functional>>> {
    let (fs, all, emb) = embedded_subdivision(ambient, base_cones, fine)?;
    let (cs, _, _) = embedded_subdivision(ambient, base_cones, coarse)?;
    let Some(cert) = certify_relative(&cs, &fs)? else {
        return Ok(None);
    };
    let mut out = Vec::with_capacity(fine.cones().len());
    for tau in fine.cones() {
        let i = all
            .iter()
            .position(|c| c.dim() == ambient && c.contains_cone(tau))
            .ok_or_else(|| Error::Malformed(format!("{tau} lies in no full-dimensional base cone")))?;
        let inv = crate::lattice::invert_unimodular(&emb[i]);
        let local = Cone::new(ambient, tau.rays().iter().map(|r| apply(&inv, r)).collect())?;
        let k = fs.piece(i).cones().iter().position(|c| *c == local).expect("cone of the fine fan");
        out.push(crate::lattice::pull_functional(&inv, &cert.functionals[i][k]));
    }
    Ok(Some(out))
}

/// Smooth refinement of a fan by repeated stars at minimal non-smooth cones.
/// Returns the refined fan and the star points in order.
pub fn desingularize_fan(fan: &Fan, max_steps: usize) -> Result<(Fan, Vec<LatticeVector>)> {
    let mut cur = fan.clone();
    let mut points = Vec::new();
    loop {
        let Some(c) = cur.all_cones().into_iter().find(|c| !c.is_smooth()) else {
            return Ok((cur, points));
        };
        if points.len() >= max_steps {
            return Err(Error::BoundExceeded(format!("desingularization needs more than {max_steps} stars")));
        }
        let p = if c.is_simplicial() { c.parallelepiped_points()[0].clone() } else { barycenter(&c)? };
        cur = cur.star(&p)?;
        points.push(p);
    }
}

// ---------------------------------------------------------------------------
// Subdivisions from PL data

/// Extreme rays of `{v : a.v >= 0 for a in rows}`, which must be pointed.
pub fn extreme_rays(rows: &[Functional], dim: usize) -> Vec<LatticeVector> {
    if dim == 0 {
        return Vec::new();
    }
    let mut out: BTreeSet<LatticeVector> = BTreeSet::new();
    let vecs: Vec<LatticeVector> = rows.iter().map(Functional::as_vector).collect();
    for subset in crate::lattice::subsets_of_size(rows.len(), dim - 1) {
        let sub: Vec<LatticeVector> = subset.iter().map(|&i| vecs[i].clone()).collect();
        if crate::lattice::rank(&sub) != dim - 1 {
            continue;
        }
        let ker = crate::lattice::nullspace(&sub, dim);
        let r = &ker[0];
        for cand in [r.clone(), r.scale(-1)] {
            if rows.iter().all(|a| a.pair(&cand) >= 0) {
                out.insert(cand);
            }
        }
    }
    out.into_iter().collect()
}

/// Domains of linearity of a conewise minimum on one full-dimensional cone.
pub fn linearity_domains(cone: &Cone, fs: &[Functional]) -> Result<Vec<Cone>> {
    let ess = crate::complex::essential_functionals(cone, fs);
    if ess.len() <= 1 || cone.rank() == 0 {
        return Ok(vec![cone.clone()]);
    }
    let normals = cone.facet_normals();
    let mut out = Vec::with_capacity(ess.len());
    for l in &ess {
        let mut rows = normals.clone();
        rows.extend(ess.iter().filter(|o| *o != l).map(|o| o.sub(l)));
        out.push(Cone::new(cone.rank(), extreme_rays(&rows, cone.rank()))?);
    }
    Ok(out)
}

/// The subdivision into closures of the domains of linearity of `f`.
pub fn subdivision_from_pl(base: &GeneralizedConeComplex, f: &PLDatum) -> Result<Subdivision> {
    let pieces = base
        .cones()
        .iter()
        .enumerate()
        .map(|(i, c)| Fan::new(c.rank(), linearity_domains(c, f.on(i))?))
        .collect::<Result<Vec<_>>>()?;
    Subdivision::new(base.clone(), pieces)
}

// ---------------------------------------------------------------------------
// Desingularization

/// One star step of a desingularization: the center used.
#[derive(Clone, Debug)]
pub struct DesingularizationStep {
    pub center: Center,
    pub result: Subdivision,
}

/// Smooth refinement by repeated stars at minimal non-smooth cones. The
/// steps are returned in order; the last result is smooth.
pub fn desingularize(sub: &Subdivision, max_steps: usize) -> Result<Vec<DesingularizationStep>> {
    let mut cur = sub.clone();
    let mut steps = Vec::new();
    loop {
        let mut worst: Option<(usize, ConeId, Cone)> = None;
        for (i, fan) in cur.pieces.iter().enumerate() {
            for c in fan.all_cones() {
                if c.is_smooth() {
                    continue;
                }
                let key = (c.dim(), i, c.clone());
                if worst.as_ref().map_or(true, |w| key < *w) {
                    worst = Some(key);
                }
                break;
            }
        }
        let Some((_, i, c)) = worst else {
            return Ok(steps);
        };
        if steps.len() >= max_steps {
            return Err(Error::BoundExceeded(format!("desingularization needs more than {max_steps} stars")));
        }
        let p = if c.is_simplicial() { c.parallelepiped_points()[0].clone() } else { barycenter(&c)? };
        let center = Center::of_point(&cur.base, i, p);
        cur = star_at(&cur, std::slice::from_ref(&center), false)?;
        steps.push(DesingularizationStep { center, result: cur.clone() });
    }
}

// ---------------------------------------------------------------------------
// Barycentric subdivision

/// One simultaneous star step at the barycenters of all cones of a dimension.
#[derive(Clone, Debug)]
pub struct BarycentricStep {
    pub dimension: usize,
    pub centers: Vec<Center>,
    pub result: Subdivision,
}

/// Barycentric subdivision as a sequence of simultaneous stars in decreasing
/// dimension. Stars at rays are trivial and omitted from the witness.
pub fn barycentric_subdivision(base: &GeneralizedConeComplex) -> Result<(Subdivision, Vec<BarycentricStep>)> {
    let smooth = base.is_nonsingular();
    let mut cur = Subdivision::trivial(base);
    let mut steps = Vec::new();
    let top = base.cones().iter().map(Cone::rank).max().unwrap_or(0);
    for d in (2..=top).rev() {
        let mut centers: Vec<Center> = base
            .cones()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.rank() == d)
            .map(|(i, c)| Center::barycenter_of(base, i, c))
            .collect::<Result<Vec<_>>>()?;
        centers.sort();
        centers.dedup();
        cur = star_at(&cur, &centers, smooth)?;
        steps.push(BarycentricStep { dimension: d, centers, result: cur.clone() });
    }
    Ok((cur, steps))
}

/// Barycentric subdivision built directly from flags of faces.
pub fn barycentric_by_flags(base: &GeneralizedConeComplex) -> Result<Subdivision> {
    let mut pieces = Vec::with_capacity(base.len());
    for c in base.cones() {
        let d = c.rank();
        if d == 0 {
            pieces.push(Fan::single(c.clone()));
            continue;
        }
        let faces = c.faces();
        let mut cones = Vec::new();
        // Full flags F_1 < ... < F_d = c, built top down.
        fn rec(cur: &Cone, faces: &[Cone], acc: &mut Vec<LatticeVector>, out: &mut Vec<Vec<LatticeVector>>) {
            acc.push(barycenter(cur).expect("nonzero face"));
            if cur.dim() == 1 {
                out.push(acc.clone());
            } else {
                for f in faces.iter().filter(|f| f.dim() + 1 == cur.dim() && f.rays().iter().all(|r| cur.has_ray(r))) {
                    rec(f, faces, acc, out);
                }
            }
            acc.pop();
        }
        let mut flags = Vec::new();
        rec(c, &faces, &mut Vec::new(), &mut flags);
        for rays in flags {
            cones.push(Cone::new(d, rays)?);
        }
        pieces.push(Fan::new(d, cones)?);
    }
    Subdivision::new(base.clone(), pieces)
}

/// Embeds the barycentric subdivision of a nonsingular cone complex as a fan
/// in `Z^classes`, sending the barycenter of each cone class to a unit vector.
/// Returns the fan and the class of each coordinate.
pub fn embed_barycentric_as_fan(base: &GeneralizedConeComplex, bary: &Subdivision) -> Result<(Fan, Vec<ConeId>)> {
    if !crate::complex::is_cone_complex(base) {
        return Err(Error::Malformed("embedding needs a cone complex".into()));
    }
    if !base.is_nonsingular() {
        return Err(Error::NotNonsingular("embedding needs a nonsingular complex".into()));
    }
    let flags = barycentric_by_flags(base)?;
    if flags.pieces != bary.pieces {
        return Err(Error::Malformed("input is not the barycentric subdivision of the base".into()));
    }
    let red = crate::complex::reduce(base);
    let coords: Vec<ConeId> = (0..red.complex.len()).filter(|&k| red.complex.cone(k).rank() > 0).collect();
    let coord_of: HashMap<ConeId, usize> = coords.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let n = coords.len();
    let mut cones = BTreeSet::new();
    for (i, fan) in bary.pieces.iter().enumerate() {
        let c = base.cone(i);
        for piece in &fan.cones {
            let mut rays = Vec::new();
            for b in piece.rays() {
                // The face whose barycenter this is: the smallest face containing b.
                let face = c
                    .faces()
                    .into_iter()
                    .find(|f| f.contains(b, Strictness::Interior) && f.dim() > 0)
                    .ok_or_else(|| Error::Malformed(format!("ray {b} is in no face")))?;
                let mu = base.realize_face(i, &face).expect("face-complete complex");
                rays.push(LatticeVector::unit(n, coord_of[&red.class_of[mu.source]]));
            }
            cones.insert(Cone::new(n, rays)?);
        }
    }
    let fan = Fan::new(n, cones.into_iter().collect())?;
    Ok((fan, coords.iter().map(|&k| red.reps[k]).collect()))
}

/// Rational functional on a simplicial cone taking prescribed values at its rays.
pub fn interpolate(cone: &Cone, values: &[Rational]) -> Vec<Rational> {
    let n = cone.rank();
    let k = cone.rays().len();
    let mut m: Vec<Vec<Rational>> = cone
        .rays()
        .iter()
        .zip(values)
        .map(|(r, val)| {
            let mut row: Vec<Rational> = r.0.iter().map(|&x| rat(x)).collect();
            row.push(val.clone());
            row
        })
        .collect();
    let pivots = crate::lattice::rref(&mut m);
    let mut out = vec![Rational::zero(); n];
    for (row, &c) in pivots.iter().enumerate() {
        if c < n {
            out[c] = m[row][n].clone();
        }
    }
    debug_assert!(k <= n);
    out
}

/// Scales rational functionals to integers by a common positive factor.
pub fn clear_denominators(fs: &[Vec<Rational>]) -> (Vec<Functional>, num_bigint::BigInt) {
    use num_integer::Integer;
    let mut l = num_bigint::BigInt::one();
    for f in fs {
        for x in f {
            l = l.lcm(x.denom());
        }
    }
    let scale = Rational::from_integer(l.clone());
    let out = fs
        .iter()
        .map(|f| Functional(f.iter().map(|x| crate::num::rat_to_i64(&(x * &scale))).collect()))
        .collect();
    (out, l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[i64]) -> LatticeVector {
        LatticeVector(c.to_vec())
    }

    fn orthant_complex(k: usize) -> (GeneralizedConeComplex, ConeId) {
        let (cx, _, _) = GeneralizedConeComplex::from_embedded(k, &[Cone::orthant(k)]).unwrap();
        let top = cx.len() - 1;
        (cx, top)
    }

    #[test]
    fn star_of_the_2_cone() {
        let (cx, top) = orthant_complex(2);
        let triv = Subdivision::trivial(&cx);
        let (s, _) = star_subdivide(&triv, &[(top, cx.cone(top).clone())]).unwrap();
        assert_eq!(s.piece(top).rays(), vec![v(&[0, 1]), v(&[1, 0]), v(&[1, 1])]);
        assert_eq!(s.piece(top).cones().len(), 2);
    }

    #[test]
    fn star_at_a_ray_is_identity() {
        let (cx, top) = orthant_complex(2);
        let triv = Subdivision::trivial(&cx);
        let ray = Cone::new(2, vec![v(&[1, 0])]).unwrap();
        let (s, _) = star_subdivide(&triv, &[(top, ray)]).unwrap();
        assert!(s.is_trivial());
    }

    #[test]
    fn star_of_p2_at_all_2_cones() {
        let cones = vec![
            Cone::new(2, vec![v(&[1, 0]), v(&[0, 1])]).unwrap(),
            Cone::new(2, vec![v(&[0, 1]), v(&[-1, -1])]).unwrap(),
            Cone::new(2, vec![v(&[-1, -1]), v(&[1, 0])]).unwrap(),
        ];
        let (cx, _, _) = GeneralizedConeComplex::from_embedded(2, &cones).unwrap();
        let triv = Subdivision::trivial(&cx);
        let centers: Vec<(ConeId, Cone)> =
            (0..cx.len()).filter(|&i| cx.cone(i).rank() == 2).map(|i| (i, cx.cone(i).clone())).collect();
        let (s, _) = star_subdivide(&triv, &centers).unwrap();
        let total: usize = centers.iter().map(|(i, _)| s.piece(*i).cones().len()).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn subdivision_from_min_functionals() {
        let (cx, top) = orthant_complex(2);
        let f = PLDatum::from_maximal(&cx, &[(top, vec![Functional(vec![1, 0]), Functional(vec![0, 1])])]).unwrap();
        let s = subdivision_from_pl(&cx, &f).unwrap();
        assert_eq!(s.piece(top).rays(), vec![v(&[0, 1]), v(&[1, 0]), v(&[1, 1])]);
        let f = PLDatum::from_maximal(&cx, &[(top, vec![Functional(vec![2, 0]), Functional(vec![0, 1])])]).unwrap();
        let s = subdivision_from_pl(&cx, &f).unwrap();
        assert_eq!(s.piece(top).rays(), vec![v(&[0, 1]), v(&[1, 0]), v(&[1, 2])]);
    }

    #[test]
    fn barycentric_counts() {
        let (cx, top) = orthant_complex(2);
        let (b, steps) = barycentric_subdivision(&cx).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(
            b.piece(top).cones(),
            &[
                Cone::new(2, vec![v(&[0, 1]), v(&[1, 1])]).unwrap(),
                Cone::new(2, vec![v(&[1, 0]), v(&[1, 1])]).unwrap()
            ]
        );
        let (cx3, top3) = orthant_complex(3);
        let (b3, _) = barycentric_subdivision(&cx3).unwrap();
        assert_eq!(b3.piece(top3).cones().len(), 6);
        assert_eq!(barycentric_by_flags(&cx3).unwrap(), b3);
        assert!(b3.is_smooth());
        let total = b3.total_complex().unwrap();
        assert!(crate::complex::is_cone_complex(&total.complex));
    }

    #[test]
    fn barycentric_embedding() {
        let (cx, _) = orthant_complex(2);
        let (b, _) = barycentric_subdivision(&cx).unwrap();
        let (fan, coords) = embed_barycentric_as_fan(&cx, &b).unwrap();
        assert_eq!(fan.ambient(), 3);
        assert_eq!(coords.len(), 3);
        assert_eq!(fan.cones().len(), 2);
        assert!(fan.is_smooth());
        assert!(fan.is_fan());
    }

    #[test]
    fn desingularize_a_singular_cone() {
        let c = Cone::new(2, vec![v(&[1, 0]), v(&[1, 3])]).unwrap();
        let (cx, _, _) = GeneralizedConeComplex::from_embedded(2, &[c]).unwrap();
        let steps = desingularize(&Subdivision::trivial(&cx), 10).unwrap();
        let last = &steps.last().unwrap().result;
        assert!(last.is_smooth());
    }

    #[test]
    fn fan_axioms() {
        let good = Fan::new(2, vec![Cone::orthant(2)]).unwrap();
        assert!(good.is_fan());
        let bad = Fan::new(
            2,
            vec![
                Cone::new(2, vec![v(&[1, 0]), v(&[1, 2])]).unwrap(),
                Cone::new(2, vec![v(&[1, 1]), v(&[0, 1])]).unwrap(),
            ],
        )
        .unwrap();
        assert!(!bad.is_fan());
    }
}
