//! Generalized cone complexes: finite diagrams of cones and face maps.
//!
//! Every cone of a complex is full-dimensional in its own lattice `Z^k`;
//! a face map carries an integer matrix from the source lattice into the
//! target lattice.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_traits::{One, Signed, Zero};

use crate::lattice::{
    apply, columns_matrix, invert_unimodular, pull_functional, smith_form, solve_combination,
    Cone, Functional, LatticeVector,
};
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::num::{rat, rat_to_i64};
use crate::{Error, Matrix, Rational, Result};

pub type ConeId = usize;

/// Default bound on the number of maps in a composition closure.
pub const DEFAULT_CLOSURE_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FaceMap {
    pub source: ConeId,
    pub target: ConeId,
    pub matrix: Matrix,
}

impl FaceMap {
    pub fn new(source: ConeId, target: ConeId, matrix: Matrix) -> Self {
        FaceMap { source, target, matrix }
    }

    /// `self` after `first`.
    pub fn after(&self, first: &FaceMap) -> FaceMap {
        assert_eq!(first.target, self.source, "maps do not compose");
        FaceMap { source: first.source, target: self.target, matrix: self.matrix.mul(&first.matrix) }
    }
}

#[derive(Clone, Debug)]
pub struct GeneralizedConeComplex {
    cones: Vec<Cone>,
    generators: Vec<FaceMap>,
    maps: Vec<FaceMap>,
    by_pair: HashMap<(ConeId, ConeId), Vec<usize>>,
}

impl PartialEq for GeneralizedConeComplex {
    fn eq(&self, other: &Self) -> bool {
        self.cones == other.cones && self.map_set() == other.map_set()
    }
}

impl Eq for GeneralizedConeComplex {}

/// Checks the three face-map invariants plus ray correspondence.
pub fn validate_face_map(source: &Cone, target: &Cone, matrix: &Matrix) -> Result<()> {
    let (s, t) = (source.rank(), target.rank());
    if matrix.nrows() != t || matrix.ncols() != s {
        return Err(Error::InvalidFaceMap(format!(
            "matrix is {}x{}, expected {t}x{s}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if s == 0 {
        return Ok(());
    }
    let snf = smith_form(matrix);
    if snf.invariants.len() != s {
        return Err(Error::InvalidFaceMap("matrix is not injective".into()));
    }
    if snf.invariants.iter().any(|d| *d != 1) {
        return Err(Error::InvalidFaceMap("image lattice is not saturated".into()));
    }
    let mut images = Vec::with_capacity(source.rays().len());
    for r in source.rays() {
        let img = apply(matrix, r);
        if !target.has_ray(&img) {
            return Err(Error::InvalidFaceMap(format!("ray {r} maps to {img}, not a ray of {target}")));
        }
        images.push(img);
    }
    let face = target.sub_cone(images);
    if !face.is_face_of(target) {
        return Err(Error::InvalidFaceMap(format!("image {face} is not a face of {target}")));
    }
    Ok(())
}

impl GeneralizedConeComplex {
    pub fn new(cones: Vec<Cone>, generators: Vec<FaceMap>) -> Result<Self> {
        Self::with_cap(cones, generators, DEFAULT_CLOSURE_CAP)
    }

    pub fn with_cap(cones: Vec<Cone>, generators: Vec<FaceMap>, cap: usize) -> Result<Self> {
        for c in &cones {
            if !c.is_full_dimensional() {
                return Err(Error::InvalidCone(format!("{c} is not full-dimensional in its lattice")));
            }
        }
        for g in &generators {
            if g.source >= cones.len() || g.target >= cones.len() {
                return Err(Error::InvalidFaceMap(format!("map {} -> {} names a missing cone", g.source, g.target)));
            }
            validate_face_map(&cones[g.source], &cones[g.target], &g.matrix)?;
        }
        let maps = closure(&cones, &generators, cap)?;
        let mut by_pair: HashMap<(ConeId, ConeId), Vec<usize>> = HashMap::new();
        for (i, m) in maps.iter().enumerate() {
            by_pair.entry((m.source, m.target)).or_default().push(i);
        }
        let cx = GeneralizedConeComplex { cones, generators, maps, by_pair };
        cx.check_face_complete()?;
        Ok(cx)
    }

    /// Complex of all faces of the given cones inside one lattice `Z^n`,
    /// with inclusion maps. Returns the complex together with, for each of
    /// its cones, the embedding matrix of its own lattice into `Z^n`.
    pub fn from_embedded(ambient: usize, cones: &[Cone]) -> Result<(Self, Vec<Cone>, Vec<Matrix>)> {
        let mut all: Vec<Cone> = Vec::new();
        let mut seen = HashSet::new();
        let mut push = |c: Cone, all: &mut Vec<Cone>| {
            if seen.insert(c.clone()) {
                all.push(c);
            }
        };
        push(Cone::zero(ambient), &mut all);
        for c in cones {
            if c.rank() != ambient {
                return Err(Error::DimensionMismatch { expected: ambient, found: c.rank() });
            }
            for f in c.faces() {
                push(f, &mut all);
            }
        }
        all.sort_by(|a, b| a.dim().cmp(&b.dim()).then_with(|| a.rays().cmp(b.rays())));
        let mut intrinsic = Vec::with_capacity(all.len());
        let mut embeddings = Vec::with_capacity(all.len());
        for c in &all {
            let (ic, e) = intrinsic_cone(c);
            intrinsic.push(ic);
            embeddings.push(e);
        }
        let index: HashMap<&Cone, usize> = all.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut gens = Vec::new();
        for (t, c) in all.iter().enumerate() {
            for f in c.faces() {
                if f == *c {
                    continue;
                }
                let s = index[&f];
                gens.push(FaceMap::new(s, t, inclusion_matrix(&embeddings[s], &embeddings[t])));
            }
        }
        let cx = GeneralizedConeComplex::new(intrinsic, gens)?;
        Ok((cx, all, embeddings))
    }

    pub fn len(&self) -> usize {
        self.cones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cones.is_empty()
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn cone(&self, id: ConeId) -> &Cone {
        &self.cones[id]
    }

    pub fn generators(&self) -> &[FaceMap] {
        &self.generators
    }

    /// Every map of the composition closure, identities included.
    pub fn maps(&self) -> &[FaceMap] {
        &self.maps
    }

    pub fn maps_between(&self, source: ConeId, target: ConeId) -> impl Iterator<Item = &FaceMap> {
        self.by_pair.get(&(source, target)).into_iter().flatten().map(move |&i| &self.maps[i])
    }

    pub fn maps_into(&self, target: ConeId) -> impl Iterator<Item = &FaceMap> {
        self.maps.iter().filter(move |m| m.target == target)
    }

    pub fn maps_from(&self, source: ConeId) -> impl Iterator<Item = &FaceMap> {
        self.maps.iter().filter(move |m| m.source == source)
    }

    fn map_set(&self) -> HashSet<&FaceMap> {
        self.maps.iter().collect()
    }

    /// The face of the target cone hit by a map.
    pub fn image_face(&self, map: &FaceMap) -> Cone {
        let t = &self.cones[map.target];
        t.sub_cone(self.cones[map.source].rays().iter().map(|r| apply(&map.matrix, r)).collect())
    }

    /// Some closure map whose image is the given face of `target`.
    pub fn realize_face(&self, target: ConeId, face: &Cone) -> Option<&FaceMap> {
        self.maps_into(target).find(|m| self.image_face(m) == *face)
    }

    pub fn is_nonsingular(&self) -> bool {
        self.cones.iter().all(Cone::is_smooth)
    }

    pub fn is_isomorphism_map(&self, map: &FaceMap) -> bool {
        self.cones[map.source].rank() == self.cones[map.target].rank()
    }

    fn check_face_complete(&self) -> Result<()> {
        for (id, c) in self.cones.iter().enumerate() {
            let hit: HashSet<Cone> = self.maps_into(id).map(|m| self.image_face(m)).collect();
            for f in c.faces() {
                if !hit.contains(&f) {
                    return Err(Error::InvalidFaceMap(format!(
                        "face {f} of cone {id} is not the image of any cone (complex not face-complete)"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn closure(cones: &[Cone], generators: &[FaceMap], cap: usize) -> Result<Vec<FaceMap>> {
    let mut seen: HashSet<FaceMap> = HashSet::new();
    let mut out = Vec::new();
    for (i, c) in cones.iter().enumerate() {
        let id = FaceMap::new(i, i, Matrix::identity(c.rank()));
        seen.insert(id.clone());
        out.push(id);
    }
    for g in generators {
        if seen.insert(g.clone()) {
            out.push(g.clone());
        }
    }
    let mut by_source: HashMap<ConeId, Vec<&FaceMap>> = HashMap::new();
    for g in generators {
        by_source.entry(g.source).or_default().push(g);
    }
    let mut i = 0;
    while i < out.len() {
        let m = out[i].clone();
        if let Some(gs) = by_source.get(&m.target) {
            for g in gs {
                let c = g.after(&m);
                if seen.insert(c.clone()) {
                    out.push(c);
                    if out.len() > cap {
                        return Err(Error::BoundExceeded(format!("face map closure exceeds {cap} maps")));
                    }
                }
            }
        }
        i += 1;
    }
    Ok(out)
}

/// Expresses a cone in a basis of its saturated span lattice. Smooth cones
/// use their rays as the basis, so they become standard orthants.
pub fn intrinsic_cone(c: &Cone) -> (Cone, Matrix) {
    let n = c.rank();
    let k = c.dim();
    let basis: Vec<LatticeVector> = if c.is_smooth() {
        c.rays().to_vec()
    } else {
        let a = Matrix::from_rows(c.rays().iter().map(|r| r.0.clone()).collect(), n);
        let snf = smith_form(&a);
        let vinv = invert_unimodular(&snf.v);
        (0..k).map(|i| LatticeVector(vinv.row(i))).collect()
    };
    let rays = c
        .rays()
        .iter()
        .map(|r| {
            LatticeVector(
                solve_combination(&basis, r).expect("ray outside span").iter().map(rat_to_i64).collect(),
            )
        })
        .collect();
    let ic = Cone::new(k, rays).expect("intrinsic cone of a valid cone");
    (ic, columns_matrix(&basis, n))
}

/// Matrix `m` with `outer * m = inner` for nested embeddings.
pub fn inclusion_matrix(inner: &Matrix, outer: &Matrix) -> Matrix {
    let n = outer.nrows();
    let basis: Vec<LatticeVector> =
        (0..outer.ncols()).map(|j| LatticeVector((0..n).map(|i| *outer.get(i, j)).collect())).collect();
    let cols: Vec<LatticeVector> = (0..inner.ncols())
        .map(|j| {
            let v = LatticeVector((0..n).map(|i| *inner.get(i, j)).collect());
            LatticeVector(solve_combination(&basis, &v).expect("not nested").iter().map(rat_to_i64).collect())
        })
        .collect();
    columns_matrix(&cols, outer.ncols())
}

/// Solves `a * x = b` for an injective integer matrix `a`.
pub fn left_divide(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    let n = a.nrows();
    let basis: Vec<LatticeVector> =
        (0..a.ncols()).map(|j| LatticeVector((0..n).map(|i| *a.get(i, j)).collect())).collect();
    let mut cols = Vec::with_capacity(b.ncols());
    for j in 0..b.ncols() {
        let v = LatticeVector((0..n).map(|i| *b.get(i, j)).collect());
        let c = solve_combination(&basis, &v)?;
        if c.iter().any(|x| !x.is_integer()) {
            return None;
        }
        cols.push(LatticeVector(c.iter().map(rat_to_i64).collect()));
    }
    Some(columns_matrix(&cols, a.ncols()))
}

/// At most one face map between any ordered pair of cones.
pub fn is_cone_complex(cx: &GeneralizedConeComplex) -> bool {
    cx.by_pair.values().all(|v| v.len() <= 1)
}

// ---------------------------------------------------------------------------
// Morphisms

/// Per source cone: the target cone and the linear map between their lattices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexMorphism {
    pub components: Vec<(ConeId, Matrix)>,
}

impl ComplexMorphism {
    pub fn identity(cx: &GeneralizedConeComplex) -> Self {
        ComplexMorphism { components: cx.cones.iter().enumerate().map(|(i, c)| (i, Matrix::identity(c.rank()))).collect() }
    }

    /// `self` after `first`.
    pub fn after(&self, first: &ComplexMorphism) -> ComplexMorphism {
        ComplexMorphism {
            components: first
                .components
                .iter()
                .map(|(b, m)| {
                    let (c, n) = &self.components[*b];
                    (*c, n.mul(m))
                })
                .collect(),
        }
    }

    pub fn validate(&self, source: &GeneralizedConeComplex, target: &GeneralizedConeComplex) -> Result<()> {
        if self.components.len() != source.len() {
            return Err(Error::Malformed(format!(
                "morphism has {} components for {} cones",
                self.components.len(),
                source.len()
            )));
        }
        for (i, (j, m)) in self.components.iter().enumerate() {
            if *j >= target.len() {
                return Err(Error::Malformed(format!("component {i} names missing cone {j}")));
            }
            let (s, t) = (source.cone(i), target.cone(*j));
            if m.nrows() != t.rank() || m.ncols() != s.rank() {
                return Err(Error::DimensionMismatch { expected: t.rank(), found: m.nrows() });
            }
            for r in s.rays() {
                if !t.contains(&apply(m, r), crate::lattice::Strictness::Boundary) {
                    return Err(Error::Malformed(format!("component {i} does not map cone into cone {j}")));
                }
            }
        }
        for nu in source.generators() {
            let (jt, mt) = &self.components[nu.source];
            let (js, ms) = &self.components[nu.target];
            let lhs = ms.mul(&nu.matrix);
            if !target.maps_between(*jt, *js).any(|mu| mu.matrix.mul(mt) == lhs) {
                return Err(Error::Malformed(format!(
                    "morphism is not compatible with the face map {} -> {}",
                    nu.source, nu.target
                )));
            }
        }
        Ok(())
    }

    pub fn is_face_map(&self, source: &GeneralizedConeComplex, target: &GeneralizedConeComplex) -> bool {
        self.components
            .iter()
            .enumerate()
            .all(|(i, (j, m))| validate_face_map(source.cone(i), target.cone(*j), m).is_ok())
    }

    /// Every cone class of the target contains the image of some source cone's interior.
    pub fn is_surjective(&self, source: &GeneralizedConeComplex, target: &GeneralizedConeComplex) -> bool {
        let red = reduce(target);
        let mut hit = vec![false; red.complex.len()];
        for (i, (j, m)) in self.components.iter().enumerate() {
            let img = target.cone(*j).sub_cone(source.cone(i).rays().iter().map(|r| apply(m, r)).collect());
            if let Some(mu) = target.realize_face(*j, &img) {
                hit[red.class_of[mu.source]] = true;
            }
        }
        hit.into_iter().all(|h| h)
    }
}

/// Reduced presentation: one representative per isomorphism class.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub complex: GeneralizedConeComplex,
    /// Original cone id of each representative.
    pub reps: Vec<ConeId>,
    /// Class of each original cone.
    pub class_of: Vec<ConeId>,
    /// For each original cone `c`, an isomorphism from its representative onto `c`.
    pub iso_from_rep: Vec<Matrix>,
}

impl Reduction {
    /// The canonical isomorphism from the reduced complex to the original.
    pub fn witness(&self) -> ComplexMorphism {
        ComplexMorphism {
            components: self
                .reps
                .iter()
                .map(|&r| (r, Matrix::identity(self.complex.cone(self.class_of[r]).rank())))
                .collect(),
        }
    }

    /// The map from the original complex to its reduced presentation.
    pub fn to_reduced(&self) -> ComplexMorphism {
        ComplexMorphism {
            components: self
                .class_of
                .iter()
                .zip(&self.iso_from_rep)
                .map(|(&c, iso)| (c, invert_unimodular(iso)))
                .collect(),
        }
    }
}

pub fn reduce(cx: &GeneralizedConeComplex) -> Reduction {
    let n = cx.len();
    // Spanning forest of isomorphisms from the smallest id of each class.
    let mut iso: Vec<Option<Matrix>> = vec![None; n];
    let mut rep_of = vec![usize::MAX; n];
    for start in 0..n {
        if rep_of[start] != usize::MAX {
            continue;
        }
        rep_of[start] = start;
        iso[start] = Some(Matrix::identity(cx.cone(start).rank()));
        let mut stack = vec![start];
        while let Some(c) = stack.pop() {
            let base = iso[c].clone().unwrap();
            let mut next = Vec::new();
            for m in cx.maps_from(c).filter(|m| cx.is_isomorphism_map(m)) {
                if rep_of[m.target] == usize::MAX {
                    next.push((m.target, m.matrix.mul(&base)));
                }
            }
            for m in cx.maps_into(c).filter(|m| cx.is_isomorphism_map(m)) {
                if rep_of[m.source] == usize::MAX {
                    next.push((m.source, invert_unimodular(&m.matrix).mul(&base)));
                }
            }
            for (t, mat) in next {
                if rep_of[t] == usize::MAX {
                    rep_of[t] = start;
                    iso[t] = Some(mat);
                    stack.push(t);
                }
            }
        }
    }
    let mut reps: Vec<ConeId> = rep_of.clone();
    reps.sort();
    reps.dedup();
    let class_index: HashMap<ConeId, usize> = reps.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let class_of: Vec<ConeId> = rep_of.iter().map(|r| class_index[r]).collect();
    let iso_from_rep: Vec<Matrix> = iso.into_iter().map(Option::unwrap).collect();
    let cones: Vec<Cone> = reps.iter().map(|&r| cx.cone(r).clone()).collect();
    let mut seen = HashSet::new();
    let mut gens = Vec::new();
    for m in cx.maps() {
        let a = m.source;
        let b = m.target;
        let mat = invert_unimodular(&iso_from_rep[b]).mul(&m.matrix).mul(&iso_from_rep[a]);
        let fm = FaceMap::new(class_of[a], class_of[b], mat);
        if seen.insert(fm.clone()) {
            gens.push(fm);
        }
    }
    let complex = GeneralizedConeComplex::new(cones, gens).expect("reduction of a valid complex");
    Reduction { complex, reps, class_of, iso_from_rep }
}

/// Combinatorial isomorphism test: a face map inducing a bijection on cone
/// classes whose linear parts identify the automorphism groups.
pub fn is_isomorphism(
    phi: &ComplexMorphism,
    source: &GeneralizedConeComplex,
    target: &GeneralizedConeComplex,
) -> bool {
    if phi.validate(source, target).is_err() || !phi.is_face_map(source, target) {
        return false;
    }
    let rs = reduce(source);
    let rt = reduce(target);
    if rs.complex.len() != rt.complex.len() {
        return false;
    }
    let mut image_class = vec![usize::MAX; rs.complex.len()];
    let mut linear = vec![None; rs.complex.len()];
    for (class, &orig) in rs.reps.iter().enumerate() {
        let (j, m) = &phi.components[orig];
        let face = target.cone(*j).sub_cone(source.cone(orig).rays().iter().map(|r| apply(m, r)).collect());
        let Some(kappa) = target.realize_face(*j, &face) else {
            return false;
        };
        let Some(l) = left_divide(&kappa.matrix, m) else {
            return false;
        };
        // Express in the target representative's coordinates.
        let tclass = rt.class_of[kappa.source];
        let l = invert_unimodular(&rt.iso_from_rep[kappa.source]).mul(&l);
        image_class[class] = tclass;
        linear[class] = Some(l);
    }
    let mut sorted = image_class.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != image_class.len() {
        return false;
    }
    for class in 0..rs.complex.len() {
        let l = linear[class].as_ref().unwrap();
        if l.nrows() != l.ncols() {
            return false;
        }
        let linv = invert_unimodular(l);
        let src_aut: HashSet<Matrix> =
            rs.complex.maps_between(class, class).map(|a| l.mul(&a.matrix).mul(&linv)).collect();
        let t = image_class[class];
        let tgt_aut: HashSet<Matrix> = rt.complex.maps_between(t, t).map(|a| a.matrix.clone()).collect();
        if src_aut != tgt_aut {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Piecewise linear data

/// Functionals whose region of minimality is full-dimensional in the cone,
/// deduplicated and sorted. Two conewise minima agree on the cone exactly
/// when these sets agree.
pub fn essential_functionals(cone: &Cone, fs: &[Functional]) -> Vec<Functional> {
    let mut fs: Vec<Functional> = fs.to_vec();
    fs.sort();
    fs.dedup();
    if fs.len() <= 1 || cone.rank() == 0 {
        fs.truncate(1);
        return fs;
    }
    let normals = cone.facet_normals();
    let d = cone.rank();
    fs.iter()
        .filter(|l| {
            // maximize t: normal.v >= t, (l' - l).v >= t, t <= 1
            let mut lp = LinearProgram::<Rational>::new(d + 1, Sense::Maximize);
            for j in 0..=d {
                lp.set_free(j);
            }
            let mut obj = vec![Rational::zero(); d + 1];
            obj[d] = Rational::one();
            lp.set_objective(obj);
            let row_ge_t = |coeffs: &[i64], lp: &mut LinearProgram<Rational>| {
                let mut row: Vec<Rational> = coeffs.iter().map(|&x| rat(x)).collect();
                row.push(-Rational::one());
                lp.add(row, Relation::Ge, Rational::zero());
            };
            for nrm in &normals {
                row_ge_t(&nrm.0, &mut lp);
            }
            for other in fs.iter().filter(|o| o != l) {
                row_ge_t(&other.sub(l).0, &mut lp);
            }
            let mut cap = vec![Rational::zero(); d + 1];
            cap[d] = Rational::one();
            lp.add(cap, Relation::Le, Rational::one());
            matches!(lp.solve(), LpOutcome::Optimal { value, .. } if value.is_positive())
        })
        .cloned()
        .collect()
}

/// Conewise minimum of integral linear functionals, compatible with face maps.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PLDatum {
    pieces: Vec<Vec<Functional>>,
}

impl PLDatum {
    pub fn new(cx: &GeneralizedConeComplex, pieces: Vec<Vec<Functional>>) -> Result<Self> {
        if pieces.len() != cx.len() {
            return Err(Error::NotPlDatum(format!("{} pieces for {} cones", pieces.len(), cx.len())));
        }
        let mut canon = Vec::with_capacity(pieces.len());
        for (i, fs) in pieces.into_iter().enumerate() {
            if fs.is_empty() {
                return Err(Error::NotPlDatum(format!("cone {i} has no functionals")));
            }
            let rank = cx.cone(i).rank();
            if let Some(bad) = fs.iter().find(|f| f.dim() != rank) {
                return Err(Error::NotPlDatum(format!(
                    "functional {bad} on cone {i} has length {}, cone rank {rank}",
                    bad.dim()
                )));
            }
            canon.push(essential_functionals(cx.cone(i), &fs));
        }
        let datum = PLDatum { pieces: canon };
        for nu in cx.generators() {
            if datum.restrict(cx, nu) != datum.pieces[nu.source] {
                return Err(Error::NotPlDatum(format!(
                    "values on cone {} disagree with cone {} along a face map",
                    nu.source, nu.target
                )));
            }
        }
        Ok(datum)
    }

    /// Datum given on some cones and induced on every cone mapping into one of them.
    pub fn from_maximal(cx: &GeneralizedConeComplex, assigned: &[(ConeId, Vec<Functional>)]) -> Result<Self> {
        let mut pieces = Vec::with_capacity(cx.len());
        for i in 0..cx.len() {
            let found = assigned.iter().find_map(|(t, fs)| {
                cx.maps_between(i, *t).next().map(|m| fs.iter().map(|l| pull_functional(&m.matrix, l)).collect::<Vec<_>>())
            });
            match found {
                Some(fs) => pieces.push(fs),
                None => return Err(Error::NotPlDatum(format!("cone {i} is not a face of an assigned cone"))),
            }
        }
        PLDatum::new(cx, pieces)
    }

    pub fn zero(cx: &GeneralizedConeComplex) -> Self {
        PLDatum { pieces: cx.cones().iter().map(|c| vec![Functional::zero(c.rank())]).collect() }
    }

    pub fn pieces(&self) -> &[Vec<Functional>] {
        &self.pieces
    }

    pub fn on(&self, id: ConeId) -> &[Functional] {
        &self.pieces[id]
    }

    pub fn eval(&self, id: ConeId, v: &LatticeVector) -> i64 {
        self.pieces[id].iter().map(|l| l.pair(v)).min().expect("nonempty datum")
    }

    /// `f_target ∘ map` as essential functionals on the source.
    pub fn restrict(&self, cx: &GeneralizedConeComplex, map: &FaceMap) -> Vec<Functional> {
        let pulled: Vec<Functional> =
            self.pieces[map.target].iter().map(|l| pull_functional(&map.matrix, l)).collect();
        essential_functionals(cx.cone(map.source), &pulled)
    }

    /// Vanishes identically on the cone.
    pub fn is_zero_on(&self, id: ConeId) -> bool {
        self.pieces[id].len() == 1 && self.pieces[id][0].0.iter().all(|&x| x == 0)
    }

    /// Pullback along a face map of complexes.
    pub fn pullback(
        &self,
        phi: &ComplexMorphism,
        source: &GeneralizedConeComplex,
        target: &GeneralizedConeComplex,
    ) -> Result<PLDatum> {
        if !phi.is_face_map(source, target) {
            return Err(Error::InvalidFaceMap("pullback needs a face map".into()));
        }
        let pieces = phi
            .components
            .iter()
            .map(|(j, m)| self.pieces[*j].iter().map(|l| pull_functional(m, l)).collect())
            .collect();
        PLDatum::new(source, pieces)
    }
}

// ---------------------------------------------------------------------------
// Final objects

#[derive(Clone, Debug)]
pub struct FinalObject {
    /// Reduced, canonical presentation: each class is a standard orthant.
    pub complex: GeneralizedConeComplex,
    pub g: ComplexMorphism,
    pub datum: PLDatum,
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn injections(a: usize, b: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(a: usize, b: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == a {
            out.push(cur.clone());
            return;
        }
        for t in 0..b {
            if !cur.contains(&t) {
                cur.push(t);
                rec(a, b, cur, out);
                cur.pop();
            }
        }
    }
    rec(a, b, &mut Vec::new(), &mut out);
    out
}

/// Matrix sending `e_j` of `Z^a` to `e_{img[j]}` of `Z^b`.
pub fn coordinate_embedding(img: &[usize], b: usize) -> Matrix {
    let mut m = Matrix::zeros(b, img.len());
    for (j, &t) in img.iter().enumerate() {
        m.set(t, j, 1);
    }
    m
}

/// Final object of a nonsingular complex with PL datum: the same cones with
/// every datum-compatible face map, in a canonical reduced presentation.
pub fn final_object(cx: &GeneralizedConeComplex, f: &PLDatum) -> Result<FinalObject> {
    if let Some((i, c)) = cx.cones().iter().enumerate().find(|(_, c)| !c.is_smooth()) {
        return Err(Error::NotNonsingular(format!("cone {i} = {c} is not smooth")));
    }
    if f.pieces.len() != cx.len() {
        return Err(Error::NotPlDatum("datum does not match complex".into()));
    }
    for nu in cx.generators() {
        if f.restrict(cx, nu) != f.pieces[nu.source] {
            return Err(Error::NotPlDatum(format!("incompatible along {} -> {}", nu.source, nu.target)));
        }
    }
    // Canonical key per cone: dimension and lexicographically least datum over
    // all orderings of its rays.
    let mut keys: Vec<(usize, Vec<Functional>)> = Vec::with_capacity(cx.len());
    let mut chart: Vec<Matrix> = Vec::with_capacity(cx.len());
    for (i, c) in cx.cones().iter().enumerate() {
        let k = c.rank();
        let mut best: Option<(Vec<Functional>, Matrix)> = None;
        for p in permutations(k) {
            let cols: Vec<LatticeVector> = p.iter().map(|&j| c.rays()[j].clone()).collect();
            let a = columns_matrix(&cols, k);
            let mut fs: Vec<Functional> = f.pieces[i].iter().map(|l| pull_functional(&a, l)).collect();
            fs.sort();
            if best.as_ref().map_or(true, |(b, _)| fs < *b) {
                best = Some((fs, a));
            }
        }
        let (fs, a) = best.unwrap();
        keys.push((k, fs));
        chart.push(a);
    }
    let mut classes: Vec<(usize, Vec<Functional>)> = keys.clone();
    classes.sort();
    classes.dedup();
    let class_index: BTreeMap<&(usize, Vec<Functional>), usize> =
        classes.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let cones: Vec<Cone> = classes.iter().map(|(k, _)| Cone::orthant(*k)).collect();
    let pieces: Vec<Vec<Functional>> = classes.iter().map(|(_, fs)| fs.clone()).collect();
    let mut gens = Vec::new();
    for (s, (a, fa)) in classes.iter().enumerate() {
        for (t, (b, fb)) in classes.iter().enumerate() {
            if a > b {
                continue;
            }
            for img in injections(*a, *b) {
                let m = coordinate_embedding(&img, *b);
                let pulled: Vec<Functional> = fb.iter().map(|l| pull_functional(&m, l)).collect();
                if essential_functionals(&cones[s], &pulled) == *fa {
                    gens.push(FaceMap::new(s, t, m));
                }
            }
        }
    }
    let complex = GeneralizedConeComplex::new(cones, gens)?;
    let datum = PLDatum { pieces };
    let g = ComplexMorphism {
        components: keys.iter().zip(&chart).map(|(k, a)| (class_index[k], invert_unimodular(a))).collect(),
    };
    Ok(FinalObject { complex, g, datum })
}

/// Checks that `g` factors any surjective face map `h: cx -> other` carrying
/// the datum: there is `g2` with `g = g2 ∘ h`. Returns the factor.
pub fn factor_through(
    fo: &FinalObject,
    h: &ComplexMorphism,
    other: &GeneralizedConeComplex,
    other_datum: &PLDatum,
) -> Result<ComplexMorphism> {
    let fo2 = final_object(other, other_datum)?;
    if fo2.complex != fo.complex {
        return Err(Error::Malformed("final objects differ".into()));
    }
    // g2 := fo2.g; verify g == g2 ∘ h up to automorphisms of the final object.
    let composed = fo2.g.after(h);
    for (i, ((c1, m1), (c2, m2))) in fo.g.components.iter().zip(&composed.components).enumerate() {
        if c1 != c2 {
            return Err(Error::Malformed(format!("cone {i} lands in different classes")));
        }
        let ok = fo.complex.maps_between(*c1, *c1).any(|a| a.matrix.mul(m2) == *m1);
        if !ok {
            return Err(Error::Malformed(format!("cone {i}: components differ by a non-automorphism")));
        }
    }
    Ok(fo2.g)
}
