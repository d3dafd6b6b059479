//! Toric birational cobordisms over a smooth affine chart, their weights,
//! walls, GIT quotients and the resulting zigzag.
//!
//! Everything lives in `Z^{n+1} = N ⊕ Z` with the action cocharacter
//! `u = e_{n+1}`. The weight certificate is a conewise minimum `h` on all of
//! `σ × R` whose pieces are the maximal cones of the smooth cobordism fan.
//! With the min convention the slope of `h` along `u` is the grading weight.

use std::collections::{BTreeMap, BTreeSet};

use crate::lattice::{Cone, Functional, LatticeVector};
use crate::subdiv::{certify_fan_refinement, desingularize_fan, linearity_domains, Fan, MonomialIdeal};
use crate::{Error, Matrix, Result};

/// Cap on the stars used to resolve the intermediate cobordism.
pub const MAX_RESOLUTION_STEPS: usize = 10_000;

/// A monomial term `x^m U_1^a T_1^b` (with the complementary `U_0`, `T_0`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GradedTerm {
    pub monomial: Functional,
    pub u1: u8,
    pub t1: u8,
}

impl GradedTerm {
    pub fn weight(&self) -> u8 {
        self.u1 + self.t1
    }
}

/// Generators of the rank-four bundle with weights 0, 1 and 2 built from an ideal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedBundle {
    pub ideal: MonomialIdeal,
    pub by_weight: [Vec<GradedTerm>; 3],
}

/// One term `I^p T_0^j T_1^k` of a homogeneous slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SliceTerm {
    pub ideal_power: u32,
    pub t0: u32,
    pub t1: u32,
}

impl GradedBundle {
    /// Terms of degree `d` of the homogeneous algebra:
    /// `I^{max(j-d,0)} T_0^j T_1^{2d-j}` for `j = 2d, ..., 0`.
    pub fn slice(&self, d: u32) -> Vec<SliceTerm> {
        (0..=2 * d)
            .rev()
            .map(|j| SliceTerm { ideal_power: j.saturating_sub(d), t0: j, t1: 2 * d - j })
            .collect()
    }
}

/// `I U_0 T_0 ⊕ (O U_1 T_0 ⊕ I U_0 T_1) ⊕ O U_1 T_1`, by weight.
pub fn build_graded_bundle(ideal: &MonomialIdeal) -> GradedBundle {
    let n = ideal.base().rank();
    let unit = Functional::zero(n);
    let gens = ideal.generators();
    let w0 = gens.iter().map(|m| GradedTerm { monomial: m.clone(), u1: 0, t1: 0 }).collect();
    let mut w1 = vec![GradedTerm { monomial: unit.clone(), u1: 1, t1: 0 }];
    w1.extend(gens.iter().map(|m| GradedTerm { monomial: m.clone(), u1: 0, t1: 1 }));
    let w2 = vec![GradedTerm { monomial: unit, u1: 1, t1: 1 }];
    GradedBundle { ideal: ideal.clone(), by_weight: [w0, w1, w2] }
}

/// The smooth cobordism fan with its weight certificate.
#[derive(Clone, Debug)]
pub struct CobordismFan {
    pub ideal: MonomialIdeal,
    /// Rank of the base lattice; the cobordism lives in rank + 1.
    pub rank: usize,
    /// The two cones `σ + <u>` and `σ + <-u>`.
    pub sigma_o: Fan,
    /// Domains of linearity of the support function (possibly singular).
    pub intermediate: Fan,
    /// Smooth refinement of `intermediate`.
    pub total: Fan,
    /// One functional per maximal cone of `total`, aligned with `total.cones()`.
    pub certificate: Vec<Functional>,
    /// `a_max = 2 * d` for this certificate.
    pub d: i64,
    pub doubled: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WeightInterval {
    pub min: i64,
    pub max: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WallChamberData {
    pub walls: Vec<i64>,
    /// Open intervals `(a_i, a_{i+1})`.
    pub chambers: Vec<(i64, i64)>,
}

fn lift(v: &LatticeVector, s: i64) -> LatticeVector {
    let mut c = v.0.clone();
    c.push(s);
    LatticeVector(c)
}

fn lift_functional(m: &Functional, s: i64) -> Functional {
    let mut c = m.0.clone();
    c.push(s);
    Functional(c)
}

/// The projection `N ⊕ Z -> N`.
pub fn projection(rank: usize) -> Matrix {
    let mut m = Matrix::zeros(rank, rank + 1);
    for i in 0..rank {
        m.set(i, i, 1);
    }
    m
}

/// Interior walls: `(left, right, ray of left only, ray of right only)`.
fn walls_of(fan: &Fan) -> Vec<(usize, usize, LatticeVector, LatticeVector)> {
    let cones = fan.cones();
    let mut out = Vec::new();
    for (a, ca) in cones.iter().enumerate() {
        for (b, cb) in cones.iter().enumerate().skip(a + 1) {
            let shared = ca.rays().iter().filter(|r| cb.has_ray(r)).count();
            if shared + 1 == ca.rays().len() && ca.rays().len() == cb.rays().len() {
                let ra = ca.rays().iter().find(|r| !cb.has_ray(r)).unwrap().clone();
                let rb = cb.rays().iter().find(|r| !ca.has_ray(r)).unwrap().clone();
                out.push((a, b, ra, rb));
            }
        }
    }
    out
}

/// Builds the cobordism for a nontrivial ideal. With `double` the
/// certificate is doubled once so walls are at least two apart.
pub fn build_cobordism(ideal: &MonomialIdeal, double: bool) -> Result<CobordismFan> {
    if ideal.is_unit() {
        return Err(Error::Malformed("the unit ideal gives a trivial blowup".into()));
    }
    let base = ideal.base();
    let n = base.rank();
    let u = LatticeVector::unit(n + 1, n);
    let base_rays: Vec<LatticeVector> = base.rays().iter().map(|r| lift(r, 0)).collect();
    let upper = Cone::new(n + 1, base_rays.iter().cloned().chain([u.clone()]).collect())?;
    let lower = Cone::new(n + 1, base_rays.iter().cloned().chain([u.scale(-1)]).collect())?;
    let sigma_o = Fan::new(n + 1, vec![upper.clone(), lower.clone()])?;

    // Support function on the upper cone: min(f_I(v), s); zero on the lower one.
    let mut upper_fs: Vec<Functional> = ideal.generators().iter().map(|m| lift_functional(m, 0)).collect();
    upper_fs.push(Functional::unit_like(n + 1, n, 1));
    let cells = linearity_domains(&upper, &upper_fs)?;
    let ess = crate::complex::essential_functionals(&upper, &upper_fs);
    let mut cell_functional: Vec<(Cone, Functional)> = cells.into_iter().zip(ess).collect();
    // The weight function continues with slope 2 below.
    cell_functional.push((lower.clone(), Functional::unit_like(n + 1, n, 2)));
    let intermediate = Fan::new(n + 1, cell_functional.iter().map(|(c, _)| c.clone()).collect())?;
    let (total, _) = desingularize_fan(&intermediate, MAX_RESOLUTION_STEPS)?;

    let h_i: Vec<Functional> = total
        .cones()
        .iter()
        .map(|t| {
            cell_functional
                .iter()
                .find(|(c, _)| c.contains_cone(t))
                .map(|(_, f)| f.clone())
                .expect("resolution refines the intermediate fan")
        })
        .collect();
    let g = if total == intermediate {
        vec![Functional::zero(n + 1); total.cones().len()]
    } else {
        certify_fan_refinement(n + 1, sigma_o.cones(), &intermediate, &total)?
            .ok_or_else(|| Error::Infeasible("resolution is not projective over the intermediate fan".into()))?
    };
    // Smallest d making d * h_I + g strictly concave across every wall.
    let mut d: i64 = 1;
    for (a, b, ra, rb) in walls_of(&total) {
        for (from, to, r) in [(a, b, &rb), (b, a, &ra)] {
            let hm = h_i[from].pair(r) - h_i[to].pair(r);
            let gm = g[from].pair(r) - g[to].pair(r);
            if hm < 0 {
                return Err(Error::Malformed("support function is not concave".into()));
            }
            if hm == 0 {
                if gm < 1 {
                    return Err(Error::Malformed("relative certificate is not strict".into()));
                }
                continue;
            }
            let need = (1 - gm + hm - 1).div_euclid(hm);
            d = d.max(need);
        }
    }
    let mut certificate: Vec<Functional> = h_i.iter().zip(&g).map(|(h, gg)| h.scale(d).add(gg)).collect();
    if double {
        certificate = certificate.iter().map(|f| f.scale(2)).collect();
        d *= 2;
    }
    let cob = CobordismFan { ideal: ideal.clone(), rank: n, sigma_o, intermediate, total, certificate, d, doubled: double };
    // Spread: both ends of the weight range are realized.
    let (lo, hi) = cob.weight_range();
    if lo >= hi {
        return Err(Error::Malformed("cobordism has a single weight".into()));
    }
    Ok(cob)
}

impl Functional {
    /// `k * e_i^*` in rank `n`.
    pub fn unit_like(n: usize, i: usize, k: i64) -> Functional {
        let mut v = vec![0; n];
        v[i] = k;
        Functional(v)
    }
}

impl CobordismFan {
    pub fn u(&self) -> LatticeVector {
        LatticeVector::unit(self.rank + 1, self.rank)
    }

    /// Weight of each maximal cone, aligned with `total.cones()`.
    pub fn cone_weights(&self) -> Vec<i64> {
        let u = self.u();
        self.certificate.iter().map(|h| h.pair(&u)).collect()
    }

    /// `[wmin, wmax]` for every cone of the total fan.
    pub fn weight_intervals(&self) -> BTreeMap<Cone, WeightInterval> {
        let w = self.cone_weights();
        let mut out: BTreeMap<Cone, WeightInterval> = BTreeMap::new();
        for (tau, &wt) in self.total.cones().iter().zip(&w) {
            for face in tau.faces() {
                out.entry(face)
                    .and_modify(|iv| {
                        iv.min = iv.min.min(wt);
                        iv.max = iv.max.max(wt);
                    })
                    .or_insert(WeightInterval { min: wt, max: wt });
            }
        }
        out
    }

    /// `(a_min, a_max)`.
    pub fn weight_range(&self) -> (i64, i64) {
        let w = self.cone_weights();
        (*w.iter().min().unwrap(), *w.iter().max().unwrap())
    }

    /// Walls: cones with a singleton interval that are maximal among cones
    /// with that interval, which are exactly the maximal cones here.
    pub fn walls(&self) -> Result<WallChamberData> {
        let mut walls: BTreeSet<i64> = BTreeSet::new();
        let intervals = self.weight_intervals();
        for (c, iv) in &intervals {
            if iv.min != iv.max {
                continue;
            }
            let maximal = !intervals.iter().any(|(o, ov)| {
                ov == iv && o != c && c.rays().iter().all(|r| o.has_ray(r)) && o.rays().len() > c.rays().len()
            });
            if maximal {
                walls.insert(iv.min);
            }
        }
        let walls: Vec<i64> = walls.into_iter().collect();
        if self.doubled && walls.windows(2).any(|w| w[0] + 1 >= w[1]) {
            return Err(Error::Malformed("walls closer than two after doubling".into()));
        }
        let chambers = walls.windows(2).map(|w| (w[0], w[1])).collect();
        Ok(WallChamberData { walls, chambers })
    }

    /// Cones with `wmin <= a <= wmax`, faces included, in canonical order.
    pub fn semistable_subfan(&self, a: i64) -> Vec<Cone> {
        let mut out: Vec<Cone> =
            self.weight_intervals().into_iter().filter(|(_, iv)| iv.min <= a && a <= iv.max).map(|(c, _)| c).collect();
        out.sort_by(|x, y| x.dim().cmp(&y.dim()).then_with(|| x.rays().cmp(y.rays())));
        out
    }

    fn project(&self, c: &Cone) -> Result<Cone> {
        let p = projection(self.rank);
        Cone::hull(self.rank, c.rays().iter().map(|r| crate::lattice::apply(&p, r)).collect())
    }

    /// Quotient at a weight strictly inside a chamber.
    pub fn git_quotient(&self, a: i64) -> Result<Fan> {
        let w = self.walls()?;
        if w.walls.contains(&a) {
            return Err(Error::NotGeometricChamber(format!("{a} is a wall")));
        }
        let sst = self.semistable_subfan(a);
        if sst.is_empty() {
            return Err(Error::NotGeometricChamber(format!("{a} is outside the weight range")));
        }
        let mut images = Vec::new();
        for c in &sst {
            let img = self.project(c)?;
            if img.dim() != c.dim() {
                return Err(Error::NotGeometricChamber(format!("projection collapses the semistable cone {c}")));
            }
            images.push(img);
        }
        Fan::new(self.rank, images)
    }

    /// Quotient at a wall: maximal projected images of semistable cones.
    pub fn wall_quotient(&self, a: i64) -> Result<Fan> {
        let sst = self.semistable_subfan(a);
        if sst.is_empty() {
            return Err(Error::NotGeometricChamber(format!("{a} is outside the weight range")));
        }
        let images: Vec<Cone> = sst.iter().map(|c| self.project(c)).collect::<Result<Vec<_>>>()?;
        let maximal: Vec<Cone> = images
            .iter()
            .filter(|c| !images.iter().any(|o| o != *c && o.contains_cone(c)))
            .cloned()
            .collect();
        let fan = Fan::new(self.rank, maximal)?;
        if !fan.is_fan() {
            return Err(Error::NotGeometricChamber(format!("wall quotient at {a} is not a fan")));
        }
        Ok(fan)
    }

    /// Faces of the base chart on which the ideal is the unit ideal.
    pub fn unit_locus(&self) -> Vec<Cone> {
        self.ideal
            .base()
            .faces()
            .into_iter()
            .filter(|f| self.ideal.generators().iter().any(|m| f.rays().iter().all(|r| m.pair(r) == 0)))
            .collect()
    }

    pub fn zigzag(&self) -> Result<Zigzag> {
        let w = self.walls()?;
        let base = Fan::single(self.ideal.base().clone());
        let base_cones = base.cones().to_vec();
        let mut stages = Vec::new();
        for (i, &a) in w.walls.iter().enumerate() {
            stages.push(ZigzagStage { weight: a, is_wall: true, fan: self.wall_quotient(a)? });
            if i + 1 < w.walls.len() {
                let c = a + 1;
                stages.push(ZigzagStage { weight: c, is_wall: false, fan: self.git_quotient(c)? });
            }
        }
        let mut maps = Vec::new();
        for (k, st) in stages.iter().enumerate() {
            if st.is_wall {
                continue;
            }
            for wall in [k - 1, k + 1] {
                let coarse = &stages[wall].fan;
                if !st.fan.refines(coarse) {
                    return Err(Error::Malformed(format!(
                        "chamber quotient at {} does not refine the wall quotient at {}",
                        st.weight, stages[wall].weight
                    )));
                }
                let cert = certify_fan_refinement(self.rank, &base_cones, coarse, &st.fan)?.ok_or_else(|| {
                    Error::Infeasible(format!("quotient at {} is not projective over {}", st.weight, stages[wall].weight))
                })?;
                maps.push(ZigzagMap { chamber: k, wall, certificate: cert });
            }
        }
        let unit = self.unit_locus();
        for st in &stages {
            for face in &unit {
                let restricted: Vec<Cone> = st
                    .fan
                    .all_cones()
                    .into_iter()
                    .filter(|c| c.dim() == face.dim() && face.contains_cone(c))
                    .collect();
                if restricted != vec![face.clone()] {
                    return Err(Error::Malformed(format!("stage at {} changes the unit locus face {face}", st.weight)));
                }
            }
        }
        Ok(Zigzag { stages, maps })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZigzagStage {
    pub weight: i64,
    pub is_wall: bool,
    pub fan: Fan,
}

/// A certified projective map from a chamber quotient to a wall quotient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZigzagMap {
    pub chamber: usize,
    pub wall: usize,
    pub certificate: Vec<Functional>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Zigzag {
    pub stages: Vec<ZigzagStage>,
    pub maps: Vec<ZigzagMap>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(c: &[i64]) -> Functional {
        Functional(c.to_vec())
    }

    fn v(c: &[i64]) -> LatticeVector {
        LatticeVector(c.to_vec())
    }

    fn xy() -> MonomialIdeal {
        MonomialIdeal::new(Cone::orthant(2), vec![f(&[1, 0]), f(&[0, 1])]).unwrap()
    }

    #[test]
    fn graded_pieces_of_maximal_ideal() {
        let e = build_graded_bundle(&xy());
        assert_eq!(e.by_weight[0].len(), 2);
        assert_eq!(e.by_weight[1].len(), 3);
        assert_eq!(e.by_weight[2].len(), 1);
        let s = e.slice(1);
        assert_eq!(s[0], SliceTerm { ideal_power: 1, t0: 2, t1: 0 });
        assert_eq!(s[1], SliceTerm { ideal_power: 0, t0: 1, t1: 1 });
        assert_eq!(s[2], SliceTerm { ideal_power: 0, t0: 0, t1: 2 });
    }

    #[test]
    fn maximal_ideal_cobordism() {
        let b = build_cobordism(&xy(), false).unwrap();
        assert_eq!(b.intermediate, b.total);
        assert!(b.total.rays().contains(&v(&[1, 1, 1])));
        assert_eq!(b.walls().unwrap().walls, vec![0, 1, 2]);
        let b2 = build_cobordism(&xy(), true).unwrap();
        assert_eq!(b2.walls().unwrap().walls, vec![0, 2, 4]);
        assert_eq!(b2.weight_range(), (0, 2 * b2.d));
        let x1 = b2.git_quotient(1).unwrap();
        let star = Fan::new(
            2,
            vec![Cone::new(2, vec![v(&[1, 0]), v(&[1, 1])]).unwrap(), Cone::new(2, vec![v(&[0, 1]), v(&[1, 1])]).unwrap()],
        )
        .unwrap();
        assert_eq!(x1, star);
        assert_eq!(b2.git_quotient(3).unwrap(), Fan::single(Cone::orthant(2)));
        assert!(b2.semistable_subfan(-1).is_empty());
        assert!(matches!(b2.git_quotient(2), Err(Error::NotGeometricChamber(_))));
        let z = b2.zigzag().unwrap();
        assert_eq!(z.stages.len(), 5);
        assert_eq!(z.stages[0].fan, star);
        assert_eq!(z.stages[4].fan, Fan::single(Cone::orthant(2)));
    }

    #[test]
    fn line_cobordism_is_identity() {
        let i = MonomialIdeal::new(Cone::orthant(1), vec![f(&[1])]).unwrap();
        let b = build_cobordism(&i, true).unwrap();
        assert_eq!(b.walls().unwrap().walls, vec![0, 2, 4]);
        for st in b.zigzag().unwrap().stages {
            assert_eq!(st.fan, Fan::single(Cone::orthant(1)));
        }
    }

    #[test]
    fn unit_ideal_rejected() {
        assert!(build_cobordism(&MonomialIdeal::unit(Cone::orthant(2)).unwrap(), true).is_err());
    }

    #[test]
    fn singular_intermediate_is_resolved() {
        let i = MonomialIdeal::new(Cone::orthant(2), vec![f(&[2, 0]), f(&[0, 1])]).unwrap();
        let b = build_cobordism(&i, true).unwrap();
        assert!(b.total.is_smooth());
        assert_eq!(b.weight_range(), (0, 2 * b.d));
    }
}
