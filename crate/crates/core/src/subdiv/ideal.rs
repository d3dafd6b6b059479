//! Monomial ideals on a smooth affine chart and their order functions.

use crate::complex::{essential_functionals, GeneralizedConeComplex, PLDatum};
use crate::lattice::{columns_matrix, invert_unimodular, pull_functional, Cone, Functional, LatticeVector};
use crate::{Error, Matrix, Result};

use super::linearity_domains;

/// Torus-invariant ideal on the affine chart of a smooth full-dimensional
/// cone, given by minimal exponent vectors in the dual lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MonomialIdeal {
    base: Cone,
    generators: Vec<Functional>,
}

fn ray_matrix(base: &Cone) -> Matrix {
    columns_matrix(base.rays(), base.rank())
}

impl MonomialIdeal {
    pub fn new(base: Cone, generators: Vec<Functional>) -> Result<Self> {
        if !base.is_full_dimensional() || !base.is_smooth() {
            return Err(Error::NotNonsingular(format!("ideal chart {base} must be smooth and full-dimensional")));
        }
        if generators.is_empty() {
            return Err(Error::Malformed("ideal needs at least one generator".into()));
        }
        for g in &generators {
            if g.dim() != base.rank() {
                return Err(Error::DimensionMismatch { expected: base.rank(), found: g.dim() });
            }
            if base.rays().iter().any(|r| g.pair(r) < 0) {
                return Err(Error::Malformed(format!("exponent {g} is negative on the chart")));
            }
        }
        let gens = minimalize(&base, generators);
        Ok(MonomialIdeal { base, generators: gens })
    }

    pub fn unit(base: Cone) -> Result<Self> {
        let n = base.rank();
        MonomialIdeal::new(base, vec![Functional::zero(n)])
    }

    pub fn base(&self) -> &Cone {
        &self.base
    }

    pub fn generators(&self) -> &[Functional] {
        &self.generators
    }

    pub fn is_unit(&self) -> bool {
        self.generators.len() == 1 && self.generators[0].0.iter().all(|&x| x == 0)
    }

    pub fn product(&self, other: &MonomialIdeal) -> Result<MonomialIdeal> {
        let mut gens = Vec::new();
        for a in &self.generators {
            for b in &other.generators {
                gens.push(a.add(b));
            }
        }
        MonomialIdeal::new(self.base.clone(), gens)
    }

    pub fn power(&self, k: u32) -> Result<MonomialIdeal> {
        let mut acc = MonomialIdeal::unit(self.base.clone())?;
        for _ in 0..k {
            acc = acc.product(self)?;
        }
        Ok(acc)
    }
}

/// Drops generators divisible by another one; sorts lexicographically.
fn minimalize(base: &Cone, mut gens: Vec<Functional>) -> Vec<Functional> {
    gens.sort();
    gens.dedup();
    let divides = |a: &Functional, b: &Functional| base.rays().iter().all(|r| b.sub(a).pair(r) >= 0);
    gens.iter().filter(|g| !gens.iter().any(|o| o != *g && divides(o, g))).cloned().collect()
}

/// The order function `v -> min <m, v>` on the complex of faces of the chart.
pub fn pl_from_ideal(ideal: &MonomialIdeal) -> Result<(GeneralizedConeComplex, PLDatum)> {
    let n = ideal.base.rank();
    let (cx, _, embeddings) = GeneralizedConeComplex::from_embedded(n, std::slice::from_ref(&ideal.base))?;
    let pieces = embeddings
        .iter()
        .map(|e| ideal.generators.iter().map(|m| pull_functional(e, m)).collect())
        .collect();
    let f = PLDatum::new(&cx, pieces)?;
    Ok((cx, f))
}

/// Ideal of monomials `m` with `<m, .> >= f` on the chart, minimally
/// generated. With `normalize`, the largest linear functional below `f` is
/// first subtracted and returned as the invertible factor; otherwise the
/// returned factor is zero and `f` must be nonnegative.
pub fn ideal_from_pl(base: &Cone, f: &PLDatum, normalize: bool) -> Result<(MonomialIdeal, Functional)> {
    let n = base.rank();
    if !base.is_full_dimensional() || !base.is_smooth() {
        return Err(Error::NotNonsingular(format!("ideal chart {base} must be smooth and full-dimensional")));
    }
    let top = f.pieces().len().checked_sub(1).ok_or_else(|| Error::Malformed("empty datum".into()))?;
    let local = f.on(top).to_vec();
    if local.iter().any(|l| l.dim() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: local[0].dim() });
    }
    // Orthant coordinates: the i-th coordinate is the value on the i-th ray.
    let orth = Cone::orthant(n);
    let at_rays: Vec<i64> = (0..n).map(|i| local.iter().map(|l| l.0[i]).min().unwrap()).collect();
    let factor_local = if normalize { Functional(at_rays.clone()) } else { Functional::zero(n) };
    if !normalize && at_rays.iter().any(|&x| x < 0) {
        return Err(Error::NotPlDatum("function is negative on the chart and normalization is off".into()));
    }
    let shifted: Vec<Functional> = essential_functionals(&orth, &local.iter().map(|l| l.sub(&factor_local)).collect::<Vec<_>>());
    let domains = linearity_domains(&orth, &shifted)?;
    let mut test_rays: Vec<LatticeVector> = domains.iter().flat_map(|d| d.rays().iter().cloned()).collect();
    test_rays.sort();
    test_rays.dedup();
    let value = |r: &LatticeVector| shifted.iter().map(|l| l.pair(r)).min().unwrap();
    let member = |m: &[i64]| {
        let mf = Functional(m.to_vec());
        test_rays.iter().all(|r| mf.pair(r) >= value(r))
    };
    let hi: Vec<i64> = (0..n).map(|i| shifted.iter().map(|l| l.0[i]).max().unwrap()).collect();
    let mut gens_local = Vec::new();
    let mut m = vec![0i64; n];
    'outer: loop {
        if member(&m) {
            let minimal = (0..n).all(|i| {
                if m[i] == 0 {
                    return true;
                }
                let mut d = m.clone();
                d[i] -= 1;
                !member(&d)
            });
            if minimal {
                gens_local.push(Functional(m.clone()));
            }
        }
        for i in 0..n {
            if m[i] < hi[i] {
                m[i] += 1;
                continue 'outer;
            }
            m[i] = 0;
        }
        break;
    }
    if n == 0 {
        gens_local.push(Functional(Vec::new()));
    }
    // Back to the ambient dual lattice: m = R^{-T} m_local.
    let rinv = invert_unimodular(&ray_matrix(base));
    let to_ambient = |l: &Functional| pull_functional(&rinv, l);
    let gens = gens_local.iter().map(to_ambient).collect();
    Ok((MonomialIdeal::new(base.clone(), gens)?, to_ambient(&factor_local)))
}

/// The datum multiplied by `k`. Domains of linearity are unchanged.
pub fn veronese(f: &PLDatum, cx: &GeneralizedConeComplex, k: i64) -> Result<PLDatum> {
    if k < 1 {
        return Err(Error::Malformed("Veronese degree must be positive".into()));
    }
    PLDatum::new(cx, f.pieces().iter().map(|fs| fs.iter().map(|l| l.scale(k)).collect()).collect())
}

/// The `k`-th power of the ideal, minimally generated.
pub fn veronese_ideal(ideal: &MonomialIdeal, k: u32) -> Result<MonomialIdeal> {
    if k < 1 {
        return Err(Error::Malformed("Veronese degree must be positive".into()));
    }
    ideal.power(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(c: &[i64]) -> Functional {
        Functional(c.to_vec())
    }

    #[test]
    fn order_function_of_maximal_ideal() {
        let i = MonomialIdeal::new(Cone::orthant(2), vec![f(&[1, 0]), f(&[0, 1])]).unwrap();
        let (_, pl) = pl_from_ideal(&i).unwrap();
        let top = pl.pieces().len() - 1;
        assert_eq!(pl.on(top), &[f(&[0, 1]), f(&[1, 0])]);
        let (back, factor) = ideal_from_pl(&Cone::orthant(2), &pl, true).unwrap();
        assert_eq!(back, i);
        assert_eq!(factor, f(&[0, 0]));
    }

    #[test]
    fn unit_ideal_is_zero_function() {
        let i = MonomialIdeal::unit(Cone::orthant(2)).unwrap();
        let (_, pl) = pl_from_ideal(&i).unwrap();
        assert!(pl.pieces().iter().all(|fs| fs.iter().all(|l| l.0.iter().all(|&x| x == 0))));
        let (back, _) = ideal_from_pl(&Cone::orthant(2), &pl, false).unwrap();
        assert!(back.is_unit());
    }

    #[test]
    fn normalization_extracts_factor() {
        // v1 + min(v1, v2) = min(2 v1, v1 + v2)
        let (cx, _, _) = GeneralizedConeComplex::from_embedded(2, &[Cone::orthant(2)]).unwrap();
        let top = cx.len() - 1;
        let pl = PLDatum::from_maximal(&cx, &[(top, vec![f(&[2, 0]), f(&[1, 1])])]).unwrap();
        let (ideal, factor) = ideal_from_pl(&Cone::orthant(2), &pl, true).unwrap();
        assert_eq!(factor, f(&[1, 0]));
        assert_eq!(ideal.generators(), &[f(&[0, 1]), f(&[1, 0])]);
    }

    #[test]
    fn square_of_maximal_ideal() {
        let i = MonomialIdeal::new(Cone::orthant(2), vec![f(&[1, 0]), f(&[0, 1])]).unwrap();
        let sq = veronese_ideal(&i, 2).unwrap();
        assert_eq!(sq.generators(), &[f(&[0, 2]), f(&[1, 1]), f(&[2, 0])]);
    }
}
