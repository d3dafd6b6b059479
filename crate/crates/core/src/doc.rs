//! Versioned JSON documents. Canonical form: sorted keys, integers as
//! decimal strings. Parsing also accepts plain JSON integers.

use serde_json::{json, Map, Value};

use crate::cobordism::{CobordismFan, WallChamberData, Zigzag};
use crate::complex::{ComplexMorphism, ConeId, FaceMap, FinalObject, GeneralizedConeComplex, PLDatum};
use crate::engine::{Direction, FactorizationCertificate, FactorizationStep, Residual, StarStep};
use crate::lattice::{Cone, Functional, LatticeVector};
use crate::subdiv::{Center, CoherenceCertificate, Fan, MonomialIdeal, Subdivision};
use crate::verify::VerificationReport;
use crate::{Error, Matrix, Result};

pub const VERSION: &str = "tfact/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Complex,
    Ideal,
    Pl,
    Subdivision,
    Fan,
    Morphism,
    Cobordism,
    Walls,
    Zigzag,
    Certificate,
    Report,
    FinalObject,
    Residual,
    Steps,
    Oracle,
    Diagnostic,
}

impl Kind {
    const ALL: [Kind; 16] = [
        Kind::Complex,
        Kind::Ideal,
        Kind::Pl,
        Kind::Subdivision,
        Kind::Fan,
        Kind::Morphism,
        Kind::Cobordism,
        Kind::Walls,
        Kind::Zigzag,
        Kind::Certificate,
        Kind::Report,
        Kind::FinalObject,
        Kind::Residual,
        Kind::Steps,
        Kind::Oracle,
        Kind::Diagnostic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Complex => "complex",
            Kind::Ideal => "ideal",
            Kind::Pl => "pl",
            Kind::Subdivision => "subdivision",
            Kind::Fan => "fan",
            Kind::Morphism => "morphism",
            Kind::Cobordism => "cobordism",
            Kind::Walls => "walls",
            Kind::Zigzag => "zigzag",
            Kind::Certificate => "certificate",
            Kind::Report => "report",
            Kind::FinalObject => "final-object",
            Kind::Residual => "residual",
            Kind::Steps => "steps",
            Kind::Oracle => "oracle",
            Kind::Diagnostic => "diagnostic",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub kind: Kind,
    pub payload: Value,
}

impl Document {
    pub fn new(kind: Kind, payload: Value) -> Self {
        Document { kind, payload }
    }

    /// Canonical text: pretty-printed with sorted keys and a final newline.
    pub fn to_text(&self) -> String {
        let v = json!({ "version": VERSION, "kind": self.kind.as_str(), "payload": self.payload });
        let mut s = serde_json::to_string_pretty(&v).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Document> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        let obj = v.as_object().ok_or_else(|| bad("", "a document object"))?;
        match obj.get("version").and_then(Value::as_str) {
            Some(VERSION) => {}
            Some(other) => return Err(Error::Malformed(format!("unsupported version {other:?}"))),
            None => return Err(bad("version", "a version string")),
        }
        let kind = obj
            .get("kind")
            .and_then(Value::as_str)
            .and_then(Kind::parse)
            .ok_or_else(|| bad("kind", "a known kind"))?;
        let payload = obj.get("payload").cloned().ok_or_else(|| bad("payload", "a payload"))?;
        Ok(Document { kind, payload })
    }

    pub fn expect(&self, kind: Kind) -> Result<&Value> {
        if self.kind != kind {
            return Err(Error::Malformed(format!("expected a {} document, found {}", kind.as_str(), self.kind.as_str())));
        }
        Ok(&self.payload)
    }
}

fn bad(path: &str, what: &str) -> Error {
    Error::Malformed(format!("{}: expected {what}", if path.is_empty() { "document" } else { path }))
}

// ---------------------------------------------------------------------------
// Writers

fn int(x: i64) -> Value {
    Value::String(x.to_string())
}

fn ints(xs: &[i64]) -> Value {
    Value::Array(xs.iter().map(|&x| int(x)).collect())
}

fn id(x: usize) -> Value {
    Value::String(x.to_string())
}

fn ids(xs: &[usize]) -> Value {
    Value::Array(xs.iter().map(|&x| id(x)).collect())
}

pub fn cone_json(c: &Cone) -> Value {
    json!({ "rank": id(c.rank()), "rays": c.rays().iter().map(|r| ints(&r.0)).collect::<Vec<_>>() })
}

fn functionals_json(fs: &[Functional]) -> Value {
    Value::Array(fs.iter().map(|f| ints(&f.0)).collect())
}

pub fn matrix_json(m: &Matrix) -> Value {
    json!({
        "rows": id(m.nrows()),
        "cols": id(m.ncols()),
        "entries": m.to_rows().iter().map(|r| ints(r)).collect::<Vec<_>>(),
    })
}

pub fn complex_json(cx: &GeneralizedConeComplex) -> Value {
    json!({
        "cones": cx.cones().iter().map(cone_json).collect::<Vec<_>>(),
        "maps": cx.generators().iter().map(|m| json!({
            "source": id(m.source),
            "target": id(m.target),
            "matrix": matrix_json(&m.matrix),
        })).collect::<Vec<_>>(),
    })
}

pub fn fan_json(f: &Fan) -> Value {
    json!({ "ambient": id(f.ambient()), "cones": f.cones().iter().map(|c| cone_json(c)).collect::<Vec<_>>() })
}

fn pieces_json(sub: &Subdivision) -> Value {
    Value::Array(
        sub.pieces().iter().map(|f| Value::Array(f.cones().iter().map(|c| ints_rows(c.rays())).collect())).collect(),
    )
}

fn ints_rows(rays: &[LatticeVector]) -> Value {
    Value::Array(rays.iter().map(|r| ints(&r.0)).collect())
}

pub fn subdivision_json(sub: &Subdivision) -> Value {
    json!({ "base": complex_json(sub.base()), "pieces": pieces_json(sub) })
}

pub fn ideal_json(i: &MonomialIdeal) -> Value {
    json!({ "base": cone_json(i.base()), "generators": functionals_json(i.generators()) })
}

fn datum_pieces(f: &PLDatum) -> Value {
    Value::Array(f.pieces().iter().map(|fs| functionals_json(fs)).collect())
}

pub fn pl_json(cx: &GeneralizedConeComplex, f: &PLDatum) -> Value {
    json!({ "complex": complex_json(cx), "pieces": datum_pieces(f) })
}

fn components_json(phi: &ComplexMorphism) -> Value {
    Value::Array(
        phi.components.iter().map(|(j, m)| json!({ "target": id(*j), "matrix": matrix_json(m) })).collect(),
    )
}

/// A morphism together with its source complex.
pub fn morphism_json(source: &GeneralizedConeComplex, phi: &ComplexMorphism) -> Value {
    json!({ "source": complex_json(source), "components": components_json(phi) })
}

fn center_json(c: &Center) -> Value {
    Value::Array(c.realizations.iter().map(|(j, p)| json!({ "cone": id(*j), "point": ints(&p.0) })).collect())
}

fn certificate_functionals(c: &CoherenceCertificate) -> Value {
    Value::Array(c.functionals.iter().map(|fs| functionals_json(fs)).collect())
}

fn star_step_json(direction: Direction, centers: &[Center], result: &Subdivision) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("direction".into(), Value::String(direction.as_str().into()));
    m.insert("centers".into(), Value::Array(centers.iter().map(center_json).collect()));
    m.insert("result".into(), pieces_json(result));
    m
}

pub fn certificate_json(c: &FactorizationCertificate) -> Value {
    let steps: Vec<Value> = c
        .steps
        .iter()
        .map(|s| {
            let mut m = star_step_json(s.direction, &s.centers, &s.result);
            m.insert("ideal".into(), certificate_functionals(&s.j_certificate));
            Value::Object(m)
        })
        .collect();
    json!({
        "base": complex_json(&c.base),
        "unit_locus": ids(&c.unit_locus),
        "boundary": ids(&c.boundary),
        "datum": c.datum.as_ref().map_or(Value::Null, datum_pieces),
        "source": pieces_json(&c.source),
        "steps": steps,
        "forward_only": c.is_forward_only(),
    })
}

pub fn report_json(r: &VerificationReport) -> Value {
    json!({
        "pass": r.pass,
        "conditions": r.conditions.iter().map(|c| json!({
            "number": id(c.condition.number() as usize),
            "name": c.condition.name(),
            "pass": c.passed(),
            "witness": c.witness,
        })).collect::<Vec<_>>(),
    })
}

pub fn cobordism_json(b: &CobordismFan) -> Value {
    let (lo, hi) = b.weight_range();
    json!({
        "ideal": ideal_json(&b.ideal),
        "rank": id(b.rank),
        "intermediate": fan_json(&b.intermediate),
        "total": fan_json(&b.total),
        "certificate": functionals_json(&b.certificate),
        "weights": ints(&b.cone_weights()),
        "d": int(b.d),
        "doubled": b.doubled,
        "a_min": int(lo),
        "a_max": int(hi),
    })
}

pub fn walls_json(b: &CobordismFan, w: &WallChamberData) -> Value {
    let (lo, hi) = b.weight_range();
    json!({
        "walls": ints(&w.walls),
        "chambers": w.chambers.iter().map(|(a, b)| json!([int(*a), int(*b)])).collect::<Vec<_>>(),
        "a_min": int(lo),
        "a_max": int(hi),
        "doubled": b.doubled,
        "separated": w.walls.windows(2).all(|p| p[1] - p[0] >= 2),
    })
}

pub fn zigzag_json(z: &Zigzag) -> Value {
    json!({
        "stages": z.stages.iter().map(|s| json!({
            "weight": int(s.weight),
            "wall": s.is_wall,
            "fan": fan_json(&s.fan),
        })).collect::<Vec<_>>(),
        "maps": z.maps.iter().map(|m| json!({
            "chamber": id(m.chamber),
            "wall": id(m.wall),
            "certificate": functionals_json(&m.certificate),
        })).collect::<Vec<_>>(),
    })
}

pub fn final_object_json(fo: &FinalObject) -> Value {
    json!({ "complex": complex_json(&fo.complex), "g": components_json(&fo.g), "datum": datum_pieces(&fo.datum) })
}

pub fn residual_json(r: &Residual) -> Value {
    json!({ "base": complex_json(r.coarse.base()), "coarse": pieces_json(&r.coarse), "fine": pieces_json(&r.fine) })
}

pub fn steps_json(steps: &[StarStep]) -> Value {
    Value::Array(steps.iter().map(|s| Value::Object(star_step_json(s.direction, &s.centers, &s.result))).collect())
}

// ---------------------------------------------------------------------------
// Readers

fn field<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| bad(&format!("{path}.{key}"), "a field"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| bad(path, "an array"))
}

fn read_int(v: &Value, path: &str) -> Result<i64> {
    match v {
        Value::String(s) => s.trim().parse::<i64>().map_err(|_| bad(path, "a decimal integer")),
        Value::Number(n) => n.as_i64().ok_or_else(|| bad(path, "a 64-bit integer")),
        _ => Err(bad(path, "an integer")),
    }
}

fn read_id(v: &Value, path: &str) -> Result<usize> {
    usize::try_from(read_int(v, path)?).map_err(|_| bad(path, "a nonnegative index"))
}

fn read_ints(v: &Value, path: &str) -> Result<Vec<i64>> {
    array(v, path)?.iter().enumerate().map(|(i, x)| read_int(x, &format!("{path}[{i}]"))).collect()
}

fn read_ids(v: &Value, path: &str) -> Result<Vec<usize>> {
    array(v, path)?.iter().enumerate().map(|(i, x)| read_id(x, &format!("{path}[{i}]"))).collect()
}

fn read_vectors(v: &Value, path: &str) -> Result<Vec<LatticeVector>> {
    array(v, path)?.iter().enumerate().map(|(i, x)| Ok(LatticeVector(read_ints(x, &format!("{path}[{i}]"))?))).collect()
}

fn read_functionals(v: &Value, path: &str) -> Result<Vec<Functional>> {
    Ok(read_vectors(v, path)?.into_iter().map(|x| Functional(x.0)).collect())
}

fn with_path<T>(r: Result<T>, path: &str) -> Result<T> {
    r.map_err(|e| match e {
        Error::Malformed(m) => Error::Malformed(m),
        other => Error::Malformed(format!("{path}: {other}")),
    })
}

pub fn read_cone(v: &Value, path: &str) -> Result<Cone> {
    let rank = read_id(field(v, "rank", path)?, &format!("{path}.rank"))?;
    let rays = read_vectors(field(v, "rays", path)?, &format!("{path}.rays"))?;
    if let Some(r) = rays.iter().find(|r| r.dim() != rank) {
        return Err(Error::Malformed(format!("{path}: ray {r} does not have rank {rank}")));
    }
    with_path(Cone::new(rank, rays), path)
}

pub fn read_matrix(v: &Value, path: &str) -> Result<Matrix> {
    let rows = read_id(field(v, "rows", path)?, &format!("{path}.rows"))?;
    let cols = read_id(field(v, "cols", path)?, &format!("{path}.cols"))?;
    let entries = read_vectors(field(v, "entries", path)?, &format!("{path}.entries"))?;
    if entries.len() != rows || entries.iter().any(|r| r.dim() != cols) {
        return Err(Error::Malformed(format!("{path}: entries are not {rows} x {cols}")));
    }
    Ok(Matrix::from_rows(entries.into_iter().map(|r| r.0).collect(), cols))
}

pub fn read_complex(v: &Value, path: &str) -> Result<GeneralizedConeComplex> {
    let cones = array(field(v, "cones", path)?, &format!("{path}.cones"))?
        .iter()
        .enumerate()
        .map(|(i, c)| read_cone(c, &format!("{path}.cones[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let maps = array(field(v, "maps", path)?, &format!("{path}.maps"))?
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let p = format!("{path}.maps[{i}]");
            Ok(FaceMap::new(
                read_id(field(m, "source", &p)?, &format!("{p}.source"))?,
                read_id(field(m, "target", &p)?, &format!("{p}.target"))?,
                read_matrix(field(m, "matrix", &p)?, &format!("{p}.matrix"))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    with_path(GeneralizedConeComplex::new(cones, maps), path)
}

pub fn read_fan(v: &Value, path: &str) -> Result<Fan> {
    let ambient = read_id(field(v, "ambient", path)?, &format!("{path}.ambient"))?;
    let cones = array(field(v, "cones", path)?, &format!("{path}.cones"))?
        .iter()
        .enumerate()
        .map(|(i, c)| read_cone(c, &format!("{path}.cones[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    with_path(Fan::new(ambient, cones), path)
}

/// Pieces over a known base, without tiling checks.
fn read_pieces(base: &GeneralizedConeComplex, v: &Value, path: &str) -> Result<Subdivision> {
    let arr = array(v, path)?;
    if arr.len() != base.len() {
        return Err(Error::Malformed(format!("{path}: {} pieces for {} base cones", arr.len(), base.len())));
    }
    let mut pieces = Vec::with_capacity(arr.len());
    for (i, piece) in arr.iter().enumerate() {
        let rank = base.cone(i).rank();
        let p = format!("{path}[{i}]");
        let cones = array(piece, &p)?
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let q = format!("{p}[{k}]");
                let rays = read_vectors(c, &q)?;
                if let Some(r) = rays.iter().find(|r| r.dim() != rank) {
                    return Err(Error::Malformed(format!("{q}: ray {r} does not have rank {rank}")));
                }
                with_path(Cone::new(rank, rays), &q)
            })
            .collect::<Result<Vec<_>>>()?;
        pieces.push(with_path(Fan::new(rank, cones), &p)?);
    }
    Ok(Subdivision::from_parts_unchecked(base.clone(), pieces))
}

pub fn read_subdivision(v: &Value, path: &str) -> Result<Subdivision> {
    let base = read_complex(field(v, "base", path)?, &format!("{path}.base"))?;
    let unchecked = read_pieces(&base, field(v, "pieces", path)?, &format!("{path}.pieces"))?;
    with_path(Subdivision::new(base, unchecked.pieces().to_vec()), path)
}

pub fn read_ideal(v: &Value, path: &str) -> Result<MonomialIdeal> {
    let base = read_cone(field(v, "base", path)?, &format!("{path}.base"))?;
    let gens = read_functionals(field(v, "generators", path)?, &format!("{path}.generators"))?;
    with_path(MonomialIdeal::new(base, gens), path)
}

fn read_datum(cx: &GeneralizedConeComplex, v: &Value, path: &str) -> Result<PLDatum> {
    let pieces = array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, p)| read_functionals(p, &format!("{path}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    with_path(PLDatum::new(cx, pieces), path)
}

pub fn read_pl(v: &Value, path: &str) -> Result<(GeneralizedConeComplex, PLDatum)> {
    let cx = read_complex(field(v, "complex", path)?, &format!("{path}.complex"))?;
    let f = read_datum(&cx, field(v, "pieces", path)?, &format!("{path}.pieces"))?;
    Ok((cx, f))
}

fn read_components(v: &Value, path: &str) -> Result<ComplexMorphism> {
    let components = array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let p = format!("{path}[{i}]");
            Ok((
                read_id(field(c, "target", &p)?, &format!("{p}.target"))?,
                read_matrix(field(c, "matrix", &p)?, &format!("{p}.matrix"))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexMorphism { components })
}

pub fn read_morphism(v: &Value, path: &str) -> Result<(GeneralizedConeComplex, ComplexMorphism)> {
    let source = read_complex(field(v, "source", path)?, &format!("{path}.source"))?;
    let phi = read_components(field(v, "components", path)?, &format!("{path}.components"))?;
    Ok((source, phi))
}

fn read_centers(v: &Value, path: &str) -> Result<Vec<Center>> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let p = format!("{path}[{i}]");
            let realizations = array(c, &p)?
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let q = format!("{p}[{k}]");
                    Ok((
                        read_id(field(r, "cone", &q)?, &format!("{q}.cone"))?,
                        LatticeVector(read_ints(field(r, "point", &q)?, &format!("{q}.point"))?),
                    ))
                })
                .collect::<Result<Vec<(ConeId, LatticeVector)>>>()?;
            Ok(Center { realizations })
        })
        .collect()
}

fn read_direction(v: &Value, path: &str) -> Result<Direction> {
    match v.as_str() {
        Some("forward") => Ok(Direction::Forward),
        Some("inverse") => Ok(Direction::Inverse),
        _ => Err(bad(path, "\"forward\" or \"inverse\"")),
    }
}

fn read_star_step(base: &GeneralizedConeComplex, v: &Value, path: &str) -> Result<StarStep> {
    Ok(StarStep {
        direction: read_direction(field(v, "direction", path)?, &format!("{path}.direction"))?,
        centers: read_centers(field(v, "centers", path)?, &format!("{path}.centers"))?,
        result: read_pieces(base, field(v, "result", path)?, &format!("{path}.result"))?,
    })
}

/// Reads a certificate without re-validating the stages; run the verifier.
pub fn read_certificate(v: &Value, path: &str) -> Result<FactorizationCertificate> {
    let base = read_complex(field(v, "base", path)?, &format!("{path}.base"))?;
    let datum = match field(v, "datum", path)? {
        Value::Null => None,
        d => Some(read_datum(&base, d, &format!("{path}.datum"))?),
    };
    let steps = array(field(v, "steps", path)?, &format!("{path}.steps"))?
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let p = format!("{path}.steps[{k}]");
            let st = read_star_step(&base, s, &p)?;
            let ideal = array(field(s, "ideal", &p)?, &format!("{p}.ideal"))?
                .iter()
                .enumerate()
                .map(|(i, fs)| read_functionals(fs, &format!("{p}.ideal[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            Ok(FactorizationStep {
                direction: st.direction,
                centers: st.centers,
                result: st.result,
                j_certificate: CoherenceCertificate { functionals: ideal },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FactorizationCertificate {
        unit_locus: read_ids(field(v, "unit_locus", path)?, &format!("{path}.unit_locus"))?,
        boundary: read_ids(field(v, "boundary", path)?, &format!("{path}.boundary"))?,
        datum,
        source: read_pieces(&base, field(v, "source", path)?, &format!("{path}.source"))?,
        steps,
        base,
    })
}

pub fn read_residual(v: &Value, path: &str) -> Result<Residual> {
    let base = read_complex(field(v, "base", path)?, &format!("{path}.base"))?;
    Ok(Residual {
        coarse: read_pieces(&base, field(v, "coarse", path)?, &format!("{path}.coarse"))?,
        fine: read_pieces(&base, field(v, "fine", path)?, &format!("{path}.fine"))?,
    })
}

pub fn read_steps(base: &GeneralizedConeComplex, v: &Value, path: &str) -> Result<Vec<StarStep>> {
    array(v, path)?.iter().enumerate().map(|(k, s)| read_star_step(base, s, &format!("{path}[{k}]"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{factor_ideal, EngineOptions};

    #[test]
    fn certificate_round_trip() {
        let i = MonomialIdeal::new(Cone::orthant(2), vec![Functional(vec![1, 0]), Functional(vec![0, 1])]).unwrap();
        let c = factor_ideal(&i, &EngineOptions::default()).unwrap();
        let text = Document::new(Kind::Certificate, certificate_json(&c)).to_text();
        let doc = Document::parse(&text).unwrap();
        let back = read_certificate(doc.expect(Kind::Certificate).unwrap(), "payload").unwrap();
        assert_eq!(back, c);
        assert_eq!(Document::new(Kind::Certificate, certificate_json(&back)).to_text(), text);
    }

    #[test]
    fn parse_errors_carry_position() {
        match Document::parse("{\n  \"version\": ") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn plain_numbers_are_accepted() {
        let text = r#"{"version":"tfact/1","kind":"ideal","payload":{"base":{"rank":2,"rays":[[1,0],[0,1]]},"generators":[[1,0],[0,1]]}}"#;
        let doc = Document::parse(text).unwrap();
        let i = read_ideal(doc.expect(Kind::Ideal).unwrap(), "payload").unwrap();
        assert_eq!(i.generators().len(), 2);
    }
}
