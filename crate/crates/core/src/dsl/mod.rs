//! Claim language: lexer, parser, pretty-printer and canonical encoding.
//!
//! ```text
//! prover alice
//! region Shop = polygon [(0, 0), (120, 0), (120, 80), (0, 80)]
//! claim alice in Shop during [08:00, 08:20] on 2025-05-12 gap<=60s samples>=5 proximity<=20m
//! formula always alice in Shop during [2025-05-12T08:00:00Z, 2025-05-12T08:20:00Z] samples>=5
//! ```

mod ast;
mod lexer;
mod parser;
mod pretty;

use thiserror::Error;

pub use ast::*;
pub use lexer::{lex, Tok, Token};
pub use parser::{parse_document, RESERVED};
pub use pretty::{format_time, print_claim, print_document, print_formula};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at {line}:{col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("invalid at line {line}: {msg}")]
    Validation { line: usize, msg: String },
    #[error("unknown region `{name}`")]
    UnknownRegion { name: String },
    #[error("malformed claim encoding: {0}")]
    Encoding(String),
}

/// Semantic checks shared by the text and JSON front ends.
pub fn validate_claim(c: &Claim) -> Result<(), DslError> {
    let bad = |msg: &str| {
        Err(DslError::Validation {
            line: 0,
            msg: msg.to_string(),
        })
    };
    if c.prover_id.is_empty() || RESERVED.contains(&c.prover_id.as_str()) {
        return bad("prover id must be a non-reserved identifier");
    }
    if c.start >= c.end {
        return bad("interval start must precede its end");
    }
    if c.max_gap == 0 {
        return bad("gap bound must be positive");
    }
    if c.proximity_bound_m.is_some() && !c.flags.require_proximity {
        return bad("proximity bound given without the proximity flag");
    }
    match &c.region {
        RegionRef::Named(n) if n.is_empty() => bad("empty region name"),
        RegionRef::Inline(p) => match crate::grid::Polygon::new(p.clone()) {
            Ok(_) => Ok(()),
            Err(e) => bad(&format!("invalid polygon: {e}")),
        },
        _ => Ok(()),
    }
}

/// Parses a source holding exactly one claim.
pub fn parse_claim(src: &str) -> Result<Claim, DslError> {
    let doc = parse_document(src)?;
    match <[Claim; 1]>::try_from(doc.claims) {
        Ok([c]) => Ok(c),
        Err(v) => Err(DslError::Validation {
            line: 0,
            msg: format!("expected exactly one claim, found {}", v.len()),
        }),
    }
}

/// Accepts a JSON claim object or claim-language source.
pub fn load_claim(src: &str) -> Result<Claim, DslError> {
    if src.trim_start().starts_with('{') {
        let c: Claim = serde_json::from_str(src).map_err(|e| DslError::Validation {
            line: e.line(),
            msg: e.to_string(),
        })?;
        validate_claim(&c)?;
        Ok(c)
    } else {
        parse_claim(src)
    }
}

/// Polygon of the claim's region: inline, or looked up in `doc`.
pub fn resolve_region(claim: &Claim, doc: &Document) -> Result<Vec<(f64, f64)>, DslError> {
    match &claim.region {
        RegionRef::Inline(p) => Ok(p.clone()),
        RegionRef::Named(n) => doc
            .regions
            .iter()
            .find(|r| &r.name == n)
            .and_then(|r| r.polygon.clone())
            .ok_or_else(|| DslError::UnknownRegion { name: n.clone() }),
    }
}

const CANON_MAGIC: &[u8; 4] = b"POLC";
const CANON_VERSION: u8 = 1;

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_be_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn canon_f64(x: f64) -> u64 {
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

/// Deterministic byte encoding. Equal claims encode to equal bytes.
pub fn canonical_serialize(c: &Claim) -> Vec<u8> {
    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(CANON_MAGIC);
    out.push(CANON_VERSION);
    put_str(&mut out, &c.prover_id);
    match &c.region {
        RegionRef::Named(n) => {
            out.push(0);
            put_str(&mut out, n);
        }
        RegionRef::Inline(pts) => {
            out.push(1);
            out.extend_from_slice(&(pts.len() as u32).to_be_bytes());
            for (x, y) in pts {
                out.extend_from_slice(&canon_f64(*x).to_be_bytes());
                out.extend_from_slice(&canon_f64(*y).to_be_bytes());
            }
        }
    }
    out.extend_from_slice(&c.start.to_be_bytes());
    out.extend_from_slice(&c.end.to_be_bytes());
    out.extend_from_slice(&c.min_samples.to_be_bytes());
    out.extend_from_slice(&c.max_gap.to_be_bytes());
    out.push(c.flags.require_proximity as u8 | (c.flags.require_nontransferability as u8) << 1);
    match c.proximity_bound_m {
        None => out.push(0),
        Some(b) => {
            out.push(1);
            out.extend_from_slice(&b.to_be_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DslError> {
        if self.buf.len() < n {
            return Err(DslError::Encoding("truncated".into()));
        }
        let (h, t) = self.buf.split_at(n);
        self.buf = t;
        Ok(h)
    }

    fn u8(&mut self) -> Result<u8, DslError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, DslError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DslError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, DslError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| DslError::Encoding("utf-8".into()))
    }
}

pub fn canonical_deserialize(bytes: &[u8]) -> Result<Claim, DslError> {
    let enc = |m: &str| DslError::Encoding(m.to_string());
    let mut r = Reader { buf: bytes };
    if r.take(4)? != CANON_MAGIC || r.u8()? != CANON_VERSION {
        return Err(enc("bad header"));
    }
    let prover_id = r.string()?;
    let region = match r.u8()? {
        0 => RegionRef::Named(r.string()?),
        1 => {
            let n = r.u32()? as usize;
            if n > r.buf.len() / 16 {
                return Err(enc("truncated"));
            }
            let mut pts = Vec::with_capacity(n);
            for _ in 0..n {
                pts.push((f64::from_bits(r.u64()?), f64::from_bits(r.u64()?)));
            }
            RegionRef::Inline(pts)
        }
        _ => return Err(enc("region tag")),
    };
    let start = r.u64()? as i64;
    let end = r.u64()? as i64;
    let min_samples = r.u64()?;
    let max_gap = r.u64()?;
    let fl = r.u8()?;
    if fl > 3 {
        return Err(enc("flag bits"));
    }
    let proximity_bound_m = match r.u8()? {
        0 => None,
        1 => Some(r.u32()?),
        _ => return Err(enc("bound tag")),
    };
    if !r.buf.is_empty() {
        return Err(enc("trailing bytes"));
    }
    Ok(Claim {
        prover_id,
        region,
        start,
        end,
        min_samples,
        max_gap,
        flags: ClaimFlags {
            require_proximity: fl & 1 != 0,
            require_nontransferability: fl & 2 != 0,
        },
        proximity_bound_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DOC: &str = "\
prover alice
region Shop = polygon [(0, 0), (120, 0), (120, 80), (0, 80)]
region RoadX
anchor door at (10, 5)
event open at 2025-05-12T08:00:00Z
event close at 2025-05-12T18:00:00Z
claim alice in Shop during [08:00, 08:20] on 2025-05-12 gap<=60s samples>=5 proximity<=20m
claim alice in polygon [(0,0),(10,0),(0,10)] during [2025-05-12T08:00:00Z, 2025-05-12T09:00:00Z] nontransferable
formula time(open) < time(close) and not loc(alice, RoadX, open) or true
formula always alice in Shop during [2025-05-12T08:00:00Z, 2025-05-12T08:20:00Z] samples>=3 gap<=2min (dist(alice, door) <= 25m)
";

    #[test]
    fn parses_reference_document() {
        let d = parse_document(DOC).unwrap();
        assert_eq!(d.provers, vec!["alice"]);
        assert_eq!(d.regions.len(), 2);
        assert_eq!(d.claims.len(), 2);
        let c = &d.claims[0];
        assert_eq!(c.start, 1_747_036_800);
        assert_eq!(c.end - c.start, 1200);
        assert_eq!((c.max_gap, c.min_samples), (60, 5));
        assert!(c.flags.require_proximity);
        assert_eq!(c.proximity_bound_m, Some(20));
        let c2 = &d.claims[1];
        assert_eq!((c2.max_gap, c2.min_samples), (3600, 1));
        assert!(c2.flags.require_nontransferability);
        // `and` binds tighter than `or`.
        assert!(matches!(&d.formulas[0], Formula::Or { right, .. } if **right == Formula::True));
        match &d.formulas[1] {
            Formula::IntervalBox { max_gap, inner, .. } => {
                assert_eq!(*max_gap, Some(120));
                assert!(matches!(
                    inner.as_deref(),
                    Some(Formula::Dist { time: TimeRef::Bound, .. })
                ));
            }
            f => panic!("{f:?}"),
        }
        assert_eq!(resolve_region(c, &d).unwrap().len(), 4);
        assert_eq!(
            resolve_region(&Claim { region: RegionRef::Named("RoadX".into()), ..c.clone() }, &d),
            Err(DslError::UnknownRegion { name: "RoadX".into() })
        );
    }

    #[test]
    fn pretty_round_trip_document() {
        let d = parse_document(DOC).unwrap();
        let printed = print_document(&d);
        assert_eq!(parse_document(&printed).unwrap(), d);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<Document>(&json).unwrap(), d);
    }

    #[test]
    fn syntax_errors_carry_position_and_expectation() {
        let e = parse_document("prover alice\nclaim alice Shop during").unwrap_err();
        match e {
            DslError::Syntax {
                line, col, expected, ..
            } => {
                assert_eq!((line, col), (2, 13));
                assert_eq!(expected, "`in`");
            }
            e => panic!("{e}"),
        }
        assert!(matches!(
            parse_document("claim a in R during [08:00, 09:00]"),
            Err(DslError::Validation { line: 1, .. })
        ));
        assert!(matches!(
            parse_document("claim a in R during [2025-01-01T01:00:00Z, 2025-01-01T00:00:00Z]"),
            Err(DslError::Validation { .. })
        ));
        assert!(matches!(
            parse_document("claim a in R during [2025-01-01T00:00:00Z, 2025-01-01T01:00:00Z] gap<=0s"),
            Err(DslError::Validation { .. })
        ));
        assert!(matches!(
            parse_document("prover a\nformula loc(a, Nowhere, 2025-01-01T00:00:00Z)"),
            Err(DslError::UnknownRegion { .. })
        ));
        assert!(matches!(
            parse_document("prover a\nregion R\nformula loc(a, R, t)"),
            Err(DslError::Validation { .. })
        ));
        assert!(matches!(
            parse_document("region R = polygon [(0,0),(1,1),(2,2)]"),
            Err(DslError::Validation { .. })
        ));
    }

    #[test]
    fn json_claims_are_validated() {
        let c = parse_claim(
            "claim p in R during [2025-01-01T00:00:00Z, 2025-01-01T01:00:00Z] samples>=2",
        )
        .unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(load_claim(&json).unwrap(), c);
        let bad = json.replace("\"max_gap\":3600", "\"max_gap\":0");
        assert!(load_claim(&bad).is_err());
    }

    #[test]
    fn canonical_rejects_garbage() {
        let c = parse_claim("claim p in R during [2025-01-01T00:00:00Z, 2025-01-01T01:00:00Z]")
            .unwrap();
        let bytes = canonical_serialize(&c);
        assert_eq!(canonical_deserialize(&bytes).unwrap(), c);
        for cut in 0..bytes.len() {
            assert!(canonical_deserialize(&bytes[..cut]).is_err());
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(canonical_deserialize(&extra).is_err());
    }

    pub fn arb_claim() -> impl Strategy<Value = Claim> {
        let ident = "[a-z][a-z0-9_]{0,8}".prop_filter("reserved", |s| !RESERVED.contains(&s.as_str()));
        let region = prop_oneof![
            ident.clone().prop_map(RegionRef::Named),
            (0.5f64..500.0, 0.5f64..500.0, -1000i32..1000, -1000i32..1000).prop_map(
                |(w, h, x, y)| {
                    let (x, y) = (x as f64 / 4.0, y as f64 / 4.0);
                    RegionRef::Inline(vec![(x, y), (x + w, y), (x + w, y + h), (x, y + h)])
                }
            ),
        ];
        (
            ident,
            region,
            0i64..4_000_000_000,
            1i64..200_000,
            0u64..10_000,
            1u64..100_000,
            any::<(bool, bool)>(),
            proptest::option::of(0u32..100_000),
        )
            .prop_map(|(p, region, start, len, m, gap, (prox, nt), bound)| Claim {
                prover_id: p,
                region,
                start,
                end: start + len,
                min_samples: m,
                max_gap: gap,
                flags: ClaimFlags {
                    require_proximity: prox || bound.is_some(),
                    require_nontransferability: nt,
                },
                proximity_bound_m: bound,
            })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(c in arb_claim()) {
            let printed = print_claim(&c);
            prop_assert_eq!(parse_claim(&printed).unwrap(), c);
        }

        #[test]
        fn canonical_round_trip(c in arb_claim()) {
            let bytes = canonical_serialize(&c);
            prop_assert_eq!(canonical_deserialize(&bytes).unwrap(), c);
        }

        #[test]
        fn canonical_is_injective(a in arb_claim(), b in arb_claim()) {
            prop_assert_eq!(a == b, canonical_serialize(&a) == canonical_serialize(&b));
        }
    }
}
