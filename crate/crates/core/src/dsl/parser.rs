use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{validate_claim, DslError};
use crate::grid::{CellId, Polygon, MAX_RESOLUTION};

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

enum TimeLit {
    Abs(i64),
    Clock(i64),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or_else(|| self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn line(&self) -> usize {
        self.here().0
    }

    fn fail<T>(&self, expected: &str) -> Result<T, DslError> {
        let (line, col) = self.here();
        Err(DslError::Syntax {
            line,
            col,
            expected: expected.to_string(),
            found: self
                .peek()
                .map(Tok::describe)
                .unwrap_or_else(|| "end of input".into()),
        })
    }

    fn invalid<T>(&self, msg: impl Into<String>) -> Result<T, DslError> {
        Err(DslError::Validation {
            line: self.line(),
            msg: msg.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), DslError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.fail(&tok.describe())
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), DslError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.fail(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> Result<String, DslError> {
        match self.peek() {
            Some(Tok::Ident(s)) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.fail("identifier"),
        }
    }

    fn number(&mut self) -> Result<f64, DslError> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.fail("number"),
        }
    }

    fn integer<T: TryFrom<i64>>(&mut self, what: &str) -> Result<T, DslError> {
        let n = self.number()?;
        if n.fract() != 0.0 || n.abs() > 9.0e15 {
            return self.invalid(format!("{what} must be a whole number"));
        }
        match T::try_from(n as i64) {
            Ok(v) => Ok(v),
            Err(_) => self.invalid(format!("{what} out of range")),
        }
    }

    fn distance(&mut self) -> Result<f64, DslError> {
        match self.peek() {
            Some(Tok::Distance(d)) => {
                let d = *d;
                self.pos += 1;
                if d < 0.0 {
                    return self.invalid("distance must be non-negative");
                }
                Ok(d)
            }
            _ => self.fail("distance such as `20m`"),
        }
    }

    fn duration(&mut self) -> Result<u64, DslError> {
        match self.peek() {
            Some(Tok::Duration(d)) => {
                let d = *d;
                self.pos += 1;
                Ok(d)
            }
            _ => self.fail("duration such as `60s`, `5min` or `1h`"),
        }
    }

    fn point(&mut self) -> Result<(f64, f64), DslError> {
        self.expect(Tok::LParen)?;
        let x = self.number()?;
        self.expect(Tok::Comma)?;
        let y = self.number()?;
        self.expect(Tok::RParen)?;
        Ok((x, y))
    }

    fn polygon(&mut self) -> Result<Vec<(f64, f64)>, DslError> {
        self.expect_kw("polygon")?;
        self.expect(Tok::LBracket)?;
        let mut pts = vec![self.point()?];
        while self.eat(&Tok::Comma) {
            pts.push(self.point()?);
        }
        self.expect(Tok::RBracket)?;
        if let Err(e) = Polygon::new(pts.clone()) {
            return self.invalid(format!("invalid polygon: {e}"));
        }
        Ok(pts)
    }

    fn time_lit(&mut self) -> Result<TimeLit, DslError> {
        match self.peek() {
            Some(Tok::Timestamp(t)) => {
                let t = *t;
                self.pos += 1;
                Ok(TimeLit::Abs(t))
            }
            Some(Tok::Clock(c)) => {
                let c = *c;
                self.pos += 1;
                Ok(TimeLit::Clock(c))
            }
            _ => self.fail("timestamp or clock time"),
        }
    }

    /// `[t1, t2] [on DATE]`
    fn interval(&mut self) -> Result<(i64, i64), DslError> {
        self.expect(Tok::LBracket)?;
        let a = self.time_lit()?;
        self.expect(Tok::Comma)?;
        let b = self.time_lit()?;
        self.expect(Tok::RBracket)?;
        let date = if self.eat_kw("on") {
            match self.bump() {
                Some(Tok::Date(d)) => Some(d),
                _ => {
                    self.pos -= 1;
                    return self.fail("date YYYY-MM-DD");
                }
            }
        } else {
            None
        };
        let resolve = |p: &Self, t: TimeLit| match (t, date) {
            (TimeLit::Abs(t), None) => Ok(t),
            (TimeLit::Clock(c), Some(d)) => Ok(d + c),
            (TimeLit::Clock(_), None) => p.invalid("clock times need an `on DATE` suffix"),
            (TimeLit::Abs(_), Some(_)) => p.invalid("`on DATE` applies to clock times only"),
        };
        let start = resolve(self, a)?;
        let end = resolve(self, b)?;
        if start >= end {
            return self.invalid("interval start must precede its end");
        }
        Ok((start, end))
    }

    fn end_of_statement(&mut self) -> Result<(), DslError> {
        if self.eat(&Tok::Newline) {
            Ok(())
        } else {
            self.fail("end of line")
        }
    }

    fn claim(&mut self) -> Result<Claim, DslError> {
        let prover_id = self.ident()?;
        self.expect_kw("in")?;
        let region = if self.is_kw("polygon") {
            RegionRef::Inline(self.polygon()?)
        } else {
            RegionRef::Named(self.ident()?)
        };
        self.expect_kw("during")?;
        let (start, end) = self.interval()?;
        let mut claim = Claim {
            prover_id,
            region,
            start,
            end,
            min_samples: 1,
            max_gap: (end - start) as u64,
            flags: ClaimFlags::default(),
            proximity_bound_m: None,
        };
        let mut seen = BTreeSet::new();
        while let Some(Tok::Ident(kw)) = self.peek().cloned() {
            if !seen.insert(kw.clone()) {
                return self.invalid(format!("`{kw}` given twice"));
            }
            self.pos += 1;
            match kw.as_str() {
                "gap" => {
                    self.expect(Tok::Le)?;
                    claim.max_gap = self.duration()?;
                }
                "samples" => {
                    self.expect(Tok::Ge)?;
                    claim.min_samples = self.integer("sample count")?;
                }
                "proximity" => {
                    claim.flags.require_proximity = true;
                    if self.eat(&Tok::Le) {
                        let d = self.distance()?;
                        if d.fract() != 0.0 || d > u32::MAX as f64 {
                            return self.invalid("proximity bound must be whole meters");
                        }
                        claim.proximity_bound_m = Some(d as u32);
                    }
                }
                "nontransferable" => claim.flags.require_nontransferability = true,
                _ => {
                    self.pos -= 1;
                    return self.fail("`gap`, `samples`, `proximity` or `nontransferable`");
                }
            }
        }
        if let Err(DslError::Validation { msg, .. }) = validate_claim(&claim) {
            return self.invalid(msg);
        }
        Ok(claim)
    }

    fn expr(&mut self) -> Result<Formula, DslError> {
        let mut f = self.and_expr()?;
        while self.eat_kw("or") {
            f = Formula::or(f, self.and_expr()?);
        }
        Ok(f)
    }

    fn and_expr(&mut self) -> Result<Formula, DslError> {
        let mut f = self.unary()?;
        while self.eat_kw("and") {
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, DslError> {
        if self.eat_kw("not") {
            return Ok(Formula::negate(self.unary()?));
        }
        if self.eat(&Tok::LParen) {
            let f = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        self.atom()
    }

    fn time_ref(&mut self) -> Result<TimeRef, DslError> {
        match self.peek().cloned() {
            Some(Tok::Timestamp(t)) => {
                self.pos += 1;
                Ok(TimeRef::At(t))
            }
            Some(Tok::Ident(s)) if s == "t" => {
                self.pos += 1;
                Ok(TimeRef::Bound)
            }
            Some(Tok::Ident(_)) => Ok(TimeRef::Event(self.ident()?)),
            _ => self.fail("timestamp, event name or `t`"),
        }
    }

    fn place(&mut self) -> Result<Place, DslError> {
        if self.eat_kw("cell") {
            self.expect(Tok::LParen)?;
            let q = self.integer("cell q")?;
            self.expect(Tok::Comma)?;
            let r = self.integer("cell r")?;
            self.expect(Tok::Comma)?;
            let res: u8 = self.integer("cell resolution")?;
            self.expect(Tok::RParen)?;
            if res > MAX_RESOLUTION {
                return self.invalid(format!("resolution {res} exceeds {MAX_RESOLUTION}"));
            }
            return Ok(Place::Cell(CellId::new(q, r, res)));
        }
        Ok(Place::Region(self.ident()?))
    }

    fn atom(&mut self) -> Result<Formula, DslError> {
        let Some(Tok::Ident(kw)) = self.peek().cloned() else {
            return self.fail("formula");
        };
        self.pos += 1;
        match kw.as_str() {
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::False),
            "loc" => {
                self.expect(Tok::LParen)?;
                let prover = self.ident()?;
                self.expect(Tok::Comma)?;
                let place = self.place()?;
                self.expect(Tok::Comma)?;
                let time = self.time_ref()?;
                self.expect(Tok::RParen)?;
                Ok(Formula::Loc { prover, place, time })
            }
            "dist" => {
                self.expect(Tok::LParen)?;
                let prover = self.ident()?;
                self.expect(Tok::Comma)?;
                let anchor = self.ident()?;
                let time = if self.eat(&Tok::Comma) {
                    self.time_ref()?
                } else {
                    TimeRef::Bound
                };
                self.expect(Tok::RParen)?;
                self.expect(Tok::Le)?;
                let bound_m = self.distance()?;
                Ok(Formula::Dist {
                    prover,
                    anchor,
                    time,
                    bound_m,
                })
            }
            "time" => {
                self.expect(Tok::LParen)?;
                let before = self.ident()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Lt)?;
                self.expect_kw("time")?;
                self.expect(Tok::LParen)?;
                let after = self.ident()?;
                self.expect(Tok::RParen)?;
                Ok(Formula::TimeOrder { before, after })
            }
            "always" => {
                let prover = self.ident()?;
                self.expect_kw("in")?;
                let region = self.ident()?;
                self.expect_kw("during")?;
                let (start, end) = self.interval()?;
                let mut min_samples = 1;
                let mut max_gap = None;
                loop {
                    if self.eat_kw("samples") {
                        self.expect(Tok::Ge)?;
                        min_samples = self.integer("sample count")?;
                    } else if self.eat_kw("gap") {
                        self.expect(Tok::Le)?;
                        let g = self.duration()?;
                        if g == 0 {
                            return self.invalid("gap bound must be positive");
                        }
                        max_gap = Some(g);
                    } else {
                        break;
                    }
                }
                let inner = if self.eat(&Tok::LParen) {
                    let f = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Some(Box::new(f))
                } else {
                    None
                };
                Ok(Formula::IntervalBox {
                    prover,
                    region,
                    start,
                    end,
                    min_samples,
                    max_gap,
                    inner,
                })
            }
            _ => {
                self.pos -= 1;
                self.fail("`true`, `false`, `loc`, `dist`, `time`, `always`, `not` or `(`")
            }
        }
    }
}

/// Words with grammatical meaning; not usable as names.
pub const RESERVED: &[&str] = &[
    "prover", "region", "anchor", "event", "claim", "formula", "in", "during", "on", "at", "gap",
    "samples", "proximity", "nontransferable", "polygon", "and", "or", "not", "true", "false",
    "loc", "dist", "time", "always", "cell", "t",
];

pub fn parse_document(src: &str) -> Result<Document, DslError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let mut doc = Document::default();
    let mut formula_lines = Vec::new();
    while let Some(tok) = p.peek().cloned() {
        if tok == Tok::Newline {
            p.pos += 1;
            continue;
        }
        let Tok::Ident(kw) = tok else {
            return p.fail("`prover`, `region`, `anchor`, `event`, `claim` or `formula`");
        };
        let line = p.line();
        p.pos += 1;
        match kw.as_str() {
            "prover" => doc.provers.push(p.ident()?),
            "region" => {
                let name = p.ident()?;
                let polygon = if p.eat(&Tok::Eq) {
                    Some(p.polygon()?)
                } else {
                    None
                };
                if doc.regions.iter().any(|r| r.name == name) {
                    return p.invalid(format!("region `{name}` declared twice"));
                }
                doc.regions.push(RegionDecl { name, polygon });
            }
            "anchor" => {
                let name = p.ident()?;
                p.expect_kw("at")?;
                let position = p.point()?;
                doc.anchors.push(AnchorDecl { name, position });
            }
            "event" => {
                let name = p.ident()?;
                p.expect_kw("at")?;
                let time = match p.bump() {
                    Some(Tok::Timestamp(t)) => t,
                    _ => {
                        p.pos -= 1;
                        return p.fail("timestamp");
                    }
                };
                doc.events.push(EventDecl { name, time });
            }
            "claim" => doc.claims.push(p.claim()?),
            "formula" => {
                doc.formulas.push(p.expr()?);
                formula_lines.push(line);
            }
            _ => {
                p.pos -= 1;
                return p.fail("`prover`, `region`, `anchor`, `event`, `claim` or `formula`");
            }
        }
        p.end_of_statement()?;
    }
    for (f, line) in doc.formulas.iter().zip(formula_lines) {
        check_formula(&doc, f, false, line)?;
    }
    Ok(doc)
}

fn check_formula(doc: &Document, f: &Formula, bound: bool, line: usize) -> Result<(), DslError> {
    let undeclared = |kind: &str, name: &str| DslError::Validation {
        line,
        msg: format!("{kind} `{name}` is not declared"),
    };
    let prover = |name: &str| {
        if doc.provers.iter().any(|p| p == name) {
            Ok(())
        } else {
            Err(undeclared("prover", name))
        }
    };
    let region = |name: &str| {
        if doc.regions.iter().any(|r| r.name == name) {
            Ok(())
        } else {
            Err(DslError::UnknownRegion {
                name: name.to_string(),
            })
        }
    };
    let time = |t: &TimeRef| match t {
        TimeRef::At(_) => Ok(()),
        TimeRef::Bound if bound => Ok(()),
        TimeRef::Bound => Err(DslError::Validation {
            line,
            msg: "`t` is only bound inside `always`".into(),
        }),
        TimeRef::Event(e) if doc.events.iter().any(|d| &d.name == e) => Ok(()),
        TimeRef::Event(e) => Err(undeclared("event", e)),
    };
    match f {
        Formula::True | Formula::False => Ok(()),
        Formula::Loc {
            prover: p,
            place,
            time: t,
        } => {
            prover(p)?;
            if let Place::Region(r) = place {
                region(r)?;
            }
            time(t)
        }
        Formula::Dist {
            prover: p,
            anchor,
            time: t,
            ..
        } => {
            prover(p)?;
            if !doc.anchors.iter().any(|a| &a.name == anchor) {
                return Err(undeclared("anchor", anchor));
            }
            time(t)
        }
        Formula::TimeOrder { before, after } => {
            for e in [before, after] {
                time(&TimeRef::Event(e.clone()))?;
            }
            Ok(())
        }
        Formula::IntervalBox {
            prover: p,
            region: r,
            inner,
            ..
        } => {
            prover(p)?;
            region(r)?;
            match inner {
                Some(i) => check_formula(doc, i, true, line),
                None => Ok(()),
            }
        }
        Formula::And { left, right } | Formula::Or { left, right } => {
            check_formula(doc, left, bound, line)?;
            check_formula(doc, right, bound, line)
        }
        Formula::Not { inner } => check_formula(doc, inner, bound, line),
    }
}
