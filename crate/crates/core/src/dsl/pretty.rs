use std::fmt::Write;

use chrono::DateTime;

use super::ast::*;

pub fn format_time(t: i64) -> String {
    match DateTime::from_timestamp(t, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => t.to_string(),
    }
}

fn points(pts: &[(f64, f64)]) -> String {
    let inner: Vec<String> = pts.iter().map(|(x, y)| format!("({x}, {y})")).collect();
    format!("polygon [{}]", inner.join(", "))
}

fn time_ref(t: &TimeRef) -> String {
    match t {
        TimeRef::At(t) => format_time(*t),
        TimeRef::Event(e) => e.clone(),
        TimeRef::Bound => "t".into(),
    }
}

pub fn print_claim(c: &Claim) -> String {
    let region = match &c.region {
        RegionRef::Named(n) => n.clone(),
        RegionRef::Inline(p) => points(p),
    };
    let mut s = format!(
        "claim {} in {} during [{}, {}] gap<={}s samples>={}",
        c.prover_id,
        region,
        format_time(c.start),
        format_time(c.end),
        c.max_gap,
        c.min_samples
    );
    if c.flags.require_proximity {
        s.push_str(" proximity");
        if let Some(b) = c.proximity_bound_m {
            let _ = write!(s, "<={b}m");
        }
    }
    if c.flags.require_nontransferability {
        s.push_str(" nontransferable");
    }
    s
}

pub fn print_formula(f: &Formula) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Loc { prover, place, time } => {
            let place = match place {
                Place::Region(r) => r.clone(),
                Place::Cell(c) => format!("cell({}, {}, {})", c.q, c.r, c.resolution),
            };
            format!("loc({prover}, {place}, {})", time_ref(time))
        }
        Formula::Dist {
            prover,
            anchor,
            time,
            bound_m,
        } => format!("dist({prover}, {anchor}, {}) <= {bound_m}m", time_ref(time)),
        Formula::TimeOrder { before, after } => format!("time({before}) < time({after})"),
        Formula::IntervalBox {
            prover,
            region,
            start,
            end,
            min_samples,
            max_gap,
            inner,
        } => {
            let mut s = format!(
                "always {prover} in {region} during [{}, {}] samples>={min_samples}",
                format_time(*start),
                format_time(*end)
            );
            if let Some(g) = max_gap {
                let _ = write!(s, " gap<={g}s");
            }
            if let Some(i) = inner {
                let _ = write!(s, " ({})", print_formula(i));
            }
            s
        }
        Formula::And { left, right } => {
            format!("({} and {})", print_formula(left), print_formula(right))
        }
        Formula::Or { left, right } => {
            format!("({} or {})", print_formula(left), print_formula(right))
        }
        Formula::Not { inner } => format!("not {}", print_formula(inner)),
    }
}

pub fn print_document(d: &Document) -> String {
    let mut s = String::new();
    for p in &d.provers {
        let _ = writeln!(s, "prover {p}");
    }
    for r in &d.regions {
        match &r.polygon {
            Some(p) => {
                let _ = writeln!(s, "region {} = {}", r.name, points(p));
            }
            None => {
                let _ = writeln!(s, "region {}", r.name);
            }
        }
    }
    for a in &d.anchors {
        let _ = writeln!(s, "anchor {} at ({}, {})", a.name, a.position.0, a.position.1);
    }
    for e in &d.events {
        let _ = writeln!(s, "event {} at {}", e.name, format_time(e.time));
    }
    for c in &d.claims {
        let _ = writeln!(s, "{}", print_claim(c));
    }
    for f in &d.formulas {
        let _ = writeln!(s, "formula {}", print_formula(f));
    }
    s
}
