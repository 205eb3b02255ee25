use serde::{Deserialize, Serialize};

use crate::grid::CellId;

/// Region named in a header block or given inline as a planar polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionRef {
    Named(String),
    Inline(Vec<(f64, f64)>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimFlags {
    pub require_proximity: bool,
    pub require_nontransferability: bool,
}

/// "Prover stayed in region during [start, end]" with coverage and
/// continuity annotations. Times are Unix seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub prover_id: String,
    pub region: RegionRef,
    pub start: i64,
    pub end: i64,
    pub min_samples: u64,
    /// Seconds.
    pub max_gap: u64,
    pub flags: ClaimFlags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proximity_bound_m: Option<u32>,
}

impl Claim {
    pub fn region_name(&self) -> Option<&str> {
        match &self.region {
            RegionRef::Named(n) => Some(n),
            RegionRef::Inline(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeRef {
    At(i64),
    Event(String),
    /// The enclosing interval's bound time variable `t`.
    Bound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Place {
    Region(String),
    Cell(CellId),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Formula {
    True,
    False,
    Loc {
        prover: String,
        place: Place,
        time: TimeRef,
    },
    Dist {
        prover: String,
        anchor: String,
        time: TimeRef,
        bound_m: f64,
    },
    TimeOrder {
        before: String,
        after: String,
    },
    IntervalBox {
        prover: String,
        region: String,
        start: i64,
        end: i64,
        min_samples: u64,
        max_gap: Option<u64>,
        inner: Option<Box<Formula>>,
    },
    And {
        left: Box<Formula>,
        right: Box<Formula>,
    },
    Or {
        left: Box<Formula>,
        right: Box<Formula>,
    },
    Not {
        inner: Box<Formula>,
    },
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And {
            left: Box::new(a),
            right: Box::new(b),
        }
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or {
            left: Box::new(a),
            right: Box::new(b),
        }
    }

    pub fn negate(a: Formula) -> Formula {
        Formula::Not { inner: Box::new(a) }
    }

    /// Interval box equivalent to a claim over a named region.
    pub fn from_claim(claim: &Claim) -> Option<Formula> {
        Some(Formula::IntervalBox {
            prover: claim.prover_id.clone(),
            region: claim.region_name()?.to_string(),
            start: claim.start,
            end: claim.end,
            min_samples: claim.min_samples,
            max_gap: Some(claim.max_gap),
            inner: None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDecl {
    pub name: String,
    pub polygon: Option<Vec<(f64, f64)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorDecl {
    pub name: String,
    pub position: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventDecl {
    pub name: String,
    pub time: i64,
}

/// A parsed source file: declarations, claims and formulas in source order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub provers: Vec<String>,
    pub regions: Vec<RegionDecl>,
    pub anchors: Vec<AnchorDecl>,
    pub events: Vec<EventDecl>,
    pub claims: Vec<Claim>,
    pub formulas: Vec<Formula>,
}
