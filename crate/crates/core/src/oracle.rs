//! Ground-truth evaluation of formulas against true trajectories.
//!
//! Positions are decided with [`HexGrid::locate`]; times are compared at
//! slot granularity so that interval windows, coverage and gaps mean the
//! same thing here as in the constraint system.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{Claim, Formula, Place, TimeRef};
use crate::grid::{CellId, HexGrid};
use crate::harness::ScenarioResult;
use crate::slots::SlotClock;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("unbound identifier `{0}`")]
    UnboundIdentifier(String),
    #[error("trajectory times must be strictly increasing")]
    Unsorted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: i64,
    pub x: f64,
    pub y: f64,
}

/// Where a prover really was. Times strictly increase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub prover_id: String,
    samples: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn new(prover_id: &str, samples: Vec<TrajectoryPoint>) -> Result<Self, OracleError> {
        if samples.windows(2).any(|w| w[0].t >= w[1].t) {
            return Err(OracleError::Unsorted);
        }
        Ok(Trajectory {
            prover_id: prover_id.to_string(),
            samples,
        })
    }

    pub fn samples(&self) -> &[TrajectoryPoint] {
        &self.samples
    }

    pub fn at(&self, t: i64) -> Option<&TrajectoryPoint> {
        self.samples
            .binary_search_by_key(&t, |p| p.t)
            .ok()
            .map(|i| &self.samples[i])
    }

    /// Copy without the sample at `index`.
    pub fn without(&self, index: usize) -> Self {
        let mut samples = self.samples.clone();
        samples.remove(index);
        Trajectory {
            prover_id: self.prover_id.clone(),
            samples,
        }
    }
}

/// Everything a closed formula may mention.
#[derive(Clone, Debug)]
pub struct World {
    pub grid: HexGrid,
    pub clock: SlotClock,
    pub regions: BTreeMap<String, BTreeSet<CellId>>,
    pub anchors: BTreeMap<String, (f64, f64)>,
    pub events: BTreeMap<String, i64>,
    pub trajectories: BTreeMap<String, Trajectory>,
}

impl World {
    pub fn new(grid: HexGrid, clock: SlotClock) -> Self {
        World {
            grid,
            clock,
            regions: BTreeMap::new(),
            anchors: BTreeMap::new(),
            events: BTreeMap::new(),
            trajectories: BTreeMap::new(),
        }
    }

    pub fn with_trajectory(mut self, t: Trajectory) -> Self {
        self.trajectories.insert(t.prover_id.clone(), t);
        self
    }

    pub fn with_region(mut self, name: &str, cells: impl IntoIterator<Item = CellId>) -> Self {
        self.regions.insert(name.to_string(), cells.into_iter().collect());
        self
    }

    fn trajectory(&self, p: &str) -> Result<&Trajectory, OracleError> {
        self.trajectories
            .get(p)
            .ok_or_else(|| OracleError::UnboundIdentifier(p.to_string()))
    }

    fn region(&self, r: &str) -> Result<&BTreeSet<CellId>, OracleError> {
        self.regions
            .get(r)
            .ok_or_else(|| OracleError::UnboundIdentifier(r.to_string()))
    }

    fn in_place(&self, place: &Place, x: f64, y: f64) -> Result<bool, OracleError> {
        Ok(match place {
            Place::Region(r) => self.region(r)?.contains(&self.grid.locate(x, y)),
            Place::Cell(c) => match HexGrid::new(c.resolution) {
                Ok(g) => g.locate(x, y) == *c,
                Err(_) => false,
            },
        })
    }

    fn instant(&self, t: &TimeRef, bound: Option<i64>) -> Result<i64, OracleError> {
        match t {
            TimeRef::At(t) => Ok(*t),
            TimeRef::Event(e) => self
                .events
                .get(e)
                .copied()
                .ok_or_else(|| OracleError::UnboundIdentifier(e.clone())),
            TimeRef::Bound => bound.ok_or_else(|| OracleError::UnboundIdentifier("t".into())),
        }
    }
}

/// Decides a closed formula.
///
/// `Loc` and `Dist` need a trajectory sample at exactly the named instant and
/// are false otherwise. `always` quantifies over the samples whose slot lies
/// in the interval's inclusive slot window.
pub fn eval(f: &Formula, world: &World) -> Result<bool, OracleError> {
    eval_at(f, world, None)
}

fn eval_at(f: &Formula, w: &World, bound: Option<i64>) -> Result<bool, OracleError> {
    match f {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Loc {
            prover,
            place,
            time,
        } => {
            let tr = w.trajectory(prover)?;
            let t = w.instant(time, bound)?;
            match tr.at(t) {
                Some(p) => w.in_place(place, p.x, p.y),
                None => {
                    if let Place::Region(r) = place {
                        w.region(r)?;
                    }
                    Ok(false)
                }
            }
        }
        Formula::Dist {
            prover,
            anchor,
            time,
            bound_m,
        } => {
            let tr = w.trajectory(prover)?;
            let a = *w
                .anchors
                .get(anchor)
                .ok_or_else(|| OracleError::UnboundIdentifier(anchor.clone()))?;
            let t = w.instant(time, bound)?;
            Ok(tr
                .at(t)
                .is_some_and(|p| (p.x - a.0).hypot(p.y - a.1) <= *bound_m))
        }
        Formula::TimeOrder { before, after } => {
            let a = w.instant(&TimeRef::Event(before.clone()), bound)?;
            let b = w.instant(&TimeRef::Event(after.clone()), bound)?;
            Ok(a < b)
        }
        Formula::IntervalBox {
            prover,
            region,
            start,
            end,
            min_samples,
            max_gap,
            inner,
        } => {
            let tr = w.trajectory(prover)?;
            let cells = w.region(region)?;
            let (Ok(s1), Ok(s2)) = (w.clock.slot_of(*start), w.clock.slot_of(*end)) else {
                return Ok(false);
            };
            let window: Vec<(u64, &TrajectoryPoint)> = tr
                .samples()
                .iter()
                .filter_map(|p| w.clock.slot_of(p.t).ok().map(|s| (s, p)))
                .filter(|(s, _)| (s1..=s2).contains(s))
                .collect();
            if !window
                .iter()
                .all(|(_, p)| cells.contains(&w.grid.locate(p.x, p.y)))
            {
                return Ok(false);
            }
            if (window.len() as u64) < *min_samples {
                return Ok(false);
            }
            if let Some(g) = max_gap {
                let limit = w.clock.max_gap_slots(*g);
                if window.windows(2).any(|pair| pair[1].0 - pair[0].0 > limit) {
                    return Ok(false);
                }
            }
            if let Some(inner) = inner {
                for (_, p) in &window {
                    if !eval_at(inner, w, Some(p.t))? {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        Formula::And { left, right } => Ok(eval_at(left, w, bound)? && eval_at(right, w, bound)?),
        Formula::Or { left, right } => Ok(eval_at(left, w, bound)? || eval_at(right, w, bound)?),
        Formula::Not { inner } => Ok(!eval_at(inner, w, bound)?),
    }
}

/// Ground truth of a claim over a named or committed cell set.
pub fn eval_claim(
    claim: &Claim,
    trajectory: &Trajectory,
    region_cells: impl IntoIterator<Item = CellId>,
    grid: HexGrid,
    clock: SlotClock,
) -> Result<bool, OracleError> {
    const REGION: &str = "claimed";
    let f = Formula::IntervalBox {
        prover: claim.prover_id.clone(),
        region: REGION.into(),
        start: claim.start,
        end: claim.end,
        min_samples: claim.min_samples,
        max_gap: Some(claim.max_gap),
        inner: None,
    };
    let mut t = trajectory.clone();
    t.prover_id = claim.prover_id.clone();
    let world = World::new(grid, clock)
        .with_region(REGION, region_cells)
        .with_trajectory(t);
    eval(&f, &world)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub scenario: String,
    pub ground_truth: bool,
    pub verdict: String,
    pub expected_label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub total: usize,
    pub true_claims: usize,
    pub false_claims: usize,
    pub accepted_true: usize,
    pub accepted_false: usize,
    /// `None` when the batch has no true claims.
    pub accept_given_true_rate: Option<f64>,
    /// `None` when the batch has no false claims.
    pub accept_given_false_rate: Option<f64>,
    /// True claims rejected and false claims accepted.
    pub disagreements: Vec<Disagreement>,
    /// Adversarial runs rejected under a label other than the expected one.
    pub label_mismatches: Vec<Disagreement>,
}

pub fn soundness_completeness_report(batch: &[ScenarioResult]) -> SoundnessReport {
    let rate = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let accepted = |r: &&ScenarioResult| r.verdict == "accept";
    let true_claims = batch.iter().filter(|r| r.ground_truth).count();
    let accepted_true = batch.iter().filter(|r| r.ground_truth).filter(accepted).count();
    let accepted_false = batch.iter().filter(|r| !r.ground_truth).filter(accepted).count();
    let entry = |r: &ScenarioResult| Disagreement {
        scenario: r.id(),
        ground_truth: r.ground_truth,
        verdict: r.verdict.clone(),
        expected_label: r.expected_label.clone(),
    };
    let disagreements = batch
        .iter()
        .filter(|r| r.ground_truth != (r.verdict == "accept"))
        .map(entry)
        .collect();
    let label_mismatches = batch
        .iter()
        .filter(|r| r.verdict != "accept" && !r.label_matches())
        .map(entry)
        .collect();
    SoundnessReport {
        total: batch.len(),
        true_claims,
        false_claims: batch.len() - true_claims,
        accepted_true,
        accepted_false,
        accept_given_true_rate: rate(accepted_true, true_claims),
        accept_given_false_rate: rate(accepted_false, batch.len() - true_claims),
        disagreements,
        label_mismatches,
    }
}

impl SoundnessReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let pct = |r: Option<f64>| r.map_or("n/a".to_string(), |r| format!("{r:.4}"));
        let mut s = String::new();
        let _ = writeln!(s, "{:<28} {:>8}", "scenarios", self.total);
        let _ = writeln!(s, "{:<28} {:>8}", "true claims", self.true_claims);
        let _ = writeln!(s, "{:<28} {:>8}", "false claims", self.false_claims);
        let _ = writeln!(s, "{:<28} {:>8}", "accepted | true", self.accepted_true);
        let _ = writeln!(s, "{:<28} {:>8}", "accepted | false", self.accepted_false);
        let _ = writeln!(s, "{:<28} {:>8}", "accept_given_true_rate", pct(self.accept_given_true_rate));
        let _ = writeln!(s, "{:<28} {:>8}", "accept_given_false_rate", pct(self.accept_given_false_rate));
        for d in &self.disagreements {
            let _ = writeln!(
                s,
                "DISAGREE {} truth={} verdict={}",
                d.scenario, d.ground_truth, d.verdict
            );
        }
        for d in &self.label_mismatches {
            let _ = writeln!(
                s,
                "LABEL {} expected={} verdict={}",
                d.scenario,
                d.expected_label.as_deref().unwrap_or("-"),
                d.verdict
            );
        }
        s
    }
}
