//! Wall-clock to slot mapping and an in-process append-only ledger.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::{sha256, Digest};

pub const DEFAULT_SLOT_SECONDS: u64 = 12;
pub const FAST_SLOT_SECONDS: u64 = 1;

#[derive(Debug, Error)]
pub enum SlotError {
    #[error("time {t} precedes genesis {genesis}")]
    PreGenesis { t: i64, genesis: i64 },
    #[error("slot {slot} is earlier than the last anchored slot {last}")]
    OutOfOrder { slot: u64, last: u64 },
    #[error("slot duration must be positive")]
    ZeroDuration,
    #[error("ledger line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Slots are half-open windows `[genesis + n*d, genesis + (n+1)*d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotClock {
    pub genesis: i64,
    pub slot_duration: u64,
}

impl Default for SlotClock {
    fn default() -> Self {
        SlotClock {
            genesis: 0,
            slot_duration: DEFAULT_SLOT_SECONDS,
        }
    }
}

impl SlotClock {
    pub fn new(genesis: i64, slot_duration: u64) -> Result<Self, SlotError> {
        if slot_duration == 0 {
            return Err(SlotError::ZeroDuration);
        }
        Ok(SlotClock {
            genesis,
            slot_duration,
        })
    }

    pub fn slot_of(&self, t: i64) -> Result<u64, SlotError> {
        if t < self.genesis {
            return Err(SlotError::PreGenesis {
                t,
                genesis: self.genesis,
            });
        }
        Ok((t - self.genesis) as u64 / self.slot_duration)
    }

    pub fn slot_start(&self, slot: u64) -> i64 {
        self.genesis + (slot * self.slot_duration) as i64
    }

    /// Largest slot gap a gap of `max_gap_secs` seconds may produce.
    pub fn max_gap_slots(&self, max_gap_secs: u64) -> u64 {
        max_gap_secs.div_ceil(self.slot_duration)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LedgerEntry {
    pub slot: u64,
    pub digest: Digest,
}

#[derive(Serialize, Deserialize)]
struct EntryLine {
    slot: u64,
    digest_hex: String,
}

/// Single-writer append-only log of `(slot, digest)` anchors.
#[derive(Clone, Debug, Default)]
pub struct LedgerSim {
    entries: Vec<LedgerEntry>,
    index: HashMap<Digest, usize>,
}

impl LedgerSim {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn anchor(&mut self, slot: u64, digest: Digest) -> Result<usize, SlotError> {
        if let Some(last) = self.entries.last() {
            if slot < last.slot {
                return Err(SlotError::OutOfOrder {
                    slot,
                    last: last.slot,
                });
            }
        }
        let idx = self.entries.len();
        self.entries.push(LedgerEntry { slot, digest });
        self.index.entry(digest).or_insert(idx);
        Ok(idx)
    }

    /// First entry anchoring `digest`.
    pub fn lookup(&self, digest: &Digest) -> Option<&LedgerEntry> {
        self.index.get(digest).map(|i| &self.entries[*i])
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn current_slot(&self) -> Option<u64> {
        self.entries.last().map(|e| e.slot)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries_digest(&self) -> Digest {
        let mut buf = Vec::with_capacity(self.entries.len() * 40);
        for e in &self.entries {
            buf.extend_from_slice(&e.slot.to_be_bytes());
            buf.extend_from_slice(&e.digest);
        }
        sha256(&[b"pol/ledger/v1", &buf])
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), SlotError> {
        for e in &self.entries {
            let line = EntryLine {
                slot: e.slot,
                digest_hex: hex::encode(e.digest),
            };
            let json = serde_json::to_string(&line).expect("plain struct serializes");
            writeln!(w, "{json}")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, SlotError> {
        let mut ledger = LedgerSim::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: String| SlotError::Malformed { line: n + 1, msg };
            let e: EntryLine = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            let digest: Digest = hex::decode(&e.digest_hex)
                .map_err(|e| bad(e.to_string()))?
                .try_into()
                .map_err(|_| bad("digest must be 32 bytes".into()))?;
            ledger.anchor(e.slot, digest)?;
        }
        Ok(ledger)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn genesis_is_slot_zero() {
        let c = SlotClock::new(1_700_000_000, 12).unwrap();
        assert_eq!(c.slot_of(1_700_000_000).unwrap(), 0);
        assert_eq!(c.slot_of(1_700_000_025).unwrap(), 2);
        assert!(matches!(c.slot_of(1_699_999_999), Err(SlotError::PreGenesis { .. })));
        assert!(SlotClock::new(0, 0).is_err());
    }

    #[test]
    fn slot_matches_subtraction_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let d = rng.gen_range(1..=30u64);
            let genesis = rng.gen_range(-10_000..10_000i64);
            let t = genesis + rng.gen_range(0..5_000i64);
            let mut rest = t - genesis;
            let mut n = 0;
            while rest >= d as i64 {
                rest -= d as i64;
                n += 1;
            }
            assert_eq!(SlotClock::new(genesis, d).unwrap().slot_of(t).unwrap(), n);
        }
    }

    #[test]
    fn slot_is_monotone() {
        let c = SlotClock::new(0, FAST_SLOT_SECONDS).unwrap();
        let mut prev = 0;
        for t in 0..10_000 {
            let s = c.slot_of(t).unwrap();
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn max_gap_rounds_up() {
        let c = SlotClock::default();
        assert_eq!(c.max_gap_slots(300), 25);
        assert_eq!(c.max_gap_slots(301), 26);
        assert_eq!(c.max_gap_slots(60), 5);
    }

    #[test]
    fn anchor_and_lookup() {
        let mut l = LedgerSim::new();
        let d = sha256(&[b"root"]);
        l.anchor(5, d).unwrap();
        assert_eq!(l.lookup(&d).unwrap().slot, 5);
        assert!(matches!(
            l.anchor(3, sha256(&[b"x"])),
            Err(SlotError::OutOfOrder { slot: 3, last: 5 })
        ));
    }

    #[test]
    fn random_appends_and_absent_lookups() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut slots: Vec<u64> = (0..100).map(|_| rng.gen_range(0..1000)).collect();
        slots.sort();
        let mut l = LedgerSim::new();
        let present: Vec<Digest> = (0..100u32).map(|i| sha256(&[&i.to_be_bytes()])).collect();
        for (s, d) in slots.iter().zip(&present) {
            l.anchor(*s, *d).unwrap();
        }
        for (s, d) in slots.iter().zip(&present) {
            assert_eq!(l.lookup(d).unwrap().slot, *s);
        }
        for i in 100..200u32 {
            assert!(l.lookup(&sha256(&[&i.to_be_bytes()])).is_none());
        }
    }

    #[test]
    fn reads_leave_digest_unchanged_and_jsonl_round_trips() {
        let mut l = LedgerSim::new();
        for i in 0..10u64 {
            l.anchor(i * 3, sha256(&[&i.to_be_bytes()])).unwrap();
        }
        let before = l.entries_digest();
        let _ = l.lookup(&sha256(&[b"nothing"]));
        let _ = l.entries().len();
        assert_eq!(before, l.entries_digest());
        let mut buf = Vec::new();
        l.write_jsonl(&mut buf).unwrap();
        let back = LedgerSim::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back.entries_digest(), before);
    }
}
