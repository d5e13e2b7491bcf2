//! Quantile-based EP/ED grouping.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Four EP/ED quadrant groups; `A` are the cautious explorers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    /// High EP, low ED.
    A,
    /// Low EP, low ED.
    B,
    /// High EP, high ED.
    C,
    /// Low EP, high ED.
    D,
    Excluded,
}

impl Group {
    pub const LABELED: [Group; 4] = [Group::A, Group::B, Group::C, Group::D];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::A => "A",
            Group::B => "B",
            Group::C => "C",
            Group::D => "D",
            Group::Excluded => "excluded",
        }
    }

    pub fn parse(s: &str) -> Option<Group> {
        match s {
            "A" | "a" => Some(Group::A),
            "B" | "b" => Some(Group::B),
            "C" | "c" => Some(Group::C),
            "D" | "d" => Some(Group::D),
            "excluded" => Some(Group::Excluded),
            _ => None,
        }
    }

    pub fn is_labeled(self) -> bool {
        self != Group::Excluded
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Linear-interpolation sample quantile (type 7) of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    High,
    Low,
    Middle,
}

/// High/low classification at quantile `q` percent. Values equal to the
/// upper threshold are high; low excludes anything already high.
pub fn classify(values: &[f64], q_percent: f64) -> (Vec<Level>, bool) {
    if values.is_empty() {
        return (Vec::new(), false);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let degenerate = sorted[0] == sorted[sorted.len() - 1];
    let upper = quantile_sorted(&sorted, 1.0 - q_percent / 100.0);
    let lower = quantile_sorted(&sorted, q_percent / 100.0);
    let levels = values
        .iter()
        .map(|&v| {
            if v >= upper {
                Level::High
            } else if v <= lower {
                Level::Low
            } else {
                Level::Middle
            }
        })
        .collect();
    (levels, degenerate)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupAssignment {
    pub groups: Vec<Group>,
    pub degenerate_ep: bool,
    pub degenerate_ed: bool,
}

impl GroupAssignment {
    pub fn count(&self, g: Group) -> usize {
        self.groups.iter().filter(|&&x| x == g).count()
    }
}

/// Assigns A/B/C/D from parallel EP and ED vectors at quantile `q_percent`.
pub fn assign_groups(ep: &[f64], ed: &[f64], q_percent: f64) -> GroupAssignment {
    assert_eq!(ep.len(), ed.len(), "EP and ED lengths differ");
    let (ep_lv, degenerate_ep) = classify(ep, q_percent);
    let (ed_lv, degenerate_ed) = classify(ed, q_percent);
    let groups = ep_lv
        .iter()
        .zip(&ed_lv)
        .map(|(e, d)| match (e, d) {
            (Level::High, Level::Low) => Group::A,
            (Level::Low, Level::Low) => Group::B,
            (Level::High, Level::High) => Group::C,
            (Level::Low, Level::High) => Group::D,
            _ => Group::Excluded,
        })
        .collect();
    GroupAssignment {
        groups,
        degenerate_ep,
        degenerate_ed,
    }
}
