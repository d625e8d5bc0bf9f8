use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A subset of `N0` known on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSet {
    elems: Vec<u64>,
    horizon: u64,
}

impl IndexSet {
    pub fn empty(horizon: u64) -> Self {
        Self {
            elems: Vec::new(),
            horizon,
        }
    }

    /// Sorts and deduplicates; elements above the horizon are rejected.
    pub fn new(mut elems: Vec<u64>, horizon: u64) -> Result<Self> {
        elems.sort_unstable();
        elems.dedup();
        if let Some(&top) = elems.last() {
            if top > horizon {
                return Err(Error::out_of_range("element", top, format!("[0, {horizon}]")));
            }
        }
        Ok(Self { elems, horizon })
    }

    /// Keeps the elements of `elems` that lie in `[0, horizon]`.
    pub fn truncated<I: IntoIterator<Item = u64>>(elems: I, horizon: u64) -> Self {
        let mut v: Vec<u64> = elems.into_iter().filter(|&e| e <= horizon).collect();
        v.sort_unstable();
        v.dedup();
        Self { elems: v, horizon }
    }

    pub(crate) fn from_sorted_unchecked(elems: Vec<u64>, horizon: u64) -> Self {
        debug_assert!(elems.windows(2).all(|w| w[0] < w[1]));
        Self { elems, horizon }
    }

    pub fn elems(&self) -> &[u64] {
        &self.elems
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, n: u64) -> bool {
        self.elems.binary_search(&n).is_ok()
    }

    /// `#(E ∩ [0, n])`.
    pub fn count_upto(&self, n: u64) -> usize {
        self.elems.partition_point(|&e| e <= n)
    }

    /// `{e + p : e in E, e + p <= horizon}`.
    pub fn shifted(&self, p: u64) -> IndexSet {
        IndexSet {
            elems: self.elems.iter().map(|e| e + p).filter(|&e| e <= self.horizon).collect(),
            horizon: self.horizon,
        }
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.elems.iter().all(|&e| other.contains(e))
    }

    /// Parses one integer per line; `#` starts a comment.
    pub fn parse(text: &str, horizon: Option<u64>) -> Result<Self> {
        let mut elems = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let value: u64 = line.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("expected a non-negative integer, found `{line}`"),
            })?;
            if let Some(&prev) = elems.last() {
                if value <= prev {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: format!("{value} does not increase on the previous element {prev}"),
                    });
                }
            }
            elems.push(value);
        }
        let horizon = horizon.unwrap_or_else(|| elems.last().copied().unwrap_or(0));
        let kept: Vec<u64> = elems.into_iter().filter(|&e| e <= horizon).collect();
        Ok(Self::from_sorted_unchecked(kept, horizon))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# horizon {}\n", self.horizon);
        for e in &self.elems {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_accepts_comments_and_blank_lines() {
        let s = IndexSet::parse("# evens\n0\n\n2 # two\n4\n", Some(10)).unwrap();
        assert_eq!(s.elems(), &[0, 2, 4]);
        assert_eq!(s.horizon(), 10);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = IndexSet::parse("1\n2\nfoo\n", None).unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                message: "expected a non-negative integer, found `foo`".into()
            }
        );
        assert!(matches!(IndexSet::parse("3\n2\n", None), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn text_round_trip() {
        let s = IndexSet::new(vec![5, 1, 3, 3], 9).unwrap();
        assert_eq!(IndexSet::parse(&s.to_text(), Some(9)).unwrap(), s);
    }

    #[test]
    fn new_rejects_elements_past_horizon() {
        assert!(IndexSet::new(vec![11], 10).is_err());
        assert_eq!(IndexSet::truncated([11, 2], 10).elems(), &[2]);
    }
}
