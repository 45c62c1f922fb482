//! k-anonymity by interval generalization of quasi-identifier columns.
//!
//! Every quasi-identifier column starts with one interval per distinct
//! value. While some joint tuple of interval labels occurs fewer than `k`
//! times, the rarest such tuple has one of its intervals merged with an
//! adjacent interval in the same column, picking the merge that yields the
//! narrowest interval relative to the column's span. Generalized values are
//! interval midpoints.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KAnonConfig {
    pub k: usize,
    pub quasi_identifiers: Vec<String>,
}

/// Closed interval with its generalized value; serialized as `[low, high, representative]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    pub representative: f64,
}

impl Interval {
    pub fn new(low: f64, high: f64) -> Self {
        Self {
            low,
            high,
            representative: (low + high) / 2.0,
        }
    }

    fn distance(&self, v: f64) -> f64 {
        if v < self.low {
            self.low - v
        } else if v > self.high {
            v - self.high
        } else {
            0.0
        }
    }
}

impl From<[f64; 3]> for Interval {
    fn from([low, high, representative]: [f64; 3]) -> Self {
        Self {
            low,
            high,
            representative,
        }
    }
}

impl From<Interval> for [f64; 3] {
    fn from(i: Interval) -> Self {
        [i.low, i.high, i.representative]
    }
}

/// Ordered disjoint intervals per quasi-identifier column.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GeneralizationMapping {
    pub columns: BTreeMap<String, Vec<Interval>>,
}

impl GeneralizationMapping {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Index of the interval containing `v`, or the nearest one (lower on ties).
    fn locate(intervals: &[Interval], v: f64) -> usize {
        let pos = intervals.partition_point(|iv| iv.high < v);
        if pos < intervals.len() && intervals[pos].low <= v {
            return pos;
        }
        match (pos.checked_sub(1), (pos < intervals.len()).then_some(pos)) {
            (Some(l), Some(r)) => {
                if intervals[r].distance(v) < intervals[l].distance(v) {
                    r
                } else {
                    l
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!("mappings never hold empty columns"),
        }
    }
}

fn qi_columns(data: &TabularDataset, names: &[String]) -> Result<Vec<Vec<f64>>> {
    names
        .iter()
        .map(|name| {
            let idx = data
                .column_index(name)
                .ok_or_else(|| Error::invalid(format!("unknown quasi-identifier column {name}")))?;
            Ok(data.features().column(idx).to_vec())
        })
        .collect()
}

/// Greedy adjacent-interval merging until every joint tuple has frequency >= k.
fn merge_until_k(intervals: &mut [Vec<Interval>], values: &[Vec<f64>], k: usize) -> Result<()> {
    let rows = values.first().map_or(0, Vec::len);
    if k > rows {
        return Err(Error::invalid(format!("k = {k} exceeds the {rows} available rows")));
    }
    let spans: Vec<f64> = intervals
        .iter()
        .map(|col| col.last().map_or(0.0, |l| l.high) - col.first().map_or(0.0, |f| f.low))
        .collect();
    loop {
        let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for r in 0..rows {
            let key = intervals
                .iter()
                .zip(values)
                .map(|(col, vals)| GeneralizationMapping::locate(col, vals[r]))
                .collect();
            *counts.entry(key).or_default() += 1;
        }
        let Some((tuple, _)) = counts
            .iter()
            .filter(|(_, &c)| c < k)
            .min_by_key(|(_, &c)| c)
        else {
            return Ok(());
        };

        let mut best: Option<(f64, usize, usize)> = None;
        for (c, &i) in tuple.iter().enumerate() {
            let col = &intervals[c];
            let neighbours = [i.checked_sub(1), (i + 1 < col.len()).then_some(i + 1)];
            for j in neighbours.into_iter().flatten() {
                let (lo, hi) = (i.min(j), i.max(j));
                let width = col[hi].high - col[lo].low;
                let cost = if spans[c] > 0.0 { width / spans[c] } else { 0.0 };
                if best.is_none_or(|(b, _, _)| cost < b) {
                    best = Some((cost, c, lo));
                }
            }
        }
        let (_, c, lo) = best.ok_or_else(|| {
            Error::invalid("cannot reach k-anonymity: every column is fully generalized")
        })?;
        let col = &mut intervals[c];
        col[lo] = Interval::new(col[lo].low, col[lo + 1].high);
        col.remove(lo + 1);
    }
}

/// Fits a generalization mapping that makes `train` k-anonymous over the
/// configured quasi-identifiers.
pub fn fit_k_anonymity(train: &TabularDataset, cfg: &KAnonConfig) -> Result<GeneralizationMapping> {
    if cfg.k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if cfg.k > train.len() {
        return Err(Error::invalid(format!(
            "k = {} exceeds the {} training rows",
            cfg.k,
            train.len()
        )));
    }
    let values = qi_columns(train, &cfg.quasi_identifiers)?;
    let mut intervals: Vec<Vec<Interval>> = values
        .iter()
        .map(|col| {
            let mut distinct = col.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            distinct.into_iter().map(|v| Interval::new(v, v)).collect()
        })
        .collect();
    merge_until_k(&mut intervals, &values, cfg.k)?;
    Ok(GeneralizationMapping {
        columns: cfg.quasi_identifiers.iter().cloned().zip(intervals).collect(),
    })
}

/// Replaces each quasi-identifier value with its interval's representative.
/// Values outside every interval take the nearest interval's representative.
pub fn apply_mapping(data: &TabularDataset, mapping: &GeneralizationMapping) -> Result<TabularDataset> {
    let mut features = data.features().clone();
    for (name, intervals) in &mapping.columns {
        let idx = data
            .column_index(name)
            .ok_or_else(|| Error::invalid(format!("dataset has no column {name}")))?;
        if intervals.is_empty() {
            return Err(Error::invalid(format!("mapping for {name} has no intervals")));
        }
        features
            .column_mut(idx)
            .mapv_inplace(|v| intervals[GeneralizationMapping::locate(intervals, v)].representative);
    }
    data.with_features(features)
}

/// Combines client mappings for use on the aggregator's data: the union of
/// all client interval boundaries forms the starting intervals, which are
/// then re-merged until `data` is k-anonymous.
pub fn merge_mappings(
    mappings: &[GeneralizationMapping],
    data: &TabularDataset,
    k: usize,
) -> Result<GeneralizationMapping> {
    let first = mappings
        .first()
        .ok_or_else(|| Error::invalid("no mappings to merge"))?;
    let names: Vec<String> = first.columns.keys().cloned().collect();
    if mappings
        .iter()
        .any(|m| m.columns.keys().ne(first.columns.keys()))
    {
        return Err(Error::invalid("client mappings cover different columns"));
    }

    let mut intervals = Vec::with_capacity(names.len());
    for name in &names {
        let all: Vec<&Interval> = mappings.iter().flat_map(|m| &m.columns[name]).collect();
        let mut cuts: Vec<f64> = all.iter().map(|iv| iv.low).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut bounds: Vec<f64> = all.iter().flat_map(|iv| [iv.low, iv.high]).collect();
        bounds.sort_by(f64::total_cmp);
        bounds.dedup();
        let col: Vec<Interval> = cuts
            .iter()
            .enumerate()
            .map(|(j, &low)| {
                let next = cuts.get(j + 1).copied().unwrap_or(f64::INFINITY);
                let high = bounds
                    .iter()
                    .copied()
                    .filter(|&b| b < next)
                    .fold(low, f64::max);
                Interval::new(low, high)
            })
            .collect();
        intervals.push(col);
    }
    let values = qi_columns(data, &names)?;
    merge_until_k(&mut intervals, &values, k)?;
    Ok(GeneralizationMapping {
        columns: names.into_iter().zip(intervals).collect(),
    })
}
