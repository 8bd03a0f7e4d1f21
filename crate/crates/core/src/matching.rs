//! Explicit instances and the greedy stable matching.
//!
//! Vertices are 0-based in code. `costs[v * n + w]` is the cost of the edge
//! between left vertex `v` and right vertex `w`.

use std::io::{Read, Write};

use rand::Rng;

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::recursion::{compensated_sum, CostSequence};

/// Largest `n` the direct engine accepts by default (an `n × n` f64 matrix
/// is 200 MB at this size).
pub const DEFAULT_DIRECT_CAP: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    costs: Vec<f64>,
}

impl CostMatrix {
    /// Row-major `n × n` costs; every entry must be finite and nonnegative.
    pub fn new(n: usize, costs: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if costs.len() != n * n {
            return Err(Error::Shape {
                expected: n * n,
                got: costs.len(),
            });
        }
        if let Some(&bad) = costs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::invalid(
                "costs",
                format!("entries must be finite and >= 0, got {bad}"),
            ));
        }
        Ok(CostMatrix { n, costs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(row) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Shape {
                expected: n,
                got: row.len(),
            });
        }
        Self::new(n, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cost(&self, left: usize, right: usize) -> f64 {
        self.costs[left * self.n + right]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.costs
    }

    /// Applies `f` to every entry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.n, self.costs.iter().map(|&c| f(c)).collect())
    }

    /// CSV dump: first record `n`, then `n` records of `n` costs.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
        w.write_record([self.n.to_string()])?;
        for row in self.costs.chunks(self.n) {
            w.write_record(row.iter().map(|c| format!("{c:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = r.records();
        let parse_err = |message: String| Error::Parse { field: None, message };
        let first = records
            .next()
            .ok_or_else(|| parse_err("empty instance file".into()))??;
        let n: usize = first
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err("first record must be the size n".into()))?;
        let mut costs = Vec::with_capacity(n * n);
        for (row, record) in records.enumerate() {
            let record = record?;
            for field in record.iter() {
                let value: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(format!("row {}: bad cost `{field}`", row + 1)))?;
                costs.push(value);
            }
        }
        Self::new(n, costs)
    }
}

/// A perfect matching: `partner[v]` is the right vertex matched to left
/// vertex `v`, `pair_costs[v]` the cost of that edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub partner: Vec<usize>,
    pub pair_costs: Vec<f64>,
    pub total: f64,
}

impl Matching {
    /// Builds the matching `v -> partner[v]` on `m`.
    pub fn from_partner(m: &CostMatrix, partner: Vec<usize>) -> Result<Self> {
        if partner.len() != m.n() {
            return Err(Error::Shape {
                expected: m.n(),
                got: partner.len(),
            });
        }
        let mut seen = vec![false; m.n()];
        for &w in &partner {
            if w >= m.n() || std::mem::replace(&mut seen[w], true) {
                return Err(Error::invalid("partner", "must be a permutation"));
            }
        }
        let pair_costs: Vec<f64> = partner.iter().enumerate().map(|(v, &w)| m.cost(v, w)).collect();
        let total = compensated_sum(pair_costs.iter().copied());
        Ok(Matching {
            partner,
            pair_costs,
            total,
        })
    }

    pub fn n(&self) -> usize {
        self.partner.len()
    }
}

/// Draws an `n × n` instance of i.i.d. costs, row by row.
pub fn generate_instance<R: Rng + ?Sized>(n: usize, dist: &Distribution, rng: &mut R) -> Result<CostMatrix> {
    generate_instance_capped(n, dist, rng, DEFAULT_DIRECT_CAP)
}

pub fn generate_instance_capped<R: Rng + ?Sized>(
    n: usize,
    dist: &Distribution,
    rng: &mut R,
    cap: usize,
) -> Result<CostMatrix> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if n > cap {
        return Err(Error::Resource(format!(
            "n = {n} exceeds the direct-engine cap of {cap}"
        )));
    }
    let costs = (0..n * n).map(|_| dist.sample(rng)).collect();
    CostMatrix::new(n, costs)
}

/// One step of the greedy algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyStep {
    pub left: usize,
    pub right: usize,
    pub cost: f64,
}

/// The greedy run in order of addition. Edges are visited by an indirect
/// sort of the flat cost array; equal costs fall back to row-major index.
pub fn greedy_trace(m: &CostMatrix) -> Vec<GreedyStep> {
    let n = m.n();
    let costs = m.as_slice();
    let mut order: Vec<u32> = (0..(n * n) as u32).collect();
    order.sort_unstable_by(|&a, &b| costs[a as usize].total_cmp(&costs[b as usize]).then(a.cmp(&b)));

    let mut left_used = vec![false; n];
    let mut right_used = vec![false; n];
    let mut steps = Vec::with_capacity(n);
    for idx in order {
        let idx = idx as usize;
        let (v, w) = (idx / n, idx % n);
        if left_used[v] || right_used[w] {
            continue;
        }
        left_used[v] = true;
        right_used[w] = true;
        steps.push(GreedyStep {
            left: v,
            right: w,
            cost: costs[idx],
        });
        if steps.len() == n {
            break;
        }
    }
    steps
}

/// The unique stable matching, built greedily.
pub fn greedy_stable_matching(m: &CostMatrix) -> Matching {
    let mut partner = vec![usize::MAX; m.n()];
    for step in greedy_trace(m) {
        partner[step.left] = step.right;
    }
    Matching::from_partner(m, partner).expect("greedy produces a perfect matching")
}

/// All pairs `(v, w)` not matched together with `ω(v, w) < min(c(v), c(w))`,
/// where `c` is the cost a vertex pays in `matching`.
pub fn verify_stability(m: &CostMatrix, matching: &Matching) -> Result<Vec<(usize, usize)>> {
    let n = m.n();
    if matching.n() != n {
        return Err(Error::Shape {
            expected: n,
            got: matching.n(),
        });
    }
    let mut right_cost = vec![f64::INFINITY; n];
    for (v, &w) in matching.partner.iter().enumerate() {
        if w >= n {
            return Err(Error::invalid("partner", "must be a permutation"));
        }
        right_cost[w] = m.cost(v, w);
    }
    let mut unstable = Vec::new();
    for v in 0..n {
        let left_cost = m.cost(v, matching.partner[v]);
        for (w, &rc) in right_cost.iter().enumerate() {
            if matching.partner[v] != w && m.cost(v, w) < left_cost.min(rc) {
                unstable.push((v, w));
            }
        }
    }
    Ok(unstable)
}

/// Matched costs in increasing order, as an exponential-base sequence view.
pub fn sorted_matched_costs(matching: &Matching) -> CostSequence {
    let mut costs = matching.pair_costs.clone();
    costs.sort_by(f64::total_cmp);
    CostSequence::from_sorted_costs(costs)
}
