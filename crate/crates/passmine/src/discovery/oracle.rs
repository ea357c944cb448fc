//! Verification oracle for the matcher.
//!
//! Searches the admissible-path space top down: for every cell and
//! constraint state it derives the best path ending there by inverting
//! the step rules and recursing over predecessor states, with
//! memoization. Kept deliberately separate from the bottom-up kernel in
//! `dp` so the two routes cross-check each other.

use thiserror::Error;

use crate::preprocess::DensifiedSequence;

use super::{
    complete_passes_in, fraction_ok, local_distance, MatchParams, PatternMatch, Segment,
};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for the oracle: {cells} cells (limit 10000)")]
    SizeError { cells: usize },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Wall,
    Good,
    Outlier,
}

#[derive(Clone, Copy)]
struct Best {
    len: u32,
    dist: f64,
    start: (usize, usize),
    parent: Option<usize>, // flat (cell, state) slot
}

struct Oracle<'a> {
    a: &'a DensifiedSequence,
    b: &'a DensifiedSequence,
    params: &'a MatchParams,
    n: usize,
    m: usize,
    kind: Vec<Kind>,
    dist: Vec<f64>,
    row_gone: Vec<bool>,
    col_gone: Vec<bool>,
    // None = not computed, Some(None) = unreachable
    memo: Vec<Option<Option<Best>>>,
    n_count: usize,
    n_stall: usize,
}

pub fn brute_force_oracle(
    a: &DensifiedSequence,
    b: &DensifiedSequence,
    params: &MatchParams,
) -> Result<Vec<PatternMatch>, OracleError> {
    let n = a.points.len();
    let m = b.points.len();
    if n * m > 10_000 {
        return Err(OracleError::SizeError { cells: n * m });
    }
    if n == 0 || m == 0 {
        return Ok(Vec::new());
    }
    let self_pair = a.seq_id == b.seq_id;
    let mut kind = vec![Kind::Wall; n * m];
    let mut dist = vec![0.0f64; n * m];
    for i in 0..n {
        for j in 0..m {
            if self_pair && i.abs_diff(j) < params.self_exclusion_band {
                continue;
            }
            let d = local_distance(&a.points[i], &b.points[j]);
            dist[i * m + j] = d;
            kind[i * m + j] = if d <= params.local_threshold {
                Kind::Good
            } else if d <= params.global_threshold {
                Kind::Outlier
            } else {
                Kind::Wall
            };
        }
    }

    let n_count =
        (params.max_outlier_fraction * (n + m - 1) as f64 + 1e-9).floor() as usize + 1;
    let n_stall = 1 + 2 * params.max_stall;
    let n_states = (params.max_outlier_run + 1) * n_stall * n_count;

    let mut oracle = Oracle {
        a,
        b,
        params,
        n,
        m,
        kind,
        dist,
        row_gone: vec![false; n],
        col_gone: vec![false; m],
        memo: vec![None; n * m * n_states],
        n_count,
        n_stall,
    };

    let mut matches = Vec::new();
    while let Some(m_) = oracle.extract_one() {
        matches.push(m_);
    }
    Ok(matches)
}

impl<'a> Oracle<'a> {
    fn n_states(&self) -> usize {
        (self.params.max_outlier_run + 1) * self.n_stall * self.n_count
    }

    fn encode(&self, run: usize, stall: usize, count: usize) -> usize {
        (run * self.n_stall + stall) * self.n_count + count
    }

    fn passable(&self, i: usize, j: usize) -> bool {
        self.kind[i * self.m + j] != Kind::Wall && !self.row_gone[i] && !self.col_gone[j]
    }

    /// Best path ending at (i, j) in exactly the given constraint state.
    fn best(&mut self, i: usize, j: usize, run: usize, stall: usize, count: usize) -> Option<Best> {
        let slot = (i * self.m + j) * self.n_states() + self.encode(run, stall, count);
        if let Some(cached) = self.memo[slot] {
            return cached;
        }
        // occupy the slot before recursing; the predecessor DAG is acyclic
        // (i + j strictly decreases) so this is only belt and braces
        self.memo[slot] = Some(None);
        let result = self.compute(i, j, run, stall, count);
        self.memo[slot] = Some(result);
        result
    }

    fn compute(
        &mut self,
        i: usize,
        j: usize,
        run: usize,
        stall: usize,
        count: usize,
    ) -> Option<Best> {
        if !self.passable(i, j) {
            return None;
        }
        let is_outlier = self.kind[i * self.m + j] == Kind::Outlier;
        let d = self.dist[i * self.m + j];
        let s = self.params.max_stall;
        let mut best: Option<Best> = None;

        // a path may begin here
        let starts_here = stall == 0
            && ((is_outlier && run == 1 && count == 1) || (!is_outlier && run == 0 && count == 0));
        if starts_here {
            best = Some(Best {
                len: 1,
                dist: d,
                start: (i, j),
                parent: None,
            });
        }

        // state reachable by extension only if the trailing run matches
        // the cell class
        let prev_run_ok = if is_outlier { run >= 1 } else { run == 0 };
        let prev_count = count.checked_sub(usize::from(is_outlier));
        if let (true, Some(pcount)) = (prev_run_ok, prev_count) {
            let prev_runs: Vec<usize> = if is_outlier {
                vec![run - 1]
            } else {
                (0..=self.params.max_outlier_run).collect()
            };
            // (direction, predecessor cell, admissible predecessor stalls)
            let mut moves: Vec<(usize, usize, Vec<usize>)> = Vec::new();
            if stall == 0 {
                if i >= 1 && j >= 1 {
                    moves.push((i - 1, j - 1, (0..self.n_stall).collect()));
                }
            } else if stall <= s {
                // last step advanced i only
                if i >= 1 {
                    let prevs = if stall == 1 {
                        let mut v = vec![0];
                        v.extend(s + 1..self.n_stall);
                        v
                    } else {
                        vec![stall - 1]
                    };
                    moves.push((i - 1, j, prevs));
                }
            } else {
                // last step advanced j only
                if j >= 1 {
                    let prevs = if stall == s + 1 {
                        let mut v = vec![0];
                        v.extend(1..=s);
                        v
                    } else {
                        vec![stall - 1]
                    };
                    moves.push((i, j - 1, prevs));
                }
            }
            for (pi, pj, pstalls) in moves {
                for pstall in pstalls {
                    for &prun in &prev_runs {
                        if let Some(prev) = self.best(pi, pj, prun, pstall, pcount) {
                            let cand = Best {
                                len: prev.len + 1,
                                dist: prev.dist + d,
                                start: prev.start,
                                parent: Some(
                                    (pi * self.m + pj) * self.n_states()
                                        + self.encode(prun, pstall, pcount),
                                ),
                            };
                            if beats(&cand, &best) {
                                best = Some(cand);
                            }
                        }
                    }
                }
            }
        }
        best
    }

    fn extract_one(&mut self) -> Option<PatternMatch> {
        self.memo.fill(None);
        let (n, m) = (self.n, self.m);
        let mut chosen: Option<(Best, usize, usize)> = None; // best, end cell, end slot
        for i in 0..n {
            for j in 0..m {
                let mut cell_best: Option<(Best, usize)> = None;
                for run in 0..=self.params.max_outlier_run {
                    for stall in 0..self.n_stall {
                        for count in 0..self.n_count {
                            let Some(rec) = self.best(i, j, run, stall, count) else {
                                continue;
                            };
                            if !fraction_ok(
                                count,
                                rec.len as usize,
                                self.params.max_outlier_fraction,
                            ) {
                                continue;
                            }
                            let replace = match &cell_best {
                                None => true,
                                Some((cur, _)) => beats(&rec, &Some(*cur)),
                            };
                            if replace {
                                let slot = (i * m + j) * self.n_states()
                                    + self.encode(run, stall, count);
                                cell_best = Some((rec, slot));
                            }
                        }
                    }
                }
                let Some((rec, slot)) = cell_best else { continue };
                let (i0, j0) = rec.start;
                if i - i0 + 1 < self.params.min_positions
                    || j - j0 + 1 < self.params.min_positions
                {
                    continue;
                }
                if complete_passes_in(&self.a.points, i0, i).is_empty()
                    || complete_passes_in(&self.b.points, j0, j).is_empty()
                {
                    continue;
                }
                let replace = match &chosen {
                    None => true,
                    Some((cur, ci, _)) => {
                        let mean_new = rec.dist / rec.len as f64;
                        let mean_cur = cur.dist / cur.len as f64;
                        rec.len > cur.len
                            || (rec.len == cur.len
                                && (mean_new < mean_cur
                                    || (mean_new == mean_cur
                                        && (rec.start < cur.start
                                            || (rec.start == cur.start && i * m + j < *ci)))))
                    }
                };
                if replace {
                    chosen = Some((rec, i * m + j, slot));
                }
            }
        }

        let (_, _, end_slot) = chosen?;
        // walk the parent chain
        let mut path = Vec::new();
        let mut slot = Some(end_slot);
        while let Some(cur) = slot {
            let cell = cur / self.n_states();
            path.push((cell / m, cell % m));
            let rec = self.memo[cur].flatten().expect("slot on chosen chain");
            slot = rec.parent;
        }
        path.reverse();

        let (i0, j0) = path[0];
        let (i1, j1) = *path.last().unwrap();
        let pair_distances: Vec<f64> = path.iter().map(|&(i, j)| self.dist[i * m + j]).collect();
        let outlier_mask: Vec<bool> = path
            .iter()
            .map(|&(i, j)| self.kind[i * m + j] == Kind::Outlier)
            .collect();
        let mut total = 0.0;
        for d in &pair_distances {
            total += d;
        }
        let result = PatternMatch {
            reference: Segment {
                seq_id: self.a.seq_id.clone(),
                start_idx: i0,
                end_idx: i1,
            },
            found: Segment {
                seq_id: self.b.seq_id.clone(),
                start_idx: j0,
                end_idx: j1,
            },
            mean_distance: total / path.len() as f64,
            path,
            pair_distances,
            outlier_mask,
            team_id: self.a.team_id.clone(),
            complete_passes_ref: complete_passes_in(&self.a.points, i0, i1),
            complete_passes_found: complete_passes_in(&self.b.points, j0, j1),
        };
        for r in i0..=i1 {
            self.row_gone[r] = true;
        }
        for c in j0..=j1 {
            self.col_gone[c] = true;
        }
        Some(result)
    }
}

fn beats(cand: &Best, cur: &Option<Best>) -> bool {
    match cur {
        None => true,
        Some(cur) => {
            cand.len > cur.len
                || (cand.len == cur.len
                    && (cand.dist < cur.dist
                        || (cand.dist == cur.dist && cand.start < cur.start)))
        }
    }
}
