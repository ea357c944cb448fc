//! Bottom-up warping dynamic program.
//!
//! Cells are classified by the point-pair distance: good (<= local
//! threshold), outlier (<= global threshold, traversable under the run
//! and fraction caps), or wall. The DP tracks, per cell, the best path
//! ending there for every reachable constraint state (trailing outlier
//! run, trailing single-index stall, total outlier count); paths are
//! then extracted greedily and their row/column spans consumed so
//! extracted matches never overlap within the pair.

use crate::preprocess::DensifiedSequence;

use super::{
    complete_passes_in, fraction_ok, local_distance, MatchParams, PatternMatch, Segment,
};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Cell {
    Wall,
    Good,
    Outlier,
}

struct StateSpace {
    n_run: usize,
    n_stall: usize,
    n_count: usize,
}

impl StateSpace {
    fn new(params: &MatchParams, max_path_len: usize) -> StateSpace {
        let cmax =
            (params.max_outlier_fraction * max_path_len as f64 + 1e-9).floor() as usize;
        StateSpace {
            n_run: params.max_outlier_run + 1,
            n_stall: 1 + 2 * params.max_stall,
            n_count: cmax + 1,
        }
    }

    fn len(&self) -> usize {
        self.n_run * self.n_stall * self.n_count
    }

    fn encode(&self, run: usize, stall: usize, count: usize) -> usize {
        (run * self.n_stall + stall) * self.n_count + count
    }

    fn decode(&self, idx: usize) -> (usize, usize, usize) {
        let count = idx % self.n_count;
        let rest = idx / self.n_count;
        (rest / self.n_stall, rest % self.n_stall, count)
    }
}

struct DpTables {
    len: Vec<u32>,
    dist: Vec<f64>,
    start: Vec<u32>,
    parent: Vec<u32>,
}

impl DpTables {
    fn new(size: usize) -> DpTables {
        DpTables {
            len: vec![0; size],
            dist: vec![0.0; size],
            start: vec![0; size],
            parent: vec![NONE; size],
        }
    }

    fn clear(&mut self) {
        self.len.fill(0);
        self.parent.fill(NONE);
    }

    /// True when (len, dist, start) beats the entry at `slot`.
    fn better(&self, slot: usize, len: u32, dist: f64, start: u32) -> bool {
        let cur = self.len[slot];
        if cur == 0 {
            return true;
        }
        if len != cur {
            return len > cur;
        }
        if dist != self.dist[slot] {
            return dist < self.dist[slot];
        }
        start < self.start[slot]
    }

    fn set(&mut self, slot: usize, len: u32, dist: f64, start: u32, parent: u32) {
        self.len[slot] = len;
        self.dist[slot] = dist;
        self.start[slot] = start;
        self.parent[slot] = parent;
    }
}

/// Find all maximal admissible matches between two densified sequences of
/// one team. When both arguments are the same sequence, a diagonal band
/// of width `self_exclusion_band` is excluded.
pub fn find_matches(
    a: &DensifiedSequence,
    b: &DensifiedSequence,
    params: &MatchParams,
) -> Vec<PatternMatch> {
    let n = a.points.len();
    let m = b.points.len();
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let self_pair = a.seq_id == b.seq_id;

    if bounding_boxes_apart(a, b, params.global_threshold) {
        return Vec::new();
    }

    // distance / class grid
    let mut dist = vec![0.0f64; n * m];
    let mut class = vec![Cell::Wall; n * m];
    for i in 0..n {
        for j in 0..m {
            if self_pair && i.abs_diff(j) < params.self_exclusion_band {
                continue;
            }
            let d = local_distance(&a.points[i], &b.points[j]);
            dist[i * m + j] = d;
            class[i * m + j] = if d <= params.local_threshold {
                Cell::Good
            } else if d <= params.global_threshold {
                Cell::Outlier
            } else {
                Cell::Wall
            };
        }
    }

    if relaxed_longest_path(&class, n, m) < params.min_positions {
        return Vec::new();
    }

    // The tables cover only non-wall cells; on typical pairs most of the
    // grid is walls and the dense layout would dominate the runtime.
    let mut compact = vec![NONE; n * m];
    let mut cells: Vec<u32> = Vec::new();
    for (flat, &c) in class.iter().enumerate() {
        if c != Cell::Wall {
            compact[flat] = cells.len() as u32;
            cells.push(flat as u32);
        }
    }

    if capped_longest_path(&cells, &compact, &class, n, m, params) < params.min_positions {
        return Vec::new();
    }

    let space = StateSpace::new(params, n + m - 1);
    let mut tables = DpTables::new(cells.len() * space.len());
    let mut row_used = vec![false; n];
    let mut col_used = vec![false; m];
    let mut matches = Vec::new();

    loop {
        tables.clear();
        fill_dp(
            &mut tables, &space, &cells, &compact, &class, &dist, n, m, &row_used, &col_used,
            params,
        );
        let Some((end_slot, _)) = pick_candidate(&tables, &space, &cells, a, b, m, params)
        else {
            break;
        };
        let path = reconstruct(&tables, &space, &cells, end_slot, m);
        let (i0, j0) = path[0];
        let (i1, j1) = *path.last().unwrap();
        let pair_distances: Vec<f64> = path.iter().map(|&(i, j)| dist[i * m + j]).collect();
        let outlier_mask: Vec<bool> = path
            .iter()
            .map(|&(i, j)| class[i * m + j] == Cell::Outlier)
            .collect();
        let total: f64 = {
            // same accumulation order as the DP: front to back
            let mut acc = 0.0;
            for d in &pair_distances {
                acc += d;
            }
            acc
        };
        let mean_distance = total / path.len() as f64;
        matches.push(PatternMatch {
            reference: Segment {
                seq_id: a.seq_id.clone(),
                start_idx: i0,
                end_idx: i1,
            },
            found: Segment {
                seq_id: b.seq_id.clone(),
                start_idx: j0,
                end_idx: j1,
            },
            path,
            pair_distances,
            outlier_mask,
            mean_distance,
            team_id: a.team_id.clone(),
            complete_passes_ref: complete_passes_in(&a.points, i0, i1),
            complete_passes_found: complete_passes_in(&b.points, j0, j1),
        });
        for r in i0..=i1 {
            row_used[r] = true;
        }
        for c in j0..=j1 {
            col_used[c] = true;
        }
    }
    matches
}

fn bounding_boxes_apart(a: &DensifiedSequence, b: &DensifiedSequence, threshold: f64) -> bool {
    let bbox = |s: &DensifiedSequence| {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &s.points {
            lo.0 = lo.0.min(p.x);
            lo.1 = lo.1.min(p.y);
            hi.0 = hi.0.max(p.x);
            hi.1 = hi.1.max(p.y);
        }
        (lo, hi)
    };
    let (alo, ahi) = bbox(a);
    let (blo, bhi) = bbox(b);
    let dx = (blo.0 - ahi.0).max(alo.0 - bhi.0).max(0.0);
    let dy = (blo.1 - ahi.1).max(alo.1 - bhi.1).max(0.0);
    (dx * dx + dy * dy).sqrt() > threshold
}

/// Longest monotonic path over non-wall cells, ignoring outlier and
/// stall constraints. An upper bound on any admissible path length, used
/// to skip pairs that can never reach `min_positions`.
fn relaxed_longest_path(class: &[Cell], n: usize, m: usize) -> usize {
    let mut prev = vec![0u32; m];
    let mut cur = vec![0u32; m];
    let mut best = 0u32;
    for i in 0..n {
        for j in 0..m {
            cur[j] = if class[i * m + j] == Cell::Wall {
                0
            } else {
                let mut v = prev.get(j.wrapping_sub(1)).copied().unwrap_or(0);
                if j > 0 && prev[j - 1] > v {
                    v = prev[j - 1];
                }
                if prev[j] > v {
                    v = prev[j];
                }
                if j > 0 && cur[j - 1] > v {
                    v = cur[j - 1];
                }
                v + 1
            };
            if cur[j] > best {
                best = cur[j];
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best as usize
}

/// Longest monotonic path under the stall and outlier-run caps, ignoring
/// the outlier fraction. A tighter upper bound than
/// `relaxed_longest_path`; most pairs that survive the relaxed check die
/// here, long before the full state tables are built.
fn capped_longest_path(
    cells: &[u32],
    compact: &[u32],
    class: &[Cell],
    n: usize,
    m: usize,
    params: &MatchParams,
) -> usize {
    let s = params.max_stall;
    let n_stall = 1 + 2 * s;
    let n_run = params.max_outlier_run + 1;
    let ns = n_stall * n_run;
    let mut len = vec![0u16; cells.len() * ns];
    let mut best = 0u16;
    for (idx, &flat) in cells.iter().enumerate() {
        let flat = flat as usize;
        let (i, j) = (flat / m, flat % m);
        let is_outlier = class[flat] == Cell::Outlier;
        let here = idx * ns;

        let start_run = usize::from(is_outlier);
        if start_run < n_run && len[here + start_run * n_stall] < 1 {
            len[here + start_run * n_stall] = 1;
            if best < 1 {
                best = 1;
            }
        }

        for (dir, pi, pj) in [
            (0u8, i.wrapping_sub(1), j.wrapping_sub(1)),
            (1u8, i.wrapping_sub(1), j),
            (2u8, i, j.wrapping_sub(1)),
        ] {
            if pi >= n || pj >= m {
                continue;
            }
            let pcompact = compact[pi * m + pj];
            if pcompact == NONE {
                continue;
            }
            let base = pcompact as usize * ns;
            for state in 0..ns {
                let plen = len[base + state];
                if plen == 0 {
                    continue;
                }
                let (prun, pstall) = (state / n_stall, state % n_stall);
                let run = if is_outlier {
                    if prun + 1 >= n_run {
                        continue;
                    }
                    prun + 1
                } else {
                    0
                };
                let stall = match dir {
                    0 => 0,
                    1 => {
                        let l = if (1..=s).contains(&pstall) { pstall + 1 } else { 1 };
                        if l > s {
                            continue;
                        }
                        l
                    }
                    _ => {
                        let l = if pstall > s { pstall - s + 1 } else { 1 };
                        if l > s {
                            continue;
                        }
                        s + l
                    }
                };
                let slot = here + run * n_stall + stall;
                if plen + 1 > len[slot] {
                    len[slot] = plen + 1;
                    if plen + 1 > best {
                        best = plen + 1;
                    }
                }
            }
        }
    }
    best as usize
}

#[allow(clippy::too_many_arguments)]
fn fill_dp(
    tables: &mut DpTables,
    space: &StateSpace,
    cells: &[u32],
    compact: &[u32],
    class: &[Cell],
    dist: &[f64],
    n: usize,
    m: usize,
    row_used: &[bool],
    col_used: &[bool],
    params: &MatchParams,
) {
    let ns = space.len();
    let s = params.max_stall;
    for (idx, &flat) in cells.iter().enumerate() {
        let flat = flat as usize;
        let (i, j) = (flat / m, flat % m);
        if row_used[i] || col_used[j] {
            continue;
        }
        {
            let cell = class[flat];
            let is_outlier = cell == Cell::Outlier;
            let d = dist[flat];
            let here = idx * ns;
            let start_here = flat as u32;

            // start a fresh path at this cell
            if !is_outlier || (params.max_outlier_run >= 1 && space.n_count >= 2) {
                let (run, count) = if is_outlier { (1, 1) } else { (0, 0) };
                let slot = here + space.encode(run, 0, count);
                if tables.better(slot, 1, d, start_here) {
                    tables.set(slot, 1, d, start_here, NONE);
                }
            }

            // extend from the three predecessors
            for (dir, pi, pj) in [
                (0u8, i.wrapping_sub(1), j.wrapping_sub(1)),
                (1u8, i.wrapping_sub(1), j),
                (2u8, i, j.wrapping_sub(1)),
            ] {
                if pi >= n || pj >= m {
                    continue;
                }
                let pcompact = compact[pi * m + pj];
                if pcompact == NONE || row_used[pi] || col_used[pj] {
                    continue;
                }
                let base = pcompact as usize * ns;
                for state in 0..ns {
                    let plen = tables.len[base + state];
                    if plen == 0 {
                        continue;
                    }
                    let (prun, pstall, pcount) = space.decode(state);
                    let run = if is_outlier {
                        if prun + 1 > params.max_outlier_run {
                            continue;
                        }
                        prun + 1
                    } else {
                        0
                    };
                    let count = pcount + usize::from(is_outlier);
                    if count >= space.n_count {
                        continue;
                    }
                    let stall = match dir {
                        0 => 0,
                        1 => {
                            // step advances i only
                            let l = if (1..=s).contains(&pstall) { pstall + 1 } else { 1 };
                            if l > s {
                                continue;
                            }
                            l
                        }
                        _ => {
                            // step advances j only
                            let l = if pstall > s { pstall - s + 1 } else { 1 };
                            if l > s {
                                continue;
                            }
                            s + l
                        }
                    };
                    let slot = here + space.encode(run, stall, count);
                    let len = plen + 1;
                    let total = tables.dist[base + state] + d;
                    let start = tables.start[base + state];
                    if tables.better(slot, len, total, start) {
                        tables.set(slot, len, total, start, (base + state) as u32);
                    }
                }
            }
        }
    }
}

/// Per-cell winners (longest admissible path ending there, subject to the
/// outlier-fraction cap), filtered by segment lengths and the
/// complete-pass requirement; returns the flat table slot of the global
/// best, chosen by descending length, ascending mean distance, then
/// lexicographic start and end.
fn pick_candidate(
    tables: &DpTables,
    space: &StateSpace,
    cells: &[u32],
    a: &DensifiedSequence,
    b: &DensifiedSequence,
    m: usize,
    params: &MatchParams,
) -> Option<(usize, u32)> {
    let ns = space.len();
    let mut best: Option<(u32, f64, u32, u32, usize)> = None; // len, mean, start, end, slot
    for (idx, &flat) in cells.iter().enumerate() {
        let cell = flat as usize;
        let base = idx * ns;
        // winner among this cell's states
        let mut cell_best: Option<usize> = None;
        for state in 0..ns {
            let slot = base + state;
            let len = tables.len[slot];
            if len == 0 {
                continue;
            }
            let (_, _, count) = space.decode(state);
            if !fraction_ok(count, len as usize, params.max_outlier_fraction) {
                continue;
            }
            let replace = match cell_best {
                None => true,
                Some(cur) => {
                    let (cl, cd, cs) = (tables.len[cur], tables.dist[cur], tables.start[cur]);
                    len > cl
                        || (len == cl
                            && (tables.dist[slot] < cd
                                || (tables.dist[slot] == cd && tables.start[slot] < cs)))
                }
            };
            if replace {
                cell_best = Some(slot);
            }
        }
        let Some(slot) = cell_best else { continue };
        let len = tables.len[slot];
        let start = tables.start[slot];
        let (i0, j0) = ((start as usize) / m, (start as usize) % m);
        let (i1, j1) = (cell / m, cell % m);
        if i1 - i0 + 1 < params.min_positions || j1 - j0 + 1 < params.min_positions {
            continue;
        }
        if complete_passes_in(&a.points, i0, i1).is_empty()
            || complete_passes_in(&b.points, j0, j1).is_empty()
        {
            continue;
        }
        let mean = tables.dist[slot] / len as f64;
        let end = cell as u32;
        let replace = match best {
            None => true,
            Some((bl, bm, bs, be, _)) => {
                len > bl
                    || (len == bl
                        && (mean < bm
                            || (mean == bm && (start < bs || (start == bs && end < be)))))
            }
        };
        if replace {
            best = Some((len, mean, start, end, slot));
        }
    }
    best.map(|(_, _, _, end, slot)| (slot, end))
}

fn reconstruct(
    tables: &DpTables,
    space: &StateSpace,
    cells: &[u32],
    end_slot: usize,
    m: usize,
) -> Vec<(usize, usize)> {
    let ns = space.len();
    let mut path = Vec::new();
    let mut slot = end_slot as u32;
    while slot != NONE {
        let cell = cells[(slot as usize) / ns] as usize;
        path.push((cell / m, cell % m));
        slot = tables.parent[slot as usize];
    }
    path.reverse();
    path
}
