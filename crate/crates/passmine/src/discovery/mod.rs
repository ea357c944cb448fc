//! The mining engine: subsequence matching over densified pass
//! trajectories with a warping dynamic program, plus team-level
//! orchestration and deduplication.

pub mod dp;
pub mod oracle;

pub use dp::find_matches;
pub use oracle::{brute_force_oracle, OracleError};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::preprocess::{DensifiedSequence, EndpointRole, PointKind, SeqPoint};

/// Matching thresholds and structural constraints.
///
/// `local_threshold` gates normal aligned pairs; distances in
/// `(local_threshold, global_threshold]` are traversable only as bounded
/// outlier skips; anything above `global_threshold` is impassable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    pub local_threshold: f64,
    pub global_threshold: f64,
    pub min_positions: usize,
    pub max_outlier_run: usize,
    pub max_outlier_fraction: f64,
    /// Max consecutive path steps advancing the same single index.
    pub max_stall: usize,
    /// For self comparisons, cells with |i - j| below this band are
    /// inadmissible so the diagonal never matches itself.
    pub self_exclusion_band: usize,
    pub dedupe_overlap: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            local_threshold: 2.0,
            global_threshold: 10.0,
            min_positions: 41,
            max_outlier_run: 2,
            max_outlier_fraction: 0.10,
            max_stall: 3,
            self_exclusion_band: 41,
            dedupe_overlap: 0.8,
        }
    }
}

impl MatchParams {
    pub fn with_min_positions(mut self, min_positions: usize) -> Self {
        self.min_positions = min_positions;
        self.self_exclusion_band = min_positions;
        self
    }
}

/// Inclusive index range into one densified sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub seq_id: String,
    pub start_idx: usize,
    pub end_idx: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end_idx - self.start_idx + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, idx: usize) -> bool {
        idx >= self.start_idx && idx <= self.end_idx
    }

    /// Shared position count when both segments live in the same sequence.
    pub fn intersection_len(&self, other: &Segment) -> usize {
        if self.seq_id != other.seq_id {
            return 0;
        }
        let lo = self.start_idx.max(other.start_idx);
        let hi = self.end_idx.min(other.end_idx);
        if lo > hi {
            0
        } else {
            hi - lo + 1
        }
    }
}

/// One discovered recurrence of a pass pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMatch {
    pub reference: Segment,
    pub found: Segment,
    /// Monotonic warping path over (reference index, found index).
    pub path: Vec<(usize, usize)>,
    pub pair_distances: Vec<f64>,
    pub outlier_mask: Vec<bool>,
    pub mean_distance: f64,
    pub team_id: String,
    pub complete_passes_ref: Vec<usize>,
    pub complete_passes_found: Vec<usize>,
}

impl PatternMatch {
    /// Swap reference/found roles, transposing the path.
    pub fn swapped(&self) -> PatternMatch {
        PatternMatch {
            reference: self.found.clone(),
            found: self.reference.clone(),
            path: self.path.iter().map(|&(i, j)| (j, i)).collect(),
            pair_distances: self.pair_distances.clone(),
            outlier_mask: self.outlier_mask.clone(),
            mean_distance: self.mean_distance,
            team_id: self.team_id.clone(),
            complete_passes_ref: self.complete_passes_found.clone(),
            complete_passes_found: self.complete_passes_ref.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_hash: String,
    pub params_hash: String,
}

/// All accepted matches of one team, canonically ordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryResult {
    pub team_id: String,
    pub matches: Vec<PatternMatch>,
    pub params: MatchParams,
    pub provenance: Provenance,
}

/// Euclidean distance between two trajectory points; time and player
/// fields are ignored.
pub fn local_distance(p: &SeqPoint, q: &SeqPoint) -> f64 {
    ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt()
}

/// Source passes whose emission and reception originals both fall inside
/// `points[start..=end]`, in ascending pass order.
pub fn complete_passes_in(points: &[SeqPoint], start: usize, end: usize) -> Vec<usize> {
    use std::collections::BTreeMap;
    let mut seen: BTreeMap<usize, (bool, bool)> = BTreeMap::new();
    for p in &points[start..=end] {
        if p.kind != PointKind::Original {
            continue;
        }
        let entry = seen.entry(p.source_pass).or_insert((false, false));
        match p.endpoint_role {
            EndpointRole::Emission => entry.0 = true,
            EndpointRole::Reception => entry.1 = true,
            EndpointRole::None => {}
        }
    }
    seen.into_iter()
        .filter(|(_, (e, r))| *e && *r)
        .map(|(k, _)| k)
        .collect()
}

/// True iff both segments of `m` contain at least one complete source pass.
pub fn complete_pass_filter(m: &PatternMatch, a: &DensifiedSequence, b: &DensifiedSequence) -> bool {
    !complete_passes_in(&a.points, m.reference.start_idx, m.reference.end_idx).is_empty()
        && !complete_passes_in(&b.points, m.found.start_idx, m.found.end_idx).is_empty()
}

/// Outlier-count ceiling for a path of `len` cells.
pub(crate) fn fraction_ok(count: usize, len: usize, max_fraction: f64) -> bool {
    count as f64 <= max_fraction * len as f64 + 1e-9
}

/// Mine every unordered sequence pair of one team (each sequence with
/// itself included), deduplicate near-identical matches, and return a
/// canonically sorted result.
pub fn discover_team(seqs: &[DensifiedSequence], params: &MatchParams) -> DiscoveryResult {
    use rayon::prelude::*;

    let team_id = seqs.first().map(|s| s.team_id.clone()).unwrap_or_default();
    debug_assert!(seqs.iter().all(|s| s.team_id == team_id));

    let mut ordered: Vec<&DensifiedSequence> = seqs.iter().collect();
    ordered.sort_by(|a, b| a.seq_id.cmp(&b.seq_id));

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..ordered.len() {
        for j in i..ordered.len() {
            pairs.push((i, j));
        }
    }

    let per_pair: Vec<Vec<PatternMatch>> = pairs
        .par_iter()
        .map(|&(i, j)| find_matches(ordered[i], ordered[j], params))
        .collect();

    let mut matches: Vec<PatternMatch> = per_pair.into_iter().flatten().collect();
    for m in &mut matches {
        let ref_key = (m.reference.seq_id.clone(), m.reference.start_idx);
        let found_key = (m.found.seq_id.clone(), m.found.start_idx);
        if found_key < ref_key {
            *m = m.swapped();
        }
    }
    let mut matches = dedupe_matches(matches, params.dedupe_overlap);
    matches.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));

    let dataset_hash = hash_json(&ordered);
    let params_hash = hash_json(params);
    DiscoveryResult {
        team_id,
        matches,
        params: params.clone(),
        provenance: Provenance {
            dataset_hash,
            params_hash,
        },
    }
}

fn sort_key(m: &PatternMatch) -> (String, usize, String, usize, usize, usize) {
    (
        m.reference.seq_id.clone(),
        m.reference.start_idx,
        m.found.seq_id.clone(),
        m.found.start_idx,
        m.reference.end_idx,
        m.found.end_idx,
    )
}

/// Two matches are duplicates when both segment pairs overlap at least
/// `threshold` by position count (in either role orientation). The
/// longer, then lower-mean-distance match survives.
pub fn dedupe_matches(mut matches: Vec<PatternMatch>, threshold: f64) -> Vec<PatternMatch> {
    matches.sort_by(|a, b| {
        b.path
            .len()
            .cmp(&a.path.len())
            .then(a.mean_distance.partial_cmp(&b.mean_distance).unwrap())
            .then(sort_key(a).cmp(&sort_key(b)))
    });
    let mut kept: Vec<PatternMatch> = Vec::new();
    for m in matches {
        let dup = kept.iter().any(|k| is_duplicate(k, &m, threshold));
        if !dup {
            kept.push(m);
        }
    }
    kept
}

fn overlap_fraction(a: &Segment, b: &Segment) -> f64 {
    let inter = a.intersection_len(b);
    if inter == 0 {
        return 0.0;
    }
    inter as f64 / a.len().min(b.len()) as f64
}

fn is_duplicate(a: &PatternMatch, b: &PatternMatch, threshold: f64) -> bool {
    let direct = overlap_fraction(&a.reference, &b.reference) >= threshold
        && overlap_fraction(&a.found, &b.found) >= threshold;
    let swapped = overlap_fraction(&a.reference, &b.found) >= threshold
        && overlap_fraction(&a.found, &b.reference) >= threshold;
    direct || swapped
}

fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Machine-check every structural invariant of an accepted match.
/// Used by tests and by the pipeline's internal self-check.
pub fn check_match_invariants(
    m: &PatternMatch,
    a: &DensifiedSequence,
    b: &DensifiedSequence,
    params: &MatchParams,
) -> Result<(), String> {
    let len = m.path.len();
    if len == 0 || m.pair_distances.len() != len || m.outlier_mask.len() != len {
        return Err("path/distance/mask lengths disagree".into());
    }
    if m.path[0] != (m.reference.start_idx, m.found.start_idx)
        || m.path[len - 1] != (m.reference.end_idx, m.found.end_idx)
    {
        return Err("path does not cover segments end to end".into());
    }
    for w in m.path.windows(2) {
        let (di, dj) = (w[1].0 as i64 - w[0].0 as i64, w[1].1 as i64 - w[0].1 as i64);
        if !matches!((di, dj), (1, 0) | (0, 1) | (1, 1)) {
            return Err(format!("non-monotonic step {:?} -> {:?}", w[0], w[1]));
        }
    }
    if m.reference.len() < params.min_positions || m.found.len() < params.min_positions {
        return Err("segment below min_positions".into());
    }
    let mut outliers = 0usize;
    let mut run = 0usize;
    for (k, &(i, j)) in m.path.iter().enumerate() {
        let d = local_distance(&a.points[i], &b.points[j]);
        if (d - m.pair_distances[k]).abs() > 1e-12 {
            return Err("stored pair distance disagrees with geometry".into());
        }
        if m.outlier_mask[k] {
            if d > params.global_threshold {
                return Err("outlier above global threshold".into());
            }
            outliers += 1;
            run += 1;
            if run > params.max_outlier_run {
                return Err("outlier run too long".into());
            }
        } else {
            if d > params.local_threshold {
                return Err("non-outlier above local threshold".into());
            }
            run = 0;
        }
    }
    if !fraction_ok(outliers, len, params.max_outlier_fraction) {
        return Err("outlier fraction above cap".into());
    }
    let mut stall = 0usize;
    let mut stall_dir = 0u8; // 1 = i only, 2 = j only
    for w in m.path.windows(2) {
        let dir = match (w[1].0 - w[0].0, w[1].1 - w[0].1) {
            (1, 1) => 0,
            (1, 0) => 1,
            (0, 1) => 2,
            _ => unreachable!(),
        };
        if dir == 0 {
            stall = 0;
            stall_dir = 0;
        } else if dir == stall_dir {
            stall += 1;
        } else {
            stall = 1;
            stall_dir = dir;
        }
        if stall > params.max_stall {
            return Err("stall run too long".into());
        }
    }
    if m.complete_passes_ref.is_empty() || m.complete_passes_found.is_empty() {
        return Err("missing complete pass".into());
    }
    if complete_passes_in(&a.points, m.reference.start_idx, m.reference.end_idx)
        != m.complete_passes_ref
        || complete_passes_in(&b.points, m.found.start_idx, m.found.end_idx)
            != m.complete_passes_found
    {
        return Err("complete-pass lists disagree with segments".into());
    }
    Ok(())
}
