//! Season-level statistics over discovered matches: per-team aggregates,
//! final-third entries, durations and lengths, spatial spread,
//! occurrence clustering with overlap percentages, player overlap, and
//! the passes-vs-patterns regression.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discovery::{DiscoveryResult, PatternMatch, Segment};
use crate::preprocess::{DensifiedSequence, FieldSpec};

pub const FINAL_THIRD_X: f64 = 66.0;

/// Per-team aggregate row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamSeasonStats {
    pub team_id: String,
    pub n_patterns: usize,
    pub mean_passes: f64,
    pub std_passes: f64,
    pub n_fte: usize,
    pub n_team_passes: usize,
    /// Set when the team has no patterns; the aggregates are then zeros.
    pub no_patterns: bool,
}

/// Transitive-overlap group of pattern segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCluster {
    pub cluster_id: usize,
    pub segments: Vec<Segment>,
    pub occurrences: usize,
    /// multiplicity k -> fraction of covered positions held by exactly
    /// k segments; sums to 1 over the cluster's covered positions.
    pub overlap_profile: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerOverlapRecord {
    pub reference: Segment,
    pub found: Segment,
    pub n_involved: usize,
    pub n_overlap: usize,
}

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("degenerate regression input: {0}")]
    DegenerateInput(String),
}

/// Number of complete source passes inside the reference segment.
pub fn count_passes_in(m: &PatternMatch) -> usize {
    m.complete_passes_ref.len()
}

fn ref_points<'a>(m: &PatternMatch, seqs: &'a HashMap<String, DensifiedSequence>) -> &'a [crate::preprocess::SeqPoint] {
    let seq = &seqs[&m.reference.seq_id];
    &seq.points[m.reference.start_idx..=m.reference.end_idx]
}

/// True iff the reference segment starts at x < 66 and ends at x >= 66.
pub fn is_final_third_entry(m: &PatternMatch, seqs: &HashMap<String, DensifiedSequence>) -> bool {
    let pts = ref_points(m, seqs);
    pts.first().map(|p| p.x < FINAL_THIRD_X).unwrap_or(false)
        && pts.last().map(|p| p.x >= FINAL_THIRD_X).unwrap_or(false)
}

/// (dx, |dy|) between the first and last reference positions.
pub fn spatial_spread(m: &PatternMatch, seqs: &HashMap<String, DensifiedSequence>) -> (f64, f64) {
    let pts = ref_points(m, seqs);
    assert!(pts.len() >= 2, "accepted matches span at least two positions");
    let first = &pts[0];
    let last = &pts[pts.len() - 1];
    (last.x - first.x, (last.y - first.y).abs())
}

pub fn duration_seconds(m: &PatternMatch, seqs: &HashMap<String, DensifiedSequence>) -> f64 {
    let pts = ref_points(m, seqs);
    pts.last().unwrap().t - pts.first().unwrap().t
}

/// Sum of consecutive Euclidean gaps along the reference segment, in
/// normalized units.
pub fn path_length_units(m: &PatternMatch, seqs: &HashMap<String, DensifiedSequence>) -> f64 {
    let pts = ref_points(m, seqs);
    pts.windows(2)
        .map(|w| ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2)).sqrt())
        .sum()
}

/// Convert a reference-segment length to meters by rescaling each gap
/// component to the physical field.
pub fn to_meters(m: &PatternMatch, seqs: &HashMap<String, DensifiedSequence>, field: &FieldSpec) -> f64 {
    let pts = ref_points(m, seqs);
    let (sx, sy) = (field.length_m / 100.0, field.width_m / 100.0);
    pts.windows(2)
        .map(|w| {
            let dx = (w[1].x - w[0].x) * sx;
            let dy = (w[1].y - w[0].y) * sy;
            (dx * dx + dy * dy).sqrt()
        })
        .sum()
}

/// Player sets of a match's two sides, from the complete passes only.
fn involved_players(
    seg: &Segment,
    passes: &[usize],
    seqs: &HashMap<String, DensifiedSequence>,
) -> BTreeSet<String> {
    let seq = &seqs[&seg.seq_id];
    let mut players = BTreeSet::new();
    for p in &seq.points[seg.start_idx..=seg.end_idx] {
        if passes.contains(&p.source_pass) {
            players.insert(p.players.0.clone());
            players.insert(p.players.1.clone());
        }
    }
    players
}

pub fn player_overlap(
    m: &PatternMatch,
    seqs: &HashMap<String, DensifiedSequence>,
) -> PlayerOverlapRecord {
    let ref_players = involved_players(&m.reference, &m.complete_passes_ref, seqs);
    let found_players = involved_players(&m.found, &m.complete_passes_found, seqs);
    let n_involved = ref_players.len().max(found_players.len());
    let n_overlap = ref_players.intersection(&found_players).count();
    PlayerOverlapRecord {
        reference: m.reference.clone(),
        found: m.found.clone(),
        n_involved,
        n_overlap,
    }
}

/// Build clusters from segment overlap: nodes are all segments of all
/// matches; edges join the two segments of a match and any two segments
/// of the same sequence sharing at least one position. Components with
/// at least two nodes become clusters; the occurrence count is the
/// number of disjoint merged position ranges in the component.
pub fn cluster_occurrences(result: &DiscoveryResult) -> Vec<PatternCluster> {
    let mut nodes: Vec<Segment> = Vec::new();
    let mut index: HashMap<Segment, usize> = HashMap::new();
    let mut intern = |seg: &Segment, nodes: &mut Vec<Segment>| -> usize {
        if let Some(&i) = index.get(seg) {
            return i;
        }
        let i = nodes.len();
        nodes.push(seg.clone());
        index.insert(seg.clone(), i);
        i
    };

    let mut dsu = Dsu::new(0);
    let mut match_edges = Vec::new();
    for m in &result.matches {
        let a = intern(&m.reference, &mut nodes);
        let b = intern(&m.found, &mut nodes);
        match_edges.push((a, b));
    }
    dsu.grow(nodes.len());
    for (a, b) in match_edges {
        dsu.union(a, b);
    }
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if nodes[i].intersection_len(&nodes[j]) > 0 {
                dsu.union(i, j);
            }
        }
    }

    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..nodes.len() {
        components.entry(dsu.find(i)).or_default().push(i);
    }

    let mut clusters = Vec::new();
    for members in components.values() {
        if members.len() < 2 {
            continue;
        }
        let mut segments: Vec<Segment> = members.iter().map(|&i| nodes[i].clone()).collect();
        segments.sort();

        // disjoint merged ranges per sequence
        let mut by_seq: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
        for s in &segments {
            by_seq
                .entry(s.seq_id.as_str())
                .or_default()
                .push((s.start_idx, s.end_idx));
        }
        let mut occurrences = 0;
        for ranges in by_seq.values_mut() {
            ranges.sort();
            let mut merged: Vec<(usize, usize)> = Vec::new();
            for &(lo, hi) in ranges.iter() {
                match merged.last_mut() {
                    Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                    _ => merged.push((lo, hi)),
                }
            }
            occurrences += merged.len();
        }

        // per covered position: how many segments contain it
        let mut coverage: BTreeMap<(String, usize), usize> = BTreeMap::new();
        for s in &segments {
            for idx in s.start_idx..=s.end_idx {
                *coverage.entry((s.seq_id.clone(), idx)).or_insert(0) += 1;
            }
        }
        let total = coverage.len() as f64;
        let mut overlap_profile: BTreeMap<usize, f64> = BTreeMap::new();
        for &k in coverage.values() {
            *overlap_profile.entry(k).or_insert(0.0) += 1.0;
        }
        for v in overlap_profile.values_mut() {
            *v /= total;
        }

        clusters.push(PatternCluster {
            cluster_id: clusters.len(),
            segments,
            occurrences,
            overlap_profile,
        });
    }
    clusters
}

/// Table-1-style row for one team. Standard deviation is the population
/// form, so a single-valued distribution reports 0.
pub fn team_stats(
    team_id: &str,
    result: &DiscoveryResult,
    seqs: &HashMap<String, DensifiedSequence>,
    n_team_passes: usize,
) -> TeamSeasonStats {
    let counts: Vec<f64> = result
        .matches
        .iter()
        .map(|m| count_passes_in(m) as f64)
        .collect();
    if counts.is_empty() {
        return TeamSeasonStats {
            team_id: team_id.to_string(),
            n_patterns: 0,
            mean_passes: 0.0,
            std_passes: 0.0,
            n_fte: 0,
            n_team_passes,
            no_patterns: true,
        };
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
    let n_fte = result
        .matches
        .iter()
        .filter(|m| is_final_third_entry(m, seqs))
        .count();
    TeamSeasonStats {
        team_id: team_id.to_string(),
        n_patterns: counts.len(),
        mean_passes: mean,
        std_passes: var.sqrt(),
        n_fte,
        n_team_passes,
        no_patterns: false,
    }
}

pub fn table1(
    results: &[(String, DiscoveryResult)],
    seqs: &HashMap<String, DensifiedSequence>,
    season_passes: &HashMap<String, usize>,
) -> Vec<TeamSeasonStats> {
    let mut rows: Vec<TeamSeasonStats> = results
        .iter()
        .map(|(team, result)| {
            team_stats(
                team,
                result,
                seqs,
                season_passes.get(team).copied().unwrap_or(0),
            )
        })
        .collect();
    rows.sort_by(|a, b| a.team_id.cmp(&b.team_id));
    rows
}

/// League-wide (n_involved, n_overlap) -> match count tally.
pub fn table2(
    results: &[(String, DiscoveryResult)],
    seqs: &HashMap<String, DensifiedSequence>,
) -> BTreeMap<(usize, usize), usize> {
    let mut counts = BTreeMap::new();
    for (_, result) in results {
        for m in &result.matches {
            let rec = player_overlap(m, seqs);
            *counts.entry((rec.n_involved, rec.n_overlap)).or_insert(0) += 1;
        }
    }
    counts
}

/// R-squared of ordinary least squares of pattern count on season pass
/// count over teams.
pub fn regression_r2(stats: &[TeamSeasonStats]) -> Result<f64, AnalyticsError> {
    if stats.len() < 2 {
        return Err(AnalyticsError::DegenerateInput(format!(
            "need at least 2 teams, got {}",
            stats.len()
        )));
    }
    let n = stats.len() as f64;
    let xs: Vec<f64> = stats.iter().map(|s| s.n_team_passes as f64).collect();
    let ys: Vec<f64> = stats.iter().map(|s| s.n_patterns as f64).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    if sxx == 0.0 {
        return Err(AnalyticsError::DegenerateInput(
            "all teams have the same season pass count".into(),
        ));
    }
    if syy == 0.0 {
        // constant response is predicted perfectly by the constant fit
        return Ok(1.0);
    }
    Ok((sxy * sxy) / (sxx * syy))
}

/// One spreads.csv row per match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadRow {
    pub team_id: String,
    pub dx: f64,
    pub dy: f64,
    pub duration_s: f64,
    pub length_m: f64,
    pub fte: bool,
}

pub fn spread_rows(
    results: &[(String, DiscoveryResult)],
    seqs: &HashMap<String, DensifiedSequence>,
    field: &FieldSpec,
) -> Vec<SpreadRow> {
    let mut rows = Vec::new();
    for (team, result) in results {
        for m in &result.matches {
            let (dx, dy) = spatial_spread(m, seqs);
            rows.push(SpreadRow {
                team_id: team.clone(),
                dx,
                dy,
                duration_s: duration_seconds(m, seqs),
                length_m: to_meters(m, seqs, field),
                fte: is_final_third_entry(m, seqs),
            });
        }
    }
    rows
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn grow(&mut self, n: usize) {
        while self.parent.len() < n {
            self.parent.push(self.parent.len());
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::{MatchParams, Provenance};
    use crate::preprocess::{EndpointRole, PointKind, SeqPoint};

    pub fn line_sequence(seq_id: &str, n: usize, x0: f64, y0: f64, step: f64) -> DensifiedSequence {
        let points = (0..n)
            .map(|i| {
                let pass = i / 2;
                let role = if i % 2 == 0 {
                    EndpointRole::Emission
                } else {
                    EndpointRole::Reception
                };
                SeqPoint {
                    x: x0 + i as f64 * step,
                    y: y0,
                    t: i as f64 * 0.1,
                    kind: PointKind::Original,
                    source_pass: pass,
                    endpoint_role: role,
                    players: (format!("p{}", pass), format!("p{}", pass + 1)),
                }
            })
            .collect();
        DensifiedSequence {
            seq_id: seq_id.to_string(),
            game_id: "g1".into(),
            team_id: "A".into(),
            points,
            n_passes: n / 2,
        }
    }

    fn fabricate_match(ref_seg: Segment, found_seg: Segment) -> PatternMatch {
        let len = ref_seg.len().max(found_seg.len());
        let path: Vec<(usize, usize)> = (0..len)
            .map(|k| {
                (
                    (ref_seg.start_idx + k).min(ref_seg.end_idx),
                    (found_seg.start_idx + k).min(found_seg.end_idx),
                )
            })
            .collect();
        PatternMatch {
            reference: ref_seg,
            found: found_seg,
            pair_distances: vec![0.0; path.len()],
            outlier_mask: vec![false; path.len()],
            mean_distance: 0.0,
            path,
            team_id: "A".into(),
            complete_passes_ref: vec![0],
            complete_passes_found: vec![0],
        }
    }

    fn result_of(matches: Vec<PatternMatch>) -> DiscoveryResult {
        DiscoveryResult {
            team_id: "A".into(),
            matches,
            params: MatchParams::default(),
            provenance: Provenance {
                dataset_hash: String::new(),
                params_hash: String::new(),
            },
        }
    }

    fn seg(seq: &str, lo: usize, hi: usize) -> Segment {
        Segment {
            seq_id: seq.into(),
            start_idx: lo,
            end_idx: hi,
        }
    }

    #[test]
    fn single_match_disjoint_segments_cluster() {
        let m = fabricate_match(seg("s1", 0, 9), seg("s2", 0, 9));
        let clusters = cluster_occurrences(&result_of(vec![m]));
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].occurrences, 2);
        assert_eq!(clusters[0].overlap_profile.len(), 1);
        assert!((clusters[0].overlap_profile[&1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chained_matches_count_three_occurrences() {
        // A-B and B-C with B fully shared
        let m1 = fabricate_match(seg("s1", 0, 9), seg("s2", 10, 19));
        let m2 = fabricate_match(seg("s2", 10, 19), seg("s3", 5, 14));
        let clusters = cluster_occurrences(&result_of(vec![m1, m2]));
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].occurrences, 3);
    }

    #[test]
    fn overlap_profile_is_a_distribution() {
        let m1 = fabricate_match(seg("s1", 0, 9), seg("s1", 20, 29));
        let m2 = fabricate_match(seg("s1", 5, 14), seg("s2", 0, 9));
        let clusters = cluster_occurrences(&result_of(vec![m1, m2]));
        for c in &clusters {
            let sum: f64 = c.overlap_profile.values().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn player_overlap_is_symmetric() {
        let seqs: HashMap<String, DensifiedSequence> = [
            ("s1".to_string(), line_sequence("s1", 10, 0.0, 0.0, 1.0)),
            ("s2".to_string(), line_sequence("s2", 10, 0.0, 5.0, 1.0)),
        ]
        .into();
        let m = fabricate_match(seg("s1", 0, 3), seg("s2", 0, 3));
        let rec = player_overlap(&m, &seqs);
        let rec_swapped = player_overlap(&m.swapped(), &seqs);
        assert_eq!(rec.n_involved, rec_swapped.n_involved);
        assert_eq!(rec.n_overlap, rec_swapped.n_overlap);
    }

    #[test]
    fn two_collinear_teams_regress_perfectly() {
        let row = |team: &str, patterns: usize, passes: usize| TeamSeasonStats {
            team_id: team.into(),
            n_patterns: patterns,
            mean_passes: 1.0,
            std_passes: 0.0,
            n_fte: 0,
            n_team_passes: passes,
            no_patterns: false,
        };
        let stats = vec![row("A", 10, 1000), row("B", 20, 2000)];
        assert!((regression_r2(&stats).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_regression_is_an_error() {
        let row = |team: &str| TeamSeasonStats {
            team_id: team.into(),
            n_patterns: 5,
            mean_passes: 1.0,
            std_passes: 0.0,
            n_fte: 0,
            n_team_passes: 1000,
            no_patterns: false,
        };
        assert!(regression_r2(&[row("A"), row("B")]).is_err());
    }

    #[test]
    fn empty_team_reports_zeros_with_flag() {
        let seqs = HashMap::new();
        let stats = team_stats("A", &result_of(vec![]), &seqs, 123);
        assert!(stats.no_patterns);
        assert_eq!(stats.n_patterns, 0);
        assert_eq!(stats.mean_passes, 0.0);
        assert_eq!(stats.n_team_passes, 123);
    }
}
