//! File rendering: pitch drawings of individual matches, the spread
//! scatter, the occurrence/overlap chart, and the CSV tables. All
//! output is byte-deterministic for identical input.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{PatternCluster, SpreadRow, TeamSeasonStats};
use crate::discovery::{PatternMatch, Segment};
use crate::preprocess::{DensifiedSequence, PointKind};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to render")]
    EmptyInput,
}

/// Colors and marker conventions for pitch drawings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PitchStyle {
    pub background_color: String,
    pub pattern_color: String,
    pub pre_color: String,
    pub post_color: String,
    pub pitch_line_color: String,
}

impl Default for PitchStyle {
    fn default() -> Self {
        PitchStyle {
            background_color: "#b0b0b0".into(),
            pattern_color: "#1f77b4".into(),
            pre_color: "#2ca02c".into(),
            post_color: "#d62728".into(),
            pitch_line_color: "#cccccc".into(),
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 220.0;
const MARGIN: f64 = 10.0;

fn pitch_xy(x: f64, y: f64, x_off: f64) -> (f64, f64) {
    (
        x_off + MARGIN + x * 3.0,
        MARGIN + (100.0 - y) * 2.0,
    )
}

fn draw_pitch(svg: &mut String, x_off: f64, style: &PitchStyle) {
    let line = &style.pitch_line_color;
    let rect = |svg: &mut String, x0: f64, y0: f64, x1: f64, y1: f64| {
        let (px0, py0) = pitch_xy(x0, y1, x_off);
        let (px1, py1) = pitch_xy(x1, y0, x_off);
        let _ = write!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"{line}\"/>",
            fmt(px0),
            fmt(py0),
            fmt(px1 - px0),
            fmt(py1 - py0)
        );
    };
    rect(svg, 0.0, 0.0, 100.0, 100.0);
    // halfway line and center circle
    let (cx0, cy0) = pitch_xy(50.0, 100.0, x_off);
    let (cx1, cy1) = pitch_xy(50.0, 0.0, x_off);
    let _ = write!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{line}\"/>",
        fmt(cx0),
        fmt(cy0),
        fmt(cx1),
        fmt(cy1)
    );
    let (ccx, ccy) = pitch_xy(50.0, 50.0, x_off);
    let _ = write!(
        svg,
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"{line}\"/>",
        fmt(ccx),
        fmt(ccy),
        fmt(9.15 * 3.0)
    );
    // penalty areas
    rect(svg, 0.0, 19.0, 17.0, 81.0);
    rect(svg, 83.0, 19.0, 100.0, 81.0);
}

fn marker(svg: &mut String, x: f64, y: f64, x_off: f64, color: &str, original: bool) {
    let (px, py) = pitch_xy(x, y, x_off);
    if original {
        // pass endpoints draw as triangles
        let _ = write!(
            svg,
            "<polygon points=\"{},{} {},{} {},{}\" fill=\"{color}\"/>",
            fmt(px),
            fmt(py - 3.2),
            fmt(px - 2.8),
            fmt(py + 2.2),
            fmt(px + 2.8),
            fmt(py + 2.2)
        );
    } else {
        let _ = write!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"1.8\" fill=\"{color}\"/>",
            fmt(px),
            fmt(py)
        );
    }
}

/// Extend outward from a matched segment to the nearest original pass
/// endpoint on each side.
fn extension(seq: &DensifiedSequence, seg: &Segment) -> (usize, usize) {
    let mut lo = seg.start_idx;
    while lo > 0 && seq.points[lo].kind != PointKind::Original {
        lo -= 1;
    }
    if seq.points[lo].kind != PointKind::Original {
        lo = seg.start_idx;
    }
    let mut hi = seg.end_idx;
    while hi + 1 < seq.points.len() && seq.points[hi].kind != PointKind::Original {
        hi += 1;
    }
    if seq.points[hi].kind != PointKind::Original {
        hi = seg.end_idx;
    }
    (lo, hi)
}

fn draw_panel(
    svg: &mut String,
    seq: &DensifiedSequence,
    seg: &Segment,
    x_off: f64,
    style: &PitchStyle,
) {
    draw_pitch(svg, x_off, style);
    let (pre_lo, post_hi) = extension(seq, seg);
    // trajectory polyline in the background color
    let mut pts = String::new();
    for p in &seq.points {
        let (px, py) = pitch_xy(p.x, p.y, x_off);
        let _ = write!(pts, "{},{} ", fmt(px), fmt(py));
    }
    let _ = write!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"0.6\"/>",
        pts.trim_end(),
        style.background_color
    );
    for (idx, p) in seq.points.iter().enumerate() {
        let color = if seg.contains(idx) {
            &style.pattern_color
        } else if idx >= pre_lo && idx < seg.start_idx {
            &style.pre_color
        } else if idx > seg.end_idx && idx <= post_hi {
            &style.post_color
        } else {
            &style.background_color
        };
        marker(svg, p.x, p.y, x_off, color, p.kind == PointKind::Original);
    }
}

/// Two side-by-side pitch panels: reference on the left, found on the
/// right.
pub fn render_match(
    m: &PatternMatch,
    seqs: &HashMap<String, DensifiedSequence>,
    style: &PitchStyle,
) -> String {
    let w = 2.0 * PANEL_W + 3.0 * MARGIN;
    let h = PANEL_H + 2.0 * MARGIN;
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        fmt(w),
        fmt(h),
        fmt(w),
        fmt(h)
    );
    draw_panel(&mut svg, &seqs[&m.reference.seq_id], &m.reference, 0.0, style);
    draw_panel(
        &mut svg,
        &seqs[&m.found.seq_id],
        &m.found,
        PANEL_W + MARGIN,
        style,
    );
    svg.push_str("</svg>\n");
    svg
}

/// One marker per match at (dx, |dy|); axes fixed to [0,100].
pub fn render_spread_scatter(rows: &[SpreadRow]) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let (w, h) = (420.0, 420.0);
    let map = |v: f64, extent: f64| MARGIN + (v / 100.0) * (extent - 2.0 * MARGIN);
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = write!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\"/>",
        fmt(MARGIN),
        fmt(MARGIN),
        fmt(w - 2.0 * MARGIN),
        fmt(h - 2.0 * MARGIN)
    );
    for row in rows {
        let x = map(row.dx, w);
        let y = h - map(row.dy, h);
        let _ = write!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#1f77b4\"><title>{}</title></circle>",
            fmt(x),
            fmt(y),
            row.team_id
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// One marker per cluster at (occurrences, overlap percentage), where the
/// overlap percentage is the profile mass at multiplicity = occurrences.
pub fn render_overlap_chart(clusters: &[PatternCluster]) -> Result<String, ReportError> {
    if clusters.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let (w, h) = (420.0, 420.0);
    let max_occ = 10.0f64;
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = write!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\"/>",
        fmt(MARGIN),
        fmt(MARGIN),
        fmt(w - 2.0 * MARGIN),
        fmt(h - 2.0 * MARGIN)
    );
    for c in clusters {
        let mass = c
            .overlap_profile
            .get(&c.occurrences)
            .copied()
            .unwrap_or(0.0);
        let x = MARGIN + (c.occurrences as f64 / max_occ) * (w - 2.0 * MARGIN);
        let y = h - MARGIN - mass * (h - 2.0 * MARGIN);
        let _ = write!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#d62728\"/>",
            fmt(x),
            fmt(y)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn table1_csv(rows: &[TeamSeasonStats]) -> String {
    let mut out = String::from("team_id,n_patterns,mean_passes,std_passes,n_fte,n_team_passes,no_patterns\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{},{},{}",
            r.team_id, r.n_patterns, r.mean_passes, r.std_passes, r.n_fte, r.n_team_passes,
            r.no_patterns
        );
    }
    out
}

pub fn table2_csv(counts: &BTreeMap<(usize, usize), usize>) -> String {
    let mut out = String::from("n_involved,n_overlap,count\n");
    for (&(inv, ovl), &count) in counts {
        let _ = writeln!(out, "{inv},{ovl},{count}");
    }
    out
}

pub fn spreads_csv(rows: &[SpreadRow]) -> String {
    let mut out = String::from("team_id,dx,dy,duration_s,length_m,fte\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{}",
            r.team_id, r.dx, r.dy, r.duration_s, r.length_m, r.fte
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{EndpointRole, PointKind, SeqPoint};

    fn seq(seq_id: &str, n: usize) -> DensifiedSequence {
        let points = (0..n)
            .map(|i| SeqPoint {
                x: i as f64,
                y: 50.0,
                t: i as f64,
                kind: if i % 3 == 0 {
                    PointKind::Original
                } else {
                    PointKind::Virtual
                },
                source_pass: i / 3,
                endpoint_role: if i % 3 == 0 {
                    if (i / 3) % 2 == 0 {
                        EndpointRole::Emission
                    } else {
                        EndpointRole::Reception
                    }
                } else {
                    EndpointRole::None
                },
                players: ("p1".into(), "p2".into()),
            })
            .collect();
        DensifiedSequence {
            seq_id: seq_id.into(),
            game_id: "g1".into(),
            team_id: "A".into(),
            points,
            n_passes: n / 3,
        }
    }

    fn fixture_match() -> (PatternMatch, HashMap<String, DensifiedSequence>) {
        let s1 = seq("s1", 30);
        let s2 = seq("s2", 30);
        let m = PatternMatch {
            reference: Segment {
                seq_id: "s1".into(),
                start_idx: 5,
                end_idx: 20,
            },
            found: Segment {
                seq_id: "s2".into(),
                start_idx: 8,
                end_idx: 23,
            },
            path: (0..16).map(|k| (5 + k, 8 + k)).collect(),
            pair_distances: vec![0.5; 16],
            outlier_mask: vec![false; 16],
            mean_distance: 0.5,
            team_id: "A".into(),
            complete_passes_ref: vec![2],
            complete_passes_found: vec![3],
        };
        let seqs = [("s1".to_string(), s1), ("s2".to_string(), s2)].into();
        (m, seqs)
    }

    #[test]
    fn match_svg_contains_one_pattern_marker_per_position() {
        let (m, seqs) = fixture_match();
        let style = PitchStyle::default();
        let svg = render_match(&m, &seqs, &style);
        let pattern_markers = svg.matches(&style.pattern_color).count();
        assert_eq!(pattern_markers, m.reference.len() + m.found.len());
    }

    #[test]
    fn rendering_is_deterministic() {
        let (m, seqs) = fixture_match();
        let style = PitchStyle::default();
        assert_eq!(render_match(&m, &seqs, &style), render_match(&m, &seqs, &style));
    }

    #[test]
    fn scatter_renders_one_marker_per_row() {
        let rows = vec![SpreadRow {
            team_id: "A".into(),
            dx: 65.0,
            dy: 0.0,
            duration_s: 4.0,
            length_m: 60.0,
            fte: true,
        }];
        let svg = render_spread_scatter(&rows).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(render_spread_scatter(&[]).is_err());
    }
}
