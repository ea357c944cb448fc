//! Coordinate normalization to the [0,100] pitch and densification of
//! possessions with virtual points so consecutive positions are less
//! than `step` units apart.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::PossessionSequence;

pub const DEFAULT_STEP: f64 = 2.0;

/// Physical pitch dimensions plus the per-(game, team, period) mirror
/// rules that make every team attack toward x = 100.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSpec {
    pub length_m: f64,
    pub width_m: f64,
    pub flip_rules: HashSet<(String, String, u8)>,
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec {
            length_m: 105.0,
            width_m: 68.0,
            flip_rules: HashSet::new(),
        }
    }
}

impl FieldSpec {
    /// Field spec for feeds that are already on the [0,100] grid.
    pub fn prenormalized() -> Self {
        FieldSpec {
            length_m: 100.0,
            width_m: 100.0,
            flip_rules: HashSet::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("sequence {seq_id}: coordinate ({x}, {y}) outside the {length}x{width} field beyond 1% tolerance")]
    OutOfField {
        seq_id: String,
        x: f64,
        y: f64,
        length: f64,
        width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointKind {
    Original,
    Virtual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndpointRole {
    Emission,
    Reception,
    None,
}

/// One position of the densified ball trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub kind: PointKind,
    /// Index of the hosting pass within the possession. Points in the
    /// dwell gap between two passes belong to the upcoming pass.
    pub source_pass: usize,
    pub endpoint_role: EndpointRole,
    pub players: (String, String),
}

/// A possession's ball trajectory with interpolated virtual points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensifiedSequence {
    pub seq_id: String,
    pub game_id: String,
    pub team_id: String,
    pub points: Vec<SeqPoint>,
    pub n_passes: usize,
}

/// Scale to [0,100] x [0,100] and apply mirror rules. Coordinates up to
/// 1% outside the declared dimensions are clamped; anything further is
/// an error.
pub fn normalize(
    seq: &PossessionSequence,
    field: &FieldSpec,
) -> Result<PossessionSequence, PreprocessError> {
    let mut out = seq.clone();
    for pass in &mut out.passes {
        let flip = field
            .flip_rules
            .contains(&(pass.game_id.clone(), pass.team_id.clone(), pass.period));
        for (x, y) in [
            (&mut pass.x_start, &mut pass.y_start),
            (&mut pass.x_end, &mut pass.y_end),
        ] {
            let nx = scale(*x, field.length_m).ok_or_else(|| PreprocessError::OutOfField {
                seq_id: seq.seq_id.clone(),
                x: *x,
                y: *y,
                length: field.length_m,
                width: field.width_m,
            })?;
            let ny = scale(*y, field.width_m).ok_or_else(|| PreprocessError::OutOfField {
                seq_id: seq.seq_id.clone(),
                x: *x,
                y: *y,
                length: field.length_m,
                width: field.width_m,
            })?;
            *x = if flip { 100.0 - nx } else { nx };
            *y = if flip { 100.0 - ny } else { ny };
        }
    }
    Ok(out)
}

fn scale(v: f64, extent: f64) -> Option<f64> {
    let tol = 0.01 * extent;
    if v < -tol || v > extent + tol {
        return None;
    }
    Some(v.clamp(0.0, extent) * 100.0 / extent)
}

/// Insert equally spaced collinear virtual points between consecutive
/// original positions so every gap is strictly under `step` units.
/// Timestamps interpolate linearly between the bracketing originals.
pub fn densify(seq: &PossessionSequence, step: f64) -> DensifiedSequence {
    assert!(step > 0.0, "densify step must be positive");
    let mut points: Vec<SeqPoint> = Vec::new();

    for (k, pass) in seq.passes.iter().enumerate() {
        let receiver = pass
            .receiver_id
            .clone()
            .unwrap_or_else(|| pass.passer_id.clone());
        let players = (pass.passer_id.clone(), receiver);

        // dwell gap from the previous reception to this emission
        if let Some(prev) = points.last().cloned() {
            let carry = (pass.passer_id.clone(), pass.passer_id.clone());
            push_virtuals(
                &mut points,
                (prev.x, prev.y, prev.t),
                (pass.x_start, pass.y_start, pass.t_start),
                step,
                k,
                &carry,
            );
        }

        points.push(SeqPoint {
            x: pass.x_start,
            y: pass.y_start,
            t: pass.t_start,
            kind: PointKind::Original,
            source_pass: k,
            endpoint_role: EndpointRole::Emission,
            players: players.clone(),
        });
        push_virtuals(
            &mut points,
            (pass.x_start, pass.y_start, pass.t_start),
            (pass.x_end, pass.y_end, pass.t_end),
            step,
            k,
            &players,
        );
        points.push(SeqPoint {
            x: pass.x_end,
            y: pass.y_end,
            t: pass.t_end,
            kind: PointKind::Original,
            source_pass: k,
            endpoint_role: EndpointRole::Reception,
            players,
        });
    }

    DensifiedSequence {
        seq_id: seq.seq_id.clone(),
        game_id: seq.game_id.clone(),
        team_id: seq.team_id.clone(),
        points,
        n_passes: seq.passes.len(),
    }
}

fn push_virtuals(
    points: &mut Vec<SeqPoint>,
    from: (f64, f64, f64),
    to: (f64, f64, f64),
    step: f64,
    source_pass: usize,
    players: &(String, String),
) {
    let (x0, y0, t0) = from;
    let (x1, y1, t1) = to;
    let d = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
    if d == 0.0 {
        return;
    }
    let segments = (d / step).ceil() as usize;
    for i in 1..segments {
        let f = i as f64 / segments as f64;
        points.push(SeqPoint {
            x: x0 + f * (x1 - x0),
            y: y0 + f * (y1 - y0),
            t: t0 + f * (t1 - t0),
            kind: PointKind::Virtual,
            source_pass,
            endpoint_role: EndpointRole::None,
            players: players.clone(),
        });
    }
}
