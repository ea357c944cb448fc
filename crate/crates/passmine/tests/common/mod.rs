//! Shared fixture builders for the discovery tests.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use passmine::events::{PassEvent, PossessionSequence};
use passmine::preprocess::{densify, DensifiedSequence, EndpointRole, PointKind, SeqPoint};

/// A sequence whose points are pairwise >= 14 units apart (a permuted
/// grid walk), so only diagonal cells survive a 10-unit global gate when
/// it is compared against a small translate of itself. Every point is an
/// original pass endpoint: pass k runs from point 2k to 2k+1.
pub fn spread_sequence(seq_id: &str, n: usize) -> DensifiedSequence {
    assert!(n <= 56);
    let mut points = Vec::with_capacity(n);
    for idx in 0..n {
        let row = idx / 8;
        let col = if row % 2 == 0 { idx % 8 } else { 7 - idx % 8 };
        let x = 1.0 + 14.0 * col as f64;
        let y = 1.0 + 14.0 * row as f64;
        let pass = idx / 2;
        points.push(SeqPoint {
            x,
            y,
            t: idx as f64 * 0.1,
            kind: PointKind::Original,
            source_pass: pass,
            endpoint_role: if idx % 2 == 0 {
                EndpointRole::Emission
            } else {
                EndpointRole::Reception
            },
            players: (format!("p{pass}"), format!("p{}", pass + 1)),
        });
    }
    DensifiedSequence {
        seq_id: seq_id.to_string(),
        game_id: "g1".into(),
        team_id: "A".into(),
        points,
        n_passes: n.div_ceil(2),
    }
}

pub fn translated(seq: &DensifiedSequence, dx: f64, dy: f64, seq_id: &str) -> DensifiedSequence {
    let mut out = seq.clone();
    out.seq_id = seq_id.to_string();
    for p in &mut out.points {
        p.x += dx;
        p.y += dy;
    }
    out
}

fn raw_pass(
    seq: &str,
    k: usize,
    from: (f64, f64),
    to: (f64, f64),
    t0: f64,
) -> PassEvent {
    PassEvent {
        game_id: "g1".into(),
        team_id: "A".into(),
        period: 1,
        t_start: t0,
        t_end: t0 + 1.0,
        x_start: from.0,
        y_start: from.1,
        x_end: to.0,
        y_end: to.1,
        passer_id: format!("{seq}p{k}"),
        receiver_id: Some(format!("{seq}p{}", k + 1)),
        possession_id: None,
        completed: true,
    }
}

/// Densified random-walk possession with `n_passes` passes of length
/// 3..8 starting near `origin`; roughly 4 points per pass.
pub fn random_possession(
    rng: &mut ChaCha8Rng,
    seq_id: &str,
    n_passes: usize,
    origin: (f64, f64),
) -> DensifiedSequence {
    let mut x = origin.0 + rng.gen_range(-3.0..3.0);
    let mut y = origin.1 + rng.gen_range(-3.0..3.0);
    let mut passes = Vec::new();
    for k in 0..n_passes {
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let len = rng.gen_range(3.0..8.0);
        let nx = (x + len * angle.cos()).clamp(2.0, 98.0);
        let ny = (y + len * angle.sin()).clamp(2.0, 98.0);
        passes.push(raw_pass(seq_id, k, (x, y), (nx, ny), k as f64 * 2.0));
        x = nx;
        y = ny;
    }
    let possession = PossessionSequence {
        seq_id: seq_id.to_string(),
        game_id: "g1".into(),
        team_id: "A".into(),
        passes,
    };
    densify(&possession, 2.0)
}

/// A jittered clone: every point displaced by at most `jitter` units.
pub fn jittered(
    rng: &mut ChaCha8Rng,
    seq: &DensifiedSequence,
    jitter: f64,
    seq_id: &str,
) -> DensifiedSequence {
    let half = jitter / std::f64::consts::SQRT_2;
    let mut out = seq.clone();
    out.seq_id = seq_id.to_string();
    for p in &mut out.points {
        p.x += rng.gen_range(-half..=half);
        p.y += rng.gen_range(-half..=half);
    }
    out
}

/// Random pair generator for oracle-equivalence style tests: half the
/// time the second sequence is a jittered copy, otherwise independent.
pub fn random_pair(seed: u64) -> (DensifiedSequence, DensifiedSequence) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..6);
    let a = random_possession(&mut rng, "seq_a", n, (40.0, 40.0));
    let b = if rng.gen_bool(0.5) {
        let jitter = rng.gen_range(0.2..3.0);
        jittered(&mut rng, &a, jitter, "seq_b")
    } else {
        let m = rng.gen_range(3..6);
        random_possession(&mut rng, "seq_b", m, (50.0, 50.0))
    };
    (a, b)
}
