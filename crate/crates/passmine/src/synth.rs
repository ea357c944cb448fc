//! Seed-deterministic synthetic seasons for verification: random-walk
//! possessions, optional planted pattern templates with bounded jitter,
//! and a banded "null" mode whose possessions stay far apart so the
//! miner must find nothing.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::events::PassEvent;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantSpec {
    /// Team (by index) that receives the planted pattern.
    pub team_index: usize,
    /// Number of possessions the template is planted into.
    pub copies: usize,
    /// Max per-point Euclidean displacement, in normalized units.
    pub jitter: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub teams: usize,
    pub games: usize,
    /// Possessions per team per game.
    pub possessions_per_game: usize,
    /// Inclusive range of passes per possession.
    pub passes_min: usize,
    pub passes_max: usize,
    pub plant: Option<PlantSpec>,
    /// Null mode: every possession is confined to its own horizontal
    /// band, bands 13 units apart, with monotone x. Requires
    /// games * possessions_per_game <= 7.
    pub banded: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 42,
            teams: 2,
            games: 2,
            possessions_per_game: 10,
            passes_min: 10,
            passes_max: 16,
            plant: None,
            banded: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedCopy {
    pub game_id: String,
    pub team_id: String,
    pub possession_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub planted: Vec<PlantedCopy>,
    /// Candidate match pairs among the planted copies: K * (K-1) / 2.
    pub expected_pairs: usize,
}

/// Wavy attacking template: 12 passes, around 60 densified positions.
fn template_waypoints() -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for k in 0..=12 {
        let x = 14.0 + 5.7 * k as f64;
        let y = 32.0 + 9.0 * (k as f64 * 0.8).sin() + 0.9 * k as f64;
        pts.push((x, y));
    }
    pts
}

pub fn generate_season(spec: &SynthSpec) -> (Vec<PassEvent>, GroundTruth) {
    if spec.banded {
        assert!(
            spec.games * spec.possessions_per_game <= 7,
            "banded mode supports at most 7 possessions per team in total"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut events = Vec::new();
    let mut planted = Vec::new();

    let plant_slots: Vec<(usize, usize)> = match &spec.plant {
        Some(p) => {
            let mut slots = Vec::new();
            'outer: for g in 0..spec.games {
                for s in 0..spec.possessions_per_game {
                    slots.push((g, s));
                    if slots.len() == p.copies {
                        break 'outer;
                    }
                }
            }
            assert!(
                slots.len() == p.copies,
                "season too small for {} planted copies",
                p.copies
            );
            slots
        }
        None => Vec::new(),
    };

    for g in 0..spec.games {
        let game_id = format!("g{g:03}");
        for team in 0..spec.teams {
            let team_id = format!("team{team:02}");
            for slot in 0..spec.possessions_per_game {
                let possession_id = format!("{game_id}-{team_id}-{slot:03}");
                let base_t = ((slot * spec.teams + team) * 60) as f64;
                let is_planted = spec
                    .plant
                    .as_ref()
                    .map(|p| p.team_index == team && plant_slots.contains(&(g, slot)))
                    .unwrap_or(false);

                let waypoints = if is_planted {
                    let jitter = spec.plant.as_ref().unwrap().jitter;
                    let half = jitter / std::f64::consts::SQRT_2;
                    template_waypoints()
                        .into_iter()
                        .map(|(x, y)| {
                            let dx = rng.gen_range(-half..=half);
                            let dy = rng.gen_range(-half..=half);
                            (x + dx, y + dy)
                        })
                        .collect::<Vec<_>>()
                } else if spec.banded {
                    let band = g * spec.possessions_per_game + slot;
                    banded_walk(&mut rng, band, spec.passes_min, spec.passes_max)
                } else {
                    random_walk(&mut rng, spec.passes_min, spec.passes_max)
                };

                if is_planted {
                    planted.push(PlantedCopy {
                        game_id: game_id.clone(),
                        team_id: team_id.clone(),
                        possession_id: possession_id.clone(),
                    });
                }

                let mut passer = format!("t{team}p{:02}", rng.gen_range(0..11));
                for (k, pair) in waypoints.windows(2).enumerate() {
                    let receiver = loop {
                        let r = format!("t{team}p{:02}", rng.gen_range(0..11));
                        if r != passer {
                            break r;
                        }
                    };
                    let t_start = base_t + k as f64 * 2.0;
                    events.push(PassEvent {
                        game_id: game_id.clone(),
                        team_id: team_id.clone(),
                        period: 1,
                        t_start,
                        t_end: t_start + 1.2,
                        x_start: pair[0].0,
                        y_start: pair[0].1,
                        x_end: pair[1].0,
                        y_end: pair[1].1,
                        passer_id: passer.clone(),
                        receiver_id: Some(receiver.clone()),
                        possession_id: Some(possession_id.clone()),
                        completed: true,
                    });
                    passer = receiver;
                }
            }
        }
    }

    let k = plant_slots.len();
    let truth = GroundTruth {
        planted,
        expected_pairs: k * (k.max(1) - 1) / 2,
    };
    (events, truth)
}

fn random_walk(rng: &mut ChaCha8Rng, passes_min: usize, passes_max: usize) -> Vec<(f64, f64)> {
    let n = rng.gen_range(passes_min..=passes_max);
    let mut x = rng.gen_range(15.0..85.0);
    let mut y = rng.gen_range(15.0..85.0);
    let mut pts = vec![(x, y)];
    for _ in 0..n {
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let len = rng.gen_range(5.0..11.0);
        x = reflect(x + len * angle.cos());
        y = reflect(y + len * angle.sin());
        pts.push((x, y));
    }
    pts
}

/// Monotone-x walk pinned to band `idx`; bands are 13 units apart and the
/// wiggle stays within +-0.4, so any two bands stay over 12 units apart.
fn banded_walk(
    rng: &mut ChaCha8Rng,
    idx: usize,
    passes_min: usize,
    passes_max: usize,
) -> Vec<(f64, f64)> {
    let y0 = 6.0 + 13.0 * idx as f64;
    let n = rng.gen_range(passes_min..=passes_max).min(12);
    let mut x = 4.0;
    let mut pts = vec![(x, y0)];
    for _ in 0..n {
        x += rng.gen_range(6.3..7.7);
        if x > 96.0 {
            break;
        }
        let y = y0 + rng.gen_range(-0.4..0.4);
        pts.push((x, y));
    }
    pts
}

fn reflect(v: f64) -> f64 {
    let mut v = v;
    if v < 1.0 {
        v = 2.0 - v;
    }
    if v > 99.0 {
        v = 198.0 - v;
    }
    v.clamp(1.0, 99.0)
}
