//! Pass-event ingestion: parsing raw logs and segmenting them into
//! per-team, per-possession pass sequences.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One pass event as it appears in the raw provider log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassEvent {
    pub game_id: String,
    pub team_id: String,
    pub period: u8,
    pub t_start: f64,
    pub t_end: f64,
    pub x_start: f64,
    pub y_start: f64,
    pub x_end: f64,
    pub y_end: f64,
    pub passer_id: String,
    #[serde(default)]
    pub receiver_id: Option<String>,
    #[serde(default)]
    pub possession_id: Option<String>,
    pub completed: bool,
}

/// Ordered completed passes of one team between gaining and losing the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PossessionSequence {
    pub seq_id: String,
    pub game_id: String,
    pub team_id: String,
    pub passes: Vec<PassEvent>,
}

/// Rules for cutting an event stream into possessions when the provider
/// does not hand them to us.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentationPolicy {
    pub max_gap_seconds: f64,
    pub break_on_period: bool,
    pub use_provided_possession_id: bool,
}

impl Default for SegmentationPolicy {
    fn default() -> Self {
        SegmentationPolicy {
            max_gap_seconds: 15.0,
            break_on_period: true,
            use_provided_possession_id: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("record {record}: missing column {column}")]
    Schema { record: usize, column: String },
    #[error("record {record}: {message}")]
    Value { record: usize, message: String },
    #[error("record {record}: {source}")]
    Io {
        record: usize,
        #[source]
        source: std::io::Error,
    },
}

/// Input encodings understood by [`parse_events`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Json,
}

pub const CSV_COLUMNS: [&str; 13] = [
    "game_id",
    "team_id",
    "period",
    "t_start",
    "t_end",
    "x_start",
    "y_start",
    "x_end",
    "y_end",
    "passer_id",
    "receiver_id",
    "possession_id",
    "completed",
];

/// Parse a byte stream of pass events. Record indices in errors are
/// 1-based line numbers for CSV (the header is line 1) and 0-based array
/// indices for JSON.
pub fn parse_events<R: Read>(stream: R, format: InputFormat) -> Result<Vec<PassEvent>, ParseError> {
    match format {
        InputFormat::Csv => parse_csv(stream),
        InputFormat::Json => parse_json(stream),
    }
}

fn parse_csv<R: Read>(stream: R) -> Result<Vec<PassEvent>, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(stream);

    let headers = reader
        .headers()
        .map_err(|e| ParseError::Value {
            record: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut col_idx = Vec::with_capacity(CSV_COLUMNS.len());
    for name in CSV_COLUMNS {
        match headers.iter().position(|h| h == name) {
            Some(i) => col_idx.push(i),
            None => {
                return Err(ParseError::Schema {
                    record: 1,
                    column: name.to_string(),
                })
            }
        }
    }

    let mut events = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let line = n + 2; // header is line 1
        let row = row.map_err(|e| ParseError::Value {
            record: line,
            message: e.to_string(),
        })?;
        let field = |k: usize| -> Result<&str, ParseError> {
            row.get(col_idx[k]).ok_or_else(|| ParseError::Schema {
                record: line,
                column: CSV_COLUMNS[k].to_string(),
            })
        };
        let num = |k: usize| -> Result<f64, ParseError> {
            let raw = field(k)?;
            raw.parse::<f64>().map_err(|_| ParseError::Value {
                record: line,
                message: format!("non-numeric {}: {raw:?}", CSV_COLUMNS[k]),
            })
        };
        let period = field(2)?
            .parse::<u8>()
            .map_err(|_| ParseError::Value {
                record: line,
                message: format!("bad period: {:?}", field(2).unwrap_or("")),
            })?;
        let completed = match field(12)? {
            "true" | "1" => true,
            "false" | "0" => false,
            other => {
                return Err(ParseError::Value {
                    record: line,
                    message: format!("bad completed flag: {other:?}"),
                })
            }
        };
        let opt = |s: &str| {
            if s.is_empty() {
                None
            } else {
                Some(s.to_string())
            }
        };
        let event = PassEvent {
            game_id: field(0)?.to_string(),
            team_id: field(1)?.to_string(),
            period,
            t_start: num(3)?,
            t_end: num(4)?,
            x_start: num(5)?,
            y_start: num(6)?,
            x_end: num(7)?,
            y_end: num(8)?,
            passer_id: field(9)?.to_string(),
            receiver_id: opt(field(10)?),
            possession_id: opt(field(11)?),
            completed,
        };
        validate(&event, line)?;
        events.push(event);
    }
    Ok(events)
}

fn parse_json<R: Read>(stream: R) -> Result<Vec<PassEvent>, ParseError> {
    let events: Vec<PassEvent> = serde_json::from_reader(stream).map_err(|e| ParseError::Value {
        record: 0,
        message: e.to_string(),
    })?;
    for (i, e) in events.iter().enumerate() {
        validate(e, i)?;
    }
    Ok(events)
}

fn validate(e: &PassEvent, record: usize) -> Result<(), ParseError> {
    let bad = |message: String| ParseError::Value { record, message };
    if !(e.t_start.is_finite() && e.t_end.is_finite()) || e.t_start < 0.0 {
        return Err(bad(format!(
            "timestamps must be finite and non-negative, got {}..{}",
            e.t_start, e.t_end
        )));
    }
    if e.t_end < e.t_start {
        return Err(bad(format!("t_end {} < t_start {}", e.t_end, e.t_start)));
    }
    for (name, v) in [
        ("x_start", e.x_start),
        ("y_start", e.y_start),
        ("x_end", e.x_end),
        ("y_end", e.y_end),
    ] {
        if !v.is_finite() {
            return Err(bad(format!("non-finite coordinate {name}")));
        }
    }
    if !e.completed && e.receiver_id.is_some() {
        return Err(bad("incomplete pass carries a receiver_id".to_string()));
    }
    if e.completed && e.receiver_id.is_none() {
        return Err(bad("completed pass without a receiver_id".to_string()));
    }
    Ok(())
}

/// Serialize events back to canonical CSV (same schema as the input).
pub fn write_events_csv<W: std::io::Write>(mut w: W, events: &[PassEvent]) -> std::io::Result<()> {
    writeln!(w, "{}", CSV_COLUMNS.join(","))?;
    for e in events {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            e.game_id,
            e.team_id,
            e.period,
            fmt_f64(e.t_start),
            fmt_f64(e.t_end),
            fmt_f64(e.x_start),
            fmt_f64(e.y_start),
            fmt_f64(e.x_end),
            fmt_f64(e.y_end),
            e.passer_id,
            e.receiver_id.as_deref().unwrap_or(""),
            e.possession_id.as_deref().unwrap_or(""),
            e.completed,
        )?;
    }
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    // shortest round-trip formatting keeps parse -> serialize byte-stable
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

/// Cut a sorted event stream into per-team possessions. Incomplete passes
/// terminate the running possession and are dropped.
pub fn build_possessions(
    events: &[PassEvent],
    policy: &SegmentationPolicy,
) -> Vec<PossessionSequence> {
    let mut sorted: Vec<&PassEvent> = events.iter().collect();
    sorted.sort_by(|a, b| {
        (a.game_id.as_str(), a.t_start, a.t_end)
            .partial_cmp(&(b.game_id.as_str(), b.t_start, b.t_end))
            .unwrap()
    });

    let mut out: Vec<PossessionSequence> = Vec::new();
    let mut current: Vec<PassEvent> = Vec::new();
    let mut counter: std::collections::HashMap<(String, String), usize> =
        std::collections::HashMap::new();

    let mut flush = |current: &mut Vec<PassEvent>, out: &mut Vec<PossessionSequence>| {
        if current.is_empty() {
            return;
        }
        let game_id = current[0].game_id.clone();
        let team_id = current[0].team_id.clone();
        let n = counter
            .entry((game_id.clone(), team_id.clone()))
            .or_insert(0);
        let seq_id = format!("{game_id}:{team_id}:{n:04}");
        *n += 1;
        out.push(PossessionSequence {
            seq_id,
            game_id,
            team_id,
            passes: std::mem::take(current),
        });
    };

    for e in sorted {
        if !e.completed {
            flush(&mut current, &mut out);
            continue;
        }
        if let Some(prev) = current.last() {
            let breaks = prev.game_id != e.game_id
                || prev.team_id != e.team_id
                || (policy.break_on_period && prev.period != e.period)
                || (policy.use_provided_possession_id
                    && prev.possession_id.is_some()
                    && e.possession_id.is_some()
                    && prev.possession_id != e.possession_id)
                || e.t_start - prev.t_end > policy.max_gap_seconds;
            if breaks {
                flush(&mut current, &mut out);
            }
        }
        current.push(e.clone());
    }
    flush(&mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(team: &str, t0: f64, t1: f64, pos: &str, completed: bool) -> PassEvent {
        PassEvent {
            game_id: "g1".into(),
            team_id: team.into(),
            period: 1,
            t_start: t0,
            t_end: t1,
            x_start: 10.0,
            y_start: 10.0,
            x_end: 20.0,
            y_end: 20.0,
            passer_id: "p1".into(),
            receiver_id: if completed { Some("p2".into()) } else { None },
            possession_id: if pos.is_empty() { None } else { Some(pos.into()) },
            completed,
        }
    }

    #[test]
    fn parses_canonical_csv_row() {
        let data = "game_id,team_id,period,t_start,t_end,x_start,y_start,x_end,y_end,passer_id,receiver_id,possession_id,completed\n\
                    g1,home,1,10.0,11.2,50,34,60,30,p7,p9,,true\n";
        let events = parse_events(data.as_bytes(), InputFormat::Csv).unwrap();
        assert_eq!(events.len(), 1);
        let e = &events[0];
        assert_eq!(e.game_id, "g1");
        assert_eq!((e.x_start, e.y_start, e.x_end, e.y_end), (50.0, 34.0, 60.0, 30.0));
        assert_eq!(e.passer_id, "p7");
        assert_eq!(e.receiver_id.as_deref(), Some("p9"));
        assert!(e.completed);
    }

    #[test]
    fn non_numeric_coordinate_is_a_value_error() {
        let data = "game_id,team_id,period,t_start,t_end,x_start,y_start,x_end,y_end,passer_id,receiver_id,possession_id,completed\n\
                    g1,home,1,10.0,11.2,abc,34,60,30,p7,p9,,true\n";
        let err = parse_events(data.as_bytes(), InputFormat::Csv).unwrap_err();
        match err {
            ParseError::Value { record, .. } => assert_eq!(record, 2),
            other => panic!("expected Value error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let data = "game_id,team_id,period\ng1,home,1\n";
        let err = parse_events(data.as_bytes(), InputFormat::Csv).unwrap_err();
        assert!(matches!(err, ParseError::Schema { .. }));
    }

    #[test]
    fn time_inversion_is_rejected() {
        let data = "game_id,team_id,period,t_start,t_end,x_start,y_start,x_end,y_end,passer_id,receiver_id,possession_id,completed\n\
                    g1,home,1,12.0,11.2,50,34,60,30,p7,p9,,true\n";
        assert!(parse_events(data.as_bytes(), InputFormat::Csv).is_err());
    }

    #[test]
    fn empty_file_yields_empty_list() {
        let data = "game_id,team_id,period,t_start,t_end,x_start,y_start,x_end,y_end,passer_id,receiver_id,possession_id,completed\n";
        let events = parse_events(data.as_bytes(), InputFormat::Csv).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn team_change_breaks_possession() {
        let events = vec![
            row("A", 0.0, 1.0, "", true),
            row("A", 4.0, 5.0, "", true),
            row("B", 6.0, 7.0, "", true),
        ];
        let seqs = build_possessions(&events, &SegmentationPolicy::default());
        assert_eq!(seqs.len(), 2);
        assert_eq!(seqs[0].passes.len(), 2);
        assert_eq!(seqs[1].passes.len(), 1);
    }

    #[test]
    fn gap_rule_breaks_possession() {
        let events = vec![row("A", 0.0, 1.0, "", true), row("A", 21.0, 22.0, "", true)];
        let seqs = build_possessions(&events, &SegmentationPolicy::default());
        assert_eq!(seqs.len(), 2);
        assert!(seqs.iter().all(|s| s.passes.len() == 1));
    }

    #[test]
    fn possession_id_rule_breaks_possession() {
        let events = vec![
            row("A", 0.0, 1.0, "P1", true),
            row("A", 2.0, 3.0, "P1", true),
            row("A", 4.0, 5.0, "P2", true),
        ];
        let seqs = build_possessions(&events, &SegmentationPolicy::default());
        assert_eq!(seqs.len(), 2);
        assert_eq!(seqs[0].passes.len(), 2);
        assert_eq!(seqs[1].passes.len(), 1);
    }

    #[test]
    fn incomplete_pass_terminates_and_is_dropped() {
        let mut mid = row("A", 2.0, 3.0, "", false);
        mid.receiver_id = None;
        let events = vec![row("A", 0.0, 1.0, "", true), mid, row("A", 4.0, 5.0, "", true)];
        let seqs = build_possessions(&events, &SegmentationPolicy::default());
        assert_eq!(seqs.len(), 2);
        let total: usize = seqs.iter().map(|s| s.passes.len()).sum();
        assert_eq!(total, 2);
    }

    #[test]
    fn concatenation_recovers_completed_passes_in_order() {
        let events = vec![
            row("A", 0.0, 1.0, "", true),
            row("A", 2.0, 3.0, "", true),
            row("B", 4.0, 5.0, "", true),
            row("A", 30.0, 31.0, "", true),
        ];
        let seqs = build_possessions(&events, &SegmentationPolicy::default());
        let concat: Vec<&PassEvent> = seqs.iter().flat_map(|s| s.passes.iter()).collect();
        let completed: Vec<&PassEvent> = events.iter().filter(|e| e.completed).collect();
        assert_eq!(concat.len(), completed.len());
        for (a, b) in concat.iter().zip(completed.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn csv_round_trip_is_byte_stable() {
        let data = "game_id,team_id,period,t_start,t_end,x_start,y_start,x_end,y_end,passer_id,receiver_id,possession_id,completed\n\
                    g1,home,1,10.0,11.2,50.0,34.0,60.0,30.0,p7,p9,,true\n";
        let events = parse_events(data.as_bytes(), InputFormat::Csv).unwrap();
        let mut buf = Vec::new();
        write_events_csv(&mut buf, &events).unwrap();
        let events2 = parse_events(buf.as_slice(), InputFormat::Csv).unwrap();
        let mut buf2 = Vec::new();
        write_events_csv(&mut buf2, &events2).unwrap();
        assert_eq!(buf, buf2);
    }
}
