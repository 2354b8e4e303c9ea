//! Trajectory and step-trace CSV files.

use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use super::TrajectoryRecord;
use crate::route_following::Cue;

pub const TRAJECTORY_HEADER: &str = "tick,x,y,theta,cue,walk_dir,deviation";
pub const TRACE_HEADER: &str =
    "tick,cls_index,subgoal_x,subgoal_y,subgoal_kind,theta_exp,candidates,theta_opt,d_ultra,theta_walk";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("malformed trajectory CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header {0:?}")]
    Header(String),
    #[error("line {line}: unknown cue {cue:?}")]
    Cue { line: usize, cue: String },
}

/// One parsed trajectory line.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TrajectoryRow {
    pub tick: u64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    #[serde(deserialize_with = "de_cue")]
    pub cue: Cue,
    pub walk_dir: Option<f64>,
    pub deviation: f64,
}

fn de_cue<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Cue, D::Error> {
    let s = String::deserialize(d)?;
    Cue::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown cue {s:?}")))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Renders the true trajectory, one line per tick. `deviation` is the
/// segment-projected distance of the true position from the planned path.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &record.samples {
        let p = s.pose.position;
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{},{},{:.6}",
            s.tick,
            p.x,
            p.y,
            s.pose.heading.value(),
            s.guidance.cue,
            opt(s.guidance.walk_direction.map(|a| a.value())),
            record.path.points.distance_to(&p),
        );
    }
    out
}

pub fn read_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != TRAJECTORY_HEADER {
        return Err(CsvError::Header(header.join(",")));
    }
    let mut rows = Vec::new();
    for r in rdr.deserialize() {
        rows.push(r?);
    }
    Ok(rows)
}

/// Per-tick guidance internals. Angles in radians, `candidates` separated by
/// semicolons, blank fields where a value does not exist.
pub fn trace_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for (s, t) in record.samples.iter().zip(&record.trace) {
        let candidates: Vec<String> = t.candidates.iter().map(|a| format!("{:.6}", a.value())).collect();
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{},{},{},{},{:.6},{}",
            s.tick,
            t.cls_index,
            t.sub_goal.x,
            t.sub_goal.y,
            t.kind,
            opt(t.theta_exp.map(|a| a.value())),
            candidates.join(";"),
            opt(t.theta_opt.map(|a| a.value())),
            t.d_ultra,
            opt(t.theta_walk.map(|a| a.value())),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_rows_with_blank_direction() {
        let text = format!("{TRAJECTORY_HEADER}\n0,1.000000,2.000000,0.500000,stop,,0.250000\n1,1.1,2,0.5,slight_left,0.2,0.1\n");
        let rows = read_trajectory_csv(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].cue, Cue::Stop);
        assert_eq!(rows[0].walk_dir, None);
        assert_eq!(rows[1].walk_dir, Some(0.2));
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(matches!(read_trajectory_csv("a,b\n1,2\n"), Err(CsvError::Header(_))));
    }

    #[test]
    fn rejects_unknown_cue() {
        let text = format!("{TRAJECTORY_HEADER}\n0,1,2,0.5,jump,,0.25\n");
        assert!(read_trajectory_csv(&text).is_err());
    }
}
