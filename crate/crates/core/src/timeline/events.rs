use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{monday_of, OutlierKind, WeekFlag};

pub const DEFAULT_EVENT_THRESHOLD: i64 = 8;
/// Half-width, in weeks, of the outlier search around an event.
pub const ALIGN_WINDOW_WEEKS: i64 = 5;

/// A dated world event with one relevance score per rater.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldEvent {
    pub name: String,
    pub date: NaiveDate,
    pub rater_scores: Vec<i64>,
    pub total: i64,
}

impl WorldEvent {
    pub fn new(name: impl Into<String>, date: NaiveDate, rater_scores: Vec<i64>) -> Result<Self> {
        let name = name.into();
        if let Some(bad) = rater_scores.iter().find(|s| !(-2..=2).contains(*s)) {
            return Err(Error::InvalidInput(format!("event {name:?} has rater score {bad} outside [-2, 2]")));
        }
        Ok(WorldEvent {
            total: rater_scores.iter().sum(),
            name,
            date,
            rater_scores,
        })
    }
}

/// Reads `name,date,score_1..score_n` rows with a header line. Dates are
/// `YYYY-MM-DD`; blank score cells are skipped.
pub fn read_events<R: Read>(reader: R) -> Result<Vec<WorldEvent>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(format!("events line {line}"), e.to_string()))?;
        let ctx = || format!("events line {line}");
        let name = rec.get(0).ok_or_else(|| Error::parse(ctx(), "missing name"))?;
        let date = rec.get(1).ok_or_else(|| Error::parse(ctx(), "missing date"))?;
        let date = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d").map_err(|e| Error::parse(ctx(), e.to_string()))?;
        let scores = rec
            .iter()
            .skip(2)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<i64>().map_err(|e| Error::parse(ctx(), format!("score {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        out.push(WorldEvent::new(name.trim(), date, scores)?);
    }
    Ok(out)
}

/// Events whose total is strictly above `threshold`, by date then name.
pub fn rank_events(events: &[WorldEvent], threshold: i64) -> Result<Vec<WorldEvent>> {
    for e in events {
        WorldEvent::new(e.name.clone(), e.date, e.rater_scores.clone())?;
        if e.total != e.rater_scores.iter().sum::<i64>() {
            return Err(Error::InvalidInput(format!("event {:?} total does not match its scores", e.name)));
        }
    }
    let mut sel: Vec<WorldEvent> = events.iter().filter(|e| e.total > threshold).cloned().collect();
    sel.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.name.cmp(&b.name)));
    Ok(sel)
}

/// Range and median of event totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub min: i64,
    pub max: i64,
    pub median: f64,
}

pub fn score_summary(events: &[WorldEvent]) -> Option<ScoreSummary> {
    let mut t: Vec<i64> = events.iter().map(|e| e.total).collect();
    if t.is_empty() {
        return None;
    }
    t.sort_unstable();
    let n = t.len();
    let median = if n % 2 == 1 {
        t[n / 2] as f64
    } else {
        (t[n / 2 - 1] + t[n / 2]) as f64 / 2.0
    };
    Some(ScoreSummary {
        min: t[0],
        max: t[n - 1],
        median,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedOutlier {
    pub week_start: NaiveDate,
    pub kind: OutlierKind,
    /// Outlier week minus event week, in weeks.
    pub offset_weeks: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAnnotation {
    pub event: String,
    pub date: NaiveDate,
    /// `None` when the event lies outside the series.
    pub week_start: Option<NaiveDate>,
    pub outlier: Option<AlignedOutlier>,
}

impl EventAnnotation {
    pub fn describe(&self) -> String {
        match (&self.week_start, &self.outlier) {
            (None, _) => "outside series span".to_string(),
            (Some(_), None) => "no aligned outlier".to_string(),
            (Some(_), Some(o)) => format!("{} outlier at {} ({:+} weeks)", o.kind.as_str(), o.week_start, o.offset_weeks),
        }
    }
}

/// Places each event in its week and pairs it with the nearest Weak or Strong
/// outlier within five weeks, preferring the earlier week on ties.
pub fn align_events(flags: &[WeekFlag], events: &[WorldEvent]) -> Vec<EventAnnotation> {
    let first = flags.first().map(|f| f.week_start);
    let last = flags.last().map(|f| f.week_start);
    events
        .iter()
        .map(|e| {
            let week = monday_of(e.date);
            let in_span = matches!((first, last), (Some(a), Some(b)) if week >= a && week <= b);
            let outlier = in_span
                .then(|| {
                    flags
                        .iter()
                        .filter(|f| f.flag.kind != OutlierKind::None)
                        .map(|f| (f, (f.week_start - week).num_days() / 7))
                        .filter(|(_, off)| off.abs() <= ALIGN_WINDOW_WEEKS)
                        .min_by_key(|(_, off)| (off.abs(), *off))
                        .map(|(f, off)| AlignedOutlier {
                            week_start: f.week_start,
                            kind: f.flag.kind,
                            offset_weeks: off,
                        })
                })
                .flatten();
            EventAnnotation {
                event: e.name.clone(),
                date: e.date,
                week_start: in_span.then_some(week),
                outlier,
            }
        })
        .collect()
}
