//! Weekly concern frequency, forecasting bands, outliers and world events.

mod baseline;
mod chart;
mod events;
mod holidays;
mod regression;
mod seasonal;

use std::io::Write;

use chrono::{DateTime, Datelike, Days, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use baseline::{fit_baseline, BaselineFit, BaselineModel, OrderCriterion, DEFAULT_MAX_ORDER};
pub use chart::{render_timeline_svg, ChartOptions};
pub use events::{
    align_events, rank_events, read_events, score_summary, AlignedOutlier, EventAnnotation, ScoreSummary, WorldEvent,
    ALIGN_WINDOW_WEEKS, DEFAULT_EVENT_THRESHOLD,
};
pub use holidays::{Holiday, HolidayCalendar, HolidayRule};
pub use seasonal::{
    fit_seasonal, SeasonalFit, SeasonalModel, DEFAULT_FOURIER_ORDER, MIN_SEASONAL_WEEKS, WEEKS_PER_YEAR, Z85, Z95,
};

/// Monday (UTC) of the week containing `date`.
pub fn monday_of(date: NaiveDate) -> NaiveDate {
    date - Days::new(date.weekday().num_days_from_monday() as u64)
}

pub fn week_of_timestamp(created_utc: i64) -> Option<NaiveDate> {
    DateTime::from_timestamp(created_utc, 0).map(|d| monday_of(d.date_naive()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeeklyPoint {
    pub week_start: NaiveDate,
    pub ethical_count: u64,
    pub total_count: u64,
    /// `ethical_count / total_count`; `None` for weeks without posts.
    pub frequency: Option<f64>,
}

/// One point per week from the week of `start` through the week of `end`.
/// Observations are `(created_utc, is_concern)`; those outside the span are
/// ignored.
pub fn weekly_frequencies(
    observations: impl IntoIterator<Item = (i64, bool)>,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<Vec<WeeklyPoint>> {
    if end < start {
        return Err(Error::InvalidInput(format!("empty span {start}..{end}")));
    }
    let first = monday_of(start);
    let weeks = ((monday_of(end) - first).num_days() / 7 + 1) as usize;
    let mut counts = vec![(0u64, 0u64); weeks];
    for (ts, flagged) in observations {
        let Some(week) = week_of_timestamp(ts) else { continue };
        let idx = (week - first).num_days() / 7;
        if idx < 0 || idx as usize >= weeks {
            continue;
        }
        let c = &mut counts[idx as usize];
        c.1 += 1;
        c.0 += flagged as u64;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, (e, t))| WeeklyPoint {
            week_start: first + Days::new(7 * i as u64),
            ethical_count: e,
            total_count: t,
            frequency: (t > 0).then(|| e as f64 / t as f64),
        })
        .collect())
}

/// A fitted value with 85% and 95% bands and its additive parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub week_start: NaiveDate,
    pub yhat: f64,
    pub lo85: f64,
    pub hi85: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub trend: f64,
    pub seasonal: f64,
    pub holiday: f64,
    /// Lagged-value part of the autoregressive baseline; zero otherwise.
    pub autoregressive: f64,
}

impl ForecastPoint {
    pub(crate) fn new(week_start: NaiveDate, trend: f64, seasonal: f64, holiday: f64, autoregressive: f64, sigma: f64) -> Self {
        // adding zero turns a negative zero into a positive one
        let (trend, seasonal, holiday, autoregressive) = (trend + 0.0, seasonal + 0.0, holiday + 0.0, autoregressive + 0.0);
        let yhat = trend + seasonal + holiday + autoregressive;
        ForecastPoint {
            week_start,
            yhat,
            lo85: yhat - Z85 * sigma,
            hi85: yhat + Z85 * sigma,
            lo95: yhat - Z95 * sigma,
            hi95: yhat + Z95 * sigma,
            trend,
            seasonal,
            holiday,
            autoregressive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutlierKind {
    None,
    Weak,
    Strong,
}

impl OutlierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutlierKind::None => "none",
            OutlierKind::Weak => "weak",
            OutlierKind::Strong => "strong",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierFlag {
    pub kind: OutlierKind,
    /// `|observed - trend|`; zero when there is no observation or forecast.
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeekFlag {
    pub week_start: NaiveDate,
    pub flag: OutlierFlag,
}

pub fn classify_point(observed: f64, f: &ForecastPoint) -> OutlierFlag {
    let kind = if observed < f.lo95 || observed > f.hi95 {
        OutlierKind::Strong
    } else if observed < f.lo85 || observed > f.hi85 {
        OutlierKind::Weak
    } else {
        OutlierKind::None
    };
    OutlierFlag {
        kind,
        magnitude: (observed - f.trend).abs(),
    }
}

/// Flags every week of `series`, matching forecasts by week. Weeks without an
/// observation or a forecast are `None`.
pub fn classify_outliers(series: &[WeeklyPoint], forecasts: &[ForecastPoint]) -> Result<Vec<WeekFlag>> {
    let by_week: std::collections::HashMap<NaiveDate, &ForecastPoint> = forecasts.iter().map(|f| (f.week_start, f)).collect();
    if by_week.len() != forecasts.len() {
        return Err(Error::InvalidInput("duplicate forecast weeks".into()));
    }
    if let Some(f) = forecasts.iter().find(|f| !series.iter().any(|p| p.week_start == f.week_start)) {
        return Err(Error::InvalidInput(format!("forecast for week {} not in series", f.week_start)));
    }
    Ok(series
        .iter()
        .map(|p| WeekFlag {
            week_start: p.week_start,
            flag: match (p.frequency, by_week.get(&p.week_start)) {
                (Some(y), Some(f)) => classify_point(y, f),
                _ => OutlierFlag {
                    kind: OutlierKind::None,
                    magnitude: 0.0,
                },
            },
        })
        .collect())
}

/// Fits several named series in parallel, keeping input order.
pub fn fit_seasonal_many(
    series: &[(String, Vec<WeeklyPoint>)],
    holidays: &HolidayCalendar,
    fourier_order: usize,
) -> Vec<(String, Result<SeasonalFit>)> {
    series
        .par_iter()
        .map(|(name, s)| (name.clone(), fit_seasonal(s, holidays, fourier_order)))
        .collect()
}

/// Writes one row per week with the forecast bands and outlier flag.
pub fn write_timeline_csv<W: Write>(
    writer: W,
    series: &[WeeklyPoint],
    forecasts: &[ForecastPoint],
    flags: &[WeekFlag],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::parse("timeline", e.to_string());
    w.write_record([
        "week_start", "ethical_count", "total_count", "frequency", "yhat", "lo85", "hi85", "lo95", "hi95", "trend",
        "seasonal", "holiday", "flag", "magnitude",
    ])
    .map_err(err)?;
    let by_week: std::collections::HashMap<NaiveDate, &ForecastPoint> = forecasts.iter().map(|f| (f.week_start, f)).collect();
    for (p, fl) in series.iter().zip(flags) {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let f = by_week.get(&p.week_start);
        let fc = |g: fn(&ForecastPoint) -> f64| opt(f.map(|f| g(f)));
        w.write_record([
            p.week_start.to_string(),
            p.ethical_count.to_string(),
            p.total_count.to_string(),
            opt(p.frequency),
            fc(|f| f.yhat),
            fc(|f| f.lo85),
            fc(|f| f.hi85),
            fc(|f| f.lo95),
            fc(|f| f.hi95),
            fc(|f| f.trend),
            fc(|f| f.seasonal),
            fc(|f| f.holiday),
            fl.flag.kind.as_str().to_string(),
            fl.flag.magnitude.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("timeline", e))
}
