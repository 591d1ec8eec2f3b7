use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::holidays::HolidayCalendar;
use super::regression::solve;
use super::{ForecastPoint, WeeklyPoint};

/// Weeks per year used for the yearly harmonics.
pub const WEEKS_PER_YEAR: f64 = 52.18;
pub const DEFAULT_FOURIER_ORDER: usize = 3;
/// Fewer fitted weeks than this turns yearly seasonality off.
pub const MIN_SEASONAL_WEEKS: usize = 104;
pub const Z85: f64 = 1.4395;
pub const Z95: f64 = 1.96;

/// Harmonic regression with trend and holiday indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalModel {
    pub intercept: f64,
    /// Per week.
    pub slope: f64,
    /// `(sin, cos)` coefficients for harmonics `1..=K`; empty when
    /// seasonality was disabled.
    pub harmonics: Vec<(f64, f64)>,
    /// One per calendar holiday; zero for holidays absent from the fitted weeks.
    pub holiday_effects: Vec<(String, f64)>,
    pub sigma: f64,
    pub fitted_weeks: usize,
}

impl SeasonalModel {
    /// Amplitude of harmonic `k` (1-based).
    pub fn amplitude(&self, k: usize) -> Option<f64> {
        self.harmonics.get(k.checked_sub(1)?).map(|(s, c)| s.hypot(*c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalFit {
    pub model: SeasonalModel,
    pub forecasts: Vec<ForecastPoint>,
}

fn harmonic_row(t: f64, order: usize) -> impl Iterator<Item = f64> {
    (1..=order).flat_map(move |k| {
        let a = 2.0 * PI * k as f64 * t / WEEKS_PER_YEAR;
        [a.sin(), a.cos()]
    })
}

/// Fits `y = a + b t + Σ (c_k sin + d_k cos)(2πkt/52.18) + Σ e_h 1[h in week]`
/// to the weeks with a frequency, `t` counted in weeks from the first point.
/// Every week of `series` receives a forecast.
pub fn fit_seasonal(series: &[WeeklyPoint], holidays: &HolidayCalendar, fourier_order: usize) -> Result<SeasonalFit> {
    let observed: Vec<(usize, f64)> = series
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.frequency.map(|f| (i, f)))
        .collect();
    if observed.is_empty() {
        return Err(Error::Fit("no weeks with posts to fit".into()));
    }
    let order = if observed.len() < MIN_SEASONAL_WEEKS {
        if fourier_order > 0 {
            log::warn!(
                "{} fitted weeks is below {MIN_SEASONAL_WEEKS}; yearly seasonality disabled",
                observed.len()
            );
        }
        0
    } else {
        fourier_order
    };
    let in_week: Vec<Vec<bool>> = (0..holidays.len())
        .map(|h| series.iter().map(|p| holidays.in_week(h, p.week_start)).collect())
        .collect();
    // holidays never seen in a fitted week carry no information
    let active: Vec<usize> = (0..holidays.len())
        .filter(|&h| observed.iter().any(|(i, _)| in_week[h][*i]))
        .collect();

    let mut names = vec!["intercept".to_string(), "trend".to_string()];
    for k in 1..=order {
        names.push(format!("sin{k}"));
        names.push(format!("cos{k}"));
    }
    names.extend(active.iter().map(|&h| format!("holiday:{}", holidays.holidays[h].name)));
    let p = names.len();
    if observed.len() <= p {
        return Err(Error::Fit(format!(
            "{} fitted weeks cannot support {p} coefficients",
            observed.len()
        )));
    }
    let row = |i: usize| -> Vec<f64> {
        let t = i as f64;
        let mut r = vec![1.0, t];
        r.extend(harmonic_row(t, order));
        r.extend(active.iter().map(|&h| if in_week[h][i] { 1.0 } else { 0.0 }));
        r
    };
    let x = DMatrix::from_row_iterator(observed.len(), p, observed.iter().flat_map(|(i, _)| row(*i)));
    let y = DVector::from_iterator(observed.len(), observed.iter().map(|(_, f)| *f));
    let fit = solve(&x, &y, &names)?;
    let sigma = (fit.rss / (observed.len() - p) as f64).sqrt();

    let c = &fit.coef;
    let harmonics: Vec<(f64, f64)> = (0..order).map(|k| (c[2 + 2 * k], c[3 + 2 * k])).collect();
    let hol_base = 2 + 2 * order;
    let holiday_effects = holidays
        .holidays
        .iter()
        .enumerate()
        .map(|(h, hol)| {
            let e = active.iter().position(|a| *a == h).map_or(0.0, |j| c[hol_base + j]);
            (hol.name.clone(), e)
        })
        .collect();
    let model = SeasonalModel {
        intercept: c[0],
        slope: c[1],
        harmonics,
        holiday_effects,
        sigma,
        fitted_weeks: observed.len(),
    };
    let forecasts = series
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let t = i as f64;
            let trend = model.intercept + model.slope * t;
            let seasonal: f64 = harmonic_row(t, order)
                .zip(model.harmonics.iter().flat_map(|(s, c)| [*s, *c]))
                .map(|(v, w)| v * w)
                .sum();
            let holiday: f64 = active
                .iter()
                .enumerate()
                .filter(|(_, &h)| in_week[h][i])
                .map(|(j, _)| c[hol_base + j])
                .sum();
            ForecastPoint::new(pt.week_start, trend, seasonal, holiday, 0.0, sigma)
        })
        .collect();
    Ok(SeasonalFit { model, forecasts })
}
