use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::regression::solve_pinv;
use super::{ForecastPoint, WeeklyPoint};

pub const DEFAULT_MAX_ORDER: usize = 5;

/// Information criterion used to pick the autoregressive order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderCriterion {
    Aic,
    #[default]
    Bic,
}

/// `y_t = c + δ t + Σ φ_i y_{t-i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub order: usize,
    pub intercept: f64,
    pub drift: f64,
    pub ar: Vec<f64>,
    pub sigma: f64,
    /// Criterion value for each order `0..=max_order`.
    pub criterion: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    pub model: BaselineModel,
    /// One-step-ahead predictions; weeks lacking enough history are absent.
    pub forecasts: Vec<ForecastPoint>,
}

/// AR(p) with drift over the observed weeks taken in order, `p` chosen over
/// `0..=max_order` on a common effective sample.
pub fn fit_baseline(series: &[WeeklyPoint], max_order: usize, criterion: OrderCriterion) -> Result<BaselineFit> {
    let obs: Vec<(usize, f64)> = series
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.frequency.map(|f| (i, f)))
        .collect();
    let n_eff = obs.len().saturating_sub(max_order);
    if obs.len() < max_order + 2 || n_eff <= max_order + 2 {
        return Err(Error::Fit(format!(
            "{} observed weeks are too few for order up to {max_order}",
            obs.len()
        )));
    }
    let y = DVector::from_iterator(n_eff, obs[max_order..].iter().map(|(_, v)| *v));
    let scale = y.iter().map(|v| v * v).sum::<f64>() / n_eff as f64;
    let design = |p: usize| {
        DMatrix::from_fn(n_eff, p + 2, |r, c| {
            let j = r + max_order;
            match c {
                0 => 1.0,
                1 => obs[j].0 as f64,
                _ => obs[j - (c - 1)].1,
            }
        })
    };
    let penalty = match criterion {
        OrderCriterion::Aic => 2.0,
        OrderCriterion::Bic => (n_eff as f64).ln(),
    };
    let mut scores = Vec::with_capacity(max_order + 1);
    let mut best: Option<(usize, f64, Vec<f64>, f64)> = None;
    for p in 0..=max_order {
        let fit = solve_pinv(&design(p), &y);
        // keep ln finite for exact fits
        let var = (fit.rss / n_eff as f64).max(1e-24 * (1.0 + scale));
        let ic = n_eff as f64 * var.ln() + penalty * (p + 2) as f64;
        scores.push(ic);
        if best.as_ref().map_or(true, |b| ic < b.1) {
            best = Some((p, ic, fit.coef, fit.rss));
        }
    }
    let (order, _, coef, rss) = best.expect("at least order 0");
    let sigma = (rss / (n_eff - order - 2) as f64).sqrt();
    let model = BaselineModel {
        order,
        intercept: coef[0],
        drift: coef[1],
        ar: coef[2..].to_vec(),
        sigma,
        criterion: scores,
    };
    let forecasts = (order..obs.len())
        .map(|j| {
            let (i, _) = obs[j];
            let trend = model.intercept + model.drift * i as f64;
            let ar: f64 = model.ar.iter().enumerate().map(|(l, phi)| phi * obs[j - l - 1].1).sum();
            ForecastPoint::new(series[i].week_start, trend, 0.0, 0.0, ar, sigma)
        })
        .collect();
    Ok(BaselineFit { model, forecasts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::monday_of;
    use chrono::{Days, NaiveDate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn series(ys: &[f64]) -> Vec<WeeklyPoint> {
        let start = monday_of(NaiveDate::from_ymd_opt(2019, 3, 5).unwrap());
        ys.iter()
            .enumerate()
            .map(|(i, y)| WeeklyPoint {
                week_start: start + Days::new(7 * i as u64),
                ethical_count: 0,
                total_count: 1,
                frequency: Some(*y),
            })
            .collect()
    }

    fn white(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, 1.0).unwrap();
        (0..n).map(|_| 0.2 + 0.03 * d.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_selects_order_zero() {
        let zero = (0..100)
            .filter(|s| fit_baseline(&series(&white(*s, 200)), 5, OrderCriterion::Bic).unwrap().model.order == 0)
            .count();
        assert!(zero >= 95, "{zero}");
    }

    #[test]
    fn ar1_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = Normal::new(0.0, 1.0).unwrap();
        let mut ys = vec![0.0];
        for _ in 1..300 {
            let prev = *ys.last().unwrap();
            ys.push(0.8 * prev + d.sample(&mut rng));
        }
        let fit = fit_baseline(&series(&ys), 5, OrderCriterion::Bic).unwrap();
        assert!(fit.model.order >= 1);
        assert!((fit.model.ar[0] - 0.8).abs() < 0.1, "{:?}", fit.model.ar);
    }

    #[test]
    fn constant_series() {
        let fit = fit_baseline(&series(&[0.4; 30]), 5, OrderCriterion::Aic).unwrap();
        assert!(fit.model.sigma < 1e-9);
        for f in &fit.forecasts {
            assert!((f.yhat - 0.4).abs() < 1e-9);
        }
    }

    #[test]
    fn too_short() {
        assert!(fit_baseline(&series(&[0.1; 6]), 5, OrderCriterion::Bic).is_err());
    }
}
