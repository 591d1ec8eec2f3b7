use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{PriorityTheme, ThemeScores};

/// Floor applied to empty histogram bins.
pub const PHI_FLOOR: f64 = 1e-9;

pub const DEFAULT_BIN_COUNT: usize = 10;

/// Equal-width histogram of one theme's scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeHistogram {
    pub min: f64,
    pub max: f64,
    /// Bin probabilities; empty bins hold exactly [`PHI_FLOOR`].
    pub phi: Vec<f64>,
}

impl ThemeHistogram {
    pub fn fit(values: &[f64], bin_count: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("cannot fit a histogram to no scores".into()));
        }
        if bin_count == 0 {
            return Err(Error::InvalidInput("bin_count must be at least 1".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite theme score {bad}")));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min == max {
            return Ok(ThemeHistogram { min, max, phi: vec![1.0] });
        }
        let mut h = ThemeHistogram {
            min,
            max,
            phi: vec![0.0; bin_count],
        };
        for &v in values {
            let b = h.bin_of(v);
            h.phi[b] += 1.0;
        }
        let n = values.len() as f64;
        let empty = h.phi.iter().filter(|c| **c == 0.0).count();
        // Empty bins get the floor; occupied bins give up that mass pro rata.
        let keep = 1.0 - empty as f64 * PHI_FLOOR;
        for p in h.phi.iter_mut() {
            *p = if *p == 0.0 { PHI_FLOOR } else { *p / n * keep };
        }
        Ok(h)
    }

    pub fn bin_count(&self) -> usize {
        self.phi.len()
    }

    /// Bin index of `v`; values outside the fitted range clamp to the ends.
    pub fn bin_of(&self, v: f64) -> usize {
        let bins = self.phi.len();
        if bins == 1 || v <= self.min {
            return 0;
        }
        let width = (self.max - self.min) / bins as f64;
        let idx = ((v - self.min) / width).floor() as usize;
        idx.min(bins - 1)
    }

    pub fn phi_of(&self, v: f64) -> f64 {
        self.phi[self.bin_of(v)]
    }
}

/// Per-theme probability model over theme scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeDistribution {
    pub harm: ThemeHistogram,
    pub negativity: ThemeHistogram,
    pub children: ThemeHistogram,
}

impl ThemeDistribution {
    pub fn get(&self, theme: PriorityTheme) -> &ThemeHistogram {
        match theme {
            PriorityTheme::Harm => &self.harm,
            PriorityTheme::Negativity => &self.negativity,
            PriorityTheme::Children => &self.children,
        }
    }
}

pub fn fit_theme_distribution(scores: &[ThemeScores], bin_count: usize) -> Result<ThemeDistribution> {
    let col = |t: PriorityTheme| scores.iter().map(|s| s.get(t)).collect::<Vec<_>>();
    Ok(ThemeDistribution {
        harm: ThemeHistogram::fit(&col(PriorityTheme::Harm), bin_count)?,
        negativity: ThemeHistogram::fit(&col(PriorityTheme::Negativity), bin_count)?,
        children: ThemeHistogram::fit(&col(PriorityTheme::Children), bin_count)?,
    })
}

/// Which per-theme anomaly term to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyMode {
    /// `-phi * log2(phi)`
    #[default]
    Entropy,
    /// `-log2(phi)`, largest for the rarest bins.
    Surprisal,
}

/// `-phi * log2(phi)`; zero at `phi = 1`.
pub fn entropy_term(phi: f64) -> Result<f64> {
    check_phi(phi)?;
    if phi == 1.0 {
        return Ok(0.0);
    }
    Ok(-phi * phi.log2())
}

pub fn surprisal_term(phi: f64) -> Result<f64> {
    check_phi(phi)?;
    Ok(-phi.log2())
}

fn check_phi(phi: f64) -> Result<()> {
    if phi > 0.0 && phi <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability {phi} outside (0, 1]")))
    }
}

pub fn theme_term(phi: f64, mode: EntropyMode) -> Result<f64> {
    match mode {
        EntropyMode::Entropy => entropy_term(phi),
        EntropyMode::Surprisal => surprisal_term(phi),
    }
}

/// Sum of the three theme terms, each looked up through the post's bin.
pub fn total_entropy(scores: &ThemeScores, dist: &ThemeDistribution, mode: EntropyMode) -> f64 {
    PriorityTheme::ALL
        .iter()
        .map(|&t| theme_term(dist.get(t).phi_of(scores.get(t)), mode).expect("fitted phi lies in (0,1]"))
        .sum()
}
