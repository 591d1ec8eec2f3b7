use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ordinary least-squares solution with residual diagnostics.
#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub coef: Vec<f64>,
    pub rss: f64,
}

const RANK_TOL: f64 = 1e-10;

/// Solves `x b = y`. A rank-deficient design is an error naming the columns
/// involved in the near-null direction.
pub(crate) fn solve(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<LeastSquares> {
    let p = x.ncols();
    if x.nrows() < p {
        return Err(Error::Fit(format!("{} observations for {} coefficients", x.nrows(), p)));
    }
    let svd = x.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.max();
    let (imin, smin) = s.iter().enumerate().fold((0, f64::INFINITY), |a, (i, v)| if *v < a.1 { (i, *v) } else { a });
    if smax == 0.0 || smin <= RANK_TOL * smax {
        let v_t = svd.v_t.as_ref().expect("requested V^T");
        let null = v_t.row(imin);
        let big = null.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let cols: Vec<&str> = null
            .iter()
            .zip(names)
            .filter(|(v, _)| v.abs() > 1e-6 * big.max(f64::MIN_POSITIVE))
            .map(|(_, n)| n.as_str())
            .collect();
        return Err(Error::Fit(format!("collinear design columns: {}", cols.join(", "))));
    }
    let b = svd.solve(y, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
    let resid = y - x * &b;
    Ok(LeastSquares {
        coef: b.iter().copied().collect(),
        rss: resid.norm_squared(),
    })
}

/// Minimum-norm least squares; tolerates collinear columns.
pub(crate) fn solve_pinv(x: &DMatrix<f64>, y: &DVector<f64>) -> LeastSquares {
    let svd = x.clone().svd(true, true);
    let eps = RANK_TOL * svd.singular_values.max();
    let b = svd.solve(y, eps).expect("U and V^T were computed");
    let resid = y - x * &b;
    LeastSquares {
        coef: b.iter().copied().collect(),
        rss: resid.norm_squared(),
    }
}
