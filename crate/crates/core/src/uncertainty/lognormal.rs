use super::{History, Scenario, ScenarioSet, ScenarioWindowSpec};
use crate::error::UncertaintyError;
use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floor applied to normalized values before taking logs.
const LOG_FLOOR: f64 = 1e-6;

/// Multivariate normal fitted to log-normalized daily profiles.
#[derive(Debug, Clone)]
pub struct LognormalFit {
    /// Per-unit scale, the largest value seen in the fit window (1 if all zero).
    pub capacity: Vec<f64>,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Diagonal term added to make the covariance positive definite.
    pub ridge: f64,
    cholesky: DMatrix<f64>,
    n_units: usize,
    horizon: usize,
}

impl LognormalFit {
    pub fn fit(days: &[Scenario]) -> Result<Self, UncertaintyError> {
        let first = days.first().ok_or_else(|| UncertaintyError::InvalidParameter("empty fit window".into()))?;
        let (n_units, horizon) = (first.n_units(), first.horizon());
        let dim = n_units * horizon;
        let capacity: Vec<f64> = (0..n_units)
            .map(|r| {
                let m = days.iter().flat_map(|d| d.values[r].iter().copied()).fold(0.0f64, f64::max);
                if m > 0.0 {
                    m
                } else {
                    1.0
                }
            })
            .collect();
        let samples: Vec<DVector<f64>> = days
            .iter()
            .map(|d| DVector::from_fn(dim, |i, _| ((d.values[i / horizon][i % horizon] / capacity[i / horizon]).max(LOG_FLOOR)).ln()))
            .collect();
        let n = samples.len() as f64;
        let mean = samples.iter().fold(DVector::zeros(dim), |acc, s| acc + s) / n;
        let mut covariance = DMatrix::zeros(dim, dim);
        if samples.len() > 1 {
            for s in &samples {
                let c = s - &mean;
                covariance += &c * c.transpose();
            }
            covariance /= n - 1.0;
        }
        let mut ridge = 0.0;
        let cholesky = loop {
            let mut m = covariance.clone();
            for i in 0..dim {
                m[(i, i)] += ridge;
            }
            if let Some(ch) = m.cholesky() {
                break ch.l();
            }
            ridge = if ridge == 0.0 {
                let trace = covariance.trace();
                1e-8 * if trace > 0.0 { trace / dim as f64 } else { 1.0 }
            } else {
                ridge * 10.0
            };
        };
        Ok(LognormalFit { capacity, mean, covariance, ridge, cholesky, n_units, horizon })
    }

    /// `count` independent draws from the fitted distribution, mapped back to MW.
    pub fn sample(&self, count: usize, seed: u64, label_prefix: &str) -> Vec<Scenario> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.n_units * self.horizon;
        (0..count)
            .map(|k| {
                let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
                let x = &self.mean + &self.cholesky * z;
                let values = (0..self.n_units)
                    .map(|r| (0..self.horizon).map(|h| x[r * self.horizon + h].exp() * self.capacity[r]).collect())
                    .collect();
                Scenario::new(format!("{label_prefix}{k}"), values)
            })
            .collect()
    }

    /// Mean of the fitted lognormal in MW, `exp(μ + σ²/2)` per coordinate.
    pub fn expected_values(&self) -> Vec<Vec<f64>> {
        (0..self.n_units)
            .map(|r| {
                (0..self.horizon)
                    .map(|h| {
                        let i = r * self.horizon + h;
                        let var = self.covariance[(i, i)] + self.ridge;
                        (self.mean[i] + var / 2.0).exp() * self.capacity[r]
                    })
                    .collect()
            })
            .collect()
    }
}

/// Scenarios drawn from a lognormal model of the `fit_window` days before `target`.
///
/// Values are divided by each unit's window maximum, floored at 1e-6 and
/// log-transformed; a normal is fitted and sampled with a seeded generator,
/// and draws are mapped back with `exp` and the same scale. Draws may exceed
/// the window maximum.
pub fn generate_lognormal_scenarios(
    history: &History,
    target: NaiveDate,
    fit_window: usize,
    count: usize,
    seed: u64,
) -> Result<ScenarioSet, UncertaintyError> {
    if count == 0 {
        return Err(UncertaintyError::InvalidParameter("scenario count must be at least 1".into()));
    }
    let days = super::required_days(target, &ScenarioWindowSpec::last(fit_window))?;
    let window = history.collect(&days)?;
    let fit = LognormalFit::fit(&window)?;
    ScenarioSet::new(fit.sample(count, seed, "lognormal-"))
}
