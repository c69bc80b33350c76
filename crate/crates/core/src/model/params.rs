use crate::error::{Error, Result};
use crate::fem::CoefficientSpec;

/// Lamé parameters `(lambda, mu)` from Young's modulus and Poisson's ratio.
pub fn derive_lame(young: f64, poisson: f64) -> Result<(f64, f64)> {
    if !(young > 0.0) || !young.is_finite() {
        return Err(Error::Parameter(format!("Young's modulus must be positive, got {young}")));
    }
    if !(0.0..0.5).contains(&poisson) {
        return Err(Error::Parameter(format!("Poisson's ratio must lie in [0, 0.5), got {poisson}")));
    }
    let lambda = poisson * young / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    let mu = young / (2.0 * (1.0 + poisson));
    Ok((lambda, mu))
}

/// Physical coefficients of an `N`-network model.
#[derive(Debug, Clone, PartialEq)]
pub struct MpetParameters {
    pub young: f64,
    pub poisson: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Biot-Willis coefficients.
    pub alpha: Vec<f64>,
    /// Storage coefficients.
    pub storage: Vec<f64>,
    /// Hydraulic conductivities.
    pub conductivity: Vec<f64>,
    /// Symmetric transfer coefficients with zero diagonal.
    pub exchange: Vec<Vec<f64>>,
}

impl MpetParameters {
    pub fn new(
        young: f64,
        poisson: f64,
        alpha: Vec<f64>,
        storage: Vec<f64>,
        conductivity: Vec<f64>,
        exchange: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let (lambda, mu) = derive_lame(young, poisson)?;
        let n = alpha.len();
        if n == 0 {
            return Err(Error::Parameter("at least one network is required".into()));
        }
        if storage.len() != n || conductivity.len() != n || exchange.len() != n || exchange.iter().any(|r| r.len() != n) {
            return Err(Error::Parameter(format!("coefficient lengths do not match {n} networks")));
        }
        // alpha = 0 is accepted so that the pressure equations can be decoupled on purpose
        if let Some(a) = alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Parameter(format!("Biot-Willis coefficient {a} outside [0, 1]")));
        }
        if let Some(c) = storage.iter().find(|c| !(**c >= 0.0)) {
            return Err(Error::Parameter(format!("storage coefficient {c} is negative")));
        }
        if let Some(k) = conductivity.iter().find(|k| !(**k > 0.0)) {
            return Err(Error::Parameter(format!("conductivity {k} must be positive")));
        }
        for i in 0..n {
            if exchange[i][i] != 0.0 {
                return Err(Error::Parameter("transfer matrix must have a zero diagonal".into()));
            }
            for j in 0..n {
                if !(exchange[i][j] >= 0.0) || exchange[i][j] != exchange[j][i] {
                    return Err(Error::Parameter("transfer matrix must be symmetric and non-negative".into()));
                }
            }
        }
        Ok(Self {
            young,
            poisson,
            lambda,
            mu,
            alpha,
            storage,
            conductivity,
            exchange,
        })
    }

    /// Two-network parameters of the manufactured accuracy tests:
    /// `E = 1`, `alpha = (1, 1)`, `beta_12 = 1`.
    pub fn accuracy(poisson: f64, conductivity: f64, storage: f64) -> Result<Self> {
        Self::new(
            1.0,
            poisson,
            vec![1.0, 1.0],
            vec![storage; 2],
            vec![conductivity; 2],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
    }

    pub fn networks(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha_norm_squared(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum()
    }

    pub fn min_storage(&self) -> f64 {
        self.storage.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn coefficients(&self) -> CoefficientSpec {
        CoefficientSpec {
            mu: self.mu,
            lambda: self.lambda,
            alpha: self.alpha.clone(),
            storage: self.storage.clone(),
            conductivity: self.conductivity.clone(),
            exchange: self.exchange.clone(),
        }
    }
}

/// Bound on the per-iteration reduction of the total-pressure error of the
/// decoupled scheme: `(|alpha|^2 / lambda) / (min c + |alpha|^2 / lambda)`.
/// Equals 1 when some storage coefficient vanishes.
pub fn contraction_factor(params: &MpetParameters) -> Result<f64> {
    if !(params.lambda > 0.0) {
        return Err(Error::Parameter(format!("contraction factor needs lambda > 0, got {}", params.lambda)));
    }
    let a = params.alpha_norm_squared() / params.lambda;
    let delta = params.min_storage();
    if delta <= 0.0 {
        return Ok(1.0);
    }
    Ok(a / (delta + a))
}
