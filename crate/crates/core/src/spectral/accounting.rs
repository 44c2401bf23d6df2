use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Inputs for turnover and P&L accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnoverInputs {
    /// τᵢ > 0, fraction of invested dollars traded per period.
    pub individual_turnovers: Vec<f64>,
    /// wᵢ with Σ|wᵢ| = 1.
    pub weights: Vec<f64>,
    /// I
    pub investment: f64,
    /// L ≥ 0, cost per dollar traded.
    pub linear_cost_rate: f64,
    /// αᵢ, expected per-period returns.
    pub alphas_now: Vec<f64>,
}

const WEIGHT_TOLERANCE: f64 = 1e-10;

impl TurnoverInputs {
    pub fn new(
        individual_turnovers: Vec<f64>,
        weights: Vec<f64>,
        investment: f64,
        linear_cost_rate: f64,
        alphas_now: Vec<f64>,
    ) -> Result<Self, SpectralError> {
        let inputs = Self {
            individual_turnovers,
            weights,
            investment,
            linear_cost_rate,
            alphas_now,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    /// Equal weights 1/N, zero alphas, unit investment and no costs.
    pub fn equal_weights(individual_turnovers: Vec<f64>) -> Result<Self, SpectralError> {
        let n = individual_turnovers.len();
        Self::new(individual_turnovers, vec![1.0 / n as f64; n], 1.0, 0.0, vec![0.0; n])
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        let n = self.individual_turnovers.len();
        for len in [self.weights.len(), self.alphas_now.len()] {
            if len != n {
                return Err(SpectralError::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if let Some(i) = self
            .individual_turnovers
            .iter()
            .position(|t| !(t.is_finite() && *t > 0.0))
        {
            return Err(SpectralError::InvalidIndividualTurnover {
                index: i,
                value: self.individual_turnovers[i],
            });
        }
        let norm: f64 = self.weights.iter().map(|w| w.abs()).sum();
        if !((norm - 1.0).abs() <= WEIGHT_TOLERANCE) {
            return Err(SpectralError::WeightNormalization(norm));
        }
        if !(self.linear_cost_rate.is_finite() && self.linear_cost_rate >= 0.0) {
            return Err(SpectralError::InvalidCostRate(self.linear_cost_rate));
        }
        if !self.investment.is_finite() {
            return Err(SpectralError::Conditioning(
                crate::conditioning::ConditioningError::InvalidInvestment(self.investment),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.individual_turnovers.len()
    }

    /// Tᵢ = τᵢ|wᵢ|
    pub fn weighted_turnovers(&self) -> Vec<f64> {
        self.individual_turnovers
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| t * w.abs())
            .collect()
    }
}

/// Σᵢ τᵢ|wᵢ|, the turnover with no crossing between alphas.
pub fn naive_turnover(inputs: &TurnoverInputs) -> f64 {
    inputs.weighted_turnovers().iter().sum()
}

/// P = I·Σᵢ αᵢwᵢ − L·D with D = I·turnover. Negative results are kept.
pub fn pnl_with_costs(inputs: &TurnoverInputs, turnover: f64) -> Result<f64, SpectralError> {
    if !(turnover.is_finite() && turnover >= 0.0) {
        return Err(SpectralError::InvalidTurnover {
            index: 0,
            value: turnover,
        });
    }
    let expected: f64 = inputs
        .alphas_now
        .iter()
        .zip(&inputs.weights)
        .map(|(a, w)| a * w)
        .sum();
    let traded = inputs.investment * turnover;
    Ok(inputs.investment * expected - inputs.linear_cost_rate * traded)
}
