use alloc::format;

use crate::error::{Error, Result};

/// Numeric tolerances and decision thresholds used across the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    /// Power-flow mismatch tolerance (pu).
    pub pf_tolerance: f64,
    pub pf_max_iter: usize,
    /// Bound on `‖A v − λ v‖∞ / ‖v‖∞` accepted from the eigensolver.
    pub eigen_residual_tol: f64,
    /// Branch currents below this magnitude (pu) use the regularized row.
    pub zero_flow_eps: f64,
    /// Relative tolerance under which two |φ_f| values count as equal.
    pub tie_tol: f64,
    /// Minimum normalized mode-shape magnitude for coherent-group membership.
    pub shape_threshold: f64,
    /// Maximum phase distance (deg) to a group's edge machine.
    pub group_phase_deg: f64,
    /// Minimum phase distance (deg) that counts as oscillating against.
    pub opposing_phase_deg: f64,
    pub em_min_freq_hz: f64,
    pub em_max_freq_hz: f64,
    /// Eigenvalues with a smaller modulus are treated as reference modes.
    pub em_min_modulus: f64,
    /// Required share of participation carried by the speed states.
    pub em_participation: f64,
    /// Damping ratio (fraction) below which a mode near the target frequency
    /// means the critical mode survived.
    pub suppression_damping: f64,
    pub suppression_window_hz: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            pf_tolerance: 1e-8,
            pf_max_iter: 30,
            eigen_residual_tol: 1e-8,
            zero_flow_eps: 1e-6,
            tie_tol: 1e-12,
            shape_threshold: 0.1,
            group_phase_deg: 45.0,
            opposing_phase_deg: 90.0,
            em_min_freq_hz: 0.1,
            em_max_freq_hz: 3.0,
            em_min_modulus: 0.01,
            em_participation: 0.3,
            suppression_damping: 0.15,
            suppression_window_hz: 0.15,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pf_tolerance", self.pf_tolerance),
            ("eigen_residual_tol", self.eigen_residual_tol),
            ("zero_flow_eps", self.zero_flow_eps),
            ("tie_tol", self.tie_tol),
            ("em_min_modulus", self.em_min_modulus),
            ("suppression_window_hz", self.suppression_window_hz),
        ];
        for (field, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig { field, message: format!("must be positive, got {v}") });
            }
        }
        if self.pf_max_iter == 0 {
            return Err(Error::InvalidConfig { field: "pf_max_iter", message: "must be at least 1".into() });
        }
        let unit = [
            ("shape_threshold", self.shape_threshold),
            ("em_participation", self.em_participation),
            ("suppression_damping", self.suppression_damping),
        ];
        for (field, v) in unit {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidConfig { field, message: format!("must lie in [0, 1), got {v}") });
            }
        }
        if !(self.group_phase_deg > 0.0 && self.group_phase_deg < self.opposing_phase_deg) {
            return Err(Error::InvalidConfig {
                field: "group_phase_deg",
                message: "must be positive and below opposing_phase_deg".into(),
            });
        }
        if !(self.opposing_phase_deg < 180.0) {
            return Err(Error::InvalidConfig { field: "opposing_phase_deg", message: "must be below 180".into() });
        }
        if !(self.em_min_freq_hz >= 0.0 && self.em_min_freq_hz < self.em_max_freq_hz) {
            return Err(Error::InvalidConfig {
                field: "em_min_freq_hz",
                message: "electromechanical band must be a non-empty interval".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        AnalysisConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let c = AnalysisConfig { pf_tolerance: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = AnalysisConfig { group_phase_deg: 120.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = AnalysisConfig { em_min_freq_hz: 4.0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
