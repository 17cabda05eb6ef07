//! Problem parameters, case classification and the fundamental solution of
//! the unperturbed radial p-Laplace equation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::RadialFunction;

/// Location of the isolated singular point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zeta {
    Origin,
    Infinity,
}

impl Zeta {
    /// Sign of the log-radius direction pointing toward the singular point.
    pub fn direction(self) -> f64 {
        match self {
            Zeta::Origin => -1.0,
            Zeta::Infinity => 1.0,
        }
    }

    /// Log radius of the singular point.
    pub fn log_radius(self) -> f64 {
        self.direction() * f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub p: f64,
    pub d: u32,
    pub zeta: Zeta,
}

impl ProblemParams {
    pub fn new(p: f64, d: u32, zeta: Zeta) -> Result<Self> {
        let params = Self { p, d, zeta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(Error::InvalidParams(format!("p must satisfy 1 < p < inf, got {}", self.p)));
        }
        if self.d < 2 {
            return Err(Error::InvalidParams(format!("d must be at least 2, got {}", self.d)));
        }
        Ok(())
    }

    pub fn dim(&self) -> f64 {
        self.d as f64
    }

    pub fn p_equals_d(&self) -> bool {
        self.p == self.dim()
    }

    /// Sign of p - d as -1, 0 or 1.
    pub fn p_vs_d(&self) -> std::cmp::Ordering {
        self.p.partial_cmp(&self.dim()).expect("p is finite")
    }

    pub fn alpha_star(&self) -> f64 {
        alpha_star(self)
    }

    pub fn gamma_star(&self) -> f64 {
        (self.p - self.dim()) / self.p
    }

    pub fn hardy_constant(&self) -> f64 {
        if self.p_equals_d() {
            0.0
        } else {
            self.gamma_star().abs().powf(self.p)
        }
    }

    /// Conjugate exponent q = p/(p-1).
    pub fn conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn is_classical(&self) -> bool {
        use std::cmp::Ordering::*;
        match self.zeta {
            Zeta::Origin => self.p_vs_d() != Greater,
            Zeta::Infinity => self.p_vs_d() != Less,
        }
    }

    pub fn with_zeta(mut self, zeta: Zeta) -> Self {
        self.zeta = zeta;
        self
    }
}

/// α* = (p - d)/(p - 1); exactly zero when p = d.
pub fn alpha_star(params: &ProblemParams) -> f64 {
    if params.p_equals_d() {
        0.0
    } else {
        (params.p - params.dim()) / (params.p - 1.0)
    }
}

/// Point on the extended half line [0, ∞].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtReal {
    Zero,
    One,
    Infinity,
}

impl ExtReal {
    pub fn value(self) -> f64 {
        match self {
            ExtReal::Zero => 0.0,
            ExtReal::One => 1.0,
            ExtReal::Infinity => f64::INFINITY,
        }
    }

    pub fn log_value(self) -> f64 {
        match self {
            ExtReal::Zero => f64::NEG_INFINITY,
            ExtReal::One => 0.0,
            ExtReal::Infinity => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Classical,
    Nonclassical,
}

/// Integration domain X_t in the definition of the Wolff potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XtFamily {
    /// B_t
    Ball,
    /// B_1 \ B_t
    UnitBallMinusBall,
    /// B_t \ B_1
    BallMinusUnitBall,
    /// complement of the closed ball of radius t
    ComplementOfBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseInfo {
    pub kind: CaseKind,
    /// Lower limit of the inner integral of the Kato condition.
    pub a: ExtReal,
    /// Lower limit of the outer integral of U_G; `None` when p = d.
    pub b: Option<ExtReal>,
    pub xt_family: XtFamily,
}

impl CaseInfo {
    pub fn is_classical(&self) -> bool {
        self.kind == CaseKind::Classical
    }
}

pub fn classify_case(params: &ProblemParams) -> CaseInfo {
    use std::cmp::Ordering::*;
    let kind = if params.is_classical() { CaseKind::Classical } else { CaseKind::Nonclassical };
    let (a, b, xt_family) = match (params.zeta, params.p_vs_d()) {
        (Zeta::Origin, Less) => (ExtReal::Zero, Some(ExtReal::One), XtFamily::Ball),
        (Zeta::Origin, Greater) => (ExtReal::One, Some(ExtReal::Zero), XtFamily::UnitBallMinusBall),
        (Zeta::Origin, Equal) => (ExtReal::Zero, None, XtFamily::Ball),
        (Zeta::Infinity, Less) => (ExtReal::One, Some(ExtReal::Zero), XtFamily::BallMinusUnitBall),
        (Zeta::Infinity, Greater) => (ExtReal::Infinity, Some(ExtReal::One), XtFamily::ComplementOfBall),
        (Zeta::Infinity, Equal) => (ExtReal::Infinity, None, XtFamily::ComplementOfBall),
    };
    CaseInfo { kind, a, b, xt_family }
}

/// v_{α*}(r) = r^{α*} for p ≠ d and |log r| for p = d, with exact derivatives.
pub fn fundamental_solution(params: &ProblemParams) -> RadialFunction {
    if params.p_equals_d() {
        RadialFunction::new(|r: f64| r.ln().abs())
            .with_first(|r: f64| r.ln().signum() / r)
            .with_second(|r: f64| -r.ln().signum() / (r * r))
    } else {
        power_function(params.alpha_star())
    }
}

/// r ↦ r^α with exact derivatives.
pub fn power_function(alpha: f64) -> RadialFunction {
    RadialFunction::new(move |r: f64| r.powf(alpha))
        .with_first(move |r: f64| alpha * r.powf(alpha - 1.0))
        .with_second(move |r: f64| alpha * (alpha - 1.0) * r.powf(alpha - 2.0))
}

/// Limit of v_{α*} at the singular point: +∞ exactly in the classical cases,
/// otherwise 0.
pub fn fundamental_limit(params: &ProblemParams) -> f64 {
    if params.is_classical() {
        f64::INFINITY
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(p: f64, d: u32, zeta: Zeta) -> ProblemParams {
        ProblemParams::new(p, d, zeta).unwrap()
    }

    #[test]
    fn alpha_star_examples() {
        assert_eq!(alpha_star(&pp(2.0, 3, Zeta::Origin)), -1.0);
        assert!((alpha_star(&pp(4.0, 2, Zeta::Origin)) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(alpha_star(&pp(3.0, 3, Zeta::Origin)), 0.0);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ProblemParams::new(1.0, 3, Zeta::Origin).is_err());
        assert!(ProblemParams::new(2.0, 1, Zeta::Origin).is_err());
        assert!(ProblemParams::new(f64::NAN, 3, Zeta::Origin).is_err());
    }

    #[test]
    fn case_tables() {
        let c = classify_case(&pp(2.0, 3, Zeta::Origin));
        assert_eq!(c.kind, CaseKind::Classical);
        assert_eq!(c.a, ExtReal::Zero);
        assert_eq!(c.b, Some(ExtReal::One));
        assert_eq!(c.xt_family, XtFamily::Ball);

        let c = classify_case(&pp(4.0, 2, Zeta::Origin));
        assert_eq!(c.kind, CaseKind::Nonclassical);
        assert_eq!(c.a, ExtReal::One);
        assert_eq!(c.b, Some(ExtReal::Zero));
        assert_eq!(c.xt_family, XtFamily::UnitBallMinusBall);

        let c = classify_case(&pp(2.0, 3, Zeta::Infinity));
        assert_eq!(c.kind, CaseKind::Nonclassical);
        assert_eq!(c.a, ExtReal::One);
        assert_eq!(c.b, Some(ExtReal::Zero));
        assert_eq!(c.xt_family, XtFamily::BallMinusUnitBall);

        let c = classify_case(&pp(4.0, 2, Zeta::Infinity));
        assert_eq!(c.kind, CaseKind::Classical);
        assert_eq!(c.a, ExtReal::Infinity);
        assert_eq!(c.b, Some(ExtReal::One));
        assert_eq!(c.xt_family, XtFamily::ComplementOfBall);

        let c = classify_case(&pp(3.0, 3, Zeta::Origin));
        assert_eq!((c.kind, c.a, c.b), (CaseKind::Classical, ExtReal::Zero, None));
        let c = classify_case(&pp(3.0, 3, Zeta::Infinity));
        assert_eq!((c.kind, c.a, c.b), (CaseKind::Classical, ExtReal::Infinity, None));
        assert_eq!(c.xt_family, XtFamily::ComplementOfBall);
    }

    #[test]
    fn classification_matches_definition_on_all_combinations() {
        for &(p, d) in &[(2.0, 3), (3.0, 3), (4.0, 2)] {
            for zeta in [Zeta::Origin, Zeta::Infinity] {
                let params = pp(p, d, zeta);
                let expected = match zeta {
                    Zeta::Origin => p <= d as f64,
                    Zeta::Infinity => p >= d as f64,
                };
                assert_eq!(classify_case(&params).is_classical(), expected);
                // the fundamental solution blows up at ζ exactly in the classical cases
                let v = fundamental_solution(&params);
                let near = match zeta {
                    Zeta::Origin => 1e-200,
                    Zeta::Infinity => 1e200,
                };
                let blows_up = v.value(near) > 400.0;
                assert_eq!(blows_up, expected, "p={p} d={d} {zeta:?}");
                assert_eq!(fundamental_limit(&params).is_infinite(), expected);
            }
        }
    }

    #[test]
    fn fundamental_solution_examples() {
        let v = fundamental_solution(&pp(2.0, 3, Zeta::Origin));
        assert!((v.value(0.5) - 2.0).abs() < 1e-15);
        let v = fundamental_solution(&pp(3.0, 3, Zeta::Origin));
        assert!((v.value((-2.0f64).exp()) - 2.0).abs() < 1e-15);
        let v = fundamental_solution(&pp(4.0, 2, Zeta::Origin));
        assert!((v.value(8.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn hardy_constants() {
        assert_eq!(pp(2.0, 3, Zeta::Origin).hardy_constant(), 0.25);
        assert_eq!(pp(4.0, 2, Zeta::Origin).hardy_constant(), 1.0 / 16.0);
        assert_eq!(pp(3.0, 3, Zeta::Origin).hardy_constant(), 0.0);
    }
}
