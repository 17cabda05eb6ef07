//! Radial functions and the radial p-Laplacian.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::params::ProblemParams;

type Rule = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar function of the radius with optional exact derivative rules.
#[derive(Clone)]
pub struct RadialFunction {
    value: Rule,
    first: Option<Rule>,
    second: Option<Rule>,
    domain: (f64, f64),
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialFunction")
            .field("domain", &self.domain)
            .field("first", &self.first.is_some())
            .field("second", &self.second.is_some())
            .finish()
    }
}

impl RadialFunction {
    pub fn new(value: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { value: Arc::new(value), first: None, second: None, domain: (0.0, f64::INFINITY) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c).with_first(|_| 0.0).with_second(|_| 0.0)
    }

    pub fn with_first(mut self, rule: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.first = Some(Arc::new(rule));
        self
    }

    pub fn with_second(mut self, rule: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.second = Some(Arc::new(rule));
        self
    }

    pub fn without_second(mut self) -> Self {
        self.second = None;
        self
    }

    pub fn without_derivatives(mut self) -> Self {
        self.first = None;
        self.second = None;
        self
    }

    pub fn on_domain(mut self, lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "radial function domain must be nonempty");
        self.domain = (lo, hi);
        self
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.value)(r)
    }

    pub fn has_first(&self) -> bool {
        self.first.is_some()
    }

    pub fn has_second(&self) -> bool {
        self.second.is_some()
    }

    /// First derivative: exact rule when present, else a central difference.
    pub fn first(&self, r: f64) -> f64 {
        match &self.first {
            Some(rule) => rule(r),
            None => richardson(|h| (self.value(r + h) - self.value(r - h)) / (2.0 * h), fd_step(r)),
        }
    }

    /// Second derivative: exact rule, else a central difference of the first
    /// derivative rule, else a second difference of values.
    pub fn second(&self, r: f64) -> f64 {
        match (&self.second, &self.first) {
            (Some(rule), _) => rule(r),
            (None, Some(first)) => richardson(|h| (first(r + h) - first(r - h)) / (2.0 * h), fd_step(r)),
            (None, None) => {
                let f0 = self.value(r);
                richardson(|h| (self.value(r + h) - 2.0 * f0 + self.value(r - h)) / (h * h), fd_step(r))
            }
        }
    }

    /// Composition r ↦ f(self(r)) with chain-rule derivatives.
    pub fn compose(&self, f: ChainMap) -> RadialFunction {
        let inner = self.clone();
        let a = self.clone();
        let b = self.clone();
        let mut out = RadialFunction::new(move |r| f.value(inner.value(r)))
            .with_first(move |r| f.first(a.value(r)) * a.first(r));
        if self.has_first() {
            out = out.with_second(move |r| {
                let u = b.value(r);
                let du = b.first(r);
                f.second(u) * du * du + f.first(u) * b.second(r)
            });
        }
        out.domain = self.domain;
        out
    }

    /// c0 + c1 * self.
    pub fn affine(&self, c0: f64, c1: f64) -> RadialFunction {
        let o = self.clone();
        let o1 = self.clone();
        let o2 = self.clone();
        let mut out = RadialFunction::new(move |r| c0 + c1 * o.value(r))
            .with_first(move |r| c1 * o1.first(r));
        if self.has_second() {
            out = out.with_second(move |r| c1 * o2.second(r));
        }
        out.domain = self.domain;
        out
    }
}

/// Smooth increasing maps used to transform positive profiles.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ChainMap {
    Identity,
    Power { beta: f64 },
    Exp,
    Log,
}

impl ChainMap {
    pub fn value(self, u: f64) -> f64 {
        match self {
            ChainMap::Identity => u,
            ChainMap::Power { beta } => u.powf(beta),
            ChainMap::Exp => u.exp(),
            ChainMap::Log => u.ln(),
        }
    }

    pub fn first(self, u: f64) -> f64 {
        match self {
            ChainMap::Identity => 1.0,
            ChainMap::Power { beta } => beta * u.powf(beta - 1.0),
            ChainMap::Exp => u.exp(),
            ChainMap::Log => 1.0 / u,
        }
    }

    pub fn second(self, u: f64) -> f64 {
        match self {
            ChainMap::Identity => 0.0,
            ChainMap::Power { beta } => beta * (beta - 1.0) * u.powf(beta - 2.0),
            ChainMap::Exp => u.exp(),
            ChainMap::Log => -1.0 / (u * u),
        }
    }
}

/// Finite-difference step, purely relative so that r - 2h stays positive.
pub fn fd_step(r: f64) -> f64 {
    1e-3 * r.abs().max(f64::MIN_POSITIVE)
}

/// One Richardson step on a central difference quotient D(h) = D + O(h²).
fn richardson(d: impl Fn(f64) -> f64, h: f64) -> f64 {
    (4.0 * d(h) - d(2.0 * h)) / 3.0
}

/// φ_p(y) = |y|^{p-2} y, continuous at 0 for every p > 1.
pub fn phi(p: f64, y: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        y.abs().powf(p - 1.0) * y.signum()
    }
}

/// −Δ_p v at radius r for a radial v:
/// −|v'|^{p−2}[(p−1)v'' + (d−1)v'/r].
pub fn radial_p_laplacian(v: &RadialFunction, params: &ProblemParams, r: f64) -> Result<f64> {
    let p = params.p;
    let dv = v.first(r);
    if dv == 0.0 {
        if p < 2.0 {
            return Err(Error::DegenerateGradient { r, p });
        }
        if p > 2.0 {
            return Ok(0.0);
        }
    }
    let ddv = v.second(r);
    let weight = if p == 2.0 { 1.0 } else { dv.abs().powf(p - 2.0) };
    Ok(-weight * ((p - 1.0) * ddv + (params.dim() - 1.0) * dv / r))
}

/// Closed form of −Δ_p r^α.
pub fn power_p_laplacian(alpha: f64, params: &ProblemParams, r: f64) -> f64 {
    let p = params.p;
    -phi(p, alpha) * (alpha * (p - 1.0) + params.dim() - p) * r.powf(alpha * (p - 1.0) - p)
}
