//! Taming/threshold parameters shared by all schemes.

use crate::error::{Error, Result};

/// The three stopped increment-tamed one-step schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Euler,
    Milstein,
    Order15,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Milstein => "milstein",
            Scheme::Order15 => "order15",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "euler" => Some(Scheme::Euler),
            "milstein" => Some(Scheme::Milstein),
            "order15" | "order1.5" => Some(Scheme::Order15),
            _ => None,
        }
    }

    /// Whether the scheme consumes the per-step time integrals dZ.
    pub fn needs_dz(self) -> bool {
        matches!(self, Scheme::Order15)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of the taming map `x / (1 + |x|^delta h^-theta)` and of the
/// stopping threshold `gamma1 * exp(gamma2 |ln h|^gamma3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub delta: f64,
    pub theta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

impl Default for SchemeParams {
    /// The standard experiment configuration: delta=5, theta=1/4,
    /// gamma=(1, 1, 0.5). Satisfies every scheme's order constraint.
    fn default() -> Self {
        SchemeParams {
            delta: 5.0,
            theta: 0.25,
            gamma1: 1.0,
            gamma2: 1.0,
            gamma3: 0.5,
        }
    }
}

impl SchemeParams {
    pub fn new(delta: f64, theta: f64, gamma1: f64, gamma2: f64, gamma3: f64) -> Result<Self> {
        let p = SchemeParams { delta, theta, gamma1, gamma2, gamma3 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            (self.delta, "delta"),
            (self.theta, "theta"),
            (self.gamma1, "gamma1"),
            (self.gamma2, "gamma2"),
        ];
        for (v, name) in pos {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.gamma3.is_finite() && self.gamma3 > 0.0 && self.gamma3 < 1.0) {
            return Err(Error::Config(format!(
                "gamma3 must lie strictly in (0, 1), got {}",
                self.gamma3
            )));
        }
        Ok(())
    }

    /// Order constraint linking the taming exponents to the scheme:
    /// Euler needs delta - 2 theta > 1 (for the exponential-moment guarantee),
    /// Milstein needs delta - 2 theta >= 3 and the order-1.5 scheme needs
    /// delta - 2 theta >= 4.
    pub fn validate_for(&self, scheme: Scheme) -> Result<()> {
        self.validate()?;
        let gap = self.delta - 2.0 * self.theta;
        let ok = match scheme {
            Scheme::Euler => gap > 1.0,
            Scheme::Milstein => gap >= 3.0,
            Scheme::Order15 => gap >= 4.0,
        };
        if !ok {
            let need = match scheme {
                Scheme::Euler => "> 1",
                Scheme::Milstein => ">= 3",
                Scheme::Order15 => ">= 4",
            };
            return Err(Error::Config(format!(
                "scheme {} requires delta - 2*theta {need}, got {gap}",
                scheme.name()
            )));
        }
        Ok(())
    }

    /// Uniform bound `h^(theta/delta)` on the norm of a tamed increment.
    pub fn increment_bound(&self, h: f64) -> f64 {
        h.powf(self.theta / self.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_satisfy_all_schemes() {
        let p = SchemeParams::default();
        for s in [Scheme::Euler, Scheme::Milstein, Scheme::Order15] {
            p.validate_for(s).unwrap();
        }
    }

    #[test]
    fn order_constraints_reject_small_gaps() {
        // delta - 2 theta = 2.5: fine for Euler, too small for the others.
        let p = SchemeParams::new(3.0, 0.25, 1.0, 1.0, 0.5).unwrap();
        p.validate_for(Scheme::Euler).unwrap();
        assert!(p.validate_for(Scheme::Milstein).is_err());
        assert!(p.validate_for(Scheme::Order15).is_err());
        // Strict inequality for Euler: gap exactly 1 is rejected.
        let q = SchemeParams::new(1.5, 0.25, 1.0, 1.0, 0.5).unwrap();
        assert!(q.validate_for(Scheme::Euler).is_err());
    }

    #[test]
    fn field_validation() {
        assert!(SchemeParams::new(-1.0, 0.25, 1.0, 1.0, 0.5).is_err());
        assert!(SchemeParams::new(5.0, 0.0, 1.0, 1.0, 0.5).is_err());
        assert!(SchemeParams::new(5.0, 0.25, 1.0, 1.0, 1.0).is_err());
        assert!(SchemeParams::new(5.0, 0.25, 1.0, 1.0, 0.0).is_err());
        assert!(SchemeParams::new(5.0, f64::NAN, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::Euler, Scheme::Milstein, Scheme::Order15] {
            assert_eq!(Scheme::parse(s.name()), Some(s));
        }
        assert_eq!(Scheme::parse("order1.5"), Some(Scheme::Order15));
        assert_eq!(Scheme::parse("rk4"), None);
    }
}
