use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drift `b(x, m)` where `m` is the graphon-aggregated mean flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drift {
    /// `a x + c m + d`
    Linear { a: f64, c: f64, d: f64 },
    /// `a tanh(x) + c tanh(m) + d`
    LipschitzTanh { a: f64, c: f64, d: f64 },
}

/// Diffusion `sigma(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diffusion {
    /// `s x + s0`
    Linear { s: f64, s0: f64 },
    /// `s0`
    Constant { s0: f64 },
}

/// Lipschitz, linear-growth coefficient pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub drift: Drift,
    pub diffusion: Diffusion,
}

impl Coefficients {
    pub fn new(drift: Drift, diffusion: Diffusion) -> Result<Self> {
        let c = Self { drift, diffusion };
        c.validate()?;
        Ok(c)
    }

    /// `db/dt = a x + c m + d`, `sigma = s x + s0`.
    pub fn linear(a: f64, c: f64, d: f64, s: f64, s0: f64) -> Result<Self> {
        Self::new(Drift::Linear { a, c, d }, Diffusion::Linear { s, s0 })
    }

    pub fn validate(&self) -> Result<()> {
        let (a, c, d) = self.drift_params();
        let (s, s0) = self.diffusion_params();
        if [a, c, d, s, s0].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "coefficient parameters must be finite".into(),
            ))
        }
    }

    fn drift_params(&self) -> (f64, f64, f64) {
        match self.drift {
            Drift::Linear { a, c, d } | Drift::LipschitzTanh { a, c, d } => (a, c, d),
        }
    }

    fn diffusion_params(&self) -> (f64, f64) {
        match self.diffusion {
            Diffusion::Linear { s, s0 } => (s, s0),
            Diffusion::Constant { s0 } => (0.0, s0),
        }
    }

    /// A constant `C` with `|b(x,m) - b(x',m')| <= C(|x-x'| + |m-m'|)` and
    /// `|sigma(x) - sigma(x')| <= C |x - x'|`.
    pub fn lipschitz_constant(&self) -> f64 {
        let (a, c, _) = self.drift_params();
        let (s, _) = self.diffusion_params();
        a.abs().max(c.abs()).max(s.abs())
    }

    /// Whether the drift depends on the interaction argument at all.
    pub fn is_interacting(&self) -> bool {
        self.drift_params().1 != 0.0
    }

    #[inline]
    pub fn drift(&self, x: f64, m: f64) -> f64 {
        match self.drift {
            Drift::Linear { a, c, d } => a * x + c * m + d,
            Drift::LipschitzTanh { a, c, d } => a * x.tanh() + c * m.tanh() + d,
        }
    }

    #[inline]
    pub fn diffusion(&self, x: f64) -> f64 {
        match self.diffusion {
            Diffusion::Linear { s, s0 } => s * x + s0,
            Diffusion::Constant { s0 } => s0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kinds() -> impl Strategy<Value = Coefficients> {
        let p = -3.0f64..3.0;
        (
            p.clone(),
            p.clone(),
            p.clone(),
            p.clone(),
            p,
            any::<bool>(),
            any::<bool>(),
        )
            .prop_map(|(a, c, d, s, s0, tanh, const_sigma)| Coefficients {
                drift: if tanh {
                    Drift::LipschitzTanh { a, c, d }
                } else {
                    Drift::Linear { a, c, d }
                },
                diffusion: if const_sigma {
                    Diffusion::Constant { s0 }
                } else {
                    Diffusion::Linear { s, s0 }
                },
            })
    }

    proptest! {
        #[test]
        fn lipschitz_bound_holds(
            coeffs in kinds(),
            x in -50.0f64..50.0, y in -50.0f64..50.0,
            m in -50.0f64..50.0, n in -50.0f64..50.0,
        ) {
            let big_c = coeffs.lipschitz_constant();
            let lhs = (coeffs.drift(x, m) - coeffs.drift(y, n)).abs();
            prop_assert!(lhs <= big_c * ((x - y).abs() + (m - n).abs()) + 1e-9);
            let lhs = (coeffs.diffusion(x) - coeffs.diffusion(y)).abs();
            prop_assert!(lhs <= big_c * (x - y).abs() + 1e-9);
        }
    }

    #[test]
    fn evaluations() {
        let c = Coefficients::linear(1.0, 0.0, 0.0, 2f64.sqrt(), 0.0).unwrap();
        assert_eq!(c.drift(2.0, 5.0), 2.0);
        assert_eq!(c.diffusion(1.0), 2f64.sqrt());
        assert!(!c.is_interacting());
        assert_eq!(c.lipschitz_constant(), 2f64.sqrt());
        let t = Coefficients::new(
            Drift::LipschitzTanh {
                a: 1.0,
                c: 2.0,
                d: 0.5,
            },
            Diffusion::Constant { s0: 0.3 },
        )
        .unwrap();
        assert!((t.drift(0.0, 0.0) - 0.5).abs() < 1e-15);
        assert_eq!(t.diffusion(100.0), 0.3);
        assert!(t.is_interacting());
        assert!(Coefficients::linear(f64::NAN, 0.0, 0.0, 0.0, 0.0).is_err());
    }
}
