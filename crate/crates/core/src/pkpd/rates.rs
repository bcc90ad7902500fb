use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{INPUT_DIM, STATE_DIM};
use crate::{Error, Result};

/// Transfer and elimination rates of one drug, 1/min.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrugRates {
    pub k12: f64,
    pub k13: f64,
    pub k10: f64,
    pub k21: f64,
    pub k31: f64,
    pub k1e: f64,
    pub ke0: f64,
}

impl DrugRates {
    fn validate(&self, drug: &str) -> Result<()> {
        let named = [
            ("k12", self.k12),
            ("k13", self.k13),
            ("k10", self.k10),
            ("k21", self.k21),
            ("k31", self.k31),
            ("k1e", self.k1e),
            ("ke0", self.ke0),
        ];
        for (name, v) in named {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!(
                    "{drug}.{name} must be a nonnegative rate, got {v}"
                )));
            }
        }
        if self.ke0 <= 0.0 {
            return Err(Error::config(format!("{drug}.ke0 must be positive")));
        }
        Ok(())
    }

    /// The 4×4 block
    ///
    /// ```text
    /// [ -(k12+k13+k10)  k21   k31   0   ]
    /// [  k12           -k21   0     0   ]
    /// [  k13            0    -k31   0   ]
    /// [  k1e            0     0    -ke0 ]
    /// ```
    #[rustfmt::skip]
    pub fn block(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                -(self.k12 + self.k13 + self.k10), self.k21, self.k31, 0.0,
                self.k12, -self.k21, 0.0, 0.0,
                self.k13, 0.0, -self.k31, 0.0,
                self.k1e, 0.0, 0.0, -self.ke0,
            ],
        )
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            k12: self.k12 * factor,
            k13: self.k13 * factor,
            k10: self.k10 * factor,
            k21: self.k21 * factor,
            k31: self.k31 * factor,
            k1e: self.k1e * factor,
            ke0: self.ke0 * factor,
        }
    }
}

/// Rates for propofol (`p`) and remifentanil (`r`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PkRates {
    pub p: DrugRates,
    pub r: DrugRates,
}

impl PkRates {
    pub fn validate(&self) -> Result<()> {
        self.p.validate("p")?;
        self.r.validate("r")
    }
}

/// Continuous-time block-diagonal pair `(Ac, Bc)`, 8×8 and 8×2. Each drug's
/// infusion enters its own central compartment.
pub fn build_pk_matrices(rates: &PkRates) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    rates.validate()?;
    let mut ac = DMatrix::zeros(STATE_DIM, STATE_DIM);
    ac.view_mut((0, 0), (4, 4)).copy_from(&rates.p.block());
    ac.view_mut((4, 4), (4, 4)).copy_from(&rates.r.block());
    let mut bc = DMatrix::zeros(STATE_DIM, INPUT_DIM);
    bc[(0, 0)] = 1.0;
    bc[(4, 1)] = 1.0;

    let unstable = ac
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if unstable > 1e-12 {
        return Err(Error::config(format!(
            "PK matrix has an eigenvalue with positive real part ({unstable:e})"
        )));
    }
    Ok((ac, bc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_rates(ke0: f64) -> DrugRates {
        DrugRates {
            k12: 0.0,
            k13: 0.0,
            k10: 0.0,
            k21: 0.0,
            k31: 0.0,
            k1e: 0.0,
            ke0,
        }
    }

    #[test]
    fn only_ke0_gives_single_entry() {
        let rates = PkRates {
            p: zero_rates(1.0),
            r: zero_rates(1.0),
        };
        let (ac, bc) = build_pk_matrices(&rates).unwrap();
        let p_block = ac.view((0, 0), (4, 4));
        let nonzero: Vec<_> = p_block.iter().filter(|v| **v != 0.0).collect();
        assert_eq!(nonzero, vec![&-1.0]);
        assert_eq!(p_block[(3, 3)], -1.0);
        assert_eq!(bc[(0, 0)], 1.0);
        assert_eq!(bc[(4, 1)], 1.0);
        assert_eq!(bc.iter().filter(|v| **v != 0.0).count(), 2);
    }

    #[test]
    fn sentinel_pattern() {
        let s = DrugRates {
            k12: 1.0,
            k13: 2.0,
            k10: 3.0,
            k21: 4.0,
            k31: 5.0,
            k1e: 6.0,
            ke0: 7.0,
        };
        let (ac, _) = build_pk_matrices(&PkRates { p: s, r: s }).unwrap();
        for off in [0, 4] {
            let b = ac.view((off, off), (4, 4));
            assert_eq!(b[(0, 0)], -6.0);
            assert_eq!(b[(0, 1)], 4.0);
            assert_eq!(b[(0, 2)], 5.0);
            assert_eq!(b[(1, 0)], 1.0);
            assert_eq!(b[(2, 0)], 2.0);
            assert_eq!(b[(3, 0)], 6.0);
            assert_eq!(b[(3, 3)], -7.0);
            assert_eq!(b[(1, 1)], -4.0);
            assert_eq!(b[(2, 2)], -5.0);
        }
        assert!(ac.view((0, 4), (4, 4)).iter().all(|v| *v == 0.0));
        assert!(ac.view((4, 0), (4, 4)).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_negative_rate_and_zero_ke0() {
        let mut p = zero_rates(1.0);
        p.k21 = -0.1;
        assert!(matches!(
            build_pk_matrices(&PkRates {
                p,
                r: zero_rates(1.0)
            }),
            Err(Error::Config(_))
        ));
        assert!(build_pk_matrices(&PkRates {
            p: zero_rates(0.0),
            r: zero_rates(1.0)
        })
        .is_err());
    }
}
