use rand::Rng;
use symdec_codes::{Pauli, PauliVector};

use crate::error::{CoreError, Result};

/// Depolarizing-style channel with `p_x = p_y = p_z = p/3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    p: f64,
}

impl NoiseModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..0.75).contains(&p) {
            return Err(CoreError::Config(format!("error rate {p} outside [0, 0.75)")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sample_qubit<R: Rng + ?Sized>(&self, rng: &mut R) -> Pauli {
        let u: f64 = rng.gen();
        let third = self.p / 3.0;
        if u >= self.p {
            Pauli::I
        } else if u < third {
            Pauli::X
        } else if u < 2.0 * third {
            Pauli::Z
        } else {
            Pauli::Y
        }
    }

    pub fn sample_error<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> PauliVector {
        let mut e = PauliVector::identity(n);
        for j in 0..n {
            let q = self.sample_qubit(rng);
            if q != Pauli::I {
                e.set_qubit(j, q);
            }
        }
        e
    }
}
