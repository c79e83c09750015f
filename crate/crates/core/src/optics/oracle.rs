//! Quadratic-cost reference for the propagation operator.
//!
//! Evaluates the same discrete operator as [`Propagator`](super::Propagator)
//! with explicit DFT sums and its own frequency bookkeeping. Only meant for
//! cross-checking on small grids.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::ComplexField;
use crate::{Error, Result};

pub const MAX_SIDE: usize = 64;

pub fn direct_dft_propagate(field: &ComplexField, distance: f64) -> Result<ComplexField> {
    let grid = *field.grid();
    let n = grid.side();
    if n > MAX_SIDE {
        return Err(Error::OracleTooLarge {
            side: n,
            limit: MAX_SIDE,
        });
    }
    if !(distance.is_finite() && distance >= 0.0) {
        return Err(Error::invalid(format!("propagation distance {distance}")));
    }
    // twiddle[k] = exp(-2πi k / n)
    let twiddle: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
        .collect();
    let x = field.values();

    let mut spectrum = vec![Complex64::new(0.0, 0.0); n * n];
    for u in 0..n {
        for v in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..n {
                let wr = twiddle[(u * r) % n];
                for c in 0..n {
                    acc += x[r * n + c] * wr * twiddle[(v * c) % n];
                }
            }
            spectrum[u * n + v] = acc;
        }
    }

    let period = n as f64 * grid.pitch();
    let signed = |k: usize| -> f64 {
        let k = k as i64;
        let half = (n / 2) as i64;
        (if k >= half { k - n as i64 } else { k }) as f64 / period
    };
    for u in 0..n {
        for v in 0..n {
            let (fy, fx) = (signed(u), signed(v));
            let kz2 = 1.0 - fx * fx - fy * fy;
            spectrum[u * n + v] *= if kz2 > 0.0 {
                Complex64::from_polar(1.0, 2.0 * PI * distance * kz2.sqrt())
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }

    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    let norm = 1.0 / (n * n) as f64;
    for r in 0..n {
        for c in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for u in 0..n {
                let wr = twiddle[(u * r) % n].conj();
                for v in 0..n {
                    acc += spectrum[u * n + v] * wr * twiddle[(v * c) % n].conj();
                }
            }
            out[r * n + c] = acc * norm;
        }
    }
    ComplexField::new(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::GridSpec;

    #[test]
    fn refuses_large_grids() {
        let g = GridSpec::new(66, 0.5).unwrap();
        let f = ComplexField::zeros(g);
        assert!(matches!(
            direct_dft_propagate(&f, 1.0),
            Err(Error::OracleTooLarge { side: 66, .. })
        ));
    }

    #[test]
    fn zero_in_zero_out() {
        let g = GridSpec::new(8, 0.5).unwrap();
        let f = ComplexField::zeros(g);
        assert_eq!(direct_dft_propagate(&f, 40.0).unwrap(), f);
    }

    /// Frozen point-spread row of an 8×8 centred impulse after 2λ, computed
    /// with an external FFT implementation.
    #[test]
    fn impulse_response_regression() {
        let g = GridSpec::new(8, 0.5).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 64];
        v[4 * 8 + 4] = Complex64::new(1.0, 0.0);
        let f = ComplexField::new(g, v).unwrap();
        let out = direct_dft_propagate(&f, 2.0).unwrap();
        let row: Vec<Complex64> = (0..8).map(|c| out.get(4, c)).collect();
        for (got, want) in row.iter().zip(IMPULSE_ROW) {
            assert!(
                (got - Complex64::new(want.0, want.1)).norm() < 1e-12,
                "{got} vs {want:?}"
            );
        }
    }

    const IMPULSE_ROW: [(f64, f64); 8] = [
        (-1.078_202_434_194_696e-1, -1.081_148_162_265_216_8e-1),
        (2.005_302_200_486_968_8e-2, 4.940_181_670_247_589e-2),
        (7.665_775_620_318_035e-2, 8.283_588_771_444_586e-2),
        (3.412_446_301_744_688e-2, -7.972_616_436_879_065e-2),
        (6.285_970_105_774_202e-2, -1.182_056_545_349_996e-1),
        (3.412_446_301_744_688e-2, -7.972_616_436_879_065e-2),
        (7.665_775_620_318_035e-2, 8.283_588_771_444_586e-2),
        (2.005_302_200_486_968_8e-2, 4.940_181_670_247_589e-2),
    ];
}
