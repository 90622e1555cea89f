//! Complex log-Gamma and reciprocal Gamma (Lanczos, g = 7, n = 9).

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `sin(πx)` with exact zeros at the integers.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r == 0.5 {
        return 1.0;
    }
    if r == 1.5 {
        return -1.0;
    }
    (PI * r).sin()
}

/// `cos(πx)` with exact zeros at the half-integers.
pub(crate) fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

fn sin_pi_complex(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    Complex64::new(sin_pi(x) * (PI * y).cosh(), cos_pi(x) * (PI * y).sinh())
}

/// A logarithm of `sin(πz)`, valid modulo 2πi, that never overflows.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let w = z * PI;
    if w.im.abs() < 20.0 {
        return sin_pi_complex(z).ln();
    }
    let i = Complex64::i();
    if w.im > 0.0 {
        -i * w + (i * 0.5).ln() + (-(2.0 * i * w).exp()).ln_1p()
    } else {
        i * w + (-i * 0.5).ln() + (-(-2.0 * i * w).exp()).ln_1p()
    }
}

trait Ln1p {
    fn ln_1p(self) -> Self;
}

impl Ln1p for Complex64 {
    fn ln_1p(self) -> Self {
        if self.norm() < 1e-4 {
            // ln(1+x) = x - x²/2 + x³/3 - ...
            self - self * self * 0.5 + self * self * self / 3.0
        } else {
            (Complex64::new(1.0, 0.0) + self).ln()
        }
    }
}

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

fn ln_gamma_right(z: Complex64) -> Complex64 {
    let zm = z - 1.0;
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (zm + k as f64);
    }
    let t = zm + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (zm + 0.5) * t.ln() - t + acc.ln()
}

/// `ln Γ(z)`, defined modulo 2πi. Poles give `+∞` real part.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    if z.re >= 0.5 {
        ln_gamma_right(z)
    } else {
        Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma_right(1.0 - z)
    }
}

/// `1/Γ(z)`, an entire function: exactly zero at the poles of Γ.
pub fn recip_gamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(0.0, 0.0);
    }
    if z.re >= 0.5 {
        return (-ln_gamma_right(z)).exp();
    }
    if (PI * z.im).abs() < 20.0 {
        sin_pi_complex(z) / PI * ln_gamma_right(1.0 - z).exp()
    } else {
        (ln_sin_pi(z) - PI.ln() + ln_gamma_right(1.0 - z)).exp()
    }
}
