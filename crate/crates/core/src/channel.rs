//! Memoryless scalar channels `Y = a(X) + Z`, `Z ~ N(0, sigma^2)`.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Zero-mean, unit-variance Gaussian density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// The deterministic part `a(x)` of the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    /// `a(x) = x`; turns the channel into plain AWGN.
    Identity,
    /// Smooth clipping `a(x) = amax * tanh(x / amax)`.
    TanhClip { amax: f64 },
}

impl Nonlinearity {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Nonlinearity::Identity => x,
            Nonlinearity::TanhClip { amax } => amax * (x / amax).tanh(),
        }
    }

    /// `a'(x)`. For the clipper this is `sech^2(x / amax)`, evaluated as
    /// `1 / cosh^2` so deep saturation keeps full relative precision.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Nonlinearity::Identity => 1.0,
            Nonlinearity::TanhClip { amax } => {
                let c = (x / amax).cosh();
                1.0 / (c * c)
            }
        }
    }

    /// Supremum of `|a(x)|`, if finite.
    pub fn output_bound(&self) -> Option<f64> {
        match *self {
            Nonlinearity::Identity => None,
            Nonlinearity::TanhClip { amax } => Some(amax),
        }
    }

    /// Length scale of the transition from linear to saturated behaviour.
    pub(crate) fn knee(&self) -> Option<f64> {
        self.output_bound()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Nonlinearity::Identity => "identity",
            Nonlinearity::TanhClip { .. } => "tanh_clip",
        }
    }
}

/// A channel: nonlinearity plus Gaussian noise standard deviation.
///
/// Immutable once built; every method takes `&self`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    nonlinearity: Nonlinearity,
    noise_sigma: f64,
}

impl Default for Channel {
    /// `amax = 10`, `sigma_z = 1`.
    fn default() -> Self {
        Channel {
            nonlinearity: Nonlinearity::TanhClip { amax: 10.0 },
            noise_sigma: 1.0,
        }
    }
}

impl Channel {
    pub fn new(nonlinearity: Nonlinearity, noise_sigma: f64) -> Result<Self> {
        if !(noise_sigma.is_finite() && noise_sigma > 0.0) {
            return Err(Error::InvalidChannel(format!(
                "noise sigma must be positive and finite, got {noise_sigma}"
            )));
        }
        if let Nonlinearity::TanhClip { amax } = nonlinearity {
            if !(amax.is_finite() && amax > 0.0) {
                return Err(Error::InvalidChannel(format!(
                    "amax must be positive and finite, got {amax}"
                )));
            }
        }
        Ok(Channel {
            nonlinearity,
            noise_sigma,
        })
    }

    pub fn tanh_clip(amax: f64, noise_sigma: f64) -> Result<Self> {
        Self::new(Nonlinearity::TanhClip { amax }, noise_sigma)
    }

    pub fn identity(noise_sigma: f64) -> Result<Self> {
        Self::new(Nonlinearity::Identity, noise_sigma)
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nonlinearity
    }

    pub fn sigma(&self) -> f64 {
        self.noise_sigma
    }

    /// Same noise level, identity nonlinearity.
    pub fn as_awgn(&self) -> Channel {
        Channel {
            nonlinearity: Nonlinearity::Identity,
            noise_sigma: self.noise_sigma,
        }
    }

    /// `a(x)`, rejecting non-finite inputs.
    pub fn distort(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!("channel input must be finite, got {x}")));
        }
        Ok(self.nonlinearity.apply(x))
    }

    /// `f_{Y|X}(y|x) = f_G((y - a(x)) / sigma) / sigma`.
    pub fn conditional_pdf(&self, y: f64, x: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::InvalidInput(format!("channel output must be finite, got {y}")));
        }
        let mean = self.distort(x)?;
        Ok(std_normal_pdf((y - mean) / self.noise_sigma) / self.noise_sigma)
    }

    /// `h(Y|X) = log2(2 pi e sigma^2) / 2`. Independent of the source and of `a`.
    pub fn conditional_entropy(&self) -> f64 {
        0.5 * (2.0 * PI * E * self.noise_sigma * self.noise_sigma).log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simpson(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (hi - lo) / (n - 1) as f64;
        let mut acc = f(lo) + f(hi);
        for k in 1..n - 1 {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + k as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn distort_examples() {
        let ch = Channel::tanh_clip(10.0, 1.0).unwrap();
        assert_eq!(ch.distort(0.0).unwrap(), 0.0);
        let sat = ch.distort(1000.0).unwrap();
        assert!(sat > 9.999 && sat <= 10.0);
        assert!((ch.distort(10.0).unwrap() - 7.615_941_559_557_649).abs() < 1e-12);
        assert!(matches!(ch.distort(f64::NAN), Err(Error::InvalidInput(_))));
        assert!(ch.distort(f64::INFINITY).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Channel::tanh_clip(0.0, 1.0).is_err());
        assert!(Channel::tanh_clip(10.0, 0.0).is_err());
        assert!(Channel::identity(f64::NAN).is_err());
        assert!(Channel::identity(-1.0).is_err());
    }

    #[test]
    fn conditional_pdf_examples() {
        let ch = Channel::tanh_clip(10.0, 1.0).unwrap();
        let mode = ch.conditional_pdf(ch.distort(3.0).unwrap(), 3.0).unwrap();
        assert!((mode - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        let v = ch.conditional_pdf(1.0, 0.0).unwrap();
        assert!((v - 0.241_970_724_519_143_37).abs() < 1e-15);

        let wide = Channel::tanh_clip(10.0, 2.5).unwrap();
        let m = wide.distort(4.0).unwrap();
        assert!((wide.conditional_pdf(m, 4.0).unwrap() - 1.0 / (2.5 * (2.0 * PI).sqrt())).abs() < 1e-15);
    }

    #[test]
    fn conditional_pdf_normalized() {
        for ch in [Channel::default(), Channel::identity(1.0).unwrap()] {
            for x in [-100.0, 0.0, 100.0] {
                let m = ch.distort(x).unwrap();
                let s = ch.sigma();
                let total = simpson(m - 8.0 * s, m + 8.0 * s, 4097, |y| ch.conditional_pdf(y, x).unwrap());
                assert!((total - 1.0).abs() < 1e-9, "x={x}: {total}");
            }
        }
    }

    #[test]
    fn conditional_entropy_closed_form() {
        let one = Channel::tanh_clip(10.0, 1.0).unwrap();
        let two = Channel::tanh_clip(10.0, 2.0).unwrap();
        assert!((one.conditional_entropy() - 2.047_095_585_180_641).abs() < 1e-12);
        assert!((two.conditional_entropy() - 3.047_095_585_180_641).abs() < 1e-12);
        assert_eq!(
            one.conditional_entropy(),
            Channel::identity(1.0).unwrap().conditional_entropy()
        );
    }

    #[test]
    fn conditional_entropy_matches_quadrature() {
        let ch = Channel::tanh_clip(10.0, 1.3).unwrap();
        for x in [-7.0, 0.0, 0.4, 55.0] {
            let m = ch.distort(x).unwrap();
            let s = ch.sigma();
            let h = simpson(m - 12.0 * s, m + 12.0 * s, 8193, |y| {
                let f = ch.conditional_pdf(y, x).unwrap();
                if f > 0.0 {
                    -f * f.log2()
                } else {
                    0.0
                }
            });
            assert!((h - ch.conditional_entropy()).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let d = 1e-5;
        for nl in [Nonlinearity::Identity, Nonlinearity::TanhClip { amax: 10.0 }, Nonlinearity::TanhClip { amax: 0.7 }] {
            for x in [-30.0, -4.0, -0.3, 0.0, 1.1, 9.0, 25.0] {
                let fd = (nl.apply(x + d) - nl.apply(x - d)) / (2.0 * d);
                assert!((nl.derivative(x) - fd).abs() < 1e-8, "{nl:?} at {x}");
            }
        }
        let sat = Nonlinearity::TanhClip { amax: 10.0 }.derivative(100.0);
        assert!((sat / 8.244_614_455_767_395e-9 - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn tanh_clip_is_odd_bounded_monotone(x1 in -1e4f64..1e4, x2 in -1e4f64..1e4, amax in 0.1f64..50.0) {
            let nl = Nonlinearity::TanhClip { amax };
            prop_assert!(nl.apply(x1).abs() <= amax);
            prop_assert_eq!(nl.apply(-x1), -nl.apply(x1));
            prop_assert!(nl.derivative(x1).is_finite() && nl.derivative(x1) >= 0.0);
            let (lo, hi) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
            // strict monotonicity is only resolvable in double precision inside the knee
            if hi - lo > 1e-9 && hi.abs() < 5.0 * amax && lo.abs() < 5.0 * amax {
                prop_assert!(nl.apply(lo) < nl.apply(hi));
            } else {
                prop_assert!(nl.apply(lo) <= nl.apply(hi));
            }
        }
    }
}
