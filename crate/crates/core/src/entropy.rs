//! Output density, output entropy and mutual information by quadrature.
//!
//! For any source, `f_Y` is a Gaussian mixture: a particle source gives one
//! component per particle, and a continuous source gives one component per
//! node of its x-quadrature. [`OutputMixture`] is that mixture; everything
//! else in this module integrates functions of it over a [`QuadratureGrid`].

use statrs::function::erf::erfc;

use crate::channel::{std_normal_pdf, Channel};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureGrid;
use crate::source::{ParticleSource, Source};

/// Grid points with `f_Y` below this value contribute nothing (`0 log 0 = 0`).
pub const DENSITY_FLOOR: f64 = 1e-300;
/// Largest output mass the grid may leave uncovered.
pub const OUTPUT_MASS_TOLERANCE: f64 = 1e-10;

/// Half-width of a kernel row, in standard deviations. Beyond it the Gaussian
/// underflows to zero in double precision anyway.
const KERNEL_HALF_WIDTH: f64 = 38.5;
/// The kernel recurrence is re-seeded with a direct `exp` this often.
const RESEED: usize = 16;

/// `I(X;Y) = h(Y) - h(Y|X)` and its parts, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MIResult {
    pub mutual_information: f64,
    pub output_entropy: f64,
    pub conditional_entropy: f64,
    /// `|h_n - h_{n/2}|`: change of the output entropy when the grid is halved.
    pub quadrature_error_estimate: f64,
}

/// `f_Y(y) = sum_j v_j f_G((y - mu_j) / sigma) / sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMixture {
    centers: Vec<f64>,
    weights: Vec<f64>,
    sigma: f64,
}

impl OutputMixture {
    pub fn new(source: &Source, channel: &Channel) -> Result<Self> {
        match source {
            Source::Particles(p) => Ok(Self::from_particles(p, channel)),
            Source::Continuous(c) => {
                let nodes = c.quadrature_nodes(Some(channel));
                Self::from_nodes(&nodes, channel)
            }
        }
    }

    pub fn from_particles(source: &ParticleSource, channel: &Channel) -> Self {
        let nl = channel.nonlinearity();
        OutputMixture {
            centers: source.positions().iter().map(|&c| nl.apply(c)).collect(),
            weights: source.weights().to_vec(),
            sigma: channel.sigma(),
        }
    }

    /// Mixture from input-space quadrature nodes `(x_j, v_j)`.
    pub fn from_nodes(nodes: &[(f64, f64)], channel: &Channel) -> Result<Self> {
        let nl = channel.nonlinearity();
        let mut centers = Vec::with_capacity(nodes.len());
        let mut weights = Vec::with_capacity(nodes.len());
        for &(x, v) in nodes {
            if !(x.is_finite() && v.is_finite() && v >= 0.0) {
                return Err(Error::Numeric(format!("bad quadrature node ({x}, {v})")));
            }
            if v > 0.0 {
                centers.push(nl.apply(x));
                weights.push(v);
            }
        }
        if centers.is_empty() {
            return Err(Error::Numeric("source has no mass on its quadrature nodes".into()));
        }
        Ok(OutputMixture {
            centers,
            weights,
            sigma: channel.sigma(),
        })
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Smallest and largest noiseless output `a(x)` in the mixture.
    pub fn center_range(&self) -> (f64, f64) {
        self.centers
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c), hi.max(c)))
    }

    /// `f_Y(y)`, summed directly over all components.
    pub fn pdf(&self, y: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.weights)
            .map(|(&m, &w)| w * std_normal_pdf((y - m) / self.sigma))
            .sum::<f64>()
            / self.sigma
    }

    /// Probability mass of `Y` outside `[lo, hi]`.
    pub fn mass_outside(&self, lo: f64, hi: f64) -> f64 {
        let s = self.sigma * std::f64::consts::SQRT_2;
        self.centers
            .iter()
            .zip(&self.weights)
            .map(|(&m, &w)| w * 0.5 * (erfc((m - lo) / s) + erfc((hi - m) / s)))
            .sum()
    }

    /// Fails when the grid leaves more than `1e-10` of the output mass uncovered.
    pub fn check_coverage(&self, grid: &QuadratureGrid) -> Result<()> {
        let missing = self.mass_outside(grid.lo(), grid.hi());
        if missing > OUTPUT_MASS_TOLERANCE {
            Err(Error::Coverage { missing })
        } else {
            Ok(())
        }
    }

    /// The smallest grid with `n_points` covering the mixture with the usual margin.
    pub fn covering_grid(&self, n_points: usize) -> Result<QuadratureGrid> {
        let (lo, hi) = self.center_range();
        QuadratureGrid::covering(lo, hi, self.sigma, n_points)
    }

    /// `f_Y` sampled on the grid.
    pub fn density_on(&self, grid: &QuadratureGrid) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        for (&m, &w) in self.centers.iter().zip(&self.weights) {
            for_each_kernel(grid, m, self.sigma, |k, g| out[k] += w * g);
        }
        out
    }
}

/// Calls `emit(k, f_G((y_k - mu)/sigma)/sigma)` for every grid index where
/// the kernel is representable.
///
/// Uses `g_{k+1} = g_k r_k`, `r_{k+1} = r_k exp(-d^2)` with `d = h/sigma`,
/// walking outwards from the grid point nearest `mu` and re-seeding every
/// [`RESEED`] steps.
#[inline]
pub(crate) fn for_each_kernel(
    grid: &QuadratureGrid,
    mu: f64,
    sigma: f64,
    mut emit: impl FnMut(usize, f64),
) {
    let lo = grid.lo();
    let h = grid.step();
    let last = grid.len() as isize - 1;
    let reach = KERNEL_HALF_WIDTH * sigma;
    let kmin = (((mu - reach - lo) / h).ceil() as isize).max(0);
    let kmax = (((mu + reach - lo) / h).floor() as isize).min(last);
    if kmin > kmax {
        return;
    }
    let k0 = (((mu - lo) / h).round() as isize).clamp(kmin, kmax);
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let d = h / sigma;
    let decay = (-d * d).exp();
    let half_d2 = 0.5 * d * d;

    let mut k = k0;
    while k <= kmax {
        let u = (lo + k as f64 * h - mu) / sigma;
        let mut g = norm * (-0.5 * u * u).exp();
        let mut r = (-u * d - half_d2).exp();
        for _ in 0..RESEED {
            if k > kmax {
                break;
            }
            emit(k as usize, g);
            g *= r;
            r *= decay;
            k += 1;
        }
    }
    let mut k = k0 - 1;
    while k >= kmin {
        let u = (lo + k as f64 * h - mu) / sigma;
        let mut g = norm * (-0.5 * u * u).exp();
        let mut r = (u * d - half_d2).exp();
        for _ in 0..RESEED {
            if k < kmin {
                break;
            }
            emit(k as usize, g);
            g *= r;
            r *= decay;
            k -= 1;
        }
    }
}

/// `-sum_k W_k f_k log2 f_k`, skipping points below [`DENSITY_FLOOR`].
pub(crate) fn entropy_of_density(grid: &QuadratureGrid, density: &[f64]) -> Result<f64> {
    let mut integrand = vec![0.0; density.len()];
    for (dst, &f) in integrand.iter_mut().zip(density) {
        if !f.is_finite() {
            return Err(Error::Numeric(format!("output density evaluated to {f}")));
        }
        if f >= DENSITY_FLOOR {
            *dst = -f * f.log2();
        }
    }
    Ok(grid.integrate(&integrand))
}

/// `f_Y(y)` for a source and channel.
pub fn output_pdf(source: &Source, channel: &Channel, y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::InvalidInput(format!("output value must be finite, got {y}")));
    }
    Ok(OutputMixture::new(source, channel)?.pdf(y))
}

/// `h(Y) = -int f_Y log2 f_Y dy` on the grid.
pub fn output_entropy(source: &Source, channel: &Channel, grid: &QuadratureGrid) -> Result<f64> {
    let mixture = OutputMixture::new(source, channel)?;
    mixture.check_coverage(grid)?;
    entropy_of_density(grid, &mixture.density_on(grid))
}

/// `I(X;Y)` with `h(Y|X)` from the closed form.
pub fn mutual_information(
    source: &Source,
    channel: &Channel,
    grid: &QuadratureGrid,
) -> Result<MIResult> {
    let mixture = OutputMixture::new(source, channel)?;
    mixture_information(&mixture, channel, grid)
}

/// [`mutual_information`] for an already built mixture.
pub fn mixture_information(
    mixture: &OutputMixture,
    channel: &Channel,
    grid: &QuadratureGrid,
) -> Result<MIResult> {
    mixture.check_coverage(grid)?;
    let hy = entropy_of_density(grid, &mixture.density_on(grid))?;
    let err = match grid.coarsened() {
        Some(coarse) => (hy - entropy_of_density(&coarse, &mixture.density_on(&coarse))?).abs(),
        None => f64::NAN,
    };
    let hyx = channel.conditional_entropy();
    Ok(MIResult {
        mutual_information: hy - hyx,
        output_entropy: hy,
        conditional_entropy: hyx,
        quadrature_error_estimate: err,
    })
}

/// Default output grid for a source: the channel's full output range when it
/// is bounded, otherwise the range reached by the source.
pub fn default_grid(source: &Source, channel: &Channel, n_points: usize) -> Result<QuadratureGrid> {
    match QuadratureGrid::for_channel(channel, n_points) {
        Ok(g) => Ok(g),
        Err(_) => OutputMixture::new(source, channel)?.covering_grid(n_points),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::DEFAULT_POINTS;
    use crate::source::{Constellation, ContinuousFamily, ContinuousSource};

    fn gaussian(p: f64) -> Source {
        ContinuousSource::new(ContinuousFamily::GaussianZeroMean, p).unwrap().into()
    }

    #[test]
    fn kernel_recurrence_matches_direct_evaluation() {
        let grid = QuadratureGrid::new(-18.0, 18.0, 4097).unwrap();
        for (mu, sigma) in [(0.0, 1.0), (9.9999, 1.0), (-3.3, 0.4), (17.0, 2.0), (-25.0, 1.0)] {
            let mut row = vec![0.0; grid.len()];
            for_each_kernel(&grid, mu, sigma, |k, g| row[k] = g);
            for (k, &g) in row.iter().enumerate() {
                let direct = std_normal_pdf((grid.point(k) - mu) / sigma) / sigma;
                let scale = direct.max(1e-300);
                assert!((g - direct).abs() <= 1e-13 * scale, "mu={mu} k={k}: {g} vs {direct}");
            }
        }
    }

    #[test]
    fn output_pdf_examples() {
        let ch = Channel::default();
        let point: Source = ParticleSource::point_mass(0.0).unwrap().into();
        assert!((output_pdf(&point, &ch, 0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);

        let bpsk: Source = Constellation::Bpsk.source(1e4).unwrap().into();
        let v = output_pdf(&bpsk, &ch, 0.0).unwrap();
        // both components sit at a(+-100) = +-(10 - 4.1e-8): f_G(9.99999996)
        let want = std_normal_pdf(ch.distort(100.0).unwrap());
        assert!((v / want - 1.0).abs() < 1e-12);
        assert!(v > 7.6e-23 && v < 7.9e-23);

        let g = gaussian(100.0);
        let grid = default_grid(&g, &ch, DEFAULT_POINTS).unwrap();
        let mix = OutputMixture::new(&g, &ch).unwrap();
        let total = grid.integrate(&mix.density_on(&grid));
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn output_entropy_examples() {
        let ch = Channel::default();
        let grid = QuadratureGrid::for_channel(&ch, DEFAULT_POINTS).unwrap();
        let point: Source = ParticleSource::point_mass(0.0).unwrap().into();
        let h = output_entropy(&point, &ch, &grid).unwrap();
        assert!((h - 2.047_095_585_180_641).abs() < 1e-9);

        let bpsk: Source = Constellation::Bpsk.source(1e6).unwrap().into();
        let h = output_entropy(&bpsk, &ch, &grid).unwrap();
        assert!((h - 3.047_095_585_180_641).abs() < 1e-9, "{h}");

        let g = gaussian(100.0);
        let coarse = output_entropy(&g, &ch, &grid).unwrap();
        let fine = output_entropy(&g, &ch, &grid.refined()).unwrap();
        assert!((coarse - fine).abs() < 1e-6);
    }

    #[test]
    fn mutual_information_examples() {
        let awgn = Channel::identity(1.0).unwrap();
        let g = gaussian(1.0);
        let grid = default_grid(&g, &awgn, DEFAULT_POINTS).unwrap();
        let r = mutual_information(&g, &awgn, &grid).unwrap();
        assert!((r.mutual_information - 0.5).abs() < 1e-3);
        assert_eq!(r.mutual_information, r.output_entropy - r.conditional_entropy);

        let ch = Channel::default();
        let grid = QuadratureGrid::for_channel(&ch, DEFAULT_POINTS).unwrap();
        let r = mutual_information(&gaussian(130.0), &ch, &grid).unwrap();
        assert!((r.mutual_information - 2.44).abs() < 0.02, "{}", r.mutual_information);
        assert!(r.quadrature_error_estimate < 1e-8);

        let bpsk: Source = Constellation::Bpsk.source(1e4).unwrap().into();
        let r = mutual_information(&bpsk, &ch, &grid).unwrap();
        assert!(r.mutual_information >= 0.999 && r.mutual_information <= 1.0);
    }

    #[test]
    fn coverage_is_enforced() {
        let ch = Channel::default();
        let narrow = QuadratureGrid::new(-5.0, 5.0, 1025).unwrap();
        let bpsk: Source = Constellation::Bpsk.source(100.0).unwrap().into();
        assert!(matches!(
            mutual_information(&bpsk, &ch, &narrow),
            Err(Error::Coverage { .. })
        ));
        assert!(output_pdf(&bpsk, &ch, f64::NAN).is_err());
    }

    #[test]
    fn merging_duplicates_leaves_information_unchanged() {
        let ch = Channel::default();
        let grid = QuadratureGrid::for_channel(&ch, DEFAULT_POINTS).unwrap();
        let split = ParticleSource::new(vec![-4.0, 1.0, 1.0, 6.0], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let joined = ParticleSource::new(vec![-4.0, 1.0, 6.0], vec![0.1, 0.5, 0.4]).unwrap();
        let a = mutual_information(&split.into(), &ch, &grid).unwrap().mutual_information;
        let b = mutual_information(&joined.into(), &ch, &grid).unwrap().mutual_information;
        assert!((a - b).abs() < 1e-9);
    }
}
