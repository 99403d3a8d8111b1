//! Uniform-linear-array responses and the sparse geometric multipath channel.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Antenna and RF-chain counts of one link.
///
/// Both ends use as many RF chains as there are data streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemDims {
    pub nt: usize,
    pub nr: usize,
    pub nt_rf: usize,
    pub nr_rf: usize,
    pub ns: usize,
}

impl SystemDims {
    pub fn new(nt: usize, nr: usize, n_rf: usize) -> Result<Self> {
        let dims = Self {
            nt,
            nr,
            nt_rf: n_rf,
            nr_rf: n_rf,
            ns: n_rf,
        };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns == 0 {
            return Err(Error::InvalidDimension("need at least one stream".into()));
        }
        if self.nt_rf != self.ns || self.nr_rf != self.ns {
            return Err(Error::InvalidDimension(format!(
                "RF chains ({}, {}) must equal stream count {}",
                self.nt_rf, self.nr_rf, self.ns
            )));
        }
        if self.nt < self.nt_rf || self.nr < self.nr_rf {
            return Err(Error::InvalidDimension(format!(
                "{}x{} array cannot host {} RF chains",
                self.nr, self.nt, self.ns
            )));
        }
        Ok(())
    }
}

/// Element spacing of a ULA in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    spacing_over_wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(spacing_over_wavelength: f64) -> Result<Self> {
        if !(spacing_over_wavelength > 0.0 && spacing_over_wavelength.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "antenna spacing must be positive, got {spacing_over_wavelength}"
            )));
        }
        Ok(Self {
            spacing_over_wavelength,
        })
    }

    pub fn half_wavelength() -> Self {
        Self {
            spacing_over_wavelength: 0.5,
        }
    }

    pub fn spacing_over_wavelength(&self) -> f64 {
        self.spacing_over_wavelength
    }

    /// Phase advance per element per unit of `sin(angle)`: `2 pi d / lambda`.
    pub fn kd(&self) -> f64 {
        2.0 * PI * self.spacing_over_wavelength
    }
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self::half_wavelength()
    }
}

/// Gains and angles of the propagation paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub gains: Vec<Complex64>,
    pub aod: Vec<f64>,
    pub aoa: Vec<f64>,
}

impl PathSet {
    pub fn new(gains: Vec<Complex64>, aod: Vec<f64>, aoa: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidParameter("need at least one path".into()));
        }
        if gains.len() != aod.len() || gains.len() != aoa.len() {
            return Err(Error::InvalidDimension(format!(
                "path lists disagree: {} gains, {} AoDs, {} AoAs",
                gains.len(),
                aod.len(),
                aoa.len()
            )));
        }
        Ok(Self { gains, aod, aoa })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// An `nr x nt` narrowband channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    h: CMatrix,
}

impl ChannelMatrix {
    pub fn new(h: CMatrix) -> Result<Self> {
        if h.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("channel has non-finite entries".into()));
        }
        Ok(Self { h })
    }

    pub fn nr(&self) -> usize {
        self.h.rows()
    }

    pub fn nt(&self) -> usize {
        self.h.cols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }
}

/// Unit-norm ULA response: element `m` is `exp(j m kd sin(angle)) / sqrt(n)`.
pub fn ula_response(n_antennas: usize, angle: f64, geometry: ArrayGeometry) -> Result<Vec<Complex64>> {
    if n_antennas == 0 {
        return Err(Error::InvalidDimension("array needs at least one antenna".into()));
    }
    let amp = 1.0 / (n_antennas as f64).sqrt();
    let step = geometry.kd() * angle.sin();
    Ok((0..n_antennas)
        .map(|m| Complex64::from_polar(amp, m as f64 * step))
        .collect())
}

/// Draws `l` paths: CN(0,1) gains, then departure angles, then arrival
/// angles, all angles uniform on `[0, pi]`.
pub fn draw_paths<R: Rng + ?Sized>(l: usize, rng: &mut R) -> Result<PathSet> {
    if l == 0 {
        return Err(Error::InvalidParameter("path count must be at least 1".into()));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let gains = (0..l)
        .map(|_| {
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            Complex64::new(x * scale, y * scale)
        })
        .collect();
    let aod = (0..l).map(|_| rng.random_range(0.0..=PI)).collect();
    let aoa = (0..l).map(|_| rng.random_range(0.0..=PI)).collect();
    PathSet::new(gains, aod, aoa)
}

/// `H = sqrt(nt nr / L) * sum_l alpha_l f_r(aoa_l) f_t(aod_l)^H`.
pub fn assemble_channel(dims: &SystemDims, paths: &PathSet, geometry: ArrayGeometry) -> Result<ChannelMatrix> {
    dims.validate()?;
    if paths.is_empty() || paths.gains.len() != paths.aod.len() || paths.gains.len() != paths.aoa.len() {
        return Err(Error::InvalidDimension("malformed path set".into()));
    }
    let l = paths.len();
    let norm = ((dims.nt * dims.nr) as f64 / l as f64).sqrt();
    let mut h = CMatrix::zeros(dims.nr, dims.nt);
    for i in 0..l {
        let fr = ula_response(dims.nr, paths.aoa[i], geometry)?;
        let ft = ula_response(dims.nt, paths.aod[i], geometry)?;
        let g = paths.gains[i] * norm;
        for (c, t) in ft.iter().enumerate() {
            let w = g * t.conj();
            for (dst, r) in h.column_mut(c).iter_mut().zip(&fr) {
                *dst += r * w;
            }
        }
    }
    ChannelMatrix::new(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn broadside_and_endfire_responses() {
        let g = ArrayGeometry::half_wavelength();
        let v = ula_response(2, 0.0, g).unwrap();
        assert!((v[0] - Complex64::new(SQRT_HALF, 0.0)).norm() < 1e-15);
        assert!((v[1] - Complex64::new(SQRT_HALF, 0.0)).norm() < 1e-15);

        let v = ula_response(2, PI / 2.0, g).unwrap();
        assert!((v[0] - Complex64::new(SQRT_HALF, 0.0)).norm() < 1e-15);
        assert!((v[1] - Complex64::new(-SQRT_HALF, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn response_has_constant_element_ratio() {
        let angle = 3.0 * PI / 4.0;
        let v = ula_response(8, angle, ArrayGeometry::half_wavelength()).unwrap();
        let norm: f64 = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let ratio = Complex64::from_polar(1.0, PI * angle.sin());
        for w in v.windows(2) {
            assert!((w[1] / w[0] - ratio).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_antennas_rejected() {
        assert!(matches!(
            ula_response(0, 0.1, ArrayGeometry::default()),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn geometry_rejects_nonpositive_spacing() {
        assert!(ArrayGeometry::new(0.0).is_err());
        assert!(ArrayGeometry::new(-0.5).is_err());
        assert!(ArrayGeometry::new(f64::NAN).is_err());
    }

    #[test]
    fn dims_enforce_rf_chain_rules() {
        assert!(SystemDims::new(64, 16, 2).is_ok());
        assert!(SystemDims::new(64, 16, 0).is_err());
        assert!(SystemDims::new(1, 16, 2).is_err());
        let mut d = SystemDims::new(64, 16, 2).unwrap();
        d.nr_rf = 3;
        assert!(d.validate().is_err());
    }

    #[test]
    fn path_draws_are_reproducible_and_in_range() {
        let a = draw_paths(3, &mut ChaCha8Rng::seed_from_u64(17)).unwrap();
        let b = draw_paths(3, &mut ChaCha8Rng::seed_from_u64(17)).unwrap();
        assert_eq!(a, b);
        assert!(a.aod.iter().chain(&a.aoa).all(|&x| (0.0..=PI).contains(&x)));
        assert!(draw_paths(0, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn path_gain_second_moment_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut acc = 0.0;
        let mut n = 0usize;
        for _ in 0..100_000 {
            let p = draw_paths(3, &mut rng).unwrap();
            acc += p.gains.iter().map(Complex64::norm_sqr).sum::<f64>();
            n += p.len();
        }
        let mean = acc / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "E|alpha|^2 = {mean}");
    }

    #[test]
    fn single_unit_path_has_expected_norm() {
        let dims = SystemDims::new(64, 16, 2).unwrap();
        let paths = PathSet::new(vec![Complex64::new(1.0, 0.0)], vec![0.3], vec![1.2]).unwrap();
        let h = assemble_channel(&dims, &paths, ArrayGeometry::default()).unwrap();
        let fro = h.matrix().frobenius_norm_sqr().sqrt();
        assert!((fro - (64.0f64 * 16.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn zero_gains_give_zero_channel() {
        let dims = SystemDims::new(8, 4, 1).unwrap();
        let paths = PathSet::new(
            vec![Complex64::new(0.0, 0.0); 3],
            vec![0.1, 0.2, 0.3],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let h = assemble_channel(&dims, &paths, ArrayGeometry::default()).unwrap();
        assert_eq!(h.matrix().frobenius_norm_sqr(), 0.0);
    }

    #[test]
    fn mismatched_paths_rejected() {
        assert!(matches!(
            PathSet::new(vec![Complex64::new(1.0, 0.0)], vec![0.1, 0.2], vec![0.3]),
            Err(Error::InvalidDimension(_))
        ));
    }

    // Scalar triple loop straight from the channel formula.
    fn channel_oracle(nr: usize, nt: usize, p: &PathSet) -> Vec<Vec<Complex64>> {
        let l = p.len() as f64;
        let scale = ((nt * nr) as f64 / l).sqrt();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); nt]; nr];
        for (r, row) in out.iter_mut().enumerate() {
            for (t, entry) in row.iter_mut().enumerate() {
                for i in 0..p.len() {
                    let ar = Complex64::from_polar(1.0 / (nr as f64).sqrt(), r as f64 * PI * p.aoa[i].sin());
                    let at = Complex64::from_polar(1.0 / (nt as f64).sqrt(), t as f64 * PI * p.aod[i].sin());
                    *entry += scale * p.gains[i] * ar * at.conj();
                }
            }
        }
        out
    }

    #[test]
    fn assembly_matches_scalar_oracle() {
        let dims = SystemDims::new(64, 16, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let p = draw_paths(3, &mut rng).unwrap();
            let h = assemble_channel(&dims, &p, ArrayGeometry::default()).unwrap();
            let oracle = channel_oracle(16, 64, &p);
            for (r, row) in oracle.iter().enumerate() {
                for (t, want) in row.iter().enumerate() {
                    assert!((h.matrix()[(r, t)] - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mean_channel_energy_is_nt_nr() {
        let dims = SystemDims::new(64, 16, 2).unwrap();
        let mut total = 0.0;
        let trials = 10_000;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = draw_paths(3, &mut rng).unwrap();
            total += assemble_channel(&dims, &p, ArrayGeometry::default())
                .unwrap()
                .matrix()
                .frobenius_norm_sqr();
        }
        let mean = total / trials as f64;
        assert!((mean / 1024.0 - 1.0).abs() < 0.03, "E|H|^2 = {mean}");
    }
}
