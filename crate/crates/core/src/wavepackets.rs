//! Sampled wavefunctions and aperture functions on a uniform 1D grid.
//!
//! Integrals use the rectangle rule: ∫f ≈ h Σ f(x_i).

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;
/// Packets must keep this many widths between their center and the grid edge.
pub const PACKET_MARGIN: f64 = 5.0;
pub const DEFAULT_WSW_TOL: f64 = 1e-10;
pub const DEFAULT_APERTURE_TOL: f64 = 1e-8;
pub const DEFAULT_APERTURE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    start: f64,
    step: f64,
    len: usize,
}

impl Grid {
    /// `len` evenly spaced points from `start` to `end` inclusive.
    pub fn new(start: f64, end: f64, len: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || end <= start {
            return Err(Error::InvalidGrid(format!("extent [{start}, {end}]")));
        }
        if len < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("{len} points, need at least {MIN_POINTS}")));
        }
        Ok(Grid { start, step: (end - start) / (len - 1) as f64, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.point(i))
    }

    /// Index of the grid point at `x`, allowing a rounding slack of 1e-6 h.
    pub fn index_of(&self, x: f64) -> Result<usize> {
        let t = (x - self.start) / self.step;
        let i = t.round();
        if !t.is_finite() || (t - i).abs() > 1e-6 || i < 0.0 || i as usize >= self.len {
            return Err(Error::OffGrid(x));
        }
        Ok(i as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: samples.len() });
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("grid function samples"));
        }
        Ok(GridFunction { grid, samples })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn value_at(&self, x: f64) -> Result<Complex64> {
        Ok(self.samples[self.grid.index_of(x)?])
    }

    pub fn norm(&self) -> f64 {
        (self.grid.step * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-10
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, z: Complex64) -> Self {
        GridFunction { grid: self.grid, samples: self.samples.iter().map(|&s| s * z).collect() }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    /// Pointwise multiplication by `f(x)`, e.g. a phase.
    pub fn modulate(&self, f: impl Fn(f64) -> Complex64) -> Self {
        GridFunction {
            grid: self.grid,
            samples: self.samples.iter().zip(self.grid.points()).map(|(&s, x)| s * f(x)).collect(),
        }
    }

    /// Writes `x,re,im` rows with a header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "re", "im"])?;
        for (x, z) in self.grid.points().zip(&self.samples) {
            wr.write_record(&[x.to_string(), z.re.to_string(), z.im.to_string()])?;
        }
        wr.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    /// Reads `x,re,im` rows; the x column must be uniformly spaced.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            x: f64,
            re: f64,
            im: f64,
        }
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["x", "re", "im"] {
            return Err(Error::Csv(format!(
                "expected header x,re,im, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let rows: Vec<Row> = rd.deserialize().collect::<std::result::Result<_, _>>()?;
        if rows.len() < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("{} points, need at least {MIN_POINTS}", rows.len())));
        }
        let grid = Grid::new(rows[0].x, rows[rows.len() - 1].x, rows.len())?;
        for (i, row) in rows.iter().enumerate() {
            if (row.x - grid.point(i)).abs() > 1e-9 * grid.step.max(1.0) {
                return Err(Error::InvalidGrid(format!("non-uniform spacing at row {i}")));
            }
        }
        Self::new(grid, rows.iter().map(|r| Complex64::new(r.re, r.im)).collect())
    }
}

/// ∫ f* g by the rectangle rule.
pub fn inner(f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    let s: Complex64 = f.samples.iter().zip(&g.samples).map(|(a, b)| a.conj() * b).sum();
    Ok(s * f.grid.step)
}

/// Normalized Gaussian ψ(x) ∝ exp(−(x−c)²/(4σ²)), so |ψ|² has standard deviation σ.
pub fn gaussian_packet(center: f64, width: f64, grid: &Grid) -> Result<GridFunction> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidWidth(width));
    }
    if !center.is_finite()
        || center - PACKET_MARGIN * width < grid.start()
        || center + PACKET_MARGIN * width > grid.end()
    {
        return Err(Error::PacketClipped { center, width });
    }
    let f = GridFunction::from_fn(*grid, |x| {
        let d = (x - center) / width;
        Complex64::new((-d * d / 4.0).exp(), 0.0)
    })?;
    f.normalized()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WswReport {
    /// max over pairs i<j and grid points of |ψ_i(x) ψ_j(x)|.
    pub max_product: f64,
    /// (i, j, max_x |ψ_i ψ_j|) per pair.
    pub pairs: Vec<(usize, usize, f64)>,
    pub tol: f64,
    pub pass: bool,
}

pub fn wsw_report(fns: &[GridFunction], tol: f64) -> WswReport {
    let mut pairs = Vec::new();
    for i in 0..fns.len() {
        for j in i + 1..fns.len() {
            let m = fns[i].samples.iter().zip(&fns[j].samples).map(|(a, b)| (a * b).norm()).fold(0.0, f64::max);
            pairs.push((i, j, m));
        }
    }
    let max_product = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    WswReport { max_product, pairs, tol, pass: max_product <= tol }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApertureFunction {
    grid: Grid,
    samples: Vec<u8>,
}

impl ApertureFunction {
    pub fn new(grid: Grid, samples: Vec<u8>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: samples.len() });
        }
        if samples.iter().any(|&s| s > 1) {
            return Err(Error::InvalidGrid("aperture samples must be 0 or 1".into()));
        }
        Ok(ApertureFunction { grid, samples })
    }

    pub fn empty(grid: Grid) -> Self {
        ApertureFunction { grid, samples: vec![0; grid.len()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    /// Pointwise product, exact.
    pub fn product(&self, other: &ApertureFunction) -> Result<ApertureFunction> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(ApertureFunction {
            grid: self.grid,
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect(),
        })
    }

    /// (first, last) grid indices of the support, if any.
    pub fn support(&self) -> Option<(usize, usize)> {
        let first = self.samples.iter().position(|&s| s == 1)?;
        let last = self.samples.iter().rposition(|&s| s == 1)?;
        Some((first, last))
    }

    pub fn is_contiguous(&self) -> bool {
        match self.support() {
            Some((a, b)) => self.samples[a..=b].iter().all(|&s| s == 1),
            None => true,
        }
    }
}

/// Indicator of |f(x)| ≥ threshold · max|f|.
pub fn build_aperture(f: &GridFunction, threshold: f64) -> Result<ApertureFunction> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidThreshold(threshold));
    }
    let cut = threshold * f.peak();
    Ok(ApertureFunction { grid: f.grid, samples: f.samples.iter().map(|z| (z.norm() >= cut) as u8).collect() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApertureReport {
    /// A_i A_j = δ_ij A_j holds exactly for all pairs.
    pub products_exact: bool,
    /// max |A_i ψ_j − δ_ij ψ_j| over points and pairs.
    pub pointwise_amplitude: f64,
    /// max |A_i |ψ_j|² − δ_ij |ψ_j|²| over points and pairs.
    pub pointwise_density: f64,
    /// ∫ A_i |ψ_j|², row i, column j.
    pub integrals: Vec<Vec<f64>>,
    /// max |∫ A_i |ψ_j|² − δ_ij|.
    pub integral_error: f64,
    pub tol: f64,
    /// Exact products, density residual and integral error all within `tol`.
    pub pass: bool,
}

/// Checks the aperture conditions. The pointwise test is made on densities,
/// where the default threshold leaves residuals of order threshold² · peak².
pub fn aperture_report(apertures: &[ApertureFunction], packets: &[GridFunction], tol: f64) -> Result<ApertureReport> {
    if apertures.len() != packets.len() {
        return Err(Error::DimensionMismatch { expected: packets.len(), got: apertures.len() });
    }
    let mut products_exact = true;
    for (i, a) in apertures.iter().enumerate() {
        for (j, b) in apertures.iter().enumerate() {
            let p = a.product(b)?;
            products_exact &= if i == j { p.samples == b.samples } else { p.samples.iter().all(|&s| s == 0) };
        }
    }
    let mut pointwise_amplitude = 0.0f64;
    let mut pointwise_density = 0.0f64;
    let mut integrals = vec![vec![0.0; packets.len()]; apertures.len()];
    let mut integral_error = 0.0f64;
    for (i, a) in apertures.iter().enumerate() {
        for (j, f) in packets.iter().enumerate() {
            if a.grid != f.grid {
                return Err(Error::GridMismatch);
            }
            let delta = (i == j) as u8 as f64;
            let mut integral = 0.0;
            for (&m, z) in a.samples.iter().zip(&f.samples) {
                let m = m as f64;
                pointwise_amplitude = pointwise_amplitude.max((z * (m - delta)).norm());
                pointwise_density = pointwise_density.max(z.norm_sqr() * (m - delta).abs());
                integral += m * z.norm_sqr();
            }
            integral *= f.grid.step;
            integrals[i][j] = integral;
            integral_error = integral_error.max((integral - delta).abs());
        }
    }
    let pass = products_exact && pointwise_density <= tol && integral_error <= tol;
    Ok(ApertureReport { products_exact, pointwise_amplitude, pointwise_density, integrals, integral_error, tol, pass })
}

/// Three physical packets, their auxiliary partners and the apertures.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketLayout {
    pub grid: Grid,
    pub physical: [GridFunction; 3],
    pub auxiliary: [GridFunction; 3],
    pub apertures: [ApertureFunction; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    pub centers: [f64; 3],
    pub widths: [f64; 3],
    pub aperture_threshold: f64,
}

impl Default for LayoutSpec {
    fn default() -> Self {
        LayoutSpec {
            start: -35.0,
            end: 35.0,
            points: 1401,
            centers: [-20.0, 0.0, 20.0],
            widths: [1.0; 3],
            aperture_threshold: DEFAULT_APERTURE_THRESHOLD,
        }
    }
}

impl PacketLayout {
    /// Unit-width packets at −20, 0, 20 on [−35, 35] with 1401 points.
    pub fn standard() -> Result<Self> {
        Self::from_spec(&LayoutSpec::default())
    }

    /// Auxiliary wavefunctions default to copies of the physical ones.
    pub fn from_spec(spec: &LayoutSpec) -> Result<Self> {
        let grid = Grid::new(spec.start, spec.end, spec.points)?;
        let mk = |r: usize| gaussian_packet(spec.centers[r], spec.widths[r], &grid);
        let physical = [mk(0)?, mk(1)?, mk(2)?];
        let ap = |r: usize| build_aperture(&physical[r], spec.aperture_threshold);
        let apertures = [ap(0)?, ap(1)?, ap(2)?];
        Ok(PacketLayout { grid, auxiliary: physical.clone(), physical, apertures })
    }

    /// Replaces the auxiliary wavefunctions; each must be normalized on the same grid.
    pub fn with_auxiliary(mut self, aux: [GridFunction; 3]) -> Result<Self> {
        for f in &aux {
            if f.grid != self.grid {
                return Err(Error::GridMismatch);
            }
            if !f.is_normalized() {
                return Err(Error::NotNormalized(f.norm()));
            }
        }
        self.auxiliary = aux;
        Ok(self)
    }

    pub fn wsw(&self, tol: f64) -> WswReport {
        wsw_report(&self.physical, tol)
    }

    pub fn aperture(&self, tol: f64) -> Result<ApertureReport> {
        aperture_report(&self.apertures, &self.physical, tol)
    }

    /// Physical packet values ψ_1(x), ψ_2(x), ψ_3(x).
    pub fn packet_values(&self, x: f64) -> Result<[Complex64; 3]> {
        Ok([self.physical[0].value_at(x)?, self.physical[1].value_at(x)?, self.physical[2].value_at(x)?])
    }

    /// One normalized function per point: a grid delta at the point,
    /// orthogonalized against the physical packets and the earlier probes.
    pub fn probe_functions(&self, points: &[f64]) -> Result<Vec<GridFunction>> {
        let mut basis: Vec<GridFunction> = self.physical.to_vec();
        let mut out = Vec::with_capacity(points.len());
        for &x in points {
            let i = self.grid.index_of(x)?;
            let mut samples = vec![Complex64::new(0.0, 0.0); self.grid.len()];
            samples[i] = Complex64::new(1.0 / self.grid.step.sqrt(), 0.0);
            let mut f = GridFunction::new(self.grid, samples)?;
            for _ in 0..2 {
                for b in &basis {
                    let c = inner(b, &f)?;
                    f = GridFunction {
                        grid: self.grid,
                        samples: f.samples.iter().zip(&b.samples).map(|(s, t)| s - c * t).collect(),
                    };
                }
            }
            let f = f.normalized()?;
            basis.push(f.clone());
            out.push(f);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::new(-35.0, 35.0, 1401).unwrap()
    }

    fn overlap_oracle(d: f64, sigma: f64) -> f64 {
        (-d * d / (8.0 * sigma * sigma)).exp()
    }

    #[test]
    fn grid_basics() {
        let g = grid();
        assert!((g.step() - 0.05).abs() < 1e-15);
        assert_eq!(g.index_of(20.0).unwrap(), 1100);
        assert!(matches!(g.index_of(20.01), Err(Error::OffGrid(_))));
        assert!(matches!(g.index_of(40.0), Err(Error::OffGrid(_))));
        assert!(Grid::new(0.0, 1.0, 8).is_err());
        assert!(Grid::new(1.0, 0.0, 100).is_err());
    }

    #[test]
    fn gaussian_norm_and_self_overlap() {
        let f = gaussian_packet(0.0, 1.0, &grid()).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-10);
        assert!((inner(&f, &f).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn gaussian_overlap_matches_analytic_formula() {
        let g = grid();
        for d in [0.5, 1.0, 2.0, 4.0] {
            let a = gaussian_packet(0.0, 1.0, &g).unwrap();
            let b = gaussian_packet(d, 1.0, &g).unwrap();
            let o = inner(&a, &b).unwrap();
            assert!((o.re - overlap_oracle(d, 1.0)).abs() < 1e-10, "d={d}");
        }
        let a = gaussian_packet(-10.0, 1.0, &g).unwrap();
        let b = gaussian_packet(10.0, 1.0, &g).unwrap();
        assert!(inner(&a, &b).unwrap().norm() <= 1e-12);
        assert!(overlap_oracle(20.0, 1.0) <= 1e-12);
    }

    #[test]
    fn gaussian_rejects_clipping_and_bad_width() {
        let g = grid();
        assert!(matches!(gaussian_packet(32.0, 1.0, &g), Err(Error::PacketClipped { .. })));
        assert!(matches!(gaussian_packet(0.0, 0.0, &g), Err(Error::InvalidWidth(_))));
    }

    #[test]
    fn standard_layout_passes_gates() {
        let l = PacketLayout::standard().unwrap();
        let w = l.wsw(DEFAULT_WSW_TOL);
        assert!(w.pass, "{w:?}");
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((inner(&l.physical[i], &l.physical[j]).unwrap().norm() - want).abs() <= DEFAULT_WSW_TOL);
            }
        }
        let a = l.aperture(DEFAULT_APERTURE_TOL).unwrap();
        assert!(a.pass, "{a:?}");
        assert!(a.products_exact);
    }

    #[test]
    fn wsw_failures_and_vacuous_case() {
        let g = grid();
        let f = gaussian_packet(0.0, 1.0, &g).unwrap();
        let r = wsw_report(&[f.clone(), f.clone()], 1e-10);
        assert!(!r.pass);
        assert!((r.max_product - f.peak().powi(2)).abs() < 1e-12);
        let one = wsw_report(&[f], 1e-10);
        assert!(one.pass);
        assert_eq!(one.max_product, 0.0);
    }

    #[test]
    fn aperture_shape() {
        let f = gaussian_packet(0.0, 1.0, &grid()).unwrap();
        let a = build_aperture(&f, 1e-6).unwrap();
        assert!(a.is_contiguous());
        assert_eq!(a.product(&a).unwrap(), a);
        let (lo, hi) = a.support().unwrap();
        // |x| ≤ 2σ sqrt(ln 1e6) ≈ 7.43
        assert!((grid().point(lo) + 7.4).abs() < 0.06 && (grid().point(hi) - 7.4).abs() < 0.06);
        assert!(build_aperture(&f, 0.0).is_err());
    }

    #[test]
    fn swapped_or_empty_apertures_fail() {
        let l = PacketLayout::standard().unwrap();
        let swapped = [l.apertures[1].clone(), l.apertures[0].clone(), l.apertures[2].clone()];
        let r = aperture_report(&swapped, &l.physical, 1e-8).unwrap();
        assert!(!r.pass);
        assert!(r.integrals[0][0] < 1e-12);
        let empty = [ApertureFunction::empty(l.grid), l.apertures[1].clone(), l.apertures[2].clone()];
        let r = aperture_report(&empty, &l.physical, 1e-8).unwrap();
        assert!(!r.pass);
        assert_eq!(r.integrals[0][0], 0.0);
    }

    #[test]
    fn probe_functions_are_orthonormal_to_packets() {
        let l = PacketLayout::standard().unwrap();
        let p = l.probe_functions(&[32.0, 10.0]).unwrap();
        for f in &p {
            assert!(f.is_normalized());
            for g in &l.physical {
                assert!(inner(g, f).unwrap().norm() < 1e-14);
            }
        }
        assert!(inner(&p[0], &p[1]).unwrap().norm() < 1e-14);
        assert!((p[0].value_at(32.0).unwrap().re - 1.0 / 0.05f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn csv_round_trip() {
        let f = gaussian_packet(0.0, 1.0, &Grid::new(-6.0, 6.0, 41).unwrap())
            .unwrap()
            .modulate(|x| Complex64::from_polar(1.0, 0.3 * x));
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"x,re,im\n"));
        let g = GridFunction::read_csv(&buf[..]).unwrap();
        assert_eq!(g.samples(), f.samples());
        assert!(GridFunction::read_csv(&b"a,b,c\n1,2,3\n"[..]).is_err());
    }

    proptest! {
        #[test]
        fn inner_is_conjugate_symmetric_and_positive(
            c1 in -10.0..10.0f64, c2 in -10.0..10.0f64, k in -2.0..2.0f64, w in 0.5..2.0f64,
        ) {
            let g = grid();
            let f = gaussian_packet(c1, w, &g).unwrap().modulate(|x| Complex64::from_polar(1.0, k * x));
            let h = gaussian_packet(c2, 1.0, &g).unwrap();
            let a = inner(&f, &h).unwrap();
            let b = inner(&h, &f).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-14);
            prop_assert!(inner(&f, &f).unwrap().re > 0.0);
        }
    }
}
