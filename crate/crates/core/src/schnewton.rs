//! Split-step Fourier integrator for the one-dimensional Schrödinger-Newton
//! equation
//!
//! `i dpsi/dt = [-(1/2m) d^2/dx^2 + Phi[|psi|^2] + V] psi`,
//! `Phi(x) = -g sum_x' dx |psi(x')|^2 K(x - x')`,
//!
//! with `hbar = 1`, a periodic box and a regularized interaction kernel `K`.
//! Each step applies half a potential kick, a full kinetic step in Fourier
//! space and another half kick with the potential of the updated density
//! (Strang splitting). The potential computed at the end of a step is reused
//! for the first kick of the next one.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use rayon::join;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

pub const MIN_POINTS: usize = 64;
/// Largest allowed `dt * k_max^2 / (2m)`.
pub const STABILITY_LIMIT: f64 = 0.5;
pub const NORM_TOL: f64 = 1e-8;
pub const DEFAULT_DT: f64 = 5e-4;
pub const DUMP_MAGIC: &[u8; 4] = b"SNW1";

/// Wavefunction sampled at `x_i = (i - n/2) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunctionGrid {
    dx: f64,
    amplitudes: Vec<C64>,
}

fn check_grid(n: usize, dx: f64) -> Result<()> {
    if n < MIN_POINTS || !n.is_power_of_two() {
        return Err(Error::Parameter(format!("grid needs a power of two >= {MIN_POINTS} points, got {n}")));
    }
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::Parameter(format!("grid spacing must be positive, got {dx}")));
    }
    Ok(())
}

impl WaveFunctionGrid {
    pub fn new(amplitudes: Vec<C64>, dx: f64) -> Result<Self> {
        check_grid(amplitudes.len(), dx)?;
        let g = Self { dx, amplitudes };
        let norm = g.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Invariant(format!("wavefunction norm is {norm}, expected 1")));
        }
        Ok(g)
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(mut amplitudes: Vec<C64>, dx: f64) -> Result<Self> {
        check_grid(amplitudes.len(), dx)?;
        let norm = (dx * amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Parameter("cannot normalize a zero wavefunction".into()));
        }
        for z in &mut amplitudes {
            *z /= norm;
        }
        Ok(Self { dx, amplitudes })
    }

    /// Gaussian packet `exp(-(x - center)^2 / (4 width^2) + i k x)`, with
    /// position spread `width`.
    pub fn gaussian(n: usize, dx: f64, center: f64, width: f64, momentum: f64) -> Result<Self> {
        check_grid(n, dx)?;
        if !(width > 0.0) {
            return Err(Error::Parameter(format!("width must be positive, got {width}")));
        }
        let amps = (0..n)
            .map(|i| {
                let x = position(i, n, dx);
                C64::from_polar((-(x - center).powi(2) / (4.0 * width * width)).exp(), momentum * x)
            })
            .collect();
        Self::normalized(amps, dx)
    }

    pub fn n_points(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points()).map(move |i| position(i, self.n_points(), self.dx))
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.dx * self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn mean_position(&self) -> f64 {
        self.dx * self.positions().zip(&self.amplitudes).map(|(x, z)| x * z.norm_sqr()).sum::<f64>()
    }

    /// Standard deviation of the position distribution.
    pub fn width(&self) -> f64 {
        let mean = self.mean_position();
        let var = self.dx
            * self.positions().zip(&self.amplitudes).map(|(x, z)| (x - mean).powi(2) * z.norm_sqr()).sum::<f64>();
        var.max(0.0).sqrt()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        self.check_same_grid(other)?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum::<C64>() * self.dx)
    }

    /// `sqrt(dx sum |a - b|^2)`.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok((self.dx * self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>())
            .sqrt())
    }

    /// Cyclic shift by `bins` grid points towards larger `x`.
    pub fn translate(&self, bins: isize) -> Self {
        let n = self.n_points() as isize;
        let mut amps = self.amplitudes.clone();
        amps.rotate_right(bins.rem_euclid(n) as usize);
        Self { dx: self.dx, amplitudes: amps }
    }

    /// Probability within `fraction` of the box length of either edge.
    pub fn edge_mass(&self, fraction: f64) -> f64 {
        let n = self.n_points();
        let band = ((n as f64) * fraction).ceil() as usize;
        self.dx * self.amplitudes.iter().enumerate()
            .filter(|(i, _)| *i < band || *i >= n - band)
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.n_points() != other.n_points() || self.dx != other.dx {
            return Err(Error::Dimension("wavefunctions live on different grids".into()));
        }
        Ok(())
    }

    /// Binary dump: `"SNW1"`, `u32` point count, `f64` spacing, then the
    /// amplitudes as interleaved `f64` real and imaginary parts, all little
    /// endian.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.n_points() as u32).to_le_bytes())?;
        w.write_all(&self.dx.to_le_bytes())?;
        for z in &self.amplitudes {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != DUMP_MAGIC {
            return Err(Error::Parse { path: "header".into(), message: "bad magic, expected SNW1".into() });
        }
        let n = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
        let dx = f64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
        check_grid(n, dx)?;
        let mut body = vec![0u8; 16 * n];
        r.read_exact(&mut body)?;
        let amps = body
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Self::new(amps, dx)
    }
}

fn position(i: usize, n: usize, dx: f64) -> f64 {
    (i as f64 - (n / 2) as f64) * dx
}

/// Angular wavenumbers in FFT order.
fn wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let base = 2.0 * PI / (n as f64 * dx);
    (0..n)
        .map(|j| if j < n / 2 { j as f64 * base } else { (j as f64 - n as f64) * base })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// `1 / sqrt(r^2 + a^2)`.
    #[default]
    SoftCoulomb,
    /// `-|r| / a`: the one-dimensional Newtonian kernel up to a constant.
    Linear1d,
}

impl Kernel {
    pub fn eval(self, r: f64, softening: f64) -> f64 {
        match self {
            Kernel::SoftCoulomb => 1.0 / (r * r + softening * softening).sqrt(),
            Kernel::Linear1d => -r.abs() / softening,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SNParams {
    pub mass: f64,
    pub coupling: f64,
    pub softening: f64,
    pub dt: f64,
    pub kernel: Kernel,
    /// External potential on the grid; empty means zero.
    pub external_potential: Vec<f64>,
}

impl SNParams {
    /// Unit mass, no coupling, softening `2 dx` and the default step.
    pub fn for_grid(grid: &WaveFunctionGrid) -> Self {
        Self {
            mass: 1.0,
            coupling: 0.0,
            softening: 2.0 * grid.dx(),
            dt: DEFAULT_DT,
            kernel: Kernel::SoftCoulomb,
            external_potential: Vec::new(),
        }
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    /// `dt * k_max^2 / (2m)` on the given grid.
    pub fn stability_number(&self, dx: f64) -> f64 {
        self.dt * (PI / dx).powi(2) / (2.0 * self.mass)
    }

    pub fn validate(&self, grid: &WaveFunctionGrid) -> Result<()> {
        let finite = [self.mass, self.coupling, self.softening, self.dt].iter().all(|v| v.is_finite());
        if !finite || !(self.mass > 0.0) || !(self.coupling >= 0.0) || !(self.softening > 0.0) || !(self.dt > 0.0) {
            return Err(Error::Parameter(format!(
                "need mass > 0, coupling >= 0, softening > 0, dt > 0; got {}, {}, {}, {}",
                self.mass, self.coupling, self.softening, self.dt
            )));
        }
        if !self.external_potential.is_empty() && self.external_potential.len() != grid.n_points() {
            return Err(Error::Dimension(format!(
                "external potential has {} samples for a grid of {}",
                self.external_potential.len(),
                grid.n_points()
            )));
        }
        let s = self.stability_number(grid.dx());
        if s > STABILITY_LIMIT {
            return Err(Error::Parameter(format!(
                "step too large: dt k_max^2 / 2m = {s:.4} exceeds {STABILITY_LIMIT}"
            )));
        }
        Ok(())
    }
}

/// Precomputed transforms and phases for one grid and parameter set.
struct Integrator {
    n: usize,
    dx: f64,
    mass: f64,
    coupling: f64,
    dt: f64,
    external: Vec<f64>,
    k2: Vec<f64>,
    kinetic_phase: Vec<C64>,
    kernel_hat: Vec<C64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    fft2: Arc<dyn Fft<f64>>,
    ifft2: Arc<dyn Fft<f64>>,
}

impl Integrator {
    fn new(grid: &WaveFunctionGrid, p: &SNParams) -> Result<Self> {
        p.validate(grid)?;
        let n = grid.n_points();
        let dx = grid.dx();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let fft2 = planner.plan_fft_forward(2 * n);
        let ifft2 = planner.plan_fft_inverse(2 * n);
        let k2: Vec<f64> = wavenumbers(n, dx).iter().map(|k| k * k).collect();
        let kinetic_phase = k2.iter().map(|k2| C64::from_polar(1.0, -p.dt * k2 / (2.0 * p.mass))).collect();
        // kernel on the zero-padded grid: offsets 0..n-1 then -(n-1)..-1
        let mut kernel_hat: Vec<C64> = (0..2 * n)
            .map(|j| {
                let offset = match j {
                    j if j < n => j as f64,
                    j if j == n => return C64::new(0.0, 0.0),
                    j => j as f64 - (2 * n) as f64,
                };
                C64::new(p.kernel.eval(offset * dx, p.softening), 0.0)
            })
            .collect();
        fft2.process(&mut kernel_hat);
        let external = if p.external_potential.is_empty() { vec![0.0; n] } else { p.external_potential.clone() };
        Ok(Self {
            n,
            dx,
            mass: p.mass,
            coupling: p.coupling,
            dt: p.dt,
            external,
            k2,
            kinetic_phase,
            kernel_hat,
            fft,
            ifft,
            fft2,
            ifft2,
        })
    }

    fn potential(&self, amps: &[C64]) -> Vec<f64> {
        if self.coupling == 0.0 {
            return vec![0.0; self.n];
        }
        let mut buf: Vec<C64> = amps.iter().map(|z| C64::new(z.norm_sqr(), 0.0)).collect();
        buf.resize(2 * self.n, C64::new(0.0, 0.0));
        self.fft2.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.ifft2.process(&mut buf);
        let scale = -self.coupling * self.dx / (2 * self.n) as f64;
        buf[..self.n].iter().map(|z| z.re * scale).collect()
    }

    fn kick(&self, amps: &mut [C64], phi: &[f64], tau: f64) {
        for ((z, f), v) in amps.iter_mut().zip(phi).zip(&self.external) {
            *z *= C64::from_polar(1.0, -(f + v) * tau);
        }
    }

    fn drift(&self, amps: &mut [C64]) {
        self.fft.process(amps);
        let inv_n = 1.0 / self.n as f64;
        for (z, ph) in amps.iter_mut().zip(&self.kinetic_phase) {
            *z *= ph * inv_n;
        }
        self.ifft.process(amps);
    }

    /// Advances `steps` steps; `phi` holds the potential of the current
    /// density on entry and on exit.
    fn run(&self, amps: &mut [C64], phi: &mut Vec<f64>, steps: usize) {
        let half = 0.5 * self.dt;
        for _ in 0..steps {
            self.kick(amps, phi, half);
            self.drift(amps);
            *phi = self.potential(amps);
            self.kick(amps, phi, half);
        }
    }

    fn energy(&self, amps: &[C64]) -> f64 {
        let mut hat = amps.to_vec();
        self.fft.process(&mut hat);
        let kinetic = self.dx / self.n as f64
            * hat.iter().zip(&self.k2).map(|(z, k2)| k2 * z.norm_sqr()).sum::<f64>()
            / (2.0 * self.mass);
        let phi = self.potential(amps);
        let rest = self.dx
            * amps
                .iter()
                .zip(&phi)
                .zip(&self.external)
                .map(|((z, f), v)| (0.5 * f + v) * z.norm_sqr())
                .sum::<f64>();
        kinetic + rest
    }
}

/// `Phi(x_i) = -g sum_j dx |psi_j|^2 K(x_i - x_j)`, by zero-padded FFT
/// convolution (no periodic images).
pub fn gravitational_potential(psi: &WaveFunctionGrid, p: &SNParams) -> Result<Vec<f64>> {
    Ok(Integrator::new(psi, p)?.potential(psi.amplitudes()))
}

pub fn evolve(psi0: &WaveFunctionGrid, p: &SNParams, steps: usize) -> Result<WaveFunctionGrid> {
    let integ = Integrator::new(psi0, p)?;
    let mut amps = psi0.amplitudes().to_vec();
    let mut phi = integ.potential(&amps);
    integ.run(&mut amps, &mut phi, steps);
    Ok(WaveFunctionGrid { dx: psi0.dx(), amplitudes: amps })
}

/// Kinetic plus external energy plus half the self-interaction energy; the
/// derivative is spectral.
pub fn energy(psi: &WaveFunctionGrid, p: &SNParams) -> Result<f64> {
    Ok(Integrator::new(psi, p)?.energy(psi.amplitudes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub width: f64,
    /// `|<reference|psi(t)>|`.
    pub overlap: f64,
}

/// Evolves `psi0` for `steps` steps, recording a row every `every` steps
/// (and at the start and end). The overlap column is taken against
/// `reference`, or against `psi0` if none is given.
pub fn trajectory(
    psi0: &WaveFunctionGrid,
    p: &SNParams,
    steps: usize,
    every: usize,
    reference: Option<&WaveFunctionGrid>,
) -> Result<(WaveFunctionGrid, Vec<TrajectoryRow>)> {
    let integ = Integrator::new(psi0, p)?;
    let reference = reference.unwrap_or(psi0);
    psi0.check_same_grid(reference)?;
    let every = every.max(1);
    let mut psi = psi0.clone();
    let mut phi = integ.potential(psi.amplitudes());
    let row = |psi: &WaveFunctionGrid, step: usize| -> Result<TrajectoryRow> {
        Ok(TrajectoryRow {
            t: step as f64 * p.dt,
            norm: psi.norm(),
            energy: integ.energy(psi.amplitudes()),
            width: psi.width(),
            overlap: reference.overlap(psi)?.norm(),
        })
    };
    let mut rows = vec![row(&psi, 0)?];
    let mut done = 0;
    while done < steps {
        let chunk = every.min(steps - done);
        integ.run(&mut psi.amplitudes, &mut phi, chunk);
        done += chunk;
        rows.push(row(&psi, done)?);
    }
    Ok((psi, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapSample {
    pub t: f64,
    pub overlap: f64,
}

/// `|<psi1(t)|psi2(t)>|` every `every` steps, each state evolving under its
/// own self-interaction. The two trajectories run concurrently.
pub fn overlap_drift(
    psi1: &WaveFunctionGrid,
    psi2: &WaveFunctionGrid,
    p: &SNParams,
    steps: usize,
    every: usize,
) -> Result<Vec<OverlapSample>> {
    psi1.check_same_grid(psi2)?;
    for psi in [psi1, psi2] {
        let norm = psi.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Invariant(format!("input norm {norm} is not 1")));
        }
    }
    let every = every.max(1);
    let snapshots = |psi0: &WaveFunctionGrid| -> Result<Vec<WaveFunctionGrid>> {
        let integ = Integrator::new(psi0, p)?;
        let mut psi = psi0.clone();
        let mut phi = integ.potential(psi.amplitudes());
        let mut out = vec![psi.clone()];
        let mut done = 0;
        while done < steps {
            let chunk = every.min(steps - done);
            integ.run(&mut psi.amplitudes, &mut phi, chunk);
            done += chunk;
            out.push(psi.clone());
        }
        Ok(out)
    };
    let (a, b) = join(|| snapshots(psi1), || snapshots(psi2));
    let (a, b) = (a?, b?);
    let mut times: Vec<f64> = (0..steps).step_by(every).map(|s| s as f64 * p.dt).collect();
    times.push(steps as f64 * p.dt);
    a.iter()
        .zip(&b)
        .zip(times)
        .map(|((x, y), t)| Ok(OverlapSample { t, overlap: x.overlap(y)?.norm() }))
        .collect()
}

/// Largest `|overlap(t) - overlap(0)|` along a drift curve.
pub fn max_overlap_deviation(curve: &[OverlapSample]) -> f64 {
    let first = curve.first().map_or(0.0, |s| s.overlap);
    curve.iter().map(|s| (s.overlap - first).abs()).fold(0.0, f64::max)
}

/// Free Gaussian packet of initial spread `width` centered at the origin,
/// evaluated at time `t`.
pub fn free_gaussian(n: usize, dx: f64, width: f64, mass: f64, t: f64) -> Result<WaveFunctionGrid> {
    check_grid(n, dx)?;
    let s2 = width * width;
    let spread = C64::new(1.0, t / (2.0 * mass * s2));
    let prefactor = (2.0 * PI * s2).powf(-0.25) / spread.sqrt();
    let amps = (0..n)
        .map(|i| {
            let x = position(i, n, dx);
            prefactor * (-(x * x) / (spread * 4.0 * s2)).exp()
        })
        .collect();
    WaveFunctionGrid::normalized(amps, dx)
}
