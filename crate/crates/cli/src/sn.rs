use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use hybrid_nogo::schnewton::{
    overlap_drift, trajectory, Kernel, SNParams, WaveFunctionGrid, DEFAULT_DT,
};

use crate::args::GlobalArgs;
use crate::report::{emit, write_atomic};
use crate::Status;

#[derive(Debug, Subcommand)]
pub enum SnCommand {
    /// Evolve one packet; CSV rows t,norm,energy,width,overlap.
    Evolve(EvolveArgs),
    /// Evolve two displaced packets; CSV rows t,overlap,deviation.
    Distinguish(DistinguishArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    SoftCoulomb,
    Linear1d,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::SoftCoulomb => Kernel::SoftCoulomb,
            KernelArg::Linear1d => Kernel::Linear1d,
        }
    }
}

#[derive(Debug, Args)]
pub struct PhysicsArgs {
    /// Grid points.
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[arg(long, default_value_t = 0.1)]
    pub dx: f64,
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Steps between output rows.
    #[arg(long, default_value_t = 10)]
    pub every: usize,
    #[arg(long, default_value_t = 0.0)]
    pub coupling: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    /// Kernel softening length; twice the grid spacing if absent.
    #[arg(long)]
    pub softening: Option<f64>,
    #[arg(long, value_enum, default_value_t = KernelArg::SoftCoulomb)]
    pub kernel: KernelArg,
    /// Initial packet width.
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    #[arg(long, default_value_t = 0.0)]
    pub momentum: f64,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[arg(long, default_value_t = 0.0)]
    pub center: f64,
    /// Initial state from an amplitude dump instead of a Gaussian.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Write the final amplitudes to this dump file.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistinguishArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    /// Distance between the packet centers in units of the packet width.
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,
}

fn params(p: &PhysicsArgs, grid: &WaveFunctionGrid) -> Result<SNParams> {
    let mut params = SNParams::for_grid(grid).with_coupling(p.coupling).with_dt(p.dt);
    params.mass = p.mass;
    params.kernel = p.kernel.into();
    if let Some(a) = p.softening {
        params.softening = a;
    }
    params.validate(grid)?;
    Ok(params)
}

pub fn run(g: &GlobalArgs, c: SnCommand) -> Result<Status> {
    match c {
        SnCommand::Evolve(a) => evolve(g, a),
        SnCommand::Distinguish(a) => distinguish(g, a),
    }
}

fn evolve(g: &GlobalArgs, a: EvolveArgs) -> Result<Status> {
    let p = &a.physics;
    let psi0 = match &a.input {
        Some(path) => {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            WaveFunctionGrid::read_dump(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?
        }
        None => WaveFunctionGrid::gaussian(p.grid, p.dx, a.center, p.width, p.momentum)?,
    };
    let params = params(p, &psi0)?;
    let (last, rows) = trajectory(&psi0, &params, p.steps, p.every, None)?;

    let mut csv = String::from("t,norm,energy,width,overlap\n");
    for r in &rows {
        writeln!(csv, "{},{},{},{},{}", r.t, r.norm, r.energy, r.width, r.overlap)?;
    }
    if let Some(path) = &a.dump {
        let mut bytes = Vec::new();
        last.write_dump(&mut bytes)?;
        write_atomic(path, &bytes)?;
    }
    emit(g.out.as_deref(), csv.as_bytes())?;
    Ok(Status::Consistent)
}

fn distinguish(g: &GlobalArgs, a: DistinguishArgs) -> Result<Status> {
    let p = &a.physics;
    let offset = 0.5 * a.separation * p.width;
    let left = WaveFunctionGrid::gaussian(p.grid, p.dx, -offset, p.width, p.momentum)?;
    let right = WaveFunctionGrid::gaussian(p.grid, p.dx, offset, p.width, p.momentum)?;
    let params = params(p, &left)?;
    let curve = overlap_drift(&left, &right, &params, p.steps, p.every)?;

    let first = curve.first().map_or(0.0, |s| s.overlap);
    let mut csv = String::from("t,overlap,deviation\n");
    for s in &curve {
        writeln!(csv, "{},{},{}", s.t, s.overlap, s.overlap - first)?;
    }
    emit(g.out.as_deref(), csv.as_bytes())?;
    Ok(Status::Consistent)
}
