//! Binary state dumps.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `CNSD` |
//! | 4     | format version, `u32` |
//! | 8     | `N`, `u64` |
//! | 40    | `L, γ, μ, λ, t`, `f64` |
//! | 4 × 8N³ | real-space `ϱ, m₁, m₂, m₃`, row-major `[i][j][k]` |

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context};
use cns_decay_core::{FluidParams, PerturbationState, SpectralGrid};

pub const MAGIC: &[u8; 4] = b"CNSD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 8 + 5 * 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub n: u64,
    pub length: f64,
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
    pub time: f64,
}

pub fn write(mut w: impl Write, state: &PerturbationState, params: &FluidParams) -> anyhow::Result<()> {
    let grid = state.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    for x in [grid.length(), params.gamma(), params.mu(), params.lambda(), state.time()] {
        w.write_all(&x.to_le_bytes())?;
    }
    let fields = [
        state.rho_real(),
        state.momentum_real(0),
        state.momentum_real(1),
        state.momentum_real(2),
    ];
    let mut buf = Vec::with_capacity(8 * grid.real_len());
    for f in &fields {
        buf.clear();
        for x in f {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn save(path: &Path, state: &PerturbationState, params: &FluidParams) -> anyhow::Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    write(&mut w, state, params)?;
    w.flush()?;
    Ok(())
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

pub fn read_header(mut r: impl Read) -> anyhow::Result<Header> {
    let mut h = [0u8; HEADER_LEN];
    r.read_exact(&mut h).context("truncated checkpoint header")?;
    if &h[..4] != MAGIC {
        bail!("not a checkpoint: bad magic {:?}", &h[..4]);
    }
    let version = u32::from_le_bytes(h[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        bail!("unsupported checkpoint version {version} (expected {VERSION})");
    }
    Ok(Header {
        n: u64::from_le_bytes(h[8..16].try_into().expect("8 bytes")),
        length: f64_at(&h, 16),
        gamma: f64_at(&h, 24),
        mu: f64_at(&h, 32),
        lambda: f64_at(&h, 40),
        time: f64_at(&h, 48),
    })
}

/// Reads a checkpoint onto a grid built by `make_grid(L, N)`.
pub fn read(
    mut r: impl Read,
    make_grid: impl FnOnce(f64, usize) -> cns_decay_core::Result<SpectralGrid>,
) -> anyhow::Result<(Header, FluidParams, PerturbationState)> {
    let header = read_header(&mut r)?;
    let n = usize::try_from(header.n).context("grid size overflows usize")?;
    let grid = make_grid(header.length, n)?;
    let params = FluidParams::new(header.mu, header.lambda, header.gamma)?;
    let len = grid.real_len();
    let mut bytes = vec![0u8; 8 * len];
    let mut fields: Vec<Vec<f64>> = Vec::with_capacity(4);
    for name in ["rho", "m1", "m2", "m3"] {
        r.read_exact(&mut bytes)
            .with_context(|| format!("truncated checkpoint in field {name}"))?;
        fields.push(
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect(),
        );
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        bail!("trailing bytes after checkpoint payload");
    }
    let state = PerturbationState::from_real(&grid, header.time, &fields[0], [&fields[1], &fields[2], &fields[3]])?;
    Ok((header, params, state))
}

pub fn load(path: &Path) -> anyhow::Result<(Header, FluidParams, PerturbationState)> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read(std::io::BufReader::new(file), crate::backend::grid)
}
