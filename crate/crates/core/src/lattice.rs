//! Lattice geometry, local operator bases and tensor-product index bookkeeping.
//!
//! Sites are numbered `1..=N`. Site 1 is the most significant tensor factor, so
//! the computational basis index of `|s_1 s_2 ... s_N>` is `sum_l s_l * d^(N-l)`.
//! The sign convention is `sigma_z |0> = +|0>`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub const DEFAULT_PURE_CAP: usize = 14;
pub const DEFAULT_MIXED_CAP: usize = 10;

/// Environment variable overriding both site caps.
pub const CAP_ENV: &str = "MQS_MAX_QUBITS";

/// Which representation a lattice size is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Pure,
    Mixed,
}

/// Upper limits on the number of sites for dense pure / mixed computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub pure: usize,
    pub mixed: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            pure: DEFAULT_PURE_CAP,
            mixed: DEFAULT_MIXED_CAP,
        }
    }
}

impl Caps {
    /// Defaults, with both caps replaced by `MQS_MAX_QUBITS` when it parses.
    pub fn from_env() -> Self {
        match std::env::var(CAP_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
            Some(cap) if cap >= 1 => Self {
                pure: cap,
                mixed: cap,
            },
            _ => Self::default(),
        }
    }

    pub fn cap(&self, mode: Mode) -> usize {
        match mode {
            Mode::Pure => self.pure,
            Mode::Mixed => self.mixed,
        }
    }
}

/// An `N`-site lattice with a `d`-dimensional Hilbert space on every site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeConfig {
    n_sites: usize,
    local_dim: usize,
}

impl LatticeConfig {
    pub fn new(n_sites: usize, local_dim: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidLattice("at least one site is required".into()));
        }
        if local_dim < 2 {
            return Err(Error::InvalidLattice(format!(
                "local dimension must be >= 2, got {local_dim}"
            )));
        }
        let dim = u32::try_from(n_sites)
            .ok()
            .and_then(|n| local_dim.checked_pow(n))
            .ok_or_else(|| {
                Error::InvalidLattice(format!("{local_dim}^{n_sites} overflows the address space"))
            })?;
        // A dense matrix of this dimension must also be addressable.
        if dim.checked_mul(dim).is_none() {
            return Err(Error::InvalidLattice(format!(
                "dimension {dim} too large for dense matrices"
            )));
        }
        Ok(Self { n_sites, local_dim })
    }

    /// Spin-1/2 chain.
    pub fn qubits(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, 2)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// Total Hilbert-space dimension `d^N`.
    pub fn dim(&self) -> usize {
        self.local_dim.pow(self.n_sites as u32)
    }

    /// Number of traceless local basis elements, `d^2 - 1`.
    pub fn basis_len(&self) -> usize {
        self.local_dim * self.local_dim - 1
    }

    /// Index stride of `site` (1-based).
    pub fn stride(&self, site: usize) -> usize {
        self.local_dim.pow((self.n_sites - site) as u32)
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_sites {
            Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            })
        } else {
            Ok(())
        }
    }

    pub fn check_cap(&self, mode: Mode) -> Result<()> {
        let cap = Caps::from_env().cap(mode);
        if self.n_sites > cap {
            return Err(Error::CapExceeded {
                n_sites: self.n_sites,
                cap,
                mode: match mode {
                    Mode::Pure => "pure",
                    Mode::Mixed => "mixed",
                },
            });
        }
        Ok(())
    }
}

/// A set of lattice sites `S` on which an operation acts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemSupport {
    sites: Vec<usize>,
}

impl SubsystemSupport {
    /// Sorts and deduplicates `sites`; every site must lie in `1..=N`.
    pub fn new(mut sites: Vec<usize>, lattice: &LatticeConfig) -> Result<Self> {
        sites.sort_unstable();
        sites.dedup();
        if sites.is_empty() {
            return Err(Error::InvalidSupport("support is empty".into()));
        }
        for &s in &sites {
            lattice.check_site(s)?;
        }
        Ok(Self { sites })
    }

    /// Sites `1..=k`.
    pub fn leading(k: usize, lattice: &LatticeConfig) -> Result<Self> {
        Self::new((1..=k).collect(), lattice)
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    /// `|S|`.
    pub fn volume(&self) -> usize {
        self.sites.len()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn complement(&self, lattice: &LatticeConfig) -> Vec<usize> {
        (1..=lattice.n_sites()).filter(|s| !self.contains(*s)).collect()
    }

    pub fn is_proper(&self, lattice: &LatticeConfig) -> bool {
        self.sites.len() < lattice.n_sites()
    }

    /// Hilbert dimension `d^|S|` of the support.
    pub fn dim(&self, lattice: &LatticeConfig) -> usize {
        lattice.local_dim().pow(self.sites.len() as u32)
    }
}

/// Offsets splitting a full basis index into a support part and a complement
/// part: `full = inner[a] + outer[b]`, both enumerated with the lowest-numbered
/// site most significant.
#[derive(Debug, Clone)]
pub struct SplitIndex {
    pub inner: Vec<usize>,
    pub outer: Vec<usize>,
}

impl SplitIndex {
    pub fn new(lattice: &LatticeConfig, sites: &[usize]) -> Self {
        let complement: Vec<usize> = (1..=lattice.n_sites())
            .filter(|s| !sites.contains(s))
            .collect();
        Self {
            inner: offsets(lattice, sites),
            outer: offsets(lattice, &complement),
        }
    }
}

fn offsets(lattice: &LatticeConfig, sites: &[usize]) -> Vec<usize> {
    let d = lattice.local_dim();
    let mut out = vec![0usize];
    for &site in sites {
        let stride = lattice.stride(site);
        out = out
            .iter()
            .flat_map(|&base| (0..d).map(move |k| base + k * stride))
            .collect();
    }
    out
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Traceless Hermitian local basis, orthogonal under `Tr(a b) = 2 delta_ab`.
///
/// Generalized Gell-Mann ordering: symmetric pairs, antisymmetric pairs, then
/// diagonal elements. For `d = 2` this is exactly `(sigma_x, sigma_y, sigma_z)`.
pub fn local_basis(d: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = ONE;
            m[(k, j)] = ONE;
            basis.push(m);
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = -I;
            m[(k, j)] = I;
            basis.push(m);
        }
    }
    for l in 1..d {
        let scale = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = C64::new(scale, 0.0);
        }
        m[(l, l)] = C64::new(-scale * l as f64, 0.0);
        basis.push(m);
    }
    basis
}

/// Largest squared Euclidean coefficient norm compatible with `||a||_inf <= 1`
/// in the basis of [`local_basis`]: `Tr(a^2) <= d` gives `|c|^2 <= d / 2`.
pub fn max_coeff_norm_sq(d: usize) -> f64 {
    d as f64 / 2.0
}

/// `1 (x) ... (x) op (x) ... (x) 1` with `op` on `site`.
pub fn embed_local(op: &CMatrix, site: usize, lattice: &LatticeConfig) -> Result<CMatrix> {
    lattice.check_site(site)?;
    let d = lattice.local_dim();
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: op.nrows().max(op.ncols()),
        });
    }
    let left = CMatrix::identity(d.pow((site - 1) as u32), d.pow((site - 1) as u32));
    let right = CMatrix::identity(lattice.stride(site), lattice.stride(site));
    Ok(left.kronecker(op).kronecker(&right))
}

/// Dense embedding of an operator acting on the support `sites`.
pub fn embed_on_sites(op: &CMatrix, sites: &[usize], lattice: &LatticeConfig) -> CMatrix {
    let split = SplitIndex::new(lattice, sites);
    let dim = lattice.dim();
    let mut full = CMatrix::zeros(dim, dim);
    for &o in &split.outer {
        for (a, &ia) in split.inner.iter().enumerate() {
            for (b, &ib) in split.inner.iter().enumerate() {
                full[(o + ia, o + ib)] = op[(a, b)];
            }
        }
    }
    full
}

/// `op |v>` with `op` acting on `sites`, without forming the full matrix.
pub fn apply_on_sites_vec(op: &CMatrix, split: &SplitIndex, v: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; v.len()];
    let ds = split.inner.len();
    let mut buf = vec![ZERO; ds];
    for &o in &split.outer {
        for (a, &ia) in split.inner.iter().enumerate() {
            buf[a] = v[o + ia];
        }
        for (a, &ia) in split.inner.iter().enumerate() {
            let mut acc = ZERO;
            for b in 0..ds {
                acc += op[(a, b)] * buf[b];
            }
            out[o + ia] = acc;
        }
    }
    out
}

/// `op * M` with `op` acting on `sites`.
pub fn apply_on_sites_left(op: &CMatrix, split: &SplitIndex, m: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        let col = apply_on_sites_vec(op, split, m.column(j).as_slice());
        out.column_mut(j).copy_from_slice(&col);
    }
    out
}

/// `M * op` with `op` acting on `sites`.
pub fn apply_on_sites_right(m: &CMatrix, op: &CMatrix, split: &SplitIndex) -> CMatrix {
    apply_on_sites_left(&op.adjoint(), split, &m.adjoint()).adjoint()
}

/// Basis index of the product configuration `states` (one local level per site).
pub fn basis_index(states: &[usize], lattice: &LatticeConfig) -> usize {
    states
        .iter()
        .enumerate()
        .map(|(k, &s)| s * lattice.stride(k + 1))
        .sum()
}
