//! Unitary interferometers and input specifications.
//!
//! Ports are 0-based inside the crate and 1-based in every file format and on
//! the command line. Matrices are indexed `U[(input, output)]`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::{entries_from_wire, entries_to_wire, SquareComplexMatrix};
use crate::rng;

/// Unitarity tolerance used by every validation path.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferometerKind {
    HaarRandom,
    Fourier,
    BalancedPort,
    Explicit,
}

impl fmt::Display for InterferometerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InterferometerKind::HaarRandom => "haar",
            InterferometerKind::Fourier => "fourier",
            InterferometerKind::BalancedPort => "balanced",
            InterferometerKind::Explicit => "explicit",
        };
        f.write_str(s)
    }
}

impl FromStr for InterferometerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" | "haar_random" => Ok(InterferometerKind::HaarRandom),
            "fourier" => Ok(InterferometerKind::Fourier),
            "balanced" | "balanced_port" => Ok(InterferometerKind::BalancedPort),
            "explicit" => Ok(InterferometerKind::Explicit),
            other => Err(Error::InvalidArgument(format!("unknown interferometer kind `{other}`"))),
        }
    }
}

/// An `M x M` unitary with provenance metadata. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferometer {
    matrix: SquareComplexMatrix,
    kind: InterferometerKind,
    seed: Option<u64>,
}

impl Interferometer {
    /// Haar-distributed unitary of dimension `dim`.
    ///
    /// Columns of a matrix of i.i.d. standard complex Gaussians are
    /// orthonormalized by Gram-Schmidt (with one re-orthogonalization pass).
    /// This is the QR factorization whose triangular factor has a real positive
    /// diagonal, which is the phase convention that makes `Q` Haar distributed.
    pub fn haar_random(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let mut rng = rng::seeded(seed);
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        // column-major scratch: cols[j][i]
        let mut cols: Vec<Vec<Complex64>> = (0..dim)
            .map(|_| {
                (0..dim)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(re * scale, im * scale)
                    })
                    .collect()
            })
            .collect();

        for j in 0..dim {
            for _pass in 0..2 {
                for k in 0..j {
                    let (done, rest) = cols.split_at_mut(j);
                    let q = &done[k];
                    let v = &mut rest[0];
                    let proj: Complex64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= proj * qi;
                    }
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in cols[j].iter_mut() {
                *z /= norm;
            }
        }
        let matrix = SquareComplexMatrix::from_fn(dim, |i, j| cols[j][i]);
        Ok(Interferometer { matrix, kind: InterferometerKind::HaarRandom, seed: Some(seed) })
    }

    /// `F_{kl} = M^{-1/2} exp(2 pi i k l / M)` with 1-based `k, l`.
    pub fn fourier(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let norm = 1.0 / (dim as f64).sqrt();
        let matrix = SquareComplexMatrix::from_fn(dim, |i, j| {
            let kl = ((i + 1) * (j + 1)) % dim;
            Complex64::from_polar(norm, 2.0 * PI * kl as f64 / dim as f64)
        });
        Ok(Interferometer { matrix, kind: InterferometerKind::Fourier, seed: None })
    }

    /// `U = F (1 (+) V)`: first output port is balanced, `|U_{k,1}| = M^{-1/2}`.
    pub fn balanced_port(v: &Interferometer) -> Result<Self> {
        let residual = v.matrix.unitarity_residual();
        if residual >= UNITARITY_TOL {
            return Err(Error::NotUnitary { residual, tolerance: UNITARITY_TOL });
        }
        let dim = v.dim() + 1;
        let f = Self::fourier(dim)?;
        let block = SquareComplexMatrix::from_fn(dim, |i, j| match (i, j) {
            (0, 0) => Complex64::new(1.0, 0.0),
            (0, _) | (_, 0) => Complex64::new(0.0, 0.0),
            _ => v.matrix[(i - 1, j - 1)],
        });
        Ok(Interferometer {
            matrix: f.matrix.mul(&block),
            kind: InterferometerKind::BalancedPort,
            seed: v.seed,
        })
    }

    /// Wraps a caller-supplied matrix after checking unitarity.
    pub fn explicit(matrix: SquareComplexMatrix) -> Result<Self> {
        Self::with_kind(matrix, InterferometerKind::Explicit, None)
    }

    fn with_kind(matrix: SquareComplexMatrix, kind: InterferometerKind, seed: Option<u64>) -> Result<Self> {
        let residual = matrix.unitarity_residual();
        if !(residual < UNITARITY_TOL) {
            return Err(Error::NotUnitary { residual, tolerance: UNITARITY_TOL });
        }
        Ok(Interferometer { matrix, kind, seed })
    }

    pub fn dim(&self) -> usize {
        self.matrix.n()
    }

    pub fn matrix(&self) -> &SquareComplexMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> InterferometerKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    pub fn entry(&self, input: usize, output: usize) -> Complex64 {
        self.matrix[(input, output)]
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.matrix.unitarity_residual()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&InterferometerFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: InterferometerFile = serde_json::from_str(s)?;
        file.try_into()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON encoding, hex.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(&InterferometerFile::from(self)).expect("serializable");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// File layout: `{"dim", "kind", "seed"?, "matrix": [[re, im], ...]}` with the
/// matrix flattened row-major.
#[derive(Debug, Serialize, Deserialize)]
pub struct InterferometerFile {
    pub dim: usize,
    pub kind: InterferometerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub matrix: Vec<[f64; 2]>,
}

impl From<&Interferometer> for InterferometerFile {
    fn from(u: &Interferometer) -> Self {
        InterferometerFile { dim: u.dim(), kind: u.kind, seed: u.seed, matrix: entries_to_wire(&u.matrix) }
    }
}

impl TryFrom<InterferometerFile> for Interferometer {
    type Error = Error;

    fn try_from(f: InterferometerFile) -> Result<Self> {
        let matrix = entries_from_wire(f.dim, &f.matrix)?;
        Interferometer::with_kind(matrix, f.kind, f.seed)
    }
}

/// Which input ports carry a boson.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    dim: usize,
    ports: Vec<usize>,
}

impl InputSpec {
    /// Bosons in the first `n` ports.
    pub fn first(n: usize, dim: usize) -> Result<Self> {
        Self::from_ports((0..n).collect(), dim)
    }

    /// 1-based port list, as written in files and on the command line.
    pub fn from_one_based(ports: &[usize], dim: usize) -> Result<Self> {
        if ports.contains(&0) {
            return Err(Error::InvalidArgument("input ports are 1-based".into()));
        }
        Self::from_ports(ports.iter().map(|p| p - 1).collect(), dim)
    }

    /// 0-based port list.
    pub fn from_ports(ports: Vec<usize>, dim: usize) -> Result<Self> {
        if ports.is_empty() {
            return Err(Error::InvalidArgument("at least one boson is required".into()));
        }
        if ports.len() > dim {
            return Err(Error::InvalidArgument(format!(
                "{} bosons do not fit into {dim} ports",
                ports.len()
            )));
        }
        let mut sorted = ports.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != ports.len() {
            return Err(Error::InvalidArgument("input ports must be distinct".into()));
        }
        if let Some(&p) = sorted.last().filter(|&&p| p >= dim) {
            return Err(Error::InvalidArgument(format!("input port {} out of range 1..={dim}", p + 1)));
        }
        Ok(InputSpec { dim, ports })
    }

    pub fn n_bosons(&self) -> usize {
        self.ports.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ports(&self) -> &[usize] {
        &self.ports
    }

    /// Boson density `N / M`.
    pub fn density(&self) -> f64 {
        self.ports.len() as f64 / self.dim as f64
    }

    /// The same interferometer seen by a subset of the bosons (by position in
    /// `ports`).
    pub fn restrict(&self, bosons: &[usize]) -> Result<Self> {
        Self::from_ports(bosons.iter().map(|&b| self.ports[b]).collect(), self.dim)
    }

    pub(crate) fn check_against(&self, u: &Interferometer) -> Result<()> {
        if self.dim != u.dim() {
            return Err(Error::InvalidArgument(format!(
                "input spec is for {} ports but interferometer has {}",
                self.dim,
                u.dim()
            )));
        }
        Ok(())
    }
}

/// Hash identifying an `(interferometer, input)` pair in output records.
pub fn instance_hash(u: &Interferometer, input: &InputSpec) -> String {
    let mut h = Sha256::new();
    h.update(u.content_hash().as_bytes());
    for p in input.ports() {
        h.update((*p as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}
