//! Fixed-weight echo state reservoirs.
//!
//! Two constructions are supported. The dense variant masks a uniform random
//! matrix with a single connection probability. The locally connected variant
//! keeps a band around the diagonal, thins it, sprinkles sparse long-range
//! links into the remaining zeros, and wires each input to its own block of
//! nodes plus a block shared with its neighbour:
//!
//! ```text
//! rows:  [ U_1 | S_12 | U_2 | S_23 | ... | U_n ]
//! input i  ->  U_i and S_{i,i+1}   (the last input uses S_{n-1,n})
//! ```
//!
//! Both recurrent matrices are rescaled to a target spectral radius. Nothing
//! here is trainable and there are no biases.

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::spectral;
use crate::tensor::Matrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EsnVariant {
    Dense,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsnConfig {
    pub variant: EsnVariant,
    /// Reservoir size for the dense variant.
    pub n_hidden: usize,
    /// Target spectral radius.
    pub phi: f64,
    pub p_global: f64,
    pub p_input: f64,
    pub p_local: f64,
    pub n_unique: usize,
    pub n_shared: usize,
    pub radius: usize,
    /// Multiplier on the input matrix after masking.
    #[serde(default = "unit_scale")]
    pub input_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl EsnConfig {
    pub fn dense() -> Self {
        EsnConfig {
            variant: EsnVariant::Dense,
            n_hidden: 64,
            phi: 1.0,
            p_global: 0.4,
            p_input: 0.4,
            p_local: 0.0,
            n_unique: 0,
            n_shared: 0,
            radius: 1,
            input_scale: 1.0,
        }
    }

    pub fn local() -> Self {
        EsnConfig {
            variant: EsnVariant::Local,
            n_hidden: 0,
            phi: 1.0,
            p_global: 0.01,
            p_input: 0.5,
            p_local: 0.5,
            n_unique: 20,
            n_shared: 10,
            radius: 10,
            input_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_global", self.p_global),
            ("p_input", self.p_input),
            ("p_local", self.p_local),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} = {p} is not a probability")));
            }
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return Err(Error::config(format!("input_scale must be positive, got {}", self.input_scale)));
        }
        if !(self.phi > 0.0 && self.phi.is_finite()) {
            return Err(Error::config(format!("phi must be positive, got {}", self.phi)));
        }
        match self.variant {
            EsnVariant::Dense if self.n_hidden == 0 => {
                Err(Error::config("dense reservoir needs n_hidden >= 1"))
            }
            EsnVariant::Local if self.radius == 0 => {
                Err(Error::config("local reservoir needs radius >= 1"))
            }
            EsnVariant::Local if self.n_unique + self.n_shared == 0 => {
                Err(Error::config("local reservoir needs n_unique + n_shared >= 1"))
            }
            _ => Ok(()),
        }
    }

    /// Number of reservoir nodes when driven by `n_inputs` inputs.
    pub fn reservoir_size(&self, n_inputs: usize) -> usize {
        match self.variant {
            EsnVariant::Dense => self.n_hidden,
            EsnVariant::Local => {
                n_inputs * self.n_unique + n_inputs.saturating_sub(1) * self.n_shared
            }
        }
    }
}

/// `mask[i][j] = 1` iff `|i - j| <= radius`.
pub fn band_mask(n: usize, radius: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, j| if i.abs_diff(j) <= radius { 1.0 } else { 0.0 })
}

fn uniform_masked(rows: usize, cols: usize, p: f64, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        let w = rng.gen_range(-1.0..=1.0);
        if rng.gen_bool(p) {
            w
        } else {
            0.0
        }
    })
}

/// Banded, thinned local recurrence plus sparse global links, rescaled to
/// spectral radius `phi`.
pub fn build_local_recurrent(config: &EsnConfig, n: usize, rng: &mut impl Rng) -> Result<Matrix> {
    if config.variant != EsnVariant::Local {
        return Err(Error::config("build_local_recurrent needs the local variant"));
    }
    config.validate()?;
    let band = band_mask(n, config.radius);
    let mut w = Matrix::from_fn(n, n, |i, j| {
        let raw = rng.gen_range(-1.0..=1.0);
        let keep = rng.gen_bool(config.p_local);
        if band.get(i, j) == 1.0 && keep {
            raw
        } else {
            0.0
        }
    });
    let global = uniform_masked(n, n, config.p_global, rng);
    for (dst, &g) in w.data_mut().iter_mut().zip(global.data()) {
        if *dst == 0.0 && g != 0.0 {
            *dst = g;
        }
    }
    scale_spectral_radius(&w, config.phi)
}

pub fn build_dense_recurrent(config: &EsnConfig, rng: &mut impl Rng) -> Result<Matrix> {
    if config.variant != EsnVariant::Dense {
        return Err(Error::config("build_dense_recurrent needs the dense variant"));
    }
    config.validate()?;
    let w = uniform_masked(config.n_hidden, config.n_hidden, config.p_global, rng);
    scale_spectral_radius(&w, config.phi)
}

/// Rows of the local reservoir that input `i` of `n_inputs` may reach.
pub fn input_candidate_rows(config: &EsnConfig, n_inputs: usize, i: usize) -> Vec<usize> {
    match config.variant {
        EsnVariant::Dense => (0..config.n_hidden).collect(),
        EsnVariant::Local => {
            let stride = config.n_unique + config.n_shared;
            let unique = i * stride..i * stride + config.n_unique;
            let shared_block = if i + 1 < n_inputs {
                Some(i)
            } else if i > 0 {
                Some(i - 1)
            } else {
                None
            };
            let shared = shared_block
                .map(|b| b * stride + config.n_unique..(b + 1) * stride)
                .unwrap_or(0..0);
            unique.chain(shared).collect()
        }
    }
}

/// Input projection, `N x n_inputs`.
pub fn build_input_matrix(config: &EsnConfig, n_inputs: usize, rng: &mut impl Rng) -> Result<Matrix> {
    if n_inputs == 0 {
        return Err(Error::config("reservoir needs at least one input"));
    }
    config.validate()?;
    let n = config.reservoir_size(n_inputs);
    let mut m = match config.variant {
        EsnVariant::Dense => uniform_masked(n, n_inputs, config.p_input, rng),
        EsnVariant::Local => {
            let mut m = Matrix::zeros(n, n_inputs);
            for i in 0..n_inputs {
                for r in input_candidate_rows(config, n_inputs, i) {
                    let w = rng.gen_range(-1.0..=1.0);
                    if rng.gen_bool(config.p_input) {
                        m.set(r, i, w);
                    }
                }
            }
            m
        }
    };
    if config.input_scale != 1.0 {
        m.scale_in_place(config.input_scale);
    }
    Ok(m)
}

/// Magnitude of the largest eigenvalue of a square matrix.
pub fn spectral_radius(w: &Matrix) -> Result<f64> {
    if w.rows() != w.cols() || w.rows() == 0 {
        return Err(Error::config(format!("spectral radius of a {:?} matrix", w.shape())));
    }
    spectral::spectral_radius(w)
}

/// Returns `w * (phi / rho(w))`.
pub fn scale_spectral_radius(w: &Matrix, phi: f64) -> Result<Matrix> {
    let rho = spectral_radius(w)?;
    if rho < 1e-12 {
        return Err(Error::Construction(format!(
            "spectral radius {rho:e} is too small to rescale"
        )));
    }
    let mut out = w.clone();
    out.scale_in_place(phi / rho);
    Ok(out)
}

/// Compressed sparse rows for the stepping hot path.
#[derive(Debug, Clone)]
struct SparseRows {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    fn from_dense(m: &Matrix) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseRows {
            row_ptr,
            cols,
            vals,
        }
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b]
            .iter()
            .zip(&self.vals[a..b])
            .map(|(&j, &v)| v * x[j])
            .sum()
    }
}

/// Frozen reservoir matrices.
#[derive(Debug, Clone)]
pub struct ReservoirWeights {
    recurrent: Matrix,
    input: Matrix,
    achieved_radius: f64,
    recurrent_sparse: SparseRows,
    input_sparse: SparseRows,
}

impl ReservoirWeights {
    /// Builds both matrices from a seed. Same `(config, n_inputs, seed)`,
    /// same bits.
    pub fn build(config: &EsnConfig, n_inputs: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if n_inputs == 0 {
            return Err(Error::config("reservoir needs at least one input"));
        }
        let mut rng = rng_from_seed(seed);
        let recurrent = match config.variant {
            EsnVariant::Dense => build_dense_recurrent(config, &mut rng)?,
            EsnVariant::Local => {
                build_local_recurrent(config, config.reservoir_size(n_inputs), &mut rng)?
            }
        };
        let input = build_input_matrix(config, n_inputs, &mut rng)?;
        Self::from_matrices(recurrent, input)
    }

    pub fn from_matrices(recurrent: Matrix, input: Matrix) -> Result<Self> {
        if recurrent.rows() != recurrent.cols() || input.rows() != recurrent.rows() {
            return Err(Error::config(format!(
                "recurrent {:?} and input {:?} do not fit together",
                recurrent.shape(),
                input.shape()
            )));
        }
        let achieved_radius = spectral_radius(&recurrent)?;
        Ok(ReservoirWeights {
            recurrent_sparse: SparseRows::from_dense(&recurrent),
            input_sparse: SparseRows::from_dense(&input),
            recurrent,
            input,
            achieved_radius,
        })
    }

    pub fn recurrent(&self) -> &Matrix {
        &self.recurrent
    }

    pub fn input(&self) -> &Matrix {
        &self.input
    }

    pub fn achieved_radius(&self) -> f64 {
        self.achieved_radius
    }

    pub fn n_hidden(&self) -> usize {
        self.recurrent.rows()
    }

    pub fn n_inputs(&self) -> usize {
        self.input.cols()
    }

    /// Writes `recurrent.csv` and `input.csv` under `dir`.
    pub fn export_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, m) in [("recurrent.csv", &self.recurrent), ("input.csv", &self.input)] {
            let path = dir.join(name);
            let mut f = std::io::BufWriter::new(
                std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?,
            );
            for i in 0..m.rows() {
                let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(f, "{}", line.join(",")).map_err(|e| Error::io(&path, e))?;
            }
            f.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    pub activations: Vec<f64>,
}

impl ReservoirState {
    pub fn zeros(n: usize) -> Self {
        ReservoirState {
            activations: vec![0.0; n],
        }
    }
}

/// `tanh(W h + W_in x)`.
pub fn esn_step(weights: &ReservoirWeights, state: &ReservoirState, x: &[f64]) -> Result<ReservoirState> {
    let n = weights.n_hidden();
    if state.activations.len() != n || x.len() != weights.n_inputs() {
        return Err(Error::config(format!(
            "esn_step: state {} / input {} for a {}x{} reservoir",
            state.activations.len(),
            x.len(),
            n,
            weights.n_inputs()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("reservoir input"));
    }
    let activations = (0..n)
        .map(|i| {
            (weights.recurrent_sparse.row_dot(i, &state.activations)
                + weights.input_sparse.row_dot(i, x))
            .tanh()
        })
        .collect();
    Ok(ReservoirState { activations })
}
