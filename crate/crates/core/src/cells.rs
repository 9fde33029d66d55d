//! Trainable memory cells, the MLP decoder, and parameter budgeting.
//!
//! Cells operate on 1xW row vectors so a whole episode of cell outputs can
//! be stacked into a TxW matrix and decoded in one batched pass.

use crate::autodiff::{NodeId, ParamId, ParamStore, Tape};
use crate::error::{Error, Result};
use crate::reservoir::EsnConfig;
use crate::tensor::Matrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fmt;

/// The six memory variants compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    /// Stateless affine layer; the memoryless baseline.
    #[serde(alias = "mlp")]
    Linear,
    Rnn,
    Gru,
    Lstm,
    EsnDense,
    EsnLocal,
}

impl MemoryKind {
    pub const ALL: [MemoryKind; 6] = [
        MemoryKind::Linear,
        MemoryKind::Rnn,
        MemoryKind::Gru,
        MemoryKind::Lstm,
        MemoryKind::EsnDense,
        MemoryKind::EsnLocal,
    ];

    /// Position in [`MemoryKind::ALL`]; used for seed derivation.
    pub fn index(self) -> usize {
        MemoryKind::ALL.iter().position(|&k| k == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            MemoryKind::Linear => "linear",
            MemoryKind::Rnn => "rnn",
            MemoryKind::Gru => "gru",
            MemoryKind::Lstm => "lstm",
            MemoryKind::EsnDense => "esn_dense",
            MemoryKind::EsnLocal => "esn_local",
        }
    }

    pub fn is_reservoir(self) -> bool {
        matches!(self, MemoryKind::EsnDense | MemoryKind::EsnLocal)
    }

    /// Number of stacked gate blocks in the fused weight matrices.
    fn gates(self) -> usize {
        match self {
            MemoryKind::Linear | MemoryKind::Rnn => 1,
            MemoryKind::Gru => 3,
            MemoryKind::Lstm => 4,
            MemoryKind::EsnDense | MemoryKind::EsnLocal => 0,
        }
    }
}

impl fmt::Display for MemoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MemoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(MemoryKind::Linear),
            _ => MemoryKind::ALL
                .into_iter()
                .find(|k| k.name() == s)
                .ok_or_else(|| Error::config(format!("unknown model '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellConfig {
    pub kind: MemoryKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

/// Trainable parameters of a cell, not counting any decoder.
pub fn cell_parameter_count(kind: MemoryKind, input_dim: usize, hidden_dim: usize) -> usize {
    let (n, h) = (input_dim, hidden_dim);
    match kind {
        MemoryKind::Linear => n * h + h,
        MemoryKind::Rnn | MemoryKind::Gru | MemoryKind::Lstm => {
            kind.gates() * (h * (n + h) + h)
        }
        MemoryKind::EsnDense | MemoryKind::EsnLocal => 0,
    }
}

/// Normal(0, 1/fan_in) initialized matrix.
pub fn scaled_normal(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let normal = Normal::new(0.0, 1.0 / (rows.max(1) as f64).sqrt()).unwrap();
    Matrix::from_fn(rows, cols, |_, _| normal.sample(rng))
}

/// Recurrent state living on a tape.
#[derive(Debug, Clone, Copy)]
pub struct CellState {
    pub h: Option<NodeId>,
    /// LSTM cell memory.
    pub c: Option<NodeId>,
}

/// A trainable memory cell. Weights are fused across gates:
/// `input` is `n x G*h`, `recurrent` is `h x G*h`, `bias` is `1 x G*h`,
/// with gate blocks ordered z, r, n for the GRU and f, i, o, g for the LSTM.
#[derive(Debug, Clone)]
pub struct MemoryCell {
    config: CellConfig,
    input: ParamId,
    recurrent: Option<ParamId>,
    bias: ParamId,
}

impl MemoryCell {
    pub fn new(config: CellConfig, store: &mut ParamStore, rng: &mut impl Rng) -> Result<Self> {
        let CellConfig {
            kind,
            input_dim,
            hidden_dim,
        } = config;
        if kind.is_reservoir() {
            return Err(Error::config("reservoir kinds have no trainable cell"));
        }
        if hidden_dim == 0 || input_dim == 0 {
            return Err(Error::config("cell dimensions must be positive"));
        }
        let width = kind.gates() * hidden_dim;
        let name = kind.name();
        let input = store.add(format!("{name}.input"), scaled_normal(input_dim, width, rng));
        let recurrent = (kind != MemoryKind::Linear).then(|| {
            store.add(
                format!("{name}.recurrent"),
                scaled_normal(hidden_dim, width, rng),
            )
        });
        let bias = store.add(format!("{name}.bias"), Matrix::zeros(1, width));
        Ok(MemoryCell {
            config,
            input,
            recurrent,
            bias,
        })
    }

    pub fn config(&self) -> CellConfig {
        self.config
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.input];
        ids.extend(self.recurrent);
        ids.push(self.bias);
        ids
    }

    pub fn output_dim(&self) -> usize {
        self.config.hidden_dim
    }

    /// All-zero initial state.
    pub fn initial_state(&self, tape: &mut Tape) -> Result<CellState> {
        let h = self.config.hidden_dim;
        Ok(match self.config.kind {
            MemoryKind::Linear => CellState { h: None, c: None },
            MemoryKind::Lstm => CellState {
                h: Some(tape.constant(Matrix::zeros(1, h))?),
                c: Some(tape.constant(Matrix::zeros(1, h))?),
            },
            _ => CellState {
                h: Some(tape.constant(Matrix::zeros(1, h))?),
                c: None,
            },
        })
    }

    /// Advances the cell by one step on `tape`. `x` is `1 x input_dim`.
    /// Returns the new state and the `1 x hidden_dim` output.
    pub fn step(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        state: &CellState,
        x: NodeId,
    ) -> Result<(CellState, NodeId)> {
        let hd = self.config.hidden_dim;
        if tape.value(x).shape() != (1, self.config.input_dim) {
            return Err(Error::config(format!(
                "{} cell expects 1x{} input, got {:?}",
                self.config.kind,
                self.config.input_dim,
                tape.value(x).shape()
            )));
        }
        let w = tape.param(store, self.input)?;
        let b = tape.param(store, self.bias)?;
        let xw = tape.matmul(x, w)?;
        let xwb = tape.add(xw, b)?;
        if self.config.kind == MemoryKind::Linear {
            return Ok((*state, xwb));
        }

        let h = state
            .h
            .ok_or_else(|| Error::config("recurrent cell stepped without state"))?;
        let u = tape.param(store, self.recurrent.expect("recurrent weights"))?;
        let hu = tape.matmul(h, u)?;

        match self.config.kind {
            MemoryKind::Rnn => {
                let pre = tape.add(xwb, hu)?;
                let h_new = tape.tanh(pre)?;
                Ok((CellState { h: Some(h_new), c: None }, h_new))
            }
            MemoryKind::Gru => {
                let gate = |tape: &mut Tape, k: usize| -> Result<(NodeId, NodeId)> {
                    Ok((tape.slice_cols(xwb, k * hd, hd)?, tape.slice_cols(hu, k * hd, hd)?))
                };
                let (xz, hz) = gate(tape, 0)?;
                let (xr, hr) = gate(tape, 1)?;
                let (xn, hn) = gate(tape, 2)?;
                let z_pre = tape.add(xz, hz)?;
                let z = tape.sigmoid(z_pre)?;
                let r_pre = tape.add(xr, hr)?;
                let r = tape.sigmoid(r_pre)?;
                let rhn = tape.mul(r, hn)?;
                let n_pre = tape.add(xn, rhn)?;
                let n = tape.tanh(n_pre)?;
                // h' = (1 - z) * n + z * h
                let one_minus_z = tape.one_minus(z)?;
                let keep_new = tape.mul(one_minus_z, n)?;
                let keep_old = tape.mul(z, h)?;
                let h_new = tape.add(keep_new, keep_old)?;
                Ok((CellState { h: Some(h_new), c: None }, h_new))
            }
            MemoryKind::Lstm => {
                let c = state
                    .c
                    .ok_or_else(|| Error::config("lstm stepped without cell memory"))?;
                let pre = tape.add(xwb, hu)?;
                let f_pre = tape.slice_cols(pre, 0, hd)?;
                let i_pre = tape.slice_cols(pre, hd, hd)?;
                let o_pre = tape.slice_cols(pre, 2 * hd, hd)?;
                let g_pre = tape.slice_cols(pre, 3 * hd, hd)?;
                let f = tape.sigmoid(f_pre)?;
                let i = tape.sigmoid(i_pre)?;
                let o = tape.sigmoid(o_pre)?;
                let g = tape.tanh(g_pre)?;
                let fc = tape.mul(f, c)?;
                let ig = tape.mul(i, g)?;
                let c_new = tape.add(fc, ig)?;
                let tc = tape.tanh(c_new)?;
                let h_new = tape.mul(o, tc)?;
                Ok((
                    CellState {
                        h: Some(h_new),
                        c: Some(c_new),
                    },
                    h_new,
                ))
            }
            MemoryKind::Linear | MemoryKind::EsnDense | MemoryKind::EsnLocal => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    pub n_hidden_units: usize,
    pub n_layers: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            n_hidden_units: 32,
            n_layers: 2,
        }
    }
}

pub fn mlp_parameter_count(config: MlpConfig, input_dim: usize, output_dim: usize) -> usize {
    let w = config.n_hidden_units;
    let mut fan_in = input_dim;
    let mut total = 0;
    for _ in 0..config.n_layers {
        total += fan_in * w + w;
        fan_in = w;
    }
    total + fan_in * output_dim + output_dim
}

/// `n_layers` tanh layers followed by an affine head.
#[derive(Debug, Clone)]
pub struct Mlp {
    config: MlpConfig,
    input_dim: usize,
    output_dim: usize,
    layers: Vec<(ParamId, ParamId)>,
    head: (ParamId, ParamId),
}

impl Mlp {
    pub fn new(
        name: &str,
        config: MlpConfig,
        input_dim: usize,
        output_dim: usize,
        store: &mut ParamStore,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if config.n_layers == 0 || config.n_hidden_units == 0 {
            return Err(Error::config("mlp needs at least one hidden layer of width >= 1"));
        }
        let w = config.n_hidden_units;
        let mut fan_in = input_dim;
        let mut layers = Vec::with_capacity(config.n_layers);
        for l in 0..config.n_layers {
            let weight = store.add(format!("{name}.layer{l}.weight"), scaled_normal(fan_in, w, rng));
            let bias = store.add(format!("{name}.layer{l}.bias"), Matrix::zeros(1, w));
            layers.push((weight, bias));
            fan_in = w;
        }
        let head = (
            store.add(format!("{name}.head.weight"), scaled_normal(fan_in, output_dim, rng)),
            store.add(format!("{name}.head.bias"), Matrix::zeros(1, output_dim)),
        );
        Ok(Mlp {
            config,
            input_dim,
            output_dim,
            layers,
            head,
        })
    }

    pub fn config(&self) -> MlpConfig {
        self.config
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        self.layers
            .iter()
            .flat_map(|&(w, b)| [w, b])
            .chain([self.head.0, self.head.1])
            .collect()
    }

    /// Batched forward on the tape; `x` is `T x input_dim`.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        if tape.value(x).cols() != self.input_dim {
            return Err(Error::config(format!(
                "mlp expects width {}, got {}",
                self.input_dim,
                tape.value(x).cols()
            )));
        }
        let mut h = x;
        for &(w, b) in &self.layers {
            let w = tape.param(store, w)?;
            let b = tape.param(store, b)?;
            let hw = tape.matmul(h, w)?;
            let pre = tape.add_row(hw, b)?;
            h = tape.tanh(pre)?;
        }
        let w = tape.param(store, self.head.0)?;
        let b = tape.param(store, self.head.1)?;
        let hw = tape.matmul(h, w)?;
        tape.add_row(hw, b)
    }

    /// Single-row forward without recording anything.
    pub fn forward_plain(&self, store: &ParamStore, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::config(format!(
                "mlp expects width {}, got {}",
                self.input_dim,
                x.len()
            )));
        }
        let mut h = x.to_vec();
        for &(w, b) in &self.layers {
            h = affine_row(&h, store.get(w), store.get(b));
            h.iter_mut().for_each(|v| *v = v.tanh());
        }
        Ok(affine_row(&h, store.get(self.head.0), store.get(self.head.1)))
    }
}

/// `x W + b` for a single row.
fn affine_row(x: &[f64], w: &Matrix, b: &Matrix) -> Vec<f64> {
    let mut out = b.data().to_vec();
    let cols = w.cols();
    for (k, &xk) in x.iter().enumerate() {
        if xk == 0.0 {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(&w.data()[k * cols..(k + 1) * cols]) {
            *o += xk * wv;
        }
    }
    out
}

/// Hidden width bounds for the decoder layers.
pub const DECODER_WIDTH_RANGE: std::ops::RangeInclusive<usize> = 32..=62;
/// Preferred hidden size for trainable cells when several sizes fit the budget.
pub const DEFAULT_CELL_HIDDEN: usize = 32;

/// Shapes chosen for one model so that all models carry similar numbers of
/// trainable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSize {
    pub kind: MemoryKind,
    /// Cell hidden size, or reservoir size for the ESN kinds.
    pub memory_dim: usize,
    pub decoder_width: usize,
    pub recurrent_params: usize,
    pub decoder_params: usize,
    pub total_params: usize,
}

/// Actor and critic decoders over a `memory_dim`-wide state.
pub fn decoder_parameter_count(memory_dim: usize, width: usize, n_layers: usize, n_actions: usize) -> usize {
    let cfg = MlpConfig {
        n_hidden_units: width,
        n_layers,
    };
    mlp_parameter_count(cfg, memory_dim, n_actions) + mlp_parameter_count(cfg, memory_dim, 1)
}

pub fn model_size(
    kind: MemoryKind,
    input_dim: usize,
    memory_dim: usize,
    decoder_width: usize,
    n_layers: usize,
    n_actions: usize,
) -> ModelSize {
    let recurrent_params = cell_parameter_count(kind, input_dim, memory_dim);
    let decoder_params = decoder_parameter_count(memory_dim, decoder_width, n_layers, n_actions);
    ModelSize {
        kind,
        memory_dim,
        decoder_width,
        recurrent_params,
        decoder_params,
        total_params: recurrent_params + decoder_params,
    }
}

/// Sizes every model to a shared parameter budget.
///
/// Reservoir sizes are fixed by their configs, so the budget is taken from
/// the overlap of the two reservoir models' reachable counts (its midpoint),
/// or the midpoint of the gap between them when they do not overlap. Each
/// model then picks the decoder width (and, for trainable cells, the hidden
/// size) closest to that budget.
pub fn equalize_model_sizes(
    kinds: &[MemoryKind],
    input_dim: usize,
    n_actions: usize,
    n_layers: usize,
    dense: &EsnConfig,
    local: &EsnConfig,
) -> Vec<ModelSize> {
    let (lo, hi) = (*DECODER_WIDTH_RANGE.start(), *DECODER_WIDTH_RANGE.end());
    let span = |n: usize| {
        (
            decoder_parameter_count(n, lo, n_layers, n_actions),
            decoder_parameter_count(n, hi, n_layers, n_actions),
        )
    };
    let (d_lo, d_hi) = span(dense.reservoir_size(input_dim));
    let (l_lo, l_hi) = span(local.reservoir_size(input_dim));
    let (a, b) = (d_lo.max(l_lo), d_hi.min(l_hi));
    let target = (a + b) as f64 / 2.0;

    let rel = |count: usize| (count as f64 - target).abs() / target;
    kinds
        .iter()
        .map(|&kind| {
            let memory_dims: Vec<usize> = match kind {
                MemoryKind::EsnDense => vec![dense.reservoir_size(input_dim)],
                MemoryKind::EsnLocal => vec![local.reservoir_size(input_dim)],
                _ => (4..=256).collect(),
            };
            let mut best: Option<(ModelSize, (bool, usize, f64))> = None;
            for &m in &memory_dims {
                for w in DECODER_WIDTH_RANGE {
                    let size = model_size(kind, input_dim, m, w, n_layers, n_actions);
                    let err = rel(size.total_params);
                    let key = (err > 0.01, m.abs_diff(DEFAULT_CELL_HIDDEN), err);
                    let better = match &best {
                        None => true,
                        Some((_, k)) => {
                            (key.0, key.1) < (k.0, k.1) || ((key.0, key.1) == (k.0, k.1) && key.2 < k.2)
                        }
                    };
                    if better {
                        best = Some((size, key));
                    }
                }
            }
            best.expect("non-empty search").0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn zero_params(store: &mut ParamStore) {
        for id in store.ids().collect::<Vec<_>>() {
            store.get_mut(id).scale_in_place(0.0);
        }
    }

    #[test]
    fn counts_follow_standard_formulas() {
        assert_eq!(cell_parameter_count(MemoryKind::Linear, 4, 8), 40);
        let (n, h) = (7, 11);
        assert_eq!(cell_parameter_count(MemoryKind::Lstm, n, h), 4 * (h * (n + h) + h));
        assert_eq!(cell_parameter_count(MemoryKind::Gru, n, h), 3 * (h * (n + h) + h));
        assert_eq!(cell_parameter_count(MemoryKind::EsnLocal, n, h), 0);
    }

    #[test]
    fn store_sizes_match_counts() {
        for kind in [MemoryKind::Linear, MemoryKind::Rnn, MemoryKind::Gru, MemoryKind::Lstm] {
            let mut store = ParamStore::new();
            let cfg = CellConfig { kind, input_dim: 5, hidden_dim: 9 };
            MemoryCell::new(cfg, &mut store, &mut rng_from_seed(1)).unwrap();
            assert_eq!(store.scalar_count(), cell_parameter_count(kind, 5, 9), "{kind}");
        }
        let mut store = ParamStore::new();
        let cfg = MlpConfig { n_hidden_units: 33, n_layers: 2 };
        Mlp::new("m", cfg, 12, 3, &mut store, &mut rng_from_seed(2)).unwrap();
        assert_eq!(store.scalar_count(), mlp_parameter_count(cfg, 12, 3));
    }

    #[test]
    fn zero_gru_halves_state() {
        let mut store = ParamStore::new();
        let cfg = CellConfig { kind: MemoryKind::Gru, input_dim: 3, hidden_dim: 4 };
        let cell = MemoryCell::new(cfg, &mut store, &mut rng_from_seed(3)).unwrap();
        zero_params(&mut store);
        let mut tape = Tape::new();
        let h0 = tape.constant(Matrix::row_vector(vec![0.4, -0.2, 1.0, 0.0])).unwrap();
        let x = tape.constant(Matrix::row_vector(vec![1.0, 2.0, 3.0])).unwrap();
        let state = CellState { h: Some(h0), c: None };
        let (_, out) = cell.step(&mut tape, &store, &state, x).unwrap();
        assert_eq!(tape.value(out).data(), &[0.2, -0.1, 0.5, 0.0]);
    }

    #[test]
    fn zero_lstm_halves_memory() {
        let mut store = ParamStore::new();
        let cfg = CellConfig { kind: MemoryKind::Lstm, input_dim: 2, hidden_dim: 3 };
        let cell = MemoryCell::new(cfg, &mut store, &mut rng_from_seed(4)).unwrap();
        zero_params(&mut store);
        let mut tape = Tape::new();
        let c0 = vec![0.8, -1.5, 0.1];
        let h0 = tape.constant(Matrix::row_vector(vec![0.3, 0.3, 0.3])).unwrap();
        let c = tape.constant(Matrix::row_vector(c0.clone())).unwrap();
        let x = tape.constant(Matrix::row_vector(vec![1.0, -1.0])).unwrap();
        let (state, out) = cell
            .step(&mut tape, &store, &CellState { h: Some(h0), c: Some(c) }, x)
            .unwrap();
        for k in 0..3 {
            let c_new = tape.value(state.c.unwrap()).data()[k];
            assert!((c_new - 0.5 * c0[k]).abs() < 1e-15);
            let h = tape.value(out).data()[k];
            assert!((h - 0.5 * (0.5 * c0[k]).tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_mlp_outputs_head_bias() {
        let mut store = ParamStore::new();
        let mlp = Mlp::new("m", MlpConfig::default(), 4, 2, &mut store, &mut rng_from_seed(5)).unwrap();
        zero_params(&mut store);
        let head_bias = mlp.param_ids()[mlp.param_ids().len() - 1];
        *store.get_mut(head_bias) = Matrix::row_vector(vec![0.25, -3.0]);
        let out = mlp.forward_plain(&store, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(out, vec![0.25, -3.0]);
    }

    #[test]
    fn one_unit_mlp_is_tanh_path() {
        let mut store = ParamStore::new();
        let cfg = MlpConfig { n_hidden_units: 1, n_layers: 1 };
        let mlp = Mlp::new("m", cfg, 1, 1, &mut store, &mut rng_from_seed(6)).unwrap();
        for id in mlp.param_ids() {
            let v = if store.name(id).ends_with("weight") { 1.0 } else { 0.0 };
            *store.get_mut(id) = Matrix::scalar(v);
        }
        for x in [-2.0, 0.0, 0.3] {
            assert_eq!(mlp.forward_plain(&store, &[x]).unwrap(), vec![f64::tanh(x)]);
        }
    }

    #[test]
    fn plain_and_tape_forward_agree() {
        let mut store = ParamStore::new();
        let mlp = Mlp::new("m", MlpConfig::default(), 6, 3, &mut store, &mut rng_from_seed(7)).unwrap();
        let mut rng = rng_from_seed(8);
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let mut tape = Tape::new();
        let x = tape
            .constant(Matrix::from_vec(5, 6, rows.concat()).unwrap())
            .unwrap();
        let y = mlp.forward(&mut tape, &store, x).unwrap();
        for (r, row) in rows.iter().enumerate() {
            let plain = mlp.forward_plain(&store, row).unwrap();
            for (a, b) in plain.iter().zip(tape.value(y).row(r)) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cell_rejects_wrong_input_width() {
        let mut store = ParamStore::new();
        let cfg = CellConfig { kind: MemoryKind::Rnn, input_dim: 3, hidden_dim: 2 };
        let cell = MemoryCell::new(cfg, &mut store, &mut rng_from_seed(9)).unwrap();
        let mut tape = Tape::new();
        let s = cell.initial_state(&mut tape).unwrap();
        let x = tape.constant(Matrix::zeros(1, 4)).unwrap();
        assert!(matches!(cell.step(&mut tape, &store, &s, x), Err(Error::Config(_))));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in MemoryKind::ALL {
            assert_eq!(k.name().parse::<MemoryKind>().unwrap(), k);
        }
        assert_eq!("mlp".parse::<MemoryKind>().unwrap(), MemoryKind::Linear);
        assert!("transformer".parse::<MemoryKind>().is_err());
    }
}
