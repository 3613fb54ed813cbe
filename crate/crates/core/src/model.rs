//! Stacked LSTM character model with a time-distributed softmax head.
//!
//! Activations are stored time-major: row `t * batch + b` of a sequence
//! matrix belongs to batch row `b` at step `t`. Gate blocks inside a
//! `4H` row are ordered input, forget, output, candidate.

use thiserror::Error;

use crate::corpus::IdGrid;
use crate::numerics::{
    argmax, clamp_prob, gemm, gemm_slices, sigmoid_scalar, softmax_in_place, Matrix, NumericsError,
    Rng, Trans,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    BadConfig(String),
    #[error("{what}: expected {expected:?}, got {got:?}")]
    Shape {
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("input id {id} is out of range for vocabulary size {vocab}")]
    IdOutOfRange { id: usize, vocab: usize },
    #[error("cache was produced by a different model ({0})")]
    CacheMismatch(&'static str),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub dropout: f64,
}

impl ModelConfig {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            hidden_size: 256,
            num_layers: 3,
            dropout: 0.2,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.vocab_size < 2 {
            return Err(ModelError::BadConfig(format!(
                "vocab_size must be >= 2, got {}",
                self.vocab_size
            )));
        }
        if self.hidden_size == 0 || self.num_layers == 0 {
            return Err(ModelError::BadConfig(
                "hidden_size and num_layers must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::BadConfig(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    pub fn layer_input_dim(&self, layer: usize) -> usize {
        if layer == 0 {
            self.vocab_size
        } else {
            self.hidden_size
        }
    }
}

/// Weights of one LSTM layer: `w` is `4H x D`, `u` is `4H x H`, `b` is `1 x 4H`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub w: Matrix,
    pub u: Matrix,
    pub b: Matrix,
}

/// Dense projection shared by every timestep: `w` is `V x H`, `b` is `1 x V`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputParams {
    pub w: Matrix,
    pub b: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub layers: Vec<LayerParams>,
    pub output: OutputParams,
}

/// Same layout as the trainable tensors of [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
    pub output: OutputParams,
}

/// Shape and whether the tensor is a bias (stored with rank 1 on disk).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub is_bias: bool,
}

/// Tensor declaration order shared by checkpoints, Adam state and gradient
/// checks: per layer `w, u, b`, then `output.w, output.b`.
pub fn tensor_specs(cfg: &ModelConfig) -> Vec<TensorSpec> {
    let h = cfg.hidden_size;
    let mut specs = Vec::with_capacity(cfg.num_layers * 3 + 2);
    for l in 0..cfg.num_layers {
        let spec = |name: &str, rows, cols, is_bias| TensorSpec {
            name: format!("layer{l}.{name}"),
            rows,
            cols,
            is_bias,
        };
        specs.push(spec("w", 4 * h, cfg.layer_input_dim(l), false));
        specs.push(spec("u", 4 * h, h, false));
        specs.push(spec("b", 1, 4 * h, true));
    }
    specs.push(TensorSpec {
        name: "output.w".into(),
        rows: cfg.vocab_size,
        cols: h,
        is_bias: false,
    });
    specs.push(TensorSpec {
        name: "output.b".into(),
        rows: 1,
        cols: cfg.vocab_size,
        is_bias: true,
    });
    specs
}

fn collect_tensors<'a>(layers: &'a [LayerParams], output: &'a OutputParams) -> Vec<&'a Matrix> {
    let mut out: Vec<&Matrix> = layers.iter().flat_map(|l| [&l.w, &l.u, &l.b]).collect();
    out.push(&output.w);
    out.push(&output.b);
    out
}

fn collect_tensors_mut<'a>(
    layers: &'a mut [LayerParams],
    output: &'a mut OutputParams,
) -> Vec<&'a mut Matrix> {
    let mut out: Vec<&mut Matrix> = layers
        .iter_mut()
        .flat_map(|l| [&mut l.w, &mut l.u, &mut l.b])
        .collect();
    out.push(&mut output.w);
    out.push(&mut output.b);
    out
}

fn zero_layers(cfg: &ModelConfig) -> (Vec<LayerParams>, OutputParams) {
    let h = cfg.hidden_size;
    let layers = (0..cfg.num_layers)
        .map(|l| LayerParams {
            w: Matrix::zeros(4 * h, cfg.layer_input_dim(l)),
            u: Matrix::zeros(4 * h, h),
            b: Matrix::zeros(1, 4 * h),
        })
        .collect();
    let output = OutputParams {
        w: Matrix::zeros(cfg.vocab_size, h),
        b: Matrix::zeros(1, cfg.vocab_size),
    };
    (layers, output)
}

impl ModelParams {
    pub fn zeros(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let (layers, output) = zero_layers(&config);
        Ok(Self {
            config,
            layers,
            output,
        })
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        collect_tensors(&self.layers, &self.output)
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        collect_tensors_mut(&mut self.layers, &mut self.output)
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Rebuilds parameters from tensors in declaration order.
    pub fn from_tensors(config: ModelConfig, tensors: Vec<Matrix>) -> Result<Self, ModelError> {
        let mut params = Self::zeros(config)?;
        let specs = tensor_specs(&config);
        if tensors.len() != specs.len() {
            return Err(ModelError::BadConfig(format!(
                "expected {} tensors, got {}",
                specs.len(),
                tensors.len()
            )));
        }
        for ((slot, t), spec) in params.tensors_mut().into_iter().zip(tensors).zip(&specs) {
            if t.shape() != (spec.rows, spec.cols) {
                return Err(ModelError::Shape {
                    what: "tensor",
                    expected: (spec.rows, spec.cols),
                    got: t.shape(),
                });
            }
            *slot = t;
        }
        Ok(params)
    }
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let (layers, output) = zero_layers(&params.config);
        Self { layers, output }
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        collect_tensors(&self.layers, &self.output)
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        collect_tensors_mut(&mut self.layers, &mut self.output)
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.data())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

/// Uniform(-s, s) weights with `s = 1/sqrt(fan_in)`; zero biases except
/// the forget-gate slice, which starts at 1.
pub fn init_params(config: ModelConfig, rng: &mut Rng) -> Result<ModelParams, ModelError> {
    let mut params = ModelParams::zeros(config)?;
    let h = config.hidden_size;
    let mut fill = |m: &mut Matrix, fan_in: usize| {
        let s = 1.0 / (fan_in as f64).sqrt();
        for x in m.data_mut() {
            // uniform() is half-open; reflect so the draw lies in (-s, s)
            let v = rng.uniform(-s, s);
            *x = if v == -s { 0.0 } else { v };
        }
    };
    for (l, layer) in params.layers.iter_mut().enumerate() {
        fill(&mut layer.w, config.layer_input_dim(l));
        fill(&mut layer.u, h);
        layer.b.data_mut()[h..2 * h].fill(1.0);
    }
    fill(&mut params.output.w, h);
    Ok(params)
}

/// Hidden and memory state per layer, each `batch x H`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<Matrix>,
    pub c: Vec<Matrix>,
}

impl LstmState {
    pub fn zeros(cfg: &ModelConfig, batch: usize) -> Self {
        let z = || {
            (0..cfg.num_layers)
                .map(|_| Matrix::zeros(batch, cfg.hidden_size))
                .collect()
        };
        Self { h: z(), c: z() }
    }

    pub fn batch(&self) -> usize {
        self.h.first().map_or(0, Matrix::rows)
    }
}

/// Intermediates of one cell step, all `batch x H` except `gates` (`batch x 4H`,
/// post-activation).
#[derive(Debug, Clone)]
pub struct CellCache {
    pub gates: Matrix,
    pub c_prev: Matrix,
    pub c: Matrix,
    pub tanh_c: Matrix,
}

/// One LSTM step given the precomputed input contribution `zx = x W^T + b`.
fn cell_step(
    mut z: Matrix,
    h_prev: &Matrix,
    c_prev: &Matrix,
    u: &Matrix,
) -> Result<(Matrix, Matrix, CellCache), ModelError> {
    let (batch, hidden) = h_prev.shape();
    gemm(1.0, h_prev, Trans::No, u, Trans::Yes, 1.0, &mut z)?;
    let mut c = Matrix::zeros(batch, hidden);
    let mut tanh_c = Matrix::zeros(batch, hidden);
    let mut h = Matrix::zeros(batch, hidden);
    for r in 0..batch {
        let zr = z.row_mut(r);
        for x in &mut zr[..3 * hidden] {
            *x = sigmoid_scalar(*x);
        }
        for x in &mut zr[3 * hidden..] {
            *x = x.tanh();
        }
        let (i, rest) = zr.split_at(hidden);
        let (f, rest) = rest.split_at(hidden);
        let (o, g) = rest.split_at(hidden);
        let cp = c_prev.row(r);
        let cr = c.row_mut(r);
        for k in 0..hidden {
            cr[k] = f[k] * cp[k] + i[k] * g[k];
        }
        let tr = tanh_c.row_mut(r);
        for k in 0..hidden {
            tr[k] = cr[k].tanh();
        }
        let hr = h.row_mut(r);
        for k in 0..hidden {
            hr[k] = o[k] * tr[k];
        }
    }
    Ok((
        h,
        c.clone(),
        CellCache {
            gates: z,
            c_prev: c_prev.clone(),
            c,
            tanh_c,
        },
    ))
}

/// A single LSTM cell update on dense inputs `x` (`batch x D`).
pub fn lstm_cell_forward(
    x: &Matrix,
    h_prev: &Matrix,
    c_prev: &Matrix,
    params: &LayerParams,
) -> Result<(Matrix, Matrix, CellCache), ModelError> {
    let four_h = params.u.rows();
    let hidden = params.u.cols();
    if x.cols() != params.w.cols() {
        return Err(ModelError::Shape {
            what: "cell input",
            expected: (x.rows(), params.w.cols()),
            got: x.shape(),
        });
    }
    for (what, m) in [("h_prev", h_prev), ("c_prev", c_prev)] {
        if m.shape() != (x.rows(), hidden) {
            return Err(ModelError::Shape {
                what,
                expected: (x.rows(), hidden),
                got: m.shape(),
            });
        }
    }
    let mut z = Matrix::zeros(x.rows(), four_h);
    for r in 0..x.rows() {
        z.row_mut(r).copy_from_slice(params.b.data());
    }
    gemm(1.0, x, Trans::No, &params.w, Trans::Yes, 1.0, &mut z)?;
    cell_step(z, h_prev, c_prev, &params.u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-layer record of a forward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    /// Dense input for layers above the first (`(L*B) x H`, after dropout).
    pub input: Option<Matrix>,
    /// Hidden state before each step, stacked time-major (`(L*B) x H`).
    pub h_prev: Matrix,
    pub steps: Vec<CellCache>,
    /// Inverted-dropout multipliers (`B x H`), shared by all steps.
    pub mask: Option<Matrix>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub batch: usize,
    pub steps: usize,
    /// Input ids, time-major.
    pub ids: Vec<usize>,
    pub layers: Vec<LayerCache>,
    /// Top layer output after dropout, `(L*B) x H`.
    pub top: Matrix,
    pub probs: SeqProbs,
}

/// Softmax outputs for a `batch x steps` grid, rows stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqProbs {
    pub batch: usize,
    pub steps: usize,
    pub probs: Matrix,
}

impl SeqProbs {
    pub fn row(&self, b: usize, t: usize) -> &[f64] {
        self.probs.row(t * self.batch + b)
    }

    pub fn vocab_size(&self) -> usize {
        self.probs.cols()
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub logits: Matrix,
    pub probs: SeqProbs,
    pub state: LstmState,
    pub cache: ForwardCache,
}

fn dropout_mask(batch: usize, hidden: usize, p: f64, rng: &mut Rng) -> Matrix {
    let keep = 1.0 - p;
    let scale = 1.0 / keep;
    Matrix::from_fn(batch, hidden, |_, _| if rng.bernoulli(keep) { scale } else { 0.0 })
}

fn apply_mask(seq: &mut Matrix, mask: &Matrix) {
    let batch = mask.rows();
    for r in 0..seq.rows() {
        let m = mask.row(r % batch);
        for (x, &k) in seq.row_mut(r).iter_mut().zip(m) {
            *x *= k;
        }
    }
}

/// Runs the model over a `batch x steps` grid of ids.
///
/// In `Train` mode with `dropout > 0`, each layer draws one `batch x H`
/// mask from `rng` for the whole segment. `Eval` mode never touches `rng`.
pub fn forward(
    params: &ModelParams,
    inputs: &IdGrid,
    state: &LstmState,
    mode: Mode,
    rng: &mut Rng,
) -> Result<ForwardOutput, ModelError> {
    let cfg = &params.config;
    let (batch, steps) = (inputs.batch(), inputs.steps());
    let hidden = cfg.hidden_size;
    let v = cfg.vocab_size;
    if state.h.len() != cfg.num_layers || state.batch() != batch {
        return Err(ModelError::Shape {
            what: "state",
            expected: (cfg.num_layers, batch),
            got: (state.h.len(), state.batch()),
        });
    }
    let ids = inputs.time_major();
    if let Some(&id) = ids.iter().find(|&&id| id >= v) {
        return Err(ModelError::IdOutOfRange { id, vocab: v });
    }
    let n = batch * steps;
    let use_dropout = mode == Mode::Train && cfg.dropout > 0.0;

    let mut new_state = state.clone();
    let mut layer_caches = Vec::with_capacity(cfg.num_layers);
    let mut below: Option<Matrix> = None;

    for (l, layer) in params.layers.iter().enumerate() {
        // input contribution for every step at once
        let mut zx = Matrix::zeros(n, 4 * hidden);
        for r in 0..n {
            zx.row_mut(r).copy_from_slice(layer.b.data());
        }
        match &below {
            None => {
                let w = &layer.w;
                for (r, &id) in ids.iter().enumerate() {
                    let row = zx.row_mut(r);
                    for (k, x) in row.iter_mut().enumerate() {
                        *x += w.get(k, id);
                    }
                }
            }
            Some(x) => gemm(1.0, x, Trans::No, &layer.w, Trans::Yes, 1.0, &mut zx)?,
        }

        let mut out = Matrix::zeros(n, hidden);
        let mut h_prev_all = Matrix::zeros(n, hidden);
        let mut step_caches = Vec::with_capacity(steps);
        let mut h = state.h[l].clone();
        let mut c = state.c[l].clone();
        for t in 0..steps {
            let rows = t * batch..(t + 1) * batch;
            h_prev_all.data_mut()[rows.start * hidden..rows.end * hidden]
                .copy_from_slice(h.data());
            let z = zx.row_block(rows.start, rows.end);
            let (h_new, c_new, cache) = cell_step(z, &h, &c, &layer.u)?;
            out.data_mut()[rows.start * hidden..rows.end * hidden].copy_from_slice(h_new.data());
            step_caches.push(cache);
            h = h_new;
            c = c_new;
        }
        new_state.h[l] = h;
        new_state.c[l] = c;

        let mask = use_dropout.then(|| dropout_mask(batch, hidden, cfg.dropout, rng));
        if let Some(m) = &mask {
            apply_mask(&mut out, m);
        }
        layer_caches.push(LayerCache {
            input: below.take(),
            h_prev: h_prev_all,
            steps: step_caches,
            mask,
        });
        below = Some(out);
    }

    let top = below.expect("at least one layer");
    let mut logits = Matrix::zeros(n, v);
    for r in 0..n {
        logits.row_mut(r).copy_from_slice(params.output.b.data());
    }
    gemm(1.0, &top, Trans::No, &params.output.w, Trans::Yes, 1.0, &mut logits)?;
    let mut probs = logits.clone();
    for r in 0..n {
        softmax_in_place(probs.row_mut(r));
    }
    let probs = SeqProbs {
        batch,
        steps,
        probs,
    };
    Ok(ForwardOutput {
        logits,
        probs: probs.clone(),
        state: new_state,
        cache: ForwardCache {
            batch,
            steps,
            ids,
            layers: layer_caches,
            top,
            probs,
        },
    })
}

/// Logits for one step of a single sequence; advances `state` in place.
pub fn step_logits(
    params: &ModelParams,
    id: usize,
    state: &mut LstmState,
) -> Result<Vec<f64>, ModelError> {
    let grid = IdGrid::new(1, 1, vec![id]);
    // eval mode never draws from the rng
    let mut unused = Rng::new(0);
    let out = forward(params, &grid, state, Mode::Eval, &mut unused)?;
    *state = out.state;
    Ok(out.logits.into_vec())
}

/// `(probs - onehot(targets)) / (B*L)`: the gradient of mean cross-entropy
/// with respect to the logits.
pub fn dlogits_from_targets(probs: &SeqProbs, targets: &IdGrid) -> Result<Matrix, ModelError> {
    check_targets(probs, targets)?;
    let n = probs.batch * probs.steps;
    let scale = 1.0 / n as f64;
    let mut d = probs.probs.scale(scale);
    for t in 0..probs.steps {
        for b in 0..probs.batch {
            let r = t * probs.batch + b;
            let id = targets.get(b, t);
            let x = d.get(r, id);
            d.set(r, id, x - scale);
        }
    }
    Ok(d)
}

fn check_targets(probs: &SeqProbs, targets: &IdGrid) -> Result<(), ModelError> {
    if (targets.batch(), targets.steps()) != (probs.batch, probs.steps) {
        return Err(ModelError::Shape {
            what: "targets",
            expected: (probs.batch, probs.steps),
            got: (targets.batch(), targets.steps()),
        });
    }
    if let Some(&id) = targets.as_slice().iter().find(|&&id| id >= probs.vocab_size()) {
        return Err(ModelError::IdOutOfRange {
            id,
            vocab: probs.vocab_size(),
        });
    }
    Ok(())
}

/// Gradients of mean cross-entropy over all `B*L` positions.
pub fn backward(
    params: &ModelParams,
    cache: &ForwardCache,
    targets: &IdGrid,
) -> Result<Gradients, ModelError> {
    let dlogits = dlogits_from_targets(&cache.probs, targets)?;
    backward_from_dlogits(params, cache, &dlogits)
}

/// Backpropagation through the cached segment, starting from an arbitrary
/// logit gradient. No gradient flows into the state the segment started from.
pub fn backward_from_dlogits(
    params: &ModelParams,
    cache: &ForwardCache,
    dlogits: &Matrix,
) -> Result<Gradients, ModelError> {
    let cfg = &params.config;
    let hidden = cfg.hidden_size;
    let (batch, steps) = (cache.batch, cache.steps);
    let n = batch * steps;
    if cache.layers.len() != cfg.num_layers || cache.top.shape() != (n, hidden) {
        return Err(ModelError::CacheMismatch("layer count or hidden size"));
    }
    if dlogits.shape() != (n, cfg.vocab_size) {
        return Err(ModelError::Shape {
            what: "dlogits",
            expected: (n, cfg.vocab_size),
            got: dlogits.shape(),
        });
    }
    let mut grads = Gradients::zeros_like(params);

    gemm(1.0, dlogits, Trans::Yes, &cache.top, Trans::No, 0.0, &mut grads.output.w)?;
    grads.output.b = dlogits.column_sums();
    let mut d_above = Matrix::zeros(n, hidden);
    gemm(1.0, dlogits, Trans::No, &params.output.w, Trans::No, 0.0, &mut d_above)?;

    for l in (0..cfg.num_layers).rev() {
        let lc = &cache.layers[l];
        let layer = &params.layers[l];
        if lc.steps.len() != steps {
            return Err(ModelError::CacheMismatch("step count"));
        }
        if let Some(mask) = &lc.mask {
            apply_mask(&mut d_above, mask);
        }

        let mut dz_all = Matrix::zeros(n, 4 * hidden);
        let mut dh_next = Matrix::zeros(batch, hidden);
        let mut dc_next = Matrix::zeros(batch, hidden);
        for t in (0..steps).rev() {
            let sc = &lc.steps[t];
            let base = t * batch;
            for r in 0..batch {
                let g = sc.gates.row(r);
                let (gi, rest) = g.split_at(hidden);
                let (gf, rest) = rest.split_at(hidden);
                let (go, gg) = rest.split_at(hidden);
                let tc = sc.tanh_c.row(r);
                let cp = sc.c_prev.row(r);
                let dh_up = d_above.row(base + r);
                let dhn = dh_next.row(r).to_vec();
                let dcn = dc_next.row_mut(r);
                let dz = dz_all.row_mut(base + r);
                for k in 0..hidden {
                    let dh = dh_up[k] + dhn[k];
                    let d_o = dh * tc[k];
                    let dc = dcn[k] + dh * go[k] * (1.0 - tc[k] * tc[k]);
                    let di = dc * gg[k];
                    let dg = dc * gi[k];
                    let df = dc * cp[k];
                    dcn[k] = dc * gf[k];
                    dz[k] = di * gi[k] * (1.0 - gi[k]);
                    dz[hidden + k] = df * gf[k] * (1.0 - gf[k]);
                    dz[2 * hidden + k] = d_o * go[k] * (1.0 - go[k]);
                    dz[3 * hidden + k] = dg * (1.0 - gg[k] * gg[k]);
                }
            }
            // dh_next = dz_t * U
            let dz_t = &dz_all.data()[base * 4 * hidden..(base + batch) * 4 * hidden];
            gemm_slices(
                1.0,
                dz_t,
                4 * hidden,
                Trans::No,
                layer.u.data(),
                hidden,
                Trans::No,
                0.0,
                dh_next.data_mut(),
                batch,
                4 * hidden,
                hidden,
            );
        }

        let lg = &mut grads.layers[l];
        gemm(1.0, &dz_all, Trans::Yes, &lc.h_prev, Trans::No, 0.0, &mut lg.u)?;
        lg.b = dz_all.column_sums();
        match &lc.input {
            None => {
                // one-hot input: scatter rows of dz into the matching columns
                let w = &mut lg.w;
                for (r, &id) in cache.ids.iter().enumerate() {
                    for (k, &d) in dz_all.row(r).iter().enumerate() {
                        let x = w.get(k, id);
                        w.set(k, id, x + d);
                    }
                }
            }
            Some(x) => {
                gemm(1.0, &dz_all, Trans::Yes, x, Trans::No, 0.0, &mut lg.w)?;
                let mut d_below = Matrix::zeros(n, hidden);
                gemm(1.0, &dz_all, Trans::No, &layer.w, Trans::No, 0.0, &mut d_below)?;
                d_above = d_below;
            }
        }
    }
    Ok(grads)
}

/// Mean cross-entropy and argmax accuracy (ties toward the lowest id).
pub fn loss_and_accuracy(probs: &SeqProbs, targets: &IdGrid) -> Result<(f64, f64), ModelError> {
    check_targets(probs, targets)?;
    let n = probs.batch * probs.steps;
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for t in 0..probs.steps {
        for b in 0..probs.batch {
            let row = probs.row(b, t);
            let target = targets.get(b, t);
            loss -= clamp_prob(row[target]).ln();
            if argmax(row) == target {
                correct += 1;
            }
        }
    }
    Ok((loss / n as f64, correct as f64 / n as f64))
}
