//! Dense actor-critic network with hand-written backpropagation and Adam.
//!
//! One tanh trunk feeds two linear heads: the Gaussian policy mean and the
//! state value. The policy's log standard deviation is a free vector that does
//! not depend on the observation.
//!
//! Every parameter lives in one flat `Vec<f64>`. For each dense layer the
//! weight matrix is stored row-major as `inputs x outputs`, followed by its
//! bias. Layer order is trunk layers, mean head, value head, then `log_std`.
//! Gradients and Adam moments share that layout.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod checkpoint;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

const TRUNK_GAIN: f64 = std::f64::consts::SQRT_2;
const MEAN_HEAD_GAIN: f64 = 0.01;
const VALUE_HEAD_GAIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub action_dim: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, action_dim: usize) -> Result<Self> {
        let spec = MlpSpec {
            input_dim,
            hidden,
            action_dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.action_dim == 0 {
            return Err(Error::InvalidInput(
                "network input and action dimensions must be positive".into(),
            ));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "hidden layer widths must be non-empty and positive, got {:?}",
                self.hidden
            )));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        Layout::new(self).total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Dense {
    inputs: usize,
    outputs: usize,
    weights: usize,
    bias: usize,
}

impl Dense {
    fn w<'a>(&self, data: &'a [f64]) -> &'a [f64] {
        &data[self.weights..self.weights + self.inputs * self.outputs]
    }
    fn b<'a>(&self, data: &'a [f64]) -> &'a [f64] {
        &data[self.bias..self.bias + self.outputs]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Layout {
    trunk: Vec<Dense>,
    mean: Dense,
    value: Dense,
    log_std: usize,
    total: usize,
}

impl Layout {
    fn new(spec: &MlpSpec) -> Self {
        let mut offset = 0;
        let mut dense = |inputs: usize, outputs: usize| {
            let d = Dense {
                inputs,
                outputs,
                weights: offset,
                bias: offset + inputs * outputs,
            };
            offset += inputs * outputs + outputs;
            d
        };
        let mut trunk = Vec::with_capacity(spec.hidden.len());
        let mut width = spec.input_dim;
        for &h in &spec.hidden {
            trunk.push(dense(width, h));
            width = h;
        }
        let mean = dense(width, spec.action_dim);
        let value = dense(width, 1);
        let log_std = offset;
        Layout {
            trunk,
            mean,
            value,
            log_std,
            total: log_std + spec.action_dim,
        }
    }
}

/// Network parameters in the flat layout described at module level.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    spec: MlpSpec,
    layout: Layout,
    data: Vec<f64>,
}

impl PolicyParams {
    /// All-zero parameters (including `log_std`).
    pub fn zeros(spec: &MlpSpec) -> Result<Self> {
        spec.validate()?;
        let layout = Layout::new(spec);
        Ok(PolicyParams {
            data: vec![0.0; layout.total],
            spec: spec.clone(),
            layout,
        })
    }

    pub fn from_flat(spec: &MlpSpec, data: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(spec)?;
        if data.len() != p.data.len() {
            return Err(Error::DimensionMismatch {
                expected: p.data.len(),
                got: data.len(),
            });
        }
        p.data = data;
        Ok(p)
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn log_std(&self) -> &[f64] {
        &self.data[self.layout.log_std..]
    }

    pub fn log_std_mut(&mut self) -> &mut [f64] {
        let start = self.layout.log_std;
        &mut self.data[start..]
    }

    /// Bias of the policy-mean head; sets the mean emitted by a network whose
    /// mean-head weights are zero.
    pub fn mean_bias_mut(&mut self) -> &mut [f64] {
        let d = self.layout.mean;
        &mut self.data[d.bias..d.bias + d.outputs]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn clamp_log_std(&mut self) {
        for ls in self.log_std_mut() {
            *ls = ls.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }
}

/// Gradient of a scalar loss with respect to every parameter, in the same
/// layout as [`PolicyParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    data: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &PolicyParams) -> Self {
        Gradients {
            data: vec![0.0; params.len()],
        }
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|g| g.is_finite())
    }

    pub(crate) fn log_std_mut(&mut self, params: &PolicyParams) -> &mut [f64] {
        &mut self.data[params.layout.log_std..]
    }
}

/// Orthogonal initialization: gain `sqrt(2)` on the trunk, `0.01` on the mean
/// head, `1.0` on the value head, zero biases, `log_std = ln(0.5)`.
pub fn init(spec: &MlpSpec, seed: u64) -> Result<PolicyParams> {
    let mut params = PolicyParams::zeros(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = params.layout.clone();
    let heads = [(layout.mean, MEAN_HEAD_GAIN), (layout.value, VALUE_HEAD_GAIN)];
    let layers = layout
        .trunk
        .iter()
        .map(|d| (*d, TRUNK_GAIN))
        .chain(heads);
    for (dense, gain) in layers {
        let q = orthogonal(dense.outputs, dense.inputs, gain, &mut rng);
        let w = &mut params.data[dense.weights..dense.weights + dense.inputs * dense.outputs];
        for i in 0..dense.inputs {
            for j in 0..dense.outputs {
                w[i * dense.outputs + j] = q[(j, i)];
            }
        }
    }
    params.log_std_mut().fill(0.5f64.ln());
    Ok(params)
}

/// `rows x cols` matrix with orthonormal rows or columns (whichever is
/// shorter), scaled by `gain`.
fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (tall, short) = (rows.max(cols), rows.min(cols));
    let g = DMatrix::<f64>::from_fn(tall, short, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..short {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    let q = if rows < cols { q.transpose() } else { q };
    q * gain
}

/// Output of a forward pass for a single observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub mean: Vec<f64>,
    pub value: f64,
}

fn check_obs(params: &PolicyParams, obs: &[f64]) -> Result<()> {
    if obs.len() != params.spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: params.spec.input_dim,
            got: obs.len(),
        });
    }
    if !obs.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("observation"));
    }
    Ok(())
}

/// Policy mean and state value for one observation.
pub fn forward(params: &PolicyParams, obs: &[f64]) -> Result<Output> {
    check_obs(params, obs)?;
    let fwd = BatchForward::run(params, obs, 1);
    Ok(Output {
        mean: fwd.mean,
        value: fwd.value[0],
    })
}

/// Activations of a batched forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct BatchForward {
    batch: usize,
    /// Post-activation output of each trunk layer, `batch x width` row-major.
    hidden: Vec<Vec<f64>>,
    /// Policy means, `batch x action_dim` row-major.
    pub mean: Vec<f64>,
    pub value: Vec<f64>,
}

/// `c (m x n) = a (m x k) * b (k x n) + beta * c`, with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(c.len() >= m * n);
    // SAFETY: the strides describe in-bounds row-major or transposed views of
    // slices whose lengths the callers size as m*k, k*n and m*n.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn affine(dense: &Dense, data: &[f64], input: &[f64], batch: usize) -> Vec<f64> {
    let (i, o) = (dense.inputs, dense.outputs);
    let mut out = Vec::with_capacity(batch * o);
    let bias = dense.b(data);
    for _ in 0..batch {
        out.extend_from_slice(bias);
    }
    gemm(batch, i, o, input, (i, 1), dense.w(data), (o, 1), 1.0, &mut out);
    out
}

impl BatchForward {
    /// Runs the network on `batch` observations stored row-major in `obs`.
    /// Inputs are assumed finite and correctly sized.
    pub fn run(params: &PolicyParams, obs: &[f64], batch: usize) -> Self {
        debug_assert_eq!(obs.len(), batch * params.spec.input_dim);
        let data = &params.data;
        let mut hidden = Vec::with_capacity(params.layout.trunk.len());
        for dense in &params.layout.trunk {
            let input = hidden.last().map(Vec::as_slice).unwrap_or(obs);
            let mut z = affine(dense, data, input, batch);
            z.iter_mut().for_each(|v| *v = v.tanh());
            hidden.push(z);
        }
        let top = hidden.last().expect("validated spec has a hidden layer");
        let mean = affine(&params.layout.mean, data, top, batch);
        let value = affine(&params.layout.value, data, top, batch);
        BatchForward {
            batch,
            hidden,
            mean,
            value,
        }
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Accumulates (sums) parameter gradients for upstream gradients on the
    /// policy mean (`batch x action_dim`) and the value (`batch`).
    /// `log_std` gradients are not touched.
    pub fn backward(
        &self,
        params: &PolicyParams,
        obs: &[f64],
        d_mean: &[f64],
        d_value: &[f64],
        grads: &mut Gradients,
    ) {
        let layout = &params.layout;
        let data = &params.data;
        let b = self.batch;
        let top = self.hidden.last().expect("validated spec has a hidden layer");
        let width = layout.mean.inputs;

        let mut d_hidden = vec![0.0; b * width];
        for (head, upstream) in [(&layout.mean, d_mean), (&layout.value, d_value)] {
            let o = head.outputs;
            let g = &mut grads.data;
            gemm(
                width,
                b,
                o,
                top,
                (1, width),
                upstream,
                (o, 1),
                1.0,
                &mut g[head.weights..head.weights + width * o],
            );
            let gb = &mut g[head.bias..head.bias + o];
            for row in upstream.chunks_exact(o) {
                gb.iter_mut().zip(row).for_each(|(acc, d)| *acc += d);
            }
            gemm(b, o, width, upstream, (o, 1), head.w(data), (1, o), 1.0, &mut d_hidden);
        }

        for (l, dense) in layout.trunk.iter().enumerate().rev() {
            let (i, o) = (dense.inputs, dense.outputs);
            let act = &self.hidden[l];
            let mut dz = d_hidden;
            dz.iter_mut().zip(act).for_each(|(d, h)| *d *= 1.0 - h * h);
            let input = if l == 0 { obs } else { &self.hidden[l - 1] };
            let g = &mut grads.data;
            gemm(i, b, o, input, (1, i), &dz, (o, 1), 1.0, &mut g[dense.weights..dense.weights + i * o]);
            let gb = &mut g[dense.bias..dense.bias + o];
            for row in dz.chunks_exact(o) {
                gb.iter_mut().zip(row).for_each(|(acc, d)| *acc += d);
            }
            if l == 0 {
                break;
            }
            d_hidden = vec![0.0; b * i];
            gemm(b, o, i, &dz, (o, 1), dense.w(data), (1, o), 0.0, &mut d_hidden);
        }
    }
}

/// Upstream gradient of a scalar loss for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGrad {
    pub mean: Vec<f64>,
    pub value: f64,
    pub log_std: Vec<f64>,
}

/// Parameter gradients averaged over a batch of `(observation, upstream)`
/// pairs.
pub fn backward(params: &PolicyParams, batch: &[(Vec<f64>, OutputGrad)]) -> Result<Gradients> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("backward needs a non-empty batch".into()));
    }
    let a = params.spec.action_dim;
    let mut obs = Vec::with_capacity(batch.len() * params.spec.input_dim);
    let mut d_mean = Vec::with_capacity(batch.len() * a);
    let mut d_value = Vec::with_capacity(batch.len());
    let mut grads = Gradients::zeros_like(params);
    for (o, g) in batch {
        check_obs(params, o)?;
        if g.mean.len() != a || g.log_std.len() != a {
            return Err(Error::DimensionMismatch {
                expected: a,
                got: g.mean.len().min(g.log_std.len()),
            });
        }
        obs.extend_from_slice(o);
        d_mean.extend_from_slice(&g.mean);
        d_value.push(g.value);
        grads
            .log_std_mut(params)
            .iter_mut()
            .zip(&g.log_std)
            .for_each(|(acc, d)| *acc += d);
    }
    let fwd = BatchForward::run(params, &obs, batch.len());
    fwd.backward(params, &obs, &d_mean, &d_value, &mut grads);
    grads.scale(1.0 / batch.len() as f64);
    Ok(grads)
}

/// Adam moments for a [`PolicyParams`] of matching layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &PolicyParams) -> Self {
        AdamState {
            first_moment: vec![0.0; params.len()],
            second_moment: vec![0.0; params.len()],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. Non-finite gradients leave both the
/// parameters and the optimizer state untouched.
pub fn adam_step(
    params: &mut PolicyParams,
    adam: &mut AdamState,
    grads: &Gradients,
    learning_rate: f64,
) -> Result<()> {
    let n = params.len();
    if grads.data.len() != n || adam.first_moment.len() != n || adam.second_moment.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: grads.data.len(),
        });
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    adam.step += 1;
    let t = adam.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    let moments = adam.first_moment.iter_mut().zip(adam.second_moment.iter_mut());
    for ((p, g), (m, v)) in params.data.iter_mut().zip(&grads.data).zip(moments) {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
    }
    params.clamp_log_std();
    Ok(())
}
