//! Feed-forward and LSTM networks over flat `f64` parameter vectors.
//!
//! Inputs are batches `[B x m*l]` holding each window row-major (time-major),
//! outputs are `[B x k*l]`. Weight matrices are stored `[in x out]` row-major,
//! each followed by its bias. LSTM gate blocks are ordered input, forget,
//! candidate, output.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};
use crate::task::WindowShape;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Topology {
    Dnn {
        inputs: usize,
        hidden: Vec<usize>,
        outputs: usize,
    },
    Lstm {
        features: usize,
        steps: usize,
        hidden: usize,
        dense: usize,
        outputs: usize,
    },
}

/// Intermediate values kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub enum Trace {
    Dnn {
        /// Layer inputs: the batch itself, then each post-ReLU hidden layer.
        activations: Vec<Array2<f64>>,
    },
    Lstm {
        input: Array2<f64>,
        /// `h_0 ..= h_m`, with `h_0 = 0`.
        hidden: Vec<Array2<f64>>,
        /// `c_0 ..= c_m`, with `c_0 = 0`.
        cell: Vec<Array2<f64>>,
        /// Activated gates `[B x 4H]` for each step.
        gates: Vec<Array2<f64>>,
        dense: Array2<f64>,
    },
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn mat(params: &[f64], rows: usize, cols: usize) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((rows, cols), params).expect("parameter slice sized by layout")
}

fn mat_mut(params: &mut [f64], rows: usize, cols: usize) -> ArrayViewMut2<'_, f64> {
    ArrayViewMut2::from_shape((rows, cols), params).expect("parameter slice sized by layout")
}

/// Consecutive parameter slices in layout order.
struct Cursor<'a> {
    rest: &'a [f64],
}

impl<'a> Cursor<'a> {
    fn matrix(&mut self, rows: usize, cols: usize) -> ArrayView2<'a, f64> {
        let (head, tail) = self.rest.split_at(rows * cols);
        self.rest = tail;
        mat(head, rows, cols)
    }

    fn vector(&mut self, len: usize) -> ArrayView1<'a, f64> {
        let (head, tail) = self.rest.split_at(len);
        self.rest = tail;
        ArrayView1::from(head)
    }
}

struct CursorMut<'a> {
    rest: &'a mut [f64],
}

impl<'a> CursorMut<'a> {
    fn matrix(&mut self, rows: usize, cols: usize) -> ArrayViewMut2<'a, f64> {
        let (head, tail) = std::mem::take(&mut self.rest).split_at_mut(rows * cols);
        self.rest = tail;
        mat_mut(head, rows, cols)
    }

    fn vector(&mut self, len: usize) -> ArrayViewMut1<'a, f64> {
        let (head, tail) = std::mem::take(&mut self.rest).split_at_mut(len);
        self.rest = tail;
        ArrayViewMut1::from(head)
    }
}

/// `z = a W + b`
fn affine(a: &ArrayView2<f64>, w: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array2<f64> {
    let mut z = Array2::zeros((a.nrows(), w.ncols()));
    z.rows_mut().into_iter().for_each(|mut r| r.assign(b));
    general_mat_mul(1.0, a, w, 1.0, &mut z);
    z
}

/// Accumulates `aᵀ dz` and the column sums of `dz`, returns `dz Wᵀ`.
fn affine_backward(
    a: &ArrayView2<f64>,
    w: &ArrayView2<f64>,
    dz: &ArrayView2<f64>,
    gw: &mut ArrayViewMut2<f64>,
    gb: &mut ArrayViewMut1<f64>,
    need_input_grad: bool,
) -> Option<Array2<f64>> {
    general_mat_mul(1.0, &a.t(), dz, 1.0, gw);
    *gb += &dz.sum_axis(Axis(0));
    need_input_grad.then(|| dz.dot(&w.t()))
}

fn relu_inplace(z: &mut Array2<f64>) {
    z.mapv_inplace(|v| if v < 0.0 { 0.0 } else { v });
}

/// Masks `d` where the post-ReLU activation was not positive.
fn relu_backward(d: &mut Array2<f64>, activated: &Array2<f64>) {
    Zip::from(d).and(activated).for_each(|d, &a| {
        if a <= 0.0 {
            *d = 0.0;
        }
    });
}

impl Topology {
    pub fn dnn(shape: WindowShape, hidden: &[usize]) -> Topology {
        Topology::Dnn {
            inputs: shape.input_width(),
            hidden: hidden.to_vec(),
            outputs: shape.output_width(),
        }
    }

    pub fn lstm(shape: WindowShape, hidden: usize, dense: usize) -> Topology {
        Topology::Lstm {
            features: shape.l,
            steps: shape.m,
            hidden,
            dense,
            outputs: shape.output_width(),
        }
    }

    /// DNN `[512, 256]` hidden layers.
    pub fn default_dnn(shape: WindowShape) -> Topology {
        Topology::dnn(shape, &[512, 256])
    }

    /// LSTM with 128 hidden units and a 128-wide dense layer.
    pub fn default_lstm(shape: WindowShape) -> Topology {
        Topology::lstm(shape, 128, 128)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Topology::Dnn { .. } => "dnn",
            Topology::Lstm { .. } => "lstm",
        }
    }

    pub fn input_width(&self) -> usize {
        match self {
            Topology::Dnn { inputs, .. } => *inputs,
            Topology::Lstm { features, steps, .. } => features * steps,
        }
    }

    pub fn output_width(&self) -> usize {
        match self {
            Topology::Dnn { outputs, .. } | Topology::Lstm { outputs, .. } => *outputs,
        }
    }

    /// Whether this network maps windows of `shape` to forecasts of `shape`.
    pub fn fits(&self, shape: WindowShape) -> bool {
        let io = self.input_width() == shape.input_width() && self.output_width() == shape.output_width();
        match self {
            Topology::Dnn { .. } => io,
            Topology::Lstm { features, steps, .. } => io && *features == shape.l && *steps == shape.m,
        }
    }

    fn dnn_widths(inputs: usize, hidden: &[usize], outputs: usize) -> Vec<usize> {
        std::iter::once(inputs).chain(hidden.iter().copied()).chain(std::iter::once(outputs)).collect()
    }

    pub fn param_count(&self) -> usize {
        match self {
            Topology::Dnn { inputs, hidden, outputs } => Self::dnn_widths(*inputs, hidden, *outputs)
                .windows(2)
                .map(|w| w[0] * w[1] + w[1])
                .sum(),
            Topology::Lstm { features, hidden, dense, outputs, .. } => {
                let g = 4 * hidden;
                features * g + hidden * g + g + hidden * dense + dense + dense * outputs + outputs
            }
        }
    }

    /// Fan-in scaled uniform weights, zero biases.
    pub fn init(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.param_count());
        let mut uniform = |params: &mut Vec<f64>, n: usize, fan_in: usize| {
            let a = 1.0 / (fan_in as f64).sqrt();
            params.extend((0..n).map(|_| rng.random_range(-a..=a)));
        };
        match self {
            Topology::Dnn { inputs, hidden, outputs } => {
                for w in Self::dnn_widths(*inputs, hidden, *outputs).windows(2) {
                    uniform(&mut params, w[0] * w[1], w[0]);
                    params.extend(std::iter::repeat_n(0.0, w[1]));
                }
            }
            Topology::Lstm { features, hidden, dense, outputs, .. } => {
                let g = 4 * hidden;
                uniform(&mut params, features * g, *features);
                uniform(&mut params, hidden * g, *hidden);
                params.extend(std::iter::repeat_n(0.0, g));
                uniform(&mut params, hidden * dense, *hidden);
                params.extend(std::iter::repeat_n(0.0, *dense));
                uniform(&mut params, dense * outputs, *dense);
                params.extend(std::iter::repeat_n(0.0, *outputs));
            }
        }
        params
    }

    pub fn check(&self, params: &[f64], x: &ArrayView2<f64>) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(shape_err(format!("{} weights", self.param_count()), params.len()));
        }
        if x.ncols() != self.input_width() {
            return Err(shape_err(format!("{} input columns", self.input_width()), x.ncols()));
        }
        Ok(())
    }

    pub fn forward(&self, params: &[f64], x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(params, &x)?;
        Ok(self.run(params, x, false).0)
    }

    pub fn forward_traced(&self, params: &[f64], x: ArrayView2<f64>) -> Result<(Array2<f64>, Trace)> {
        self.check(params, &x)?;
        let (out, trace) = self.run(params, x, true);
        Ok((out, trace.expect("trace requested")))
    }

    fn run(&self, params: &[f64], x: ArrayView2<f64>, keep: bool) -> (Array2<f64>, Option<Trace>) {
        let mut cur = Cursor { rest: params };
        match self {
            Topology::Dnn { inputs, hidden, outputs } => {
                let widths = Self::dnn_widths(*inputs, hidden, *outputs);
                let layers = widths.len() - 1;
                let mut activations = Vec::with_capacity(if keep { layers } else { 0 });
                let mut a = x.to_owned();
                for (i, w) in widths.windows(2).enumerate() {
                    let weight = cur.matrix(w[0], w[1]);
                    let bias = cur.vector(w[1]);
                    let mut z = affine(&a.view(), &weight, &bias);
                    if i + 1 < layers {
                        relu_inplace(&mut z);
                    }
                    let prev = std::mem::replace(&mut a, z);
                    if keep {
                        activations.push(prev);
                    }
                }
                (a, keep.then_some(Trace::Dnn { activations }))
            }
            Topology::Lstm { features, steps, hidden, dense, outputs } => {
                let (l, h) = (*features, *hidden);
                let g = 4 * h;
                let wx = cur.matrix(l, g);
                let wh = cur.matrix(h, g);
                let b = cur.vector(g);
                let w1 = cur.matrix(h, *dense);
                let b1 = cur.vector(*dense);
                let w2 = cur.matrix(*dense, *outputs);
                let b2 = cur.vector(*outputs);

                let batch = x.nrows();
                let mut hs = vec![Array2::zeros((batch, h))];
                let mut cs = vec![Array2::zeros((batch, h))];
                let mut gates_all = Vec::with_capacity(*steps);
                for t in 0..*steps {
                    let xt = x.slice(s![.., t * l..(t + 1) * l]);
                    let mut z = affine(&xt, &wx, &b);
                    general_mat_mul(1.0, &hs.last().unwrap().view(), &wh, 1.0, &mut z);
                    let c_prev = cs.last().unwrap();
                    let mut c = Array2::<f64>::zeros((batch, h));
                    let mut hn = Array2::zeros((batch, h));
                    for (r, mut zr) in z.rows_mut().into_iter().enumerate() {
                        let zr = zr.as_slice_mut().expect("row-major");
                        let (zi, rest) = zr.split_at_mut(h);
                        let (zf, rest) = rest.split_at_mut(h);
                        let (zg, zo) = rest.split_at_mut(h);
                        for u in 0..h {
                            zi[u] = sigmoid(zi[u]);
                            zf[u] = sigmoid(zf[u]);
                            zg[u] = zg[u].tanh();
                            zo[u] = sigmoid(zo[u]);
                            let cv = zf[u] * c_prev[[r, u]] + zi[u] * zg[u];
                            c[[r, u]] = cv;
                            hn[[r, u]] = zo[u] * cv.tanh();
                        }
                    }
                    if keep {
                        gates_all.push(z);
                        hs.push(hn);
                        cs.push(c);
                    } else {
                        hs[0] = hn;
                        cs[0] = c;
                    }
                }
                let h_last = hs.last().unwrap();
                let mut a1 = affine(&h_last.view(), &w1, &b1);
                relu_inplace(&mut a1);
                let out = affine(&a1.view(), &w2, &b2);
                let trace = keep.then(|| Trace::Lstm {
                    input: x.to_owned(),
                    hidden: hs,
                    cell: cs,
                    gates: gates_all,
                    dense: a1,
                });
                (out, trace)
            }
        }
    }

    /// Adds `d(sum(d_out ⊙ output)) / d(params)` to `grad`, i.e. the
    /// vector-Jacobian product of the output gradient `d_out`.
    pub fn backward(&self, params: &[f64], trace: &Trace, d_out: ArrayView2<f64>, grad: &mut [f64]) -> Result<()> {
        if grad.len() != params.len() || params.len() != self.param_count() {
            return Err(shape_err(self.param_count(), grad.len()));
        }
        if d_out.ncols() != self.output_width() {
            return Err(shape_err(self.output_width(), d_out.ncols()));
        }
        let mut cur = Cursor { rest: params };
        let mut gcur = CursorMut { rest: grad };
        match (self, trace) {
            (Topology::Dnn { inputs, hidden, outputs }, Trace::Dnn { activations }) => {
                let widths = Self::dnn_widths(*inputs, hidden, *outputs);
                let layers: Vec<_> = widths
                    .windows(2)
                    .map(|w| {
                        (
                            cur.matrix(w[0], w[1]),
                            cur.vector(w[1]),
                            gcur.matrix(w[0], w[1]),
                            gcur.vector(w[1]),
                        )
                    })
                    .collect();
                let mut dz = d_out.to_owned();
                for (i, (w, _, mut gw, mut gb)) in layers.into_iter().enumerate().rev() {
                    let a = &activations[i];
                    let da = affine_backward(&a.view(), &w, &dz.view(), &mut gw, &mut gb, i > 0);
                    if let Some(mut da) = da {
                        relu_backward(&mut da, a);
                        dz = da;
                    }
                }
            }
            (
                Topology::Lstm { features, steps, hidden, dense, outputs },
                Trace::Lstm { input, hidden: hs, cell: cs, gates, dense: a1 },
            ) => {
                let (l, h) = (*features, *hidden);
                let g = 4 * h;
                let _wx = cur.matrix(l, g);
                let wh = cur.matrix(h, g);
                let _b = cur.vector(g);
                let w1 = cur.matrix(h, *dense);
                let _b1 = cur.vector(*dense);
                let w2 = cur.matrix(*dense, *outputs);
                let mut gwx = gcur.matrix(l, g);
                let mut gwh = gcur.matrix(h, g);
                let mut gb = gcur.vector(g);
                let mut gw1 = gcur.matrix(h, *dense);
                let mut gb1 = gcur.vector(*dense);
                let mut gw2 = gcur.matrix(*dense, *outputs);
                let mut gb2 = gcur.vector(*outputs);

                let mut da1 = affine_backward(&a1.view(), &w2, &d_out, &mut gw2, &mut gb2, true).unwrap();
                relu_backward(&mut da1, a1);
                let h_last = &hs[*steps];
                let mut dh = affine_backward(&h_last.view(), &w1, &da1.view(), &mut gw1, &mut gb1, true).unwrap();
                let batch = input.nrows();
                let mut dc = Array2::<f64>::zeros((batch, h));
                let mut dz = Array2::<f64>::zeros((batch, g));
                for t in (0..*steps).rev() {
                    let act = &gates[t];
                    let (c, c_prev) = (&cs[t + 1], &cs[t]);
                    for r in 0..batch {
                        let a = act.row(r);
                        let a = a.as_slice().expect("row-major");
                        let mut dzr = dz.row_mut(r);
                        let dzr = dzr.as_slice_mut().expect("row-major");
                        for u in 0..h {
                            let (i, f, gg, o) = (a[u], a[h + u], a[2 * h + u], a[3 * h + u]);
                            let tc = c[[r, u]].tanh();
                            let dhv = dh[[r, u]];
                            let dcv = dc[[r, u]] + dhv * o * (1.0 - tc * tc);
                            dzr[u] = dcv * gg * i * (1.0 - i);
                            dzr[h + u] = dcv * c_prev[[r, u]] * f * (1.0 - f);
                            dzr[2 * h + u] = dcv * i * (1.0 - gg * gg);
                            dzr[3 * h + u] = dhv * tc * o * (1.0 - o);
                            dc[[r, u]] = dcv * f;
                        }
                    }
                    let xt = input.slice(s![.., t * l..(t + 1) * l]);
                    general_mat_mul(1.0, &xt.t(), &dz, 1.0, &mut gwx);
                    general_mat_mul(1.0, &hs[t].t(), &dz, 1.0, &mut gwh);
                    gb += &dz.sum_axis(Axis(0));
                    if t > 0 {
                        dh = dz.dot(&wh.t());
                    }
                }
            }
            _ => return Err(shape_err(self.name(), "trace of another network kind")),
        }
        Ok(())
    }
}
