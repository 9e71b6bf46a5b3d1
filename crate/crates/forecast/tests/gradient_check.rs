use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twin_forecast::metrics::loss_and_output_grad;
use twin_forecast::train::batch_gradient;
use twin_forecast::{Topology, Trace, WindowShape};

const POINTS: u64 = 20;
const STEP: f64 = 1e-4;
/// Components smaller than this are compared in absolute terms.
const FLOOR: f64 = 1e-6;

fn shape() -> WindowShape {
    WindowShape::new(5, 3, 2).unwrap()
}

struct Point {
    weights: Vec<f64>,
    x: Array2<f64>,
    y: Array2<f64>,
    deltas: Vec<f64>,
}

fn point(topology: &Topology, seed: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = topology.init(&mut rng);
    // Nonzero biases so every parameter gets exercised.
    weights.iter_mut().for_each(|w| *w += rng.random_range(-0.1..0.1));
    let s = shape();
    let batch = 3;
    let x = Array2::from_shape_simple_fn((batch, s.input_width()), || rng.random::<f64>());
    let y = Array2::from_shape_simple_fn((batch, s.output_width()), || rng.random::<f64>());
    let deltas = (0..s.l).map(|_| rng.random_range(0.5..2.0)).collect();
    Point { weights, x, y, deltas }
}

fn loss(topology: &Topology, weights: &[f64], p: &Point) -> f64 {
    let pred = topology.forward(weights, p.x.view()).unwrap();
    let mut scratch = Array2::zeros(pred.dim());
    loss_and_output_grad(pred.view(), p.y.view(), &p.deltas, scratch.view_mut())
}

/// Which ReLU units are active, per sample.
fn relu_pattern(topology: &Topology, weights: &[f64], p: &Point) -> Vec<bool> {
    let (_, trace) = topology.forward_traced(weights, p.x.view()).unwrap();
    match trace {
        Trace::Dnn { activations } => activations[1..].iter().flat_map(|a| a.iter().map(|v| *v > 0.0).collect::<Vec<_>>()).collect(),
        Trace::Lstm { dense, .. } => dense.iter().map(|v| *v > 0.0).collect(),
    }
}

/// Fourth-order central difference per weight, or `None` where the stencil
/// straddles a ReLU kink and the derivative is not defined across it.
fn numeric_gradient(topology: &Topology, p: &Point) -> Vec<Option<f64>> {
    let mut w = p.weights.clone();
    let base = relu_pattern(topology, &w, p);
    (0..w.len())
        .map(|i| {
            let orig = w[i];
            let mut smooth = true;
            let mut at = |offset: f64| {
                w[i] = orig + offset;
                let v = loss(topology, &w, p);
                smooth &= relu_pattern(topology, &w, p) == base;
                w[i] = orig;
                v
            };
            let (f2, f1, b1, b2) = (at(2.0 * STEP), at(STEP), at(-STEP), at(-2.0 * STEP));
            smooth.then(|| (-f2 + 8.0 * f1 - 8.0 * b1 + b2) / (12.0 * STEP))
        })
        .collect()
}

fn analytic_gradient(topology: &Topology, p: &Point) -> Vec<f64> {
    let mut grad = vec![0.0; p.weights.len()];
    batch_gradient(topology, &p.weights, p.x.view(), p.y.view(), &p.deltas, &mut grad).unwrap();
    grad
}

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FLOOR)
}

/// Worst relative error over all points, and the number of components
/// skipped at kinks.
fn worst_error(topology: &Topology) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut skipped = 0;
    for seed in 0..POINTS {
        let p = point(topology, seed);
        let a = analytic_gradient(topology, &p);
        let n = numeric_gradient(topology, &p);
        for (i, (a, n)) in a.iter().zip(&n).enumerate() {
            let Some(n) = n else {
                skipped += 1;
                continue;
            };
            let e = relative_error(*a, *n);
            assert!(e < 1e-5, "seed {seed} weight {i}: analytic {a} numeric {n} (rel {e:.2e})");
            worst = worst.max(e);
        }
    }
    (worst, skipped)
}

#[test]
fn dnn_gradient_matches_finite_differences() {
    let topology = Topology::dnn(shape(), &[8, 6]);
    let (worst, skipped) = worst_error(&topology);
    eprintln!("dnn worst relative error {worst:.2e}, {skipped} kink components skipped");
    assert!(skipped * 100 < topology.param_count() * POINTS as usize);
}

#[test]
fn lstm_gradient_matches_finite_differences() {
    let topology = Topology::lstm(shape(), 8, 6);
    let (worst, skipped) = worst_error(&topology);
    eprintln!("lstm worst relative error {worst:.2e}, {skipped} kink components skipped");
    assert!(skipped * 100 < topology.param_count() * POINTS as usize);
}

#[test]
fn zero_loss_has_zero_gradient() {
    for topology in [Topology::dnn(shape(), &[8]), Topology::lstm(shape(), 6, 4)] {
        let mut p = point(&topology, 7);
        p.y = topology.forward(&p.weights, p.x.view()).unwrap();
        let grad = analytic_gradient(&topology, &p);
        assert!(grad.iter().all(|g| *g == 0.0), "{}", topology.name());
    }
}

#[test]
fn scaled_output_gradient_scales_every_component() {
    let c = 3.5;
    for topology in [Topology::dnn(shape(), &[8]), Topology::lstm(shape(), 6, 4)] {
        let p = point(&topology, 11);
        let (pred, trace) = topology.forward_traced(&p.weights, p.x.view()).unwrap();
        let mut d = Array2::zeros(pred.dim());
        loss_and_output_grad(pred.view(), p.y.view(), &p.deltas, d.view_mut());
        let mut base = vec![0.0; p.weights.len()];
        topology.backward(&p.weights, &trace, d.view(), &mut base).unwrap();
        let mut scaled = vec![0.0; p.weights.len()];
        topology.backward(&p.weights, &trace, (&d * c).view(), &mut scaled).unwrap();
        for (b, s) in base.iter().zip(&scaled) {
            assert!((s - c * b).abs() <= 1e-12 * (c * b).abs().max(1e-300), "{s} vs {}", c * b);
        }
    }
}

#[test]
fn gradients_accumulate() {
    let topology = Topology::dnn(shape(), &[8]);
    let p = point(&topology, 3);
    let once = analytic_gradient(&topology, &p);
    let mut twice = vec![0.0; p.weights.len()];
    for _ in 0..2 {
        batch_gradient(&topology, &p.weights, p.x.view(), p.y.view(), &p.deltas, &mut twice).unwrap();
    }
    for (o, t) in once.iter().zip(&twice) {
        assert!((t - 2.0 * o).abs() <= 1e-15 * o.abs().max(1e-300));
    }
}
