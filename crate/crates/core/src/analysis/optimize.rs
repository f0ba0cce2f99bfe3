//! Derivative-free minimisation: a multiplicative grid scan and a
//! Nelder-Mead simplex.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop once (f_worst - f_best) <= tolerance * |f_best|.
    pub tolerance: f64,
    /// Initial edge length along each coordinate.
    pub initial_step: f64,
    /// Extra restarts from the best point with a randomly oriented simplex.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: 2000,
            tolerance: 1e-10,
            initial_step: 0.25,
            restarts: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective after every iteration.
    pub history: Vec<f64>,
}

fn order(simplex: &mut [(Vec<f64>, f64)]) {
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
}

fn spread_small(simplex: &[(Vec<f64>, f64)], tol: f64) -> bool {
    let best = simplex[0].1;
    let worst = simplex[simplex.len() - 1].1;
    if best == 0.0 && worst == 0.0 {
        return true;
    }
    if !worst.is_finite() {
        return false;
    }
    worst - best <= tol * best.abs().max(f64::MIN_POSITIVE)
}

fn collapsed(simplex: &[(Vec<f64>, f64)]) -> bool {
    let x0 = &simplex[0].0;
    simplex[1..].iter().all(|(x, _)| {
        x.iter()
            .zip(x0)
            .all(|(a, b)| (a - b).abs() <= 1e-14 * (1.0 + b.abs()))
    })
}

/// Minimises `f` from `x0`. Non-finite objective values are treated as +inf.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut best = (x0.to_vec(), eval(x0));
    let mut converged = false;

    for round in 0..=opts.restarts {
        let mut simplex = Vec::with_capacity(n + 1);
        simplex.push(best.clone());
        for i in 0..n {
            let mut x = best.0.clone();
            let sign = if round == 0 || rng.gen_bool(0.5) {
                1.0
            } else {
                -1.0
            };
            x[i] += sign * opts.initial_step;
            let fx = eval(&x);
            simplex.push((x, fx));
        }
        order(&mut simplex);
        converged = false;

        while iterations < opts.max_iterations {
            if spread_small(&simplex, opts.tolerance) || collapsed(&simplex) {
                converged = true;
                break;
            }
            iterations += 1;
            let worst = simplex[n].clone();
            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let xr = along(1.0);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(2.0);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < worst.1 {
                    let xc = along(0.5);
                    let fc = eval(&xc);
                    (xc, fc)
                } else {
                    let xc = along(-0.5);
                    let fc = eval(&xc);
                    (xc, fc)
                };
                if fc < worst.1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x_best = simplex[0].0.clone();
                    for v in simplex.iter_mut().skip(1) {
                        let x: Vec<f64> =
                            v.0.iter()
                                .zip(&x_best)
                                .map(|(a, b)| b + 0.5 * (a - b))
                                .collect();
                        let fx = eval(&x);
                        *v = (x, fx);
                    }
                }
            }
            order(&mut simplex);
            history.push(simplex[0].1);
        }

        let improved = simplex[0].1 < best.1;
        let gain = best.1 - simplex[0].1;
        if improved {
            best = simplex[0].clone();
        }
        if !converged || (round > 0 && gain <= opts.tolerance * best.1.abs()) {
            break;
        }
    }

    SimplexResult {
        x: best.0,
        fx: best.1,
        iterations,
        evaluations: evals,
        converged,
        history,
    }
}

/// Evaluates `f` on the tensor grid and returns the best point and value.
/// Each axis is a list of candidate coordinates.
pub fn grid_scan<F>(mut f: F, axes: &[Vec<f64>]) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let mut idx = vec![0usize; axes.len()];
    let mut best = (Vec::new(), f64::INFINITY);
    if axes.iter().any(|a| a.is_empty()) {
        return best;
    }
    loop {
        let x: Vec<f64> = idx.iter().zip(axes).map(|(&i, a)| a[i]).collect();
        let fx = f(&x);
        if fx < best.1 || best.0.is_empty() {
            best = (x, fx);
        }
        let mut d = 0;
        loop {
            if d == axes.len() {
                return best;
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Points spaced `per_decade` per factor of ten between `lo` and `hi`, in ln units.
pub fn log_axis(lo: f64, hi: f64, per_decade: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let decades = (hi / lo).log10();
    let n = (decades * per_decade).round().max(1.0) as usize + 1;
    crate::sweep::linspace(a, b, n)
}
