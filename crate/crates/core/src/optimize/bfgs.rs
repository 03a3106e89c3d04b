//! Dense BFGS with a strong-Wolfe line search.

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop once `‖∇f‖∞` falls below this.
    pub grad_tol: f64,
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Minimizes `f`, which writes the gradient into its second argument and
/// returns the value.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: BfgsOptions) -> BfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; n];
    let mut value = f(&x, &mut grad);
    if n == 0 {
        return BfgsOutcome { x, value, grad, iterations: 0, converged: true };
    }
    // inverse Hessian approximation, row-major
    let mut hinv = identity(n);
    let mut scaled = false;
    let mut stalls = 0;
    for iter in 0..opts.max_iter {
        if !value.is_finite() {
            break;
        }
        if inf_norm(&grad) < opts.grad_tol {
            return BfgsOutcome { x, value, grad, iterations: iter, converged: true };
        }
        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&hinv[i * n..(i + 1) * n], &grad)).collect();
        let mut slope = dot(&dir, &grad);
        if !(slope < 0.0) {
            hinv = identity(n);
            scaled = false;
            dir = grad.iter().map(|g| -g).collect();
            slope = dot(&dir, &grad);
        }
        let alpha0 = if scaled { 1.0 } else { (1.0 / inf_norm(&grad)).min(1.0) };
        let Some(step) = line_search(&mut f, &x, value, &dir, slope, alpha0) else {
            if scaled {
                // retry once from steepest descent with a fresh metric
                hinv = identity(n);
                scaled = false;
                stalls += 1;
                if stalls > 2 {
                    break;
                }
                continue;
            }
            break;
        };
        let s: Vec<f64> = dir.iter().map(|d| step.alpha * d).collect();
        let y: Vec<f64> = step.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let decrease = value - step.value;
        x = step.x;
        grad = step.grad;
        value = step.value;
        if decrease.abs() <= 1e-16 * value.abs().max(1.0) {
            stalls += 1;
            if stalls > 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if !scaled {
                let gamma = sy / dot(&y, &y);
                hinv = identity(n);
                hinv.iter_mut().for_each(|v| *v *= gamma);
                scaled = true;
            }
            update_inverse(&mut hinv, &s, &y, sy);
        }
    }
    let converged = inf_norm(&grad) < opts.grad_tol;
    BfgsOutcome { x, value, grad, iterations: opts.max_iter, converged }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`.
fn update_inverse(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

struct Step {
    alpha: f64,
    x: Vec<f64>,
    value: f64,
    grad: Vec<f64>,
}

fn line_search<F>(f: &mut F, x: &[f64], f0: f64, dir: &[f64], slope0: f64, alpha0: f64) -> Option<Step>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let mut eval = |alpha: f64| {
        let xa: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + alpha * di).collect();
        let mut ga = vec![0.0; n];
        let fa = f(&xa, &mut ga);
        let slope = dot(&ga, dir);
        (Step { alpha, x: xa, value: fa, grad: ga }, slope)
    };
    let mut lo = (0.0, f0, slope0);
    let mut alpha = alpha0;
    let mut best: Option<Step> = None;
    for i in 0..40 {
        let (step, slope) = eval(alpha);
        if !step.value.is_finite() || step.value > f0 + C1 * alpha * slope0 || (i > 0 && step.value >= lo.1) {
            return zoom(&mut eval, f0, slope0, lo, (alpha, step.value, slope), best);
        }
        if slope.abs() <= -C2 * slope0 {
            return Some(step);
        }
        if slope >= 0.0 {
            let hi = lo;
            lo = (alpha, step.value, slope);
            best = Some(step);
            return zoom(&mut eval, f0, slope0, lo, hi, best);
        }
        lo = (alpha, step.value, slope);
        best = Some(step);
        alpha *= 2.0;
    }
    best
}

fn zoom<E>(
    eval: &mut E,
    f0: f64,
    slope0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    mut best: Option<Step>,
) -> Option<Step>
where
    E: FnMut(f64) -> (Step, f64),
{
    for _ in 0..60 {
        let (a, b) = (lo.0.min(hi.0), lo.0.max(hi.0));
        let mut alpha = cubic_min(lo, hi).unwrap_or(0.5 * (lo.0 + hi.0));
        let margin = 0.1 * (b - a);
        if !(alpha > a + margin && alpha < b - margin) {
            alpha = 0.5 * (lo.0 + hi.0);
        }
        if (b - a) <= 1e-16 * b.max(1e-300) {
            break;
        }
        let (step, slope) = eval(alpha);
        if !step.value.is_finite() || step.value > f0 + C1 * alpha * slope0 || step.value >= lo.1 {
            hi = (alpha, step.value, slope);
        } else {
            if slope.abs() <= -C2 * slope0 {
                return Some(step);
            }
            if slope * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (alpha, step.value, slope);
            best = Some(step);
        }
    }
    // sufficient decrease without the curvature condition
    best.filter(|s| s.value < f0)
}

/// Minimizer of the cubic interpolating values and slopes at both ends.
fn cubic_min(p: (f64, f64, f64), q: (f64, f64, f64)) -> Option<f64> {
    let (a, fa, da) = p;
    let (b, fb, db) = q;
    if !(fa.is_finite() && fb.is_finite() && da.is_finite() && db.is_finite()) {
        return None;
    }
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let out = minimize(f, &[-1.2, 1.0], BfgsOptions { max_iter: 500, grad_tol: 1e-10 });
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let scales = [1.0, 10.0, 1e3, 1e5];
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..4 {
                g[i] = scales[i] * (x[i] - i as f64);
                v += 0.5 * scales[i] * (x[i] - i as f64).powi(2);
            }
            v
        };
        let out = minimize(f, &[5.0; 4], BfgsOptions { max_iter: 200, grad_tol: 1e-9 });
        assert!(out.converged);
        for i in 0..4 {
            assert!((out.x[i] - i as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn empty_problem() {
        let out = minimize(|_, _| 3.0, &[], BfgsOptions { max_iter: 10, grad_tol: 1e-9 });
        assert!(out.converged);
        assert_eq!(out.value, 3.0);
    }
}
