//! Projected gradient descent over the probability simplex.

/// Euclidean projection onto `{x ≥ 0, Σx = 1}` (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iters: usize,
    /// Stop when `‖θ − Π(θ − ∇)‖∞ ≤ tol · (1 + |f|)`.
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn stationarity(x: &[f64], g: &[f64]) -> f64 {
    let shifted: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    project_to_simplex(&shifted)
        .iter()
        .zip(x)
        .map(|(p, a)| (p - a).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `objective` over the simplex from `start`.
///
/// Steps are Barzilai–Borwein scaled projected gradient steps with Armijo
/// backtracking; a trial point whose objective fails to evaluate counts as
/// an increase. After a backtracked step the next step length is capped
/// at twice the accepted one. Accepted iterates never increase the
/// objective.
pub fn minimize_on_simplex<F, E>(
    objective: F,
    start: &[f64],
    opts: SimplexOptions,
) -> Result<SimplexSolution, E>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>), E>,
{
    let mut x = project_to_simplex(start);
    let (mut f, mut g) = objective(&x)?;
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut alpha = if gmax > 0.0 { 0.1 / gmax } else { 1.0 };
    let mut converged = stationarity(&x, &g) <= opts.tol * (1.0 + f.abs());
    let mut iterations = 0;

    while !converged && iterations < opts.max_iters {
        iterations += 1;
        let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
        let target = project_to_simplex(&trial);
        let dir: Vec<f64> = target.iter().zip(&x).map(|(p, a)| p - a).collect();
        let slope = dot(&g, &dir);
        if dir.iter().all(|d| *d == 0.0) || slope >= 0.0 {
            converged = true;
            break;
        }

        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-20 {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            if let Ok((fc, gc)) = objective(&cand) {
                if fc.is_finite() && fc <= f + 1e-4 * t * slope {
                    accepted = Some((cand, fc, gc));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            converged = stationarity(&x, &g) <= opts.tol * (1.0 + f.abs()).sqrt();
            break;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let next = if sy > 0.0 { dot(&s, &s) / sy } else { alpha * 2.0 };
        alpha = if t < 1.0 { next.min(2.0 * t * alpha) } else { next };
        x = xn;
        f = fn_;
        g = gn;
        converged = stationarity(&x, &g) <= opts.tol * (1.0 + f.abs());
    }

    Ok(SimplexSolution {
        x,
        value: f,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        assert_eq!(project_to_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_to_simplex(&[1.0, 1.0, 1.0]);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let p = project_to_simplex(&[-5.0, 0.3, 0.4]);
        assert_eq!(p[0], 0.0);
        assert!((p[1] + p[2] - 1.0).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn projection_lands_on_simplex(v in proptest::collection::vec(-10.0f64..10.0, 1..8)) {
            let p = project_to_simplex(&v);
            proptest::prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            proptest::prop_assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn finds_interior_quadratic_minimum() {
        let target = [0.2, 0.5, 0.3];
        let obj = |x: &[f64]| -> Result<(f64, Vec<f64>), ()> {
            let g: Vec<f64> = x.iter().zip(&target).map(|(a, b)| 2.0 * 50.0 * (a - b)).collect();
            let f = x.iter().zip(&target).map(|(a, b)| 50.0 * (a - b).powi(2)).sum();
            Ok((f, g))
        };
        let sol = minimize_on_simplex(obj, &[1.0, 0.0, 0.0], SimplexOptions { max_iters: 200, tol: 1e-12 }).unwrap();
        assert!(sol.converged);
        for (a, b) in sol.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn finds_vertex_minimum() {
        let obj = |x: &[f64]| -> Result<(f64, Vec<f64>), ()> { Ok((x[1] - x[0], vec![-1.0, 1.0])) };
        let sol = minimize_on_simplex(obj, &[0.5, 0.5], SimplexOptions { max_iters: 100, tol: 1e-12 }).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.x, vec![1.0, 0.0]);
    }

    #[test]
    fn single_steps_never_increase() {
        let obj = |x: &[f64]| -> Result<(f64, Vec<f64>), ()> {
            let f = (x[0] - 0.7).powi(4) + 0.1 * (x[0] * 13.0).sin();
            let g0 = 4.0 * (x[0] - 0.7).powi(3) + 1.3 * (x[0] * 13.0).cos();
            Ok((f, vec![g0, 0.0]))
        };
        let mut x = vec![0.1, 0.9];
        let mut last = f64::INFINITY;
        for _ in 0..8 {
            let sol = minimize_on_simplex(obj, &x, SimplexOptions { max_iters: 1, tol: 0.0 }).unwrap();
            assert!(sol.value <= last);
            last = sol.value;
            x = sol.x;
        }
    }
}
