//! Small numerical helpers shared across modules.

use crate::error::{Error, Result};

/// Outcome of [`illinois`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Illinois false position on a bracket `[a, b]` with `f(a)` and `f(b)` of
/// opposite signs. Every fourth step is a bisection so the bracket always
/// shrinks. Stops once the bracket is narrower than `xtol`.
pub fn illinois<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(Root { x: a, fx: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket(format!(
            "f({a}) = {fa} and f({b}) = {fb} have the same sign"
        )));
    }

    let mut side = 0i8;
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for it in 1..=max_iter {
        let x = if it % 4 == 0 {
            0.5 * (a + b)
        } else {
            let x = (a * fb - b * fa) / (fb - fa);
            if x.is_finite() && x > a.min(b) && x < a.max(b) {
                x
            } else {
                0.5 * (a + b)
            }
        };
        let fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 {
            return Ok(Root { x, fx, iterations: it });
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= xtol {
            return Ok(Root {
                x: best.0,
                fx: best.1,
                iterations: it,
            });
        }
    }
    Ok(Root {
        x: best.0,
        fx: best.1,
        iterations: max_iter,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// `n` points spaced evenly in log between `lo` and `hi`, inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Solves a tridiagonal system in place. `lower[0]` and `upper[n-1]` are ignored.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::SingularSystem { row: 0 });
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::SingularSystem { row: i });
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn illinois_finds_cubic_root() {
        let r = illinois(|x| Ok(x * x * x - 2.0), 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn illinois_rejects_unbracketed() {
        assert!(matches!(
            illinois(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 50),
            Err(Error::NoBracket(_))
        ));
    }

    #[test]
    fn slope_of_power_law() {
        let xs = logspace(1e-3, 1.0, 7);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((loglog_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn thomas_matches_dense() {
        let lower = [0.0, 1.0, 2.0];
        let diag = [4.0, 5.0, 6.0];
        let upper = [1.0, 1.0, 0.0];
        let x = [1.0, -2.0, 3.0];
        let mut b = [
            4.0 * x[0] + x[1],
            x[0] + 5.0 * x[1] + x[2],
            2.0 * x[1] + 6.0 * x[2],
        ];
        thomas(&lower, &diag, &upper, &mut b).unwrap();
        for i in 0..3 {
            assert!((b[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn thomas_flags_zero_pivot() {
        let mut b = [1.0, 1.0];
        assert!(matches!(
            thomas(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &mut b),
            Err(Error::SingularSystem { row: 0 })
        ));
    }
}
