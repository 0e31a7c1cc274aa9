//! Pseudo-transient iterations for `L w + s(w) = 0` with a Dirichlet value at
//! `x = 1`.
//!
//! Two schemes share this module. The lagged `s/w` step keeps every update
//! non-negative and drives the initial-guess search. The refinement step is a
//! pseudo-transient Newton iteration with the local source Jacobian.

use serde::{Deserialize, Serialize};

use super::laplacian::Laplacian;
use crate::error::{Error, Result};
use crate::numerics::thomas;

/// Up to two coupled species on a common grid.
pub trait ReactionSystem {
    fn species(&self) -> usize;
    fn laplacian(&self) -> &Laplacian;
    /// Dirichlet values at `x = 1`, one per species.
    fn boundary(&self) -> &[f64];
    /// Source terms at one grid point.
    fn source(&self, w: &[f64], out: &mut [f64]) -> Result<()>;
}

/// `fields[k][i]`: species `k` at node `i`.
pub type Fields = Vec<Vec<f64>>;

pub fn constant_fields<S: ReactionSystem + ?Sized>(sys: &S) -> Fields {
    let n = sys.laplacian().len();
    sys.boundary().iter().map(|&b| vec![b; n]).collect()
}

pub fn source_fields<S: ReactionSystem + ?Sized>(sys: &S, w: &Fields) -> Result<Fields> {
    let m = sys.species();
    let n = sys.laplacian().len();
    let mut out = vec![vec![0.0; n]; m];
    let mut point = [0.0; 2];
    let mut s = [0.0; 2];
    for i in 0..n {
        for k in 0..m {
            point[k] = w[k][i];
        }
        sys.source(&point[..m], &mut s[..m])?;
        for k in 0..m {
            out[k][i] = s[k];
        }
    }
    Ok(out)
}

/// `L w + s` on every row except the Dirichlet row, which holds zero.
pub fn residual_fields<S: ReactionSystem + ?Sized>(sys: &S, w: &Fields, s: &Fields) -> Fields {
    let lap = sys.laplacian();
    let n = lap.len();
    w.iter()
        .zip(s)
        .map(|(wk, sk)| {
            let mut r: Vec<f64> = (0..n).map(|i| lap.apply_row(wk, i) + sk[i]).collect();
            r[n - 1] = 0.0;
            r
        })
        .collect()
}

pub fn max_norm(fields: &Fields) -> f64 {
    fields
        .iter()
        .flat_map(|f| f.iter())
        .fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// Interior max-norm, skipping the Dirichlet row.
pub fn interior_max_norm(fields: &Fields) -> f64 {
    fields
        .iter()
        .flat_map(|f| f[..f.len() - 1].iter())
        .fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// One lagged implicit step for one species:
/// `(a - 1/tau) w_new + L w_new = -w_old/tau`, `w_new(1) = w_bc`.
pub fn implicit_step_species(
    lap: &Laplacian,
    w_old: &[f64],
    a: &[f64],
    tau: f64,
    w_bc: f64,
) -> Result<Vec<f64>> {
    let n = lap.len();
    let inv_tau = 1.0 / tau;
    let mut lower = lap.lower.clone();
    let mut diag: Vec<f64> = (0..n).map(|i| lap.diag[i] + a[i] - inv_tau).collect();
    let upper = lap.upper.clone();
    let mut rhs: Vec<f64> = w_old.iter().map(|v| -v * inv_tau).collect();
    lower[n - 1] = 0.0;
    diag[n - 1] = 1.0;
    rhs[n - 1] = w_bc;
    thomas(&lower, &diag, &upper, &mut rhs)?;
    Ok(rhs)
}

/// `s / w` where `w > 0`, else zero.
pub fn s_over_w(s: &[f64], w: &[f64]) -> Vec<f64> {
    s.iter()
        .zip(w)
        .map(|(&s, &w)| if w > 0.0 { s / w } else { 0.0 })
        .collect()
}

/// Lagged implicit step for all species with `a = s(w_old)/w_old`.
pub fn implicit_step<S: ReactionSystem + ?Sized>(sys: &S, w_old: &Fields, tau: f64) -> Result<Fields> {
    let s = source_fields(sys, w_old)?;
    let lap = sys.laplacian();
    w_old
        .iter()
        .zip(&s)
        .zip(sys.boundary())
        .map(|((w, s), &bc)| implicit_step_species(lap, w, &s_over_w(s, w), tau, bc))
        .collect()
}

/// `0.1 * w_bc / (-s(w_bc))`, minimised over species that are consumed.
pub fn initial_tau<S: ReactionSystem + ?Sized>(sys: &S, factor: f64) -> Result<Option<f64>> {
    let bc = sys.boundary();
    let m = sys.species();
    let mut s = [0.0; 2];
    sys.source(bc, &mut s[..m])?;
    let mut tau: Option<f64> = None;
    for k in 0..m {
        if s[k] < 0.0 && bc[k] > 0.0 {
            let t = factor * bc[k] / -s[k];
            tau = Some(tau.map_or(t, |v: f64| v.min(t)));
        }
    }
    Ok(tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuessOptions {
    pub tau_factor: f64,
    pub max_iterations: usize,
    /// Largest accepted relative change of `s/w` between steps.
    pub s_over_w_tol: f64,
    /// Stop once the relative change of `w` drops below this.
    pub change_tol: f64,
    /// Value substituted for negative components before a step.
    pub negative_fill: f64,
}

impl Default for GuessOptions {
    fn default() -> Self {
        Self {
            tau_factor: 0.1,
            max_iterations: 250,
            s_over_w_tol: 0.25,
            change_tol: 0.01,
            negative_fill: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuessRun {
    pub fields: Fields,
    pub settled: bool,
    /// Attempted steps, rejected ones included.
    pub iterations: usize,
    pub rejected: usize,
    pub tau0: Option<f64>,
    /// Step size after the last accepted step.
    pub tau: f64,
    pub tau_history: Vec<f64>,
}

/// Initial-guess search with the lagged `s/w` scheme and step-size control.
pub fn initial_guess<S: ReactionSystem + ?Sized>(sys: &S, opts: &GuessOptions) -> Result<GuessRun> {
    let lap = sys.laplacian();
    let n = lap.len();
    let bc = sys.boundary().to_vec();
    let mut w = constant_fields(sys);

    let Some(tau0) = initial_tau(sys, opts.tau_factor)? else {
        return Ok(GuessRun {
            fields: w,
            settled: true,
            iterations: 1,
            rejected: 0,
            tau0: None,
            tau: f64::INFINITY,
            tau_history: Vec::new(),
        });
    };

    let s = source_fields(sys, &w)?;
    let mut a: Fields = w.iter().zip(&s).map(|(w, s)| s_over_w(s, w)).collect();
    let mut tau = tau0;
    let mut history = Vec::new();
    let mut rejected = 0;

    for it in 1..=opts.max_iterations {
        for (wk, ak) in w.iter_mut().zip(a.iter_mut()) {
            for (v, av) in wk.iter_mut().zip(ak.iter_mut()) {
                if *v < 0.0 {
                    *v = opts.negative_fill;
                    *av = 0.0;
                }
            }
        }
        history.push(tau);

        let mut trial = Vec::with_capacity(w.len());
        let mut failed = false;
        for k in 0..w.len() {
            match implicit_step_species(lap, &w[k], &a[k], tau, bc[k]) {
                Ok(v) => trial.push(v),
                Err(Error::SingularSystem { .. }) => {
                    failed = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if failed || trial.iter().flatten().any(|v| !(*v >= 0.0)) {
            tau *= 0.5;
            rejected += 1;
            continue;
        }

        let s_new = source_fields(sys, &trial)?;
        let a_new: Fields = trial.iter().zip(&s_new).map(|(w, s)| s_over_w(s, w)).collect();
        let mut da: f64 = 0.0;
        for (ak, nk) in a.iter().zip(&a_new) {
            for i in 0..n - 1 {
                if ak[i] != 0.0 {
                    da = da.max(((nk[i] - ak[i]) / ak[i]).abs());
                }
            }
        }
        if !(da < opts.s_over_w_tol) {
            tau *= 0.5;
            rejected += 1;
            continue;
        }

        let mut dw: f64 = 0.0;
        for (wk, tk) in w.iter().zip(&trial) {
            for i in 0..n - 1 {
                let scale = wk[i].abs().max(tk[i].abs());
                if scale > 0.0 {
                    dw = dw.max((tk[i] - wk[i]).abs() / scale);
                }
            }
        }
        w = trial;
        a = a_new;
        tau *= 2.0;
        if dw < opts.change_tol {
            return Ok(GuessRun {
                fields: w,
                settled: true,
                iterations: it,
                rejected,
                tau0: Some(tau0),
                tau,
                tau_history: history,
            });
        }
    }

    Ok(GuessRun {
        fields: w,
        settled: false,
        iterations: opts.max_iterations,
        rejected,
        tau0: Some(tau0),
        tau,
        tau_history: history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    /// Converged once `|L w + s|_inf <= tol * max(|s|_inf, 1)`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Reject steps that make any component negative.
    pub enforce_nonnegative: bool,
    pub tau_max: f64,
    /// Relative finite-difference step for the source Jacobian.
    pub jacobian_step: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 2000,
            enforce_nonnegative: true,
            tau_max: 1e15,
            jacobian_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineRun {
    pub fields: Fields,
    pub converged: bool,
    /// Accepted steps.
    pub iterations: usize,
    pub rejected: usize,
    pub residual_norm: f64,
    pub source_norm: f64,
    pub tau_history: Vec<f64>,
}

/// 2x2 block, row-major.
type Block = [f64; 4];

fn block_inverse(b: &Block) -> Option<Block> {
    let det = b[0] * b[3] - b[1] * b[2];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    Some([b[3] * inv, -b[1] * inv, -b[2] * inv, b[0] * inv])
}

fn block_mul_vec(b: &Block, v: [f64; 2]) -> [f64; 2] {
    [b[0] * v[0] + b[1] * v[1], b[2] * v[0] + b[3] * v[1]]
}

/// Solves a block-tridiagonal system whose off-diagonal blocks are scalar
/// multiples of the identity: `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
fn block_thomas(lower: &[f64], diag: &[Block], upper: &[f64], rhs: &mut [[f64; 2]]) -> Result<()> {
    let n = diag.len();
    let mut cprime: Vec<Block> = vec![[0.0; 4]; n];
    let mut m = diag[0];
    for i in 0..n {
        if i > 0 {
            let c = &cprime[i - 1];
            let l = lower[i];
            m = diag[i];
            for j in 0..4 {
                m[j] -= l * c[j];
            }
            let prev = rhs[i - 1];
            rhs[i][0] -= l * prev[0];
            rhs[i][1] -= l * prev[1];
        }
        let inv = block_inverse(&m).ok_or(Error::SingularSystem { row: i })?;
        rhs[i] = block_mul_vec(&inv, rhs[i]);
        let u = upper[i];
        cprime[i] = [inv[0] * u, inv[1] * u, inv[2] * u, inv[3] * u];
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        let d = block_mul_vec(&cprime[i], next);
        rhs[i][0] -= d[0];
        rhs[i][1] -= d[1];
    }
    Ok(())
}

/// Sources and their local Jacobian at every interior node.
fn sources_with_jacobian<S: ReactionSystem + ?Sized>(
    sys: &S,
    w: &Fields,
    rel_step: f64,
) -> Result<(Fields, Vec<Block>)> {
    let m = sys.species();
    let n = sys.laplacian().len();
    let bc = sys.boundary();
    let mut s = vec![vec![0.0; n]; m];
    let mut jac = vec![[0.0; 4]; n];
    let mut point = [0.0; 2];
    let mut base = [0.0; 2];
    let mut plus = [0.0; 2];
    let mut minus = [0.0; 2];
    for i in 0..n {
        for k in 0..m {
            point[k] = w[k][i];
        }
        sys.source(&point[..m], &mut base[..m])?;
        for k in 0..m {
            s[k][i] = base[k];
        }
        if i == n - 1 {
            continue;
        }
        for col in 0..m {
            let v = point[col];
            let mut p = point;
            if v == 0.0 {
                let h = rel_step * bc[col].abs().max(f64::MIN_POSITIVE);
                p[col] = h;
                sys.source(&p[..m], &mut plus[..m])?;
                for row in 0..m {
                    jac[i][row * 2 + col] = (plus[row] - base[row]) / h;
                }
            } else {
                let h = rel_step * v.abs();
                p[col] = v + h;
                sys.source(&p[..m], &mut plus[..m])?;
                p[col] = v - h;
                sys.source(&p[..m], &mut minus[..m])?;
                let width = (v + h) - (v - h);
                for row in 0..m {
                    jac[i][row * 2 + col] = (plus[row] - minus[row]) / width;
                }
            }
        }
    }
    Ok((s, jac))
}

/// Pseudo-transient Newton iteration `(I/tau - L - J) dw = L w + s(w)`.
/// The step size follows switched evolution relaxation with a floor on
/// growth after a successful step.
pub fn refine<S: ReactionSystem + ?Sized>(
    sys: &S,
    start: &Fields,
    tau0: f64,
    opts: &RefineOptions,
) -> Result<RefineRun> {
    let lap = sys.laplacian();
    let m = sys.species();
    let n = lap.len();
    let rows = n - 1;
    let bc = sys.boundary();

    let mut w = start.clone();
    for k in 0..m {
        w[k][n - 1] = bc[k];
    }
    let mut tau = tau0.min(opts.tau_max);
    let mut history = Vec::new();
    let mut rejected = 0;
    let mut iterations = 0;

    let (mut s, mut jac) = sources_with_jacobian(sys, &w, opts.jacobian_step)?;
    let mut r = residual_fields(sys, &w, &s);
    let mut r_norm = interior_max_norm(&r);
    let mut s_norm = max_norm(&s);

    let lower: Vec<f64> = (0..rows).map(|i| -lap.lower[i]).collect();
    let upper: Vec<f64> = (0..rows)
        .map(|i| if i + 1 < rows { -lap.upper[i] } else { 0.0 })
        .collect();

    while iterations + rejected < opts.max_iterations {
        if r_norm <= opts.tol * s_norm.max(1.0) {
            return Ok(RefineRun {
                fields: w,
                converged: true,
                iterations,
                rejected,
                residual_norm: r_norm,
                source_norm: s_norm,
                tau_history: history,
            });
        }
        if !r_norm.is_finite() || !(tau > 0.0) {
            break;
        }
        history.push(tau);

        let inv_tau = 1.0 / tau;
        let mut diag: Vec<Block> = Vec::with_capacity(rows);
        let mut rhs: Vec<[f64; 2]> = Vec::with_capacity(rows);
        for i in 0..rows {
            let d = inv_tau - lap.diag[i];
            let j = &jac[i];
            let block = if m == 2 {
                [d - j[0], -j[1], -j[2], d - j[3]]
            } else {
                [d - j[0], 0.0, 0.0, d]
            };
            diag.push(block);
            rhs.push([r[0][i], if m == 2 { r[1][i] } else { 0.0 }]);
        }
        match block_thomas(&lower, &diag, &upper, &mut rhs) {
            Ok(()) => {}
            Err(Error::SingularSystem { .. }) => {
                tau *= 0.5;
                rejected += 1;
                continue;
            }
            Err(e) => return Err(e),
        }

        let mut trial = w.clone();
        for i in 0..rows {
            for k in 0..m {
                trial[k][i] += rhs[i][k];
            }
        }
        let bad = trial
            .iter()
            .flatten()
            .any(|v| !v.is_finite() || (opts.enforce_nonnegative && *v < 0.0));
        if bad {
            tau *= 0.5;
            rejected += 1;
            continue;
        }

        let (s_new, jac_new) = sources_with_jacobian(sys, &trial, opts.jacobian_step)?;
        let r_new = residual_fields(sys, &trial, &s_new);
        let r_new_norm = interior_max_norm(&r_new);
        if !r_new_norm.is_finite() {
            tau *= 0.5;
            rejected += 1;
            continue;
        }
        iterations += 1;
        let ratio = if r_new_norm > 0.0 { r_norm / r_new_norm } else { 10.0 };
        let factor = if ratio >= 1.0 { ratio.max(2.0) } else { ratio.max(0.1) };
        tau = (tau * factor).min(opts.tau_max);

        w = trial;
        s = s_new;
        jac = jac_new;
        r = r_new;
        r_norm = r_new_norm;
        s_norm = max_norm(&s);
    }

    Ok(RefineRun {
        fields: w,
        converged: false,
        iterations,
        rejected,
        residual_norm: r_norm,
        source_norm: s_norm,
        tau_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pellet::laplacian::Geometry;

    struct Linear {
        lap: Laplacian,
        bc: Vec<f64>,
        k: f64,
    }

    impl ReactionSystem for Linear {
        fn species(&self) -> usize {
            1
        }
        fn laplacian(&self) -> &Laplacian {
            &self.lap
        }
        fn boundary(&self) -> &[f64] {
            &self.bc
        }
        fn source(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
            out[0] = -self.k * w[0];
            Ok(())
        }
    }

    fn linear(n: usize, k: f64) -> Linear {
        Linear {
            lap: Laplacian::new(n, Geometry::Spherical),
            bc: vec![1.0],
            k,
        }
    }

    #[test]
    fn pure_diffusion_fixed_point() {
        let sys = linear(30, 0.0);
        let w = constant_fields(&sys);
        for tau in [1e-6, 1.0, 1e6] {
            let next = implicit_step(&sys, &w, tau).unwrap();
            assert!(next[0].iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn repeated_steps_reach_sinh_profile() {
        let k: f64 = 50.0;
        let sys = linear(201, k);
        let mut w = constant_fields(&sys);
        let mut tau = 1e-3;
        for _ in 0..200 {
            w = implicit_step(&sys, &w, tau).unwrap();
            tau = (tau * 2.0).min(1e6);
        }
        let centre = k.sqrt() / k.sqrt().sinh();
        assert!((w[0][0] - centre).abs() < 1e-3 * centre.max(1e-3) + 1e-4, "{}", w[0][0]);
    }

    #[test]
    fn step_keeps_sign() {
        let sys = linear(50, 50.0);
        let w: Fields = vec![(0..50).map(|i| ((i * 7919) % 13) as f64 / 13.0).collect()];
        let next = implicit_step(&sys, &w, 1e-2).unwrap();
        assert!(next[0].iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn refine_matches_guess_on_linear_problem() {
        let sys = linear(101, 50.0);
        let g = initial_guess(&sys, &GuessOptions::default()).unwrap();
        assert!(g.settled);
        let r = refine(&sys, &g.fields, g.tau, &RefineOptions::default()).unwrap();
        assert!(r.converged, "{}", r.residual_norm);
        assert!(r.iterations <= 3);
    }

    #[test]
    fn tau0_formula() {
        let sys = linear(11, 4.0);
        assert_eq!(initial_tau(&sys, 0.1).unwrap(), Some(0.1 * 1.0 / 4.0));
        assert_eq!(initial_tau(&linear(11, 0.0), 0.1).unwrap(), None);
    }

    #[test]
    fn block_thomas_scalar_case() {
        // Two decoupled copies of the same scalar system.
        let lower = [0.0, -1.0, -1.0];
        let upper = [-1.0, -1.0, 0.0];
        let diag = [[4.0, 0.0, 0.0, 4.0]; 3];
        let mut rhs = [[3.0, 3.0], [2.0, 2.0], [3.0, 3.0]];
        block_thomas(&lower, &diag, &upper, &mut rhs).unwrap();
        let x: Vec<f64> = rhs.iter().map(|r| r[0]).collect();
        assert!((4.0 * x[0] - x[1] - 3.0).abs() < 1e-14);
        assert!((-x[0] + 4.0 * x[1] - x[2] - 2.0).abs() < 1e-14);
        assert!((-x[1] + 4.0 * x[2] - 3.0).abs() < 1e-14);
        assert!(rhs.iter().all(|r| (r[1] - r[0]).abs() < 1e-14));
    }
}
