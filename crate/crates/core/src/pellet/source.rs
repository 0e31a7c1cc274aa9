//! Dimensionless source terms of the pellet problem.

use super::laplacian::{Geometry, Laplacian};
use super::stepping::ReactionSystem;
use super::{BoundaryConditions, PelletConfig};
use crate::error::Result;
use crate::params::{Conditions, KineticParameters};
use crate::surrogate::SiteBackend;

/// Everything needed to evaluate `L w + s(w)` for one set of surface conditions.
#[derive(Debug, Clone)]
pub struct PelletProblem<'a> {
    pub params: &'a KineticParameters,
    pub config: &'a PelletConfig,
    pub backend: &'a SiteBackend,
    pub bc: BoundaryConditions,
    lap: Laplacian,
    /// `[w_CO(1), w_H2(1)]`.
    w_bc: [f64; 2],
    w_h2o_bc: f64,
    /// `R_p^2 rho_cat / (D_j c_ref)` for CO, H2, H2O.
    scale: [f64; 3],
}

impl<'a> PelletProblem<'a> {
    pub fn new(
        params: &'a KineticParameters,
        config: &'a PelletConfig,
        bc: BoundaryConditions,
        backend: &'a SiteBackend,
    ) -> Result<Self> {
        config.validate()?;
        bc.validate()?;
        let w = config.surface_w(&bc);
        let k = config.radius * config.radius * config.rho_cat / config.c_ref;
        Ok(Self {
            params,
            config,
            backend,
            bc,
            lap: Laplacian::new(config.n_grid, Geometry::Spherical),
            w_bc: [w[0], w[1]],
            w_h2o_bc: w[2],
            scale: [k / config.d_co, k / config.d_h2, k / config.d_h2o],
        })
    }

    pub fn w_bc(&self) -> [f64; 3] {
        [self.w_bc[0], self.w_bc[1], self.w_h2o_bc]
    }

    /// `w_H2O` from `w_CO` by the affine elimination.
    pub fn eliminate_h2o_point(&self, w_co: f64) -> f64 {
        let r = self.config.d_co / self.config.d_h2o;
        -r * w_co + r * self.w_bc[0] + self.w_h2o_bc
    }

    /// Local conditions seen by the kinetics. Negative concentrations map to
    /// zero pressure.
    pub fn local_conditions(&self, w_co: f64, w_h2: f64) -> Conditions {
        let w_h2o = self.eliminate_h2o_point(w_co);
        let c = self.config;
        let unit = self.params.pressure_unit;
        let p = |w: f64, h: f64| unit.from_bar(w.max(0.0) * c.c_ref * h);
        Conditions {
            p_co: p(w_co, c.h_co),
            p_h2: p(w_h2, c.h_h2),
            p_h2o: p(w_h2o, c.h_h2o),
            temperature: self.bc.temperature,
        }
    }

    /// `(R_CO, R_H2)` in mol/(kg_cat s) at a point.
    pub fn local_rates(&self, w_co: f64, w_h2: f64) -> Result<(f64, f64)> {
        self.backend
            .consumption(self.params, &self.local_conditions(w_co, w_h2))
    }

    /// `[s_CO, s_H2, s_H2O]`, dimensionless.
    pub fn scaled_sources(&self, w_co: f64, w_h2: f64) -> Result<[f64; 3]> {
        let (r_co, r_h2) = self.local_rates(w_co, w_h2)?;
        Ok([
            self.scale[0] * r_co,
            self.scale[1] * r_h2,
            self.scale[2] * -r_co,
        ])
    }

    pub fn scale(&self) -> [f64; 3] {
        self.scale
    }
}

impl ReactionSystem for PelletProblem<'_> {
    fn species(&self) -> usize {
        2
    }

    fn laplacian(&self) -> &Laplacian {
        &self.lap
    }

    fn boundary(&self) -> &[f64] {
        &self.w_bc
    }

    fn source(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        let (r_co, r_h2) = self.local_rates(w[0], w[1])?;
        out[0] = self.scale[0] * r_co;
        out[1] = self.scale[1] * r_h2;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (KineticParameters, PelletConfig, SiteBackend) {
        (
            KineticParameters::placeholder(),
            PelletConfig::default(),
            SiteBackend::default(),
        )
    }

    #[test]
    fn no_co_means_no_source() {
        let (p, c, b) = setup();
        let prob = PelletProblem::new(&p, &c, BoundaryConditions::new(1.0, 2.0, 0.5, 493.15), &b)
            .unwrap();
        let s = prob.scaled_sources(0.0, prob.w_bc()[1]).unwrap();
        assert_eq!(s, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn sources_are_sinks() {
        let (p, c, b) = setup();
        let prob = PelletProblem::new(&p, &c, BoundaryConditions::new(1.0, 2.0, 0.5, 493.15), &b)
            .unwrap();
        let w = prob.w_bc();
        for f in [1.0, 0.5, 0.1, 1e-3] {
            let s = prob.scaled_sources(w[0] * f, w[1] * f).unwrap();
            assert!(s[0] < 0.0 && s[1] < 0.0 && s[2] > 0.0);
        }
    }

    #[test]
    fn water_source_follows_stoichiometry() {
        let (p, c, b) = setup();
        let prob = PelletProblem::new(&p, &c, BoundaryConditions::new(1.0, 2.0, 0.5, 493.15), &b)
            .unwrap();
        let w = prob.w_bc();
        let s = prob.scaled_sources(0.7 * w[0], 0.4 * w[1]).unwrap();
        let expected = -c.d_co / c.d_h2o * s[0];
        assert!((s[2] / expected - 1.0).abs() < 1e-14);
    }

    #[test]
    fn surface_pressures_round_trip() {
        let (p, c, b) = setup();
        let bc = BoundaryConditions::new(1.0, 2.0, 0.5, 493.15);
        let prob = PelletProblem::new(&p, &c, bc, &b).unwrap();
        let w = prob.w_bc();
        let cond = prob.local_conditions(w[0], w[1]);
        assert!((cond.p_co - 1.0).abs() < 1e-12);
        assert!((cond.p_h2 - 2.0).abs() < 1e-12);
        assert!((cond.p_h2o - 0.5).abs() < 1e-12);
    }
}
