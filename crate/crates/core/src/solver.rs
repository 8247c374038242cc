//! Relaxation toward Dirac-harmonic configurations.
//!
//! The map update is the projected heat flow
//! `phi <- project_sphere(phi + step * r_phi)` with `r_phi` the full map
//! residual of the coupled system; the spinor update descends
//! `||r_psi||^2` by an explicit adjoint (Gauss-Newton) step with tangency
//! re-projection. With `psi = 0` the spinor dynamics is the zero fixed
//! point and the map path coincides bitwise with the pure harmonic flow.
//! On a rectangle the outermost ring is held fixed (Dirichlet data).

use crate::bubble::BubbleSpec;
use crate::clifford::{vector_clifford, Axis, Spinor};
use crate::diff::{diff, dirac_flat, quadrature};
use crate::error::{DhError, Result};
use crate::grid::{Grid, ScalarField, SpinorGrid};
use crate::sphere::{
    el_residuals, project_sphere, project_tangent, spinor_residual_norm, vector_residual_norm,
    MapField, SpinorAlongMap, DEFAULT_MARGIN, TANGENCY_TOL,
};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverParams {
    /// Pseudo-time step for both the map and spinor updates.
    pub step: f64,
    pub max_iters: usize,
    /// Converged when both interior residual maxima drop below this.
    pub tol: f64,
    /// When positive, `int |psi|^4` is rescaled to this value each step
    /// (prevents collapse to psi = 0 in exploratory nontrivial solves).
    pub psi_norm_target: f64,
    pub seed: u64,
    /// Small-energy threshold used by probes.
    pub eps0: f64,
}

impl SolverParams {
    /// Conservative defaults for a given grid: `step = 0.2 h^2`.
    pub fn for_grid(grid: &Grid) -> SolverParams {
        SolverParams {
            step: 0.2 * grid.h() * grid.h(),
            max_iters: 2000,
            tol: 1e-6,
            psi_norm_target: 0.0,
            seed: 0,
            eps0: 1.0,
        }
    }

    /// Linear stability heuristic `step * 4 / h^2`; should be < 1 for the
    /// explicit heat step. Recorded, not enforced.
    pub fn stability_factor(&self, grid: &Grid) -> f64 {
        self.step * 4.0 / (grid.h() * grid.h())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub e_map: f64,
    pub e_spinor: f64,
    pub residual_map: f64,
    pub residual_spinor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveTrace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
    /// Set when e_map increased after its initial transient (heat flow
    /// should be dissipative; an increase flags a too-large step).
    pub monotonicity_warning: bool,
    pub stability_factor: f64,
}

/// Adjoint of the linearized spinor operator at fixed `phi`:
/// `(L^T xi)^i = dslash xi^i - grad phi^i . (sum_m phi^m xi^m)`,
/// from summation by parts and skew-adjointness of Clifford products.
fn adjoint_apply(
    phi: &MapField,
    gx: &[ScalarField],
    gy: &[ScalarField],
    xi: &[SpinorGrid],
) -> Vec<SpinorGrid> {
    let grid = *phi.grid();
    let n = phi.n();
    let mut out: Vec<SpinorGrid> = xi.iter().map(dirac_flat).collect();
    for j in 0..grid.npy() {
        for i in 0..grid.npx() {
            let mut pulled = Spinor::ZERO;
            for m in 0..=n {
                pulled = pulled + xi[m].at(i, j) * phi.comps()[m].at(i, j);
            }
            for (k, comp) in out.iter_mut().enumerate() {
                let v = [gx[k].at(i, j), gy[k].at(i, j)];
                *comp.at_mut(i, j) = comp.at(i, j) - vector_clifford(v, pulled);
            }
        }
    }
    out
}

fn spinor_quartic_energy(psi: &SpinorAlongMap) -> f64 {
    let f = psi.norm_sq_field();
    quadrature(&f.map(|v| v * v))
}

/// Coupled relaxation. See the module docs for the scheme; the returned
/// trace has one row per iteration performed (at most `max_iters`).
pub fn relax_coupled(
    phi0: &MapField,
    psi0: &SpinorAlongMap,
    params: &SolverParams,
) -> Result<(MapField, SpinorAlongMap, SolveTrace)> {
    let grid = *phi0.grid();
    let mut phi = phi0.clone();
    let mut psi = psi0.clone();
    let mut rows = Vec::new();
    let mut converged = false;
    let mut monotonicity_warning = false;
    let mut initial_e_map = None;
    let mut prev_e_map: Option<f64> = None;
    let transient = (params.max_iters / 10).max(20);

    for iter in 0..params.max_iters {
        let (r_map, r_psi) = el_residuals(&phi, &psi)?;
        let e_map = quadrature(&phi.energy_density());
        let e_spinor = spinor_quartic_energy(&psi);
        let residual_map = vector_residual_norm(&r_map, DEFAULT_MARGIN);
        let residual_spinor = spinor_residual_norm(&r_psi, DEFAULT_MARGIN);
        rows.push(TraceRow {
            iter,
            e_map,
            e_spinor,
            residual_map,
            residual_spinor,
        });

        let initial = *initial_e_map.get_or_insert(e_map);
        if e_map > 10.0 * initial + 1e-3 {
            return Err(DhError::Diverged {
                iter,
                e_map,
                initial,
            });
        }
        if iter > transient {
            if let Some(prev) = prev_e_map {
                if e_map > prev * (1.0 + 1e-12) + 1e-15 {
                    monotonicity_warning = true;
                }
            }
        }
        prev_e_map = Some(e_map);

        if residual_map <= params.tol && residual_spinor <= params.tol {
            converged = true;
            break;
        }

        // Map step: projected heat flow, Dirichlet ring held fixed.
        let mut raw: Vec<ScalarField> = phi.comps().to_vec();
        for (comp, r) in raw.iter_mut().zip(&r_map) {
            for j in 0..grid.npy() {
                for i in 0..grid.npx() {
                    if !grid.is_boundary(i, j) {
                        *comp.at_mut(i, j) += params.step * r.at(i, j);
                    }
                }
            }
        }
        let phi_new = project_sphere(&raw)?;

        // Spinor step: explicit descent on ||r_psi||^2 via the adjoint.
        let gx: Vec<ScalarField> = phi.comps().iter().map(|c| diff(c, Axis::X)).collect();
        let gy: Vec<ScalarField> = phi.comps().iter().map(|c| diff(c, Axis::Y)).collect();
        let grad = adjoint_apply(&phi, &gx, &gy, &r_psi);
        let mut raw_psi: Vec<SpinorGrid> = psi.comps().to_vec();
        for (comp, g) in raw_psi.iter_mut().zip(&grad) {
            for j in 0..grid.npy() {
                for i in 0..grid.npx() {
                    if !grid.is_boundary(i, j) {
                        *comp.at_mut(i, j) = comp.at(i, j) - g.at(i, j) * params.step;
                    }
                }
            }
        }
        let mut psi_new = project_tangent(&phi_new, &raw_psi);
        if params.psi_norm_target > 0.0 {
            let e4 = spinor_quartic_energy(&psi_new);
            if e4 > 0.0 {
                let s = (params.psi_norm_target / e4).powf(0.25);
                for comp in psi_new.comps_mut() {
                    for v in comp.data_mut() {
                        *v = *v * s;
                    }
                }
            }
        }
        let defect = psi_new.tangency_defect(&phi_new);
        if defect > TANGENCY_TOL {
            return Err(DhError::TangencyViolation {
                defect,
                i: 0,
                j: 0,
            });
        }

        phi = phi_new;
        psi = psi_new;
    }

    let trace = SolveTrace {
        rows,
        converged,
        monotonicity_warning,
        stability_factor: params.stability_factor(&grid),
    };
    Ok((phi, psi, trace))
}

/// Harmonic specialization: the coupled loop with `psi = 0`, which is a
/// fixed point of the spinor dynamics, so the map iterates are bitwise
/// those of the pure projected heat flow.
pub fn relax_harmonic(phi0: &MapField, params: &SolverParams) -> Result<(MapField, SolveTrace)> {
    let psi0 = SpinorAlongMap::zeros(phi0.grid(), phi0.n());
    let (phi, _psi, trace) = relax_coupled(phi0, &psi0, params)?;
    Ok((phi, trace))
}

/// Initialization style for probe trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Truncated Fourier perturbation of a constant map (decay exponent 2).
    RandomFourier,
    /// A concentrated bubble plus spinor filling the remaining budget.
    BubbleLike,
}

/// Zero-mean truncated Fourier series with `1/(1+|k|^2)` decay; modes up
/// to `kmax` in each direction, well under the Nyquist index.
pub fn random_fourier_scalar(grid: &Grid, kmax: i64, rng: &mut ChaCha8Rng) -> ScalarField {
    let mut modes = Vec::new();
    for kx in -kmax..=kmax {
        for ky in -kmax..=kmax {
            if kx == 0 && ky == 0 {
                continue;
            }
            let amp: f64 = rng.gen_range(-1.0..1.0);
            let phase: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            modes.push((kx, ky, amp / (1.0 + (kx * kx + ky * ky) as f64), phase));
        }
    }
    let (lx, ly) = (grid.lx(), grid.ly());
    let two_pi = 2.0 * std::f64::consts::PI;
    ScalarField::from_fn(grid, |x, y| {
        modes
            .iter()
            .map(|&(kx, ky, a, p)| {
                a * (two_pi * (kx as f64 * x / lx + ky as f64 * y / ly) + p).cos()
            })
            .sum()
    })
}

/// Component-wise zero-mean Fourier spinor field. Omitting the constant
/// mode keeps the seed clear of the flat-Dirac kernel on the torus.
pub fn random_fourier_spinor(grid: &Grid, kmax: i64, rng: &mut ChaCha8Rng) -> SpinorGrid {
    let parts: Vec<ScalarField> = (0..4)
        .map(|_| random_fourier_scalar(grid, kmax, rng))
        .collect();
    let mut out = SpinorGrid::zeros(grid);
    for (idx, o) in out.data_mut().iter_mut().enumerate() {
        *o = Spinor::new(
            Complex64::new(parts[0].data()[idx], parts[1].data()[idx]),
            Complex64::new(parts[2].data()[idx], parts[3].data()[idx]),
        );
    }
    out
}

fn map_energy_at_amplitude(
    base: &[f64],
    perturbation: &[ScalarField],
    amp: f64,
) -> Result<(MapField, f64)> {
    let grid = *perturbation[0].grid();
    let raw: Vec<ScalarField> = base
        .iter()
        .zip(perturbation)
        .map(|(&b, p)| {
            let mut f = ScalarField::from_fn(&grid, |_, _| b);
            f.add_scaled(p, amp);
            f
        })
        .collect();
    let phi = project_sphere(&raw)?;
    let e = quadrature(&phi.energy_density());
    Ok((phi, e))
}

/// Perturbed-constant map with `int |d phi|^2` tuned to `target` by
/// deterministic bisection on the perturbation amplitude.
fn random_map_with_energy(
    grid: &Grid,
    target: f64,
    rng: &mut ChaCha8Rng,
) -> Result<MapField> {
    let base = [0.0, 0.0, 1.0];
    let perturbation: Vec<ScalarField> = (0..3)
        .map(|_| random_fourier_scalar(grid, 3, rng))
        .collect();
    if target == 0.0 {
        return MapField::constant(grid, &base);
    }
    let mut hi = 1.0f64;
    loop {
        let (_, e) = map_energy_at_amplitude(&base, &perturbation, hi)?;
        if e >= target || hi > 1e6 {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = 0.0f64;
    let mut phi = MapField::constant(grid, &base)?;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (p, e) = map_energy_at_amplitude(&base, &perturbation, mid)?;
        phi = p;
        if e < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(phi)
}

/// Tangent spinor with `int |psi|^4` scaled exactly to `target`
/// (projection is linear, so quartic scaling is exact).
fn random_spinor_with_energy(
    phi: &MapField,
    target: f64,
    rng: &mut ChaCha8Rng,
) -> SpinorAlongMap {
    let grid = *phi.grid();
    if target == 0.0 {
        return SpinorAlongMap::zeros(&grid, phi.n());
    }
    let raw: Vec<SpinorGrid> = (0..=phi.n())
        .map(|_| random_fourier_spinor(&grid, 3, rng))
        .collect();
    let mut psi = project_tangent(phi, &raw);
    let e4 = spinor_quartic_energy(&psi);
    if e4 > 0.0 {
        let s = (target / e4).powf(0.25);
        for comp in psi.comps_mut() {
            for v in comp.data_mut() {
                *v = *v * s;
            }
        }
    }
    psi
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub e_initial: f64,
    pub e_map_final: f64,
    pub e_spinor_final: f64,
    /// Final total energy below 1e-6: converged to constant map / zero
    /// spinor.
    pub vanished: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VanishingReport {
    pub energy_budget: f64,
    pub trials: Vec<TrialOutcome>,
    pub vanished_count: usize,
}

/// Threshold under which a relaxed configuration counts as constant.
pub const VANISH_THRESHOLD: f64 = 1e-6;

/// Seeded trials of the small-energy vanishing phenomenon: initial data
/// with `e_map + e_spinor = energy_budget` relax to the constant map and
/// zero spinor when the budget is small; bubble-like data above the
/// topological threshold retain quantized map energy.
pub fn vanishing_probe(
    grid: &Grid,
    energy_budget: f64,
    trials: usize,
    init: InitKind,
    params: &SolverParams,
) -> Result<VanishingReport> {
    if !(energy_budget >= 0.0) {
        return Err(DhError::BadGeometry(format!(
            "energy budget must be nonnegative, got {energy_budget}"
        )));
    }
    let mut outcomes = Vec::with_capacity(trials);
    for trial in 0..trials {
        let seed = params.seed.wrapping_add(trial as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (phi0, psi0) = match init {
            InitKind::RandomFourier => {
                let phi = random_map_with_energy(grid, 0.5 * energy_budget, &mut rng)?;
                let psi = random_spinor_with_energy(&phi, 0.5 * energy_budget, &mut rng);
                (phi, psi)
            }
            InitKind::BubbleLike => {
                let lambda = rng.gen_range(0.15..0.25) * grid.lx();
                let cx = rng.gen_range(-0.1..0.1) * grid.lx();
                let cy = rng.gen_range(-0.1..0.1) * grid.ly();
                let spec = BubbleSpec::new([cx, cy], lambda)?;
                let phi = crate::bubble::bubble_on_grid(&spec, grid)?;
                let e_map = quadrature(&phi.energy_density());
                let remainder = (energy_budget - e_map).max(0.0);
                let psi = random_spinor_with_energy(&phi, remainder, &mut rng);
                (phi, psi)
            }
        };
        let e_initial =
            quadrature(&phi0.energy_density()) + spinor_quartic_energy(&psi0);
        let run_params = SolverParams {
            psi_norm_target: 0.0,
            ..*params
        };
        let (phi, psi, _trace) = relax_coupled(&phi0, &psi0, &run_params)?;
        let e_map_final = quadrature(&phi.energy_density());
        let e_spinor_final = spinor_quartic_energy(&psi);
        outcomes.push(TrialOutcome {
            trial,
            seed,
            e_initial,
            e_map_final,
            e_spinor_final,
            vanished: e_map_final + e_spinor_final < VANISH_THRESHOLD,
        });
    }
    let vanished_count = outcomes.iter().filter(|o| o.vanished).count();
    Ok(VanishingReport {
        energy_budget,
        trials: outcomes,
        vanished_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus32() -> Grid {
        Grid::torus(1.0, 1.0, 32, 32).unwrap()
    }

    #[test]
    fn constant_map_returns_immediately() {
        let grid = torus32();
        let phi0 = MapField::constant(&grid, &[0.0, 0.0, 1.0]).unwrap();
        let params = SolverParams::for_grid(&grid);
        let (phi, trace) = relax_harmonic(&phi0, &params).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.rows[0].residual_map, 0.0);
        assert_eq!(phi.site(3, 5), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn small_perturbation_flows_to_constant() {
        let grid = torus32();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let phi0 = random_map_with_energy(&grid, 0.02, &mut rng).unwrap();
        let params = SolverParams {
            max_iters: 4000,
            tol: 1e-7,
            ..SolverParams::for_grid(&grid)
        };
        let (phi, trace) = relax_harmonic(&phi0, &params).unwrap();
        assert!(trace.converged, "rows: {}", trace.rows.len());
        let e_final = quadrature(&phi.energy_density());
        assert!(e_final < 1e-8, "e_final {e_final}");
        assert!(!trace.monotonicity_warning);
    }

    #[test]
    fn coupled_with_zero_spinor_matches_harmonic_bitwise() {
        let grid = torus32();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let phi0 = random_map_with_energy(&grid, 0.5, &mut rng).unwrap();
        let params = SolverParams {
            max_iters: 50,
            ..SolverParams::for_grid(&grid)
        };
        let (ph, trace_h) = relax_harmonic(&phi0, &params).unwrap();
        let psi0 = SpinorAlongMap::zeros(&grid, 2);
        let (pc, psi, trace_c) = relax_coupled(&phi0, &psi0, &params).unwrap();
        assert!(psi.is_zero());
        assert_eq!(ph.comps(), pc.comps());
        for (a, b) in trace_h.rows.iter().zip(&trace_c.rows) {
            assert_eq!(a.e_map.to_bits(), b.e_map.to_bits());
            assert_eq!(a.residual_map.to_bits(), b.residual_map.to_bits());
        }
    }

    #[test]
    fn constant_map_constant_spinor_is_near_fixed_point() {
        // Constant tangent spinors are flat-Dirac harmonic; with the norm
        // target holding |psi| fixed, both residuals sit at rounding level.
        let grid = torus32();
        let phi0 = MapField::constant(&grid, &[0.0, 0.0, 1.0]).unwrap();
        let mut raw = vec![SpinorGrid::zeros(&grid); 3];
        for v in raw[0].data_mut() {
            *v = Spinor::from_re(0.6, -0.2);
        }
        for v in raw[1].data_mut() {
            *v = Spinor::from_re(-0.1, 0.4);
        }
        let psi0 = project_tangent(&phi0, &raw);
        let e4 = spinor_quartic_energy(&psi0);
        assert!(e4 > 0.0);
        let params = SolverParams {
            max_iters: 20,
            tol: 1e-10,
            psi_norm_target: e4,
            ..SolverParams::for_grid(&grid)
        };
        let (_, psi, trace) = relax_coupled(&phi0, &psi0, &params).unwrap();
        assert!(trace.converged);
        let last = trace.rows.last().unwrap();
        assert!(last.residual_map < 1e-10 && last.residual_spinor < 1e-10);
        assert!((spinor_quartic_energy(&psi) - e4).abs() < 1e-10 * e4);
    }

    #[test]
    fn divergence_aborts() {
        let grid = torus32();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let phi0 = random_map_with_energy(&grid, 2.0, &mut rng).unwrap();
        // Step far beyond the stability bound.
        let params = SolverParams {
            step: 1.0,
            max_iters: 200,
            ..SolverParams::for_grid(&grid)
        };
        match relax_coupled(&phi0, &SpinorAlongMap::zeros(&grid, 2), &params) {
            Err(DhError::Diverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn probe_budget_zero_trivially_vanishes() {
        let grid = torus32();
        let params = SolverParams {
            max_iters: 10,
            ..SolverParams::for_grid(&grid)
        };
        let report =
            vanishing_probe(&grid, 0.0, 2, InitKind::RandomFourier, &params).unwrap();
        assert_eq!(report.vanished_count, 2);
    }

    #[test]
    fn probe_initial_energy_hits_budget() {
        let grid = torus32();
        let params = SolverParams {
            max_iters: 1,
            ..SolverParams::for_grid(&grid)
        };
        let report =
            vanishing_probe(&grid, 0.05, 2, InitKind::RandomFourier, &params).unwrap();
        for t in &report.trials {
            assert!(
                (t.e_initial - 0.05).abs() < 1e-6,
                "budget missed: {}",
                t.e_initial
            );
        }
    }

    #[test]
    fn fixed_point_data_left_unchanged() {
        // Residuals below tol: one step changes the residual norms little.
        let grid = torus32();
        let phi0 = MapField::constant(&grid, &[1.0, 0.0, 0.0]).unwrap();
        let params = SolverParams {
            max_iters: 2,
            tol: 1e-9,
            ..SolverParams::for_grid(&grid)
        };
        let (phi, trace) = relax_harmonic(&phi0, &params).unwrap();
        assert!(trace.converged);
        assert_eq!(phi.comps(), phi0.comps());
    }
}
