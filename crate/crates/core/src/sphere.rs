//! Sphere-target geometry and the coupled Euler-Lagrange system.
//!
//! The target is the unit sphere `S^n` embedded in `R^{n+1}` (default
//! `n = 2`), for which the second fundamental form and shape operator have
//! closed forms: `A(X, Y) = -<X, Y> p` and `P(f p; X) = -f X`.

use crate::clifford::{clifford_mul, spinor_inner, vector_clifford, Axis, Spinor, AXES};
use crate::diff::{diff, dirac_flat, laplacian, quad_weight, quadrature};
use crate::error::{DhError, Result};
use crate::grid::{Grid, ScalarField, SpinorGrid};
use serde::Serialize;

/// Per-site sphere constraint tolerance.
pub const SPHERE_TOL: f64 = 1e-10;
/// Per-site tangency constraint tolerance (relative to the spinor size).
pub const TANGENCY_TOL: f64 = 1e-8;
/// Margin (in nodes) excluded from interior residual norms on rectangles.
pub const DEFAULT_MARGIN: usize = 2;
/// Spinor energies above this are flagged as degenerate in reports.
pub const SPINOR_ENERGY_FLAG: f64 = 1e6;

/// Grid-sampled map into `S^n`, unit length at every site.
#[derive(Debug, Clone, PartialEq)]
pub struct MapField {
    n: usize,
    comps: Vec<ScalarField>,
}

/// Spinor along a map: `n + 1` spinor grids satisfying the tangency
/// constraint `sum_i phi^i psi^i = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorAlongMap {
    n: usize,
    comps: Vec<SpinorGrid>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridMeta {
    pub topology: crate::grid::Topology,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub n: usize,
}

/// Energies and residual norms of a configuration.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub e_map: f64,
    pub e_spinor: f64,
    pub l_value: f64,
    pub residual_map: f64,
    pub residual_spinor: f64,
    pub grid: GridMeta,
    /// Set when `e_spinor` exceeds the degeneracy threshold.
    pub flagged_degenerate: bool,
}

impl MapField {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &Grid {
        self.comps[0].grid()
    }

    pub fn comps(&self) -> &[ScalarField] {
        &self.comps
    }

    /// Constant map to a point (normalized).
    pub fn constant(grid: &Grid, point: &[f64]) -> Result<MapField> {
        let raw: Vec<ScalarField> = point
            .iter()
            .map(|&c| ScalarField::from_fn(grid, |_, _| c))
            .collect();
        project_sphere(&raw)
    }

    /// Build from a closed-form map, normalizing each site.
    pub fn from_fn(
        grid: &Grid,
        n: usize,
        f: impl Fn(f64, f64) -> Vec<f64>,
    ) -> Result<MapField> {
        let mut raw = vec![ScalarField::zeros(grid); n + 1];
        for j in 0..grid.npy() {
            for i in 0..grid.npx() {
                let v = f(grid.x(i), grid.y(j));
                assert_eq!(v.len(), n + 1);
                for (m, comp) in raw.iter_mut().enumerate() {
                    *comp.at_mut(i, j) = v[m];
                }
            }
        }
        project_sphere(&raw)
    }

    pub fn site(&self, i: usize, j: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c.at(i, j)).collect()
    }

    /// Largest deviation of `|phi|` from 1 over the grid.
    pub fn sphere_defect(&self) -> f64 {
        let grid = self.grid();
        let mut worst = 0.0f64;
        for j in 0..grid.npy() {
            for i in 0..grid.npx() {
                let norm2: f64 = self.comps.iter().map(|c| c.at(i, j).powi(2)).sum();
                worst = worst.max((norm2.sqrt() - 1.0).abs());
            }
        }
        worst
    }

    fn check_on_sphere(&self) -> Result<()> {
        let grid = self.grid();
        for j in 0..grid.npy() {
            for i in 0..grid.npx() {
                let norm2: f64 = self.comps.iter().map(|c| c.at(i, j).powi(2)).sum();
                let defect = (norm2.sqrt() - 1.0).abs();
                if defect > SPHERE_TOL {
                    return Err(DhError::OffSphere { defect, i, j });
                }
            }
        }
        Ok(())
    }

    /// Component-wise centered gradients `(d_x phi, d_y phi)`.
    pub fn gradients(&self) -> (Vec<ScalarField>, Vec<ScalarField>) {
        let gx = self.comps.iter().map(|c| diff(c, Axis::X)).collect();
        let gy = self.comps.iter().map(|c| diff(c, Axis::Y)).collect();
        (gx, gy)
    }

    /// Pointwise energy density `|d phi|^2`.
    pub fn energy_density(&self) -> ScalarField {
        let (gx, gy) = self.gradients();
        let grid = *self.grid();
        let mut out = ScalarField::zeros(&grid);
        for j in 0..grid.npy() {
            for i in 0..grid.npx() {
                let mut acc = 0.0;
                for m in 0..=self.n {
                    acc += gx[m].at(i, j).powi(2) + gy[m].at(i, j).powi(2);
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    /// Replace component data directly; callers must re-project afterwards.
    pub fn comps_mut(&mut self) -> &mut Vec<ScalarField> {
        &mut self.comps
    }

    pub fn from_unit_comps(comps: Vec<ScalarField>) -> Result<MapField> {
        let n = comps.len() - 1;
        let phi = MapField { n, comps };
        phi.check_on_sphere()?;
        Ok(phi)
    }
}

impl SpinorAlongMap {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &Grid {
        self.comps[0].grid()
    }

    pub fn comps(&self) -> &[SpinorGrid] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut Vec<SpinorGrid> {
        &mut self.comps
    }

    pub fn zeros(grid: &Grid, n: usize) -> SpinorAlongMap {
        SpinorAlongMap {
            n,
            comps: vec![SpinorGrid::zeros(grid); n + 1],
        }
    }

    pub fn site(&self, i: usize, j: usize) -> Vec<Spinor> {
        self.comps.iter().map(|c| c.at(i, j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.data().iter().all(|s| *s == Spinor::ZERO))
    }

    /// Pointwise `|psi|^2 = sum_i |psi^i|^2`.
    pub fn norm_sq_field(&self) -> ScalarField {
        let grid = *self.grid();
        let mut out = ScalarField::zeros(&grid);
        for j in 0..grid.npy() {
            for i in 0..grid.npx() {
                *out.at_mut(i, j) = self.comps.iter().map(|c| c.at(i, j).norm_sq()).sum();
            }
        }
        out
    }

    /// Largest per-site tangency defect `|sum_i phi^i psi^i|`.
    pub fn tangency_defect(&self, phi: &MapField) -> f64 {
        let grid = self.grid();
        let mut worst = 0.0f64;
        for j in 0..grid.npy() {
            for i in 0..grid.npx() {
                let mut acc = Spinor::ZERO;
                for m in 0..=self.n {
                    acc = acc + self.comps[m].at(i, j) * phi.comps[m].at(i, j);
                }
                worst = worst.max(acc.norm_sq().sqrt());
            }
        }
        worst
    }

    fn check_tangent(&self, phi: &MapField) -> Result<()> {
        let grid = self.grid();
        for j in 0..grid.npy() {
            for i in 0..grid.npx() {
                let mut acc = Spinor::ZERO;
                let mut size = 0.0;
                for m in 0..=self.n {
                    acc = acc + self.comps[m].at(i, j) * phi.comps[m].at(i, j);
                    size += self.comps[m].at(i, j).norm_sq();
                }
                let defect = acc.norm_sq().sqrt();
                if defect > TANGENCY_TOL * (1.0 + size.sqrt()) {
                    return Err(DhError::TangencyViolation { defect, i, j });
                }
            }
        }
        Ok(())
    }
}

/// Normalize a raw vector field onto the sphere, site by site.
pub fn project_sphere(raw: &[ScalarField]) -> Result<MapField> {
    let n = raw.len() - 1;
    let grid = *raw[0].grid();
    let mut comps = vec![ScalarField::zeros(&grid); n + 1];
    for j in 0..grid.npy() {
        for i in 0..grid.npx() {
            let norm2: f64 = raw.iter().map(|c| c.at(i, j).powi(2)).sum();
            if norm2 == 0.0 {
                return Err(DhError::ZeroVector { i, j });
            }
            let inv = 1.0 / norm2.sqrt();
            for (m, comp) in comps.iter_mut().enumerate() {
                *comp.at_mut(i, j) = raw[m].at(i, j) * inv;
            }
        }
    }
    Ok(MapField { n, comps })
}

/// Project a raw spinor array onto the tangent bundle along `phi`:
/// `psi^i <- psi^i - phi^i sum_j phi^j psi^j`. Idempotent.
pub fn project_tangent(phi: &MapField, raw: &[SpinorGrid]) -> SpinorAlongMap {
    let n = phi.n;
    assert_eq!(raw.len(), n + 1);
    let grid = *phi.grid();
    let mut comps = vec![SpinorGrid::zeros(&grid); n + 1];
    for j in 0..grid.npy() {
        for i in 0..grid.npx() {
            let mut normal = Spinor::ZERO;
            for m in 0..=n {
                normal = normal + raw[m].at(i, j) * phi.comps[m].at(i, j);
            }
            for (m, comp) in comps.iter_mut().enumerate() {
                *comp.at_mut(i, j) = raw[m].at(i, j) - normal * phi.comps[m].at(i, j);
            }
        }
    }
    SpinorAlongMap { n, comps }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Second fundamental form of `S^n` in `R^{n+1}`: `A(X, Y) = -<X, Y> p`
/// for `X, Y` tangent at `p`.
pub fn second_fundamental(x: &[f64], y: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    for (v, name) in [(x, "second_fundamental X"), (y, "second_fundamental Y")] {
        let defect = dot(v, p).abs();
        if defect > 1e-8 * (1.0 + dot(v, v).sqrt()) {
            return Err(DhError::NotTangent {
                context: name,
                defect,
            });
        }
    }
    let c = -dot(x, y);
    Ok(p.iter().map(|&pi| c * pi).collect())
}

/// Shape operator of `S^n`: for normal `xi = f p` and tangent `X`,
/// `P(xi; X) = -f X`, the dual of `A` under `<P(xi; X), Y> = <A(X, Y), xi>`.
pub fn shape_operator(xi: &[f64], x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let f = dot(xi, p);
    let tangential: f64 = xi
        .iter()
        .zip(p)
        .map(|(&v, &pi)| (v - f * pi).powi(2))
        .sum::<f64>()
        .sqrt();
    if tangential > 1e-8 * (1.0 + dot(xi, xi).sqrt()) {
        return Err(DhError::NotNormal {
            context: "shape_operator xi",
            defect: tangential,
        });
    }
    Ok(x.iter().map(|&v| -f * v).collect())
}

fn tangent_part(v: &[f64], p: &[f64]) -> Vec<f64> {
    let c = dot(v, p);
    v.iter().zip(p).map(|(&vi, &pi)| vi - c * pi).collect()
}

/// Curvature coupling at a single site via the intrinsic sphere curvature
/// tensor `R(X, Y)Z = <Y, Z> X - <X, Z> Y` written in ambient components.
///
/// `gx`, `gy` are the tangent gradients of the map, `psi` the site spinors.
pub fn curvature_point(p: &[f64], gx: &[f64], gy: &[f64], psi: &[Spinor]) -> Vec<f64> {
    let dim = p.len();
    let grads = [gx, gy];
    // c[a][i][j] = <psi^i, e_a . psi^j>
    let mut c = vec![vec![vec![0.0; dim]; dim]; 2];
    for (a, axis) in AXES.iter().enumerate() {
        for i in 0..dim {
            for j in 0..dim {
                c[a][i][j] = spinor_inner(psi[i], clifford_mul(*axis, psi[j]));
            }
        }
    }
    let proj = |i: usize, m: usize| -> f64 {
        (if i == m { 1.0 } else { 0.0 }) - p[i] * p[m]
    };
    let mut out = vec![0.0; dim];
    for m in 0..dim {
        let mut acc = 0.0;
        for a in 0..2 {
            for l in 0..dim {
                let gl = grads[a][l];
                if gl == 0.0 {
                    continue;
                }
                for i in 0..dim {
                    for j in 0..dim {
                        // R^m_{l i j} for the round sphere in ambient form.
                        let r = proj(j, l) * proj(i, m) - proj(i, l) * proj(j, m);
                        acc += 0.5 * gl * c[a][i][j] * r;
                    }
                }
            }
        }
        out[m] = acc;
    }
    out
}

/// Same coupling assembled extrinsically from the second fundamental form
/// and the shape operator, `P(A(d phi(e_a), e_a . psi); psi)`.
pub fn curvature_point_extrinsic(
    p: &[f64],
    gx: &[f64],
    gy: &[f64],
    psi: &[Spinor],
) -> Result<Vec<f64>> {
    let dim = p.len();
    let grads = [gx, gy];
    let mut out = vec![0.0; dim];
    for (a, axis) in AXES.iter().enumerate() {
        for j in 0..dim {
            let ej_t = tangent_part(&unit_vec(dim, j), p);
            let a_form = second_fundamental(grads[a], &ej_t, p)?;
            for i in 0..dim {
                let ei_t = tangent_part(&unit_vec(dim, i), p);
                let pv = shape_operator(&a_form, &ei_t, p)?;
                let coeff = spinor_inner(psi[i], clifford_mul(*axis, psi[j]));
                for m in 0..dim {
                    out[m] += coeff * pv[m];
                }
            }
        }
    }
    Ok(out)
}

fn unit_vec(dim: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[k] = 1.0;
    v
}

fn field_curvature(
    phi: &MapField,
    psi: &SpinorAlongMap,
    extrinsic: bool,
) -> Result<Vec<ScalarField>> {
    let grid = *phi.grid();
    let n = phi.n;
    let (gx, gy) = phi.gradients();
    let mut out = vec![ScalarField::zeros(&grid); n + 1];
    for j in 0..grid.npy() {
        for i in 0..grid.npx() {
            let p = phi.site(i, j);
            // Discrete gradients are tangent only to truncation error;
            // project before the pointwise geometry.
            let gx_t = tangent_part(&gx.iter().map(|g| g.at(i, j)).collect::<Vec<_>>(), &p);
            let gy_t = tangent_part(&gy.iter().map(|g| g.at(i, j)).collect::<Vec<_>>(), &p);
            let s = psi.site(i, j);
            let v = if extrinsic {
                curvature_point_extrinsic(&p, &gx_t, &gy_t, &s)?
            } else {
                curvature_point(&p, &gx_t, &gy_t, &s)
            };
            for (m, comp) in out.iter_mut().enumerate() {
                *comp.at_mut(i, j) = v[m];
            }
        }
    }
    Ok(out)
}

/// Curvature term `R(phi, psi)` as an ambient vector field (intrinsic route).
pub fn curvature_term(phi: &MapField, psi: &SpinorAlongMap) -> Result<Vec<ScalarField>> {
    field_curvature(phi, psi, false)
}

/// Curvature term via the extrinsic `A`/`P` contractions.
pub fn curvature_term_extrinsic(
    phi: &MapField,
    psi: &SpinorAlongMap,
) -> Result<Vec<ScalarField>> {
    field_curvature(phi, psi, true)
}

/// Dirac operator along the map in extrinsic form:
/// `(D psi)^m = dslash psi^m + sum_i (grad phi^i . psi^i) phi^m`.
pub fn dirac_along_map(phi: &MapField, psi: &SpinorAlongMap) -> Vec<SpinorGrid> {
    let grid = *phi.grid();
    let n = phi.n;
    let (gx, gy) = phi.gradients();
    let flat: Vec<SpinorGrid> = psi.comps.iter().map(dirac_flat).collect();
    let mut out = flat;
    for j in 0..grid.npy() {
        for i in 0..grid.npx() {
            let mut source = Spinor::ZERO;
            for k in 0..=n {
                let v = [gx[k].at(i, j), gy[k].at(i, j)];
                source = source + vector_clifford(v, psi.comps[k].at(i, j));
            }
            for (m, comp) in out.iter_mut().enumerate() {
                let phim = phi.comps[m].at(i, j);
                *comp.at_mut(i, j) = comp.at(i, j) + source * phim;
            }
        }
    }
    out
}

/// Residuals of the coupled Euler-Lagrange system.
///
/// Map residual: `r^m = Lap phi^m + |d phi|^2 phi^m
///                      - sum_{i,a} phi^i_a <e_a . psi^i, psi^m>`,
/// which vanishes identically on exact solutions. Spinor residual: the
/// output of [`dirac_along_map`].
pub fn el_residuals(
    phi: &MapField,
    psi: &SpinorAlongMap,
) -> Result<(Vec<ScalarField>, Vec<SpinorGrid>)> {
    phi.check_on_sphere()?;
    psi.check_tangent(phi)?;
    let grid = *phi.grid();
    let n = phi.n;
    let (gx, gy) = phi.gradients();
    let lap: Vec<ScalarField> = phi.comps.iter().map(laplacian).collect();
    let mut r_map = vec![ScalarField::zeros(&grid); n + 1];
    for j in 0..grid.npy() {
        for i in 0..grid.npx() {
            let mut density = 0.0;
            for m in 0..=n {
                density += gx[m].at(i, j).powi(2) + gy[m].at(i, j).powi(2);
            }
            for m in 0..=n {
                let mut source = 0.0;
                for k in 0..=n {
                    source += gx[k].at(i, j)
                        * spinor_inner(
                            clifford_mul(Axis::X, psi.comps[k].at(i, j)),
                            psi.comps[m].at(i, j),
                        );
                    source += gy[k].at(i, j)
                        * spinor_inner(
                            clifford_mul(Axis::Y, psi.comps[k].at(i, j)),
                            psi.comps[m].at(i, j),
                        );
                }
                *r_map[m].at_mut(i, j) =
                    lap[m].at(i, j) + density * phi.comps[m].at(i, j) - source;
            }
        }
    }
    Ok((r_map, dirac_along_map(phi, psi)))
}

/// Interior max of the Euclidean norm across ambient components.
pub fn vector_residual_norm(r: &[ScalarField], margin: usize) -> f64 {
    let grid = r[0].grid();
    let mut worst = 0.0f64;
    for j in 0..grid.npy() {
        for i in 0..grid.npx() {
            if grid.is_interior(i, j, margin) {
                let norm2: f64 = r.iter().map(|c| c.at(i, j).powi(2)).sum();
                worst = worst.max(norm2.sqrt());
            }
        }
    }
    worst
}

/// Interior max of the spinor norm across ambient components.
pub fn spinor_residual_norm(r: &[SpinorGrid], margin: usize) -> f64 {
    let grid = r[0].grid();
    let mut worst = 0.0f64;
    for j in 0..grid.npy() {
        for i in 0..grid.npx() {
            if grid.is_interior(i, j, margin) {
                let norm2: f64 = r.iter().map(|c| c.at(i, j).norm_sq()).sum();
                worst = worst.max(norm2.sqrt());
            }
        }
    }
    worst
}

/// Energies `E(phi) = int |d phi|^2`, `E(psi) = int |psi|^4`, the action
/// value `L = E(phi) + int <psi, D psi>` and interior residual norms.
pub fn energies(phi: &MapField, psi: &SpinorAlongMap) -> Result<EnergyReport> {
    let grid = *phi.grid();
    let e_map = quadrature(&phi.energy_density());
    let psi_sq = psi.norm_sq_field();
    let e_spinor = quadrature(&psi_sq.map(|v| v * v));

    let dpsi = dirac_along_map(phi, psi);
    let mut pairing = 0.0;
    for j in 0..grid.npy() {
        for i in 0..grid.npx() {
            let w = quad_weight(&grid, i, j);
            for m in 0..=phi.n {
                pairing += w * spinor_inner(psi.comps[m].at(i, j), dpsi[m].at(i, j));
            }
        }
    }

    let (r_map, r_psi) = el_residuals(phi, psi)?;
    Ok(EnergyReport {
        e_map,
        e_spinor,
        l_value: e_map + pairing,
        residual_map: vector_residual_norm(&r_map, DEFAULT_MARGIN),
        residual_spinor: spinor_residual_norm(&r_psi, DEFAULT_MARGIN),
        grid: GridMeta {
            topology: grid.topology(),
            lx: grid.lx(),
            ly: grid.ly(),
            nx: grid.nx(),
            ny: grid.ny(),
            h: grid.h(),
            n: phi.n,
        },
        flagged_degenerate: e_spinor > SPINOR_ENERGY_FLAG,
    })
}

/// Scale-aware convergence test from the report.
pub fn is_converged(report: &EnergyReport, tol: f64) -> bool {
    let bound = tol * (1.0 + report.e_map);
    report.residual_map <= bound && report.residual_spinor <= bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::torus(1.0, 1.0, 16, 16).unwrap()
    }

    fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = dot(&v, &v).sqrt();
            if n > 0.2 {
                return v.iter().map(|x| x / n).collect();
            }
        }
    }

    fn random_tangent(rng: &mut ChaCha8Rng, p: &[f64]) -> Vec<f64> {
        let v: Vec<f64> = (0..p.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        tangent_part(&v, p)
    }

    fn random_spinor(rng: &mut ChaCha8Rng) -> Spinor {
        Spinor::new(
            num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        )
    }

    /// Site spinors tangent at p: psi^i = xi_t^i with sum_i p_i psi^i = 0.
    fn random_tangent_spinors(rng: &mut ChaCha8Rng, p: &[f64]) -> Vec<Spinor> {
        let raw: Vec<Spinor> = (0..p.len()).map(|_| random_spinor(rng)).collect();
        let mut normal = Spinor::ZERO;
        for (s, &pi) in raw.iter().zip(p) {
            normal = normal + *s * pi;
        }
        raw.iter()
            .zip(p)
            .map(|(s, &pi)| *s - normal * pi)
            .collect()
    }

    #[test]
    fn project_sphere_examples() {
        let g = grid();
        let raw = vec![
            ScalarField::from_fn(&g, |_, _| 0.0),
            ScalarField::from_fn(&g, |_, _| 0.0),
            ScalarField::from_fn(&g, |_, _| 2.0),
        ];
        let phi = project_sphere(&raw).unwrap();
        assert_eq!(phi.site(0, 0), vec![0.0, 0.0, 1.0]);
        assert!(phi.sphere_defect() < 1e-15);

        let zero = vec![ScalarField::zeros(&g); 3];
        assert!(matches!(
            project_sphere(&zero),
            Err(DhError::ZeroVector { .. })
        ));
    }

    #[test]
    fn tangent_projection_kills_normal_part_and_is_idempotent() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = MapField::from_fn(&g, 2, |x, y| {
            vec![(2.3 * x).sin() + 1.5, (1.7 * y).cos(), 0.8]
        })
        .unwrap();

        // Purely normal raw spinor: psi^i = phi^i * xi0.
        let xi0 = random_spinor(&mut rng);
        let raw: Vec<SpinorGrid> = (0..3)
            .map(|m| {
                let comp = phi.comps()[m].clone();
                let mut s = SpinorGrid::zeros(&g);
                for (o, v) in s.data_mut().iter_mut().zip(comp.data()) {
                    *o = xi0 * *v;
                }
                s
            })
            .collect();
        let psi = project_tangent(&phi, &raw);
        for c in psi.comps() {
            for s in c.data() {
                assert!(s.norm_sq() < 1e-28);
            }
        }

        // Random field: double projection changes nothing.
        let raw: Vec<SpinorGrid> = (0..3)
            .map(|_| {
                let mut s = SpinorGrid::zeros(&g);
                for o in s.data_mut() {
                    *o = random_spinor(&mut rng);
                }
                s
            })
            .collect();
        let once = project_tangent(&phi, &raw);
        let twice = project_tangent(&phi, once.comps());
        for (a, b) in once.comps().iter().zip(twice.comps()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((*x - *y).norm_sq().sqrt() < 1e-14);
            }
        }
        assert!(once.tangency_defect(&phi) < 1e-10);
    }

    #[test]
    fn second_fundamental_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_unit(&mut rng, 3);
        let x = random_tangent(&mut rng, &p);
        let nx = dot(&x, &x).sqrt();
        let xu: Vec<f64> = x.iter().map(|v| v / nx).collect();
        let a = second_fundamental(&xu, &xu, &p).unwrap();
        for (ai, pi) in a.iter().zip(&p) {
            assert!((ai + pi).abs() < 1e-12);
        }
        // Normal component check: <A(X,Y), p> = -<X,Y>.
        let y = random_tangent(&mut rng, &p);
        let a = second_fundamental(&xu, &y, &p).unwrap();
        assert!((dot(&a, &p) + dot(&xu, &y)).abs() < 1e-12);
        // Non-tangent input rejected.
        assert!(second_fundamental(&p, &y, &p).is_err());
    }

    #[test]
    fn shape_operator_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_unit(&mut rng, 3);
        let x = random_tangent(&mut rng, &p);
        let px = shape_operator(&p, &x, &p).unwrap();
        for (a, b) in px.iter().zip(&x) {
            assert!((a + b).abs() < 1e-12);
        }
        let zero = vec![0.0; 3];
        assert_eq!(shape_operator(&zero, &x, &p).unwrap(), zero);
        // Duality against the second fundamental form.
        let y = random_tangent(&mut rng, &p);
        let xi: Vec<f64> = p.iter().map(|v| 0.7 * v).collect();
        let lhs = dot(&shape_operator(&xi, &x, &p).unwrap(), &y);
        let rhs = dot(&second_fundamental(&x, &y, &p).unwrap(), &xi);
        assert!((lhs - rhs).abs() < 1e-12);
        // Tangential xi rejected.
        assert!(shape_operator(&x, &y, &p).is_err());
    }

    #[test]
    fn curvature_routes_agree_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let p = random_unit(&mut rng, 3);
            let gx = random_tangent(&mut rng, &p);
            let gy = random_tangent(&mut rng, &p);
            let psi = random_tangent_spinors(&mut rng, &p);
            let intr = curvature_point(&p, &gx, &gy, &psi);
            let extr = curvature_point_extrinsic(&p, &gx, &gy, &psi).unwrap();
            let scale = intr
                .iter()
                .chain(&extr)
                .fold(1e-30f64, |m, v| m.max(v.abs()));
            for (a, b) in intr.iter().zip(&extr) {
                assert!((a - b).abs() < 1e-10 * scale.max(1.0), "{intr:?} vs {extr:?}");
            }
        }
    }

    #[test]
    fn curvature_zero_cases() {
        let g = grid();
        let phi = MapField::constant(&g, &[0.0, 0.0, 1.0]).unwrap();
        let psi = SpinorAlongMap::zeros(&g, 2);
        let c = curvature_term(&phi, &psi).unwrap();
        for comp in &c {
            assert_eq!(comp.max_abs(), 0.0);
        }
    }

    #[test]
    fn dirac_along_map_trivial_cases() {
        let g = grid();
        let phi = MapField::constant(&g, &[0.0, 0.0, 1.0]).unwrap();
        // Constant tangent spinor along a constant map.
        let mut raw = vec![SpinorGrid::zeros(&g); 3];
        for o in raw[0].data_mut() {
            *o = Spinor::from_re(0.5, -0.25);
        }
        let psi = project_tangent(&phi, &raw);
        let d = dirac_along_map(&phi, &psi);
        for comp in &d {
            for s in comp.data() {
                assert!(s.norm_sq() < 1e-28);
            }
        }
    }

    #[test]
    fn dirac_along_map_self_adjoint_pairing() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = MapField::from_fn(&g, 2, |x, y| {
            vec![
                1.5 + 0.3 * (2.0 * std::f64::consts::PI * x).sin(),
                0.2 * (2.0 * std::f64::consts::PI * y).cos(),
                0.9,
            ]
        })
        .unwrap();
        let raw: Vec<SpinorGrid> = (0..3)
            .map(|_| {
                let mut s = SpinorGrid::zeros(&g);
                for o in s.data_mut() {
                    *o = random_spinor(&mut rng);
                }
                s
            })
            .collect();
        let psi = project_tangent(&phi, &raw);
        let d = dirac_along_map(&phi, &psi);
        let mut forward = 0.0;
        let mut dual = 0.0;
        for j in 0..g.npy() {
            for i in 0..g.npx() {
                let w = quad_weight(&g, i, j);
                for m in 0..3 {
                    forward += w * spinor_inner(psi.comps()[m].at(i, j), d[m].at(i, j));
                    dual += w * spinor_inner(d[m].at(i, j), psi.comps()[m].at(i, j));
                }
            }
        }
        assert!((forward - dual).abs() < 1e-10 * (1.0 + forward.abs()));
    }

    #[test]
    fn residuals_and_energies_trivial() {
        let g = grid();
        let phi = MapField::constant(&g, &[1.0, 0.0, 0.0]).unwrap();
        let psi = SpinorAlongMap::zeros(&g, 2);
        let (r_map, r_psi) = el_residuals(&phi, &psi).unwrap();
        assert_eq!(vector_residual_norm(&r_map, 0), 0.0);
        assert_eq!(spinor_residual_norm(&r_psi, 0), 0.0);
        let rep = energies(&phi, &psi).unwrap();
        assert_eq!(rep.e_map, 0.0);
        assert_eq!(rep.e_spinor, 0.0);
        assert_eq!(rep.l_value, 0.0);
        assert!(!rep.flagged_degenerate);
    }

    #[test]
    fn l_equals_e_map_when_psi_zero() {
        let g = grid();
        let phi = MapField::from_fn(&g, 2, |x, _| {
            vec![
                (2.0 * std::f64::consts::PI * x).cos(),
                (2.0 * std::f64::consts::PI * x).sin(),
                0.0,
            ]
        })
        .unwrap();
        let psi = SpinorAlongMap::zeros(&g, 2);
        let rep = energies(&phi, &psi).unwrap();
        assert_eq!(rep.l_value, rep.e_map);
        assert!(rep.e_map > 0.0);
    }

    #[test]
    fn off_sphere_input_reported() {
        let g = grid();
        let mut phi = MapField::constant(&g, &[0.0, 0.0, 1.0]).unwrap();
        *phi.comps_mut()[0].at_mut(3, 3) = 0.1;
        let psi = SpinorAlongMap::zeros(&g, 2);
        assert!(matches!(
            el_residuals(&phi, &psi),
            Err(DhError::OffSphere { .. })
        ));
    }
}
