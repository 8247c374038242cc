//! Exact bubbles, concentrating families, and the concentration
//! experiments: local/annulus energy accounting, energy-identity tables,
//! blow-up set detection and the small-energy regularity probe.

use crate::clifford::Spinor;
use crate::diff::{quad_weight, quadrature};
use crate::error::{DhError, Result};
use crate::grid::{Grid, SpinorGrid, Topology};
use crate::sphere::{project_tangent, MapField, SpinorAlongMap};
use serde::Serialize;

/// One round bubble: center, concentration scale and target orientation.
#[derive(Debug, Clone, Copy)]
pub struct BubbleSpec {
    pub center: [f64; 2],
    pub lambda: f64,
    /// Rotation of the ambient R^3 applied after stereographic projection.
    pub orientation: [[f64; 3]; 3],
}

impl BubbleSpec {
    pub fn new(center: [f64; 2], lambda: f64) -> Result<BubbleSpec> {
        if !(lambda > 0.0) {
            return Err(DhError::BadScale(lambda));
        }
        Ok(BubbleSpec {
            center,
            lambda,
            orientation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        })
    }

    pub fn with_orientation(mut self, rot: [[f64; 3]; 3]) -> Result<BubbleSpec> {
        // Orthogonality check: R R^T = Id to rounding.
        for r in 0..3 {
            for c in 0..3 {
                let dot: f64 = (0..3).map(|k| rot[r][k] * rot[c][k]).sum();
                let want = if r == c { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-10 {
                    return Err(DhError::BadGeometry(format!(
                        "orientation is not orthogonal: (R R^T)[{r}][{c}] = {dot}"
                    )));
                }
            }
        }
        self.orientation = rot;
        Ok(self)
    }

    /// Continuum bubble value at a physical point: the degree-1 harmonic
    /// sphere `phi(x) = R ( 2u, |u|^2 - 1 ) / (1 + |u|^2)`, `u = (x-c)/lambda`.
    pub fn value(&self, x: f64, y: f64) -> [f64; 3] {
        let u1 = (x - self.center[0]) / self.lambda;
        let u2 = (y - self.center[1]) / self.lambda;
        let s = u1 * u1 + u2 * u2;
        let denom = 1.0 + s;
        let p = [2.0 * u1 / denom, 2.0 * u2 / denom, (s - 1.0) / denom];
        let r = &self.orientation;
        [
            r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2],
            r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2],
            r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2],
        ]
    }

    /// Continuum energy density `8 lambda^2 / (lambda^2 + |x-c|^2)^2`.
    pub fn energy_density(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        let d = self.lambda * self.lambda + dx * dx + dy * dy;
        8.0 * self.lambda * self.lambda / (d * d)
    }

    /// Closed-form continuum energy on the disk of radius `r`:
    /// `8 pi r^2 / (lambda^2 + r^2)`; tends to the full `8 pi`.
    pub fn disk_energy(&self, r: f64) -> f64 {
        8.0 * std::f64::consts::PI * r * r / (self.lambda * self.lambda + r * r)
    }
}

/// Sample the exact bubble on a rectangle grid.
pub fn stereographic_bubble(spec: &BubbleSpec, grid: &Grid) -> Result<MapField> {
    if grid.topology() != Topology::Rectangle {
        return Err(DhError::UnsupportedTopology);
    }
    bubble_on_grid(spec, grid)
}

/// Sample the bubble formula on any grid (periodization on a torus is an
/// approximation near the seam, fine when lambda << L).
pub fn bubble_on_grid(spec: &BubbleSpec, grid: &Grid) -> Result<MapField> {
    MapField::from_fn(grid, 2, |x, y| spec.value(x, y).to_vec())
}

/// Exact multi-bubble map: the rational map `u(z) = sum_k lambda_k/(z - c_k)`
/// composed with inverse stereographic projection. Smooth, harmonic of
/// degree L, with energy `8 pi lambda_k^2`-type concentration of scale
/// `lambda_k` at each center when the centers are far apart.
pub fn superpose_bubbles(specs: &[BubbleSpec], grid: &Grid) -> Result<MapField> {
    assert!(!specs.is_empty());
    MapField::from_fn(grid, 2, |x, y| {
        let mut u_re = 0.0;
        let mut u_im = 0.0;
        for spec in specs {
            let zr = x - spec.center[0];
            let zi = y - spec.center[1];
            let d2 = zr * zr + zi * zi;
            // lambda / (z - c); the grid never lands exactly on a pole in
            // practice, but guard the division anyway.
            let d2 = d2.max(1e-300);
            u_re += spec.lambda * zr / d2;
            u_im += spec.lambda * -zi / d2;
        }
        let s = u_re * u_re + u_im * u_im;
        let denom = 1.0 + s;
        vec![2.0 * u_re / denom, 2.0 * u_im / denom, (s - 1.0) / denom]
    })
}

/// Exactly doubly periodic concentrating harmonic map on a square torus.
///
/// The plane bubble has 1/r equatorial tails and cannot be periodized
/// smoothly; instead compose inverse stereographic projection with the
/// doubly periodic meromorphic function
///
/// `g(z) = sum_n (pi lambda / L)^2 / sin^2(pi (z - i n L) / L)`,
///
/// (a Weierstrass-type lattice sum, geometrically convergent: the n-th
/// term is O(e^{-2 pi n})). Any meromorphic map composed with inverse
/// stereographic projection is an exact harmonic map, so all conservation
/// identities hold in the continuum; `g ~ lambda^2 / z^2` near the double
/// pole, a degree-2 concentration of scale `lambda` at the origin.
pub fn elliptic_bubble(grid: &Grid, lambda: f64) -> Result<MapField> {
    if grid.topology() != Topology::Torus {
        return Err(DhError::UnsupportedTopology);
    }
    if (grid.lx() - grid.ly()).abs() > 1e-12 * grid.lx() {
        return Err(DhError::BadGeometry(
            "elliptic bubble needs a square torus".into(),
        ));
    }
    if !(lambda > 2.0 * grid.h()) {
        return Err(DhError::UnderResolved {
            lambda,
            floor: 2.0 * grid.h(),
            index: 0,
        });
    }
    let l = grid.lx();
    let c = (std::f64::consts::PI * lambda / l).powi(2);
    MapField::from_fn(grid, 2, |x, y| {
        let mut g = num_complex::Complex64::new(0.0, 0.0);
        let mut at_pole = false;
        for n in -8i32..=8 {
            let z = num_complex::Complex64::new(x, y - n as f64 * l);
            let s = (z * std::f64::consts::PI / l).sin();
            let s2 = s * s;
            if s2.norm_sqr() < 1e-280 {
                at_pole = true;
                break;
            }
            g += c / s2;
        }
        if at_pole || !g.re.is_finite() || !g.im.is_finite() {
            return vec![0.0, 0.0, 1.0];
        }
        let q = g.norm_sqr();
        let denom = 1.0 + q;
        vec![2.0 * g.re / denom, 2.0 * g.im / denom, (q - 1.0) / denom]
    })
}

/// One member of a concentrating family.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub lambda: f64,
    pub phi: MapField,
    pub psi: SpinorAlongMap,
}

/// Ordered concentrating family with strictly decreasing scales.
#[derive(Debug, Clone)]
pub struct ConcentrationFamily {
    pub center: [f64; 2],
    pub members: Vec<FamilyMember>,
}

/// Smooth localized test-spinor profile used for the E(psi) columns:
/// `psi_k(x) = lambda^{-1/2} (1 + |u|^2)^{-1} xi_m`, `u = (x-c)/lambda`,
/// tangentially projected along the member map. The projection commutes
/// with the rescaling (the map depends only on `u`), so `int |psi|^4` is
/// scale-invariant in the continuum. Not a solution; accounting only.
fn family_test_spinor(phi: &MapField, spec: &BubbleSpec) -> SpinorAlongMap {
    let grid = *phi.grid();
    let seeds = [
        Spinor::from_re(1.0, 0.0),
        Spinor::from_re(0.0, 1.0),
        Spinor::from_re(0.5, -0.5),
    ];
    let amp = spec.lambda.powf(-0.5);
    let raw: Vec<SpinorGrid> = seeds
        .iter()
        .map(|&xi| {
            SpinorGrid::from_fn(&grid, |x, y| {
                let u1 = (x - spec.center[0]) / spec.lambda;
                let u2 = (y - spec.center[1]) / spec.lambda;
                xi * (amp / (1.0 + u1 * u1 + u2 * u2))
            })
        })
        .collect();
    project_tangent(phi, &raw)
}

/// Build the concentrating family at a common center. `lambdas` must be
/// strictly decreasing and each resolvable (`lambda > 2h`).
pub fn concentration_family(
    center: [f64; 2],
    lambdas: &[f64],
    grid: &Grid,
    with_spinor: bool,
) -> Result<ConcentrationFamily> {
    let floor = 2.0 * grid.h();
    let mut members = Vec::with_capacity(lambdas.len());
    for (index, &lambda) in lambdas.iter().enumerate() {
        if !(lambda > floor) {
            return Err(DhError::UnderResolved {
                lambda,
                floor,
                index,
            });
        }
        if index > 0 && lambda >= lambdas[index - 1] {
            return Err(DhError::BadGeometry(format!(
                "family scales must be strictly decreasing, got {} after {}",
                lambda,
                lambdas[index - 1]
            )));
        }
        let spec = BubbleSpec::new(center, lambda)?;
        let phi = bubble_on_grid(&spec, grid)?;
        let psi = if with_spinor {
            family_test_spinor(&phi, &spec)
        } else {
            SpinorAlongMap::zeros(grid, 2)
        };
        members.push(FamilyMember { lambda, phi, psi });
    }
    Ok(ConcentrationFamily { center, members })
}

fn check_disk_in_domain(grid: &Grid, center: [f64; 2], radius: f64) -> Result<()> {
    let (hx, hy) = (0.5 * grid.lx(), 0.5 * grid.ly());
    if center[0] - radius < -hx
        || center[0] + radius > hx
        || center[1] - radius < -hy
        || center[1] + radius > hy
    {
        return Err(DhError::BadGeometry(format!(
            "disk of radius {radius} at ({}, {}) exceeds the domain",
            center[0], center[1]
        )));
    }
    Ok(())
}

fn region_energy(
    phi: &MapField,
    psi: &SpinorAlongMap,
    member: impl Fn(f64, f64) -> bool,
) -> (f64, f64) {
    let grid = *phi.grid();
    let density = phi.energy_density();
    let psi_sq = psi.norm_sq_field();
    let mut e_map = 0.0;
    let mut e_spinor = 0.0;
    for j in 0..grid.npy() {
        for i in 0..grid.npx() {
            if member(grid.x(i), grid.y(j)) {
                let w = quad_weight(&grid, i, j);
                e_map += w * density.at(i, j);
                let q = psi_sq.at(i, j);
                e_spinor += w * q * q;
            }
        }
    }
    (e_map, e_spinor)
}

/// `(int |d phi|^2, int |psi|^4)` over the disk `|x - center| <= radius`,
/// node membership by cell center.
pub fn local_energy(
    phi: &MapField,
    psi: &SpinorAlongMap,
    center: [f64; 2],
    radius: f64,
) -> Result<(f64, f64)> {
    check_disk_in_domain(phi.grid(), center, radius)?;
    let r2 = radius * radius;
    Ok(region_energy(phi, psi, |x, y| {
        (x - center[0]).powi(2) + (y - center[1]).powi(2) <= r2
    }))
}

/// Energies over the annulus `inner <= |x - center| <= outer`. A
/// degenerate annulus (`inner == outer`) carries no cells and returns 0.
pub fn annulus_energy(
    phi: &MapField,
    psi: &SpinorAlongMap,
    center: [f64; 2],
    inner: f64,
    outer: f64,
) -> Result<(f64, f64)> {
    if inner > outer {
        return Err(DhError::BadGeometry(format!(
            "annulus radii out of order: inner {inner} > outer {outer}"
        )));
    }
    check_disk_in_domain(phi.grid(), center, outer)?;
    if inner == outer {
        return Ok((0.0, 0.0));
    }
    let (i2, o2) = (inner * inner, outer * outer);
    Ok(region_energy(phi, psi, |x, y| {
        let d2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
        i2 <= d2 && d2 <= o2
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub lambda: f64,
    pub delta: f64,
    pub r: f64,
    pub e_disk: f64,
    pub e_annulus: f64,
    pub e_spinor_disk: f64,
    pub e_spinor_annulus: f64,
    pub e_total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityTable {
    pub rows: Vec<IdentityRow>,
}

/// Per-member energy accounting for the single-bubble energy identity:
/// `E_disk(delta)` captures the bubble (`-> 8 pi`), the neck annulus
/// between the bubble scale `lambda_k R` and the macroscopic `delta`
/// carries vanishing energy. When `lambda_k R >= delta` the nominal
/// annulus is empty and the radii are sorted, which preserves the
/// "neck energy decreasing to 0" reading across the table.
pub fn energy_identity_experiment(
    family: &ConcentrationFamily,
    delta: f64,
    r_big: f64,
) -> Result<IdentityTable> {
    let mut rows = Vec::with_capacity(family.members.len());
    for member in &family.members {
        let (e_disk, e_spinor_disk) =
            local_energy(&member.phi, &member.psi, family.center, delta)?;
        let scaled = member.lambda * r_big;
        let (inner, outer) = if scaled <= delta {
            (scaled, delta)
        } else {
            (delta, scaled)
        };
        let (e_annulus, e_spinor_annulus) =
            annulus_energy(&member.phi, &member.psi, family.center, inner, outer)?;
        let e_total = quadrature(&member.phi.energy_density());
        rows.push(IdentityRow {
            lambda: member.lambda,
            delta,
            r: r_big,
            e_disk,
            e_annulus,
            e_spinor_disk,
            e_spinor_annulus,
            e_total,
        });
    }
    Ok(IdentityTable { rows })
}

/// Centers of the connected clusters of grid points whose disk-local
/// energy (last family member, radius `r`) exceeds `eps0`.
pub fn detect_blowup_set(
    family: &ConcentrationFamily,
    eps0: f64,
    r: f64,
) -> Result<Vec<[f64; 2]>> {
    let last = family
        .members
        .last()
        .ok_or_else(|| DhError::BadGeometry("empty family".into()))?;
    let grid = *last.phi.grid();
    let density = last.phi.energy_density();
    let psi_sq = last.psi.norm_sq_field();
    let (npx, npy) = (grid.npx(), grid.npy());
    let rad = (r / grid.h()).ceil() as isize;
    let r2 = r * r;

    // Disk-local energy around every node, wrapping on the torus.
    let mut marked = vec![false; npx * npy];
    for j in 0..npy {
        for i in 0..npx {
            let mut acc = 0.0;
            for dj in -rad..=rad {
                for di in -rad..=rad {
                    let (px, py) = (di as f64 * grid.h(), dj as f64 * grid.h());
                    if px * px + py * py > r2 {
                        continue;
                    }
                    let (ii, jj) = (i as isize + di, j as isize + dj);
                    if grid.topology() == Topology::Rectangle
                        && (ii < 0 || jj < 0 || ii >= npx as isize || jj >= npy as isize)
                    {
                        continue;
                    }
                    let q = psi_sq.at_wrapped(ii, jj);
                    acc += grid.h() * grid.h()
                        * (density.at_wrapped(ii, jj) + q * q);
                }
            }
            marked[j * npx + i] = acc >= eps0;
        }
    }

    // Connected components (4-neighbor, periodic on the torus) -> centroids.
    let mut seen = vec![false; npx * npy];
    let mut clusters = Vec::new();
    for start in 0..npx * npy {
        if !marked[start] || seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        // Accumulate offsets relative to the seed so periodic clusters
        // straddling the seam average correctly.
        let (si, sj) = (start % npx, start / npx);
        let mut sum = [0.0f64, 0.0];
        let mut count = 0usize;
        while let Some(idx) = stack.pop() {
            let (ci, cj) = (idx % npx, idx / npx);
            let mut di = ci as isize - si as isize;
            let mut dj = cj as isize - sj as isize;
            if grid.topology() == Topology::Torus {
                if di > npx as isize / 2 {
                    di -= npx as isize;
                }
                if di < -(npx as isize) / 2 {
                    di += npx as isize;
                }
                if dj > npy as isize / 2 {
                    dj -= npy as isize;
                }
                if dj < -(npy as isize) / 2 {
                    dj += npy as isize;
                }
            }
            sum[0] += di as f64;
            sum[1] += dj as f64;
            count += 1;
            for (oi, oj) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
                let (mut ni, mut nj) = (ci as isize + oi, cj as isize + oj);
                match grid.topology() {
                    Topology::Torus => {
                        ni = ni.rem_euclid(npx as isize);
                        nj = nj.rem_euclid(npy as isize);
                    }
                    Topology::Rectangle => {
                        if ni < 0 || nj < 0 || ni >= npx as isize || nj >= npy as isize {
                            continue;
                        }
                    }
                }
                let nidx = nj as usize * npx + ni as usize;
                if marked[nidx] && !seen[nidx] {
                    seen[nidx] = true;
                    stack.push(nidx);
                }
            }
        }
        let cx = grid.x(si) + grid.h() * sum[0] / count as f64;
        let cy = grid.y(sj) + grid.h() * sum[1] / count as f64;
        clusters.push([cx, cy]);
    }
    Ok(clusters)
}

/// Sup/integral ratio report for the small-energy regularity study.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    /// `sup |d phi|` over the margin-shrunk subdomain / `||d phi||_{L^2}`.
    pub r1: f64,
    /// `sup |psi|` over the subdomain / `||psi||_{L^4}`.
    pub r2: f64,
    pub sup_dphi: f64,
    pub l2_dphi: f64,
    pub sup_psi: f64,
    pub l4_psi: f64,
    /// Whether the total energy satisfies the small-energy hypothesis.
    pub hypothesis_ok: bool,
    /// Set when a denominator vanishes; ratios are 0 sentinels then.
    pub trivial: bool,
}

/// Measure the sup-over-subdomain vs integral-over-domain ratios that the
/// small-energy estimates bound, and report whether the hypothesis
/// `int (|d phi|^2 + |psi|^4) < eps0` holds for the given data.
pub fn epsilon_regularity_probe(
    phi: &MapField,
    psi: &SpinorAlongMap,
    margin: usize,
    eps0: f64,
) -> RatioReport {
    let grid = *phi.grid();
    let density = phi.energy_density();
    let psi_sq = psi.norm_sq_field();
    let mut sup_d2 = 0.0f64;
    let mut sup_p2 = 0.0f64;
    for j in 0..grid.npy() {
        for i in 0..grid.npx() {
            if grid.is_interior(i, j, margin) {
                sup_d2 = sup_d2.max(density.at(i, j));
                sup_p2 = sup_p2.max(psi_sq.at(i, j));
            }
        }
    }
    let e_map = quadrature(&density);
    let e_spinor = quadrature(&psi_sq.map(|v| v * v));
    let (sup_dphi, sup_psi) = (sup_d2.sqrt(), sup_p2.sqrt());
    let (l2_dphi, l4_psi) = (e_map.sqrt(), e_spinor.powf(0.25));
    let trivial = l2_dphi == 0.0 || (l4_psi == 0.0 && sup_psi == 0.0 && l2_dphi == 0.0);
    RatioReport {
        r1: if l2_dphi > 0.0 { sup_dphi / l2_dphi } else { 0.0 },
        r2: if l4_psi > 0.0 { sup_psi / l4_psi } else { 0.0 },
        sup_dphi,
        l2_dphi,
        sup_psi,
        l4_psi,
        hypothesis_ok: e_map + e_spinor < eps0,
        trivial,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn bubble_point_values() {
        let spec = BubbleSpec::new([0.0, 0.0], 1.0).unwrap();
        // Center -> south pole; |u| = 1 -> equator.
        assert_eq!(spec.value(0.0, 0.0), [0.0, 0.0, -1.0]);
        let v = spec.value(1.0, 0.0);
        assert!((v[0] - 1.0).abs() < 1e-15 && v[2].abs() < 1e-15);
        // Norm 1 everywhere.
        let v = spec.value(0.3, -1.7);
        let n: f64 = v.iter().map(|c| c * c).sum();
        assert!((n - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bubble_rejects_bad_scale_and_torus() {
        assert!(BubbleSpec::new([0.0, 0.0], 0.0).is_err());
        let spec = BubbleSpec::new([0.0, 0.0], 1.0).unwrap();
        let torus = Grid::torus(4.0, 4.0, 64, 64).unwrap();
        assert!(matches!(
            stereographic_bubble(&spec, &torus),
            Err(DhError::UnsupportedTopology)
        ));
    }

    #[test]
    fn orientation_must_be_orthogonal() {
        let spec = BubbleSpec::new([0.0, 0.0], 1.0).unwrap();
        let rot = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(spec.with_orientation(rot).is_ok());
        let bad = [[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(spec.with_orientation(bad).is_err());
    }

    #[test]
    fn discrete_energy_matches_closed_form() {
        // Disk energies 8 pi r^2/(1 + r^2) at lambda = 1, nx = 512.
        let grid = Grid::rectangle(16.0, 16.0, 512, 512).unwrap();
        let spec = BubbleSpec::new([0.0, 0.0], 1.0).unwrap();
        let phi = stereographic_bubble(&spec, &grid).unwrap();
        let psi = SpinorAlongMap::zeros(&grid, 2);
        for r in [1.0, 4.0] {
            let (e, _) = local_energy(&phi, &psi, [0.0, 0.0], r).unwrap();
            let want = spec.disk_energy(r);
            assert!(
                (e - want).abs() < 0.02 * want,
                "r = {r}: {e} vs {want}"
            );
        }
    }

    #[test]
    fn local_energy_trivial_and_domain_check() {
        let grid = Grid::rectangle(4.0, 4.0, 64, 64).unwrap();
        let phi = MapField::constant(&grid, &[0.0, 0.0, 1.0]).unwrap();
        let psi = SpinorAlongMap::zeros(&grid, 2);
        let (e, s) = local_energy(&phi, &psi, [0.0, 0.0], 1.0).unwrap();
        assert_eq!((e, s), (0.0, 0.0));
        assert!(local_energy(&phi, &psi, [1.5, 0.0], 1.0).is_err());
    }

    #[test]
    fn annulus_energy_cases() {
        let grid = Grid::rectangle(8.0, 8.0, 256, 256).unwrap();
        let spec_ok = BubbleSpec::new([0.0, 0.0], 0.2).unwrap();
        let phi = stereographic_bubble(&spec_ok, &grid).unwrap();
        let psi = SpinorAlongMap::zeros(&grid, 2);
        // Degenerate annulus.
        let (e, _) = annulus_energy(&phi, &psi, [0.0, 0.0], 0.5, 0.5).unwrap();
        assert_eq!(e, 0.0);
        // Out-of-order radii.
        assert!(annulus_energy(&phi, &psi, [0.0, 0.0], 1.0, 0.5).is_err());
        // Closed-form annulus value for the resolvable bubble.
        let (e, _) = annulus_energy(&phi, &psi, [0.0, 0.0], 0.5, 2.0).unwrap();
        let want = spec_ok.disk_energy(2.0) - spec_ok.disk_energy(0.5);
        assert!((e - want).abs() < 0.02 * want, "{e} vs {want}");
    }

    #[test]
    fn family_construction_and_floor() {
        let grid = Grid::rectangle(4.0, 4.0, 256, 256).unwrap();
        let fam = concentration_family([0.0, 0.0], &[0.2, 0.1, 0.05], &grid, false).unwrap();
        assert_eq!(fam.members.len(), 3);
        // lambda = h violates the 2h floor.
        let err = concentration_family([0.0, 0.0], &[0.2, grid.h()], &grid, false);
        assert!(matches!(err, Err(DhError::UnderResolved { index: 1, .. })));
        // Non-decreasing scales rejected.
        assert!(concentration_family([0.0, 0.0], &[0.1, 0.1], &grid, false).is_err());
    }

    #[test]
    fn spinor_column_is_scale_invariant() {
        // int |psi|^4 constant across the family within quadrature error.
        let grid = Grid::rectangle(4.0, 4.0, 512, 512).unwrap();
        let fam = concentration_family([0.0, 0.0], &[0.4, 0.2, 0.1], &grid, true).unwrap();
        let energies: Vec<f64> = fam
            .members
            .iter()
            .map(|m| {
                let f = m.psi.norm_sq_field();
                quadrature(&f.map(|v| v * v))
            })
            .collect();
        for e in &energies[1..] {
            assert!(
                (e - energies[0]).abs() < 0.02 * energies[0],
                "{energies:?}"
            );
        }
    }

    #[test]
    fn blowup_set_single_and_double() {
        let grid = Grid::rectangle(4.0, 4.0, 128, 128).unwrap();
        // Constant family -> empty set.
        let constant = ConcentrationFamily {
            center: [0.0, 0.0],
            members: vec![FamilyMember {
                lambda: 1.0,
                phi: MapField::constant(&grid, &[0.0, 0.0, 1.0]).unwrap(),
                psi: SpinorAlongMap::zeros(&grid, 2),
            }],
        };
        assert!(detect_blowup_set(&constant, 1.0, 0.25).unwrap().is_empty());

        // Single bubble -> one cluster at the origin.
        let fam = concentration_family([0.0, 0.0], &[0.1], &grid, false).unwrap();
        let pts = detect_blowup_set(&fam, 1.0, 0.25).unwrap();
        assert_eq!(pts.len(), 1, "{pts:?}");
        assert!(pts[0][0].abs() <= grid.h() && pts[0][1].abs() <= grid.h(), "{pts:?}");

        // Two separated bubbles -> two clusters.
        let specs = [
            BubbleSpec::new([-1.0, 0.0], 0.1).unwrap(),
            BubbleSpec::new([1.0, 0.0], 0.1).unwrap(),
        ];
        let phi = superpose_bubbles(&specs, &grid).unwrap();
        let two = ConcentrationFamily {
            center: [0.0, 0.0],
            members: vec![FamilyMember {
                lambda: 0.1,
                phi,
                psi: SpinorAlongMap::zeros(&grid, 2),
            }],
        };
        let pts = detect_blowup_set(&two, 1.0, 0.25).unwrap();
        assert_eq!(pts.len(), 2, "{pts:?}");
    }

    #[test]
    fn identity_table_single_bubble() {
        let grid = Grid::rectangle(8.0, 8.0, 256, 256).unwrap();
        let fam = concentration_family([0.0, 0.0], &[1.0], &grid, false).unwrap();
        let table = energy_identity_experiment(&fam, 1.0, 2.0).unwrap();
        assert_eq!(table.rows.len(), 1);
        let psi = SpinorAlongMap::zeros(&grid, 2);
        let (e, _) = local_energy(&fam.members[0].phi, &psi, [0.0, 0.0], 1.0).unwrap();
        assert_eq!(table.rows[0].e_disk, e);
        assert!((e - 4.0 * PI).abs() < 0.04 * PI, "e_disk {e}");
    }

    #[test]
    fn elliptic_bubble_is_discretely_harmonic() {
        // EL map residual of the exact elliptic harmonic map is pure
        // discretization error: O(h^2), halving ratio ~4.
        use crate::sphere::{el_residuals, vector_residual_norm};
        let mut norms = Vec::new();
        for nx in [64usize, 128] {
            let grid = Grid::torus(16.0, 16.0, nx, nx).unwrap();
            let phi = elliptic_bubble(&grid, 1.0).unwrap();
            assert!(phi.sphere_defect() < 1e-12);
            let psi = SpinorAlongMap::zeros(&grid, 2);
            let (r_map, _) = el_residuals(&phi, &psi).unwrap();
            norms.push(vector_residual_norm(&r_map, 0));
        }
        assert!(
            norms[0] / norms[1] > 3.5,
            "residuals {norms:?} not second order"
        );
    }

    #[test]
    fn elliptic_bubble_rejects_bad_domains() {
        let rect = Grid::rectangle(16.0, 16.0, 64, 64).unwrap();
        assert!(elliptic_bubble(&rect, 1.0).is_err());
        let torus = Grid::torus(16.0, 16.0, 64, 64).unwrap();
        assert!(elliptic_bubble(&torus, 0.1).is_err());
    }

    #[test]
    fn regularity_probe_cases() {
        let grid = Grid::rectangle(4.0, 4.0, 64, 64).unwrap();
        let phi = MapField::constant(&grid, &[0.0, 0.0, 1.0]).unwrap();
        let psi = SpinorAlongMap::zeros(&grid, 2);
        let rep = epsilon_regularity_probe(&phi, &psi, 2, 1.0);
        assert!(rep.trivial);
        assert_eq!((rep.r1, rep.r2), (0.0, 0.0));
        assert!(rep.hypothesis_ok);

        let fam = concentration_family([0.0, 0.0], &[0.5], &grid, false).unwrap();
        let rep = epsilon_regularity_probe(&fam.members[0].phi, &psi, 2, 1.0);
        assert!(!rep.trivial);
        assert!(rep.r1 > 0.0);
        // Full bubble energy ~ 8 pi violates a unit epsilon_0.
        assert!(!rep.hypothesis_ok);
    }
}
