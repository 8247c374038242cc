//! Conservation-law diagnostics for the coupled system.
//!
//! On solutions the map equation collapses to `Lap phi^m = A^{mi} phi^i_x
//! + B^{mi} phi^i_y` with antisymmetric coefficients
//!
//! ```text
//! A^{mi} = <e_1 . psi^i, psi^m> - (phi^i_x phi^m - phi^i phi^m_x),
//! B^{mi} = <e_2 . psi^i, psi^m> - (phi^i_y phi^m - phi^i phi^m_y),
//! ```
//!
//! the divergence `A^{mi}_x + B^{mi}_y` vanishes, and on the torus a
//! Frobenius potential `M^{mi}` with `A = M_y`, `B = -M_x` puts the
//! equation into the Jacobian (Wente) form
//! `-Lap phi^m = M^{mi}_x phi^i_y - M^{mi}_y phi^i_x`.

use crate::clifford::{clifford_mul, spinor_inner, Axis};
use crate::diff::{diff, laplacian};
use crate::error::Result;
use crate::grid::{Grid, ScalarField, SpinorGrid};
use crate::spectral::{
    solve_poisson_5pt, solve_poisson_spectral, spectral_diff, spectral_dirac,
    spectral_laplacian,
};
use crate::sphere::{MapField, SpinorAlongMap};
use serde::{Deserialize, Serialize};

/// Which derivative discretization feeds the diagnostics.
///
/// `Centered` works on both topologies at second order. `Spectral` is
/// torus-only and exact on band-limited data, which is what the algebraic
/// identity checks need.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffScheme {
    Centered,
    Spectral,
}

fn d_scalar(f: &ScalarField, axis: Axis, scheme: DiffScheme) -> Result<ScalarField> {
    match scheme {
        DiffScheme::Centered => Ok(diff(f, axis)),
        DiffScheme::Spectral => spectral_diff(f, axis),
    }
}

fn lap_scalar(f: &ScalarField, scheme: DiffScheme) -> Result<ScalarField> {
    match scheme {
        DiffScheme::Centered => Ok(laplacian(f)),
        DiffScheme::Spectral => spectral_laplacian(f),
    }
}

fn dirac(psi: &SpinorGrid, scheme: DiffScheme) -> Result<SpinorGrid> {
    match scheme {
        DiffScheme::Centered => Ok(crate::diff::dirac_flat(psi)),
        DiffScheme::Spectral => spectral_dirac(psi),
    }
}

/// The `(n+1) x (n+1)` coefficient fields `A`, `B` of the conservation
/// form, stored row-major by `(m, i)`.
#[derive(Debug, Clone)]
pub struct CoefficientMatrices {
    n: usize,
    a: Vec<ScalarField>,
    b: Vec<ScalarField>,
}

impl CoefficientMatrices {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &Grid {
        self.a[0].grid()
    }

    fn idx(&self, m: usize, i: usize) -> usize {
        m * (self.n + 1) + i
    }

    pub fn a(&self, m: usize, i: usize) -> &ScalarField {
        &self.a[self.idx(m, i)]
    }

    pub fn b(&self, m: usize, i: usize) -> &ScalarField {
        &self.b[self.idx(m, i)]
    }

    /// Assemble directly from coefficient fields (tests, file input).
    pub fn from_parts(n: usize, a: Vec<ScalarField>, b: Vec<ScalarField>) -> CoefficientMatrices {
        assert_eq!(a.len(), (n + 1) * (n + 1));
        assert_eq!(b.len(), (n + 1) * (n + 1));
        CoefficientMatrices { n, a, b }
    }

    /// Max over sites and entries of `|A^{mi} + A^{im}|` and the `B`
    /// analogue. Zero to rounding by skew-adjointness.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..=self.n {
            for i in 0..=self.n {
                for mat in [&self.a, &self.b] {
                    let f = &mat[self.idx(m, i)];
                    let g = &mat[self.idx(i, m)];
                    for (x, y) in f.data().iter().zip(g.data()) {
                        worst = worst.max((x + y).abs());
                    }
                }
            }
        }
        worst
    }

    /// `sum_i A^{mi} phi^i_x + B^{mi} phi^i_y` per component `m`; equals
    /// `Lap phi^m` on solutions.
    pub fn reconstruct_laplacian(
        &self,
        phi: &MapField,
        scheme: DiffScheme,
    ) -> Result<Vec<ScalarField>> {
        let grid = *self.grid();
        let mut out = vec![ScalarField::zeros(&grid); self.n + 1];
        for i in 0..=self.n {
            let gx = d_scalar(&phi.comps()[i], Axis::X, scheme)?;
            let gy = d_scalar(&phi.comps()[i], Axis::Y, scheme)?;
            for m in 0..=self.n {
                let a = self.a(m, i);
                let b = self.b(m, i);
                for (((o, av), bv), (xv, yv)) in out[m]
                    .data_mut()
                    .iter_mut()
                    .zip(a.data())
                    .zip(b.data())
                    .zip(gx.data().iter().zip(gy.data()))
                {
                    *o += av * xv + bv * yv;
                }
            }
        }
        Ok(out)
    }

    /// Divergence fields `A^{mi}_x + B^{mi}_y`, row-major by `(m, i)`.
    pub fn divergence(&self, scheme: DiffScheme) -> Result<Vec<ScalarField>> {
        let mut out = Vec::with_capacity((self.n + 1) * (self.n + 1));
        for m in 0..=self.n {
            for i in 0..=self.n {
                let ax = d_scalar(self.a(m, i), Axis::X, scheme)?;
                let by = d_scalar(self.b(m, i), Axis::Y, scheme)?;
                out.push(ax.zip_with(&by, |p, q| p + q));
            }
        }
        Ok(out)
    }

    /// Interior max norm of the divergence over all entries.
    pub fn divergence_residual(&self, scheme: DiffScheme, margin: usize) -> Result<f64> {
        let div = self.divergence(scheme)?;
        Ok(div
            .iter()
            .fold(0.0f64, |w, f| w.max(f.max_abs_interior(margin))))
    }

    /// Frobenius potentials `M^{mi}` with `A = M_y`, `B = -M_x` in the
    /// zero-mean gauge, from `Lap M = A_y - B_x` (torus only).
    pub fn frobenius_potential(&self, scheme: DiffScheme) -> Result<Vec<ScalarField>> {
        let mut out = Vec::with_capacity((self.n + 1) * (self.n + 1));
        for m in 0..=self.n {
            for i in 0..=self.n {
                let ay = d_scalar(self.a(m, i), Axis::Y, scheme)?;
                let bx = d_scalar(self.b(m, i), Axis::X, scheme)?;
                let rhs = ay.zip_with(&bx, |p, q| p - q);
                let sol = match scheme {
                    DiffScheme::Centered => solve_poisson_5pt(&rhs, (m, i))?,
                    DiffScheme::Spectral => solve_poisson_spectral(&rhs, (m, i))?,
                };
                out.push(sol);
            }
        }
        Ok(out)
    }

    /// Entry-wise means `(mean A^{mi}, mean B^{mi})`: the harmonic part
    /// of the current in the torus Hodge decomposition. The Frobenius
    /// potential only generates the remainder, `A = mean(A) + M_y`,
    /// `B = mean(B) - M_x` (on a simply connected domain the harmonic
    /// part is absent).
    pub fn harmonic_means(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.a.iter().map(|f| f.mean()).collect(),
            self.b.iter().map(|f| f.mean()).collect(),
        )
    }

    /// Max norm of `(A - mean(A) - M_y, B - mean(B) + M_x)` over entries:
    /// how far the potentials are from generating the oscillatory part of
    /// the coefficients. The curl-free part of `(A, B)` is invisible to
    /// the Poisson solve and shows up here; it vanishes (to
    /// discretization error) when the divergence does.
    pub fn potential_residual(
        &self,
        potentials: &[ScalarField],
        scheme: DiffScheme,
        margin: usize,
    ) -> Result<f64> {
        let (abar, bbar) = self.harmonic_means();
        let mut worst = 0.0f64;
        for m in 0..=self.n {
            for i in 0..=self.n {
                let idx = self.idx(m, i);
                let mfield = &potentials[idx];
                let my = d_scalar(mfield, Axis::Y, scheme)?;
                let mx = d_scalar(mfield, Axis::X, scheme)?;
                let da = self.a(m, i).zip_with(&my, |p, q| p - q).map(|v| v - abar[idx]);
                let db = self.b(m, i).zip_with(&mx, |p, q| p + q).map(|v| v - bbar[idx]);
                worst = worst
                    .max(da.max_abs_interior(margin))
                    .max(db.max_abs_interior(margin));
            }
        }
        Ok(worst)
    }
}

fn coefficient_core(
    phi: &[ScalarField],
    psi: &[SpinorGrid],
    scheme: DiffScheme,
) -> Result<CoefficientMatrices> {
    let n = phi.len() - 1;
    let grid = *phi[0].grid();
    let gx: Vec<ScalarField> = phi
        .iter()
        .map(|c| d_scalar(c, Axis::X, scheme))
        .collect::<Result<_>>()?;
    let gy: Vec<ScalarField> = phi
        .iter()
        .map(|c| d_scalar(c, Axis::Y, scheme))
        .collect::<Result<_>>()?;
    let mut a = Vec::with_capacity((n + 1) * (n + 1));
    let mut b = Vec::with_capacity((n + 1) * (n + 1));
    for m in 0..=n {
        for i in 0..=n {
            let mut fa = ScalarField::zeros(&grid);
            let mut fb = ScalarField::zeros(&grid);
            for jj in 0..grid.npy() {
                for ii in 0..grid.npx() {
                    let si = psi[i].at(ii, jj);
                    let sm = psi[m].at(ii, jj);
                    let spin_x = spinor_inner(clifford_mul(Axis::X, si), sm);
                    let spin_y = spinor_inner(clifford_mul(Axis::Y, si), sm);
                    let cur_x = gx[i].at(ii, jj) * phi[m].at(ii, jj)
                        - phi[i].at(ii, jj) * gx[m].at(ii, jj);
                    let cur_y = gy[i].at(ii, jj) * phi[m].at(ii, jj)
                        - phi[i].at(ii, jj) * gy[m].at(ii, jj);
                    *fa.at_mut(ii, jj) = spin_x - cur_x;
                    *fb.at_mut(ii, jj) = spin_y - cur_y;
                }
            }
            a.push(fa);
            b.push(fb);
        }
    }
    Ok(CoefficientMatrices { n, a, b })
}

/// Coefficient fields for a sphere-valued configuration.
pub fn coefficient_matrices(
    phi: &MapField,
    psi: &SpinorAlongMap,
    scheme: DiffScheme,
) -> Result<CoefficientMatrices> {
    coefficient_core(phi.comps(), psi.comps(), scheme)
}

/// Interior max of `Lap phi^m - sum_i (A phi^i_x + B phi^i_y)`; a
/// solution-quality diagnostic for the conservation form.
pub fn reconstruction_residual(
    phi: &MapField,
    psi: &SpinorAlongMap,
    scheme: DiffScheme,
    margin: usize,
) -> Result<f64> {
    let coeffs = coefficient_matrices(phi, psi, scheme)?;
    let recon = coeffs.reconstruct_laplacian(phi, scheme)?;
    let mut worst = 0.0f64;
    for (m, comp) in phi.comps().iter().enumerate() {
        let lap = lap_scalar(comp, scheme)?;
        let diff = lap.zip_with(&recon[m], |p, q| p - q);
        worst = worst.max(diff.max_abs_interior(margin));
    }
    Ok(worst)
}

/// Wente-form residual fields, one per component:
/// `Lap phi^m - sum_i [abar phi^i_x + bbar phi^i_y]
///            + sum_i (M^{mi}_x phi^i_y - M^{mi}_y phi^i_x)`,
/// with `abar`, `bbar` the harmonic means of the coefficients. On a disk
/// the means are absent and this is exactly the Jacobian form
/// `-Lap phi = M_x phi_y - M_y phi_x`.
pub fn wente_residual_fields(
    phi: &MapField,
    coeffs: &CoefficientMatrices,
    potentials: &[ScalarField],
    scheme: DiffScheme,
) -> Result<Vec<ScalarField>> {
    let n = phi.n();
    let (abar, bbar) = coeffs.harmonic_means();
    let gx: Vec<ScalarField> = phi
        .comps()
        .iter()
        .map(|c| d_scalar(c, Axis::X, scheme))
        .collect::<Result<_>>()?;
    let gy: Vec<ScalarField> = phi
        .comps()
        .iter()
        .map(|c| d_scalar(c, Axis::Y, scheme))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let mut res = lap_scalar(&phi.comps()[m], scheme)?;
        for i in 0..=n {
            let idx = m * (n + 1) + i;
            let mfield = &potentials[idx];
            let mx = d_scalar(mfield, Axis::X, scheme)?;
            let my = d_scalar(mfield, Axis::Y, scheme)?;
            for (((o, xv), yv), (px, py)) in res
                .data_mut()
                .iter_mut()
                .zip(mx.data())
                .zip(my.data())
                .zip(gx[i].data().iter().zip(gy[i].data()))
            {
                *o += xv * py - yv * px - abar[idx] * px - bbar[idx] * py;
            }
        }
        out.push(res);
    }
    Ok(out)
}

/// Interior max of the Wente-form residual.
pub fn wente_residual(
    phi: &MapField,
    coeffs: &CoefficientMatrices,
    potentials: &[ScalarField],
    scheme: DiffScheme,
    margin: usize,
) -> Result<f64> {
    let fields = wente_residual_fields(phi, coeffs, potentials, scheme)?;
    Ok(fields
        .iter()
        .fold(0.0f64, |w, f| w.max(f.max_abs_interior(margin))))
}

/// Max defect in the algebraic divergence identity
///
/// `A^{mi}_x + B^{mi}_y = <D psi^i, psi^m> - <psi^i, D psi^m>
///                        - (Lap phi^i phi^m - phi^i Lap phi^m)`
///
/// over all `(m, i)` and sites. This holds for arbitrary smooth fields,
/// with no sphere or tangency constraint, so it takes raw components.
/// With the spectral scheme on band-limited data (highest mode below
/// half the Nyquist index, so products stay resolved) both sides are
/// exact and the defect is at rounding level.
pub fn identity_chain_defect(
    phi: &[ScalarField],
    psi: &[SpinorGrid],
    scheme: DiffScheme,
) -> Result<f64> {
    let n = phi.len() - 1;
    let grid = *phi[0].grid();
    let coeffs = coefficient_core(phi, psi, scheme)?;
    let div = coeffs.divergence(scheme)?;
    let dpsi: Vec<SpinorGrid> = psi
        .iter()
        .map(|s| dirac(s, scheme))
        .collect::<Result<_>>()?;
    let lap: Vec<ScalarField> = phi
        .iter()
        .map(|c| lap_scalar(c, scheme))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for m in 0..=n {
        for i in 0..=n {
            let d = &div[m * (n + 1) + i];
            for jj in 0..grid.npy() {
                for ii in 0..grid.npx() {
                    let rhs = spinor_inner(dpsi[i].at(ii, jj), psi[m].at(ii, jj))
                        - spinor_inner(psi[i].at(ii, jj), dpsi[m].at(ii, jj))
                        - (lap[i].at(ii, jj) * phi[m].at(ii, jj)
                            - phi[i].at(ii, jj) * lap[m].at(ii, jj));
                    worst = worst.max((d.at(ii, jj) - rhs).abs());
                }
            }
        }
    }
    Ok(worst)
}
