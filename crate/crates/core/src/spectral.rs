//! FFT-based exact differentiation and periodic Poisson solves (torus only).
//!
//! Spectral derivatives are exact on band-limited trigonometric data, which
//! is what the algebraic identity checks need; everything else in the crate
//! uses the centered stencils from `diff`.

use crate::clifford::{clifford_mul, Axis, Spinor};
use crate::error::{DhError, Result};
use crate::grid::{Grid, ScalarField, SpinorGrid, Topology};
use num_complex::Complex64;
use rustfft::FftPlanner;

fn require_torus(grid: &Grid) -> Result<()> {
    if grid.topology() != Topology::Torus {
        return Err(DhError::UnsupportedTopology);
    }
    Ok(())
}

/// In-place 2-D FFT over row-major data (rows of length `nx`).
fn fft2(data: &mut [Complex64], nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(nx)
    } else {
        planner.plan_fft_forward(nx)
    };
    for row in data.chunks_exact_mut(nx) {
        row_fft.process(row);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(ny)
    } else {
        planner.plan_fft_forward(ny)
    };
    let mut col = vec![Complex64::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = data[j * nx + i];
        }
        col_fft.process(&mut col);
        for j in 0..ny {
            data[j * nx + i] = col[j];
        }
    }
    if inverse {
        let scale = 1.0 / (nx * ny) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Signed integer wavenumber for bin `i` of `n`.
fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Apply a multiplier `symbol(kx, ky)` in Fourier space to each plane.
fn apply_symbol(
    grid: &Grid,
    planes: &mut [Vec<Complex64>],
    symbol: impl Fn(i64, i64) -> Complex64,
) {
    let (nx, ny) = (grid.nx(), grid.ny());
    for plane in planes.iter_mut() {
        fft2(plane, nx, ny, false);
        for j in 0..ny {
            let ky = wavenumber(j, ny);
            for i in 0..nx {
                let kx = wavenumber(i, nx);
                plane[j * nx + i] *= symbol(kx, ky);
            }
        }
        fft2(plane, nx, ny, true);
    }
}

fn scalar_to_plane(f: &ScalarField) -> Vec<Complex64> {
    f.data().iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

fn plane_to_scalar(grid: &Grid, plane: &[Complex64]) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    for (o, v) in out.data_mut().iter_mut().zip(plane) {
        *o = v.re;
    }
    out
}

fn derivative_symbol(grid: &Grid, axis: Axis) -> impl Fn(i64, i64) -> Complex64 {
    let (lx, ly) = (grid.lx(), grid.ly());
    let (nx, ny) = (grid.nx() as i64, grid.ny() as i64);
    move |kx: i64, ky: i64| {
        // Zero the unsigned Nyquist mode for odd-order derivatives.
        let (k, l, n) = match axis {
            Axis::X => (kx, lx, nx),
            Axis::Y => (ky, ly, ny),
        };
        if n % 2 == 0 && 2 * k == n {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 * std::f64::consts::PI * k as f64 / l)
        }
    }
}

/// Exact first derivative of a periodic scalar field.
pub fn spectral_diff(f: &ScalarField, axis: Axis) -> Result<ScalarField> {
    require_torus(f.grid())?;
    let mut planes = [scalar_to_plane(f)];
    apply_symbol(f.grid(), &mut planes, derivative_symbol(f.grid(), axis));
    Ok(plane_to_scalar(f.grid(), &planes[0]))
}

fn spinor_planes(f: &SpinorGrid) -> [Vec<Complex64>; 2] {
    [
        f.data().iter().map(|s| s.c0).collect(),
        f.data().iter().map(|s| s.c1).collect(),
    ]
}

fn planes_to_spinor(grid: &Grid, planes: &[Vec<Complex64>; 2]) -> SpinorGrid {
    let mut out = SpinorGrid::zeros(grid);
    for (idx, o) in out.data_mut().iter_mut().enumerate() {
        *o = Spinor::new(planes[0][idx], planes[1][idx]);
    }
    out
}

/// Exact first derivative of a periodic spinor grid.
pub fn spectral_diff_spinor(f: &SpinorGrid, axis: Axis) -> Result<SpinorGrid> {
    require_torus(f.grid())?;
    let mut planes = spinor_planes(f);
    apply_symbol(f.grid(), &mut planes, derivative_symbol(f.grid(), axis));
    Ok(planes_to_spinor(f.grid(), &planes))
}

/// Exact flat Dirac operator via spectral derivatives.
pub fn spectral_dirac(psi: &SpinorGrid) -> Result<SpinorGrid> {
    let dx = spectral_diff_spinor(psi, Axis::X)?;
    let dy = spectral_diff_spinor(psi, Axis::Y)?;
    let mut out = SpinorGrid::zeros(psi.grid());
    for (o, (a, b)) in out
        .data_mut()
        .iter_mut()
        .zip(dx.data().iter().zip(dy.data()))
    {
        *o = clifford_mul(Axis::X, *a) + clifford_mul(Axis::Y, *b);
    }
    Ok(out)
}

/// Exact Laplacian of a periodic scalar field.
pub fn spectral_laplacian(f: &ScalarField) -> Result<ScalarField> {
    require_torus(f.grid())?;
    let (lx, ly) = (f.grid().lx(), f.grid().ly());
    let mut planes = [scalar_to_plane(f)];
    let two_pi = 2.0 * std::f64::consts::PI;
    apply_symbol(f.grid(), &mut planes, move |kx, ky| {
        let wx = two_pi * kx as f64 / lx;
        let wy = two_pi * ky as f64 / ly;
        Complex64::new(-(wx * wx + wy * wy), 0.0)
    });
    Ok(plane_to_scalar(f.grid(), &planes[0]))
}

/// Solve the five-point discrete Poisson problem `Lap_h u = rhs` on the
/// torus with zero-mean gauge. The right-hand side mean must vanish;
/// callers pass context indices for the error report.
pub fn solve_poisson_5pt(rhs: &ScalarField, entry: (usize, usize)) -> Result<ScalarField> {
    require_torus(rhs.grid())?;
    let grid = *rhs.grid();
    let mean = rhs.mean();
    let scale = rhs.max_abs().max(1.0);
    let tol = 1e-10 * scale;
    if mean.abs() > tol {
        return Err(DhError::NonZeroMean {
            mean,
            tol,
            m: entry.0,
            i: entry.1,
        });
    }
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let mut plane = scalar_to_plane(rhs);
    fft2(&mut plane, nx, ny, false);
    let two_pi = 2.0 * std::f64::consts::PI;
    for j in 0..ny {
        for i in 0..nx {
            if i == 0 && j == 0 {
                plane[0] = Complex64::new(0.0, 0.0);
                continue;
            }
            let cx = (two_pi * i as f64 / nx as f64).cos();
            let cy = (two_pi * j as f64 / ny as f64).cos();
            let eig = (2.0 * cx + 2.0 * cy - 4.0) / (h * h);
            plane[j * nx + i] /= eig;
        }
    }
    fft2(&mut plane, nx, ny, true);
    Ok(plane_to_scalar(&grid, &plane))
}

/// Solve the continuum Poisson problem `Lap u = rhs` with the exact
/// Fourier symbol, zero-mean gauge. Same mean precondition as the
/// five-point variant.
pub fn solve_poisson_spectral(rhs: &ScalarField, entry: (usize, usize)) -> Result<ScalarField> {
    require_torus(rhs.grid())?;
    let grid = *rhs.grid();
    let mean = rhs.mean();
    let scale = rhs.max_abs().max(1.0);
    let tol = 1e-10 * scale;
    if mean.abs() > tol {
        return Err(DhError::NonZeroMean {
            mean,
            tol,
            m: entry.0,
            i: entry.1,
        });
    }
    let (lx, ly) = (grid.lx(), grid.ly());
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut planes = [scalar_to_plane(rhs)];
    apply_symbol(&grid, &mut planes, move |kx, ky| {
        if kx == 0 && ky == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let wx = two_pi * kx as f64 / lx;
        let wy = two_pi * ky as f64 / ly;
        Complex64::new(-1.0 / (wx * wx + wy * wy), 0.0)
    });
    Ok(plane_to_scalar(&grid, &planes[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::laplacian;
    use std::f64::consts::PI;

    #[test]
    fn spectral_diff_exact_on_modes() {
        let grid = Grid::torus(1.0, 2.0, 32, 64).unwrap();
        let f = ScalarField::from_fn(&grid, |x, y| {
            (2.0 * PI * 3.0 * x).sin() * (PI * y).cos()
        });
        let dx = spectral_diff(&f, Axis::X).unwrap();
        for j in 0..grid.npy() {
            for i in 0..grid.npx() {
                let (x, y) = (grid.x(i), grid.y(j));
                let exact = 6.0 * PI * (6.0 * PI * x).cos() * (PI * y).cos();
                assert!((dx.at(i, j) - exact).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spectral_rejects_rectangle() {
        let grid = Grid::rectangle(1.0, 1.0, 16, 16).unwrap();
        let f = ScalarField::zeros(&grid);
        assert!(matches!(
            spectral_diff(&f, Axis::X),
            Err(DhError::UnsupportedTopology)
        ));
    }

    #[test]
    fn poisson_5pt_inverts_discrete_laplacian() {
        let grid = Grid::torus(1.0, 1.0, 32, 32).unwrap();
        let u = ScalarField::from_fn(&grid, |x, y| {
            (2.0 * PI * x).sin() + 0.4 * (4.0 * PI * y).cos() * (2.0 * PI * x).cos()
        });
        let rhs = laplacian(&u);
        let sol = solve_poisson_5pt(&rhs, (0, 0)).unwrap();
        // u already has zero mean, so recovery is exact up to rounding.
        let mut err = 0.0f64;
        for (a, b) in u.data().iter().zip(sol.data()) {
            err = err.max((a - b).abs());
        }
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn poisson_spectral_inverts_continuum_laplacian() {
        let grid = Grid::torus(2.0, 2.0, 32, 32).unwrap();
        let u = ScalarField::from_fn(&grid, |x, y| {
            (PI * x).sin() * (2.0 * PI * y).cos() + 0.1 * (3.0 * PI * x).cos()
        });
        let rhs = spectral_laplacian(&u).unwrap();
        let sol = solve_poisson_spectral(&rhs, (0, 0)).unwrap();
        let mean = u.mean();
        let mut err = 0.0f64;
        for (a, b) in u.data().iter().zip(sol.data()) {
            err = err.max((a - mean - b).abs());
        }
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn poisson_rejects_nonzero_mean() {
        let grid = Grid::torus(1.0, 1.0, 16, 16).unwrap();
        let rhs = ScalarField::from_fn(&grid, |_, _| 1.0);
        assert!(matches!(
            solve_poisson_5pt(&rhs, (1, 2)),
            Err(DhError::NonZeroMean { m: 1, i: 2, .. })
        ));
    }
}
