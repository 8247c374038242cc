//! Flat rectangular discrete domains and generic per-site field storage.
//!
//! Coordinates are centered: a torus covers `[-Lx/2, Lx/2) x [-Ly/2, Ly/2)`
//! with `nx * ny` sites, a rectangle covers the closed box
//! `[-Lx/2, Lx/2] x [-Ly/2, Ly/2]` with `(nx+1) * (ny+1)` nodes. In both
//! cases the spacing is `h = Lx/nx = Ly/ny` and cells are square.

use crate::clifford::Spinor;
use crate::error::{DhError, Result};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Torus,
    Rectangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    topology: Topology,
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    h: f64,
}

impl Grid {
    pub fn new(topology: Topology, lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Grid> {
        if !(lx > 0.0 && ly > 0.0) {
            return Err(DhError::InvalidGrid(format!(
                "side lengths must be positive, got {lx} x {ly}"
            )));
        }
        if nx < 8 || ny < 8 {
            return Err(DhError::InvalidGrid(format!(
                "need nx, ny >= 8, got {nx} x {ny}"
            )));
        }
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        if (hx - hy).abs() > 1e-12 * hx.max(hy) {
            return Err(DhError::InvalidGrid(format!(
                "cells must be square: hx = {hx}, hy = {hy}"
            )));
        }
        Ok(Grid {
            topology,
            lx,
            ly,
            nx,
            ny,
            h: hx,
        })
    }

    pub fn torus(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Grid> {
        Grid::new(Topology::Torus, lx, ly, nx, ny)
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Grid> {
        Grid::new(Topology::Rectangle, lx, ly, nx, ny)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of stored nodes along x.
    pub fn npx(&self) -> usize {
        match self.topology {
            Topology::Torus => self.nx,
            Topology::Rectangle => self.nx + 1,
        }
    }

    /// Number of stored nodes along y.
    pub fn npy(&self) -> usize {
        match self.topology {
            Topology::Torus => self.ny,
            Topology::Rectangle => self.ny + 1,
        }
    }

    pub fn sites(&self) -> usize {
        self.npx() * self.npy()
    }

    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.lx + i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        -0.5 * self.ly + j as f64 * self.h
    }

    /// Rectangle only: node on the outermost ring.
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        match self.topology {
            Topology::Torus => false,
            Topology::Rectangle => {
                i == 0 || j == 0 || i == self.npx() - 1 || j == self.npy() - 1
            }
        }
    }

    /// True when the node is at least `margin` nodes away from the
    /// rectangle boundary. On the torus every node is interior.
    pub fn is_interior(&self, i: usize, j: usize, margin: usize) -> bool {
        match self.topology {
            Topology::Torus => true,
            Topology::Rectangle => {
                i >= margin
                    && j >= margin
                    && i + margin < self.npx()
                    && j + margin < self.npy()
            }
        }
    }
}

/// Values that admit the linear operations stencils need.
pub trait Linear:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn zero() -> Self;
}

impl Linear for f64 {
    fn zero() -> f64 {
        0.0
    }
}

impl Linear for Spinor {
    fn zero() -> Spinor {
        Spinor::ZERO
    }
}

/// Dense per-site storage over a grid, row-major in `j` (y) then `i` (x).
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D<T> {
    grid: Grid,
    data: Vec<T>,
}

pub type ScalarField = Field2D<f64>;
pub type SpinorGrid = Field2D<Spinor>;

impl<T: Linear> Field2D<T> {
    pub fn zeros(grid: &Grid) -> Field2D<T> {
        Field2D {
            grid: *grid,
            data: vec![T::zero(); grid.sites()],
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64, f64) -> T) -> Field2D<T> {
        let mut data = Vec::with_capacity(grid.sites());
        for j in 0..grid.npy() {
            for i in 0..grid.npx() {
                data.push(f(grid.x(i), grid.y(j)));
            }
        }
        Field2D { grid: *grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[j * self.grid.npx() + i]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[j * self.grid.npx() + i]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Periodic (torus) or clamped (rectangle) lookup with signed offsets.
    #[inline]
    pub fn at_wrapped(&self, i: isize, j: isize) -> T {
        let (npx, npy) = (self.grid.npx() as isize, self.grid.npy() as isize);
        let (ii, jj) = match self.grid.topology() {
            Topology::Torus => (i.rem_euclid(npx), j.rem_euclid(npy)),
            Topology::Rectangle => (i.clamp(0, npx - 1), j.clamp(0, npy - 1)),
        };
        self.data[(jj * npx + ii) as usize]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Field2D<T> {
        Field2D {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Field2D<T>, f: impl Fn(T, T) -> T) -> Field2D<T> {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Field2D {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Field2D<T>, s: f64) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b * s;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.data.iter_mut() {
            *a = *a * s;
        }
    }
}

impl ScalarField {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Max over nodes at least `margin` nodes from the rectangle boundary.
    pub fn max_abs_interior(&self, margin: usize) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.grid.npy() {
            for i in 0..self.grid.npx() {
                if self.grid.is_interior(i, j, margin) {
                    m = m.max(self.at(i, j).abs());
                }
            }
        }
        m
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}
