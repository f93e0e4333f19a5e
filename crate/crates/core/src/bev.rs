// SPDX-License-Identifier: Apache-2.0

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::geometry::GridConfig;

/// `[channels × rows × cols]` feature grid tied to a [`GridConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct BevFeatureMap {
    data: Array3<f32>,
    grid: GridConfig,
}

impl BevFeatureMap {
    pub fn zeros(channels: usize, grid: GridConfig) -> Self {
        Self {
            data: Array3::zeros((channels, grid.rows(), grid.cols())),
            grid,
        }
    }

    pub fn from_array(data: Array3<f32>, grid: GridConfig) -> Result<Self> {
        let (_, rows, cols) = data.dim();
        if (rows, cols) != (grid.rows(), grid.cols()) {
            return Err(Error::Shape {
                context: "bev feature map",
                expected: vec![data.dim().0, grid.rows(), grid.cols()],
                actual: data.shape().to_vec(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("bev feature map contains non-finite values".into()));
        }
        Ok(Self { data, grid })
    }

    pub fn channels(&self) -> usize {
        self.data.dim().0
    }

    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn data(&self) -> &Array3<f32> {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut Array3<f32> {
        &mut self.data
    }

    pub fn into_array(self) -> Array3<f32> {
        self.data
    }

    /// Sum of all cells, accumulated in f64.
    pub fn total(&self) -> f64 {
        self.data.iter().map(|&v| f64::from(v)).sum()
    }
}
