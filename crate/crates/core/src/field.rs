//! Dense `H×W×C` grids of `f64`.
//!
//! [`Field`] is the carrier for every quantity in the sampler: noisy samples,
//! x₀ estimates, predicted noise, wavelet subbands and adaptive weights. All
//! arithmetic is same-shape and elementwise; nothing broadcasts.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Grid dimensions in row-major `(h, w, c)` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Shape {
    pub fn new(height: usize, width: usize, channels: usize) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Dimension(format!(
                "all dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
        })
    }

    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat offset of cell `(h, w, c)`.
    #[inline]
    pub fn index(&self, h: usize, w: usize, c: usize) -> usize {
        (h * self.width + w) * self.channels + c
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

/// Binary elementwise operation for [`Field::combine`].
#[derive(Debug, Clone, Copy)]
pub enum Combine<'a> {
    Add,
    Sub,
    Mul,
    /// `(1 − coef)∘a + coef∘b`, with every coefficient in `[0, 1]`.
    Lerp(&'a Field),
}

/// An immutable `H×W×C` grid of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    shape: Shape,
    data: Vec<f64>,
}

impl Field {
    /// Wraps `data` (row-major `(h, w, c)`), rejecting wrong lengths and non-finite values.
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Dimension(format!(
                "shape {shape} needs {} values, got {}",
                shape.len(),
                data.len()
            )));
        }
        check_finite(&data, "Field::new")?;
        Ok(Self { shape, data })
    }

    pub fn filled(shape: Shape, value: f64) -> Result<Self> {
        Self::new(shape, vec![value; shape.len()])
    }

    pub fn zeros(shape: Shape) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub fn ones(shape: Shape) -> Self {
        Self {
            shape,
            data: vec![1.0; shape.len()],
        }
    }

    /// Builds a field cell by cell from `f(h, w, c)`.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(shape.len());
        for h in 0..shape.height {
            for w in 0..shape.width {
                for c in 0..shape.channels {
                    data.push(f(h, w, c));
                }
            }
        }
        Self::new(shape, data)
    }

    /// Draws every cell i.i.d. from `N(0, 1)`.
    pub fn standard_normal<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Self {
        let data = (0..shape.len())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, h: usize, w: usize, c: usize) -> f64 {
        self.data[self.shape.index(h, w, c)]
    }

    /// Errors unless `other` has exactly this field's shape.
    pub fn ensure_same_shape(&self, other: &Field) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "shape {} does not match {}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// Applies `f` to every cell. Fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        check_finite(&data, "map")?;
        Ok(Field {
            shape: self.shape,
            data,
        })
    }

    /// Pairs cells of `self` and `other` through `f`.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.ensure_same_shape(other)?;
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        check_finite(&data, "zip_map")?;
        Ok(Field {
            shape: self.shape,
            data,
        })
    }

    pub fn combine(&self, other: &Field, op: Combine<'_>) -> Result<Field> {
        match op {
            Combine::Add => self.zip_map(other, |a, b| a + b),
            Combine::Sub => self.zip_map(other, |a, b| a - b),
            Combine::Mul => self.zip_map(other, |a, b| a * b),
            Combine::Lerp(coef) => self.lerp(other, coef),
        }
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.combine(other, Combine::Add)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.combine(other, Combine::Sub)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.combine(other, Combine::Mul)
    }

    /// `(1 − coef)∘self + coef∘other`.
    pub fn lerp(&self, other: &Field, coef: &Field) -> Result<Field> {
        self.ensure_same_shape(other)?;
        self.ensure_same_shape(coef)?;
        if let Some(bad) = coef.data.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Parameter(format!(
                "lerp coefficient {bad} outside [0, 1]"
            )));
        }
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(&other.data)
            .zip(&coef.data)
            .map(|((&a, &b), &c)| (1.0 - c) * a + c * b)
            .collect();
        check_finite(&data, "lerp")?;
        Ok(Field {
            shape: self.shape,
            data,
        })
    }

    /// Elementwise `|self − other|`.
    pub fn abs_diff(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| (a - b).abs())
    }

    pub fn neg(&self) -> Field {
        Field {
            shape: self.shape,
            data: self.data.iter().map(|v| -v).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Result<Field> {
        self.map(|v| k * v)
    }

    /// `a·self + b·other`, evaluated per cell in one pass.
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        self.zip_map(other, |x, y| a * x + b * y)
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sum_sq().sqrt()
    }

    /// Largest absolute cellwise difference.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Euclidean distance between two same-shape fields.
    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

fn check_finite(data: &[f64], what: &str) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Validity(format!(
            "{what}: value {} at flat index {i}",
            data[i]
        ))),
        None => Ok(()),
    }
}
