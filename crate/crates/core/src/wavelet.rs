//! Single-level orthonormal 2D Haar transform, applied independently per channel.
//!
//! Each non-overlapping 2×2 block `[[a, b], [c, d]]` maps to
//!
//! ```text
//! ll = (a + b + c + d) / 2
//! lh = (a + b − c − d) / 2   // vertical detail (top vs bottom)
//! hl = (a − b + c − d) / 2   // horizontal detail (left vs right)
//! hh = (a − b − c + d) / 2
//! ```
//!
//! The 4×4 block matrix is symmetric and orthogonal, so the inverse uses the
//! same coefficients and Σx² is preserved across the four subbands.

use crate::error::{Error, Result};
use crate::field::{Field, Shape};

/// Subband identifier, in the order `ll, lh, hl, hh`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    Ll,
    Lh,
    Hl,
    Hh,
}

impl Band {
    pub const ALL: [Band; 4] = [Band::Ll, Band::Lh, Band::Hl, Band::Hh];

    pub fn name(self) -> &'static str {
        match self {
            Band::Ll => "ll",
            Band::Lh => "lh",
            Band::Hl => "hl",
            Band::Hh => "hh",
        }
    }

    pub fn is_low(self) -> bool {
        self == Band::Ll
    }
}

/// The four Haar subbands of a field, each `(H/2, W/2, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub ll: Field,
    pub lh: Field,
    pub hl: Field,
    pub hh: Field,
}

impl SubbandSet {
    /// Checks that all four bands share one shape and returns it.
    pub fn new(ll: Field, lh: Field, hl: Field, hh: Field) -> Result<Self> {
        let set = Self { ll, lh, hl, hh };
        set.band_shape()?;
        Ok(set)
    }

    pub fn band_shape(&self) -> Result<Shape> {
        let s = self.ll.shape();
        for band in [&self.lh, &self.hl, &self.hh] {
            if band.shape() != s {
                return Err(Error::Dimension(format!(
                    "subband shapes disagree: {} vs {}",
                    s,
                    band.shape()
                )));
            }
        }
        Ok(s)
    }

    pub fn band(&self, band: Band) -> &Field {
        match band {
            Band::Ll => &self.ll,
            Band::Lh => &self.lh,
            Band::Hl => &self.hl,
            Band::Hh => &self.hh,
        }
    }

    /// Builds a new set by transforming each band with `f`.
    pub fn try_map(&self, mut f: impl FnMut(Band, &Field) -> Result<Field>) -> Result<SubbandSet> {
        SubbandSet::new(
            f(Band::Ll, &self.ll)?,
            f(Band::Lh, &self.lh)?,
            f(Band::Hl, &self.hl)?,
            f(Band::Hh, &self.hh)?,
        )
    }

    pub fn try_zip(
        &self,
        other: &SubbandSet,
        mut f: impl FnMut(Band, &Field, &Field) -> Result<Field>,
    ) -> Result<SubbandSet> {
        SubbandSet::new(
            f(Band::Ll, &self.ll, &other.ll)?,
            f(Band::Lh, &self.lh, &other.lh)?,
            f(Band::Hl, &self.hl, &other.hl)?,
            f(Band::Hh, &self.hh, &other.hh)?,
        )
    }

    /// Per-band ℓ² norms in `ll, lh, hl, hh` order.
    pub fn norms(&self) -> [f64; 4] {
        Band::ALL.map(|b| self.band(b).l2_norm())
    }
}

/// Forward Haar transform. Both `H` and `W` must be even.
pub fn dwt(x: &Field) -> Result<SubbandSet> {
    let s = x.shape();
    if s.height % 2 != 0 || s.width % 2 != 0 {
        return Err(Error::Dimension(format!(
            "Haar DWT needs even height and width, got {s}"
        )));
    }
    let half = Shape::new(s.height / 2, s.width / 2, s.channels)?;
    let n = half.len();
    let (mut ll, mut lh, mut hl, mut hh) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    let data = x.data();
    for i in 0..half.height {
        for j in 0..half.width {
            for c in 0..s.channels {
                let a = data[s.index(2 * i, 2 * j, c)];
                let b = data[s.index(2 * i, 2 * j + 1, c)];
                let cc = data[s.index(2 * i + 1, 2 * j, c)];
                let d = data[s.index(2 * i + 1, 2 * j + 1, c)];
                let (top, bottom) = (a + b, cc + d);
                let (top_d, bottom_d) = (a - b, cc - d);
                ll.push(0.5 * (top + bottom));
                lh.push(0.5 * (top - bottom));
                hl.push(0.5 * (top_d + bottom_d));
                hh.push(0.5 * (top_d - bottom_d));
            }
        }
    }
    SubbandSet::new(
        Field::new(half, ll)?,
        Field::new(half, lh)?,
        Field::new(half, hl)?,
        Field::new(half, hh)?,
    )
}

/// Inverse Haar transform, producing a `(2H', 2W', C)` field.
pub fn idwt(s: &SubbandSet) -> Result<Field> {
    let half = s.band_shape()?;
    let full = Shape::new(2 * half.height, 2 * half.width, half.channels)?;
    let mut out = vec![0.0; full.len()];
    let (ll, lh, hl, hh) = (s.ll.data(), s.lh.data(), s.hl.data(), s.hh.data());
    for i in 0..half.height {
        for j in 0..half.width {
            for c in 0..half.channels {
                let k = half.index(i, j, c);
                let (sum_l, dif_l) = (ll[k] + lh[k], ll[k] - lh[k]);
                let (sum_h, dif_h) = (hl[k] + hh[k], hl[k] - hh[k]);
                out[full.index(2 * i, 2 * j, c)] = 0.5 * (sum_l + sum_h);
                out[full.index(2 * i, 2 * j + 1, c)] = 0.5 * (sum_l - sum_h);
                out[full.index(2 * i + 1, 2 * j, c)] = 0.5 * (dif_l + dif_h);
                out[full.index(2 * i + 1, 2 * j + 1, c)] = 0.5 * (dif_l - dif_h);
            }
        }
    }
    Field::new(full, out)
}
