//! Pinhole intrinsics shared by the rig description, the depth simulator
//! and the organized-cloud file format.
//!
//! Camera frame convention: `+x` right, `+y` down, `+z` forward (optical
//! axis). Pixel `(u, v)` has its center at integer coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for Intrinsics {
    /// 640×480 with a 90° horizontal field of view.
    fn default() -> Self {
        Self {
            fx: 320.0,
            fy: 320.0,
            cx: 319.5,
            cy: 239.5,
            width: 640,
            height: 480,
        }
    }
}

impl Intrinsics {
    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.fx.is_finite()
            && self.fy.is_finite()
            && self.cx.is_finite()
            && self.cy.is_finite()
            && self.width > 0
            && self.height > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!("invalid intrinsics {self:?}")))
        }
    }

    /// Scales resolution and focal lengths by `factor` (keeps the field of view).
    pub fn scaled(&self, factor: f64) -> Self {
        let width = ((self.width as f64) * factor).round().max(1.0) as u32;
        let height = ((self.height as f64) * factor).round().max(1.0) as u32;
        Self {
            fx: self.fx * factor,
            fy: self.fy * factor,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
            width,
            height,
        }
    }

    /// Camera-frame ray through pixel `(u, v)`, scaled so that `z = 1`.
    pub fn pixel_ray(&self, u: u32, v: u32) -> Vector {
        Vector::new((u as f64 - self.cx) / self.fx, (v as f64 - self.cy) / self.fy, 1.0)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}
