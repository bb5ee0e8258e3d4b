use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::grid::{ComplexField, GridSpec};

/// A planar map sampled on a grid together with its Wirtinger derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Mapping {
    pub values: ComplexField,
    pub fz: ComplexField,
    pub fzbar: ComplexField,
}

impl Mapping {
    pub fn new(values: ComplexField, fz: ComplexField, fzbar: ComplexField) -> Result<Self> {
        values.spec().check_same(fz.spec())?;
        values.spec().check_same(fzbar.spec())?;
        Ok(Self { values, fz, fzbar })
    }

    pub fn spec(&self) -> &GridSpec {
        self.values.spec()
    }

    /// `z ↦ a z + b z̄`.
    pub fn affine(spec: GridSpec, a: Complex64, b: Complex64) -> Self {
        Self {
            values: ComplexField::from_fn(spec, move |z| a * z + b * z.conj()),
            fz: ComplexField::constant(spec, a),
            fzbar: ComplexField::constant(spec, b),
        }
    }

    pub fn identity(spec: GridSpec) -> Self {
        Self::affine(spec, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// `z ↦ c zᵖ`, holomorphic.
    pub fn power(spec: GridSpec, c: Complex64, p: u32) -> Result<Self> {
        if p == 0 {
            return Err(LabError::Config("power map needs exponent >= 1".into()));
        }
        let pi = p as i32;
        Ok(Self {
            values: ComplexField::from_fn(spec, move |z| c * z.powi(pi)),
            fz: ComplexField::from_fn(spec, move |z| c * p as f64 * z.powi(pi - 1)),
            fzbar: ComplexField::zeros(spec),
        })
    }

    /// Real multiple `t·f`.
    pub fn scaled(&self, t: f64) -> Self {
        let c = Complex64::new(t, 0.0);
        Self {
            values: self.values.scale(c),
            fz: self.fz.scale(c),
            fzbar: self.fzbar.scale(c),
        }
    }

    /// Real linear combination `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Mapping, b: f64) -> Result<Self> {
        let lin = |p: &ComplexField, q: &ComplexField| p.zip_map(q, move |x, y| x * a + y * b);
        Ok(Self {
            values: lin(&self.values, &other.values)?,
            fz: lin(&self.fz, &other.fz)?,
            fzbar: lin(&self.fzbar, &other.fzbar)?,
        })
    }

    /// Jacobian `|f_z|² − |f_z̄|²`, stored as a real field.
    pub fn jacobian(&self) -> ComplexField {
        self.fz
            .zip_map(&self.fzbar, |a, b| Complex64::new(a.norm_sqr() - b.norm_sqr(), 0.0))
            .expect("mapping fields share a grid")
    }

}

/// Real-part and imaginary-part gradients of a mapping.
#[derive(Debug, Clone)]
pub struct ComponentGradients {
    pub u_x: ComplexField,
    pub u_y: ComplexField,
    pub v_x: ComplexField,
    pub v_y: ComplexField,
}

impl Mapping {
    /// `f_x = f_z + f_z̄`, `f_y = i(f_z − f_z̄)`, split into `u = Re f`, `v = Im f`.
    pub fn component_gradients(&self) -> ComponentGradients {
        let fx = self.fz.add(&self.fzbar).expect("mapping fields share a grid");
        let fy = self
            .fz
            .zip_map(&self.fzbar, |a, b| Complex64::new(0.0, 1.0) * (a - b))
            .expect("mapping fields share a grid");
        ComponentGradients {
            u_x: fx.real_part(),
            u_y: fy.real_part(),
            v_x: fx.imag_part(),
            v_y: fy.imag_part(),
        }
    }
}
