//! Scalar fields on a chart: constants, DSL expressions, and trigonometric
//! interpolants of periodic grid data.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::Expr;

#[derive(Clone, Debug, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    Expr(Expr),
    /// Periodic interpolant of node values, raised to `exponent`.
    Grid {
        interpolant: Arc<TrigInterpolant>,
        exponent: f64,
    },
}

impl ScalarField {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(ScalarField::Expr(Expr::parse(text)?))
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match self {
            ScalarField::Constant(c) => Ok(*c),
            ScalarField::Expr(e) => e.eval(x),
            ScalarField::Grid {
                interpolant,
                exponent,
            } => {
                let v = interpolant.eval(x)?;
                if *exponent == 1.0 {
                    Ok(v)
                } else if v <= 0.0 {
                    Err(Error::Domain(format!(
                        "interpolated field {v} is not positive at {x:?}"
                    )))
                } else {
                    Ok(v.powf(*exponent))
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScalarField::Constant(_))
    }

    /// `self^exponent`, staying inside the same representation.
    pub fn powf(&self, exponent: f64) -> ScalarField {
        match self {
            ScalarField::Constant(c) => ScalarField::Constant(c.powf(exponent)),
            ScalarField::Expr(e) => ScalarField::Expr(e.clone().powf(exponent)),
            ScalarField::Grid {
                interpolant,
                exponent: e0,
            } => ScalarField::Grid {
                interpolant: interpolant.clone(),
                exponent: e0 * exponent,
            },
        }
    }

    /// Coordinates required by the field, if it constrains them.
    pub fn arity(&self) -> usize {
        match self {
            ScalarField::Constant(_) => 0,
            ScalarField::Expr(e) => e.arity(),
            ScalarField::Grid { interpolant, .. } => interpolant.dim(),
        }
    }

    /// Fourth-order central-difference gradient.
    pub fn gradient(&self, x: &[f64], h: f64) -> Result<Vec<f64>> {
        if self.is_constant() {
            return Ok(vec![0.0; x.len()]);
        }
        (0..x.len())
            .map(|k| {
                let v = central4(|y| Ok(vec![self.value(y)?]), x, k, h)?;
                Ok(v[0])
            })
            .collect()
    }

    /// Hessian as the finite-difference derivative of the FD gradient.
    pub fn hessian(&self, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
        let n = x.len();
        if self.is_constant() {
            return Ok(DMatrix::zeros(n, n));
        }
        let mut out = DMatrix::zeros(n, n);
        for l in 0..n {
            let col = central4(|y| self.gradient(y, h), x, l, h)?;
            for k in 0..n {
                out[(k, l)] = col[k];
            }
        }
        Ok((&out + out.transpose()) * 0.5)
    }
}

impl From<f64> for ScalarField {
    fn from(c: f64) -> Self {
        ScalarField::Constant(c)
    }
}

impl Serialize for ScalarField {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ScalarField::Constant(c) => s.serialize_f64(*c),
            ScalarField::Expr(e) => e.serialize(s),
            ScalarField::Grid { .. } => Err(serde::ser::Error::custom(
                "grid interpolants are not serialisable",
            )),
        }
    }
}

impl<'de> Deserialize<'de> for ScalarField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(c) => Ok(ScalarField::Constant(c)),
            Raw::Text(t) => Expr::parse(&t)
                .map(ScalarField::Expr)
                .map_err(serde::de::Error::custom),
        }
    }
}

/// `(−f(x+2h) + 8f(x+h) − 8f(x−h) + f(x−2h)) / 12h` along `axis`.
pub(crate) fn central4<F>(f: F, x: &[f64], axis: usize, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut y = x.to_vec();
    let mut at = |offset: f64| -> Result<Vec<f64>> {
        y[axis] = x[axis] + offset;
        f(&y)
    };
    let p2 = at(2.0 * h)?;
    let p1 = at(h)?;
    let m1 = at(-h)?;
    let m2 = at(-2.0 * h)?;
    let denom = 12.0 * h;
    Ok((0..p1.len())
        .map(|i| (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / denom)
        .collect())
}

/// Band-limited interpolant of samples on a uniform periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigInterpolant {
    resolution: Vec<usize>,
    periods: Vec<f64>,
    /// Row-major node values, first axis slowest.
    values: Vec<f64>,
}

impl TrigInterpolant {
    pub fn new(resolution: Vec<usize>, periods: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if resolution.len() != periods.len() || resolution.is_empty() {
            return Err(Error::Dimension(
                "resolution and periods must have equal non-zero length".into(),
            ));
        }
        let total: usize = resolution.iter().product();
        if values.len() != total {
            return Err(Error::Dimension(format!(
                "grid has {total} nodes, got {} values",
                values.len()
            )));
        }
        Ok(TrigInterpolant {
            resolution,
            periods,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    fn kernel(n: usize, period: f64, offset: f64) -> f64 {
        let y = std::f64::consts::TAU * offset / period;
        let half = 0.5 * y;
        let s = half.sin();
        if s.abs() < 1e-14 {
            return 1.0;
        }
        let nf = n as f64;
        if n % 2 == 0 {
            (nf * half).sin() * half.cos() / (nf * s)
        } else {
            (nf * half).sin() / (nf * s)
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let m = self.dim();
        if x.len() != m {
            return Err(Error::Dimension(format!(
                "interpolant is {m}-dimensional, point has {} coordinates",
                x.len()
            )));
        }
        // Contract the last axis first.
        let mut data = self.values.clone();
        for axis in (0..m).rev() {
            let n = self.resolution[axis];
            let h = self.periods[axis] / n as f64;
            let weights: Vec<f64> = (0..n)
                .map(|j| Self::kernel(n, self.periods[axis], x[axis] - j as f64 * h))
                .collect();
            let outer = data.len() / n;
            data = (0..outer)
                .map(|o| {
                    data[o * n..(o + 1) * n]
                        .iter()
                        .zip(&weights)
                        .map(|(v, w)| v * w)
                        .sum()
                })
                .collect();
        }
        Ok(data[0])
    }
}
