use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear function of one variable given by sample points, held
/// constant outside the sampled range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Profile {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::InvalidParameter(
                "profile needs matching, non-empty knot and value lists".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "profile knots must be strictly increasing".into(),
            ));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("profile contains non-finite values".into()));
        }
        Ok(Self { knots, values })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            knots: vec![0.0],
            values: vec![value],
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value and slope at `x`. At a knot the slope of the segment to its
    /// right is returned; outside the sampled range the slope is zero.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let last = self.knots.len() - 1;
        if x < self.knots[0] {
            return (self.values[0], 0.0);
        }
        if x >= self.knots[last] {
            return (self.values[last], 0.0);
        }
        let seg = self.knots.partition_point(|&k| k <= x) - 1;
        let (x0, x1) = (self.knots[seg], self.knots[seg + 1]);
        let (y0, y1) = (self.values[seg], self.values[seg + 1]);
        let slope = (y1 - y0) / (x1 - x0);
        (y0 + slope * (x - x0), slope)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<Vec<[f64; 2]>> for Profile {
    type Error = Error;

    fn try_from(points: Vec<[f64; 2]>) -> Result<Self> {
        let (knots, values) = points.into_iter().map(|[k, v]| (k, v)).unzip();
        Profile::new(knots, values)
    }
}

impl From<Profile> for Vec<[f64; 2]> {
    fn from(p: Profile) -> Self {
        p.knots.into_iter().zip(p.values).map(|(k, v)| [k, v]).collect()
    }
}

/// Track described in curvilinear coordinates along its centerline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Track {
    pub length: f64,
    /// Centerline curvature over progress (1/m).
    pub curvature: Profile,
    /// Distance from centerline to the left boundary (m).
    pub width_left: Profile,
    /// Distance from centerline to the right boundary (m).
    pub width_right: Profile,
}

impl Track {
    pub fn straight(length: f64, width_left: f64, width_right: f64) -> Self {
        Self {
            length,
            curvature: Profile::constant(0.0),
            width_left: Profile::constant(width_left),
            width_right: Profile::constant(width_right),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) {
            return Err(Error::InvalidParameter("track length must be positive".into()));
        }
        if !(self.width_left.min_value() > 0.0 && self.width_right.min_value() > 0.0) {
            return Err(Error::InvalidParameter("track widths must be positive".into()));
        }
        Ok(())
    }
}

impl Default for Track {
    fn default() -> Self {
        Track::straight(600.0, 6.0, 6.0)
    }
}
