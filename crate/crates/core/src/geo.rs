//! Geodesy helpers: great-circle lengths and a local planar projection.

use serde::{Deserialize, Serialize};

pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// WGS84 position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

pub fn haversine_m(a: LatLon, b: LatLon) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Great-circle length of a polyline.
pub fn polyline_length_m(points: &[LatLon]) -> f64 {
    points.windows(2).map(|w| haversine_m(w[0], w[1])).sum()
}

/// Planar point in meters (x east, y north).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Xy {
    pub x: f64,
    pub y: f64,
}

impl Xy {
    pub fn dist(self, o: Xy) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

/// Equirectangular projection around a fixed origin. Accurate to well under a
/// meter over city-sized extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub origin: LatLon,
}

impl Projection {
    pub fn new(origin: LatLon) -> Self {
        Self { origin }
    }

    /// Projection centered on the arithmetic mean of `points`.
    pub fn centered_on<'a>(points: impl IntoIterator<Item = &'a LatLon>) -> Self {
        let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            lat += p.lat;
            lon += p.lon;
            n += 1;
        }
        let origin = if n == 0 {
            LatLon::new(0.0, 0.0)
        } else {
            LatLon::new(lat / n as f64, lon / n as f64)
        };
        Self { origin }
    }

    fn scale_x(&self) -> f64 {
        EARTH_RADIUS_M * self.origin.lat.to_radians().cos()
    }

    pub fn project(&self, p: LatLon) -> Xy {
        Xy {
            x: (p.lon - self.origin.lon).to_radians() * self.scale_x(),
            y: (p.lat - self.origin.lat).to_radians() * EARTH_RADIUS_M,
        }
    }

    pub fn unproject(&self, q: Xy) -> LatLon {
        LatLon {
            lat: self.origin.lat + (q.y / EARTH_RADIUS_M).to_degrees(),
            lon: self.origin.lon + (q.x / self.scale_x()).to_degrees(),
        }
    }
}

/// Closest point on segment `a`-`b` to `p`, as (distance, parameter in [0, 1]).
pub fn point_segment(p: Xy, a: Xy, b: Xy) -> (f64, f64) {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    let q = Xy {
        x: a.x + t * dx,
        y: a.y + t * dy,
    };
    (p.dist(q), t)
}

/// Distance from `p` to the nearest point of a planar polyline.
pub fn point_polyline_dist(p: Xy, line: &[Xy]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [only] => p.dist(*only),
        _ => line
            .windows(2)
            .map(|w| point_segment(p, w[0], w[1]).0)
            .fold(f64::INFINITY, f64::min),
    }
}

/// Uniform-grid bucket index over planar points.
#[derive(Debug, Clone)]
pub struct GridIndex {
    cell: f64,
    buckets: std::collections::HashMap<(i64, i64), Vec<usize>>,
}

impl GridIndex {
    pub fn new(cell: f64, points: impl IntoIterator<Item = Xy>) -> Self {
        let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> = Default::default();
        for (i, p) in points.into_iter().enumerate() {
            buckets.entry(Self::key(cell, p)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    fn key(cell: f64, p: Xy) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    /// Indices of points that may lie inside the box `[lo, hi]`, in ascending order.
    pub fn candidates(&self, lo: Xy, hi: Xy) -> Vec<usize> {
        let (x0, y0) = Self::key(self.cell, lo);
        let (x1, y1) = Self::key(self.cell, hi);
        let mut out = Vec::new();
        for x in x0..=x1 {
            for y in y0..=y1 {
                if let Some(b) = self.buckets.get(&(x, y)) {
                    out.extend_from_slice(b);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Candidates within `radius` of `p` (superset).
    pub fn around(&self, p: Xy, radius: f64) -> Vec<usize> {
        self.candidates(
            Xy {
                x: p.x - radius,
                y: p.y - radius,
            },
            Xy {
                x: p.x + radius,
                y: p.y + radius,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_degree_of_latitude() {
        let d = haversine_m(LatLon::new(0.0, 0.0), LatLon::new(1.0, 0.0));
        // R * pi / 180
        assert_relative_eq!(d, 111_195.08, epsilon = 0.5);
    }

    #[test]
    fn projection_round_trip() {
        let proj = Projection::new(LatLon::new(32.08, 34.78));
        let p = LatLon::new(32.091, 34.801);
        let back = proj.unproject(proj.project(p));
        assert_relative_eq!(back.lat, p.lat, epsilon = 1e-12);
        assert_relative_eq!(back.lon, p.lon, epsilon = 1e-12);
    }

    #[test]
    fn projected_distance_matches_haversine_locally() {
        let proj = Projection::new(LatLon::new(32.08, 34.78));
        let a = LatLon::new(32.08, 34.78);
        let b = proj.unproject(Xy { x: 700.0, y: 700.0 });
        let planar = proj.project(a).dist(proj.project(b));
        assert_relative_eq!(planar, haversine_m(a, b), max_relative = 1e-4);
    }

    #[test]
    fn segment_projection_clamps() {
        let a = Xy { x: 0.0, y: 0.0 };
        let b = Xy { x: 10.0, y: 0.0 };
        assert_eq!(point_segment(Xy { x: 5.0, y: 3.0 }, a, b), (3.0, 0.5));
        assert_eq!(point_segment(Xy { x: -4.0, y: 3.0 }, a, b), (5.0, 0.0));
        assert_eq!(point_polyline_dist(Xy { x: 1.0, y: 1.0 }, &[]), f64::INFINITY);
    }
}
