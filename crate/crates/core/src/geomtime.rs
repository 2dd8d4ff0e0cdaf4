//! Spatial projection, circular time wrapping, weekday assignment, and the
//! space x circular-time grid with event binning.
//!
//! Conventions fixed here and used everywhere else:
//!
//! - locations are eastings/northings in km from a configurable reference
//!   point (equirectangular projection);
//! - time of day is an angle in `[0, 2*pi)` with origin at 02:00, so the day
//!   runs 02:00 -> 02:00;
//! - the weekday of an event before 02:00 is the weekday of the previous
//!   calendar date.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Mean Earth radius used by the projection, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Clock hour at which the circular day starts.
pub const DAY_START_HOUR: f64 = 2.0;

/// Start of the evening window `[4*pi/3, 2*pi)`, i.e. 18:00.
pub const EVENING_START: f64 = 4.0 * PI / 3.0;

/// Day of week, ordered Sunday..Saturday.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Weekday {
    Sun,
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Sun,
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
    ];

    /// 0 = Sunday .. 6 = Saturday.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Weekday {
        Weekday::ALL[i % 7]
    }

    fn from_chrono(w: chrono::Weekday) -> Weekday {
        Weekday::from_index(w.num_days_from_sunday() as usize)
    }

    pub fn name(self) -> &'static str {
        ["Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"][self.index()]
    }
}

/// One event: projected location, wrapped clock angle, weekday mark, type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub easting: f64,
    pub northing: f64,
    /// Angle in `[0, 2*pi)` with origin 02:00.
    pub clock_angle: f64,
    pub weekday: Weekday,
    pub type_label: String,
}

/// Equirectangular projection of (lat, lon) degrees about a reference point,
/// returning (easting, northing) in km.
pub fn project(lat: f64, lon: f64, ref_lat: f64, ref_lon: f64) -> Result<(f64, f64)> {
    if !(lat.is_finite() && lon.is_finite()) || lat.abs() > 90.0 || lon.abs() > 180.0 {
        return Err(Error::Input(format!(
            "coordinates out of range: lat={lat}, lon={lon}"
        )));
    }
    let easting = EARTH_RADIUS_KM * ref_lat.to_radians().cos() * (lon - ref_lon).to_radians();
    let northing = EARTH_RADIUS_KM * (lat - ref_lat).to_radians();
    Ok((easting, northing))
}

/// Inverse of [`project`] about the same reference point.
pub fn unproject(easting: f64, northing: f64, ref_lat: f64, ref_lon: f64) -> (f64, f64) {
    let lat = ref_lat + (northing / EARTH_RADIUS_KM).to_degrees();
    let lon = ref_lon + (easting / (EARTH_RADIUS_KM * ref_lat.to_radians().cos())).to_degrees();
    (lat, lon)
}

/// Wrap an hour of day in `[0, 24)` to an angle in `[0, 2*pi)` with the
/// circle's origin at 02:00.
pub fn wrap_time(clock: f64) -> Result<f64> {
    if !clock.is_finite() || !(0.0..24.0).contains(&clock) {
        return Err(Error::Input(format!("clock hour out of [0, 24): {clock}")));
    }
    let shifted = (clock - DAY_START_HOUR).rem_euclid(24.0);
    Ok(shifted / 24.0 * TAU)
}

/// Inverse of [`wrap_time`]: angle in `[0, 2*pi)` back to an hour in `[0, 24)`.
pub fn unwrap_time(angle: f64) -> f64 {
    (angle / TAU * 24.0 + DAY_START_HOUR).rem_euclid(24.0)
}

/// Weekday of an event under the 02:00 day boundary: events before 02:00
/// belong to the previous calendar date's weekday.
pub fn assign_day_of_week(date: NaiveDate, clock: f64) -> Result<Weekday> {
    if !clock.is_finite() || !(0.0..24.0).contains(&clock) {
        return Err(Error::Input(format!("clock hour out of [0, 24): {clock}")));
    }
    let effective = if clock < DAY_START_HOUR {
        date.pred_opt()
            .ok_or_else(|| Error::Input(format!("date out of range: {date}")))?
    } else {
        date
    };
    Ok(Weekday::from_chrono(effective.weekday()))
}

/// Arc-length distance on the circle, in `[0, pi]`.
pub fn circular_distance(t1: f64, t2: f64) -> f64 {
    let d = (t1 - t2).abs();
    d.min(TAU - d)
}

/// Bounded spatial region: a rectangle with an optional simple boundary
/// polygon (closed vertex list, vertices inside the rectangle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub boundary: Option<Vec<[f64; 2]>>,
}

impl Region {
    pub fn rect(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Region> {
        let r = Region {
            x_min,
            x_max,
            y_min,
            y_max,
            boundary: None,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn with_boundary(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        boundary: Vec<[f64; 2]>,
    ) -> Result<Region> {
        let r = Region {
            x_min,
            x_max,
            y_min,
            y_max,
            boundary: Some(boundary),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(Error::Input(
                "region rectangle must have positive area".into(),
            ));
        }
        if let Some(poly) = &self.boundary {
            if poly.len() < 3 {
                return Err(Error::Input("boundary polygon needs >= 3 vertices".into()));
            }
            for v in poly {
                if v[0] < self.x_min - 1e-9
                    || v[0] > self.x_max + 1e-9
                    || v[1] < self.y_min - 1e-9
                    || v[1] > self.y_max + 1e-9
                {
                    return Err(Error::Input(format!(
                        "boundary vertex ({}, {}) outside rectangle",
                        v[0], v[1]
                    )));
                }
            }
            if !polygon_is_simple(poly) {
                return Err(Error::Input("boundary polygon is self-intersecting".into()));
            }
            if polygon_area(poly).abs() <= 0.0 {
                return Err(Error::Input("boundary polygon has zero area".into()));
            }
        }
        Ok(())
    }

    /// Membership with half-open rectangle semantics `[min, max)`, refined by
    /// the boundary polygon when present.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        if !(x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max) {
            return false;
        }
        match &self.boundary {
            Some(poly) => point_in_polygon(x, y, poly),
            None => true,
        }
    }

    /// Area of the region (polygon area when a boundary is set).
    pub fn area(&self) -> f64 {
        match &self.boundary {
            Some(poly) => polygon_area(poly).abs(),
            None => (self.x_max - self.x_min) * (self.y_max - self.y_min),
        }
    }

    /// Largest distance between two points of the bounding rectangle.
    pub fn max_distance(&self) -> f64 {
        ((self.x_max - self.x_min).powi(2) + (self.y_max - self.y_min).powi(2)).sqrt()
    }
}

/// Shoelace area (signed).
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let [x1, y1] = poly[i];
        let [x2, y2] = poly[(i + 1) % n];
        acc += x1 * y2 - x2 * y1;
    }
    acc / 2.0
}

/// Area centroid of a simple polygon; falls back to the vertex mean for
/// degenerate (zero-area) input.
pub fn polygon_centroid(poly: &[[f64; 2]]) -> [f64; 2] {
    let a = polygon_area(poly);
    if a.abs() < 1e-300 {
        let n = poly.len() as f64;
        let (sx, sy) = poly.iter().fold((0.0, 0.0), |(sx, sy), v| (sx + v[0], sy + v[1]));
        return [sx / n, sy / n];
    }
    let n = poly.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let [x1, y1] = poly[i];
        let [x2, y2] = poly[(i + 1) % n];
        let cross = x1 * y2 - x2 * y1;
        cx += (x1 + x2) * cross;
        cy += (y1 + y2) * cross;
    }
    [cx / (6.0 * a), cy / (6.0 * a)]
}

/// Ray-casting point-in-polygon test.
pub fn point_in_polygon(x: f64, y: f64, poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let [xi, yi] = poly[i];
        let [xj, yj] = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn segments_properly_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    fn orient(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    }
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn polygon_is_simple(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // skip adjacent edges (shared vertex)
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            if segments_properly_intersect(
                poly[i],
                poly[(i + 1) % n],
                poly[j],
                poly[(j + 1) % n],
            ) {
                return false;
            }
        }
    }
    true
}

/// Clip a polygon by the half-plane `keep(p) == true` along one rectangle
/// side (Sutherland-Hodgman step). `cross` returns the intersection of an
/// edge with the boundary line.
fn clip_halfplane(
    poly: &[[f64; 2]],
    keep: impl Fn(&[f64; 2]) -> bool,
    cross: impl Fn(&[f64; 2], &[f64; 2]) -> [f64; 2],
) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 4);
    let n = poly.len();
    for i in 0..n {
        let cur = poly[i];
        let prev = poly[(i + n - 1) % n];
        let cur_in = keep(&cur);
        let prev_in = keep(&prev);
        if cur_in {
            if !prev_in {
                out.push(cross(&prev, &cur));
            }
            out.push(cur);
        } else if prev_in {
            out.push(cross(&prev, &cur));
        }
    }
    out
}

/// Intersection of a simple polygon with an axis-aligned rectangle,
/// returned as a polygon (possibly empty). Sutherland-Hodgman against the
/// four rectangle half-planes; for concave subjects disconnected pieces are
/// joined by zero-width bridges, which leaves the area correct.
pub fn clip_polygon_to_rect(
    poly: &[[f64; 2]],
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
) -> Vec<[f64; 2]> {
    let lerp = |a: &[f64; 2], b: &[f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let mut p = poly.to_vec();
    p = clip_halfplane(&p, |v| v[0] >= x_lo, |a, b| lerp(a, b, (x_lo - a[0]) / (b[0] - a[0])));
    if p.is_empty() {
        return p;
    }
    p = clip_halfplane(&p, |v| v[0] <= x_hi, |a, b| lerp(a, b, (x_hi - a[0]) / (b[0] - a[0])));
    if p.is_empty() {
        return p;
    }
    p = clip_halfplane(&p, |v| v[1] >= y_lo, |a, b| lerp(a, b, (y_lo - a[1]) / (b[1] - a[1])));
    if p.is_empty() {
        return p;
    }
    p = clip_halfplane(&p, |v| v[1] <= y_hi, |a, b| lerp(a, b, (y_hi - a[1]) / (b[1] - a[1])));
    p
}

/// One spatial cell: lattice rectangle, clipped area, and representative
/// centroid (of the clipped part when a boundary polygon applies).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialCell {
    pub centroid: [f64; 2],
    pub area: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

/// One circular time cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeCell {
    /// Centroid angle in `[0, 2*pi)`.
    pub centroid: f64,
    pub width: f64,
    /// Whether the centroid lies in the evening window `[4*pi/3, 2*pi)`.
    pub evening: bool,
}

/// Rejected input event with the reason it was dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectedEvent {
    pub index: usize,
    pub reason: String,
}

/// Spatial cells x circular time cells with per-weekday-class counts.
///
/// Flat indexing is fixed project-wide: space-time cell `j = js * M + jt`
/// (time fastest), count slot `j * W + w`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub region: Region,
    pub nx: usize,
    pub ny: usize,
    pub spatial: Vec<SpatialCell>,
    pub time: Vec<TimeCell>,
    /// Number of weekday classes W (7 for Sun..Sat marks, 1 for pooled).
    pub weekday_classes: usize,
    /// Counts, indexed `[(js * M + jt) * W + w]`.
    pub counts: Vec<u32>,
    /// Lattice slot (iy * nx + ix) -> spatial cell index, None for dropped
    /// (zero-area) cells.
    lattice: Vec<Option<usize>>,
}

impl SpaceTimeGrid {
    /// Number of spatial cells N.
    pub fn n_spatial(&self) -> usize {
        self.spatial.len()
    }

    /// Number of time cells M.
    pub fn n_time(&self) -> usize {
        self.time.len()
    }

    /// Number of space-time cells J = N * M.
    pub fn n_cells(&self) -> usize {
        self.spatial.len() * self.time.len()
    }

    pub fn count(&self, js: usize, jt: usize, w: usize) -> u32 {
        self.counts[(js * self.time.len() + jt) * self.weekday_classes + w]
    }

    pub fn count_total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Cell volume Delta = spatial area x time width (km^2 * radians);
    /// constant across weekday classes.
    pub fn cell_volume(&self, js: usize, jt: usize) -> f64 {
        self.spatial[js].area * self.time[jt].width
    }

    /// Total clipped spatial area |D|.
    pub fn domain_area(&self) -> f64 {
        self.spatial.iter().map(|c| c.area).sum()
    }

    /// Largest centroid-to-centroid distance between spatial cells.
    pub fn max_centroid_distance(&self) -> f64 {
        let mut best: f64 = 0.0;
        for a in &self.spatial {
            for b in &self.spatial {
                let d = ((a.centroid[0] - b.centroid[0]).powi(2)
                    + (a.centroid[1] - b.centroid[1]).powi(2))
                .sqrt();
                best = best.max(d);
            }
        }
        best
    }

    /// Spatial cell containing (x, y), honoring half-open cell edges
    /// (boundary points go to the larger index).
    pub fn spatial_index(&self, x: f64, y: f64) -> Option<usize> {
        if !self.region.contains(x, y) {
            return None;
        }
        let dx = (self.region.x_max - self.region.x_min) / self.nx as f64;
        let dy = (self.region.y_max - self.region.y_min) / self.ny as f64;
        let ix = (((x - self.region.x_min) / dx).floor() as usize).min(self.nx - 1);
        let iy = (((y - self.region.y_min) / dy).floor() as usize).min(self.ny - 1);
        self.lattice[iy * self.nx + ix]
    }

    /// Time cell containing an angle in `[0, 2*pi)`.
    pub fn time_index(&self, angle: f64) -> usize {
        let m = self.time.len();
        ((angle / TAU * m as f64).floor() as usize).min(m - 1)
    }

    /// Same geometry with a replacement count tensor.
    pub fn with_counts(&self, counts: Vec<u32>) -> Result<SpaceTimeGrid> {
        if counts.len() != self.counts.len() {
            return Err(Error::Input(format!(
                "count tensor length {} does not match grid ({})",
                counts.len(),
                self.counts.len()
            )));
        }
        Ok(SpaceTimeGrid {
            counts,
            ..self.clone()
        })
    }

    /// Increment the count for one event; `Err` when the location falls
    /// outside the region (or in a dropped cell).
    fn bin_event(&mut self, ev: &EventRecord, w_index: usize) -> std::result::Result<(), String> {
        let js = self
            .spatial_index(ev.easting, ev.northing)
            .ok_or_else(|| format!("location ({}, {}) outside region", ev.easting, ev.northing))?;
        let jt = self.time_index(ev.clock_angle);
        let m = self.time.len();
        self.counts[(js * m + jt) * self.weekday_classes + w_index] += 1;
        Ok(())
    }
}

/// Build the space x circular-time grid and bin events into it.
///
/// The spatial lattice is nx x ny axis-aligned rectangles over the region
/// rectangle, intersected with the boundary polygon when present: cells with
/// zero intersection area are dropped, partial cells keep their clipped area
/// and the centroid of the clipped part. Time cells are `n_time` equal-width
/// arcs starting at angle 0 (02:00).
///
/// Events that fail region membership are reported, not silently dropped.
pub fn build_grid(
    region: &Region,
    nx: usize,
    ny: usize,
    n_time: usize,
    weekday_classes: usize,
    events: &[EventRecord],
) -> Result<(SpaceTimeGrid, Vec<RejectedEvent>)> {
    if nx < 1 || ny < 1 || n_time < 1 {
        return Err(Error::Input("grid dimensions must be >= 1".into()));
    }
    if weekday_classes != 1 && weekday_classes != 7 {
        return Err(Error::Input(format!(
            "weekday_classes must be 1 or 7, got {weekday_classes}"
        )));
    }
    region.validate()?;

    let dx = (region.x_max - region.x_min) / nx as f64;
    let dy = (region.y_max - region.y_min) / ny as f64;

    let mut spatial = Vec::new();
    let mut lattice = vec![None; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let x_lo = region.x_min + ix as f64 * dx;
            let x_hi = region.x_min + (ix + 1) as f64 * dx;
            let y_lo = region.y_min + iy as f64 * dy;
            let y_hi = region.y_min + (iy + 1) as f64 * dy;
            let (area, centroid) = match &region.boundary {
                None => (dx * dy, [(x_lo + x_hi) / 2.0, (y_lo + y_hi) / 2.0]),
                Some(poly) => {
                    let clipped = clip_polygon_to_rect(poly, x_lo, x_hi, y_lo, y_hi);
                    if clipped.len() < 3 {
                        continue;
                    }
                    let a = polygon_area(&clipped).abs();
                    if a <= 1e-12 * dx * dy {
                        continue;
                    }
                    (a, polygon_centroid(&clipped))
                }
            };
            lattice[iy * nx + ix] = Some(spatial.len());
            spatial.push(SpatialCell {
                centroid,
                area,
                x_lo,
                x_hi,
                y_lo,
                y_hi,
            });
        }
    }
    if spatial.is_empty() {
        return Err(Error::Input(
            "no spatial cell intersects the boundary polygon".into(),
        ));
    }

    let width = TAU / n_time as f64;
    let time: Vec<TimeCell> = (0..n_time)
        .map(|k| {
            let centroid = (k as f64 + 0.5) * width;
            TimeCell {
                centroid,
                width,
                evening: centroid >= EVENING_START,
            }
        })
        .collect();

    let mut grid = SpaceTimeGrid {
        region: region.clone(),
        nx,
        ny,
        counts: vec![0; spatial.len() * n_time * weekday_classes],
        spatial,
        time,
        weekday_classes,
        lattice,
    };

    let mut rejected = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        let w = if weekday_classes == 1 {
            0
        } else {
            ev.weekday.index()
        };
        if let Err(reason) = grid.bin_event(ev, w) {
            rejected.push(RejectedEvent { index: i, reason });
        }
    }
    Ok((grid, rejected))
}
