//! Resampling of multi-rate channels onto one grid and fusion into a table.
//!
//! Energy (an accumulated Wh quantity) is downsampled by summing, occupancy
//! takes the last snapshot in each window, temperature and humidity are
//! upsampled and time-interpolated, and the daily calendar flag is
//! forward-filled across each day. The fused table covers the intersection
//! of all channel spans and contains no missing cells.

use crate::ingest::{Channel, Point, ValidatedSeries};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Aggregation rule for downsampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agg {
    Sum,
    Mean,
    Last,
}

/// One fully-imputed row of the fused table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedRow {
    pub timestamp: i64,
    pub energy: f64,
    pub occupancy: f64,
    pub temperature: f64,
    pub humidity: f64,
    pub calendar: f64,
}

impl AlignedRow {
    /// Input feature value by column index: occupancy, temperature, humidity,
    /// calendar. Energy is the target and is not part of this ordering.
    pub fn feature(&self, idx: usize) -> f64 {
        match idx {
            0 => self.occupancy,
            1 => self.temperature,
            2 => self.humidity,
            3 => self.calendar,
            _ => panic!("feature index out of range"),
        }
    }
}

pub const FEATURE_NAMES: [&str; 4] = ["occupancy", "temperature", "humidity", "calendar"];

/// The fused table: all channels on one arithmetic timestamp grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedDataset {
    pub grid_interval: i64,
    pub rows: Vec<AlignedRow>,
}

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("native interval {0}s incompatible with target {1}s")]
    IncompatibleInterval(i64, i64),
    #[error("fewer than two known points; cannot interpolate")]
    InsufficientKnownPoints,
    #[error("missing channel: {0}")]
    MissingChannel(Channel),
    #[error("channel spans have empty intersection")]
    EmptyIntersection,
    #[error("malformed fused CSV at line {0}")]
    MalformedFusedCsv(usize),
}

/// Aggregate into windows `[t0 + k*target, t0 + (k+1)*target)`. A window with
/// no present inputs yields a missing point.
pub fn downsample(
    s: &ValidatedSeries,
    target: i64,
    agg: Agg,
) -> Result<ValidatedSeries, AlignError> {
    if target <= 0 || target % s.interval_native != 0 {
        return Err(AlignError::IncompatibleInterval(s.interval_native, target));
    }
    if target == s.interval_native {
        return Ok(s.clone());
    }
    let t0 = s.points[0].0;
    let last_window = (s.points.last().unwrap().0 - t0).div_euclid(target);
    let mut out: Vec<Point> = (0..=last_window).map(|k| (t0 + k * target, None)).collect();

    let mut window_vals: Vec<Vec<f64>> = vec![Vec::new(); out.len()];
    for &(t, v) in &s.points {
        let Some(v) = v else { continue };
        let k = (t - t0).div_euclid(target) as usize;
        window_vals[k].push(v);
    }
    for (k, vals) in window_vals.iter().enumerate() {
        if vals.is_empty() {
            continue;
        }
        out[k].1 = Some(match agg {
            Agg::Sum => vals.iter().sum(),
            Agg::Mean => vals.iter().sum::<f64>() / vals.len() as f64,
            Agg::Last => *vals.last().unwrap(),
        });
    }
    Ok(ValidatedSeries {
        channel: s.channel,
        unit: s.unit.clone(),
        interval_native: target,
        points: out,
    })
}

/// Insert missing points so the series sits on the finer `target` grid;
/// original points keep their exact timestamps and values.
pub fn upsample(s: &ValidatedSeries, target: i64) -> Result<ValidatedSeries, AlignError> {
    if target <= 0 || s.interval_native % target != 0 {
        return Err(AlignError::IncompatibleInterval(s.interval_native, target));
    }
    if target == s.interval_native || s.points.len() == 1 {
        let mut out = s.clone();
        out.interval_native = target;
        return Ok(out);
    }
    let t0 = s.points[0].0;
    let t_end = s.points.last().unwrap().0;
    let known: HashMap<i64, Option<f64>> = s.points.iter().cloned().collect();
    let mut points = Vec::with_capacity(((t_end - t0) / target + 1) as usize);
    let mut t = t0;
    while t <= t_end {
        points.push((t, known.get(&t).copied().flatten()));
        t += target;
    }
    Ok(ValidatedSeries {
        channel: s.channel,
        unit: s.unit.clone(),
        interval_native: target,
        points,
    })
}

/// Fill missing points linearly with respect to the timestamp; leading and
/// trailing gaps take the nearest known value.
pub fn time_interpolate(s: &ValidatedSeries) -> Result<ValidatedSeries, AlignError> {
    let known: Vec<(i64, f64)> = s
        .points
        .iter()
        .filter_map(|&(t, v)| v.map(|v| (t, v)))
        .collect();
    if known.len() < 2 {
        return Err(AlignError::InsufficientKnownPoints);
    }
    let mut points = s.points.clone();
    let mut seg = 0usize;
    for p in points.iter_mut() {
        if p.1.is_some() {
            continue;
        }
        let t = p.0;
        while seg + 1 < known.len() && known[seg + 1].0 < t {
            seg += 1;
        }
        let filled = if t < known[0].0 {
            known[0].1
        } else if t > known[known.len() - 1].0 {
            known[known.len() - 1].1
        } else {
            let (t0, v0) = known[seg];
            let (t1, v1) = known[seg + 1];
            v0 + (v1 - v0) * (t - t0) as f64 / (t1 - t0) as f64
        };
        p.1 = Some(filled);
    }
    Ok(ValidatedSeries {
        channel: s.channel,
        unit: s.unit.clone(),
        interval_native: s.interval_native,
        points,
    })
}

/// Step-fill missing points with the most recent known value; leading gaps
/// take the first known value. Used for the day-level calendar flag.
fn forward_fill(s: &ValidatedSeries) -> Result<ValidatedSeries, AlignError> {
    let first_known = s
        .points
        .iter()
        .find_map(|&(_, v)| v)
        .ok_or(AlignError::InsufficientKnownPoints)?;
    let mut points = s.points.clone();
    let mut current = first_known;
    for p in points.iter_mut() {
        match p.1 {
            Some(v) => current = v,
            None => p.1 = Some(current),
        }
    }
    Ok(ValidatedSeries {
        channel: s.channel,
        unit: s.unit.clone(),
        interval_native: s.interval_native,
        points,
    })
}

/// Bring one channel to the grid interval using its channel-specific rule.
fn resample_to_grid(s: &ValidatedSeries, grid: i64) -> Result<ValidatedSeries, AlignError> {
    let on_grid = if s.interval_native == grid {
        s.clone()
    } else if grid % s.interval_native == 0 {
        let agg = match s.channel {
            Channel::Energy => Agg::Sum,
            Channel::Occupancy | Channel::Calendar => Agg::Last,
            Channel::Temperature | Channel::Humidity => Agg::Mean,
        };
        downsample(s, grid, agg)?
    } else if s.interval_native % grid == 0 {
        upsample(s, grid)?
    } else {
        return Err(AlignError::IncompatibleInterval(s.interval_native, grid));
    };
    match s.channel {
        Channel::Calendar => forward_fill(&on_grid),
        _ => time_interpolate(&on_grid),
    }
}

/// Fuse all five channels onto `grid_interval`, over the intersection of
/// their spans.
pub fn fuse(
    channels: &HashMap<Channel, ValidatedSeries>,
    grid_interval: i64,
) -> Result<AlignedDataset, AlignError> {
    for ch in Channel::all() {
        if !channels.contains_key(&ch) {
            return Err(AlignError::MissingChannel(ch));
        }
    }
    let mut gridded: HashMap<Channel, ValidatedSeries> = HashMap::new();
    for ch in Channel::all() {
        let mut g = resample_to_grid(&channels[&ch], grid_interval)?;
        // Calendar marks whole days: one stamp covers every grid step of
        // that day, so extend its span to the end of the last marked day.
        if ch == Channel::Calendar {
            let (last_t, last_v) = *g.points.last().unwrap();
            let mut t = last_t + grid_interval;
            while t < last_t - last_t.rem_euclid(86_400) + 86_400 {
                g.points.push((t, last_v));
                t += grid_interval;
            }
        }
        gridded.insert(ch, g);
    }

    let start = gridded
        .values()
        .map(|s| s.points[0].0)
        .max()
        .expect("channels present");
    let end = gridded
        .values()
        .map(|s| s.points.last().unwrap().0)
        .min()
        .expect("channels present");
    if start > end {
        return Err(AlignError::EmptyIntersection);
    }

    let lookup: HashMap<Channel, HashMap<i64, f64>> = gridded
        .iter()
        .map(|(&ch, s)| {
            (
                ch,
                s.points
                    .iter()
                    .filter_map(|&(t, v)| v.map(|v| (t, v)))
                    .collect(),
            )
        })
        .collect();

    let mut rows = Vec::new();
    let mut t = start;
    while t <= end {
        let get = |ch: Channel| lookup[&ch].get(&t).copied();
        match (
            get(Channel::Energy),
            get(Channel::Occupancy),
            get(Channel::Temperature),
            get(Channel::Humidity),
            get(Channel::Calendar),
        ) {
            (Some(energy), Some(occupancy), Some(temperature), Some(humidity), Some(calendar)) => {
                rows.push(AlignedRow {
                    timestamp: t,
                    energy,
                    occupancy,
                    temperature,
                    humidity,
                    calendar,
                });
            }
            // Grids with incommensurate phases never land on a common
            // timestamp; treat that as an empty intersection.
            _ => return Err(AlignError::EmptyIntersection),
        }
        t += grid_interval;
    }
    if rows.is_empty() {
        return Err(AlignError::EmptyIntersection);
    }
    Ok(AlignedDataset {
        grid_interval,
        rows,
    })
}

impl AlignedDataset {
    /// Fused-table CSV: `timestamp,energy_wh,occupancy,temperature_c,humidity,calendar`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("timestamp,energy_wh,occupancy,temperature_c,humidity,calendar\n");
        for r in &self.rows {
            let dt = DateTime::<Utc>::from_timestamp(r.timestamp, 0).expect("valid timestamp");
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                dt.format("%Y-%m-%dT%H:%M:%SZ"),
                r.energy,
                r.occupancy,
                r.temperature,
                r.humidity,
                r.calendar
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, AlignError> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(AlignError::MalformedFusedCsv(idx + 1));
            }
            let ts = DateTime::parse_from_rfc3339(fields[0])
                .map_err(|_| AlignError::MalformedFusedCsv(idx + 1))?
                .with_timezone(&Utc)
                .timestamp();
            let num = |i: usize| -> Result<f64, AlignError> {
                fields[i]
                    .parse::<f64>()
                    .map_err(|_| AlignError::MalformedFusedCsv(idx + 1))
            };
            rows.push(AlignedRow {
                timestamp: ts,
                energy: num(1)?,
                occupancy: num(2)?,
                temperature: num(3)?,
                humidity: num(4)?,
                calendar: num(5)?,
            });
        }
        if rows.len() < 2 {
            return Err(AlignError::EmptyIntersection);
        }
        let grid_interval = rows[1].timestamp - rows[0].timestamp;
        Ok(AlignedDataset {
            grid_interval,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{validate_series, RawSeries};
    use approx::assert_abs_diff_eq;

    fn series(channel: Channel, pts: Vec<Point>) -> ValidatedSeries {
        validate_series(&RawSeries::new(channel, pts)).unwrap()
    }

    #[test]
    fn downsample_sum_and_mean() {
        let pts: Vec<Point> = (0..10).map(|i| (i * 60, Some(1.0))).collect();
        let s = series(Channel::Energy, pts);
        let sum = downsample(&s, 600, Agg::Sum).unwrap();
        assert_eq!(sum.points, vec![(0, Some(10.0))]);
        let mean = downsample(&s, 600, Agg::Mean).unwrap();
        assert_eq!(mean.points, vec![(0, Some(1.0))]);
    }

    #[test]
    fn downsample_empty_window_is_missing() {
        let mut pts: Vec<Point> = (0..10).map(|i| (i * 60, Some(1.0))).collect();
        for p in pts.iter_mut().skip(5) {
            p.1 = None;
        }
        pts.extend((10..20).map(|i| (i * 60, Some(2.0))));
        pts.extend((20..30).map(|i| (i * 60, None)));
        pts.push((30 * 60, Some(1.0)));
        let s = series(Channel::Energy, pts);
        let d = downsample(&s, 600, Agg::Sum).unwrap();
        assert_eq!(d.points[0], (0, Some(5.0)));
        assert_eq!(d.points[1], (600, Some(20.0)));
        assert_eq!(d.points[2], (1200, None));
    }

    #[test]
    fn downsample_incompatible_interval() {
        let s = series(Channel::Energy, vec![(0, Some(1.0)), (600, Some(1.0))]);
        assert_eq!(
            downsample(&s, 900, Agg::Sum),
            Err(AlignError::IncompatibleInterval(600, 900))
        );
    }

    #[test]
    fn upsample_thirty_minute_to_grid() {
        let s = series(
            Channel::Temperature,
            vec![(0, Some(10.0)), (1800, Some(40.0)), (3600, Some(20.0))],
        );
        let u = upsample(&s, 600).unwrap();
        assert_eq!(u.points.len(), 7);
        assert_eq!(u.points[0], (0, Some(10.0)));
        assert_eq!(u.points[1], (600, None));
        assert_eq!(u.points[2], (1200, None));
        assert_eq!(u.points[3], (1800, Some(40.0)));
    }

    #[test]
    fn upsample_identity_and_single_point() {
        let s = series(Channel::Temperature, vec![(0, Some(1.0)), (600, Some(2.0))]);
        assert_eq!(upsample(&s, 600).unwrap().points, s.points);
        let single = ValidatedSeries {
            channel: Channel::Temperature,
            unit: "degC".into(),
            interval_native: 1800,
            points: vec![(0, Some(5.0))],
        };
        assert_eq!(upsample(&single, 600).unwrap().points, vec![(0, Some(5.0))]);
    }

    #[test]
    fn interpolate_interior_and_boundaries() {
        let s = ValidatedSeries {
            channel: Channel::Temperature,
            unit: "degC".into(),
            interval_native: 600,
            points: vec![
                (-600, None),
                (0, Some(10.0)),
                (600, None),
                (1200, None),
                (1800, Some(40.0)),
                (2400, None),
            ],
        };
        let f = time_interpolate(&s).unwrap();
        assert_eq!(f.points[0].1, Some(10.0)); // leading gap: nearest known
        assert_abs_diff_eq!(f.points[2].1.unwrap(), 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.points[3].1.unwrap(), 30.0, epsilon = 1e-12);
        assert_eq!(f.points[4].1, Some(40.0)); // knot unchanged
        assert_eq!(f.points[5].1, Some(40.0)); // trailing gap
    }

    #[test]
    fn interpolate_is_idempotent() {
        let s = ValidatedSeries {
            channel: Channel::Humidity,
            unit: "relative".into(),
            interval_native: 600,
            points: vec![(0, Some(3.0)), (600, None), (1200, Some(9.0)), (1800, None)],
        };
        let once = time_interpolate(&s).unwrap();
        let twice = time_interpolate(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn interpolate_reconstructs_affine_signal() {
        // v(t) = 2 + 0.01 t sampled sparsely must be exact at every grid point.
        let mut pts: Vec<Point> = Vec::new();
        for k in 0..30 {
            let t = k * 600;
            let keep = k % 7 == 0 || k == 29;
            pts.push((t, keep.then(|| 2.0 + 0.01 * t as f64)));
        }
        let s = ValidatedSeries {
            channel: Channel::Temperature,
            unit: "degC".into(),
            interval_native: 600,
            points: pts,
        };
        let f = time_interpolate(&s).unwrap();
        for &(t, v) in &f.points {
            assert_abs_diff_eq!(v.unwrap(), 2.0 + 0.01 * t as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn interpolate_needs_two_known_points() {
        let s = ValidatedSeries {
            channel: Channel::Temperature,
            unit: "degC".into(),
            interval_native: 600,
            points: vec![(0, Some(1.0)), (600, None)],
        };
        assert_eq!(time_interpolate(&s), Err(AlignError::InsufficientKnownPoints));
    }

    #[test]
    fn downsample_sum_conserves_totals() {
        let pts: Vec<Point> = (0..60).map(|i| (i * 60, Some((i % 7) as f64))).collect();
        let total: f64 = pts.iter().filter_map(|p| p.1).sum();
        let s = series(Channel::Energy, pts);
        let d = downsample(&s, 600, Agg::Sum).unwrap();
        let out_total: f64 = d.points.iter().filter_map(|p| p.1).sum();
        assert_abs_diff_eq!(total, out_total, epsilon = 1e-9);
    }

    fn table1_channels(day0: i64) -> HashMap<Channel, ValidatedSeries> {
        // Energy at 1 min summing per 10-minute window to the fixture values.
        let window_sums = [4196.86, 4265.65, 4162.51, 4730.01, 4169.19];
        let mut energy = Vec::new();
        for (w, &sum) in window_sums.iter().enumerate() {
            for m in 0..10 {
                energy.push((day0 + (w as i64 * 10 + m) * 60, Some(sum / 10.0)));
            }
        }
        let occ = [40.0, 56.0, 56.0, 60.0, 61.0];
        let occupancy: Vec<Point> = occ
            .iter()
            .enumerate()
            .map(|(i, &v)| (day0 + i as i64 * 600, Some(v)))
            .collect();
        let temperature: Vec<Point> =
            vec![(day0, Some(11.0)), (day0 + 1800, Some(11.0)), (day0 + 3600, Some(11.0))];
        let humidity: Vec<Point> =
            vec![(day0, Some(100.0)), (day0 + 1800, Some(100.0)), (day0 + 3600, Some(100.0))];
        let calendar: Vec<Point> = vec![
            (day0 - day0.rem_euclid(86_400), Some(0.0)),
            (day0 - day0.rem_euclid(86_400) + 86_400, Some(0.0)),
        ];
        let mut m = HashMap::new();
        m.insert(Channel::Energy, series(Channel::Energy, energy));
        m.insert(Channel::Occupancy, series(Channel::Occupancy, occupancy));
        m.insert(Channel::Temperature, series(Channel::Temperature, temperature));
        m.insert(Channel::Humidity, series(Channel::Humidity, humidity));
        m.insert(Channel::Calendar, series(Channel::Calendar, calendar));
        m
    }

    #[test]
    fn fuse_matches_hostel_fixture_rows() {
        // 2014-02-15T18:50 local read at zero offset.
        let day0 = 1_392_490_200;
        let fused = fuse(&table1_channels(day0), 600).unwrap();
        let expect = [
            (4196.86, 40.0),
            (4265.65, 56.0),
            (4162.51, 56.0),
            (4730.01, 60.0),
            (4169.19, 61.0),
        ];
        assert!(fused.rows.len() >= 5);
        for (i, &(e, o)) in expect.iter().enumerate() {
            let r = fused.rows[i];
            assert_abs_diff_eq!(r.energy, e, epsilon = 1e-9);
            assert_abs_diff_eq!(r.occupancy, o, epsilon = 1e-12);
            assert_abs_diff_eq!(r.temperature, 11.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.humidity, 100.0, epsilon = 1e-12);
            assert_eq!(r.calendar, 0.0);
        }
    }

    #[test]
    fn fuse_output_has_arithmetic_grid_and_no_gaps() {
        let fused = fuse(&table1_channels(1_392_490_200), 600).unwrap();
        for w in fused.rows.windows(2) {
            assert_eq!(w[1].timestamp - w[0].timestamp, 600);
        }
        for r in &fused.rows {
            assert!(r.energy.is_finite() && r.occupancy.is_finite());
            assert!(r.temperature.is_finite() && r.humidity.is_finite());
        }
    }

    #[test]
    fn fuse_missing_channel() {
        let mut m = table1_channels(1_392_490_200);
        m.remove(&Channel::Humidity);
        assert_eq!(fuse(&m, 600), Err(AlignError::MissingChannel(Channel::Humidity)));
    }

    #[test]
    fn fuse_disjoint_spans() {
        let mut m = table1_channels(1_392_490_200);
        let shifted: Vec<Point> = m[&Channel::Occupancy]
            .points
            .iter()
            .map(|&(t, v)| (t + 86_400 * 30, v))
            .collect();
        m.insert(Channel::Occupancy, series(Channel::Occupancy, shifted));
        assert_eq!(fuse(&m, 600), Err(AlignError::EmptyIntersection));
    }

    #[test]
    fn fuse_span_is_intersection() {
        let mut m = table1_channels(1_392_490_200);
        // Drop the first occupancy point: fused span must start 600 s later.
        let trimmed: Vec<Point> = m[&Channel::Occupancy].points[1..].to_vec();
        m.insert(Channel::Occupancy, series(Channel::Occupancy, trimmed));
        let fused = fuse(&m, 600).unwrap();
        assert_eq!(fused.rows[0].timestamp, 1_392_490_200 + 600);
    }

    #[test]
    fn fused_csv_round_trip() {
        let fused = fuse(&table1_channels(1_392_490_200), 600).unwrap();
        let round = AlignedDataset::from_csv(&fused.to_csv()).unwrap();
        assert_eq!(fused.grid_interval, round.grid_interval);
        assert_eq!(fused.rows.len(), round.rows.len());
        for (a, b) in fused.rows.iter().zip(&round.rows) {
            assert_eq!(a.timestamp, b.timestamp);
            assert_abs_diff_eq!(a.energy, b.energy, epsilon = 0.0);
        }
    }
}
