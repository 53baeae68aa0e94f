//! Hourly exogenous inputs: PV and wind generation, load and energy price.
//!
//! Profiles are read from (and written to) CSV files with the exact header
//! `timestamp,pv_kw,wt_kw,load_kw,lmp`. Helpers cover outlier cleaning,
//! the calendar-month train/test split and noisy synthetic variants of a
//! nominal profile.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;

pub const CSV_HEADER: [&str; 5] = ["timestamp", "pv_kw", "wt_kw", "load_kw", "lmp"];
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";
pub const HOURS_PER_DAY: usize = 24;

/// One hour of exogenous data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub pv_kw: f64,
    pub wt_kw: f64,
    pub load_kw: f64,
    pub price: f64,
}

impl ProfileRow {
    pub fn rdg_kw(&self) -> f64 {
        self.pv_kw + self.wt_kw
    }
}

/// Which column of a profile an operation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    Pv,
    Wt,
    Load,
    Price,
}

impl Series {
    pub const ALL: [Series; 4] = [Series::Pv, Series::Wt, Series::Load, Series::Price];

    fn non_negative(self) -> bool {
        !matches!(self, Series::Price)
    }
}

/// Hourly PV, wind, load and price sequences.
///
/// Profiles built with [`TimeSeriesProfile::new`] are contiguous: timestamps
/// step by exactly one hour. Outputs of [`split_train_test`] are sequences of
/// whole days and may jump forward at midnight between days.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesProfile {
    timestamps: Vec<NaiveDateTime>,
    pv_kw: Vec<f64>,
    wt_kw: Vec<f64>,
    load_kw: Vec<f64>,
    price: Vec<f64>,
}

impl TimeSeriesProfile {
    pub fn new(
        timestamps: Vec<NaiveDateTime>,
        pv_kw: Vec<f64>,
        wt_kw: Vec<f64>,
        load_kw: Vec<f64>,
        price: Vec<f64>,
    ) -> Result<Self> {
        let profile = Self {
            timestamps,
            pv_kw,
            wt_kw,
            load_kw,
            price,
        };
        profile.validate(false)?;
        Ok(profile)
    }

    /// Builds a profile that may skip from one day's last hour to a later
    /// midnight. Used for day-granular subsets.
    fn from_days(
        timestamps: Vec<NaiveDateTime>,
        pv_kw: Vec<f64>,
        wt_kw: Vec<f64>,
        load_kw: Vec<f64>,
        price: Vec<f64>,
    ) -> Result<Self> {
        let profile = Self {
            timestamps,
            pv_kw,
            wt_kw,
            load_kw,
            price,
        };
        profile.validate(true)?;
        Ok(profile)
    }

    fn validate(&self, allow_day_gaps: bool) -> Result<()> {
        let n = self.timestamps.len();
        for (name, len) in [
            ("pv_kw", self.pv_kw.len()),
            ("wt_kw", self.wt_kw.len()),
            ("load_kw", self.load_kw.len()),
            ("lmp", self.price.len()),
        ] {
            if len != n {
                return Err(Error::Validation {
                    row: len.min(n),
                    message: format!("column {name} has {len} values but there are {n} timestamps"),
                });
            }
        }
        if n < HOURS_PER_DAY {
            return Err(Error::Validation {
                row: n,
                message: format!("profile has {n} rows, at least {HOURS_PER_DAY} required"),
            });
        }
        for i in 0..n {
            let row = i + 1;
            for (name, v) in [
                ("pv_kw", self.pv_kw[i]),
                ("wt_kw", self.wt_kw[i]),
                ("load_kw", self.load_kw[i]),
            ] {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Validation {
                        row,
                        message: format!("{name} must be finite and non-negative, got {v}"),
                    });
                }
            }
            if !self.price[i].is_finite() {
                return Err(Error::Validation {
                    row,
                    message: "lmp must be finite".into(),
                });
            }
            if i > 0 {
                let prev = self.timestamps[i - 1];
                let cur = self.timestamps[i];
                let hourly = cur - prev == Duration::hours(1);
                let day_jump = allow_day_gaps && cur > prev && cur.hour() == 0 && prev.hour() == 23;
                if !hourly && !day_jump {
                    return Err(Error::Validation {
                        row,
                        message: format!("timestamp {cur} does not follow {prev} by one hour"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn pv_kw(&self) -> &[f64] {
        &self.pv_kw
    }

    pub fn wt_kw(&self) -> &[f64] {
        &self.wt_kw
    }

    pub fn load_kw(&self) -> &[f64] {
        &self.load_kw
    }

    pub fn price(&self) -> &[f64] {
        &self.price
    }

    pub fn series(&self, s: Series) -> &[f64] {
        match s {
            Series::Pv => &self.pv_kw,
            Series::Wt => &self.wt_kw,
            Series::Load => &self.load_kw,
            Series::Price => &self.price,
        }
    }

    fn series_mut(&mut self, s: Series) -> &mut Vec<f64> {
        match s {
            Series::Pv => &mut self.pv_kw,
            Series::Wt => &mut self.wt_kw,
            Series::Load => &mut self.load_kw,
            Series::Price => &mut self.price,
        }
    }

    pub fn row(&self, i: usize) -> ProfileRow {
        ProfileRow {
            pv_kw: self.pv_kw[i],
            wt_kw: self.wt_kw[i],
            load_kw: self.load_kw[i],
            price: self.price[i],
        }
    }

    /// Renewable output (PV + wind) at hour `i`.
    pub fn rdg_kw(&self, i: usize) -> f64 {
        self.pv_kw[i] + self.wt_kw[i]
    }

    /// Rows `start..start + len` as a new profile.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let end = start + len;
        if end > self.len() {
            return Err(Error::pre(format!(
                "slice {start}..{end} exceeds profile length {}",
                self.len()
            )));
        }
        Self::from_days(
            self.timestamps[start..end].to_vec(),
            self.pv_kw[start..end].to_vec(),
            self.wt_kw[start..end].to_vec(),
            self.load_kw[start..end].to_vec(),
            self.price[start..end].to_vec(),
        )
    }

    /// Consecutive 24-hour chunks starting at the first row; a trailing
    /// partial day is ignored.
    pub fn days(&self) -> Vec<Self> {
        (0..self.len() / HOURS_PER_DAY)
            .map(|d| {
                self.slice(d * HOURS_PER_DAY, HOURS_PER_DAY)
                    .expect("day slice lies within the profile")
            })
            .collect()
    }

    pub fn num_days(&self) -> usize {
        self.len() / HOURS_PER_DAY
    }

    /// Applies `f` to every value of one series, producing a new profile.
    /// Power series are clamped at zero afterwards.
    pub fn map_series(&self, s: Series, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        let clamp = s.non_negative();
        for (i, v) in out.series_mut(s).iter_mut().enumerate() {
            let nv = f(i, *v);
            *v = if clamp { nv.max(0.0) } else { nv };
        }
        out
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ];
    let s = s.trim();
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Reads a profile CSV from any reader.
pub fn read_csv<R: Read>(reader: R) -> Result<TimeSeriesProfile> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 5];
    for (slot, name) in cols.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema {
                column: name.to_string(),
            })?;
    }

    let mut ts = Vec::new();
    let mut values: [Vec<f64>; 4] = Default::default();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |c: usize| record.get(cols[c]).unwrap_or("");
        let t = parse_timestamp(field(0)).ok_or_else(|| Error::Parse {
            row,
            column: CSV_HEADER[0].into(),
            message: format!("invalid timestamp `{}`", field(0)),
        })?;
        ts.push(t);
        for (k, series) in values.iter_mut().enumerate() {
            let raw = field(k + 1);
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                row,
                column: CSV_HEADER[k + 1].into(),
                message: format!("non-numeric value `{raw}`"),
            })?;
            series.push(v);
        }
    }
    let [pv, wt, load, price] = values;
    TimeSeriesProfile::new(ts, pv, wt, load, price)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<TimeSeriesProfile> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file))
}

pub fn write_csv_to<W: Write>(profile: &TimeSeriesProfile, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for i in 0..profile.len() {
        let r = profile.row(i);
        w.write_record([
            profile.timestamps[i].format(TIMESTAMP_FORMAT).to_string(),
            r.pv_kw.to_string(),
            r.wt_kw.to_string(),
            r.load_kw.to_string(),
            r.price.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_csv(profile: &TimeSeriesProfile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(profile, std::io::BufWriter::new(file))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Replaces points that deviate from the centred rolling median by more than
/// `z_threshold` rolling standard deviations.
///
/// The standard deviation is taken over the window's other points, so an
/// isolated spike cannot widen its own acceptance band. Windows are
/// truncated at the series ends.
pub fn remove_outliers(values: &[f64], z_threshold: f64, window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = values.len();
    let mut out = values.to_vec();
    let mut buf = Vec::with_capacity(window);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        buf.clear();
        buf.extend_from_slice(&values[lo..hi]);
        let med = median(&mut buf);
        let others: Vec<f64> = (lo..hi).filter(|&j| j != i).map(|j| values[j]).collect();
        let sd = std_dev(&others);
        if (values[i] - med).abs() > z_threshold * sd {
            out[i] = med;
        }
    }
    out
}

/// Centred moving average of width 3, truncated at the ends.
pub fn smooth3(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(n);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Outlier replacement followed by width-3 smoothing on every series.
pub fn preprocess(
    profile: &TimeSeriesProfile,
    z_threshold: f64,
    window: usize,
) -> Result<TimeSeriesProfile> {
    if !(z_threshold > 0.0) {
        return Err(Error::pre(format!(
            "z_threshold must be positive, got {z_threshold}"
        )));
    }
    if window < 3 || window % 2 == 0 {
        return Err(Error::pre(format!(
            "window must be odd and >= 3, got {window}"
        )));
    }
    if profile.len() < window {
        return Err(Error::pre(format!(
            "profile of length {} is shorter than the window {window}",
            profile.len()
        )));
    }
    let mut out = profile.clone();
    for s in Series::ALL {
        let cleaned = smooth3(&remove_outliers(profile.series(s), z_threshold, window));
        let clamp = s.non_negative();
        *out.series_mut(s) = cleaned
            .into_iter()
            .map(|v| if clamp { v.max(0.0) } else { v })
            .collect();
    }
    Ok(out)
}

/// Train/test partition of a profile.
#[derive(Debug, Clone)]
pub struct TrainTestSplit {
    pub train: TimeSeriesProfile,
    pub test: TimeSeriesProfile,
}

/// Per calendar month: days 1-21 train, days 22-28 test, days 29-31 dropped.
///
/// Only whole days (all 24 hours present) are kept. The first month must
/// contain days 1 through 28 completely.
pub fn split_train_test(profile: &TimeSeriesProfile) -> Result<TrainTestSplit> {
    let first = profile.timestamps[0];
    let (y0, m0) = (first.year(), first.month());
    let first_month_days = (1..=28u32)
        .filter(|&d| {
            let date = NaiveDate::from_ymd_opt(y0, m0, d).expect("valid day");
            profile
                .timestamps
                .iter()
                .filter(|t| t.date() == date)
                .count()
                == HOURS_PER_DAY
        })
        .count();
    if first_month_days < 28 {
        return Err(Error::pre(format!(
            "profile covers only {first_month_days} complete days of days 1-28 in its first month"
        )));
    }

    let mut hours_per_date = std::collections::BTreeMap::<NaiveDate, usize>::new();
    for t in &profile.timestamps {
        *hours_per_date.entry(t.date()).or_default() += 1;
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, t) in profile.timestamps.iter().enumerate() {
        if hours_per_date[&t.date()] != HOURS_PER_DAY {
            continue;
        }
        match t.day() {
            1..=21 => train.push(i),
            22..=28 => test.push(i),
            _ => {}
        }
    }
    let pick = |idx: &[usize]| {
        TimeSeriesProfile::from_days(
            idx.iter().map(|&i| profile.timestamps[i]).collect(),
            idx.iter().map(|&i| profile.pv_kw[i]).collect(),
            idx.iter().map(|&i| profile.wt_kw[i]).collect(),
            idx.iter().map(|&i| profile.load_kw[i]).collect(),
            idx.iter().map(|&i| profile.price[i]).collect(),
        )
    };
    Ok(TrainTestSplit {
        train: pick(&train)?,
        test: pick(&test)?,
    })
}

/// Multiplicative Gaussian noise: `v -> max(0, v * (1 + noise_frac * xi))`.
pub fn synthesize(
    nominal: &TimeSeriesProfile,
    noise_frac: f64,
    seed: u64,
) -> Result<TimeSeriesProfile> {
    if !(0.0..1.0).contains(&noise_frac) {
        return Err(Error::pre(format!(
            "noise_frac must lie in [0, 1), got {noise_frac}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut out = nominal.clone();
    for s in Series::ALL {
        for v in out.series_mut(s).iter_mut() {
            let xi: f64 = StandardNormal.sample(&mut rng);
            *v = (*v * (1.0 + noise_frac * xi)).max(0.0);
        }
    }
    Ok(out)
}

fn bump(h: f64, centre: f64, width_sq: f64) -> f64 {
    (-(h - centre).powi(2) / width_sq).exp()
}

/// Deterministic nominal day shapes for one microgrid, repeated over `days`
/// days from `start` (midnight). Loads dip slightly on weekends.
pub fn nominal_profile(start: NaiveDate, days: usize) -> Result<TimeSeriesProfile> {
    let n = days * HOURS_PER_DAY;
    let t0 = start.and_hms_opt(0, 0, 0).expect("midnight is valid");
    let mut ts = Vec::with_capacity(n);
    let (mut pv, mut wt, mut load, mut price) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for i in 0..n {
        let t = t0 + Duration::hours(i as i64);
        let h = t.hour() as f64;
        let weekend = matches!(t.weekday(), chrono::Weekday::Sat | chrono::Weekday::Sun);
        let scale = if weekend { 0.9 } else { 1.0 };
        ts.push(t);
        pv.push(if (6.0..=18.0).contains(&h) {
            170.0 * (PI * (h - 6.0) / 12.0).sin().max(0.0)
        } else {
            0.0
        });
        wt.push(55.0 + 20.0 * (2.0 * PI * (h - 2.0) / 24.0).cos());
        load.push(
            scale
                * (200.0 + 60.0 * bump(h, 8.0, 8.0) + 110.0 * bump(h, 19.0, 6.0)
                    - 40.0 * bump(h, 3.0, 8.0)),
        );
        price.push(
            0.10 + 0.08 * bump(h, 8.0, 4.0)
                + 0.22 * bump(h, 19.0, 5.0)
                + 0.04 * bump(h, 13.0, 10.0),
        );
    }
    TimeSeriesProfile::new(ts, pv, wt, load, price)
}

/// Aligned whole days across a set of profiles: `day(d)[p]` is day `d` of
/// profile `p`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DaySet {
    days: Vec<Vec<TimeSeriesProfile>>,
}

impl DaySet {
    /// Cuts every profile into days; the set holds as many days as the
    /// shortest profile.
    pub fn new(profiles: &[TimeSeriesProfile]) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::pre("at least one profile is required"));
        }
        let n = profiles.iter().map(|p| p.num_days()).min().unwrap_or(0);
        let per_profile: Vec<Vec<TimeSeriesProfile>> = profiles.iter().map(|p| p.days()).collect();
        let days = (0..n)
            .map(|d| per_profile.iter().map(|days| days[d].clone()).collect())
            .collect();
        Ok(Self { days })
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn day(&self, d: usize) -> &[TimeSeriesProfile] {
        &self.days[d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[TimeSeriesProfile]> {
        self.days.iter().map(Vec::as_slice)
    }

    /// The first `n` days (all of them if fewer exist).
    pub fn take(&self, n: usize) -> Self {
        Self {
            days: self.days.iter().take(n).cloned().collect(),
        }
    }

    /// All rows of every profile, used for fitting scalers.
    pub fn profiles(&self) -> impl Iterator<Item = &TimeSeriesProfile> {
        self.days.iter().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(days: usize, v: f64) -> TimeSeriesProfile {
        let n = days * 24;
        let t0 = NaiveDate::from_ymd_opt(2023, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        TimeSeriesProfile::new(
            (0..n).map(|i| t0 + Duration::hours(i as i64)).collect(),
            vec![v; n],
            vec![v; n],
            vec![v; n],
            vec![v; n],
        )
        .unwrap()
    }

    fn csv_text(rows: usize, tweak: impl Fn(usize) -> Option<String>) -> String {
        let mut s = String::from("timestamp,pv_kw,wt_kw,load_kw,lmp\n");
        for i in 0..rows {
            let line = tweak(i + 1)
                .unwrap_or_else(|| format!("2023-01-01T{:02}:00:00,10,5,100,0.1", i % 24));
            s.push_str(&line);
            s.push('\n');
        }
        s
    }

    #[test]
    fn loads_well_formed_day() {
        let p = read_csv(csv_text(24, |_| None).as_bytes()).unwrap();
        assert_eq!(p.len(), 24);
        assert_eq!(p.rdg_kw(3), 15.0);
    }

    #[test]
    fn missing_lmp_column_names_it() {
        let text = "timestamp,pv_kw,wt_kw,load_kw\n2023-01-01T00:00:00,1,2,3\n";
        match read_csv(text.as_bytes()) {
            Err(Error::Schema { column }) => assert_eq!(column, "lmp"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_load_cites_row() {
        let text = csv_text(24, |r| {
            (r == 7).then(|| format!("2023-01-01T{:02}:00:00,10,5,-3,0.1", r - 1))
        });
        match read_csv(text.as_bytes()) {
            Err(Error::Validation { row, .. }) => assert_eq!(row, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_is_parse_error() {
        let text = csv_text(24, |r| {
            (r == 4).then(|| format!("2023-01-01T{:02}:00:00,abc,5,3,0.1", r - 1))
        });
        match read_csv(text.as_bytes()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 4);
                assert_eq!(column, "pv_kw");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn broken_spacing_is_rejected() {
        let text = csv_text(24, |r| {
            (r == 10).then(|| "2023-01-01T12:00:00,1,1,1,0.1".into())
        });
        assert!(matches!(
            read_csv(text.as_bytes()),
            Err(Error::Validation { row: 10, .. })
        ));
    }

    #[test]
    fn preprocess_constant_is_identity() {
        let p = constant(2, 50.0);
        assert_eq!(preprocess(&p, 3.0, 5).unwrap(), p);
    }

    #[test]
    fn spike_replaced_by_median() {
        let cleaned = remove_outliers(&[50.0, 50.0, 500.0, 50.0, 50.0], 3.0, 3);
        assert_eq!(cleaned, vec![50.0; 5]);
        assert_eq!(smooth3(&cleaned), vec![50.0; 5]);
    }

    #[test]
    fn preprocess_rejects_even_window() {
        assert!(matches!(
            preprocess(&constant(1, 1.0), 3.0, 2),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            preprocess(&constant(1, 1.0), 0.0, 3),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn split_of_31_day_month() {
        let s = split_train_test(&constant(31, 1.0)).unwrap();
        assert_eq!(s.train.len(), 21 * 24);
        assert_eq!(s.test.len(), 7 * 24);
        assert_eq!(s.test.timestamps()[0].day(), 22);
    }

    #[test]
    fn split_of_28_day_month_partitions() {
        let s = split_train_test(&constant(28, 1.0)).unwrap();
        assert_eq!(s.train.len() + s.test.len(), 672);
        assert_eq!((s.train.len(), s.test.len()), (504, 168));
    }

    #[test]
    fn split_needs_28_days() {
        assert!(split_train_test(&constant(20, 1.0)).is_err());
    }

    #[test]
    fn split_spans_months() {
        // Jan + Feb 2023 = 59 days
        let s = split_train_test(&constant(59, 1.0)).unwrap();
        assert_eq!(s.train.num_days(), 42);
        assert_eq!(s.test.num_days(), 14);
    }

    #[test]
    fn zero_noise_is_identity_and_seed_deterministic() {
        let p = nominal_profile(NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(), 2).unwrap();
        assert_eq!(synthesize(&p, 0.0, 9).unwrap(), p);
        assert_eq!(
            synthesize(&p, 0.2, 9).unwrap(),
            synthesize(&p, 0.2, 9).unwrap()
        );
        assert_ne!(
            synthesize(&p, 0.2, 9).unwrap(),
            synthesize(&p, 0.2, 10).unwrap()
        );
        assert!(synthesize(&p, 1.0, 9).is_err());
    }
}
