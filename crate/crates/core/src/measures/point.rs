use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of R^n with finite coordinates.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("point has no coordinates".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate {bad}")));
        }
        Ok(Point(coords))
    }

    /// Builds a point without the finiteness check. Callers guarantee finite input.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn scalar(x: f64) -> Self {
        Point(vec![x])
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn key(&self) -> PointKey {
        PointKey::of(&self.0)
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::scalar(x)
    }
}

/// Hashable identity of a point under exact coordinate equality (`-0.0 == 0.0`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PointKey(Vec<u64>);

impl PointKey {
    pub fn of(coords: &[f64]) -> Self {
        PointKey(
            coords
                .iter()
                .map(|&c| if c == 0.0 { 0u64 } else { c.to_bits() })
                .collect(),
        )
    }
}

/// Index from points to their position in an ordered list.
#[derive(Clone, Debug, Default)]
pub struct PointIndex {
    map: HashMap<PointKey, usize>,
}

impl PointIndex {
    /// Builds the index; on a repeated point returns the pair of clashing positions.
    pub fn build<'a, I>(points: I) -> std::result::Result<Self, (usize, usize)>
    where
        I: IntoIterator<Item = &'a Point>,
    {
        let mut map = HashMap::new();
        for (i, p) in points.into_iter().enumerate() {
            if let Some(&j) = map.get(&p.key()) {
                return Err((j, i));
            }
            map.insert(p.key(), i);
        }
        Ok(PointIndex { map })
    }

    pub fn get(&self, coords: &[f64]) -> Option<usize> {
        self.map.get(&PointKey::of(coords)).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// Ordered map from points to values with exact-equality lookup.
///
/// Potentials, gamma fields and sampled functions are all stored this way.
/// Serializes as `{"points": [...], "values": [...]}` in insertion order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawPointMap<V>", into = "RawPointMap<V>")]
pub struct PointMap<V: Clone> {
    points: Vec<Point>,
    values: Vec<V>,
    index: PointIndex,
}

#[derive(Serialize, Deserialize)]
struct RawPointMap<V> {
    points: Vec<Point>,
    values: Vec<V>,
}

impl<V: Clone> TryFrom<RawPointMap<V>> for PointMap<V> {
    type Error = Error;

    fn try_from(raw: RawPointMap<V>) -> Result<Self> {
        PointMap::new(raw.points, raw.values)
    }
}

impl<V: Clone> From<PointMap<V>> for RawPointMap<V> {
    fn from(map: PointMap<V>) -> Self {
        RawPointMap {
            points: map.points,
            values: map.values,
        }
    }
}

impl<V: Clone> PointMap<V> {
    pub fn new(points: Vec<Point>, values: Vec<V>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::Invalid(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        let index = PointIndex::build(&points)
            .map_err(|(first, second)| Error::DuplicatePoint { first, second })?;
        Ok(PointMap {
            points,
            values,
            index,
        })
    }

    pub fn from_fn<F: FnMut(&Point) -> V>(points: &[Point], mut f: F) -> Result<Self> {
        let values = points.iter().map(&mut f).collect();
        PointMap::new(points.to_vec(), values)
    }

    pub fn get(&self, p: &[f64]) -> Option<&V> {
        self.index.get(p).map(|i| &self.values[i])
    }

    pub fn try_get(&self, p: &[f64]) -> Result<&V> {
        self.get(p).ok_or_else(|| Error::MissingValue(p.to_vec()))
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, &V)> {
        self.points.iter().zip(&self.values)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn map_values<W: Clone, F: FnMut(&V) -> W>(&self, f: F) -> PointMap<W> {
        PointMap {
            points: self.points.clone(),
            values: self.values.iter().map(f).collect(),
            index: self.index.clone(),
        }
    }
}

impl PointMap<f64> {
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
