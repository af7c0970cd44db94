//! Group coordination: one weight in `[0, 1]` per element of a group, and
//! the start time `delay + weight · offset` it induces.
//!
//! Spatial parameters are stored relative to the viewBox (`[0, 1]²`) and
//! mapped to user units when weights are evaluated.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::document::{DocumentError, Selector, VectorDocument};
use crate::geom::{closest_param_on_segment, Point};
use crate::Millis;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "kebab-case"))]
pub enum Direction {
    #[default]
    Ascending,
    Descending,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "kebab-case"))]
pub enum DataBasis {
    #[default]
    Rank,
    Value,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(tag = "mode"))]
pub enum CoordinationScheme {
    /// Order by data value (a `data-*` attribute, or the bounding-box diagonal).
    #[cfg_attr(feature = "serde", serde(rename = "data"))]
    DataCentric {
        direction: Direction,
        basis: DataBasis,
        #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
        attribute: Option<alloc::string::String>,
    },
    /// Distance of each midpoint from a center point.
    #[cfg_attr(feature = "serde", serde(rename = "layout-radius"))]
    LayoutRadius { center: Point },
    /// Clamped projection of each midpoint on a directed line.
    #[cfg_attr(feature = "serde", serde(rename = "layout-projection"))]
    LayoutProjection { start: Point, end: Point },
    /// Arclength progress of the closest point on a sketched path.
    #[cfg_attr(feature = "serde", serde(rename = "layout-sketch"))]
    LayoutSketch { polyline: Vec<Point> },
    /// Rendering (document) order.
    #[cfg_attr(feature = "serde", serde(rename = "layer"))]
    LayerCentric { direction: Direction },
    #[cfg_attr(feature = "serde", serde(rename = "random"))]
    Random {
        #[cfg_attr(feature = "serde", serde(with = "seed_text"))]
        seed: u64,
    },
}

impl Default for CoordinationScheme {
    fn default() -> Self {
        CoordinationScheme::LayerCentric { direction: Direction::Ascending }
    }
}

/// Seeds are written as decimal strings so 64-bit values survive JSON
/// consumers limited to doubles; plain numbers are accepted on input.
#[cfg(feature = "serde")]
mod seed_text {
    use alloc::string::String;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(seed)
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<u64, D::Error> {
        match Raw::deserialize(deserializer)? {
            Raw::Number(n) => Ok(n),
            Raw::Text(s) => s.parse().map_err(|_| de::Error::custom("seed must be an unsigned 64-bit integer")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemeError {
    #[error("projection line start and end coincide")]
    DegenerateLine,
    #[error("sketch polyline needs at least two points")]
    SketchTooShort,
    #[error("sketch polyline has zero length")]
    DegeneratePath,
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("coordinate lies outside the viewBox-relative range [0, 1]")]
    OutOfRange,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoordinationError {
    #[error("group {0} matches no element")]
    EmptyGroup(Selector),
    #[error("invalid coordination scheme: {0}")]
    InvalidScheme(#[from] SchemeError),
    #[error(transparent)]
    Document(#[from] DocumentError),
}

impl CoordinationScheme {
    pub fn mode_name(&self) -> &'static str {
        match self {
            CoordinationScheme::DataCentric { .. } => "data",
            CoordinationScheme::LayoutRadius { .. } => "layout-radius",
            CoordinationScheme::LayoutProjection { .. } => "layout-projection",
            CoordinationScheme::LayoutSketch { .. } => "layout-sketch",
            CoordinationScheme::LayerCentric { .. } => "layer",
            CoordinationScheme::Random { .. } => "random",
        }
    }

    pub fn spatial_points(&self) -> Vec<Point> {
        match self {
            CoordinationScheme::LayoutRadius { center } => alloc::vec![*center],
            CoordinationScheme::LayoutProjection { start, end } => alloc::vec![*start, *end],
            CoordinationScheme::LayoutSketch { polyline } => polyline.clone(),
            _ => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        for p in self.spatial_points() {
            if !p.is_finite() {
                return Err(SchemeError::NonFinite);
            }
            if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
                return Err(SchemeError::OutOfRange);
            }
        }
        match self {
            CoordinationScheme::LayoutProjection { start, end } if start == end => Err(SchemeError::DegenerateLine),
            CoordinationScheme::LayoutSketch { polyline } if polyline.len() < 2 => Err(SchemeError::SketchTooShort),
            CoordinationScheme::LayoutSketch { polyline } if polyline_length(polyline) <= 0.0 => Err(SchemeError::DegeneratePath),
            _ => Ok(()),
        }
    }
}

/// Per-element weights of one group under one scheme.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct WeightAssignment {
    pub group: Selector,
    pub scheme: CoordinationScheme,
    pub weights: BTreeMap<usize, f64>,
}

impl WeightAssignment {
    pub fn weight(&self, element: usize) -> Option<f64> {
        self.weights.get(&element).copied()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.values().copied().fold(0.0, f64::max)
    }
}

/// Min-max normalization; constant input (including a single value) maps
/// to all zeros.
pub fn normalize(raw: &[f64]) -> Vec<f64> {
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if !(span > 0.0) || !span.is_finite() {
        return alloc::vec![0.0; raw.len()];
    }
    raw.iter().map(|&v| ((v - min) / span).clamp(0.0, 1.0)).collect()
}

/// Position of `p` along `start → end`, clamped to `[0, 1]`.
pub fn project_on_line(p: Point, start: Point, end: Point) -> Result<f64, SchemeError> {
    if start == end {
        return Err(SchemeError::DegenerateLine);
    }
    Ok(closest_param_on_segment(p, start, end))
}

pub fn radial_score(p: Point, center: Point) -> f64 {
    p.distance(center)
}

fn polyline_length(polyline: &[Point]) -> f64 {
    polyline.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Arclength fraction of the point on `polyline` closest to `p`. Equidistant
/// candidates resolve to the smallest arclength.
pub fn sketch_progress(p: Point, polyline: &[Point]) -> Result<f64, SchemeError> {
    let total = polyline_length(polyline);
    if polyline.len() < 2 || !(total > 0.0) {
        return Err(SchemeError::DegeneratePath);
    }
    let mut best_distance = f64::INFINITY;
    let mut best_arclength = 0.0;
    let mut walked = 0.0;
    for w in polyline.windows(2) {
        let len = w[0].distance(w[1]);
        if len > 0.0 {
            let t = closest_param_on_segment(p, w[0], w[1]);
            let d = p.distance(w[0].lerp(w[1], t));
            if d < best_distance {
                best_distance = d;
                best_arclength = walked + t * len;
            }
        }
        walked += len;
    }
    Ok((best_arclength / total).clamp(0.0, 1.0))
}

/// SplitMix64 (Steele, Lea & Flood), the generator behind random coordination.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Random weight of the `ordinal`-th member of a group.
pub fn random_weight(seed: u64, ordinal: usize) -> f64 {
    SplitMix64::new(seed ^ ordinal as u64).next_f64()
}

fn directed(values: Vec<f64>, direction: Direction) -> Vec<f64> {
    match direction {
        Direction::Ascending => values,
        Direction::Descending => values.into_iter().map(|v| -v).collect(),
    }
}

/// Ordinal rank of every value (ties keep input order), scaled to `[0, 1]`.
fn rank_scores(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut ranks = alloc::vec![0.0; n];
    if n > 1 {
        for (rank, &i) in order.iter().enumerate() {
            ranks[i] = rank as f64 / (n - 1) as f64;
        }
    }
    ranks
}

/// Computes the weight of every element of `group` under `scheme`.
pub fn assign_weights(doc: &VectorDocument, group: &Selector, scheme: &CoordinationScheme) -> Result<WeightAssignment, CoordinationError> {
    scheme.validate()?;
    let members = doc.select_group(group);
    if members.is_empty() {
        return Err(CoordinationError::EmptyGroup(group.clone()));
    }
    let vb = doc.view_box();
    let midpoints = || members.iter().map(|&i| doc.midpoint(i)).collect::<Result<Vec<_>, _>>();

    let weights = match scheme {
        CoordinationScheme::DataCentric { direction, basis, attribute } => {
            let values = members.iter().map(|&i| doc.data_value(i, attribute.as_deref())).collect::<Result<Vec<_>, _>>()?;
            let values = directed(values, *direction);
            match basis {
                DataBasis::Value => normalize(&values),
                DataBasis::Rank => normalize(&rank_scores(&values)),
            }
        }
        CoordinationScheme::LayoutRadius { center } => {
            let c = vb.from_relative(*center);
            normalize(&midpoints()?.into_iter().map(|p| radial_score(p, c)).collect::<Vec<_>>())
        }
        CoordinationScheme::LayoutProjection { start, end } => {
            let (s, e) = (vb.from_relative(*start), vb.from_relative(*end));
            let raw = midpoints()?.into_iter().map(|p| project_on_line(p, s, e)).collect::<Result<Vec<_>, _>>()?;
            normalize(&raw)
        }
        CoordinationScheme::LayoutSketch { polyline } => {
            let path: Vec<Point> = polyline.iter().map(|&p| vb.from_relative(p)).collect();
            let raw = midpoints()?.into_iter().map(|p| sketch_progress(p, &path)).collect::<Result<Vec<_>, _>>()?;
            normalize(&raw)
        }
        CoordinationScheme::LayerCentric { direction } => {
            let ordinals = (0..members.len()).map(|i| i as f64).collect();
            normalize(&directed(ordinals, *direction))
        }
        CoordinationScheme::Random { seed } => (0..members.len()).map(|i| random_weight(*seed, i)).collect(),
    };

    Ok(WeightAssignment { group: group.clone(), scheme: scheme.clone(), weights: members.into_iter().zip(weights).collect() })
}

/// Start time of an element: `delay + weight · offset`.
pub fn element_start_time(delay: Millis, offset: Millis, weight: f64) -> Millis {
    delay + weight * offset
}
