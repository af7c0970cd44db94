//! Global timeline of group clips and frame sampling.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::clip::{GroupClip, Property, PropertyValue};
use crate::coordination::{assign_weights, element_start_time, CoordinationError, WeightAssignment};
use crate::document::VectorDocument;
use crate::Millis;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompositionError {
    #[error("track {ordinal} does not exist (timeline has {len} tracks)")]
    UnknownTrack { ordinal: usize, len: usize },
    #[error("duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("delay must be non-negative and finite, got {0}")]
    InvalidDelay(f64),
    #[error("no weight assignment for track {0}")]
    MissingAssignment(usize),
}

/// Group clips in parallel tracks; later tracks win property conflicts.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Timeline {
    pub tracks: Vec<GroupClip>,
    pub version_id: u64,
}

/// Per-element property state at one instant.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FrameSnapshot {
    pub time: Millis,
    pub values: BTreeMap<usize, BTreeMap<Property, PropertyValue>>,
}

impl FrameSnapshot {
    pub fn value(&self, element: usize, property: Property) -> Option<PropertyValue> {
        self.values.get(&element)?.get(&property).copied()
    }
}

impl Timeline {
    pub fn new(version_id: u64, tracks: Vec<GroupClip>) -> Self {
        Timeline { tracks, version_id }
    }

    /// Copy of the timeline with one track's delay and duration replaced.
    /// Keyframe offsets are normalized, so a new duration rescales the clip.
    pub fn arrange(&self, ordinal: usize, delay: Millis, duration: Millis) -> Result<Timeline, CompositionError> {
        if ordinal >= self.tracks.len() {
            return Err(CompositionError::UnknownTrack { ordinal, len: self.tracks.len() });
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(CompositionError::InvalidDuration(duration));
        }
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(CompositionError::InvalidDelay(delay));
        }
        let mut next = self.clone();
        next.tracks[ordinal].delay = delay;
        next.tracks[ordinal].duration = duration;
        Ok(next)
    }

    /// Weight assignment of every track against `doc`.
    pub fn assignments(&self, doc: &VectorDocument) -> Result<Vec<WeightAssignment>, CoordinationError> {
        self.tracks.iter().map(|t| assign_weights(doc, &t.clip.selector, &t.coordination)).collect()
    }

    fn assignment_for<'a>(&self, ordinal: usize, assignments: &'a [WeightAssignment]) -> Result<&'a WeightAssignment, CompositionError> {
        match assignments.get(ordinal) {
            Some(a) if a.group == self.tracks[ordinal].clip.selector => Ok(a),
            _ => Err(CompositionError::MissingAssignment(ordinal)),
        }
    }

    /// End of the last first pass over all tracks.
    pub fn total_duration(&self, assignments: &[WeightAssignment]) -> Result<Millis, CompositionError> {
        let mut total: Millis = 0.0;
        for (i, track) in self.tracks.iter().enumerate() {
            let a = self.assignment_for(i, assignments)?;
            let end = element_start_time(track.delay, track.offset, a.max_weight()) + track.duration;
            total = total.max(end);
        }
        Ok(total)
    }

    pub fn has_looping_track(&self) -> bool {
        self.tracks.iter().any(|t| t.clip.looping)
    }

    /// Samples every animated element at time `t`.
    pub fn sample(&self, assignments: &[WeightAssignment], t: Millis) -> Result<FrameSnapshot, CompositionError> {
        let mut snapshot = FrameSnapshot { time: t, values: BTreeMap::new() };
        for (i, track) in self.tracks.iter().enumerate() {
            let a = self.assignment_for(i, assignments)?;
            for (&element, &w) in &a.weights {
                let start = element_start_time(track.delay, track.offset, w);
                // Same sum as total_duration, so the terminal frame is exact.
                let local_u = if !track.clip.looping && t >= start + track.duration { 1.0 } else { (t - start) / track.duration };
                let values = track.clip.value_at(local_u);
                snapshot.values.entry(element).or_default().extend(values);
            }
        }
        Ok(snapshot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clip::{ClipSpec, Keyframe, PropertyTrack};
    use crate::coordination::CoordinationScheme;
    use crate::document::{ElementNode, Selector};
    use crate::flatten::{ellipse, DEFAULT_TOLERANCE};
    use crate::geom::{Point, Rect};
    use alloc::string::String;
    use alloc::vec;

    fn s(v: f64) -> PropertyValue {
        PropertyValue::Scalar(v)
    }

    fn doc(n: usize) -> VectorDocument {
        let els = (0..n)
            .map(|i| {
                let mut el = ElementNode::new(i, "circle");
                el.classes.push("dot".into());
                el.outline = vec![ellipse(Point::new(i as f64 * 3.0, 5.0), 1.0, 1.0, DEFAULT_TOLERANCE)];
                el
            })
            .collect();
        VectorDocument::new(Rect::from_origin_size(0.0, 0.0, 100.0, 100.0), els, None, String::new()).unwrap()
    }

    fn fade(delay: f64, duration: f64, offset: f64) -> GroupClip {
        let clip = ClipSpec::new(".dot", "Fade in").with_track(PropertyTrack::between(Property::Opacity, s(0.0), s(1.0)));
        GroupClip { clip, delay, duration, offset, coordination: CoordinationScheme::default() }
    }

    #[test]
    fn arrange_changes_only_target_track() {
        let tl = Timeline::new(1, vec![fade(0.0, 1000.0, 500.0), fade(100.0, 800.0, 0.0)]);
        let moved = tl.arrange(0, 300.0, 1000.0).unwrap();
        assert_eq!(moved.tracks[0].delay, 300.0);
        assert_eq!(moved.tracks[1], tl.tracks[1]);
        assert_eq!(tl.tracks[0].delay, 0.0);
        assert_eq!(tl.arrange(7, 0.0, 10.0), Err(CompositionError::UnknownTrack { ordinal: 7, len: 2 }));
        assert_eq!(tl.arrange(0, 0.0, 0.0), Err(CompositionError::InvalidDuration(0.0)));
        assert_eq!(tl.arrange(0, -1.0, 10.0), Err(CompositionError::InvalidDelay(-1.0)));
    }

    #[test]
    fn halving_duration_doubles_rate() {
        let d = doc(1);
        let tl = Timeline::new(1, vec![fade(0.0, 1000.0, 0.0)]);
        let fast = tl.arrange(0, 0.0, 500.0).unwrap();
        let a = tl.assignments(&d).unwrap();
        assert_eq!(fast.sample(&a, 250.0).unwrap().value(0, Property::Opacity), tl.sample(&a, 500.0).unwrap().value(0, Property::Opacity));
    }

    #[test]
    fn total_duration_examples() {
        let d = doc(3);
        let tl = Timeline::new(1, vec![fade(200.0, 1000.0, 100.0)]);
        assert_eq!(tl.total_duration(&tl.assignments(&d).unwrap()), Ok(1300.0));
        let two = Timeline::new(1, vec![fade(200.0, 1000.0, 100.0), fade(0.0, 400.0, 500.0)]);
        assert_eq!(two.total_duration(&two.assignments(&d).unwrap()), Ok(1300.0));
        assert_eq!(Timeline::default().total_duration(&[]), Ok(0.0));
        assert_eq!(tl.total_duration(&[]), Err(CompositionError::MissingAssignment(0)));
    }

    #[test]
    fn staggered_start_uses_fill_backwards() {
        let d = doc(11);
        let tl = Timeline::new(1, vec![fade(200.0, 1000.0, 100.0)]);
        let a = tl.assignments(&d).unwrap();
        // Element 1 of 11 in layer order has weight 0.1 and starts at 210 ms.
        assert_eq!(a[0].weight(1), Some(0.1));
        assert_eq!(tl.sample(&a, 209.0).unwrap().value(1, Property::Opacity), Some(s(0.0)));
        assert_eq!(tl.sample(&a, 210.0).unwrap().value(1, Property::Opacity), Some(s(0.0)));
        assert_eq!(tl.sample(&a, 710.0).unwrap().value(1, Property::Opacity), Some(s(0.5)));
    }

    #[test]
    fn later_track_wins() {
        let d = doc(2);
        let mut second = fade(0.0, 1000.0, 0.0);
        second.clip.tracks[0] = PropertyTrack::between(Property::Opacity, s(0.3), s(0.3));
        let tl = Timeline::new(1, vec![fade(0.0, 1000.0, 0.0), second]);
        let a = tl.assignments(&d).unwrap();
        assert_eq!(tl.sample(&a, 500.0).unwrap().value(0, Property::Opacity), Some(s(0.3)));
    }

    #[test]
    fn terminal_state_is_steady() {
        let d = doc(5);
        let tl = Timeline::new(1, vec![fade(100.0, 700.0, 300.0)]);
        let a = tl.assignments(&d).unwrap();
        let end = tl.total_duration(&a).unwrap();
        let at_end = tl.sample(&a, end).unwrap().values;
        for t in [end + 1.0, end * 2.0, end * 100.0] {
            assert_eq!(tl.sample(&a, t).unwrap().values, at_end);
        }
    }

    #[test]
    fn looping_tracks_stay_staggered() {
        let d = doc(3);
        let mut tl = Timeline::new(1, vec![fade(0.0, 1000.0, 500.0)]);
        tl.tracks[0].clip.looping = true;
        let a = tl.assignments(&d).unwrap();
        let snap = tl.sample(&a, 2250.0).unwrap();
        assert_eq!(snap.value(0, Property::Opacity), Some(s(0.25)));
        assert_eq!(snap.value(1, Property::Opacity), Some(s(0.0)));
        assert_eq!(snap.value(2, Property::Opacity), Some(s(0.75)));
    }

    #[test]
    fn monotone_keyframes_give_monotone_samples() {
        let d = doc(4);
        let mut clip = fade(50.0, 900.0, 400.0);
        clip.clip.tracks[0] =
            PropertyTrack::new(Property::Opacity, vec![Keyframe::new(0.0, s(0.0)), Keyframe::new(0.3, s(0.2)), Keyframe::new(1.0, s(1.0))]);
        let tl = Timeline::new(1, vec![clip]);
        let a = tl.assignments(&d).unwrap();
        let mut prev = [f64::NEG_INFINITY; 4];
        for step in 0..=200 {
            let snap = tl.sample(&a, step as f64 * 10.0).unwrap();
            for (e, p) in prev.iter_mut().enumerate() {
                let v = snap.value(e, Property::Opacity).unwrap().as_scalar().unwrap();
                assert!(v >= *p);
                *p = v;
            }
        }
    }

    #[test]
    fn mismatched_assignment_is_missing() {
        let d = doc(2);
        let tl = Timeline::new(1, vec![fade(0.0, 1000.0, 0.0)]);
        let mut a = tl.assignments(&d).unwrap();
        a[0].group = Selector::from(".other");
        assert_eq!(tl.sample(&a, 0.0), Err(CompositionError::MissingAssignment(0)));
    }
}
