//! Lenient reader for the clip wire format. Unlike the derived
//! deserializer it keeps going after a bad field, so every problem is
//! reported with the path where it occurred.

use std::fmt;
use std::str::FromStr;

use serde_json::Value;
use sway_core::clip::{validate_structure, Diagnostic, Easing, Keyframe, Property, PropertyTrack, PropertyValue, Rgb};
use sway_core::ClipSpec;

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PathDiagnostic {
    pub path: String,
    #[serde(serialize_with = "serialize_display")]
    pub diagnostic: Diagnostic,
}

pub(crate) fn serialize_display<S: serde::Serializer>(d: &Diagnostic, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(d)
}

impl fmt::Display for PathDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.diagnostic)
    }
}

struct Reader {
    out: Vec<PathDiagnostic>,
}

impl Reader {
    fn report(&mut self, path: &str, diagnostic: Diagnostic) {
        self.out.push(PathDiagnostic { path: path.to_owned(), diagnostic });
    }

    fn malformed(&mut self, path: &str, what: &str) {
        self.report(path, Diagnostic::Malformed(what.to_owned()));
    }

    fn color(&mut self, v: &Value, path: &str, property: Property, keyframe: usize) -> Option<Rgb> {
        match v {
            Value::String(s) => {
                let parsed = Rgb::from_hex(s).or_else(|| {
                    let c = svgtypes::Color::from_str(s.trim()).ok()?;
                    Some(Rgb::new(c.red, c.green, c.blue))
                });
                if parsed.is_none() {
                    self.malformed(path, &format!("{s:?} is not a color"));
                }
                parsed
            }
            Value::Array(items) if items.len() == 3 => {
                let mut ch = [0u8; 3];
                for (i, item) in items.iter().enumerate() {
                    let Some(n) = item.as_f64() else {
                        self.malformed(&format!("{path}[{i}]"), "color channel must be a number");
                        return None;
                    };
                    if !(0.0..=255.0).contains(&n) || n.fract() != 0.0 {
                        self.report(path, Diagnostic::ColorOutOfRange { property, keyframe, channel: n as i64 });
                        return None;
                    }
                    ch[i] = n as u8;
                }
                Some(Rgb::new(ch[0], ch[1], ch[2]))
            }
            _ => {
                self.malformed(path, "expected a color string or [r, g, b]");
                None
            }
        }
    }

    fn keyframe(&mut self, v: &Value, path: &str, property: Option<Property>, index: usize) -> Option<Keyframe> {
        let Some(obj) = v.as_object() else {
            self.malformed(path, "keyframe must be an object");
            return None;
        };
        let offset = match obj.get("offset").and_then(Value::as_f64) {
            Some(o) => Some(o),
            None => {
                self.malformed(&format!("{path}.offset"), "missing or non-numeric offset");
                None
            }
        };
        let easing = match obj.get("easing") {
            None | Some(Value::Null) => Some(Easing::Linear),
            Some(Value::String(name)) => match Easing::from_name(name) {
                Ok(e) => Some(e),
                Err(_) => {
                    self.report(&format!("{path}.easing"), Diagnostic::UnknownEasing(name.clone()));
                    None
                }
            },
            Some(_) => {
                self.malformed(&format!("{path}.easing"), "easing must be a string");
                None
            }
        };
        let vpath = format!("{path}.value");
        let value = match (obj.get("value"), property) {
            (None, _) => {
                self.malformed(&vpath, "missing value");
                None
            }
            (Some(Value::Number(n)), _) => n.as_f64().map(PropertyValue::Scalar),
            (Some(other), Some(p)) => self.color(other, &vpath, p, index).map(PropertyValue::Color),
            (Some(_), None) => None,
        };
        Some(Keyframe { offset: offset?, value: value?, easing_out: easing? })
    }

    fn track(&mut self, v: &Value, path: &str) -> Option<PropertyTrack> {
        let Some(obj) = v.as_object() else {
            self.malformed(path, "track must be an object");
            return None;
        };
        let property = match obj.get("property") {
            Some(Value::String(name)) => {
                let p = Property::from_name(name);
                if p.is_none() {
                    self.report(&format!("{path}.property"), Diagnostic::UnknownProperty(name.clone()));
                }
                p
            }
            _ => {
                self.malformed(&format!("{path}.property"), "missing property name");
                None
            }
        };
        let Some(keys) = obj.get("keyframes").and_then(Value::as_array) else {
            self.malformed(&format!("{path}.keyframes"), "missing keyframes array");
            return None;
        };
        let before = self.out.len();
        let keyframes: Vec<Keyframe> =
            keys.iter().enumerate().filter_map(|(i, k)| self.keyframe(k, &format!("{path}.keyframes[{i}]"), property, i)).collect();
        if self.out.len() > before {
            return None;
        }
        Some(PropertyTrack::new(property?, keyframes))
    }

    fn clip(&mut self, v: &Value, path: &str) -> Option<ClipSpec> {
        let Some(obj) = v.as_object() else {
            self.malformed(path, "clip must be an object");
            return None;
        };
        let text = |key: &str| obj.get(key).and_then(Value::as_str).unwrap_or("").to_owned();
        let mut clip = ClipSpec::new(text("selector"), text("title"));
        clip.description = text("description");
        clip.looping = match obj.get("loop") {
            None | Some(Value::Null) => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                self.malformed(&format!("{path}.loop"), "loop must be a boolean");
                false
            }
        };
        let before = self.out.len();
        match obj.get("tracks").and_then(Value::as_array) {
            Some(tracks) => {
                for (i, t) in tracks.iter().enumerate() {
                    if let Some(track) = self.track(t, &format!("{path}.tracks[{i}]")) {
                        clip.tracks.push(track);
                    }
                }
            }
            None => self.malformed(&format!("{path}.tracks"), "missing tracks array"),
        }
        let wire_ok = self.out.len() == before;
        for d in validate_structure(&clip) {
            let where_ = match &d {
                Diagnostic::EmptySelector => format!("{path}.selector"),
                Diagnostic::EmptyTitle => format!("{path}.title"),
                Diagnostic::NoTracks if !wire_ok => continue,
                _ => format!("{path}.tracks"),
            };
            self.report(&where_, d);
        }
        (self.out.len() == before).then_some(clip)
    }
}

/// Reads one clip. Any diagnostic rejects the clip.
pub fn clip_from_value(v: &Value, path: &str) -> Result<ClipSpec, Vec<PathDiagnostic>> {
    let mut r = Reader { out: Vec::new() };
    match r.clip(v, path) {
        Some(clip) if r.out.is_empty() => Ok(clip),
        _ => Err(r.out),
    }
}

pub fn clip_from_str(text: &str) -> Result<ClipSpec, Vec<PathDiagnostic>> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| vec![PathDiagnostic { path: String::new(), diagnostic: Diagnostic::Malformed(e.to_string()) }])?;
    clip_from_value(&v, "")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn reads_the_documented_shape() {
        let v = json!({"selector":".petal","title":"Fade","description":"d","loop":false,
            "tracks":[{"property":"opacity","keyframes":[{"offset":0,"value":0,"easing":"linear"},{"offset":1,"value":1}]}]});
        let clip = clip_from_value(&v, "").unwrap();
        assert_eq!(clip.track(Property::Opacity).unwrap().keyframes.len(), 2);
        let derived: ClipSpec = serde_json::from_value(v).unwrap();
        assert_eq!(derived, clip);
    }

    #[test]
    fn colors_accept_hex_names_and_triples() {
        let v = json!({"selector":".p","title":"t","tracks":[{"property":"fill-color","keyframes":[
            {"offset":0,"value":"#fff"},{"offset":0.5,"value":"red"},{"offset":1,"value":[0,128,255]}]}]});
        let clip = clip_from_value(&v, "").unwrap();
        let values: Vec<_> = clip.tracks[0].keyframes.iter().map(|k| k.value.as_color().unwrap()).collect();
        assert_eq!(values, vec![Rgb::new(255, 255, 255), Rgb::new(255, 0, 0), Rgb::new(0, 128, 255)]);
    }

    #[test]
    fn problems_carry_paths() {
        let v = json!({"selector":".p","title":"t","tracks":[
            {"property":"teleport","keyframes":[{"offset":0,"value":0},{"offset":1,"value":1}]},
            {"property":"fill-color","keyframes":[{"offset":0,"value":[0,0,300]},{"offset":1,"value":"#000","easing":"bouncy"}]}]});
        let errs = clip_from_value(&v, "clips[0]").unwrap_err();
        assert_eq!(errs[0].path, "clips[0].tracks[0].property");
        assert_eq!(errs[0].diagnostic, Diagnostic::UnknownProperty("teleport".into()));
        assert!(errs
            .iter()
            .any(|e| e.diagnostic == Diagnostic::ColorOutOfRange { property: Property::FillColor, keyframe: 0, channel: 300 }));
        assert!(errs.iter().any(|e| e.path == "clips[0].tracks[1].keyframes[1].easing"));
    }

    #[test]
    fn structural_checks_run_after_reading() {
        let v = json!({"selector":"","title":"t","tracks":[{"property":"opacity","keyframes":[
            {"offset":0,"value":0},{"offset":0.5,"value":1},{"offset":0.5,"value":1},{"offset":1,"value":0}]}]});
        let errs = clip_from_value(&v, "").unwrap_err();
        let ds: Vec<_> = errs.into_iter().map(|e| e.diagnostic).collect();
        assert_eq!(ds, vec![Diagnostic::EmptySelector, Diagnostic::NonMonotoneOffsets(Property::Opacity)]);
    }
}
