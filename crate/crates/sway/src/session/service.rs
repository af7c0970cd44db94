use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sway_core::composition::CompositionError;
use sway_core::coordination::{CoordinationError, CoordinationScheme, SchemeError};
use sway_core::encoding::EncodingManifest;
use sway_core::{FrameSnapshot, Millis, Version};

use super::check::{check_version, CheckReport};
use super::model::{HistoryEntry, Role, Session};
use super::store::{SessionStore, StoreError};
use crate::assistant::{generate_version, AssistantError, ClientError, ModelClient, DEFAULT_CONTEXT_BUDGET};
use crate::exporter::{bake_css, emit_runtime_script, export_program, ExportError};
use crate::svg::{parse_document_with, ParseOptions, SvgError};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown version {0}")]
    UnknownVersion(u64),
    #[error("track {ordinal} does not exist (version has {len} tracks)")]
    UnknownTrack { ordinal: usize, len: usize },
    #[error("invalid coordination scheme: {0}")]
    InvalidScheme(SchemeError),
    #[error("invalid timing: {0}")]
    InvalidTiming(CompositionError),
    #[error("a generation is already running for session {0}")]
    BusySession(String),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("context budget of {budget} tokens is too small (need at least {required})")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error("cannot condense document: {0}")]
    Condense(String),
    #[error(transparent)]
    MalformedSvg(#[from] SvgError),
    #[error(transparent)]
    Coordination(#[from] CoordinationError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl ServiceError {
    /// Stable machine-readable name of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "UnknownSession",
            ServiceError::UnknownVersion(_) => "UnknownVersion",
            ServiceError::UnknownTrack { .. } => "UnknownTrack",
            ServiceError::InvalidScheme(_) => "InvalidScheme",
            ServiceError::InvalidTiming(CompositionError::InvalidDelay(_)) => "InvalidDelay",
            ServiceError::InvalidTiming(_) => "InvalidDuration",
            ServiceError::BusySession(_) => "BusySession",
            ServiceError::Client(_) => "ClientError",
            ServiceError::BudgetTooSmall { .. } => "BudgetTooSmall",
            ServiceError::Condense(_) => "CondenseError",
            ServiceError::MalformedSvg(SvgError::MissingViewBox) => "MissingViewBox",
            ServiceError::MalformedSvg(_) => "MalformedSvg",
            ServiceError::Coordination(CoordinationError::EmptyGroup(_)) => "EmptyGroup",
            ServiceError::Coordination(CoordinationError::InvalidScheme(_)) => "InvalidScheme",
            ServiceError::Coordination(CoordinationError::Document(_)) => "DocumentError",
            ServiceError::Export(ExportError::UnbakeableFeature(_)) => "UnbakeableFeature",
            ServiceError::Export(ExportError::EmptyTimeline) => "EmptyTimeline",
            ServiceError::Export(_) => "ExportError",
            ServiceError::Store(_) => "StorageError",
        }
    }
}

impl From<AssistantError> for ServiceError {
    fn from(e: AssistantError) -> Self {
        match e {
            AssistantError::UnknownVersion(id) => ServiceError::UnknownVersion(id),
            AssistantError::BudgetTooSmall { budget, required } => ServiceError::BudgetTooSmall { budget, required },
            AssistantError::Client(c) => ServiceError::Client(c),
            AssistantError::Condense(message) => ServiceError::Condense(message),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFlavor {
    Program,
    Script,
    Baked,
}

impl ExportFlavor {
    pub fn content_type(self) -> &'static str {
        match self {
            ExportFlavor::Program => "application/json",
            ExportFlavor::Script => "text/javascript",
            ExportFlavor::Baked => "image/svg+xml",
        }
    }
}

impl std::str::FromStr for ExportFlavor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "program" => Ok(ExportFlavor::Program),
            "script" => Ok(ExportFlavor::Script),
            "baked" => Ok(ExportFlavor::Baked),
            other => Err(format!("unknown export flavor {other:?} (expected program, script or baked)")),
        }
    }
}

/// Result of one chat request.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MessageOutcome {
    pub entry: HistoryEntry,
    pub version: Option<Version>,
}

struct Slot {
    session: RwLock<Session>,
    generating: AtomicBool,
}

/// Clears the per-session generation flag when dropped.
struct BusyGuard<'a>(&'a AtomicBool);

impl Drop for BusyGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

/// Session operations over a [`SessionStore`]. Sessions are independent;
/// within one session writes are serialized and at most one generation
/// runs at a time.
pub struct SessionService {
    store: SessionStore,
    client: Arc<dyn ModelClient>,
    budget: usize,
    clock: Clock,
    slots: Mutex<HashMap<String, Arc<Slot>>>,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn new_session_id() -> String {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

impl SessionService {
    pub fn new(store: SessionStore, client: Arc<dyn ModelClient>) -> Self {
        SessionService { store, client, budget: DEFAULT_CONTEXT_BUDGET, clock: Arc::new(now_ms), slots: Mutex::new(HashMap::new()) }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_clock(mut self, clock: impl Fn() -> u64 + Send + Sync + 'static) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn client_name(&self) -> &str {
        self.client.name()
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ServiceError> {
        let mut slots = self.slots.lock().expect("slot table poisoned");
        if let Some(slot) = slots.get(id) {
            return Ok(slot.clone());
        }
        let session = match self.store.load(id) {
            Ok(s) => s,
            Err(StoreError::NotFound(_)) => return Err(ServiceError::UnknownSession(id.to_owned())),
            Err(e) => return Err(e.into()),
        };
        let slot = Arc::new(Slot { session: RwLock::new(session), generating: AtomicBool::new(false) });
        slots.insert(id.to_owned(), slot.clone());
        Ok(slot)
    }

    /// Applies `edit` to a copy of the session and commits it only if it
    /// persists.
    fn mutate<T>(&self, id: &str, edit: impl FnOnce(&mut Session) -> Result<(T, bool), ServiceError>) -> Result<T, ServiceError> {
        let slot = self.slot(id)?;
        let mut guard = slot.session.write().expect("session lock poisoned");
        let mut next = guard.clone();
        let (out, changed) = edit(&mut next)?;
        if changed {
            self.store.save(&next)?;
            *guard = next;
        }
        Ok(out)
    }

    fn read<T>(&self, id: &str, f: impl FnOnce(&Session) -> Result<T, ServiceError>) -> Result<T, ServiceError> {
        let slot = self.slot(id)?;
        let guard = slot.session.read().expect("session lock poisoned");
        f(&guard)
    }

    pub fn create_session(&self, svg: &[u8], styles: Option<String>, manifest: Option<EncodingManifest>) -> Result<Session, ServiceError> {
        let text = std::str::from_utf8(svg).map_err(|e| SvgError::MalformedSvg {
            message: format!("document is not UTF-8: {e}"),
            line: 1,
            column: 1,
        })?;
        let document = parse_document_with(text, &ParseOptions { styles: styles.clone(), ..ParseOptions::default() })?;
        let session =
            Session { id: new_session_id(), document, styles, manifest, history: Vec::new(), versions: Vec::new(), active_version: None };
        self.store.save(&session)?;
        let slot = Arc::new(Slot { session: RwLock::new(session.clone()), generating: AtomicBool::new(false) });
        self.slots.lock().expect("slot table poisoned").insert(session.id.clone(), slot);
        Ok(session)
    }

    pub fn session(&self, id: &str) -> Result<Session, ServiceError> {
        self.read(id, |s| Ok(s.clone()))
    }

    pub fn versions(&self, id: &str) -> Result<Vec<Version>, ServiceError> {
        self.read(id, |s| Ok(s.versions.clone()))
    }

    pub fn version(&self, id: &str, version: u64) -> Result<Version, ServiceError> {
        self.read(id, |s| s.version(version).cloned().ok_or(ServiceError::UnknownVersion(version)))
    }

    /// Sends `text` to the assistant. The user entry, any produced version,
    /// and the assistant entry are committed together or not at all. The
    /// model runs without holding the session lock.
    pub fn post_message(
        &self,
        id: &str,
        text: &str,
        base_versions: &[u64],
        screenshot: Option<Vec<u8>>,
    ) -> Result<MessageOutcome, ServiceError> {
        let slot = self.slot(id)?;
        if slot.generating.compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire).is_err() {
            return Err(ServiceError::BusySession(id.to_owned()));
        }
        let _busy = BusyGuard(&slot.generating);

        let snapshot = slot.session.read().expect("session lock poisoned").clone();
        if let Some(&missing) = base_versions.iter().find(|&&v| snapshot.version(v).is_none()) {
            return Err(ServiceError::UnknownVersion(missing));
        }
        let generation = generate_version(&snapshot, self.client.as_ref(), text, base_versions, self.budget, screenshot)?;

        self.mutate(id, |s| {
            let version = generation.version.map(|mut v| {
                // Writes are serialized, but keep ids increasing even if
                // another writer appended versions meanwhile.
                v.id = s.next_version_id();
                v.origin_message = s.history.len() + 1;
                v
            });
            s.history.push(HistoryEntry {
                role: Role::User,
                text: text.to_owned(),
                referred_versions: base_versions.to_vec(),
                produced_version: None,
                timestamp: (self.clock)(),
            });
            let entry = HistoryEntry {
                role: Role::Assistant,
                text: generation.reply.message.clone(),
                referred_versions: base_versions.to_vec(),
                produced_version: version.as_ref().map(|v| v.id),
                timestamp: (self.clock)(),
            };
            s.history.push(entry.clone());
            if let Some(v) = &version {
                s.versions.push(v.clone());
                s.active_version = Some(v.id);
            }
            Ok((MessageOutcome { entry, version }, true))
        })
    }

    fn track_mut(s: &mut Session, version: u64, track: usize) -> Result<&mut sway_core::GroupClip, ServiceError> {
        let v = s.version_mut(version).ok_or(ServiceError::UnknownVersion(version))?;
        let len = v.clips.len();
        v.clips.get_mut(track).ok_or(ServiceError::UnknownTrack { ordinal: track, len })
    }

    /// Replaces a track's coordination and, when given, its offset. Spatial
    /// parameters must already be viewBox-relative.
    pub fn set_coordination(
        &self,
        id: &str,
        version: u64,
        track: usize,
        scheme: CoordinationScheme,
        offset: Option<Millis>,
    ) -> Result<Version, ServiceError> {
        self.mutate(id, |s| {
            let t = Self::track_mut(s, version, track)?;
            scheme.validate().map_err(ServiceError::InvalidScheme)?;
            if let Some(o) = offset {
                if !(o >= 0.0 && o.is_finite()) {
                    return Err(ServiceError::InvalidTiming(CompositionError::InvalidDelay(o)));
                }
            }
            let changed = t.coordination != scheme || offset.is_some_and(|o| o != t.offset);
            t.coordination = scheme;
            if let Some(o) = offset {
                t.offset = o;
            }
            Ok((s.version(version).cloned().expect("version exists"), changed))
        })
    }

    pub fn set_timeline(&self, id: &str, version: u64, track: usize, delay: Millis, duration: Millis) -> Result<Version, ServiceError> {
        self.mutate(id, |s| {
            let v = s.version_mut(version).ok_or(ServiceError::UnknownVersion(version))?;
            let arranged = v.timeline().arrange(track, delay, duration).map_err(|e| match e {
                CompositionError::UnknownTrack { ordinal, len } => ServiceError::UnknownTrack { ordinal, len },
                other => ServiceError::InvalidTiming(other),
            })?;
            let changed = arranged.tracks != v.clips;
            v.clips = arranged.tracks;
            Ok((v.clone(), changed))
        })
    }

    /// Makes `version` the active one; earlier versions stay available.
    pub fn activate(&self, id: &str, version: u64) -> Result<(), ServiceError> {
        self.mutate(id, |s| {
            s.version(version).ok_or(ServiceError::UnknownVersion(version))?;
            let changed = s.active_version != Some(version);
            s.active_version = Some(version);
            Ok(((), changed))
        })
    }

    pub fn check(&self, id: &str, version: u64) -> Result<CheckReport, ServiceError> {
        self.read(id, |s| Ok(check_version(s, s.version(version).ok_or(ServiceError::UnknownVersion(version))?)))
    }

    pub fn preview(&self, id: &str, version: u64, t: Millis) -> Result<FrameSnapshot, ServiceError> {
        self.read(id, |s| {
            let timeline = s.version(version).ok_or(ServiceError::UnknownVersion(version))?.timeline();
            let assignments = timeline.assignments(s.document.model())?;
            Ok(timeline.sample(&assignments, t).expect("assignments match the timeline"))
        })
    }

    pub fn export(&self, id: &str, version: u64, flavor: ExportFlavor) -> Result<String, ServiceError> {
        self.read(id, |s| {
            let timeline = s.version(version).ok_or(ServiceError::UnknownVersion(version))?.timeline();
            Ok(match flavor {
                ExportFlavor::Program => export_program(s.document.model(), &timeline, &s.id)?.to_json(),
                ExportFlavor::Script => emit_runtime_script(&export_program(s.document.model(), &timeline, &s.id)?),
                ExportFlavor::Baked => bake_css(&s.document, &timeline)?.svg,
            })
        })
    }
}
