use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sway_core::encoding::EncodingManifest;
use sway_core::Version;

use super::model::{version_digest, HistoryEntry, Session};
use crate::canonical::to_canonical_vec;
use crate::svg::{parse_document_with, ParseOptions, SvgError};

const SESSION_FILE: &str = "session.json";
const SOURCE_FILE: &str = "source.svg";
const STYLES_FILE: &str = "styles.css";
const VERSIONS_DIR: &str = "versions";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("session {0} not found")]
    NotFound(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt session file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("stored document no longer parses: {0}")]
    Document(#[from] SvgError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_owned(), source }
}

#[derive(Serialize, Deserialize)]
struct VersionRef {
    id: u64,
    file: String,
    digest: String,
}

/// Index file; it names every other file, so replacing it commits a change.
#[derive(Serialize, Deserialize)]
struct SessionIndex {
    id: String,
    tolerance: f64,
    has_styles: bool,
    manifest: Option<EncodingManifest>,
    history: Vec<HistoryEntry>,
    versions: Vec<VersionRef>,
    active_version: Option<u64>,
}

/// One directory per session under a data root:
///
/// ```text
/// <root>/<id>/session.json
/// <root>/<id>/source.svg
/// <root>/<id>/styles.css
/// <root>/<id>/versions/<n>.<digest>.json
/// ```
///
/// Version files are content-addressed and never rewritten, and
/// `session.json` is replaced last by rename, so an interrupted save leaves
/// the previous state readable.
#[derive(Clone, Debug)]
pub struct SessionStore {
    root: PathBuf,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    let tmp = dir.join(format!(".{}.tmp", path.file_name().and_then(|n| n.to_str()).unwrap_or("file")));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn corrupt(path: &Path, message: impl ToString) -> StoreError {
    StoreError::Corrupt { path: path.to_owned(), message: message.to_string() }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl SessionStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        SessionStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    pub fn exists(&self, id: &str) -> bool {
        valid_id(id) && self.dir(id).join(SESSION_FILE).is_file()
    }

    /// Ids of all committed sessions, sorted.
    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&self.root)(e)),
        };
        let mut ids: Vec<String> = entries.filter_map(|e| e.ok()?.file_name().into_string().ok()).filter(|id| self.exists(id)).collect();
        ids.sort();
        Ok(ids)
    }

    pub fn save(&self, session: &Session) -> Result<(), StoreError> {
        let dir = self.dir(&session.id);
        let versions_dir = dir.join(VERSIONS_DIR);
        fs::create_dir_all(&versions_dir).map_err(io_err(&versions_dir))?;

        let source = dir.join(SOURCE_FILE);
        if fs::read(&source).ok().as_deref() != Some(session.svg_text().as_bytes()) {
            write_atomic(&source, session.svg_text().as_bytes())?;
        }
        if let Some(styles) = &session.styles {
            let path = dir.join(STYLES_FILE);
            if fs::read(&path).ok().as_deref() != Some(styles.as_bytes()) {
                write_atomic(&path, styles.as_bytes())?;
            }
        }

        let mut refs = Vec::with_capacity(session.versions.len());
        for v in &session.versions {
            let digest = version_digest(v);
            let file = format!("{VERSIONS_DIR}/{}.{}.json", v.id, &digest[..12]);
            let path = dir.join(&file);
            if !path.is_file() {
                write_atomic(&path, &to_canonical_vec(v).expect("versions serialize"))?;
            }
            refs.push(VersionRef { id: v.id, file, digest });
        }

        let index = SessionIndex {
            id: session.id.clone(),
            tolerance: session.document.tolerance(),
            has_styles: session.styles.is_some(),
            manifest: session.manifest.clone(),
            history: session.history.clone(),
            versions: refs,
            active_version: session.active_version,
        };
        write_atomic(&dir.join(SESSION_FILE), &to_canonical_vec(&index).expect("index serializes"))?;

        // Superseded version files are garbage once the index is committed.
        let live: BTreeSet<String> = index.versions.iter().map(|r| r.file.clone()).collect();
        if let Ok(entries) = fs::read_dir(&versions_dir) {
            for entry in entries.flatten() {
                let name = format!("{VERSIONS_DIR}/{}", entry.file_name().to_string_lossy());
                if !live.contains(&name) {
                    let _ = fs::remove_file(entry.path());
                }
            }
        }
        Ok(())
    }

    pub fn load(&self, id: &str) -> Result<Session, StoreError> {
        if !self.exists(id) {
            return Err(StoreError::NotFound(id.to_owned()));
        }
        let dir = self.dir(id);
        let index_path = dir.join(SESSION_FILE);
        let bytes = fs::read(&index_path).map_err(io_err(&index_path))?;
        let index: SessionIndex = serde_json::from_slice(&bytes).map_err(|e| corrupt(&index_path, e))?;
        if index.id != id {
            return Err(corrupt(&index_path, format!("index names session {}", index.id)));
        }

        let styles = if index.has_styles {
            let path = dir.join(STYLES_FILE);
            Some(fs::read_to_string(&path).map_err(io_err(&path))?)
        } else {
            None
        };
        let source = dir.join(SOURCE_FILE);
        let text = fs::read_to_string(&source).map_err(io_err(&source))?;
        let document = parse_document_with(&text, &ParseOptions { tolerance: index.tolerance, styles: styles.clone() })?;

        let mut versions = Vec::with_capacity(index.versions.len());
        for r in &index.versions {
            let path = dir.join(&r.file);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            let v: Version = serde_json::from_slice(&bytes).map_err(|e| corrupt(&path, e))?;
            if v.id != r.id || version_digest(&v) != r.digest {
                return Err(corrupt(&path, "digest mismatch"));
            }
            versions.push(v);
        }

        Ok(Session {
            id: index.id,
            document,
            styles,
            manifest: index.manifest,
            history: index.history,
            versions,
            active_version: index.active_version,
        })
    }
}
