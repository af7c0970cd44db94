//! Sessions: a reference SVG with its transcript and versions, persisted on
//! disk and driven through [`SessionService`].

mod check;
mod model;
mod service;
mod store;

pub use check::{check_version, CheckItem, CheckReport};
pub use model::{version_digest, HistoryEntry, Role, Session};
pub use service::{ExportFlavor, MessageOutcome, ServiceError, SessionService};
pub use store::{SessionStore, StoreError};
