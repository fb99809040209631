//! Session boundaries. A session opens on the patient's first prompt or
//! upload and ends once it has been idle past the configured timeout. Expiry
//! is evaluated lazily: a stale open session is closed (with `ended_at` set
//! to its last activity) the next time the patient starts practising.

use chrono::{DateTime, Duration, Utc};
use therapy_core::api::{SessionMode, SessionRecord};

use crate::new_id;
use crate::store::{Db, Op};

pub fn is_expired(s: &SessionRecord, now: DateTime<Utc>, idle: Duration) -> bool {
    s.ended_at.is_some() || now - s.last_activity > idle
}

/// The session as a reader should see it at `now`.
pub fn effective(s: &SessionRecord, now: DateTime<Utc>, idle: Duration) -> SessionRecord {
    let mut s = s.clone();
    if s.ended_at.is_none() && now - s.last_activity > idle {
        s.ended_at = Some(s.last_activity);
    }
    s
}

pub fn active<'a>(db: &'a Db, patient_id: &str, now: DateTime<Utc>, idle: Duration) -> Option<&'a SessionRecord> {
    db.sessions_of(patient_id)
        .into_iter()
        .rev()
        .find(|s| !is_expired(s, now, idle))
}

/// Returns the patient's active session, opening one when there is none.
/// The ops close any lapsed sessions and record a newly opened one; they are
/// empty when an active session already exists.
pub fn open_or_current(
    db: &Db,
    patient_id: &str,
    mode: SessionMode,
    now: DateTime<Utc>,
    idle: Duration,
) -> (SessionRecord, Vec<Op>) {
    if let Some(s) = active(db, patient_id, now, idle) {
        return (s.clone(), Vec::new());
    }
    let mut ops: Vec<Op> = db
        .sessions_of(patient_id)
        .into_iter()
        .filter(|s| s.ended_at.is_none())
        .map(|s| Op::Session(effective(s, now, idle)))
        .collect();
    let session = SessionRecord {
        id: new_id(),
        patient_id: patient_id.to_owned(),
        mode,
        started_at: now,
        last_activity: now,
        ended_at: None,
        entries: Vec::new(),
        total_practice_seconds: 0.0,
    };
    ops.push(Op::Session(session.clone()));
    (session, ops)
}
