//! Bearer identities: `Authorization: Bearer therapist:<id>` or
//! `Bearer patient:<id>`. There are no passwords; the identifier must name a
//! registered therapist or patient.

use std::sync::Arc;

use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use therapy_core::api::Patient;

use crate::error::ApiError;
use crate::store::Db;
use crate::AppState;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Principal {
    Therapist(String),
    Patient(String),
}

impl Principal {
    pub fn parse(token: &str) -> Option<Self> {
        let (kind, id) = token.split_once(':')?;
        if id.is_empty() {
            return None;
        }
        match kind {
            "therapist" => Some(Principal::Therapist(id.into())),
            "patient" => Some(Principal::Patient(id.into())),
            _ => None,
        }
    }

    pub fn token(&self) -> String {
        match self {
            Principal::Therapist(id) => format!("therapist:{id}"),
            Principal::Patient(id) => format!("patient:{id}"),
        }
    }

    fn exists(&self, db: &Db) -> bool {
        match self {
            Principal::Therapist(id) => db.therapists.contains_key(id),
            Principal::Patient(id) => db.patients.contains_key(id),
        }
    }

    /// The patient themself or their assigned therapist.
    pub fn may_access(&self, patient: &Patient) -> bool {
        match self {
            Principal::Therapist(id) => *id == patient.therapist_id,
            Principal::Patient(id) => *id == patient.id,
        }
    }

    pub fn therapist_id(&self) -> Option<&str> {
        match self {
            Principal::Therapist(id) => Some(id),
            Principal::Patient(_) => None,
        }
    }
}

fn bearer(parts: &Parts) -> Result<Option<&str>, ApiError> {
    let Some(value) = parts.headers.get(AUTHORIZATION) else {
        return Ok(None);
    };
    let value = value
        .to_str()
        .map_err(|_| ApiError::unauthorized("malformed authorization header"))?;
    value
        .strip_prefix("Bearer ")
        .map(|t| Some(t.trim()))
        .ok_or_else(|| ApiError::unauthorized("expected a bearer token"))
}

fn resolve(state: &AppState, token: &str) -> Result<Principal, ApiError> {
    let p = Principal::parse(token).ok_or_else(|| ApiError::unauthorized("unrecognised bearer identity"))?;
    if state.store.read(|db| p.exists(db)) {
        Ok(p)
    } else {
        Err(ApiError::unauthorized("unknown bearer identity"))
    }
}

impl FromRequestParts<Arc<AppState>> for Principal {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Arc<AppState>) -> Result<Self, Self::Rejection> {
        let token = bearer(parts)?.ok_or_else(|| ApiError::unauthorized("missing bearer identity"))?;
        resolve(state, token)
    }
}

/// For endpoints that work without an identity but validate one if sent.
pub struct MaybePrincipal(pub Option<Principal>);

impl FromRequestParts<Arc<AppState>> for MaybePrincipal {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Arc<AppState>) -> Result<Self, Self::Rejection> {
        match bearer(parts)? {
            Some(token) => resolve(state, token).map(|p| MaybePrincipal(Some(p))),
            None => Ok(MaybePrincipal(None)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_tokens() {
        assert_eq!(Principal::parse("therapist:t1"), Some(Principal::Therapist("t1".into())));
        assert_eq!(Principal::parse("patient:p:x"), Some(Principal::Patient("p:x".into())));
        assert_eq!(Principal::parse("admin:x"), None);
        assert_eq!(Principal::parse("patient:"), None);
        assert_eq!(Principal::Patient("a".into()).token(), "patient:a");
    }
}
