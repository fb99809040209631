//! Dictionary seed files: a JSON array of dictionary entries. An entry may
//! name its reference recording by `reference_audio_id` (already stored) or
//! by `reference_audio_file`, a WAV path relative to the seed file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use therapy_core::audio::decode_wav;
use therapy_core::program::WordItem;

use crate::store::Op;
use crate::AppState;

#[derive(Debug, Deserialize)]
struct SeedEntry {
    #[serde(default)]
    reference_audio_file: Option<String>,
    #[serde(flatten)]
    rest: serde_json::Map<String, serde_json::Value>,
}

/// Adds the entries whose ids are not yet in the dictionary; returns how
/// many were added.
pub fn load_seed_file(state: &AppState, path: &Path) -> Result<usize> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading seed {}", path.display()))?;
    let entries: Vec<SeedEntry> =
        serde_json::from_str(&text).with_context(|| format!("parsing seed {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let now = state.clock.now();
    let mut ops = Vec::new();
    let mut added = 0;
    for SeedEntry { reference_audio_file, mut rest } in entries {
        if let Some(file) = reference_audio_file {
            let wav_path = base.join(&file);
            let wav = std::fs::read(&wav_path).with_context(|| format!("reading {}", wav_path.display()))?;
            decode_wav(&wav).with_context(|| format!("decoding {}", wav_path.display()))?;
            let id = state.store.blobs().put(&wav)?;
            ops.push(Op::AudioLink {
                id: id.clone(),
                bytes: wav.len() as u64,
                at: now,
                uploader: None,
                patient: None,
            });
            rest.insert("reference_audio_id".into(), id.into());
        }
        let item: WordItem = serde_json::from_value(rest.into()).context("seed entry")?;
        item.validate()?;
        let known_audio = state.store.read(|db| db.audio.contains_key(&item.reference_audio_id))
            || ops.iter().any(|op| matches!(op, Op::AudioLink { id, .. } if *id == item.reference_audio_id));
        if !known_audio {
            bail!("seed item {} references audio {} that is not stored", item.id, item.reference_audio_id);
        }
        let exists = state.store.read(|db| db.dictionary.get(&item.id).is_some())
            || ops.iter().any(|op| matches!(op, Op::Word(w) if w.id == item.id));
        if !exists {
            ops.push(Op::Word(item));
            added += 1;
        }
    }
    state.store.commit(ops)?;
    Ok(added)
}
