use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::ProgramError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    SustainedSound,
    CommonWord,
    Number,
    PhraseStoryRhyme,
}

impl Category {
    /// Intake order used when a program is built without an explicit plan.
    pub const DEFAULT_TEMPLATE: [Category; 4] = [
        Category::SustainedSound,
        Category::CommonWord,
        Category::Number,
        Category::PhraseStoryRhyme,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::SustainedSound => "sustained_sound",
            Category::CommonWord => "common_word",
            Category::Number => "number",
            Category::PhraseStoryRhyme => "phrase_story_rhyme",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordItem {
    pub id: String,
    pub text: String,
    pub category: Category,
    #[serde(default)]
    pub target_sounds: Vec<String>,
    #[serde(default)]
    pub disorder_tags: Vec<String>,
    pub reference_audio_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_image_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass_threshold_override: Option<f64>,
    #[serde(default = "default_language")]
    pub language: String,
}

fn default_language() -> String {
    "en".into()
}

impl WordItem {
    pub fn validate(&self) -> Result<(), ProgramError> {
        if self.id.trim().is_empty() {
            return Err(ProgramError::InvalidDictionary("item id is empty".into()));
        }
        if self.text.trim().is_empty() {
            return Err(ProgramError::InvalidDictionary(format!("item {} has empty text", self.id)));
        }
        if let Some(t) = self.pass_threshold_override {
            if !(0.0..=1.0).contains(&t) {
                return Err(ProgramError::InvalidDictionary(format!(
                    "item {} threshold {t} outside [0, 1]",
                    self.id
                )));
            }
        }
        Ok(())
    }

    pub fn is_tagged(&self, disorder: &str) -> bool {
        self.disorder_tags.iter().any(|t| t == disorder)
    }
}

/// Ordered prompt dictionary. Order matters: programs list items of a stage
/// in dictionary order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dictionary {
    items: Vec<WordItem>,
}

impl Dictionary {
    pub fn new(items: Vec<WordItem>) -> Result<Self, ProgramError> {
        let mut seen = HashSet::new();
        for item in &items {
            item.validate()?;
            if !seen.insert(item.id.clone()) {
                return Err(ProgramError::InvalidDictionary(format!("duplicate item id {}", item.id)));
            }
        }
        Ok(Self { items })
    }

    /// Parses a seed file: a JSON array of word items.
    pub fn from_json(json: &str) -> Result<Self, ProgramError> {
        let items: Vec<WordItem> =
            serde_json::from_str(json).map_err(|e| ProgramError::InvalidDictionary(e.to_string()))?;
        Self::new(items)
    }

    pub fn items(&self) -> &[WordItem] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&WordItem> {
        self.items.iter().find(|i| i.id == id)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Replaces an item with the same id in place or appends a new one.
    pub fn upsert(&mut self, item: WordItem) -> Result<Option<WordItem>, ProgramError> {
        item.validate()?;
        match self.items.iter_mut().find(|i| i.id == item.id) {
            Some(slot) => Ok(Some(std::mem::replace(slot, item))),
            None => {
                self.items.push(item);
                Ok(None)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_file_parses_with_defaults() {
        let d = Dictionary::from_json(
            r#"[{"id":"n1","text":"one","category":"number","disorder_tags":["cleft_palate"],"reference_audio_id":"a"}]"#,
        )
        .unwrap();
        let item = d.get("n1").unwrap();
        assert_eq!(item.category, Category::Number);
        assert_eq!(item.language, "en");
        assert!(item.target_sounds.is_empty());
    }

    #[test]
    fn rejects_duplicates_and_empty_text() {
        let item = |id: &str, text: &str| WordItem {
            id: id.into(),
            text: text.into(),
            category: Category::CommonWord,
            target_sounds: vec![],
            disorder_tags: vec![],
            reference_audio_id: "a".into(),
            prompt_image_id: None,
            pass_threshold_override: None,
            language: "en".into(),
        };
        assert!(Dictionary::new(vec![item("a", "x"), item("a", "y")]).is_err());
        assert!(Dictionary::new(vec![item("a", "  ")]).is_err());
        let mut d = Dictionary::new(vec![item("a", "x")]).unwrap();
        assert!(d.upsert(item("a", "z")).unwrap().is_some());
        assert_eq!(d.get("a").unwrap().text, "z");
        assert_eq!(d.len(), 1);
    }
}
