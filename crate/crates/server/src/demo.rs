//! Synthetic demo dictionary: source-filter renditions of sustained sounds,
//! common words, the numerals one to ten and a short rhyme, all tagged for
//! cleft-palate practice. The recordings are deterministic, so the same
//! build always produces the same content ids.

use std::path::{Path, PathBuf};

use anyhow::Result;
use serde_json::json;
use therapy_core::audio::encode_wav_pcm16;
use therapy_core::program::{Category, WordItem};
use therapy_core::synth::{vowel, white_noise, Resonator, VowelSpec};

use crate::store::content_id;

pub const DISORDER: &str = "cleft_palate";
const RATE: u32 = 16_000;

#[derive(Debug, Clone)]
pub struct DemoItem {
    pub item: WordItem,
    pub wav: Vec<u8>,
}

/// Vowel targets as (F1, F2).
const AH: (f64, f64) = (640.0, 1190.0);
const A: (f64, f64) = (730.0, 1090.0);
const I: (f64, f64) = (270.0, 2290.0);
const U: (f64, f64) = (300.0, 870.0);
const E: (f64, f64) = (530.0, 1840.0);
const O: (f64, f64) = (570.0, 840.0);
const AE: (f64, f64) = (660.0, 1720.0);
const ER: (f64, f64) = (490.0, 1350.0);

/// A consonant burst (noise centred on `onset.0` Hz lasting `onset.1` s)
/// followed by one or more vowel targets sharing an f0 glide.
struct Syllable {
    onset: Option<(f64, f64)>,
    vowels: &'static [(f64, f64)],
    duration: f64,
    f0: (f64, f64),
}

const fn syl(onset: Option<(f64, f64)>, vowels: &'static [(f64, f64)], duration: f64, f0: (f64, f64)) -> Syllable {
    Syllable {
        onset,
        vowels,
        duration,
        f0,
    }
}

fn render(syllables: &[Syllable], seed: u64) -> Vec<f64> {
    let gap = vec![0.0; (0.06 * RATE as f64) as usize];
    let mut out = gap.clone();
    for (k, s) in syllables.iter().enumerate() {
        if let Some((centre, dur)) = s.onset {
            let noise = white_noise((dur * RATE as f64) as usize, 0.3, seed * 31 + k as u64);
            let shaped = Resonator::new(centre, 900.0, RATE).filter(&noise);
            let peak = shaped.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-9);
            out.extend(shaped.iter().map(|v| 0.25 * v / peak));
        }
        let part = s.duration / s.vowels.len() as f64;
        for (j, &(f1, f2)) in s.vowels.iter().enumerate() {
            let t0 = j as f64 / s.vowels.len() as f64;
            let t1 = (j + 1) as f64 / s.vowels.len() as f64;
            let lerp = |t: f64| s.f0.0 + (s.f0.1 - s.f0.0) * t;
            let mut spec = VowelSpec::steady(0.0, &[(f1, 80.0), (f2, 110.0), (2600.0, 160.0)], part);
            spec.f0_points = vec![(0.0, lerp(t0)), (part, lerp(t1))];
            out.extend(vowel(&spec, RATE));
        }
        out.extend(&gap);
    }
    out
}

fn item(id: &str, text: &str, category: Category, targets: &[&str], syllables: &[Syllable], seed: u64) -> DemoItem {
    let wav = encode_wav_pcm16(&render(syllables, seed), RATE, 1);
    DemoItem {
        item: WordItem {
            id: id.into(),
            text: text.into(),
            category,
            target_sounds: targets.iter().map(|s| s.to_string()).collect(),
            disorder_tags: vec![DISORDER.into()],
            reference_audio_id: content_id(&wav),
            prompt_image_id: None,
            pass_threshold_override: None,
            language: "en".into(),
        },
        wav,
    }
}

const T: Option<(f64, f64)> = Some((4200.0, 0.04));
const D: Option<(f64, f64)> = Some((3200.0, 0.03));
const K: Option<(f64, f64)> = Some((2000.0, 0.05));
const P: Option<(f64, f64)> = Some((900.0, 0.03));
const S: Option<(f64, f64)> = Some((6000.0, 0.12));
const F: Option<(f64, f64)> = Some((5000.0, 0.1));
const TH: Option<(f64, f64)> = Some((5500.0, 0.08));
const B: Option<(f64, f64)> = Some((700.0, 0.02));

/// The numerals one to ten, in order.
pub fn numerals() -> Vec<DemoItem> {
    let words: [(&str, &[&str], Vec<Syllable>); 10] = [
        ("one", &["w", "n"], vec![syl(None, &[U, AH], 0.45, (140.0, 110.0))]),
        ("two", &["t"], vec![syl(T, &[U], 0.4, (150.0, 115.0))]),
        ("three", &["th", "r"], vec![syl(TH, &[ER, I], 0.42, (145.0, 112.0))]),
        ("four", &["f"], vec![syl(F, &[O, ER], 0.45, (142.0, 108.0))]),
        ("five", &["f", "v"], vec![syl(F, &[A, I], 0.5, (148.0, 110.0))]),
        ("six", &["s", "k"], vec![syl(S, &[I], 0.25, (150.0, 125.0)), syl(S, &[], 0.0, (0.0, 0.0))]),
        (
            "seven",
            &["s", "v", "n"],
            vec![syl(S, &[E], 0.25, (150.0, 135.0)), syl(None, &[ER], 0.2, (125.0, 105.0))],
        ),
        ("eight", &["t"], vec![syl(None, &[E, I], 0.35, (145.0, 120.0)), syl(T, &[], 0.0, (0.0, 0.0))]),
        ("nine", &["n"], vec![syl(None, &[A, I], 0.5, (138.0, 104.0))]),
        ("ten", &["t", "n"], vec![syl(T, &[E], 0.4, (152.0, 112.0))]),
    ];
    words
        .into_iter()
        .enumerate()
        .map(|(k, (word, targets, syllables))| {
            item(&format!("num-{word}"), word, Category::Number, targets, &syllables, 100 + k as u64)
        })
        .collect()
}

/// A full four-stage dictionary.
pub fn dictionary() -> Vec<DemoItem> {
    let mut all = vec![
        item("sus-t", "t", Category::SustainedSound, &["t"], &[syl(T, &[AH], 0.6, (130.0, 130.0))], 1),
        item("sus-d", "d", Category::SustainedSound, &["d"], &[syl(D, &[AH], 0.6, (128.0, 128.0))], 2),
        item("sus-k", "k", Category::SustainedSound, &["k"], &[syl(K, &[AH], 0.6, (132.0, 132.0))], 3),
        item("sus-p", "p", Category::SustainedSound, &["p"], &[syl(P, &[AH], 0.6, (126.0, 126.0))], 4),
        item("word-ball", "ball", Category::CommonWord, &["b", "l"], &[syl(B, &[O], 0.45, (140.0, 110.0))], 10),
        item("word-cup", "cup", Category::CommonWord, &["k", "p"], &[syl(K, &[AH], 0.35, (150.0, 120.0)), syl(P, &[], 0.0, (0.0, 0.0))], 11),
        item("word-cat", "cat", Category::CommonWord, &["k", "t"], &[syl(K, &[AE], 0.38, (148.0, 116.0)), syl(T, &[], 0.0, (0.0, 0.0))], 12),
        item("word-dog", "dog", Category::CommonWord, &["d", "g"], &[syl(D, &[O], 0.4, (144.0, 112.0))], 13),
    ];
    all.extend(numerals());
    all.push(item(
        "phrase-pat-a-cake",
        "pat a cake",
        Category::PhraseStoryRhyme,
        &["p", "t", "k"],
        &[
            syl(P, &[AE], 0.22, (160.0, 150.0)),
            syl(T, &[ER], 0.15, (150.0, 140.0)),
            syl(K, &[E, I], 0.4, (165.0, 115.0)),
        ],
        50,
    ));
    all
}

/// Writes `audio/<id>.wav` and `seed.json` under `dir`; returns the seed
/// path, suitable for the `dictionary_seed` setting.
pub fn write_seed(dir: &Path, items: &[DemoItem]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir.join("audio"))?;
    let mut entries = Vec::with_capacity(items.len());
    for d in items {
        let rel = format!("audio/{}.wav", d.item.id);
        std::fs::write(dir.join(&rel), &d.wav)?;
        let mut v = serde_json::to_value(&d.item)?;
        let obj = v.as_object_mut().expect("item serializes to an object");
        obj.remove("reference_audio_id");
        obj.insert("reference_audio_file".into(), json!(rel));
        entries.push(v);
    }
    let seed = dir.join("seed.json");
    std::fs::write(&seed, serde_json::to_string_pretty(&entries)?)?;
    Ok(seed)
}
