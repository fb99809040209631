//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero when any criterion fails.

mod common;

use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use therapy_client::{Client, Method, StatusCode};
use therapy_core::api::{NewMessage, ProgramEditRequest};
use therapy_core::audio::AudioBuffer;
use therapy_core::compare::{compare_utterances, dtw_align, pitch_discontinuities, ComparisonProfile, LocalDistance};
use therapy_core::dsp::spectrum::SpectrumAnalyzer;
use therapy_core::dsp::{
    extract_features, frame_signal, jitter, pitch_contour, pitch_periods, shimmer, spectral_stats, AnalysisConfig,
    PitchConfig, UtteranceFeatures, WindowKind,
};
use therapy_core::program::{
    build_program, record_attempt, Category, Decision, Dictionary, ProgramEdit, ProgramSettings, ProgramState,
    ProgramStatus, TherapyProgram, WordItem,
};
use therapy_core::synth::{self, VowelSpec};
use therapy_server::demo;

use common::{registration, seed, Setup, TestServer};

const RATE: u32 = 16_000;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn buffer(samples: Vec<f64>) -> AudioBuffer {
    AudioBuffer::new(samples, RATE)
}

fn features(samples: Vec<f64>) -> UtteranceFeatures {
    extract_features(&buffer(samples), &AnalysisConfig::default()).expect("analysable signal")
}

fn pitch_accuracy() -> Outcome {
    let started = Instant::now();
    let cfg = PitchConfig::default();
    let (mut ok, mut total, mut worst) = (0, 0, 0.0f64);
    let mut failures = Vec::new();
    for f in (100..=600).step_by(25) {
        let f = f as f64;
        total += 1;
        let buf = buffer(synth::tone(f, 0.5, 1.0, RATE));
        let frames = frame_signal(&buf, 25.0, 10.0, WindowKind::Hamming).unwrap();
        let contour = pitch_contour(&frames, &cfg).unwrap();
        let n = contour.frames.len();
        let mut tone_ok = true;
        for fr in &contour.frames[1..n - 1] {
            match fr.f0 {
                Some(est) => {
                    worst = worst.max((est - f).abs());
                    tone_ok &= (est - f).abs() <= 2.0;
                }
                None => tone_ok = false,
            }
        }
        if tone_ok {
            ok += 1;
        } else {
            failures.push(f);
        }
    }
    let elapsed = started.elapsed();
    outcome(
        "pitch_accuracy",
        ok == total && elapsed < Duration::from_secs(10),
        format!(
            "{ok}/{total} tones within 2 Hz on every interior frame, max error {worst:.3} Hz, {:.2} s{}",
            elapsed.as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!(", failed {failures:?}") }
        ),
    )
}

fn formant_accuracy() -> Outcome {
    let mut ok = 0;
    let mut worst = 0.0f64;
    for k in 0..20 {
        let f1 = 300.0 + 600.0 * k as f64 / 19.0;
        let f2 = (900.0 + 1500.0 * ((7 * k) % 20) as f64 / 19.0).max(f1 + 250.0);
        let f0 = 110.0 + 5.0 * k as f64;
        let spec = VowelSpec::steady(f0, &[(f1, 80.0), (f2, 90.0)], 0.5);
        let feat = features(synth::vowel(&spec, RATE));
        let Some(m1) = feat.mean_f1 else { continue };
        let second: Vec<f64> = feat.formant_tracks.iter().filter_map(|t| t.get(1).map(|f| f.frequency)).collect();
        if second.is_empty() {
            continue;
        }
        let m2 = second.iter().sum::<f64>() / second.len() as f64;
        let (e1, e2) = ((m1 - f1).abs() / f1, (m2 - f2).abs() / f2);
        worst = worst.max(e1.max(e2));
        if e1 <= 0.10 && e2 <= 0.10 {
            ok += 1;
        }
    }
    outcome(
        "formant_accuracy",
        ok >= 18,
        format!("{ok}/20 vowels with F1 and F2 within 10%, worst relative error {:.1}%", worst * 100.0),
    )
}

fn measured_voice(periods: &[usize], amplitudes: &[f64]) -> (f64, f64) {
    let buf = buffer(synth::pulse_train(periods, amplitudes));
    let feat = extract_features(&buf, &AnalysisConfig::default()).unwrap();
    let runs = pitch_periods(&buf, &feat.pitch);
    (runs.jitter().unwrap(), runs.shimmer().unwrap())
}

fn jitter_shimmer() -> Outcome {
    let cycles = 160;
    let mut lines = Vec::new();
    let mut pass = true;

    let (j0, s0) = measured_voice(&vec![80; cycles], &[0.8]);
    pass &= j0 == 0.0 && s0 == 0.0;
    lines.push(format!("constant train jitter={j0} shimmer={s0}"));

    for &(p1, p2, a1, a2) in &[(76usize, 84usize, 0.8, 0.6), (78, 82, 0.8, 0.72), (95, 105, 0.9, 0.5)] {
        let periods: Vec<usize> = (0..cycles).map(|i| if i % 2 == 0 { p1 } else { p2 }).collect();
        let (jm, sm) = measured_voice(&periods, &[a1, a2]);
        let secs: Vec<f64> = periods.iter().map(|&p| p as f64 / RATE as f64).collect();
        let amps: Vec<f64> = (0..=cycles).map(|i| if i % 2 == 0 { a1 } else { a2 }).collect();
        let (jc, sc) = (jitter(&secs).unwrap(), shimmer(&amps).unwrap());
        // closed forms for a two-value alternation
        let jf = (p1 as f64 - p2 as f64).abs() / ((p1 + p2) as f64 / 2.0);
        let sf = (a1 - a2).abs() / ((a1 + a2) / 2.0);
        let ok = (jm - jf).abs() <= 0.1 * jf
            && (sm - sf).abs() <= 0.1 * sf
            && (jc - jf).abs() < 0.01 * jf
            && (sc - sf).abs() < 0.01 * sf;
        pass &= ok;
        lines.push(format!("{p1}/{p2}: jitter {jm:.4} vs {jf:.4}, shimmer {sm:.4} vs {sf:.4}"));
    }
    outcome("jitter_shimmer", pass, lines.join("; "))
}

fn spectral_statistics() -> Outcome {
    let analyzer = SpectrumAnalyzer::for_frame_length(400);
    let bin = RATE as f64 / analyzer.n_fft() as f64;
    let mut pass = analyzer.n_fft() == 512;
    let mut worst = 0.0f64;
    for &f in &[250.0, 1000.0, 1234.0, 2500.0, 3700.0, 5000.0] {
        let buf = buffer(synth::tone(f, 0.5, 0.1, RATE));
        let frames = frame_signal(&buf, 25.0, 10.0, WindowKind::Hamming).unwrap();
        let st = spectral_stats(&analyzer.spectrum(&frames.frames[2], RATE)).unwrap();
        let err = (st.centroid - f).abs().max((st.rolloff - f).abs());
        worst = worst.max(err);
        pass &= err <= bin;
    }

    let buf = buffer(synth::white_noise(RATE as usize * 2, 0.2, 7));
    let frames = frame_signal(&buf, 25.0, 10.0, WindowKind::Hamming).unwrap();
    let centroids: Vec<f64> = frames
        .frames
        .iter()
        .map(|fr| spectral_stats(&analyzer.spectrum(fr, RATE)).unwrap().centroid)
        .collect();
    let mean = centroids.iter().sum::<f64>() / centroids.len() as f64;
    pass &= centroids.len() >= 100 && (mean - 4000.0).abs() <= 200.0;
    outcome(
        "spectral_statistics",
        pass,
        format!(
            "tone centroid/rolloff worst error {worst:.2} Hz (bin {bin} Hz); noise centroid {mean:.1} Hz over {} frames",
            centroids.len()
        ),
    )
}

/// Minimum cost over every monotone path, by depth-first enumeration that
/// abandons a branch once it cannot beat the best complete path.
fn brute_force_min(a: &[u8], b: &[u8]) -> u32 {
    fn go(a: &[u8], b: &[u8], i: usize, j: usize, acc: u32, best: &mut u32) {
        let acc = acc + a[i].abs_diff(b[j]) as u32;
        if acc >= *best {
            return;
        }
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = acc;
            return;
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            go(a, b, i + 1, j + 1, acc, best);
        }
        if i + 1 < a.len() {
            go(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            go(a, b, i, j + 1, acc, best);
        }
    }
    let mut best = u32::MAX;
    go(a, b, 0, 0, 0, &mut best);
    best
}

fn sequences(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| (0..3u8).map(move |v| s.iter().copied().chain([v]).collect::<Vec<u8>>()))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn path_is_valid(pairs: &[(usize, usize)], n: usize, m: usize) -> bool {
    pairs.first() == Some(&(0, 0))
        && pairs.last() == Some(&(n - 1, m - 1))
        && pairs.windows(2).all(|w| {
            let (di, dj) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            matches!((di, dj), (1, 0) | (0, 1) | (1, 1))
        })
}

fn dtw_exhaustive() -> Outcome {
    let started = Instant::now();
    let seqs = sequences(6);
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4);
    let chunk = seqs.len().div_ceil(threads);
    let (checked, bad): (usize, Vec<String>) = std::thread::scope(|scope| {
        let handles: Vec<_> = seqs
            .chunks(chunk)
            .map(|part| {
                let seqs = &seqs;
                scope.spawn(move || {
                    let mut bad = Vec::new();
                    let mut checked = 0usize;
                    for a in part {
                        let af: Vec<f64> = a.iter().map(|&v| v as f64).collect();
                        for b in seqs {
                            let bf: Vec<f64> = b.iter().map(|&v| v as f64).collect();
                            let path = dtw_align(&af, &bf, LocalDistance::Absolute).unwrap();
                            let oracle = brute_force_min(a, b) as f64;
                            let along: f64 = path.pairs.iter().map(|&(i, j)| (af[i] - bf[j]).abs()).sum();
                            checked += 1;
                            if path.total_cost != oracle
                                || along != oracle
                                || !path_is_valid(&path.pairs, a.len(), b.len())
                            {
                                if bad.len() < 3 {
                                    bad.push(format!("{a:?} vs {b:?}: {} != {oracle}", path.total_cost));
                                }
                            }
                        }
                    }
                    (checked, bad)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).fold((0, Vec::new()), |(c, mut b), (c2, b2)| {
            b.extend(b2);
            (c + c2, b)
        })
    });
    outcome(
        "dtw_exhaustive",
        bad.is_empty() && checked == seqs.len() * seqs.len(),
        format!(
            "{checked} pairs of lengths 1..=6 over {{0,1,2}} match exhaustive minimum ({:.1} s){}",
            started.elapsed().as_secs_f64(),
            if bad.is_empty() { String::new() } else { format!("; mismatches: {}", bad.join(", ")) }
        ),
    )
}

fn discrimination() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd15c);
    let profile = ComparisonProfile::for_disorder(demo::DISORDER);
    let (mut disc_ok, mut close_ok) = (0, 0);
    let mut samples = Vec::new();
    for _ in 0..10 {
        let f0 = rng.random_range(110.0..170.0);
        let f1 = rng.random_range(450.0..800.0);
        let f2 = rng.random_range(1100.0..2000.0);
        let dur = 0.7;
        let mut reference = VowelSpec::steady(f0, &[(f1, 80.0), (f2, 100.0)], dur);
        reference.f0_points = vec![(0.0, f0), (dur, f0 * 0.85)];
        reference.lead_silence = 0.1;
        reference.tail_silence = 0.1;

        // same word, another speaker take: small shifts in pitch and formants
        let v = |rng: &mut ChaCha8Rng| 1.0 + rng.random_range(-0.03..0.03);
        let mut normal = reference.clone();
        let (g0, g1, g2) = (v(&mut rng), v(&mut rng), v(&mut rng));
        normal.f0_points = vec![(0.0, f0 * g0), (dur, f0 * 0.85 * g0)];
        normal.formants = vec![(f1 * g1, 80.0), (f2 * g2, 100.0)];

        // same take with abrupt 30% pitch jumps and short voicing breaks
        let mut disordered = normal.clone();
        let glide = |t: f64| f0 * g0 * (1.0 - 0.15 * t / dur);
        let mut pts = vec![(0.0, glide(0.0))];
        for &(a, b) in &[(0.12, 0.2), (0.38, 0.46)] {
            pts.extend([(a, glide(a)), (a, glide(a) * 1.3), (b, glide(b) * 1.3), (b, glide(b))]);
        }
        pts.push((dur, glide(dur)));
        disordered.f0_points = pts;
        disordered.gaps = vec![(0.28, 0.32), (0.55, 0.59)];

        let r = features(synth::vowel(&reference, RATE));
        let n = features(synth::vowel(&normal, RATE));
        let d = features(synth::vowel(&disordered, RATE));
        let (dn, dd) = (pitch_discontinuities(&n.pitch), pitch_discontinuities(&d.pitch));
        let (cn, cd) = (
            compare_utterances(&n, &r, &profile).closeness,
            compare_utterances(&d, &r, &profile).closeness,
        );
        disc_ok += usize::from(dd > dn);
        close_ok += usize::from(cn > cd);
        samples.push(format!("{dn}/{dd} {cn:.2}/{cd:.2}"));
    }
    outcome(
        "disorder_discrimination",
        disc_ok == 10 && close_ok == 10,
        format!(
            "discontinuities higher for disordered {disc_ok}/10, closeness lower {close_ok}/10 [normal/disordered: {}]",
            samples.join(", ")
        ),
    )
}

fn word_dictionary(n: usize) -> Dictionary {
    Dictionary::new(
        (0..n)
            .map(|i| WordItem {
                id: format!("w{i}"),
                text: format!("word {i}"),
                category: Category::CommonWord,
                target_sounds: vec![],
                disorder_tags: vec![demo::DISORDER.into()],
                reference_audio_id: format!("a{i}"),
                prompt_image_id: None,
                pass_threshold_override: None,
                language: "en".into(),
            })
            .collect(),
    )
    .unwrap()
}

fn t(k: usize) -> DateTime<Utc> {
    DateTime::from_timestamp(1_700_000_000 + k as i64, 0).unwrap()
}

fn drive(p: &TherapyProgram, stream: &[f64]) -> (ProgramState, Vec<Decision>, usize) {
    let mut s = ProgramState::new(p);
    let mut decisions = Vec::new();
    let mut boundary_misses = 0;
    for (k, &c) in stream.iter().enumerate() {
        let Some(item) = s.current_item(p).map(str::to_owned) else { break };
        let d = record_attempt(&mut s, p, &item, c, &format!("u{k}"), t(k)).unwrap();
        if c == p.threshold_for(&item) && d != Decision::Advance {
            boundary_misses += 1;
        }
        decisions.push(d);
    }
    (s, decisions, boundary_misses)
}

fn sequencer_runs() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e9);
    let (mut bound_fail, mut replay_fail, mut boundary_fail, mut boundary_hits) = (0, 0, 0, 0);
    for _ in 0..1000 {
        let n = rng.random_range(1..=10);
        let max_repeats = rng.random_range(1..=6);
        let threshold = (rng.random_range(0.0..=1.0f64) * 100.0).round() / 100.0;
        let settings = ProgramSettings {
            pass_threshold: threshold,
            max_repeats,
            ..ProgramSettings::default()
        };
        let dict = word_dictionary(n);
        let p = build_program("p", "pat", "th", demo::DISORDER, &dict, &[Category::CommonWord], &settings).unwrap();
        let limit = n * max_repeats as usize;
        let stream: Vec<f64> = (0..limit + 5)
            .map(|_| match rng.random_range(0..10) {
                0..=2 => threshold,
                _ => rng.random_range(0.0..=1.0),
            })
            .collect();
        let (s, decisions, misses) = drive(&p, &stream);
        boundary_hits += stream[..decisions.len()].iter().filter(|&&c| c == threshold).count();
        if s.status != ProgramStatus::Completed || decisions.len() > limit {
            bound_fail += 1;
        }
        let (s2, d2, _) = drive(&p, &stream);
        if s2 != s || d2 != decisions {
            replay_fail += 1;
        }
        if misses > 0 {
            boundary_fail += 1;
        }
    }
    outcome(
        "sequencer_invariants",
        bound_fail == 0 && replay_fail == 0 && boundary_fail == 0 && boundary_hits > 0,
        format!(
            "1000 runs: {bound_fail} exceeded items x max_repeats, {replay_fail} replay mismatches, \
             {boundary_fail} runs where closeness == threshold did not advance ({boundary_hits} boundary attempts)"
        ),
    )
}

async fn end_to_end() -> Outcome {
    let started = Instant::now();
    match end_to_end_inner().await {
        Ok(detail) => {
            let elapsed = started.elapsed();
            outcome(
                "end_to_end",
                elapsed < Duration::from_secs(60),
                format!("{detail}, {:.1} s", elapsed.as_secs_f64()),
            )
        }
        Err(e) => outcome("end_to_end", false, e),
    }
}

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

async fn end_to_end_inner() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let items = demo::numerals();
    let wav_for = |id: &str| items.iter().find(|d| d.item.id == id).expect("numeral").wav.clone();

    let server = TestServer::start(dir.path()).await;
    let anon = server.client.clone();
    let t = anon.create_therapist("Dr. Rao").await.map_err(|e| e.to_string())?;
    let therapist = anon.as_therapist(&t.id);
    seed(&therapist, &items).await;
    let p = anon
        .register_patient(&registration(&t.id, Some(vec![Category::Number])))
        .await
        .map_err(|e| e.to_string())?;
    check(p.age == 6, "registered age")?;

    let mut uploaded: Vec<(String, Vec<u8>)> = Vec::new();
    let mut closeness = Vec::new();
    let mut patient = anon.as_patient(&p.id);
    let mut server = Some(server);
    for step in 0..items.len() {
        if step == 5 {
            server.take().unwrap().kill();
            let restarted = TestServer::start(dir.path()).await;
            patient = restarted.client.as_patient(&p.id);
            let view = patient.patient_program(&p.id).await.map_err(|e| e.to_string())?;
            check(view.state.cursor == 5, format!("cursor {} after restart", view.state.cursor))?;
            check(view.state.history.len() == 5, "attempt history lost on restart")?;
            for (uid, _) in &uploaded {
                patient.utterance(uid).await.map_err(|e| format!("utterance {uid} lost: {e}"))?;
            }
            server = Some(restarted);
        }
        let prompt = patient.next_prompt(&p.id, Default::default()).await.map_err(|e| e.to_string())?;
        let item = prompt.item.ok_or("program ended early")?;
        let wav = wav_for(&item.id);
        let reference = patient
            .fetch(prompt.reference_audio_url.as_deref().ok_or("no reference url")?)
            .await
            .map_err(|e| e.to_string())?;
        check(reference == wav, format!("reference audio for {} not byte-identical", item.id))?;
        let res = patient.upload_utterance(&p.id, &item.id, wav.clone()).await.map_err(|e| e.to_string())?;
        closeness.push(res.report.closeness);
        check(res.decision == Decision::Advance, format!("{} did not advance", item.id))?;
        uploaded.push((res.utterance_id, wav));
    }
    let prompt = patient.next_prompt(&p.id, Default::default()).await.map_err(|e| e.to_string())?;
    check(prompt.completed, "program not completed")?;
    check(closeness.iter().all(|&c| c == 1.0), format!("closeness {closeness:?}"))?;
    for (uid, wav) in &uploaded {
        let u = patient.utterance(uid).await.map_err(|e| e.to_string())?;
        let back = patient.download_audio(&u.audio_ref).await.map_err(|e| e.to_string())?;
        check(&back == wav, format!("audio of {uid} not byte-identical"))?;
    }
    let sessions = patient.sessions(&p.id).await.map_err(|e| e.to_string())?;
    let entries: usize = sessions.iter().map(|s| s.entry_count).sum();
    check(entries == items.len(), format!("{entries} session entries"))?;
    server.take().unwrap().kill();
    Ok(format!(
        "{} numerals completed with closeness 1.0 across a restart, audio byte-identical",
        items.len()
    ))
}

async fn status(rb: impl std::future::Future<Output = Result<StatusCode, String>>) -> StatusCode {
    rb.await.unwrap_or(StatusCode::IM_A_TEAPOT)
}

async fn matrix(intruder: &Client, s: &Setup, ids: &MatrixIds, label: &str) -> (usize, usize, Vec<String>) {
    let pid = &s.patient_id;
    let edit = ProgramEditRequest {
        edit: ProgramEdit::SetMaxRepeats { max_repeats: 9 },
        expected_version: None,
    };
    let gets = [
        format!("/patients/{pid}"),
        format!("/patients/{pid}/next-prompt"),
        format!("/patients/{pid}/sessions"),
        format!("/patients/{pid}/program"),
        format!("/patients/{pid}/messages"),
        format!("/patients/{pid}/messages?undelivered=true"),
        format!("/sessions/{}", ids.session),
        format!("/utterances/{}", ids.utterance),
        format!("/utterances/{}/features", ids.utterance),
        format!("/utterances/{}/spectrogram", ids.utterance),
        format!("/utterances/{}/spectrogram?format=csv", ids.utterance),
        format!("/audio/{}", ids.utterance_audio),
        format!("/audio/{}", ids.voice_note),
        format!("/programs/{}", s.program_id),
        format!("/therapists/{}/patients", s.therapist_id),
    ];
    let mut results: Vec<(String, StatusCode)> = Vec::new();
    for path in &gets {
        let code = status(async { intruder.request(Method::GET, path).send().await.map(|r| r.status()).map_err(|e| e.to_string()) }).await;
        results.push((format!("GET {path}"), code));
    }
    let put = status(async {
        intruder
            .request(Method::PUT, &format!("/programs/{}", s.program_id))
            .json(&edit)
            .send()
            .await
            .map(|r| r.status())
            .map_err(|e| e.to_string())
    })
    .await;
    results.push((format!("PUT /programs/{}", s.program_id), put));
    let msg = status(async {
        intruder
            .request(Method::POST, &format!("/patients/{pid}/messages"))
            .json(&NewMessage::Text { text: "hello".into() })
            .send()
            .await
            .map(|r| r.status())
            .map_err(|e| e.to_string())
    })
    .await;
    results.push((format!("POST /patients/{pid}/messages"), msg));
    let item = &s.items[0].item.id;
    let up = match intruder.upload_utterance(pid, item, s.wav_for(item)).await {
        Ok(_) => StatusCode::CREATED,
        Err(e) => e.status().unwrap_or(StatusCode::IM_A_TEAPOT),
    };
    results.push((format!("POST /patients/{pid}/utterances"), up));

    let total = results.len();
    let denied = results.iter().filter(|(_, c)| *c == StatusCode::FORBIDDEN).count();
    let leaks = results
        .iter()
        .filter(|(_, c)| *c != StatusCode::FORBIDDEN)
        .map(|(r, c)| format!("{label} {r} -> {}", c.as_u16()))
        .collect();
    (denied, total, leaks)
}

/// Flips the low bit of the last PCM sample.
fn perturbed(mut wav: Vec<u8>, bit: u8) -> Vec<u8> {
    let n = wav.len();
    wav[n - 2] ^= bit;
    wav
}

struct MatrixIds {
    session: String,
    utterance: String,
    utterance_audio: String,
    voice_note: String,
}

async fn authorization() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(dir.path()).await;
    let s = common::setup(&server.client, Some(vec![Category::Number])).await;
    // private recordings must not share bytes with the public reference audio
    let prompt = s.patient.next_prompt(&s.patient_id, Default::default()).await.unwrap();
    let item = prompt.item.unwrap().id;
    let practised = s.patient.upload_utterance(&s.patient_id, &item, perturbed(s.wav_for(&item), 1)).await.unwrap();
    let u = s.patient.utterance(&practised.utterance_id).await.unwrap();
    let note = s.therapist.upload_audio(perturbed(s.wav_for(&item), 2)).await.unwrap();
    s.therapist
        .send_message(&s.patient_id, &NewMessage::Voice { audio_id: note.audio_id.clone() })
        .await
        .unwrap();
    let ids = MatrixIds {
        session: practised.session_id,
        utterance: practised.utterance_id,
        utterance_audio: u.audio_ref,
        voice_note: note.audio_id,
    };

    let other = server.client.create_therapist("Dr. Other").await.unwrap();
    let foreign_therapist = server.client.as_therapist(&other.id);
    let (denied, total, mut leaks) = matrix(&foreign_therapist, &s, &ids, "therapist").await;

    let q = server.client.register_patient(&registration(&other.id, Some(vec![Category::Number]))).await.unwrap();
    let foreign_patient = server.client.as_patient(&q.id);
    let (pdenied, ptotal, pleaks) = matrix(&foreign_patient, &s, &ids, "patient").await;
    leaks.extend(pleaks);

    let after = s.therapist.patient_program(&s.patient_id).await.unwrap();
    let untouched = after.program.max_repeats != 9 && after.state.history.len() == 1;
    server.kill();
    outcome(
        "authorization_matrix",
        denied == total && pdenied == ptotal && untouched,
        format!(
            "foreign therapist denied {denied}/{total}, foreign patient denied {pdenied}/{ptotal}{}",
            if leaks.is_empty() { String::new() } else { format!("; not denied: {}", leaks.join(", ")) }
        ),
    )
}

fn main() {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let mut results = vec![
        pitch_accuracy(),
        formant_accuracy(),
        jitter_shimmer(),
        spectral_statistics(),
        dtw_exhaustive(),
        discrimination(),
        sequencer_runs(),
    ];
    results.push(rt.block_on(end_to_end()));
    results.push(rt.block_on(authorization()));

    for r in &results {
        println!("[{}] {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
