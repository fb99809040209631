//! Patient-side client: register, fetch prompts, submit WAV recordings and
//! collect therapist messages. Every command maps its outcome to a distinct
//! exit code so sessions can be scripted.

pub mod config;
pub mod render;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use therapy_client::{Client, ClientError, StatusCode};
use therapy_core::api::{MessageKind, NextPromptResponse, RegisterPatientRequest, SessionMode};
use therapy_core::program::{Category, Decision, WordItem};

use crate::config::CliConfig;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const NETWORK: u8 = 3;
    pub const REJECTED: u8 = 4;
    pub const NOT_REGISTERED: u8 = 5;
    pub const LOCAL_FILE: u8 = 6;
    pub const REPEAT: u8 = 10;
    pub const EMPTY_SPEECH: u8 = 11;
    pub const COMPLETED: u8 = 12;
    pub const ADVANCED_FLAGGED: u8 = 13;
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Network(String),
    Rejected(String),
    NotRegistered(PathBuf),
    Config(String),
    LocalFile(String),
    EmptySpeech,
    Completed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Network(_) => exit::NETWORK,
            CliError::Rejected(_) => exit::REJECTED,
            CliError::NotRegistered(_) | CliError::Config(_) => exit::NOT_REGISTERED,
            CliError::LocalFile(_) => exit::LOCAL_FILE,
            CliError::EmptySpeech => exit::EMPTY_SPEECH,
            CliError::Completed => exit::COMPLETED,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Network(m) => write!(f, "cannot reach server: {m}"),
            CliError::Rejected(m) => write!(f, "server rejected the request: {m}"),
            CliError::NotRegistered(p) => write!(f, "not registered (no config at {}); run `register` first", p.display()),
            CliError::Config(m) => write!(f, "bad config: {m}"),
            CliError::LocalFile(m) => write!(f, "{m}"),
            CliError::EmptySpeech => write!(f, "empty speech: attempt not counted"),
            CliError::Completed => write!(f, "program completed: nothing left to practise"),
        }
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match &e {
            ClientError::Network(inner) => CliError::Network(inner.to_string()),
            ClientError::Api { body, .. } if matches!(body.code.as_str(), "empty_speech" | "too_short") => {
                CliError::EmptySpeech
            }
            ClientError::Api { body, .. } if body.code == "program_completed" => CliError::Completed,
            ClientError::Api { status, body } => {
                let fields = if body.fields.is_empty() {
                    String::new()
                } else {
                    format!(" [fields: {}]", body.fields.join(", "))
                };
                CliError::Rejected(format!("{} {}: {}{fields}", status.as_u16(), body.code, body.message))
            }
            ClientError::Decode(m) => CliError::Rejected(format!("unexpected response: {m}")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "therapy-patient", version, about = "Practice therapy words from the terminal")]
pub struct Cli {
    /// Service base URL; overrides the stored one.
    #[arg(long, global = true, env = "THERAPY_SERVER")]
    pub server: Option<String>,
    /// Config file location.
    #[arg(long, global = true, env = "THERAPY_PATIENT_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Register a new patient and store the credentials locally.
    Register(RegisterArgs),
    /// Show the current prompt.
    Prompt {
        /// Also save the reference recording here.
        #[arg(long)]
        save_reference: Option<PathBuf>,
    },
    /// Submit a recording of the current prompt.
    Practice {
        /// WAV file to submit.
        #[arg(long)]
        audio: PathBuf,
        /// The item that was prompted; defaults to the server's current one.
        #[arg(long)]
        item: Option<String>,
        #[arg(long, value_parser = parse_mode, default_value = "offline_auto")]
        mode: SessionMode,
    },
    /// Fetch undelivered therapist messages; voice notes are saved as WAV.
    Inbox {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub age: u32,
    #[arg(long)]
    pub gender: String,
    #[arg(long, default_value = "")]
    pub history: String,
    #[arg(long)]
    pub disorder: String,
    #[arg(long)]
    pub therapist_id: String,
    /// Comma-separated stage order, e.g. `number,common_word`.
    #[arg(long, value_delimiter = ',', value_parser = parse_category)]
    pub template: Option<Vec<Category>>,
}

fn parse_snake<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s.trim()))
        .map_err(|e| e.to_string())
}

fn parse_category(s: &str) -> Result<Category, String> {
    parse_snake(s)
}

fn parse_mode(s: &str) -> Result<SessionMode, String> {
    parse_snake(s)
}

pub fn config_path(cli: &Cli) -> Result<PathBuf, CliError> {
    cli.config
        .clone()
        .or_else(config::default_path)
        .ok_or_else(|| CliError::Config("no user config directory; pass --config".into()))
}

fn connect(cli: &Cli, path: &Path) -> Result<(CliConfig, Client), CliError> {
    let mut cfg = config::load(path)?;
    if let Some(server) = &cli.server {
        config::check_url(server)?;
        cfg.server_url = server.clone();
    }
    let client = Client::new(cfg.server_url.trim_end_matches('/')).with_token(&cfg.token);
    Ok((cfg, client))
}

/// Runs one command, printing to stdout, and returns the exit code.
pub async fn run(cli: Cli) -> u8 {
    match dispatch(&cli).await {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

async fn dispatch(cli: &Cli) -> Result<u8, CliError> {
    let path = config_path(cli)?;
    match &cli.command {
        Command::Register(args) => register(cli, &path, args).await,
        Command::Prompt { save_reference } => {
            let (cfg, client) = connect(cli, &path)?;
            prompt(&client, &cfg, save_reference.as_deref()).await
        }
        Command::Practice { audio, item, mode } => {
            let wav = read_wav(audio)?;
            let (cfg, client) = connect(cli, &path)?;
            practice(&client, &cfg, wav, item.as_deref(), *mode).await
        }
        Command::Inbox { out } => {
            let (cfg, client) = connect(cli, &path)?;
            inbox(&client, &cfg, out).await
        }
    }
}

async fn register(cli: &Cli, path: &Path, args: &RegisterArgs) -> Result<u8, CliError> {
    let server = cli.server.clone().unwrap_or_else(|| config::DEFAULT_SERVER.to_owned());
    config::check_url(&server)?;
    let server = server.trim_end_matches('/').to_owned();
    let req = RegisterPatientRequest {
        name: args.name.clone(),
        age: args.age,
        gender: args.gender.clone(),
        medical_history: args.history.clone(),
        disorder: args.disorder.clone(),
        surgery: None,
        therapist_id: args.therapist_id.clone(),
        template: args.template.clone(),
        language: None,
    };
    let patient = Client::new(&server).register_patient(&req).await?;
    let cfg = CliConfig {
        server_url: server,
        token: format!("patient:{}", patient.id),
        patient_id: patient.id.clone(),
    };
    config::save(path, &cfg)?;
    println!("registered patient {}", patient.id);
    println!("config written to {}", path.display());
    Ok(exit::OK)
}

fn read_wav(path: &Path) -> Result<Vec<u8>, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::LocalFile(format!("cannot read {}: {e}", path.display())))?;
    therapy_core::audio::decode_wav(&bytes)
        .map_err(|e| CliError::LocalFile(format!("{} is not a usable WAV file: {e}", path.display())))?;
    Ok(bytes)
}

fn describe(item: &WordItem) -> String {
    let category = category_label(&item.category);
    format!("{} ({category}) [{}]", item.text, item.id)
}

fn category_label(c: &Category) -> &'static str {
    match c {
        Category::SustainedSound => "sustained sound",
        Category::CommonWord => "common word",
        Category::Number => "number",
        Category::PhraseStoryRhyme => "phrase",
    }
}

fn current(p: NextPromptResponse) -> Result<(WordItem, NextPromptResponse), CliError> {
    match p.item.clone() {
        Some(item) if !p.completed => Ok((item, p)),
        _ => Err(CliError::Completed),
    }
}

async fn prompt(client: &Client, cfg: &CliConfig, save_reference: Option<&Path>) -> Result<u8, CliError> {
    let (item, p) = current(client.next_prompt(&cfg.patient_id, SessionMode::default()).await?)?;
    println!("say: {}", describe(&item));
    if let Some(h) = &p.session_hint {
        println!(
            "item {} of {}, attempt {} of {}",
            h.position + 1,
            h.total_items,
            h.attempts_on_current + 1,
            h.max_repeats
        );
    }
    if let (Some(dest), Some(url)) = (save_reference, &p.reference_audio_url) {
        let wav = client.fetch(url).await?;
        std::fs::write(dest, wav).map_err(|e| CliError::LocalFile(format!("cannot write {}: {e}", dest.display())))?;
        println!("reference recording saved to {}", dest.display());
    }
    Ok(exit::OK)
}

async fn practice(
    client: &Client,
    cfg: &CliConfig,
    wav: Vec<u8>,
    item: Option<&str>,
    mode: SessionMode,
) -> Result<u8, CliError> {
    let mut item_id = match item {
        Some(id) => id.to_owned(),
        None => current(client.next_prompt(&cfg.patient_id, mode).await?)?.0.id,
    };
    let mut retried = false;
    let res = loop {
        match client.upload_utterance_in(&cfg.patient_id, &item_id, wav.clone(), mode).await {
            Err(e) if !retried && e.status() == Some(StatusCode::CONFLICT) && e.code() == Some("stale_prompt") => {
                let (fresh, _) = current(client.next_prompt(&cfg.patient_id, mode).await?)?;
                println!("prompt moved on; submitting for {}", describe(&fresh));
                item_id = fresh.id;
                retried = true;
            }
            other => break other?,
        }
    };

    let fb = &res.feedback;
    let worst = if fb.worst_features.is_empty() {
        String::new()
    } else {
        format!(" worst={}", fb.worst_features.join(","))
    };
    let code = match res.decision {
        Decision::Advance => {
            println!("advance: closeness {:.2}", fb.closeness);
            exit::OK
        }
        Decision::Repeat => {
            println!("repeat:{worst} (closeness {:.2})", fb.closeness);
            exit::REPEAT
        }
        Decision::AdvanceFlagged => {
            println!("moved on:{worst} (closeness {:.2}, flagged for your therapist)", fb.closeness);
            exit::ADVANCED_FLAGGED
        }
    };
    println!("pitch");
    for line in render::pitch_overlay(fb) {
        println!("{line}");
    }
    if res.status == therapy_core::program::ProgramStatus::Completed {
        println!("program completed");
    }
    Ok(code)
}

async fn inbox(client: &Client, cfg: &CliConfig, out: &Path) -> Result<u8, CliError> {
    let messages = client.inbox(&cfg.patient_id).await?;
    if messages.is_empty() {
        println!("no messages");
        return Ok(exit::OK);
    }
    for m in messages {
        let when = m.created_at.format("%Y-%m-%d %H:%M");
        match m.kind {
            MessageKind::Text => println!("[{when}] {}", m.payload_ref),
            MessageKind::Voice => {
                let url = m.audio_url.clone().unwrap_or_else(|| format!("/audio/{}", m.payload_ref));
                let wav = client.fetch(&url).await?;
                std::fs::create_dir_all(out)
                    .map_err(|e| CliError::LocalFile(format!("cannot create {}: {e}", out.display())))?;
                let dest = out.join(format!("voice-{}.wav", m.id));
                std::fs::write(&dest, wav)
                    .map_err(|e| CliError::LocalFile(format!("cannot write {}: {e}", dest.display())))?;
                println!("[{when}] voice note saved to {}", dest.display());
            }
        }
    }
    Ok(exit::OK)
}
