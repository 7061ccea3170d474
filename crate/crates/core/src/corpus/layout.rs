//! Corpus directory layout: `<root>/u<user>/<kind><sample>.sig` with ids
//! zero-padded to three digits, or an `index.csv` listing
//! `path,user,sample,kind,forger` with paths relative to the index file.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{
    parse_signature, write_signature, CorpusManifest, FormatError, Signature, SignatureKind,
    UserEntry,
};
use crate::output::write_atomic;

pub const INDEX_FILE: &str = "index.csv";
pub const SEED_FILE: &str = "seed.txt";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("no users found in {0}")]
    NoUsers(PathBuf),
    #[error("missing user directory {0}")]
    MissingUserDir(PathBuf),
    #[error("duplicate signature: user {user} sample {sample} kind {kind}")]
    Duplicate {
        user: u32,
        sample: u32,
        kind: SignatureKind,
    },
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("{path}: {message}")]
    Mismatch { path: PathBuf, message: String },
    #[error("{path}: unrecognized signature file name")]
    BadName { path: PathBuf },
    #[error("index line {line}: {message}")]
    BadIndex { line: usize, message: String },
}

/// Canonical location of one signature inside a corpus root.
pub fn signature_path(
    root: &Path,
    user_id: u32,
    kind: SignatureKind,
    sample_index: u32,
) -> PathBuf {
    root.join(format!("u{user_id:03}"))
        .join(format!("{}{sample_index:03}.sig", kind.as_str()))
}

fn read_signature(path: &Path) -> Result<Signature, CorpusError> {
    let bytes = fs::read(path).map_err(|source| CorpusError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    parse_signature(&bytes).map_err(|source| CorpusError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn read_seed(root: &Path) -> Result<Option<u64>, CorpusError> {
    let path = root.join(SEED_FILE);
    match fs::read_to_string(&path) {
        Ok(text) => text
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CorpusError::Mismatch {
                path,
                message: "seed file must hold one unsigned integer".into(),
            }),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(CorpusError::Unreadable { path, source }),
    }
}

/// Groups signatures by user and checks for duplicate
/// `(user, sample, kind)` keys.
#[derive(Default)]
struct Collector {
    users: BTreeMap<u32, (Vec<Signature>, Vec<Signature>)>,
    seen: BTreeSet<(u32, u32, SignatureKind)>,
}

impl Collector {
    fn declare_user(&mut self, user_id: u32) {
        self.users.entry(user_id).or_default();
    }

    fn push(&mut self, sig: Signature) -> Result<(), CorpusError> {
        if !self.seen.insert((sig.user_id, sig.sample_index, sig.kind)) {
            return Err(CorpusError::Duplicate {
                user: sig.user_id,
                sample: sig.sample_index,
                kind: sig.kind,
            });
        }
        let entry = self.users.entry(sig.user_id).or_default();
        match sig.kind {
            SignatureKind::Genuine => entry.0.push(sig),
            SignatureKind::SkilledForgery => entry.1.push(sig),
        }
        Ok(())
    }

    fn finish(self, root: &Path, seed: Option<u64>) -> Result<CorpusManifest, CorpusError> {
        if self.users.is_empty() {
            return Err(CorpusError::NoUsers(root.to_path_buf()));
        }
        let users = self
            .users
            .into_iter()
            .map(|(user_id, (mut genuine, mut skilled))| {
                genuine.sort_by_key(|s| s.sample_index);
                skilled.sort_by_key(|s| s.sample_index);
                UserEntry {
                    user_id,
                    genuine,
                    skilled,
                }
            })
            .collect();
        Ok(CorpusManifest { users, seed })
    }
}

/// Splits `genuine007.sig` into `(Genuine, 7)`.
fn parse_file_name(name: &str) -> Option<(SignatureKind, u32)> {
    let stem = name.strip_suffix(".sig")?;
    let digits_at = stem.find(|c: char| c.is_ascii_digit())?;
    let kind = SignatureKind::from_token(&stem[..digits_at])?;
    let index = stem[digits_at..].parse().ok()?;
    Some((kind, index))
}

fn parse_user_dir(name: &str) -> Option<u32> {
    let digits = name.strip_prefix('u')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn sorted_entries(dir: &Path) -> Result<Vec<fs::DirEntry>, CorpusError> {
    let unreadable = |source| CorpusError::Unreadable {
        path: dir.to_path_buf(),
        source,
    };
    let mut entries = fs::read_dir(dir)
        .map_err(unreadable)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(unreadable)?;
    entries.sort_by_key(|e| e.file_name());
    Ok(entries)
}

fn load_directory(root: &Path) -> Result<CorpusManifest, CorpusError> {
    let mut collector = Collector::default();
    for entry in sorted_entries(root)? {
        let name = entry.file_name();
        let Some(user_id) = name.to_str().and_then(parse_user_dir) else {
            continue;
        };
        let user_dir = entry.path();
        if !user_dir.is_dir() {
            continue;
        }
        collector.declare_user(user_id);
        for file in sorted_entries(&user_dir)? {
            let path = file.path();
            let Some(file_name) = file.file_name().to_str().map(str::to_owned) else {
                continue;
            };
            if !file_name.ends_with(".sig") {
                continue;
            }
            let (kind, sample_index) = parse_file_name(&file_name)
                .ok_or_else(|| CorpusError::BadName { path: path.clone() })?;
            let sig = read_signature(&path)?;
            if sig.user_id != user_id || sig.kind != kind || sig.sample_index != sample_index {
                return Err(CorpusError::Mismatch {
                    path,
                    message: format!(
                        "header says user {} {} {} but location says user {user_id} {kind} {sample_index}",
                        sig.user_id, sig.kind, sig.sample_index
                    ),
                });
            }
            collector.push(sig)?;
        }
    }
    collector.finish(root, read_seed(root)?)
}

fn load_index(index: &Path) -> Result<CorpusManifest, CorpusError> {
    let base = index.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(index).map_err(|source| CorpusError::Unreadable {
        path: index.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::BadIndex {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["path", "user", "sample", "kind", "forger"] {
        return Err(CorpusError::BadIndex {
            line: 1,
            message: "expected header path,user,sample,kind,forger".into(),
        });
    }
    let mut collector = Collector::default();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let bad = |message: String| CorpusError::BadIndex { line, message };
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| record.get(k).unwrap_or("").trim();
        let path = base.join(field(0));
        let user: u32 = field(1)
            .parse()
            .map_err(|_| bad(format!("bad user '{}'", field(1))))?;
        let sample: u32 = field(2)
            .parse()
            .map_err(|_| bad(format!("bad sample '{}'", field(2))))?;
        let kind = SignatureKind::from_token(field(3))
            .ok_or_else(|| bad(format!("bad kind '{}'", field(3))))?;
        let forger = match field(4) {
            "" | "-" => None,
            f => Some(
                f.parse::<u32>()
                    .map_err(|_| bad(format!("bad forger '{f}'")))?,
            ),
        };
        if let Some(dir) = path.parent() {
            if !dir.is_dir() {
                return Err(CorpusError::MissingUserDir(dir.to_path_buf()));
            }
        }
        let sig = read_signature(&path)?;
        if sig.user_id != user
            || sig.sample_index != sample
            || sig.kind != kind
            || sig.forger_id != forger
        {
            return Err(CorpusError::Mismatch {
                path,
                message: format!("header disagrees with index line {line}"),
            });
        }
        collector.push(sig)?;
    }
    collector.finish(index, read_seed(base)?)
}

/// Loads a corpus from a directory (using its `index.csv` when present) or
/// from an index file directly.
pub fn load_corpus(root: &Path) -> Result<CorpusManifest, CorpusError> {
    if root.is_file() {
        return load_index(root);
    }
    if !root.is_dir() {
        return Err(CorpusError::Unreadable {
            path: root.to_path_buf(),
            source: io::Error::new(io::ErrorKind::NotFound, "no such directory"),
        });
    }
    let index = root.join(INDEX_FILE);
    if index.is_file() {
        load_index(&index)
    } else {
        load_directory(root)
    }
}

/// Writes every signature in the canonical layout, plus `seed.txt` when
/// the manifest records a seed.
pub fn write_corpus(manifest: &CorpusManifest, root: &Path) -> Result<(), CorpusError> {
    let unwritable = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Unwritable { path, source }
    };
    for user in &manifest.users {
        let dir = root.join(format!("u{:03}", user.user_id));
        fs::create_dir_all(&dir).map_err(unwritable(&dir))?;
        for sig in user.genuine.iter().chain(&user.skilled) {
            let path = signature_path(root, sig.user_id, sig.kind, sig.sample_index);
            write_atomic(&path, &write_signature(sig)).map_err(unwritable(&path))?;
        }
    }
    if let Some(seed) = manifest.seed {
        let path = root.join(SEED_FILE);
        write_atomic(&path, format!("{seed}\n").as_bytes()).map_err(unwritable(&path))?;
    }
    Ok(())
}
