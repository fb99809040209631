//! Append-only JSON-lines write-ahead log. One line per commit; a commit is
//! acknowledged only after the line is flushed to disk.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Serialize)]
struct EntryOut<'a, T> {
    seq: u64,
    ops: &'a [T],
}

#[derive(Deserialize)]
struct EntryIn<T> {
    seq: u64,
    ops: Vec<T>,
}

pub struct Journal {
    file: File,
    next_seq: u64,
}

impl Journal {
    /// Opens (or creates) the log and returns every committed batch. A torn
    /// final line, left by a crash mid-write, is cut off; corruption anywhere
    /// else is an error.
    pub fn open<T: DeserializeOwned>(path: &Path) -> io::Result<(Self, Vec<Vec<T>>)> {
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut batches = Vec::new();
        let mut good_len = 0u64;
        let mut next_seq = 1;
        let mut torn = false;
        {
            let mut reader = BufReader::new(&file);
            let mut line = String::new();
            let mut offset = 0u64;
            loop {
                line.clear();
                let n = reader.read_line(&mut line)?;
                if n == 0 {
                    break;
                }
                offset += n as u64;
                let complete = line.ends_with('\n');
                match serde_json::from_str::<EntryIn<T>>(line.trim_end()) {
                    Ok(entry) if complete => {
                        if entry.seq != next_seq {
                            return Err(io::Error::new(
                                io::ErrorKind::InvalidData,
                                format!("journal sequence gap: expected {next_seq}, found {}", entry.seq),
                            ));
                        }
                        next_seq += 1;
                        batches.push(entry.ops);
                        good_len = offset;
                    }
                    _ => {
                        // only the final line may be damaged
                        let mut rest = String::new();
                        if reader.read_line(&mut rest)? != 0 {
                            return Err(io::Error::new(
                                io::ErrorKind::InvalidData,
                                format!("corrupt journal entry {next_seq}"),
                            ));
                        }
                        torn = true;
                        break;
                    }
                }
            }
        }
        if torn {
            file.set_len(good_len)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok((Self { file, next_seq }, batches))
    }

    pub fn append<T: Serialize>(&mut self, ops: &[T]) -> io::Result<u64> {
        let seq = self.next_seq;
        let mut line = serde_json::to_vec(&EntryOut { seq, ops })?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        self.next_seq += 1;
        Ok(seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replays_batches_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.log");
        {
            let (mut j, b) = Journal::open::<String>(&path).unwrap();
            assert!(b.is_empty());
            j.append(&["a".to_string(), "b".into()]).unwrap();
            j.append(&["c".to_string()]).unwrap();
        }
        let (mut j, b) = Journal::open::<String>(&path).unwrap();
        assert_eq!(b, vec![vec!["a".to_string(), "b".into()], vec!["c".into()]]);
        assert_eq!(j.append(&["d".to_string()]).unwrap(), 3);
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.log");
        {
            let (mut j, _) = Journal::open::<String>(&path).unwrap();
            j.append(&["a".to_string()]).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(br#"{"seq":2,"ops":["b"#).unwrap();
        drop(f);
        let (mut j, b) = Journal::open::<String>(&path).unwrap();
        assert_eq!(b, vec![vec!["a".to_string()]]);
        assert_eq!(j.append(&["c".to_string()]).unwrap(), 2);
        drop(j);
        let (_, b) = Journal::open::<String>(&path).unwrap();
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn corruption_before_the_tail_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.log");
        std::fs::write(&path, "garbage\n{\"seq\":1,\"ops\":[]}\n").unwrap();
        assert!(Journal::open::<String>(&path).is_err());
    }
}
