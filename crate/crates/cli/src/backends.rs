//! Backend construction: table files, subprocess adapters, and the cached
//! wrapper stack used by every command.
//!
//! The subprocess adapter speaks line-delimited JSON with a child process
//! (one `{"prompt": ..., "k": ...}` request per line, one
//! `{"predictions": [[token, score], ...]}` response per line), so real
//! model runtimes stay out of this binary. `scripts/hf_backend.py` is the
//! reference implementation.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use chimera_core::backend::{
    BackendDescriptor, BackendError, BackendKind, MaskBackend, TableBackend,
};
use chimera_core::prompt::MaskSlotPrompt;
use serde::{Deserialize, Serialize};

use crate::cache::{CachedBackend, PromptCache};
use crate::config::BackendConfig;
use crate::errors::CliError;

/// Load a [`TableBackend`] from its JSON serialization.
pub fn load_table_backend(path: &Path) -> Result<TableBackend, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::input(format!("cannot read table backend {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("invalid table backend {}: {e}", path.display())))
}

/// Build the configured backend, memoized through `cache`.
pub fn build_backend(
    name: &str,
    config: &BackendConfig,
    cache: PromptCache,
) -> Result<CachedBackend<Box<dyn MaskBackend>>, CliError> {
    let inner: Box<dyn MaskBackend> = match config {
        BackendConfig::Table { path } => {
            let mut table = load_table_backend(path)?;
            // the registry name wins so cache keys and reports follow it
            table.set_id(name);
            Box::new(table)
        }
        BackendConfig::Subprocess {
            command,
            cased,
            suffix_only,
        } => Box::new(SubprocessBackend::spawn(
            name,
            command,
            *cased,
            *suffix_only,
        )?),
    };
    Ok(CachedBackend::new(inner, cache))
}

#[derive(Debug, Serialize)]
struct Request<'a> {
    prompt: &'a str,
    k: usize,
}

#[derive(Debug, Deserialize)]
struct Response {
    #[serde(default)]
    predictions: Option<Vec<(String, f64)>>,
    #[serde(default)]
    error: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Handshake {
    ready: bool,
    #[serde(default)]
    cased: Option<bool>,
    #[serde(default)]
    suffix_only: Option<bool>,
    #[serde(default)]
    error: Option<String>,
}

struct ChildIo {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// A fill-mask adapter running as a child process.
///
/// The child is spawned eagerly so missing runtimes surface as a clean
/// adapter-unavailable error before any work happens. Calls are serialized
/// through a mutex: one in-flight request at a time.
pub struct SubprocessBackend {
    descriptor: BackendDescriptor,
    io: Mutex<ChildIo>,
}

impl std::fmt::Debug for SubprocessBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubprocessBackend")
            .field("descriptor", &self.descriptor)
            .finish_non_exhaustive()
    }
}

impl SubprocessBackend {
    /// Spawn `command` and wait for its `{"ready": true, ...}` handshake
    /// line. The handshake may override the configured `cased`/`suffix_only`
    /// flags (the process knows its own model best).
    pub fn spawn(
        id: &str,
        command: &[String],
        cased: bool,
        suffix_only: bool,
    ) -> Result<Self, CliError> {
        let unavailable = |reason: String| {
            CliError::missing_adapter(format!("backend {id:?} unavailable: {reason}"))
        };
        let (program, args) = command
            .split_first()
            .ok_or_else(|| CliError::input(format!("backend {id:?} has an empty command")))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| unavailable(format!("cannot spawn {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin piped");
        let mut stdout = BufReader::new(child.stdout.take().expect("stdout piped"));

        let mut line = String::new();
        stdout
            .read_line(&mut line)
            .map_err(|e| unavailable(format!("handshake read failed: {e}")))?;
        if line.trim().is_empty() {
            return Err(unavailable("process exited before handshake".to_string()));
        }
        let handshake: Handshake = serde_json::from_str(line.trim())
            .map_err(|e| unavailable(format!("bad handshake {:?}: {e}", line.trim())))?;
        if !handshake.ready {
            let detail = handshake
                .error
                .unwrap_or_else(|| "process reported not ready".to_string());
            return Err(unavailable(detail));
        }

        let kind = if handshake.suffix_only.unwrap_or(suffix_only) {
            BackendKind::SuffixOnly
        } else {
            BackendKind::MaskAnywhere
        };
        Ok(Self {
            descriptor: BackendDescriptor::new(id, kind, handshake.cased.unwrap_or(cased)),
            io: Mutex::new(ChildIo {
                child,
                stdin,
                stdout,
            }),
        })
    }
}

impl MaskBackend for SubprocessBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn predict(
        &self,
        prompt: &MaskSlotPrompt,
        k: usize,
    ) -> Result<Vec<(String, f64)>, BackendError> {
        let fail = |reason: String| BackendError::Unavailable {
            backend: self.descriptor.id.clone(),
            reason,
        };
        let mut io = self
            .io
            .lock()
            .map_err(|_| fail("adapter poisoned".into()))?;
        let request = serde_json::to_string(&Request {
            prompt: prompt.text(),
            k,
        })
        .expect("request serializes");
        io.stdin
            .write_all(request.as_bytes())
            .and_then(|_| io.stdin.write_all(b"\n"))
            .and_then(|_| io.stdin.flush())
            .map_err(|e| fail(format!("write failed: {e}")))?;

        let mut line = String::new();
        io.stdout
            .read_line(&mut line)
            .map_err(|e| fail(format!("read failed: {e}")))?;
        if line.trim().is_empty() {
            return Err(fail("process closed the stream".into()));
        }
        let response: Response = serde_json::from_str(line.trim())
            .map_err(|e| fail(format!("bad response {:?}: {e}", line.trim())))?;
        if let Some(message) = response.error {
            return Err(fail(format!("adapter error: {message}")));
        }
        response
            .predictions
            .ok_or_else(|| fail("response had neither predictions nor error".into()))
    }

    fn concurrent_ok(&self) -> bool {
        false
    }
}

impl Drop for SubprocessBackend {
    fn drop(&mut self) {
        if let Ok(mut io) = self.io.lock() {
            let _ = io.child.kill();
            let _ = io.child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chimera_core::backend::fill_mask;

    fn write_script(dir: &Path, body: &str) -> std::path::PathBuf {
        let path = dir.join("stub.py");
        std::fs::write(&path, body).unwrap();
        path
    }

    /// Echo stub: answers every prompt with two fixed predictions.
    const ECHO_STUB: &str = r#"
import json, sys
print(json.dumps({"ready": True, "cased": False}), flush=True)
for line in sys.stdin:
    req = json.loads(line)
    out = {"predictions": [["ghost", -0.5], ["dream", -0.8]][: req["k"]]}
    print(json.dumps(out), flush=True)
"#;

    #[test]
    fn subprocess_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let script = write_script(dir.path(), ECHO_STUB);
        let command = vec!["python3".to_string(), script.display().to_string()];
        let backend = SubprocessBackend::spawn("stub", &command, false, false).unwrap();
        assert_eq!(backend.descriptor().id, "stub");
        let prompt = MaskSlotPrompt::new("the moon is like a [MASK]").unwrap();
        let got = fill_mask(&backend, &prompt, 2).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].token, "ghost");
        let one = fill_mask(&backend, &prompt, 1).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn missing_program_is_adapter_unavailable() {
        let command = vec!["definitely-not-a-real-program-zz".to_string()];
        let err = SubprocessBackend::spawn("ghostly", &command, false, false).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn adapter_error_lines_surface() {
        let dir = tempfile::tempdir().unwrap();
        let script = write_script(
            dir.path(),
            r#"
import json, sys
print(json.dumps({"ready": True}), flush=True)
for line in sys.stdin:
    print(json.dumps({"error": "model exploded"}), flush=True)
"#,
        );
        let command = vec!["python3".to_string(), script.display().to_string()];
        let backend = SubprocessBackend::spawn("stub", &command, false, false).unwrap();
        let prompt = MaskSlotPrompt::new("p [MASK]").unwrap();
        let err = fill_mask(&backend, &prompt, 1).unwrap_err();
        assert!(matches!(err, BackendError::Unavailable { .. }));
    }

    #[test]
    fn handshake_can_flag_suffix_only() {
        let dir = tempfile::tempdir().unwrap();
        let script = write_script(
            dir.path(),
            r#"
import json, sys
print(json.dumps({"ready": True, "suffix_only": True}), flush=True)
for line in sys.stdin:
    print(json.dumps({"predictions": [["star", -1.0]]}), flush=True)
"#,
        );
        let command = vec!["python3".to_string(), script.display().to_string()];
        let backend = SubprocessBackend::spawn("gpt-ish", &command, false, false).unwrap();
        assert_eq!(backend.descriptor().kind, BackendKind::SuffixOnly);
        // mask mid-sentence must be rejected for suffix-only backends
        let bad = MaskSlotPrompt::new("the [MASK] is red").unwrap();
        assert!(matches!(
            fill_mask(&backend, &bad, 1),
            Err(BackendError::MaskPosition { .. })
        ));
        let ok = MaskSlotPrompt::new("the moon is like a [MASK]").unwrap();
        assert_eq!(fill_mask(&backend, &ok, 1).unwrap()[0].token, "star");
    }

    #[test]
    fn table_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let table = TableBackend::new("t").with_entry("p [MASK]", vec![("a", -0.25), ("b", -0.5)]);
        let path = dir.path().join("table.json");
        std::fs::write(&path, serde_json::to_string_pretty(&table).unwrap()).unwrap();
        let loaded = load_table_backend(&path).unwrap();
        assert_eq!(loaded, table);
        assert!(load_table_backend(&dir.path().join("missing.json")).is_err());
    }
}
