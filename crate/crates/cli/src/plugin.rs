//! External core-factorization plugins: an executable that reads a residual
//! document on stdin and prints a steps document on stdout.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use torfact::doc::{read_steps, residual_json, Document, Kind};
use torfact::engine::{PiDesingularizer, Residual, StarStep};
use torfact::{Error, Result};

pub struct ExternalPlugin {
    path: PathBuf,
    name: String,
}

impl ExternalPlugin {
    pub fn new(path: PathBuf) -> Self {
        let name = path.display().to_string();
        ExternalPlugin { path, name }
    }
}

impl PiDesingularizer for ExternalPlugin {
    fn name(&self) -> &str {
        &self.name
    }

    fn factor(&self, residual: &Residual) -> Result<Vec<StarStep>> {
        let failed = |what: String| Error::Malformed(format!("plugin {}: {what}", self.name));
        let mut child = Command::new(&self.path)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| failed(format!("cannot start: {e}")))?;
        let input = Document::new(Kind::Residual, residual_json(residual)).to_text();
        child
            .stdin
            .take()
            .expect("piped stdin")
            .write_all(input.as_bytes())
            .map_err(|e| failed(format!("cannot write input: {e}")))?;
        let out = child.wait_with_output().map_err(|e| failed(e.to_string()))?;
        if !out.status.success() {
            return Err(failed(format!("exited with {}", out.status)));
        }
        let text = String::from_utf8(out.stdout).map_err(|_| failed("output is not UTF-8".into()))?;
        let doc = Document::parse(&text)?;
        read_steps(residual.coarse.base(), doc.expect(Kind::Steps)?, "payload")
    }
}
