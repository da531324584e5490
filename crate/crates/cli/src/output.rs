//! Output files. Every file starts with a comment header naming the tool
//! version, the command, a hash of the resolved configuration and the seed,
//! followed by the resolved configuration itself.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use spinperc::ScalarField;

use crate::CliError;

pub struct Header {
    pub command: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub config_toml: String,
}

impl Header {
    pub fn new<C: Serialize>(command: &'static str, seed: u64, resolved: &C) -> Result<Header, CliError> {
        let config_toml = toml::to_string(resolved).map_err(|e| CliError::Config(e.to_string()))?;
        let digest = Sha256::digest(format!("{command}\n{config_toml}seed = {seed}\n").as_bytes());
        let config_hash = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        Ok(Header {
            command,
            seed,
            config_hash,
            config_toml,
        })
    }

    pub fn first_line(&self) -> String {
        format!(
            "spinperc {} command={} config={} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.config_hash,
            self.seed
        )
    }

    /// Header as `#` comment lines.
    pub fn comment(&self) -> String {
        let mut out = format!("# {}\n", self.first_line());
        for line in self.config_toml.lines().filter(|l| !l.is_empty()) {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::json!({
            "tool": "spinperc",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "config": self.config_toml,
        })
    }
}

pub struct Writer<'a> {
    pub dir: &'a Path,
    pub header: &'a Header,
    pub written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    pub fn new(dir: &'a Path, header: &'a Header) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Writer {
            dir,
            header,
            written: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with the comment header, a column header row and LF endings.
    pub fn csv(&mut self, name: &str, columns: &str, rows: &[String]) -> Result<(), CliError> {
        let mut text = self.header.comment();
        text.push_str(columns);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        self.put(name, text.as_bytes())
    }

    pub fn json(&mut self, name: &str, body: serde_json::Value) -> Result<(), CliError> {
        let doc = serde_json::json!({ "header": self.header.json(), "body": body });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    /// Binary greymap: maxval 65535, big-endian samples, top row first.
    /// The header comment follows the magic number.
    pub fn pgm(&mut self, name: &str, field: &ScalarField) -> Result<(), CliError> {
        self.put(name, &pgm_bytes(&self.header.first_line(), field))
    }
}

pub fn pgm_bytes(comment: &str, field: &ScalarField) -> Vec<u8> {
    let r = field.region();
    let mut out = format!("P5\n# {comment}\n{} {}\n65535\n", r.width, r.height).into_bytes();
    for y in (r.y_min()..=r.y_max()).rev() {
        for x in r.x_min()..=r.x_max() {
            let v = field.at(spinperc::Site::new(x, y)).clamp(0.0, 1.0);
            let q = (v * 65535.0).round() as u16;
            out.extend_from_slice(&q.to_be_bytes());
        }
    }
    out
}
