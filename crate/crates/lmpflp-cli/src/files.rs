use anyhow::{bail, Context, Result};
use lmpflp::instance::{parse_instance, Instance, Solution};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text, true).with_context(|| format!("parsing {}", path.display()))
}

/// `sol 1`, then `facilities <m> clients <n>`, then `open <ids…>`.
pub fn write_solution(sol: &Solution, m: usize) -> String {
    let ids: Vec<String> = sol.open.iter().map(|f| f.to_string()).collect();
    format!("sol 1\nfacilities {m} clients {}\nopen {}\n", sol.assign.len(), ids.join(" "))
}

pub fn read_solution(path: &Path, inst: &Instance) -> Result<Solution> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    if lines.next() != Some("sol 1") {
        bail!("{}: expected `sol 1` header", path.display());
    }
    let dims: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    match dims.as_slice() {
        ["facilities", m, "clients", n] => {
            if m.parse::<usize>()? != inst.m() || n.parse::<usize>()? != inst.n() {
                bail!("{}: solution is for a {m}x{n} instance, not {}x{}", path.display(), inst.m(), inst.n());
            }
        }
        _ => bail!("{}: expected `facilities <m> clients <n>`", path.display()),
    }
    let open = lines.next().unwrap_or("");
    let ids = open.strip_prefix("open").with_context(|| format!("{}: expected `open` line", path.display()))?;
    let ids: Vec<usize> = ids.split_whitespace().map(str::parse).collect::<Result<_, _>>()?;
    Ok(inst.evaluate(&ids)?)
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Run record for one output file, written to `<output>.manifest.txt`.
pub struct Manifest {
    pub seed: Option<u64>,
    pub started: Instant,
    pub outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(seed: Option<u64>) -> Self {
        Manifest { seed, started: Instant::now(), outputs: Vec::new() }
    }

    /// Writes `contents` to `path` and records its digest.
    pub fn emit(&mut self, path: &Path, contents: &str) -> Result<()> {
        std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    pub fn finish(&self, primary: &Path) -> Result<()> {
        let mut s = String::new();
        let args: Vec<String> = std::env::args().collect();
        let _ = writeln!(s, "command={}", args.join(" "));
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed={seed}");
        }
        let _ = writeln!(s, "version={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "wall_ms={}", self.started.elapsed().as_millis());
        for p in &self.outputs {
            let bytes = std::fs::read(p)?;
            let _ = writeln!(s, "sha256 {} {}", hex_digest(&bytes), p.display());
        }
        let mut name = primary.as_os_str().to_owned();
        name.push(".manifest.txt");
        std::fs::write(PathBuf::from(name), s)?;
        Ok(())
    }
}
