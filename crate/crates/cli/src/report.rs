//! Run reports and their text / JSON renderings.

use serde::Serialize;
use stm_core::oracle::BlockingReport;
use stm_core::{AgentMatching, TypedInstance};

/// Output format selected by `--format`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// 64-bit FNV-1a digest of the instance file, for telling runs apart.
pub fn digest(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[derive(Clone, Debug, Serialize)]
pub struct Pair {
    pub a: String,
    pub b: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Blocking {
    pub blocking_pairs: Vec<Pair>,
    /// Couple coalitions as `case: r1 r2 -> h1 h2`.
    pub coalitions: Vec<String>,
    pub blocking_agents: Vec<String>,
}

impl Blocking {
    pub fn new(inst: &TypedInstance, r: &BlockingReport) -> Self {
        let name = |a: usize| inst.agent_name(a).to_string();
        Blocking {
            blocking_pairs: r
                .blocking_pairs
                .iter()
                .map(|&(a, b)| Pair { a: name(a), b: name(b) })
                .collect(),
            coalitions: r
                .coalitions
                .iter()
                .map(|c| {
                    format!(
                        "{}: {} {} -> {} {}",
                        c.case,
                        name(c.residents.0),
                        name(c.residents.1),
                        name(c.hospitals.0),
                        name(c.hospitals.1)
                    )
                })
                .collect(),
            blocking_agents: r.blocking_agents.iter().map(|&a| name(a)).collect(),
        }
    }
}

/// Result of `stm solve` (and of oracle optimisations).
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub instance: String,
    /// `flow`, `ip`, `matching` or `oracle`, plus realisation suffixes.
    pub solver: String,
    pub objective: String,
    /// Candidate profiles / signatures / functions examined, when known.
    pub profiles: Option<usize>,
    pub optimum: usize,
    pub wall_ms: f64,
    pub size: usize,
    pub pairs: Vec<Pair>,
    pub blocking: Blocking,
}

pub fn pairs(inst: &TypedInstance, m: &AgentMatching) -> Vec<Pair> {
    m.pairs
        .iter()
        .map(|&(a, b)| Pair {
            a: inst.agent_name(a).to_string(),
            b: inst.agent_name(b).to_string(),
        })
        .collect()
}

fn push_matching(out: &mut String, size: usize, pairs: &[Pair], blocking: &Blocking) {
    for p in pairs {
        out.push_str(&format!("pair {} {}\n", p.a, p.b));
    }
    out.push_str(&format!("size {size}\n"));
    out.push_str(&format!("blocking_pairs {}\n", blocking.blocking_pairs.len()));
    out.push_str(&format!("blocking_agents {}\n", blocking.blocking_agents.len()));
    for p in &blocking.blocking_pairs {
        out.push_str(&format!("# blocks {} {}\n", p.a, p.b));
    }
    for c in &blocking.coalitions {
        out.push_str(&format!("# coalition {c}\n"));
    }
}

impl RunReport {
    /// Text form: `#` header lines, then a matching file that `stm check`
    /// reads back.
    pub fn text(&self) -> String {
        let mut out = format!("# instance {}\n# solver {}\n", self.instance, self.solver);
        if let Some(p) = self.profiles {
            out.push_str(&format!("# profiles {p}\n"));
        }
        out.push_str(&format!(
            "# objective {} = {}\n# wall_ms {:.3}\n",
            self.objective, self.optimum, self.wall_ms
        ));
        push_matching(&mut out, self.size, &self.pairs, &self.blocking);
        out
    }
}

/// Result of `stm check`.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub size: usize,
    pub stable: bool,
    pub pairs: Vec<Pair>,
    pub blocking: Blocking,
}

impl CheckReport {
    pub fn text(&self) -> String {
        let mut out = format!("# stable {}\n", self.stable);
        push_matching(&mut out, self.size, &self.pairs, &self.blocking);
        out
    }
}

pub fn render<T: Serialize>(format: Format, value: &T, text: impl FnOnce(&T) -> String) -> String {
    match format {
        Format::Text => text(value),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("report serialises");
            s.push('\n');
            s
        }
    }
}
