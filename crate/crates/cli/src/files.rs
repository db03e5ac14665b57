//! On-disk formats written and read by the commands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use topoplan::dataset::TopologyId;
use topoplan::exact::{CountingMode, ExactFrontEntry, ExactResult};
use topoplan::metrics::MetricsRow;
use topoplan::moea::Individual;
use topoplan::objectives::{round_lf1, ObjectiveVector, Strategy};

use crate::error::{CliError, CliResult};

pub const FRONT_HEADER: [&str; 8] = [
    "front_rank",
    "depth",
    "switches",
    "non_ref_steps",
    "lf1",
    "lf1_rounded",
    "strategy_count",
    "representative",
];

pub const TRACE_HEADER: [&str; 5] = ["generation", "lf1", "depth", "switches", "non_ref"];

/// Facts about an exact run that `front.csv` cannot hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontMeta {
    pub instance: String,
    pub t_max: usize,
    pub d_max: u32,
    pub s_max: usize,
    pub fronts: usize,
    pub counting: String,
    pub eval_count: u64,
    /// Smallest and largest finite record loading.
    pub lf1_range: Option<(f64, f64)>,
}

impl FrontMeta {
    pub fn counting_mode(&self) -> CliResult<CountingMode> {
        match self.counting.as_str() {
            "strict" => Ok(CountingMode::Strict),
            "loose" => Ok(CountingMode::Loose),
            other => Err(CliError::usage(format!("unknown counting mode {other:?}"))),
        }
    }
}

/// Description of a MOEA run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub instance: String,
    pub t_max: usize,
    pub config: Option<String>,
    pub l_bar: usize,
    pub d_bar: usize,
    pub d_max: u32,
    pub s_max: usize,
    pub p_m: f64,
    pub p_c: f64,
    pub k_crossover: usize,
    pub reference_directions: usize,
    pub generations: usize,
    pub population_size: usize,
    pub seeds: Vec<u64>,
}

/// `front.csv` becomes `front.meta.json`.
pub fn meta_path(front: &Path) -> PathBuf {
    front.with_extension("meta.json")
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("malformed {}: {e}", path.display())))
}

fn lf1_text(x: f64) -> String {
    format!("{x}")
}

fn rounded_text(x: f64) -> String {
    format!("{:.1}", round_lf1(x))
}

/// Rows in canonical order: rank, depth, switches, non-reference steps, rounded loading.
pub fn write_front(path: &Path, result: &ExactResult) -> CliResult<()> {
    let mut entries: Vec<&ExactFrontEntry> = result.entries().collect();
    entries.sort_by_key(|e| (e.front_rank, e.key()));
    let mut w = csv_writer(path)?;
    let io = |e: csv::Error| CliError::io(path, e);
    w.write_record(FRONT_HEADER).map_err(io)?;
    for e in entries {
        w.write_record([
            e.front_rank.to_string(),
            e.depth.to_string(),
            e.switches.to_string(),
            e.non_ref.to_string(),
            lf1_text(e.lf1),
            rounded_text(e.lf1_rounded),
            e.strategy_count.to_string(),
            e.representative.to_string(),
        ])
        .map_err(io)?;
    }
    finish(w, path)
}

fn bad(path: &Path, line: u64, what: &str) -> CliError {
    CliError::usage(format!("{}: line {line}: bad {what}", path.display()))
}

fn parse_strategy(text: &str) -> Option<Strategy> {
    text.split(';')
        .map(|g| g.trim().parse().ok().map(TopologyId))
        .collect::<Option<Vec<_>>>()
        .map(Strategy::new)
}

/// Reads `front.csv` back into an exact result. `counting` and the evaluation count come from
/// the sidecar when present.
pub fn read_front(path: &Path) -> CliResult<ExactResult> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let header = r.headers().map_err(|e| CliError::io(path, e))?.clone();
    if header.iter().ne(FRONT_HEADER) {
        return Err(CliError::usage(format!(
            "{}: expected header {}",
            path.display(),
            FRONT_HEADER.join(",")
        )));
    }
    let mut fronts: Vec<Vec<ExactFrontEntry>> = Vec::new();
    for (i, row) in r.records().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| CliError::io(path, e))?;
        let field = |k: usize| row.get(k).unwrap_or("");
        let rank: usize = field(0)
            .parse()
            .map_err(|_| bad(path, line, "front_rank"))?;
        if rank == 0 {
            return Err(bad(path, line, "front_rank"));
        }
        let entry = ExactFrontEntry {
            front_rank: rank,
            depth: field(1).parse().map_err(|_| bad(path, line, "depth"))?,
            switches: field(2).parse().map_err(|_| bad(path, line, "switches"))?,
            non_ref: field(3)
                .parse()
                .map_err(|_| bad(path, line, "non_ref_steps"))?,
            lf1: field(4).parse().map_err(|_| bad(path, line, "lf1"))?,
            lf1_rounded: field(5)
                .parse()
                .map_err(|_| bad(path, line, "lf1_rounded"))?,
            strategy_count: field(6)
                .parse()
                .map_err(|_| bad(path, line, "strategy_count"))?,
            representative: parse_strategy(field(7))
                .ok_or_else(|| bad(path, line, "representative"))?,
        };
        if fronts.len() < rank {
            fronts.resize_with(rank, Vec::new);
        }
        fronts[rank - 1].push(entry);
    }
    let meta = meta_path(path);
    let (counting, eval_count, lf1_range) = if meta.exists() {
        let m: FrontMeta = read_json(&meta)?;
        (m.counting_mode()?, m.eval_count, m.lf1_range)
    } else {
        (CountingMode::Strict, 0, None)
    };
    Ok(ExactResult {
        fronts,
        eval_count,
        counting,
        lf1_range,
    })
}

/// One row per point per generation.
pub fn write_trace(path: &Path, generations: &[Vec<ObjectiveVector>]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let io = |e: csv::Error| CliError::io(path, e);
    w.write_record(TRACE_HEADER).map_err(io)?;
    for (g, front) in generations.iter().enumerate() {
        for p in front {
            w.write_record([
                g.to_string(),
                lf1_text(p.lf1),
                p.depth.to_string(),
                p.switches.to_string(),
                p.non_ref.to_string(),
            ])
            .map_err(io)?;
        }
    }
    finish(w, path)
}

/// Groups the rows of a trace by generation; generations without rows come back empty.
pub fn read_trace(path: &Path, generations: usize) -> CliResult<Vec<Vec<ObjectiveVector>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let header = r.headers().map_err(|e| CliError::io(path, e))?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(CliError::usage(format!(
            "{}: expected header {}",
            path.display(),
            TRACE_HEADER.join(",")
        )));
    }
    let mut out = vec![Vec::new(); generations + 1];
    for (i, row) in r.records().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| CliError::io(path, e))?;
        let field = |k: usize| row.get(k).unwrap_or("");
        let g: usize = field(0)
            .parse()
            .map_err(|_| bad(path, line, "generation"))?;
        let slot = out
            .get_mut(g)
            .ok_or_else(|| bad(path, line, "generation"))?;
        slot.push(ObjectiveVector::new(
            field(1).parse().map_err(|_| bad(path, line, "lf1"))?,
            field(2).parse().map_err(|_| bad(path, line, "depth"))?,
            field(3).parse().map_err(|_| bad(path, line, "switches"))?,
            field(4).parse().map_err(|_| bad(path, line, "non_ref"))?,
        ));
    }
    Ok(out)
}

/// The front after `generation`, one representative strategy per point, sorted by objectives.
pub fn write_final_front(path: &Path, generation: usize, front: &[Individual]) -> CliResult<()> {
    let mut rows: Vec<&Individual> = front.iter().collect();
    rows.sort_by(|a, b| {
        let (x, y) = (&a.objectives, &b.objectives);
        x.lf1
            .total_cmp(&y.lf1)
            .then(x.depth.cmp(&y.depth))
            .then(x.switches.cmp(&y.switches))
            .then(x.non_ref.cmp(&y.non_ref))
    });
    let mut w = csv_writer(path)?;
    let io = |e: csv::Error| CliError::io(path, e);
    let mut header = TRACE_HEADER.to_vec();
    header.push("representative");
    w.write_record(header).map_err(io)?;
    for i in rows {
        let p = &i.objectives;
        w.write_record([
            generation.to_string(),
            lf1_text(p.lf1),
            p.depth.to_string(),
            p.switches.to_string(),
            p.non_ref.to_string(),
            i.strategy.to_string(),
        ])
        .map_err(io)?;
    }
    finish(w, path)
}

fn ratio_text(x: f64) -> String {
    format!("{x:.6}")
}

/// `generation,igd_plus,I_1..I_K,Ihat_1..Ihat_K`; an infinite IGD+ is written as `inf`.
pub fn write_metrics(path: &Path, fronts: usize, rows: &[MetricsRow]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let io = |e: csv::Error| CliError::io(path, e);
    let mut header = vec!["generation".to_string(), "igd_plus".to_string()];
    header.extend((1..=fronts).map(|k| format!("I_{k}")));
    header.extend((1..=fronts).map(|k| format!("Ihat_{k}")));
    w.write_record(&header).map_err(io)?;
    for row in rows {
        let mut rec = vec![
            row.generation.to_string(),
            if row.igd_plus.is_infinite() {
                "inf".to_string()
            } else {
                format!("{:.9}", row.igd_plus)
            },
        ];
        rec.extend(row.counts.iter().map(usize::to_string));
        rec.extend(row.ratios.iter().map(|&r| ratio_text(r)));
        w.write_record(&rec).map_err(io)?;
    }
    finish(w, path)
}
