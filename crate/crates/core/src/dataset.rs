//! Problem instances: the precomputed topology-level table every solver consumes.
//!
//! An [`Instance`] holds, for each time step, the set of available topologies and their
//! worst-case N-1 loading (percent), plus each topology's depth. Availability is implied by
//! the presence of a loading value: a topology is available at `t` iff `lf1(g, t)` is defined.
//!
//! On disk an instance is a directory with three files:
//!
//! * `manifest.json` with keys `t_max`, `reference_id` and `name`,
//! * `topologies.csv` with header `topology_id,depth`,
//! * `lf1.csv` with header `topology_id,t,lf1`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOPOLOGIES_FILE: &str = "topologies.csv";
pub const LF1_FILE: &str = "lf1.csv";

/// Identifier of a topology, unique within an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TopologyId(pub u32);

impl fmt::Display for TopologyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyRecord {
    pub id: TopologyId,
    /// Number of extra busbars relative to the reference topology.
    pub depth: u32,
}

/// An immutable topology dataset.
#[derive(Clone, Debug)]
pub struct Instance {
    name: String,
    t_max: usize,
    reference_id: TopologyId,
    /// Sorted by id.
    topologies: Vec<TopologyRecord>,
    /// Per time step, sorted ids of the available topologies.
    available: Vec<Vec<TopologyId>>,
    /// Row-major `[topology index][t]`; NaN marks an unavailable pair.
    lf1: Vec<f64>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.t_max == other.t_max
            && self.reference_id == other.reference_id
            && self.topologies == other.topologies
            && self.available == other.available
            && self.lf1.len() == other.lf1.len()
            && self
                .lf1
                .iter()
                .zip(&other.lf1)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Instance {
    /// Builds an instance from a topology table and `(id, t, lf1)` rows.
    ///
    /// Structural problems (unknown or duplicate ids, duplicate rows, non-positive or
    /// non-finite loadings, `t` out of range) are rejected here. Semantic invariants such as
    /// reference availability are reported by [`validate_instance`].
    pub fn from_rows(
        name: impl Into<String>,
        t_max: usize,
        reference_id: TopologyId,
        mut topologies: Vec<TopologyRecord>,
        rows: impl IntoIterator<Item = (TopologyId, usize, f64)>,
    ) -> Result<Self> {
        if t_max == 0 {
            return Err(Error::validation("t_max must be at least 1"));
        }
        topologies.sort_by_key(|r| r.id);
        if let Some(w) = topologies.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::validation(format!(
                "duplicate topology id {}",
                w[0].id
            )));
        }
        let mut instance = Instance {
            name: name.into(),
            t_max,
            reference_id,
            lf1: vec![f64::NAN; topologies.len() * t_max],
            topologies,
            available: vec![Vec::new(); t_max],
        };
        for (id, t, value) in rows {
            let idx = instance.index_of(id).ok_or_else(|| {
                Error::validation(format!("lf1 row references unknown topology {id}"))
            })?;
            if t >= t_max {
                return Err(Error::validation(format!(
                    "lf1 row for topology {id} has t={t} outside 0..{t_max}"
                )));
            }
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::validation(format!(
                    "lf1 value {value} for topology {id} at t={t} is not positive"
                )));
            }
            let cell = &mut instance.lf1[idx * t_max + t];
            if !cell.is_nan() {
                return Err(Error::validation(format!(
                    "duplicate lf1 row for topology {id} at t={t}"
                )));
            }
            *cell = value;
            instance.available[t].push(id);
        }
        for ids in &mut instance.available {
            ids.sort_unstable();
        }
        Ok(instance)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn reference_id(&self) -> TopologyId {
        self.reference_id
    }

    /// All topologies, sorted by id.
    pub fn topologies(&self) -> &[TopologyRecord] {
        &self.topologies
    }

    /// Sorted ids available at time step `t` (the set `G_t`).
    pub fn available(&self, t: usize) -> &[TopologyId] {
        &self.available[t]
    }

    pub fn lf1(&self, id: TopologyId, t: usize) -> Option<f64> {
        let idx = self.index_of(id)?;
        let v = *self.lf1.get(idx * self.t_max + t)?;
        (!v.is_nan()).then_some(v)
    }

    pub fn is_available(&self, id: TopologyId, t: usize) -> bool {
        self.lf1(id, t).is_some()
    }

    pub fn depth(&self, id: TopologyId) -> Option<u32> {
        self.index_of(id).map(|i| self.topologies[i].depth)
    }

    pub fn max_depth(&self) -> u32 {
        self.topologies.iter().map(|r| r.depth).max().unwrap_or(0)
    }

    /// Position of `id` in [`Instance::topologies`].
    pub fn index_of(&self, id: TopologyId) -> Option<usize> {
        let guess = id.0 as usize;
        if self.topologies.get(guess).is_some_and(|r| r.id == id) {
            return Some(guess);
        }
        self.topologies.binary_search_by_key(&id, |r| r.id).ok()
    }

    /// Loading profile of the topology at `index`, NaN where unavailable.
    pub(crate) fn profile(&self, index: usize) -> &[f64] {
        &self.lf1[index * self.t_max..(index + 1) * self.t_max]
    }
}

/// Returns one message per violated instance invariant; empty means valid.
pub fn validate_instance(instance: &Instance) -> Vec<String> {
    let mut violations = Vec::new();
    let reference = instance.reference_id;
    match instance.depth(reference) {
        None => violations.push(format!(
            "reference topology {reference} is missing from the topology table"
        )),
        Some(0) => {}
        Some(d) => violations.push(format!(
            "reference topology {reference} has depth {d}, expected 0"
        )),
    }
    for record in &instance.topologies {
        if record.depth == 0 && record.id != reference {
            violations.push(format!(
                "topology {} has depth 0 but is not the reference topology",
                record.id
            ));
        }
    }
    for t in 0..instance.t_max {
        if instance.available[t].binary_search(&reference).is_err() {
            violations.push(format!(
                "reference topology {reference} is unavailable at t={t}"
            ));
        }
    }
    violations
}

fn check_valid(instance: Instance) -> Result<Instance> {
    let violations = validate_instance(&instance);
    if violations.is_empty() {
        Ok(instance)
    } else {
        Err(Error::Validation(violations.join("; ")))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    t_max: usize,
    reference_id: u32,
    name: String,
}

/// Reads and validates an instance directory.
pub fn load_instance(dir: impl AsRef<Path>) -> Result<Instance> {
    let dir = dir.as_ref();

    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::format(&manifest_path, e.to_string()))?;

    let topo_path = dir.join(TOPOLOGIES_FILE);
    let mut topologies = Vec::new();
    for row in read_csv(&topo_path, &["topology_id", "depth"])? {
        let (line, fields) = row;
        let id = parse_field::<u32>(&topo_path, line, &fields[0])?;
        let depth = parse_field::<u32>(&topo_path, line, &fields[1])?;
        topologies.push(TopologyRecord {
            id: TopologyId(id),
            depth,
        });
    }

    let lf1_path = dir.join(LF1_FILE);
    let mut rows = Vec::new();
    for (line, fields) in read_csv(&lf1_path, &["topology_id", "t", "lf1"])? {
        let id = parse_field::<u32>(&lf1_path, line, &fields[0])?;
        let t = parse_field::<usize>(&lf1_path, line, &fields[1])?;
        let value = parse_field::<f64>(&lf1_path, line, &fields[2])?;
        rows.push((TopologyId(id), t, value));
    }

    let instance = Instance::from_rows(
        manifest.name,
        manifest.t_max,
        TopologyId(manifest.reference_id),
        topologies,
        rows,
    )?;
    check_valid(instance)
}

fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if found != header {
        return Err(Error::format(
            path,
            format!(
                "expected header {}, found {}",
                header.join(","),
                found.join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push((line, record.iter().map(|s| s.trim().to_string()).collect()));
    }
    Ok(rows)
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::format(path, format!("line {line}: cannot parse '{field}'")))
}

/// Writes `instance` to `dir` (created if missing). [`load_instance`] inverts this exactly.
pub fn store_instance(instance: &Instance, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let manifest = Manifest {
        t_max: instance.t_max,
        reference_id: instance.reference_id.0,
        name: instance.name.clone(),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;

    let topo_path = dir.join(TOPOLOGIES_FILE);
    let mut out = String::from("topology_id,depth\n");
    for r in &instance.topologies {
        out.push_str(&format!("{},{}\n", r.id, r.depth));
    }
    fs::write(&topo_path, out).map_err(|e| Error::io(&topo_path, e))?;

    // f64 Display is the shortest representation that parses back to the same value.
    let lf1_path = dir.join(LF1_FILE);
    let file = fs::File::create(&lf1_path).map_err(|e| Error::io(&lf1_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "topology_id,t,lf1")?;
        for (idx, record) in instance.topologies.iter().enumerate() {
            for (t, v) in instance.profile(idx).iter().enumerate() {
                if !v.is_nan() {
                    writeln!(w, "{},{},{}", record.id, t, v)?;
                }
            }
        }
        w.flush()
    };
    write().map_err(|e| Error::io(&lf1_path, e))
}

/// Counts unique topologies per depth (over the topology table, not per time step).
pub fn depth_histogram(instance: &Instance) -> BTreeMap<u32, usize> {
    let mut hist = BTreeMap::new();
    for r in &instance.topologies {
        *hist.entry(r.depth).or_insert(0) += 1;
    }
    hist
}

/// Parameters of the seeded synthetic instance generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub name: String,
    pub t_max: usize,
    /// Number of topologies per depth. Depth 0 is always the single reference topology.
    pub count_per_depth: BTreeMap<u32, usize>,
    /// Probability that a non-reference topology is unavailable at a given step.
    pub availability_drop_rate: f64,
    /// Exact `|G_t|` per step (reference included). Overrides the drop rate when set.
    pub availability_counts: Option<Vec<usize>>,
    pub lf1_base_range: (f64, f64),
    pub lf1_noise_range: (f64, f64),
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            name: "synthetic".to_string(),
            t_max: 24,
            count_per_depth: BTreeMap::from([(1, 4), (2, 8), (3, 16)]),
            availability_drop_rate: 0.2,
            availability_counts: None,
            lf1_base_range: (60.0, 140.0),
            lf1_noise_range: (-15.0, 15.0),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    /// Topology counts and per-step availability of the congested day used as the benchmark
    /// scale: 252,094 topologies over four depths, 19,590 to 39,180 available per hour.
    pub fn benchmark_scale(seed: u64) -> Self {
        let mut counts = vec![39180; 7];
        counts.push(19950);
        counts.extend(std::iter::repeat_n(19590, 13));
        counts.extend([39180; 3]);
        GeneratorConfig {
            name: "benchmark-scale".to_string(),
            t_max: 24,
            count_per_depth: BTreeMap::from([(1, 489), (2, 20777), (3, 230827)]),
            availability_drop_rate: 0.0,
            availability_counts: Some(counts),
            lf1_base_range: (70.0, 150.0),
            lf1_noise_range: (-12.0, 12.0),
            seed,
        }
    }

    fn check(&self) -> Result<()> {
        if self.t_max == 0 {
            return Err(Error::validation("generator t_max must be at least 1"));
        }
        if self.count_per_depth.is_empty() {
            return Err(Error::validation("generator depth counts are empty"));
        }
        if !(0.0..1.0).contains(&self.availability_drop_rate) {
            return Err(Error::validation(
                "availability drop rate must lie in [0, 1)",
            ));
        }
        let (lo, hi) = self.lf1_base_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::validation("lf1 base range must satisfy lo <= hi"));
        }
        let (lo, hi) = self.lf1_noise_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::validation("lf1 noise range must satisfy lo <= hi"));
        }
        if let Some(counts) = &self.availability_counts {
            let total: usize = 1 + self
                .count_per_depth
                .iter()
                .filter(|(d, _)| **d > 0)
                .map(|(_, c)| c)
                .sum::<usize>();
            if counts.len() != self.t_max {
                return Err(Error::validation(format!(
                    "availability counts have {} entries, expected {}",
                    counts.len(),
                    self.t_max
                )));
            }
            if let Some(c) = counts.iter().find(|c| **c == 0 || **c > total) {
                return Err(Error::validation(format!(
                    "availability count {c} must lie in 1..={total}"
                )));
            }
        }
        Ok(())
    }
}

/// Draws a synthetic instance. A pure function of `config`, seed included.
///
/// Topology ids are dense from 0, with the reference at id 0 and ids grouped by ascending
/// depth. Each topology gets a base loading drawn uniformly from `lf1_base_range` (the
/// reference from its upper half, so it tends to be congested) and per-step noise from
/// `lf1_noise_range`; values are clamped positive and kept to two decimals.
pub fn generate_instance(config: &GeneratorConfig) -> Result<Instance> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let t_max = config.t_max;

    let mut topologies = vec![TopologyRecord {
        id: TopologyId(0),
        depth: 0,
    }];
    for (&depth, &count) in &config.count_per_depth {
        if depth == 0 {
            continue;
        }
        for _ in 0..count {
            let id = TopologyId(topologies.len() as u32);
            topologies.push(TopologyRecord { id, depth });
        }
    }

    let n = topologies.len();
    let mut available = vec![vec![true; t_max]; n];
    match &config.availability_counts {
        Some(counts) => {
            // Each step takes a window of a random permutation; windows drift across the day
            // so consecutive steps share most of their topologies.
            let mut order: Vec<usize> = (1..n).collect();
            order.shuffle(&mut rng);
            let widest = counts.iter().max().copied().unwrap_or(1) - 1;
            let drift = if t_max > 1 {
                (order.len() - widest) as f64 / (t_max - 1) as f64
            } else {
                0.0
            };
            for row in available.iter_mut().skip(1) {
                row.iter_mut().for_each(|a| *a = false);
            }
            for (t, &count) in counts.iter().enumerate() {
                let width = count - 1;
                let start = ((t as f64 * drift).round() as usize).min(order.len() - width);
                for &idx in &order[start..start + width] {
                    available[idx][t] = true;
                }
            }
        }
        None => {
            for row in available.iter_mut().skip(1) {
                for slot in row.iter_mut() {
                    *slot = !rng.random_bool(config.availability_drop_rate);
                }
            }
        }
    }

    let (base_lo, base_hi) = config.lf1_base_range;
    let (noise_lo, noise_hi) = config.lf1_noise_range;
    let mut rows = Vec::new();
    for (idx, record) in topologies.iter().enumerate() {
        let base = if idx == 0 {
            uniform(&mut rng, (base_lo + base_hi) / 2.0, base_hi)
        } else {
            uniform(&mut rng, base_lo, base_hi)
        };
        for (t, &is_available) in available[idx].iter().enumerate() {
            let noise = uniform(&mut rng, noise_lo, noise_hi);
            if is_available {
                let value = ((base + noise).max(1.0) * 100.0).round() / 100.0;
                rows.push((record.id, t, value));
            }
        }
    }

    let instance =
        Instance::from_rows(config.name.clone(), t_max, TopologyId(0), topologies, rows)?;
    check_valid(instance)
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if lo < hi {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> Instance {
        Instance::from_rows(
            "minimal",
            1,
            TopologyId(0),
            vec![TopologyRecord {
                id: TopologyId(0),
                depth: 0,
            }],
            [(TopologyId(0), 0, 112.0)],
        )
        .unwrap()
    }

    fn small_config(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            t_max: 4,
            count_per_depth: BTreeMap::from([(1, 2), (2, 3)]),
            seed,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn minimal_instance_is_valid() {
        let inst = minimal();
        assert!(validate_instance(&inst).is_empty());
        assert_eq!(inst.t_max(), 1);
        assert_eq!(inst.available(0).len(), 1);
        assert_eq!(depth_histogram(&inst), BTreeMap::from([(0, 1)]));
    }

    #[test]
    fn reference_missing_at_one_step_is_reported() {
        let topologies = vec![
            TopologyRecord {
                id: TopologyId(0),
                depth: 0,
            },
            TopologyRecord {
                id: TopologyId(1),
                depth: 1,
            },
        ];
        let rows = (0..5)
            .filter(|&t| t != 3)
            .map(|t| (TopologyId(0), t, 100.0))
            .chain((0..5).map(|t| (TopologyId(1), t, 90.0)));
        let inst = Instance::from_rows("x", 5, TopologyId(0), topologies, rows).unwrap();
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("t=3"), "{v:?}");
    }

    #[test]
    fn depth_zero_non_reference_is_reported() {
        let topologies = vec![
            TopologyRecord {
                id: TopologyId(0),
                depth: 0,
            },
            TopologyRecord {
                id: TopologyId(7),
                depth: 0,
            },
        ];
        let rows = [(TopologyId(0), 0, 100.0), (TopologyId(7), 0, 90.0)];
        let inst = Instance::from_rows("x", 1, TopologyId(0), topologies, rows).unwrap();
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("topology 7"), "{v:?}");
    }

    #[test]
    fn structural_errors_are_rejected() {
        let topo = || {
            vec![TopologyRecord {
                id: TopologyId(0),
                depth: 0,
            }]
        };
        let dup = Instance::from_rows(
            "x",
            2,
            TopologyId(0),
            topo(),
            [(TopologyId(0), 1, 100.0), (TopologyId(0), 1, 101.0)],
        );
        assert!(matches!(dup, Err(Error::Validation(_))));
        let neg = Instance::from_rows("x", 1, TopologyId(0), topo(), [(TopologyId(0), 0, 0.0)]);
        assert!(matches!(neg, Err(Error::Validation(_))));
        let unknown =
            Instance::from_rows("x", 1, TopologyId(0), topo(), [(TopologyId(3), 0, 10.0)]);
        assert!(matches!(unknown, Err(Error::Validation(_))));
    }

    #[test]
    fn generator_respects_counts_and_is_deterministic() {
        let a = generate_instance(&small_config(1)).unwrap();
        let b = generate_instance(&small_config(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.topologies().len(), 6);
        assert_eq!(
            depth_histogram(&a),
            BTreeMap::from([(0, 1), (1, 2), (2, 3)])
        );
        for t in 0..a.t_max() {
            assert!(a.is_available(TopologyId(0), t));
        }
        let c = generate_instance(&small_config(2)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_forces_single_reference() {
        let mut cfg = small_config(3);
        cfg.count_per_depth.insert(0, 5);
        let inst = generate_instance(&cfg).unwrap();
        assert_eq!(depth_histogram(&inst)[&0], 1);
    }

    #[test]
    fn generator_rejects_bad_configs() {
        let mut cfg = small_config(1);
        cfg.t_max = 0;
        assert!(generate_instance(&cfg).is_err());
        let mut cfg = small_config(1);
        cfg.count_per_depth.clear();
        assert!(generate_instance(&cfg).is_err());
        let mut cfg = small_config(1);
        cfg.availability_counts = Some(vec![3, 3]);
        assert!(generate_instance(&cfg).is_err());
    }

    #[test]
    fn availability_counts_are_exact() {
        let cfg = GeneratorConfig {
            t_max: 5,
            count_per_depth: BTreeMap::from([(1, 10), (2, 30)]),
            availability_counts: Some(vec![41, 20, 11, 30, 1]),
            seed: 9,
            ..GeneratorConfig::default()
        };
        let inst = generate_instance(&cfg).unwrap();
        let sizes: Vec<usize> = (0..5).map(|t| inst.available(t).len()).collect();
        assert_eq!(sizes, vec![41, 20, 11, 30, 1]);
    }

    #[test]
    fn store_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let inst = generate_instance(&small_config(7)).unwrap();
        store_instance(&inst, dir.path()).unwrap();
        let back = load_instance(dir.path()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn store_to_unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain-file");
        fs::write(&file, "x").unwrap();
        let err = store_instance(&minimal(), file.join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn load_missing_directory_is_io_error() {
        let err = load_instance("/nonexistent/topoplan-instance").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
