use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_bigint::BigUint;
use topoplan::dataset::{
    depth_histogram, generate_instance, load_instance, store_instance, GeneratorConfig, Instance,
};
use topoplan::exact::{count_evaluations, exact_fronts, ExactResult};
use topoplan::metrics::{metrics_table, NormalizationBounds, ReferenceFronts};
use topoplan::moea::{combine_seeds, final_front, run_seeds, MoeaConfig};
use topoplan::oracle::{check_against, check_equivalence, EquivalenceReport, OracleLimits};

use crate::args::{ExactArgs, GenArgs, MetricsArgs, MoeaArgs, OracleArgs};
use crate::error::{CliError, CliResult};
use crate::files::{
    meta_path, read_front, read_json, read_trace, write_final_front, write_front, write_json,
    write_metrics, write_trace, FrontMeta, RunMeta,
};

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| CliError::io("<stdout>", e))?
    };
}

fn parse_pair(text: &str, what: &str) -> CliResult<(String, String)> {
    text.split_once(':')
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .ok_or_else(|| CliError::usage(format!("{what}: expected `a:b`, got {text:?}")))
}

fn parse_depth_counts(text: &str) -> CliResult<BTreeMap<u32, usize>> {
    let mut out = BTreeMap::new();
    for part in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (d, c) = parse_pair(part, "--depth-counts")?;
        let d: u32 = d
            .parse()
            .map_err(|_| CliError::usage(format!("--depth-counts: bad depth {d:?}")))?;
        let c: usize = c
            .parse()
            .map_err(|_| CliError::usage(format!("--depth-counts: bad count {c:?}")))?;
        if d == 0 {
            return Err(CliError::usage(
                "--depth-counts: depth 0 is the reference topology",
            ));
        }
        if out.insert(d, c).is_some() {
            return Err(CliError::usage(format!(
                "--depth-counts: depth {d} given twice"
            )));
        }
    }
    if out.is_empty() {
        return Err(CliError::usage("--depth-counts is empty"));
    }
    Ok(out)
}

fn parse_range(text: &str) -> CliResult<(f64, f64)> {
    let (lo, hi) = parse_pair(text, "--lf1-range")?;
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::usage(format!("--lf1-range: bad number {s:?}")))
    };
    Ok((num(&lo)?, num(&hi)?))
}

fn parse_counts(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|c| {
            c.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("--availability: bad count {c:?}")))
        })
        .collect()
}

pub fn gen(args: &GenArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut config = if args.benchmark_scale {
        GeneratorConfig::benchmark_scale(args.seed)
    } else {
        let t_max = args.t_max.ok_or_else(|| {
            CliError::usage("--t-max is required unless --benchmark-scale is set")
        })?;
        let counts = args.depth_counts.as_deref().ok_or_else(|| {
            CliError::usage("--depth-counts is required unless --benchmark-scale is set")
        })?;
        GeneratorConfig {
            t_max,
            count_per_depth: parse_depth_counts(counts)?,
            seed: args.seed,
            ..GeneratorConfig::default()
        }
    };
    if let Some(rate) = args.drop_rate {
        config.availability_drop_rate = rate;
    }
    if let Some(range) = &args.lf1_range {
        config.lf1_base_range = parse_range(range)?;
    }
    if let Some(counts) = &args.availability {
        config.availability_counts = Some(parse_counts(counts)?);
    }
    if let Some(name) = &args.name {
        config.name = name.clone();
    }
    let instance = generate_instance(&config)?;
    store_instance(&instance, &args.out)?;

    say!(
        out,
        "instance {} written to {}",
        instance.name(),
        args.out.display()
    );
    say!(out, "topologies: {}", instance.topologies().len());
    for (depth, count) in depth_histogram(&instance) {
        say!(out, "  depth {depth}: {count}");
    }
    let sizes: Vec<usize> = (0..instance.t_max())
        .map(|t| instance.available(t).len())
        .collect();
    say!(
        out,
        "available per step: {}..{}",
        sizes.iter().min().unwrap_or(&0),
        sizes.iter().max().unwrap_or(&0)
    );
    Ok(())
}

fn total_count(result: &ExactResult, rank: usize) -> BigUint {
    result.fronts[rank].iter().map(|e| &e.strategy_count).sum()
}

pub fn exact(args: &ExactArgs, out: &mut dyn Write) -> CliResult<()> {
    let instance = load_instance(&args.instance)?;
    let result = exact_fronts(
        &instance,
        args.d_max,
        args.s_max,
        args.fronts,
        args.strict_adjacency,
    )?;
    write_front(&args.out, &result)?;
    let meta = FrontMeta {
        instance: instance.name().to_string(),
        t_max: instance.t_max(),
        d_max: args.d_max,
        s_max: args.s_max,
        fronts: args.fronts,
        counting: result.counting.name().to_string(),
        eval_count: result.eval_count,
        lf1_range: result.lf1_range,
    };
    write_json(&meta_path(&args.out), &meta)?;

    for (k, front) in result.fronts.iter().enumerate() {
        say!(
            out,
            "front {}: {} points, {} strategies",
            k + 1,
            front.len(),
            total_count(&result, k)
        );
    }
    if args.count_evals {
        let predicted = count_evaluations(args.d_max, args.s_max, instance.t_max());
        say!(out, "evaluations predicted: {predicted}");
        say!(out, "evaluations performed: {}", result.eval_count);
        if predicted != u128::from(result.eval_count) {
            return Err(CliError::Mismatch(format!(
                "evaluation count {} differs from the prediction {predicted}",
                result.eval_count
            )));
        }
    }
    if result.is_empty() {
        return Err(topoplan::Error::Infeasible(
            "no strategy satisfies the bounds with a finite loading".into(),
        )
        .into());
    }
    Ok(())
}

fn moea_config(args: &MoeaArgs) -> CliResult<MoeaConfig> {
    let mut config = match &args.config {
        Some(name) => MoeaConfig::named(name, args.d_max, args.s_max)?,
        None => {
            let missing = [
                ("--l-bar", args.l_bar.is_none()),
                ("--d-bar", args.d_bar.is_none()),
                ("--pm", args.pm.is_none()),
                ("--generations", args.generations.is_none()),
            ];
            if let Some((flag, _)) = missing.iter().find(|(_, m)| *m) {
                return Err(CliError::usage(format!(
                    "{flag} is required without --config"
                )));
            }
            MoeaConfig {
                d_max: args.d_max,
                s_max: args.s_max,
                ..MoeaConfig::default()
            }
        }
    };
    if let Some(v) = args.l_bar {
        config.l_bar = v;
    }
    if let Some(v) = args.d_bar {
        config.d_bar = v;
    }
    if let Some(v) = args.pm {
        config = config.with_mutation(v);
    }
    if let Some(v) = args.pc {
        config.p_c = v;
    }
    if let Some(v) = args.generations {
        config.generations = v;
    }
    config.k_crossover = args.k_crossover;
    config.n_reference_directions = args.reference_directions;
    Ok(config)
}

fn check_moea_bounds(instance: &Instance, config: &MoeaConfig) -> CliResult<()> {
    if config.d_max > instance.max_depth() {
        return Err(CliError::usage(format!(
            "--d-max {} exceeds the instance's maximum depth {}",
            config.d_max,
            instance.max_depth()
        )));
    }
    if config.s_max >= instance.t_max() {
        return Err(CliError::usage(format!(
            "--s-max {} must be below t_max {}",
            config.s_max,
            instance.t_max()
        )));
    }
    Ok(())
}

pub fn moea(args: &MoeaArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.seeds == 0 {
        return Err(CliError::usage("--seeds must be at least 1"));
    }
    let instance = load_instance(&args.instance)?;
    let config = moea_config(args)?;
    check_moea_bounds(&instance, &config)?;
    let seeds: Vec<u64> = (0..args.seeds as u64)
        .map(|i| args.seed_base.wrapping_add(i))
        .collect();
    let traces = run_seeds(&instance, &config, &seeds)?;

    for t in &traces {
        write_trace(
            &args.out.join(format!("seed_{}", t.seed)).join("trace.csv"),
            &t.generations,
        )?;
    }
    let combined = combine_seeds(&traces)?;
    write_trace(&args.out.join("trace.csv"), &combined)?;
    let front = final_front(&traces, config.d_max, config.s_max);
    write_final_front(
        &args.out.join("final_front.csv"),
        config.generations,
        &front,
    )?;
    let population_size = config.population_size(instance.t_max());
    write_json(
        &args.out.join("run.json"),
        &RunMeta {
            instance: instance.name().to_string(),
            t_max: instance.t_max(),
            config: args.config.clone(),
            l_bar: config.l_bar,
            d_bar: config.d_bar,
            d_max: config.d_max,
            s_max: config.s_max,
            p_m: config.p_m,
            p_c: config.p_c,
            k_crossover: config.k_crossover,
            reference_directions: config.n_reference_directions,
            generations: config.generations,
            population_size,
            seeds,
        },
    )?;
    say!(out, "population size: {population_size}");
    say!(out, "p_m = {}, p_c = {}", config.p_m, config.p_c);
    say!(
        out,
        "{} seeds x {} generations, final front: {} points",
        traces.len(),
        config.generations,
        front.len()
    );
    Ok(())
}

fn resolve_bounds(choice: &str, meta: Option<&FrontMeta>) -> CliResult<NormalizationBounds> {
    match choice {
        "auto" => {
            let meta = meta.ok_or_else(|| {
                CliError::usage("--bounds auto needs the front.meta.json written by `exact`")
            })?;
            Ok(NormalizationBounds::from_parts(
                meta.lf1_range,
                meta.d_max,
                meta.s_max,
                meta.t_max,
            )?)
        }
        "benchmark" => Ok(NormalizationBounds::benchmark()),
        file => {
            let b: NormalizationBounds = read_json(Path::new(file))?;
            Ok(NormalizationBounds::new(b.ideal, b.maximum)?)
        }
    }
}

pub fn metrics(args: &MetricsArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.fronts == 0 {
        return Err(CliError::usage("--fronts must be at least 1"));
    }
    let exact = read_front(&args.reference)?;
    let meta_file = meta_path(&args.reference);
    let meta: Option<FrontMeta> = if meta_file.exists() {
        Some(read_json(&meta_file)?)
    } else {
        None
    };
    let run: RunMeta = read_json(&args.approx.join("run.json"))?;
    if let Some(m) = &meta {
        if m.t_max != run.t_max {
            return Err(CliError::usage(format!(
                "reference has t_max {} but the run has t_max {}",
                m.t_max, run.t_max
            )));
        }
    }
    let bounds = resolve_bounds(&args.bounds, meta.as_ref())?;
    let mut reference = ReferenceFronts::from_exact(&exact)?;
    if reference.is_empty() {
        return Err(CliError::usage(format!(
            "{} holds no front points",
            args.reference.display()
        )));
    }
    let k = args.fronts.min(reference.len());
    if k < reference.len() {
        reference = ReferenceFronts::new(reference.fronts()[..k].to_vec())?;
    }
    let trace = read_trace(&args.approx.join("trace.csv"), run.generations)?;
    let rows = metrics_table(&trace, &reference, &bounds)?;
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| args.approx.join("metrics.csv"));
    write_metrics(&path, k, &rows)?;

    if k < args.fronts {
        say!(out, "reference holds {k} fronts; reporting those");
    }
    if let Some(last) = rows.last() {
        say!(
            out,
            "generation {}: IGD+ = {}",
            last.generation,
            last.igd_plus
        );
        for (i, (c, r)) in last.counts.iter().zip(&last.ratios).enumerate() {
            say!(out, "  I_{} = {c}, Ihat_{} = {r:.4}", i + 1, i + 1);
        }
    }
    say!(out, "metrics written to {}", path.display());
    Ok(())
}

fn report(rep: &EquivalenceReport, out: &mut dyn Write) -> CliResult<()> {
    if rep.passed {
        let mode = rep.matched_mode.map_or("none", |m| m.name());
        say!(
            out,
            "PASS: points agree; strategy counts match in {mode} mode"
        );
        Ok(())
    } else {
        let why = rep.discrepancy.clone().unwrap_or_default();
        say!(out, "FAIL: {why}");
        Err(CliError::Mismatch(why))
    }
}

pub fn oracle(args: &OracleArgs, out: &mut dyn Write) -> CliResult<()> {
    let instance = load_instance(&args.instance)?;
    let limits = OracleLimits {
        max_strategy_count: args.limit,
    };
    let rep = match &args.front {
        Some(path) => {
            let exact = read_front(path)?;
            check_against(
                &instance,
                &exact,
                args.d_max,
                args.s_max,
                args.fronts,
                limits,
            )?
        }
        None => check_equivalence(&instance, args.d_max, args.s_max, args.fronts, limits)?,
    };
    report(&rep, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_count_parsing() {
        assert_eq!(
            parse_depth_counts("1:2, 2:3").unwrap(),
            BTreeMap::from([(1, 2), (2, 3)])
        );
        assert!(parse_depth_counts("1:2,1:3").is_err());
        assert!(parse_depth_counts("0:2").is_err());
        assert!(parse_depth_counts("1-2").is_err());
        assert!(parse_depth_counts("").is_err());
        assert_eq!(parse_range("70:150").unwrap(), (70.0, 150.0));
        assert!(parse_range("70").is_err());
    }
}
