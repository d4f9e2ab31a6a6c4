use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::sync::Arc;

use serde::Serialize;
use whitney_ext::sampling::off_set_samples;
use whitney_ext::{
    build_partition, catalog, run_suites, sample_grid, verify_partition, AField, Case, Check, Expect, Extension,
    FieldSample, PartitionConfig, PartitionOfUnity, Suite, SuiteOptions, SuiteRun, Tolerances,
};

use crate::dataset::{read_dataset, read_external, read_set};
use crate::{CatalogAction, CheckArgs, Cli, Command, ExtendArgs, PartitionAction, Source};

type Outcome = Result<i32, String>;

pub fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err("--threads must be positive".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    let mut tol = Tolerances::default();
    for t in &cli.tol {
        tol.apply(t).map_err(|e| e.to_string())?;
    }
    match cli.command {
        Command::Extend(args) => extend(args, &tol),
        Command::Check(args) => check(args, tol),
        Command::Catalog { action } => catalog_cmd(action),
        Command::Partition { action: PartitionAction::Info { set, samples, seed, bump, report } } => {
            partition_info(&set, samples, seed, bump.profile(), report.as_deref(), &tol)
        }
    }
}

fn load_case(source: &Source, tol: &Tolerances) -> Result<Case, String> {
    if let Some(name) = &source.case {
        return catalog::case(name).map_err(|e| e.to_string());
    }
    let path = source.input.as_deref().expect("clap enforces one source");
    let data = read_dataset(path, tol.jet_membership)?;
    let mut case = catalog::dataset_case(path, &format!("dataset {path}"), data.jets, data.base_point);
    if let Some(s) = data.scales {
        if s.is_empty() || s.windows(2).any(|w| !(w[0] > w[1])) || s.iter().any(|v| !(*v > 0.0)) {
            return Err(format!("{path}: scales must be positive and strictly decreasing"));
        }
        case.scales = s;
    }
    if let Some(alpha) = data.alpha {
        case.alpha = alpha;
    }
    if let Some(r) = data.claim_radii {
        case.claim_radii = r;
    }
    let all: Vec<Check> = Suite::ALL.iter().flat_map(|s| s.checks().iter().copied()).collect();
    for (name, want) in data.expect {
        let check = all
            .iter()
            .copied()
            .find(|c| c.name() == name)
            .ok_or_else(|| format!("{path}: unknown check {name} in expect"))?;
        let want = match want.as_str() {
            "pass" => Expect::Pass,
            "fail" => Expect::Fail,
            "skip" => {
                case.expectations.remove(&check);
                continue;
            }
            other => return Err(format!("{path}: expectation {other} must be pass, fail or skip")),
        };
        if matches!(check, Check::Uniqueness | Check::ConeAxes) {
            return Err(format!("{path}: {name} needs a cone sample, which datasets do not carry"));
        }
        case.expectations.insert(check, want);
    }
    Ok(case)
}

fn partition_config(profile: whitney_ext::TransitionProfile) -> PartitionConfig {
    PartitionConfig::default().with_profile(profile)
}

struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    res: Vec<usize>,
}

/// Accepts `lo=.. hi=.. res=..` as separate words or joined by commas.
fn parse_grid(words: &[String]) -> Result<Grid, String> {
    let joined = words.join(",");
    let mut fields: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut current: Option<&str> = None;
    for token in joined.split(',').filter(|t| !t.is_empty()) {
        let value = match token.split_once('=') {
            Some((key, value)) => {
                if !["lo", "hi", "res"].contains(&key) {
                    return Err(format!("unknown grid key {key}"));
                }
                if fields.contains_key(key) {
                    return Err(format!("grid key {key} given twice"));
                }
                current = Some(key);
                value
            }
            None => token,
        };
        let key = current.ok_or_else(|| format!("grid value {token} before any key"))?;
        fields.entry(key).or_default().push(value);
    }
    let floats = |key: &str| -> Result<Vec<f64>, String> {
        fields
            .get(key)
            .ok_or_else(|| format!("grid needs {key}="))?
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| format!("bad number {v} in grid {key}")))
            .collect()
    };
    let (lo, hi) = (floats("lo")?, floats("hi")?);
    let res = fields
        .get("res")
        .ok_or("grid needs res=")?
        .iter()
        .map(|v| v.parse::<usize>().map_err(|_| format!("bad resolution {v}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Grid { lo, hi, res })
}

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(rows: &[FieldSample], ext: &Extension, jacobian: bool, out: &mut dyn Write) -> Result<(), String> {
    let (n, m) = (ext.dimension(), ext.range_dim());
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.extend((1..=m).map(|i| format!("f{i}")));
    if jacobian {
        for i in 1..=m {
            header.extend((1..=n).map(|k| format!("J{i}{k}")));
        }
    }
    header.push("onset".into());
    let io = |e: std::io::Error| e.to_string();
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    let set = ext.jets().set();
    for row in rows {
        let mut cells: Vec<String> = row.x.iter().chain(&row.value).map(|v| format_value(*v)).collect();
        if jacobian {
            // on-set rows carry the prescribed operator at the nearest set point
            let j = match &row.jacobian {
                Some(j) => j.clone(),
                None => ext.jets().operator(&set.nearest(&row.x).map_err(|e| e.to_string())?.foot).map_err(|e| e.to_string())?,
            };
            for i in 0..m {
                cells.extend((0..n).map(|k| format_value(j[(i, k)])));
            }
        }
        cells.push(if row.on_set { "1" } else { "0" }.into());
        writeln!(out, "{}", cells.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

fn extend(args: ExtendArgs, tol: &Tolerances) -> Outcome {
    let case = load_case(&args.source, tol)?;
    let grid = parse_grid(&args.grid)?;
    let jets = case.jets.clone();
    let partition: Arc<dyn PartitionOfUnity> = Arc::new(
        build_partition(jets.set().clone(), partition_config(args.bump.profile())).map_err(|e| e.to_string())?,
    );
    let afield = match args.afield.as_str() {
        "nearest" => AField::nearest(jets.clone()),
        "averaged" => AField::averaged(jets.clone(), partition.clone()).map_err(|e| e.to_string())?,
        other => match other.strip_prefix("external:") {
            Some(path) => {
                let entries = read_external(path, jets.dimension(), jets.range_dim())?;
                AField::external(jets.clone(), entries).map_err(|e| e.to_string())?
            }
            None => return Err(format!("--afield must be nearest, averaged or external:FILE, got {other}")),
        },
    };
    let ext = Extension::new(jets, partition, Arc::new(afield)).map_err(|e| e.to_string())?;
    let rows = sample_grid(&ext, &grid.lo, &grid.hi, &grid.res, args.jacobian, tol.onset).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| format!("{path}: {e}"))?;
            write_csv(&rows, &ext, args.jacobian, &mut BufWriter::new(file))?;
        }
        None => write_csv(&rows, &ext, args.jacobian, &mut BufWriter::new(std::io::stdout().lock()))?,
    }
    Ok(0)
}

#[derive(Serialize)]
struct CheckReport<'a> {
    passed: bool,
    tolerances: &'a Tolerances,
    #[serde(flatten)]
    run: &'a SuiteRun,
}

fn check(args: CheckArgs, tol: Tolerances) -> Outcome {
    let case = load_case(&args.source, &tol)?;
    let suites = Suite::parse(&args.suite).map_err(|e| e.to_string())?;
    let opts = SuiteOptions {
        seed: args.seed,
        tol: tol.clone(),
        partition: partition_config(args.bump.profile()),
        ..SuiteOptions::default()
    };
    let run = run_suites(&case, &suites, &opts).map_err(|e| e.to_string())?;
    println!("case {} at a = {:?}, seed {}", run.case, run.base_point, run.seed);
    for c in &run.checks {
        let word = |b: bool| if b { "pass" } else { "fail" };
        let expected = if c.expected == Expect::Pass { "pass" } else { "fail" };
        println!(
            "[{}] {}/{}: expected {expected}, observed {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite.name(),
            c.check.name(),
            word(c.holds),
            c.detail
        );
    }
    for note in &run.notes {
        println!("note: {note}");
    }
    if run.checks.is_empty() {
        println!("note: no check of the selected suites applies to this case");
    }
    let passed = run.passed();
    if let Some(path) = &args.report {
        let report = CheckReport { passed, tolerances: &tol, run: &run };
        let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
        std::fs::write(path, text + "\n").map_err(|e| format!("{path}: {e}"))?;
    }
    Ok(if passed { 0 } else { 1 })
}

fn catalog_cmd(action: CatalogAction) -> Outcome {
    match action {
        CatalogAction::List => {
            println!("cases:");
            for name in catalog::CASE_NAMES {
                let case = catalog::case(name).map_err(|e| e.to_string())?;
                let suites: Vec<&str> = case.exercised_suites().iter().map(|s| s.name()).collect();
                println!(
                    "  {name:<14} R^{} -> R^{}  suites: {}",
                    case.jets.dimension(),
                    case.jets.range_dim(),
                    suites.join(",")
                );
            }
            println!("sets:");
            for name in catalog::SET_NAMES {
                let set = catalog::set(name).map_err(|e| e.to_string())?;
                println!("  {name:<14} R^{}", set.dimension());
            }
            Ok(0)
        }
        CatalogAction::Show { name } => {
            let case = catalog::case(&name).map_err(|e| e.to_string())?;
            println!("name: {}", case.name);
            println!("definition: {}", case.description);
            println!("dimensions: R^{} -> R^{}", case.jets.dimension(), case.jets.range_dim());
            println!("base point: {:?}", case.base_point);
            println!("scales: {:?}", case.scales);
            println!("alpha: {}", case.alpha);
            println!("claim radii: {:?}", case.claim_radii);
            if let Some(c) = &case.cones {
                println!("cone sample: {} points, window {:?}", c.sample.len(), c.window);
            }
            println!("expectations:");
            for (check, want) in &case.expectations {
                let want = if *want == Expect::Pass { "pass" } else { "fail" };
                println!("  {}/{}: {want}", check.suite().name(), check.name());
            }
            Ok(0)
        }
    }
}

fn partition_info(
    set: &str,
    samples: usize,
    seed: u64,
    profile: whitney_ext::TransitionProfile,
    report: Option<&str>,
    tol: &Tolerances,
) -> Outcome {
    let rep = match set.strip_prefix("catalog:") {
        Some(name) => catalog::set(name).map_err(|e| e.to_string())?,
        None => read_set(set)?,
    };
    if samples == 0 {
        return Err("--samples must be positive".into());
    }
    let rep = Arc::new(rep);
    let partition = build_partition(rep.clone(), partition_config(profile)).map_err(|e| e.to_string())?;
    let points = off_set_samples(&rep, samples, 0.5, seed);
    let r = verify_partition(&partition, &points, tol).map_err(|e| e.to_string())?;
    println!(
        "samples {}  C1 {}  C2 {:.6}  max |sum - 1| {:.3e}  max r|sum grad| {:.3e}  ratios [{:.4}, {:.4}]",
        r.samples, r.c1_measured, r.c2_measured, r.max_sum_error, r.max_grad_sum, r.p2_ratio_range.0, r.p2_ratio_range.1
    );
    for v in &r.violations {
        println!("violation: {v}");
    }
    if let Some(path) = report {
        let text = serde_json::to_string_pretty(&r).map_err(|e| e.to_string())?;
        std::fs::write(path, text + "\n").map_err(|e| format!("{path}: {e}"))?;
    }
    Ok(if r.certified() { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        let words: Vec<String> = ["lo=-1,-1", "hi=1,1", "res=32,32"].iter().map(|s| s.to_string()).collect();
        let g = parse_grid(&words).unwrap();
        assert_eq!((g.lo, g.hi, g.res), (vec![-1.0, -1.0], vec![1.0, 1.0], vec![32, 32]));
        let g = parse_grid(&["lo=0,hi=1,res=1001".to_string()]).unwrap();
        assert_eq!((g.lo, g.hi, g.res), (vec![0.0], vec![1.0], vec![1001]));
        assert!(parse_grid(&["lo=0,hi=1".to_string()]).is_err());
        assert!(parse_grid(&["lo=0,lo=1,res=2".to_string()]).is_err());
        assert!(parse_grid(&["2,lo=0".to_string()]).is_err());
        assert!(parse_grid(&["lo=a,hi=1,res=2".to_string()]).is_err());
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_value(0.1), "1.0000000000000001e-1");
        assert_eq!(format_value(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_value(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
