//! Readers for the tool's file formats.
//!
//! CSV inputs use 1-based unit ids with a header row; everything is 0-based
//! in memory. Design configs and study specs are TOML. Probabilities in
//! config files may be ratio strings ("1/2"), decimals ("0.25"), integers, or
//! TOML floats; floats are converted through their shortest decimal form so
//! `p = 0.95` means exactly 19/20.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::design::{AssignmentDistribution, Strata};
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::numeric::{parse_ratio, ratio_from_f64};
use crate::oracle::{PoFamily, PotentialOutcomeTable};
use crate::randtest::{Statistic, SummaryFn};
use crate::sim::{
    cycling_cluster_sizes, DesignSpec, EstimandSpec, GraphFamily, SimStudySpec, TestSpec,
};
use crate::Prob;

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or_default();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

/// Opens a headered CSV and checks the header names.
fn open_csv(path: &Path, expected: &[&str]) -> Result<csv::Reader<fs::File>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(parse_err(
            path,
            1,
            format!("expected header {:?}, got {:?}", expected.join(","), got.join(",")),
        ));
    }
    Ok(reader)
}

fn field<'a>(
    path: &Path,
    line: usize,
    record: &'a csv::StringRecord,
    index: usize,
    name: &str,
) -> Result<&'a str> {
    record
        .get(index)
        .ok_or_else(|| parse_err(path, line, format!("missing {name} column")))
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

/// Parses a 1-based unit id into a 0-based index.
fn parse_id(path: &Path, line: usize, text: &str, name: &str) -> Result<usize> {
    let id: usize = text
        .parse()
        .map_err(|_| parse_err(path, line, format!("{name} {text:?} is not a positive integer")))?;
    if id == 0 {
        return Err(parse_err(path, line, format!("{name} ids start at 1")));
    }
    Ok(id - 1)
}

/// Reads `intervention_id,outcome_id` edge rows into 0-based pairs.
pub fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut reader = open_csv(path, &["intervention_id", "outcome_id"])?;
    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let n = parse_id(path, line, field(path, line, &record, 0, "intervention_id")?, "intervention")?;
        let m = parse_id(path, line, field(path, line, &record, 1, "outcome_id")?, "outcome")?;
        edges.push((n, m));
    }
    if edges.is_empty() {
        return Err(parse_err(path, 1, "edge file has no rows"));
    }
    Ok(edges)
}

/// Reads an edge file into a graph sized by the largest ids present.
pub fn read_graph(path: &Path) -> Result<BipartiteGraph> {
    let edges = read_edges(path)?;
    let n = 1 + edges.iter().map(|e| e.0).max().unwrap();
    let m = 1 + edges.iter().map(|e| e.1).max().unwrap();
    BipartiteGraph::new(n, m, &edges)
}

/// Reads id-keyed rows whose ids must cover 1..=len exactly once.
fn read_indexed<T>(
    path: &Path,
    header: &[&str; 2],
    mut parse: impl FnMut(&Path, usize, &str) -> Result<T>,
) -> Result<Vec<T>> {
    let mut reader = open_csv(path, header)?;
    let mut by_id: BTreeMap<usize, T> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let id = parse_id(path, line, field(path, line, &record, 0, header[0])?, header[0])?;
        let value = parse(path, line, field(path, line, &record, 1, header[1])?)?;
        if by_id.insert(id, value).is_some() {
            return Err(parse_err(path, line, format!("duplicate {} {}", header[0], id + 1)));
        }
    }
    let len = by_id.len();
    if len == 0 {
        return Err(parse_err(path, 1, "file has no rows"));
    }
    if *by_id.last_key_value().unwrap().0 != len - 1 {
        let missing = (0..len).find(|i| !by_id.contains_key(i)).unwrap();
        return Err(parse_err(
            path,
            1,
            format!("ids must cover 1..={len} exactly; id {} is missing", missing + 1),
        ));
    }
    Ok(by_id.into_values().collect())
}

/// Reads `intervention_id,w` treatment rows covering every unit exactly once.
pub fn read_treatments(path: &Path) -> Result<Vec<u8>> {
    read_indexed(path, &["intervention_id", "w"], |path, line, text| {
        match text {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(parse_err(path, line, format!("treatment {other:?} is not 0 or 1"))),
        }
    })
}

/// Reads `outcome_id,y` outcome rows covering every unit exactly once.
pub fn read_outcomes(path: &Path) -> Result<Vec<f64>> {
    read_indexed(path, &["outcome_id", "y"], |path, line, text| {
        let y: f64 = text
            .parse()
            .map_err(|_| parse_err(path, line, format!("outcome {text:?} is not a number")))?;
        if !y.is_finite() {
            return Err(parse_err(path, line, format!("outcome {y} is not finite")));
        }
        Ok(y)
    })
}

/// Reads `intervention_id,stratum_id` rows covering every unit exactly once.
pub fn read_strata(path: &Path) -> Result<Strata> {
    let labels = read_indexed(path, &["intervention_id", "stratum_id"], |path, line, text| {
        if text.is_empty() {
            return Err(parse_err(path, line, "empty stratum_id"));
        }
        Ok(text.to_string())
    })?;
    Strata::from_labels(&labels)
}

/// Reads `outcome_id,local_vector_bits,y` rows into a full potential-outcome
/// table. Each outcome unit needs one row per local assignment; the bit
/// string lists arms for the unit's connected intervention units in
/// ascending-id order.
pub fn read_po_table(path: &Path, g: &BipartiteGraph) -> Result<PotentialOutcomeTable> {
    let mut reader = open_csv(path, &["outcome_id", "local_vector_bits", "y"])?;
    let mut tables: Vec<Vec<Option<f64>>> = (0..g.n_outcome())
        .map(|m| vec![None; 1usize << g.intervention_set(m).len()])
        .collect();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let m = parse_id(path, line, field(path, line, &record, 0, "outcome_id")?, "outcome")?;
        if m >= g.n_outcome() {
            return Err(parse_err(path, line, format!("outcome id {} exceeds {}", m + 1, g.n_outcome())));
        }
        let bits = field(path, line, &record, 1, "local_vector_bits")?;
        let set_len = g.intervention_set(m).len();
        if bits.len() != set_len {
            return Err(parse_err(
                path,
                line,
                format!("outcome unit {} needs {set_len} bits, got {:?}", m + 1, bits),
            ));
        }
        let mut mask = 0usize;
        for (i, c) in bits.chars().enumerate() {
            match c {
                '0' => {}
                '1' => mask |= 1 << i,
                other => {
                    return Err(parse_err(path, line, format!("bit {other:?} is not 0 or 1")))
                }
            }
        }
        let y: f64 = field(path, line, &record, 2, "y")?
            .parse()
            .map_err(|_| parse_err(path, line, "y is not a number".to_string()))?;
        if tables[m][mask].replace(y).is_some() {
            return Err(parse_err(
                path,
                line,
                format!("duplicate row for outcome unit {} bits {bits}", m + 1),
            ));
        }
    }
    let mut full = Vec::with_capacity(tables.len());
    for (m, table) in tables.into_iter().enumerate() {
        let rows: Option<Vec<f64>> = table.into_iter().collect();
        match rows {
            Some(rows) => full.push(rows),
            None => {
                return Err(parse_err(
                    path,
                    1,
                    format!(
                        "outcome unit {} is missing local assignments (needs {} rows)",
                        m + 1,
                        1usize << g.intervention_set(m).len()
                    ),
                ))
            }
        }
    }
    PotentialOutcomeTable::new(g, full)
}

fn toml_err(path: &Path, source: &str, e: toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|span| 1 + source[..span.start.min(source.len())].matches('\n').count())
        .unwrap_or(1);
    parse_err(path, line, e.message().to_string())
}

fn prob_from_toml(value: &toml::Value, what: &str) -> Result<Prob> {
    match value {
        toml::Value::String(s) => parse_ratio(s),
        toml::Value::Integer(i) => Ok(Prob::from_integer((*i).into())),
        toml::Value::Float(f) => ratio_from_f64(*f),
        other => Err(Error::InvalidInput(format!(
            "{what} must be a number or a ratio string, got {other}"
        ))),
    }
}

fn require<T>(value: Option<T>, kind: &str, name: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidInput(format!("design kind {kind:?} needs field {name:?}")))
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignConfigFile {
    kind: String,
    n_units: Option<usize>,
    p: Option<toml::Value>,
    n_treated: Option<usize>,
    strata_file: Option<String>,
    p_by_stratum: Option<BTreeMap<String, toml::Value>>,
    n_treated_by_stratum: Option<BTreeMap<String, usize>>,
    w: Option<Vec<u8>>,
    rows: Option<Vec<TabulatedRow>>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedRow {
    w: Vec<u8>,
    p: toml::Value,
}

/// Looks up one value per stratum, requiring the config to name each label
/// exactly once.
fn per_stratum<T: Clone>(
    strata: &Strata,
    by_label: &BTreeMap<String, T>,
    what: &str,
) -> Result<Vec<T>> {
    if by_label.len() != strata.n_strata() {
        return Err(Error::InvalidInput(format!(
            "{what} names {} strata but the strata file has {}",
            by_label.len(),
            strata.n_strata()
        )));
    }
    (0..strata.n_strata())
        .map(|r| {
            by_label
                .get(strata.label(r))
                .cloned()
                .ok_or_else(|| {
                    Error::InvalidInput(format!("{what} is missing stratum {:?}", strata.label(r)))
                })
        })
        .collect()
}

/// Reads a TOML design config. `strata_file` paths resolve relative to the
/// config file's directory.
pub fn read_design_config(path: &Path) -> Result<AssignmentDistribution> {
    let source = fs::read_to_string(path)?;
    let config: DesignConfigFile =
        toml::from_str(&source).map_err(|e| toml_err(path, &source, e))?;
    let load_strata = |file: &str| -> Result<Strata> {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        read_strata(&base.join(file))
    };
    let kind = config.kind.as_str();
    let design = match kind {
        "bernoulli" => {
            let n = require(config.n_units, kind, "n_units")?;
            let p = prob_from_toml(&require(config.p, kind, "p")?, "p")?;
            AssignmentDistribution::bernoulli(n, p)?
        }
        "crd" => {
            let n = require(config.n_units, kind, "n_units")?;
            let t = require(config.n_treated, kind, "n_treated")?;
            AssignmentDistribution::crd(n, t)?
        }
        "stratified_bernoulli" => {
            let strata = load_strata(&require(config.strata_file, kind, "strata_file")?)?;
            let by_label = require(config.p_by_stratum, kind, "p_by_stratum")?;
            let raw = per_stratum(&strata, &by_label, "p_by_stratum")?;
            let p = raw
                .iter()
                .map(|v| prob_from_toml(v, "p_by_stratum"))
                .collect::<Result<Vec<_>>>()?;
            AssignmentDistribution::stratified_bernoulli(strata, p)?
        }
        "stratified_crd" => {
            let strata = load_strata(&require(config.strata_file, kind, "strata_file")?)?;
            let by_label = require(config.n_treated_by_stratum, kind, "n_treated_by_stratum")?;
            let t = per_stratum(&strata, &by_label, "n_treated_by_stratum")?;
            AssignmentDistribution::stratified_crd(strata, t)?
        }
        "point_mass" => AssignmentDistribution::point_mass(require(config.w, kind, "w")?)?,
        "tabulated" => {
            let rows = require(config.rows, kind, "rows")?;
            let rows = rows
                .into_iter()
                .map(|r| Ok((r.w, prob_from_toml(&r.p, "row p")?)))
                .collect::<Result<Vec<_>>>()?;
            AssignmentDistribution::tabulated(rows)?
        }
        other => {
            return Err(Error::InvalidInput(format!("unknown design kind {other:?}")));
        }
    };
    if let Some(n) = config.n_units {
        if n != design.n_units() {
            return Err(Error::InvalidInput(format!(
                "n_units = {n} but the design describes {} units",
                design.n_units()
            )));
        }
    }
    Ok(design)
}

/// Parses one estimand spec string as used in study files and CLI flags:
/// `aon`, `sq1`, `sq0`, `mean-po-0`, `mean-po-1`, `stoch:<alpha>`,
/// `stoch-contrast:<from>:<to>`, or `plus-<k>`.
pub fn parse_estimand_spec(text: &str) -> Result<EstimandSpec> {
    match text {
        "aon" => return Ok(EstimandSpec::AllOrNone),
        "sq1" => return Ok(EstimandSpec::StatusQuoVsNone),
        "sq0" => return Ok(EstimandSpec::AllVsStatusQuo),
        "mean-po-0" => return Ok(EstimandSpec::MeanPo { arm: 0 }),
        "mean-po-1" => return Ok(EstimandSpec::MeanPo { arm: 1 }),
        _ => {}
    }
    if let Some(rest) = text.strip_prefix("stoch-contrast:") {
        let (from, to) = rest.split_once(':').ok_or_else(|| {
            Error::InvalidInput(format!("{text:?} needs the form stoch-contrast:<from>:<to>"))
        })?;
        return Ok(EstimandSpec::StochasticContrastBernoulli {
            from: parse_ratio(from)?,
            to: parse_ratio(to)?,
        });
    }
    if let Some(alpha) = text.strip_prefix("stoch:") {
        return Ok(EstimandSpec::StochasticBernoulli {
            alpha: parse_ratio(alpha)?,
        });
    }
    if let Some(k) = text.strip_prefix("plus-") {
        let k: usize = k
            .parse()
            .map_err(|_| Error::InvalidInput(format!("{text:?} needs an integer K")))?;
        return Ok(EstimandSpec::PlusK { k });
    }
    Err(Error::InvalidInput(format!("unknown estimand spec {text:?}")))
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct StudySpecFile {
    n_replications: usize,
    po_family: String,
    output: Option<String>,
    graph: Vec<GraphEntry>,
    design: StudyDesignEntry,
    estimands: Option<Vec<String>>,
    test: Option<Vec<TestEntry>>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphEntry {
    family: String,
    m: Option<usize>,
    n: Option<usize>,
    sizes: Option<Vec<usize>>,
    max_degree: Option<usize>,
    overlap_rate: Option<f64>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyDesignEntry {
    kind: String,
    p: Option<toml::Value>,
    treated_fraction: Option<toml::Value>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct TestEntry {
    statistic: String,
    summary: Option<String>,
    draws: usize,
    alpha: Option<f64>,
}

fn graph_entry_to_family(entry: &GraphEntry) -> Result<GraphFamily> {
    let kind = entry.family.as_str();
    match kind {
        "one_to_one" => Ok(GraphFamily::OneToOne {
            m: require(entry.m, kind, "m")?,
        }),
        "single_parent" => {
            let sizes = match (&entry.sizes, entry.m) {
                (Some(sizes), None) => sizes.clone(),
                (None, Some(m)) => cycling_cluster_sizes(m),
                _ => {
                    return Err(Error::InvalidInput(
                        "single_parent takes either sizes or m, not both".into(),
                    ))
                }
            };
            Ok(GraphFamily::SingleParent { sizes })
        }
        "general" => Ok(GraphFamily::General {
            n: require(entry.n, kind, "n")?,
            m: require(entry.m, kind, "m")?,
            max_degree: require(entry.max_degree, kind, "max_degree")?,
            overlap_rate: require(entry.overlap_rate, kind, "overlap_rate")?,
        }),
        other => Err(Error::InvalidInput(format!("unknown graph family {other:?}"))),
    }
}

/// Reads a TOML study spec. Seeds come from the caller (the CLI's `--seed`),
/// never from the file, so a rerun with a fresh seed needs no file edits.
pub fn read_study_spec(path: &Path, seed: u64, po_seed: Option<u64>) -> Result<SimStudySpec> {
    let source = fs::read_to_string(path)?;
    let file: StudySpecFile = toml::from_str(&source).map_err(|e| toml_err(path, &source, e))?;
    let graphs = file
        .graph
        .iter()
        .map(graph_entry_to_family)
        .collect::<Result<Vec<_>>>()?;
    let design = match file.design.kind.as_str() {
        "bernoulli" => DesignSpec::Bernoulli {
            p: prob_from_toml(&require(file.design.p, "bernoulli", "p")?, "p")?,
        },
        "crd" => DesignSpec::Crd {
            treated_fraction: prob_from_toml(
                &require(file.design.treated_fraction, "crd", "treated_fraction")?,
                "treated_fraction",
            )?,
        },
        other => {
            return Err(Error::InvalidInput(format!(
                "study designs are bernoulli or crd, got {other:?}"
            )));
        }
    };
    let estimands = file
        .estimands
        .unwrap_or_default()
        .iter()
        .map(|s| parse_estimand_spec(s))
        .collect::<Result<Vec<_>>>()?;
    let tests = file
        .test
        .unwrap_or_default()
        .into_iter()
        .map(|t| {
            let summary = match &t.summary {
                Some(s) => SummaryFn::parse(s)?,
                None => SummaryFn::Mean,
            };
            Ok(TestSpec {
                statistic: Statistic::parse(&t.statistic, summary)?,
                n_draws: t.draws,
                alpha: t.alpha.unwrap_or(0.05),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimStudySpec {
        graphs,
        design,
        po_family: PoFamily::parse(&file.po_family)?,
        po_seed: po_seed.unwrap_or(seed),
        seed,
        n_replications: file.n_replications,
        estimands,
        tests,
        output: file.output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn edge_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "edges.csv",
            "intervention_id,outcome_id\n1,1\n1,2\n2,2\n2,3\n",
        );
        let g = read_graph(&path).unwrap();
        assert_eq!(g.n_intervention(), 2);
        assert_eq!(g.n_outcome(), 3);
        assert_eq!(g.intervention_set(1), &[0, 1]);
    }

    #[test]
    fn malformed_edge_row_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "edges.csv",
            "intervention_id,outcome_id\n1,1\nx,2\n",
        );
        match read_graph(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "edges.csv", "a,b\n1,1\n");
        assert!(matches!(read_graph(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn treatments_and_outcomes_cover_all_ids() {
        let dir = tempfile::tempdir().unwrap();
        let w_path = write_file(&dir, "w.csv", "intervention_id,w\n2,0\n1,1\n");
        assert_eq!(read_treatments(&w_path).unwrap(), vec![1, 0]);
        let y_path = write_file(&dir, "y.csv", "outcome_id,y\n1,4.5\n2,-1\n");
        assert_eq!(read_outcomes(&y_path).unwrap(), vec![4.5, -1.0]);
        let gap = write_file(&dir, "gap.csv", "outcome_id,y\n1,4.5\n3,1\n");
        assert!(read_outcomes(&gap).is_err());
        let dup = write_file(&dir, "dup.csv", "intervention_id,w\n1,0\n1,1\n");
        assert!(read_treatments(&dup).is_err());
        let bad = write_file(&dir, "bad.csv", "intervention_id,w\n1,2\n");
        assert!(read_treatments(&bad).is_err());
    }

    #[test]
    fn strata_file_preserves_first_appearance_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "strata.csv",
            "intervention_id,stratum_id\n1,b\n2,a\n3,b\n",
        );
        let strata = read_strata(&path).unwrap();
        assert_eq!(strata.n_strata(), 2);
        assert_eq!(strata.label(0), "b");
        assert_eq!(strata.members(0), &[0, 2]);
    }

    #[test]
    fn po_table_reader_checks_completeness() {
        let dir = tempfile::tempdir().unwrap();
        let g = BipartiteGraph::new(2, 2, &[(0, 0), (0, 1), (1, 1)]).unwrap();
        let full = write_file(
            &dir,
            "po.csv",
            "outcome_id,local_vector_bits,y\n1,0,1\n1,1,2\n2,00,3\n2,10,4\n2,01,5\n2,11,6\n",
        );
        let po = read_po_table(&full, &g).unwrap();
        assert_eq!(po.y_local(0, &[1]).unwrap(), 2.0);
        assert_eq!(po.y_local(1, &[1, 0]).unwrap(), 4.0);
        assert_eq!(po.y_local(1, &[0, 1]).unwrap(), 5.0);
        let missing = write_file(
            &dir,
            "po_missing.csv",
            "outcome_id,local_vector_bits,y\n1,0,1\n1,1,2\n2,00,3\n",
        );
        assert!(read_po_table(&missing, &g).is_err());
    }

    #[test]
    fn design_configs_for_every_kind() {
        let dir = tempfile::tempdir().unwrap();
        let bern = write_file(&dir, "b.toml", "kind = \"bernoulli\"\nn_units = 3\np = \"1/3\"\n");
        let d = read_design_config(&bern).unwrap();
        assert_eq!(d.marginal_prob(&[0], &[1]).unwrap(), ratio(1, 3));

        let crd = write_file(&dir, "c.toml", "kind = \"crd\"\nn_units = 4\nn_treated = 2\n");
        assert_eq!(read_design_config(&crd).unwrap().fixed_treated_count(), Some(2));

        write_file(&dir, "strata.csv", "intervention_id,stratum_id\n1,a\n2,a\n3,z\n");
        let sb = write_file(
            &dir,
            "sb.toml",
            "kind = \"stratified_bernoulli\"\nstrata_file = \"strata.csv\"\n[p_by_stratum]\na = 0.5\nz = \"1/4\"\n",
        );
        let d = read_design_config(&sb).unwrap();
        assert_eq!(d.marginal_prob(&[2], &[1]).unwrap(), ratio(1, 4));

        let sc = write_file(
            &dir,
            "sc.toml",
            "kind = \"stratified_crd\"\nstrata_file = \"strata.csv\"\n[n_treated_by_stratum]\na = 1\nz = 1\n",
        );
        let d = read_design_config(&sc).unwrap();
        assert_eq!(d.fixed_treated_count(), Some(2));

        let pm = write_file(&dir, "pm.toml", "kind = \"point_mass\"\nw = [1, 0]\n");
        assert_eq!(read_design_config(&pm).unwrap().n_units(), 2);

        let tab = write_file(
            &dir,
            "t.toml",
            "kind = \"tabulated\"\n[[rows]]\nw = [0, 1]\np = \"1/2\"\n[[rows]]\nw = [1, 0]\np = 0.5\n",
        );
        assert_eq!(read_design_config(&tab).unwrap().n_units(), 2);
    }

    #[test]
    fn design_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let unknown = write_file(&dir, "u.toml", "kind = \"systematic\"\n");
        assert!(read_design_config(&unknown).is_err());
        let missing = write_file(&dir, "m.toml", "kind = \"bernoulli\"\np = \"1/2\"\n");
        assert!(matches!(read_design_config(&missing), Err(Error::InvalidInput(_))));
        let bad_toml = write_file(&dir, "bad.toml", "kind = \"bernoulli\"\nn_units = = 3\n");
        match read_design_config(&bad_toml) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let mismatch = write_file(&dir, "n.toml", "kind = \"point_mass\"\nn_units = 3\nw = [1, 0]\n");
        assert!(read_design_config(&mismatch).is_err());
    }

    #[test]
    fn estimand_specs_parse() {
        assert!(matches!(parse_estimand_spec("aon"), Ok(EstimandSpec::AllOrNone)));
        assert!(matches!(
            parse_estimand_spec("mean-po-1"),
            Ok(EstimandSpec::MeanPo { arm: 1 })
        ));
        match parse_estimand_spec("stoch:2/3").unwrap() {
            EstimandSpec::StochasticBernoulli { alpha } => assert_eq!(alpha, ratio(2, 3)),
            other => panic!("{other:?}"),
        }
        match parse_estimand_spec("stoch-contrast:1/4:3/4").unwrap() {
            EstimandSpec::StochasticContrastBernoulli { from, to } => {
                assert_eq!(from, ratio(1, 4));
                assert_eq!(to, ratio(3, 4));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_estimand_spec("plus-2"), Ok(EstimandSpec::PlusK { k: 2 })));
        assert!(parse_estimand_spec("ate").is_err());
    }

    #[test]
    fn study_spec_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "study.toml",
            r#"
n_replications = 100
po_family = "additive"
output = "trend"

[[graph]]
family = "single_parent"
m = 50

[[graph]]
family = "general"
n = 10
m = 80
max_degree = 3
overlap_rate = 0.1

[design]
kind = "bernoulli"
p = "1/2"

estimands = ["mean-po-1", "aon"]

[[test]]
statistic = "ols_total_experience"
draws = 200
"#,
        );
        let spec = read_study_spec(&path, 7, None).unwrap();
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.po_seed, 7);
        assert_eq!(spec.n_replications, 100);
        assert_eq!(spec.graphs.len(), 2);
        assert!(matches!(
            &spec.graphs[0],
            GraphFamily::SingleParent { sizes } if sizes.iter().sum::<usize>() == 50
        ));
        assert_eq!(spec.estimands.len(), 2);
        assert_eq!(spec.tests.len(), 1);
        assert_eq!(spec.tests[0].alpha, 0.05);
        assert_eq!(spec.output.as_deref(), Some("trend"));
    }
}
