use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::io::format_real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Undirected weighted graph with node features, labels and a split.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub n_nodes: usize,
    /// Both orientations of every undirected edge, sorted, no self-loops.
    pub edges: Vec<(usize, usize, f64)>,
    pub features: Tensor<f64>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    /// Split of each node; `None` for nodes outside every mask.
    pub split: Vec<Option<Split>>,
}

impl GraphSpec {
    /// Builds a graph from undirected edges given in either or both
    /// orientations. Conflicting weights for the same pair are an error;
    /// self-loops are dropped (normalization adds its own).
    pub fn new(
        n_nodes: usize,
        edges: &[(usize, usize, f64)],
        features: Tensor<f64>,
        labels: Vec<usize>,
        split: Vec<Option<Split>>,
    ) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::Format("graph has no nodes".into()));
        }
        if features.rows() != n_nodes || labels.len() != n_nodes || split.len() != n_nodes {
            return Err(Error::Format(format!(
                "{n_nodes} nodes but {} feature rows, {} labels and {} split entries",
                features.rows(),
                labels.len(),
                split.len()
            )));
        }
        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut self_loops = 0;
        for &(i, j, w) in edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::Format(format!("edge ({i}, {j}) references a node outside 0..{n_nodes}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Format(format!("edge ({i}, {j}) has non-positive weight {w}")));
            }
            if i == j {
                self_loops += 1;
                continue;
            }
            let key = (i.min(j), i.max(j));
            match pairs.get(&key) {
                Some(&old) if old != w => {
                    return Err(Error::Format(format!("edge ({i}, {j}) listed with weights {old} and {w}")));
                }
                _ => {
                    pairs.insert(key, w);
                }
            }
        }
        if self_loops > 0 {
            log::warn!("dropped {self_loops} self-loop(s); normalization adds its own");
        }
        let mut all: Vec<(usize, usize, f64)> = pairs.iter().flat_map(|(&(i, j), &w)| [(i, j, w), (j, i, w)]).collect();
        all.sort_by_key(|a| (a.0, a.1));
        let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        Ok(GraphSpec { n_nodes, edges: all, features, labels, n_classes, split })
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn undirected_edge_count(&self) -> usize {
        self.edges.len() / 2
    }

    pub fn nodes_in(&self, split: Split) -> Vec<usize> {
        (0..self.n_nodes).filter(|&i| self.split[i] == Some(split)).collect()
    }

    /// Neighbours of every node (excluding itself).
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(i, j, w) in &self.edges {
            adj[i].push((j, w));
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n_nodes];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &(j, _) in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Fraction of undirected edges joining nodes of the same class.
    pub fn edge_homophily(&self) -> f64 {
        if self.edges.is_empty() {
            return f64::NAN;
        }
        let same = self.edges.iter().filter(|&&(i, j, _)| self.labels[i] == self.labels[j]).count();
        same as f64 / self.edges.len() as f64
    }

    /// Writes `edges.csv`, `features.csv`, `labels.csv` and `masks.csv`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut edges = String::from("src,dst,weight\n");
        for &(i, j, w) in self.edges.iter().filter(|e| e.0 < e.1) {
            edges.push_str(&format!("{i},{j},{}\n", format_real(w)));
        }
        std::fs::write(dir.join("edges.csv"), edges)?;

        let mut features = String::from("node");
        for k in 0..self.feature_dim() {
            features.push_str(&format!(",f{k}"));
        }
        features.push('\n');
        for i in 0..self.n_nodes {
            features.push_str(&i.to_string());
            for &v in self.features.row(i) {
                features.push(',');
                features.push_str(&format_real(v));
            }
            features.push('\n');
        }
        std::fs::write(dir.join("features.csv"), features)?;

        let mut labels = String::from("node,class\n");
        let mut masks = String::from("node,split\n");
        for i in 0..self.n_nodes {
            labels.push_str(&format!("{i},{}\n", self.labels[i]));
            if let Some(s) = self.split[i] {
                masks.push_str(&format!("{i},{}\n", s.name()));
            }
        }
        std::fs::write(dir.join("labels.csv"), labels)?;
        std::fs::write(dir.join("masks.csv"), masks)?;
        Ok(())
    }
}

/// Rows of a headerless-or-headed CSV file. A first row whose first field
/// is not a number is treated as a header and skipped.
fn read_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if k == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: Option<&String>) -> Result<T> {
    field
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::Format(format!("{}: row {} has a malformed field", path.display(), line + 1)))
}

fn node_index(path: &Path, line: usize, field: Option<&String>, n: usize) -> Result<usize> {
    let i: usize = parse_field(path, line, field)?;
    if i >= n {
        return Err(Error::Format(format!("{}: node {i} outside 0..{n}", path.display())));
    }
    Ok(i)
}

/// Loads a graph from the four CSV files. The node count is the number of
/// feature rows; node ids must cover `0..n` exactly once there.
pub fn load_graph_csv(edges: &Path, features: &Path, labels: &Path, masks: &Path) -> Result<GraphSpec> {
    let feat_rows = read_rows(features)?;
    let n = feat_rows.len();
    if n == 0 {
        return Err(Error::Format(format!("{}: no feature rows", features.display())));
    }
    let d = feat_rows[0].len() - 1;
    let mut data = vec![f64::NAN; n * d];
    let mut seen = vec![false; n];
    for (line, row) in feat_rows.iter().enumerate() {
        if row.len() != d + 1 {
            return Err(Error::Format(format!("{}: row {} has {} fields", features.display(), line + 1, row.len())));
        }
        let i = node_index(features, line, row.first(), n)?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Format(format!("{}: node {i} listed twice", features.display())));
        }
        for k in 0..d {
            data[i * d + k] = parse_field(features, line, row.get(k + 1))?;
        }
    }
    let features_t = Tensor::matrix(n, d, data)?;

    let mut label_vec = vec![usize::MAX; n];
    for (line, row) in read_rows(labels)?.iter().enumerate() {
        let i = node_index(labels, line, row.first(), n)?;
        label_vec[i] = parse_field(labels, line, row.get(1))?;
    }
    if let Some(i) = label_vec.iter().position(|&l| l == usize::MAX) {
        return Err(Error::Format(format!("{}: node {i} has no label", labels.display())));
    }

    let mut split = vec![None; n];
    for (line, row) in read_rows(masks)?.iter().enumerate() {
        let i = node_index(masks, line, row.first(), n)?;
        let s = match row.get(1).map(|s| s.to_ascii_lowercase()).as_deref() {
            Some("train") => Split::Train,
            Some("val") | Some("valid") | Some("validation") => Split::Val,
            Some("test") => Split::Test,
            _ => return Err(Error::Format(format!("{}: row {} has an unknown split", masks.display(), line + 1))),
        };
        if split[i].is_some_and(|old| old != s) {
            return Err(Error::Format(format!("{}: node {i} is in two splits", masks.display())));
        }
        split[i] = Some(s);
    }

    let mut edge_list = Vec::new();
    for (line, row) in read_rows(edges)?.iter().enumerate() {
        let i = node_index(edges, line, row.first(), n)?;
        let j = node_index(edges, line, row.get(1), n)?;
        let w = match row.get(2) {
            Some(_) => parse_field(edges, line, row.get(2))?,
            None => 1.0,
        };
        edge_list.push((i, j, w));
    }
    GraphSpec::new(n, &edge_list, features_t, label_vec, split)
}

/// [`load_graph_csv`] on the standard file names inside `dir`.
pub fn load_graph_dir(dir: &Path) -> Result<GraphSpec> {
    load_graph_csv(
        &dir.join("edges.csv"),
        &dir.join("features.csv"),
        &dir.join("labels.csv"),
        &dir.join("masks.csv"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SbmConfig {
    pub nodes: usize,
    pub classes: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub signal: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig { nodes: 200, classes: 2, p_in: 0.1, p_out: 0.01, feature_dim: 8, signal: 1.0, seed: 0 }
    }
}

const SBM_ATTEMPTS: usize = 10;

/// Stochastic block model with equal-size blocks. Class means put
/// `±signal` on the first feature (two classes) or `signal` on feature
/// `c` (more classes), plus unit Gaussian noise. Split 60/20/20.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<GraphSpec> {
    if cfg.nodes < cfg.classes || cfg.classes < 2 {
        return Err(Error::domain("SBM needs at least two classes and one node per class"));
    }
    if !(0.0 <= cfg.p_out && cfg.p_out <= cfg.p_in && cfg.p_in <= 1.0 && cfg.p_in > 0.0) {
        return Err(Error::domain(format!(
            "SBM probabilities must satisfy 0 <= p_out <= p_in <= 1, p_in > 0 (got {}, {})",
            cfg.p_out, cfg.p_in
        )));
    }
    if cfg.feature_dim == 0 || (cfg.classes > 2 && cfg.feature_dim < cfg.classes) {
        return Err(Error::domain("feature dimension too small for the class means"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.nodes;
    let labels: Vec<usize> = (0..n).map(|i| i * cfg.classes / n).collect();
    let d = cfg.feature_dim;
    let mut data: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    for (i, &c) in labels.iter().enumerate() {
        if cfg.classes == 2 {
            data[i * d] += if c == 0 { cfg.signal } else { -cfg.signal };
        } else {
            data[i * d + c] += cfg.signal;
        }
    }
    let features = Tensor::matrix(n, d, data)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = (0.6 * n as f64).round() as usize;
    let n_val = (0.2 * n as f64).round() as usize;
    let mut split = vec![None; n];
    for (rank, &i) in order.iter().enumerate() {
        split[i] = Some(if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        });
    }

    let mut graph = None;
    for attempt in 1..=SBM_ATTEMPTS {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = if labels[i] == labels[j] { cfg.p_in } else { cfg.p_out };
                if rng.random::<f64>() < p {
                    edges.push((i, j, 1.0));
                }
            }
        }
        let g = GraphSpec::new(n, &edges, features.clone(), labels.clone(), split.clone())?;
        if g.is_connected() {
            return Ok(g);
        }
        log::debug!("SBM attempt {attempt} produced a disconnected graph");
        graph = Some(g);
    }
    log::warn!("SBM graph still disconnected after {SBM_ATTEMPTS} attempts; using the last draw");
    graph.ok_or_else(|| Error::domain("no graph generated"))
}
