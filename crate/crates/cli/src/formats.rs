//! On-disk formats: graph JSON, the result-bundle artifacts, and the
//! consensus plan. All JSON is emitted pretty-printed with a trailing
//! newline so reruns diff cleanly.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use minpoly_core::consensus::ConsensusPlan;
use minpoly_core::graph::{Graph, GraphError};
use minpoly_core::laplacian::WeightMap;
use minpoly_core::matrix::SymMatrix;
use minpoly_core::minpoly::HistoryRow;
use minpoly_core::spectral::Ledger;

/// `{"n": 4, "edges": [[0, 1], [1, 2], ...]}` with 0-indexed vertices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl GraphFile {
    pub fn from_graph(g: &Graph) -> Self {
        Self { n: g.n(), edges: g.edges().collect() }
    }

    pub fn to_graph(&self) -> Result<Graph, GraphError> {
        Graph::new(self.n, self.edges.iter().copied())
    }
}

/// Dense symmetric matrix as row vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_sym(m: &SymMatrix) -> Self {
        let n = m.dim();
        let rows = (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect();
        Self { n, rows }
    }

    pub fn to_sym(&self) -> Result<SymMatrix, String> {
        if self.rows.len() != self.n || self.rows.iter().any(|r| r.len() != self.n) {
            return Err(format!("matrix rows do not form an {0} x {0} square", self.n));
        }
        let m = DMatrix::from_fn(self.n, self.n, |i, j| self.rows[i][j]);
        let max_skew = (&m - m.transpose()).abs().max();
        if max_skew > 1e-9 {
            return Err(format!("matrix is asymmetric by {max_skew:.3e}"));
        }
        Ok(SymMatrix::from_symmetric(m))
    }
}

/// One weighted edge; the list is sorted by `(i, j)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightEntry {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

pub fn weight_entries(w: &WeightMap) -> Vec<WeightEntry> {
    w.iter().map(|((i, j), weight)| WeightEntry { i, j, weight }).collect()
}

/// Confirmed eigenvalue ledger: distinct values with their multiplicities
/// and the running distinct count `xi`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerFile {
    pub xi: usize,
    pub entries: Vec<LedgerEntryFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerEntryFile {
    pub value: f64,
    pub multiplicity: usize,
}

impl LedgerFile {
    pub fn from_ledger(ledger: &Ledger) -> Self {
        let entries = ledger
            .entries()
            .iter()
            .map(|e| LedgerEntryFile { value: e.value, multiplicity: e.multiplicity })
            .collect();
        Self { xi: ledger.entries().len(), entries }
    }
}

/// A self-contained consensus plan: the graph it runs on, the Perron matrix
/// `P`, the weighted-sum coefficients `pi`, the distinct-eigenvalue count
/// `s`, and the Laplacian-to-Perron scale `epsilon`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanFile {
    pub graph: GraphFile,
    pub epsilon: f64,
    pub s: usize,
    pub pi: Vec<f64>,
    pub p: MatrixFile,
}

impl PlanFile {
    pub fn from_plan(g: &Graph, plan: &ConsensusPlan) -> Self {
        Self {
            graph: GraphFile::from_graph(g),
            epsilon: plan.epsilon,
            s: plan.s,
            pi: plan.pi.clone(),
            p: MatrixFile::from_sym(&plan.p),
        }
    }

    pub fn to_plan(&self) -> Result<(Graph, ConsensusPlan), String> {
        let g = self.graph.to_graph().map_err(|e| e.to_string())?;
        let p = self.p.to_sym()?;
        if p.dim() != g.n() {
            return Err(format!(
                "plan matrix is {} x {} but the graph has {} vertices",
                p.dim(),
                p.dim(),
                g.n()
            ));
        }
        if self.pi.len() != self.s {
            return Err(format!(
                "plan lists {} coefficients but claims s = {}",
                self.pi.len(),
                self.s
            ));
        }
        let plan =
            ConsensusPlan { p, s: self.s, pi: self.pi.clone(), epsilon: self.epsilon };
        Ok((g, plan))
    }
}

/// One line of the `simulate --log` JSONL stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MessageLine {
    pub round: usize,
    pub from: usize,
    pub to: usize,
    pub value: f64,
}

pub fn write_json<T: Serialize>(mut w: impl Write, value: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)
}

/// History table writer: `k,step,spectrum,order` with the spectrum as one
/// space-separated field rounded to four decimals.
pub fn write_history_csv(w: impl Write, rows: &[HistoryRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "step", "spectrum", "order"])?;
    for row in rows {
        let spectrum: Vec<String> = row.spectrum.iter().map(|v| format!("{v:.4}")).collect();
        out.write_record([
            row.k.to_string(),
            row.step.to_string(),
            spectrum.join(" "),
            row.order.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
