use std::io::{self, Write};

use super::DECREASE_TOL;

pub const CSV_HEADER: &str = "k,psi,dh_gap,step_norm,witness_norm,elapsed_s";

/// Per-iteration record. Iteration 0 holds the starting point only.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub psi: f64,
    /// `D_h(x^k, x^{k-1})`.
    pub dh_gap: f64,
    /// `||x^k - x^{k-1}||`.
    pub step_norm: f64,
    pub witness_norm: Option<f64>,
    /// `max(||grad g(x^k) - grad g(x^{k-1})||, ||grad h(x^k) - grad h(x^{k-1})||) / ||x^k - x^{k-1}||`.
    pub local_lipschitz: Option<f64>,
    pub elapsed_s: f64,
}

/// A broken trace inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceViolation {
    pub k: usize,
    pub check: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    records: Vec<IterateRecord>,
}

impl IterateTrace {
    pub fn new(psi0: f64, elapsed_s: f64) -> Self {
        IterateTrace {
            records: vec![IterateRecord {
                k: 0,
                psi: psi0,
                dh_gap: 0.0,
                step_norm: 0.0,
                witness_norm: None,
                local_lipschitz: None,
                elapsed_s,
            }],
        }
    }

    /// Builds a trace from raw records; the first must be iteration 0.
    pub fn from_records(records: Vec<IterateRecord>) -> Option<Self> {
        (records.first()?.k == 0).then_some(IterateTrace { records })
    }

    pub fn push(&mut self, record: IterateRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[IterateRecord] {
        &self.records
    }

    /// Records for iterations `k >= 1`.
    pub fn steps(&self) -> &[IterateRecord] {
        &self.records[1..]
    }

    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn initial_psi(&self) -> f64 {
        self.records[0].psi
    }

    pub fn last(&self) -> Option<&IterateRecord> {
        self.records.last()
    }

    /// The first `n` iterations (plus the starting record).
    pub fn truncated(&self, n: usize) -> IterateTrace {
        IterateTrace { records: self.records[..(n + 1).min(self.records.len())].to_vec() }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:e}"));
            let (gap, step) = if r.k == 0 {
                (String::new(), String::new())
            } else {
                (format!("{:e}", r.dh_gap), format!("{:e}", r.step_norm))
            };
            writeln!(
                out,
                "{},{:e},{},{},{},{:e}",
                r.k,
                r.psi,
                gap,
                step,
                opt(r.witness_norm),
                r.elapsed_s
            )?;
        }
        Ok(())
    }

    fn pairs(&self) -> impl Iterator<Item = (&IterateRecord, &IterateRecord)> {
        self.records.windows(2).map(|w| (&w[0], &w[1]))
    }

    /// `Psi(x^k) <= Psi(x^{k-1}) + tol` for every step.
    pub fn monotonicity_violations(&self) -> Vec<TraceViolation> {
        self.pairs()
            .filter(|(prev, _)| prev.psi.is_finite())
            .filter(|(prev, next)| next.psi > prev.psi + DECREASE_TOL * (1.0 + prev.psi.abs()))
            .map(|(prev, next)| TraceViolation { k: next.k, check: "monotone", lhs: next.psi, rhs: prev.psi })
            .collect()
    }

    /// `lambda (Psi(x^{k-1}) - Psi(x^k)) >= (1 - lambda L) D_h(x^k, x^{k-1}) - tol`.
    pub fn sufficient_decrease_violations(&self, lambda: f64, l: f64) -> Vec<TraceViolation> {
        self.pairs()
            .filter(|(prev, _)| prev.psi.is_finite())
            .filter_map(|(prev, next)| {
                let lhs = lambda * (prev.psi - next.psi);
                let rhs = (1.0 - lambda * l) * next.dh_gap;
                (lhs < rhs - DECREASE_TOL * (1.0 + prev.psi.abs())).then_some(TraceViolation {
                    k: next.k,
                    check: "sufficient_decrease",
                    lhs,
                    rhs,
                })
            })
            .collect()
    }

    /// `Psi(x^{k-1}) - Psi(x^k) >= (1/lambda - L) (sigma/2) ||x^k - x^{k-1}||^2`.
    pub fn c1_violations(&self, lambda: f64, l: f64, sigma: f64) -> Vec<TraceViolation> {
        self.pairs()
            .filter(|(prev, _)| prev.psi.is_finite())
            .filter_map(|(prev, next)| {
                let lhs = prev.psi - next.psi;
                let rhs = (1.0 / lambda - l) * 0.5 * sigma * next.step_norm * next.step_norm;
                (lhs < rhs - DECREASE_TOL * (1.0 + prev.psi.abs())).then_some(TraceViolation {
                    k: next.k,
                    check: "c1",
                    lhs,
                    rhs,
                })
            })
            .collect()
    }

    /// Partial sums `sum_{k<=n} D_h(x^k, x^{k-1}) <= lambda (Psi(x^0) - lb) / (1 - lambda L)`.
    pub fn summability_violations(&self, lambda: f64, l: f64, lower_bound: f64) -> Vec<TraceViolation> {
        let bound = lambda * (self.initial_psi() - lower_bound) / (1.0 - lambda * l);
        if !bound.is_finite() {
            return Vec::new();
        }
        let mut partial = 0.0;
        let mut out = Vec::new();
        for r in self.steps() {
            partial += r.dh_gap;
            if partial > bound + DECREASE_TOL * (1.0 + bound.abs()) {
                out.push(TraceViolation { k: r.k, check: "summability", lhs: partial, rhs: bound });
            }
        }
        out
    }

    /// `min_{k<=n} ||x^k - x^{k-1}||^2 <= lambda (Psi(x^0) - lb) / (n sigma (1 - lambda L))` for every `n`.
    pub fn step_bound_violations(&self, lambda: f64, l: f64, lower_bound: f64, sigma: f64) -> Vec<TraceViolation> {
        let total = lambda * (self.initial_psi() - lower_bound) / (sigma * (1.0 - lambda * l));
        if !total.is_finite() {
            return Vec::new();
        }
        let mut best = f64::INFINITY;
        let mut out = Vec::new();
        for (n, r) in self.steps().iter().enumerate() {
            best = best.min(r.step_norm * r.step_norm);
            let bound = total / (n + 1) as f64;
            if best > bound + DECREASE_TOL * (1.0 + bound.abs()) {
                out.push(TraceViolation { k: r.k, check: "step_bound", lhs: best, rhs: bound });
            }
        }
        out
    }

    /// `||w^k|| <= rho2 ||x^k - x^{k-1}||` along the trace.
    pub fn witness_ratio_violations(&self, rho2: f64) -> Vec<TraceViolation> {
        self.steps()
            .iter()
            .filter_map(|r| {
                let w = r.witness_norm?;
                let rhs = rho2 * r.step_norm;
                (w > rhs * (1.0 + 1e-12) + f64::MIN_POSITIVE).then_some(TraceViolation {
                    k: r.k,
                    check: "witness_ratio",
                    lhs: w,
                    rhs,
                })
            })
            .collect()
    }
}
