//! Threshold, landscape and oracle tables.

use nodecount::ocs::{linspace, ocs_landscape};
use nodecount::thresholds::{MAX_BRUTEFORCE_CLASSICAL, MAX_SUBSET_SEARCH_NODES};
use nodecount::{threshold_bruteforce_max, threshold_closed_form, Graph, Target};
use rayon::prelude::*;

use crate::{opt, Result};

/// Agreement required between brute force and the closed form.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

/// Columns `n_c, F_closed_form, F_bruteforce, abs_diff` for `n_c` in
/// `1..=max_nc`. The brute-force columns are filled only when `graph` is
/// given and the row fits the brute-force caps (`n_c < n`).
pub fn thresholds_csv(max_nc: u32, graph: Option<&Target>) -> Result<String> {
    let brute: Vec<Option<f64>> = (1..=max_nc)
        .into_par_iter()
        .map(|nc| match graph {
            Some(t)
                if (nc as usize) < t.n()
                    && nc as usize <= MAX_BRUTEFORCE_CLASSICAL
                    && t.n() <= MAX_SUBSET_SEARCH_NODES =>
            {
                threshold_bruteforce_max(t, nc as usize).map(|r| Some(r.value))
            }
            _ => Ok(None),
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n_c", "F_closed_form", "F_bruteforce", "abs_diff"])?;
    for (nc, b) in (1..=max_nc).zip(brute) {
        let f = threshold_closed_form(nc)?;
        w.write_record([
            nc.to_string(),
            f.to_string(),
            opt(b),
            opt(b.map(|b| (b - f).abs())),
        ])?;
    }
    finish(w)
}

/// Columns `theta, phi, fidelity` over `theta` in `[0, pi/2]` and `phi` in
/// `[-pi, pi]`, `theta` outer.
pub fn landscape_csv(
    n_q: usize,
    n_c: usize,
    theta_steps: usize,
    phi_steps: usize,
) -> Result<String> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let thetas = linspace(0.0, FRAC_PI_2, theta_steps);
    let phis = linspace(-PI, PI, phi_steps);
    let grid = ocs_landscape(n_q, n_c, &thetas, &phis)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["theta", "phi", "fidelity"])?;
    for (theta, row) in thetas.iter().zip(&grid) {
        for (phi, f) in phis.iter().zip(row) {
            w.write_record([theta.to_string(), phi.to_string(), f.to_string()])?;
        }
    }
    finish(w)
}

/// Brute-force maximum over every classical subset of size `n_c` compared
/// with the closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub graph: String,
    pub n: usize,
    pub n_c: usize,
    pub best_v_c: Vec<usize>,
    pub bruteforce: f64,
    pub closed_form: f64,
    pub abs_diff: f64,
}

impl OracleRow {
    pub fn pass(&self) -> bool {
        self.abs_diff <= ORACLE_TOLERANCE
    }
}

/// Star, chain and ring graph states with `2 <= n <= max_n` (rings from 3,
/// chains from 3 since the 2-chain is the 2-star).
pub fn oracle_corpus(max_n: usize) -> Result<Vec<(String, Target)>> {
    let mut out = Vec::new();
    for n in 2..=max_n {
        out.push((format!("star{n}"), Graph::star(n, 0)?.into()));
        if n >= 3 {
            out.push((format!("chain{n}"), Graph::chain(n)?.into()));
            out.push((format!("ring{n}"), Graph::ring(n)?.into()));
        }
    }
    Ok(out)
}

/// One row per graph and `n_c` in `1..=min(max_nc, n - 1)`.
pub fn oracle_check(graphs: &[(String, Target)], max_nc: usize) -> Result<Vec<OracleRow>> {
    let cases: Vec<(&String, &Target, usize)> = graphs
        .iter()
        .flat_map(|(name, t)| {
            (1..=max_nc.min(t.n().saturating_sub(1))).map(move |nc| (name, t, nc))
        })
        .collect();
    cases
        .par_iter()
        .map(|&(name, t, nc)| {
            let r = threshold_bruteforce_max(t, nc)?;
            let closed = threshold_closed_form(nc as u32)?;
            Ok(OracleRow {
                graph: name.clone(),
                n: t.n(),
                n_c: nc,
                best_v_c: r.v_c,
                bruteforce: r.value,
                closed_form: closed,
                abs_diff: (r.value - closed).abs(),
            })
        })
        .collect()
}

pub fn oracle_csv(rows: &[OracleRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "graph",
        "n",
        "n_c",
        "best_v_c",
        "F_bruteforce",
        "F_closed_form",
        "abs_diff",
        "pass",
    ])?;
    for r in rows {
        let v_c: Vec<String> = r.best_v_c.iter().map(|v| v.to_string()).collect();
        w.write_record([
            r.graph.clone(),
            r.n.to_string(),
            r.n_c.to_string(),
            v_c.join(" "),
            r.bruteforce.to_string(),
            r.closed_form.to_string(),
            r.abs_diff.to_string(),
            r.pass().to_string(),
        ])?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_table_without_graph() {
        let csv = thresholds_csv(2, None).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n_c,F_closed_form,F_bruteforce,abs_diff");
        assert!(lines[1].starts_with("1,0.6830127"));
        assert!(lines[2].ends_with(",,"));
    }

    #[test]
    fn threshold_table_with_star() {
        let t = Target::ghz(4).unwrap();
        let csv = thresholds_csv(4, Some(&t)).unwrap();
        for line in csv.lines().skip(1).take(3) {
            let diff: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
            assert!(diff < 1e-9, "{line}");
        }
        assert!(csv.lines().nth(4).unwrap().ends_with(",,"));
    }

    #[test]
    fn oracle_rows_for_stars_pass() {
        let graphs = vec![(
            "star4".to_string(),
            Target::from(Graph::star(4, 0).unwrap()),
        )];
        let rows = oracle_check(&graphs, 3).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(OracleRow::pass));
    }

    #[test]
    fn landscape_shape() {
        let csv = landscape_csv(1, 1, 3, 4).unwrap();
        assert_eq!(csv.lines().count(), 1 + 12);
    }
}
