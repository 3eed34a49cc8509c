//! OCS networks over a range of `(n_q, n_c)`.

use nodecount::sim::sub_seed;
use nodecount::{CountVerdict, FidelityEstimate, GraphSpec};
use rayon::prelude::*;

use crate::scenario::{run_scenario, Adversary, Reading, Scenario, Shots};
use crate::{opt, CliError, Result};

/// Shots of the pilot run used to size a [`GridMode::TargetError`] row.
pub const PILOT_SHOTS: u64 = 1000;
/// Largest per-setting shot count a target error may ask for.
pub const MAX_TUNED_SHOTS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridMode {
    Exact,
    Shots(u64),
    /// Shots per setting chosen from a pilot run so that the standard
    /// error comes out near this value.
    TargetError(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub n_q: usize,
    pub n_c: usize,
    pub fidelity: FidelityEstimate,
    pub threshold: Option<f64>,
    pub verdict: CountVerdict,
    pub s_ew: Option<f64>,
    pub s_nc: Option<f64>,
}

/// Scenario for one grid cell: `GHZ_{n_q + n_c}` with the last `n_c` nodes
/// playing the optimal cheating strategy. `reading` only affects `n_c = 1`.
pub fn grid_scenario(
    n_q: usize,
    n_c: usize,
    reading: Reading,
    shots: Shots,
    seed: u64,
) -> Scenario {
    let mut s = Scenario::ideal(GraphSpec::ghz(n_q + n_c));
    s.classical = (n_q..n_q + n_c).collect();
    if n_c > 0 {
        s.adversary = Adversary::OcsOptimal {
            reading: if n_c == 1 { reading } else { Reading::General },
        };
    }
    s.shots = shots;
    s.seed = seed;
    s
}

/// Runs every `(n_q, n_c)` cell in parallel; cell `i` (row-major, `n_q`
/// outer) uses seed `sub_seed(seed, i)`. Output order follows the ranges.
pub fn run_grid(
    n_q: &[usize],
    n_c: &[usize],
    mode: GridMode,
    reading: Reading,
    seed: u64,
) -> Result<Vec<GridRow>> {
    if n_q.contains(&0) {
        return Err(CliError::Config("n_q must be at least 1".into()));
    }
    if let GridMode::TargetError(e) = mode {
        if e.is_nan() || e <= 0.0 {
            return Err(CliError::Config(format!(
                "target error {e} must be positive"
            )));
        }
    }
    let cells: Vec<(usize, usize)> = n_q
        .iter()
        .flat_map(|&q| n_c.iter().map(move |&c| (q, c)))
        .collect();
    cells
        .par_iter()
        .enumerate()
        .map(|(i, &(q, c))| {
            let seed = sub_seed(seed, i as u64);
            let shots = match mode {
                GridMode::Exact => Shots::Exact,
                GridMode::Shots(k) => Shots::PerSetting(k),
                GridMode::TargetError(e) => {
                    let pilot = grid_scenario(
                        q,
                        c,
                        reading,
                        Shots::PerSetting(PILOT_SHOTS),
                        sub_seed(seed, 0),
                    );
                    let err = run_scenario(&pilot)?.fidelity.std_error;
                    let k = (PILOT_SHOTS as f64 * (err / e).powi(2)).ceil() as u64;
                    Shots::PerSetting(k.clamp(PILOT_SHOTS, MAX_TUNED_SHOTS))
                }
            };
            let r = run_scenario(&grid_scenario(q, c, reading, shots, seed))?;
            Ok(GridRow {
                n_q: q,
                n_c: c,
                fidelity: r.fidelity,
                threshold: r.threshold,
                verdict: r.verdict,
                s_ew: r.significance.ew,
                s_nc: r.significance.n_c,
            })
        })
        .collect()
}

/// Columns `n_q, n_c, F, E, F_threshold, verdict, S_EW, S_nc`; the
/// significances are empty for exact rows.
pub fn grid_csv(rows: &[GridRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "n_q",
        "n_c",
        "F",
        "E",
        "F_threshold",
        "verdict",
        "S_EW",
        "S_nc",
    ])?;
    for r in rows {
        w.write_record([
            r.n_q.to_string(),
            r.n_c.to_string(),
            r.fidelity.value.to_string(),
            r.fidelity.std_error.to_string(),
            opt(r.threshold),
            r.verdict.n_c_inferred.to_string(),
            opt(r.s_ew),
            opt(r.s_nc),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nodecount::NodeCount;

    #[test]
    fn exact_rows_sit_on_the_threshold() {
        let rows = run_grid(
            &[1, 2],
            &(1..=10).collect::<Vec<_>>(),
            GridMode::Exact,
            Reading::General,
            0,
        )
        .unwrap();
        assert_eq!(rows.len(), 20);
        for r in &rows {
            assert!(
                (r.fidelity.value - r.threshold.unwrap()).abs() < 1e-9,
                "{r:?}"
            );
            assert_eq!(r.verdict.n_c_inferred, NodeCount::Exactly(r.n_c as u32));
        }
        assert_eq!((rows[10].n_q, rows[10].n_c), (2, 1));
    }

    #[test]
    fn empty_range_gives_header_only() {
        let rows = run_grid(&[1], &[], GridMode::Exact, Reading::General, 0).unwrap();
        assert!(rows.is_empty());
        assert_eq!(
            grid_csv(&rows).unwrap(),
            "n_q,n_c,F,E,F_threshold,verdict,S_EW,S_nc\n"
        );
    }

    #[test]
    fn sampled_grid_is_reproducible() {
        let a = run_grid(&[1], &[1, 2], GridMode::Shots(2000), Reading::Projection, 5).unwrap();
        let b = run_grid(&[1], &[1, 2], GridMode::Shots(2000), Reading::Projection, 5).unwrap();
        assert_eq!(grid_csv(&a).unwrap(), grid_csv(&b).unwrap());
        assert!(a
            .iter()
            .all(|r| r.s_nc.is_some() && r.fidelity.std_error > 0.0));
    }
}
