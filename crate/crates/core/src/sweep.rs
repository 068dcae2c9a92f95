//! Parameter sweeps over the injection problem: the optimal dividend
//! barrier as a function of the injection cost, the value as a function of
//! both barriers, and the break-even cost as a function of a risk
//! parameter.

use crate::error::{Error, Result};
use crate::injections::{breakeven_kappa, optimal_barrier_beta2, value_injections};
use crate::params::ModelParams;

/// `points` evenly spaced values on `[from, to]`.
pub fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![from],
        n => (0..n)
            .map(|i| {
                if i == n - 1 {
                    to
                } else {
                    from + (to - from) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// `(kappa, beta2*)` for each cost.
pub fn beta2_vs_kappa(p: &ModelParams, kappas: &[f64]) -> Result<Vec<(f64, f64)>> {
    kappas
        .iter()
        .map(|&k| {
            let q = p.with_kappa(k).validate()?;
            Ok((k, optimal_barrier_beta2(&q)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCell {
    pub gamma: f64,
    pub beta: f64,
    /// `None` where `gamma >= beta`.
    pub value: Option<f64>,
}

/// Value at funding ratio `ratio` (with `x2 = 1`) of the double-barrier
/// strategy for every `(gamma, beta)` pair, gamma-major.
pub fn value_surface(
    p: &ModelParams,
    gammas: &[f64],
    betas: &[f64],
    ratio: f64,
) -> Result<Vec<SurfaceCell>> {
    if p.kappa.is_none() {
        return Err(Error::MissingParameter("kappa"));
    }
    let mut cells = Vec::with_capacity(gammas.len() * betas.len());
    for &gamma in gammas {
        for &beta in betas {
            let value = if gamma < beta {
                Some(value_injections(ratio, 1.0, beta, gamma, p)?)
            } else {
                None
            };
            cells.push(SurfaceCell { gamma, beta, value });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakevenRow {
    pub risk: f64,
    pub kappa: f64,
    pub beta2: f64,
}

/// Break-even injection cost as `key` (any parameter name, typically
/// `sigma_A`, `sigma_L` or `rho`) runs over `values`.
pub fn breakeven_sweep(p: &ModelParams, key: &str, values: &[f64]) -> Result<Vec<BreakevenRow>> {
    values
        .iter()
        .map(|&v| {
            let mut q = *p;
            q.set(key, v).map_err(|e| Error::Config(e.to_string()))?;
            let q = q.validate()?;
            let b = breakeven_kappa(&q)?;
            Ok(BreakevenRow {
                risk: v,
                kappa: b.kappa,
                beta2: b.beta2,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> ModelParams {
        ModelParams::new(0.05, 0.02, 0.3, 0.1, 0.0, 0.06, 1.0)
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
        assert!(linspace(1.0, 2.0, 0).is_empty());
    }

    #[test]
    fn infeasible_cells_are_kept() {
        let p = p1().with_kappa(1.05);
        let cells = value_surface(&p, &[1.0, 2.0], &[1.5, 3.0], 1.0).unwrap();
        assert_eq!(cells.len(), 4);
        assert!(cells[2].value.is_none());
        assert!(cells.iter().filter(|c| c.value.is_some()).count() == 3);
    }

    #[test]
    fn barrier_rises_with_cost() {
        let rows = beta2_vs_kappa(&p1(), &linspace(1.01, 1.5, 6)).unwrap();
        assert!(rows.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn sweep_rejects_unknown_key_and_bad_kappa() {
        assert!(matches!(
            breakeven_sweep(&p1(), "nope", &[1.0]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            beta2_vs_kappa(&p1(), &[1.0]),
            Err(Error::Param(_))
        ));
    }
}
