//! DC sensitivity factors: PTDF and LODF.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::network::{BranchId, BusId, Network};

/// `|1 − PTDF_c·m_c|` below this marks an islanding (radial) outage.
pub const RADIAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error("network is disconnected: bus {0} cannot reach the slack bus")]
    Disconnected(BusId),
    #[error("slack bus {0} does not exist")]
    UnknownSlack(BusId),
    #[error("reduced susceptance matrix is singular")]
    Singular,
}

#[derive(Debug, Clone)]
pub struct SensitivityFactors {
    /// branches × buses, MW of branch flow per MW injected at the bus and
    /// withdrawn at the slack.
    pub ptdf: DMatrix<f64>,
    /// branches × branches; column `c` spreads the pre-outage flow of `c`.
    pub lodf: DMatrix<f64>,
    pub slack_bus: BusId,
    /// Per branch: outage would island part of the network.
    pub radial: Vec<bool>,
}

impl SensitivityFactors {
    pub fn compute(network: &Network, slack: Option<BusId>) -> Result<Self, FactorError> {
        let slack_bus = slack.unwrap_or_else(|| default_slack(network));
        let ptdf = compute_ptdf(network, slack_bus)?;
        let (lodf, radial) = compute_lodf(&ptdf, network);
        Ok(SensitivityFactors { ptdf, lodf, slack_bus, radial })
    }

    pub fn radial_branches<'a>(&'a self, network: &'a Network) -> impl Iterator<Item = BranchId> + 'a {
        network.branches.iter().zip(&self.radial).filter(|(_, &r)| r).map(|(b, _)| b.id)
    }

    /// Branch flows for a bus injection vector (must sum to zero for the
    /// result to be slack independent).
    pub fn flows(&self, injections: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(injections);
        (&self.ptdf * x).iter().copied().collect()
    }

    pub fn write_csv<W: Write>(&self, network: &Network, mut ptdf_out: W, mut lodf_out: W) -> std::io::Result<()> {
        write!(ptdf_out, "branch_id")?;
        for b in &network.buses {
            write!(ptdf_out, ",{}", b.id)?;
        }
        writeln!(ptdf_out)?;
        for (l, br) in network.branches.iter().enumerate() {
            write!(ptdf_out, "{}", br.id)?;
            for n in 0..network.num_buses() {
                write!(ptdf_out, ",{}", self.ptdf[(l, n)])?;
            }
            writeln!(ptdf_out)?;
        }
        write!(lodf_out, "monitored\\outaged")?;
        for br in &network.branches {
            write!(lodf_out, ",{}", br.id)?;
        }
        writeln!(lodf_out)?;
        for (l, br) in network.branches.iter().enumerate() {
            write!(lodf_out, "{}", br.id)?;
            for c in 0..network.num_branches() {
                write!(lodf_out, ",{}", self.lodf[(l, c)])?;
            }
            writeln!(lodf_out)?;
        }
        Ok(())
    }
}

/// Lowest-numbered bus hosting a generator, or the lowest bus overall.
pub fn default_slack(network: &Network) -> BusId {
    network
        .generators
        .iter()
        .map(|g| g.bus)
        .min()
        .or_else(|| network.buses.iter().map(|b| b.id).min())
        .expect("network has at least one bus")
}

fn check_connected(network: &Network, root: usize) -> Result<(), FactorError> {
    let n = network.num_buses();
    let mut adj = vec![Vec::new(); n];
    for br in &network.branches {
        let (f, t) = network.endpoints(br);
        adj[f].push(t);
        adj[t].push(f);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(FactorError::Disconnected(network.buses[i].id)),
        None => Ok(()),
    }
}

pub fn compute_ptdf(network: &Network, slack: BusId) -> Result<DMatrix<f64>, FactorError> {
    let s = network.bus_position(slack).ok_or(FactorError::UnknownSlack(slack))?;
    check_connected(network, s)?;
    let n = network.num_buses();
    let l = network.num_branches();

    // Nodal susceptance with the slack row/column removed.
    let reduced = |i: usize| if i < s { i } else { i - 1 };
    let mut b_red = DMatrix::<f64>::zeros(n - 1, n - 1);
    for br in &network.branches {
        let y = 1.0 / br.reactance_pu;
        let (f, t) = network.endpoints(br);
        if f != s {
            b_red[(reduced(f), reduced(f))] += y;
        }
        if t != s {
            b_red[(reduced(t), reduced(t))] += y;
        }
        if f != s && t != s {
            b_red[(reduced(f), reduced(t))] -= y;
            b_red[(reduced(t), reduced(f))] -= y;
        }
    }
    let x_red = if n > 1 {
        b_red.lu().try_inverse().ok_or(FactorError::Singular)?
    } else {
        DMatrix::zeros(0, 0)
    };
    // Angle sensitivity with a zero slack row and column.
    let angle = |i: usize, j: usize| -> f64 {
        if i == s || j == s {
            0.0
        } else {
            x_red[(reduced(i), reduced(j))]
        }
    };

    let mut ptdf = DMatrix::<f64>::zeros(l, n);
    for (k, br) in network.branches.iter().enumerate() {
        let y = 1.0 / br.reactance_pu;
        let (f, t) = network.endpoints(br);
        for j in 0..n {
            ptdf[(k, j)] = y * (angle(f, j) - angle(t, j));
        }
    }
    Ok(ptdf)
}

/// LODF matrix and radial flags. Radial columns are left zero apart from the
/// diagonal.
pub fn compute_lodf(ptdf: &DMatrix<f64>, network: &Network) -> (DMatrix<f64>, Vec<bool>) {
    let l = network.num_branches();
    let mut lodf = DMatrix::<f64>::zeros(l, l);
    let mut radial = vec![false; l];
    for (c, br) in network.branches.iter().enumerate() {
        let (f, t) = network.endpoints(br);
        let self_share = ptdf[(c, f)] - ptdf[(c, t)];
        let denom = 1.0 - self_share;
        if denom.abs() < RADIAL_TOLERANCE {
            radial[c] = true;
        } else {
            for b in 0..l {
                lodf[(b, c)] = (ptdf[(b, f)] - ptdf[(b, t)]) / denom;
            }
        }
        lodf[(c, c)] = -1.0;
    }
    (lodf, radial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Branch, BranchKind, Bus};

    fn net(n: u32, edges: &[(u32, u32)]) -> Network {
        let buses = (1..=n)
            .map(|i| Bus { id: BusId(i), latitude: 30.0, longitude: -97.0 + 0.1 * f64::from(i), base_kv: 138.0 })
            .collect();
        let branches = edges
            .iter()
            .enumerate()
            .map(|(k, &(f, t))| Branch {
                id: BranchId(k as u32 + 1),
                from_bus: BusId(f),
                to_bus: BusId(t),
                reactance_pu: 0.1,
                rating_mva: 100.0,
                kind: BranchKind::Line,
                length_km: 10.0,
                length_derived: false,
                diameter_m: None,
            })
            .collect();
        Network::new(buses, branches, vec![]).unwrap()
    }

    #[test]
    fn two_bus_line() {
        let n = net(2, &[(1, 2)]);
        let f = SensitivityFactors::compute(&n, Some(BusId(2))).unwrap();
        assert!((f.ptdf[(0, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(f.ptdf[(0, 1)], 0.0);
        assert_eq!(f.radial, vec![true]);
    }

    #[test]
    fn triangle_split() {
        let n = net(3, &[(1, 2), (2, 3), (1, 3)]);
        let f = SensitivityFactors::compute(&n, Some(BusId(3))).unwrap();
        assert!((f.ptdf[(2, 0)] - 2.0 / 3.0).abs() < 1e-12);
        assert!((f.ptdf[(0, 0)] - 1.0 / 3.0).abs() < 1e-12);
        assert!((f.ptdf[(1, 0)] - 1.0 / 3.0).abs() < 1e-12);
        assert!(f.ptdf.column(2).iter().all(|&v| v == 0.0));
        assert!(f.radial.iter().all(|r| !r));
        for c in 0..3 {
            assert_eq!(f.lodf[(c, c)], -1.0);
        }
    }

    #[test]
    fn parallel_lines_shift_everything() {
        let n = net(2, &[(1, 2), (1, 2)]);
        let f = SensitivityFactors::compute(&n, None).unwrap();
        assert!((f.lodf[(1, 0)] - 1.0).abs() < 1e-12);
        assert!((f.lodf[(0, 1)] - 1.0).abs() < 1e-12);
        assert_eq!(f.radial, vec![false, false]);
    }

    #[test]
    fn disconnected_network_rejected() {
        let n = net(4, &[(1, 2), (3, 4)]);
        assert!(matches!(SensitivityFactors::compute(&n, Some(BusId(1))), Err(FactorError::Disconnected(_))));
        assert!(matches!(SensitivityFactors::compute(&n, Some(BusId(9))), Err(FactorError::UnknownSlack(_))));
    }
}
