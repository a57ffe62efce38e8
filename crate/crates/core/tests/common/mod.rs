//! Fixture loading and brute-force reference implementations shared by the
//! integration tests. Nothing here calls the crate's own factor, projection
//! or screening code.

#![allow(dead_code)]

use std::collections::VecDeque;
use std::path::PathBuf;

use gridline::dispatch::HourData;
use gridline::lp::{DenseSimplex, LinearProgram, LpSolver};
use gridline::network::{load_hourly_series, load_network, HourlySeries, Network, SeriesOptions};
use gridline::weather::{load_weather, WeatherGrid};

pub const FIXTURES: [&str; 3] = ["tri3", "case5", "grid30"];

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub struct Fixture {
    pub name: &'static str,
    pub network: Network,
    pub series: HourlySeries,
    pub weather: WeatherGrid,
}

pub fn load_fixture(name: &'static str) -> Fixture {
    let dir = fixture_dir(name);
    let network = load_network(&dir).unwrap();
    let series = load_hourly_series(&dir, &network, SeriesOptions::default()).unwrap();
    let weather = load_weather(&dir.join("weather.csv")).unwrap();
    Fixture { name, network, series, weather }
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-12 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let m = a[i][k] / a[k][k];
            if m != 0.0 {
                let (top, bottom) = a.split_at_mut(i);
                for (x, y) in bottom[0][k..].iter_mut().zip(&top[k][k..]) {
                    *x -= m * y;
                }
                b[i] -= m * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

fn connected_without(net: &Network, removed: Option<usize>) -> bool {
    let n = net.num_buses();
    let mut adj = vec![Vec::new(); n];
    for (k, br) in net.branches.iter().enumerate() {
        if Some(k) == removed {
            continue;
        }
        let (f, t) = net.endpoints(br);
        adj[f].push(t);
        adj[t].push(f);
    }
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut q = VecDeque::from([0]);
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                q.push_back(v);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Branches whose removal disconnects the network, by trying each one.
pub fn bridges(net: &Network) -> Vec<bool> {
    (0..net.num_branches()).map(|k| !connected_without(net, Some(k))).collect()
}

/// DC power flow with branch `removed` taken out, angles referenced to bus
/// position 0. `None` when the outage islands the network.
pub fn dc_flow(net: &Network, injections: &[f64], removed: Option<usize>) -> Option<Vec<f64>> {
    if !connected_without(net, removed) {
        return None;
    }
    let n = net.num_buses();
    let mut b = vec![vec![0.0; n]; n];
    for (k, br) in net.branches.iter().enumerate() {
        if Some(k) == removed {
            continue;
        }
        let (f, t) = net.endpoints(br);
        let y = 1.0 / br.reactance_pu;
        b[f][f] += y;
        b[t][t] += y;
        b[f][t] -= y;
        b[t][f] -= y;
    }
    let reduced: Vec<Vec<f64>> = b[1..].iter().map(|row| row[1..].to_vec()).collect();
    let theta_red = solve_dense(reduced, injections[1..].to_vec())?;
    let mut theta = vec![0.0];
    theta.extend(theta_red);
    Some(
        net.branches
            .iter()
            .enumerate()
            .map(|(k, br)| {
                if Some(k) == removed {
                    return 0.0;
                }
                let (f, t) = net.endpoints(br);
                (theta[f] - theta[t]) / br.reactance_pu
            })
            .collect(),
    )
}

/// `[branch][bus]` sensitivities on the network with `removed` out, for
/// injection at the bus withdrawn at bus position 0.
pub fn outage_ptdf(net: &Network, removed: Option<usize>) -> Option<Vec<Vec<f64>>> {
    let n = net.num_buses();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut inj = vec![0.0; n];
        inj[j] += 1.0;
        inj[0] -= 1.0;
        cols.push(dc_flow(net, &inj, removed)?);
    }
    Some((0..net.num_branches()).map(|b| (0..n).map(|j| cols[j][b]).collect()).collect())
}

pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * 6371.0088 * h.sqrt().asin()
}

/// Transverse Mercator by the classic series in powers of the longitude
/// offset (good to millimetres within a UTM zone). Returns (easting, northing).
pub fn series_utm(lat_deg: f64, lon_deg: f64, zone: u8) -> (f64, f64) {
    let a = 6_378_137.0;
    let f = 1.0 / 298.257_223_563;
    let k0 = 0.9996;
    let e2 = f * (2.0 - f);
    let ep2 = e2 / (1.0 - e2);
    let (e4, e6) = (e2 * e2, e2 * e2 * e2);
    let lon0 = (f64::from(zone) * 6.0 - 183.0).to_radians();
    let phi = lat_deg.to_radians();
    let lam = lon_deg.to_radians();
    let n = a / (1.0 - e2 * phi.sin().powi(2)).sqrt();
    let t = phi.tan().powi(2);
    let c = ep2 * phi.cos().powi(2);
    let aa = (lam - lon0) * phi.cos();
    let m = a
        * ((1.0 - e2 / 4.0 - 3.0 * e4 / 64.0 - 5.0 * e6 / 256.0) * phi
            - (3.0 * e2 / 8.0 + 3.0 * e4 / 32.0 + 45.0 * e6 / 1024.0) * (2.0 * phi).sin()
            + (15.0 * e4 / 256.0 + 45.0 * e6 / 1024.0) * (4.0 * phi).sin()
            - (35.0 * e6 / 3072.0) * (6.0 * phi).sin());
    let x = k0
        * n
        * (aa + (1.0 - t + c) * aa.powi(3) / 6.0 + (5.0 - 18.0 * t + t * t + 72.0 * c - 58.0 * ep2) * aa.powi(5) / 120.0);
    let y = k0
        * (m + n
            * phi.tan()
            * (aa * aa / 2.0
                + (5.0 - t + 9.0 * c + 4.0 * c * c) * aa.powi(4) / 24.0
                + (61.0 - 58.0 * t + t * t + 600.0 * c - 330.0 * ep2) * aa.powi(6) / 720.0));
    let northing = if lat_deg < 0.0 { y + 10_000_000.0 } else { y };
    (x + 500_000.0, northing)
}

pub struct OracleSolution {
    pub objective: f64,
    pub p_gen: Vec<f64>,
    pub slack_total: f64,
}

/// SC-DCOPF with every (monitored, outage) row written out up front, using
/// post-outage sensitivities from re-solved networks instead of LODFs.
/// Base rows are hard; contingency rows carry penalised slack.
pub fn full_enumeration_scopf(
    net: &Network,
    data: &HourData,
    normal: &[f64],
    contingency: &[f64],
    penalty: f64,
) -> Option<OracleSolution> {
    let mut lp = LinearProgram::new();
    let mut cols_of = Vec::new();
    for (g, gen) in net.generators.iter().enumerate() {
        let cap = data.availability[g].min(gen.p_max).max(0.0);
        let floor = gen.p_min.min(cap);
        let mut start = 0.0;
        let mut cols = Vec::new();
        for seg in &gen.segments {
            let hi = (cap - start).max(0.0).min(seg.mw);
            let lo = (floor - start).max(0.0).min(hi);
            cols.push(lp.add_column(seg.marginal_cost, lo, hi));
            start += seg.mw;
        }
        cols_of.push((net.bus_position(gen.bus).unwrap(), cols));
    }
    let demand: f64 = data.demand.iter().sum();
    let all: Vec<(usize, f64)> = cols_of.iter().flat_map(|(_, c)| c.iter().map(|&k| (k, 1.0))).collect();
    lp.add_row(all, demand, demand);

    let add_flow_row = |lp: &mut LinearProgram, sens: &[f64], limit: f64, slack: bool| {
        let offset: f64 = sens.iter().zip(&data.demand).map(|(a, d)| a * d).sum();
        let mut coefs: Vec<(usize, f64)> = Vec::new();
        for (bus, cols) in &cols_of {
            if sens[*bus] != 0.0 {
                coefs.extend(cols.iter().map(|&k| (k, sens[*bus])));
            }
        }
        if slack {
            let up = lp.add_column(penalty, 0.0, f64::INFINITY);
            let down = lp.add_column(penalty, 0.0, f64::INFINITY);
            coefs.push((up, -1.0));
            coefs.push((down, 1.0));
        }
        lp.add_row(coefs, offset - limit, offset + limit);
    };

    let base = outage_ptdf(net, None)?;
    for (b, row) in base.iter().enumerate() {
        add_flow_row(&mut lp, row, normal[b], false);
    }
    let first_slack = lp.num_columns();
    for c in 0..net.num_branches() {
        let Some(post) = outage_ptdf(net, Some(c)) else { continue };
        for (b, row) in post.iter().enumerate() {
            if b != c {
                add_flow_row(&mut lp, row, contingency[b], true);
            }
        }
    }
    let sol = DenseSimplex::default().solve(&lp).ok()?;
    let p_gen = cols_of.iter().map(|(_, cols)| cols.iter().map(|&k| sol.x[k]).sum()).collect();
    let slack_total = sol.x[first_slack..].iter().sum();
    Some(OracleSolution { objective: sol.objective, p_gen, slack_total })
}

/// Largest post-outage overload in MW over every non-islanding outage, by
/// re-solving the network for each.
pub fn worst_post_contingency_overload(net: &Network, injections: &[f64], contingency: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for c in 0..net.num_branches() {
        let Some(flows) = dc_flow(net, injections, Some(c)) else { continue };
        for (b, f) in flows.iter().enumerate() {
            if b != c {
                worst = worst.max(f.abs() - contingency[b]);
            }
        }
    }
    worst
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
