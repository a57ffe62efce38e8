#!/usr/bin/env python3
"""Regenerates the bundled fixture cases. Deterministic; stdlib only.

    python3 fixtures/generate.py
"""

import csv
import math
import os
import random
from datetime import datetime, timedelta, timezone

HERE = os.path.dirname(os.path.abspath(__file__))
START = datetime(2021, 7, 1, tzinfo=timezone.utc)
HOURS = 24


def stamp(h):
    return (START + timedelta(hours=h)).strftime("%Y-%m-%dT%H:%M:%SZ")


def write(path, header, rows):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(r)


def fmt(x, nd=4):
    return f"{x:.{nd}f}".rstrip("0").rstrip(".") if isinstance(x, float) else x


def write_case(name, buses, branches, gens, demand, avail):
    d = os.path.join(HERE, name)
    write(os.path.join(d, "bus.csv"), ["id", "lat", "lon", "base_kv"], buses)
    write(
        os.path.join(d, "branch.csv"),
        ["id", "from_bus", "to_bus", "reactance_pu", "rating_mva", "kind", "length_km", "diameter_m"],
        branches,
    )
    nseg = max(len(g[5]) for g in gens)
    header = ["id", "bus", "fuel", "p_min_mw", "p_max_mw"]
    for k in range(1, nseg + 1):
        header += [f"seg{k}_mw", f"seg{k}_cost"]
    rows = []
    for gid, bus, fuel, pmin, pmax, segs in gens:
        row = [gid, bus, fuel, fmt(pmin), fmt(pmax)]
        for mw, cost in segs:
            row += [fmt(mw), fmt(cost)]
        row += [""] * (len(header) - len(row))
        rows.append(row)
    write(os.path.join(d, "gen.csv"), header, rows)
    write(
        os.path.join(d, "demand.csv"),
        ["time", "bus_id", "mw"],
        [[stamp(h), b, fmt(v)] for h in range(HOURS) for b, v in sorted(demand[h].items())],
    )
    write(
        os.path.join(d, "availability.csv"),
        ["time", "gen_id", "mw"],
        [[stamp(h), g, fmt(v)] for h in range(HOURS) for g, v in sorted(avail[h].items())],
    )


def write_weather(name, cells, rng, t_base, t_swing, wind_base, wind_dir0):
    rows = []
    for h in range(HOURS):
        diurnal = math.sin(2 * math.pi * (h - 9) / 24.0)
        for i, (lat, lon) in enumerate(cells):
            t_c = t_base + t_swing * diurnal + rng.uniform(-1.5, 1.5) + 0.3 * i
            t_c = min(t_c, 38.5)
            speed = max(0.0, wind_base + 2.5 * math.cos(2 * math.pi * h / 24.0 + i) + rng.uniform(-1.0, 1.0))
            if (h + i) % 11 == 0:
                speed = 0.0
            direction = wind_dir0 + 0.35 * i + 0.12 * h + rng.uniform(-0.3, 0.3)
            rows.append(
                [stamp(h), fmt(lat), fmt(lon), fmt(t_c + 273.15, 3), fmt(speed * math.cos(direction), 3), fmt(speed * math.sin(direction), 3)]
            )
    write(os.path.join(HERE, name), ["time", "lat", "lon", "temp_k", "wind_u_ms", "wind_v_ms"], rows)


def daily(h, low, high, peak_hour=17):
    return low + (high - low) * 0.5 * (1 + math.cos(2 * math.pi * (h - peak_hour) / 24.0))


def solar(h, cap):
    return max(0.0, cap * math.sin(math.pi * (h - 6) / 13.0)) if 6 <= h <= 19 else 0.0


def triangle():
    buses = [[1, 30.10, -97.70, 138], [2, 30.35, -97.45, 138], [3, 30.05, -97.30, 138]]
    branches = [
        [1, 1, 2, 0.05, 100, "line", "", ""],
        [2, 2, 3, 0.05, 100, "line", "", ""],
        [3, 1, 3, 0.05, 100, "line", "", 0.0281],
    ]
    gens = [
        [1, 1, "coal", 0.0, 250.0, [(150.0, 12.0), (100.0, 18.0)]],
        [2, 3, "natural_gas", 0.0, 200.0, [(200.0, 45.0)]],
    ]
    demand = [{1: 0.0, 2: round(daily(h, 10, 25), 3), 3: round(daily(h, 80, 150), 3)} for h in range(HOURS)]
    avail = [{} for _ in range(HOURS)]
    write_case("tri3", buses, branches, gens, demand, avail)
    cells = [(30.0, -97.7), (30.0, -97.3), (30.4, -97.7), (30.4, -97.3)]
    write_weather("tri3/weather.csv", cells, random.Random(3), 24.0, 6.0, 4.0, 0.4)


def five_bus():
    buses = [
        [1, 31.00, -98.20, 230],
        [2, 31.25, -97.90, 230],
        [3, 31.10, -97.55, 230],
        [4, 30.80, -97.65, 230],
        [5, 30.75, -98.05, 230],
    ]
    branches = [
        [1, 1, 2, 0.0281, 250, "line", "", ""],
        [2, 1, 4, 0.0304, 200, "line", "", ""],
        [3, 1, 5, 0.0064, 300, "line", "", ""],
        [4, 2, 3, 0.0108, 250, "line", "", ""],
        [5, 3, 4, 0.0297, 200, "line", "", ""],
        [6, 4, 5, 0.0297, 150, "line", 140.0, ""],
    ]
    gens = [
        [1, 1, "coal", 0.0, 210.0, [(110.0, 14.0), (100.0, 15.0)]],
        [2, 1, "wind", 0.0, 150.0, [(150.0, 0.0)]],
        [3, 3, "natural_gas", 0.0, 520.0, [(300.0, 30.0), (220.0, 34.0)]],
        [4, 4, "natural_gas", 0.0, 300.0, [(300.0, 40.0)]],
        [5, 5, "solar", 0.0, 120.0, [(120.0, 0.0)]],
        [6, 2, "natural_gas", 0.0, 250.0, [(250.0, 90.0)]],
    ]
    demand = [
        {1: 0.0, 2: round(daily(h, 150, 240), 3), 3: round(daily(h, 150, 260), 3), 4: round(daily(h, 180, 300), 3), 5: 0.0}
        for h in range(HOURS)
    ]
    avail = [{2: round(150 * (0.55 + 0.4 * math.cos(2 * math.pi * (h - 3) / 24.0)), 3), 5: round(solar(h, 120), 3)} for h in range(HOURS)]
    write_case("case5", buses, branches, gens, demand, avail)
    cells = [(30.7, -98.2), (30.7, -97.6), (31.3, -98.2), (31.3, -97.6)]
    write_weather("case5/weather.csv", cells, random.Random(5), 22.0, 7.0, 5.0, 1.2)


def grid30():
    rng = random.Random(30)
    rows, cols = 4, 7
    lat0, lon0, dlat, dlon = 30.0, -99.6, 0.22, 0.28

    def bid(r, c):
        return r * cols + c + 1

    buses = [[bid(r, c), round(lat0 + dlat * r, 4), round(lon0 + dlon * c, 4), 138] for r in range(rows) for c in range(cols)]
    # 345 kV overlay stations co-located with two 138 kV buses.
    buses.append([29, buses[bid(1, 1) - 1][1], buses[bid(1, 1) - 1][2], 345])
    buses.append([30, buses[bid(2, 5) - 1][1], buses[bid(2, 5) - 1][2], 345])

    edges = []
    for r in range(rows):
        for c in range(cols - 1):
            edges.append((bid(r, c), bid(r, c + 1)))
    for r in range(rows - 1):
        for c in range(cols):
            edges.append((bid(r, c), bid(r + 1, c)))
    # Thin the lattice while keeping every bus connected.
    drop = {(bid(0, 2), bid(1, 2)), (bid(1, 3), bid(2, 3)), (bid(2, 1), bid(3, 1)), (bid(0, 5), bid(1, 5)),
            (bid(2, 4), bid(3, 4)), (bid(1, 4), bid(1, 5)), (bid(3, 2), bid(3, 3)), (bid(2, 6), bid(3, 6)),
            (bid(0, 0), bid(1, 0))}
    edges = [e for e in edges if e not in drop]

    branches = []
    for k, (f, t) in enumerate(edges, start=1):
        fb, tb = buses[f - 1], buses[t - 1]
        km = math.hypot((fb[1] - tb[1]) * 111.0, (fb[2] - tb[2]) * 111.0 * math.cos(math.radians(fb[1])))
        x = round(0.0009 * km * rng.uniform(0.85, 1.15), 5)
        horizontal = fb[1] == tb[1]
        rating = 150 if horizontal else 180
        if f == bid(3, 0) and t == bid(3, 1):
            rating = 120
        diameter = 0.0254 if k % 9 == 0 else ""
        branches.append([k, f, t, x, rating, "line", "", diameter])
    k = len(branches)
    branches.append([k + 1, bid(1, 1), 29, 0.012, 400, "transformer", "", ""])
    branches.append([k + 2, bid(2, 5), 30, 0.012, 400, "transformer", "", ""])
    # Long 345 kV tie: past the length cutoff, so it keeps its static rating.
    branches.append([k + 3, 29, 30, 0.028, 300, "line", 125.0, ""])
    # A second long 138 kV line with a derived length above the cutoff.
    branches.append([k + 4, bid(0, 1), bid(3, 5), 0.11, 110, "line", "", ""])
    # Radial spur to a load pocket.
    buses.append([31, round(lat0 + dlat * 3 + 0.12, 4), round(lon0 + dlon * 3, 4), 138])
    branches.append([k + 5, bid(3, 3), 31, 0.01, 90, "line", "", ""])

    gens = []

    def add(bus, fuel, pmax, segs, pmin=0.0):
        gens.append([len(gens) + 1, bus, fuel, pmin, pmax, segs])
        return len(gens)

    coal = [add(bid(r, 0), "coal", 260.0, [(160.0, 18.0), (100.0, 22.0)]) for r in (0, 2)]
    wind = [add(bid(r, c), "wind", 220.0, [(220.0, 0.0)]) for r, c in ((0, 1), (1, 0), (3, 0))]
    nuke = add(bid(3, 1), "nuclear", 150.0, [(150.0, 8.0)], pmin=0.0)
    sol = [add(bid(r, 3), "solar", 120.0, [(120.0, 0.0)]) for r in (0, 3)]
    hydro = add(bid(2, 2), "hydro", 60.0, [(60.0, 5.0)])

    demand = []
    load_share = {}
    for r in range(rows):
        for c in range(cols):
            load_share[bid(r, c)] = (0.4 + 0.35 * c) * (1.0 + 0.1 * r)
    load_share[31] = 2.2
    total_share = sum(load_share.values())
    for h in range(HOURS):
        system = daily(h, 620, 1040)
        demand.append({b: round(system * s / total_share, 3) for b, s in load_share.items()})
    demand_peak = {b: max(demand[h][b] for h in range(HOURS)) for b in load_share}
    # Local peakers at every bus with demand, so a zero-flow dispatch exists
    # and every hour is N-1 feasible without slack.
    for b in sorted(demand_peak):
        c = (b - 1) % cols if b <= rows * cols else 3
        cost = 60.0 + 6.0 * ((b * 7) % 5) + (10.0 if c >= 4 else 0.0)
        pmax = round(1.15 * demand_peak[b] + 5.0, 1)
        first = round(0.6 * pmax, 1)
        add(b, "natural_gas", pmax, [(first, cost), (round(pmax - first, 1), cost + 15.0)])
    add(30, "natural_gas", 200.0, [(200.0, 95.0)])

    avail = []
    for h in range(HOURS):
        a = {}
        for i, g in enumerate(wind):
            a[g] = round(220.0 * min(1.0, max(0.05, 0.6 + 0.35 * math.cos(2 * math.pi * (h - 2 - i) / 24.0) + rng.uniform(-0.1, 0.1))), 3)
        for g in sol:
            a[g] = round(solar(h, 120.0), 3)
        avail.append(a)

    write_case("grid30", buses, branches, gens, demand, avail)
    cells = [(lat0 - 0.1 + 0.3 * i, lon0 - 0.1 + 0.6 * j) for i in range(4) for j in range(4)]
    write_weather("grid30/weather.csv", cells, random.Random(31), 23.0, 7.0, 5.5, 0.9)


if __name__ == "__main__":
    triangle()
    five_bus()
    grid30()
