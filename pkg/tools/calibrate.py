"""Cohort calibration sweep for the synthetic subject presets.

Simulates the full data-collection protocol (10 healthy subjects without
assistance, 11 patients with and without), prints per-group metric summaries
and the rank-test verdicts the acceptance pipeline checks, and reports loop
capture reliability. Run while tuning the preset constants in
trailmaker.simulation; the committed presets are the output of this sweep.

Usage: python3 tools/calibrate.py [--loops N] [--seed N] [--fast]
"""

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy import stats as sstats

sys.path.insert(0, "src")

from trailmaker import geometry as geo
from trailmaker import simulation as sim

SHAPES = {
    "triangle": 100.0,
    "hexagon": 50.0,
    "circle": 48.0,
    "infinity": 60.0,
    "letter_B": 90.0,
}
CAPTURE_RADIUS = 12.0


def run_one(args):
    kind, subject_seed, shape, size, mode, loops, session_seed = args
    trail = geo.builtin_shape(shape, size)
    model = sim.subject_from_preset(kind, subject_seed)
    cfg = sim.SessionConfig(mode=mode, target_loops=loops,
                            loop_capture_radius=CAPTURE_RADIUS)
    rec = sim.simulate_session(model, trail, cfg, seed=session_seed)
    ds = np.array([t.d_s for t in rec.ticks])
    pos = rec.positions()
    path_len = np.sum(np.linalg.norm(np.diff(pos[:, :2], axis=0), axis=1))
    per = geo.perimeter(trail)
    dur = rec.duration_s
    return {
        "kind": kind, "subject": subject_seed, "shape": shape, "mode": mode,
        "d_avg": float(ds.mean()),
        "speed": per * rec.loops_completed / dur if dur > 0 else 0.0,
        "path_speed": float(path_len / dur) if dur > 0 else 0.0,
        "loops": rec.loops_completed,
        "dur": dur,
        "ticks": len(rec.ticks),
        "zmax": float(np.abs(pos[:, 2]).max()),
        "tripped": rec.safety.tripped,
    }


def dunn_pair(a, b, groups):
    """Dunn z / two-sided p for a pair, pooling ranks over all groups."""
    all_vals = np.concatenate(groups)
    ranks = sstats.rankdata(all_vals)
    n = len(all_vals)
    bounds = np.cumsum([0] + [len(g) for g in groups])
    mean_ranks = [ranks[bounds[i]:bounds[i + 1]].mean() for i in range(len(groups))]
    _, counts = np.unique(all_vals, return_counts=True)
    tie = np.sum(counts**3 - counts) / (12.0 * (n - 1))
    var = (n * (n + 1) / 12.0 - tie) * (1.0 / len(groups[a]) + 1.0 / len(groups[b]))
    z = (mean_ranks[a] - mean_ranks[b]) / np.sqrt(var)
    return z, 2.0 * sstats.norm.sf(abs(z))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--loops", type=int, default=10)
    ap.add_argument("--seed", type=int, default=2025)
    ap.add_argument("--fast", action="store_true", help="3 loops, fewer subjects")
    args = ap.parse_args()

    loops = 3 if args.fast else args.loops
    n_healthy, n_patient = (6, 7) if args.fast else (10, 11)

    rng = np.random.default_rng(args.seed)
    healthy_seeds = [int(s) for s in rng.integers(0, 2**31, n_healthy)]
    patient_seeds = [int(s) for s in rng.integers(0, 2**31, n_patient)]

    jobs = []
    for i, s in enumerate(healthy_seeds):
        for shape, size in SHAPES.items():
            jobs.append(("healthy", s, shape, size, "no_assist", loops,
                         int(rng.integers(0, 2**31))))
    for i, s in enumerate(patient_seeds):
        for shape, size in SHAPES.items():
            for mode in ("no_assist", "continuous_assist"):
                jobs.append(("patient", s, shape, size, mode, loops,
                             int(rng.integers(0, 2**31))))

    t0 = time.perf_counter()
    with ProcessPoolExecutor(max_workers=2) as ex:
        rows = list(ex.map(run_one, jobs, chunksize=8))
    wall = time.perf_counter() - t0

    def group(kind, mode):
        return [r for r in rows if r["kind"] == kind and r["mode"] == mode]

    H = group("healthy", "no_assist")
    U = group("patient", "no_assist")
    A = group("patient", "continuous_assist")

    def summ(name, rs, metric):
        v = np.array([r[metric] for r in rs])
        print(f"  {name:22s} {metric:10s} mean={v.mean():7.2f} median={np.median(v):7.2f} "
              f"std={v.std():6.2f} range=[{v.min():6.2f},{v.max():6.2f}]")
        return v

    print(f"\n== cohort ({n_healthy}H/{n_patient}P x {len(SHAPES)} shapes, {loops} loops) "
          f"wall={wall:.1f}s sessions={len(rows)} ==")
    for metric in ("d_avg", "speed"):
        print(f"-- {metric} --")
        hv = summ("healthy", H, metric)
        uv = summ("patient unassisted", U, metric)
        av = summ("patient assisted", A, metric)
        groups = [hv, uv, av]
        kw = sstats.kruskal(*groups)
        print(f"  KW H={kw.statistic:.3f} p={kw.pvalue:.4g}")
        for (i, j, label) in [(0, 1, "healthy vs unassisted"),
                              (0, 2, "healthy vs assisted"),
                              (2, 1, "assisted vs unassisted")]:
            z, p = dunn_pair(i, j, groups)
            print(f"  dunn {label:24s} z={z:7.2f} p={p:.4g} {'SIG' if p < 0.05 else 'ns'}")

    # per-shape assisted-vs-unassisted deviation medians
    print("-- per-shape deviation medians (assisted < unassisted wanted) --")
    ok = True
    for shape in SHAPES:
        mu = np.median([r["d_avg"] for r in U if r["shape"] == shape])
        ma = np.median([r["d_avg"] for r in A if r["shape"] == shape])
        flag = "OK" if ma < mu else "FAIL"
        ok &= ma < mu
        print(f"  {shape:10s} unassisted={mu:5.2f} assisted={ma:5.2f} {flag}")

    # loop-capture reliability: metric speed vs raw path speed
    print("-- capture reliability (speed/path_speed ~ 1.0 wanted) --")
    for name, rs in [("healthy", H), ("unassisted", U), ("assisted", A)]:
        ratio = np.array([r["speed"] / r["path_speed"] for r in rs if r["path_speed"] > 0])
        ticks = np.array([r["ticks"] for r in rs])
        print(f"  {name:12s} ratio mean={ratio.mean():.3f} min={ratio.min():.3f} "
              f"ticks min={ticks.min()} zmax={max(r['zmax'] for r in rs):.3f} "
              f"trips={sum(r['tripped'] for r in rs)}")
    print("verdicts wanted: dev H-vs-U SIG, dev A-vs-U ns, speed A-vs-U SIG, speed H-vs-A ns")


if __name__ == "__main__":
    main()
