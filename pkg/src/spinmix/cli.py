"""Command-line front end: closed-form weights, experiment runs, table checks.

Subcommands
-----------
slider      print the analytic mixture weight for (N, d, beta) as JSON
run         sample classical/iso/quantum spectra and write CSV/JSON artifacts
reproduce   compare a d=2, r=4, beta=1 preset against its closed forms

Exit codes: 0 ok, 1 tolerance failure (reproduce), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import slider as slider_mod
from . import spectra
from .chain import ChainSpec, LocalEnsemble
from .rng import Rng

_SOURCES = ("classical", "iso", "quantum", "ie", "gram_charlier")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _fail_usage(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 2


# ---------------------------------------------------------------------------
# slider


def cmd_slider(args) -> int:
    try:
        res = slider_mod.slider_p(args.n_sites, args.d, args.beta)
    except ValueError as exc:
        return _fail_usage(str(exc))
    dims = slider_mod.SliderDims.odd_side(args.n_sites, args.d, args.beta)
    out = {"p": res.p, "one_minus_p": res.one_minus_p,
           "k": dims.k, "n": dims.n, "m": dims.m}
    print(json.dumps(out))
    return 0


# ---------------------------------------------------------------------------
# run


def _ensemble_from_args(args) -> LocalEnsemble:
    if args.ensemble == "wishart":
        if args.rank is None:
            raise ValueError("wishart ensemble needs --rank")
        return LocalEnsemble.wishart(args.rank)
    if args.ensemble == "goe":
        return LocalEnsemble.goe()
    if args.ensemble == "pm1":
        return LocalEnsemble.pm1(balanced=args.balanced)
    if args.ensemble == "fixed":
        if args.spectrum_file is None:
            raise ValueError("fixed ensemble needs --spectrum-file")
        values = np.loadtxt(args.spectrum_file, ndmin=1)
        return LocalEnsemble.fixed_spectrum(values)
    raise ValueError(f"unknown ensemble {args.ensemble!r}")


def _matched_edges(pools, args):
    if args.edges:
        edges = np.array([float(v) for v in args.edges.split(",")])
        if edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("--edges must be ascending with >= 2 entries")
        return edges
    pooled = spectra.EmpiricalMeasure.from_samples(
        np.concatenate([p.samples.ravel() for p in pools.values()]))
    if args.bins:
        return spectra.histogram(pooled, args.bins).bin_edges
    return spectra.freedman_diaconis_edges(pooled)


def _write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _stat_row(source, summary, pool):
    cells = [source]
    for stat in ("mu", "sigma2", "gamma1", "gamma2"):
        v = summary.stat(stat)
        cells.append("" if v is None else _fmt(v))
    for stat in ("mu", "sigma2", "gamma1", "gamma2"):
        if pool is None:
            cells.append("")
        else:
            try:
                cells.append(_fmt(pool.stderr(stat)))
            except ValueError:
                cells.append("")
    return cells


def cmd_run(args) -> int:
    t_start = time.time()
    try:
        ensemble = _ensemble_from_args(args)
        spec = ChainSpec(n_sites=args.n_sites, site_dim=args.d, ensemble=ensemble,
                         beta=args.beta, coupling_range=args.coupling_range)
        spec.check_dense_cap()
    except ValueError as exc:
        return _fail_usage(str(exc))
    rng = Rng(args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    nearest = spec.coupling_range == 2
    sampler = spectra.ensemble_pools if nearest else spectra.ensemble_pools_multi
    pools = sampler(spec, args.trials, rng, keep_samples=True)

    if nearest:
        p_analytic = slider_mod.slider_p(spec.n_sites, spec.site_dim, spec.beta).p
    else:
        p_analytic = None  # beyond nearest neighbors the sum is treated all-isotropic

    edges = _matched_edges(pools, args)
    hists = {k: spectra.histogram(p.measure(), edges) for k, p in pools.items()}
    summaries = {k: p.summary() for k, p in pools.items()}
    if nearest:
        ie = slider_mod.ie_mixture(p_analytic, hists["classical"], hists["iso"])
    else:
        ie = hists["iso"]
    gc = spectra.gram_charlier_density(summaries["quantum"], edges)
    densities = dict(hists, ie=ie, gram_charlier=gc)

    rows = []
    for source in _SOURCES:
        dens = densities[source]
        for left, right, mass in zip(dens.bin_edges[:-1], dens.bin_edges[1:], dens.masses):
            rows.append([source, _fmt(left), _fmt(right), _fmt(mass)])
    _write_csv(out_dir / "densities.csv",
               ["source", "bin_left", "bin_right", "mass"], rows)

    mrows = [_stat_row(k, summaries[k], pools[k]) for k in ("classical", "iso", "quantum")]
    if nearest:
        mix_raw = [p_analytic * getattr(summaries["classical"], f"m{j}")
                   + (1 - p_analytic) * getattr(summaries["iso"], f"m{j}")
                   for j in (1, 2, 3, 4)]
        mrows.append(_stat_row("ie", spectra.MomentSummary.from_raw_moments(*mix_raw), None))
    else:
        mrows.append(_stat_row("ie", summaries["iso"], None))
    mrows.append(_stat_row("gram_charlier", summaries["quantum"], None))
    _write_csv(out_dir / "moments.csv",
               ["source", "mu", "sigma2", "gamma1", "gamma2",
                "mu_se", "sigma2_se", "gamma1_se", "gamma2_se"], mrows)

    summary = {
        "config": {
            "ensemble": ensemble.describe(), "n_sites": spec.n_sites,
            "d": spec.site_dim, "coupling_range": spec.coupling_range,
            "beta": spec.beta, "trials": args.trials, "seed": args.seed,
        },
        "p_analytic": p_analytic,
        "p_empirical": None,
        "p_empirical_se": None,
        "ks": {f"{k}_vs_quantum": spectra.ks_distance(densities[k], densities["quantum"])
               for k in ("classical", "iso", "ie", "gram_charlier")},
        "trials": args.trials,
        "seed": args.seed,
        "wall_time_s": None,
    }
    g2 = {k: summaries[k].gamma2 for k in pools}
    if all(v is not None for v in g2.values()):
        try:
            summary["p_empirical"] = slider_mod.p_from_kurtoses(
                g2["quantum"], g2["classical"], g2["iso"])
            blocks = {k: pools[k].block_values("gamma2") for k in pools}
            pb = (blocks["quantum"] - blocks["iso"]) / (blocks["classical"] - blocks["iso"])
            summary["p_empirical_se"] = float(pb.std(ddof=1) / np.sqrt(pb.size))
        except (ZeroDivisionError, ValueError):
            pass
    summary["wall_time_s"] = time.time() - t_start
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return 0


# ---------------------------------------------------------------------------
# reproduce

# default trial counts chosen so each preset finishes well under ten minutes
# on one laptop core; pass --trials to use the larger published counts
_PRESETS = {
    "N3": (3, 200_000),
    "N5": (5, 50_000),
    "N7": (7, 4_000),
    "N9": (9, 300),
    "N11": (11, 8),
}


def cmd_reproduce(args) -> int:
    n_sites, default_trials = _PRESETS[args.table]
    trials = default_trials if args.trials is None else args.trials
    d, r, beta = 2, 4, 1
    theory = slider_mod.wishart_chain_stats(n_sites, d, r)
    dims = slider_mod.SliderDims.odd_side(n_sites, d, beta)
    slid = slider_mod.ensemble_slider(slider_mod.wishart_moments(r, d * d, beta), dims)
    th = {
        "mu": {"iso": theory.mu, "quantum": theory.mu, "classical": theory.mu},
        "sigma2": {k: theory.sigma2 for k in ("iso", "quantum", "classical")},
        "gamma1": {k: theory.gamma1 for k in ("iso", "quantum", "classical")},
        "gamma2": {"iso": slid.gamma2_iso, "quantum": slid.gamma2_quantum,
                   "classical": slid.gamma2_classical},
    }
    print(f"table {args.table}: wishart chain, d={d}, r={r}, beta={beta}, trials={trials}")
    header = f"{'statistic':<10} {'ensemble':<10} {'theory':>12} {'empirical':>12} {'3 s.e.':>10}"
    if trials == 0:
        print(header)
        for stat in ("mu", "sigma2", "gamma1", "gamma2"):
            for kind in ("iso", "quantum", "classical"):
                print(f"{stat:<10} {kind:<10} {th[stat][kind]:>12.6f} {'-':>12} {'-':>10}")
        return 0

    spec = ChainSpec(n_sites=n_sites, site_dim=d, ensemble=LocalEnsemble.wishart(r),
                     beta=beta)
    pools = spectra.ensemble_pools(spec, trials, Rng(args.seed), keep_samples=False)
    print(header)
    ok = True
    for stat in ("mu", "sigma2", "gamma1", "gamma2"):
        for kind in ("iso", "quantum", "classical"):
            emp = pools[kind].summary().stat(stat)
            se = pools[kind].stderr(stat)
            tol = 3.0 * se + 1e-9
            good = abs(emp - th[stat][kind]) <= tol
            ok = ok and good
            flag = "" if good else "  <-- out of tolerance"
            print(f"{stat:<10} {kind:<10} {th[stat][kind]:>12.6f} {emp:>12.6f} "
                  f"{tol:>10.4f}{flag}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinmix", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("slider", help="analytic mixture weight as JSON")
    p.add_argument("--n-sites", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.set_defaults(func=cmd_slider)

    p = sub.add_parser("run", help="sample spectra and write CSV/JSON artifacts")
    p.add_argument("--ensemble", choices=("wishart", "goe", "pm1", "fixed"),
                   required=True)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--spectrum-file", default=None)
    p.add_argument("--balanced", action="store_true",
                   help="pm1 only: pin the spectrum to half +1 / half -1")
    p.add_argument("--n-sites", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--range", dest="coupling_range", type=int, default=2)
    p.add_argument("--beta", type=int, choices=(1, 2), default=1)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--edges", default=None,
                   help="comma-separated explicit bin edges")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", help="check a preset against closed forms")
    p.add_argument("table", choices=sorted(_PRESETS))
    p.add_argument("--trials", type=int, default=None,
                   help="override the preset count; 0 prints theory only")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        return _fail_usage(str(exc))


if __name__ == "__main__":
    sys.exit(main())
