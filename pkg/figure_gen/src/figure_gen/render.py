"""Render study figures from experiment CSV outputs.

Reads only the documented CSV schemas emitted by the experiment CLI; the
estimation code is never imported.  A figure spec is a small JSON file:

    {"kind": "rate", "inputs": ["out/rate.csv"], "out": "rate.png",
     "labels": {"title": "..."}}

kinds: rate | coverage | band | compare.  Rendering is deterministic for
identical inputs (fixed style, no timestamps in the output files).
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams.update(
    {
        "figure.figsize": (6.0, 4.0),
        "figure.dpi": 130,
        "savefig.dpi": 130,
        "font.family": "DejaVu Sans",
        "svg.hashsalt": "figure-gen",
        "axes.grid": True,
        "grid.alpha": 0.3,
    }
)
import matplotlib.pyplot as plt  # noqa: E402

REQUIRED_COLUMNS = {
    "rate": {"n", "rep", "sup_err_post_mean", "sup_radius90"},
    "coverage": {"n", "rep", "cover_lam"},
    "band": {"t", "v_lo", "v_hi", "v_median", "v_truth", "m_lo", "m_hi", "m_median", "m_truth"},
    "compare": None,  # validated per input below
}


class SpecError(ValueError):
    pass


def read_csv(path) -> dict[str, np.ndarray]:
    """Load a CSV with a header row into float columns."""
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SpecError(f"{path}: empty file, not even a header row")
        rows = [r for r in reader if r]
    cols = {name: np.array([float(r[i]) for r in rows]) for i, name in enumerate(header)}
    return cols


def _check_columns(cols: dict, required: set, path) -> None:
    missing = required - set(cols)
    if missing:
        raise SpecError(f"{path}: missing columns {sorted(missing)}")


def _empty_banner(ax, message: str) -> None:
    ax.text(
        0.5, 0.5, message, transform=ax.transAxes, ha="center", va="center",
        fontsize=12, color="firebrick",
        bbox={"boxstyle": "round", "facecolor": "mistyrose", "edgecolor": "firebrick"},
    )


def _median_by_n(cols: dict, field: str):
    ns = np.unique(cols["n"]).astype(int)
    meds = np.array([np.median(cols[field][cols["n"] == n]) for n in ns])
    return ns, meds


def _loglog_slope(ns: np.ndarray, meds: np.ndarray) -> float:
    return float(np.polyfit(np.log(ns), np.log(meds), 1)[0])


def render_rate(spec: dict) -> dict:
    cols = read_csv(spec["inputs"][0])
    fig, ax = plt.subplots()
    meta: dict = {}
    if len(cols["n"]) == 0:
        _empty_banner(ax, "no data: empty rate CSV")
        meta["warning"] = "empty input"
    else:
        _check_columns(cols, REQUIRED_COLUMNS["rate"], spec["inputs"][0])
        ns, med_err = _median_by_n(cols, "sup_err_post_mean")
        _, med_rad = _median_by_n(cols, "sup_radius90")
        slope = _loglog_slope(ns, med_err)
        ax.loglog(ns, med_err, "o-", label="posterior mean sup error")
        ax.loglog(ns, med_rad, "s--", label="90% posterior sup radius")
        ax.annotate(
            f"slope = {slope:.3f}",
            xy=(ns[-1], med_err[-1]),
            xytext=(-10, 12),
            textcoords="offset points",
            ha="right",
        )
        ax.legend()
        meta["slope"] = slope
    labels = spec.get("labels", {})
    ax.set_xlabel(labels.get("x", "sample size n"))
    ax.set_ylabel(labels.get("y", "sup-norm error"))
    ax.set_title(labels.get("title", "posterior contraction trend"))
    return _save(fig, spec, meta)


def render_coverage(spec: dict) -> dict:
    cols = read_csv(spec["inputs"][0])
    fig, ax = plt.subplots()
    meta: dict = {}
    if len(cols["n"]) == 0:
        _empty_banner(ax, "no data: empty coverage CSV")
        meta["warning"] = "empty input"
    else:
        _check_columns(cols, REQUIRED_COLUMNS["coverage"], spec["inputs"][0])
        ns = np.unique(cols["n"]).astype(int)
        rates, errs = [], []
        for n in ns:
            hits = cols["cover_lam"][cols["n"] == n]
            rates.append(np.mean(hits))
            errs.append(np.sqrt(rates[-1] * (1 - rates[-1]) / max(len(hits), 1)))
        ax.errorbar(ns, rates, yerr=errs, fmt="o-", capsize=4, label="empirical coverage")
        ax.axhline(0.9, color="gray", linestyle=":", label="nominal 0.9")
        ax.set_xscale("log")
        ax.set_ylim(0.0, 1.05)
        ax.legend()
        meta["coverage"] = {int(n): float(r) for n, r in zip(ns, rates)}
    labels = spec.get("labels", {})
    ax.set_xlabel(labels.get("x", "sample size n"))
    ax.set_ylabel(labels.get("y", "coverage of the 90% interval"))
    ax.set_title(labels.get("title", "credible-interval coverage"))
    return _save(fig, spec, meta)


def render_band(spec: dict) -> dict:
    cols = read_csv(spec["inputs"][0])
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0))
    meta: dict = {}
    if len(cols.get("t", [])) == 0:
        for ax in axes:
            _empty_banner(ax, "no data: empty band CSV")
        meta["warning"] = "empty input"
    else:
        _check_columns(cols, REQUIRED_COLUMNS["band"], spec["inputs"][0])
        t = cols["t"]
        for ax, prefix, name in ((axes[0], "v", "V(t)"), (axes[1], "m", "M(t)")):
            ax.fill_between(
                t, cols[f"{prefix}_lo"], cols[f"{prefix}_hi"], alpha=0.3, label="90% band"
            )
            ax.plot(t, cols[f"{prefix}_median"], "-", label="posterior median")
            ax.plot(t, cols[f"{prefix}_truth"], "k--", label="truth")
            ax.set_xlabel("t")
            ax.set_ylabel(name)
            ax.legend(fontsize=8)
        meta["truth_inside_v_band"] = bool(
            np.all((cols["v_lo"] <= cols["v_truth"]) & (cols["v_truth"] <= cols["v_hi"]))
        )
    fig.suptitle(spec.get("labels", {}).get("title", "posterior credible bands"))
    return _save(fig, spec, meta)


def render_compare(spec: dict) -> dict:
    if len(spec["inputs"]) < 2:
        raise SpecError("compare needs two inputs: spectral CSV and rate CSV")
    spec_cols = read_csv(spec["inputs"][0])
    bayes_cols = read_csv(spec["inputs"][1])
    fig, ax = plt.subplots()
    meta: dict = {}
    if len(spec_cols.get("n", [])) == 0 or len(bayes_cols.get("n", [])) == 0:
        _empty_banner(ax, "no data: empty comparison input")
        meta["warning"] = "empty input"
    else:
        _check_columns(spec_cols, {"n", "hdelta_err"}, spec["inputs"][0])
        _check_columns(bayes_cols, {"n", "l2_err_post_mean"}, spec["inputs"][1])
        ns, med_spec = _median_by_n(spec_cols, "hdelta_err")
        nb, med_bayes = _median_by_n(bayes_cols, "l2_err_post_mean")
        ax.loglog(ns, med_spec, "o-", label="spectral cutoff, H(delta) error")
        ax.loglog(nb, med_bayes, "s--", label="posterior mean, L2 error")
        ax.legend()
        meta["spectral_medians"] = med_spec.tolist()
        meta["bayes_medians"] = med_bayes.tolist()
    labels = spec.get("labels", {})
    ax.set_xlabel(labels.get("x", "sample size n"))
    ax.set_ylabel(labels.get("y", "estimation error"))
    ax.set_title(labels.get("title", "spectral vs Bayes"))
    return _save(fig, spec, meta)


RENDERERS = {
    "rate": render_rate,
    "coverage": render_coverage,
    "band": render_band,
    "compare": render_compare,
}


def _save(fig, spec: dict, meta: dict) -> dict:
    out = Path(spec["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata=_clean_metadata(out.suffix))
    plt.close(fig)
    meta["out"] = str(out)
    return meta


def _clean_metadata(suffix: str):
    # strip creation dates so identical inputs give identical bytes
    if suffix == ".svg":
        return {"Date": None}
    if suffix == ".png":
        return {"Software": "figure-gen"}
    return None


def render(spec) -> dict:
    """Render one figure from a spec dict or a path to a spec JSON file."""
    if not isinstance(spec, dict):
        with open(spec, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    kind = spec.get("kind")
    if kind not in RENDERERS:
        raise SpecError(f"unknown figure kind {kind!r}; choose from {sorted(RENDERERS)}")
    if not spec.get("inputs"):
        raise SpecError("spec needs a nonempty 'inputs' list")
    if "out" not in spec:
        raise SpecError("spec needs an 'out' image path")
    return RENDERERS[kind](spec)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: figure-gen <spec.json>", file=sys.stderr)
        return 2
    meta = render(argv[0])
    print(json.dumps(meta, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
