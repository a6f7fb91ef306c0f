"""Run artifacts and cross-run reports.

``write_run`` lays a finished simulation out as a directory of delimited
files plus a checksum manifest:

    summary.txt     key=value lines, sorted by key
    counters.csv    per-core, per-class cache and DRAM counters
    occupancy.csv   partition occupancy samples over time
    pages.csv       per-page L1 miss histogram
    rta_export.txt  per-core interference counts for the response-time tool
    schedule.csv    DRAM grant log (only when requested)
    manifest.txt    sha256 of every other artifact

``write_report`` aggregates several run directories into one tidy
``plot_data.csv`` (columns run,core,class,metric,value) and renders the
matplotlib figures next to it.
"""

from __future__ import annotations

import hashlib
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .dram import write_schedule_log
from .engine import SimReport, export_rta
from .errors import ValidationError

_CLS_NAMES = ("be", "dm")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def summary_lines(report: SimReport, baseline_cycles: int | None = None) -> list[str]:
    """Flatten the headline numbers to sorted key=value strings."""
    items: dict[str, object] = {
        "mode": report.mode,
        "cores": report.num_cores,
        "cycles": report.cycles,
    }
    for c in report.traced_cores:
        runtime = report.core_runtime[c]
        items[f"core{c}.accesses"] = report.core_accesses[c]
        items[f"core{c}.runtime"] = runtime if runtime is not None else "unfinished"
        items[f"core{c}.loops"] = report.core_loops[c]
        items[f"core{c}.l1_hits"] = report.l1_hits[c]
        items[f"core{c}.l1_misses"] = report.l1_misses[c]
        items[f"core{c}.dm_misses"] = report.dm_misses[c]
        items[f"core{c}.be_l1_misses"] = report.be_l1_misses[c]
        items[f"core{c}.l2_hit_rate"] = f"{report.cache.hit_rate(c):.6f}"
        items[f"core{c}.cleanup_calls"] = report.cache.cleanup_calls[c]
        items[f"core{c}.dm_lines_cleared"] = report.cache.dm_lines_cleared[c]
    for cls in (0, 1):
        name = _CLS_NAMES[cls]
        items[f"dram.grants.{name}"] = report.dram.grants[cls]
        items[f"dram.row_hits.{name}"] = report.dram.row_hits[cls]
    items["dram.max_wait"] = report.dram.max_wait
    items["dram.rejected"] = report.dram.rejected
    if baseline_cycles is not None:
        mc = report.traced_cores[0] if report.traced_cores else 0
        if report.core_runtime[mc] is None or baseline_cycles <= 0:
            raise ValidationError("slowdown needs a finished run and a positive baseline")
        items["slowdown"] = f"{report.core_runtime[mc] / baseline_cycles:.6f}"
    return [f"{k}={items[k]}" for k in sorted(items)]


def write_run(
    report: SimReport,
    outdir: str,
    baseline_cycles: int | None = None,
    schedule: bool = False,
) -> dict[str, str]:
    """Write all artifacts for one run; returns {filename: sha256}."""
    os.makedirs(outdir, exist_ok=True)
    names: list[str] = []

    path = os.path.join(outdir, "summary.txt")
    with open(path, "w") as fh:
        fh.write("\n".join(summary_lines(report, baseline_cycles)) + "\n")
    names.append("summary.txt")

    path = os.path.join(outdir, "counters.csv")
    with open(path, "w") as fh:
        fh.write("core,class,accesses,hits,misses,bypasses,evictions_caused\n")
        for c in range(report.num_cores):
            for cls in (0, 1):
                fh.write(
                    f"{c},{_CLS_NAMES[cls]},{report.cache.accesses[c][cls]},"
                    f"{report.cache.hits[c][cls]},{report.cache.misses[c][cls]},"
                    f"{report.cache.bypasses[c][cls]},"
                    f"{report.cache.evictions_caused[c][cls]}\n"
                )
    names.append("counters.csv")

    path = os.path.join(outdir, "occupancy.csv")
    with open(path, "w") as fh:
        fh.write("time,core,dm_lines,capacity,owned_valid\n")
        for now, dm_lines, caps, owned in report.cache.occupancy_samples:
            for c in range(report.num_cores):
                fh.write(f"{now},{c},{dm_lines[c]},{caps[c]},{owned[c]}\n")
    names.append("occupancy.csv")

    path = os.path.join(outdir, "pages.csv")
    with open(path, "w") as fh:
        fh.write("core,vpage,l1_misses\n")
        for c in sorted(report.page_hist):
            for vp in sorted(report.page_hist[c]):
                fh.write(f"{c},{vp:#x},{report.page_hist[c][vp]}\n")
    names.append("pages.csv")

    path = os.path.join(outdir, "rta_export.txt")
    with open(path, "w") as fh:
        fh.write(export_rta(report))
    names.append("rta_export.txt")

    if schedule:
        write_schedule_log(report.schedule_log, os.path.join(outdir, "schedule.csv"))
        names.append("schedule.csv")

    checksums = {name: _sha256(os.path.join(outdir, name)) for name in names}
    with open(os.path.join(outdir, "manifest.txt"), "w") as fh:
        for name in sorted(checksums):
            fh.write(f"{checksums[name]}  {name}\n")
    return checksums


# ------------------------------------------------------------------ reports


def read_summary(run_dir: str) -> dict[str, str]:
    path = os.path.join(run_dir, "summary.txt")
    if not os.path.exists(path):
        raise ValidationError(f"{run_dir} has no summary.txt (not a run directory?)")
    out: dict[str, str] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, _, value = line.partition("=")
                out[key] = value
    return out


def _tidy_rows(run_name: str, summary: dict[str, str]) -> list[tuple]:
    rows: list[tuple] = []
    for key, value in summary.items():
        if key.startswith("core"):
            core, _, metric = key.partition(".")
            if not metric or not core[4:].isdigit():
                continue
            try:
                num = float(value)
            except ValueError:
                continue
            rows.append((run_name, int(core[4:]), "all", metric, num))
        elif key.startswith("dram."):
            parts = key.split(".")
            cls = parts[2] if len(parts) == 3 else "all"
            rows.append((run_name, -1, cls, "dram_" + parts[1], float(value)))
        elif key in ("cycles", "slowdown"):
            rows.append((run_name, -1, "all", key, float(value)))
    return rows


def write_report(run_dirs: list[str], outdir: str, plot_data: bool = True) -> list[str]:
    """Aggregate run directories; returns the artifact paths written."""
    if not run_dirs:
        raise ValidationError("no run directories given")
    os.makedirs(outdir, exist_ok=True)
    written: list[str] = []
    summaries = []
    for d in run_dirs:
        summaries.append((os.path.basename(os.path.normpath(d)) or d, read_summary(d), d))

    if plot_data:
        path = os.path.join(outdir, "plot_data.csv")
        with open(path, "w") as fh:
            fh.write("run,core,class,metric,value\n")
            for name, summary, _ in summaries:
                for row in _tidy_rows(name, summary):
                    fh.write(",".join(str(x) for x in row) + "\n")
        written.append(path)

    # Hit-rate bars, one group per run.
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / max(len(summaries), 1)
    cores_seen = sorted(
        {
            int(k[4:].split(".")[0])
            for _, s, _ in summaries
            for k in s
            if k.startswith("core") and k[4:].split(".")[0].isdigit()
        }
    )
    for i, (name, summary, _) in enumerate(summaries):
        xs, ys = [], []
        for j, c in enumerate(cores_seen):
            val = summary.get(f"core{c}.l2_hit_rate")
            if val is not None:
                xs.append(j + i * width)
                ys.append(float(val))
        ax.bar(xs, ys, width=width, label=name)
    ax.set_xticks(range(len(cores_seen)))
    ax.set_xticklabels([f"core {c}" for c in cores_seen])
    ax.set_ylabel("shared-cache hit rate")
    ax.set_ylim(0, 1)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(outdir, "hit_rates.png")
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    # Occupancy over time for each run that has samples.
    fig, ax = plt.subplots(figsize=(7, 4))
    plotted = False
    for name, _, d in summaries:
        occ_path = os.path.join(d, "occupancy.csv")
        if not os.path.exists(occ_path):
            continue
        series: dict[int, tuple[list, list]] = {}
        with open(occ_path) as fh:
            next(fh)
            for line in fh:
                t, c, dm_lines, _, _ = line.strip().split(",")
                series.setdefault(int(c), ([], []))
                series[int(c)][0].append(int(t))
                series[int(c)][1].append(int(dm_lines))
        for c, (ts, vs) in sorted(series.items()):
            ax.plot(ts, vs, label=f"{name} core {c}", linewidth=1)
            plotted = True
    if plotted:
        ax.set_xlabel("cycle")
        ax.set_ylabel("dm lines in partition")
        ax.legend(fontsize=7)
    fig.tight_layout()
    path = os.path.join(outdir, "occupancy.png")
    fig.savefig(path)
    plt.close(fig)
    written.append(path)
    return written
