"""Tab-separated simulation reports and the accompanying cost figure."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .scenario import SimulationReport

COST_COLUMNS = ("phase", "messages", "bytes")
ISSUANCE_COLUMNS = ("attribute", "members", "messages", "bytes", "all_pairs_formula")
ACTION_COLUMNS = ("line", "action", "target", "detail", "outcome", "expected", "pass")


def all_pairs_messages(n: int) -> int:
    """Messages for every member of an n-member group to key the attribute."""
    return n * 2 * (n - 1)


def _rows(report: SimulationReport):
    costs = [(p, c.messages, c.bytes) for p, c in report.phases.items()]
    issuance = [
        (a, report.group_sizes.get(a, 0), c.messages, c.bytes,
         all_pairs_messages(report.group_sizes.get(a, 0)))
        for a, c in sorted(report.issuance_by_attribute.items())
    ]
    actions = [
        (r.line, r.verb, r.target, r.detail, r.outcome, r.expected, "yes" if r.passed else "no")
        for r in report.results
    ]
    return costs, issuance, actions


def _tsv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n",
                        quoting=csv.QUOTE_NONE, quotechar=None, escapechar="\\")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def render_tsv(report: SimulationReport) -> str:
    costs, issuance, actions = _rows(report)
    return (
        "# costs\n" + _tsv(COST_COLUMNS, costs)
        + "# issuance\n" + _tsv(ISSUANCE_COLUMNS, issuance)
        + "# actions\n" + _tsv(ACTION_COLUMNS, actions)
    )


def plot_costs(report: SimulationReport, path: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_phase, ax_group) = plt.subplots(1, 2, figsize=(9, 3.6))

    phases = list(report.phases)
    ax_phase.bar(phases, [report.phases[p].messages for p in phases], color="0.45")
    ax_phase.set_ylabel("messages")
    ax_phase.set_title("traffic per phase")

    attrs = sorted(report.issuance_by_attribute)
    sizes = [report.group_sizes.get(a, 0) for a in attrs]
    counts = [report.issuance_by_attribute[a].messages for a in attrs]
    if sizes:
        ns = range(1, max(sizes) + 1)
        ax_group.plot(ns, [all_pairs_messages(n) for n in ns], "k--", lw=1, label="n·2(n−1)")
    ax_group.scatter(sizes, counts, zorder=3, label="observed")
    for a, n, c in zip(attrs, sizes, counts):
        ax_group.annotate(a, (n, c), textcoords="offset points", xytext=(4, 4), fontsize=8)
    ax_group.set_xlabel("authority group size n")
    ax_group.set_ylabel("issuance messages")
    ax_group.set_title("key issuance per attribute")
    if sizes:
        ax_group.legend(frameon=False, fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_report_dir(report: SimulationReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    costs, issuance, actions = _rows(report)
    written = []
    for name, cols, rows in (("costs.tsv", COST_COLUMNS, costs),
                             ("issuance.tsv", ISSUANCE_COLUMNS, issuance),
                             ("actions.tsv", ACTION_COLUMNS, actions)):
        (out / name).write_text(_tsv(cols, rows))
        written.append(out / name)
    written.append(plot_costs(report, out / "costs.png"))
    return written
