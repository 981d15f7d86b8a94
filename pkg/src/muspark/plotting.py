"""Report-directory output for verify and fuzz: JSON, CSV and one chart.

matplotlib is imported lazily (Agg backend) so the rest of the toolchain
never pays for it.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from muspark.oracle.report import VerifyReport

CSV_FIELDS = ("index", "seed", "statements", "accepted", "executions", "truncated", "checkpoints", "violations")


def write_report_dir(report: VerifyReport, directory: Path, title: str) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    json_path = directory / "report.json"
    json_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    csv_path = directory / "programs.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for row in report.rows:
            writer.writerow({k: row.get(k, "") for k in CSV_FIELDS})
    png_path = directory / "outcomes.png"
    plot_report(report, png_path, title)
    return [json_path, csv_path, png_path]


def plot_report(report: VerifyReport, path: Path, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.5))
    kinds = sorted(report.outcomes)
    left.bar(kinds, [report.outcomes[k] for k in kinds], color="#4c72b0")
    left.set_title("execution outcomes")
    left.set_ylabel("executions")
    left.tick_params(axis="x", labelrotation=20)

    executions = [row["executions"] for row in report.rows if row.get("accepted")]
    if executions:
        right.hist(executions, bins=min(20, max(1, len(set(executions)))), color="#55a868")
        right.set_xlabel("executions per accepted program")
    else:
        right.text(0.5, 0.5, f"{len(report.violations)} violation(s)", ha="center", va="center")
        right.set_axis_off()
    right.set_title(f"violations: {len(report.violations)}")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
