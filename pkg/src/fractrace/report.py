"""Suite reports: stable-schema records, JSON/CSV/SVG emission."""

import json
import math
import os
from dataclasses import dataclass, field


@dataclass
class SuiteReport:
    """Per-check records with a schema stable across runs.

    status is one of pass / fail / vacuous / report-only; measured_constant
    carries the headline number of the check, witnesses the supporting
    details.  Runtimes are excluded from determinism comparisons.
    """

    records: list = field(default_factory=list)
    config_digest: dict = field(default_factory=dict)

    def add(self, name, status, measured_constant=None, witnesses=None, runtime=None):
        self.records.append(
            {
                "name": name,
                "status": status,
                "measured_constant": measured_constant,
                "witnesses": witnesses or {},
                "runtime": runtime,
            }
        )

    @property
    def failed(self):
        return [r for r in self.records if r["status"] == "fail"]

    def to_dict(self):
        return {"config": self.config_digest, "records": self.records}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=True)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")


def strip_runtimes(report_dict):
    out = json.loads(json.dumps(report_dict))
    for rec in out.get("records", []):
        rec.pop("runtime", None)
    return out


def append_jsonl(path, record):
    """Certifier output stream: one JSON object per line."""
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def _matplotlib():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_per_scale(per_scale_map, path, title="per-scale seminorm decay"):
    """Log-scale decay plot; per_scale_map: label -> [(j, value), ...]."""
    plt = _matplotlib()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, pairs in sorted(per_scale_map.items()):
        js = [j for j, _ in pairs]
        vs = [max(v, 1e-300) for _, v in pairs]
        ax.semilogy(js, vs, marker="o", label=label)
    ax.set_xlabel("scale index j")
    ax.set_ylabel("2^{j a} || E ||_p")
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_ratio_histogram(ratios, path, title="measured ratios"):
    plt = _matplotlib()
    finite = [r for r in ratios if r is not None and math.isfinite(r)]
    fig, ax = plt.subplots(figsize=(6, 4))
    if finite:
        ax.hist(finite, bins=min(30, max(5, len(finite) // 3)))
    ax.set_xlabel("ratio")
    ax.set_ylabel("count")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def write_outputs(report, out_dir, plots=True):
    os.makedirs(out_dir, exist_ok=True)
    report.save(os.path.join(out_dir, "report.json"))
    if plots:
        ratios = [r.get("measured_constant") for r in report.records]
        plot_ratio_histogram(
            [r for r in ratios if isinstance(r, (int, float))],
            os.path.join(out_dir, "ratios.svg"),
        )
    return os.path.join(out_dir, "report.json")
