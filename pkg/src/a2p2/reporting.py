"""Rendering of evaluation reports: text table, CSV, JSON, and figures.

The eval CLI writes everything into one output directory so a run leaves a
self-contained bundle: report.json for machines, report.txt and the CSVs
for spreadsheets, and PNG figures for a quick look at the distributions.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


# Text-table precision: two decimals for seconds and percentages, three for
# p-values. The JSON bundle keeps the unformatted values.
_SECONDS = "{:.2f}"
_PCT = "{:.2f}"
_PVAL = "{:.3f}"
_PLAIN = "{}"


def render_text(report: dict) -> str:
    lines = []
    lines.append(f"Participants with paired sessions: {report['n_participants']}")
    lines.append("")
    header = f"{'':34s}" + "".join(f"{name:>16s}" for name in report["groups"])
    lines.append("Response times (all provider turns)")
    lines.append(header)
    lines.append(_row(report, "Intervention mean RT (s)", ("response_time", "intervention_mean"), _SECONDS))
    lines.append(_row(report, "Control mean RT (s)", ("response_time", "control_mean"), _SECONDS))
    lines.append(_row(report, "Reduction (%)", ("response_time", "reduction_pct"), _PCT))
    lines.append(_row(report, "Permutation p", ("response_time", "permutation_p"), _PVAL))
    lines.append(_row(report, "Cohen's dz", ("response_time", "cohens_dz"), _PCT))
    lines.append("")
    lines.append("Response times (open-ended empathy turns)")
    lines.append(header)
    lines.append(_row(report, "Intervention mean RT (s)", ("empathy_response_time", "intervention_mean"), _SECONDS))
    lines.append(_row(report, "Control mean RT (s)", ("empathy_response_time", "control_mean"), _SECONDS))
    lines.append(_row(report, "Reduction (%)", ("empathy_response_time", "reduction_pct"), _PCT))
    lines.append(_row(report, "Permutation p", ("empathy_response_time", "permutation_p"), _PVAL))
    lines.append("")
    lines.append("Empathic response accuracy (participants by correct count)")
    for name, group in report["groups"].items():
        table = group["empathy_accuracy"]["contingency"]
        fisher = group["empathy_accuracy"]["fisher_exact_p"]
        lines.append(f"  [{name}]  columns: zero/one/two correct")
        lines.append(f"    control      {table['control']}")
        lines.append(f"    intervention {table['intervention']}")
        lines.append(f"    Fisher exact p: {_PVAL.format(fisher) if fisher is not None else 'n/a (degenerate margins)'}")
    lines.append("")
    lines.append("Goal selection accuracy")
    lines.append(header)
    lines.append(_row(report, "Control accuracy", ("goal_selection", "accuracy", "control"), _PLAIN))
    lines.append(_row(report, "Intervention accuracy", ("goal_selection", "accuracy", "intervention"), _PLAIN))
    lines.append(_row(report, "Absolute increase (points)", ("goal_selection", "absolute_increase_points"), _PCT))
    lines.append(_row(report, "Relative increase vs control (%)", ("goal_selection", "relative_increase_vs_control_pct"), _PCT))
    lines.append("")
    lines.append("Symptom identification rate")
    lines.append(header)
    lines.append(_row(report, "Control", ("symptom_identification", "control"), _PLAIN))
    lines.append(_row(report, "Intervention", ("symptom_identification", "intervention"), _PLAIN))
    contrast = report.get("group_contrast")
    if contrast:
        lines.append("")
        lines.append("Expert vs non-expert relative RT reduction")
        lines.append(f"  expert mean      {_PCT.format(100 * contrast['expert_mean'])}%")
        lines.append(f"  non-expert mean  {_PCT.format(100 * contrast['non_expert_mean'])}%")
        lines.append(f"  permutation p    {_PVAL.format(contrast['permutation_p'])}")
    for note in report.get("notes", []):
        lines.append("")
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def _row(report: dict, label: str, path: tuple, fmt: str) -> str:
    cells = []
    for group in report["groups"].values():
        value: object = group
        for key in path:
            value = value[key] if value is not None else None
        cells.append("n/a" if value is None else fmt.format(value))
    return f"{label:34s}" + "".join(f"{cell:>16s}" for cell in cells)


def write_group_csv(report: dict, path: Path) -> None:
    fields = [
        "group", "n",
        "rt_intervention_mean", "rt_control_mean", "rt_reduction_pct", "rt_permutation_p", "rt_cohens_dz",
        "empathy_rt_reduction_pct", "empathy_rt_permutation_p",
        "fisher_exact_p",
        "goal_acc_control", "goal_acc_intervention",
        "symptom_id_control", "symptom_id_intervention",
    ]
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for name, group in report["groups"].items():
            writer.writerow(
                {
                    "group": name,
                    "n": group["n"],
                    "rt_intervention_mean": group["response_time"]["intervention_mean"],
                    "rt_control_mean": group["response_time"]["control_mean"],
                    "rt_reduction_pct": group["response_time"]["reduction_pct"],
                    "rt_permutation_p": group["response_time"]["permutation_p"],
                    "rt_cohens_dz": group["response_time"]["cohens_dz"],
                    "empathy_rt_reduction_pct": group["empathy_response_time"]["reduction_pct"],
                    "empathy_rt_permutation_p": group["empathy_response_time"]["permutation_p"],
                    "fisher_exact_p": group["empathy_accuracy"]["fisher_exact_p"],
                    "goal_acc_control": group["goal_selection"]["accuracy"]["control"],
                    "goal_acc_intervention": group["goal_selection"]["accuracy"]["intervention"],
                    "symptom_id_control": group["symptom_identification"]["control"],
                    "symptom_id_intervention": group["symptom_identification"]["intervention"],
                }
            )


def write_participant_csv(report: dict, path: Path) -> None:
    fields = [
        "participant", "group",
        "rt_intervention", "rt_control",
        "empathy_rt_intervention", "empathy_rt_control",
        "empathic_correct_intervention", "empathic_correct_control",
        "goal_correct_intervention", "goal_correct_control",
        "symptom_identified_intervention", "symptom_identified_control",
    ]
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in report["participants"]:
            writer.writerow(
                {
                    "participant": row["participant"],
                    "group": row["group"],
                    "rt_intervention": row["intervention"]["avg_rt"],
                    "rt_control": row["control"]["avg_rt"],
                    "empathy_rt_intervention": row["intervention"]["empathy_rt"],
                    "empathy_rt_control": row["control"]["empathy_rt"],
                    "empathic_correct_intervention": row["intervention"]["empathic_correct"],
                    "empathic_correct_control": row["control"]["empathic_correct"],
                    "goal_correct_intervention": row["intervention"]["goal_correct"],
                    "goal_correct_control": row["control"]["goal_correct"],
                    "symptom_identified_intervention": row["intervention"]["symptom_identified"],
                    "symptom_identified_control": row["control"]["symptom_identified"],
                }
            )


def render_figures(report: dict, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    rt_i = [row["intervention"]["avg_rt"] for row in report["participants"]]
    rt_c = [row["control"]["avg_rt"] for row in report["participants"]]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    bins = 10
    axes[0].hist([rt_c, rt_i], bins=bins, label=["control", "intervention"])
    axes[0].set_xlabel("average RT per session (s)")
    axes[0].set_ylabel("participants")
    axes[0].set_title("Average response times")
    axes[0].legend()
    deltas = [c - i for c, i in zip(rt_c, rt_i)]
    axes[1].hist(deltas, bins=bins, color="tab:green")
    axes[1].axvline(0.0, color="black", linewidth=0.8)
    axes[1].set_xlabel("control - intervention (s)")
    axes[1].set_ylabel("participants")
    axes[1].set_title("Per-participant RT difference")
    fig.tight_layout()
    rt_path = out_dir / "rt_distributions.png"
    fig.savefig(rt_path, dpi=120)
    plt.close(fig)
    written.append(rt_path)

    table = report["groups"]["all"]["empathy_accuracy"]["contingency"]
    x = range(3)
    width = 0.38
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.bar([i - width / 2 for i in x], table["control"], width, label="control")
    ax.bar([i + width / 2 for i in x], table["intervention"], width, label="intervention")
    ax.set_xticks(list(x), ["zero", "one", "two"])
    ax.set_xlabel("correct empathic selections per session")
    ax.set_ylabel("participants")
    ax.set_title("Empathic response accuracy")
    ax.legend()
    fig.tight_layout()
    acc_path = out_dir / "empathy_accuracy.png"
    fig.savefig(acc_path, dpi=120)
    plt.close(fig)
    written.append(acc_path)
    return written


def write_bundle(report: dict, out_dir: str | Path) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    (out / "report.txt").write_text(render_text(report))
    write_group_csv(report, out / "summary.csv")
    write_participant_csv(report, out / "participants.csv")
    figures = render_figures(report, out)
    return {
        "report_json": str(out / "report.json"),
        "report_txt": str(out / "report.txt"),
        "summary_csv": str(out / "summary.csv"),
        "participants_csv": str(out / "participants.csv"),
        "figures": [str(p) for p in figures],
    }
