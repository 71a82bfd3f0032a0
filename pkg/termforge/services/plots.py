from __future__ import annotations

from pathlib import Path
from typing import Any

from termforge.core.logging import get_logger

logger = get_logger(component="plots")


def write_plots(train_report: dict[str, Any], out_dir: Path) -> list[Path]:
    """Loss curve per stage and the sentence-stage embedding margin; returns nothing when matplotlib is not installed."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        logger.info("plots_skipped", reason="matplotlib_not_installed")
        return []

    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    stages = train_report.get("stages", [])
    if stages:
        fig, ax = plt.subplots(figsize=(6, 4))
        for stage in stages:
            curve = stage["curve"]
            ax.plot(range(1, len(curve) + 1), curve, marker="o", label=stage["name"])
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean loss")
        ax.legend()
        fig.tight_layout()
        target = out_dir / "loss_curves.png"
        fig.savefig(target, dpi=100)
        plt.close(fig)
        written.append(target)

    margin = train_report.get("margin")
    if margin:
        fig, ax = plt.subplots(figsize=(4, 4))
        ax.bar(["before", "after"], [margin["before"], margin["after"]], color=["#999999", "#1f77b4"])
        ax.set_ylabel("embedding margin")
        fig.tight_layout()
        target = out_dir / "margin.png"
        fig.savefig(target, dpi=100)
        plt.close(fig)
        written.append(target)

    logger.info("plots_written", count=len(written))
    return written


__all__ = ["write_plots"]
