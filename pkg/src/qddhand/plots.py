"""Static SVG figures for a scenario result."""
from __future__ import annotations

import importlib
from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed ids and no timestamp so reruns produce identical files
SVG_RC = {"svg.hashsalt": "qddhand", "svg.fonttype": "none"}
SVG_METADATA = {"Date": None, "Creator": None}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


def telemetry_figure(recorder, title: str):
    t = recorder.column("t")
    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    for f in range(2):
        axes[0].plot(t, recorder.column(f"f{f}_x"), label=f"finger {f} x")
        axes[0].plot(t, recorder.column(f"f{f}_y"), label=f"finger {f} y")
    axes[0].set_ylabel("fingertip, hand frame (m)")
    axes[0].legend(fontsize="small", ncol=2)
    for m in range(4):
        axes[1].plot(t, recorder.column(f"m{m}_iq"), label=f"motor {m}")
    axes[1].set_ylabel("i_q (A)")
    axes[1].legend(fontsize="small", ncol=4)
    for m in range(4):
        axes[2].plot(t, recorder.column(f"m{m}_tau"), label=f"motor {m}")
    axes[2].set_ylabel("motor torque (N m)")
    axes[2].set_xlabel("time (s)")
    fig.suptitle(title)
    fig.tight_layout()
    return fig


def write_plots(result, out_dir: Path) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    with plt.rc_context(SVG_RC):
        mod = importlib.import_module(f"qddhand.scenarios.{result.name}")
        custom = getattr(mod, "plot", None)
        if custom is not None:
            fig, axes = plt.subplots(1, 2, figsize=(10, 4))
            custom(result, axes)
            fig.tight_layout()
            paths.append(_save(fig, out_dir / f"{result.name}.svg"))
        if result.telemetry is not None and result.telemetry.rows:
            paths.append(_save(telemetry_figure(result.telemetry, result.name), out_dir / "telemetry.svg"))
    return paths
