"""Fixed-schema telemetry frames and CSV persistence."""
from __future__ import annotations

import io
from pathlib import Path
from typing import List, Sequence

import numpy as np

FLOAT_FMT = "%.9g"

MOTOR_FIELDS = ("angle", "vel", "id", "iq", "tau")
FINGER_FIELDS = ("th1", "th2", "thd1", "thd2", "x", "y", "tau1", "tau2", "probe_x", "probe_y")
OBJECT_FIELDS = ("x", "y", "ang")
CONTACT_HEADER = ("t", "body_a", "body_b", "px", "py", "nx", "ny", "depth", "fn", "ft", "regime")


def frame_columns(object_names: Sequence[str]) -> List[str]:
    cols = ["t", "hand_x", "hand_y"]
    for m in range(4):
        cols += [f"m{m}_{f}" for f in MOTOR_FIELDS]
    for f in range(2):
        cols += [f"f{f}_{k}" for k in FINGER_FIELDS]
    for name in object_names:
        cols += [f"{name}_{k}" for k in OBJECT_FIELDS]
    cols.append("i_bus")
    return cols


class Recorder:
    """Accumulates telemetry frames (one row per recorded tick) and contact rows."""

    def __init__(self, object_names: Sequence[str], contacts: bool = True):
        self.columns = frame_columns(object_names)
        self.rows: List[np.ndarray] = []
        self.contact_rows: List[tuple] = []
        self.record_contacts = contacts

    def add(self, row: np.ndarray):
        if len(row) != len(self.columns):
            raise ValueError(f"frame has {len(row)} values, schema has {len(self.columns)}")
        if self.rows and not row[0] > self.rows[-1][0]:
            raise ValueError("telemetry timestamps must be strictly increasing")
        self.rows.append(np.asarray(row, dtype=float))

    def add_contacts(self, t: float, contacts):
        if not self.record_contacts:
            return
        for c in contacts:
            self.contact_rows.append(
                (t, c.body_a, c.body_b, *c.point, *c.normal, c.depth, c.normal_force, c.tangential_force, c.regime)
            )

    def array(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, len(self.columns)))
        return np.vstack(self.rows)

    def column(self, name: str) -> np.ndarray:
        return self.array()[:, self.columns.index(name)]

    def frames_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(FLOAT_FMT % v for v in row) + "\n")
        return buf.getvalue()

    def contacts_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CONTACT_HEADER) + "\n")
        for r in self.contact_rows:
            vals = [FLOAT_FMT % r[0], r[1], r[2]] + [FLOAT_FMT % v for v in r[3:10]] + [r[10]]
            buf.write(",".join(vals) + "\n")
        return buf.getvalue()

    def write(self, out_dir: Path, stem: str = "telemetry"):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        frames = out_dir / f"{stem}.csv"
        frames.write_text(self.frames_csv())
        paths = [frames]
        if self.record_contacts:
            contacts = out_dir / f"{stem}_contacts.csv"
            contacts.write_text(self.contacts_csv())
            paths.append(contacts)
        return paths
