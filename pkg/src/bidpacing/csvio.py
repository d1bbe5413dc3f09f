"""CSV readers and writers: auction logs, GSP logs and simulation traces."""

from __future__ import annotations

import csv

from .sim import RunReport, trace_lines


def read_auction_log(path) -> list:
    """Rows ``t,competing_ecpm,pctr[,ecpm_2..]`` as (competing eCPM, pctr)
    pairs. Extra ladder columns are ignored."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["t", "competing_ecpm", "pctr"]:
            raise ValueError(f"{path}: expected header t,competing_ecpm,pctr")
        for n, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                c, r = float(row[1]), float(row[2])
            except (IndexError, ValueError):
                raise ValueError(f"{path}:{n}: malformed row") from None
            out.append((c, r))
    return out


def read_gsp_log(path) -> list:
    """Rows ``t,pctr,ecpm_1..ecpm_k`` as (pctr, descending ladder)."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["t", "pctr", "ecpm_1"]:
            raise ValueError(f"{path}: expected header t,pctr,ecpm_1,...")
        for n, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out.append((float(row[1]), [float(v) for v in row[2:]]))
            except ValueError:
                raise ValueError(f"{path}:{n}: malformed row") from None
    return out


def write_auction_log(path, competing, pctr):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "competing_ecpm", "pctr"])
        for t, (c, r) in enumerate(zip(competing, pctr)):
            w.writerow([t, repr(float(c)), repr(float(r))])


def write_trace(path, report: RunReport):
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(trace_lines(report)) + "\n")
