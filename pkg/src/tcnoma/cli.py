"""Command-line front end.

Subcommands::

    tcnoma simulate     BER vs SNR for one or more schemes (presets fig7, fig8)
    tcnoma power-sweep  BER vs P1/P2 with P1 + P2 fixed (preset fig9)
    tcnoma freedist     closed-form vs exhaustive-search free distance table
    tcnoma optimize     optimal power split for a sum budget

Settings come from a preset, then a ``key=value`` config file
(``--config``), then command-line flags; later sources win.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import kernels
from .channel import CSV_FIELDS, SCHEMES, ChannelParams, SchemeConfig, run_ber
from .freedist import d_free_sq, free_distance_event
from .powalloc import optimal_powers_closed_form, optimal_powers_grid, search_evaluator
from .product import PowerPair, tensor_product
from .trellis import build_ungerboeck_4state, load_trellis

log = logging.getLogger("tcnoma")


def _frange(start: float, stop: float, step: float) -> list[float]:
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(n)]


def parse_float_list(text: str) -> list[float]:
    """``"16,18"`` or an inclusive range ``"0:20:2"``."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = map(float, parts)
        if step <= 0 or stop < start:
            raise ValueError(f"bad range {text!r}")
        return _frange(start, stop, step)
    return [float(x) for x in text.split(",") if x.strip()]


PRESETS = {
    "fig7": dict(command="simulate", schemes=["TC-NOMA-joint", "TC-NOMA-separate", "TCMA", "UC-NOMA"],
                 p1=0.1, p2=1.0, snr_db=_frange(0, 20, 2)),
    "fig8": dict(command="simulate",
                 schemes=["TC-NOMA-joint", "TC-NOMA-separate", "TC-NOMA-joint-rotate", "TCMA", "UC-NOMA"],
                 p1=0.3, p2=1.0, snr_db=_frange(0, 20, 2)),
    "fig9": dict(command="power-sweep", schemes=["TC-NOMA-joint", "UC-NOMA", "TCMA"],
                 snr_db=[16.0, 18.0], ratios=_frange(0.05, 0.95, 0.05), budget=1.0),
}


@dataclass
class ExperimentConfig:
    schemes: list[str] = field(default_factory=lambda: ["TC-NOMA-joint"])
    p1: float = 0.1
    p2: float = 1.0
    budget: float = 1.0
    ratios: list[float] = field(default_factory=lambda: _frange(0.05, 0.95, 0.05))
    snr_db: list[float] = field(default_factory=lambda: _frange(0, 20, 2))
    frames: int = 2000
    frame_len: int = 500
    seed: int = 0
    workers: int = 1
    h1_sq: float = 2.0
    h2_sq: float = 1.0
    max_len: int = 12
    step: float = 0.001
    out: str = ""
    trellis_file: str = ""
    with_search: bool = False

    def validate(self, command: str) -> "ExperimentConfig":
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)}")
        if command in ("simulate", "power-sweep"):
            if not self.schemes:
                raise ValueError("no schemes selected (--scheme)")
            if not self.snr_db:
                raise ValueError("empty SNR list (--snr-db)")
            if self.frames < 1 or self.frame_len < 1:
                raise ValueError("--frames and --frame-len must be at least 1")
            if self.workers < 1:
                raise ValueError("--workers must be at least 1")
            if self.seed < 0:
                raise ValueError("--seed must be non-negative")
        if command == "simulate" and not 0 < self.p1 < self.p2:
            raise ValueError(f"need 0 < p1 < p2, got p1={self.p1}, p2={self.p2}")
        if command == "power-sweep" and (not self.ratios or any(not 0 < r < 1 for r in self.ratios)):
            raise ValueError("power-sweep ratios must lie in (0, 1)")
        if command == "freedist" and (not self.ratios or any(not 0 < r <= 1 for r in self.ratios)):
            raise ValueError("freedist ratios must lie in (0, 1]")
        if not self.budget > 0:
            raise ValueError("--budget must be positive")
        if not self.h1_sq > self.h2_sq > 0:
            raise ValueError("need h1_sq > h2_sq > 0")
        return self

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        return dataclasses.replace(base or cls(), **_parse_kv(text))


_FIELD_TYPES = {
    "schemes": "strlist", "ratios": "floatlist", "snr_db": "floatlist",
    "p1": float, "p2": float, "budget": float, "h1_sq": float, "h2_sq": float, "step": float,
    "frames": int, "frame_len": int, "seed": int, "workers": int, "max_len": int,
    "out": str, "trellis_file": str, "with_search": "bool",
}


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES.get(key)
    if kind is None:
        raise ValueError(f"unknown config key {key!r}")
    if kind == "strlist":
        return [s.strip() for s in raw.split(",") if s.strip()]
    if kind == "floatlist":
        return parse_float_list(raw)
    if kind == "bool":
        if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"config key {key!r}: expected true/false, got {raw!r}")
        return raw.lower() in ("true", "1", "yes")
    try:
        return kind(raw)
    except ValueError:
        raise ValueError(f"config key {key!r}: cannot parse {raw!r} as {kind.__name__}") from None


def _parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = _convert(key, val)
    return out


def _trellises(cfg: ExperimentConfig):
    t = load_trellis(Path(cfg.trellis_file)) if cfg.trellis_file else build_ungerboeck_4state()
    return t, t


def _channel(cfg: ExperimentConfig) -> ChannelParams:
    return ChannelParams(math.sqrt(cfg.h1_sq), math.sqrt(cfg.h2_sq))


def _scheme(cfg: ExperimentConfig, name: str, powers: PowerPair) -> SchemeConfig:
    if name == "UC-NOMA":
        return SchemeConfig(name, powers)
    t1, t2 = _trellises(cfg)
    return SchemeConfig(name, powers, trellis1=t1, trellis2=t2)


def _write(text: str, out: str, default: str) -> Path:
    path = Path(out or default)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None
    return path


def _csv(header: Sequence[str], rows: list[Sequence]) -> str:
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def cmd_simulate(cfg: ExperimentConfig, echo=print) -> list:
    cfg.validate("simulate")
    powers = PowerPair(cfg.p1, cfg.p2)
    records = []
    for name in cfg.schemes:
        log.info("simulating %s", name)
        records += run_ber(_scheme(cfg, name, powers), _channel(cfg), cfg.snr_db, cfg.frames,
                           cfg.frame_len, cfg.seed, cfg.workers)
    rows = [[r.as_row()[k] for k in CSV_FIELDS] for r in records]
    path = _write(_csv(CSV_FIELDS, rows), cfg.out, "simulate.csv")
    echo(f"{'scheme':<22}{'SNR dB':>8}{'BER user1':>12}{'BER user2':>12}{'BER avg':>12}")
    for r in records:
        echo(f"{r.scheme:<22}{r.snr_db:>8.1f}{r.ber_user1:>12.3e}{r.ber_user2:>12.3e}{r.ber_avg:>12.3e}")
    echo(f"wrote {path}")
    return records


def cmd_power_sweep(cfg: ExperimentConfig, echo=print) -> list:
    cfg.validate("power-sweep")
    results = []
    for name in cfg.schemes:
        for ratio in cfg.ratios:
            powers = PowerPair.from_ratio(ratio, cfg.budget)
            log.info("sweeping %s at ratio %.3f", name, ratio)
            for r in run_ber(_scheme(cfg, name, powers), _channel(cfg), cfg.snr_db, cfg.frames,
                             cfg.frame_len, cfg.seed, cfg.workers):
                results.append((ratio, r))
    header = ("ratio",) + CSV_FIELDS
    rows = [[repr(ratio)] + [r.as_row()[k] for k in CSV_FIELDS] for ratio, r in results]
    path = _write(_csv(header, rows), cfg.out, "power_sweep.csv")
    for name in cfg.schemes:
        for snr in cfg.snr_db:
            pts = [(r.ber_avg, ratio) for ratio, r in results if r.scheme == name and r.snr_db == snr]
            ber, ratio = min(pts)
            echo(f"{name:<22} SNR {snr:5.1f} dB: min BER {ber:.3e} at P1/P2 = {ratio:.2f}")
    echo(f"wrote {path}")
    return results


def cmd_freedist(cfg: ExperimentConfig, echo=print) -> list[tuple]:
    cfg.validate("freedist")
    t1, t2 = _trellises(cfg)
    rows = []
    for ratio in cfg.ratios:
        pp = PowerPair.from_ratio(ratio, cfg.budget)
        rep = d_free_sq(pp)
        search = free_distance_event(tensor_product(t1, t2, pp), cfg.max_len).d_free_sq
        rows.append((ratio, rep.d_parallel_sq, rep.d_dm_sq, rep.d_free_sq, search))
    header = ("ratio", "d_parallel_sq", "d_dm_sq", "d_free_sq", "search_d_free_sq")
    path = _write(_csv(header, [[repr(float(v)) for v in row] for row in rows]), cfg.out, "freedist.csv")
    below = [r for r in rows if r[4] < r[3] - 1e-9]
    above = [r for r in rows if r[4] > r[3] + 1e-9]
    echo(f"{len(rows)} ratios; search == closed form at {len(rows) - len(below) - len(above)}, "
         f"search < closed form at {len(below)}, search > closed form at {len(above)}")
    for r in below:
        echo(f"  ratio {r[0]:.3f}: closed form {r[3]:.6f}, search {r[4]:.6f}")
    best = max(rows, key=lambda r: r[3])
    echo(f"closed-form d_free^2 peaks at ratio {best[0]:.4f} ({best[3]:.6f})")
    echo(f"wrote {path}")
    return rows


def cmd_optimize(cfg: ExperimentConfig | float, echo=print) -> dict:
    """Optimal split of ``cfg.budget`` (a bare number is taken as the budget).

    The exhaustive-search grid row is only computed with ``with_search``.
    """
    if not isinstance(cfg, ExperimentConfig):
        cfg = ExperimentConfig(budget=float(cfg))
    cfg.validate("optimize")
    out = {
        "closed_form": optimal_powers_closed_form(cfg.budget),
        "grid": optimal_powers_grid(cfg.budget, cfg.step, "closed-form"),
    }
    if cfg.with_search:
        t1, t2 = _trellises(cfg)
        out["search"] = optimal_powers_grid(cfg.budget, max(cfg.step, 0.001),
                                            search_evaluator(t1, t2, max_len=cfg.max_len))
    labels = {"closed_form": "closed form", "grid": "grid, closed form", "search": "grid, exhaustive search"}
    echo(f"{'method':<24}{'P1*':>10}{'P2*':>10}{'P1*/P2*':>10}{'d_free^2':>10}")
    for key, sol in out.items():
        echo(f"{labels[key]:<24}{sol.p1_star:>10.4f}{sol.p2_star:>10.4f}{sol.ratio:>10.5f}{sol.d_free_sq_at_opt:>10.4f}")
    return out


COMMANDS = {
    "simulate": cmd_simulate,
    "power-sweep": cmd_power_sweep,
    "freedist": cmd_freedist,
    "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--scheme", action="append", help=f"one of {', '.join(SCHEMES)}; repeatable or comma-separated")
    common.add_argument("--p1", type=float)
    common.add_argument("--p2", type=float)
    common.add_argument("--budget", type=float)
    common.add_argument("--ratios", help="P1/P2 grid, list or start:stop:step")
    common.add_argument("--snr-db", help="SNR list or start:stop:step (dB)")
    common.add_argument("--frames", type=int)
    common.add_argument("--frame-len", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--max-len", type=int)
    common.add_argument("--step", type=float)
    common.add_argument("--out")
    common.add_argument("--trellis-file")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tcnoma", description="Trellis-coded NOMA simulator")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "optimize":
            sp.add_argument("budget_pos", nargs="?", type=float, metavar="BUDGET")
            sp.add_argument("--with-search", action="store_true", default=None,
                            help="also run the exhaustive-search grid (seconds)")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.command == "freedist":
        cfg.ratios = _frange(0.02, 0.98, 0.02)
    if args.preset:
        preset = dict(PRESETS[args.preset])
        if preset.pop("command") != args.command:
            raise ValueError(f"preset {args.preset} belongs to '{PRESETS[args.preset]['command']}'")
        cfg = dataclasses.replace(cfg, **preset)
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc.strerror}") from None
        cfg = ExperimentConfig.from_text(text, cfg)
    overrides = {}
    if args.scheme:
        overrides["schemes"] = [s.strip() for item in args.scheme for s in item.split(",") if s.strip()]
    if args.snr_db is not None:
        overrides["snr_db"] = parse_float_list(args.snr_db)
    if args.ratios is not None:
        overrides["ratios"] = parse_float_list(args.ratios)
    for key in ("p1", "p2", "budget", "frames", "frame_len", "seed", "workers", "max_len", "step",
                "out", "trellis_file"):
        v = getattr(args, key)
        if v is not None:
            overrides[key] = v
    if getattr(args, "with_search", None):
        overrides["with_search"] = True
    if getattr(args, "budget_pos", None) is not None:
        overrides["budget"] = args.budget_pos
    return dataclasses.replace(cfg, **overrides)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.info("kernel backend: %s", kernels.BACKEND)
    try:
        cfg = config_from_args(args)
        COMMANDS[args.command](cfg)
    except (ValueError, OSError) as exc:
        print(f"tcnoma {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
