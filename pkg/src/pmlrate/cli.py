"""Command-line front end.

Subcommands
-----------
rate phi        decay-rate density along a radial grid
rate theta0     threshold angle for a scaling and truncation radius
predict         error exponent and bound for one configuration
verify-1d       interval experiment: measured sup error vs closed form
verify-scatter  scattering experiment: modal errors vs predicted bound
figures         profile/decay-rate tables for replotting
special selftest   cylinder-function identity suite (undocumented)

Flags may come from a flat key=value config file (--config PATH); explicit
flags win over file values, and unknown keys are rejected.  Outputs embed
the fully resolved configuration as a leading comment (or a "config"
object in JSON).  verify subcommands exit 0 only when their fit verdict
is pass; PML_THREADS caps sweep parallelism (0 = all cores).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .harness import (
    Sweep1D,
    SweepAborted,
    SweepSpec,
    fit_decay_rate,
    reproduce_figure_phi,
    run_sweep,
)
from .rate import phi, phi_condition_holds, predicted_exponent, t_min, theta0
from .scaling import PmlProfile, parse_scaling
from .solver import ScatteringConfig
from .special import selftest

__all__ = ["main"]


def _parse_angle(text) -> float:
    """Radians, or degrees with a deg: prefix."""
    s = str(text).strip()
    if s.startswith("deg:"):
        return math.radians(float(s[4:]))
    return float(s)


def _parse_angle_list(text) -> tuple:
    parts = [p for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError("empty angle list")
    return tuple(_parse_angle(p) for p in parts)


def _parse_k_list(text) -> tuple:
    parts = [p for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError("empty k list")
    ks = tuple(float(p) for p in parts)
    if any(k <= 0.0 for k in ks):
        raise ValueError("k values must be positive")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k values must be strictly increasing")
    return ks


def _parse_bool(text) -> bool:
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


class UsageError(Exception):
    pass


@dataclass
class Opt:
    key: str                 # flag name without the leading --
    parse: object            # str -> value
    default: object = None
    required: bool = False
    help: str = ""
    flag: bool = False       # presence-only (store_true)


_COMMON_OUT = [
    Opt("output", str, None, False, "write results to this file (default stdout)"),
    Opt("format", str, "csv", False, "output format: csv or json"),
    Opt("config", str, None, False, "flat key=value config file; flags override"),
]

_OPTS = {
    "rate phi": [
        Opt("scaling", str, None, True, "scaling spec kind:R1:R2, e.g. poly8:3:5"),
        Opt("theta", _parse_angle, None, True,
            "scaling angle theta in radians (deg: prefix for degrees)"),
        Opt("dim", int, 2, False, "space dimension d (2 or 3)"),
        Opt("r-min", float, None, True, "first radius of the sample grid"),
        Opt("r-max", float, None, True, "last radius of the sample grid"),
        Opt("samples", int, 200, False, "number of radial samples"),
        *_COMMON_OUT,
    ],
    "rate theta0": [
        Opt("scaling", str, None, True, "scaling spec kind:R1:R2"),
        Opt("dim", int, 2, False, "space dimension d (2 or 3)"),
        Opt("rtr", float, None, True, "truncation radius R_tr"),
        Opt("lambda", float, 0.0, False,
            "stability exponent Lambda of the black-box resolvent data"),
        Opt("tol", float, 1e-6, False, "bisection tolerance for the angle"),
        *_COMMON_OUT,
    ],
    "predict": [
        Opt("scaling", str, None, True, "scaling spec kind:R1:R2"),
        Opt("theta", _parse_angle, None, True,
            "scaling angle theta in radians (deg: prefix for degrees)"),
        Opt("dim", int, 2, False, "space dimension d (2 or 3)"),
        Opt("rtr", float, None, True, "truncation radius R_tr"),
        Opt("k", float, None, True, "wavenumber k"),
        Opt("eta", float, 0.1, False, "margin eta in the exponent (2 - eta)"),
        Opt("lambda", float, 0.0, False, "stability exponent Lambda"),
        *_COMMON_OUT,
    ],
    "verify-1d": [
        Opt("scaling", str, None, True, "scaling spec kind:R1:R2"),
        Opt("theta", _parse_angle, None, True,
            "scaling angle theta in radians (deg: prefix for degrees)"),
        Opt("rtr", float, None, True, "truncation radius R_tr"),
        Opt("k-list", _parse_k_list, None, True,
            "comma-separated increasing wavenumbers k (need at least 3)"),
        Opt("no-render", _parse_bool, False, False,
            "skip the PNG plot next to the output file", flag=True),
        *_COMMON_OUT,
    ],
    "verify-scatter": [
        Opt("dim", int, 2, False, "space dimension d (2 or 3)"),
        Opt("a", float, None, True, "obstacle radius a"),
        Opt("r1", float, None, True, "inner radius R1 of the scaling region"),
        Opt("scaling", str, None, True, "scaling spec kind:R1:R2"),
        Opt("theta", _parse_angle, None, True,
            "scaling angle theta in radians (deg: prefix for degrees)"),
        Opt("rtr", float, None, True, "truncation radius R_tr"),
        Opt("k-list", _parse_k_list, None, True,
            "comma-separated increasing wavenumbers k (need at least 3)"),
        Opt("eta", float, 0.1, False, "margin eta in the exponent (2 - eta)"),
        Opt("lambda", float, 0.0, False, "stability exponent Lambda"),
        Opt("n-grid", int, 0, False, "radial grid intervals (0 = automatic)"),
        Opt("no-render", _parse_bool, False, False,
            "skip the PNG plot next to the output file", flag=True),
        *_COMMON_OUT,
    ],
    "figures": [
        Opt("scaling", str, None, True, "scaling spec kind:R1:R2"),
        Opt("thetas", _parse_angle_list, None, True,
            "comma-separated angles theta (deg: prefix allowed)"),
        Opt("r-min", float, None, True, "first radius (at most R1)"),
        Opt("r-max", float, None, True, "last radius (at least R1 + 3)"),
        Opt("samples", int, 400, False, "number of radial samples"),
        Opt("no-render", _parse_bool, False, False,
            "skip the PNG plots next to the output file", flag=True),
        *_COMMON_OUT,
    ],
    "special selftest": [*_COMMON_OUT],
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation: subcommand plus every effective value."""

    subcommand: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def header_line(self) -> str:
        parts = [f"subcommand={self.subcommand.replace(' ', '-')}"]
        for opt in _OPTS[self.subcommand]:
            if opt.key == "config":
                continue
            v = self.values.get(opt.key)
            if v is None:
                continue
            if isinstance(v, tuple):
                parts.append(f"{opt.key}={','.join(repr(x) for x in v)}")
            else:
                parts.append(f"{opt.key}={v!r}" if isinstance(v, float)
                             else f"{opt.key}={v}")
        return " ".join(parts)

    def header_dict(self) -> dict:
        out = {"subcommand": self.subcommand.replace(" ", "-")}
        for opt in _OPTS[self.subcommand]:
            if opt.key == "config":
                continue
            v = self.values.get(opt.key)
            if v is not None:
                out[opt.key] = list(v) if isinstance(v, tuple) else v
        return out


def _read_config_file(path: str) -> dict:
    entries: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(
                        f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                entries[key.strip()] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return entries


def _resolve(sub: str, ns: argparse.Namespace) -> RunConfig:
    """Merge flag values over config-file values over defaults."""
    opts = _OPTS[sub]
    known = {o.key: o for o in opts}
    from_file: dict[str, str] = {}
    cfg_path = getattr(ns, "config", None)
    if cfg_path is not None:
        raw = _read_config_file(cfg_path)
        for key, text in raw.items():
            if key not in known or key == "config":
                raise UsageError(f"unknown config key {key!r} for {sub}")
            from_file[key] = text
    values: dict = {}
    for o in opts:
        given = getattr(ns, o.key.replace("-", "_"))
        if given is not None:
            values[o.key] = given
        elif o.key in from_file:
            try:
                values[o.key] = o.parse(from_file[o.key])
            except ValueError as exc:
                raise UsageError(
                    f"bad config value for {o.key!r}: {exc}") from exc
        else:
            values[o.key] = o.default
    for o in opts:
        if o.required and values[o.key] is None:
            raise UsageError(f"missing required flag --{o.key}")
    fmt = values.get("format")
    if fmt is not None and fmt not in ("csv", "json"):
        raise UsageError(f"--format must be csv or json, got {fmt!r}")
    return RunConfig(sub, values)


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="pmlrate",
        description="Complex-scaled layer decay rates and error verification.",
        epilog="Environment: PML_THREADS caps sweep parallelism (0 = all cores).",
    )
    subs = top.add_subparsers(
        dest="cmd",
        metavar="{rate,predict,verify-1d,verify-scatter,figures}",
    )

    def attach(parser, leaf):
        for o in _OPTS[leaf]:
            name = "--" + o.key
            if o.flag:
                parser.add_argument(name, action="store_const", const=True,
                                    default=None, help=o.help)
            else:
                parser.add_argument(name, type=str, default=None,
                                    metavar=o.key.upper().replace("-", "_"),
                                    help=o.help + (" [required]" if o.required else ""))
        parser.set_defaults(leaf=leaf)

    rate = subs.add_parser("rate", help="decay-rate functional queries")
    rate_subs = rate.add_subparsers(dest="sub", metavar="{phi,theta0}")
    attach(rate_subs.add_parser("phi", help="sample the decay-rate density"),
           "rate phi")
    attach(rate_subs.add_parser("theta0", help="threshold angle"),
           "rate theta0")
    attach(subs.add_parser("predict", help="error exponent and bound"),
           "predict")
    attach(subs.add_parser("verify-1d", help="interval closed-form experiment"),
           "verify-1d")
    attach(subs.add_parser("verify-scatter", help="scattering experiment"),
           "verify-scatter")
    attach(subs.add_parser("figures", help="profile and decay-rate tables"),
           "figures")
    special = subs.add_parser("special")
    special_subs = special.add_subparsers(dest="sub", metavar="{selftest}")
    attach(special_subs.add_parser("selftest"), "special selftest")
    return top


def _typed(cfg: RunConfig) -> RunConfig:
    """Apply the per-option parsers to string flag values."""
    out = dict(cfg.values)
    for o in _OPTS[cfg.subcommand]:
        v = out.get(o.key)
        if isinstance(v, str) and o.parse is not str:
            try:
                out[o.key] = o.parse(v)
            except ValueError as exc:
                raise UsageError(f"bad value for --{o.key}: {exc}") from exc
    return RunConfig(cfg.subcommand, out)


# ---------------------------------------------------------------------------
# Output plumbing


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return repr(v)


def _jval(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _emit(cfg: RunConfig, columns, rows, trailer_lines=(), extra_json=None):
    """Write a delimited table with the resolved-config header."""
    if cfg["format"] == "csv":
        lines = [f"# {cfg.header_line()}"]
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_cell(v) for v in row))
        lines.extend(f"# {t}" for t in trailer_lines)
        text = "\n".join(lines) + "\n"
    else:
        doc = {"config": cfg.header_dict(),
               "rows": [{c: _jval(v) for c, v in zip(columns, row)}
                        for row in rows]}
        if extra_json:
            doc.update(extra_json)
        text = json.dumps(doc, indent=2) + "\n"
    out = cfg.get("output")
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _fit_doc(fit) -> dict:
    return {k: _jval(v) for k, v in dataclasses.asdict(fit).items()}


def _png_path(output: str) -> str:
    stem = output.rsplit(".", 1)[0] if "." in output.rsplit("/", 1)[-1] else output
    return stem + ".png"


def _render_sweep(cfg: RunConfig, ks, measured, bounds, ylabel) -> None:
    if cfg.get("no-render") or cfg.get("output") is None:
        return
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(ks, measured, "o-", label="measured")
    ax.semilogy(ks, bounds, "s--", label="predicted bound")
    ax.set_xlabel("k")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(_png_path(cfg["output"]), dpi=130)
    plt.close(fig)


def _render_figures(cfg: RunConfig, tab) -> None:
    if cfg.get("no-render") or cfg.get("output") is None:
        return
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    r = tab.column("r")
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    ax0.plot(r, tab.column("f"), label="f")
    ax0.plot(r, tab.column("f_prime"), label="f'")
    for name in tab.columns:
        if name.startswith("phi_over_tan"):
            ax0.plot(r, tab.column(name), label=name)
    ax0.set_xlabel("r")
    ax0.grid(alpha=0.3)
    ax0.legend(fontsize=7)
    for name in tab.columns:
        if name.startswith("int_phi_over_tan"):
            ax1.plot(r, tab.column(name), label=name)
    ax1.set_xlabel("r")
    ax1.grid(alpha=0.3)
    ax1.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(_png_path(cfg["output"]), dpi=130)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Subcommand handlers


def _profile(cfg: RunConfig) -> PmlProfile:
    return PmlProfile(parse_scaling(cfg["scaling"]), cfg["theta"])


def _cmd_rate_phi(cfg: RunConfig) -> int:
    prof = _profile(cfg)
    d = cfg["dim"]
    if d not in (2, 3):
        raise UsageError(f"--dim must be 2 or 3, got {d}")
    lo, hi, n = cfg["r-min"], cfg["r-max"], cfg["samples"]
    if not (0.0 <= lo < hi) or n < 2:
        raise UsageError("need 0 <= r-min < r-max and samples >= 2")
    tan = prof.tan_theta
    rows = []
    for r in np.linspace(lo, hi, n):
        p = phi(prof, d, float(r))
        rows.append((float(r), p, p / tan, t_min(prof, float(r)),
                     int(bool(phi_condition_holds(prof, float(r))))))
    _emit(cfg, ("r", "phi", "phi_over_tan_theta", "t_min", "condition_holds"),
          rows)
    return 0


def _cmd_rate_theta0(cfg: RunConfig) -> int:
    d = cfg["dim"]
    if d not in (2, 3):
        raise UsageError(f"--dim must be 2 or 3, got {d}")
    sc = parse_scaling(cfg["scaling"])
    th = theta0(cfg["lambda"], sc, d, cfg["rtr"], tol=cfg["tol"])
    note = " (saturated)" if th.saturated else ""
    rows = [(float(th), math.degrees(float(th)), note.strip() or "ok")]
    _emit(cfg, ("theta0_rad", "theta0_deg", "status"), rows)
    return 0


def _cmd_predict(cfg: RunConfig) -> int:
    prof = _profile(cfg)
    d = cfg["dim"]
    if d not in (2, 3):
        raise UsageError(f"--dim must be 2 or 3, got {d}")
    pred = predicted_exponent(cfg["k"], prof, d, cfg["rtr"],
                              Lambda=cfg["lambda"], eta=cfg["eta"])
    if cfg.get("output") is None and cfg["format"] == "csv":
        # bare terminal use: just the headline numbers
        sys.stdout.write(f"# {cfg.header_line()}\n")
        sys.stdout.write(f"exponent = {pred.exponent!r}\n")
        sys.stdout.write(f"bound = {pred.bound!r}\n")
        if pred.no_decay:
            sys.stdout.write("no_decay: the exponent is not positive\n")
        return 0
    rows = [(pred.k, pred.integral_phi, pred.exponent, pred.bound,
             "no_decay" if pred.no_decay else "ok")]
    _emit(cfg, ("k", "integral_phi", "exponent", "bound", "status"), rows)
    return 0


def _cmd_verify_1d(cfg: RunConfig) -> int:
    prof = _profile(cfg)
    ks = cfg["k-list"]
    if len(ks) < 3:
        raise UsageError("--k-list needs at least 3 values for a fit verdict")
    spec = SweepSpec(Sweep1D(prof, ks[0], cfg["rtr"]), "k", ks)
    trailer = []
    code = 0
    try:
        rows = run_sweep(spec)
    except SweepAborted as exc:
        rows = exc.completed
        trailer.append(f"aborted at k={exc.value}: {exc.__cause__}")
        code = 1
    table = [(r.value, r.report.abs_H1, r.report.predicted_bound,
              r.report.ratio) for r in rows]
    fit = fit_decay_rate(rows, spec)
    trailer.append(
        f"verdict: {fit.verdict} slope={fit.slope!r} "
        f"predicted={fit.predicted_slope!r}")
    extra = {"fit": _fit_doc(fit)}
    if code:
        extra["aborted"] = trailer[0]
    _emit(cfg, ("k", "err_sup", "closed_form_pred", "ratio"), table,
          trailer, extra)
    _render_sweep(cfg, [t[0] for t in table], [t[1] for t in table],
                  [t[2] for t in table], "sup error")
    if fit.verdict != "pass":
        code = 1
    return code


def _cmd_verify_scatter(cfg: RunConfig) -> int:
    d = cfg["dim"]
    if d not in (2, 3):
        raise UsageError(f"--dim must be 2 or 3, got {d}")
    prof = _profile(cfg)
    ks = cfg["k-list"]
    if len(ks) < 3:
        raise UsageError("--k-list needs at least 3 values for a fit verdict")
    try:
        base = ScatteringConfig(
            d=d, k=ks[0], obstacle_radius=cfg["a"], profile=prof,
            R1=cfg["r1"], R_tr=cfg["rtr"], n_grid=cfg["n-grid"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    spec = SweepSpec(base, "k", ks, eta=cfg["eta"], Lambda=cfg["lambda"])
    trailer = []
    code = 0
    try:
        rows = run_sweep(spec)
    except SweepAborted as exc:
        rows = exc.completed
        trailer.append(f"aborted at k={exc.value}: {exc.__cause__}")
        code = 1
    table = []
    for r in rows:
        per_k = replace(base, k=r.value)
        table.append((r.value, r.report.rel_L2, r.report.rel_H1,
                      r.report.predicted_bound, r.report.ratio,
                      per_k.resolved_n_modes(), per_k.resolved_n_grid()))
    fit = fit_decay_rate(rows, spec)
    trailer.append(
        f"verdict: {fit.verdict} slope={fit.slope!r} "
        f"predicted={fit.predicted_slope!r}")
    extra = {"fit": _fit_doc(fit)}
    if code:
        extra["aborted"] = trailer[0]
    _emit(cfg, ("k", "rel_L2", "rel_H1", "predicted_bound", "ratio",
                "n_modes", "n_grid"), table, trailer, extra)
    _render_sweep(cfg, [t[0] for t in table], [t[2] for t in table],
                  [t[3] for t in table], "relative H1 error")
    if fit.verdict != "pass":
        code = 1
    return code


def _cmd_figures(cfg: RunConfig) -> int:
    sc = parse_scaling(cfg["scaling"])
    tab = reproduce_figure_phi(sc, cfg["thetas"],
                               (cfg["r-min"], cfg["r-max"]), cfg["samples"])
    rows = [tuple(float(v) for v in row) for row in tab.data]
    _emit(cfg, tab.columns, rows)
    _render_figures(cfg, tab)
    return 0


def _cmd_special_selftest(cfg: RunConfig) -> int:
    rows = selftest()
    table = [(name, res, tol, "ok" if ok else "FAIL")
             for name, res, tol, ok in rows]
    _emit(cfg, ("identity", "residual", "tolerance", "status"), table)
    return 0 if all(ok for _, _, _, ok in rows) else 1


_HANDLERS = {
    "rate phi": _cmd_rate_phi,
    "rate theta0": _cmd_rate_theta0,
    "predict": _cmd_predict,
    "verify-1d": _cmd_verify_1d,
    "verify-scatter": _cmd_verify_scatter,
    "figures": _cmd_figures,
    "special selftest": _cmd_special_selftest,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    leaf = getattr(ns, "leaf", None)
    if leaf is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = _typed(_resolve(leaf, ns))
        return _HANDLERS[leaf](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # solver/quadrature failures: real run, bad end
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
