"""Command-line front end.

    jmfbm price {vanilla,compound,extendible,nextendible} [options]
    jmfbm table   --t1-list 1,0.5 --k1-list 10,11,12 [options]
    jmfbm figure  --t1-list ... --k1-list ... [options]
    jmfbm mc-check {vanilla,compound,extendible,nextendible} [options]

Options may also come from ``--config FILE`` (``key = value`` lines, ``#``
comments); flags override the file.  Output is CSV on stdout.

Exit codes: 0 ok, 1 error, 2 series truncation flagged, 3 MC disagreement.
"""

from __future__ import annotations

import argparse
import csv
import sys
from typing import Dict, List, Optional, Sequence

from .compound import CompoundCallSpec, compound_call_price
from .errors import PricingError
from .extendible import (
    ExtendibleCallSpec,
    ExtensionStage,
    NExtendibleSpec,
    critical_value_residuals,
    extendible_call_price,
    n_extendible_price,
    richardson_extrapolate,
)
from .model import ModelParams, SeriesControl, TimeWindow
from .montecarlo import (
    McConfig,
    mc_compound_price,
    mc_extendible_price,
    mc_n_extendible_price,
    mc_vanilla_price,
)
from .vanilla import VanillaCallSpec, call_price

EXIT_OK, EXIT_ERROR, EXIT_FLAGGED, EXIT_MC_MISMATCH = 0, 1, 2, 3

KINDS = ("vanilla", "compound", "extendible", "nextendible")

# key -> (type, default); None default means "required when used"
KEYS: Dict[str, tuple] = {
    "r": (float, None), "q": (float, 0.0), "sigma": (float, None), "hurst": (float, None),
    "lambda": (float, 0.0), "k": (float, 0.0), "sigma_j": (float, 0.0),
    "s0": (float, None), "k1": (float, None), "t1": (float, None),
    "k2": (float, None), "t2": (float, None), "premium": (float, 0.0),
    "l": (float, None), "m": (float, None), "t0": (float, 0.0),
    "k3": (float, None), "t3": (float, None), "premium3": (float, 0.0),
    "k4": (float, None), "t4": (float, None), "premium4": (float, 0.0),
    "paths": (int, 400_000), "seed": (int, 20240611), "tail_tol": (float, 1e-12),
}
# the table/figure grids never fall back to defaults for these
COMPLETION_KEYS = ("lambda", "t2", "k2", "t0")


class ConfigError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def read_config_file(path: str) -> Dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


class RunConfig:
    """Merged settings: flag > config file > built-in default."""

    def __init__(self, flags: Dict[str, object], file_values: Dict[str, str]):
        self._explicit: Dict[str, object] = {}
        for key, raw in file_values.items():
            self._explicit[key] = self._convert(key, raw)
        for key, value in flags.items():
            if value is not None:
                self._explicit[key] = self._convert(key, value)

    @staticmethod
    def _convert(key, raw):
        typ = KEYS[key][0]
        try:
            return typ(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {key}: {raw!r}") from None

    def has(self, key: str) -> bool:
        return key in self._explicit

    def get(self, key: str):
        if key in self._explicit:
            return self._explicit[key]
        default = KEYS[key][1]
        if default is None:
            raise ConfigError(f"missing required setting: {key}")
        return default

    def optional(self, key: str):
        return self._explicit.get(key, KEYS[key][1])

    def require_explicit(self, keys: Sequence[str]):
        missing = [k for k in keys if k not in self._explicit]
        if missing:
            raise ConfigError(
                "missing completion parameters (not stated by the reference table): "
                + ", ".join(missing)
            )

    def params(self, **overrides) -> ModelParams:
        fields = dict(
            r=self.get("r"), q=self.get("q"), sigma=self.get("sigma"),
            hurst=self.get("hurst"), lam=self.get("lambda"), k=self.get("k"),
            sigma_j=self.get("sigma_j"),
        )
        fields.update(overrides)
        return ModelParams(**fields)

    def control(self) -> SeriesControl:
        return SeriesControl(tail_tolerance=self.get("tail_tol"))

    def mc(self) -> McConfig:
        return McConfig(paths=self.get("paths"), seed=self.get("seed"))

    def levels(self):
        if self.has("l") != self.has("m"):
            raise ConfigError("give both l and m or neither")
        return (self.get("l"), self.get("m")) if self.has("l") else None

    def vanilla_spec(self):
        return VanillaCallSpec(self.get("k1"), TimeWindow(self.get("t0"), self.get("t1")))

    def compound_spec(self):
        return CompoundCallSpec(self.get("k1"), self.get("t1"), self.get("k2"),
                                self.get("t2"), self.get("t0"))

    def extendible_spec(self, **overrides):
        keys = dict(strike1="k1", expiry1="t1", strike2="k2", expiry2="t2",
                    premium="premium", valuation_time="t0")
        fields = {f: self.get(k) for f, k in keys.items() if f not in overrides}
        fields["critical_values"] = self.levels()
        fields.update(overrides)
        return ExtendibleCallSpec(**fields)

    def n_extendible_spec(self):
        stages = [ExtensionStage(self.get("t1"), self.get("k1")),
                  ExtensionStage(self.get("t2"), self.get("k2"), self.get("premium"))]
        for i in (3, 4):
            if self.has(f"t{i}"):
                stages.append(ExtensionStage(self.get(f"t{i}"), self.get(f"k{i}"),
                                             self.get(f"premium{i}")))
        return NExtendibleSpec(tuple(stages), self.get("t0"))


def _floats(text: str) -> List[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad number list: {text!r}") from None
    if not values:
        raise ConfigError("grid lists must be non-empty")
    return values


def _writer(out):
    return csv.writer(out, lineterminator="\n")


MODEL_COLUMNS = ("s0", "r", "q", "sigma", "hurst", "lambda", "k", "sigma_j", "t0")


def _price(kind: str, cfg: RunConfig):
    """Return (row dict, flagged) for one contract."""
    params, control, s0 = cfg.params(), cfg.control(), cfg.get("s0")
    row = {key: cfg.get(key) for key in MODEL_COLUMNS}
    if kind == "vanilla":
        spec = cfg.vanilla_spec()
        res = call_price(params, s0, spec, control)
        row.update(k1=spec.strike, t1=spec.valuation_window.t_end)
    elif kind == "compound":
        spec = cfg.compound_spec()
        res = compound_call_price(params, s0, spec, control)
        row.update(k1=spec.outer_strike, t1=spec.outer_expiry,
                   k2=spec.inner_strike, t2=spec.inner_expiry,
                   critical_price=res.details["critical_price"],
                   critical_residual=res.details["critical_residual"])
    elif kind == "extendible":
        spec = cfg.extendible_spec()
        res = extendible_call_price(params, s0, spec, control)
        levels = (res.details["L"], res.details["M"])
        res_l, res_m = critical_value_residuals(params, spec, levels, control)
        row.update(k1=spec.strike1, t1=spec.expiry1, k2=spec.strike2, t2=spec.expiry2,
                   premium=spec.premium, L=levels[0], M=levels[1],
                   residual_L=res_l, residual_M=res_m,
                   levels_source="given" if spec.critical_values else "solved")
    elif kind == "nextendible":
        spec = cfg.n_extendible_spec()
        res = n_extendible_price(params, s0, spec, control)
        for j, st in enumerate(spec.stages, 1):
            row.update({f"t{j}": st.expiry, f"k{j}": st.strike})
            if j > 1:
                row[f"premium{j}"] = st.premium
        for j, (lo, hi) in enumerate(res.details["critical_values"], 1):
            row.update({f"L{j}": lo, f"M{j}": hi})
    else:
        raise ConfigError(f"unknown kind {kind!r}")
    row.update(price=res.value, terms_used="x".join(map(str, res.terms_used)),
               tail_shortfall=res.tail_shortfall)
    return row, res.flagged


def cmd_price(kind: str, cfg: RunConfig, out) -> int:
    row, flagged = _price(kind, cfg)
    w = _writer(out)
    w.writerow(["kind", *row.keys()])
    w.writerow([kind, *(fmt(v) for v in row.values())])
    return EXIT_FLAGGED if flagged else EXIT_OK


def _grid_prices(cfg: RunConfig, t1: float, k1: float):
    """Prices under the full model and its two reductions for one grid cell."""
    control, s0 = cfg.control(), cfg.get("s0")
    spec = cfg.extendible_spec(strike1=k1, expiry1=t1)
    full = cfg.params()
    merton = cfg.params(hurst=0.5)
    mfbm = cfg.params(lam=0.0)
    out = {}
    flagged = False
    for name, params in (("merton", merton), ("mfbm", mfbm), ("jmfbm", full)):
        res = extendible_call_price(params, s0, spec, control)
        out[name] = res.value
        flagged |= res.flagged
    return out, flagged


def cmd_table(t1_list, k1_list, cfg: RunConfig, out) -> int:
    cfg.require_explicit(COMPLETION_KEYS)
    w = _writer(out)
    # richardson = 2 * jmfbm - merton: EC0 is the H = 1/2 price, EC1 the full-model price
    w.writerow(["t1", "k1", "price_merton", "price_mfbm", "price_jmfbm", "price_richardson"])
    flagged = False
    for t1 in t1_list:
        for k1 in k1_list:
            p, f = _grid_prices(cfg, t1, k1)
            flagged |= f
            rich = richardson_extrapolate(p["merton"], p["jmfbm"])
            w.writerow([fmt(t1), fmt(k1), fmt(p["merton"]), fmt(p["mfbm"]),
                        fmt(p["jmfbm"]), fmt(rich)])
    return EXIT_FLAGGED if flagged else EXIT_OK


def cmd_figure(t1_list, k1_list, cfg: RunConfig, out) -> int:
    cfg.require_explicit(COMPLETION_KEYS)
    w = _writer(out)
    w.writerow(["t1", "k1", "jmfbm_minus_merton", "jmfbm_minus_mfbm"])
    flagged = False
    for t1 in t1_list:
        for k1 in k1_list:
            p, f = _grid_prices(cfg, t1, k1)
            flagged |= f
            w.writerow([fmt(t1), fmt(k1), fmt(p["jmfbm"] - p["merton"]),
                        fmt(p["jmfbm"] - p["mfbm"])])
    return EXIT_FLAGGED if flagged else EXIT_OK


def cmd_mc_check(kind: str, cfg: RunConfig, out, inner: Optional[str] = None,
                 corrupt: float = 0.0) -> int:
    mc_cfg = cfg.mc()
    if mc_cfg.paths < 10_000:
        raise ConfigError("mc-check needs paths >= 10000")
    row, _ = _price(kind, cfg)
    analytic = row["price"] + corrupt
    params, s0, control = cfg.params(), cfg.get("s0"), cfg.control()
    inner_kw = {"inner": inner} if inner else {}
    if kind == "vanilla":
        est = mc_vanilla_price(params, s0, cfg.vanilla_spec(), mc_cfg)
    elif kind == "compound":
        est = mc_compound_price(params, s0, cfg.compound_spec(), mc_cfg,
                                control=control, **inner_kw)
    elif kind == "extendible":
        spec = cfg.extendible_spec(critical_values=(row["L"], row["M"]))
        est = mc_extendible_price(params, s0, spec, mc_cfg, control=control, **inner_kw)
    else:
        spec = cfg.n_extendible_spec()
        levels = tuple((row[f"L{j}"], row[f"M{j}"]) for j in range(1, spec.extensions + 1))
        spec = NExtendibleSpec(spec.stages, spec.valuation_time, levels)
        est = mc_n_extendible_price(params, s0, spec, mc_cfg, control)
    z = est.z_score(analytic)
    w = _writer(out)
    w.writerow(["kind", "analytic", "mc_mean", "mc_std_error", "paths", "z"])
    w.writerow([kind, fmt(analytic), fmt(est.mean), fmt(est.std_error), est.paths, fmt(z)])
    return EXIT_OK if abs(z) <= 3.0 else EXIT_MC_MISMATCH


OPTIONAL_HELP = {
    "l": "lower critical value; solved when l and m are omitted",
    "m": "upper critical value; solved when l and m are omitted",
}


def _key_help(key, default):
    if key in OPTIONAL_HELP:
        return OPTIONAL_HELP[key]
    if key[-1] in "34":
        return f"stage {key[-1]} of the nextendible schedule"
    return f"default: {default}" if default is not None else "required where the contract uses it"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value settings file")
    for key, (typ, default) in KEYS.items():
        flag = "--" + key.replace("_", "-")
        aliases = [flag]
        if "_" in key:
            aliases.append("--" + key)
        common.add_argument(*aliases, dest=key, type=typ, default=None, help=_key_help(key, default))

    parser = argparse.ArgumentParser(
        prog="jmfbm",
        description="Vanilla, compound and extendible calls under jump mixed fractional Brownian motion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("price", parents=[common], help="price one contract")
    p.add_argument("kind", choices=KINDS)
    for name in ("table", "figure"):
        g = sub.add_parser(name, parents=[common],
                           help="extendible prices over a T1 x K1 grid"
                           if name == "table" else "model differences over a T1 x K1 grid")
        g.add_argument("--t1-list", required=True)
        g.add_argument("--k1-list", required=True)
    m = sub.add_parser("mc-check", parents=[common], help="analytic vs Monte Carlo")
    m.add_argument("kind", choices=KINDS)
    m.add_argument("--inner", choices=("analytic", "simulated"),
                   help="continuation valuation for compound/extendible")
    m.add_argument("--corrupt-analytic", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = RunConfig({k: getattr(args, k) for k in KEYS}, file_values)
        if args.command == "price":
            return cmd_price(args.kind, cfg, out)
        if args.command == "table":
            return cmd_table(_floats(args.t1_list), _floats(args.k1_list), cfg, out)
        if args.command == "figure":
            return cmd_figure(_floats(args.t1_list), _floats(args.k1_list), cfg, out)
        return cmd_mc_check(args.kind, cfg, out, args.inner, args.corrupt_analytic)
    except (ConfigError, PricingError, ValueError, OSError) as exc:
        print(f"jmfbm: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
