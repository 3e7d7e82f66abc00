"""Experiment configuration files (YAML).

Example::

    horizon: 6
    tree: {mode: full}                 # or {mode: augmented, statistic: time_value}
    measure:
      points: [[-2, "1/4"], [0, "1/2"], [2, "1/4"]]
    payoff: {kind: neg_tau_sq}
    mode: exact                        # or floating
    tolerances: {lp: 1.0e-9, eps: 1.0e-7, eps_sg: 1.0e-9}
    commands: [solve, verify]
    output: out/root
    seed: 0

Measures may also come from a file (``measure: {file: law.tsv}``) holding
``point weight`` lines. Payoff kinds: ``running_max``, ``neg_tau``,
``neg_tau_sq``, ``tau_sq``, ``zero``, ``constant`` (``value``), ``terminal``
(``strike`` for ``|x - K|``, or ``values`` with optional ``default``),
``time_value`` (``values`` keyed ``"t,x"``, optional ``default``) and
``custom`` (``table`` keyed by node strings such as ``"^+-"``, or
``"^+-+@2"`` for a full path stopped at index 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from ._numeric import to_fraction
from .errors import ConfigurationError
from .primal import EXACT_NODE_CAP
from .walkspace import DEFAULT_FULL_CAP, PathPrefix, PayoffSpec, Statistic, TargetMeasure, TreeMode

COMMANDS = ("solve", "verify", "enumerate")


@dataclass
class ExperimentConfig:
    horizon: int
    measure: TargetMeasure
    payoff: PayoffSpec
    tree_mode: TreeMode = TreeMode.FULL
    statistic: Statistic | None = None
    exact: bool = True
    lp_tol: float = 1e-9
    eps: float | None = None
    eps_sg: float | None = None
    commands: tuple[str, ...] = ("solve",)
    output: Path = Path("out")
    seed: int | None = None
    source: Path | None = None
    payoff_text: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def contact_eps(self):
        return (0 if self.exact else 1e-7) if self.eps is None else self.eps

    @property
    def sg_eps(self):
        return (0 if self.exact else 1e-9) if self.eps_sg is None else self.eps_sg

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        cfg = replace(self, **kw)
        _validate(cfg, {})
        return cfg


class _Located:
    """Line lookup for keys of a parsed YAML mapping."""

    def __init__(self, text: str):
        try:
            self.node = yaml.compose(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            raise ConfigurationError(f"malformed YAML: {e}", line=None if mark is None else mark.line + 1) from None

    def line(self, *path) -> int | None:
        node = self.node
        for key in path:
            if node is None or not isinstance(node, yaml.MappingNode):
                return None
            nxt = None
            for k, v in node.value:
                if k.value == str(key):
                    nxt = (k, v)
                    break
            if nxt is None:
                return node.start_mark.line + 1
            node = nxt[1]
            last_key = nxt[0]
        return (last_key if path else node).start_mark.line + 1


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigurationError(f"cannot read config: {e}") from None
    return parse_config(text, base=path.parent, source=path)


def parse_config(text: str, base: Path | None = None, source: Path | None = None) -> ExperimentConfig:
    loc = _Located(text)
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a mapping", line=1)
    base = Path(".") if base is None else base

    def err(msg, *path):
        return ConfigurationError(msg, field=".".join(str(p) for p in path), line=loc.line(*path))

    known = {"horizon", "tree", "measure", "payoff", "mode", "tolerances", "commands", "output", "seed"}
    for k in data:
        if k not in known:
            raise err(f"unknown field '{k}'", k)
    if "horizon" not in data:
        raise ConfigurationError("missing field 'horizon'", field="horizon", line=1)
    N = data["horizon"]
    if not isinstance(N, int) or isinstance(N, bool) or N < 1:
        raise err("horizon must be an integer >= 1", "horizon")

    tree = data.get("tree") or {}
    if not isinstance(tree, dict):
        raise err("tree must be a mapping", "tree")
    try:
        mode = TreeMode(str(tree.get("mode", "full")).lower())
    except ValueError:
        raise err(f"unknown tree mode {tree.get('mode')!r}", "tree", "mode") from None
    stat = None
    if mode is TreeMode.AUGMENTED:
        try:
            stat = Statistic(str(tree.get("statistic", "time_value")).lower())
        except ValueError:
            raise err(f"unknown statistic {tree.get('statistic')!r}", "tree", "statistic") from None

    if "measure" not in data:
        raise ConfigurationError("missing field 'measure'", field="measure", line=1)
    measure = _parse_measure(data["measure"], base, err)

    if "payoff" not in data:
        raise ConfigurationError("missing field 'payoff'", field="payoff", line=1)
    payoff, ptext = _parse_payoff(data["payoff"], err)

    m = str(data.get("mode", "exact")).lower()
    if m not in ("exact", "floating"):
        raise err(f"mode must be 'exact' or 'floating', got {m!r}", "mode")
    tol = data.get("tolerances") or {}
    if not isinstance(tol, dict):
        raise err("tolerances must be a mapping", "tolerances")
    for k in tol:
        if k not in ("lp", "eps", "eps_sg"):
            raise err(f"unknown tolerance '{k}'", "tolerances", k)

    def num(key):
        if key not in tol:
            return None
        try:
            return float(tol[key])
        except (TypeError, ValueError):
            raise err(f"tolerance {key} must be a number", "tolerances", key) from None

    cmds = data.get("commands", ["solve"])
    if isinstance(cmds, str):
        cmds = [cmds]
    for c in cmds:
        if c not in COMMANDS:
            raise err(f"unknown command {c!r}", "commands")
    seed = data.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise err("seed must be an integer", "seed")
    out = Path(data.get("output", "out"))
    if not out.is_absolute():
        out = base / out
    cfg = ExperimentConfig(
        horizon=N,
        measure=measure,
        payoff=payoff,
        tree_mode=mode,
        statistic=stat,
        exact=(m == "exact"),
        lp_tol=num("lp") if "lp" in tol else 1e-9,
        eps=num("eps"),
        eps_sg=num("eps_sg"),
        commands=tuple(cmds),
        output=out,
        seed=seed,
        source=source,
        payoff_text=ptext,
    )
    _validate(cfg, {"err": err})
    return cfg


def _validate(cfg: ExperimentConfig, ctx: dict):
    err = ctx.get("err") or (lambda msg, *p: ConfigurationError(msg, field=".".join(p) or None))
    if not cfg.exact:
        for name, val in (("lp", cfg.lp_tol), ("eps", cfg.eps), ("eps_sg", cfg.eps_sg)):
            if val is not None and not val > 0:
                raise err(f"tolerance {name} must be > 0 in floating mode", "tolerances", name)
    if cfg.tree_mode is TreeMode.FULL:
        if cfg.horizon > DEFAULT_FULL_CAP:
            raise err(f"FULL trees are capped at horizon {DEFAULT_FULL_CAP}", "horizon")
        if cfg.exact and (1 << (cfg.horizon + 1)) - 1 > EXACT_NODE_CAP:
            raise err(f"exact mode on a FULL tree is capped at {EXACT_NODE_CAP} nodes (horizon 9)", "horizon")
    elif not cfg.payoff.expressible_on_statistic(cfg.statistic):
        raise err(f"payoff {cfg.payoff.label} is not a function of the {cfg.statistic.value} statistic", "payoff")


def _parse_measure(spec, base: Path, err) -> TargetMeasure:
    if isinstance(spec, dict) and "file" in spec:
        p = Path(spec["file"])
        p = p if p.is_absolute() else base / p
        try:
            lines = p.read_text().splitlines()
        except OSError as e:
            raise err(f"cannot read measure file: {e}", "measure", "file") from None
        pairs = []
        for ln in lines:
            ln = ln.split("#", 1)[0].strip()
            if ln:
                parts = ln.split()
                if len(parts) != 2:
                    raise err(f"measure file line {ln!r} is not 'point weight'", "measure", "file")
                pairs.append((parts[0], parts[1]))
    elif isinstance(spec, dict) and "points" in spec:
        pairs = spec["points"]
    else:
        raise err("measure needs 'points' or 'file'", "measure")
    try:
        out = []
        for item in pairs:
            x, w = item
            if float(x) != int(float(x)):
                raise ValueError(f"support point {x} is not an integer")
            out.append((int(float(x)), to_fraction(str(w))))
        return TargetMeasure.from_pairs(out)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise err(f"bad measure: {e}", "measure") from None


def _parse_payoff(spec, err) -> tuple[PayoffSpec, str]:
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise err("payoff needs a 'kind'", "payoff")
    kind = str(spec["kind"]).lower()
    offset = spec.get("offset", 0)
    try:
        if kind == "running_max":
            p = PayoffSpec.running_max()
        elif kind == "neg_tau":
            p = PayoffSpec.neg_tau()
        elif kind == "neg_tau_sq":
            p = PayoffSpec.neg_tau_sq()
        elif kind == "tau_sq":
            p = PayoffSpec.tau_sq()
        elif kind == "zero":
            p = PayoffSpec.constant(0)
        elif kind == "constant":
            p = PayoffSpec.constant(to_fraction(str(spec.get("value", 0))))
        elif kind == "terminal":
            if "strike" in spec:
                p = PayoffSpec.terminal_abs(to_fraction(str(spec["strike"])))
            elif "values" in spec:
                tbl = {int(k): to_fraction(str(v)) for k, v in spec["values"].items()}
                p = PayoffSpec.terminal(tbl, to_fraction(str(spec.get("default", 0))))
            else:
                raise err("terminal payoff needs 'strike' or 'values'", "payoff")
        elif kind == "time_value":
            tbl = {}
            for k, v in (spec.get("values") or {}).items():
                t, x = (int(a) for a in str(k).split(","))
                tbl[(t, x)] = to_fraction(str(v))
            default = to_fraction(str(spec.get("default", 0)))
            p = PayoffSpec.time_value(lambda t, x: tbl.get((t, x), default))
        elif kind == "custom":
            table = {}
            for k, v in (spec.get("table") or {}).items():
                key = str(k)
                if "@" in key:
                    steps, theta = key.split("@")
                    pre = PathPrefix.from_string(steps, int(theta))
                else:
                    pre = PathPrefix.from_string(key)
                table[(pre.steps, pre.theta)] = to_fraction(str(v))
            p = PayoffSpec.custom(table)
        else:
            raise err(f"unknown payoff kind {kind!r}", "payoff", "kind")
    except ConfigurationError:
        raise
    except (TypeError, ValueError, ZeroDivisionError, AttributeError) as e:
        raise err(f"bad payoff parameters: {e}", "payoff") from None
    if offset:
        p = p.shifted(to_fraction(str(offset)))
    return p, yaml.safe_dump(spec, sort_keys=True).strip()
