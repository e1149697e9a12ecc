"""File formats, experiment configuration, CSV reports and the ``dptree`` CLI.

File formats (UTF-8, tab separated, ``#`` starts a comment line):

* tree:        ``node_id<TAB>parent_id``, parent ``-`` for the root
* counts:      ``leaf_id<TAB>count``; absent leaves count 0
* thresholds:  ``node_id<TAB>tau``; absent nodes use ``--tau``
* raw values:  ``node_id<TAB>value`` (input to ``clamp``)

Every CSV row carries ``node_id,metric,value,stderr,trials,eps,delta,alpha,eta,seed,d``.
Exit codes: 0 success, 2 input error, 3 precondition refusal, 4 resource cap.
"""

import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import List, Optional

import click
import numpy as np

from . import baselines, bounds_lab, hierarchy, metrics
from .errors import (
    DuplicateIdError,
    InputError,
    MalformedLineError,
    NoRootError,
    PreconditionError,
    TreeAggError,
)
from .noise import make_rng
from .privacy import BudgetLedger, PrivacyBudget
from .tree_core import LeafCounts, TreeShape, aggregate_exact, complete_binary

COLUMNS = ["node_id", "metric", "value", "stderr", "trials", "eps", "delta", "alpha", "eta", "seed", "d"]
MECHANISMS = ("exact", "laplace", "gaussian", "estimate", "estimate+clamp")


# ---------------------------------------------------------------- file formats


def _read_pairs(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise MalformedLineError(f"{path}:{lineno}: expected two tab-separated fields")
            yield lineno, parts[0], parts[1]


def load_tree(path) -> TreeShape:
    parents = {}
    for lineno, node, parent in _read_pairs(path):
        if node in parents:
            raise DuplicateIdError(f"{path}:{lineno}: duplicate node id {node!r}")
        parents[node] = None if parent == "-" else parent
    if not parents:
        raise NoRootError(f"{path}: no nodes")
    return TreeShape(parents)


def _parse_int(text, where):
    try:
        v = int(text)
    except ValueError:
        raise InputError(f"{where}: not an integer: {text!r}") from None
    if v < 0:
        raise InputError(f"{where}: negative count {v}")
    return v


def load_counts(path, tree: TreeShape) -> LeafCounts:
    values = {}
    for lineno, leaf, text in _read_pairs(path):
        if leaf in values:
            raise DuplicateIdError(f"{path}:{lineno}: duplicate leaf {leaf!r}")
        values[leaf] = _parse_int(text, f"{path}:{lineno}")
    return LeafCounts(tree, values)


def _parse_float(text, where):
    try:
        v = float(text)
    except ValueError:
        raise InputError(f"{where}: not a number: {text!r}") from None
    if not math.isfinite(v):
        raise InputError(f"{where}: value must be finite")
    return v


def load_values(path, tree: TreeShape) -> dict:
    out = {}
    for lineno, node, text in _read_pairs(path):
        tree.node_index(node)
        if node in out:
            raise DuplicateIdError(f"{path}:{lineno}: duplicate node {node!r}")
        out[node] = _parse_float(text, f"{path}:{lineno}")
    return out


def load_thresholds(path, tree: TreeShape) -> dict:
    taus = load_values(path, tree)
    neg = [u for u, t in taus.items() if t < 0]
    if neg:
        raise InputError(f"negative threshold for {neg[0]!r}")
    return taus


# ---------------------------------------------------------------- reports


def _fmt(x):
    if x is None or x == "":
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


class Report:
    """Rows sharing the run parameters."""

    def __init__(self, *, eps=None, delta=None, alpha=None, eta=None, seed=None, d=None, trials=1):
        self.ctx = dict(eps=eps, delta=delta, alpha=alpha, eta=eta, seed=seed, d=d, trials=trials)
        self.rows = []

    def add(self, node_id, metric, value, stderr=None, **over):
        ctx = {**self.ctx, **over}
        self.rows.append([node_id, metric, value, stderr, ctx["trials"], ctx["eps"], ctx["delta"],
                          ctx["alpha"], ctx["eta"], ctx["seed"], ctx["d"]])

    def add_budget(self, budget: PrivacyBudget, **over):
        self.add("*", "budget:eps", budget.eps, **over)
        self.add("*", "budget:delta", budget.delta, **over)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(x) for x in r])
        return buf.getvalue()


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file; nothing is left on failure."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".dptree-", suffix=".tmp", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- mechanisms


def make_mechanism(name, eps, delta=None, *, spec=None, force=False):
    """Callable ``(tree, counts, rng) -> NodeValues`` for a named mechanism.

    The pipeline mechanisms need ``spec``, an accuracy spec for the tree they
    will be run on.  ``estimate+clamp`` runs the estimate at half the budget.
    """
    if name not in MECHANISMS:
        raise InputError(f"unknown mechanism {name!r}; choose from {', '.join(MECHANISMS)}")
    if name == "exact":
        return baselines.exact_tree
    if name == "laplace":
        baselines.laplace_scale(1, eps)
        return lambda tree, counts, rng: baselines.laplace_tree(tree, counts, eps, rng)
    if name == "gaussian":
        baselines.gaussian_sigma(1, eps, delta)
        return lambda tree, counts, rng: baselines.gaussian_tree(tree, counts, eps, delta, rng)
    if spec is None:
        raise InputError(f"{name} needs an accuracy spec")
    if name == "estimate":
        return lambda tree, counts, rng: hierarchy.estimate(tree, counts, spec, eps, delta, rng, force=force)
    return lambda tree, counts, rng: hierarchy.estimate_clamped(tree, counts, spec, eps, delta, rng, force=force)


def pipeline_budget(name, eps, delta):
    """Budget handed to the estimate step of a pipeline mechanism."""
    return (eps / 2, delta / 2) if name == "estimate+clamp" else (eps, delta)


def resolve_tau(tau, alpha, eps, delta, eta, d):
    if tau is None or tau == "auto":
        return hierarchy.required_tau_min(alpha, eps, delta, eta, d)
    return float(tau)


def build_spec(tree, alpha, eta, tau, thresholds=None, eps=None, delta=None) -> hierarchy.AccuracySpec:
    if alpha is None or eta is None:
        raise InputError("alpha and eta are required")
    default = None
    if tau is not None or not thresholds:
        default = resolve_tau(tau, alpha, eps, delta, eta, tree.d)
    return hierarchy.AccuracySpec.from_mapping(tree, alpha, eta, thresholds or {}, default)


def mechanism_budget(name, eps, delta) -> PrivacyBudget:
    if name == "exact":
        return PrivacyBudget(0.0, 0.0)
    if name == "laplace":
        return PrivacyBudget(eps, 0.0)
    return PrivacyBudget(eps, delta)


def precondition_ok(name, eps, delta, alpha, eta, tau_min, d) -> Optional[bool]:
    if name not in ("estimate", "estimate+clamp"):
        return None
    e, dl = pipeline_budget(name, eps, delta)
    return tau_min >= hierarchy.required_tau_min(alpha, e, dl, eta, d)


# ---------------------------------------------------------------- experiments


@dataclass
class ExperimentConfig:
    """Configuration of a ``run`` experiment (JSON keys match field names).

    ``mechanisms`` and ``depths`` describe series; ``tree`` (a file path)
    replaces generated complete binary trees of ``depths``.  ``suite`` is
    ``"default"`` (all-zero, heavy leaves, uniform) or a list of counts files.
    ``tau`` is a number or ``"auto"``.
    """

    mechanisms: List[str] = field(default_factory=lambda: ["laplace"])
    depths: List[int] = field(default_factory=list)
    tree: Optional[str] = None
    suite: object = "default"
    eps: float = 1.0
    delta: float = 1e-6
    alpha: float = 0.5
    eta: float = 0.05
    tau: object = "auto"
    thresholds: Optional[str] = None
    trials: int = 100
    seed: int = 0
    out: Optional[str] = None
    force: bool = False
    gaussian_eps: Optional[float] = None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from None
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(**data).validate()

    def validate(self) -> "ExperimentConfig":
        for m in self.mechanisms:
            if m not in MECHANISMS:
                raise InputError(f"unknown mechanism {m!r}")
        if not self.mechanisms:
            raise InputError("no mechanisms")
        if self.tree is None and not self.depths:
            raise InputError("either tree or depths is required")
        for p in [self.tree, self.thresholds] + (self.suite if isinstance(self.suite, list) else []):
            if p is not None and not os.path.isfile(p):
                raise InputError(f"file not found: {p}")
        if not isinstance(self.suite, list) and self.suite != "default":
            raise InputError("suite must be 'default' or a list of counts files")
        PrivacyBudget(self.eps, self.delta)
        if not (self.eps > 0 and 0 < self.delta < 1):
            raise InputError("eps must be positive and delta in (0, 1)")
        if int(self.trials) != self.trials or self.trials < 1:
            raise InputError("trials must be a positive integer")
        return self


def _suite(cfg, tree, tau):
    if isinstance(cfg.suite, list):
        return [(tree, load_counts(p, tree)) for p in cfg.suite], [os.path.basename(p) for p in cfg.suite]
    mags = (1, max(1, int(10 * tau)))
    return metrics.default_suite(tree, magnitudes=mags, uniform=max(1, int(math.ceil(tau / 8))))


def run_experiment(cfg: ExperimentConfig) -> str:
    """Run every (mechanism, tree) series over the suite; returns the CSV text.

    With ``cfg.out`` set the CSV is also written there atomically.
    """
    cfg.validate()
    report = Report(eps=cfg.eps, delta=cfg.delta, alpha=cfg.alpha, eta=cfg.eta, seed=cfg.seed, trials=cfg.trials)
    trees = [load_tree(cfg.tree)] if cfg.tree else [complete_binary(d) for d in cfg.depths]
    for tree in trees:
        taus = load_thresholds(cfg.thresholds, tree) if cfg.thresholds else None
        for j, name in enumerate(cfg.mechanisms):
            eps = cfg.gaussian_eps if (name == "gaussian" and cfg.gaussian_eps) else cfg.eps
            e_spec, d_spec = pipeline_budget(name, eps, cfg.delta)
            tau = None if (taus and cfg.tau == "auto") else cfg.tau
            spec = build_spec(tree, cfg.alpha, cfg.eta, tau, taus, e_spec, d_spec)
            mech = make_mechanism(name, eps, cfg.delta, spec=spec, force=cfg.force)
            ok = precondition_ok(name, eps, cfg.delta, cfg.alpha, cfg.eta, spec.tau_min, tree.d)
            if ok is False and not cfg.force:
                need = hierarchy.required_tau_min(cfg.alpha, e_spec, d_spec, cfg.eta, tree.d)
                raise PreconditionError(f"{name}: tau_min={spec.tau_min:g} below required {need:.6g}", required=need)
            suite, labels = _suite(cfg, tree, spec.tau_min)
            rep = metrics.mrmse_over_suite(mech, suite, cfg.alpha, cfg.trials, cfg.seed + 7919 * j, labels=labels)
            ctx = dict(eps=eps, d=tree.d)
            report.add("*", f"{name}:mrmse_alpha", rep.mrmse, rep.mrmse_se, **ctx)
            for r in rep.reports:
                report.add(r.worst_node, f"{name}:{r.label}:mrmse_alpha", r.mrmse, r.mrmse_se, **ctx)
            report.add("*", f"{name}:tau_min", spec.tau_min, **ctx)
            if ok is not None:
                report.add("*", f"{name}:precondition_ok", bool(ok), **ctx)
            b = mechanism_budget(name, eps, cfg.delta)
            report.add("*", f"{name}:budget:eps", b.eps, **ctx)
            report.add("*", f"{name}:budget:delta", b.delta, **ctx)
    text = report.to_csv()
    if cfg.out:
        write_atomic(cfg.out, text)
    return text


# ---------------------------------------------------------------- CLI


def _emit(report: Report, out):
    text = report.to_csv()
    if out:
        write_atomic(out, text)
    else:
        click.echo(text, nl=False)


def _tree_options(f):
    f = click.option("--tree", "tree_path", type=click.Path(dir_okay=False), help="Tree file.")(f)
    f = click.option("--generate", type=click.Choice(["complete-binary"]), help="Generate the tree instead.")(f)
    f = click.option("--depth", type=int, help="Depth of the generated tree.")(f)
    f = click.option("--counts", "counts_path", type=click.Path(dir_okay=False), help="Leaf counts file.")(f)
    return f


def _common(f):
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    f = click.option("--out", type=click.Path(dir_okay=False), help="Output CSV (default: stdout).")(f)
    return f


def _get_tree(tree_path, generate, depth):
    if tree_path and generate:
        raise InputError("use either --tree or --generate, not both")
    if tree_path:
        if not os.path.isfile(tree_path):
            raise InputError(f"file not found: {tree_path}")
        return load_tree(tree_path)
    if generate == "complete-binary":
        if depth is None:
            raise InputError("--generate complete-binary needs --depth")
        return complete_binary(depth)
    raise InputError("a tree is required: --tree PATH or --generate complete-binary --depth D")


def _get_counts(path, tree):
    if path is None:
        return LeafCounts(tree)
    if not os.path.isfile(path):
        raise InputError(f"file not found: {path}")
    return load_counts(path, tree)


def _get_thresholds(path, tree):
    if path is None:
        return None
    if not os.path.isfile(path):
        raise InputError(f"file not found: {path}")
    return load_thresholds(path, tree)


@click.group()
def cli():
    """Differentially private subtree sums over a rooted tree."""


@cli.command()
@_tree_options
@_common
def aggregate(tree_path, generate, depth, counts_path, seed, out):
    """Exact (non-private) node weights."""
    tree = _get_tree(tree_path, generate, depth)
    w = aggregate_exact(tree, _get_counts(counts_path, tree))
    rep = Report(seed=seed, d=tree.d)
    for u, v in zip(tree.ids, w.values):
        rep.add(u, "weight", int(v))
    _emit(rep, out)


def _release_rows(rep, tree, values, metric):
    for u, v in zip(tree.ids, values):
        rep.add(u, metric, float(v))


@cli.command("baseline-laplace")
@_tree_options
@click.option("--eps", type=float, required=True)
@_common
def baseline_laplace(tree_path, generate, depth, counts_path, eps, seed, out):
    """Every node weight plus Laplace noise of scale d/eps."""
    tree = _get_tree(tree_path, generate, depth)
    counts = _get_counts(counts_path, tree)
    est = baselines.laplace_tree(tree, counts, eps, make_rng(seed))
    rep = Report(eps=eps, delta=0.0, seed=seed, d=tree.d)
    _release_rows(rep, tree, est.values, "laplace")
    rep.add_budget(PrivacyBudget(eps, 0.0))
    _emit(rep, out)


@cli.command("baseline-gaussian")
@_tree_options
@click.option("--eps", type=float, required=True)
@click.option("--delta", type=float, required=True)
@_common
def baseline_gaussian(tree_path, generate, depth, counts_path, eps, delta, seed, out):
    """Every node weight plus Gaussian noise."""
    tree = _get_tree(tree_path, generate, depth)
    counts = _get_counts(counts_path, tree)
    est = baselines.gaussian_tree(tree, counts, eps, delta, make_rng(seed))
    rep = Report(eps=eps, delta=delta, seed=seed, d=tree.d)
    _release_rows(rep, tree, est.values, "gaussian")
    rep.add_budget(PrivacyBudget(eps, delta))
    _emit(rep, out)


@cli.command()
@_tree_options
@click.option("--eps", type=float, required=True)
@click.option("--delta", type=float, required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--eta", type=float, required=True)
@click.option("--tau", type=float, required=True, help="Classification threshold.")
@click.option("--bound", "M", type=float, required=True, help="Public upper bound M on the root weight.")
@click.option("--force", is_flag=True, help="Skip the accuracy precondition (privacy is unaffected).")
@_common
def classify(tree_path, generate, depth, counts_path, eps, delta, alpha, eta, tau, M, force, seed, out):
    """Label each node above (1) or below (0) the threshold."""
    tree = _get_tree(tree_path, generate, depth)
    counts = _get_counts(counts_path, tree)
    labels = hierarchy.classify_tree(tree, counts, M, eta, alpha, tau, eps, delta, make_rng(seed), force=force)
    rep = Report(eps=eps, delta=delta, alpha=alpha, eta=eta, seed=seed, d=tree.d)
    for u in tree.ids:
        rep.add(u, "label", labels[u])
    rep.add("*", "precondition_ok", M < tau or tau >= hierarchy.classification_min_tau(M, alpha, eps, delta, eta, tree.d))
    rep.add_budget(labels.budget)
    _emit(rep, out)


def _pipeline_args(f):
    for opt in reversed([
        click.option("--eps", type=float, required=True),
        click.option("--delta", type=float, required=True),
        click.option("--alpha", type=float, required=True),
        click.option("--eta", type=float, required=True),
        click.option("--tau", type=str, default="auto", show_default=True,
                     help="Uniform threshold, or 'auto' for the required minimum."),
        click.option("--thresholds", "thresholds_path", type=click.Path(dir_okay=False)),
        click.option("--force", is_flag=True, help="Skip the accuracy precondition (privacy is unaffected)."),
    ]):
        f = opt(f)
    return f


def _spec_from_cli(tree, alpha, eta, tau, thresholds_path, eps, delta):
    taus = _get_thresholds(thresholds_path, tree)
    tau_val = None if (taus and tau == "auto") else tau
    if tau_val not in (None, "auto"):
        tau_val = _parse_float(tau_val, "--tau")
    return build_spec(tree, alpha, eta, tau_val, taus, eps, delta)


@cli.command("estimate")
@_tree_options
@_pipeline_args
@_common
def estimate_cmd(tree_path, generate, depth, counts_path, eps, delta, alpha, eta, tau, thresholds_path, force, seed, out):
    """(alpha, eta)-accurate private estimate of every node weight."""
    tree = _get_tree(tree_path, generate, depth)
    counts = _get_counts(counts_path, tree)
    spec = _spec_from_cli(tree, alpha, eta, tau, thresholds_path, eps, delta)
    ledger = BudgetLedger()
    est = hierarchy.estimate(tree, counts, spec, eps, delta, make_rng(seed), force=force, ledger=ledger)
    rep = Report(eps=eps, delta=delta, alpha=alpha, eta=eta, seed=seed, d=tree.d)
    _release_rows(rep, tree, est.values, "estimate")
    rep.add("*", "tau_min", spec.tau_min)
    rep.add("*", "precondition_ok", precondition_ok("estimate", eps, delta, alpha, eta, spec.tau_min, tree.d))
    rep.add_budget(ledger.total())
    _emit(rep, out)


@cli.command()
@_tree_options
@_pipeline_args
@click.option("--raw", "raw_path", type=click.Path(dir_okay=False),
              help="Estimates to clamp (node<TAB>value); default: run estimate at half the budget.")
@_common
def clamp(tree_path, generate, depth, counts_path, eps, delta, alpha, eta, tau, thresholds_path, force, raw_path, seed, out):
    """Clamp estimates into a window around a noisy copy of the weights."""
    tree = _get_tree(tree_path, generate, depth)
    counts = _get_counts(counts_path, tree)
    rng = make_rng(seed)
    ledger = BudgetLedger()
    rep = Report(eps=eps, delta=delta, alpha=alpha, eta=eta, seed=seed, d=tree.d)
    if raw_path:
        if not os.path.isfile(raw_path):
            raise InputError(f"file not found: {raw_path}")
        out_vals = hierarchy.clamp_to_mrmse(tree, counts, load_values(raw_path, tree), eps, delta, rng, ledger=ledger)
    else:
        spec = _spec_from_cli(tree, alpha, eta, tau, thresholds_path, eps / 2, delta / 2)
        out_vals = hierarchy.estimate_clamped(tree, counts, spec, eps, delta, rng, force=force, ledger=ledger)
        rep.add("*", "tau_min", spec.tau_min)
        rep.add("*", "precondition_ok", precondition_ok("estimate+clamp", eps, delta, alpha, eta, spec.tau_min, tree.d))
    _release_rows(rep, tree, out_vals.values, "clamp")
    rep.add("*", "clamp_radius", hierarchy.clamp_radius(eps, delta, tree.d))
    rep.add_budget(ledger.total())
    _emit(rep, out)


@cli.command("metrics")
@_tree_options
@click.option("--mechanism", type=click.Choice(MECHANISMS), required=True)
@click.option("--eps", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=1e-6, show_default=True)
@click.option("--alpha", type=float, default=0.0, show_default=True)
@click.option("--eta", type=float, default=None)
@click.option("--tau", type=str, default=None, help="Uniform threshold or 'auto'; enables failure rates.")
@click.option("--thresholds", "thresholds_path", type=click.Path(dir_okay=False))
@click.option("--kappa", type=float, default=None, help="Smoothing factor for relative error.")
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--force", is_flag=True)
@_common
def metrics_cmd(tree_path, generate, depth, counts_path, mechanism, eps, delta, alpha, eta, tau, thresholds_path,
                kappa, trials, force, seed, out):
    """Monte Carlo alpha-RMSE, relative error and failure rates per node."""
    tree = _get_tree(tree_path, generate, depth)
    counts = _get_counts(counts_path, tree)
    taus = _get_thresholds(thresholds_path, tree)
    spec = None
    pipeline = mechanism in ("estimate", "estimate+clamp")
    if pipeline or tau is not None or taus:
        if eta is None or not 0 < alpha < 1:
            raise InputError("threshold accuracy needs --eta and --alpha in (0, 1)")
        e, dl = pipeline_budget(mechanism, eps, delta)
        spec = _spec_from_cli(tree, alpha, eta, tau or "auto", thresholds_path, e, dl)
    mech = make_mechanism(mechanism, eps, delta, spec=spec, force=force)
    rep_m = metrics.error_report(mech, tree, counts, alpha, trials, seed, kappa=kappa, spec=spec, label=mechanism)
    rep = Report(eps=eps, delta=delta, alpha=alpha, eta=eta, seed=seed, d=tree.d, trials=trials)
    for row in rep_m.rows():
        rep.add(*row)
    rep.add_budget(mechanism_budget(mechanism, eps, delta))
    _emit(rep, out)


@cli.command()
@click.option("--depth", type=int, required=True)
@click.option("--mechanism", type=click.Choice(MECHANISMS), default="estimate", show_default=True)
@click.option("--eps", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=1e-6, show_default=True)
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--eta", type=float, default=0.05, show_default=True)
@click.option("--tau", type=str, default="auto", show_default=True, help="tau_max, or 'auto'.")
@click.option("--trials", type=int, default=20, show_default=True)
@click.option("--indices", type=int, default=None, help="Number of hidden-leaf positions to sample.")
@click.option("--copies", type=int, default=1, show_default=True, help="Median of this many releases.")
@click.option("--force", is_flag=True)
@_common
def attack(depth, mechanism, eps, delta, alpha, eta, tau, trials, indices, copies, force, seed, out):
    """Packing attack: how often the random-walk decoder finds the hidden leaf."""
    tree = complete_binary(depth)
    e, dl = pipeline_budget(mechanism, eps, delta)
    tau_val = resolve_tau(None if tau == "auto" else _parse_float(tau, "--tau"), alpha, e, dl, eta, depth)
    cfg = bounds_lab.AttackConfig(depth, tau_val, alpha, eta, trials=trials, s=copies, n_indices=indices)
    spec = hierarchy.AccuracySpec.uniform(tree, alpha, eta, tau_val)
    mech = make_mechanism(mechanism, eps, delta, spec=spec, force=force)
    res = bounds_lab.attack_success_rate(mech, cfg, seed)
    rep = Report(eps=eps, delta=delta, alpha=alpha, eta=eta, seed=seed, d=tree.d, trials=trials)
    for row in res.rows():
        rep.add(*row)
    rep.add("*", "attack:tau_max", tau_val)
    rep.add("*", "attack:kappa", cfg.kappa)
    rep.add_budget(mechanism_budget(mechanism, eps, delta))
    _emit(rep, out)


@cli.command()
@click.option("--depth", type=int, required=True, help="Largest depth; rows for 1..depth.")
@click.option("--bruteforce/--no-bruteforce", default=True, show_default=True)
@_common
def gamma2(depth, bruteforce, seed, out):
    """Factorization-norm witness values for complete binary trees."""
    if depth < 1:
        raise InputError("--depth must be >= 1")
    rep = Report(seed=seed, trials=None)
    for d in range(1, depth + 1):
        v = bounds_lab.gamma2_witness_value(d)
        rep.add("*", "gamma2:witness", v, d=d)
        rep.add("*", "gamma2:witness_over_sqrt_d", v / math.sqrt(d), d=d)
        if bruteforce and d <= bounds_lab.MAX_BRUTEFORCE_DEPTH:
            rep.add("*", "gamma2:bruteforce", bounds_lab.nuclear_norm_bruteforce(d), d=d)
    _emit(rep, out)


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Overrides the config's output path.")
@click.option("--seed", type=int, default=None, help="Overrides the config's seed.")
@click.option("--trials", type=int, default=None, help="Overrides the config's trial count.")
@click.option("--force", is_flag=True, default=None)
def run(config_path, out, seed, trials, force):
    """Run a JSON-configured experiment and write the CSV report."""
    if not os.path.isfile(config_path):
        raise InputError(f"file not found: {config_path}")
    cfg = ExperimentConfig.from_json(config_path)
    if out is not None:
        cfg.out = out
    if seed is not None:
        cfg.seed = seed
    if trials is not None:
        cfg.trials = trials
    if force:
        cfg.force = True
    text = run_experiment(cfg)
    if not cfg.out:
        click.echo(text, nl=False)


def main(argv=None) -> int:
    """CLI entry point returning the process exit code."""
    try:
        cli.main(args=argv, prog_name="dptree", standalone_mode=False)
    except TreeAggError as exc:
        click.echo(f"error [{exc.code}]: {exc}", err=True)
        if isinstance(exc, PreconditionError) and exc.required is not None:
            click.echo(f"required minimum: {exc.required:.6g}", err=True)
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.exceptions.ClickException as exc:
        exc.show()
        return 2
    except OSError as exc:
        click.echo(f"error [io]: {exc}", err=True)
        return 2
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
