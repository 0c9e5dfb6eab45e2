"""Command-line entry point: probs, decay, gfun, bench, simulate.

Configuration comes from an optional plain-text key=value file (``--grid-file``)
with command-line flags taking precedence. Every emitted file starts with
``# key=value`` comment lines carrying the full effective configuration, so a
run can be reproduced from its output alone. Data sections are deterministic
for a fixed configuration; wall-clock runtimes appear only in the JSON-lines
benchmark records.

Exit codes: 0 success, 2 configuration error, 3 numerical-check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .denoise import (
    BerReport,
    bfp_denoise,
    bit_error_rate,
    default_context_length,
    dude_detail,
    estimate_p_moment,
    forward_backward,
    gibbs_denoise,
    map_denoise,
)
from .errors import DivisionNearZeroError, NoisyMarkovError, OutOfRangeError
from .model import channel_model, validate_params
from .oracle import brute_force_cylinder, code_to_spins
from .simulate import GENERATOR_NAME, generate_dataset, save_path_csv, save_spins
from .thermo import (
    decay_rate_bound,
    g_continued_fraction_detail,
    g_function,
    required_context,
    variation_estimate,
)
from .transfer import cylinder_prob

SCHEMA_VERSION = "noisymarkov-cli-v1"

DEFAULT_DECAY_GRID = [(p, e) for p in (0.1, 0.2, 0.3, 0.45) for e in (0.05, 0.2, 0.35, 0.45)]
DEFAULT_BENCH_GRID = [(0.05, 0.2), (0.10, 0.2), (0.15, 0.2), (0.20, 0.2)]

#: Enumerating all words of a length beyond this is pointless for a CSV report.
MAX_ENUMERATION_LENGTH = 12


class ConfigError(NoisyMarkovError):
    """Bad or missing configuration; mapped to exit code 2."""


def load_config(path: str | Path) -> dict[str, str]:
    """Read a plain-text key=value configuration file ('#' starts a comment)."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _spins_to_text(symbols) -> str:
    return "".join("+" if s == 1 else "-" for s in symbols)


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _write_csv(path: Path, meta: dict, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# schema={SCHEMA_VERSION}\n")
        for key in sorted(meta):
            fh.write(f"# {key}={meta[key]}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


class Settings:
    """Merged configuration: file values overridden by explicit flags."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.file_values = load_config(args.grid_file) if args.grid_file else {}
        self.args = args

    def get(self, key: str, default=None) -> str | None:
        flag = getattr(self.args, key, None)
        if flag is not None:
            return str(flag)
        return self.file_values.get(key, default)

    def get_float(self, key: str, default: float | None = None) -> float:
        raw = self.get(key, None if default is None else str(default))
        if raw is None:
            raise ConfigError(f"missing required parameter: {key}")
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"parameter {key}={raw!r} is not a number") from exc

    def get_int(self, key: str, default: int | None = None) -> int:
        raw = self.get(key, None if default is None else str(default))
        if raw is None:
            raise ConfigError(f"missing required parameter: {key}")
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"parameter {key}={raw!r} is not an integer") from exc

    def get_int_list(self, key: str, default: str | None = None) -> list[int]:
        raw = self.get(key, default)
        if raw is None:
            raise ConfigError(f"missing required parameter: {key}")
        try:
            items = [int(tok) for tok in str(raw).replace(" ", ",").split(",") if tok]
        except ValueError as exc:
            raise ConfigError(f"parameter {key}={raw!r} is not a list of integers") from exc
        if not items:
            raise ConfigError(f"parameter {key} must be a nonempty list")
        return items

    def get_grid(self, key: str, default: list[tuple[float, float]]) -> list[tuple[float, float]]:
        raw = self.file_values.get(key)
        if raw is None:
            # a grid may be narrowed to a single cell with --p/--eps
            if self.get("p") is not None and self.get("eps") is not None:
                return [(self.get_float("p"), self.get_float("eps"))]
            return default
        cells: list[tuple[float, float]] = []
        for token in raw.split():
            try:
                p_str, _, e_str = token.partition(":")
                cells.append((float(p_str), float(e_str)))
            except ValueError as exc:
                raise ConfigError(f"bad grid cell {token!r}; expected p:eps") from exc
        if not cells:
            raise ConfigError(f"grid {key} must be nonempty")
        return cells

    def meta(self, **extra) -> dict:
        out = {"version": __version__, "generator": GENERATOR_NAME}
        out.update(self.file_values)
        for key, value in vars(self.args).items():
            if key in ("command", "grid_file") or value is None:
                continue
            out[key] = value
        out.update(extra)
        return out


def _validated_cell(p: float, eps: float):
    try:
        return validate_params(p, eps)
    except OutOfRangeError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_probs(cfg: Settings) -> int:
    """Enumerate all words of a given length; cross-check the two probability routes."""
    length = cfg.get_int("n", 2)
    if not 1 <= length <= MAX_ENUMERATION_LENGTH:
        raise ConfigError(f"enumeration length must be in 1..{MAX_ENUMERATION_LENGTH}, got {length}")
    params = _validated_cell(cfg.get_float("p"), cfg.get_float("eps"))
    model = channel_model(params.p, params.epsilon)
    out = Path(cfg.get("out", "probs.csv"))
    rows = []
    total = 0.0
    max_rel_err = 0.0
    for code in range(1 << length):
        word = code_to_spins(code, length)
        q_transfer = cylinder_prob(word, model)
        q_brute = brute_force_cylinder(word, params)
        rel_err = abs(q_transfer - q_brute) / q_brute
        max_rel_err = max(max_rel_err, rel_err)
        total += q_transfer
        rows.append((_spins_to_text(word), _fmt(q_transfer), _fmt(q_brute), _fmt(rel_err)))
    _write_csv(out, cfg.meta(sum=_fmt(total), max_rel_err=_fmt(max_rel_err)),
               ["word", "q_transfer", "q_bruteforce", "rel_err"], rows)
    print(f"probs: wrote {out} ({1 << length} words, sum={total:.12f}, max rel err={max_rel_err:.3e})")
    if max_rel_err >= 1e-12 or abs(total - 1.0) >= 1e-10:
        print("probs: numerical check FAILED", file=sys.stderr)
        return 3
    return 0


def _empirical_variation_rate(p: float, eps: float, samples: int, seed: int) -> tuple[float, int]:
    """Least-squares per-step decay rate of the adversarial variation of g.

    The fit runs over n = 2..n_hi with n_hi chosen so the certified bound
    C * rho^n stays above the double-precision measurement floor; a plain
    two-point ratio would carry an O(1/gap) prefactor bias, a regression over
    the whole window averages it out.
    """
    model = channel_model(p, eps)
    bound = decay_rate_bound(validate_params(p, eps))
    if bound.rho == 0.0:
        return 0.0, 0
    n_hi = 2
    while n_hi < 14 and bound.C * bound.rho ** (n_hi + 1) > 1e-12:
        n_hi += 1
    ns = np.arange(2, n_hi + 1)
    values = np.array([variation_estimate(int(n), samples, model, seed) for n in ns])
    mask = values > 0.0
    if int(mask.sum()) < 2:
        return 0.0, int(ns[-1])
    slope = np.polyfit(ns[mask], np.log(values[mask]), 1)[0]
    return float(np.exp(slope)), int(ns[-1])


def cmd_decay(cfg: Settings) -> int:
    """Tabulate naive and improved decay bounds plus an empirical variation rate."""
    grid = cfg.get_grid("grid", DEFAULT_DECAY_GRID)
    seed = cfg.get_int("seed", 0)
    samples = cfg.get_int("samples", 48)
    out = Path(cfg.get("out", "decay.csv"))
    rows = []
    all_ok = True
    for p, eps in grid:
        params = _validated_cell(p, eps)
        bound = decay_rate_bound(params)
        rate, n_hi = _empirical_variation_rate(p, eps, samples, seed)
        ok = rate <= bound.rho + 1e-12
        all_ok = all_ok and ok
        rows.append(
            (
                _fmt(p), _fmt(eps), _fmt(abs(1.0 - 2.0 * p)), _fmt(bound.rho), bound.regime,
                _fmt(bound.C), _fmt(rate), str(n_hi), str(ok).lower(),
            )
        )
    _write_csv(out, cfg.meta(samples=samples),
               ["p", "eps", "naive", "rho", "regime", "C", "empirical_rate", "fit_n_hi", "ok"],
               rows)
    print(f"decay: wrote {out} ({len(rows)} cells)")
    if not all_ok:
        print("decay: empirical rate exceeded the certified bound", file=sys.stderr)
        return 3
    return 0


def cmd_gfun(cfg: Settings) -> int:
    """Cross-validate the recursion and continued-fraction forms of g."""
    params = _validated_cell(cfg.get_float("p"), cfg.get_float("eps"))
    model = channel_model(params.p, params.epsilon)
    count = cfg.get_int("n", 50)
    depth = cfg.get_int("depth", 200)
    tol = cfg.get_float("tol", 1e-12)
    seed = cfg.get_int("seed", 0)
    out = Path(cfg.get("out", "gfun.csv"))
    length = max(depth + 1, required_context(tol, model) + 1)
    rng = np.random.default_rng(seed)
    windows = [np.ones(length, dtype=np.int8)]
    windows += [rng.choice(np.array([-1, 1], dtype=np.int8), size=length) for _ in range(count)]
    rows = []
    max_diff = 0.0
    flagged = 0
    for win in windows:
        g_rec = g_function(win, tol, model)
        try:
            detail = g_continued_fraction_detail(win, depth, model)
            diff = abs(g_rec - detail.value)
            max_diff = max(max_diff, diff)
            rows.append((_spins_to_text(win[:24]), _fmt(g_rec), _fmt(detail.value),
                         _fmt(diff), _fmt(detail.min_denominator), "ok"))
        except DivisionNearZeroError:
            flagged += 1
            rows.append((_spins_to_text(win[:24]), _fmt(g_rec), "nan", "nan", "nan",
                         "division_near_zero"))
    _write_csv(out, cfg.meta(depth=depth, tol=_fmt(tol), window_length=length,
                             max_diff=_fmt(max_diff), flagged=flagged),
               ["window_prefix", "g_recursion", "g_contfrac", "abs_diff", "min_denominator",
                "status"], rows)
    print(f"gfun: wrote {out} ({len(rows)} windows, max |diff|={max_diff:.3e}, flagged={flagged})")
    if depth >= 200 and max_diff >= 1e-10:
        print("gfun: cross-validation FAILED at depth >= 200", file=sys.stderr)
        return 3
    return 0


def _bench_cell(p: float, eps: float, n: int, seed: int, k_list: list[int], algorithms: list[str]):
    """All requested denoisers on one simulated path; one BerReport per algorithm."""
    params = validate_params(p, eps)
    path = generate_dataset(params, n, seed)
    reports: list[BerReport] = []

    def run(algorithm: str, fn, **extra) -> None:
        t0 = time.perf_counter()
        xhat = fn()
        elapsed = time.perf_counter() - t0
        reports.append(
            BerReport(algorithm=algorithm, p=p, epsilon=eps, n=n, seed=seed,
                      ber=bit_error_rate(xhat, path.x), runtime_s=elapsed, extra=extra)
        )

    if "bf" in algorithms:
        run("bf", lambda: map_denoise(forward_backward(path.y, params)))
    if "gibbs" in algorithms:
        p_hat = estimate_p_moment(path.y, eps)
        run("gibbs", lambda: gibbs_denoise(path.y, eps), p_hat=p_hat)
    if "dude" in algorithms:
        for k in k_list:
            result = {}

            def run_dude(k=k, result=result):
                detail = dude_detail(path.y, eps, k)
                result["n_clamped"] = detail.n_clamped
                return detail.xhat

            run(f"dude_k{k}", run_dude, k=k)
            reports[-1].extra["n_clamped"] = result["n_clamped"]
    if "bfp" in algorithms:
        run("bfp", lambda: bfp_denoise(path.y, params, mode="exact")[0], mode="exact")
    return reports


def cmd_bench(cfg: Settings) -> int:
    """Simulate, denoise and score every (p, eps, seed) cell; emit JSONL and tables."""
    grid = cfg.get_grid("grid", DEFAULT_BENCH_GRID)
    n = cfg.get_int("n", 1_000_000)
    if n < 4:
        raise ConfigError(f"bench needs n >= 4, got {n}")
    seeds = cfg.get_int_list("seed", "0,1,2")
    algorithms = [a.strip() for a in str(cfg.get("algorithms", "bf,gibbs,dude")).split(",") if a.strip()]
    for algo in algorithms:
        if algo not in ("bf", "gibbs", "dude", "bfp"):
            raise ConfigError(f"unknown algorithm {algo!r}")
    default_k = default_context_length(n)
    k_default_list = sorted(set(list(range(1, 9)) + [default_k]))
    k_list = [k for k in cfg.get_int_list("k", ",".join(map(str, k_default_list)))]
    max_k = max(k_list) if k_list else 1
    if "dude" in algorithms and n <= 2 * max_k + 1:
        raise ConfigError(f"bench with dude contexts up to k={max_k} needs n >= {2 * max_k + 2}")
    out_dir = Path(cfg.get("out", "bench-out"))
    out_dir.mkdir(parents=True, exist_ok=True)

    failures = 0
    records: list[dict] = []
    by_cell: dict[tuple[float, float], dict[str, list[float]]] = {}
    for p, eps in grid:
        _validated_cell(p, eps)
        cell = by_cell.setdefault((p, eps), {})
        for seed in seeds:
            try:
                reports = _bench_cell(p, eps, n, seed, k_list, algorithms)
            except NoisyMarkovError as exc:
                failures += 1
                records.append({"schema": "noisymarkov-ber-v1", "p": p, "epsilon": eps,
                                "n": n, "seed": seed, "error": str(exc)})
                continue
            for rep in reports:
                records.append(rep.to_dict())
                cell.setdefault(rep.algorithm, []).append(rep.ber)

    jsonl_path = out_dir / "ber.jsonl"
    with open(jsonl_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    header = ["p", "eps", "bf", "gibbs", "dude_best", "dude_best_k",
              f"dude_default_k{default_k}", "bfp"]
    rows = []
    md_lines = ["| p | Gibbs | DUDE |", "|---|-------|------|"]
    for (p, eps), algos in by_cell.items():
        def mean_of(name: str) -> float | None:
            vals = algos.get(name)
            return float(np.mean(vals)) if vals else None

        dude_means = {k: mean_of(f"dude_k{k}") for k in k_list}
        dude_means = {k: v for k, v in dude_means.items() if v is not None}
        best_k = min(dude_means, key=dude_means.get) if dude_means else None
        row = {
            "bf": mean_of("bf"),
            "gibbs": mean_of("gibbs"),
            "dude_best": dude_means.get(best_k) if best_k is not None else None,
            "dude_best_k": best_k,
            f"dude_default_k{default_k}": dude_means.get(default_k),
            "bfp": mean_of("bfp"),
        }
        rows.append((_fmt(p), _fmt(eps)) + tuple(
            "" if row[name] is None else (_fmt(row[name]) if name != "dude_best_k" else str(row[name]))
            for name in header[2:]
        ))
        if row["gibbs"] is not None and row["dude_best"] is not None:
            md_lines.append(f"| {p:g} | {100 * row['gibbs']:.2f}% | {100 * row['dude_best']:.2f}% |")

    _write_csv(out_dir / "ber_table.csv", cfg.meta(n=n, seeds=",".join(map(str, seeds)),
                                                   algorithms=",".join(algorithms),
                                                   k_list=",".join(map(str, k_list))),
               header, rows)
    (out_dir / "ber_table.md").write_text("\n".join(md_lines) + "\n", encoding="utf-8")
    print(f"bench: wrote {jsonl_path}, {out_dir / 'ber_table.csv'}, {out_dir / 'ber_table.md'}")
    if failures:
        print(f"bench: {failures} cell(s) failed", file=sys.stderr)
        return 3
    return 0


def cmd_simulate(cfg: Settings) -> int:
    """Generate a seeded dataset and export it (packed .bin for y, or full .csv path)."""
    params = _validated_cell(cfg.get_float("p"), cfg.get_float("eps"))
    n = cfg.get_int("n", 1000)
    seed = cfg.get_int("seed", 0)
    out = Path(cfg.get("out", "path.bin"))
    sim = generate_dataset(params, n, seed)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.suffix == ".csv":
        save_path_csv(out, sim)
    else:
        save_spins(out, sim.y)
    print(f"simulate: wrote {out} (n={n}, seed={seed}, generator={sim.generator})")
    return 0


_COMMANDS = {
    "probs": cmd_probs,
    "decay": cmd_decay,
    "gfun": cmd_gfun,
    "bench": cmd_bench,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisymarkov",
                                     description="Binary symmetric Markov chain over a binary "
                                                 "symmetric channel: exact probabilities, decay "
                                                 "diagnostics and denoising benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("probs", "enumerate cylinder probabilities and cross-check the oracle"),
        ("decay", "tabulate decay-rate bounds and empirical variation rates"),
        ("gfun", "cross-validate the two forms of the g-function"),
        ("bench", "run the denoising benchmark and emit the BER table"),
        ("simulate", "generate and export a seeded dataset"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--p", type=float, default=None, help="source flip probability")
        cmd.add_argument("--eps", type=float, default=None, help="channel crossover probability")
        cmd.add_argument("--n", type=int, default=None,
                         help="word length (probs), window count (gfun) or sample size")
        cmd.add_argument("--seed", type=str, default=None,
                         help="seed, or comma-separated seed list for bench")
        cmd.add_argument("--k", type=str, default=None, help="context length(s) for dude")
        cmd.add_argument("--depth", type=int, default=None, help="continued-fraction depth")
        cmd.add_argument("--tol", type=float, default=None, help="limit-field tolerance")
        cmd.add_argument("--out", type=str, default=None, help="output file or directory")
        cmd.add_argument("--grid-file", type=str, default=None,
                         help="key=value config file; flags override its entries")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        cfg = Settings(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OutOfRangeError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NoisyMarkovError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
