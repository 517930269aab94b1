"""Batch front door: TOML config in, deterministic JSON/CSV reports out.

Exit codes: 0 success, 1 config error, 2 hypothesis failure (fully
exceptional support / exceptional image).  All randomness flows from the
config's ``master_seed``; identical config and seed give byte-identical
output files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # py310
    import tomli as tomllib

from .boundary import hitting_histogram, stationarity_gap
from .group import ProductElem, parse_product
from .scale import (
    ExceptionalImageError,
    FullyExceptionalSupportError,
    SubgroupSpec,
    classify_factor,
    classify_subgroup,
    is_unimodular_on_words,
    is_uniscalar,
    scale_element,
    scale_oracle,
    transience_hypothesis,
)
from .tdlc import AlphaModel, build_coset_tree, tidy_subgroups
from .walk import Measure, rate_of_escape


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    moduli: tuple[int, ...]
    measure: Measure | None
    generators: tuple[ProductElem, ...]
    n: int
    trials: int
    depth: int
    master_seed: int
    word_bound: int
    oracle_depth: int
    coset_q: int
    coset_m: int
    j_min: int
    j_max: int


def _parse_weight(w) -> Fraction:
    if isinstance(w, int):
        return Fraction(w)
    if isinstance(w, str):
        return Fraction(w)
    raise ConfigError(f"weights must be exact rationals as strings, got {w!r}")


def load_config(path: Path) -> RunConfig:
    try:
        raw = tomllib.loads(path.read_text())
    except Exception as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    product = raw.get("product", {})
    moduli = tuple(product.get("moduli", ()))
    if not all(isinstance(q, int) and q >= 2 for q in moduli):
        raise ConfigError("product.moduli must be integers >= 2")

    measure = None
    if "measure" in raw:
        atoms = []
        for entry in raw["measure"].get("atoms", []):
            try:
                elem = parse_product(entry["element"])
            except Exception as exc:
                raise ConfigError(f"bad atom element: {exc}") from exc
            atoms.append((elem, _parse_weight(entry["weight"])))
        if not atoms:
            raise ConfigError("measure.atoms must be non-empty")
        try:
            measure = Measure(tuple(atoms))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if moduli and measure.moduli != moduli:
            raise ConfigError("measure atoms do not match product.moduli")

    generators = ()
    if "generators" in raw:
        try:
            generators = tuple(parse_product(s) for s in raw["generators"].get("elements", []))
        except Exception as exc:
            raise ConfigError(f"bad generator element: {exc}") from exc

    walk = raw.get("walk", {})
    seed = walk.get("master_seed", raw.get("master_seed"))
    if seed is None and ("measure" in raw or "walk" in raw):
        raise ConfigError("master_seed is required; wall-clock seeding is not supported")
    coset = raw.get("coset_tree", {})
    return RunConfig(
        moduli=moduli or (measure.moduli if measure else ()),
        measure=measure,
        generators=generators,
        n=walk.get("n", 1000),
        trials=walk.get("trials", 100),
        depth=walk.get("depth", 8),
        master_seed=seed if seed is not None else 0,
        word_bound=raw.get("classify", {}).get("word_bound", 4),
        oracle_depth=raw.get("scale", {}).get("oracle_depth", 6),
        coset_q=coset.get("q", 2),
        coset_m=coset.get("m", 1),
        j_min=coset.get("j_min", -2),
        j_max=coset.get("j_max", 2),
    )


def _write(out_dir: Path, name: str, content: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(content)


def _dump_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, default=str) + "\n"


def cmd_walk(cfg: RunConfig, out_dir: Path, threads: int) -> int:
    if cfg.measure is None:
        raise ConfigError("walk needs a [measure] table")
    if not transience_hypothesis(cfg.measure):
        print("hypothesis failure: fully exceptional support", file=sys.stderr)
        return 2
    depth = max(cfg.depth, 20)
    report = rate_of_escape(
        cfg.measure, cfg.n, cfg.trials, cfg.master_seed, depth=depth, threads=threads
    )
    _write(out_dir, "walk_report.json", report.to_json())
    _write(out_dir, "walk_report.csv", report.to_csv())
    return 0


def cmd_hitting(cfg: RunConfig, out_dir: Path, threads: int) -> int:
    if cfg.measure is None:
        raise ConfigError("hitting needs a [measure] table")
    if not transience_hypothesis(cfg.measure):
        print("hypothesis failure: fully exceptional support", file=sys.stderr)
        return 2
    try:
        hists = hitting_histogram(cfg.measure, cfg.n, cfg.trials, cfg.depth, cfg.master_seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    reports = stationarity_gap(cfg.measure, hists, cfg.master_seed)
    for h in hists:
        lines = ["depth,word,count"]
        for word in sorted(h.counts):
            lines.append(f"{h.depth}," + "".join(map(str, word)) + f",{h.counts[word]}")
        _write(out_dir, f"hitting_factor{h.factor}.csv", "\n".join(lines) + "\n")
    payload = []
    for h, rep in zip(hists, reports):
        payload.append(
            {
                "factor": h.factor,
                "tv_gap": str(rep.tv_gap),
                "tv_gap_float": float(rep.tv_gap),
                "sigma_radius": rep.sigma_radius,
                "max_cylinder_mass": float(h.max_cylinder_mass(h.depth)) if h.counts else 0.0,
                "omega_mass": h.omega_count / h.total,
                "undecided_mass": h.undecided_count / h.total,
            }
        )
    _write(out_dir, "hitting_report.json", _dump_json(payload))
    return 0


def cmd_classify(cfg: RunConfig, out_dir: Path) -> int:
    if not cfg.generators:
        raise ConfigError("classify needs a [generators] table")
    spec = SubgroupSpec(cfg.generators)
    payload = {
        "factor_verdicts": [classify_factor(spec, j) for j in range(len(spec.moduli))],
        "subgroup": classify_subgroup(spec),
        "uniscalar": is_uniscalar(spec, cfg.word_bound),
        "unimodular_sampled": is_unimodular_on_words(spec, cfg.word_bound),
    }
    _write(out_dir, "classify.json", _dump_json(payload))
    return 0


def cmd_scale(cfg: RunConfig, out_dir: Path) -> int:
    if not cfg.generators:
        raise ConfigError("scale needs a [generators] table")
    payload = []
    for g in cfg.generators:
        res = scale_element(g)
        oracle = scale_oracle(g, cfg.oracle_depth)
        payload.append(
            {
                "element": str(g),
                "per_factor_scale": list(res.per_factor),
                "total_scale": res.total,
                "modular": str(res.modular),
                "oracle_per_factor": list(oracle),
                "oracle_agrees": tuple(oracle) == res.per_factor,
            }
        )
    _write(out_dir, "scale.json", _dump_json(payload))
    return 0


def cmd_coset_tree(cfg: RunConfig, out_dir: Path) -> int:
    model = AlphaModel(cfg.coset_q, cfg.coset_m)
    try:
        tree = build_coset_tree(model, cfg.j_min, cfg.j_max)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    parent_of = {c: p for p, c in tree.edges}
    lines = ["level,rep,parent_level,parent_rep"]
    for j in range(tree.j_min, tree.j_max + 1):
        for v in tree.levels[j]:
            p = parent_of.get(v)
            if p is None:
                lines.append(f"{v.level},{v.rep}, ,")
            else:
                lines.append(f"{v.level},{v.rep},{p.level},{p.rep}")
    _write(out_dir, "coset_tree.csv", "\n".join(lines) + "\n")
    tidy = tidy_subgroups(model, enum_depth=min(6, model.depth))
    interior = [
        v
        for j in range(tree.j_min, tree.j_max)
        for v in tree.levels[j]
    ]
    degree_payload = {
        "q": cfg.coset_q,
        "m": cfg.coset_m,
        "expected_out_degree": model.modulus,
        "out_degrees_ok": all(tree.out_degree(v) == model.modulus for v in interior),
        "in_degrees_ok": all(
            tree.in_degree(v) == 1
            for j in range(tree.j_min + 1, tree.j_max + 1)
            for v in tree.levels[j]
        ),
        "tidy": json.loads(tidy.to_json()),
    }
    _write(out_dir, "degree_report.json", _dump_json(degree_payload))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="affwalk",
        description="random walks, boundaries and scale arithmetic on affine tree groups",
    )
    parser.add_argument("command", choices=["walk", "hitting", "classify", "scale", "coset-tree"])
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.command == "walk":
            return cmd_walk(cfg, args.out, args.threads)
        if args.command == "hitting":
            return cmd_hitting(cfg, args.out, args.threads)
        if args.command == "classify":
            return cmd_classify(cfg, args.out)
        if args.command == "scale":
            return cmd_scale(cfg, args.out)
        return cmd_coset_tree(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (FullyExceptionalSupportError, ExceptionalImageError) as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
