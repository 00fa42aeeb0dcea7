"""``bmn`` command line: JSON config in, JSON report out.

Exit codes: 0 success, 2 invalid config or arguments, 3 analysis refused
(for example ``exact`` on a chain that is not absorbing).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema

from bmn.chain import ChainError, deal_expectation, expected_moves
from bmn.core import DeckSpec, Rank, StateSpaceTooLarge, decode_pile, decode_state, encode_state, enumerate_splits
from bmn.cycles import DeterministicConfig, PickupOrder, search_cycles
from bmn.graph import build_g0, graph_report
from bmn.rules import FixtureEntry, Indexing, RelativePlayer, RuleSpec, Verdict, validate
from bmn.simulate import histogram, monte_carlo

SCHEMA_VERSION = 1

_RANK = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "count": {"type": "integer", "minimum": 1},
        "penalty": {"type": "integer", "minimum": 0},
    },
    "required": ["name", "count"],
    "additionalProperties": False,
}

_FIXTURE = {
    "type": "object",
    "properties": {
        "pile": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "verdict": {"enum": ["continue", "finish"]},
        "who": {"enum": ["starter", "opponent", 1, 2]},
    },
    "required": ["pile", "verdict", "who"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "ranks": {"type": "array", "items": _RANK, "minItems": 1},
        "indexing": {"enum": ["relative", "absolute_fixture"]},
        "fixture_table": {"type": "array", "items": _FIXTURE},
        "court_free": {"type": "boolean"},
        "p": {"type": "number"},
        "left_size": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "games": {"type": "integer", "minimum": 1},
        "deals": {"type": "integer", "minimum": 1},
        "move_cap": {"type": "integer", "minimum": 1},
        "pickup": {"enum": ["played", "reverse"]},
        "first_leader": {"enum": [1, 2]},
    },
    "required": ["ranks"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]) -> None:
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class Config:
    ranks: tuple[Rank, ...]
    indexing: str = "relative"
    fixture_table: tuple[tuple[tuple[str, ...], str, Any], ...] = ()
    court_free: bool = False
    p: float = 0.5
    left_size: int | None = None
    seed: int = 0
    games: int = 10_000
    deals: int = 10_000
    move_cap: int = 10**7
    pickup: str = "played"
    first_leader: int = 1

    @property
    def deck(self) -> DeckSpec:
        return DeckSpec(self.ranks)

    @property
    def split_size(self) -> int:
        return self.deck.size // 2 if self.left_size is None else self.left_size

    def rules(self) -> RuleSpec:
        deck = self.deck
        table = {}
        for labels, verdict, who in self.fixture_table:
            pile = decode_pile(deck, ",".join(labels))
            who_v = RelativePlayer(who) if isinstance(who, str) else who
            table[pile] = FixtureEntry(Verdict(verdict), who_v)
        return RuleSpec(deck, Indexing(self.indexing), table, self.court_free)


def serialize(config: Config) -> dict[str, Any]:
    out: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "ranks": [{"name": r.name, "count": r.count, "penalty": r.penalty} for r in config.ranks],
        "indexing": config.indexing,
        "court_free": config.court_free,
        "p": config.p,
        "seed": config.seed,
        "games": config.games,
        "deals": config.deals,
        "move_cap": config.move_cap,
        "pickup": config.pickup,
        "first_leader": config.first_leader,
    }
    if config.fixture_table:
        out["fixture_table"] = [
            {"pile": list(pile), "verdict": verdict, "who": who} for pile, verdict, who in config.fixture_table
        ]
    if config.left_size is not None:
        out["left_size"] = config.left_size
    return out


def _pointer(error: jsonschema.ValidationError) -> str:
    path = "/" + "/".join(str(part) for part in error.absolute_path)
    if error.validator == "additionalProperties":
        return f"{path}: {error.message}"
    if error.validator == "required":
        return f"{path}: {error.message} (missing key)"
    return f"{path}: {error.message}"


def config_from_dict(raw: Any) -> Config:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ConfigError([_pointer(e) for e in errors])
    config = Config(
        ranks=tuple(Rank(r["name"], r["count"], r.get("penalty", 0)) for r in raw["ranks"]),
        indexing=raw.get("indexing", "relative"),
        fixture_table=tuple(
            (tuple(e["pile"]), e["verdict"], e["who"]) for e in raw.get("fixture_table", [])
        ),
        court_free=raw.get("court_free", False),
        p=float(raw.get("p", 0.5)),
        left_size=raw.get("left_size"),
        seed=raw.get("seed", 0),
        games=raw.get("games", 10_000),
        deals=raw.get("deals", 10_000),
        move_cap=raw.get("move_cap", 10**7),
        pickup=raw.get("pickup", "played"),
        first_leader=raw.get("first_leader", 1),
    )
    check_config(config)
    return config


def check_config(config: Config) -> None:
    problems = []
    if not 0.0 < config.p < 1.0:
        problems.append(f"/p: p must lie strictly inside (0,1), got {config.p}")
    deck_problems = config.deck.problems()
    problems += [f"/ranks: {msg}" for msg in deck_problems]
    if not deck_problems:
        n = config.deck.size
        if config.left_size is not None and config.left_size > n:
            problems.append(f"/left_size: must not exceed the deck size {n}")
        try:
            rules = config.rules()
        except ValueError as exc:
            problems.append(f"/fixture_table: {exc}")
        else:
            problems += [f"/rules: {msg}" for msg in validate(rules) if msg not in deck_problems]
    if problems:
        raise ConfigError(problems)


def parse_config(path: str | Path) -> Config:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc.strerror or exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config {path} is not valid JSON: {exc}"]) from exc
    return config_from_dict(raw)


class Refusal(Exception):
    def __init__(self, message: str, results: dict[str, Any]) -> None:
        super().__init__(message)
        self.results = results


def _simulate(config: Config, args: argparse.Namespace) -> dict[str, Any]:
    rules = config.rules()
    stats = monte_carlo(
        rules, config.split_size, config.p, config.games, config.seed, config.move_cap, workers=args.workers
    )
    out: dict[str, Any] = {"p": config.p, "left_size": config.split_size, "stats": stats.to_json()}
    if args.bucket_width:
        hist = histogram(
            rules, config.split_size, config.p, config.games, config.seed, args.bucket_width, config.move_cap
        )
        out["histogram"] = [[b, c] for b, c in hist]
    return out


def _exact(config: Config, args: argparse.Namespace) -> dict[str, Any]:
    rules = config.rules()
    deck = rules.deck
    try:
        table = expected_moves(rules, config.p)
    except ChainError as exc:
        stuck = sorted(encode_state(deck, s) for s in exc.non_absorbing or ())
        raise Refusal(str(exc), {"non_absorbing_states": stuck}) from exc
    except StateSpaceTooLarge as exc:
        raise Refusal(str(exc), {}) from exc
    out: dict[str, Any] = {
        "p": config.p,
        "left_size": config.split_size,
        "deal_expectation": deal_expectation(rules, config.p, config.split_size, table),
        "residual": table.residual,
        "method": table.method,
        "non_absorbing_states": [],
        "expected_moves": dict(sorted(table.to_json(rules).items())),
    }
    if args.state:
        state = decode_state(deck, args.state)
        out["state"] = {"encoding": args.state, "expected_moves": table[state]}
    return out


def _check(config: Config, args: argparse.Namespace) -> dict[str, Any]:
    try:
        return graph_report(build_g0(config.rules()))
    except StateSpaceTooLarge as exc:
        raise Refusal(str(exc), {}) from exc


def _cycles(config: Config, args: argparse.Namespace) -> dict[str, Any]:
    det = DeterministicConfig(PickupOrder(config.pickup), config.first_leader)
    report = search_cycles(config.rules(), config.deals, config.seed, det, config.left_size, workers=args.workers)
    return report.to_json()


def _enumerate(config: Config, args: argparse.Namespace) -> dict[str, Any]:
    try:
        return {"states": sum(1 for _ in enumerate_splits(config.deck))}
    except StateSpaceTooLarge as exc:
        raise Refusal(str(exc), {"cards": config.deck.size}) from exc


COMMANDS = {
    "simulate": _simulate,
    "exact": _exact,
    "check": _check,
    "cycles": _cycles,
    "enumerate": _enumerate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bmn", description="Beggar-my-neighbour game analysis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, metavar="PATH")
        cmd.add_argument("--p", type=float)
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--games", type=int)
        cmd.add_argument("--deals", type=int)
        cmd.add_argument("--move-cap", type=int)
        cmd.add_argument("--left-size", type=int)
        cmd.add_argument("--pickup", choices=["played", "reverse"])
        cmd.add_argument("--state", metavar="ENC")
        cmd.add_argument("--bucket-width", type=int)
        cmd.add_argument("--workers", type=int, default=1)
    return parser


_OVERRIDES = ("p", "seed", "games", "deals", "move_cap", "left_size", "pickup")


def _apply_flags(config: Config, args: argparse.Namespace) -> Config:
    changes = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k) is not None}
    if not changes:
        return config
    raw = serialize(dataclasses.replace(config))
    raw.update(changes)
    return config_from_dict(raw)


def _emit(report: dict[str, Any]) -> None:
    sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    started = time.perf_counter()
    report: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "command": {"name": args.command, "argv": argv},
    }
    try:
        config = _apply_flags(parse_config(args.config), args)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"bmn: config error: {msg}", file=sys.stderr)
        report.update(status="invalid_config", errors=exc.errors, wall_time=time.perf_counter() - started)
        _emit(report)
        return 2
    canonical = json.dumps(serialize(config), sort_keys=True).encode()
    report["config_digest"] = hashlib.sha256(canonical).hexdigest()
    try:
        results = COMMANDS[args.command](config, args)
        status, code = "ok", 0
    except Refusal as exc:
        print(f"bmn: refused: {exc}", file=sys.stderr)
        results, status, code = {**exc.results, "reason": str(exc)}, "refused", 3
    except ValueError as exc:
        print(f"bmn: invalid input: {exc}", file=sys.stderr)
        results, status, code = {"reason": str(exc)}, "invalid_input", 2
    report.update(status=status, results=results, wall_time=time.perf_counter() - started)
    _emit(report)
    return code


def main() -> None:
    sys.exit(run())
