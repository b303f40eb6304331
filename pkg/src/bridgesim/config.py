"""Scenario configuration files (INI key-value format).

Sections and keys, all optional::

    [run]         algorithm (dibadawn|chaudhuri), seed
    [topology]    kind (random-geometric|two-cluster|ring|line), n, area ("W H"),
                  comm_range, bridge_length, nodes_per_cluster ("L R"), radius,
                  guard, vertical_extent, isolation_range (number|none), spacing
    [schedule]    warmup, eval_duration, period, start_probability,
                  initial_delay_max, snapshot_period
    [channel]     mode (shadowing|lossless), max_range (number|none), pathloss_exp,
                  std_db, margin_db, max_tx_time, unicast_attempts
    [protocol]    initial_ttl, max_traversal_time, jitter_divisor,
                  backward_slot_time, history_size, asymmetry_guard,
                  backward_jitter, rule, articulation_rule, trust_threshold
    [evaluation]  etx_thresholds ("10 100"), rules ("none simple-majority"),
                  detected_twice
    [sweep]       parameter ("section.key"), values, repetitions, name

Times are in seconds, distances in abstract units.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from typing import Optional

from .netsim import ChannelConfig
from .protocol import DibadawnConfig
from .radio import ShadowingParams
from .scenarios import (DEFAULT_RANGE, ScheduleConfig, Topology, TwoClusterParams, line,
                        random_geometric, ring, two_cluster_bridge)
from .voting import Rule, RuleConfig

SECTIONS = ("run", "topology", "schedule", "channel", "protocol", "evaluation", "sweep")

DEFAULT_AREA = (4000.0, 4000.0)

KNOWN_KEYS = {
    "run": {"algorithm", "seed"},
    "topology": {"kind", "n", "area", "comm_range", "bridge_length", "nodes_per_cluster", "radius",
                 "guard", "vertical_extent", "isolation_range", "spacing", "max_retries"},
    "schedule": {"warmup", "eval_duration", "period", "start_probability", "initial_delay_max",
                 "snapshot_period"},
    "channel": {"mode", "max_range", "pathloss_exp", "std_db", "margin_db", "max_tx_time",
                "unicast_attempts"},
    "protocol": {"initial_ttl", "max_traversal_time", "jitter_divisor", "backward_slot_time",
                 "history_size", "asymmetry_guard", "backward_jitter", "rule", "articulation_rule",
                 "trust_threshold"},
    "evaluation": {"etx_thresholds", "rules", "detected_twice"},
    "sweep": {"parameter", "values", "repetitions", "name", "base_seed"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    """Flat ``section -> key -> raw string`` store with typed accessors."""

    values: dict[str, dict[str, str]] = field(default_factory=lambda: {s: {} for s in SECTIONS})

    @classmethod
    def from_text(cls, text: str) -> "ScenarioConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        cfg = cls()
        errors = []
        for section in cp.sections():
            if section not in SECTIONS:
                errors.append(f"unknown section [{section}]")
                continue
            for key, value in cp.items(section):
                if key not in KNOWN_KEYS[section]:
                    errors.append(f"unknown key {section}.{key}")
                cfg.values[section][key] = value.strip()
        if errors:
            raise ConfigError("; ".join(errors))
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def to_text(self) -> str:
        out = []
        for s in SECTIONS:
            if self.values.get(s):
                out.append(f"[{s}]")
                out.extend(f"{k} = {v}" for k, v in sorted(self.values[s].items()))
                out.append("")
        return "\n".join(out)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:12]

    def with_value(self, dotted: str, value: str) -> "ScenarioConfig":
        section, _, key = dotted.partition(".")
        if section not in SECTIONS or key not in KNOWN_KEYS[section]:
            raise ConfigError(f"unknown parameter {dotted!r}")
        vals = {s: dict(kv) for s, kv in self.values.items()}
        vals[section][key] = str(value)
        return ScenarioConfig(vals)

    # -- typed access -----------------------------------------------------

    def _raw(self, section: str, key: str) -> Optional[str]:
        v = self.values.get(section, {}).get(key)
        return None if v is None or v == "" else v

    def get_float(self, section, key, default=None):
        v = self._raw(section, key)
        if v is None:
            return default
        if v.lower() in ("none", "inf", "infinite"):
            return None if v.lower() == "none" else float("inf")
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected a number, got {v!r}") from None

    def get_int(self, section, key, default=None):
        v = self._raw(section, key)
        if v is None:
            return default
        try:
            return int(v)
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected an integer, got {v!r}") from None

    def get_bool(self, section, key, default=False):
        v = self._raw(section, key)
        if v is None:
            return default
        low = v.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{section}.{key}: expected a boolean, got {v!r}")

    def get_str(self, section, key, default=None):
        v = self._raw(section, key)
        return default if v is None else v

    def get_list(self, section, key, default=()):
        v = self._raw(section, key)
        return list(default) if v is None else v.replace(",", " ").split()

    def get_floats(self, section, key, default=()):
        try:
            return [float(x) for x in self.get_list(section, key, default)]
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected numbers") from None

    # -- builders ---------------------------------------------------------

    def validate(self) -> None:
        """Build every component once so errors surface before a run starts."""
        errors = []
        for fn in (self.schedule, self.channel, self.protocol, self.thresholds, self.rules):
            try:
                fn()
            except (ValueError, KeyError, TypeError) as exc:
                errors.append(str(exc))
        kind = self.get_str("topology", "kind", "random-geometric")
        if kind not in ("random-geometric", "two-cluster", "ring", "line"):
            errors.append(f"topology.kind: unknown kind {kind!r}")
        if self.algorithm() not in ("dibadawn", "chaudhuri"):
            errors.append(f"run.algorithm: unknown algorithm {self.algorithm()!r}")
        if errors:
            raise ConfigError("; ".join(errors))

    def algorithm(self) -> str:
        return self.get_str("run", "algorithm", "dibadawn")

    def seed(self, default: int = 0) -> int:
        return self.get_int("run", "seed", default)

    def topology(self, seed: int) -> Topology:
        kind = self.get_str("topology", "kind", "random-geometric")
        if kind == "random-geometric":
            area = self.get_floats("topology", "area", DEFAULT_AREA)
            if len(area) != 2:
                raise ConfigError("topology.area: expected 'W H'")
            return random_geometric(self.get_int("topology", "n", 175), (area[0], area[1]),
                                    self.get_float("topology", "comm_range", DEFAULT_RANGE), seed,
                                    max_retries=self.get_int("topology", "max_retries", 5000))
        if kind == "two-cluster":
            counts = [int(x) for x in self.get_list("topology", "nodes_per_cluster", ("10", "10"))]
            d = TwoClusterParams()
            p = TwoClusterParams(
                bridge_length=self.get_float("topology", "bridge_length", d.bridge_length),
                nodes_per_cluster=(counts[0], counts[1]),
                radius=self.get_float("topology", "radius", d.radius),
                guard=self.get_float("topology", "guard", d.guard),
                vertical_extent=self.get_float("topology", "vertical_extent", d.vertical_extent),
                isolation_range=self.get_float("topology", "isolation_range", d.isolation_range),
            )
            return two_cluster_bridge(p, seed)
        spacing = self.get_float("topology", "spacing", 100.0)
        n = self.get_int("topology", "n", 21)
        return ring(n, spacing) if kind == "ring" else line(n, spacing)

    def schedule(self) -> ScheduleConfig:
        d = ScheduleConfig()
        return ScheduleConfig(**{k: self.get_float("schedule", k, getattr(d, k))
                                 for k in KNOWN_KEYS["schedule"]})

    def channel(self) -> ChannelConfig:
        d = ShadowingParams()
        raw_range = self._raw("channel", "max_range")
        max_range = DEFAULT_RANGE if raw_range is None else self.get_float("channel", "max_range")
        sh = ShadowingParams(
            pathloss_exp=self.get_float("channel", "pathloss_exp", d.pathloss_exp),
            std_db=self.get_float("channel", "std_db", d.std_db),
            margin_db=self.get_float("channel", "margin_db", d.margin_db),
            max_range=max_range,
        )
        return ChannelConfig(mode=self.get_str("channel", "mode", "shadowing"), shadowing=sh,
                             max_tx_time=self.get_float("channel", "max_tx_time", 0.002),
                             unicast_attempts=self.get_int("channel", "unicast_attempts", 7))

    def _rule(self, key: str) -> Optional[RuleConfig]:
        name = self.get_str("protocol", key)
        if name is None or name.lower() == "none":
            return None
        return RuleConfig(Rule.parse(name), k=self.get_int("protocol", "history_size", 5),
                          trust_threshold=self.get_float("protocol", "trust_threshold", 0.9))

    def protocol(self) -> DibadawnConfig:
        d = DibadawnConfig()
        ch = self.channel()
        return DibadawnConfig(
            initial_ttl=self.get_int("protocol", "initial_ttl", d.initial_ttl),
            max_traversal_time=self.get_float("protocol", "max_traversal_time", d.max_traversal_time),
            jitter_divisor=self.get_float("protocol", "jitter_divisor", d.jitter_divisor),
            max_tx_time=ch.max_tx_time,
            unicast_attempts=ch.unicast_attempts,
            backward_slot_time=self.get_float("protocol", "backward_slot_time", None),
            history_size=self.get_int("protocol", "history_size", d.history_size),
            asymmetry_guard=self.get_bool("protocol", "asymmetry_guard", True),
            backward_jitter=self.get_bool("protocol", "backward_jitter", True),
            voting=self._rule("rule"),
            articulation_voting=self._rule("articulation_rule"),
        )

    def thresholds(self) -> list[float]:
        ths = self.get_floats("evaluation", "etx_thresholds", ("10", "100"))
        if not ths or any(not t > 0 for t in ths):
            raise ConfigError("evaluation.etx_thresholds: need positive numbers")
        return ths

    def rules(self) -> list[Optional[RuleConfig]]:
        out = []
        k = self.get_int("protocol", "history_size", 5)
        trust = self.get_float("protocol", "trust_threshold", 0.9)
        for name in self.get_list("evaluation", "rules", ("none",)):
            out.append(None if name.lower() == "none" else RuleConfig(Rule.parse(name), k=k, trust_threshold=trust))
        return out

    def detected_twice(self) -> bool:
        return self.get_bool("evaluation", "detected_twice", True)


def rule_name(rule: Optional[RuleConfig]) -> str:
    return "none" if rule is None else rule.rule.value

