"""Regenerate tests/fixtures/config-cases.json from the service validator.

The browser-side schema must accept exactly the configs the service accepts,
with the same first error path and message.  Rather than trusting two
hand-maintained rule sets to agree, this script runs a case list through the
real validator and freezes the results; the vitest suite replays the file
against the TypeScript port.

Run from the repository root after any change to the config rules:

    python3 frontend/scripts/gen_fixtures.py

Cases where raw JSON distinguishes 3.0 from 3 are deliberately absent:
JSON.parse collapses them, so the client cannot check what it cannot see.
"""

import json
import sys
from pathlib import Path

from gridway.dqn import AgentConfig, ConfigError

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "config-cases.json"


def layer(n, act=None):
    entry = {"num_neurons": n}
    if act is not None:
        entry["activation"] = act
    return entry


CASES = [
    # -- accepted ---------------------------------------------------------
    ("defaults", {}),
    ("full canonical", AgentConfig().to_json()),
    ("burnin alias", {"learning_steps_burnin": 250, "learning_steps_total": 300}),
    ("epsilon alias", {"epsilon_test": 0.25}),
    ("no hidden layers", {"layers": []}),
    ("layer activation defaults to relu", {"layers": [layer(12)]}),
    ("widest sensor", {"lanesSide": 3, "patchesAhead": 64, "patchesBehind": 6}),
    ("narrowest sensor", {"lanesSide": 0, "patchesAhead": 1, "patchesBehind": 0}),
    ("window fills the grid", {"patchesAhead": 50, "patchesBehind": 20}),
    ("temporal window on", {"temporal_window": 4}),
    ("gamma zero", {"gamma": 0}),
    ("gamma near one", {"gamma": 0.99}),
    ("greedy eval epsilon", {"epsilon_test_time": 0}),
    ("noisy eval epsilon", {"epsilon_test_time": 1}),
    ("momentum zero int", {"momentum": 0}),
    ("ten clones", {"other_agents": 10}),
    ("threshold at capacity", {"experience_size": 600, "start_learning_threshold": 600}),
    ("burnin equals total", {"learning_steps_total": 1000, "learning_steps_burning": 1000}),
    ("zero training steps", {"learning_steps_total": 0, "learning_steps_burning": 0}),
    ("all activations", {"layers": [layer(8, "linear"), layer(8, "relu"),
                                    layer(8, "sigmoid"), layer(8, "tanh")]}),
    # -- rejected ---------------------------------------------------------
    ("not an object", 5),
    ("unknown field", {"lanesSide": 2, "patchesAside": 3}),
    ("string int", {"lanesSide": "3"}),
    ("bool int", {"lanesSide": True}),
    ("lanes too wide", {"lanesSide": 4}),
    ("lanes negative", {"lanesSide": -1}),
    ("no rows ahead", {"patchesAhead": 0}),
    ("rows behind negative", {"patchesBehind": -1}),
    ("window too tall", {"patchesAhead": 60, "patchesBehind": 20}),
    ("temporal window negative", {"temporal_window": -1}),
    ("layers not array", {"layers": "big"}),
    ("layer entry not object", {"layers": [5]}),
    ("layer missing neurons", {"layers": [{"activation": "relu"}]}),
    ("layer zero neurons", {"layers": [layer(0)]}),
    ("layer fractional neurons", {"layers": [layer(2.5)]}),
    ("layer bool neurons", {"layers": [layer(True)]}),
    ("unknown activation", {"layers": [layer(8, "swish")]}),
    ("unknown activation later layer", {"layers": [layer(8), layer(8, "gelu")]}),
    ("learning rate zero", {"learning_rate": 0}),
    ("learning rate negative", {"learning_rate": -0.01}),
    ("learning rate string", {"learning_rate": "fast"}),
    ("momentum one", {"momentum": 1}),
    ("momentum negative", {"momentum": -0.1}),
    ("l2 negative", {"l2_decay": -1}),
    ("batch zero", {"batch_size": 0}),
    ("batch fractional", {"batch_size": 1.5}),
    ("gamma one", {"gamma": 1}),
    ("gamma negative", {"gamma": -0.2}),
    ("gamma string", {"gamma": "x"}),
    ("empty replay", {"experience_size": 0}),
    ("epsilon min high", {"epsilon_min": 1.5}),
    ("epsilon test negative", {"epsilon_test_time": -0.1}),
    ("both epsilon names", {"epsilon_test_time": 0.1, "epsilon_test": 0.1}),
    ("both burnin spellings", {"learning_steps_burning": 10, "learning_steps_burnin": 10,
                               "learning_steps_total": 100}),
    ("negative total", {"learning_steps_total": -1}),
    ("burnin past total", {"learning_steps_total": 100, "learning_steps_burning": 200}),
    ("threshold past capacity", {"experience_size": 100, "start_learning_threshold": 200}),
    ("negative clones", {"other_agents": -1}),
    ("too many clones", {"other_agents": 11}),
    ("fractional clones", {"other_agents": 2.5}),
]


def main() -> int:
    out = []
    for name, doc in CASES:
        case = {"name": name, "doc": doc}
        try:
            cfg = AgentConfig.from_json(doc)
            case["ok"] = True
            case["canonical"] = cfg.to_json()
        except ConfigError as e:
            case["ok"] = False
            case["path"] = e.path
            case["message"] = e.reason
        out.append(case)
    accepted = sum(1 for c in out if c["ok"])
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(out, indent=2) + "\n")
    print(f"{OUT}: {accepted} accepted, {len(out) - accepted} rejected")
    return 0


if __name__ == "__main__":
    sys.exit(main())
