"""
Write the JSON inputs used by the command-line walkthrough in run_cli.sh.
"""

from pathlib import Path

from superhedge import binomial_model, counterexample_outer, arbitrage_model
from superhedge.io import save_model, write_json

here = Path(__file__).parent / "data"
here.mkdir(exist_ok=True)

save_model(here / "binomial.json", binomial_model())
save_model(here / "counterexample.json", counterexample_outer())
save_model(here / "arbitrage.json", arbitrage_model(constrained=False))
write_json(here / "call.json", {"values": {"0": 0.0, "u": 3.0, "d": 0.0}})
write_json(here / "p0.json", {"values": {"0": 1.0, "u": 0.0, "d": 0.0}})
print("wrote", sorted(p.name for p in here.glob("*.json")))
