"""Bundled example cases.

``ieee13`` is a 13-bus three-phase feeder partitioned into six load blocks
by six switches, with wildfire-risk and vulnerability tables.  The switch
between blocks 1 and 4 carries risk 8; the remaining switch risks (95, 44,
39, 72, 77) are fixture assumptions summing to 327, giving a total system
risk of 854 (block risks 91 + 108 + 46 + 101 + 65 + 108 plus switch risks).

``ieee13_psps`` is the same feeder with demand in blocks 3, 4 and 6 changed
to 10 / 405.2 / 260 kW for studying a widespread shutoff in which the
substation itself is de-energized.  When that scenario also forces the
substation feed open, the dark source-side block can be counted as a
seventh block; the block tables here always report the six load blocks.

``reduction15`` is a 15-bus feeder with three distribution transformers and
secondary circuits, used to exercise feeder reduction (reduces to 6 buses).
"""

from importlib import resources

CASES = ("ieee13", "ieee13_psps", "reduction15")


def case_path(case, filename="network.json"):
    """Filesystem path of a bundled data file."""
    if case not in CASES:
        raise KeyError(f"unknown bundled case {case!r}; have {CASES}")
    ref = resources.files(__name__).joinpath(case, filename)
    if not ref.is_file():
        raise FileNotFoundError(f"{case}/{filename} is not part of the bundle")
    return str(ref)


def case_files(case):
    """(network, risk csv or None, svi csv or None) paths for a bundled case."""
    net = case_path(case, "network.json")
    out = [net]
    for name in ("risk.csv", "svi.csv"):
        try:
            out.append(case_path(case, name))
        except FileNotFoundError:
            out.append(None)
    return tuple(out)
