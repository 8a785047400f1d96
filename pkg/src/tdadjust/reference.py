"""Published Monte Carlo standard deviations used by ``tdadjust reproduce``.

Values are indexed by canonical set number (1-based).  Both tables target
``E[Y^(1,1)]`` with ``n = 1000``.
"""

import hashlib
from importlib import resources

TABLE1_SD = (
    0.125, 0.106, 0.110, 0.118, 0.099, 0.101, 0.123, 0.104, 0.106, 0.117, 0.099, 0.106,
    0.107, 0.088, 0.095, 0.123, 0.104, 0.106, 0.120, 0.100, 0.105, 0.112, 0.093, 0.100,
)  # fmt: skip

TABLE2_SD = {
    "example2_strong_HA1": (
        0.146, 0.175, 0.214, 0.154, 0.165, 0.191, 0.165, 0.148, 0.177, 0.148, 0.201, 0.139, 0.158,
        0.143, 0.165, 0.191, 0.165, 0.148, 0.177, 0.148, 0.128, 0.159, 0.136, 0.119, 0.140, 0.123,
    ),
    "example2_strong_HRQ": (
        0.199, 0.222, 0.248, 0.203, 0.207, 0.229, 0.207, 0.173, 0.199, 0.173, 0.220, 0.194, 0.213,
        0.197, 0.208, 0.229, 0.208, 0.174, 0.199, 0.174, 0.164, 0.191, 0.168, 0.157, 0.180, 0.161,
    ),
}  # fmt: skip

TABLES = {
    "table1": {"graph": "example1", "scms": {"example1": TABLE1_SD}, "reps": 10_000},
    "table2": {"graph": "example2", "scms": TABLE2_SD, "reps": 20_000},
}

REGIME = (1, 1)
N = 1000
TOLERANCE = 0.01


def source_digest() -> str:
    """SHA-256 over the package sources and bundled graphs.

    Stored with reproduction results so cached runs can be matched to code.
    """
    root = resources.files("tdadjust")
    h = hashlib.sha256()
    for base in (root, root / "graphs"):
        for item in sorted(base.iterdir(), key=lambda t: t.name):
            if item.is_file() and item.name.endswith((".py", ".graph")):
                h.update(item.name.encode())
                h.update(item.read_bytes())
    return h.hexdigest()
