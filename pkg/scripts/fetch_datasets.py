#!/usr/bin/env python3
"""Download the public benchmark networks and convert them to edge lists.

Writes ``internet.edges`` (as-22july06) and ``email-eu.edges`` (email-EuAll)
into the target directory as single-layer ``layer u v`` lists with 1-based
node ids.  Direction and weights are dropped; the loader symmetrises and
deduplicates.  Point ``MPCORE_DATA_DIR`` at the directory afterwards.

    python scripts/fetch_datasets.py [--dest DIR]
"""

import argparse
import io
import os
import sys
import tarfile
import urllib.request
from pathlib import Path

import scipy.io
import scipy.sparse as sp

BASE = "https://suitesparse-collection-website.herokuapp.com/MM"
DATASETS = {
    "internet.edges": "Newman/as-22july06",
    "email-eu.edges": "SNAP/email-EuAll",
}


def fetch_matrix(group_name):
    name = group_name.split("/")[1]
    url = f"{BASE}/{group_name}.tar.gz"
    print(f"downloading {url}", file=sys.stderr)
    with urllib.request.urlopen(url, timeout=120) as resp:
        blob = resp.read()
    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:gz") as tar:
        member = tar.getmember(f"{name}/{name}.mtx")
        return sp.coo_matrix(scipy.io.mmread(tar.extractfile(member)))


def write_edges(matrix, path):
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w") as fh:
        fh.write(f"# {matrix.shape[0]} nodes, source nnz {matrix.nnz}\n")
        for u, v in zip(matrix.row.tolist(), matrix.col.tolist()):
            fh.write(f"1 {u + 1} {v + 1}\n")
    os.replace(tmp, path)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dest", default=os.environ.get("MPCORE_DATA_DIR", "data"))
    args = parser.parse_args(argv)
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    for filename, group_name in DATASETS.items():
        target = dest / filename
        if target.exists():
            print(f"{target} exists, skipping", file=sys.stderr)
            continue
        write_edges(fetch_matrix(group_name), target)
        print(f"wrote {target}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
