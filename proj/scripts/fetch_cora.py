#!/usr/bin/env python3
"""Download the Cora citation dataset and write train/test CSVs for tiam.

Each output row is the 1433 binary word features followed by an integer
class label. The split is a seeded shuffle with a configurable train share.
"""

import argparse
import io
import random
import tarfile
import urllib.request
from pathlib import Path

URL = "https://linqs-data.soe.ucsc.edu/public/lbc/cora.tgz"


def read_content(archive: bytes):
    with tarfile.open(fileobj=io.BytesIO(archive), mode="r:gz") as tar:
        member = next(m for m in tar.getmembers() if m.name.endswith("cora.content"))
        text = tar.extractfile(member).read().decode("utf-8")
    rows = []
    for line in text.splitlines():
        parts = line.split("\t")
        if len(parts) < 3:
            continue
        rows.append((parts[1:-1], parts[-1]))
    return rows


def write_csv(path: Path, rows, label_ids):
    with path.open("w", newline="\n") as f:
        for features, label in rows:
            f.write(",".join(features) + "," + str(label_ids[label]) + "\n")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="data/cora", help="output directory")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--url", default=URL)
    args = p.parse_args()

    with urllib.request.urlopen(args.url) as resp:
        rows = read_content(resp.read())
    label_ids = {name: i for i, name in enumerate(sorted({label for _, label in rows}))}

    random.Random(args.seed).shuffle(rows)
    n_train = int(args.train_fraction * len(rows))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "train.csv", rows[:n_train], label_ids)
    write_csv(out / "test.csv", rows[n_train:], label_ids)
    print(f"{len(rows)} papers, {len(rows[0][0])} features, {len(label_ids)} classes -> {out}")
    print(f"train {n_train}, test {len(rows) - n_train}")


if __name__ == "__main__":
    main()
