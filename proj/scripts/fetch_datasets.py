#!/usr/bin/env python3
"""Materialize the benchmark datasets as CSV files under datasets/.

Breast Cancer Wisconsin (diagnostic) comes from the copy bundled with
scikit-learn, so it needs no network. Connectionist Bench (Sonar) is fetched
from the UCI repository when reachable; pass --sonar-file to convert a local
copy of ``sonar.all-data`` instead.

After writing, the checksums in benchmarks/manifest.json are refreshed.
"""

import argparse
import csv
import json
import pathlib
import sys
import urllib.request

ROOT = pathlib.Path(__file__).resolve().parent.parent
SONAR_URL = (
    "https://archive.ics.uci.edu/ml/machine-learning-databases/"
    "undocumented/connectionist-bench/sonar/sonar.all-data"
)


def fnv1a64(data: bytes) -> str:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def write_wbc(out_dir: pathlib.Path) -> pathlib.Path:
    from sklearn.datasets import load_breast_cancer

    ds = load_breast_cancer()
    path = out_dir / "wbc.csv"
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([name.replace(" ", "_") for name in ds.feature_names] + ["diagnosis"])
        for row, label in zip(ds.data, ds.target):
            w.writerow([repr(float(v)) for v in row] + [ds.target_names[label]])
    return path


def write_sonar(out_dir: pathlib.Path, local: pathlib.Path | None) -> pathlib.Path | None:
    try:
        if local is not None:
            text = local.read_text()
        else:
            with urllib.request.urlopen(SONAR_URL, timeout=30) as resp:
                text = resp.read().decode()
    except Exception as exc:  # network errors, missing file
        print(f"sonar: not available ({exc})", file=sys.stderr)
        return None
    rows = [r for r in csv.reader(text.splitlines()) if r]
    if len(rows) != 208 or any(len(r) != 61 for r in rows):
        print("sonar: unexpected shape, skipping", file=sys.stderr)
        return None
    path = out_dir / "sonar.csv"
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([f"band_{i}" for i in range(60)] + ["object"])
        w.writerows(rows)
    return path


def refresh_manifest(paths: dict[str, pathlib.Path]) -> None:
    manifest_path = ROOT / "benchmarks" / "manifest.json"
    manifest = json.loads(manifest_path.read_text())
    for entry in manifest["datasets"]:
        p = paths.get(entry["name"])
        if p is not None:
            entry["checksum"] = fnv1a64(p.read_bytes())
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=pathlib.Path, default=ROOT / "datasets")
    parser.add_argument("--sonar-file", type=pathlib.Path, default=None)
    parser.add_argument("--no-manifest", action="store_true")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    written = {"wbc": write_wbc(args.out)}
    sonar = write_sonar(args.out, args.sonar_file)
    if sonar is not None:
        written["connectionist"] = sonar
    for name, path in written.items():
        print(f"{name}: {path} fnv1a64={fnv1a64(path.read_bytes())}")
    if not args.no_manifest:
        refresh_manifest(written)
    return 0


if __name__ == "__main__":
    sys.exit(main())
