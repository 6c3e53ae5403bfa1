#!/usr/bin/env python3
"""Turn the raw KDD Cup 1999 connection records into the CSV layout the
mimgan loader reads: a header row, numeric columns only, and a 0/1 `label`
column. See docs/kddcup99.md for the full recipe."""

import argparse
import csv
import gzip
import math
import sys

FEATURES = [
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land",
    "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in", "num_compromised",
    "root_shell", "su_attempted", "num_root", "num_file_creations", "num_shells",
    "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
    "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
    "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
    "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
    "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate",
]
SYMBOLIC = {"protocol_type", "service", "flag"}
HEAVY_TAILED = {"duration", "src_bytes", "dst_bytes", "count", "srv_count"}
# Constant over the whole corpus; it only adds a dead column.
DROPPED = {"num_outbound_cmds"}


def read_records(path):
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rt", newline="") as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            if not row:
                continue
            if len(row) != len(FEATURES) + 1:
                sys.exit(f"{path}:{line_no}: expected {len(FEATURES) + 1} fields, got {len(row)}")
            yield dict(zip(FEATURES, row)), row[-1].rstrip(".")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("raw", help="kddcup.data or kddcup.data_10_percent (optionally .gz)")
    ap.add_argument("--train-out", required=True, help="normal-only training CSV")
    ap.add_argument("--test-out", required=True, help="labeled test CSV")
    ap.add_argument("--train-rows", type=int, default=20000)
    ap.add_argument("--test-rows", type=int, default=20000)
    ap.add_argument("--every", type=int, default=1, help="keep every k-th record (order preserved)")
    ap.add_argument("--one-hot", default="protocol_type",
                    help="comma list of symbolic fields to one-hot encode; the others are dropped")
    args = ap.parse_args()

    encoded = [s for s in args.one_hot.split(",") if s]
    unknown = set(encoded) - SYMBOLIC
    if unknown:
        sys.exit(f"--one-hot: not symbolic fields: {', '.join(sorted(unknown))}")

    records = [r for i, r in enumerate(read_records(args.raw)) if i % args.every == 0]
    categories = {f: sorted({rec[f] for rec, _ in records}) for f in encoded}

    numeric = [f for f in FEATURES if f not in SYMBOLIC and f not in DROPPED]
    header = numeric + [f"{f}={c}" for f in encoded for c in categories[f]] + ["label"]

    def encode(rec, name):
        values = []
        for f in numeric:
            v = float(rec[f])
            values.append(math.log1p(v) if f in HEAVY_TAILED else v)
        for f in encoded:
            values.extend(1.0 if rec[f] == c else 0.0 for c in categories[f])
        return values + [0 if name == "normal" else 1]

    # Training takes the first normal records; the test split is the stream
    # that follows, attacks included, in its original order.
    train, test, cut = [], [], len(records)
    for i, (rec, name) in enumerate(records):
        if name == "normal":
            train.append(encode(rec, name))
            if len(train) == args.train_rows:
                cut = i + 1
                break
    for rec, name in records[cut:cut + args.test_rows]:
        test.append(encode(rec, name))

    for path, rows in ((args.train_out, train), (args.test_out, test)):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            w.writerows(rows)
    attacks = sum(r[-1] for r in test)
    print(f"train: {len(train)} rows, test: {len(test)} rows ({attacks} attack), {len(header) - 1} variables")


if __name__ == "__main__":
    main()
