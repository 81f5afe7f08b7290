#!/usr/bin/env python3
"""Convert the public Instacart CSVs into the long orders format read by `mmrnn`.

Inputs (from the Instacart download): orders.csv, order_products__prior.csv,
products.csv. Writes <out>.orders.csv and, at product level, <out>.aisles.csv
(item_id,aisle_id) for --rare-threshold aggregation.

  --level aisle    item_id is the aisle id (134 items)
  --level product  item_id is the product id
"""

import argparse
import csv
import random
import sys
from collections import defaultdict


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--instacart", required=True, help="directory holding the Instacart CSVs")
    ap.add_argument("--out", required=True, help="output path stem")
    ap.add_argument("--level", choices=["aisle", "product"], default="aisle")
    ap.add_argument("--max-users", type=int, default=0, help="keep a random subset of users (0 keeps all)")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    root = args.instacart.rstrip("/")

    aisle_of = {}
    with open(f"{root}/products.csv", newline="") as f:
        for r in csv.DictReader(f):
            aisle_of[int(r["product_id"])] = int(r["aisle_id"])

    # order_id -> (user, order_number, days)
    orders = {}
    users = set()
    with open(f"{root}/orders.csv", newline="") as f:
        for r in csv.DictReader(f):
            if r["eval_set"] != "prior":
                continue
            days = r["days_since_prior_order"]
            user = int(r["user_id"])
            orders[int(r["order_id"])] = (user, int(r["order_number"]), "" if days == "" else str(int(float(days))))
            users.add(user)

    if args.max_users and args.max_users < len(users):
        keep = set(random.Random(args.seed).sample(sorted(users), args.max_users))
    else:
        keep = users

    baskets = defaultdict(lambda: defaultdict(int))
    with open(f"{root}/order_products__prior.csv", newline="") as f:
        for r in csv.DictReader(f):
            oid = int(r["order_id"])
            meta = orders.get(oid)
            if meta is None or meta[0] not in keep:
                continue
            pid = int(r["product_id"])
            item = aisle_of[pid] if args.level == "aisle" else pid
            baskets[oid][item] += 1

    rows = []
    for oid, items in baskets.items():
        user, number, days = orders[oid]
        for item, count in items.items():
            rows.append((user, number, days, item, count))
    rows.sort(key=lambda r: (r[0], r[1], r[3]))

    with open(f"{args.out}.orders.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["group_id", "order_index", "days_since_prior", "item_id", "count"])
        w.writerows(rows)

    if args.level == "product":
        with open(f"{args.out}.aisles.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["item_id", "aisle_id"])
            for pid in sorted(aisle_of):
                w.writerow([pid, aisle_of[pid]])

    print(f"{len(keep)} users, {len(baskets)} orders, {len(rows)} rows -> {args.out}.orders.csv", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
