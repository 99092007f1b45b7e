"""Write a deterministic synthetic LOBSTER message/orderbook pair.

The book is a dict of price -> size per side. Every event stays within a few
ticks of the best quotes so the whole stream is classifiable.

    python3 make_synthetic_lobster.py [n_rows] [seed]
"""
import csv
import sys
from pathlib import Path

import numpy as np

UNIT = 100  # one cent in LOBSTER price units
LEVELS = 5
EMPTY_ASK, EMPTY_BID = 9_999_999_999, -9_999_999_999


def book_row(bids, asks):
    a = sorted(asks)[:LEVELS]
    b = sorted(bids, reverse=True)[:LEVELS]
    row = []
    for i in range(LEVELS):
        row += [a[i], asks[a[i]]] if i < len(a) else [EMPTY_ASK, 0]
        row += [b[i], bids[b[i]]] if i < len(b) else [EMPTY_BID, 0]
    return row


def generate(n=200, seed=11):
    rng = np.random.default_rng(seed)
    bids = {1_000_000 - UNIT * k: int(rng.integers(50, 300)) for k in (0, 1, 2, 4, 5)}
    asks = {1_000_200 + UNIT * k: int(rng.integers(50, 300)) for k in (0, 1, 3, 4, 6)}
    t, oid = 34_200.0, 1000
    msgs, books = [], []
    while len(msgs) < n:
        t = round(t + float(rng.exponential(0.5)) + 1e-4, 4)
        side = "bid" if rng.random() < 0.5 else "ask"
        own, sgn, direc = (bids, -1, 1) if side == "bid" else (asks, 1, -1)
        best_bid, best_ask = max(bids), min(asks)
        best = best_bid if side == "bid" else best_ask
        spread = (best_ask - best_bid) // UNIT
        u = rng.random()
        size = int(rng.integers(1, 60))
        if u < 0.15 and spread > 1:
            # improve inside the spread
            price = best + sgn * -UNIT * int(rng.integers(1, spread))
            own[price] = own.get(price, 0) + size
            kind = 1
        elif u < 0.55:
            price = best + sgn * UNIT * int(rng.integers(0, 4))
            own[price] = own.get(price, 0) + size
            kind = 1
        elif u < 0.8:
            price = sorted(own, key=lambda p: sgn * p)[int(rng.integers(0, min(3, len(own))))]
            if own[price] <= size and len(own) <= 3:
                continue
            size = min(size, own[price])
            kind = 3 if size == own[price] else 2
            own[price] -= size
            if own[price] == 0:
                del own[price]
        else:
            price = best
            if own[price] <= size and len(own) <= 3:
                continue
            size = min(size, own[price])
            own[price] -= size
            if own[price] == 0:
                del own[price]
            kind = 4
        oid += 1
        msgs.append([f"{t:.4f}", kind, oid, size, price, direc])
        books.append(book_row(bids, asks))
    return msgs, books


def main(argv):
    n = int(argv[1]) if len(argv) > 1 else 200
    seed = int(argv[2]) if len(argv) > 2 else 11
    here = Path(__file__).parent
    msgs, books = generate(n, seed)
    for name, rows in (("synthetic_message.csv", msgs), ("synthetic_orderbook.csv", books)):
        with open(here / name, "w", newline="") as f:
            csv.writer(f, lineterminator="\n").writerows(rows)


if __name__ == "__main__":
    main(sys.argv)
