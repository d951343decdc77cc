#!/usr/bin/env python3
"""Multi-label evaluation on polyphonic mixtures at a fixed threshold.

Needs real embeddings: run the embed-adapter over the rendered mixtures and
the class prompts first (see README.md). Reports exact-set accuracy and mean
predicted classes per audio for each polyphony level.
"""

import argparse
import json

from soundproto.evaluation import evaluate_multilabel
from soundproto.profiles import MultiLabelConfig, classify_multilabel, compute_profile
from soundproto.prototypes import load_prototype_set
from soundproto.store import load_store


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mixtures", required=True, help="ATPE store of mixture embeddings")
    ap.add_argument("--protos", required=True, help="prototype store from `prototypes build`")
    ap.add_argument("--truth", required=True,
                    help="JSON mapping mixture id -> list of true class labels")
    ap.add_argument("--threshold", type=float, default=0.5)
    args = ap.parse_args()

    protos = load_prototype_set(args.protos)
    mixtures = load_store(args.mixtures)
    with open(args.truth) as f:
        truth_sets = {k: set(v) for k, v in json.load(f).items()}

    cfg = MultiLabelConfig(threshold=args.threshold)
    preds = {
        r.id: classify_multilabel(compute_profile(r, protos), cfg)
        for r in mixtures
    }
    report = evaluate_multilabel(preds, truth_sets, protos.class_ids)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
