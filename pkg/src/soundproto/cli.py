"""Command-line entry point. Subcommands communicate only via files, so
partial pipelines are scriptable and cacheable. All JSON outputs are
canonical (sorted keys, no timestamps); timestamps go to a separate run log.
"""

from __future__ import annotations

import datetime
import functools
import json
import os
import sys

import click
import numpy as np

from . import config as config_mod
from . import evaluation as eval_mod
from . import oracle as oracle_mod
from . import profiles as profiles_mod
from . import prototypes as proto_mod
from . import soundscape as scape_mod
from .errors import SoundProtoError
from .store import (
    MODALITY_AUDIO,
    MODALITY_TEXT,
    Embedding,
    EmbeddingSet,
    load_store,
    save_store,
)


def _fail(exc: Exception, created_paths: list) -> None:
    for path in created_paths:
        try:
            if os.path.isfile(path):
                os.remove(path)
        except OSError:
            pass
    payload = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(payload, sort_keys=True), err=True)
    sys.exit(1)


def _write_json(obj, path, created: list) -> None:
    created.append(path)
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _write_run_log(output_dir: str, command: str) -> None:
    # Timestamps live here only; all other outputs are deterministic.
    with open(os.path.join(output_dir, "run.log"), "a") as f:
        f.write(f"{datetime.datetime.now().isoformat()} {command}\n")


def guarded(fn):
    """Convert SoundProtoError into a structured stderr message, nonzero
    exit, and removal of partial outputs."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        created: list = []
        try:
            return fn(*args, created=created, **kwargs)
        except (SoundProtoError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            _fail(exc, created)

    return wrapper


@click.group()
@click.option("--threads", type=int, default=1, show_default=True,
              help="Cap on internal data parallelism (results independent of N).")
@click.pass_context
def main(ctx, threads):
    """Prototype-based zero-shot sound classification toolkit."""
    if threads < 1:
        raise click.BadParameter("--threads must be >= 1")
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads


# --------------------------------------------------------------------------
# store


@main.group()
def store():
    """Embedding store utilities."""


@store.command("inspect")
@click.argument("path", type=click.Path(exists=True))
@guarded
def store_inspect(path, created):
    es = load_store(path)
    by_modality = {}
    by_label = {}
    for r in es:
        by_modality[r.modality] = by_modality.get(r.modality, 0) + 1
        if r.label:
            by_label[r.label] = by_label.get(r.label, 0) + 1
    info = {
        "dim": es.dim,
        "records": len(es),
        "by_modality": by_modality,
        "by_label": by_label,
        "vocabulary": list(es.vocabulary),
    }
    click.echo(json.dumps(info, indent=2, sort_keys=True))


# --------------------------------------------------------------------------
# oracle


@main.group()
def oracle():
    """Synthetic embedding generation."""


@oracle.command("gen")
@click.option("--classes", "n_classes", type=int, default=10, show_default=True)
@click.option("--dim", type=int, default=64, show_default=True)
@click.option("--noise-sigma", type=float, default=0.1, show_default=True)
@click.option("--gap", "gap_magnitude", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--samples-per-class", type=int, default=50, show_default=True)
@click.option("--bg-recordings", type=int, default=10, show_default=True,
              help="Background recordings generated per class.")
@click.option("--mixtures", type=int, default=200, show_default=True)
@click.option("--fg-weight", type=float, default=0.7, show_default=True)
@click.option("--bg-weight", type=float, default=0.3, show_default=True)
@click.option("--output-dir", type=click.Path(), required=True)
@guarded
def oracle_gen(n_classes, dim, noise_sigma, gap_magnitude, seed,
               samples_per_class, bg_recordings, mixtures,
               fg_weight, bg_weight, output_dir, created):
    """Generate labeled audio, text prompts, background recordings, and
    foreground/background mixtures with truth manifests."""
    os.makedirs(output_dir, exist_ok=True)
    cfg = oracle_mod.OracleConfig(
        n_classes=n_classes, dim=dim, noise_sigma=noise_sigma,
        gap_magnitude=gap_magnitude, seed=seed,
    )
    names = cfg.class_names()

    labeled = [
        oracle_mod.gen_audio_embedding(k, cfg, i)
        for k in range(n_classes)
        for i in range(samples_per_class)
    ]
    texts = [oracle_mod.gen_text_embedding(k, cfg) for k in range(n_classes)]
    bg_audio = [
        oracle_mod.gen_audio_embedding(k, cfg, 10_000 + i)
        for k in range(n_classes)
        for i in range(bg_recordings)
    ]
    # Background recordings get distinct ids from the labeled pool.
    bg_audio = [
        Embedding(id=f"bg-{r.label}-{i}", modality=r.modality,
                  vector=r.vector, label=r.label)
        for i, r in enumerate(bg_audio)
    ]

    rng = np.random.default_rng(np.random.SeedSequence([seed, 99]))
    mixture_records = []
    truth_fg = {}
    truth_bg = {}
    for i in range(mixtures):
        fg_class = int(rng.integers(n_classes))
        bg_class = int((fg_class + 1 + rng.integers(n_classes - 1)) % n_classes)
        e = oracle_mod.gen_mixture_embedding(
            [(fg_class, fg_weight), (bg_class, bg_weight)], cfg, 20_000 + i
        )
        e = Embedding(id=f"mix-{i:05d}", modality=e.modality, vector=e.vector)
        mixture_records.append(e)
        truth_fg[e.id] = names[fg_class]
        truth_bg[e.id] = names[bg_class]

    paths = {
        "labeled_audio": os.path.join(output_dir, "labeled_audio.atpe"),
        "text_prompts": os.path.join(output_dir, "text_prompts.atpe"),
        "bg_audio": os.path.join(output_dir, "bg_audio.atpe"),
        "mixtures": os.path.join(output_dir, "mixtures.atpe"),
    }
    created.extend(paths.values())
    save_store(EmbeddingSet(dim, labeled), paths["labeled_audio"])
    save_store(EmbeddingSet(dim, texts), paths["text_prompts"])
    save_store(EmbeddingSet(dim, bg_audio), paths["bg_audio"])
    save_store(EmbeddingSet(dim, mixture_records), paths["mixtures"])
    _write_json(truth_fg, os.path.join(output_dir, "truth_foreground.json"), created)
    _write_json(truth_bg, os.path.join(output_dir, "truth_background.json"), created)
    _write_json(
        {
            "n_classes": n_classes, "dim": dim, "noise_sigma": noise_sigma,
            "gap_magnitude": gap_magnitude, "seed": seed,
            "samples_per_class": samples_per_class,
            "bg_recordings": bg_recordings, "mixtures": mixtures,
            "fg_weight": fg_weight, "bg_weight": bg_weight,
        },
        os.path.join(output_dir, "oracle_config.json"),
        created,
    )
    _write_run_log(output_dir, "oracle gen")
    click.echo(json.dumps({"output_dir": output_dir, "mixtures": mixtures},
                          sort_keys=True))


# --------------------------------------------------------------------------
# prototypes


@main.group("prototypes")
def prototypes_group():
    """Prototype construction."""


@prototypes_group.command("build")
@click.option("--mode", type=click.Choice(["text", "tgap", "supervised"]),
              required=True)
@click.option("--text-store", type=click.Path(exists=True),
              help="Labeled text prompt embeddings (text/tgap modes).")
@click.option("--audio-store", type=click.Path(exists=True),
              help="Labeled audio embeddings (supervised mode).")
@click.option("--pool", type=click.Path(exists=True),
              help="Unlabeled audio pool (tgap mode).")
@click.option("--tgap-n", type=int, default=proto_mod.DEFAULT_TGAP_N,
              show_default=True)
@click.option("--out", type=click.Path(), required=True)
@guarded
def prototypes_build(mode, text_store, audio_store, pool, tgap_n, out, created):
    if mode in ("text", "tgap"):
        if not text_store:
            raise ValueError(f"--text-store is required for mode {mode!r}")
        texts = load_store(text_store)
        protos = []
        for cls in texts.vocabulary:
            members = [r for r in texts if r.label == cls]
            anchor = proto_mod.build_text_anchor(cls, members)
            if mode == "tgap":
                if not pool:
                    raise ValueError("--pool is required for mode 'tgap'")
                pool_set = load_store(pool)
                anchor = proto_mod.build_tgap_prototype(
                    anchor, pool_set, proto_mod.TgapConfig(tgap_n)
                )
            protos.append(anchor)
    else:
        if not audio_store:
            raise ValueError("--audio-store is required for mode 'supervised'")
        labeled = load_store(audio_store)
        protos = [
            proto_mod.build_supervised_centroid(cls, labeled)
            for cls in labeled.vocabulary
        ]
    created.extend([out, out + ".json"])
    proto_mod.save_prototype_set(proto_mod.PrototypeSet(protos), out)
    click.echo(json.dumps({"out": out, "classes": len(protos)}, sort_keys=True))


# --------------------------------------------------------------------------
# classify / adapt / tau-search


def _background_profile(protos, background, background_store, background_class):
    bg_set = load_store(background_store)
    records = list(bg_set)
    if background_class:
        records = [r for r in records if r.label == background_class]
    if background == "text":
        return profiles_mod.background_profile_from_text(records, protos)
    return profiles_mod.background_profile_from_audio(records, protos)


@main.command("classify")
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="ExperimentConfig JSON; flags override its fields.")
@click.option("--test-store", type=click.Path(exists=True))
@click.option("--protos", type=click.Path(exists=True), required=True)
@click.option("--output-dir", type=click.Path(), required=True)
@guarded
def classify_cmd(config_path, test_store, protos, output_dir, created):
    """Per-sample profiles (JSON lines) and argmax predictions."""
    if config_path:
        cfg = config_mod.load_config(config_path)
        test_store = test_store or cfg.audio_store_path
    if not test_store:
        raise ValueError("--test-store or --config is required")
    os.makedirs(output_dir, exist_ok=True)
    proto_set = proto_mod.load_prototype_set(protos)
    tests = load_store(test_store)
    profiles_path = os.path.join(output_dir, "profiles.jsonl")
    created.append(profiles_path)
    predictions = {}
    with open(profiles_path, "w") as f:
        for r in tests:
            p = profiles_mod.compute_profile(r, proto_set)
            f.write(p.to_json() + "\n")
            predictions[r.id] = profiles_mod.classify(p)
    _write_json(predictions, os.path.join(output_dir, "predictions.json"), created)
    _write_run_log(output_dir, "classify")
    click.echo(json.dumps({"samples": len(tests), "output_dir": output_dir},
                          sort_keys=True))


@main.command("adapt")
@click.option("--profiles", "profiles_path", type=click.Path(exists=True),
              required=True, help="profiles.jsonl from `classify`.")
@click.option("--protos", type=click.Path(exists=True), required=True)
@click.option("--background", type=click.Choice(["text", "audio"]), required=True)
@click.option("--background-store", type=click.Path(exists=True), required=True)
@click.option("--background-class", type=str, default=None,
              help="Restrict the background store to one labeled class.")
@click.option("--tau", type=float, default=None,
              help="Defaults to the grid-searched optimum for the source.")
@click.option("--output-dir", type=click.Path(), required=True)
@guarded
def adapt_cmd(profiles_path, protos, background, background_store,
              background_class, tau, output_dir, created):
    """Subtract a background profile and re-predict."""
    os.makedirs(output_dir, exist_ok=True)
    proto_set = proto_mod.load_prototype_set(protos)
    p_b = _background_profile(proto_set, background, background_store,
                              background_class)
    if tau is None:
        tau = profiles_mod.DEFAULT_TAU[background]
    acfg = profiles_mod.AdaptationConfig(tau=tau, background_source=background)
    _write_json(p_b.to_dict(), os.path.join(output_dir, "background_profile.json"),
                created)
    adapted_path = os.path.join(output_dir, "adapted_profiles.jsonl")
    created.append(adapted_path)
    predictions = {}
    with open(profiles_path) as fin, open(adapted_path, "w") as fout:
        for line in fin:
            if not line.strip():
                continue
            p = profiles_mod.Profile.from_dict(json.loads(line))
            p_f = profiles_mod.adapt(p, p_b, acfg)
            fout.write(p_f.to_json() + "\n")
            predictions[p.meta.get("source_id")] = profiles_mod.classify(p_f)
    _write_json(predictions,
                os.path.join(output_dir, "adapted_predictions.json"), created)
    _write_run_log(output_dir, f"adapt tau={tau} background={background}")
    click.echo(json.dumps({"tau": tau, "output_dir": output_dir}, sort_keys=True))


def _parse_grid(spec: str):
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError("grid must be START:STOP:STEP, e.g. 0:1:0.1")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        return (round(start, 10),)
    values = []
    v = start
    while v <= stop + 1e-9:
        values.append(round(v, 10))
        v += step
    return tuple(values)


@main.command("tau-search")
@click.option("--profiles", "profiles_path", type=click.Path(exists=True),
              required=True)
@click.option("--protos", type=click.Path(exists=True), required=True)
@click.option("--background", type=click.Choice(["text", "audio"]), required=True)
@click.option("--background-store", type=click.Path(exists=True), required=True)
@click.option("--background-class", type=str, default=None)
@click.option("--truth", type=click.Path(exists=True), required=True)
@click.option("--grid", default="0:1:0.1", show_default=True)
@click.option("--out", type=click.Path(), required=True)
@guarded
def tau_search_cmd(profiles_path, protos, background, background_store,
                   background_class, truth, grid, out, created):
    """Grid-search tau against a truth map."""
    proto_set = proto_mod.load_prototype_set(protos)
    p_b = _background_profile(proto_set, background, background_store,
                              background_class)
    with open(truth) as f:
        truths = json.load(f)
    test_profiles = {}
    with open(profiles_path) as f:
        for line in f:
            if line.strip():
                p = profiles_mod.Profile.from_dict(json.loads(line))
                test_profiles[p.meta["source_id"]] = p
    result = eval_mod.grid_search_tau(
        test_profiles, p_b, truths, grid=_parse_grid(grid),
        background_source=background,
    )
    _write_json(result.to_dict(), out, created)
    click.echo(json.dumps(result.to_dict(), sort_keys=True))


# --------------------------------------------------------------------------
# eval


@main.command("eval")
@click.option("--predictions", type=click.Path(exists=True), required=True)
@click.option("--truth", type=click.Path(exists=True), required=True)
@click.option("--output-dir", type=click.Path(), required=True)
@guarded
def eval_cmd(predictions, truth, output_dir, created):
    """Accuracy, per-class accuracy, and confusion matrix."""
    os.makedirs(output_dir, exist_ok=True)
    with open(predictions) as f:
        preds = json.load(f)
    with open(truth) as f:
        truths = json.load(f)
    vocabulary = sorted(set(truths.values()) | set(preds.values()))
    report = eval_mod.evaluate(preds, truths, vocabulary)
    _write_json(report.to_dict(), os.path.join(output_dir, "report.json"), created)
    csv_path = os.path.join(output_dir, "confusion.csv")
    created.append(csv_path)
    with open(csv_path, "w") as f:
        f.write("true_class," + ",".join(report.vocabulary) + "\n")
        for cls, row in zip(report.vocabulary, report.confusion):
            f.write(cls + "," + ",".join(str(int(c)) for c in row) + "\n")
    _write_run_log(output_dir, "eval")
    click.echo(json.dumps({"accuracy": report.accuracy,
                           "n_samples": report.n_samples}, sort_keys=True))


# --------------------------------------------------------------------------
# gap


@main.group()
def gap():
    """Modality-gap analytics."""


@gap.command("report")
@click.option("--audio-store", type=click.Path(exists=True), required=True)
@click.option("--text-store", type=click.Path(exists=True), required=True)
@click.option("--protos-text", type=click.Path(exists=True))
@click.option("--protos-tgap", type=click.Path(exists=True))
@click.option("--protos-supervised", type=click.Path(exists=True))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output-dir", type=click.Path(), required=True)
@guarded
def gap_report(audio_store, text_store, protos_text, protos_tgap,
               protos_supervised, seed, output_dir, created):
    """Intra/inter modality distances; optionally per-prototype distances."""
    os.makedirs(output_dir, exist_ok=True)
    audio = load_store(audio_store)
    text = load_store(text_store)
    report = eval_mod.modality_gap_stats(audio, text, seed=seed)
    _write_json(report.to_dict(), os.path.join(output_dir, "gap_report.json"),
                created)
    if protos_text and protos_tgap and protos_supervised:
        by_prov = {
            proto_mod.PROVENANCE_TEXT_ANCHOR: proto_mod.load_prototype_set(protos_text),
            proto_mod.PROVENANCE_TGAP: proto_mod.load_prototype_set(protos_tgap),
            proto_mod.PROVENANCE_SUPERVISED: proto_mod.load_prototype_set(protos_supervised),
        }
        fragment = eval_mod.prototype_distance_analysis(by_prov, audio)
        _write_json(fragment.to_dict(),
                    os.path.join(output_dir, "prototype_distances.json"), created)
        csv_path = os.path.join(output_dir, "prototype_distances.csv")
        created.append(csv_path)
        with open(csv_path, "w") as f:
            f.write(eval_mod.prototype_distances_to_csv(fragment))
    _write_run_log(output_dir, "gap report")
    click.echo(json.dumps({"mean_inter": report.mean_inter,
                           "separable": report.separable}, sort_keys=True))


# --------------------------------------------------------------------------
# dataset / mix


def _load_clip_dir(directory):
    clips = {}
    for name in sorted(os.listdir(directory)):
        if name.lower().endswith(".wav"):
            clips[os.path.splitext(name)[0]] = scape_mod.read_wav(
                os.path.join(directory, name)
            )
    return clips


def _load_class_dir(directory):
    """class-subdirectory layout: DIR/<class>/<clip>.wav"""
    clips = {}
    for cls in sorted(os.listdir(directory)):
        sub = os.path.join(directory, cls)
        if not os.path.isdir(sub):
            continue
        for name in sorted(os.listdir(sub)):
            if name.lower().endswith(".wav"):
                clip_id = f"{cls}/{os.path.splitext(name)[0]}"
                clips[clip_id] = (cls, scape_mod.read_wav(os.path.join(sub, name)))
    return clips


@main.group()
def dataset():
    """Soundscape dataset generation."""


@dataset.command("pair")
@click.option("--fg-dir", type=click.Path(exists=True), required=True)
@click.option("--bg-root", type=click.Path(exists=True), required=True,
              help="One subdirectory per environment.")
@click.option("--snrs", default="6,8,10", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@guarded
def dataset_pair(fg_dir, bg_root, snrs, seed, out, created):
    fg_clips = _load_clip_dir(fg_dir)
    bg_sets = {}
    for env in sorted(os.listdir(bg_root)):
        sub = os.path.join(bg_root, env)
        if os.path.isdir(sub):
            bg_sets[env] = {
                f"{env}/{k}": v for k, v in _load_clip_dir(sub).items()
            }
    specs = scape_mod.generate_pairing_manifest(
        fg_clips, bg_sets, snrs_db=[float(s) for s in snrs.split(",")], seed=seed
    )
    created.append(out)
    scape_mod.save_manifest(specs, out)
    click.echo(json.dumps({"specs": len(specs), "out": out}, sort_keys=True))


@dataset.command("polyphonic")
@click.option("--fg-dir", type=click.Path(exists=True), required=True,
              help="Class-subdirectory layout: FG_DIR/<class>/<clip>.wav")
@click.option("--classes-per-audio", type=int, required=True)
@click.option("--count", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output-dir", type=click.Path(), required=True)
@guarded
def dataset_polyphonic(fg_dir, classes_per_audio, count, seed, output_dir, created):
    os.makedirs(output_dir, exist_ok=True)
    fg_clips = _load_class_dir(fg_dir)
    manifest, rendered = scape_mod.generate_polyphonic(
        fg_clips, classes_per_audio, count=count, seed=seed
    )
    manifest_path = os.path.join(output_dir, "manifest.jsonl")
    created.append(manifest_path)
    scape_mod.save_manifest(manifest, manifest_path)
    for mix_id, clip in rendered.items():
        path = os.path.join(output_dir, mix_id + ".wav")
        created.append(path)
        scape_mod.write_wav(path, clip)
    _write_run_log(output_dir, "dataset polyphonic")
    click.echo(json.dumps({"count": len(manifest), "output_dir": output_dir},
                          sort_keys=True))


@dataset.command("chunk")
@click.option("--recording", type=click.Path(exists=True), required=True)
@click.option("--annotations", type=click.Path(exists=True), required=True,
              help="JSON list of [class, start_s, end_s].")
@click.option("--chunk-s", type=float, default=10.0, show_default=True)
@click.option("--output-dir", type=click.Path(), required=True)
@guarded
def dataset_chunk(recording, annotations, chunk_s, output_dir, created):
    os.makedirs(output_dir, exist_ok=True)
    clip = scape_mod.read_wav(recording)
    with open(annotations) as f:
        anns = [(a[0], float(a[1]), float(a[2])) for a in json.load(f)]
    chunks = scape_mod.segment_into_chunks(clip, anns, chunk_s=chunk_s)
    labels = {}
    for i, chunk in enumerate(chunks):
        chunk_id = f"chunk-{i:04d}"
        path = os.path.join(output_dir, chunk_id + ".wav")
        created.append(path)
        scape_mod.write_wav(path, chunk.clip)
        labels[chunk_id] = {
            "start_s": chunk.start_s,
            "end_s": chunk.end_s,
            "labels": list(chunk.labels),
            "is_background": chunk.is_background,
        }
    _write_json(labels, os.path.join(output_dir, "chunks.json"), created)
    _write_run_log(output_dir, "dataset chunk")
    click.echo(json.dumps({"chunks": len(chunks), "output_dir": output_dir},
                          sort_keys=True))


@main.command("mix")
@click.option("--manifest", type=click.Path(exists=True), required=True)
@click.option("--fg-dir", type=click.Path(exists=True), required=True)
@click.option("--bg-root", type=click.Path(exists=True), required=True)
@click.option("--output-dir", type=click.Path(), required=True)
@guarded
def mix_cmd(manifest, fg_dir, bg_root, output_dir, created):
    """Render a pairing manifest to WAV files plus an achieved-SNR report."""
    os.makedirs(output_dir, exist_ok=True)
    entries = scape_mod.load_manifest(manifest)
    report = {}
    for i, entry in enumerate(entries):
        spec = scape_mod.SoundscapeSpec.from_dict(entry)
        fg = scape_mod.read_wav(os.path.join(fg_dir, spec.foreground_ref + ".wav"))
        bg = scape_mod.read_wav(os.path.join(bg_root, spec.background_ref + ".wav"))
        result = scape_mod.mix_at_snr(fg, bg, spec)
        mix_id = f"mix-{i:05d}"
        path = os.path.join(output_dir, mix_id + ".wav")
        created.append(path)
        scape_mod.write_wav(path, result.clip)
        report[mix_id] = {
            "foreground_ref": spec.foreground_ref,
            "background_ref": spec.background_ref,
            "requested_snr_db": spec.snr_db,
            "achieved_snr_db": result.achieved_snr_db,
            "fg_gain": result.fg_gain,
            "safety_gain": result.safety_gain,
        }
    _write_json(report, os.path.join(output_dir, "snr_report.json"), created)
    _write_run_log(output_dir, "mix")
    click.echo(json.dumps({"mixes": len(report), "output_dir": output_dir},
                          sort_keys=True))


if __name__ == "__main__":
    main()
