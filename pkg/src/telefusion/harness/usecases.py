"""Dataset generation and runs for the three use cases."""

from __future__ import annotations

import csv
import json
import logging
import time
from pathlib import Path

import numpy as np

from ..corpus import CorpusConfig, CorpusGrid, corpus_from_csv, corpus_to_csv, generate_corpus, snr_is_finite
from ..dsp.features import DspFeatures
from ..model.usecase import VARIANTS, ModelUseCaseConfig, run_model_usecase
from ..model.hybrid import HybridConfig
from ..nn import to_document
from ..seeding import STREAM_SOURCE, derive_seed
from ..sim.link import Spectrum
from ..sim.specs import failure_from_dict, failure_to_dict
from ..source.dataset import SourceExample, SourceSetup, simulate_example
from ..source.pipeline import TwoStageConfig, run_two_stage
from ..space.federated import AdaptConfig
from ..space.usecase import (
    SpaceConfig,
    case_parameters,
    case_seed,
    region_indices,
    run_space_usecase,
    table_vi_seed,
)
from ..space.regions import TABLE_VI
from ..stats import cdf_points, histogram
from . import plots
from .artifacts import ArtifactWriter, dump_json, read_manifest
from .config import ExperimentConfig, _sha

logger = logging.getLogger(__name__)

DATASET_DIR = "dataset"
REPORT = "report.json"
REPORT_SCHEMA_VERSION = 1

_CORPUS_KEYS = (
    "corpus_span_numbers",
    "corpus_channel_numbers",
    "corpus_launch_powers",
    "corpus_n_symbols",
    "corpus_ssfm_steps",
)
# parameters a dataset depends on; training knobs are excluded
DATASET_KEYS = {
    "source": ("n_spans", "wss_every", "launch_power", "sweep_step", "healthy_count", "n_symbols"),
    "space": _CORPUS_KEYS + ("n_pretrain", "n_region_pool", "n_eval_pool", "region_examples", "n_cases", "case_examples"),
    "model": _CORPUS_KEYS + ("n_examples",),
}


class DatasetMismatch(RuntimeError):
    """Dataset on disk was generated for a different configuration."""


def dataset_fingerprint(cfg: ExperimentConfig) -> str:
    p = cfg.params()
    return _sha(
        {
            "usecase": cfg.usecase,
            "master_seed": cfg.master_seed,
            "params": {k: p[k] for k in DATASET_KEYS[cfg.usecase]},
        }
    )


# ---------------------------------------------------------------- builders


def source_setup(p: dict) -> SourceSetup:
    return SourceSetup(
        n_spans=p["n_spans"],
        wss_every=p["wss_every"],
        launch_power=p["launch_power"],
        sweep_step=p["sweep_step"],
        healthy_count=p["healthy_count"],
        n_symbols=p["n_symbols"],
    )


def two_stage_config(p: dict) -> TwoStageConfig:
    return TwoStageConfig(
        window=p["window"],
        split_fraction=p["split_fraction"],
        stage1_epochs=p["stage1_epochs"],
        stage1_lr=p["stage1_lr"],
        stage2_epochs=p["stage2_epochs"],
        stage2_lr=p["stage2_lr"],
        batch_size=p["batch_size"],
        confidence_threshold=p["confidence_threshold"],
    )


def corpus_config(p: dict) -> CorpusConfig:
    grid = CorpusGrid(
        span_numbers=tuple(p["corpus_span_numbers"]),
        channel_numbers=tuple(p["corpus_channel_numbers"]),
        launch_powers=tuple(float(v) for v in p["corpus_launch_powers"]),
    )
    return CorpusConfig(grid=grid, n_symbols=p["corpus_n_symbols"], ssfm_steps=p["corpus_ssfm_steps"])


def space_config(p: dict) -> SpaceConfig:
    return SpaceConfig(
        region_examples=p["region_examples"],
        n_cases=p["n_cases"],
        case_examples=p["case_examples"],
        pretrain_epochs=p["pretrain_epochs"],
        pretrain_lr=p["pretrain_lr"],
        batch_size=p["batch_size"],
        split_fraction=p["split_fraction"],
        adapt=AdaptConfig(epochs=p["adapt_epochs"], learning_rate=p["adapt_lr"], batch_size=p["batch_size"]),
    )


def model_config(p: dict) -> ModelUseCaseConfig:
    return ModelUseCaseConfig(
        train_fraction=p["train_fraction"],
        hybrid=HybridConfig(
            hidden=p["hidden"], epochs=p["epochs"], batch_size=p["batch_size"], learning_rate=p["learning_rate"]
        ),
    )


# ---------------------------------------------------------------- datasets

_FEATURE_HEADER = ("index", "seed", "wss_index", "cause", "magnitude", *DspFeatures.names(), "snr_db")


def _spectrum_path(index: int, k: int) -> str:
    return f"spectra/ex{index:05d}_wss{k}.csv"


def _gen_source(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    setup = source_setup(cfg.params())
    link = setup.link()
    rows, truth, seeds = [], [], []
    failures = setup.failures()
    for i, f in enumerate(failures):
        seed = derive_seed(cfg.master_seed, STREAM_SOURCE, i)
        ex = simulate_example(setup, f, seed, i)
        for k, s in enumerate(ex.spectra):
            w.text(_spectrum_path(i, k), s.to_csv())
        rows.append([i, seed, f.wss_index, f.cause.value, f.magnitude, *ex.features.as_array(), ex.snr_db])
        truth.append({"index": i, "seed": seed, "failure": failure_to_dict(f), "stage_snr_db": ex.stage_snr_db})
        seeds.append({"index": i, "seed": seed})
        if (i + 1) % 50 == 0:
            logger.info("source: %d/%d examples", i + 1, len(failures))
    w.csv("features.csv", _FEATURE_HEADER, rows)
    w.json("ground_truth.json", {"schema_version": 1, "link": link.to_dict(), "examples": truth})
    return {"examples": seeds, "n_wss": len(link.wss_list)}


def _load_source(root: Path) -> list[SourceExample]:
    truth = json.loads((root / "ground_truth.json").read_text())
    n_wss = len(truth["link"]["wss_list"])
    by_index = {t["index"]: t for t in truth["examples"]}
    out = []
    with open(root / "features.csv", newline="") as fh:
        for r in csv.DictReader(fh):
            i = int(r["index"])
            t = by_index[i]
            feats = DspFeatures(*(float(r[n]) for n in DspFeatures.names()))
            spectra = [Spectrum.from_csv((root / _spectrum_path(i, k)).read_text()) for k in range(n_wss)]
            out.append(
                SourceExample(
                    i, int(r["seed"]), failure_from_dict(t["failure"]), feats, spectra, float(r["snr_db"]), t["stage_snr_db"]
                )
            )
    return out


_POOLS = (("pretrain", "n_pretrain"), ("region_pool", "n_region_pool"), ("eval_pool", "n_eval_pool"))


def _corpus_truth(examples) -> list[dict]:
    return [
        {"index": e.index, "seed": e.seed, "snr_nl_db": e.snr_nl_db, "snr_total_db": e.snr_total_db, "link": e.link.to_dict()}
        for e in examples
    ]


def _gen_space(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    p = cfg.params()
    cc = corpus_config(p)
    sc = space_config(p)
    truth, seeds = {}, {}
    for pool, (name, key) in enumerate(_POOLS):
        t0 = time.perf_counter()
        ex = generate_corpus(p[key], cfg.master_seed, cc, pool)
        logger.info("space: %s corpus (%d links) in %.1f s", name, len(ex), time.perf_counter() - t0)
        w.text(f"corpus_{name}.csv", corpus_to_csv(ex))
        truth[name] = _corpus_truth(ex)
        seeds[name] = [{"index": e.index, "seed": e.seed} for e in ex]
    plan = {
        "schema_version": 1,
        "regions": [
            {
                "region_id": prof.region_id,
                "uncertainty_mean": prof.uncertainty_mean,
                "uncertainty_variance": prof.uncertainty_variance,
                "pool_indices": region_indices(prof, sc, p["n_region_pool"], cfg.master_seed).tolist(),
            }
            for prof in sc.profiles
        ],
        "new_region_cases": [
            {"case": i, "mean": m, "variance": v, "seed": case_seed(cfg.master_seed, i)}
            for i, (m, v) in enumerate(case_parameters(sc, cfg.master_seed))
        ],
        "table_vi_cases": [
            {"case": j + 1, "mean": m, "variance": v, "seed": table_vi_seed(cfg.master_seed, j)}
            for j, (m, v) in enumerate(TABLE_VI)
        ],
        "case_examples": sc.case_examples,
    }
    w.json("sampling_plan.json", plan)
    w.json("ground_truth.json", {"schema_version": 1, "grid": cc.grid.to_dict(), "pools": truth})
    return {"examples": seeds}


def _gen_model(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    p = cfg.params()
    cc = corpus_config(p)
    t0 = time.perf_counter()
    ex = generate_corpus(p["n_examples"], cfg.master_seed, cc, 0)
    logger.info("model: corpus (%d links) in %.1f s", len(ex), time.perf_counter() - t0)
    w.text("corpus.csv", corpus_to_csv(ex))
    w.json("ground_truth.json", {"schema_version": 1, "grid": cc.grid.to_dict(), "examples": _corpus_truth(ex)})
    return {"examples": [{"index": e.index, "seed": e.seed} for e in ex]}


_GENERATORS = {"source": _gen_source, "space": _gen_space, "model": _gen_model}


def gen_dataset(cfg: ExperimentConfig) -> Path:
    """Simulate and write the dataset for ``cfg`` under ``<out>/dataset``."""
    root = Path(cfg.output_dir) / DATASET_DIR
    root.mkdir(parents=True, exist_ok=True)
    w = ArtifactWriter(root)
    extra = _GENERATORS[cfg.usecase](cfg, w)
    w.manifest(
        {
            "kind": "dataset",
            "usecase": cfg.usecase,
            "master_seed": cfg.master_seed,
            "dataset_fingerprint": dataset_fingerprint(cfg),
            "config": cfg.resolved(),
            **extra,
        }
    )
    return root


def ensure_dataset(cfg: ExperimentConfig) -> Path:
    """Dataset directory for ``cfg``; generated when absent, checked when present."""
    root = Path(cfg.output_dir) / DATASET_DIR
    if not (root / "manifest.json").exists():
        logger.info("no dataset at %s, generating", root)
        return gen_dataset(cfg)
    doc = read_manifest(root)
    if doc.get("usecase") != cfg.usecase or doc.get("dataset_fingerprint") != dataset_fingerprint(cfg):
        raise DatasetMismatch(f"dataset at {root} was generated for a different configuration")
    return root


# ---------------------------------------------------------------- runs


def _curve_rows(curve: dict) -> tuple[list[str], list[list]]:
    keys = [k for k, v in curve.items() if len(v)]
    n = len(curve[keys[0]])
    return keys, [[curve[k][i] for k in keys] for i in range(n)]


def _write_curve(w: ArtifactWriter, name: str, curve: dict) -> str:
    header, rows = _curve_rows(curve)
    return w.csv(f"curves/{name}.csv", header, rows)


def _loss_dict(curve) -> dict:
    return {
        "epoch": list(range(1, len(curve.train) + 1)),
        "train_loss": curve.train,
        "val_loss": curve.val,
    }


def _run_source(cfg: ExperimentConfig, root: Path, w: ArtifactWriter) -> dict:
    p = cfg.params()
    examples = _load_source(root)
    res = run_two_stage(examples, cfg.master_seed, two_stage_config(p))
    s = res.scalars
    curves = {name: _write_curve(w, name, c) for name, c in res.curves.items()}
    n1, n2 = res.confusion_stage1.shape[0], res.confusion_stage2.shape[0]
    tables = {
        "confusion_stage1": w.csv(
            "tables/confusion_stage1.csv", ["true"] + [f"pred_{j}" for j in range(n1)],
            [[i, *row] for i, row in enumerate(res.confusion_stage1)],
        ),
        "confusion_stage2": w.csv(
            "tables/confusion_stage2.csv", ["true"] + [f"pred_{j}" for j in range(n2)],
            [[i, *row] for i, row in enumerate(res.confusion_stage2)],
        ),
    }
    w.json("tables/verdicts.json", res.verdicts)
    w.json("models/stage1.json", to_document(res.stage1))
    w.json("models/stage2.json", to_document(res.stage2))
    plots.loss_plot(w, "plots/stage1_loss.svg", {"stage 1": res.curves["stage1_loss"]})
    plots.loss_plot(w, "plots/stage2_loss.svg", {"stage 2": res.curves["stage2_loss"]})
    acc = res.curves["stage1_accuracy"]
    plots.loss_plot(w, "plots/stage1_accuracy.svg", {"stage 1": {"epoch": acc["epoch"], "val_accuracy": acc["val_accuracy"]}}, ylabel="accuracy")
    expected_ratio = (2 * p["window"] + 1) / s["n_wss"]
    assertions = {
        "stage1_accuracy_ge_0.80": s["stage1_accuracy"] >= 0.80,
        "stage2_accuracy_ge_0.95": s["stage2_accuracy"] >= 0.95,
        "stage2_not_below_stage1": s["stage2_accuracy"] >= s["stage1_accuracy"],
        "stage1_errors_adjacent_ge_0.90": s["stage1_adjacent_error_fraction"] >= 0.90,
        "interior_saving_ratio_exact": s["interior_saving_ratios_consistent"]
        and s["interior_saving_ratio"] == expected_ratio,
        "healthy_false_positive_lt_0.05": s["healthy_false_positive_rate"] < 0.05,
    }
    return {"scalars": s, "curves": curves, "tables": tables, "error_lists": {}, "assertions": assertions}


def _load_space(root: Path, p: dict):
    grid = corpus_config(p).grid
    return [corpus_from_csv((root / f"corpus_{name}.csv").read_text(), grid) for name, _ in _POOLS]


def _run_space(cfg: ExperimentConfig, root: Path, w: ArtifactWriter) -> dict:
    p = cfg.params()
    pre_ex, reg_ex, ev_ex = _load_space(root, p)
    if not all(snr_is_finite(x) for x in (pre_ex, reg_ex, ev_ex)):
        raise RuntimeError("corpus holds non-finite labels")
    res = run_space_usecase(pre_ex, reg_ex, ev_ex, space_config(p), cfg.master_seed)
    s = res.scalars
    hi = float(max(res.case_mse_pre.max(), res.case_mse_post.max()))
    h_pre = histogram(res.case_mse_pre, 30, (0.0, hi))
    h_post = histogram(res.case_mse_post, 30, (0.0, hi))
    hist = {"bin_lo": h_pre["edges"][:-1], "bin_hi": h_pre["edges"][1:], "count_pre": h_pre["counts"], "count_post": h_post["counts"]}
    c_pre, c_post = cdf_points(res.case_mse_pre), cdf_points(res.case_mse_post)
    cdf = {"fraction": c_pre["p"], "mse_pre": c_pre["x"], "mse_post": c_post["x"]}
    curves = {
        "pretrain_loss": _write_curve(w, "pretrain_loss", _loss_dict(res.pretrain_curve)),
        "mse_histogram": _write_curve(w, "mse_histogram", hist),
        "mse_cdf": _write_curve(w, "mse_cdf", cdf),
    }
    tables = {
        "case_mse": w.csv(
            "tables/case_mse.csv",
            ["case", "mean", "variance", "mse_pre", "mse_post"],
            [[i, m, v, a, b] for i, ((m, v), a, b) in enumerate(zip(res.case_params, res.case_mse_pre, res.case_mse_post))],
        ),
        "table_vi": w.csv(
            "tables/table_vi.csv",
            ["case", "mean", "variance", "mse_pre", "mse_post"],
            [[t["case"], t["mean"], t["variance"], t["mse_pre"], t["mse_post"]] for t in res.table_vi],
        ),
    }
    w.json("models/global.json", to_document(res.global_model))
    w.json("models/aggregated.json", to_document(res.aggregated))
    for u in res.updates:
        w.json(f"models/region{u.region_id}.json", {"region_id": u.region_id, "n_k": u.n_k, "model": to_document(u.model)})
    plots.loss_plot(w, "plots/pretrain_loss.svg", {"pretrain": _loss_dict(res.pretrain_curve)})
    plots.pair_histogram(w, "plots/mse_histogram.svg", hist, "new-region MSE (dB$^2$)")
    plots.pair_cdf(w, "plots/mse_cdf.svg", cdf, "new-region MSE (dB$^2$)")
    plots.table_bars(w, "plots/table_vi.svg", res.table_vi)
    assertions = {
        "p95_post_below_pre": s["p95_mse_post"] < s["p95_mse_pre"],
        "p95_reduction_ge_0.10": s["p95_relative_reduction"] >= 0.10,
        "control_difference_lt_0.10": s.get("control_relative_difference", 0.0) < 0.10,
    }
    return {"scalars": s, "curves": curves, "tables": tables, "error_lists": {"case_mse": tables["case_mse"]}, "assertions": assertions}


def _run_model(cfg: ExperimentConfig, root: Path, w: ArtifactWriter) -> dict:
    p = cfg.params()
    examples = corpus_from_csv((root / "corpus.csv").read_text(), corpus_config(p).grid)
    if not snr_is_finite(examples):
        raise RuntimeError("corpus holds non-finite labels")
    res = run_model_usecase(examples, model_config(p), cfg.master_seed)
    s = res.scalars
    te = res.split[1]
    names = list(VARIANTS)
    errs = np.column_stack([res.errors[n] for n in names])
    lim = float(np.abs(errs).max())
    hist = {}
    for n in names:
        h = histogram(res.errors[n], 30, (-lim, lim))
        hist.setdefault("bin_lo", h["edges"][:-1])
        hist.setdefault("bin_hi", h["edges"][1:])
        hist[f"count_{n}"] = h["counts"]
    cdf = {}
    for n in names:
        c = cdf_points(np.abs(res.errors[n]))
        cdf.setdefault("fraction", c["p"])
        cdf[f"abs_error_{n}"] = c["x"]
    curves = {f"loss_{n}": _write_curve(w, f"loss_{n}", _loss_dict(res.curves[n])) for n in names}
    curves["error_histogram"] = _write_curve(w, "error_histogram", hist)
    curves["error_cdf"] = _write_curve(w, "error_cdf", cdf)
    labels = np.array([examples[i].snr_nl_db for i in te])
    tables = {
        "test_errors": w.csv(
            "tables/test_errors.csv",
            ["example", "label_db", *[f"error_{n}" for n in names]],
            [[int(examples[i].index), labels[k], *errs[k]] for k, i in enumerate(te)],
        )
    }
    for n in names:
        w.json(f"models/{n}.json", to_document(res.models[n]))
    plots.loss_plot(w, "plots/loss.svg", {n: _loss_dict(res.curves[n]) for n in names}, log=True)
    plots.multi_histogram(w, "plots/error_histogram.svg", hist, names, "prediction error (dB)")
    plots.multi_cdf(w, "plots/error_cdf.svg", cdf, names, "absolute error (dB)")
    assertions = {
        "rmse_hybrid_below_baseline": s["rmse_hybrid"] < s["rmse_baseline"],
        "p95_error_hybrid_below_baseline": s["p95_abs_error_hybrid"] < s["p95_abs_error_baseline"],
        "rmse_reduction_ge_0.15": s["rmse_relative_reduction"] >= 0.15,
        "paired_split": s["split_fingerprint_baseline"] == s["split_fingerprint_hybrid"],
    }
    return {"scalars": s, "curves": curves, "tables": tables, "error_lists": {"test_errors": tables["test_errors"]}, "assertions": assertions}


_RUNNERS = {"source": _run_source, "space": _run_space, "model": _run_model}


def run(cfg: ExperimentConfig) -> dict:
    """Load (or generate) the dataset, run the use case and write the report."""
    t0 = time.perf_counter()
    root = ensure_dataset(cfg)
    out = Path(cfg.output_dir)
    w = ArtifactWriter(out)
    body = _RUNNERS[cfg.usecase](cfg, root, w)
    assertions = {k: bool(v) for k, v in body["assertions"].items()}
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "usecase": cfg.usecase,
        "config": cfg.resolved(),
        "config_fingerprint": cfg.fingerprint(),
        "config_fingerprint_without_seed": cfg.fingerprint_without_seed(),
        "dataset_fingerprint": dataset_fingerprint(cfg),
        "scalars": body["scalars"],
        "curves": body["curves"],
        "tables": body["tables"],
        "error_lists": body["error_lists"],
        "assertions": assertions,
        "passed": all(assertions.values()),
        "runtime_seconds": time.perf_counter() - t0,
    }
    report["artifacts"] = sorted(w.files)
    w.text(REPORT, dump_json(report))
    w.manifest({"kind": "run", "usecase": cfg.usecase, "config_fingerprint": cfg.fingerprint()})
    return report
