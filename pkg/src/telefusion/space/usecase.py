"""Space-level use case: regional adaptation plus one-shot aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..corpus import TABLE_IV_FEATURES, LinkExample
from ..nn import MSE, LINEAR, LossCurve, ModelParams, TrainConfig, evaluate, fit_normalization, mlp, split_indices, train
from ..seeding import STREAM_CASES, STREAM_NEW_REGION, STREAM_PERTURB, STREAM_REGION, STREAM_SPLIT, STREAM_TRAIN, derive_seed, rng
from .federated import AdaptConfig, fed_aggregate
from .regions import TABLE_V, TABLE_VI, Region, RegionProfile, RegionUpdate, perturb_matrix


@dataclass(frozen=True)
class SpaceConfig:
    region_examples: int = 200
    n_cases: int = 2000
    case_examples: int = 200
    mean_range: tuple[float, float] = (0.0, 1.0)
    var_range: tuple[float, float] = (0.0, 0.4)
    hidden: tuple[int, ...] = (32, 32)
    pretrain_epochs: int = 500
    pretrain_lr: float = 1e-3
    batch_size: int = 32
    split_fraction: float = 0.7
    adapt: AdaptConfig = field(default_factory=AdaptConfig)
    profiles: tuple[RegionProfile, ...] = TABLE_V
    perturb: bool = True
    include_control: bool = True

    @classmethod
    def desk(cls) -> "SpaceConfig":
        return cls(region_examples=50, n_cases=100, case_examples=50)


@dataclass
class SpaceResult:
    scalars: dict
    case_mse_pre: np.ndarray
    case_mse_post: np.ndarray
    case_params: np.ndarray  # (n_cases, 2): mean, variance
    table_vi: list[dict]
    pretrain_curve: LossCurve
    global_model: ModelParams
    aggregated: ModelParams
    updates: list[RegionUpdate]


def _xy(examples: list[LinkExample]) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([e.table_iv() for e in examples])
    y = np.array([e.snr_nl_db for e in examples], dtype=float)
    return x, y


def pretrain_global(
    examples: list[LinkExample], cfg: SpaceConfig, seed: int
) -> tuple[ModelParams, LossCurve, dict]:
    """Train the global nonlinear-SNR model on clean link features."""
    x, y = _xy(examples)
    tr, va = split_indices(len(y), cfg.split_fraction, derive_seed(seed, STREAM_SPLIT))
    model = mlp(
        x.shape[1],
        cfg.hidden,
        1,
        output_activation=LINEAR,
        seed=derive_seed(seed, STREAM_TRAIN, 0),
        names=list(TABLE_IV_FEATURES),
    )
    model = fit_normalization(model, x[tr])
    tc = TrainConfig(cfg.pretrain_epochs, cfg.batch_size, cfg.pretrain_lr, derive_seed(seed, STREAM_TRAIN, 1))
    model, curve = train(model, (x[tr], y[tr]), tc, MSE, (x[va], y[va]))
    info = {"pretrain_val_mse": curve.val[-1] if curve.val else float("nan")}
    return model, curve, info


def build_regions(
    pool: list[LinkExample], cfg: SpaceConfig, seed: int, perturb: bool = True
) -> list[Region]:
    """Each region draws its examples from the pool and observes noisy launch power."""
    x_all, y_all = _xy(pool)
    regions = []
    for p in cfg.profiles:
        idx = region_indices(p, cfg, len(pool), seed)
        n = len(idx)
        x = x_all[idx]
        if perturb:
            x = perturb_matrix(x, p, rng(seed, STREAM_PERTURB, p.region_id))
        regions.append(Region(replace(p, example_count=n), x, y_all[idx]))
    return regions


def region_indices(profile: RegionProfile, cfg: SpaceConfig, pool_size: int, seed: int) -> np.ndarray:
    """Pool rows a region holds; drawn without replacement."""
    g = rng(seed, STREAM_REGION, profile.region_id)
    n = min(cfg.region_examples, pool_size)
    return np.sort(g.choice(pool_size, size=n, replace=False))


def case_parameters(cfg: SpaceConfig, seed: int) -> np.ndarray:
    """(mean dB, variance dB^2) of every new-region evaluation case."""
    g = rng(seed, STREAM_NEW_REGION)
    return np.column_stack(
        [g.uniform(*cfg.mean_range, cfg.n_cases), g.uniform(*cfg.var_range, cfg.n_cases)]
    )


def case_seed(seed: int, i: int) -> int:
    return derive_seed(seed, STREAM_CASES, i)


def table_vi_seed(seed: int, j: int) -> int:
    return derive_seed(seed, STREAM_CASES, 10**6 + j)


def sample_case(
    pool_xy: tuple[np.ndarray, np.ndarray],
    mean: float,
    variance: float,
    size: int,
    seed: int,
    perturb: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """One new-region evaluation set: pool examples with that region's power error."""
    x_all, y_all = pool_xy
    g = np.random.default_rng(seed)
    idx = g.choice(len(y_all), size=size, replace=size > len(y_all))
    x = x_all[idx]
    if perturb:
        x = perturb_matrix(x, RegionProfile(0, mean, variance, size), g)
    return x, y_all[idx]


def _case_mse(pre: ModelParams, post: ModelParams, xy) -> tuple[float, float]:
    return evaluate(pre, xy, MSE)[0], evaluate(post, xy, MSE)[0]


def _federate(global_model, regions, cfg, seed):
    updates = [
        r.adapt(global_model, replace(cfg.adapt, seed=derive_seed(seed, STREAM_TRAIN, 10 + r.profile.region_id)))
        for r in regions
    ]
    agg = fed_aggregate([u.model for u in updates], [u.n_k for u in updates])
    return updates, agg


def run_space_usecase(
    pretrain: list[LinkExample],
    region_pool: list[LinkExample],
    eval_pool: list[LinkExample],
    cfg: SpaceConfig | None = None,
    master_seed: int = 0,
) -> SpaceResult:
    """Pretrain, adapt per region, aggregate and compare on new regions."""
    cfg = cfg or SpaceConfig()
    global_model, curve, scalars = pretrain_global(pretrain, cfg, master_seed)

    regions = build_regions(region_pool, cfg, master_seed, cfg.perturb)
    updates, agg = _federate(global_model, regions, cfg, master_seed)
    for r, u in zip(regions, updates):
        scalars[f"region{r.profile.region_id}_mse_before"] = r.validation_mse(global_model)
        scalars[f"region{r.profile.region_id}_mse_after"] = r.validation_mse(u.model)

    pool_xy = _xy(eval_pool)
    params = case_parameters(cfg, master_seed)
    pre, post = np.empty(cfg.n_cases), np.empty(cfg.n_cases)
    for i, (m, v) in enumerate(params):
        xy = sample_case(pool_xy, m, v, cfg.case_examples, case_seed(master_seed, i), cfg.perturb)
        pre[i], post[i] = _case_mse(global_model, agg, xy)

    table = []
    for j, (m, v) in enumerate(TABLE_VI):
        xy = sample_case(pool_xy, m, v, cfg.case_examples, table_vi_seed(master_seed, j), cfg.perturb)
        a, b = _case_mse(global_model, agg, xy)
        table.append({"case": j + 1, "mean": m, "variance": v, "mse_pre": a, "mse_post": b})
        scalars[f"table_vi_case{j + 1}_mse_pre"] = a
        scalars[f"table_vi_case{j + 1}_mse_post"] = b

    p95_pre, p95_post = float(np.percentile(pre, 95)), float(np.percentile(post, 95))
    scalars.update(
        {
            "p95_mse_pre": p95_pre,
            "p95_mse_post": p95_post,
            "p95_relative_reduction": (p95_pre - p95_post) / p95_pre,
            "mean_mse_pre": float(pre.mean()),
            "mean_mse_post": float(post.mean()),
            "table_vi_improved": int(sum(t["mse_post"] <= t["mse_pre"] for t in table)),
        }
    )

    if cfg.include_control and cfg.perturb:
        scalars.update(_control(global_model, region_pool, pool_xy, cfg, master_seed))
    return SpaceResult(scalars, pre, post, params, table, curve, global_model, agg, updates)


def _control(global_model, region_pool, pool_xy, cfg, seed) -> dict:
    """Same protocol with every power error switched off."""
    regions = build_regions(region_pool, cfg, seed, perturb=False)
    _, agg = _federate(global_model, regions, cfg, seed)
    pre, post = [], []
    for i in range(cfg.n_cases):
        xy = sample_case(pool_xy, 0.0, 0.0, cfg.case_examples, case_seed(seed, i), perturb=False)
        a, b = _case_mse(global_model, agg, xy)
        pre.append(a)
        post.append(b)
    mp, mq = float(np.mean(pre)), float(np.mean(post))
    return {
        "control_mean_mse_pre": mp,
        "control_mean_mse_post": mq,
        "control_relative_difference": abs(mq - mp) / mp,
    }
