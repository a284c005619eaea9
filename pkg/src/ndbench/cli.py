"""ndbench command line: extract, aggregate, whiten, index, mine, evaluate, simulate, project."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (GroundTruth, Label, NdPair, dedup_exact, md5_file, read_clusters, read_id_list,
                      read_manifest, read_pairs, enumerate_pairs)
from .descriptors import (FeatureMap, GistConfig, PcaModel, RmacConfig, gist_extract, load_gray,
                          pca_train, pca_whiten, regional_max, rmac_aggregate, rmac_regions, spoc_aggregate)
from .evaluation import (ScoredPair, fp_count_unordered, fp_projection, pick_thresholds, roc,
                         roc_from_distances, sens_spec, summary, verify_upper_bound, write_roc_csv,
                         write_summary)
from .fixture import FixtureConfig, make_fixture, write_fixture
from .formats import DescriptorSet, FormatError, read_descriptors, read_feature_map, write_descriptors
from .index import FlatIndex, pair_distance
from .mining import (MiningConfig, apply_relabel, mine, project_fp_rate, read_mined, specificity_floor,
                     write_mined)
from .querysim import build_design, run_sim, write_sim_csv

log = logging.getLogger("ndbench")

EXIT_INPUT = 2
EXIT_INVARIANT = 3
BOUND_ENUM_LIMIT = 20_000_000
DEFAULT_SEED = 0


class InputError(Exception):
    """Bad or missing input; exit code 2."""


class InvariantError(Exception):
    """Internal consistency check failed; exit code 3."""


# --- helpers -------------------------------------------------------------------

def _need(path) -> Path:
    if path is None:
        raise InputError("missing required input path")
    p = Path(path)
    if not p.exists():
        raise InputError(f"input file not found: {p}")
    return p


def _digest(path: Path) -> str:
    if path.is_dir():
        h = hashlib.md5()
        for f in sorted(path.iterdir()):
            if f.is_file():
                h.update(f.name.encode())
                h.update(md5_file(f).encode())
        return h.hexdigest()
    return md5_file(path)


def write_run_manifest(output: Path, command: str, config: dict, inputs: list[Path]) -> Path:
    """Sidecar describing how ``output`` was produced. No timestamps, so reruns are byte-identical."""
    snap = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(config.items())
            if k not in ("func",)}
    doc = {
        "command": command,
        "config": snap,
        "inputs": {str(p): _digest(p) for p in inputs if p is not None and Path(p).exists()},
        "tool_version": __version__,
    }
    path = output.with_name(output.name + ".manifest.json")
    path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return path


def _floats(s) -> list[float]:
    if s is None or s == "":
        return []
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    return [float(x) for x in str(s).split(",") if x.strip()]


def _caps(s) -> list[int | None]:
    out: list[int | None] = []
    for x in str(s).split(","):
        x = x.strip().lower()
        if not x:
            continue
        out.append(None if x in ("none", "inf", "all", "0") else int(x))
    return out


def _load_gt(pairs_path, clusters_path, query_ids) -> GroundTruth:
    if pairs_path:
        pairs = read_pairs(_need(pairs_path))
    elif clusters_path:
        pairs = [p for c in read_clusters(_need(clusters_path)) for p in enumerate_pairs(c)]
    else:
        raise InputError("need a pairs or clusters file")
    return GroundTruth.from_pairs(pairs, query_ids)


def _scored_positives(gt: GroundTruth, ds: DescriptorSet) -> list[ScoredPair]:
    out = []
    for p in gt.positive_pairs:
        if p.id_a not in ds or p.id_b not in ds:
            raise InputError(f"no descriptor for pair {p.key}")
        out.append(ScoredPair(p, pair_distance(ds.row(p.id_a), ds.row(p.id_b))))
    return out


def _scored_negatives(hn) -> list[ScoredPair]:
    return [ScoredPair(NdPair(p.query_id, p.pool_id, Label.NND), p.distance) for p in hn.pairs]


def _full_negative_distances(ds: DescriptorSet, query_ids, pool_ids, block: int = 256) -> np.ndarray:
    q = ds.subset(query_ids).matrix.astype(np.float64)
    p = ds.subset(pool_ids).matrix.astype(np.float64)
    out = np.empty((len(q), len(p)))
    for s in range(0, len(q), block):
        diff = q[s : s + block, None, :] - p[None, :, :]
        out[s : s + block] = np.sqrt((diff * diff).sum(axis=2))
    same = np.asarray(query_ids)[:, None] == np.asarray(pool_ids)[None, :]
    return out[~same]


# --- verbs ----------------------------------------------------------------------

def cmd_gist(args) -> int:
    manifest = _need(args.manifest)
    records = read_manifest(manifest)
    if not records:
        raise InputError(f"manifest {manifest} lists no images")
    base = manifest.parent
    if args.dedup:
        records = [r if r.content_hash else r.__class__(r.id, r.path, md5_file(base / r.path))
                   for r in records]
        records, removed = dedup_exact(records)
        for rid, rep in removed:
            log.info("exact duplicate %s of %s skipped", rid, rep)
    cfg = GistConfig(image_side=args.side, blocks=args.blocks, scales=args.scales,
                     orientations_per_scale=args.orientations, pooling=args.pooling)
    ids, rows, skipped = [], [], []
    for r in records:
        try:
            img = load_gray(base / r.path, cfg.image_side)
        except (OSError, ValueError) as exc:
            log.warning("skipping %s: %s", r.id, exc)
            skipped.append(r.id)
            continue
        ids.append(r.id)
        rows.append(gist_extract(img, cfg).values)
    if not rows:
        raise InputError("no readable images in manifest")
    out = Path(args.out)
    write_descriptors(out, DescriptorSet(tuple(ids), np.stack(rows)))
    write_run_manifest(out, "gist", {**vars(args), "skipped": skipped}, [manifest])
    print(f"wrote {len(ids)} x {cfg.dim} descriptors to {out} ({len(skipped)} skipped)")
    return 0


def _feature_maps(directory: Path):
    files = sorted(directory.glob("*.ndfm"))
    if not files:
        raise InputError(f"no .ndfm feature maps in {directory}")
    for f in files:
        yield f.stem, read_feature_map(f)


def cmd_aggregate(args) -> int:
    fdir = _need(args.featuremaps)
    pca = PcaModel.load(_need(args.pca)) if args.pca else None
    if args.method == "rmac" and pca is None:
        raise InputError("rmac aggregation requires --pca")
    rcfg = RmacConfig(max_scale=args.levels, overlap_target=args.overlap)
    ids, rows = [], []
    for fid, fmap in _feature_maps(fdir):
        if args.method == "spoc":
            d = spoc_aggregate(fmap)
            if pca is not None:
                d = pca_whiten(d, pca)
        else:
            d = rmac_aggregate(fmap, rcfg, pca)
        ids.append(fid)
        rows.append(d.values)
    out = Path(args.out)
    write_descriptors(out, DescriptorSet(tuple(ids), np.stack(rows)))
    write_run_manifest(out, "aggregate", vars(args), [fdir] + ([Path(args.pca)] if args.pca else []))
    print(f"wrote {len(ids)} {args.method} descriptors to {out}")
    return 0


def cmd_pca_train(args) -> int:
    if args.featuremaps:
        fdir = _need(args.featuremaps)
        vecs = []
        rcfg = RmacConfig(max_scale=args.levels, overlap_target=args.overlap)
        for _, fmap in _feature_maps(fdir):
            if args.regional:
                vecs.extend(regional_max(fmap, rmac_regions(fmap.height, fmap.width, rcfg)))
            else:
                vecs.append(spoc_aggregate(fmap).values)
        data, src = np.asarray(vecs), fdir
    else:
        src = _need(args.descriptors)
        data = read_descriptors(src).matrix
    model = pca_train(data, epsilon=args.epsilon)
    out = Path(args.out)
    model.save(out)
    write_run_manifest(out, "pca-train", vars(args), [src])
    print(f"trained PCA on {len(data)} x {model.dim} samples -> {out}")
    return 0


def cmd_index(args) -> int:
    db_path, q_path = _need(args.descriptors), _need(args.queries)
    db, qs = read_descriptors(db_path), read_descriptors(q_path)
    index = FlatIndex.from_set(db)
    if args.radius is not None:
        res = index.range_batch(qs.matrix, args.radius, args.k, threads=args.threads)
    else:
        res = index.knn_batch(qs.matrix, args.k or 10, threads=args.threads)
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["query_id", "rank", "neighbor_id", "distance"])
        for qid, nbrs in zip(qs.ids, res):
            for rank, n in enumerate(nbrs):
                w.writerow([qid, rank, n.id, repr(n.distance)])
    write_run_manifest(out, "index", vars(args), [db_path, q_path])
    print(f"searched {len(qs)} queries against {len(db)} rows -> {out}")
    return 0


def _mine(ds: DescriptorSet, query_ids, pool_ids, cfg: MiningConfig):
    index = FlatIndex.from_set(ds.subset(pool_ids))
    return mine(index, ds, cfg, query_ids)


def cmd_mine(args) -> int:
    dpath = _need(args.descriptors)
    ds = read_descriptors(dpath)
    qids, pids = read_id_list(_need(args.queries)), read_id_list(_need(args.pool))
    cfg = MiningConfig(args.strategy, args.knn_per_query, args.total_pairs, args.threads)
    hn = _mine(ds, qids, pids, cfg)
    out = Path(args.out)
    write_mined(out, hn)
    if args.review:
        write_mined(args.review, hn, with_label=True)
    write_run_manifest(out, "mine", vars(args), [dpath, Path(args.queries), Path(args.pool)])
    print(f"mined {len(hn)} {hn.strategy.value} pairs (K={hn.n_queries}, M={hn.pool_size}) -> {out}")
    return 0


def cmd_roc(args) -> int:
    dpath, mpath = _need(args.descriptors), _need(args.mined)
    ds = read_descriptors(dpath)
    hn = read_mined(mpath, args.n_queries, args.pool_size)
    extra: list[NdPair] = []
    if args.relabel:
        hn, extra = apply_relabel(hn, _need(args.relabel))
    gt = _load_gt(args.pairs, args.clusters, ())
    if extra:
        gt = GroundTruth.from_pairs(set(gt.pairs) | set(extra))
    labels = [Label(x.strip().upper()) for x in args.labels.split(",")]
    pairs = _scored_positives(gt, ds) + _scored_negatives(hn)
    curve = roc(pairs, labels, grid=args.grid, strategy=hn.strategy.value)
    out = Path(args.out)
    write_roc_csv(out, curve)
    summ = Path(args.summary) if args.summary else out.with_suffix(".json")
    write_summary(summ, curve)
    write_run_manifest(out, "roc", vars(args), [dpath, mpath])
    print(json.dumps(summary(curve)))
    return 0


def cmd_simulate(args) -> int:
    dpath = _need(args.descriptors)
    ds = read_descriptors(dpath)
    qids, pids = read_id_list(_need(args.queries)), read_id_list(_need(args.pool))
    gt = _load_gt(args.pairs, args.clusters, qids)
    thresholds = _floats(args.thresholds)
    if args.fp_rates:
        mined = read_mined(_need(args.mined), len(qids), len(pids))
        curve = roc_from_distances([0.0], mined.distances)
        thresholds += pick_thresholds(curve, _floats(args.fp_rates))
    if not thresholds:
        raise InputError("give --thresholds or --mined with --fp-rates")
    design = build_design(gt, ds, pids, qids, thresholds, _caps(args.caps))
    res = run_sim(design, threads=args.threads)
    out = Path(args.out)
    write_sim_csv(out, res)
    write_run_manifest(out, "simulate", vars(args), [dpath])
    print(f"{len(res.points)} (threshold, cap) points -> {out}")
    return 0


def projection_rows(fp_rates, n_queries: int, pool_size: int, n_mined: int | None = None) -> list[dict]:
    """Projected collection-level FP figures for FP rates measured on mined pairs."""
    n_mined = n_queries if n_mined is None else n_mined
    rows = [{"row": "specificity_floor", "fp_rate_mined": 1.0 / n_mined,
             "projected_fp_rate": specificity_floor(n_queries, pool_size),
             "projected_specificity": 1.0 - specificity_floor(n_queries, pool_size),
             "fp_per_query": specificity_floor(n_queries, pool_size) * pool_size}]
    for r in fp_rates:
        # mined FPs, r * H, spread over all K*M pairs
        rate = project_fp_rate(r, pool_size) * n_mined / n_queries
        rows.append({"row": f"fp_rate={r:g}", "fp_rate_mined": r, "projected_fp_rate": rate,
                     "projected_specificity": 1.0 - rate,
                     "fp_per_query": fp_projection(1.0 - rate, (n_queries, pool_size))[1]})
    return rows


def _write_rows(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def cmd_project(args) -> int:
    rows = projection_rows(_floats(args.fp_rates), args.K, args.M, args.mined_pairs)
    if args.collection:
        for r in rows:
            r["fp_count_ordered"] = fp_projection(r["projected_specificity"], (args.collection, args.collection))[0]
            r["fp_count_unordered"] = fp_count_unordered(r["projected_specificity"], args.collection)
    for r in rows:
        print("  ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in r.items()))
    if args.out:
        out = Path(args.out)
        _write_rows(out, rows)
        write_run_manifest(out, "project", vars(args), [])
    return 0


PIPELINE_KEYS = {
    "descriptors": None, "pairs": None, "clusters": None, "queries": None, "pool": None,
    "relabel": None, "strategy": "hn2", "knn_per_query": "10", "total_pairs": "10000",
    "fp_rates": "0.01,0.05,0.1", "caps": "none,2,4,6,8,10", "labels": "IND,NIND", "out_dir": "report",
    "seed": "0", "threads": None,
}


def read_config(path: Path) -> dict[str, str]:
    cfg = {}
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        k = k.replace("-", "_")
        if k not in PIPELINE_KEYS:
            raise InputError(f"{path}:{n}: unknown key {k!r}")
        cfg[k] = v
    return cfg


def cmd_pipeline(args) -> int:
    cfg_path = _need(args.config)
    base = cfg_path.parent
    cfg = {k: v for k, v in PIPELINE_KEYS.items()}
    cfg.update(read_config(cfg_path))
    for k in PIPELINE_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = str(v)

    def path(key):
        v = cfg.get(key)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else base / p

    dpath = _need(path("descriptors"))
    qpath, ppath = _need(path("queries")), _need(path("pool"))
    for key in ("pairs", "clusters", "relabel"):
        if cfg.get(key) is not None:
            _need(path(key))
    threads = int(cfg["threads"]) if cfg.get("threads") else args.threads
    out_dir = path("out_dir")
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = [p for p in (dpath, qpath, ppath, path("pairs"), path("clusters"), path("relabel")) if p]

    ds = read_descriptors(dpath)
    qids, pids = read_id_list(qpath), read_id_list(ppath)
    gt = _load_gt(path("pairs"), path("clusters"), qids)
    mcfg = MiningConfig(cfg["strategy"], int(cfg["knn_per_query"]), int(cfg["total_pairs"]), threads)

    # hard negatives
    hn = _mine(ds, qids, pids, mcfg)
    mined_path = out_dir / "mined.csv"
    write_mined(mined_path, hn)
    write_mined(out_dir / "review.csv", hn, with_label=True)
    if cfg.get("relabel"):
        hn, extra = apply_relabel(hn, path("relabel"))
        if extra:
            gt = GroundTruth.from_pairs(set(gt.pairs) | set(extra), qids)
    write_run_manifest(mined_path, "pipeline:mine", cfg, inputs)

    # ROC
    labels = [Label(x.strip().upper()) for x in cfg["labels"].split(",")]
    pairs = _scored_positives(gt, ds) + _scored_negatives(hn)
    curve = roc(pairs, labels, strategy=hn.strategy.value)
    roc_path = out_dir / "roc.csv"
    write_roc_csv(roc_path, curve)
    write_summary(out_dir / "summary.json", curve)
    write_run_manifest(roc_path, "pipeline:roc", cfg, inputs)
    if abs(curve.trapezoid_auc() - curve.auc) > 1e-12:
        raise InvariantError(f"indicator AUC {curve.auc} != trapezoid AUC {curve.trapezoid_auc()}")

    # bound check over every query x pool pair, when small enough to enumerate
    bound = {"status": "skipped"}
    if len(qids) * len(pids) <= BOUND_ENUM_LIMIT:
        pos = np.array([sp.distance for sp in pairs if sp.pair.label in labels])
        full = _full_negative_distances(ds, qids, pids)
        rep = verify_upper_bound(pos, full, hn)
        bound = {"status": "checked", "auc_full": rep.auc_full, "auc_hn": rep.auc_hn,
                 "strategy": rep.strategy, "exact_regime": rep.exact_regime,
                 "bound_holds": rep.bound_holds}
        if rep.exact_regime and not rep.bound_holds:
            raise InvariantError(f"hard-negative AUC {rep.auc_hn} exceeds full AUC {rep.auc_full}")
    (out_dir / "bound.json").write_text(json.dumps(bound, indent=1) + "\n", encoding="utf-8")

    # thresholds, simulation, projection
    rates = _floats(cfg["fp_rates"])
    thresholds = pick_thresholds(curve, rates)
    design = build_design(gt, ds, pids, qids, thresholds, _caps(cfg["caps"]))
    sim = run_sim(design, threads=threads)
    sim_path = out_dir / "simulation.csv"
    write_sim_csv(sim_path, sim)
    write_run_manifest(sim_path, "pipeline:simulate", cfg, inputs)
    for p in sim.points:
        if p.cap is not None and p.avg_fp > p.cap:
            raise InvariantError(f"avg FPs/query {p.avg_fp} exceeds cap {p.cap}")

    pos_d = np.array([sp.distance for sp in pairs if sp.pair.label in labels])
    neg_d = curve.neg_sorted
    rows = projection_rows(rates, hn.n_queries, hn.pool_size, len(hn))
    rows[0]["threshold"] = math.nan
    rows[0]["sensitivity"] = math.nan
    for r, t in zip(rows[1:], thresholds):
        r["threshold"] = t
        r["sensitivity"] = sens_spec(pos_d, neg_d, t)[0]
    proj_path = out_dir / "projection.csv"
    _write_rows(proj_path, rows)
    write_run_manifest(proj_path, "pipeline:project", cfg, inputs)
    print(json.dumps({**summary(curve), "bound": bound, "out_dir": str(out_dir)}))
    return 0


def cmd_fixture(args) -> int:
    cfg = FixtureConfig(dim=args.dim, pool=args.pool, queries=args.queries, clusters=args.clusters,
                        seed=DEFAULT_SEED if args.seed is None else args.seed)
    paths = write_fixture(args.out_dir, make_fixture(cfg), cfg)
    for k, p in paths.items():
        print(f"{k}: {p}")
    return 0


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--seed", type=int, default=None, help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="ndbench", description=__doc__)
    ap.add_argument("--version", action="version", version=f"ndbench {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gist", parents=[common], help="GIST descriptors for a manifest of images")
    p.add_argument("--manifest", required=True, help="CSV id,path,md5hex")
    p.add_argument("--out", required=True)
    p.add_argument("--side", type=int, default=512)
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--scales", type=int, default=4)
    p.add_argument("--orientations", type=int, default=8)
    p.add_argument("--pooling", choices=("mean", "energy"), default="mean")
    p.add_argument("--dedup", action="store_true", help="drop exact duplicates by MD5 first")
    p.set_defaults(func=cmd_gist)

    p = sub.add_parser("aggregate", parents=[common], help="SPoC / R-MAC from feature-map files")
    p.add_argument("--featuremaps", required=True, help="directory of .ndfm files")
    p.add_argument("--method", choices=("spoc", "rmac"), required=True)
    p.add_argument("--pca", help="PCA model (.npz); required for rmac, optional whitening for spoc")
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--overlap", type=float, default=0.4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("pca-train", parents=[common], help="train PCA whitening without reduction")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--descriptors")
    src.add_argument("--featuremaps")
    p.add_argument("--regional", action="store_true", help="train on R-MAC regional vectors")
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--overlap", type=float, default=0.4)
    p.add_argument("--epsilon", type=float, default=1e-10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pca_train)

    p = sub.add_parser("index", parents=[common], help="exact kNN or range search")
    p.add_argument("--descriptors", required=True)
    p.add_argument("--queries", required=True, help="query descriptor matrix")
    p.add_argument("--k", type=int, default=None, help="neighbours (kNN) or cap (range)")
    p.add_argument("--radius", type=float, default=None, help="range threshold in L2 units")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("mine", parents=[common], help="hard-negative mining")
    p.add_argument("--descriptors", required=True)
    p.add_argument("--queries", required=True, help="negative query id list")
    p.add_argument("--pool", required=True, help="pool id list")
    p.add_argument("--strategy", choices=("hn1", "hn2"), default="hn1")
    p.add_argument("--knn-per-query", type=int, default=10)
    p.add_argument("--total-pairs", type=int, default=10_000)
    p.add_argument("--review", help="also write a relabel-ready review CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("roc", parents=[common], help="ROC curve and AUC with 95%% CI")
    p.add_argument("--descriptors", required=True)
    p.add_argument("--pairs")
    p.add_argument("--clusters")
    p.add_argument("--mined", required=True)
    p.add_argument("--relabel")
    p.add_argument("--labels", default="IND,NIND", help="positive labels; IND alone ignores NIND pairs")
    p.add_argument("--grid", type=int, default=None, help="fixed number of thresholds")
    p.add_argument("--n-queries", type=int, default=None)
    p.add_argument("--pool-size", type=int, default=None)
    p.add_argument("--summary")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("simulate", parents=[common], help="range-query recall vs FPs/query")
    p.add_argument("--descriptors", required=True)
    p.add_argument("--pairs")
    p.add_argument("--clusters")
    p.add_argument("--queries", required=True, help="negative query id list")
    p.add_argument("--pool", required=True, help="distractor pool id list")
    p.add_argument("--thresholds", default=None)
    p.add_argument("--mined")
    p.add_argument("--fp-rates", default=None)
    p.add_argument("--caps", default="none,2,4,6,8,10")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("project", parents=[common], help="project mined FP rates to collection scale")
    p.add_argument("--K", type=int, required=True, help="number of queries")
    p.add_argument("--M", type=int, required=True, help="pool size")
    p.add_argument("--mined-pairs", type=int, default=None, help="size of the mined set (default K)")
    p.add_argument("--fp-rates", default="0.01,0.1")
    p.add_argument("--collection", type=int, default=None, help="collection size for FP counts")
    p.add_argument("--out")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("pipeline", parents=[common], help="mine, ROC, bound check, simulate, project")
    p.add_argument("--config", required=True, help="key = value file")
    for key in PIPELINE_KEYS:
        if key in ("seed", "threads"):
            continue
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("fixture", parents=[common], help="write the synthetic desk-scale dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--pool", type=int, default=2000)
    p.add_argument("--queries", type=int, default=200)
    p.add_argument("--clusters", type=int, default=60)
    p.set_defaults(func=cmd_fixture)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.random.seed(DEFAULT_SEED if args.seed is None else args.seed)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"ndbench: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FormatError, KeyError, FileNotFoundError) as exc:
        print(f"ndbench: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantError as exc:
        print(f"ndbench: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"ndbench: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
