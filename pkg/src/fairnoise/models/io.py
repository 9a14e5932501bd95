"""Versioned text serialisation of trained models (test goldens, no pickle).

One ``key=value`` line per datum; floats carry 17 significant digits so a
save/load round trip reproduces scores bit for bit.  Category values are
percent-escaped to keep the format line-safe.
"""

from __future__ import annotations

from pathlib import Path
from urllib.parse import quote, unquote

import numpy as np

from fairnoise.dataset import CONTINUOUS, DISCRETE
from fairnoise.models import TrainedModel
from fairnoise.models.bayes import ColumnStats, NaiveBayesParams
from fairnoise.models.encoding import ColumnCodec, FeatureEncoder, ModelsError
from fairnoise.models.linear import LinearParams
from fairnoise.models.tree import TreeParams

FORMAT_TAG = "fairnoise-model/1"


def _f(x) -> str:
    return format(float(x), ".17g")


def _floats(values) -> str:
    return ",".join(_f(v) for v in values)


def _parse_floats(text) -> np.ndarray:
    if text == "":
        return np.zeros(0)
    return np.array([float(v) for v in text.split(",")])


def _cats(values) -> str:
    return ",".join(quote(str(v), safe="") for v in values)


def _parse_cats(text) -> tuple:
    if text == "":
        return ()
    return tuple(unquote(v) for v in text.split(","))


def save_model(model: TrainedModel, path):
    lines = [FORMAT_TAG, f"learner={model.learner}", f"seed={model.seed}"]
    for key in sorted(model.hyper):
        value = model.hyper[key]
        lines.append(f"hyper.{key}={value if isinstance(value, int) else _f(value)}")
    if model.encoder is not None:
        enc = model.encoder
        lines.append(f"encoder.protected={int(enc.include_protected)}")
        lines.append(f"encoder.n={len(enc.codecs)}")
        for i, c in enumerate(enc.codecs):
            if c.tag == CONTINUOUS:
                lines.append(f"encoder.{i}=cont|{quote(c.name, safe='')}|{_f(c.mean)}|{_f(c.std)}")
            else:
                lines.append(f"encoder.{i}=disc|{quote(c.name, safe='')}|{_cats(c.categories)}")
    params = model.params
    if isinstance(params, LinearParams):
        lines.append(f"linear.w={_floats(params.w)}")
        lines.append(f"linear.b={_f(params.b)}")
    elif isinstance(params, TreeParams):
        lines.append(f"tree.n={len(params.feature)}")
        for i in range(len(params.feature)):
            lines.append(
                "tree.%d=%d|%s|%d|%d|%s" % (
                    i, params.feature[i], _f(params.threshold[i]),
                    params.left[i], params.right[i], _f(params.score[i]))
            )
    elif isinstance(params, NaiveBayesParams):
        lines.append(f"nb.log_prior={_floats(params.log_prior)}")
        lines.append(f"nb.protected={int(params.protected_as_feature)}")
        stats = list(params.stats)
        if params.protected_stats is not None:
            stats.append(params.protected_stats)
        lines.append(f"nb.n={len(params.stats)}")
        for i, st in enumerate(stats):
            key = f"nb.{i}" if i < len(params.stats) else "nb.prot"
            if st.tag == CONTINUOUS:
                lines.append(
                    f"{key}=cont|{quote(st.name, safe='')}|{_f(st.mean)}|{_f(st.std)}|"
                    f"{_floats(st.class_mean)}|{_floats(st.class_var)}"
                )
            else:
                lines.append(
                    f"{key}=disc|{quote(st.name, safe='')}|{_cats(st.categories)}|"
                    f"{_floats(st.class_logp[0])}|{_floats(st.class_logp[1])}|"
                    f"{_floats(st.class_floor)}"
                )
    else:
        raise ModelsError(f"cannot serialise params of type {type(params).__name__}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_stats(body) -> ColumnStats:
    fields = body.split("|")
    if fields[0] == "cont":
        _, name, mean, std, cmean, cvar = fields
        return ColumnStats(unquote(name), CONTINUOUS, mean=float(mean), std=float(std),
                           class_mean=tuple(_parse_floats(cmean)),
                           class_var=tuple(_parse_floats(cvar)))
    _, name, cats, lp0, lp1, floor = fields
    cats = _parse_cats(cats)
    return ColumnStats(unquote(name), DISCRETE, categories=cats,
                       class_logp=(tuple(_parse_floats(lp0)), tuple(_parse_floats(lp1))),
                       class_floor=tuple(_parse_floats(floor)))


def load_model(path) -> TrainedModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != FORMAT_TAG:
        raise ModelsError(f"{path}: not a {FORMAT_TAG} file")
    kv = {}
    for line in lines[1:]:
        if not line:
            continue
        key, value = line.split("=", 1)
        kv[key] = value
    learner = kv["learner"]
    seed = int(kv["seed"])
    hyper = {}
    for key, value in kv.items():
        if key.startswith("hyper."):
            try:
                hyper[key[6:]] = int(value)
            except ValueError:
                hyper[key[6:]] = float(value)

    encoder = None
    if "encoder.n" in kv:
        codecs = []
        for i in range(int(kv["encoder.n"])):
            fields = kv[f"encoder.{i}"].split("|")
            if fields[0] == "cont":
                codecs.append(ColumnCodec(unquote(fields[1]), CONTINUOUS,
                                          float(fields[2]), float(fields[3])))
            else:
                codecs.append(ColumnCodec(unquote(fields[1]), DISCRETE,
                                          categories=_parse_cats(fields[2])))
        encoder = FeatureEncoder(tuple(codecs), bool(int(kv["encoder.protected"])))

    if "linear.w" in kv:
        params = LinearParams(_parse_floats(kv["linear.w"]), float(kv["linear.b"]))
    elif "tree.n" in kv:
        n = int(kv["tree.n"])
        feature = np.zeros(n, dtype=np.int64)
        threshold = np.zeros(n)
        left = np.zeros(n, dtype=np.int64)
        right = np.zeros(n, dtype=np.int64)
        leaf = np.zeros(n)
        for i in range(n):
            f_, t_, l_, r_, s_ = kv[f"tree.{i}"].split("|")
            feature[i] = int(f_)
            threshold[i] = float(t_)
            left[i] = int(l_)
            right[i] = int(r_)
            leaf[i] = float(s_)
        params = TreeParams(feature, threshold, left, right, leaf)
    elif "nb.n" in kv:
        stats = tuple(_parse_stats(kv[f"nb.{i}"]) for i in range(int(kv["nb.n"])))
        prot = bool(int(kv["nb.protected"]))
        prot_stats = _parse_stats(kv["nb.prot"]) if prot else None
        lp = _parse_floats(kv["nb.log_prior"])
        params = NaiveBayesParams((lp[0], lp[1]), stats, prot, prot_stats)
    else:
        raise ModelsError(f"{path}: no parameter block found")
    return TrainedModel(learner, encoder, params, hyper, seed)
