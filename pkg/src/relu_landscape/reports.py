"""JSON-ready dictionaries for analysis results."""

import json
import math

import numpy as np


def _num(v):
    v = float(v)
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _arr(a):
    if a is None:
        return None
    return [_arr(r) for r in a] if np.ndim(a) > 1 else [_num(v) for v in np.ravel(a)]


def _signs(s):
    return "".join("+" if v > 0 else "-" for v in s)


def feasibility_json(res):
    return {"feasible": bool(res.feasible), "margin": _num(res.margin),
            "witness": _arr(res.witness), "reason": res.reason}


def cell_report(pattern, analysis):
    sol = analysis.solution
    out = {
        "pattern": pattern.to_json()["I"],
        "kind": sol.kind,
        "loss": _num(sol.loss_at_min),
        "particular": _arr(sol.R()),
        "projector_rank": int(sol.solution_set.dim),
        "per_neuron_freedom": list(sol.per_neuron_freedom),
        "genuine_sign_vectors": [_signs(s) for s in analysis.genuine_sign_vectors],
        "genuine": analysis.genuine,
    }
    if analysis.report is not None:
        out["branches"] = {
            "positive": list(analysis.report.positive),
            "negative": list(analysis.report.negative),
        }
    else:
        out["branches"] = {_signs(s): feasibility_json(r)
                           for s, r in analysis.branch_results.items()}
        out["witnesses"] = {_signs(s): _arr(analysis.witness_R(s))
                            for s in analysis.genuine_sign_vectors}
    return out


def certificate_json(c):
    return {"neuron": c.neuron, "dz": _num(c.dz),
            "dw_descent": _arr(c.dw_descent), "dw_ascent": _arr(c.dw_ascent),
            "delta_descent": _num(c.delta_descent), "delta_ascent": _num(c.delta_ascent),
            "exact_descent": _num(c.exact_descent), "exact_ascent": _num(c.exact_ascent)}


def saddle_report(res):
    out = {"subset": list(res.subset), "status": res.status, "note": res.note}
    cand = res.candidate
    if cand is None:
        return out
    out.update({
        "R_tilde_particular": _arr(cand.R_tilde_set.particular),
        "projector_rank": int(cand.R_tilde_set.dim),
        "hyperplane_normals": {str(j): _arr(v) for j, v in sorted(cand.normals.items())},
        "genuine": res.genuine,
        "branches": [],
    })
    for br in res.branches:
        entry = {"signs": _signs(br.signs), "feasible": br.feasible, "margin": _num(br.margin)}
        if br.feasible:
            entry["R"] = _arr(br.R)
            entry["inactive_w"] = {str(j): _arr(w) for j, w in sorted(br.inactive_w.items())}
            entry["certificates"] = [certificate_json(c) for c in res.certificates[br.signs]]
        out["branches"].append(entry)
    return out


def boundary_report(res, data=None, limit_check=None):
    out = {"m": res.m, "n": res.n, "status": res.status, "note": res.note}
    sol = res.solution
    if sol is None:
        return out
    out["residual"] = _num(sol.residual)
    if not sol.solvable:
        return out
    out["kind"] = sol.kind
    out["branch_verdicts"] = {("z_m>0" if k > 0 else "z_m<0"): v
                              for k, v in sol.branch_verdicts.items()}
    out["accepted"] = []
    for s in sol.accepted_signs():
        entry = {"signs": _signs(s), "R": _arr(sol.R(s))}
        if data is not None and limit_check is not None:
            lg = limit_check(sol.cfg, sol.params(s, data), data)
            entry["one_sided_limits"] = {"passed": lg.passed, "degenerate": lg.degenerate,
                               "cell1_gradient": _arr(lg.cell1),
                               "cell2_gradient": _arr(lg.cell2)}
        out["accepted"].append(entry)
    return out


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"
