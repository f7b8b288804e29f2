"""Shared builders and brute-force oracles for the tests."""
import numpy as np

from itl import kernels as K
from itl.data import Standardizer
from itl.model import ItlModel


def random_model(rng, n=4, m=3, d=2, beta=True, bias=True, gx=0.7, gt=5.0, task="qr"):
    th = np.sort(rng.uniform(0.05, 0.95, m))
    return ItlModel(
        task, rng.normal(size=(n, d)), th, rng.normal(size=(n, m)),
        rng.normal(size=(n, m)) if beta else None,
        K.gaussian(gx), K.gaussian(gt), K.gaussian(gt), Standardizer.identity(d), (0.0, 1.0),
        bias_coef=rng.normal(size=m) if bias else None,
        t_coef=rng.normal(size=m) if task == "dlse" else None,
    )


def loop_predict(model, x, theta):
    """Explicit double sum of the kernel expansion."""
    z = model.standardizer.transform(np.reshape(x, (1, -1)))[0]
    out = 0.0
    for i in range(model.n):
        kx = K.eval(model.kx, z, model.x_anchors[i])
        for j in range(model.m):
            tj = model.theta_anchors[j]
            out += kx * (model.alpha[i, j] * K.eval(model.ktheta, [theta], [tj])
                         + model.beta[i, j] * K.eval_d2(model.ktheta, theta, tj))
    for j in range(model.m if model.has_bias else 0):
        out += model.bias_coef[j] * K.eval(model.kb, [theta], [model.theta_anchors[j]])
    return out


def loop_norm(model):
    """Quadruple sum over (i, j, k, l) of the squared vv-RKHS norm."""
    X, T, A, B = model.x_anchors, model.theta_anchors, model.alpha, model.beta
    kt = model.ktheta
    s = 0.0
    for i in range(model.n):
        for k in range(model.n):
            kx = K.eval(model.kx, X[i], X[k])
            for j in range(model.m):
                for l in range(model.m):
                    s += kx * (A[i, j] * A[k, l] * K.eval(kt, [T[j]], [T[l]])
                               + A[i, j] * B[k, l] * K.eval_d2(kt, T[j], T[l])
                               + B[i, j] * A[k, l] * K.eval_d1(kt, T[j], T[l])
                               + B[i, j] * B[k, l] * K.eval_d1d2(kt, T[j], T[l]))
    return s


def make_state(family, rng, n=6, m=5, kappa=0.1, lam=0.05, lam_nc=0.5, lam_b=0.02, sampler="sobol"):
    from itl.objective import ObjectiveState
    from itl.sampling import sample

    dom = {"qr": (0.0, 1.0), "csc": (-1.0, 1.0), "dlse": (0.05, 0.95)}[family]
    Z = rng.normal(size=(n, 2))
    if family == "qr":
        y = rng.normal(size=n)
    elif family == "csc":
        y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    else:
        y = None
    return ObjectiveState(family, Z, y, sample(sampler, m, dom, 0), K.gaussian(0.5), K.gaussian(4.0),
                          K.gaussian(3.0), lam=lam, lam_nc=lam_nc if family == "qr" else 0.0,
                          lam_b=lam_b, kappa=kappa, use_bias=family != "dlse")


def fd_gradient(fun, z, h):
    g = np.empty_like(z)
    for k in range(z.size):
        e = np.zeros_like(z)
        e[k] = h
        g[k] = (fun(z + e) - fun(z - e)) / (2 * h)
    return g


def gradient_rel_error(state, z, h=1e-6):
    _, g = state.value_and_grad(z)
    fd = fd_gradient(state.value, z, h * max(1.0, np.abs(z).max()))
    return np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-8)


def loop_objective(state, z):
    """Pointwise evaluation of the objective from its definition."""
    from itl import losses as L

    alpha, beta, bias, tc = state.layout.split(z)
    th, w, n = state.theta, state.w, state.n
    mdl = ItlModel(state.task, state.Z, th, alpha, beta, state.kx, state.ktheta, state.kb,
                   Standardizer.identity(state.Z.shape[1]), (0.0, 1.0), bias_coef=bias)
    H = np.array([[loop_predict(mdl, state.Z[i], th[j]) for j in range(state.m)] for i in range(n)])
    if state.task == "dlse":
        t = np.array([sum(tc[l] * K.eval(state.kb, [th[j]], [th[l]]) for l in range(state.m))
                      for j in range(state.m)])
        risk = sum(w[j] * (-t[j] + L.smooth_pos(state.kappa, t[j] - H[i, j]) / th[j])
                   for i in range(n) for j in range(state.m)) / n
        slices = []
        for j in range(state.m):
            c = [sum(alpha[i, l] * K.eval(state.ktheta, [th[j]], [th[l]]) for l in range(state.m))
                 for i in range(n)]
            slices.append(sum(c[i] * c[k] * K.eval(state.kx, state.Z[i], state.Z[k])
                              for i in range(n) for k in range(n)))
        kb = K.gram(state.kb, th, th)
        return risk + 0.5 * sum(w[j] * slices[j] for j in range(state.m)) + 0.5 * state.lam * tc @ kb @ tc
    risk = sum(w[j] * float(L.loss(state.loss_spec, th[j], state.y[i], H[i, j]))
               for i in range(n) for j in range(state.m)) / n
    pen = 0.5 * state.lam * loop_norm(mdl)
    if bias is not None:
        pen += state.lam_b * sum(bias[j] * bias[l] * K.eval(state.kb, [th[j]], [th[l]])
                                 for j in range(state.m) for l in range(state.m))
    if state.lam_nc > 0:
        from itl.model import predict_dtheta
        pen += state.lam_nc * sum(w[j] * float(L.smooth_pos(state.kappa, -predict_dtheta(mdl, state.Z[i], th[j])))
                                  for i in range(n) for j in range(state.m))
    return risk + pen
