"""Independent reference objective in jax and a fixed-step gradient-descent oracle.

Kernels and their theta-derivatives come from jax autodiff of the scalar
kernel, sums are written pointwise, and the step is 1/L with L a global
bound on the curvature, so plain gradient descent converges monotonically.
"""
import jax
import jax.numpy as jnp
import numpy as np

jax.config.update("jax_enable_x64", True)


def _k(g):
    return lambda s, t: jnp.exp(-g * (s - t) ** 2)


def _kx(g, a, b):
    return jnp.exp(-g * jnp.sum((a - b) ** 2))


def _psi_abs(kappa, p):
    a = jnp.abs(p)
    return jnp.where(a <= kappa, jnp.minimum(a, kappa) ** 2 / (2 * kappa), a - kappa / 2)


def _psi_pos(kappa, p):
    q = jnp.clip(p, 0.0, kappa)
    return jnp.where(p <= kappa, q * q / (2 * kappa), p - kappa / 2)


class Problem:
    """Objective of one small instance; ``z`` holds every coefficient block flat."""

    def __init__(self, family, Z, y, theta, w, gx, gt, gb, lam, lam_nc, lam_b, kappa):
        self.family = family
        self.Z, self.y = jnp.asarray(Z), None if y is None else jnp.asarray(y)
        self.theta, self.w = jnp.asarray(theta), jnp.asarray(w)
        self.n, self.m = len(Z), len(theta)
        self.lam, self.lam_nc, self.lam_b, self.kappa = lam, lam_nc, lam_b, kappa
        kt, kb = _k(gt), _k(gb)
        self.kt, self.kb = kt, kb
        self.d2 = jax.grad(kt, argnums=1)
        self.d1 = jax.grad(kt, argnums=0)
        self.d12 = jax.grad(self.d2, argnums=0)
        self.db1 = jax.grad(kb, argnums=0)
        self.KXm = jnp.array([[_kx(gx, a, b) for b in Z] for a in Z])
        nm = self.n * self.m
        if family == "qr":
            self.sizes = (nm, nm, self.m)  # alpha, beta, bias
        elif family == "csc":
            self.sizes = (nm, 0, self.m)
        else:
            self.sizes = (nm, 0, self.m)  # alpha, -, threshold coefficients

    @property
    def size(self):
        return sum(self.sizes)

    def blocks(self, z):
        n, m = self.n, self.m
        a = z[: n * m].reshape(n, m)
        b = z[n * m: n * m + self.sizes[1]].reshape(n, m) if self.sizes[1] else jnp.zeros((n, m))
        c = z[n * m + self.sizes[1]:]
        return a, b, c

    def linear_outputs(self, z):
        """Predictions (and theta-derivatives) at every anchor pair."""
        a, b, c = self.blocks(z)
        th = self.theta
        KT = jnp.array([[self.kt(s, t) for t in th] for s in th])
        D2 = jnp.array([[self.d2(s, t) for t in th] for s in th])
        D1 = jnp.array([[self.d1(s, t) for t in th] for s in th])
        D12 = jnp.array([[self.d12(s, t) for t in th] for s in th])
        KB = jnp.array([[self.kb(s, t) for t in th] for s in th])
        DB1 = jnp.array([[self.db1(s, t) for t in th] for s in th])
        H = jnp.stack([jnp.stack([
            sum(self.KXm[i, k] * (a[k, l] * KT[j, l] + b[k, l] * D2[j, l])
                for k in range(self.n) for l in range(self.m))
            for j in range(self.m)]) for i in range(self.n)])
        Hd = jnp.stack([jnp.stack([
            sum(self.KXm[i, k] * (a[k, l] * D1[j, l] + b[k, l] * D12[j, l])
                for k in range(self.n) for l in range(self.m))
            for j in range(self.m)]) for i in range(self.n)])
        side = KB @ c
        if self.family == "dlse":
            return H, Hd, side
        return H + side[None, :], Hd + (DB1 @ c)[None, :], side

    def quadratic(self, z):
        a, b, c = self.blocks(z)
        th = self.theta
        KB = jnp.array([[self.kb(s, t) for t in th] for s in th])
        if self.family == "dlse":
            sl = 0.0
            for j in range(self.m):
                cj = jnp.array([sum(a[i, l] * self.kt(th[j], th[l]) for l in range(self.m)) for i in range(self.n)])
                sl = sl + self.w[j] * cj @ self.KXm @ cj
            return 0.5 * sl + 0.5 * self.lam * c @ KB @ c
        norm = 0.0
        for i in range(self.n):
            for k in range(self.n):
                for j in range(self.m):
                    for l in range(self.m):
                        s, t = th[j], th[l]
                        norm = norm + self.KXm[i, k] * (
                            a[i, j] * a[k, l] * self.kt(s, t) + a[i, j] * b[k, l] * self.d2(s, t)
                            + b[i, j] * a[k, l] * self.d1(s, t) + b[i, j] * b[k, l] * self.d12(s, t))
        return 0.5 * self.lam * norm + self.lam_b * c @ KB @ c

    def nonquadratic(self, z):
        H, Hd, side = self.linear_outputs(z)
        th, w, n, kap = self.theta, self.w, self.n, self.kappa
        if self.family == "qr":
            r = self.y[:, None] - H
            wt = jnp.abs(th[None, :] - (r <= 0))
            risk = jnp.sum(wt * _psi_abs(kap, r) * w[None, :]) / n
            return risk + self.lam_nc * jnp.sum(w[None, :] * _psi_pos(kap, -Hd))
        if self.family == "csc":
            y = self.y[:, None]
            wt = jnp.where(y > 0, (th[None, :] + 1) / 2, (1 - th[None, :]) / 2)
            return jnp.sum(wt * _psi_pos(kap, 1 - y * H) * w[None, :]) / n
        t = side
        return jnp.sum(w[None, :] * (-t[None, :] + _psi_pos(kap, t[None, :] - H) / th[None, :])) / n

    def value(self, z):
        return self.quadratic(z) + self.nonquadratic(z)

    def curvature_bound(self):
        """Global bound on the Hessian's largest eigenvalue."""
        z0 = jnp.zeros(self.size)
        Q = jax.hessian(self.quadratic)(z0)
        H, Hd, side = jax.jacfwd(self.linear_outputs)(z0)
        JH = H.reshape(-1, self.size)
        w, th, n, kap = np.asarray(self.w), np.asarray(self.theta), self.n, self.kappa
        cH = np.tile(w / n, n)  # loss weights are <= 1
        if self.family == "dlse":
            # u = t - H: combine the threshold row with each prediction row
            JT = side.reshape(self.m, self.size)
            J = np.vstack([np.asarray(JT)[j] - np.asarray(JH)[i * self.m + j]
                           for i in range(n) for j in range(self.m)])
            c = np.tile(w / (n * th), n)
        else:
            J, c = np.asarray(JH), cH
            if self.lam_nc > 0:
                J = np.vstack([J, np.asarray(Hd.reshape(-1, self.size))])
                c = np.concatenate([c, np.tile(self.lam_nc * w, n)])
        L_risk = np.linalg.eigvalsh(J.T @ (c[:, None] * J)).max() / kap
        eq = np.linalg.eigvalsh(np.asarray(Q))
        return eq.max() + L_risk, eq.min()


def gradient_descent(problem, steps=1_000_000):
    """Fixed-step gradient descent from zero; returns (value, grad sup-norm, step)."""
    L, _ = problem.curvature_bound()
    lr = 1.0 / L
    f = jax.jit(problem.value)
    g = jax.jit(jax.grad(problem.value))

    @jax.jit
    def run(z):
        return jax.lax.fori_loop(0, steps, lambda _, z: z - lr * g(z), z)

    z = run(jnp.zeros(problem.size))
    return float(f(z)), float(jnp.max(jnp.abs(g(z)))), np.asarray(z)
