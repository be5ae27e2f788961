import numpy as np

# order-3 edge with exponents (-0.5, 1.2, 2.3): no integer differences, so any
# polynomial potential keeps the Frobenius series free of logarithms
NU3 = (1.38, -0.99)


def grid(count=6, re0=-10.0, re1=20.0, im=1.0):
    return [complex(x, im) for x in np.linspace(re0, re1, count)]


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def csqrt(z):
    return np.sqrt(complex(z))


def coth(z):
    return np.cosh(z) / np.sinh(z)


def nu_from_exponents(xi):
    """Singular coefficients nu_0..nu_{n-2} whose indicial roots are xi.

    Requires sum(xi) = n(n-1)/2 so that nu_{n-1} vanishes.
    """
    n = len(xi)
    rest = np.poly(xi).astype(complex)
    nu = np.zeros(n + 1, dtype=complex)
    for mu in range(n, -1, -1):
        ff = np.poly(np.arange(mu)) if mu else np.array([1.0])
        deg = rest.size - 1
        lead = rest[deg - mu] if deg >= mu else 0
        nu[mu] = lead
        rest[deg - mu:] -= lead * ff
    assert abs(nu[n] - 1) < 1e-12 and abs(nu[n - 1]) < 1e-9
    return tuple(nu[: n - 1].real if np.all(np.isreal(xi)) else nu[: n - 1])
