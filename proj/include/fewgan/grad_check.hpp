#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "fewgan/autodiff.hpp"

namespace fewgan::ad {

// A differentiable scalar function of one flat parameter vector: the builder
// receives a fresh tape plus the parameter leaf (rank-1) and returns the
// scalar output node.
using ScalarFn = std::function<Var(Tape&, Var)>;

inline double eval_scalar_fn(const ScalarFn& f, const std::vector<double>& theta) {
    Tape t;
    Var p = t.leaf(Array({theta.size()}, theta));
    return scalar_value(t.value(f(t, p)));
}

// Max over the given coordinates of
//   |analytic - central_difference| / max(1, |central_difference|).
inline double grad_check_coords(const ScalarFn& f, const std::vector<double>& theta,
                                double h, const std::vector<std::size_t>& coords) {
    if (h == 0.0) throw ContractError("grad_check: step h must be nonzero");
    Tape t;
    Var p = t.leaf(Array({theta.size()}, theta));
    Var out = f(t, p);
    t.backward(out);
    const Array& analytic = t.grad(p);

    double worst = 0.0;
    std::vector<double> probe = theta;
    for (std::size_t i : coords) {
        const double saved = probe[i];
        probe[i] = saved + h;
        const double fp = eval_scalar_fn(f, probe);
        probe[i] = saved - h;
        const double fm = eval_scalar_fn(f, probe);
        probe[i] = saved;
        const double central = (fp - fm) / (2.0 * h);
        const double err = std::fabs(analytic[i] - central) / std::max(1.0, std::fabs(central));
        if (err > worst) worst = err;
    }
    return worst;
}

// Full-coordinate check.
inline double grad_check(const ScalarFn& f, const std::vector<double>& theta, double h) {
    std::vector<std::size_t> coords(theta.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    return grad_check_coords(f, theta, h, coords);
}

}  // namespace fewgan::ad
