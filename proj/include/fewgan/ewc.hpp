#pragma once

#include <vector>

#include "fewgan/mlp.hpp"

namespace fewgan::adapt {

namespace detail {

inline void check_aligned(const model::ParamVector& theta, const model::ParamVector& anchor,
                          const std::vector<double>& fisher) {
    if (theta.layout != anchor.layout)
        throw ContractError("ewc_penalty: parameter layouts differ");
    if (fisher.size() != theta.values.size())
        throw ContractError("ewc_penalty: fisher length does not match parameters");
}

}  // namespace detail

// sum_i F_i (theta_i - anchor_i)^2, accumulated per layout entry so the value
// matches the taped version bit for bit.
inline double ewc_penalty_raw(const model::ParamVector& theta, const model::ParamVector& anchor,
                              const std::vector<double>& fisher) {
    detail::check_aligned(theta, anchor, fisher);
    double total = 0.0;
    for (const model::LayoutEntry& e : theta.layout.entries) {
        double part = 0.0;
        for (std::size_t i = e.offset; i < e.offset + e.length; ++i) {
            const double d = theta.values[i] - anchor.values[i];
            part += fisher[i] * (d * d);
        }
        total += part;
    }
    return total;
}

// Taped version, differentiable w.r.t. the live parameters. Anchor and fisher
// enter as constants.
inline ad::Var ewc_penalty_node(ad::Tape& tape, const model::TapedParams& theta_vars,
                                const model::ParamVector& anchor,
                                const std::vector<double>& fisher) {
    if (fisher.size() != anchor.values.size())
        throw ContractError("ewc_penalty: fisher length does not match parameters");
    ad::Var total;
    bool first = true;
    for (std::size_t k = 0; k < anchor.layout.entries.size(); ++k) {
        const model::LayoutEntry& e = anchor.layout.entries[k];
        std::vector<std::size_t> shape = (e.kind == model::ParamKind::weight)
                                             ? std::vector<std::size_t>{e.rows, e.cols}
                                             : std::vector<std::size_t>{e.cols};
        std::vector<double> a(anchor.values.begin() + static_cast<std::ptrdiff_t>(e.offset),
                              anchor.values.begin() + static_cast<std::ptrdiff_t>(e.offset + e.length));
        std::vector<double> f(fisher.begin() + static_cast<std::ptrdiff_t>(e.offset),
                              fisher.begin() + static_cast<std::ptrdiff_t>(e.offset + e.length));
        ad::Var av = tape.leaf(Array(shape, std::move(a)));
        ad::Var fv = tape.leaf(Array(shape, std::move(f)));
        ad::Var part = tape.sum(tape.mul(fv, tape.square(tape.sub(theta_vars.vars[k], av))));
        total = first ? part : tape.add(total, part);
        first = false;
    }
    return total;
}

}  // namespace fewgan::adapt
