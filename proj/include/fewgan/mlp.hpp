#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fewgan/autodiff.hpp"
#include "fewgan/rng.hpp"

namespace fewgan::model {

// Fully-connected net: leaky_relu hidden activations, identity output.
// The discriminator's output is a raw logit; sigmoids live inside losses.
struct MlpSpec {
    std::vector<std::size_t> widths;  // input -> hidden... -> output
    double leaky_slope = 0.2;

    bool operator==(const MlpSpec&) const = default;
};

inline void validate(const MlpSpec& spec) {
    if (spec.widths.size() < 2)
        throw InputError("MlpSpec: need at least input and output widths");
    for (std::size_t w : spec.widths)
        if (w == 0) throw InputError("MlpSpec: zero layer width");
}

inline std::size_t param_count(const MlpSpec& spec) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l)
        n += spec.widths[l] * spec.widths[l + 1] + spec.widths[l + 1];
    return n;
}

enum class ParamKind { weight, bias };

inline const char* to_string(ParamKind k) {
    return k == ParamKind::weight ? "weight" : "bias";
}

struct LayoutEntry {
    std::string layer;  // "layer0", "layer1", ...
    ParamKind kind = ParamKind::weight;
    std::size_t offset = 0;
    std::size_t length = 0;
    std::size_t rows = 0;  // weight: fan_in; bias: 1
    std::size_t cols = 0;  // fan_out

    bool operator==(const LayoutEntry&) const = default;
};

struct ParamLayout {
    std::vector<LayoutEntry> entries;
    std::size_t total = 0;

    bool operator==(const ParamLayout&) const = default;
};

// Layout is a pure function of the spec: layer0.weight, layer0.bias, layer1...
inline ParamLayout layout_of(const MlpSpec& spec) {
    validate(spec);
    ParamLayout layout;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        const std::size_t fan_in = spec.widths[l];
        const std::size_t fan_out = spec.widths[l + 1];
        const std::string name = "layer" + std::to_string(l);
        layout.entries.push_back({name, ParamKind::weight, offset, fan_in * fan_out, fan_in, fan_out});
        offset += fan_in * fan_out;
        layout.entries.push_back({name, ParamKind::bias, offset, fan_out, 1, fan_out});
        offset += fan_out;
    }
    layout.total = offset;
    return layout;
}

// Flat parameter vector plus its layer/kind index map.
struct ParamVector {
    ParamLayout layout;
    std::vector<double> values;
};

// Weights from a fan-in-scaled normal (std = 1/sqrt(fan_in)), biases zero.
inline ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
    ParamVector p{layout_of(spec), {}};
    p.values.assign(p.layout.total, 0.0);
    Rng rng(mix_seed(seed));
    for (const LayoutEntry& e : p.layout.entries) {
        if (e.kind != ParamKind::weight) continue;
        const double std_dev = 1.0 / std::sqrt(static_cast<double>(e.rows));
        for (std::size_t i = 0; i < e.length; ++i)
            p.values[e.offset + i] = std_dev * rng.normal();
    }
    return p;
}

namespace detail {

inline void check_input(const MlpSpec& spec, const ParamVector& theta, const Array& x) {
    if (x.rank() != 2 || x.cols() != spec.widths.front())
        throw DimensionError("mlp forward: input " + x.shape_str() + " does not match spec width " +
                             std::to_string(spec.widths.front()));
    if (theta.values.size() != param_count(spec))
        throw DimensionError("mlp forward: parameter vector length mismatch");
}

}  // namespace detail

// Pure value-path forward (no tape): batch x widths.front() -> batch x widths.back().
inline Array forward(const MlpSpec& spec, const ParamVector& theta, const Array& x) {
    detail::check_input(spec, theta, x);
    const std::size_t m = x.rows();
    Array h = x;
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        const LayoutEntry& w = theta.layout.entries[2 * l];
        const LayoutEntry& b = theta.layout.entries[2 * l + 1];
        Array next({m, w.cols});
        ad::kernels::matmul(h.data.data(), theta.values.data() + w.offset, next.data.data(),
                            m, w.rows, w.cols, false);
        const double* bias = theta.values.data() + b.offset;
        const bool last = (l + 2 == spec.widths.size());
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w.cols; ++j) {
                double v = next(i, j) + bias[j];
                if (!last && v < 0.0) v *= spec.leaky_slope;
                next(i, j) = v;
            }
        h = std::move(next);
    }
    return h;
}

// Parameters entered on a tape as one leaf per layout entry, in layout order.
struct TapedParams {
    std::vector<ad::Var> vars;  // aligned with ParamLayout::entries
};

inline TapedParams make_leaves(ad::Tape& tape, const ParamVector& theta) {
    TapedParams tp;
    tp.vars.reserve(theta.layout.entries.size());
    for (const LayoutEntry& e : theta.layout.entries) {
        std::vector<double> chunk(theta.values.begin() + static_cast<std::ptrdiff_t>(e.offset),
                                  theta.values.begin() + static_cast<std::ptrdiff_t>(e.offset + e.length));
        if (e.kind == ParamKind::weight)
            tp.vars.push_back(tape.leaf(Array({e.rows, e.cols}, std::move(chunk))));
        else
            tp.vars.push_back(tape.leaf(Array({e.cols}, std::move(chunk))));
    }
    return tp;
}

// Gradients of the taped parameters gathered back into flat layout order.
inline std::vector<double> collect_grad(const ad::Tape& tape, const ParamLayout& layout,
                                        const TapedParams& tp) {
    std::vector<double> flat(layout.total, 0.0);
    for (std::size_t i = 0; i < layout.entries.size(); ++i) {
        const LayoutEntry& e = layout.entries[i];
        const Array& g = tape.grad(tp.vars[i]);
        std::copy(g.data.begin(), g.data.end(), flat.begin() + static_cast<std::ptrdiff_t>(e.offset));
    }
    return flat;
}

// Tape-path forward, differentiable w.r.t. parameters and input.
inline ad::Var forward(ad::Tape& tape, const MlpSpec& spec, const TapedParams& tp, ad::Var x) {
    ad::Var h = x;
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        h = tape.add_bias(tape.matmul(h, tp.vars[2 * l]), tp.vars[2 * l + 1]);
        if (l + 2 < spec.widths.size()) h = tape.leaky_relu(h, spec.leaky_slope);
    }
    return h;
}

// Generator evaluation: latent batch -> sample batch.
inline Array generate(const MlpSpec& spec_g, const ParamVector& theta_g, const Array& z) {
    return forward(spec_g, theta_g, z);
}

// Discriminator evaluation: sample batch -> rank-1 logits.
inline Array discriminate(const MlpSpec& spec_d, const ParamVector& theta_d, const Array& x) {
    if (spec_d.widths.back() != 1)
        throw DimensionError("discriminate: discriminator output width must be 1");
    Array logits = forward(spec_d, theta_d, x);
    return Array({logits.rows()}, std::move(logits.data));
}

struct LayerSlice {
    std::string layer;
    std::size_t begin = 0;
    std::size_t end = 0;  // half-open
};

// Index ranges of each layer's weights; bias ranges reported separately.
inline std::vector<LayerSlice> layer_slices(const ParamLayout& layout) {
    std::vector<LayerSlice> out;
    for (const LayoutEntry& e : layout.entries)
        if (e.kind == ParamKind::weight)
            out.push_back({e.layer, e.offset, e.offset + e.length});
    return out;
}

inline std::vector<LayerSlice> bias_slices(const ParamLayout& layout) {
    std::vector<LayerSlice> out;
    for (const LayoutEntry& e : layout.entries)
        if (e.kind == ParamKind::bias)
            out.push_back({e.layer, e.offset, e.offset + e.length});
    return out;
}

}  // namespace fewgan::model
