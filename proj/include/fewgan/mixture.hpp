#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "fewgan/array.hpp"
#include "fewgan/rng.hpp"

namespace fewgan::data {

// 2x2 symmetric matrices are stored row-major as {a, b, b, d}.
struct MixtureComponent {
    std::array<double, 2> center{0.0, 0.0};
    std::array<double, 4> cov{1.0, 0.0, 0.0, 1.0};
    double weight = 1.0;
};

struct GaussianMixtureSpec {
    std::vector<MixtureComponent> components;
};

inline bool is_spd(const std::array<double, 4>& c) {
    if (c[1] != c[2]) return false;
    const double det = c[0] * c[3] - c[1] * c[2];
    return c[0] > 0.0 && det > 0.0;
}

inline void validate(const GaussianMixtureSpec& spec) {
    if (spec.components.empty()) throw InputError("mixture: no components");
    double wsum = 0.0;
    for (const MixtureComponent& c : spec.components) {
        if (!is_spd(c.cov)) throw InputError("mixture: covariance not symmetric positive-definite");
        if (c.weight <= 0.0) throw InputError("mixture: nonpositive weight");
        wsum += c.weight;
    }
    if (std::fabs(wsum - 1.0) > 1e-9) throw InputError("mixture: weights must sum to 1");
}

// Equal-weight isotropic modes on a circle, component i at angle 2*pi*i/n.
inline GaussianMixtureSpec ring_spec(std::size_t n_modes, double radius, double sigma) {
    if (n_modes < 1) throw InputError("ring_spec: n_modes must be >= 1");
    if (radius < 0.0) throw InputError("ring_spec: radius must be >= 0");
    if (sigma <= 0.0) throw InputError("ring_spec: sigma must be > 0");
    GaussianMixtureSpec spec;
    const double two_pi = 6.283185307179586476925286766559;
    const double s2 = sigma * sigma;
    for (std::size_t i = 0; i < n_modes; ++i) {
        const double a = two_pi * static_cast<double>(i) / static_cast<double>(n_modes);
        MixtureComponent c;
        c.center = {radius * std::cos(a), radius * std::sin(a)};
        c.cov = {s2, 0.0, 0.0, s2};
        c.weight = 1.0 / static_cast<double>(n_modes);
        spec.components.push_back(c);
    }
    return spec;
}

// Source-to-target distortion: rotate/scale/translate centers, conjugate and
// scale covariances, optionally drop modes (weights renormalize).
struct TargetTransform {
    double rotation = 0.0;       // radians
    double scale = 1.0;          // uniform, > 0
    std::array<double, 2> translation{0.0, 0.0};
    std::vector<std::uint8_t> mode_mask;  // empty = keep all; else one flag per component
    double cov_multiplier = 1.0;
};

inline GaussianMixtureSpec apply_transform(const GaussianMixtureSpec& spec,
                                           const TargetTransform& t) {
    if (t.scale <= 0.0) throw InputError("apply_transform: scale must be > 0");
    if (!t.mode_mask.empty() && t.mode_mask.size() != spec.components.size())
        throw InputError("apply_transform: mask length does not match component count");
    const double cs = std::cos(t.rotation), sn = std::sin(t.rotation);
    GaussianMixtureSpec out;
    double wsum = 0.0;
    for (std::size_t i = 0; i < spec.components.size(); ++i) {
        if (!t.mode_mask.empty() && !t.mode_mask[i]) continue;
        MixtureComponent c = spec.components[i];
        const double x = c.center[0], y = c.center[1];
        c.center = {t.scale * (cs * x - sn * y) + t.translation[0],
                    t.scale * (sn * x + cs * y) + t.translation[1]};
        // R * C * R^T, then scale^2 and the covariance multiplier
        const double a = c.cov[0], b = c.cov[1], d = c.cov[3];
        const double ra = cs * (a * cs - b * sn) - sn * (b * cs - d * sn);
        const double rb = cs * (a * sn + b * cs) - sn * (b * sn + d * cs);
        const double rd = sn * (a * sn + b * cs) + cs * (b * sn + d * cs);
        const double f = t.cov_multiplier * t.scale * t.scale;
        c.cov = {f * ra, f * rb, f * rb, f * rd};
        out.components.push_back(c);
        wsum += c.weight;
    }
    if (out.components.empty()) throw InputError("apply_transform: mask selects no modes");
    for (MixtureComponent& c : out.components) c.weight /= wsum;
    return out;
}

inline std::array<double, 2> mixture_mean(const GaussianMixtureSpec& spec) {
    std::array<double, 2> mu{0.0, 0.0};
    for (const MixtureComponent& c : spec.components) {
        mu[0] += c.weight * c.center[0];
        mu[1] += c.weight * c.center[1];
    }
    return mu;
}

inline std::array<double, 4> mixture_cov(const GaussianMixtureSpec& spec) {
    const std::array<double, 2> mu = mixture_mean(spec);
    std::array<double, 4> m{0.0, 0.0, 0.0, 0.0};
    for (const MixtureComponent& c : spec.components) {
        m[0] += c.weight * (c.cov[0] + c.center[0] * c.center[0]);
        m[1] += c.weight * (c.cov[1] + c.center[0] * c.center[1]);
        m[3] += c.weight * (c.cov[3] + c.center[1] * c.center[1]);
    }
    m[0] -= mu[0] * mu[0];
    m[1] -= mu[0] * mu[1];
    m[2] = m[1];
    m[3] -= mu[1] * mu[1];
    return m;
}

// Lower Cholesky factor of a 2x2 SPD matrix.
inline std::array<double, 3> cholesky2(const std::array<double, 4>& c) {
    const double l11 = std::sqrt(c[0]);
    const double l21 = c[1] / l11;
    const double l22 = std::sqrt(c[3] - l21 * l21);
    return {l11, l21, l22};
}

// n draws from an existing stream; component by weight, then center plus
// Cholesky factor times a standard normal pair. Each draw consumes a fixed
// number of RNG values, so prefixes of a stream are stable.
inline Array draw_from(const GaussianMixtureSpec& spec, std::size_t n, Rng& rng,
                       std::vector<std::size_t>* ids = nullptr) {
    std::vector<std::array<double, 3>> chol;
    chol.reserve(spec.components.size());
    for (const MixtureComponent& c : spec.components) chol.push_back(cholesky2(c.cov));

    Array out({n, 2});
    if (ids) ids->assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        std::size_t k = 0;
        double acc = 0.0;
        for (; k + 1 < spec.components.size(); ++k) {
            acc += spec.components[k].weight;
            if (u < acc) break;
        }
        const double z0 = rng.normal();
        const double z1 = rng.normal();
        const MixtureComponent& c = spec.components[k];
        const std::array<double, 3>& L = chol[k];
        out(i, 0) = c.center[0] + L[0] * z0;
        out(i, 1) = c.center[1] + L[1] * z0 + L[2] * z1;
        if (ids) (*ids)[i] = k;
    }
    return out;
}

// i.i.d. draws, deterministic per seed. sample(spec, k, seed) is a prefix of
// sample(spec, n, seed) for k <= n.
inline Array sample_with_ids(const GaussianMixtureSpec& spec, std::size_t n,
                             std::uint64_t seed, std::vector<std::size_t>* ids) {
    if (n < 1) throw InputError("sample: n must be >= 1");
    validate(spec);
    Rng rng(mix_seed(seed));
    return draw_from(spec, n, rng, ids);
}

inline Array sample(const GaussianMixtureSpec& spec, std::size_t n, std::uint64_t seed) {
    return sample_with_ids(spec, n, seed, nullptr);
}

// The k target examples an adaptation run gets to see; fixed per (spec, seed).
struct FewShotSet {
    Array samples;  // k x 2
    std::uint64_t spec_fingerprint = 0;
    std::uint64_t seed = 0;
    std::size_t k = 0;
};

inline std::uint64_t fingerprint(const GaussianMixtureSpec& spec) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a over component doubles
    auto mixin = [&h](double v) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        for (int s = 0; s < 64; s += 8) {
            h ^= (bits >> s) & 0xffull;
            h *= 1099511628211ull;
        }
    };
    for (const MixtureComponent& c : spec.components) {
        mixin(c.center[0]);
        mixin(c.center[1]);
        for (double v : c.cov) mixin(v);
        mixin(c.weight);
    }
    return h;
}

inline FewShotSet draw_few_shot(const GaussianMixtureSpec& spec, std::size_t k,
                                std::uint64_t seed) {
    if (k < 1) throw InputError("draw_few_shot: k must be >= 1");
    return FewShotSet{sample(spec, k, seed), fingerprint(spec), seed, k};
}

}  // namespace fewgan::data
