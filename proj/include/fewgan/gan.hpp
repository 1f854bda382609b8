#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fewgan/adam.hpp"
#include "fewgan/digest.hpp"
#include "fewgan/ewc.hpp"
#include "fewgan/mixture.hpp"
#include "fewgan/mlp.hpp"

namespace fewgan::gan {

enum class LossVariant { minimax, non_saturating };

inline const char* to_string(LossVariant v) {
    return v == LossVariant::minimax ? "minimax" : "non_saturating";
}

struct TrainConfig {
    model::MlpSpec spec_g{{4, 64, 64, 2}, 0.2};
    model::MlpSpec spec_d{{2, 64, 64, 1}, 0.2};
    std::size_t iterations = 20000;
    std::size_t batch_size = 128;
    double lr_g = 2e-4;
    double lr_d = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
    LossVariant loss = LossVariant::non_saturating;
    std::size_t checkpoint_interval = 1000;
    std::size_t d_steps_per_g = 1;

    std::size_t latent_dim() const { return spec_g.widths.front(); }

    std::string canonical_string() const {
        std::ostringstream os;
        os << "g=";
        for (std::size_t w : spec_g.widths) os << w << ",";
        os << ";d=";
        for (std::size_t w : spec_d.widths) os << w << ",";
        os << ";slope=" << spec_g.leaky_slope << ";it=" << iterations << ";bs=" << batch_size
           << ";lrg=" << lr_g << ";lrd=" << lr_d << ";b1=" << adam_beta1 << ";b2=" << adam_beta2
           << ";eps=" << adam_eps << ";seed=" << seed << ";loss=" << to_string(loss)
           << ";dsteps=" << d_steps_per_g;
        return os.str();
    }

    std::uint64_t digest() const { return fnv1a64(canonical_string()); }
};

inline void validate(const TrainConfig& cfg) {
    model::validate(cfg.spec_g);
    model::validate(cfg.spec_d);
    if (cfg.spec_g.widths.back() != cfg.spec_d.widths.front())
        throw InputError("TrainConfig: generator output width must match discriminator input");
    if (cfg.spec_d.widths.back() != 1)
        throw InputError("TrainConfig: discriminator output width must be 1");
    if (cfg.iterations < 1) throw InputError("TrainConfig: iterations must be >= 1");
    if (cfg.batch_size < 1) throw InputError("TrainConfig: batch size must be >= 1");
    // lr == 0 is allowed (freeze diagnostics); negative is not
    if (cfg.lr_g < 0.0 || cfg.lr_d < 0.0) throw InputError("TrainConfig: negative learning rate");
    if (cfg.d_steps_per_g < 1) throw InputError("TrainConfig: d_steps_per_g must be >= 1");
}

// Trained generator/discriminator pair plus provenance.
struct Checkpoint {
    model::MlpSpec spec_g, spec_d;
    model::ParamVector theta_g, theta_d;
    std::uint64_t config_digest = 0;
    std::uint64_t seed = 0;
    std::uint64_t iteration = 0;
};

// -------- losses --------

// bce(D(real), 1) + bce(D(fake), 0)
inline ad::Var d_loss_node(ad::Tape& tape, const model::MlpSpec& spec_d,
                           const model::TapedParams& d_params, ad::Var real, ad::Var fake) {
    const Array& rv = tape.value(real);
    const Array& fv = tape.value(fake);
    if (rv.numel() == 0 || fv.numel() == 0) throw InputError("d_loss: empty batch");
    if (rv.cols() != fv.cols()) throw DimensionError("d_loss: real/fake widths differ");
    ad::Var lr = model::forward(tape, spec_d, d_params, real);
    ad::Var lf = model::forward(tape, spec_d, d_params, fake);
    ad::Var a = tape.bce_with_logits(lr, Array::full({rv.rows()}, 1.0));
    ad::Var b = tape.bce_with_logits(lf, Array::full({fv.rows()}, 0.0));
    return tape.add(a, b);
}

inline double d_loss(const model::MlpSpec& spec_d, const model::ParamVector& theta_d,
                     const Array& real, const Array& fake) {
    ad::Tape tape;
    model::TapedParams dp = model::make_leaves(tape, theta_d);
    return scalar_value(tape.value(d_loss_node(tape, spec_d, dp, tape.leaf(real), tape.leaf(fake))));
}

// non_saturating: bce(D(G(z)), 1);  minimax: -bce(D(G(z)), 0)
inline ad::Var g_loss_node(ad::Tape& tape, const model::MlpSpec& spec_g,
                           const model::TapedParams& g_params, const model::MlpSpec& spec_d,
                           const model::TapedParams& d_params, ad::Var z, LossVariant variant) {
    ad::Var fake = model::forward(tape, spec_g, g_params, z);
    ad::Var logits = model::forward(tape, spec_d, d_params, fake);
    const std::size_t n = tape.value(z).rows();
    if (variant == LossVariant::non_saturating)
        return tape.bce_with_logits(logits, Array::full({n}, 1.0));
    return tape.scale(tape.bce_with_logits(logits, Array::full({n}, 0.0)), -1.0);
}

inline double g_loss(const model::MlpSpec& spec_g, const model::ParamVector& theta_g,
                     const model::MlpSpec& spec_d, const model::ParamVector& theta_d,
                     const Array& z, LossVariant variant) {
    ad::Tape tape;
    model::TapedParams gp = model::make_leaves(tape, theta_g);
    model::TapedParams dp = model::make_leaves(tape, theta_d);
    return scalar_value(
        tape.value(g_loss_node(tape, spec_g, gp, spec_d, dp, tape.leaf(z), variant)));
}

// -------- training --------

// Quadratic anchor applied during a run. lambda == 0 adds nothing to the loss
// graph, so the unregularized fine-tuning path is literally the same code.
struct EwcTerm {
    double lambda = 0.0;
    model::ParamVector anchor_g;
    std::vector<double> fisher_g;
    std::optional<model::ParamVector> anchor_d;
    std::vector<double> fisher_d;
};

struct StepStats {
    double d_loss = 0.0;
    double g_loss = 0.0;
    double ewc_penalty = 0.0;  // unweighted penalty at the pre-update parameters
    double g_total = 0.0;      // the scalar actually optimized for G
};

class Trainer {
public:
    explicit Trainer(const TrainConfig& cfg)
        : cfg_(cfg),
          theta_g_(model::init_params(cfg.spec_g, derive_seed(cfg.seed, 3))),
          theta_d_(model::init_params(cfg.spec_d, derive_seed(cfg.seed, 4))),
          opt_g_(theta_g_.values.size()),
          opt_d_(theta_d_.values.size()),
          latent_rng_(derive_seed(cfg.seed, 2)),
          data_rng_(derive_seed(cfg.seed, 1)) {
        validate(cfg);
    }

    Trainer(const TrainConfig& cfg, const Checkpoint& resume)
        : cfg_(cfg),
          theta_g_(resume.theta_g),
          theta_d_(resume.theta_d),
          opt_g_(resume.theta_g.values.size()),
          opt_d_(resume.theta_d.values.size()),
          latent_rng_(derive_seed(cfg.seed, 2)),
          data_rng_(derive_seed(cfg.seed, 1)),
          iteration_(resume.iteration) {
        validate(cfg);
        if (resume.spec_g != cfg.spec_g || resume.spec_d != cfg.spec_d)
            throw ContractError("Trainer: checkpoint specs do not match config");
    }

    void set_ewc(EwcTerm term) {
        if (term.anchor_g.layout != theta_g_.layout)
            throw ContractError("Trainer: EWC anchor layout mismatch");
        if (term.fisher_g.size() != theta_g_.values.size())
            throw ContractError("Trainer: EWC fisher length mismatch");
        if (term.anchor_d && (term.anchor_d->layout != theta_d_.layout ||
                              term.fisher_d.size() != theta_d_.values.size()))
            throw ContractError("Trainer: discriminator EWC term mismatch");
        ewc_ = std::move(term);
    }

    // One discriminator update (d_steps_per_g times) followed by one
    // generator update with fresh latents. Fake batches match the real
    // batch size.
    StepStats step(const Array& real) {
        if (real.numel() == 0) throw InputError("train step: empty real batch");
        StepStats stats;
        const std::size_t n = real.rows();
        const AdamConfig ad_d{cfg_.lr_d, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps};
        const AdamConfig ad_g{cfg_.lr_g, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps};

        for (std::size_t s = 0; s < cfg_.d_steps_per_g; ++s) {
            Array z = draw_latent(n);
            Array fake = model::generate(cfg_.spec_g, theta_g_, z);
            ad::Tape tape;
            model::TapedParams dp = model::make_leaves(tape, theta_d_);
            ad::Var loss =
                d_loss_node(tape, cfg_.spec_d, dp, tape.leaf(real), tape.leaf(std::move(fake)));
            stats.d_loss = scalar_value(tape.value(loss));
            check_loss_finite(stats.d_loss, "d_loss");
            if (ewc_ && ewc_->anchor_d && ewc_->lambda != 0.0) {
                ad::Var pen = adapt::ewc_penalty_node(tape, dp, *ewc_->anchor_d, ewc_->fisher_d);
                loss = tape.add(loss, tape.scale(pen, ewc_->lambda));
            }
            tape.backward(loss);
            opt_d_.step(theta_d_.values, model::collect_grad(tape, theta_d_.layout, dp), ad_d);
        }

        {
            Array z = draw_latent(n);
            ad::Tape tape;
            model::TapedParams gp = model::make_leaves(tape, theta_g_);
            model::TapedParams dp = model::make_leaves(tape, theta_d_);
            ad::Var adv =
                g_loss_node(tape, cfg_.spec_g, gp, cfg_.spec_d, dp, tape.leaf(std::move(z)), cfg_.loss);
            stats.g_loss = scalar_value(tape.value(adv));
            check_loss_finite(stats.g_loss, "g_loss");
            ad::Var total = adv;
            if (ewc_) {
                if (ewc_->lambda != 0.0) {
                    ad::Var pen = adapt::ewc_penalty_node(tape, gp, ewc_->anchor_g, ewc_->fisher_g);
                    stats.ewc_penalty = scalar_value(tape.value(pen));
                    total = tape.add(adv, tape.scale(pen, ewc_->lambda));
                } else {
                    stats.ewc_penalty =
                        adapt::ewc_penalty_raw(theta_g_, ewc_->anchor_g, ewc_->fisher_g);
                }
            }
            stats.g_total = scalar_value(tape.value(total));
            tape.backward(total);
            opt_g_.step(theta_g_.values, model::collect_grad(tape, theta_g_.layout, gp), ad_g);
        }

        ++iteration_;
        return stats;
    }

    const model::ParamVector& theta_g() const { return theta_g_; }
    const model::ParamVector& theta_d() const { return theta_d_; }
    std::uint64_t iteration() const { return iteration_; }
    Rng& data_rng() { return data_rng_; }
    const TrainConfig& config() const { return cfg_; }
    double ewc_lambda() const { return ewc_ ? ewc_->lambda : 0.0; }

    Checkpoint checkpoint() const {
        return Checkpoint{cfg_.spec_g, cfg_.spec_d,    theta_g_, theta_d_,
                          cfg_.digest(), cfg_.seed, iteration_};
    }

private:
    Array draw_latent(std::size_t n) {
        Array z({n, cfg_.latent_dim()});
        for (double& v : z.data) v = latent_rng_.normal();
        return z;
    }

    void check_loss_finite(double v, const char* which) const {
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "training diverged: " << which << " = " << v << " at iteration " << iteration_
               << " (seed " << cfg_.seed << ")";
            throw DivergenceError(os.str());
        }
    }

    TrainConfig cfg_;
    model::ParamVector theta_g_, theta_d_;
    AdamState opt_g_, opt_d_;
    Rng latent_rng_;
    Rng data_rng_;
    std::uint64_t iteration_ = 0;
    std::optional<EwcTerm> ewc_;
};

inline Array next_real_batch(const data::GaussianMixtureSpec& spec, std::size_t n, Rng& rng) {
    return data::draw_from(spec, n, rng);
}

// Per-interval training log record.
struct TrainLogRow {
    std::uint64_t iteration = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
};

using IntervalCallback =
    std::function<void(std::uint64_t iteration, const StepStats&, const Trainer&)>;

// Source-domain pretraining on abundant mixture data. Deterministic per
// (config, spec): reruns produce bitwise-identical parameters.
inline Checkpoint pretrain(const TrainConfig& cfg, const data::GaussianMixtureSpec& spec,
                           std::vector<TrainLogRow>* log = nullptr,
                           const IntervalCallback& on_interval = nullptr) {
    validate(cfg);
    data::validate(spec);
    Trainer trainer(cfg);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        Array real = next_real_batch(spec, cfg.batch_size, trainer.data_rng());
        StepStats stats = trainer.step(real);
        if ((it + 1) % cfg.checkpoint_interval == 0 || it + 1 == cfg.iterations) {
            if (log) log->push_back({trainer.iteration(), stats.d_loss, stats.g_loss});
            if (on_interval) on_interval(trainer.iteration(), stats, trainer);
        }
    }
    return trainer.checkpoint();
}

// Continue a run from a checkpoint for extra_iterations more steps.
// extra_iterations == 0 returns the checkpoint parameters unchanged.
inline Checkpoint continue_training(const TrainConfig& cfg, const Checkpoint& from,
                                    const data::GaussianMixtureSpec& spec,
                                    std::size_t extra_iterations,
                                    std::vector<TrainLogRow>* log = nullptr) {
    validate(cfg);
    Trainer trainer(cfg, from);
    for (std::size_t it = 0; it < extra_iterations; ++it) {
        Array real = next_real_batch(spec, cfg.batch_size, trainer.data_rng());
        StepStats stats = trainer.step(real);
        if (log && ((it + 1) % cfg.checkpoint_interval == 0 || it + 1 == extra_iterations))
            log->push_back({trainer.iteration(), stats.d_loss, stats.g_loss});
    }
    return trainer.checkpoint();
}

}  // namespace fewgan::gan
