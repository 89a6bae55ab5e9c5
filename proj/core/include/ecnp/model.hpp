#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ecnp/evidential.hpp"
#include "ecnp/nn.hpp"
#include "ecnp/tape.hpp"
#include "ecnp/tasks.hpp"

namespace ecnp {

enum class HeadKind { Gaussian, Evidential };

HeadKind head_from_name(const std::string& name);
std::string head_name(HeadKind head);

struct ModelConfig {
    int64_t x_dim = 1;
    int64_t y_dim = 1;
    int64_t repr_dim = 128;
    int64_t hidden_dim = 128;
    int64_t encoder_layers = 4;
    int64_t decoder_layers = 3;
    HeadKind head = HeadKind::Evidential;
    int64_t evid_head_hidden = 64;
    double clamp_ev = 20.0;    // upper bound on v and on the softplus part of alpha
    double beta_offset = 0.2;  // beta = softplus(raw) + beta_offset
    double sigma_floor = 0.01; // gaussian head: sigma = sigma_floor + softplus(raw)

    int64_t head_arity() const { return (head == HeadKind::Gaussian ? 2 : 4) * y_dim; }
    void check() const;
};

/// Encoder (x+y -> repr, relu between layers), decoder (repr+x -> repr),
/// and head (gaussian: one linear layer; evidential: two layers with a
/// hidden relu). No activation crosses a stage boundary.
struct ModelParams {
    ModelConfig config;
    MLP encoder;
    MLP decoder;
    MLP head;

    static ModelParams create(const ModelConfig& config, uint64_t seed);

    std::vector<Array*> all_params();
    std::vector<std::pair<std::string, Array*>> named_params();
    std::vector<std::pair<std::string, const Array*>> named_params() const;
};

/// Tape node ids of every parameter, staged once per forward/training step.
struct ModelNodes {
    MlpNodes encoder;
    MlpNodes decoder;
    MlpNodes head;
};

ModelNodes stage_model(const ModelParams& params, Tape& tape, bool trainable);

/// r = mean over context points of encoder([x || y]); shape [repr_dim].
/// Raises EmptyContext when the context set is empty.
Value encode_aggregate(const ModelNodes& nodes, Tape& tape, const Array& xc, const Array& yc);

/// Head outputs for each target input: decoder([r || x_t]) -> head MLP;
/// shape [n_target, head_arity].
Value decode_raw(const ModelNodes& nodes, Tape& tape, Value r, const Array& xt);

/// Differentiable evidential parameters, each [n_target, y_dim]:
/// gamma = raw0; v = min(softplus(raw1), clamp); alpha = 1 +
/// min(softplus(raw2), clamp); beta = softplus(raw3) + beta_offset.
struct NigNodes {
    Value gamma;
    Value v;
    Value alpha;
    Value beta;
};

NigNodes to_nig_nodes(Value raw, const ModelConfig& config);

/// Differentiable gaussian parameters, each [n_target, y_dim]:
/// mu = raw0; sigma = sigma_floor + softplus(raw1).
struct GaussianNodes {
    Value mu;
    Value sigma;
};

GaussianNodes to_gaussian_nodes(Value raw, const ModelConfig& config);

/// Materialized per-target predictive parameters (evaluation side).
struct Prediction {
    HeadKind head = HeadKind::Evidential;
    // Evidential fields ([n_target, y_dim]) when head == Evidential.
    Array gamma, v, alpha, beta;
    // Gaussian fields when head == Gaussian.
    Array mu, sigma;

    int64_t n_target() const;
    int64_t y_dim() const;
    NIGParams nig_at(int64_t t, int64_t channel) const;
    double mean_at(int64_t t, int64_t channel) const;
    /// Predictive standard deviation: sqrt(Var[Student-t]) = sqrt(AL + EP)
    /// for the evidential head, sigma for the gaussian head.
    double std_at(int64_t t, int64_t channel) const;
    double log_density_at(int64_t t, int64_t channel, double y) const;
};

/// Plain (non-training) forward pass: encode, decode, map through the head.
Prediction forward(const ModelParams& params, const Array& xc, const Array& yc, const Array& xt);
Prediction forward(const ModelParams& params, const Task& task);

}  // namespace ecnp
