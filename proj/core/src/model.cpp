#include "ecnp/model.hpp"

#include <cmath>

#include "ecnp/error.hpp"
#include "ecnp/special.hpp"

namespace ecnp {

HeadKind head_from_name(const std::string& name) {
    if (name == "cnp" || name == "gaussian") return HeadKind::Gaussian;
    if (name == "ecnp" || name == "evidential") return HeadKind::Evidential;
    raise(Error::Kind::TypeError, "unknown head '" + name + "' (want cnp or ecnp)");
}

std::string head_name(HeadKind head) {
    return head == HeadKind::Gaussian ? "cnp" : "ecnp";
}

void ModelConfig::check() const {
    if (x_dim < 1 || y_dim < 1 || repr_dim < 1 || hidden_dim < 1 || encoder_layers < 1 ||
        decoder_layers < 1 || evid_head_hidden < 1 || clamp_ev <= 0.0 || beta_offset <= 0.0 ||
        sigma_floor <= 0.0)
        raise(Error::Kind::InvalidParams, "model config fields must be positive");
}

ModelParams ModelParams::create(const ModelConfig& config, uint64_t seed) {
    config.check();
    ModelParams params;
    params.config = config;

    std::vector<int64_t> enc_dims{config.x_dim + config.y_dim};
    for (int64_t i = 1; i < config.encoder_layers; ++i) enc_dims.push_back(config.hidden_dim);
    enc_dims.push_back(config.repr_dim);
    params.encoder = make_mlp(enc_dims);

    std::vector<int64_t> dec_dims{config.repr_dim + config.x_dim};
    for (int64_t i = 1; i < config.decoder_layers; ++i) dec_dims.push_back(config.hidden_dim);
    dec_dims.push_back(config.repr_dim);
    params.decoder = make_mlp(dec_dims);

    if (config.head == HeadKind::Gaussian) {
        params.head = make_mlp({config.repr_dim, config.head_arity()});
    } else {
        params.head = make_mlp({config.repr_dim, config.evid_head_hidden, config.head_arity()});
    }

    CounterRng rng(seed, 0);
    init_mlp(params.encoder, rng);
    init_mlp(params.decoder, rng);
    init_mlp(params.head, rng);
    return params;
}

std::vector<Array*> ModelParams::all_params() {
    std::vector<Array*> out;
    for (MLP* mlp : {&encoder, &decoder, &head}) {
        for (Linear& layer : mlp->layers) {
            out.push_back(&layer.weight);
            out.push_back(&layer.bias);
        }
    }
    return out;
}

std::vector<std::pair<std::string, Array*>> ModelParams::named_params() {
    std::vector<std::pair<std::string, Array*>> out;
    const std::pair<std::string, MLP*> groups[] = {
        {"encoder", &encoder}, {"decoder", &decoder}, {"head", &head}};
    for (const auto& [name, mlp] : groups) {
        for (size_t i = 0; i < mlp->layers.size(); ++i) {
            out.emplace_back(name + "." + std::to_string(i) + ".weight", &mlp->layers[i].weight);
            out.emplace_back(name + "." + std::to_string(i) + ".bias", &mlp->layers[i].bias);
        }
    }
    return out;
}

std::vector<std::pair<std::string, const Array*>> ModelParams::named_params() const {
    std::vector<std::pair<std::string, const Array*>> out;
    for (const auto& [name, arr] : const_cast<ModelParams*>(this)->named_params())
        out.emplace_back(name, arr);
    return out;
}

ModelNodes stage_model(const ModelParams& params, Tape& tape, bool trainable) {
    return ModelNodes{stage_mlp(params.encoder, tape, trainable),
                      stage_mlp(params.decoder, tape, trainable),
                      stage_mlp(params.head, tape, trainable)};
}

Value encode_aggregate(const ModelNodes& nodes, Tape& tape, const Array& xc, const Array& yc) {
    if (xc.rank() != 2 || yc.rank() != 2 || xc.dim(0) != yc.dim(0))
        raise(Error::Kind::ShapeMismatch,
              "context arrays must be [n, x_dim] / [n, y_dim], got " + shape_str(xc.shape()) +
                  " and " + shape_str(yc.shape()));
    if (xc.dim(0) < 1) raise(Error::Kind::EmptyContext, "encode_aggregate: empty context set");
    Value xs{&tape, tape.constant(xc)};
    Value ys{&tape, tape.constant(yc)};
    Value embeddings = mlp_forward(nodes.encoder, tape, concat_last(xs, ys));
    return mean_axis(embeddings, 0);
}

Value decode_raw(const ModelNodes& nodes, Tape& tape, Value r, const Array& xt) {
    if (xt.rank() != 2)
        raise(Error::Kind::ShapeMismatch, "target inputs must be [n, x_dim], got " +
                                              shape_str(xt.shape()));
    Value tiled = repeat_rows(r, xt.dim(0));
    Value xs{&tape, tape.constant(xt)};
    Value decoded = mlp_forward(nodes.decoder, tape, concat_last(tiled, xs));
    return mlp_forward(nodes.head, tape, decoded);
}

NigNodes to_nig_nodes(Value raw, const ModelConfig& config) {
    const int64_t y = config.y_dim;
    NigNodes out;
    out.gamma = slice_last(raw, 0, y);
    out.v = clamp_max(softplus(slice_last(raw, y, y)), config.clamp_ev);
    out.alpha = clamp_max(softplus(slice_last(raw, 2 * y, y)), config.clamp_ev) + 1.0;
    out.beta = softplus(slice_last(raw, 3 * y, y)) + config.beta_offset;
    return out;
}

GaussianNodes to_gaussian_nodes(Value raw, const ModelConfig& config) {
    const int64_t y = config.y_dim;
    GaussianNodes out;
    out.mu = slice_last(raw, 0, y);
    out.sigma = softplus(slice_last(raw, y, y)) + config.sigma_floor;
    return out;
}

int64_t Prediction::n_target() const {
    return head == HeadKind::Gaussian ? mu.dim(0) : gamma.dim(0);
}

int64_t Prediction::y_dim() const {
    return head == HeadKind::Gaussian ? mu.dim(1) : gamma.dim(1);
}

NIGParams Prediction::nig_at(int64_t t, int64_t channel) const {
    if (head != HeadKind::Evidential)
        raise(Error::Kind::InvalidParams, "nig_at on a gaussian-head prediction");
    const int64_t i = t * gamma.dim(1) + channel;
    return NIGParams{gamma[i], v[i], alpha[i], beta[i]};
}

double Prediction::mean_at(int64_t t, int64_t channel) const {
    const int64_t i = t * y_dim() + channel;
    return head == HeadKind::Gaussian ? mu[i] : gamma[i];
}

double Prediction::std_at(int64_t t, int64_t channel) const {
    const int64_t i = t * y_dim() + channel;
    if (head == HeadKind::Gaussian) return sigma[i];
    return std::sqrt(student_t_variance(predictive(nig_at(t, channel))));
}

double Prediction::log_density_at(int64_t t, int64_t channel, double y) const {
    const int64_t i = t * y_dim() + channel;
    if (head == HeadKind::Gaussian) {
        const double z = (y - mu[i]) / sigma[i];
        return -0.5 * std::log(2.0 * M_PI * sigma[i] * sigma[i]) - 0.5 * z * z;
    }
    return student_t_log_density(predictive(nig_at(t, channel)), y);
}

Prediction forward(const ModelParams& params, const Array& xc, const Array& yc, const Array& xt) {
    Tape tape;
    const ModelNodes nodes = stage_model(params, tape, /*trainable=*/false);
    Value r = encode_aggregate(nodes, tape, xc, yc);
    Value raw = decode_raw(nodes, tape, r, xt);
    Prediction pred;
    pred.head = params.config.head;
    if (params.config.head == HeadKind::Gaussian) {
        GaussianNodes g = to_gaussian_nodes(raw, params.config);
        pred.mu = g.mu.array();
        pred.sigma = g.sigma.array();
    } else {
        NigNodes n = to_nig_nodes(raw, params.config);
        pred.gamma = n.gamma.array();
        pred.v = n.v.array();
        pred.alpha = n.alpha.array();
        pred.beta = n.beta.array();
    }
    return pred;
}

Prediction forward(const ModelParams& params, const Task& task) {
    return forward(params, task.xc, task.yc, task.xt);
}

}  // namespace ecnp
