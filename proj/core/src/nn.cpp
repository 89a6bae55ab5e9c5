#include "ecnp/nn.hpp"

#include <cmath>
#include <string>

#include "ecnp/error.hpp"

namespace ecnp {

MLP make_mlp(const std::vector<int64_t>& dims) {
    if (dims.size() < 2)
        raise(Error::Kind::InvalidParams, "make_mlp needs at least [in, out] dims");
    MLP mlp;
    mlp.layers.reserve(dims.size() - 1);
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        if (dims[i] <= 0 || dims[i + 1] <= 0)
            raise(Error::Kind::InvalidParams, "make_mlp dims must be positive");
        mlp.layers.push_back({Array::zeros({dims[i], dims[i + 1]}), Array::zeros({dims[i + 1]})});
    }
    return mlp;
}

void init_mlp(MLP& mlp, CounterRng& rng) {
    for (Linear& layer : mlp.layers) {
        const double bound = std::sqrt(1.0 / static_cast<double>(layer.weight.dim(0)));
        for (int64_t i = 0; i < layer.weight.size(); ++i)
            layer.weight[i] = rng.uniform(-bound, bound);
        layer.bias.fill(0.0);
    }
}

MlpNodes stage_mlp(const MLP& mlp, Tape& tape, bool trainable) {
    MlpNodes nodes;
    nodes.layers.reserve(mlp.layers.size());
    for (const Linear& layer : mlp.layers) {
        if (trainable) {
            nodes.layers.push_back({tape.leaf(layer.weight), tape.leaf(layer.bias)});
        } else {
            nodes.layers.push_back({tape.constant(layer.weight), tape.constant(layer.bias)});
        }
    }
    return nodes;
}

Value mlp_forward(const MlpNodes& nodes, Tape& tape, Value x) {
    for (size_t i = 0; i < nodes.layers.size(); ++i) {
        Value w{&tape, nodes.layers[i].weight};
        Value b{&tape, nodes.layers[i].bias};
        x = matmul(x, w) + b;
        if (i + 1 < nodes.layers.size()) x = relu(x);
    }
    return x;
}

void AdamState::reset(const std::vector<Array*>& params) {
    m.clear();
    v.clear();
    m.reserve(params.size());
    v.reserve(params.size());
    for (const Array* p : params) {
        m.push_back(Array::zeros(p->shape()));
        v.push_back(Array::zeros(p->shape()));
    }
    t = 0;
}

bool adam_step(const std::vector<Array*>& params, const std::vector<Array>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        raise(Error::Kind::ShapeMismatch, "adam_step: parameter/gradient/state counts differ");
    for (size_t i = 0; i < params.size(); ++i) {
        if (!shape_eq(params[i]->shape(), grads[i].shape()))
            raise(Error::Kind::ShapeMismatch,
                  "adam_step: gradient " + std::to_string(i) + " has shape " +
                      shape_str(grads[i].shape()) + ", parameter has " +
                      shape_str(params[i]->shape()));
        if (!grads[i].all_finite()) return false;
    }
    state.t += 1;
    const AdamConfig& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < params.size(); ++i) {
        Array& p = *params[i];
        const Array& g = grads[i];
        Array& m = state.m[i];
        Array& v = state.v[i];
        for (int64_t j = 0; j < p.size(); ++j) {
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
        }
    }
    return true;
}

void clip_by_global_norm(std::vector<Array>& grads, double max_norm) {
    double sq = 0.0;
    for (const Array& g : grads)
        for (int64_t j = 0; j < g.size(); ++j) sq += g[j] * g[j];
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm) || norm <= max_norm) return;
    const double scale = max_norm / norm;
    for (Array& g : grads)
        for (int64_t j = 0; j < g.size(); ++j) g[j] *= scale;
}

}  // namespace ecnp
