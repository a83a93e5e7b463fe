#pragma once

// Test-only reference implementation of the tiny-config forward pass,
// evaluated strictly by definition (quadruple-loop convolution, per-element
// normalization, windowed max). Independent of the production net's
// forward path; reads the same named tensors.

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "flowmotion/net.hpp"
#include "flowmotion/rng.hpp"

namespace refnet {

struct Grid {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;
    Grid(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, 0.0) {}
    double& at(int ch, int y, int x) { return v[(static_cast<size_t>(ch) * h + y) * w + x]; }
    double at(int ch, int y, int x) const { return v[(static_cast<size_t>(ch) * h + y) * w + x]; }
};

using TensorMap = std::map<std::string, const flowmotion::Tensor*>;

inline TensorMap tensor_map(flowmotion::Net& net) {
    TensorMap map;
    for (const flowmotion::ParamRef& p : net.params()) map[p.name] = p.value;
    for (const flowmotion::BufferRef& b : net.buffers()) map[b.name] = b.value;
    return map;
}

inline Grid conv_by_definition(const Grid& x, const flowmotion::Tensor& weight, int stride,
                               int pad) {
    const int out_ch = weight.shape[0];
    const int in_ch = weight.shape[1];
    const int k = weight.shape[2];
    const int ho = (x.h + 2 * pad - k) / stride + 1;
    const int wo = (x.w + 2 * pad - k) / stride + 1;
    Grid y(out_ch, ho, wo);
    for (int oc = 0; oc < out_ch; ++oc) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                double acc = 0.0;
                for (int ic = 0; ic < in_ch; ++ic) {
                    for (int dy = 0; dy < k; ++dy) {
                        for (int dx = 0; dx < k; ++dx) {
                            const int iy = oy * stride - pad + dy;
                            const int ix = ox * stride - pad + dx;
                            if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                            acc += weight.v[((static_cast<size_t>(oc) * in_ch + ic) * k + dy) * k +
                                            dx] *
                                   x.at(ic, iy, ix);
                        }
                    }
                }
                y.at(oc, oy, ox) = acc;
            }
        }
    }
    return y;
}

inline Grid bn_eval_by_definition(const Grid& x, const flowmotion::Tensor& gamma,
                                  const flowmotion::Tensor& beta, const flowmotion::Tensor& rm,
                                  const flowmotion::Tensor& rv) {
    Grid y(x.c, x.h, x.w);
    for (int c = 0; c < x.c; ++c) {
        for (int i = 0; i < x.h * x.w; ++i) {
            const double xv = x.v[static_cast<size_t>(c) * x.h * x.w + i];
            y.v[static_cast<size_t>(c) * x.h * x.w + i] =
                gamma.v[c] * (xv - rm.v[c]) / std::sqrt(rv.v[c] + 1e-5) + beta.v[c];
        }
    }
    return y;
}

inline Grid relu_by_definition(const Grid& x) {
    Grid y = x;
    for (double& v : y.v) v = std::max(0.0, v);
    return y;
}

inline Grid maxpool_by_definition(const Grid& x, int k, int stride, int pad) {
    const int ho = (x.h + 2 * pad - k) / stride + 1;
    const int wo = (x.w + 2 * pad - k) / stride + 1;
    Grid y(x.c, ho, wo);
    for (int c = 0; c < x.c; ++c) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                double best = -std::numeric_limits<double>::infinity();
                for (int dy = 0; dy < k; ++dy) {
                    for (int dx = 0; dx < k; ++dx) {
                        const int iy = oy * stride - pad + dy;
                        const int ix = ox * stride - pad + dx;
                        if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                        best = std::max(best, x.at(c, iy, ix));
                    }
                }
                y.at(c, oy, ox) = best;
            }
        }
    }
    return y;
}

// Full tiny-config forward in eval mode.
inline double forward_tiny(const TensorMap& t, const Grid& input) {
    Grid x = conv_by_definition(input, *t.at("stem.conv.weight"), 2, 3);
    x = bn_eval_by_definition(x, *t.at("stem.bn.gamma"), *t.at("stem.bn.beta"),
                              *t.at("stem.bn.running_mean"), *t.at("stem.bn.running_var"));
    x = relu_by_definition(x);
    x = maxpool_by_definition(x, 3, 2, 1);

    Grid branch = conv_by_definition(x, *t.at("block0.conv1.weight"), 1, 1);
    branch = bn_eval_by_definition(branch, *t.at("block0.bn1.gamma"), *t.at("block0.bn1.beta"),
                                   *t.at("block0.bn1.running_mean"),
                                   *t.at("block0.bn1.running_var"));
    branch = relu_by_definition(branch);
    branch = conv_by_definition(branch, *t.at("block0.conv2.weight"), 1, 1);
    branch = bn_eval_by_definition(branch, *t.at("block0.bn2.gamma"), *t.at("block0.bn2.beta"),
                                   *t.at("block0.bn2.running_mean"),
                                   *t.at("block0.bn2.running_var"));
    for (size_t i = 0; i < branch.v.size(); ++i) branch.v[i] += x.v[i];
    x = relu_by_definition(branch);

    const flowmotion::Tensor& fc_w = *t.at("fc.weight");
    const flowmotion::Tensor& fc_b = *t.at("fc.bias");
    double logit = fc_b.v[0];
    for (int c = 0; c < x.c; ++c) {
        double mean = 0.0;
        for (int i = 0; i < x.h * x.w; ++i) mean += x.v[static_cast<size_t>(c) * x.h * x.w + i];
        mean /= x.h * x.w;
        logit += fc_w.v[c] * mean;
    }
    return 1.0 / (1.0 + std::exp(-logit));
}

// Fills parameters and normalization buffers with seeded random values
// (positive running variances).
inline void randomize_net(flowmotion::Net& net, uint64_t seed) {
    flowmotion::Rng rng(seed);
    for (const flowmotion::ParamRef& p : net.params()) {
        for (double& v : p.value->v) v = rng.uniform(-0.5, 0.5);
    }
    for (const flowmotion::BufferRef& b : net.buffers()) {
        const bool is_var = b.name.find("running_var") != std::string::npos;
        for (double& v : b.value->v) {
            v = is_var ? rng.uniform(0.5, 2.0) : rng.uniform(-0.5, 0.5);
        }
    }
}

}  // namespace refnet
