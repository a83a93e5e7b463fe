#include "flowmotion/net.hpp"

#include <algorithm>
#include <cmath>

namespace flowmotion {

void NetConfig::validate() const {
    if (input_channels != 2) {
        throw ArgumentError("input_channels is fixed at 2 (flow u, v)");
    }
    if (output_dim != 1) {
        throw ArgumentError("output_dim is fixed at 1 (binary head)");
    }
    if (input_size < 4) {
        throw ArgumentError("input_size must be >= 4");
    }
    if (stem_channels < 1) {
        throw ArgumentError("stem_channels must be >= 1");
    }
    if (stage_widths.empty() || stage_widths.size() != blocks_per_stage.size()) {
        throw ArgumentError("stage_widths and blocks_per_stage must be same-length, non-empty");
    }
    for (size_t i = 0; i < stage_widths.size(); ++i) {
        if (stage_widths[i] < 1 || blocks_per_stage[i] < 1) {
            throw ArgumentError("stage widths and block counts must be >= 1");
        }
    }
}

namespace detail {

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {}
    virtual void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {}
    virtual void init(Rng& rng) {}
};

namespace {

void check_input(const Tensor& x) {
    if (x.shape.size() != 4) {
        throw ShapeError("expected a 4-D NCHW tensor, got " + x.shape_str());
    }
}

int conv_out_size(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

class Conv2d : public Layer {
public:
    Conv2d(int in_ch, int out_ch, int k, int stride, int pad)
        : in_ch_(in_ch), out_ch_(out_ch), k_(k), stride_(stride), pad_(pad),
          weight_({out_ch, in_ch, k, k}), grad_({out_ch, in_ch, k, k}) {}

    Tensor forward(const Tensor& x, bool train) override {
        check_input(x);
        if (x.shape[1] != in_ch_) {
            throw ShapeError("conv expects " + std::to_string(in_ch_) + " channels, got " +
                             std::to_string(x.shape[1]));
        }
        const int n = x.shape[0];
        const int h = x.shape[2];
        const int w = x.shape[3];
        const int ho = conv_out_size(h, k_, stride_, pad_);
        const int wo = conv_out_size(w, k_, stride_, pad_);
        if (ho <= 0 || wo <= 0) {
            throw ShapeError("conv input too small for kernel");
        }
        if (train) cached_input_ = x;

        Tensor y({n, out_ch_, ho, wo});
        const int kk = in_ch_ * k_ * k_;
        const int patches = ho * wo;
        std::vector<double> col(static_cast<size_t>(kk) * patches);

        for (int s = 0; s < n; ++s) {
            im2col(x, s, col.data(), ho, wo);
            // y[oc][p] = sum_k W[oc][k] * col[k][p]
            double* y_base = y.v.data() + static_cast<size_t>(s) * out_ch_ * patches;
            for (int oc = 0; oc < out_ch_; ++oc) {
                double* y_row = y_base + static_cast<size_t>(oc) * patches;
                const double* w_row = weight_.v.data() + static_cast<size_t>(oc) * kk;
                for (int t = 0; t < kk; ++t) {
                    const double wv = w_row[t];
                    if (wv == 0.0) continue;
                    const double* c_row = col.data() + static_cast<size_t>(t) * patches;
                    for (int p = 0; p < patches; ++p) {
                        y_row[p] += wv * c_row[p];
                    }
                }
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const Tensor& x = cached_input_;
        const int n = x.shape[0];
        const int h = x.shape[2];
        const int w = x.shape[3];
        const int ho = dy.shape[2];
        const int wo = dy.shape[3];
        const int kk = in_ch_ * k_ * k_;
        const int patches = ho * wo;

        Tensor dx(x.shape);
        std::vector<double> col(static_cast<size_t>(kk) * patches);
        std::vector<double> dcol(static_cast<size_t>(kk) * patches);

        for (int s = 0; s < n; ++s) {
            im2col(x, s, col.data(), ho, wo);
            const double* dy_base = dy.v.data() + static_cast<size_t>(s) * out_ch_ * patches;

            // dW[oc][t] += sum_p dy[oc][p] * col[t][p]
            for (int oc = 0; oc < out_ch_; ++oc) {
                const double* dy_row = dy_base + static_cast<size_t>(oc) * patches;
                double* g_row = grad_.v.data() + static_cast<size_t>(oc) * kk;
                for (int t = 0; t < kk; ++t) {
                    const double* c_row = col.data() + static_cast<size_t>(t) * patches;
                    double acc = 0.0;
                    for (int p = 0; p < patches; ++p) {
                        acc += dy_row[p] * c_row[p];
                    }
                    g_row[t] += acc;
                }
            }

            // dcol[t][p] = sum_oc W[oc][t] * dy[oc][p]
            std::fill(dcol.begin(), dcol.end(), 0.0);
            for (int oc = 0; oc < out_ch_; ++oc) {
                const double* dy_row = dy_base + static_cast<size_t>(oc) * patches;
                const double* w_row = weight_.v.data() + static_cast<size_t>(oc) * kk;
                for (int t = 0; t < kk; ++t) {
                    const double wv = w_row[t];
                    if (wv == 0.0) continue;
                    double* d_row = dcol.data() + static_cast<size_t>(t) * patches;
                    for (int p = 0; p < patches; ++p) {
                        d_row[p] += wv * dy_row[p];
                    }
                }
            }

            col2im_add(dcol.data(), dx, s, ho, wo, h, w);
        }
        return dx;
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override {
        out.push_back({prefix + ".weight", &weight_, &grad_});
    }

    void init(Rng& rng) override {
        const double bound = std::sqrt(6.0 / (in_ch_ * k_ * k_));
        for (double& w : weight_.v) {
            w = rng.uniform(-bound, bound);
        }
    }

private:
    void im2col(const Tensor& x, int sample, double* col, int ho, int wo) const {
        const int h = x.shape[2];
        const int w = x.shape[3];
        const int patches = ho * wo;
        const double* x_base = x.v.data() + static_cast<size_t>(sample) * in_ch_ * h * w;
        for (int c = 0; c < in_ch_; ++c) {
            const double* x_ch = x_base + static_cast<size_t>(c) * h * w;
            for (int di = 0; di < k_; ++di) {
                for (int dj = 0; dj < k_; ++dj) {
                    double* c_row = col + (static_cast<size_t>((c * k_ + di) * k_ + dj)) * patches;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * stride_ - pad_ + di;
                        double* dst = c_row + static_cast<size_t>(oy) * wo;
                        if (iy < 0 || iy >= h) {
                            std::fill(dst, dst + wo, 0.0);
                            continue;
                        }
                        const double* src = x_ch + static_cast<size_t>(iy) * w;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * stride_ - pad_ + dj;
                            dst[ox] = (ix < 0 || ix >= w) ? 0.0 : src[ix];
                        }
                    }
                }
            }
        }
    }

    void col2im_add(const double* dcol, Tensor& dx, int sample, int ho, int wo, int h, int w) const {
        const int patches = ho * wo;
        double* x_base = dx.v.data() + static_cast<size_t>(sample) * in_ch_ * h * w;
        for (int c = 0; c < in_ch_; ++c) {
            double* x_ch = x_base + static_cast<size_t>(c) * h * w;
            for (int di = 0; di < k_; ++di) {
                for (int dj = 0; dj < k_; ++dj) {
                    const double* c_row =
                        dcol + (static_cast<size_t>((c * k_ + di) * k_ + dj)) * patches;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * stride_ - pad_ + di;
                        if (iy < 0 || iy >= h) continue;
                        const double* src = c_row + static_cast<size_t>(oy) * wo;
                        double* dst = x_ch + static_cast<size_t>(iy) * w;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * stride_ - pad_ + dj;
                            if (ix >= 0 && ix < w) dst[ix] += src[ox];
                        }
                    }
                }
            }
        }
    }

    int in_ch_, out_ch_, k_, stride_, pad_;
    Tensor weight_;
    Tensor grad_;
    Tensor cached_input_;
};

class BatchNorm2d : public Layer {
public:
    explicit BatchNorm2d(int channels)
        : channels_(channels), gamma_({channels}), beta_({channels}), dgamma_({channels}),
          dbeta_({channels}), running_mean_({channels}), running_var_({channels}) {
        gamma_.fill(1.0);
        running_var_.fill(1.0);
    }

    Tensor forward(const Tensor& x, bool train) override {
        check_input(x);
        if (x.shape[1] != channels_) {
            throw ShapeError("batchnorm channel mismatch");
        }
        const int n = x.shape[0];
        const int hw = x.shape[2] * x.shape[3];
        const int64_t m = static_cast<int64_t>(n) * hw;

        Tensor y(x.shape);
        if (!train) {
            for (int c = 0; c < channels_; ++c) {
                const double scale = gamma_.v[c] / std::sqrt(running_var_.v[c] + kEps);
                const double shift = beta_.v[c] - running_mean_.v[c] * scale;
                for (int s = 0; s < n; ++s) {
                    const size_t base = (static_cast<size_t>(s) * channels_ + c) * hw;
                    for (int i = 0; i < hw; ++i) {
                        y.v[base + i] = x.v[base + i] * scale + shift;
                    }
                }
            }
            return y;
        }

        mean_.assign(channels_, 0.0);
        inv_std_.assign(channels_, 0.0);
        xhat_ = Tensor(x.shape);
        for (int c = 0; c < channels_; ++c) {
            double sum = 0.0;
            for (int s = 0; s < n; ++s) {
                const size_t base = (static_cast<size_t>(s) * channels_ + c) * hw;
                for (int i = 0; i < hw; ++i) sum += x.v[base + i];
            }
            const double mean = sum / static_cast<double>(m);
            double var_sum = 0.0;
            for (int s = 0; s < n; ++s) {
                const size_t base = (static_cast<size_t>(s) * channels_ + c) * hw;
                for (int i = 0; i < hw; ++i) {
                    const double d = x.v[base + i] - mean;
                    var_sum += d * d;
                }
            }
            const double var = var_sum / static_cast<double>(m);
            const double inv_std = 1.0 / std::sqrt(var + kEps);
            mean_[c] = mean;
            inv_std_[c] = inv_std;

            const double g = gamma_.v[c];
            const double b = beta_.v[c];
            for (int s = 0; s < n; ++s) {
                const size_t base = (static_cast<size_t>(s) * channels_ + c) * hw;
                for (int i = 0; i < hw; ++i) {
                    const double xh = (x.v[base + i] - mean) * inv_std;
                    xhat_.v[base + i] = xh;
                    y.v[base + i] = g * xh + b;
                }
            }

            const double unbiased = (m > 1) ? var * static_cast<double>(m) / static_cast<double>(m - 1)
                                            : var;
            running_mean_.v[c] = (1.0 - kMomentum) * running_mean_.v[c] + kMomentum * mean;
            running_var_.v[c] = (1.0 - kMomentum) * running_var_.v[c] + kMomentum * unbiased;
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const int n = dy.shape[0];
        const int hw = dy.shape[2] * dy.shape[3];
        const double m = static_cast<double>(static_cast<int64_t>(n) * hw);

        Tensor dx(dy.shape);
        for (int c = 0; c < channels_; ++c) {
            const double g = gamma_.v[c];
            const double inv_std = inv_std_[c];

            double sum_dy = 0.0;
            double sum_dy_xhat = 0.0;
            for (int s = 0; s < n; ++s) {
                const size_t base = (static_cast<size_t>(s) * channels_ + c) * hw;
                for (int i = 0; i < hw; ++i) {
                    sum_dy += dy.v[base + i];
                    sum_dy_xhat += dy.v[base + i] * xhat_.v[base + i];
                }
            }
            dgamma_.v[c] += sum_dy_xhat;
            dbeta_.v[c] += sum_dy;

            // dx = (gamma/std) * (dy - mean(dy) - xhat * mean(dy*xhat))
            const double k1 = sum_dy / m;
            const double k2 = sum_dy_xhat / m;
            const double scale = g * inv_std;
            for (int s = 0; s < n; ++s) {
                const size_t base = (static_cast<size_t>(s) * channels_ + c) * hw;
                for (int i = 0; i < hw; ++i) {
                    dx.v[base + i] = scale * (dy.v[base + i] - k1 - xhat_.v[base + i] * k2);
                }
            }
        }
        return dx;
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override {
        out.push_back({prefix + ".gamma", &gamma_, &dgamma_});
        out.push_back({prefix + ".beta", &beta_, &dbeta_});
    }

    void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) override {
        out.push_back({prefix + ".running_mean", &running_mean_});
        out.push_back({prefix + ".running_var", &running_var_});
    }

private:
    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.1;

    int channels_;
    Tensor gamma_, beta_, dgamma_, dbeta_;
    Tensor running_mean_, running_var_;
    std::vector<double> mean_, inv_std_;
    Tensor xhat_;
};

class Relu : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override {
        Tensor y(x.shape);
        for (size_t i = 0; i < x.v.size(); ++i) {
            y.v[i] = x.v[i] > 0.0 ? x.v[i] : 0.0;
        }
        if (train) cached_output_ = y;
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dx(dy.shape);
        for (size_t i = 0; i < dy.v.size(); ++i) {
            dx.v[i] = cached_output_.v[i] > 0.0 ? dy.v[i] : 0.0;
        }
        return dx;
    }

private:
    Tensor cached_output_;
};

class MaxPool2d : public Layer {
public:
    MaxPool2d(int k, int stride, int pad) : k_(k), stride_(stride), pad_(pad) {}

    Tensor forward(const Tensor& x, bool train) override {
        check_input(x);
        const int n = x.shape[0];
        const int c = x.shape[1];
        const int h = x.shape[2];
        const int w = x.shape[3];
        const int ho = conv_out_size(h, k_, stride_, pad_);
        const int wo = conv_out_size(w, k_, stride_, pad_);
        if (ho <= 0 || wo <= 0) {
            throw ShapeError("pool input too small for kernel");
        }

        Tensor y({n, c, ho, wo});
        if (train) {
            argmax_.assign(y.v.size(), 0);
            input_shape_ = x.shape;
        }
        size_t out_idx = 0;
        for (int s = 0; s < n; ++s) {
            for (int ch = 0; ch < c; ++ch) {
                const double* x_ch = x.v.data() + (static_cast<size_t>(s) * c + ch) * h * w;
                for (int oy = 0; oy < ho; ++oy) {
                    for (int ox = 0; ox < wo; ++ox, ++out_idx) {
                        double best = -std::numeric_limits<double>::infinity();
                        int64_t best_idx = -1;
                        for (int di = 0; di < k_; ++di) {
                            const int iy = oy * stride_ - pad_ + di;
                            if (iy < 0 || iy >= h) continue;
                            for (int dj = 0; dj < k_; ++dj) {
                                const int ix = ox * stride_ - pad_ + dj;
                                if (ix < 0 || ix >= w) continue;
                                const double value = x_ch[static_cast<size_t>(iy) * w + ix];
                                if (value > best) {
                                    best = value;
                                    best_idx = (static_cast<int64_t>(s) * c + ch) * h * w +
                                               static_cast<int64_t>(iy) * w + ix;
                                }
                            }
                        }
                        y.v[out_idx] = best;
                        if (train) argmax_[out_idx] = best_idx;
                    }
                }
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dx(input_shape_);
        for (size_t i = 0; i < dy.v.size(); ++i) {
            dx.v[static_cast<size_t>(argmax_[i])] += dy.v[i];
        }
        return dx;
    }

private:
    int k_, stride_, pad_;
    std::vector<int64_t> argmax_;
    std::vector<int> input_shape_;
};

// Basic residual block: conv-bn-relu-conv-bn plus (projected) skip, relu.
class ResidualBlock : public Layer {
public:
    ResidualBlock(int in_ch, int out_ch, int stride)
        : conv1_(in_ch, out_ch, 3, stride, 1), bn1_(out_ch), conv2_(out_ch, out_ch, 3, 1, 1),
          bn2_(out_ch) {
        if (stride != 1 || in_ch != out_ch) {
            proj_conv_ = std::make_unique<Conv2d>(in_ch, out_ch, 1, stride, 0);
            proj_bn_ = std::make_unique<BatchNorm2d>(out_ch);
        }
    }

    Tensor forward(const Tensor& x, bool train) override {
        Tensor out = bn1_.forward(conv1_.forward(x, train), train);
        out = relu1_.forward(out, train);
        out = bn2_.forward(conv2_.forward(out, train), train);

        Tensor skip = proj_conv_ ? proj_bn_->forward(proj_conv_->forward(x, train), train) : x;
        if (!out.same_shape(skip)) {
            throw ShapeError("residual branch/skip shape mismatch");
        }
        for (size_t i = 0; i < out.v.size(); ++i) {
            out.v[i] += skip.v[i];
        }
        return relu2_.forward(out, train);
    }

    Tensor backward(const Tensor& dy) override {
        Tensor d_sum = relu2_.backward(dy);
        Tensor dx = conv1_.backward(
            bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(d_sum)))));
        if (proj_conv_) {
            Tensor d_skip = proj_conv_->backward(proj_bn_->backward(d_sum));
            for (size_t i = 0; i < dx.v.size(); ++i) {
                dx.v[i] += d_skip.v[i];
            }
        } else {
            for (size_t i = 0; i < dx.v.size(); ++i) {
                dx.v[i] += d_sum.v[i];
            }
        }
        return dx;
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override {
        conv1_.collect_params(prefix + ".conv1", out);
        bn1_.collect_params(prefix + ".bn1", out);
        conv2_.collect_params(prefix + ".conv2", out);
        bn2_.collect_params(prefix + ".bn2", out);
        if (proj_conv_) {
            proj_conv_->collect_params(prefix + ".proj", out);
            proj_bn_->collect_params(prefix + ".proj_bn", out);
        }
    }

    void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) override {
        bn1_.collect_buffers(prefix + ".bn1", out);
        bn2_.collect_buffers(prefix + ".bn2", out);
        if (proj_bn_) {
            proj_bn_->collect_buffers(prefix + ".proj_bn", out);
        }
    }

    void init(Rng& rng) override {
        conv1_.init(rng);
        conv2_.init(rng);
        if (proj_conv_) proj_conv_->init(rng);
    }

private:
    Conv2d conv1_;
    BatchNorm2d bn1_;
    Relu relu1_;
    Conv2d conv2_;
    BatchNorm2d bn2_;
    Relu relu2_;
    std::unique_ptr<Conv2d> proj_conv_;
    std::unique_ptr<BatchNorm2d> proj_bn_;
};

class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override {
        check_input(x);
        const int n = x.shape[0];
        const int c = x.shape[1];
        const int hw = x.shape[2] * x.shape[3];
        if (train) input_shape_ = x.shape;
        Tensor y({n, c, 1, 1});
        for (int s = 0; s < n; ++s) {
            for (int ch = 0; ch < c; ++ch) {
                const double* base = x.v.data() + (static_cast<size_t>(s) * c + ch) * hw;
                double sum = 0.0;
                for (int i = 0; i < hw; ++i) sum += base[i];
                y.v[static_cast<size_t>(s) * c + ch] = sum / hw;
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dx(input_shape_);
        const int n = input_shape_[0];
        const int c = input_shape_[1];
        const int hw = input_shape_[2] * input_shape_[3];
        for (int s = 0; s < n; ++s) {
            for (int ch = 0; ch < c; ++ch) {
                const double g = dy.v[static_cast<size_t>(s) * c + ch] / hw;
                double* base = dx.v.data() + (static_cast<size_t>(s) * c + ch) * hw;
                for (int i = 0; i < hw; ++i) base[i] = g;
            }
        }
        return dx;
    }

private:
    std::vector<int> input_shape_;
};

// Final linear head over pooled features; kept zero-initialized so a fresh
// net predicts probability 0.5 everywhere.
class LinearHead : public Layer {
public:
    explicit LinearHead(int in_features)
        : in_(in_features), weight_({1, in_features}), bias_({1}), dweight_({1, in_features}),
          dbias_({1}) {}

    Tensor forward(const Tensor& x, bool train) override {
        const int n = x.shape[0];
        if (Tensor::numel_of(x.shape) != static_cast<int64_t>(n) * in_) {
            throw ShapeError("linear head expects " + std::to_string(in_) + " features");
        }
        if (train) cached_input_ = x;
        Tensor y({n});
        for (int s = 0; s < n; ++s) {
            double acc = bias_.v[0];
            const double* row = x.v.data() + static_cast<size_t>(s) * in_;
            for (int i = 0; i < in_; ++i) acc += weight_.v[i] * row[i];
            y.v[s] = acc;
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const int n = dy.shape[0];
        Tensor dx({n, in_, 1, 1});
        for (int s = 0; s < n; ++s) {
            const double g = dy.v[s];
            const double* row = cached_input_.v.data() + static_cast<size_t>(s) * in_;
            double* dx_row = dx.v.data() + static_cast<size_t>(s) * in_;
            dbias_.v[0] += g;
            for (int i = 0; i < in_; ++i) {
                dweight_.v[i] += g * row[i];
                dx_row[i] = g * weight_.v[i];
            }
        }
        return dx;
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override {
        out.push_back({prefix + ".weight", &weight_, &dweight_});
        out.push_back({prefix + ".bias", &bias_, &dbias_});
    }

private:
    int in_;
    Tensor weight_, bias_, dweight_, dbias_;
    Tensor cached_input_;
};

}  // namespace detail

Net::Net(const NetConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    using namespace detail;

    layers_.push_back(std::make_unique<Conv2d>(cfg.input_channels, cfg.stem_channels, 7, 2, 3));
    layers_.push_back(std::make_unique<BatchNorm2d>(cfg.stem_channels));
    layers_.push_back(std::make_unique<Relu>());
    layers_.push_back(std::make_unique<MaxPool2d>(3, 2, 1));

    int channels = cfg.stem_channels;
    for (size_t stage = 0; stage < cfg.stage_widths.size(); ++stage) {
        const int width = cfg.stage_widths[stage];
        for (int block = 0; block < cfg.blocks_per_stage[stage]; ++block) {
            const int stride = (stage > 0 && block == 0) ? 2 : 1;
            layers_.push_back(std::make_unique<ResidualBlock>(channels, width, stride));
            channels = width;
        }
    }
    layers_.push_back(std::make_unique<GlobalAvgPool>());
    layers_.push_back(std::make_unique<LinearHead>(channels));
}

Net::~Net() = default;
Net::Net(Net&&) noexcept = default;
Net& Net::operator=(Net&&) noexcept = default;

void Net::init_params(uint64_t seed) {
    Rng rng(seed);
    for (auto& layer : layers_) {
        layer->init(rng);
    }
}

Tensor Net::forward(const Tensor& batch, bool train) {
    if (batch.shape.size() != 4 || batch.shape[1] != cfg_.input_channels ||
        batch.shape[2] != cfg_.input_size || batch.shape[3] != cfg_.input_size) {
        throw ShapeError("expected input {N, " + std::to_string(cfg_.input_channels) + ", " +
                         std::to_string(cfg_.input_size) + ", " + std::to_string(cfg_.input_size) +
                         "}, got " + batch.shape_str());
    }
    Tensor x = batch;
    for (auto& layer : layers_) {
        x = layer->forward(x, train);
    }
    // Eval-mode forwards leave the layer caches (and this flag) untouched,
    // so inference stays free of writes to shared state.
    if (train) has_train_caches_ = true;

    Tensor probs(x.shape);
    for (size_t i = 0; i < x.v.size(); ++i) {
        // Clamp the logit so the probability stays strictly inside (0, 1)
        // in double precision.
        const double z = std::clamp(x.v[i], -36.0, 36.0);
        probs.v[i] = 1.0 / (1.0 + std::exp(-z));
    }
    return probs;
}

void Net::backward(const Tensor& dlogits) {
    if (!has_train_caches_) {
        throw Error("backward requires a preceding training-mode forward");
    }
    Tensor g = dlogits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = (*it)->backward(g);
    }
}

void Net::zero_grads() {
    for (ParamRef& p : params()) {
        p.grad->fill(0.0);
    }
}

std::vector<ParamRef> Net::params() {
    std::vector<ParamRef> out;
    const char* names[] = {"stem.conv", "stem.bn", "stem.relu", "stem.pool"};
    size_t i = 0;
    for (auto& layer : layers_) {
        std::string prefix;
        if (i < 4) {
            prefix = names[i];
        } else if (i + 2 < layers_.size()) {
            prefix = "block" + std::to_string(i - 4);
        } else if (i + 2 == layers_.size()) {
            prefix = "pool";
        } else {
            prefix = "fc";
        }
        layer->collect_params(prefix, out);
        ++i;
    }
    return out;
}

std::vector<BufferRef> Net::buffers() {
    std::vector<BufferRef> out;
    const char* names[] = {"stem.conv", "stem.bn", "stem.relu", "stem.pool"};
    size_t i = 0;
    for (auto& layer : layers_) {
        std::string prefix;
        if (i < 4) {
            prefix = names[i];
        } else if (i + 2 < layers_.size()) {
            prefix = "block" + std::to_string(i - 4);
        } else if (i + 2 == layers_.size()) {
            prefix = "pool";
        } else {
            prefix = "fc";
        }
        layer->collect_buffers(prefix, out);
        ++i;
    }
    return out;
}

double loss_bce(const Tensor& probs, const std::vector<double>& labels) {
    if (probs.v.size() != labels.size() || labels.empty()) {
        throw ArgumentError("loss requires matching non-empty probabilities and labels");
    }
    constexpr double kEps = 1e-7;
    double total = 0.0;
    for (size_t i = 0; i < labels.size(); ++i) {
        const double y = labels[i];
        if (y != 0.0 && y != 1.0) {
            throw ArgumentError("labels must be 0 or 1");
        }
        const double p = std::clamp(probs.v[i], kEps, 1.0 - kEps);
        total += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
    return total / static_cast<double>(labels.size());
}

Tensor bce_logit_grad(const Tensor& probs, const std::vector<double>& labels) {
    if (probs.v.size() != labels.size() || labels.empty()) {
        throw ArgumentError("gradient requires matching non-empty probabilities and labels");
    }
    Tensor g({static_cast<int>(labels.size())});
    const double n = static_cast<double>(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) {
        g.v[i] = (probs.v[i] - labels[i]) / n;
    }
    return g;
}

}  // namespace flowmotion
