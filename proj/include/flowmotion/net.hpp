#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flowmotion/rng.hpp"
#include "flowmotion/tensor.hpp"

namespace flowmotion {

// Residual binary classifier over 2-channel flow ROIs. The default shape
// mirrors an 18-layer residual network; the tiny test shape (1 stage,
// width 4, 8x8 input) keeps brute-force oracles tractable.
struct NetConfig {
    int input_channels = 2;
    int input_size = 224;
    int stem_channels = 64;
    std::vector<int> stage_widths = {64, 128, 256, 512};
    std::vector<int> blocks_per_stage = {2, 2, 2, 2};
    int output_dim = 1;

    static NetConfig tiny() {
        NetConfig cfg;
        cfg.input_size = 8;
        cfg.stem_channels = 4;
        cfg.stage_widths = {4};
        cfg.blocks_per_stage = {1};
        return cfg;
    }

    void validate() const;
};

// Named view of one learnable tensor and its gradient slot.
struct ParamRef {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
};

// Named view of one non-learnable state tensor (normalization statistics).
struct BufferRef {
    std::string name;
    Tensor* value = nullptr;
};

namespace detail {
class Layer;
}

class Net {
public:
    explicit Net(const NetConfig& cfg);
    ~Net();
    Net(Net&&) noexcept;
    Net& operator=(Net&&) noexcept;
    Net(const Net&) = delete;
    Net& operator=(const Net&) = delete;

    const NetConfig& config() const { return cfg_; }

    // Fan-in-scaled uniform init for convolutions, unit/zero affine for
    // normalization, zeros for the head (so a fresh net outputs exactly 0.5).
    void init_params(uint64_t seed);

    // Probabilities in (0, 1), one per batch row. Input is {N, C, S, S}.
    // train=true uses batch statistics, caches activations for backward,
    // and updates normalization running averages.
    Tensor forward(const Tensor& batch, bool train);

    // Accumulates parameter gradients from d(loss)/d(logit). Requires a
    // preceding forward(batch, true).
    void backward(const Tensor& dlogits);

    void zero_grads();

    std::vector<ParamRef> params();
    std::vector<BufferRef> buffers();

private:
    NetConfig cfg_;
    std::vector<std::unique_ptr<detail::Layer>> layers_;
    bool has_train_caches_ = false;
};

// Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
// labels hold 0 (Still) or 1 (Moving).
double loss_bce(const Tensor& probs, const std::vector<double>& labels);

// d(mean BCE o sigmoid)/d(logit) = (p - y) / N.
Tensor bce_logit_grad(const Tensor& probs, const std::vector<double>& labels);

}  // namespace flowmotion
