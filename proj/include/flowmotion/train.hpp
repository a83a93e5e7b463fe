#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flowmotion/flow_field.hpp"
#include "flowmotion/labeling.hpp"
#include "flowmotion/net.hpp"

namespace flowmotion {

struct TrainConfig {
    int batch_size = 128;
    double learning_rate = 0.01;
    double weight_decay = 0.01;
    double momentum = 0.9;
    int step_size = 10;      // epochs between schedule decays
    double gamma = 0.5;      // decay factor
    int epochs = 30;
    uint64_t seed = 0;
    double flip_probability = 0.5;

    void validate() const;
};

// base_lr * gamma^floor(epoch / step_size)
double lr_at_epoch(const TrainConfig& cfg, int epoch);

// SGD with momentum; weight decay folded into the gradient (classic L2).
class SgdOptimizer {
public:
    SgdOptimizer(double momentum, double weight_decay)
        : momentum_(momentum), weight_decay_(weight_decay) {}

    // g' = grad + wd * param;  v = momentum * v + g';  param -= lr * v
    void step(const std::vector<ParamRef>& params, double lr);

    std::map<std::string, Tensor>& velocities() { return velocity_; }
    const std::map<std::string, Tensor>& velocities() const { return velocity_; }

private:
    double momentum_;
    double weight_decay_;
    std::map<std::string, Tensor> velocity_;
};

// One labeled ROI.
struct LabeledRoi {
    FlowField roi;
    MotionLabel label = MotionLabel::Still;
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    // NaN when the epoch's eval confusion leaves a metric undefined.
    double eval_precision = 0.0;
    double eval_recall = 0.0;
    double eval_f1 = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
};

// Copies an ROI into channel-planar {2, S, S} layout at batch row `row`.
void roi_into_batch(const FlowField& roi, Tensor& batch, int row);

// Deterministic full training loop: seeded init, per-epoch shuffle,
// horizontal-flip augmentation, SGD steps, per-epoch evaluation.
TrainResult train(Net& net, const std::vector<LabeledRoi>& train_samples,
                  const std::vector<LabeledRoi>& eval_samples, const TrainConfig& cfg,
                  SgdOptimizer* optimizer = nullptr);

struct Prediction {
    MotionLabel label = MotionLabel::Still;
    double probability = 0.0;
};

// Moving iff probability > threshold (strict).
Prediction predict(Net& net, const FlowField& roi, double threshold = 0.5);

std::vector<Prediction> predict_batch(Net& net, const std::vector<LabeledRoi>& samples,
                                      int batch_size, double threshold = 0.5);

std::string history_csv(const std::vector<EpochStats>& history);

}  // namespace flowmotion
