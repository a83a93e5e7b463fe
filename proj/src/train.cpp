#include "flowmotion/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "flowmotion/dataset.hpp"
#include "flowmotion/metrics.hpp"

namespace flowmotion {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ArgumentError("momentum must be in [0, 1)");
    if (!(gamma > 0.0) || gamma > 1.0) throw ArgumentError("gamma must be in (0, 1]");
    if (weight_decay < 0.0) throw ArgumentError("weight_decay must be non-negative");
    if (step_size < 1) throw ArgumentError("step_size must be >= 1");
    if (epochs < 0) throw ArgumentError("epochs must be non-negative");
    if (flip_probability < 0.0 || flip_probability > 1.0) {
        throw ArgumentError("flip_probability must be in [0, 1]");
    }
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
    if (epoch < 0) throw ArgumentError("epoch must be non-negative");
    const int decays = epoch / cfg.step_size;
    double lr = cfg.learning_rate;
    for (int i = 0; i < decays; ++i) lr *= cfg.gamma;
    return lr;
}

void SgdOptimizer::step(const std::vector<ParamRef>& params, double lr) {
    for (const ParamRef& p : params) {
        auto [it, inserted] = velocity_.try_emplace(p.name, Tensor(p.value->shape));
        Tensor& vel = it->second;
        if (!vel.same_shape(*p.value)) {
            throw ShapeError("velocity shape mismatch for " + p.name);
        }
        for (size_t i = 0; i < p.value->v.size(); ++i) {
            const double g = p.grad->v[i];
            if (!std::isfinite(g)) {
                throw NumericError("non-finite gradient in " + p.name + "; training aborted");
            }
            const double g_decayed = g + weight_decay_ * p.value->v[i];
            vel.v[i] = momentum_ * vel.v[i] + g_decayed;
            p.value->v[i] -= lr * vel.v[i];
        }
    }
}

void roi_into_batch(const FlowField& roi, Tensor& batch, int row) {
    const int s = batch.shape[2];
    if (roi.width != s || roi.height != s || batch.shape[3] != s) {
        throw ShapeError("roi size does not match batch tensor");
    }
    double* u_plane = batch.v.data() + static_cast<size_t>(row) * 2 * s * s;
    double* v_plane = u_plane + static_cast<size_t>(s) * s;
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            u_plane[static_cast<size_t>(y) * s + x] = roi.u(x, y);
            v_plane[static_cast<size_t>(y) * s + x] = roi.v(x, y);
        }
    }
}

namespace {

struct EvalMetrics {
    double precision = std::numeric_limits<double>::quiet_NaN();
    double recall = std::numeric_limits<double>::quiet_NaN();
    double f1 = std::numeric_limits<double>::quiet_NaN();
};

EvalMetrics evaluate(Net& net, const std::vector<LabeledRoi>& samples, int batch_size) {
    EvalMetrics out;
    if (samples.empty()) return out;

    std::vector<MotionLabel> preds;
    std::vector<MotionLabel> truths;
    preds.reserve(samples.size());
    truths.reserve(samples.size());
    for (const Prediction& p : predict_batch(net, samples, batch_size)) {
        preds.push_back(p.label);
    }
    for (const LabeledRoi& s : samples) {
        truths.push_back(s.label);
    }

    const Confusion c = confusion(preds, truths);
    try {
        out.precision = precision_pct(c);
    } catch (const UndefinedMetricError&) {}
    try {
        out.recall = recall_pct(c);
    } catch (const UndefinedMetricError&) {}
    if (std::isfinite(out.precision) && std::isfinite(out.recall) &&
        out.precision + out.recall > 0.0) {
        out.f1 = f1_from_pr(out.precision, out.recall);
    }
    return out;
}

}  // namespace

TrainResult train(Net& net, const std::vector<LabeledRoi>& train_samples,
                  const std::vector<LabeledRoi>& eval_samples, const TrainConfig& cfg,
                  SgdOptimizer* optimizer) {
    cfg.validate();
    if (train_samples.empty()) {
        throw ArgumentError("training set is empty");
    }
    const int s = net.config().input_size;
    for (const LabeledRoi& sample : train_samples) {
        if (sample.roi.width != s || sample.roi.height != s) {
            throw ShapeError("training roi size does not match net input size");
        }
    }

    net.init_params(cfg.seed);
    SgdOptimizer local_opt(cfg.momentum, cfg.weight_decay);
    SgdOptimizer& opt = optimizer ? *optimizer : local_opt;

    // Distinct stream from parameter init so data order and init draws
    // cannot alias.
    Rng data_rng(cfg.seed + 0x9e3779b97f4a7c15ULL);

    std::vector<size_t> order(train_samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    const std::vector<ParamRef> params = net.params();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        data_rng.shuffle(order);

        double loss_sum = 0.0;
        size_t seen = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const int n = static_cast<int>(std::min<size_t>(cfg.batch_size, order.size() - start));
            Tensor batch({n, 2, s, s});
            std::vector<double> labels(n);
            for (int row = 0; row < n; ++row) {
                const LabeledRoi& sample = train_samples[order[start + row]];
                const auto [roi, label] =
                    augment(sample.roi, sample.label, cfg.flip_probability, data_rng);
                roi_into_batch(roi, batch, row);
                labels[row] = label == MotionLabel::Moving ? 1.0 : 0.0;
            }

            net.zero_grads();
            const Tensor probs = net.forward(batch, true);
            const double loss = loss_bce(probs, labels);
            if (!std::isfinite(loss)) {
                throw NumericError("training loss diverged at epoch " + std::to_string(epoch));
            }
            loss_sum += loss * n;
            seen += n;

            net.backward(bce_logit_grad(probs, labels));
            opt.step(params, lr);
        }

        const EvalMetrics m = evaluate(net, eval_samples, cfg.batch_size);
        result.history.push_back(
            {epoch, lr, loss_sum / static_cast<double>(seen), m.precision, m.recall, m.f1});
    }
    return result;
}

Prediction predict(Net& net, const FlowField& roi, double threshold) {
    const int s = net.config().input_size;
    if (roi.width != s || roi.height != s) {
        throw ShapeError("roi size does not match net input size");
    }
    Tensor batch({1, 2, s, s});
    roi_into_batch(roi, batch, 0);
    const Tensor probs = net.forward(batch, false);
    const double p = probs.v[0];
    return {p > threshold ? MotionLabel::Moving : MotionLabel::Still, p};
}

std::vector<Prediction> predict_batch(Net& net, const std::vector<LabeledRoi>& samples,
                                      int batch_size, double threshold) {
    if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
    std::vector<Prediction> out;
    out.reserve(samples.size());
    const int s = net.config().input_size;
    for (size_t start = 0; start < samples.size(); start += batch_size) {
        const int n = static_cast<int>(std::min<size_t>(batch_size, samples.size() - start));
        Tensor batch({n, 2, s, s});
        for (int row = 0; row < n; ++row) {
            roi_into_batch(samples[start + row].roi, batch, row);
        }
        const Tensor probs = net.forward(batch, false);
        for (int row = 0; row < n; ++row) {
            const double p = probs.v[row];
            out.push_back({p > threshold ? MotionLabel::Moving : MotionLabel::Still, p});
        }
    }
    return out;
}

std::string history_csv(const std::vector<EpochStats>& history) {
    std::string out = "epoch,lr,train_loss,eval_precision,eval_recall,eval_f1\n";
    char line[256];
    for (const EpochStats& e : history) {
        std::snprintf(line, sizeof(line), "%d,%.12g,%.12g,%.12g,%.12g,%.12g\n", e.epoch, e.lr,
                      e.train_loss, e.eval_precision, e.eval_recall, e.eval_f1);
        out += line;
    }
    return out;
}

}  // namespace flowmotion
