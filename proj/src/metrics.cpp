#include "flowmotion/metrics.hpp"

#include <nlohmann/json.hpp>

#include "flowmotion/errors.hpp"

namespace flowmotion {

Confusion confusion(const std::vector<MotionLabel>& preds, const std::vector<MotionLabel>& truths) {
    if (preds.empty() || preds.size() != truths.size()) {
        throw ArgumentError("confusion requires equal-length non-empty label vectors (got " +
                            std::to_string(preds.size()) + " and " + std::to_string(truths.size()) +
                            ")");
    }
    Confusion c;
    for (size_t i = 0; i < preds.size(); ++i) {
        const bool pred_moving = preds[i] == MotionLabel::Moving;
        const bool true_moving = truths[i] == MotionLabel::Moving;
        if (pred_moving && true_moving) ++c.tp;
        else if (pred_moving && !true_moving) ++c.fp;
        else if (!pred_moving && true_moving) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double precision_pct(const Confusion& c) {
    if (c.tp + c.fp == 0) {
        throw UndefinedMetricError("precision undefined: no positive predictions");
    }
    return 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall_pct(const Confusion& c) {
    if (c.tp + c.fn == 0) {
        throw UndefinedMetricError("recall undefined: no positive ground truth");
    }
    return 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double f1_pct(const Confusion& c) {
    return f1_from_pr(precision_pct(c), recall_pct(c));
}

double f1_from_pr(double precision, double recall) {
    if (precision < 0.0 || recall < 0.0) {
        throw ArgumentError("precision/recall must be non-negative");
    }
    if (precision + recall == 0.0) {
        throw UndefinedMetricError("f1 undefined: precision + recall is zero");
    }
    return 2.0 * precision * recall / (precision + recall);
}

std::string metrics_report_json(const Confusion& c) {
    nlohmann::ordered_json report;
    report["tp"] = c.tp;
    report["fp"] = c.fp;
    report["fn"] = c.fn;
    report["tn"] = c.tn;
    report["precision_pct"] = precision_pct(c);
    report["recall_pct"] = recall_pct(c);
    report["f1_pct"] = f1_pct(c);
    return report.dump(2) + "\n";
}

}  // namespace flowmotion
