#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowmotion/labeling.hpp"

namespace flowmotion {

// Binary confusion counts with Moving as the positive class.
struct Confusion {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
    int64_t tn = 0;

    int64_t total() const { return tp + fp + fn + tn; }
};

Confusion confusion(const std::vector<MotionLabel>& preds, const std::vector<MotionLabel>& truths);

// All in percent. Undefined denominators throw UndefinedMetricError.
double precision_pct(const Confusion& c);
double recall_pct(const Confusion& c);
double f1_pct(const Confusion& c);

// Harmonic mean of precision/recall given directly in percent.
double f1_from_pr(double precision, double recall);

// JSON report with keys tp, fp, fn, tn, precision_pct, recall_pct, f1_pct.
std::string metrics_report_json(const Confusion& c);

}  // namespace flowmotion
