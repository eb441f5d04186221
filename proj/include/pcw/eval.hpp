#pragma once

#include <string>
#include <vector>

namespace pcw::eval {

struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
};

struct RocCurve {
    std::vector<RocPoint> points;  // fpr ascending, starting at (inf, 0, 0)
    double auc = 0.0;
};

// Classify score >= threshold as positive, sweep the threshold through every
// distinct score (tied scores form one point), integrate by trapezoid. The
// resulting area equals the probability a positive outscores a negative, ties
// counting one half.
RocCurve roc(const std::vector<double>& scores, const std::vector<int>& labels);

// Step convention: the TPR of the last curve point whose FPR does not exceed
// the target.
double tpr_at_fpr(const RocCurve& curve, double fpr_target);

struct MethodResult {
    std::string name;
    RocCurve curve;
};

// "threshold,fpr,tpr" rows.
void write_roc_csv(const std::string& path, const RocCurve& curve);

// "method,auc,tpr_at_015" rows, one per method, in the given order.
void write_report_csv(const std::string& path, const std::vector<MethodResult>& results,
                      double fpr_target);

// Two panels: the full unit square and a zoom of the low-FPR corner
// ([0,0.35] both axes).
void write_roc_svg(const std::string& path, const std::vector<MethodResult>& results);

// Fixed-width text table of AUC and TPR@target per method.
std::string comparison_table(const std::vector<MethodResult>& results, double fpr_target);

}  // namespace pcw::eval
