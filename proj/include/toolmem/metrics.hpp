#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace toolmem {

// Score-regression metrics over paired (truth, prediction) samples.  Pearson is
// empty when either side has zero variance or fewer than two samples; report
// writers must print the undefined marker instead of a number.
double mean_absolute_error(const std::vector<double>& truth, const std::vector<double>& predicted);
double root_mean_squared_error(const std::vector<double>& truth,
                               const std::vector<double>& predicted);
std::optional<double> pearson_correlation(const std::vector<double>& truth,
                                          const std::vector<double>& predicted);

// One head-to-head comparison: ground-truth scores for tools A and B alongside
// the predicted scores for the same pair.
struct PairObservation {
    double truth_a = 0.0;
    double truth_b = 0.0;
    double predicted_a = 0.0;
    double predicted_b = 0.0;
};

struct SelectionMetrics {
    std::size_t total_pairs = 0;    // all observations, ties included
    std::size_t decisive_pairs = 0; // |D|: pairs whose true scores differ
    std::size_t true_less = 0;      // TP<
    std::size_t predicted_less = 0; // P<: predictions saying A < B within D
    std::size_t actual_less = 0;    // R< denominator: truths with A < B
    std::size_t true_greater = 0;   // TP>
    std::size_t predicted_greater = 0;
    std::size_t actual_greater = 0;
    double f1_less = 0.0;
    double f1_greater = 0.0;
    std::optional<double> accuracy; // empty when no decisive pairs exist
};

// Evaluates pairwise tool selection over the decisive subset D (ties in the
// ground truth are excluded from every count).  A predicted tie is counted as
// a wrong direction call on a decisive pair: it inflates neither P< nor P>.
SelectionMetrics selection_metrics(const std::vector<PairObservation>& pairs);

// Formats a metric for reports: fixed decimals, or the undefined marker "n/a"
// when the value is empty.
std::string format_metric(std::optional<double> value, int decimals = 4);
std::string format_metric(double value, int decimals = 4);

} // namespace toolmem
