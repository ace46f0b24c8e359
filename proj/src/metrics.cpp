#include "toolmem/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "toolmem/errors.hpp"

namespace toolmem {

namespace {

void require_paired(const std::vector<double>& truth, const std::vector<double>& predicted) {
    if (truth.size() != predicted.size()) {
        fail(ErrorKind::InvalidArgument, "truth and prediction vectors differ in length");
    }
    if (truth.empty()) fail(ErrorKind::InvalidArgument, "metric requires at least one sample");
}

} // namespace

double mean_absolute_error(const std::vector<double>& truth,
                           const std::vector<double>& predicted) {
    require_paired(truth, predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) sum += std::fabs(truth[i] - predicted[i]);
    return sum / static_cast<double>(truth.size());
}

double root_mean_squared_error(const std::vector<double>& truth,
                               const std::vector<double>& predicted) {
    require_paired(truth, predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        double d = truth[i] - predicted[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(truth.size()));
}

std::optional<double> pearson_correlation(const std::vector<double>& truth,
                                          const std::vector<double>& predicted) {
    require_paired(truth, predicted);
    std::size_t n = truth.size();
    if (n < 2) return std::nullopt;
    double mean_t = 0.0;
    double mean_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_t += truth[i];
        mean_p += predicted[i];
    }
    mean_t /= static_cast<double>(n);
    mean_p /= static_cast<double>(n);
    double cov = 0.0;
    double var_t = 0.0;
    double var_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dt = truth[i] - mean_t;
        double dp = predicted[i] - mean_p;
        cov += dt * dp;
        var_t += dt * dt;
        var_p += dp * dp;
    }
    if (var_t == 0.0 || var_p == 0.0) return std::nullopt;
    return cov / std::sqrt(var_t * var_p);
}

SelectionMetrics selection_metrics(const std::vector<PairObservation>& pairs) {
    SelectionMetrics m;
    m.total_pairs = pairs.size();
    for (const auto& pair : pairs) {
        if (pair.truth_a == pair.truth_b) continue; // ties are excluded from D
        ++m.decisive_pairs;
        bool truth_less = pair.truth_a < pair.truth_b;
        if (truth_less) {
            ++m.actual_less;
        } else {
            ++m.actual_greater;
        }
        if (pair.predicted_a < pair.predicted_b) {
            ++m.predicted_less;
            if (truth_less) ++m.true_less;
        } else if (pair.predicted_a > pair.predicted_b) {
            ++m.predicted_greater;
            if (!truth_less) ++m.true_greater;
        }
        // a predicted tie counts toward neither direction
    }
    auto f1 = [](std::size_t tp, std::size_t pred, std::size_t actual) {
        std::size_t denom = pred + actual;
        return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    };
    m.f1_less = f1(m.true_less, m.predicted_less, m.actual_less);
    m.f1_greater = f1(m.true_greater, m.predicted_greater, m.actual_greater);
    if (m.decisive_pairs > 0) {
        m.accuracy = static_cast<double>(m.true_less + m.true_greater) /
                     static_cast<double>(m.decisive_pairs);
    }
    return m;
}

std::string format_metric(std::optional<double> value, int decimals) {
    if (!value) return "n/a";
    return format_metric(*value, decimals);
}

std::string format_metric(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return std::string(buf);
}

} // namespace toolmem
