#pragma once

#include "slidewin/matrix.hpp"

#include <span>
#include <vector>

namespace slidewin {

/// Total variation as the unnormalized L1 distance: sum_i |mu_i - nu_i|,
/// which lies in [0, 2] for probability vectors.
double tv_distance(std::span<const double> mu, std::span<const double> nu);

/// Exact Wasserstein-1 distance for a general ground metric, solved as a
/// transportation problem by successive shortest augmenting paths.
/// Mass shared by mu and nu stays in place, which is optimal whenever
/// `metric` satisfies the triangle inequality.
double transport_w1(std::span<const double> mu, std::span<const double> nu, const Matrix& metric);

/// Ground metric with structure detection. Discrete metrics give W1 = TV/2
/// and metrics realizable on a line give W1 = L1 distance between CDFs;
/// everything else goes through transport_w1.
class GroundMetric {
public:
    enum class Kind { Discrete, Line, General };

    explicit GroundMetric(Matrix metric);

    Kind kind() const noexcept { return kind_; }
    const Matrix& matrix() const noexcept { return metric_; }
    double diameter() const noexcept { return diameter_; }

    double w1(std::span<const double> mu, std::span<const double> nu) const;

private:
    Matrix metric_;
    Kind kind_ = Kind::General;
    double diameter_ = 0.0;
    std::vector<std::size_t> order_;     // points sorted by line coordinate
    std::vector<double> coordinate_;     // sorted line coordinates
};

/// W1 through structure detection (see GroundMetric).
double w1_distance(std::span<const double> mu, std::span<const double> nu, const Matrix& metric);

/// Dobrushin coefficient: min over row pairs of sum_j min(K[x][j], K[x'][j]).
/// Throws ModelError when a row is not stochastic (1e-9 tolerance).
double dobrushin(const Matrix& kernel);

/// Hilbert projective metric between nonnegative vectors. Entries below
/// 1e-14 count as outside the support; returns +infinity when the supports
/// differ and 0 when both vectors vanish. Throws ModelError on negative input.
double hilbert_metric(std::span<const double> mu, std::span<const double> nu);

struct MixingCoefficient {
    double epsilon = 0.0;
    std::vector<double> reference;  // optimizing lambda, sqrt(min_j * max_j) per column
};

/// Largest eps such that eps*lambda(j) <= K[x][j] <= lambda(j)/eps for all x, j
/// and some nonnegative lambda. Per column the constraint reads
/// eps^2 <= min_x K[x][j] / max_x K[x][j]; singletons are binding in a finite
/// space since every set inequality is a sum of singleton ones.
MixingCoefficient mixing_coefficient(const Matrix& kernel);

/// Row vector times kernel: (mu K)(j) = sum_i mu_i K[i][j].
std::vector<double> push_forward(std::span<const double> mu, const Matrix& kernel);

} // namespace slidewin
