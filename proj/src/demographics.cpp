#include "urban/demographics.hpp"

#include <cmath>
#include <stdexcept>

namespace urban {

Demographics normalize_demographics(const Eigen::MatrixXd& raw,
                                    std::vector<std::string> names) {
  const auto n = raw.rows();
  const auto d = raw.cols();
  if (n < 2) throw std::invalid_argument("normalize_demographics: need at least 2 rows");
  if (!raw.allFinite())
    throw std::invalid_argument("normalize_demographics: missing or non-finite values");
  if (names.empty()) {
    names.reserve(d);
    for (Eigen::Index j = 0; j < d; ++j) names.push_back("feature_" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(names.size()) != d)
    throw std::invalid_argument("normalize_demographics: name count mismatch");

  Demographics out;
  out.raw = raw;
  out.names = std::move(names);
  out.column_mean = raw.colwise().mean();
  out.column_sd = Eigen::VectorXd(d);
  out.features = Eigen::MatrixXd(n, d + 1);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt(
        (raw.col(j).array() - out.column_mean[j]).square().sum() / static_cast<double>(n));
    if (sd == 0.0)
      throw std::invalid_argument("normalize_demographics: zero variance in column '" +
                                  out.names[j] + "'");
    out.column_sd[j] = sd;
    out.features.col(j) = (raw.col(j).array() - out.column_mean[j]) / sd;
  }
  out.features.col(d).setOnes();
  return out;
}

}  // namespace urban
