#pragma once

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "hsicnn/error.hpp"

namespace hsicnn {

// Rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : c_(classes), counts_(classes * classes, 0) {
    if (classes == 0) throw Error(ErrorKind::input, "confusion matrix needs at least one class");
  }

  static ConfusionMatrix from_counts(std::size_t classes, std::vector<std::uint64_t> counts) {
    if (counts.size() != classes * classes) {
      throw Error(ErrorKind::input, "expected " + std::to_string(classes * classes) + " counts");
    }
    ConfusionMatrix cm(classes);
    cm.counts_ = std::move(counts);
    return cm;
  }

  std::size_t classes() const noexcept { return c_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_.at(truth * c_ + pred); }
  std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts_.at(truth * c_ + pred); }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  void add(int truth, int pred) {
    if (truth < 0 || pred < 0 || static_cast<std::size_t>(truth) >= c_ ||
        static_cast<std::size_t>(pred) >= c_) {
      throw Error(ErrorKind::input, "class id pair (" + std::to_string(truth) + ", " +
                                        std::to_string(pred) + ") outside [0, " +
                                        std::to_string(c_) + ")");
    }
    ++counts_[static_cast<std::size_t>(truth) * c_ + static_cast<std::size_t>(pred)];
  }

  void merge(const ConfusionMatrix& other) {
    if (other.c_ != c_) throw Error(ErrorKind::input, "class count mismatch in merge");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto v : counts_) t += v;
    return t;
  }
  std::uint64_t trace() const {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < c_; ++i) t += at(i, i);
    return t;
  }
  std::uint64_t row_sum(std::size_t k) const {
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < c_; ++j) s += at(k, j);
    return s;
  }
  std::uint64_t col_sum(std::size_t k) const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < c_; ++i) s += at(i, k);
    return s;
  }

 private:
  std::size_t c_;
  std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix accumulate(const std::vector<int>& truth, const std::vector<int>& pred,
                                  std::size_t classes) {
  if (truth.size() != pred.size()) {
    throw Error(ErrorKind::input, "truth has " + std::to_string(truth.size()) +
                                      " entries, predictions " + std::to_string(pred.size()));
  }
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], pred[i]);
  return cm;
}

inline void require_nonempty(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorKind::empty_matrix, "confusion matrix is empty");
}

inline double overall_accuracy(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  return static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
}

struct AverageAccuracy {
  double value = 0.0;
  std::size_t empty_rows = 0;  // classes absent from the truth, left out of the mean
};

inline AverageAccuracy average_accuracy_detail(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  AverageAccuracy out;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    const auto row = cm.row_sum(k);
    if (row == 0) {
      ++out.empty_rows;
      continue;
    }
    sum += static_cast<double>(cm.at(k, k)) / static_cast<double>(row);
    ++used;
  }
  out.value = sum / static_cast<double>(used);
  return out;
}

inline double average_accuracy(const ConfusionMatrix& cm) { return average_accuracy_detail(cm).value; }

// Cohen's kappa, (p_o - p_e) / (1 - p_e), evaluated as the integer ratio
// (N*trace - S) / (N^2 - S) with S = sum_k row_k * col_k so that only the
// final division rounds. When chance agreement is 1 (all mass in one cell)
// kappa is 1 if observed agreement is also 1, otherwise 0.
inline double kappa(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  using wide = __int128;
  const wide total = cm.total();
  wide chance = 0;
  for (std::size_t k = 0; k < cm.classes(); ++k)
    chance += static_cast<wide>(cm.row_sum(k)) * static_cast<wide>(cm.col_sum(k));
  const wide num = total * static_cast<wide>(cm.trace()) - chance;
  const wide den = total * total - chance;
  if (den == 0) return cm.trace() == cm.total() ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // class never predicted
  bool recall_undefined = false;     // class absent from truth
};

struct PrfReport {
  std::vector<ClassScores> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

inline PrfReport per_class_prf(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  PrfReport out;
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    ClassScores s;
    const double tp = static_cast<double>(cm.at(k, k));
    const auto col = cm.col_sum(k);
    const auto row = cm.row_sum(k);
    if (col == 0) s.precision_undefined = true;
    else s.precision = tp / static_cast<double>(col);
    if (row == 0) s.recall_undefined = true;
    else s.recall = tp / static_cast<double>(row);
    if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    out.macro_precision += s.precision;
    out.macro_recall += s.recall;
    out.macro_f1 += s.f1;
    out.per_class.push_back(s);
  }
  const double c = static_cast<double>(cm.classes());
  out.macro_precision /= c;
  out.macro_recall /= c;
  out.macro_f1 /= c;
  return out;
}

// Machine-readable report: key:value lines at full precision, then the
// confusion matrix as comma-separated rows. Classes are numbered from 1.
inline std::string format_report(const ConfusionMatrix& cm, const std::string& preamble = {}) {
  std::ostringstream os;
  os << preamble;
  os << "# confusion matrix: rows = truth, cols = prediction\n";
  os << std::setprecision(17);
  os << "oa:" << overall_accuracy(cm) << '\n';
  os << "aa:" << average_accuracy(cm) << '\n';
  os << "kappa:" << kappa(cm) << '\n';
  const auto prf = per_class_prf(cm);
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    const auto& s = prf.per_class[k];
    os << "class_" << k + 1 << "_precision:" << s.precision << '\n';
    os << "class_" << k + 1 << "_recall:" << s.recall << '\n';
    os << "class_" << k + 1 << "_f1:" << s.f1 << '\n';
  }
  os << "macro_precision:" << prf.macro_precision << '\n';
  os << "macro_recall:" << prf.macro_recall << '\n';
  os << "macro_f1:" << prf.macro_f1 << '\n';
  os << "confusion:\n";
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    for (std::size_t j = 0; j < cm.classes(); ++j) os << (j ? "," : "") << cm.at(i, j);
    os << '\n';
  }
  return os.str();
}

}  // namespace hsicnn
