#pragma once

// Multi-annotator samples and the delimited-text annotation format.
//
// File layout:
//   kind=hard,classes=2,annotators=3
//   x,a_1,...,a_k                     (hard: one class index per annotator)
//   x,p_1_1,...,p_1_C,...,p_k_C       (soft: one simplex vector per annotator)
//
// Reals are written in shortest round-trip form, so read(write(t)) == t
// and write(read(file)) reproduces the file byte for byte.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace credal {

enum class LabelKind { hard, soft };
std::string to_string(LabelKind k);

struct HardLabel {
  int cls = 0;
  bool operator==(const HardLabel&) const = default;
};
struct SoftLabel {
  std::vector<double> probs;
  bool operator==(const SoftLabel&) const = default;
};
using Observation = std::variant<HardLabel, SoftLabel>;

struct AnnotatedSample {
  double x = 0.0;
  std::vector<Observation> observations;  // one per annotator, no gaps
  bool operator==(const AnnotatedSample&) const = default;
};

/// Column-oriented storage of n annotated samples.
class AnnotationTable {
 public:
  AnnotationTable(LabelKind kind, int classes, int annotators);

  /// Validates kinds, class indices, simplex rows and completeness.
  static AnnotationTable from_samples(std::span<const AnnotatedSample> samples, int classes);

  void add_hard(double x, std::span<const int> labels);
  /// `probs` is annotators x classes, row-major.
  void add_soft(double x, std::span<const double> probs);
  void reserve(std::size_t n);

  LabelKind kind() const { return kind_; }
  int classes() const { return classes_; }
  int annotators() const { return annotators_; }
  std::size_t size() const { return xs_.size(); }
  bool empty() const { return xs_.empty(); }

  double x(std::size_t i) const { return xs_[i]; }
  int hard(std::size_t i, int annotator) const {
    return hard_[i * static_cast<std::size_t>(annotators_) + static_cast<std::size_t>(annotator)];
  }
  std::span<const double> soft(std::size_t i, int annotator) const;

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<std::int32_t>& hard_labels() const { return hard_; }
  const std::vector<double>& soft_labels() const { return soft_; }

  AnnotatedSample sample(std::size_t i) const;
  std::vector<AnnotatedSample> samples() const;

  bool operator==(const AnnotationTable&) const = default;

 private:
  LabelKind kind_;
  int classes_;
  int annotators_;
  std::vector<double> xs_;
  std::vector<std::int32_t> hard_;
  std::vector<double> soft_;
};

void write_annotations(std::ostream& os, const AnnotationTable& table);
AnnotationTable read_annotations(std::istream& is);

void write_annotations_file(const std::string& path, const AnnotationTable& table);
AnnotationTable read_annotations_file(const std::string& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_real(double v);

}  // namespace credal
