#include "credal/annotations.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace credal {
namespace {

constexpr double kSoftTol = 1e-9;

void check_soft_row(std::span<const double> row) {
  double sum = 0.0;
  for (double v : row) {
    if (!std::isfinite(v) || v < -kSoftTol) throw std::invalid_argument("soft label has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSoftTol) throw std::invalid_argument("soft label is not on the simplex");
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view s, std::size_t line_no) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw std::invalid_argument("annotation file line " + std::to_string(line_no) +
                                ": cannot parse '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::string to_string(LabelKind k) { return k == LabelKind::hard ? "hard" : "soft"; }

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_real failed");
  return std::string(buf, ptr);
}

AnnotationTable::AnnotationTable(LabelKind kind, int classes, int annotators)
    : kind_(kind), classes_(classes), annotators_(annotators) {
  if (classes < 2) throw std::invalid_argument("annotation table needs at least 2 classes");
  if (annotators < 1) throw std::invalid_argument("annotation table needs at least 1 annotator");
}

void AnnotationTable::reserve(std::size_t n) {
  xs_.reserve(n);
  if (kind_ == LabelKind::hard)
    hard_.reserve(n * static_cast<std::size_t>(annotators_));
  else
    soft_.reserve(n * static_cast<std::size_t>(annotators_ * classes_));
}

void AnnotationTable::add_hard(double x, std::span<const int> labels) {
  if (kind_ != LabelKind::hard) throw std::invalid_argument("hard labels added to a soft table");
  if (static_cast<int>(labels.size()) != annotators_)
    throw std::invalid_argument("missing annotations: every annotator must label every sample");
  for (int c : labels)
    if (c < 0 || c >= classes_) throw std::invalid_argument("hard label outside [0, classes)");
  xs_.push_back(x);
  hard_.insert(hard_.end(), labels.begin(), labels.end());
}

void AnnotationTable::add_soft(double x, std::span<const double> probs) {
  if (kind_ != LabelKind::soft) throw std::invalid_argument("soft labels added to a hard table");
  if (probs.size() != static_cast<std::size_t>(annotators_ * classes_))
    throw std::invalid_argument("missing annotations: every annotator must label every sample");
  for (int k = 0; k < annotators_; ++k)
    check_soft_row(probs.subspan(static_cast<std::size_t>(k * classes_), static_cast<std::size_t>(classes_)));
  xs_.push_back(x);
  soft_.insert(soft_.end(), probs.begin(), probs.end());
}

std::span<const double> AnnotationTable::soft(std::size_t i, int annotator) const {
  const std::size_t stride = static_cast<std::size_t>(annotators_ * classes_);
  return std::span<const double>(soft_).subspan(i * stride + static_cast<std::size_t>(annotator * classes_),
                                                static_cast<std::size_t>(classes_));
}

AnnotationTable AnnotationTable::from_samples(std::span<const AnnotatedSample> samples, int classes) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  const auto& first = samples.front();
  if (first.observations.empty()) throw std::invalid_argument("sample without observations");
  const bool hard = std::holds_alternative<HardLabel>(first.observations.front());
  const int k = static_cast<int>(first.observations.size());
  AnnotationTable t(hard ? LabelKind::hard : LabelKind::soft, classes, k);
  t.reserve(samples.size());
  std::vector<int> labels(static_cast<std::size_t>(k));
  std::vector<double> probs;
  for (const auto& s : samples) {
    if (static_cast<int>(s.observations.size()) != k)
      throw std::invalid_argument("missing annotations: annotator count differs between samples");
    if (hard) {
      for (int a = 0; a < k; ++a) {
        const auto* h = std::get_if<HardLabel>(&s.observations[static_cast<std::size_t>(a)]);
        if (!h) throw std::invalid_argument("mixed hard and soft observations");
        labels[static_cast<std::size_t>(a)] = h->cls;
      }
      t.add_hard(s.x, labels);
    } else {
      probs.clear();
      for (const auto& o : s.observations) {
        const auto* p = std::get_if<SoftLabel>(&o);
        if (!p) throw std::invalid_argument("mixed hard and soft observations");
        if (static_cast<int>(p->probs.size()) != classes)
          throw std::invalid_argument("soft label has the wrong class count");
        probs.insert(probs.end(), p->probs.begin(), p->probs.end());
      }
      t.add_soft(s.x, probs);
    }
  }
  return t;
}

AnnotatedSample AnnotationTable::sample(std::size_t i) const {
  AnnotatedSample s;
  s.x = xs_.at(i);
  s.observations.reserve(static_cast<std::size_t>(annotators_));
  for (int a = 0; a < annotators_; ++a) {
    if (kind_ == LabelKind::hard) {
      s.observations.emplace_back(HardLabel{hard(i, a)});
    } else {
      const auto row = soft(i, a);
      s.observations.emplace_back(SoftLabel{{row.begin(), row.end()}});
    }
  }
  return s;
}

std::vector<AnnotatedSample> AnnotationTable::samples() const {
  std::vector<AnnotatedSample> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(sample(i));
  return out;
}

void write_annotations(std::ostream& os, const AnnotationTable& t) {
  os << "kind=" << to_string(t.kind()) << ",classes=" << t.classes() << ",annotators=" << t.annotators()
     << '\n';
  std::string line;
  for (std::size_t i = 0; i < t.size(); ++i) {
    line = format_real(t.x(i));
    for (int a = 0; a < t.annotators(); ++a) {
      if (t.kind() == LabelKind::hard) {
        line += ',';
        line += std::to_string(t.hard(i, a));
      } else {
        for (double p : t.soft(i, a)) {
          line += ',';
          line += format_real(p);
        }
      }
    }
    line += '\n';
    os << line;
  }
}

AnnotationTable read_annotations(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("annotation file is empty");
  LabelKind kind = LabelKind::hard;
  int classes = -1, annotators = -1;
  bool have_kind = false;
  for (auto field : split(line, ',')) {
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("malformed annotation header");
    const auto key = field.substr(0, eq);
    const auto val = field.substr(eq + 1);
    if (key == "kind") {
      if (val == "hard") kind = LabelKind::hard;
      else if (val == "soft") kind = LabelKind::soft;
      else throw std::invalid_argument("annotation header: kind must be hard or soft");
      have_kind = true;
    } else if (key == "classes") {
      classes = parse_number<int>(val, 1);
    } else if (key == "annotators") {
      annotators = parse_number<int>(val, 1);
    } else {
      throw std::invalid_argument("annotation header: unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_kind || classes < 0 || annotators < 0)
    throw std::invalid_argument("annotation header must declare kind, classes and annotators");

  AnnotationTable t(kind, classes, annotators);
  const std::size_t width = 1 + static_cast<std::size_t>(kind == LabelKind::hard ? annotators : annotators * classes);
  std::vector<int> labels(static_cast<std::size_t>(annotators));
  std::vector<double> probs(static_cast<std::size_t>(annotators * classes));
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != width)
      throw std::invalid_argument("annotation file line " + std::to_string(line_no) +
                                  ": expected " + std::to_string(width) + " fields (missing annotations are not imputed)");
    const double x = parse_number<double>(fields[0], line_no);
    if (kind == LabelKind::hard) {
      for (std::size_t a = 0; a < labels.size(); ++a) labels[a] = parse_number<int>(fields[a + 1], line_no);
      t.add_hard(x, labels);
    } else {
      for (std::size_t c = 0; c < probs.size(); ++c) probs[c] = parse_number<double>(fields[c + 1], line_no);
      t.add_soft(x, probs);
    }
  }
  return t;
}

void write_annotations_file(const std::string& path, const AnnotationTable& table) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_annotations(os, table);
}

AnnotationTable read_annotations_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_annotations(is);
}

}  // namespace credal
